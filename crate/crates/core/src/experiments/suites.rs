//! The individual suites: default configurations, trial bodies and
//! aggregation into fitted constants and pass/fail checks.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;

use crate::body::{wilson_interval, RandomQuotientBody};
use crate::constructions::{
    find_l1_subspace, find_l2_subspace, l1_iso_constant, reverify, L1Config, L2Config, WitnessRecord,
};
use crate::error::{Error, Result};
use crate::experiments::{
    fit_constant, run_trials, shared_seed, values, Check, FitModel, Outcome, SuiteConfig, SuiteId,
    Thresholds, TrialRecord, Values,
};
use crate::linalg::{singular_values, Matrix};
use crate::sampler::{gaussian_matrix, haar_subspace, standard_normal, SeedSpec};
use crate::snumbers::{hs_of_normalized, suggest_mn_witness, GelfandEstimator};

/// Largest tolerated deviation when a witness is recomputed from its body.
const REVERIFY_TOL: f64 = 1e-9;

fn grid(points: &[&[u64]]) -> Vec<Vec<u64>> {
    points.iter().map(|p| p.to_vec()).collect()
}

fn map<const K: usize>(pairs: [(&str, f64); K]) -> BTreeMap<String, f64> {
    values(pairs)
}

pub(crate) fn default_config(suite: SuiteId, master_seed: u64, th: &Thresholds) -> SuiteConfig {
    let cal = |k: &str| th.values.get(k).copied().unwrap_or(f64::NAN);
    let (trials, size_grid, thresholds, params) = match suite {
        SuiteId::LemmaA => (
            100,
            grid(&[&[10], &[20], &[40], &[80], &[100]]),
            map([("mean_tol", 0.002), ("decay_factor", 3.0)]),
            map([("batch", 1000.0), ("small_ball_t", 0.5)]),
        ),
        SuiteId::LemmaB => (
            200,
            grid(&[&[25, 50], &[50, 100], &[100, 200]]),
            map([("sv_low", 0.25), ("sv_high", 2.0)]),
            BTreeMap::new(),
        ),
        SuiteId::CorC => {
            let mut g = Vec::new();
            for k in [16u64, 25, 36] {
                let kf = k as f64;
                g.push(vec![k, 2 * k]);
                g.push(vec![k, (kf * 2f64.exp()).round() as u64]);
                g.push(vec![k, (kf * 4f64.exp()).round() as u64]);
            }
            (50, g, map([("stability", 2.0)]), map([("restarts", 64.0)]))
        }
        SuiteId::LemmaD => (
            20,
            grid(&[&[3, 48], &[4, 64], &[5, 80]]),
            map([("stability", 2.0), ("example_constant", 3.0), ("example_rate", 0.95)]),
            map([("samples", 100_000.0)]),
        ),
        SuiteId::Fact31 => (
            10,
            grid(&[&[16, 256]]),
            map([("mean_width_constant", 2.0)]),
            map([("mean_width_samples", 10_000.0), ("section_samples", 300.0)]),
        ),
        SuiteId::Thm22 => (
            40,
            grid(&[&[8, 16], &[16, 32], &[32, 64]]),
            map([("growth", 2.0)]),
            map([("restarts", 64.0), ("grid_points", 201.0)]),
        ),
        SuiteId::Thm32 => (
            40,
            grid(&[&[8, 64], &[16, 256]]),
            map([("stability", 2.0), ("floor", 0.25)]),
            map([("restarts", 64.0), ("grid_points", 201.0)]),
        ),
        SuiteId::Prop41 => (
            50,
            grid(&[&[36, 1296]]),
            map([
                ("success_rate", 0.9),
                ("l1_iso", cal("l1_iso")),
                ("l1_compl", cal("l1_compl")),
                ("pair_ratio", 2.0),
                ("pair_rate", 0.8),
            ]),
            map([("c_cal", cal("l1_c_cal"))]),
        ),
        SuiteId::Prop42 => (
            50,
            grid(&[&[9, 81], &[16, 256]]),
            map([
                ("success_rate", 0.9),
                ("l2_distortion", cal("l2_distortion")),
                ("l2_compl", cal("l2_compl")),
                ("l2_proj_radius", cal("l2_proj_radius")),
            ]),
            map([("c_cal", cal("l2_c_cal")), ("relaxed_n", 16.0)]),
        ),
        SuiteId::HsBound => (50, grid(&[&[8, 64], &[16, 128]]), BTreeMap::new(), BTreeMap::new()),
    };
    SuiteConfig {
        suite_id: suite,
        trials,
        master_seed,
        size_grid,
        thresholds,
        params,
    }
}

pub(crate) fn run(c: &SuiteConfig) -> Result<Outcome> {
    match c.suite_id {
        SuiteId::LemmaA => lemma_a(c),
        SuiteId::LemmaB => lemma_b(c),
        SuiteId::CorC => cor_c(c),
        SuiteId::LemmaD => lemma_d(c),
        SuiteId::Fact31 => fact31(c),
        SuiteId::Thm22 => thm22(c),
        SuiteId::Thm32 => thm32(c),
        SuiteId::Prop41 => prop41(c),
        SuiteId::Prop42 => prop42(c),
        SuiteId::HsBound => hs_bound(c),
    }
}

fn dims<const K: usize>(point: &[u64]) -> Result<[usize; K]> {
    if point.len() != K {
        return Err(Error::usage(format!(
            "grid point {point:?} should have {K} entries"
        )));
    }
    let mut out = [0usize; K];
    for (o, &p) in out.iter_mut().zip(point) {
        *o = p as usize;
    }
    Ok(out)
}

/// Values of `key` over the successful trials at grid point `g`.
fn column(trials: &[TrialRecord], g: usize, key: &str) -> Vec<f64> {
    trials
        .iter()
        .filter(|t| t.grid_index == g && t.error.is_none())
        .filter_map(|t| t.values.get(key).copied())
        .collect()
}

fn sum(v: &[f64]) -> f64 {
    v.iter().sum()
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        sum(v) / v.len() as f64
    }
}

/// Wilson 95% interval for `hits` successes out of `total`.
fn insert_ci(agg: &mut Values, key: &str, hits: f64, total: f64) {
    let (lo, hi) = wilson_interval(hits.round() as u64, total.round() as u64, 1.959963984540054);
    agg.insert(format!("{key}_ci_low"), lo);
    agg.insert(format!("{key}_ci_high"), hi);
}

/// `max / min` of a set of positive constants (infinite if any is not positive).
fn spread(v: &[f64]) -> f64 {
    let lo = min(v);
    if !(lo > 0.0) {
        return f64::INFINITY;
    }
    max(v) / lo
}

fn outcome(trials: Vec<TrialRecord>, aggregate: Values, fitted: Values, checks: Vec<Check>) -> Result<Outcome> {
    Ok(Outcome {
        trials,
        aggregate,
        fitted,
        checks,
    })
}

fn lemma_a(c: &SuiteConfig) -> Result<Outcome> {
    let batch = c.param("batch")? as usize;
    let t_small = c.param("small_ball_t")?;
    let trials = run_trials(c, &c.size_grid, |_, p, _, seed| {
        let [d] = dims::<1>(p)?;
        if d == 0 {
            return Err(Error::usage("dimension must be >= 1"));
        }
        let mut rng = seed.rng();
        let var = 1.0 / d as f64;
        let (mut sum_sq, mut ge2, mut small, mut outside) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..batch {
            let sq = (0..d).map(|_| standard_normal(&mut rng).powi(2)).sum::<f64>() * var;
            let r = sq.sqrt();
            sum_sq += sq;
            ge2 += f64::from(u8::from(r >= 2.0));
            small += f64::from(u8::from(r <= t_small));
            outside += f64::from(u8::from(!(0.5..=2.0).contains(&r)));
        }
        Ok(values([
            ("d", d as f64),
            ("samples", batch as f64),
            ("sum_sq", sum_sq),
            ("count_ge2", ge2),
            ("count_small", small),
            ("count_outside", outside),
        ]))
    });
    let mut agg = Values::new();
    let mut checks = Vec::new();
    let mut outside_freq = Vec::new();
    for (g, p) in c.size_grid.iter().enumerate() {
        let d = p[0];
        let m = sum(&column(&trials, g, "samples"));
        let mean_sq = sum(&column(&trials, g, "sum_sq")) / m;
        let ge2 = sum(&column(&trials, g, "count_ge2"));
        let small = sum(&column(&trials, g, "count_small")) / m;
        let outside = sum(&column(&trials, g, "count_outside")) / m;
        agg.insert(format!("mean_sq_d{d}"), mean_sq);
        agg.insert(format!("freq_ge2_d{d}"), ge2 / m);
        agg.insert(format!("freq_small_d{d}"), small);
        agg.insert(format!("freq_outside_d{d}"), outside);
        insert_ci(&mut agg, &format!("freq_outside_d{d}"), outside * m, m);
        insert_ci(&mut agg, &format!("freq_small_d{d}"), small * m, m);
        if d == 100 {
            checks.push(Check::at_most("mean_sq_d100", (mean_sq - 1.0).abs(), c.threshold("mean_tol")?));
        }
        if d >= 20 {
            checks.push(Check::at_most(format!("norm_ge2_count_d{d}"), ge2, 0.0));
        }
        let bound = (t_small * 0.5f64.exp()).powi(d as i32);
        checks.push(Check::at_most(format!("small_ball_d{d}"), small, bound));
        outside_freq.push((d, outside));
    }
    let factor = c.threshold("decay_factor")?;
    for w in outside_freq.windows(2) {
        let ((d1, f1), (d2, f2)) = (w[0], w[1]);
        if d2 == 2 * d1 {
            checks.push(Check::at_most(format!("outside_decay_d{d1}_d{d2}"), f2, f1 / factor));
        }
    }
    let mut fitted = Values::new();
    let pts: Vec<(f64, f64)> = outside_freq.iter().filter(|p| p.1 > 0.0).map(|&(d, f)| (d as f64, f)).collect();
    if let Ok(f) = fit_constant(&pts, FitModel::ExpDecay) {
        fitted.insert("outside_decay_rate".into(), f.constant);
    }
    outcome(trials, agg, fitted, checks)
}

fn lemma_b(c: &SuiteConfig) -> Result<Outcome> {
    let (lo, hi) = (c.threshold("sv_low")?, c.threshold("sv_high")?);
    let trials = run_trials(c, &c.size_grid, |_, p, _, seed| {
        let [k, big_n] = dims::<2>(p)?;
        if k == 0 || big_n < k {
            return Err(Error::usage(format!("need 1 <= k <= N, got k={k}, N={big_n}")));
        }
        let lambda = gaussian_matrix(big_n, k, 1.0, seed)?;
        let s = singular_values(&lambda)?;
        let scale = (big_n as f64).sqrt();
        let (smax, smin) = (s[0] / scale, s[k - 1] / scale);
        let violations = s.iter().filter(|&&v| !(v / scale > lo && v / scale < hi)).count();
        Ok(values([
            ("k", k as f64),
            ("N", big_n as f64),
            ("s_min", smin),
            ("s_max", smax),
            ("violations", violations as f64),
            // the same spectrum under k^{-1/2} scaling, for comparison
            ("s_max_k_scaled", s[0] / (k as f64).sqrt()),
        ]))
    });
    let mut agg = Values::new();
    let (mut all_min, mut all_max, mut viol) = (f64::INFINITY, 0.0f64, 0.0);
    for (g, p) in c.size_grid.iter().enumerate() {
        let k = p[0];
        let smin = min(&column(&trials, g, "s_min"));
        let smax = max(&column(&trials, g, "s_max"));
        agg.insert(format!("s_min_k{k}"), smin);
        agg.insert(format!("s_max_k{k}"), smax);
        agg.insert(format!("s_max_k_scaled_k{k}"), max(&column(&trials, g, "s_max_k_scaled")));
        all_min = all_min.min(smin);
        all_max = all_max.max(smax);
        viol += sum(&column(&trials, g, "violations"));
    }
    agg.insert("violations".into(), viol);
    let fitted = values([("c", all_min), ("C", all_max)]);
    let checks = vec![
        Check::at_most("violations", viol, 0.0),
        Check::new("lower_constant", all_min, format!("> {lo}"), all_min > lo),
        Check::new("upper_constant", all_max, format!("< {hi}"), all_max < hi),
    ];
    outcome(trials, agg, fitted, checks)
}

fn cor_c(c: &SuiteConfig) -> Result<Outcome> {
    let restarts = c.param("restarts")? as usize;
    let trials = run_trials(c, &c.size_grid, |_, p, _, seed| {
        let [k, big_n] = dims::<2>(p)?;
        let body = RandomQuotientBody::sample(k, big_n, seed)?;
        let radii = body.radii(restarts, seed.derive(1))?;
        let r = radii.inradius_estimate;
        let kf = k as f64;
        let mut v = values([
            ("k", kf),
            ("N", big_n as f64),
            ("inradius", r),
            ("circumradius", radii.circumradius),
            ("c_hat", r * kf.sqrt()),
        ]);
        if big_n > k {
            v.insert("cprime_hat".into(), r / ((big_n as f64 / kf).ln() / kf).sqrt());
        }
        Ok(v)
    });
    let mut agg = Values::new();
    let mut fitted = Values::new();
    let (mut cs, mut cps) = (Vec::new(), Vec::new());
    for (g, p) in c.size_grid.iter().enumerate() {
        let (k, big_n) = (p[0], p[1]);
        agg.insert(format!("inradius_mean_k{k}_N{big_n}"), mean(&column(&trials, g, "inradius")));
        if big_n == 2 * k {
            let v = min(&column(&trials, g, "c_hat"));
            fitted.insert(format!("c_k{k}"), v);
            cs.push(v);
        } else {
            let v = min(&column(&trials, g, "cprime_hat"));
            fitted.insert(format!("cprime_k{k}_N{big_n}"), v);
            cps.push(v);
        }
    }
    let stab = c.threshold("stability")?;
    let mut checks = Vec::new();
    if !cs.is_empty() {
        fitted.insert("c".into(), min(&cs));
        checks.push(Check::at_most("c_stability", spread(&cs), stab));
    }
    if !cps.is_empty() {
        fitted.insert("cprime".into(), min(&cps));
        checks.push(Check::at_most("cprime_stability", spread(&cps), stab));
    }
    outcome(trials, agg, fitted, checks)
}

fn lemma_d(c: &SuiteConfig) -> Result<Outcome> {
    let samples = c.param("samples")? as usize;
    let trials = run_trials(c, &c.size_grid, |_, p, _, seed| {
        let [n, big_n] = dims::<2>(p)?;
        let body = RandomQuotientBody::sample(n, big_n, seed)?;
        let v = body.volume_ratio(samples, seed.derive(1))?;
        let scale = ((big_n as f64 / n as f64).ln() / n as f64).sqrt();
        Ok(values([
            ("n", n as f64),
            ("N", big_n as f64),
            ("ratio", v.ratio_per_dim),
            ("ci_low", v.ci_low),
            ("ci_high", v.ci_high),
            ("scale", scale),
            ("cprime_hat", v.ci_high / scale),
        ]))
    });
    let example = c.threshold("example_constant")?;
    let rate_req = c.threshold("example_rate")?;
    let mut agg = Values::new();
    let mut fitted = Values::new();
    let mut checks = Vec::new();
    let mut cs = Vec::new();
    for (g, p) in c.size_grid.iter().enumerate() {
        let n = p[0];
        let ratio = column(&trials, g, "ratio");
        let scale = column(&trials, g, "scale");
        let within = ratio.iter().zip(&scale).filter(|(r, s)| **r <= example * **s).count();
        let rate = within as f64 / ratio.len().max(1) as f64;
        agg.insert(format!("ratio_mean_n{n}"), mean(&ratio));
        agg.insert(format!("example_rate_n{n}"), rate);
        checks.push(Check::at_least(format!("example_constant_n{n}"), rate, rate_req));
        let v = max(&column(&trials, g, "cprime_hat"));
        fitted.insert(format!("Cprime_n{n}"), v);
        cs.push(v);
    }
    fitted.insert("Cprime".into(), max(&cs));
    checks.push(Check::at_most("Cprime_stability", spread(&cs), c.threshold("stability")?));
    outcome(trials, agg, fitted, checks)
}

/// Codimensions `n/8, n/4, n/2` (deduplicated, at least 1).
fn fact31_codims(n: usize) -> Vec<usize> {
    let mut v: Vec<usize> = [n / 8, n / 4, n / 2].iter().map(|&k| k.max(1)).filter(|&k| k < n).collect();
    v.dedup();
    v
}

fn fact31(c: &SuiteConfig) -> Result<Outcome> {
    let mw_samples = c.param("mean_width_samples")? as usize;
    let sec_samples = c.param("section_samples")? as usize;
    let trials = run_trials(c, &c.size_grid, |_, p, _, seed| {
        let [n, big_n] = dims::<2>(p)?;
        if n < 2 {
            return Err(Error::usage("sections need n >= 2"));
        }
        let body = RandomQuotientBody::sample(n, big_n, seed)?;
        let mw = body.mean_width(mw_samples, seed.derive(1))?.estimate;
        let nf = n as f64;
        let mut v = values([
            ("n", nf),
            ("N", big_n as f64),
            ("mean_width", mw),
            ("mean_width_ratio", mw / (nf.ln() / nf).sqrt()),
        ]);
        for k in fact31_codims(n) {
            let e = haar_subspace(n, n - k, seed.derive(10 + k as u64))?;
            let d = body.section_distortion(&e, sec_samples, seed.derive(100 + k as u64))?;
            let radius = 1.0 / d.min_gauge;
            v.insert(format!("radius_codim{k}"), radius);
            v.insert(format!("C_codim{k}"), radius / (mw * (nf / k as f64).sqrt()));
        }
        Ok(v)
    });
    let mut agg = Values::new();
    let mut fitted = Values::new();
    let mut checks = Vec::new();
    let bound = c.threshold("mean_width_constant")?;
    for (g, p) in c.size_grid.iter().enumerate() {
        let n = p[0] as usize;
        let mwr = max(&column(&trials, g, "mean_width_ratio"));
        agg.insert(format!("mean_width_mean_n{n}"), mean(&column(&trials, g, "mean_width")));
        fitted.insert(format!("mean_width_constant_n{n}"), mwr);
        checks.push(Check::at_most(format!("mean_width_n{n}"), mwr, bound));
        let mut cs = Vec::new();
        for k in fact31_codims(n) {
            let v = max(&column(&trials, g, &format!("C_codim{k}")));
            fitted.insert(format!("C_n{n}_codim{k}"), v);
            cs.push(v);
        }
        fitted.insert(format!("C_n{n}"), max(&cs));
        agg.insert(format!("C_spread_n{n}"), spread(&cs));
    }
    outcome(trials, agg, fitted, checks)
}

/// Gaussian operators for the first half of the trials, Haar orthogonal
/// ones for the rest.
fn test_operator(n: usize, trial: usize, trials: usize, seed: SeedSpec) -> Result<(Matrix, f64)> {
    if trial < trials.div_ceil(2) {
        Ok((gaussian_matrix(n, n, 1.0 / n as f64, seed)?, 0.0))
    } else {
        Ok((haar_subspace(n, n, seed)?.basis, 1.0))
    }
}

fn shared_bodies(c: &SuiteConfig) -> Result<Vec<(RandomQuotientBody, crate::body::RadiiEstimate)>> {
    let restarts = c.param("restarts")? as usize;
    c.size_grid
        .par_iter()
        .enumerate()
        .map(|(g, p)| {
            let [n, big_n] = dims::<2>(p)?;
            let s = shared_seed(c.master_seed, g);
            let body = RandomQuotientBody::sample(n, big_n, s)?;
            let radii = body.radii(restarts, s.derive(1))?;
            Ok((body, radii))
        })
        .collect()
}

fn thm22(c: &SuiteConfig) -> Result<Outcome> {
    let points = c.param("grid_points")? as usize;
    let bodies = shared_bodies(c)?;
    let trials = run_trials(c, &c.size_grid, |g, _, t, seed| {
        let (body, radii) = &bodies[g];
        let n = body.n();
        let est = GelfandEstimator::with_radii(body, radii.clone());
        let (op, kind) = test_operator(n, t, c.trials, seed)?;
        let k = (n / 2).max(1);
        let w = body.operator_norm(&op)?;
        let res = est.min_over_shifts(&op, k, points)?;
        let upper = res.bracket_at_best.upper;
        Ok(values([
            ("n", n as f64),
            ("N", body.num_columns() as f64),
            ("k", k as f64),
            ("orthogonal", kind),
            ("op_norm", w),
            ("best_shift", res.best_shift),
            ("proxy", res.proxy_value),
            ("upper", upper),
            ("ratio", upper * (n as f64).sqrt() / w),
        ]))
    });
    let mut agg = Values::new();
    let mut fitted = Values::new();
    let mut checks = Vec::new();
    let mut ks = Vec::new();
    for (g, (body, radii)) in bodies.iter().enumerate() {
        let n = body.n();
        let kk = max(&column(&trials, g, "ratio"));
        fitted.insert(format!("K_n{n}"), kk);
        agg.insert(format!("ratio_mean_n{n}"), mean(&column(&trials, g, "ratio")));
        ks.push(kk);
        // a multiple of the identity is fully absorbed by the shift
        let est = GelfandEstimator::with_radii(body, radii.clone());
        let id = Matrix::identity(n).scale(1.7);
        let res = est.min_over_shifts(&id, (n / 2).max(1), points)?;
        let w = body.operator_norm(&id)?;
        let ratio = res.bracket_at_best.upper * (n as f64).sqrt() / w;
        agg.insert(format!("identity_ratio_n{n}"), ratio);
        checks.push(Check::at_most(format!("identity_ratio_n{n}"), ratio, 0.0));
    }
    if ks.len() >= 2 {
        let growth = ks[ks.len() - 1] / ks[0];
        agg.insert("K_growth".into(), growth);
        checks.push(Check::at_most("K_growth", growth, c.threshold("growth")?));
    }
    outcome(trials, agg, fitted, checks)
}

fn thm32(c: &SuiteConfig) -> Result<Outcome> {
    let points = c.param("grid_points")? as usize;
    let bodies = shared_bodies(c)?;
    let trials = run_trials(c, &c.size_grid, |g, _, t, seed| {
        let (body, radii) = &bodies[g];
        let n = body.n();
        let nf = n as f64;
        let est = GelfandEstimator::with_radii(body, radii.clone());
        let (op, kind) = test_operator(n, t, c.trials, seed)?;
        let w = body.operator_norm(&op)?;
        let sb = est.sum_bracket(&op, points)?;
        let mut gamma: f64 = 0.0;
        for alpha in 1..=(n / 2).max(1) {
            let wit = suggest_mn_witness(&op, alpha)?;
            gamma = gamma.max(alpha as f64 * wit.achieved);
        }
        let mut v = values([
            ("n", nf),
            ("N", body.num_columns() as f64),
            ("orthogonal", kind),
            ("op_norm", w),
            ("best_shift", sb.best_shift),
            ("upper", sb.upper),
            ("lower", sb.lower),
            ("ratio", sb.upper / (nf.powf(2.0 / 3.0) * nf.ln().powf(1.5) * w)),
            ("ratio_sqrt", sb.upper / (nf.sqrt() * w)),
            ("gamma", gamma),
        ]);
        if gamma > 0.0 {
            v.insert("c1_hat".into(), w * (nf * nf.ln()).sqrt() / gamma);
        }
        Ok(v)
    });
    let mut agg = Values::new();
    let mut fitted = Values::new();
    let mut checks = Vec::new();
    let (mut cs, mut floors, mut c1s) = (Vec::new(), Vec::new(), Vec::new());
    for (g, (body, _)) in bodies.iter().enumerate() {
        let n = body.n();
        let cn = max(&column(&trials, g, "ratio"));
        let fl = max(&column(&trials, g, "ratio_sqrt"));
        let c1 = min(&column(&trials, g, "c1_hat"));
        fitted.insert(format!("c_n{n}"), cn);
        fitted.insert(format!("floor_n{n}"), fl);
        fitted.insert(format!("c1_n{n}"), c1);
        agg.insert(format!("ratio_mean_n{n}"), mean(&column(&trials, g, "ratio")));
        cs.push(cn);
        floors.push(fl);
        c1s.push(c1);
    }
    fitted.insert("c1".into(), min(&c1s));
    if cs.len() >= 2 {
        checks.push(Check::at_most("c_stability", spread(&cs), c.threshold("stability")?));
        checks.push(Check::at_most("c1_stability", spread(&c1s), c.threshold("stability")?));
        let keep = floors[floors.len() - 1] / floors[0];
        checks.push(Check::at_least("floor_ratio", keep, c.threshold("floor")?));
    }
    outcome(trials, agg, fitted, checks)
}

fn prop41(c: &SuiteConfig) -> Result<Outcome> {
    let cfg = L1Config {
        c_cal: c.param("c_cal")?,
        ..L1Config::default()
    };
    let trials = run_trials(c, &c.size_grid, |_, p, _, seed| {
        let [n, big_n] = dims::<2>(p)?;
        let body = RandomQuotientBody::sample(n, big_n, seed)?;
        let w = match find_l1_subspace(&body, None, &cfg, seed.derive(1)) {
            Ok(w) => w,
            Err(Error::ConditionFailed { inequality, measured, .. }) => {
                return Ok(values([
                    ("success", 0.0),
                    ("failed_el2", f64::from(u8::from(inequality == "el2"))),
                    ("failed_measured", measured),
                ]))
            }
            Err(e) => return Err(e),
        };
        let k = w.index_set.len();
        let dev = reverify(&body, &WitnessRecord::from(&w))?;
        // a second, disjoint column set of the same size
        let rest: Vec<usize> = (0..big_n).filter(|j| w.index_set.binary_search(j).is_err()).collect();
        let mut rng = seed.derive(2).rng();
        let mut other: Vec<usize> = sample_indices(&mut rng, rest.len(), k).into_iter().map(|i| rest[i]).collect();
        other.sort_unstable();
        let (iso2, _) = l1_iso_constant(&body, &other, cfg.inverse_samples, seed.derive(3))?;
        let pair = w.iso_constant.max(iso2) / w.iso_constant.min(iso2);
        Ok(values([
            ("success", 1.0),
            ("k", k as f64),
            ("sigma_min", w.sigma_min),
            ("max_leak", w.max_leak),
            ("iso", w.iso_constant),
            ("iso_exact", f64::from(u8::from(w.iso_exact))),
            ("compl", w.compl_constant),
            ("attempts", w.attempts as f64),
            ("reverify", dev),
            ("iso_pair_ratio", pair),
        ]))
    });
    let mut agg = Values::new();
    let mut fitted = Values::new();
    let mut checks = Vec::new();
    for (g, p) in c.size_grid.iter().enumerate() {
        let tag = format!("n{}_N{}", p[0], p[1]);
        let succ = column(&trials, g, "success");
        let rate = mean(&succ);
        let iso = max(&column(&trials, g, "iso"));
        let compl = max(&column(&trials, g, "compl"));
        let dev = max(&column(&trials, g, "reverify"));
        let pairs = column(&trials, g, "iso_pair_ratio");
        let pair_ok = pairs.iter().filter(|&&r| r <= c.thresholds["pair_ratio"]).count() as f64
            / pairs.len().max(1) as f64;
        agg.insert(format!("success_rate_{tag}"), rate);
        insert_ci(&mut agg, &format!("success_rate_{tag}"), sum(&succ), succ.len() as f64);
        agg.insert(format!("k_{tag}"), max(&column(&trials, g, "k")));
        agg.insert(format!("pair_rate_{tag}"), pair_ok);
        fitted.insert(format!("iso_{tag}"), iso);
        fitted.insert(format!("compl_{tag}"), compl);
        checks.push(Check::at_least(format!("success_rate_{tag}"), rate, c.threshold("success_rate")?));
        checks.push(Check::at_most(format!("iso_{tag}"), iso, c.threshold("l1_iso")?));
        checks.push(Check::at_most(format!("compl_{tag}"), compl, c.threshold("l1_compl")?));
        checks.push(Check::at_most(format!("reverify_{tag}"), dev, REVERIFY_TOL));
        checks.push(Check::at_least(format!("pair_rate_{tag}"), pair_ok, c.threshold("pair_rate")?));
    }
    outcome(trials, agg, fitted, checks)
}

/// Exponents of the relaxed runs, `N = ⌈n^{1+α}⌉`.
const RELAXED_ALPHAS: [f64; 3] = [0.25, 0.5, 1.0];

fn relaxed_columns(n: usize, alpha: f64) -> usize {
    ((n as f64).powf(1.0 + alpha) - 1e-9).ceil() as usize
}

fn prop42(c: &SuiteConfig) -> Result<Outcome> {
    let c_cal = c.param("c_cal")?;
    let relaxed_n = c.param("relaxed_n")? as usize;
    let mut full_grid = c.size_grid.clone();
    let base = full_grid.len();
    for a in RELAXED_ALPHAS {
        full_grid.push(vec![relaxed_n as u64, relaxed_columns(relaxed_n, a) as u64]);
    }
    let trials = run_trials(c, &full_grid, |g, p, _, seed| {
        let [n, big_n] = dims::<2>(p)?;
        let alpha = (g >= base).then(|| RELAXED_ALPHAS[g - base]);
        let cfg = L2Config {
            c_cal,
            relaxation: alpha,
            ..L2Config::default()
        };
        let body = RandomQuotientBody::sample(n, big_n, seed)?;
        let w = find_l2_subspace(&body, None, &cfg, seed.derive(1))?;
        let h = w.subspace.cols();
        let dev = reverify(&body, &WitnessRecord::from(&w))?;
        Ok(values([
            ("n", n as f64),
            ("N", big_n as f64),
            ("alpha", alpha.unwrap_or(0.0)),
            ("h", h as f64),
            ("distortion", w.distortion),
            ("compl", w.compl_constant),
            ("proj_radius", w.proj_image_radius),
            ("proj_radius_ratio", w.proj_image_radius / (h as f64 / n as f64).sqrt()),
            ("reverify", dev),
        ]))
    });
    let mut agg = Values::new();
    let mut fitted = Values::new();
    let mut checks = Vec::new();
    let dist_thr = c.threshold("l2_distortion")?;
    for (g, p) in c.size_grid.iter().enumerate() {
        let tag = format!("n{}_N{}", p[0], p[1]);
        let dist = column(&trials, g, "distortion");
        let rate = dist.iter().filter(|&&d| d <= dist_thr).count() as f64 / c.trials as f64;
        let compl = max(&column(&trials, g, "compl"));
        let rad = max(&column(&trials, g, "proj_radius_ratio"));
        agg.insert(format!("success_rate_{tag}"), rate);
        insert_ci(&mut agg, &format!("success_rate_{tag}"), rate * c.trials as f64, c.trials as f64);
        agg.insert(format!("h_{tag}"), max(&column(&trials, g, "h")));
        fitted.insert(format!("distortion_{tag}"), max(&dist));
        fitted.insert(format!("compl_{tag}"), compl);
        fitted.insert(format!("proj_radius_{tag}"), rad);
        checks.push(Check::at_least(format!("success_rate_{tag}"), rate, c.threshold("success_rate")?));
        checks.push(Check::at_most(format!("compl_{tag}"), compl, c.threshold("l2_compl")?));
        checks.push(Check::at_most(format!("proj_radius_{tag}"), rad, c.threshold("l2_proj_radius")?));
        checks.push(Check::at_most(format!("reverify_{tag}"), max(&column(&trials, g, "reverify")), REVERIFY_TOL));
    }
    let mut prev: Option<(f64, f64)> = None;
    for (i, a) in RELAXED_ALPHAS.iter().enumerate() {
        let g = base + i;
        let m = mean(&column(&trials, g, "compl"));
        fitted.insert(format!("relaxed_compl_alpha{a}"), m);
        agg.insert(format!("relaxed_compl_max_alpha{a}"), max(&column(&trials, g, "compl")));
        checks.push(Check::at_most(
            format!("relaxed_reverify_alpha{a}"),
            max(&column(&trials, g, "reverify")),
            REVERIFY_TOL,
        ));
        if let Some((pa, pm)) = prev {
            checks.push(Check::at_most(format!("relaxed_compl_alpha{pa}_to_{a}"), m, pm));
        }
        prev = Some((*a, m));
    }
    // growth from the largest to the smallest exponent, against 1/√α
    let (first, last) = (RELAXED_ALPHAS[0], RELAXED_ALPHAS[RELAXED_ALPHAS.len() - 1]);
    let growth = fitted[&format!("relaxed_compl_alpha{first}")] / fitted[&format!("relaxed_compl_alpha{last}")];
    agg.insert("relaxed_compl_growth".into(), growth);
    checks.push(Check::at_most("relaxed_compl_growth", growth, (last / first).sqrt()));
    outcome(trials, agg, fitted, checks)
}

fn hs_bound(c: &SuiteConfig) -> Result<Outcome> {
    let trials = run_trials(c, &c.size_grid, |_, p, _, seed| {
        let [n, big_n] = dims::<2>(p)?;
        let body = RandomQuotientBody::sample(n, big_n, seed)?;
        let t = gaussian_matrix(n, n, 1.0, seed.derive(1))?;
        let hs = hs_of_normalized(&body, &t)?;
        Ok(values([
            ("n", n as f64),
            ("N", big_n as f64),
            ("hs", hs.hs),
            ("bound", hs.bound),
            ("violation", f64::from(u8::from(!hs.ok))),
        ]))
    });
    let mut agg = Values::new();
    let mut fitted = Values::new();
    let mut viol = 0.0;
    for (g, p) in c.size_grid.iter().enumerate() {
        let tag = format!("n{}_N{}", p[0], p[1]);
        let hs = column(&trials, g, "hs");
        let bound = column(&trials, g, "bound");
        let worst = hs.iter().zip(&bound).map(|(h, b)| h / b).fold(0.0, f64::max);
        fitted.insert(format!("hs_over_bound_{tag}"), worst);
        agg.insert(format!("hs_mean_{tag}"), mean(&hs));
        viol += sum(&column(&trials, g, "violation"));
    }
    agg.insert("violations".into(), viol);
    outcome(trials, agg, fitted, vec![Check::at_most("violations", viol, 0.0)])
}
