//! Finders for well-complemented subspaces of the body's normed space: an
//! `ℓ1^k` spanned by a random set of columns, and a Euclidean section along
//! a random subspace. Every constant is measured and stored in a witness
//! that can be re-checked from the body alone.

use std::collections::BTreeMap;

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::RandomQuotientBody;
use crate::error::{Error, Result};
use crate::linalg::{check_orthonormal, norm2, orthonormalize, singular_values, Matrix};
use crate::linprog::{solve_columns, Columns, LpOptions, LpStatus};
use crate::sampler::{haar_subspace, unit_sphere_point, HaarSubspace, SeedSpec};

/// Largest `k` for which the inverse norm of the `ℓ1^k` basis map is computed
/// exactly (by `2^{k−1}` LPs); above it a sampled bound is used.
pub const EXACT_INVERSE_MAX_K: usize = 10;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct L1Config {
    /// Calibrated constant in `k = ⌊c · min(√n, n / log N)⌋`.
    pub c_cal: f64,
    /// Lower bound required of the smallest singular value of the
    /// normalized column block.
    pub el2_threshold: f64,
    pub retries: usize,
    /// Directions sampled for the inverse-norm bound when `k` is too large
    /// for the exact computation.
    pub inverse_samples: usize,
}

impl Default for L1Config {
    fn default() -> Self {
        L1Config {
            c_cal: 0.25,
            el2_threshold: 0.25,
            retries: 16,
            inverse_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct L2Config {
    /// Calibrated constant in `h = ⌊c · log N⌋`.
    pub c_cal: f64,
    /// Allows `N >= n^{1+alpha}` in place of `N >= n²`.
    pub relaxation: Option<f64>,
    pub distortion_samples: usize,
}

impl Default for L2Config {
    fn default() -> Self {
        L2Config {
            c_cal: 0.75,
            relaxation: None,
            distortion_samples: 1000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct L1Witness {
    pub index_set: Vec<usize>,
    /// Orthonormal basis of `E = span{g_j : j ∈ A}`.
    pub basis: Matrix,
    pub sigma_min: f64,
    pub max_leak: f64,
    pub iso_constant: f64,
    /// Whether `iso_constant` is exact (otherwise a sampled bound).
    pub iso_exact: bool,
    pub compl_constant: f64,
    pub seed: SeedSpec,
    pub attempts: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct L2Witness {
    pub subspace: Matrix,
    pub distortion: f64,
    pub max_gauge: f64,
    pub min_gauge: f64,
    pub compl_constant: f64,
    pub proj_image_radius: f64,
    pub seed: SeedSpec,
}

/// `k = max(1, ⌊c · min(√n, n / ln N)⌋)`
pub fn auto_l1_dim(n: usize, big_n: usize, c_cal: f64) -> usize {
    let n_f = n as f64;
    let ln = (big_n as f64).ln().max(f64::MIN_POSITIVE);
    ((c_cal * n_f.sqrt().min(n_f / ln)).floor() as usize).max(1)
}

/// `h = max(1, min(⌊c · ln N⌋, n))`
pub fn auto_l2_dim(n: usize, big_n: usize, c_cal: f64) -> usize {
    (((c_cal * (big_n as f64).ln()).floor() as usize).min(n)).max(1)
}

/// Smallest singular value of the `ℓ2`-normalized columns `g_j / |g_j|`,
/// `j ∈ A`; zero when `|A| > n`.
pub fn normalized_sigma_min(body: &RandomQuotientBody, indices: &[usize]) -> Result<f64> {
    if indices.len() > body.n() {
        return Ok(0.0);
    }
    let cols: Vec<Vec<f64>> = indices
        .iter()
        .map(|&j| {
            let g = body.column(j);
            let r = body.column_norms()[j];
            g.iter().map(|x| x / r).collect()
        })
        .collect();
    let m = Matrix::from_columns(&cols)?;
    Ok(*singular_values(&m)?.last().expect("non-empty index set"))
}

/// `max_{j ∉ A} |P_E g_j|₂`
pub fn max_leak(body: &RandomQuotientBody, indices: &[usize], basis: &Matrix) -> f64 {
    let mut in_a = vec![false; body.num_columns()];
    for &j in indices {
        in_a[j] = true;
    }
    let bt = basis.transpose();
    (0..body.num_columns())
        .filter(|&j| !in_a[j])
        .map(|j| norm2(&bt.matvec(body.column(j))))
        .fold(0.0, f64::max)
}

/// `X`-operator norm of the orthogonal projection onto `span(basis)`:
/// `max_j ‖P g_j‖_B`, evaluated in decreasing order of the bound
/// `Σ_i |⟨q_i, g_j⟩| ‖q_i‖_B` and stopped once no bound can beat the
/// current maximum.
pub fn complementation_norm(body: &RandomQuotientBody, basis: &Matrix) -> Result<f64> {
    if basis.rows() != body.n() {
        return Err(Error::usage("complementation_norm: basis has the wrong ambient dimension"));
    }
    check_orthonormal(basis, 1e-10)?;
    let q = basis.columns();
    let q_norms: Vec<f64> = q.par_iter().map(|qi| body.norm(qi)).collect::<Result<_>>()?;
    let coeffs: Vec<Vec<f64>> = (0..body.num_columns())
        .map(|j| basis.t_matvec(body.column(j)))
        .collect();
    let bounds: Vec<f64> = coeffs
        .iter()
        .map(|c| c.iter().zip(&q_norms).map(|(a, w)| a.abs() * w).sum())
        .collect();
    let mut order: Vec<usize> = (0..body.num_columns()).collect();
    order.sort_by(|&a, &b| bounds[b].total_cmp(&bounds[a]).then(a.cmp(&b)));
    let mut best = 0.0f64;
    // evaluate in batches so the early exit stays deterministic
    for batch in order.chunks(32) {
        if bounds[batch[0]] <= best {
            break;
        }
        let vals: Vec<f64> = batch
            .par_iter()
            .filter(|&&j| bounds[j] > best)
            .map(|&j| body.norm(&basis.matvec(&coeffs[j])))
            .collect::<Result<_>>()?;
        best = vals.into_iter().fold(best, f64::max);
    }
    Ok(best)
}

/// `‖u‖ · ‖u⁻¹‖` for the map `u : ℓ1^k → F = span{g_j : j ∈ A}`,
/// `e_a ↦ g_a`. Returns the constant and whether it is exact.
pub fn l1_iso_constant(
    body: &RandomQuotientBody,
    indices: &[usize],
    inverse_samples: usize,
    seed: SeedSpec,
) -> Result<(f64, bool)> {
    let norms: Vec<f64> = indices
        .par_iter()
        .map(|&j| body.norm(body.column(j)))
        .collect::<Result<_>>()?;
    let u_norm = norms.iter().cloned().fold(0.0, f64::max);
    if indices.len() <= EXACT_INVERSE_MAX_K {
        Ok((u_norm * exact_inverse_norm(body, indices)?, true))
    } else {
        Ok((u_norm * sampled_inverse_bound(body, indices, inverse_samples, seed)?, false))
    }
}

/// `max ‖t‖₁` over `Γ_A t ∈ B`, as the largest of the LPs
/// `max ⟨ε, t⟩` over sign vectors `ε` with `ε_1 = +1`.
///
/// Variables `[t⁺, t⁻, s⁺, s⁻, w] >= 0` with
/// `Γ_A (t⁺ − t⁻) − Γ (s⁺ − s⁻) = 0` and `Σ(s⁺ + s⁻) + w = 1`.
fn exact_inverse_norm(body: &RandomQuotientBody, indices: &[usize]) -> Result<f64> {
    let n = body.n();
    let k = indices.len();
    let big_n = body.num_columns();
    let m = n + 1;
    let v = 2 * k + 2 * big_n + 1;
    let mut data = Vec::with_capacity(m * v);
    let mut push = |g: &[f64], sign: f64, last: f64| {
        data.extend(g.iter().map(|x| sign * x));
        data.push(last);
    };
    for &a in indices {
        push(body.column(a), 1.0, 0.0);
    }
    for &a in indices {
        push(body.column(a), -1.0, 0.0);
    }
    for j in 0..big_n {
        push(body.column(j), -1.0, 1.0);
    }
    for j in 0..big_n {
        push(body.column(j), 1.0, 1.0);
    }
    push(&vec![0.0; n], 1.0, 1.0);
    let cols = Columns { m, v, data: &data };
    let mut rhs = vec![0.0; m];
    rhs[n] = 1.0;
    let patterns: Vec<u64> = (0..1u64 << (k - 1)).collect();
    let values: Vec<f64> = patterns
        .par_iter()
        .map(|&bits| -> Result<f64> {
            let mut c = vec![0.0; v];
            for a in 0..k {
                let eps = if a > 0 && (bits >> (a - 1)) & 1 == 1 { -1.0 } else { 1.0 };
                c[a] = -eps;
                c[k + a] = eps;
            }
            let sol = solve_columns(cols, &rhs, &c, &LpOptions::default())?;
            match sol.status {
                LpStatus::Optimal => Ok(-sol.objective_value.expect("optimal")),
                LpStatus::Unbounded => Err(Error::numeric(
                    "inverse-norm LP unbounded: the selected columns are dependent",
                )),
                LpStatus::Infeasible => Err(Error::numeric("inverse-norm LP infeasible")),
            }
        })
        .collect::<Result<_>>()?;
    Ok(values.into_iter().fold(0.0, f64::max))
}

/// `√k · sup |x|₂/‖x‖_B / (σ̂_min · min_{a∈A} |g_a|₂)` with the supremum over
/// sampled unit directions of `F`.
fn sampled_inverse_bound(body: &RandomQuotientBody, indices: &[usize], samples: usize, seed: SeedSpec) -> Result<f64> {
    let sigma = normalized_sigma_min(body, indices)?;
    if sigma == 0.0 {
        return Ok(f64::INFINITY);
    }
    let cols: Vec<Vec<f64>> = indices.iter().map(|&j| body.column(j).to_vec()).collect();
    let basis = orthonormalize(&cols, 1e-12)?.basis;
    let mut rng = seed.rng();
    let dirs: Vec<Vec<f64>> = (0..samples.max(1))
        .map(|_| basis.matvec(&unit_sphere_point(&mut rng, basis.cols())))
        .collect();
    let ratios: Vec<f64> = dirs
        .par_iter()
        .map(|x| Ok(norm2(x) / body.norm(x)?))
        .collect::<Result<_>>()?;
    let sup = ratios.into_iter().fold(0.0, f64::max);
    let min_col = indices.iter().map(|&j| body.column_norms()[j]).fold(f64::INFINITY, f64::min);
    Ok((indices.len() as f64).sqrt() * sup / (sigma * min_col))
}

/// Random `k`-subset `A` whose columns pass both checks:
/// `σ̂_min >= el2_threshold` and `max_{j∉A} |P_E g_j|₂ <= k^{-1/2}`.
/// Attempt `i` draws from stream `seed.offset(i)`.
pub fn find_l1_subspace(
    body: &RandomQuotientBody,
    k: Option<usize>,
    config: &L1Config,
    seed: SeedSpec,
) -> Result<L1Witness> {
    let sel = select_l1_indices(body, k, config, seed)?;
    let (iso_constant, iso_exact) =
        l1_iso_constant(body, &sel.indices, config.inverse_samples, sel.seed.derive(1))?;
    let compl_constant = complementation_norm(body, &sel.basis)?;
    Ok(L1Witness {
        index_set: sel.indices,
        basis: sel.basis,
        sigma_min: sel.sigma_min,
        max_leak: sel.max_leak,
        iso_constant,
        iso_exact,
        compl_constant,
        seed: sel.seed,
        attempts: sel.attempts,
    })
}

/// Column set passing both acceptance tests, before any constant is measured.
#[derive(Debug, Clone)]
pub struct L1Selection {
    pub indices: Vec<usize>,
    pub basis: Matrix,
    pub sigma_min: f64,
    pub max_leak: f64,
    /// Stream of the accepted attempt.
    pub seed: SeedSpec,
    pub attempts: usize,
}

/// Draws random `k`-subsets until one has normalized smallest singular value
/// at least `el2_threshold` and leak at most `k^{-1/2}`.
pub fn select_l1_indices(
    body: &RandomQuotientBody,
    k: Option<usize>,
    config: &L1Config,
    seed: SeedSpec,
) -> Result<L1Selection> {
    let k = k.unwrap_or_else(|| auto_l1_dim(body.n(), body.num_columns(), config.c_cal));
    if k == 0 || k > body.num_columns() {
        return Err(Error::usage(format!(
            "k must lie in 1..={}, got {k}",
            body.num_columns()
        )));
    }
    let retries = config.retries.max(1);
    let mut last_failure = None;
    for attempt in 0..retries {
        let s = seed.offset(attempt as u64);
        let mut rng = s.rng();
        let mut indices = sample_indices(&mut rng, body.num_columns(), k).into_vec();
        indices.sort_unstable();
        let sigma_min = normalized_sigma_min(body, &indices)?;
        if sigma_min < config.el2_threshold {
            last_failure = Some(("el2", sigma_min, format!(">= {}", config.el2_threshold)));
            continue;
        }
        let cols: Vec<Vec<f64>> = indices.iter().map(|&j| body.column(j).to_vec()).collect();
        let basis = orthonormalize(&cols, 1e-12)?.basis;
        let leak = max_leak(body, &indices, &basis);
        let fin = 1.0 / (k as f64).sqrt();
        if leak > fin {
            last_failure = Some(("fin", leak, format!("<= {fin}")));
            continue;
        }
        return Ok(L1Selection {
            indices,
            basis,
            sigma_min,
            max_leak: leak,
            seed: s,
            attempts: attempt + 1,
        });
    }
    let (tag, measured, requirement) = last_failure.expect("at least one attempt");
    Err(Error::ConditionFailed {
        inequality: tag.into(),
        measured,
        requirement,
        attempts: retries,
    })
}

/// Random `h`-dimensional subspace with its section distortion,
/// complementation constant and projected-image radius.
pub fn find_l2_subspace(
    body: &RandomQuotientBody,
    h: Option<usize>,
    config: &L2Config,
    seed: SeedSpec,
) -> Result<L2Witness> {
    let (n, big_n) = (body.n(), body.num_columns());
    if big_n < n * n {
        match config.relaxation {
            None => {
                return Err(Error::usage(format!(
                    "l2 construction needs N >= n² ({big_n} < {}); pass a relaxation exponent to override",
                    n * n
                )))
            }
            Some(alpha) => {
                if !(alpha > 0.0) || (big_n as f64) < (n as f64).powf(1.0 + alpha) * (1.0 - 1e-12) {
                    return Err(Error::usage(format!(
                        "relaxed l2 construction needs N >= n^(1+alpha) with alpha > 0 (N={big_n}, n={n}, alpha={alpha})"
                    )));
                }
                log::warn!("l2 construction running in relaxed mode: N={big_n} < n²={}, alpha={alpha}", n * n);
            }
        }
    }
    let h = h.unwrap_or_else(|| auto_l2_dim(n, big_n, config.c_cal));
    if h == 0 || h > n {
        return Err(Error::usage(format!("h must lie in 1..={n}, got {h}")));
    }
    let g = haar_subspace(n, h, seed)?;
    let d = body.section_distortion(&g, config.distortion_samples, seed.derive(1))?;
    let compl_constant = complementation_norm(body, &g.basis)?;
    let proj_image_radius = proj_image_radius(body, &g.basis);
    Ok(L2Witness {
        subspace: g.basis,
        distortion: d.distortion(),
        max_gauge: d.max_gauge,
        min_gauge: d.min_gauge,
        compl_constant,
        proj_image_radius,
        seed,
    })
}

/// `max_j |P_G g_j|₂`
pub fn proj_image_radius(body: &RandomQuotientBody, basis: &Matrix) -> f64 {
    let bt = basis.transpose();
    (0..body.num_columns())
        .map(|j| norm2(&bt.matvec(body.column(j))))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Witness {
    L1(L1Witness),
    L2(L2Witness),
}

impl Witness {
    /// Dimension of the constructed subspace.
    pub fn dim(&self) -> usize {
        match self {
            Witness::L1(w) => w.index_set.len(),
            Witness::L2(w) => w.subspace.cols(),
        }
    }
}

/// Uses the `ℓ1` construction when `ln N < √n` and the Euclidean one
/// otherwise.
pub fn dispatch(
    body: &RandomQuotientBody,
    l1: &L1Config,
    l2: &L2Config,
    seed: SeedSpec,
) -> Result<Witness> {
    if (body.num_columns() as f64).ln() < (body.n() as f64).sqrt() {
        Ok(Witness::L1(find_l1_subspace(body, None, l1, seed)?))
    } else {
        Ok(Witness::L2(find_l2_subspace(body, None, l2, seed)?))
    }
}

/// Serialized witness: `{"kind", "indices", "basis", "constants", "seed"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub kind: String,
    pub indices: Vec<usize>,
    pub basis: Matrix,
    pub constants: BTreeMap<String, f64>,
    pub seed: SeedSpec,
}

impl From<&L1Witness> for WitnessRecord {
    fn from(w: &L1Witness) -> Self {
        let constants = BTreeMap::from([
            ("sigma_min".to_string(), w.sigma_min),
            ("max_leak".to_string(), w.max_leak),
            ("iso_constant".to_string(), w.iso_constant),
            ("iso_exact".to_string(), if w.iso_exact { 1.0 } else { 0.0 }),
            ("compl_constant".to_string(), w.compl_constant),
        ]);
        WitnessRecord {
            kind: "l1".into(),
            indices: w.index_set.clone(),
            basis: w.basis.clone(),
            constants,
            seed: w.seed,
        }
    }
}

impl From<&L2Witness> for WitnessRecord {
    fn from(w: &L2Witness) -> Self {
        let constants = BTreeMap::from([
            ("distortion".to_string(), w.distortion),
            ("max_gauge".to_string(), w.max_gauge),
            ("min_gauge".to_string(), w.min_gauge),
            ("compl_constant".to_string(), w.compl_constant),
            ("proj_image_radius".to_string(), w.proj_image_radius),
        ]);
        WitnessRecord {
            kind: "l2".into(),
            indices: vec![],
            basis: w.subspace.clone(),
            constants,
            seed: w.seed,
        }
    }
}

impl From<&Witness> for WitnessRecord {
    fn from(w: &Witness) -> Self {
        match w {
            Witness::L1(w) => w.into(),
            Witness::L2(w) => w.into(),
        }
    }
}

impl WitnessRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("witness JSON: {e}")))
    }
}

/// Recomputes every deterministic constant of a witness from the body and
/// returns the largest absolute deviation from the stored values. For `ℓ1`
/// witnesses the basis is also rebuilt from the index set and compared.
pub fn reverify(body: &RandomQuotientBody, w: &WitnessRecord) -> Result<f64> {
    let get = |key: &str| {
        w.constants
            .get(key)
            .copied()
            .ok_or_else(|| Error::Parse(format!("witness lacks constant {key:?}")))
    };
    let mut worst = 0.0f64;
    match w.kind.as_str() {
        "l1" => {
            if w.indices.iter().any(|&j| j >= body.num_columns()) {
                return Err(Error::usage("witness index out of range for this body"));
            }
            let cols: Vec<Vec<f64>> = w.indices.iter().map(|&j| body.column(j).to_vec()).collect();
            let basis = orthonormalize(&cols, 1e-12)?.basis;
            worst = worst.max(basis.max_abs_diff(&w.basis));
            worst = worst.max((normalized_sigma_min(body, &w.indices)? - get("sigma_min")?).abs());
            worst = worst.max((max_leak(body, &w.indices, &w.basis) - get("max_leak")?).abs());
            worst = worst.max((complementation_norm(body, &w.basis)? - get("compl_constant")?).abs());
            if get("iso_exact")? == 1.0 {
                let (iso, _) = l1_iso_constant(body, &w.indices, 0, w.seed)?;
                worst = worst.max((iso - get("iso_constant")?).abs());
            }
        }
        "l2" => {
            worst = worst.max((complementation_norm(body, &w.basis)? - get("compl_constant")?).abs());
            worst = worst.max((proj_image_radius(body, &w.basis) - get("proj_image_radius")?).abs());
            let g = HaarSubspace::from_basis(w.basis.clone())?;
            let regenerated = haar_subspace(g.ambient_dim, g.dim, w.seed)?;
            worst = worst.max(regenerated.basis.max_abs_diff(&w.basis));
        }
        other => return Err(Error::Parse(format!("unknown witness kind {other:?}"))),
    }
    Ok(worst)
}

/// Sanity helper for tests and suites: `‖P g_j‖_B` for every column.
pub fn projected_gauges(body: &RandomQuotientBody, basis: &Matrix) -> Result<Vec<f64>> {
    (0..body.num_columns())
        .into_par_iter()
        .map(|j| {
            let c = basis.t_matvec(body.column(j));
            body.norm(&basis.matvec(&c))
        })
        .collect()
}
