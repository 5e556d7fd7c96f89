//! Calibration of the construction constants on a fixed seed, and the frozen
//! thresholds file the verification suites compare against.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::body::RandomQuotientBody;
use crate::constructions::{
    auto_l1_dim, auto_l2_dim, find_l1_subspace, find_l2_subspace, select_l1_indices, L1Config,
    L2Config,
};
use crate::error::{Error, Result};
use crate::experiments::trial_seed;

pub const THRESHOLDS_SCHEMA: &str = "genquot-thresholds/1";
pub const CALIBRATION_SEED: u64 = 1729;
pub const CALIBRATION_TRIALS: usize = 20;

/// Ladder of candidate dimension constants, ascending.
const LADDER: [f64; 7] = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0];
/// Fraction of calibration bodies on which the `ℓ1` conditions must hold.
const REQUIRED_SUCCESS: f64 = 0.95;
/// Thresholds are this multiple of the largest calibration value.
const MARGIN: f64 = 1.5;

pub const L1_SIZE: (usize, usize) = (36, 1296);
pub const L2_SIZES: [(usize, usize); 2] = [(9, 81), (16, 256)];

const FROZEN: &str = include_str!("../../data/genquot-thresholds.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub schema: String,
    pub calibration_seed: u64,
    pub calibration_trials: usize,
    pub values: BTreeMap<String, f64>,
}

impl Thresholds {
    /// The thresholds frozen into the binary at build time.
    pub fn builtin() -> Thresholds {
        Thresholds::from_json(FROZEN).expect("frozen thresholds file is valid")
    }

    pub fn from_json(text: &str) -> Result<Thresholds> {
        let t: Thresholds =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("thresholds: {e}")))?;
        if t.schema != THRESHOLDS_SCHEMA {
            return Err(Error::Parse(format!(
                "thresholds: schema {:?}, expected {THRESHOLDS_SCHEMA:?}",
                t.schema
            )));
        }
        Ok(t)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("thresholds serialize");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Thresholds> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Thresholds::from_json(&text)
    }

    /// `explicit` if given, else `./genquot-thresholds.json` if present,
    /// else the builtin copy.
    pub fn resolve(explicit: Option<&Path>) -> Result<Thresholds> {
        if let Some(p) = explicit {
            return Thresholds::load(p);
        }
        let local = Path::new("genquot-thresholds.json");
        if local.exists() {
            log::info!("using thresholds from {}", local.display());
            return Thresholds::load(local);
        }
        Ok(Thresholds::builtin())
    }

    pub fn get(&self, key: &str) -> Result<f64> {
        self.values
            .get(key)
            .copied()
            .ok_or_else(|| Error::Parse(format!("thresholds: missing value {key:?}")))
    }
}

/// Calibrates both constructions on `trials` bodies per size drawn from
/// `seed`.
///
/// `ℓ1`: the largest ladder constant whose dimension passes both column
/// conditions on at least 95% of the bodies at 36 x 1296. `ℓ2`: the largest
/// ladder constant whose dimension stays at most `n/2` at 9 x 81 and
/// 16 x 256. Each measured constant's threshold is 1.5 times its largest
/// calibration value.
pub fn calibrate(seed: u64, trials: usize) -> Result<Thresholds> {
    if trials == 0 {
        return Err(Error::usage("calibration needs at least one trial"));
    }
    let mut values = BTreeMap::new();

    let (n, big_n) = L1_SIZE;
    let bodies: Vec<RandomQuotientBody> = (0..trials)
        .into_par_iter()
        .map(|t| RandomQuotientBody::sample(n, big_n, trial_seed(seed, 0, t)))
        .collect::<Result<_>>()?;
    let mut chosen = None;
    let mut last_k = 0;
    let mut last_ok = false;
    for c in LADDER {
        let k = auto_l1_dim(n, big_n, c);
        let ok = if k == last_k {
            last_ok
        } else {
            let cfg = L1Config { c_cal: c, ..L1Config::default() };
            let hits: Vec<bool> = bodies
                .par_iter()
                .enumerate()
                .map(|(t, b)| match select_l1_indices(b, None, &cfg, trial_seed(seed, 0, t).derive(1)) {
                    Ok(_) => Ok(true),
                    Err(Error::ConditionFailed { .. }) => Ok(false),
                    Err(e) => Err(e),
                })
                .collect::<Result<_>>()?;
            let rate = hits.iter().filter(|h| **h).count() as f64 / trials as f64;
            log::info!("l1 calibration: c={c} k={k} success {rate}");
            rate >= REQUIRED_SUCCESS
        };
        if !ok {
            break;
        }
        chosen = Some(c);
        (last_k, last_ok) = (k, ok);
    }
    let c1 = chosen.ok_or_else(|| Error::ConditionFailed {
        inequality: "l1 calibration".into(),
        measured: 0.0,
        requirement: format!("success rate >= {REQUIRED_SUCCESS} at c = {}", LADDER[0]),
        attempts: trials,
    })?;
    let cfg = L1Config { c_cal: c1, ..L1Config::default() };
    let witnesses: Vec<_> = bodies
        .par_iter()
        .enumerate()
        .map(|(t, b)| match find_l1_subspace(b, None, &cfg, trial_seed(seed, 0, t).derive(1)) {
            Ok(w) => Ok(Some(w)),
            Err(Error::ConditionFailed { .. }) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let ws: Vec<_> = witnesses.into_iter().flatten().collect();
    values.insert("l1_c_cal".to_string(), c1);
    values.insert("l1_iso".to_string(), MARGIN * ws.iter().map(|w| w.iso_constant).fold(0.0, f64::max));
    values.insert("l1_compl".to_string(), MARGIN * ws.iter().map(|w| w.compl_constant).fold(0.0, f64::max));

    let c2 = LADDER
        .iter()
        .copied()
        .filter(|&c| L2_SIZES.iter().all(|&(n, big_n)| 2 * auto_l2_dim(n, big_n, c) <= n))
        .fold(None, |_, c| Some(c))
        .ok_or_else(|| Error::numeric("l2 calibration: no ladder constant keeps h <= n/2"))?;
    let cfg = L2Config { c_cal: c2, ..L2Config::default() };
    let mut dist = 0.0f64;
    let mut compl = 0.0f64;
    let mut radius = 0.0f64;
    for (s, &(n, big_n)) in L2_SIZES.iter().enumerate() {
        let ws: Vec<_> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let ts = trial_seed(seed, s + 1, t);
                let body = RandomQuotientBody::sample(n, big_n, ts)?;
                find_l2_subspace(&body, None, &cfg, ts.derive(1))
            })
            .collect::<Result<_>>()?;
        for w in &ws {
            let h = w.subspace.cols() as f64;
            dist = dist.max(w.distortion);
            compl = compl.max(w.compl_constant);
            radius = radius.max(w.proj_image_radius / (h / n as f64).sqrt());
        }
    }
    values.insert("l2_c_cal".to_string(), c2);
    values.insert("l2_distortion".to_string(), MARGIN * dist);
    values.insert("l2_compl".to_string(), MARGIN * compl);
    values.insert("l2_proj_radius".to_string(), MARGIN * radius);

    Ok(Thresholds {
        schema: THRESHOLDS_SCHEMA.into(),
        calibration_seed: seed,
        calibration_trials: trials,
        values,
    })
}
