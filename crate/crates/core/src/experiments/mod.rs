//! Reproducible Monte Carlo suites, each checking one quantitative claim
//! about random quotient bodies and reporting fitted constants.
//!
//! A suite is a pure function of its [`SuiteConfig`]: trial `t` at grid
//! point `g` draws from stream `(g << 32) | t` of the master seed and trial
//! results are collected in order, so reports are byte-identical across
//! thread counts.

mod calibration;
mod fit;
mod report;
mod suites;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::SeedSpec;

pub use calibration::{calibrate, Thresholds, CALIBRATION_SEED, CALIBRATION_TRIALS, THRESHOLDS_SCHEMA};
pub use fit::{fit_constant, FitModel, FitResult};
pub use report::{read_report, write_report, ReportFormat};

pub const REPORT_SCHEMA: &str = "genquot-report/1";
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
/// A suite with more than this fraction of errored trials cannot pass.
pub const MAX_ERROR_RATE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SuiteId {
    #[serde(rename = "lemmaA")]
    LemmaA,
    #[serde(rename = "lemmaB")]
    LemmaB,
    #[serde(rename = "corC")]
    CorC,
    #[serde(rename = "lemmaD")]
    LemmaD,
    #[serde(rename = "fact31")]
    Fact31,
    #[serde(rename = "thm22")]
    Thm22,
    #[serde(rename = "thm32")]
    Thm32,
    #[serde(rename = "prop41")]
    Prop41,
    #[serde(rename = "prop42")]
    Prop42,
    #[serde(rename = "hsbound")]
    HsBound,
}

impl SuiteId {
    pub const ALL: [SuiteId; 10] = [
        SuiteId::LemmaA,
        SuiteId::LemmaB,
        SuiteId::CorC,
        SuiteId::LemmaD,
        SuiteId::Fact31,
        SuiteId::Thm22,
        SuiteId::Thm32,
        SuiteId::Prop41,
        SuiteId::Prop42,
        SuiteId::HsBound,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SuiteId::LemmaA => "lemmaA",
            SuiteId::LemmaB => "lemmaB",
            SuiteId::CorC => "corC",
            SuiteId::LemmaD => "lemmaD",
            SuiteId::Fact31 => "fact31",
            SuiteId::Thm22 => "thm22",
            SuiteId::Thm32 => "thm32",
            SuiteId::Prop41 => "prop41",
            SuiteId::Prop42 => "prop42",
            SuiteId::HsBound => "hsbound",
        }
    }

    /// One-line description for `--help` style listings.
    pub fn describe(&self) -> &'static str {
        match self {
            SuiteId::LemmaA => "norm concentration and small-ball bounds for N(0, Id/d) vectors",
            SuiteId::LemmaB => "singular values of N^{-1/2} times an N x k Gaussian matrix",
            SuiteId::CorC => "inradius scaling c k^{-1/2} and c' sqrt(log(N/k)/k)",
            SuiteId::LemmaD => "volume ratio per dimension against sqrt(log(N/n)/n)",
            SuiteId::Fact31 => "mean width and Euclidean radius of random sections",
            SuiteId::Thm22 => "best shifted Gelfand number at k = n/2 against n^{-1/2} |T|",
            SuiteId::Thm32 => "sum of Gelfand numbers of the best shift against n^{2/3} log^{3/2} n |T|",
            SuiteId::Prop41 => "complemented l1^k construction",
            SuiteId::Prop42 => "complemented Euclidean section construction",
            SuiteId::HsBound => "Hilbert-Schmidt norm of T / |T| against sqrt(N)",
        }
    }
}

impl fmt::Display for SuiteId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SuiteId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SuiteId::ALL.into_iter().find(|id| id.name() == s).ok_or_else(|| {
            let names: Vec<&str> = SuiteId::ALL.iter().map(|id| id.name()).collect();
            Error::usage(format!("unknown suite {s:?} (one of {})", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub suite_id: SuiteId,
    /// Trials per grid point.
    pub trials: usize,
    pub master_seed: u64,
    /// Grid points; the meaning of each tuple is suite specific (usually `[n, N]`).
    pub size_grid: Vec<Vec<u64>>,
    /// Constants the pass verdict compares against.
    pub thresholds: BTreeMap<String, f64>,
    /// Numeric knobs (sample counts, restarts, grid resolution).
    pub params: BTreeMap<String, f64>,
}

impl SuiteConfig {
    /// Default configuration of `suite`, with calibrated constants taken
    /// from `thresholds`.
    pub fn default_for(suite: SuiteId, master_seed: u64, thresholds: &Thresholds) -> SuiteConfig {
        suites::default_config(suite, master_seed, thresholds)
    }

    pub fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| Error::usage(format!("{}: missing param {key:?}", self.suite_id)))
    }

    pub fn threshold(&self, key: &str) -> Result<f64> {
        self.thresholds
            .get(key)
            .copied()
            .ok_or_else(|| Error::usage(format!("{}: missing threshold {key:?}", self.suite_id)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::usage("trials must be >= 1"));
        }
        if self.trials >= 1 << 31 {
            return Err(Error::usage("trials must be < 2^31"));
        }
        if self.size_grid.is_empty() {
            return Err(Error::usage("size_grid must not be empty"));
        }
        Ok(())
    }
}

/// Stream of trial `t` at grid point `g`.
pub fn trial_seed(master_seed: u64, grid_index: usize, trial: usize) -> SeedSpec {
    SeedSpec::new(master_seed, ((grid_index as u64) << 32) | trial as u64)
}

/// Stream for an object shared by all trials at grid point `g`.
pub fn shared_seed(master_seed: u64, grid_index: usize) -> SeedSpec {
    SeedSpec::new(master_seed, ((grid_index as u64) << 32) | (1 << 31))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub grid_index: usize,
    pub seed: SeedSpec,
    pub values: BTreeMap<String, f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// `None` when the measured quantity was not finite.
    pub measured: Option<f64>,
    pub requirement: String,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check::new(name, measured, format!("<= {bound}"), measured <= bound)
    }

    pub fn at_least(name: impl Into<String>, measured: f64, bound: f64) -> Check {
        Check::new(name, measured, format!(">= {bound}"), measured >= bound)
    }

    pub fn new(name: impl Into<String>, measured: f64, requirement: String, pass: bool) -> Check {
        let finite = measured.is_finite();
        Check {
            name: name.into(),
            measured: finite.then_some(measured),
            requirement,
            pass: pass && finite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub schema: String,
    pub artifact_version: String,
    pub suite: SuiteId,
    pub config: SuiteConfig,
    pub trials: Vec<TrialRecord>,
    pub aggregate: BTreeMap<String, f64>,
    pub fitted: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn error_count(&self) -> usize {
        self.trials.iter().filter(|t| t.error.is_some()).count()
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

pub(crate) type Values = BTreeMap<String, f64>;

/// What a suite body hands back before the generic bookkeeping.
pub(crate) struct Outcome {
    pub trials: Vec<TrialRecord>,
    pub aggregate: Values,
    pub fitted: Values,
    pub checks: Vec<Check>,
}

/// Runs `config` on the current rayon pool.
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    config.validate()?;
    log::info!(
        "suite {}: {} trials x {} grid points, master seed {}",
        config.suite_id,
        config.trials,
        config.size_grid.len(),
        config.master_seed
    );
    let mut out = suites::run(config)?;
    let errors = out.trials.iter().filter(|t| t.error.is_some()).count();
    let total = out.trials.len().max(1);
    let rate = errors as f64 / total as f64;
    out.aggregate.insert("error_rate".into(), rate);
    out.checks.push(Check::at_most("error_rate", rate, MAX_ERROR_RATE));
    for c in out.checks.iter().filter(|c| !c.pass) {
        log::warn!("{}: check {} failed: {:?} vs {}", config.suite_id, c.name, c.measured, c.requirement);
    }
    let pass = out.checks.iter().all(|c| c.pass);
    Ok(SuiteReport {
        schema: REPORT_SCHEMA.into(),
        artifact_version: ARTIFACT_VERSION.into(),
        suite: config.suite_id,
        config: config.clone(),
        trials: out.trials,
        aggregate: finite(out.aggregate),
        fitted: finite(out.fitted),
        checks: out.checks,
        pass,
    })
}

fn finite(m: Values) -> Values {
    m.into_iter().filter(|(_, v)| v.is_finite()).collect()
}

/// Runs `f` for every trial of every grid point, in parallel, collecting in
/// grid-major order. A failing trial becomes a record with `error` set.
pub(crate) fn run_trials<F>(config: &SuiteConfig, grid: &[Vec<u64>], f: F) -> Vec<TrialRecord>
where
    F: Fn(usize, &[u64], usize, SeedSpec) -> Result<Values> + Sync,
{
    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..config.trials).map(move |t| (g, t)))
        .collect();
    tasks
        .par_iter()
        .enumerate()
        .map(|(index, &(g, t))| {
            let seed = trial_seed(config.master_seed, g, t);
            let (values, error) = match f(g, &grid[g], t, seed) {
                Ok(v) => (finite(v), None),
                Err(e) => {
                    log::debug!("{} trial {index} ({seed}): {e}", config.suite_id);
                    (Values::new(), Some(e.to_string()))
                }
            };
            TrialRecord {
                index,
                grid_index: g,
                seed,
                values,
                error,
            }
        })
        .collect()
}

pub(crate) fn values<const K: usize>(pairs: [(&str, f64); K]) -> Values {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for id in SuiteId::ALL {
            assert_eq!(id.name().parse::<SuiteId>().unwrap(), id);
            assert_eq!(serde_json::to_string(&id).unwrap(), format!("\"{id}\""));
        }
        assert!(matches!("lemmaZ".parse::<SuiteId>(), Err(Error::Usage(_))));
    }

    #[test]
    fn trial_seeds_are_distinct() {
        assert_ne!(trial_seed(1, 0, 1), trial_seed(1, 1, 0));
        assert_ne!(trial_seed(1, 2, 0), shared_seed(1, 2));
    }

    #[test]
    fn non_finite_check_fails() {
        let c = Check::at_most("x", f64::NAN, 1.0);
        assert!(!c.pass);
        assert_eq!(c.measured, None);
        assert!(Check::at_least("y", 2.0, 1.0).pass);
    }
}
