//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::body::RandomQuotientBody;
use crate::constructions::{
    find_l1_subspace, find_l2_subspace, reverify, L1Config, L2Config, WitnessRecord,
};
use crate::error::{Error, Result};
use crate::experiments::{calibrate, run_suite, SuiteConfig, SuiteId, Thresholds};
use crate::linalg::text::{parse_matrix, parse_vector};
use crate::linalg::Matrix;
use crate::sampler::SeedSpec;
use crate::snumbers::{euclidean_s_numbers, GelfandEstimator};

const VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    " (report schema genquot-report/1, thresholds schema genquot-thresholds/1)"
);

#[derive(Debug, Parser)]
#[command(
    name = "genquot",
    version = VERSION,
    about = "Random quotients of l1^N: norms, s-number brackets, complemented subspaces and verification suites",
    args_override_self = true
)]
struct Cli {
    /// Worker threads (default: GENQUOT_THREADS, else all logical cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// File of `key=value` lines, one per flag; explicit flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (default: standard output).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct BodyArgs {
    /// Body file written by `sample`.
    #[arg(long)]
    body: Option<PathBuf>,
    /// Dimension of a freshly sampled body (used with --N and --seed).
    #[arg(long)]
    n: Option<usize>,
    /// Number of generating columns of a freshly sampled body.
    #[arg(long = "N")]
    big_n: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Construction {
    L1,
    L2,
}

fn seed_arg(s: &str) -> std::result::Result<SeedSpec, String> {
    s.parse::<SeedSpec>().map_err(|e| e.to_string())
}

fn key_value(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got {s:?}"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("bad number in {s:?}"))?;
    Ok((k.trim().to_string(), v))
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample a body and write it in the body text format.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long = "N")]
        big_n: usize,
        #[arg(long, value_parser = seed_arg)]
        seed: SeedSpec,
    },
    /// Gauge of a vector, with its dual certificate.
    Norm {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: Option<SeedSpec>,
        /// Comma or space separated entries.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        /// Vector file in the matrix text format.
        #[arg(long)]
        x_file: Option<PathBuf>,
    },
    /// Dual norm (support function) of a vector.
    Dualnorm {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: Option<SeedSpec>,
        #[arg(long, allow_hyphen_values = true)]
        u: Option<String>,
        #[arg(long)]
        u_file: Option<PathBuf>,
    },
    /// Operator norm of a matrix on the body's normed space.
    Opnorm {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: Option<SeedSpec>,
        #[arg(long)]
        matrix: PathBuf,
    },
    /// Circumradius (exact) and inradius estimate.
    Radii {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: SeedSpec,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
    /// Monte Carlo mean width of the polar body.
    Meanwidth {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: SeedSpec,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Volume ratio per dimension (n <= 8).
    Volume {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: SeedSpec,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
    },
    /// Euclidean s-numbers and Gelfand (or Kolmogorov) number brackets.
    Snumbers {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: SeedSpec,
        #[arg(long)]
        matrix: PathBuf,
        /// Only this index (default: all).
        #[arg(long)]
        k: Option<usize>,
        /// Kolmogorov numbers via the dual norm.
        #[arg(long)]
        dual: bool,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
    /// Best shift T - λId for the k-th Gelfand number, or for their sum.
    Shiftsearch {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: SeedSpec,
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long, required_unless_present = "sum")]
        k: Option<usize>,
        /// Minimize the sum over all k instead.
        #[arg(long)]
        sum: bool,
        #[arg(long, default_value_t = 201)]
        grid_points: usize,
        #[arg(long, default_value_t = 64)]
        restarts: usize,
    },
    /// Find a complemented l1^k or Euclidean subspace and write its witness.
    Construct {
        #[arg(value_enum)]
        kind: Construction,
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: SeedSpec,
        /// Subspace dimension (default: calibrated rule).
        #[arg(long)]
        dim: Option<usize>,
        /// Dimension constant (default: from the thresholds file).
        #[arg(long)]
        c_cal: Option<f64>,
        /// Accept N >= n^(1+alpha) for the Euclidean construction.
        #[arg(long)]
        relaxation: Option<f64>,
        #[arg(long)]
        thresholds: Option<PathBuf>,
    },
    /// Recompute a witness's constants and report the largest deviation.
    Reverify {
        #[command(flatten)]
        body: BodyArgs,
        #[arg(long, value_parser = seed_arg)]
        seed: Option<SeedSpec>,
        #[arg(long)]
        witness: PathBuf,
    },
    /// Run a verification suite and write its report.
    Verify {
        /// Suite id (lemmaA, lemmaB, corC, lemmaD, fact31, thm22, thm32, prop41, prop42, hsbound).
        suite: String,
        /// Master seed, decimal or 0x-hex.
        #[arg(long, value_parser = seed_arg)]
        seed: SeedSpec,
        /// Trials per grid point.
        #[arg(long)]
        trials: Option<usize>,
        /// Thresholds file (default: ./genquot-thresholds.json, else built in).
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Grid points, e.g. `16x256,9x81`.
        #[arg(long)]
        grid: Option<String>,
        /// Override one pass threshold, `name=value`.
        #[arg(long = "threshold", value_parser = key_value)]
        threshold_overrides: Vec<(String, f64)>,
        /// Override one numeric parameter, `name=value`.
        #[arg(long = "param", value_parser = key_value)]
        param_overrides: Vec<(String, f64)>,
    },
    /// Calibrate the construction constants and write a thresholds file.
    Calibrate {
        #[arg(long, value_parser = seed_arg)]
        seed: SeedSpec,
        #[arg(long, default_value_t = crate::experiments::CALIBRATION_TRIALS)]
        trials: usize,
    },
}

/// Parses `args` (program name first), runs the subcommand and returns the
/// exit code: 0 success, 1 failed suite or construction condition, 2 usage
/// error, 3 numeric failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let raw: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match expand_config(raw) {
        Ok(a) => a,
        Err(e) => return report_error(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    log::info!("resolved invocation: {cli:?}");
    match with_pool(cli.threads, || execute(&cli)) {
        Ok(code) => code,
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &Error) -> i32 {
    eprintln!("genquot: {e}");
    e.exit_code()
}

fn with_pool<F: FnOnce() -> Result<i32> + Send>(threads: Option<usize>, f: F) -> Result<i32> {
    let threads = match threads {
        Some(t) => Some(t),
        None => match std::env::var("GENQUOT_THREADS") {
            Ok(v) => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| Error::usage(format!("GENQUOT_THREADS={v:?} is not a count")))?,
            ),
            Err(_) => None,
        },
    };
    match threads {
        None => f(),
        Some(0) => Err(Error::usage("--threads must be >= 1")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::usage(format!("cannot build thread pool: {e}")))?
            .install(f),
    }
}

/// Splices the `key=value` lines of a `--config` file into the argument
/// list right after the subcommand name, so that later explicit flags
/// override them.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let mut extra: Vec<OsString> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Parse(format!("{path}:{}: expected key=value, got {line:?}", lineno + 1))
        })?;
        let (k, v) = (k.trim(), v.trim());
        if let Some(name) = k.strip_prefix("threshold.") {
            extra.push("--threshold".into());
            extra.push(format!("{name}={v}").into());
        } else if let Some(name) = k.strip_prefix("param.") {
            extra.push("--param".into());
            extra.push(format!("{name}={v}").into());
        } else if k == "config" {
            return Err(Error::Parse(format!("{path}: nested config is not supported")));
        } else {
            let flag = if k == "N" { k.to_string() } else { k.replace('_', "-") };
            match v {
                "true" => extra.push(format!("--{flag}").into()),
                "false" => {}
                _ => {
                    extra.push(format!("--{flag}").into());
                    extra.push(v.into());
                }
            }
        }
    }
    // skip the program name and any global flags (all take a value) before
    // the subcommand
    let mut i = 1;
    while i < strs.len() && strs[i].starts_with("--") {
        i += if strs[i].contains('=') { 1 } else { 2 };
    }
    if i >= strs.len() {
        return Ok(args);
    }
    let mut out = args[..=i].to_vec();
    out.extend(extra);
    out.extend_from_slice(&args[i + 1..]);
    Ok(out)
}

fn load_body(b: &BodyArgs, seed: Option<SeedSpec>) -> Result<RandomQuotientBody> {
    match (&b.body, b.n, b.big_n) {
        (Some(p), None, None) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            RandomQuotientBody::from_text(&text)
        }
        (None, Some(n), Some(big_n)) => {
            let seed = seed.ok_or_else(|| Error::usage("--seed is required to sample a body"))?;
            RandomQuotientBody::sample(n, big_n, seed)
        }
        _ => Err(Error::usage("give either --body FILE or --n, --N and --seed")),
    }
}

/// Stream for the algorithm's own randomness, separate from the one a
/// freshly sampled body was drawn from.
fn algo_seed(seed: SeedSpec) -> SeedSpec {
    seed.derive(1)
}

fn read_matrix(p: &Path) -> Result<Matrix> {
    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
    parse_matrix(&text)
}

fn read_vector(inline: &Option<String>, file: &Option<PathBuf>, what: &str) -> Result<Vec<f64>> {
    match (inline, file) {
        (Some(s), None) => parse_vector(s),
        (None, Some(p)) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            parse_vector(&text)
        }
        _ => Err(Error::usage(format!("give exactly one of --{what} and --{what}-file"))),
    }
}

fn emit(cli: &Cli, text: String, value: serde_json::Value) -> Result<()> {
    let out = match cli.format.unwrap_or(Format::Text) {
        Format::Text => text,
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&value).expect("json value");
            s.push('\n');
            s
        }
        Format::Csv => return Err(Error::usage("--format csv is only available for verify")),
    };
    write_out(cli, &out)
}

fn write_out(cli: &Cli, out: &str) -> Result<()> {
    match &cli.out {
        Some(p) => std::fs::write(p, out).map_err(|e| Error::io(p, e)),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

fn num(v: f64) -> String {
    format!("{v}\n")
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Sample { n, big_n, seed } => {
            let body = RandomQuotientBody::sample(*n, *big_n, *seed)?;
            write_out(cli, &body.to_text())?;
        }
        Command::Norm { body, seed, x, x_file } => {
            let b = load_body(body, *seed)?;
            let x = read_vector(x, x_file, "x")?;
            let c = b.norm_certificate(&x)?;
            emit(cli, num(c.value), serde_json::to_value(&c).expect("json"))?;
        }
        Command::Dualnorm { body, seed, u, u_file } => {
            let b = load_body(body, *seed)?;
            let u = read_vector(u, u_file, "u")?;
            let v = b.dual_norm(&u)?;
            emit(cli, num(v), json!({ "dual_norm": v }))?;
        }
        Command::Opnorm { body, seed, matrix } => {
            let b = load_body(body, *seed)?;
            let t = read_matrix(matrix)?;
            let (j, v) = b.operator_norm_argmax(&t)?;
            emit(cli, num(v), json!({ "operator_norm": v, "argmax_column": j }))?;
        }
        Command::Radii { body, seed, restarts } => {
            let b = load_body(body, Some(*seed))?;
            let r = b.radii(*restarts, algo_seed(*seed))?;
            let text = format!(
                "circumradius {}\ninradius_estimate {}\ninradius_exact {}\n",
                r.circumradius, r.inradius_estimate, r.inradius_exact
            );
            emit(cli, text, serde_json::to_value(&r).expect("json"))?;
        }
        Command::Meanwidth { body, seed, samples } => {
            let b = load_body(body, Some(*seed))?;
            let m = b.mean_width(*samples, algo_seed(*seed))?;
            emit(cli, format!("{} +- {}\n", m.estimate, m.std_error), serde_json::to_value(m).expect("json"))?;
        }
        Command::Volume { body, seed, samples } => {
            let b = load_body(body, Some(*seed))?;
            let v = b.volume_ratio(*samples, algo_seed(*seed))?;
            let text = format!("{} [{}, {}]\n", v.ratio_per_dim, v.ci_low, v.ci_high);
            emit(cli, text, serde_json::to_value(v).expect("json"))?;
        }
        Command::Snumbers { body, seed, matrix, k, dual, restarts } => {
            let b = load_body(body, Some(*seed))?;
            let t = read_matrix(matrix)?;
            let est = GelfandEstimator::new(&b, *restarts, algo_seed(*seed))?;
            let s = euclidean_s_numbers(&t)?;
            let brackets = match k {
                Some(k) => vec![est.bracket(&t, *k, *dual)?],
                None => est.brackets(&t, *dual)?,
            };
            let mut text = String::from("k euclidean lower upper lower_kind upper_kind\n");
            for br in &brackets {
                text.push_str(&format!(
                    "{} {} {} {} {:?} {:?}\n",
                    br.k,
                    s[br.k - 1],
                    br.lower,
                    br.upper,
                    br.lower_kind,
                    br.upper_kind
                ));
            }
            let value = json!({ "euclidean": s, "dual": dual, "brackets": brackets, "radii": est.radii() });
            emit(cli, text, value)?;
        }
        Command::Shiftsearch { body, seed, matrix, k, sum, grid_points, restarts } => {
            let b = load_body(body, Some(*seed))?;
            let t = read_matrix(matrix)?;
            let est = GelfandEstimator::new(&b, *restarts, algo_seed(*seed))?;
            if *sum {
                let r = est.sum_bracket(&t, *grid_points)?;
                let text = format!("best_shift {}\nlower {}\nupper {}\n", r.best_shift, r.lower, r.upper);
                emit(cli, text, serde_json::to_value(&r).expect("json"))?;
            } else {
                let k = k.ok_or_else(|| Error::usage("--k is required without --sum"))?;
                let r = est.min_over_shifts(&t, k, *grid_points)?;
                let text = format!(
                    "best_shift {}\nproxy {}\nlower {}\nupper {}\n",
                    r.best_shift, r.proxy_value, r.bracket_at_best.lower, r.bracket_at_best.upper
                );
                emit(cli, text, serde_json::to_value(&r).expect("json"))?;
            }
        }
        Command::Construct { kind, body, seed, dim, c_cal, relaxation, thresholds } => {
            let b = load_body(body, Some(*seed))?;
            let th = Thresholds::resolve(thresholds.as_deref())?;
            let rec = match kind {
                Construction::L1 => {
                    let cfg = L1Config {
                        c_cal: c_cal.map_or_else(|| th.get("l1_c_cal"), Ok)?,
                        ..L1Config::default()
                    };
                    WitnessRecord::from(&find_l1_subspace(&b, *dim, &cfg, algo_seed(*seed))?)
                }
                Construction::L2 => {
                    let cfg = L2Config {
                        c_cal: c_cal.map_or_else(|| th.get("l2_c_cal"), Ok)?,
                        relaxation: *relaxation,
                        ..L2Config::default()
                    };
                    WitnessRecord::from(&find_l2_subspace(&b, *dim, &cfg, algo_seed(*seed))?)
                }
            };
            write_out(cli, &rec.to_json())?;
        }
        Command::Reverify { body, seed, witness } => {
            let b = load_body(body, *seed)?;
            let text = std::fs::read_to_string(witness).map_err(|e| Error::io(witness, e))?;
            let rec = WitnessRecord::from_json(&text)?;
            let dev = reverify(&b, &rec)?;
            emit(cli, num(dev), json!({ "max_deviation": dev }))?;
        }
        Command::Verify {
            suite,
            seed,
            trials,
            thresholds,
            grid,
            threshold_overrides,
            param_overrides,
        } => {
            let id: SuiteId = suite.parse()?;
            if seed.stream_index != 0 {
                return Err(Error::usage("verify takes a master seed only (no :stream)"));
            }
            let th = Thresholds::resolve(thresholds.as_deref())?;
            let mut config = SuiteConfig::default_for(id, seed.master_seed, &th);
            if let Some(t) = trials {
                config.trials = *t;
            }
            if let Some(g) = grid {
                config.size_grid = parse_grid(g)?;
            }
            config.thresholds.extend(threshold_overrides.iter().cloned());
            config.params.extend(param_overrides.iter().cloned());
            log::info!("suite config: {}", serde_json::to_string(&config).expect("json"));
            let report = run_suite(&config)?;
            let out = match cli.format.unwrap_or(Format::Json) {
                Format::Json => report.to_json(),
                Format::Csv => report.to_csv(),
                Format::Text => summary(&report),
            };
            write_out(cli, &out)?;
            eprintln!(
                "suite {}: {} ({} trials, {} errors)",
                report.suite,
                if report.pass { "PASS" } else { "FAIL" },
                report.trials.len(),
                report.error_count()
            );
            for c in report.failed_checks() {
                eprintln!("  failed {}: {:?} (required {})", c.name, c.measured, c.requirement);
            }
            return Ok(if report.pass { 0 } else { 1 });
        }
        Command::Calibrate { seed, trials } => {
            if seed.stream_index != 0 {
                return Err(Error::usage("calibrate takes a master seed only (no :stream)"));
            }
            let th = calibrate(seed.master_seed, *trials)?;
            write_out(cli, &th.to_json())?;
        }
    }
    Ok(0)
}

fn summary(r: &crate::experiments::SuiteReport) -> String {
    let mut s = format!("suite {} {}\n", r.suite, if r.pass { "PASS" } else { "FAIL" });
    for (k, v) in &r.fitted {
        s.push_str(&format!("fitted {k} {v}\n"));
    }
    for c in &r.checks {
        let m = c.measured.map_or_else(|| "non-finite".to_string(), |v| v.to_string());
        s.push_str(&format!(
            "check {} {} {m} {}\n",
            c.name,
            if c.pass { "ok" } else { "FAIL" },
            c.requirement
        ));
    }
    s
}

/// `16x256,9x81` or `10,20,40`.
fn parse_grid(text: &str) -> Result<Vec<Vec<u64>>> {
    text.split(',')
        .map(|p| {
            p.trim()
                .split('x')
                .map(|d| {
                    d.trim()
                        .parse::<u64>()
                        .map_err(|_| Error::usage(format!("bad grid point {p:?}")))
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{REPORT_SCHEMA, THRESHOLDS_SCHEMA};

    #[test]
    fn version_names_both_schemas() {
        assert!(VERSION.contains(REPORT_SCHEMA));
        assert!(VERSION.contains(THRESHOLDS_SCHEMA));
        assert!(VERSION.starts_with(env!("CARGO_PKG_VERSION")));
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("16x256, 9x81").unwrap(), vec![vec![16, 256], vec![9, 81]]);
        assert_eq!(parse_grid("10,20").unwrap(), vec![vec![10], vec![20]]);
        assert!(parse_grid("4xq").is_err());
    }

    #[test]
    fn config_lines_become_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        std::fs::write(&p, "# trial count\ntrials=3\nthreshold.growth=4\ndual=true\nsum=false\n").unwrap();
        let args: Vec<OsString> = ["genquot", "--threads", "2", "verify", "hsbound", "--config"]
            .iter()
            .map(OsString::from)
            .chain([p.clone().into_os_string()])
            .collect();
        let got: Vec<String> = expand_config(args)
            .unwrap()
            .into_iter()
            .map(|a| a.into_string().unwrap())
            .collect();
        assert_eq!(
            &got[..9],
            ["genquot", "--threads", "2", "verify", "--trials", "3", "--threshold", "growth=4", "--dual"]
        );
        assert_eq!(&got[9..11], ["hsbound", "--config"]);
    }

    #[test]
    fn unknown_suite_is_usage_error() {
        assert_eq!(run(["genquot", "verify", "nosuch", "--seed", "1"]), 2);
        assert_eq!(run(["genquot", "sample", "--n", "2"]), 2);
        assert_eq!(run(["genquot", "sample", "-n", "2", "--N", "4", "--seed", "1"]), 2);
    }
}
