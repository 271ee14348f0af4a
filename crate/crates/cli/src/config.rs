//! Flat key=value configuration files with environment overrides.
//!
//! Recognized keys (all optional, defaults in parentheses):
//!   m (64), n (2), k (16), t (20)      problem dimensions
//!   p_db (20.0)                        pilot power in dB
//!   s_c (4), s (8), epsilon (0.0)      sparsity statistics
//!   eta1 (0.2), eta2 (2.0)             algorithm thresholds
//!   trials (200), seed (1)             Monte Carlo controls
//!   sweep_var ("T")                    one of T, P_dB, s_c, s, N, M, K
//!   sweep_values ([t])                 list of sweep points
//!   algorithms (all five)              list of: jomp, omp, somp, ls, genie
//!   noiseless (false)
//!   ric_trials (100)                   0 disables bound evaluation
//!   out                                output path for `run`
//!   timing_m ([60, 120, 180])          antenna counts for `timing`
//!
//! Every key can be overridden by an environment variable named
//! `CSIT_<KEY>` (upper-cased), with comma-separated values for lists, e.g.
//! `CSIT_TRIALS=50 CSIT_SWEEP_VALUES=35,45,55`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Deserialize;

use csit_core::channel::SparsityStats;
use csit_core::harness::{Algorithm, ExperimentConfig, SweepVar};

pub const ENV_PREFIX: &str = "CSIT_";

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    m: Option<usize>,
    n: Option<usize>,
    k: Option<usize>,
    t: Option<usize>,
    p_db: Option<f64>,
    s_c: Option<usize>,
    s: Option<usize>,
    epsilon: Option<f64>,
    eta1: Option<f64>,
    eta2: Option<f64>,
    trials: Option<usize>,
    seed: Option<u64>,
    sweep_var: Option<String>,
    sweep_values: Option<Vec<f64>>,
    algorithms: Option<Vec<String>>,
    noiseless: Option<bool>,
    ric_trials: Option<usize>,
    out: Option<PathBuf>,
    timing_m: Option<Vec<usize>>,
}

/// A loaded configuration plus the timing-only extras.
#[derive(Debug, Clone)]
pub struct FileConfig {
    pub cfg: ExperimentConfig,
    pub timing_m: Vec<usize>,
}

fn env_override(raw: &mut RawConfig) -> anyhow::Result<()> {
    fn get(key: &str) -> Option<String> {
        std::env::var(format!("{ENV_PREFIX}{}", key.to_uppercase())).ok()
    }
    fn parse<T: std::str::FromStr>(key: &str, v: &str) -> anyhow::Result<T>
    where
        T::Err: std::fmt::Display,
    {
        v.trim()
            .parse()
            .map_err(|e| anyhow::anyhow!("{ENV_PREFIX}{}: {e}", key.to_uppercase()))
    }
    fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> anyhow::Result<Vec<T>>
    where
        T::Err: std::fmt::Display,
    {
        v.split(',').map(|item| parse(key, item)).collect()
    }

    macro_rules! scalar {
        ($field:ident) => {
            if let Some(v) = get(stringify!($field)) {
                raw.$field = Some(parse(stringify!($field), &v)?);
            }
        };
    }
    scalar!(m);
    scalar!(n);
    scalar!(k);
    scalar!(t);
    scalar!(p_db);
    scalar!(s_c);
    scalar!(s);
    scalar!(epsilon);
    scalar!(eta1);
    scalar!(eta2);
    scalar!(trials);
    scalar!(seed);
    scalar!(sweep_var);
    scalar!(noiseless);
    scalar!(ric_trials);
    if let Some(v) = get("sweep_values") {
        raw.sweep_values = Some(parse_list("sweep_values", &v)?);
    }
    if let Some(v) = get("algorithms") {
        raw.algorithms = Some(v.split(',').map(|s| s.trim().to_string()).collect());
    }
    if let Some(v) = get("out") {
        raw.out = Some(PathBuf::from(v));
    }
    if let Some(v) = get("timing_m") {
        raw.timing_m = Some(parse_list("timing_m", &v)?);
    }
    Ok(())
}

/// Reads, env-overrides, and validates a configuration file.
pub fn load(path: &Path) -> anyhow::Result<FileConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut raw: RawConfig =
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
    env_override(&mut raw)?;

    let defaults = ExperimentConfig::default();
    let t = raw.t.unwrap_or(defaults.t);
    let stats = SparsityStats::new(
        raw.s_c.unwrap_or(defaults.stats.s_c),
        raw.s.unwrap_or(defaults.stats.s),
        raw.epsilon.unwrap_or(defaults.stats.epsilon),
    )?;
    let sweep_var: SweepVar = match &raw.sweep_var {
        Some(s) => s.parse()?,
        None => defaults.sweep_var,
    };
    if raw.sweep_var.is_none() && raw.sweep_values.is_some() {
        bail!("sweep_values given without sweep_var");
    }
    let sweep_values = raw.sweep_values.unwrap_or_else(|| vec![t as f64]);
    let algorithms: Vec<Algorithm> = match &raw.algorithms {
        Some(list) => list
            .iter()
            .map(|s| s.parse())
            .collect::<Result<_, _>>()?,
        None => defaults.algorithms.clone(),
    };

    let cfg = ExperimentConfig {
        m: raw.m.unwrap_or(defaults.m),
        n: raw.n.unwrap_or(defaults.n),
        k: raw.k.unwrap_or(defaults.k),
        t,
        p_db: raw.p_db.unwrap_or(defaults.p_db),
        stats,
        eta1: raw.eta1.unwrap_or(defaults.eta1),
        eta2: raw.eta2.unwrap_or(defaults.eta2),
        trials: raw.trials.unwrap_or(defaults.trials),
        seed: raw.seed.unwrap_or(defaults.seed),
        sweep_var,
        sweep_values,
        algorithms,
        noiseless: raw.noiseless.unwrap_or(false),
        ric_trials: raw.ric_trials.unwrap_or(defaults.ric_trials),
        output_path: raw.out,
    };
    cfg.validate()?;
    Ok(FileConfig { cfg, timing_m: raw.timing_m.unwrap_or_else(|| vec![60, 120, 180]) })
}
