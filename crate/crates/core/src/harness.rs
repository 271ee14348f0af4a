//! Monte Carlo experiment runner: parameter sweeps, per-trial metric
//! collection, bound evaluation on the realized dictionary, and CSV/JSON
//! emission.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs};
use crate::channel::{generate_channels, sample_supports, SparsityStats};
use crate::error::{Error, Result};
use crate::metrics::{detect_events, mean_stderr, nmae, nmse, TrialMetrics};
use crate::numeric::CMat;
use crate::recovery::{self, JompConfig};
use crate::rng::{stream, Purpose};
use crate::sensing::{generate_pilots, observe};

/// Which configuration field a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    T,
    PDb,
    Sc,
    S,
    N,
    M,
    K,
}

impl SweepVar {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepVar::T => "T",
            SweepVar::PDb => "P_dB",
            SweepVar::Sc => "s_c",
            SweepVar::S => "s",
            SweepVar::N => "N",
            SweepVar::M => "M",
            SweepVar::K => "K",
        }
    }
}

impl FromStr for SweepVar {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "T" => Ok(SweepVar::T),
            "P_dB" => Ok(SweepVar::PDb),
            "s_c" => Ok(SweepVar::Sc),
            "s" => Ok(SweepVar::S),
            "N" => Ok(SweepVar::N),
            "M" => Ok(SweepVar::M),
            "K" => Ok(SweepVar::K),
            other => Err(Error::InvalidConfig(format!("unknown sweep variable '{other}'"))),
        }
    }
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Recovery algorithms the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Jomp,
    Omp,
    Somp,
    Ls,
    Genie,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Jomp,
        Algorithm::Omp,
        Algorithm::Somp,
        Algorithm::Ls,
        Algorithm::Genie,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Jomp => "jomp",
            Algorithm::Omp => "omp",
            Algorithm::Somp => "somp",
            Algorithm::Ls => "ls",
            Algorithm::Genie => "genie",
        }
    }
}

impl FromStr for Algorithm {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jomp" => Ok(Algorithm::Jomp),
            "omp" => Ok(Algorithm::Omp),
            "somp" => Ok(Algorithm::Somp),
            "ls" => Ok(Algorithm::Ls),
            "genie" => Ok(Algorithm::Genie),
            other => Err(Error::InvalidConfig(format!("unknown algorithm '{other}'"))),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Full description of one sweep experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub p_db: f64,
    pub stats: SparsityStats,
    pub eta1: f64,
    pub eta2: f64,
    pub trials: usize,
    pub seed: u64,
    pub sweep_var: SweepVar,
    pub sweep_values: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub noiseless: bool,
    /// Monte Carlo supports per RIC order; 0 skips bound evaluation.
    pub ric_trials: usize,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            m: 64,
            n: 2,
            k: 16,
            t: 20,
            p_db: 20.0,
            stats: SparsityStats { s_c: 4, s: 8, epsilon: 0.0 },
            eta1: 0.2,
            eta2: 2.0,
            trials: 200,
            seed: 1,
            sweep_var: SweepVar::T,
            sweep_values: vec![20.0],
            algorithms: Algorithm::ALL.to_vec(),
            noiseless: false,
            ric_trials: 100,
            output_path: None,
        }
    }
}

/// All scalar parameters resolved at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointConfig {
    pub m: usize,
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub power: f64,
    pub stats: SparsityStats,
    pub eta1: f64,
    pub eta2: f64,
}

impl PointConfig {
    pub fn jomp_config(&self) -> JompConfig {
        JompConfig {
            s_c: self.stats.s_c,
            s: self.stats.s,
            eta1: self.eta1,
            eta2: self.eta2,
            power: self.power,
        }
    }
}

fn as_count(var: SweepVar, v: f64, min: usize) -> Result<usize> {
    if v.fract() != 0.0 || v < min as f64 || v > usize::MAX as f64 {
        return Err(Error::InvalidConfig(format!(
            "sweep value {v} for {var} must be an integer >= {min}"
        )));
    }
    Ok(v as usize)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if self.sweep_values.is_empty() {
            return Err(Error::InvalidConfig("sweep_values must be nonempty".into()));
        }
        if self.sweep_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig(
                "sweep_values must be strictly increasing".into(),
            ));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("algorithms must be nonempty".into()));
        }
        let mut seen = self.algorithms.clone();
        seen.dedup();
        if seen.len() != self.algorithms.len() {
            return Err(Error::InvalidConfig("duplicate algorithm requested".into()));
        }
        for &v in &self.sweep_values {
            self.at_point(v)?;
        }
        Ok(())
    }

    /// Resolves the configuration at one sweep value.
    pub fn at_point(&self, v: f64) -> Result<PointConfig> {
        let mut pc = PointConfig {
            m: self.m,
            n: self.n,
            k: self.k,
            t: self.t,
            power: 10f64.powf(self.p_db / 10.0),
            stats: self.stats,
            eta1: self.eta1,
            eta2: self.eta2,
        };
        match self.sweep_var {
            SweepVar::T => pc.t = as_count(SweepVar::T, v, 1)?,
            SweepVar::PDb => pc.power = 10f64.powf(v / 10.0),
            SweepVar::Sc => pc.stats.s_c = as_count(SweepVar::Sc, v, 0)?,
            SweepVar::S => pc.stats.s = as_count(SweepVar::S, v, 1)?,
            SweepVar::N => pc.n = as_count(SweepVar::N, v, 1)?,
            SweepVar::M => pc.m = as_count(SweepVar::M, v, 1)?,
            SweepVar::K => pc.k = as_count(SweepVar::K, v, 1)?,
        }
        if pc.stats.s_c > pc.stats.s {
            return Err(Error::InvalidConfig(format!(
                "s_c={} > s={} at sweep value {v}",
                pc.stats.s_c, pc.stats.s
            )));
        }
        if 2 * pc.stats.s > pc.m {
            return Err(Error::InvalidConfig(format!(
                "s={} > M/2={} at sweep value {v}",
                pc.stats.s,
                pc.m / 2
            )));
        }
        Ok(pc)
    }
}

/// One aggregated output row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub nmse_mean: f64,
    pub nmse_stderr: f64,
    pub nmae_mean: f64,
    pub nmae_stderr: f64,
    pub pr_theta_c: f64,
    pub pr_theta_i_mean: f64,
    pub time_s_mean: f64,
    pub bound_pr_c: f64,
    pub bound_pr_i: f64,
    pub bound_nmae: f64,
    pub bound_valid: bool,
}

/// The full sweep output: one row per (sweep value, algorithm).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultTable {
    pub rows: Vec<ResultRow>,
}

/// Output encodings supported by [`emit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown format '{other}'"))),
        }
    }
}

struct TrialOutcome {
    per_alg: Vec<TrialMetrics>,
    gamma: f64,
}

/// Runs every requested algorithm on one freshly drawn scene.
fn run_trial(
    cfg: &ExperimentConfig,
    pc: &PointConfig,
    point: u64,
    trial: u64,
    noiseless: bool,
) -> Result<TrialOutcome> {
    let seed = cfg.seed;
    let mut sr = stream(seed, Purpose::Support, point, trial);
    let support = sample_supports(pc.m, pc.k, &pc.stats, &mut sr)?;
    let mut cr = stream(seed, Purpose::Channel, point, trial);
    let chans = generate_channels(&support, pc.m, pc.n, &mut cr)?;
    let mut pr = stream(seed, Purpose::Pilot, point, trial);
    let pilots = generate_pilots(pc.m, pc.t, pc.power, &mut pr)?;
    let mut nr = stream(seed, Purpose::Noise, point, trial);
    let meas = observe(&chans.h, &pilots, &chans.a_r, noiseless, &mut nr)?;

    let hbar_true: Vec<CMat> = chans.hw.iter().map(|w| w.adjoint()).collect();
    let jcfg = pc.jomp_config();
    // plain LS admits an offline factorization of the pilot matrix: only
    // the per-user application is timed
    let ls_pinv = if cfg.algorithms.contains(&Algorithm::Ls) {
        let svd = pilots
            .xbar
            .clone()
            .try_svd(true, true, crate::numeric::RANK_EPS_REL, crate::numeric::SVD_MAX_ITERS)
            .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
        let smax = svd.singular_values.max();
        let pinv = svd
            .pseudo_inverse(crate::numeric::RANK_EPS_REL * smax)
            .map_err(|e| Error::NumericalFailure(e.to_string()))?;
        Some(crate::numeric::SplitMat::from_cmat(&pinv))
    } else {
        None
    };

    let kf = pc.k as f64;
    let mut per_alg = Vec::with_capacity(cfg.algorithms.len());
    for &alg in &cfg.algorithms {
        let (report, time_per_user_s) = if alg == Algorithm::Ls {
            // plain LS is a single batched pseudoinverse application; the
            // observation layout and the report bookkeeping are not part of
            // the estimator's cost
            let pinv = ls_pinv.as_ref().expect("precomputed for ls");
            let mut ybig = CMat::zeros(pc.t, pc.n * pc.k);
            for (i, y) in meas.ybar.iter().enumerate() {
                ybig.columns_mut(i * pc.n, pc.n).copy_from(y);
            }
            let start = Instant::now();
            let ysplit = crate::numeric::SplitMat::from_cmat(&ybig);
            let hbig = pinv.mul(&ysplit);
            let dt = start.elapsed().as_secs_f64() / kf;
            let hbar: Vec<CMat> = (0..pc.k)
                .map(|i| hbig.columns(i * pc.n, pc.n).clone_owned())
                .collect();
            let full = crate::numeric::IndexSet::new((0..pc.m).collect(), pc.m)?;
            (
                recovery::RecoveryReport {
                    hbar,
                    common: full.clone(),
                    individual: vec![full; pc.k],
                },
                dt,
            )
        } else {
            let start = Instant::now();
            let report = match alg {
                Algorithm::Jomp => recovery::jomp(&meas.ybar, &pilots.xbar, &jcfg)?,
                Algorithm::Omp => recovery::omp(&meas.ybar, &pilots.xbar, &jcfg)?,
                Algorithm::Somp => recovery::somp(&meas.ybar, &pilots.xbar, &jcfg)?,
                Algorithm::Genie => {
                    recovery::genie_ls(&meas.ybar, &pilots.xbar, &support.omega_i)?
                }
                Algorithm::Ls => unreachable!(),
            };
            // the angular-domain algorithms deliver an antenna-domain
            // channel; the back-transform is part of their per-user cost
            // (plain LS already estimates in the measurement domain)
            for hb in &report.hbar {
                std::hint::black_box(recovery::to_antenna(hb, &chans.a_r, &chans.a_t));
            }
            (report, start.elapsed().as_secs_f64() / kf)
        };
        let nmse_v: Vec<f64> = hbar_true
            .iter()
            .zip(report.hbar.iter())
            .map(|(t, e)| nmse(t, e))
            .collect();
        let nmae_v: Vec<f64> = hbar_true
            .iter()
            .zip(report.hbar.iter())
            .map(|(t, e)| nmae(t, e))
            .collect();
        let events = detect_events(
            &support.omega_c,
            &support.omega_i,
            &report.common,
            &report.individual,
        );
        per_alg.push(TrialMetrics { nmse: nmse_v, nmae: nmae_v, events, time_per_user_s });
    }
    Ok(TrialOutcome { per_alg, gamma: support.gamma })
}

fn mean_of(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Bound columns for one sweep point, estimated from the realized
/// dictionary and the worst congestion seen across trials.
fn bound_columns(
    cfg: &ExperimentConfig,
    pc: &PointConfig,
    point: u64,
    gamma: f64,
) -> (f64, f64, f64, bool) {
    let invalid = (0.0, 0.0, 0.0, false);
    if cfg.ric_trials == 0 {
        return invalid;
    }
    // the dictionary distribution is identical across trials; probe the
    // first trial's realization
    let mut pr = stream(cfg.seed, Purpose::Pilot, point, 0);
    let Ok(pilots) = generate_pilots(pc.m, pc.t, pc.power, &mut pr) else {
        return invalid;
    };
    let s = pc.stats.s;
    let mut deltas = [0.0f64; 4];
    for (slot, order) in [(0usize, 1usize), (1, s), (2, s + 1), (3, 2 * s)] {
        let mut rr = stream(cfg.seed, Purpose::Ric, point, order as u64);
        match bounds::ric_estimate(&pilots.xbar, order, cfg.ric_trials, &mut rr) {
            Ok(est) if est.delta_hat < 1.0 => deltas[slot] = est.delta_hat,
            _ => return invalid,
        }
    }
    let inp = BoundInputs {
        delta_1: deltas[0],
        delta_s: deltas[1],
        delta_s1: deltas[2],
        delta_2s: deltas[3],
        eta1: pc.eta1,
        eta2: pc.eta2,
        m: pc.m,
        n: pc.n,
        t: pc.t,
        k: pc.k,
        s,
        s_c: pc.stats.s_c,
        power: pc.power,
        gamma,
        epsilon: pc.stats.epsilon,
    };
    match bounds::evaluate_all(&inp) {
        Ok(out) => (
            out.pr_common.clamped,
            out.pr_individual.clamped,
            out.nmae.upper,
            out.theta_valid && out.pr_common.valid && out.pr_individual.valid,
        ),
        Err(_) => invalid,
    }
}

/// Full bound evaluation for one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReportRow {
    pub sweep_var: SweepVar,
    pub sweep_value: f64,
    pub delta_1: f64,
    pub delta_s: f64,
    pub delta_s1: f64,
    pub delta_2s: f64,
    pub gamma: f64,
    pub outputs: bounds::BoundOutputs,
}

/// Bound-only evaluation: RIC estimates from one realized dictionary per
/// sweep point and the congestion level from sampled supports, fed through
/// every closed-form bound.
pub fn bound_report(cfg: &ExperimentConfig) -> Result<Vec<BoundReportRow>> {
    cfg.validate()?;
    if cfg.ric_trials == 0 {
        return Err(Error::InvalidConfig(
            "bound evaluation needs ric_trials >= 1".into(),
        ));
    }
    let mut rows = Vec::new();
    for (pi, &v) in cfg.sweep_values.iter().enumerate() {
        let pc = cfg.at_point(v)?;
        let point = pi as u64;
        // worst congestion over a sample of support draws
        let mut gamma: f64 = 0.0;
        for trial in 0..cfg.trials as u64 {
            let mut sr = stream(cfg.seed, Purpose::Support, point, trial);
            let sup = sample_supports(pc.m, pc.k, &pc.stats, &mut sr)?;
            gamma = gamma.max(sup.gamma);
        }
        let mut pr = stream(cfg.seed, Purpose::Pilot, point, 0);
        let pilots = generate_pilots(pc.m, pc.t, pc.power, &mut pr)?;
        let s = pc.stats.s;
        let mut deltas = [0.0f64; 4];
        for (slot, order) in [(0usize, 1usize), (1, s), (2, s + 1), (3, 2 * s)] {
            // an estimate at or above 1 (or an order the dictionary cannot
            // support at all) leaves the bound machinery without a valid
            // isometry hypothesis; cap just below 1 and let the validity
            // flags speak
            if order > pc.t.min(pc.m) {
                deltas[slot] = 1.0 - 1e-9;
                continue;
            }
            let mut rr = stream(cfg.seed, Purpose::Ric, point, order as u64);
            let est = bounds::ric_estimate(&pilots.xbar, order, cfg.ric_trials, &mut rr)?;
            deltas[slot] = est.delta_hat.min(1.0 - 1e-9);
        }
        let inp = BoundInputs {
            delta_1: deltas[0],
            delta_s: deltas[1],
            delta_s1: deltas[2],
            delta_2s: deltas[3],
            eta1: pc.eta1,
            eta2: pc.eta2,
            m: pc.m,
            n: pc.n,
            t: pc.t,
            k: pc.k,
            s,
            s_c: pc.stats.s_c,
            power: pc.power,
            gamma,
            epsilon: pc.stats.epsilon,
        };
        rows.push(BoundReportRow {
            sweep_var: cfg.sweep_var,
            sweep_value: v,
            delta_1: deltas[0],
            delta_s: deltas[1],
            delta_s1: deltas[2],
            delta_2s: deltas[3],
            gamma,
            outputs: bounds::evaluate_all(&inp)?,
        });
    }
    Ok(rows)
}

fn run_sweep_inner(cfg: &ExperimentConfig, parallel: bool) -> Result<ResultTable> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for (pi, &v) in cfg.sweep_values.iter().enumerate() {
        let pc = cfg.at_point(v)?;
        let point = pi as u64;
        let trial_ids: Vec<u64> = (0..cfg.trials as u64).collect();
        let outcomes: Vec<Result<TrialOutcome>> = if parallel {
            trial_ids
                .par_iter()
                .map(|&t| run_trial(cfg, &pc, point, t, cfg.noiseless))
                .collect()
        } else {
            trial_ids
                .iter()
                .map(|&t| run_trial(cfg, &pc, point, t, cfg.noiseless))
                .collect()
        };
        let outcomes: Vec<TrialOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
        let gamma = outcomes.iter().map(|o| o.gamma).fold(0.0, f64::max);
        let (b_prc, b_pri, b_nmae, b_valid) = bound_columns(cfg, &pc, point, gamma);

        for (ai, &alg) in cfg.algorithms.iter().enumerate() {
            let nmse_trials: Vec<f64> =
                outcomes.iter().map(|o| mean_of(&o.per_alg[ai].nmse)).collect();
            let nmae_trials: Vec<f64> =
                outcomes.iter().map(|o| mean_of(&o.per_alg[ai].nmae)).collect();
            let times: Vec<f64> =
                outcomes.iter().map(|o| o.per_alg[ai].time_per_user_s).collect();
            let theta_c_rate = outcomes
                .iter()
                .filter(|o| o.per_alg[ai].events.theta_c)
                .count() as f64
                / cfg.trials as f64;
            let theta_i_mean =
                mean_of(&outcomes.iter().map(|o| o.per_alg[ai].events.individual_rate()).collect::<Vec<_>>());
            let (nmse_mean, nmse_stderr) = mean_stderr(&nmse_trials);
            let (nmae_mean, nmae_stderr) = mean_stderr(&nmae_trials);
            rows.push(ResultRow {
                sweep_var: cfg.sweep_var,
                sweep_value: v,
                algorithm: alg,
                nmse_mean,
                nmse_stderr,
                nmae_mean,
                nmae_stderr,
                pr_theta_c: theta_c_rate,
                pr_theta_i_mean: theta_i_mean,
                time_s_mean: mean_of(&times),
                bound_pr_c: b_prc,
                bound_pr_i: b_pri,
                bound_nmae: b_nmae,
                bound_valid: b_valid,
            });
        }
    }
    Ok(ResultTable { rows })
}

/// Runs the configured sweep with trials distributed across the rayon
/// worker pool. Results are bit-identical for any worker count.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<ResultTable> {
    run_sweep_inner(cfg, true)
}

/// Per-link timing comparison across antenna counts. Trials run
/// sequentially so wall-time measurements are uncontended; bound
/// evaluation is skipped.
pub fn timing_table(cfg: &ExperimentConfig, m_values: &[usize]) -> Result<ResultTable> {
    let mut tcfg = cfg.clone();
    tcfg.sweep_var = SweepVar::M;
    tcfg.sweep_values = m_values.iter().map(|&m| m as f64).collect();
    tcfg.ric_trials = 0;
    run_sweep_inner(&tcfg, false)
}

const CSV_HEADER: &str = "sweep_var,sweep_value,algorithm,nmse_mean,nmse_stderr,nmae_mean,nmae_stderr,pr_theta_c,pr_theta_i_mean,time_s_mean,bound_pr_c,bound_pr_i,bound_nmae,bound_valid";

fn fmt_f64(v: f64) -> String {
    // 12 significant decimal digits, plain or scientific as needed
    format!("{v:.11e}")
}

/// Renders the table as CSV with the fixed column schema.
pub fn to_csv(table: &ResultTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.sweep_var,
            fmt_f64(r.sweep_value),
            r.algorithm,
            fmt_f64(r.nmse_mean),
            fmt_f64(r.nmse_stderr),
            fmt_f64(r.nmae_mean),
            fmt_f64(r.nmae_stderr),
            fmt_f64(r.pr_theta_c),
            fmt_f64(r.pr_theta_i_mean),
            fmt_f64(r.time_s_mean),
            fmt_f64(r.bound_pr_c),
            fmt_f64(r.bound_pr_i),
            fmt_f64(r.bound_nmae),
            r.bound_valid,
        ));
    }
    out
}

/// Writes the table to `path` in the requested format.
pub fn emit(table: &ResultTable, format: OutputFormat, path: &Path) -> Result<()> {
    if table.rows.is_empty() {
        return Err(Error::InvalidConfig("refusing to emit an empty table".into()));
    }
    let mut file = std::fs::File::create(path)?;
    match format {
        OutputFormat::Csv => file.write_all(to_csv(table).as_bytes())?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut file, table)?;
            file.write_all(b"\n")?;
        }
    }
    Ok(())
}

/// Parses a table previously emitted as JSON.
pub fn parse_json(text: &str) -> Result<ResultTable> {
    Ok(serde_json::from_str(text)?)
}
