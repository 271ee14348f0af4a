//! Closed-form recovery guarantees: restricted-isometry constant (RIC)
//! estimation, support-recovery probability bounds, the NMAE upper bound,
//! and the asymptotic decay rates derived from them.
//!
//! All probability bounds are reported both raw (possibly outside [0,1] in
//! vacuous regimes) and clamped, with validity flags for the preconditions
//! (`theta > 1`, `p < 1`, `p < (1-gamma)/2`) instead of errors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::numeric::{columns, CMat};

/// Monte Carlo lower-bound estimate of the order-`k` RIC of a dictionary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicEstimate {
    pub k: usize,
    /// Max observed deviation `max(sigma_max^2 - 1, 1 - sigma_min^2)` over
    /// sampled supports; never overestimates the true constant.
    pub delta_hat: f64,
    pub trials: usize,
}

/// Samples `trials` random column supports of size `k`, computes the
/// extremal singular values of each submatrix (plus a random unit-vector
/// probe), and returns the worst observed isometry deviation.
pub fn ric_estimate(
    xbar: &CMat,
    k: usize,
    trials: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RicEstimate> {
    let t = xbar.nrows();
    let m = xbar.ncols();
    if k == 0 || k > t || k > m {
        return Err(Error::InvalidConfig(format!(
            "RIC order k={k} must satisfy 1 <= k <= min(T={t}, M={m})"
        )));
    }
    let seeds: Vec<u64> = (0..trials).map(|_| rng.gen()).collect();
    let delta_hat = seeds
        .par_iter()
        .map(|&seed| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            // partial Fisher-Yates for a uniform size-k support
            let mut pool: Vec<usize> = (0..m).collect();
            for i in 0..k {
                let j = r.gen_range(i..m);
                pool.swap(i, j);
            }
            let mut omega = pool[..k].to_vec();
            omega.sort_unstable();
            let sub = columns(xbar, &crate::numeric::IndexSet::from_sorted_unchecked(omega));
            let sv = sub.singular_values();
            let smax = sv.max();
            let smin = sv.min();
            let mut dev = (smax * smax - 1.0).max(1.0 - smin * smin);
            // a random unit-vector probe (cannot exceed the extremal value,
            // kept as an independent cross-check of the deviation)
            let gauss = Normal::new(0.0, 1.0).unwrap();
            let mut h = CMat::zeros(k, 1);
            for v in h.iter_mut() {
                *v = num_complex::Complex64::new(gauss.sample(&mut r), gauss.sample(&mut r));
            }
            let norm = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.0 {
                let img = &sub * h.map(|v| v / norm);
                let energy: f64 = img.iter().map(|v| v.norm_sqr()).sum();
                dev = dev.max((energy - 1.0).abs());
            }
            dev
        })
        .reduce(|| 0.0, f64::max);
    Ok(RicEstimate { k, delta_hat, trials })
}

/// Inputs shared by the bound evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub delta_1: f64,
    pub delta_s: f64,
    pub delta_s1: f64,
    pub delta_2s: f64,
    pub eta1: f64,
    pub eta2: f64,
    pub m: usize,
    pub n: usize,
    pub t: usize,
    pub k: usize,
    pub s: usize,
    pub s_c: usize,
    /// Total pilot power, linear scale.
    pub power: f64,
    /// Worst-case fraction of users sharing a non-common support index.
    pub gamma: f64,
    /// Probability that the statistical sparsity bounds are violated.
    pub epsilon: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        for (name, d) in [
            ("delta_1", self.delta_1),
            ("delta_s", self.delta_s),
            ("delta_s1", self.delta_s1),
            ("delta_2s", self.delta_2s),
        ] {
            if !(0.0..1.0).contains(&d) {
                return Err(Error::InvalidConfig(format!("{name}={d} not in [0,1)")));
            }
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidConfig(format!("gamma={} not in [0,1)", self.gamma)));
        }
        if !(0.0..1.0).contains(&self.epsilon) {
            return Err(Error::InvalidConfig(format!(
                "epsilon={} not in [0,1)",
                self.epsilon
            )));
        }
        if self.m == 0 || self.n == 0 || self.t == 0 || self.k == 0 || self.s == 0 {
            return Err(Error::InvalidConfig("counts must be positive".into()));
        }
        if self.s_c > self.s {
            return Err(Error::InvalidConfig("s_c > s".into()));
        }
        if self.power <= 0.0 {
            return Err(Error::InvalidConfig("power must be positive".into()));
        }
        Ok(())
    }
}

/// Result of the threshold/probability pair underlying every bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaP {
    pub theta: f64,
    /// Failure probability of a single user's common-index test;
    /// `infinity` when `theta <= 0` leaves the exponents undefined.
    pub p: f64,
    /// Secondary threshold `(1 - delta_s) P / (4 eta2 M)`.
    pub vartheta: f64,
    /// `theta > 1` and `p < 1`.
    pub valid: bool,
}

/// Evaluates the threshold `theta` (minimum of three interference/noise
/// terms) and the per-user failure probability `p`.
pub fn compute_theta_p(inp: &BoundInputs) -> ThetaP {
    let BoundInputs { delta_1, delta_s, delta_s1, eta1, eta2, m, n, t, power, .. } = *inp;
    let mf = m as f64;
    let nf = n as f64;
    let tf = t as f64;
    let noise_amp = ((1.0 + delta_1) * eta2 * mf / power).sqrt();

    let term1 = (1.0 - 2.0 * delta_s) / (delta_s1 + 2.0 * (1.0 - delta_s) * noise_amp);
    let term2 = (1.0 - 2.0 * delta_s).powi(2)
        / ((1.0 - delta_s).powi(2) * (eta1.sqrt() + noise_amp).powi(2));
    let term3 = (eta1.sqrt() - noise_amp).powi(2) * (1.0 - delta_s).powi(2) / delta_s1.powi(2);
    let theta = term1.min(term2).min(term3);

    let p = if theta > 0.0 {
        2.0 * (-nf * (theta.ln() - 1.0 + 1.0 / theta)).exp()
            + mf * (-nf * (theta - 1.0 - theta.ln())).exp()
            + (-nf * tf * (eta2 - eta2.ln() - 1.0)).exp()
    } else {
        f64::INFINITY
    };
    let vartheta = (1.0 - delta_s) * power / (4.0 * eta2 * mf);
    ThetaP { theta, p, vartheta, valid: theta > 1.0 && p < 1.0 }
}

/// A probability bound reported raw and clamped to [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbBound {
    pub raw: f64,
    pub clamped: f64,
    pub valid: bool,
}

impl ProbBound {
    fn from_raw(raw: f64, valid: bool) -> Self {
        Self { raw, clamped: raw.clamp(0.0, 1.0), valid }
    }
}

fn ln_choose(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// `ln` of a sum given the `ln` of its terms; compensated accumulation
/// after factoring out the maximum.
fn log_sum_exp(terms: &[f64]) -> f64 {
    let mx = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for &t in terms {
        let v = (t - mx).exp();
        let y = v - comp;
        let s = sum + y;
        comp = (s - sum) - y;
        sum = s;
    }
    mx + sum.ln()
}

/// `C(n, t)` computed exactly in integer arithmetic, `None` on overflow.
fn choose_exact(n: u64, t: u64) -> Option<u128> {
    if t > n {
        return Some(0);
    }
    let t = t.min(n - t);
    let mut c: u128 = 1;
    for i in 1..=t {
        // the running product c*(n-t+i) is always divisible by i
        c = c.checked_mul((n - t + i) as u128)? / i as u128;
    }
    Some(c)
}

/// `Sum_{t=lo}^{hi} C(n, t) - 1`, the number of nonempty index subsets in
/// the size window, as a float. Exact (in particular, exactly zero for a
/// single full-size term) whenever the integers fit; log-space otherwise.
fn subset_count(n: u64, lo: u64, hi: u64) -> f64 {
    let hi = hi.min(n);
    if lo > hi {
        return 0.0;
    }
    let exact: Option<u128> = (lo..=hi).try_fold(0u128, |acc, t| {
        acc.checked_add(choose_exact(n, t)?)
    });
    if let Some(total) = exact {
        return total as f64 - 1.0;
    }
    let terms: Vec<f64> = (lo..=hi).map(|t| ln_choose(n, t)).collect();
    log_sum_exp(&terms).exp() - 1.0
}

/// `ln Sum_{t=0}^{t_max} C(k, t) (1-p)^t p^(k-t)` in log-space.
fn ln_binom_lower_tail(k: u64, t_max: u64, p: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p));
    let t_max = t_max.min(k);
    if p == 0.0 {
        // all mass at t = k
        return if t_max >= k { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return 0.0; // t = 0 term is 1
    }
    let lnp = p.ln();
    let ln1p = (-p).ln_1p();
    let terms: Vec<f64> = (0..=t_max)
        .map(|t| ln_choose(k, t) + t as f64 * ln1p + (k - t) as f64 * lnp)
        .collect();
    log_sum_exp(&terms)
}

/// Lower bound on the probability that the voting phase only selects true
/// common indices: `1 - 2 c0 Sum_{t=0}^{ceil((1+gamma)K/2)} C(K,t)(1-p)^t p^(K-t)`
/// with `c0 = Sum_{t=0}^{s_c} C(s,t) - 1`.
pub fn pr_common_bound(inp: &BoundInputs, _theta: f64, p: f64) -> ProbBound {
    if !(0.0..1.0).contains(&p) {
        return ProbBound { raw: 0.0, clamped: 0.0, valid: false };
    }
    let kf = inp.k as u64;
    let t_max = ((1.0 + inp.gamma) / 2.0 * inp.k as f64).ceil() as u64;
    let c0 = subset_count(inp.s as u64, 0, inp.s_c as u64);
    let tail = ln_binom_lower_tail(kf, t_max, p).exp();
    let raw = 1.0 - 2.0 * c0 * tail;
    ProbBound::from_raw(raw, true)
}

/// Lower bound on per-user support completion success given a correct
/// common phase (four exponential penalty terms, one per failure mode).
pub fn pr_individual_bound(inp: &BoundInputs, theta: f64) -> ProbBound {
    let vartheta = (1.0 - inp.delta_s) * inp.power / (4.0 * inp.eta2 * inp.m as f64);
    if theta <= 1.0 || vartheta <= 0.0 {
        return ProbBound { raw: 0.0, clamped: 0.0, valid: false };
    }
    let nf = inp.n as f64;
    let tf = inp.t as f64;
    let mf = inp.m as f64;
    let c_i = subset_count(inp.s as u64, inp.s_c as u64, inp.s as u64);
    let e1 = (-nf * (theta.ln() - 1.0 + 1.0 / theta)).exp();
    let e2 = (-nf * (theta - 1.0 - theta.ln())).exp();
    let e3 = (-nf * (vartheta.ln() - 1.0 + 1.0 / vartheta)).exp();
    let e4 = (-nf * tf * (inp.eta2 - inp.eta2.ln() - 1.0)).exp();
    let raw = 1.0 - c_i * e1 - c_i * mf * e2 - inp.s as f64 * e3 - e4;
    ProbBound::from_raw(raw, vartheta > 1.0)
}

/// Components of the normalized mean absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NmaeBound {
    pub upper: f64,
    /// Penalty from a failed common phase.
    pub c_i: f64,
    /// Penalty from a failed per-user phase.
    pub e_i: f64,
}

/// Expected normalized estimation error when supports are recovered with
/// probabilities at least `pr_c` and `pr_i`.
pub fn nmae_bound(inp: &BoundInputs, pr_c: f64, pr_i: f64) -> NmaeBound {
    let mf = inp.m as f64;
    let nf = inp.n as f64;
    let tf = inp.t as f64;
    let sf = inp.s as f64;
    let gamma_ratio = (ln_gamma(nf - 0.5) - ln_gamma(nf)).exp();
    let first = (mf * nf * sf / (inp.power * tf * (1.0 - inp.delta_s))).sqrt() * gamma_ratio;
    let distortion = (1.0 - inp.delta_s + inp.delta_2s) / (1.0 - inp.delta_s);
    let c_i = (1.0 - pr_c) * distortion;
    let e_i = (1.0 - pr_i) * distortion;
    let slack = inp.epsilon * (1.0 + ((1.0 + inp.delta_1) / (1.0 - inp.delta_s)).sqrt());
    NmaeBound { upper: first + c_i + e_i + slack, c_i, e_i }
}

/// Asymptotic decay rates of the error-bound penalty terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryRates {
    /// Decay exponent (in N) of the common-phase penalty.
    pub beta1: f64,
    /// Decay exponent (in N) of the per-user penalty.
    pub beta2: f64,
    pub beta_valid: bool,
    /// Decay exponent (in K) of the common-phase penalty.
    pub r_k: f64,
    /// Requires `p < (1 - gamma)/2`.
    pub r_k_valid: bool,
    /// High-SNR error level with the stopping threshold rescaled to
    /// `eta2 = sqrt(P)`.
    pub e_highsnr: f64,
    pub e_highsnr_valid: bool,
}

/// Evaluates the exponential decay rates in N and K and the high-SNR
/// error level.
pub fn corollary_rates(inp: &BoundInputs, theta: f64, vartheta: f64, p: f64) -> CorollaryRates {
    let tf = inp.t as f64;
    let (beta1, beta2, beta_valid) = if theta > 0.0 && vartheta > 0.0 {
        let a = theta.ln() - 1.0 + 1.0 / theta;
        let b = theta - 1.0 - theta.ln();
        let c = tf * (inp.eta2 - inp.eta2.ln() - 1.0);
        let d = vartheta.ln() - 1.0 + 1.0 / vartheta;
        (a.min(b).min(c), a.min(b).min(c).min(d), theta > 1.0 && vartheta > 1.0)
    } else {
        (0.0, 0.0, false)
    };

    let r_k_valid = (0.0..1.0).contains(&p) && p < (1.0 - inp.gamma) / 2.0;
    let r_k = if r_k_valid && p > 0.0 {
        (1.0 - inp.gamma) / 2.0 * ((1.0 - p) * (1.0 - inp.gamma) / (p * (1.0 + inp.gamma))).ln()
            - (2.0 * (1.0 - p) / (1.0 + inp.gamma)).ln()
    } else if r_k_valid {
        f64::INFINITY
    } else {
        0.0
    };

    // the high-SNR level uses a rescaled stopping threshold, which changes
    // theta; everything else is inherited
    let rescaled = BoundInputs { eta2: inp.power.sqrt(), ..*inp };
    let tp = compute_theta_p(&rescaled);
    let (e_highsnr, e_highsnr_valid) = if tp.theta > 1.0 {
        let nf = inp.n as f64;
        let mf = inp.m as f64;
        let distortion = (1.0 - inp.delta_s + inp.delta_2s) / (1.0 - inp.delta_s);
        let c_i = subset_count(inp.s as u64, inp.s_c as u64, inp.s as u64);
        let e = distortion
            * ((-nf * (tp.theta.ln() - 1.0 + 1.0 / tp.theta)).exp()
                + mf * (-nf * (tp.theta - 1.0 - tp.theta.ln())).exp());
        (c_i * e, true)
    } else {
        (0.0, false)
    };

    CorollaryRates { beta1, beta2, beta_valid, r_k, r_k_valid, e_highsnr, e_highsnr_valid }
}

/// Tail side for [`chernoff_tail`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailSide {
    Lower,
    Upper,
}

/// Chernoff bound on the chi-square tail with 2k degrees of freedom:
/// `Pr(chi^2_{2k}/(2k) <= x) <= exp(-k(-1 + x - ln x))` for `x < 1` and the
/// matching upper tail for `x > 1`.
pub fn chernoff_tail(k: usize, x: f64, side: TailSide) -> Result<f64> {
    let ok = match side {
        TailSide::Lower => 0.0 < x && x < 1.0,
        TailSide::Upper => x > 1.0,
    };
    if !ok {
        return Err(Error::InvalidConfig(format!(
            "x={x} outside the {side:?}-tail range"
        )));
    }
    Ok((-(k as f64) * (-1.0 + x - x.ln())).exp())
}

/// Large-deviation rate of the lower binomial tail: for `K` independent
/// events of success probability `1-p`, the probability that at most `K2`
/// succeed decays as `exp(-K * rate)` with
/// `rate = a ln(a/p) + (1-a) ln((1-a)/(1-p))`, `a = 1 - K2/K`
/// (the relative entropy between the tail fraction and `p`).
pub fn ld_rate(p: f64, k: usize, k2: usize) -> Result<f64> {
    if k2 == 0 || k2 >= k {
        return Err(Error::InvalidConfig(format!("need 0 < K2={k2} < K={k}")));
    }
    let a = 1.0 - k2 as f64 / k as f64;
    if !(0.0..1.0).contains(&p) || p >= a {
        return Err(Error::InvalidConfig(format!(
            "need 0 <= p < 1 - K2/K, got p={p}, 1-K2/K={a}"
        )));
    }
    if p == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(a * (a / p).ln() + (1.0 - a) * ((1.0 - a) / (1.0 - p)).ln())
}

/// Complete bound report for one configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOutputs {
    pub theta: f64,
    pub p: f64,
    pub vartheta: f64,
    pub theta_valid: bool,
    pub pr_common: ProbBound,
    pub pr_individual: ProbBound,
    pub nmae: NmaeBound,
    pub rates: CorollaryRates,
}

/// Evaluates every bound for one set of inputs.
pub fn evaluate_all(inp: &BoundInputs) -> Result<BoundOutputs> {
    inp.validate()?;
    let tp = compute_theta_p(inp);
    let pr_c = if tp.valid {
        pr_common_bound(inp, tp.theta, tp.p)
    } else {
        ProbBound { raw: 0.0, clamped: 0.0, valid: false }
    };
    let pr_i = pr_individual_bound(inp, tp.theta);
    let nmae = nmae_bound(inp, pr_c.clamped, pr_i.clamped);
    let rates = corollary_rates(inp, tp.theta, tp.vartheta, tp.p);
    Ok(BoundOutputs {
        theta: tp.theta,
        p: tp.p,
        vartheta: tp.vartheta,
        theta_valid: tp.valid,
        pr_common: pr_c,
        pr_individual: pr_i,
        nmae,
        rates,
    })
}
