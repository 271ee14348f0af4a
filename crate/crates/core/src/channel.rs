//! Joint-sparse multi-user channel generation.
//!
//! Each user's angular-domain channel `Hw_i` (N x M) has one column support
//! `omega_i` shared by all of its rows; the supports of all users intersect
//! exactly in a common set `omega_c`. Nonzero entries are i.i.d. CN(0,1).
//! Antenna-domain channels are `H_i = A_R Hw_i A_T^H` with unitary DFT
//! transforms on both sides.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{dft_unitary, fro_norm, CMat, IndexSet};

const MAX_SAMPLING_ATTEMPTS: usize = 1000;

/// Statistical sparsity bounds: `|omega_c| >= s_c`, `|omega_i| <= s` hold
/// with probability at least `1 - epsilon`. The generator in this module
/// produces realizations satisfying the bounds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SparsityStats {
    pub s_c: usize,
    pub s: usize,
    pub epsilon: f64,
}

impl SparsityStats {
    pub fn new(s_c: usize, s: usize, epsilon: f64) -> Result<Self> {
        if s_c > s {
            return Err(Error::InvalidConfig(format!("s_c={s_c} exceeds s={s}")));
        }
        if s == 0 {
            return Err(Error::InvalidConfig("individual sparsity s must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidConfig(format!("epsilon={epsilon} not in [0,1)")));
        }
        Ok(Self { s_c, s, epsilon })
    }
}

/// A realized support profile: the common support, per-user supports, and
/// the congestion statistics `K_o` (max users sharing a non-common index)
/// and `gamma = K_o / K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointSupport {
    pub omega_c: IndexSet,
    pub omega_i: Vec<IndexSet>,
    pub k_o: usize,
    pub gamma: f64,
}

impl JointSupport {
    /// Builds a profile from raw supports, computing K_o and gamma and
    /// validating the intersection property.
    pub fn from_supports(omega_c: IndexSet, omega_i: Vec<IndexSet>) -> Result<Self> {
        if omega_i.is_empty() {
            return Err(Error::InvalidConfig("need at least one user".into()));
        }
        for (i, om) in omega_i.iter().enumerate() {
            if !omega_c.is_subset_of(om) {
                return Err(Error::InvalidConfig(format!(
                    "omega_c is not contained in omega_{i}"
                )));
            }
        }
        let mut inter = omega_i[0].clone();
        for om in &omega_i[1..] {
            inter = inter.intersection(om);
        }
        if inter != omega_c {
            return Err(Error::InvalidConfig(
                "intersection of user supports differs from omega_c".into(),
            ));
        }
        let (k_o, gamma) = congestion_stats(&omega_c, &omega_i);
        Ok(Self { omega_c, omega_i, k_o, gamma })
    }

    pub fn num_users(&self) -> usize {
        self.omega_i.len()
    }
}

/// `K_o = max_{j not in omega_c} #{i : j in omega_i}` and `gamma = K_o/K`.
pub fn congestion_stats(omega_c: &IndexSet, omega_i: &[IndexSet]) -> (usize, f64) {
    let k = omega_i.len();
    let mut k_o = 0usize;
    for om in omega_i {
        for &j in om.iter() {
            if omega_c.contains(j) {
                continue;
            }
            let count = omega_i.iter().filter(|o| o.contains(j)).count();
            k_o = k_o.max(count);
        }
    }
    (k_o, k_o as f64 / k as f64)
}

fn sample_subset(rng: &mut ChaCha8Rng, pool: &[usize], amount: usize) -> Vec<usize> {
    debug_assert!(amount <= pool.len());
    // partial Fisher-Yates over a copy of the pool
    let mut pool = pool.to_vec();
    let mut out = Vec::with_capacity(amount);
    for i in 0..amount {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
        out.push(pool[i]);
    }
    out
}

/// Draws a joint support profile following the sampling rules
/// `|omega_c| ~ U(s_c, min(s_c+2, s))` and `|omega_i| ~ U(max(s-2, |omega_c|), s)`,
/// redrawing the individual extras until the supports intersect exactly in
/// `omega_c`. For a single user the intersection is the user's own support,
/// so `omega_c` is set to it.
pub fn sample_supports(
    m: usize,
    k: usize,
    stats: &SparsityStats,
    rng: &mut ChaCha8Rng,
) -> Result<JointSupport> {
    if stats.s_c > stats.s {
        return Err(Error::InvalidConfig("s_c > s".into()));
    }
    if 2 * stats.s > m {
        return Err(Error::InvalidConfig(format!(
            "s={} must satisfy s <= M/2 with M={m}",
            stats.s
        )));
    }
    if k == 0 {
        return Err(Error::InvalidConfig("K must be >= 1".into()));
    }

    let n_c = rng.gen_range(stats.s_c..=(stats.s_c + 2).min(stats.s));
    let all: Vec<usize> = (0..m).collect();
    let omega_c_vec = sample_subset(rng, &all, n_c);
    let omega_c = IndexSet::new(omega_c_vec, m)?;
    let complement: Vec<usize> = (0..m).filter(|j| !omega_c.contains(*j)).collect();

    for _attempt in 0..MAX_SAMPLING_ATTEMPTS {
        let mut omega_i = Vec::with_capacity(k);
        for _ in 0..k {
            let lo = stats.s.saturating_sub(2).max(n_c);
            let size_i = rng.gen_range(lo..=stats.s);
            let extras = sample_subset(rng, &complement, size_i - n_c);
            let mut om = omega_c.clone();
            for e in extras {
                om.insert(e);
            }
            omega_i.push(om);
        }
        let mut inter = omega_i[0].clone();
        for om in &omega_i[1..] {
            inter = inter.intersection(om);
        }
        let omega_c_eff = if k == 1 { inter.clone() } else { omega_c.clone() };
        if inter == omega_c_eff {
            let (k_o, gamma) = congestion_stats(&omega_c_eff, &omega_i);
            return Ok(JointSupport { omega_c: omega_c_eff, omega_i, k_o, gamma });
        }
    }
    Err(Error::SamplingExhausted(MAX_SAMPLING_ATTEMPTS))
}

/// Per-user angular (`hw`) and antenna-domain (`h`) channels with the
/// unitary transforms that relate them.
#[derive(Debug, Clone)]
pub struct AngularChannelSet {
    pub hw: Vec<CMat>,
    pub h: Vec<CMat>,
    pub a_r: CMat,
    pub a_t: CMat,
    pub support: JointSupport,
}

/// Fills the supported columns of each user's N x M angular channel with
/// CN(0,1) entries (variance 1/2 per real/imaginary component) and maps to
/// the antenna domain.
pub fn generate_channels(
    support: &JointSupport,
    m: usize,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Result<AngularChannelSet> {
    if n == 0 {
        return Err(Error::InvalidConfig("N must be >= 1".into()));
    }
    for (i, om) in support.omega_i.iter().enumerate() {
        if om.is_empty() {
            return Err(Error::InvalidConfig(format!("user {i} has empty support")));
        }
        if let Some(&max) = om.as_slice().last() {
            if max >= m {
                return Err(Error::InvalidConfig(format!(
                    "support index {max} out of range for M={m}"
                )));
            }
        }
    }
    let a_r = dft_unitary(n);
    let a_t = dft_unitary(m);
    let a_t_h = a_t.adjoint();
    let gauss = Normal::new(0.0, (0.5f64).sqrt()).expect("valid stddev");

    let mut hw = Vec::with_capacity(support.num_users());
    let mut h = Vec::with_capacity(support.num_users());
    for om in &support.omega_i {
        let mut w = CMat::zeros(n, m);
        for &j in om.iter() {
            for r in 0..n {
                w[(r, j)] = Complex64::new(gauss.sample(rng), gauss.sample(rng));
            }
        }
        let ant = &a_r * &w * &a_t_h;
        hw.push(w);
        h.push(ant);
    }
    Ok(AngularChannelSet { hw, h, a_r, a_t, support: support.clone() })
}

impl AngularChannelSet {
    pub fn num_users(&self) -> usize {
        self.hw.len()
    }

    /// Relative Frobenius deviation between `h[i]` and `A_R hw[i] A_T^H`.
    pub fn transform_consistency(&self, i: usize) -> f64 {
        let want = &self.a_r * &self.hw[i] * self.a_t.adjoint();
        let denom = fro_norm(&want).max(f64::MIN_POSITIVE);
        fro_norm(&(&self.h[i] - &want)) / denom
    }
}
