//! Downlink pilot generation, noisy observation, and the transformation
//! into sparse-recovery coordinates.
//!
//! Pilots are built on the transmit DFT basis: `X = A_T Xa` with `Xa`
//! having i.i.d. `+-sqrt(P/M)` entries, so `trace(X X^H) = P T`. The
//! recovery-domain quantities are
//!   `Ybar_i = sqrt(M/(P T)) Y_i^H A_R`,
//!   `Xbar   = sqrt(M/(P T)) X^H A_T = sqrt(M/(P T)) Xa^H`,
//! where the second equality uses unitarity of `A_T`. Columns of `Xbar`
//! have entries `+-1/sqrt(T)` and unit norm, and the transformed noise has
//! per-entry variance `M/(P T)` when the physical noise is CN(0,1).

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numeric::CMat;

/// Pilot block over `T` symbol times for `M` transmit antennas.
#[derive(Debug, Clone)]
pub struct PilotBlock {
    /// M x T physical pilot matrix `X = A_T Xa`.
    pub x: CMat,
    /// T x M recovery-domain sensing matrix, entries `+-1/sqrt(T)`.
    pub xbar: CMat,
    pub power: f64,
    pub m: usize,
    pub t: usize,
}

/// Draws a Rademacher pilot block with total power `P` spread over `M`
/// antennas and `T` symbols.
pub fn generate_pilots(m: usize, t: usize, power: f64, rng: &mut ChaCha8Rng) -> Result<PilotBlock> {
    if m == 0 || t == 0 {
        return Err(Error::InvalidConfig("M and T must be >= 1".into()));
    }
    if power <= 0.0 {
        return Err(Error::InvalidConfig(format!("power={power} must be positive")));
    }
    let amp = (power / m as f64).sqrt();
    let mut xa = CMat::zeros(m, t);
    for r in 0..m {
        for c in 0..t {
            let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
            xa[(r, c)] = Complex64::new(sign * amp, 0.0);
        }
    }
    let a_t = crate::numeric::dft_unitary(m);
    let x = &a_t * &xa;
    // Xbar = sqrt(M/(P T)) Xa^H
    let scale = (m as f64 / (power * t as f64)).sqrt();
    let xbar = xa.adjoint().map(|v| v * scale);
    Ok(PilotBlock { x, xbar, power, m, t })
}

/// One user's received block and its recovery-domain image.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    /// Per-user N x T received blocks `Y_i = H_i X + Z_i`.
    pub y: Vec<CMat>,
    /// Per-user T x N transformed blocks `Ybar_i = sqrt(M/(P T)) Y_i^H A_R`.
    pub ybar: Vec<CMat>,
    /// Per-entry variance of the transformed noise (`M/(P T)`, or 0 when
    /// observation was noiseless).
    pub noise_var_bar: f64,
}

/// Forms `Y_i = H_i X (+ Z_i)` for every user and transforms into recovery
/// coordinates. Physical noise is CN(0,1) per entry unless `noiseless`.
pub fn observe(
    channels: &[CMat],
    pilots: &PilotBlock,
    a_r: &CMat,
    noiseless: bool,
    rng: &mut ChaCha8Rng,
) -> Result<MeasurementSet> {
    if channels.is_empty() {
        return Err(Error::InvalidConfig("no channels to observe".into()));
    }
    let gauss = Normal::new(0.0, (0.5f64).sqrt()).expect("valid stddev");
    let scale = (pilots.m as f64 / (pilots.power * pilots.t as f64)).sqrt();
    let mut y = Vec::with_capacity(channels.len());
    let mut ybar = Vec::with_capacity(channels.len());
    for h in channels {
        if h.ncols() != pilots.m {
            return Err(Error::InvalidConfig(format!(
                "channel has {} columns, pilots expect {}",
                h.ncols(),
                pilots.m
            )));
        }
        let mut yi = h * &pilots.x;
        if !noiseless {
            for v in yi.iter_mut() {
                *v += Complex64::new(gauss.sample(rng), gauss.sample(rng));
            }
        }
        let yb = yi.adjoint().map(|v| v * scale) * a_r;
        y.push(yi);
        ybar.push(yb);
    }
    let noise_var_bar = if noiseless {
        0.0
    } else {
        pilots.m as f64 / (pilots.power * pilots.t as f64)
    };
    Ok(MeasurementSet { y, ybar, noise_var_bar })
}
