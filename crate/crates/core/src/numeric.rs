//! Complex dense-matrix primitives shared by the whole pipeline: unitary DFT
//! construction, minimum-norm least squares, orthogonal projection onto a
//! column subset, and Frobenius/spectral norms.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense complex matrix used throughout (channels, pilots, measurements).
pub type CMat = DMatrix<Complex64>;

/// Relative singular-value cutoff for numerical rank decisions.
/// Directions with singular value below `RANK_EPS_REL * sigma_max` are
/// zeroed, which yields the minimum-norm solution for rank-deficient systems.
pub const RANK_EPS_REL: f64 = 1e-10;

/// Iteration cap for the SVD before reporting a convergence failure.
pub const SVD_MAX_ITERS: usize = 10_000;

/// A strictly increasing, duplicate-free set of row/column indices.
///
/// Indices are 0-based everywhere in the library; 1-based numbering appears
/// only in human-readable output.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IndexSet {
    indices: Vec<usize>,
}

impl IndexSet {
    pub fn empty() -> Self {
        Self { indices: Vec::new() }
    }

    /// Builds an index set, sorting and validating the input against `dim`.
    pub fn new(mut indices: Vec<usize>, dim: usize) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if let Some(&max) = indices.last() {
            if max >= dim {
                return Err(Error::InvalidConfig(format!(
                    "index {max} out of range for dimension {dim}"
                )));
            }
        }
        Ok(Self { indices })
    }

    /// Builds from a slice known to be sorted and in range (checked in debug).
    pub fn from_sorted_unchecked(indices: Vec<usize>) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        Self { indices }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.indices.binary_search(&idx).is_ok()
    }

    /// Inserts an index, keeping the set sorted. Returns false if present.
    pub fn insert(&mut self, idx: usize) -> bool {
        match self.indices.binary_search(&idx) {
            Ok(_) => false,
            Err(pos) => {
                self.indices.insert(pos, idx);
                true
            }
        }
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.indices.iter()
    }

    pub fn is_subset_of(&self, other: &IndexSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    pub fn union(&self, other: &IndexSet) -> IndexSet {
        let mut v = self.indices.clone();
        v.extend_from_slice(&other.indices);
        v.sort_unstable();
        v.dedup();
        IndexSet { indices: v }
    }

    pub fn intersection(&self, other: &IndexSet) -> IndexSet {
        let indices = self
            .indices
            .iter()
            .copied()
            .filter(|&i| other.contains(i))
            .collect();
        IndexSet { indices }
    }
}

impl FromIterator<usize> for IndexSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Self { indices: v }
    }
}

/// Unitary n-point DFT matrix: `U[p][q] = exp(-2*pi*i*p*q/n) / sqrt(n)`.
pub fn dft_unitary(n: usize) -> CMat {
    assert!(n >= 1, "dft_unitary requires n >= 1");
    let scale = 1.0 / (n as f64).sqrt();
    CMat::from_fn(n, n, |p, q| {
        let angle = -2.0 * std::f64::consts::PI * (p as f64) * (q as f64) / (n as f64);
        Complex64::from_polar(scale, angle)
    })
}

/// Sub-matrix formed from the columns of `a` whose indices are in `omega`.
pub fn columns(a: &CMat, omega: &IndexSet) -> CMat {
    let mut out = CMat::zeros(a.nrows(), omega.len());
    for (k, &j) in omega.iter().enumerate() {
        out.set_column(k, &a.column(j));
    }
    out
}

fn check_finite(m: &CMat, what: &str) -> Result<()> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::NumericalFailure(format!("{what} produced non-finite entries")))
    }
}

/// Minimum-Frobenius-norm minimizer of `||B - A Z||_F`.
///
/// Uses a rank-revealing SVD with relative cutoff [`RANK_EPS_REL`], so
/// rank-deficient and underdetermined systems get the min-norm solution.
pub fn ls_solve(a: &CMat, b: &CMat) -> Result<CMat> {
    if a.nrows() != b.nrows() {
        return Err(Error::InvalidConfig(format!(
            "ls_solve: row mismatch {} vs {}",
            a.nrows(),
            b.nrows()
        )));
    }
    let svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let sigma_max = svd.singular_values.max();
    let eps = RANK_EPS_REL * sigma_max.max(f64::MIN_POSITIVE);
    let z = svd
        .solve(b, eps)
        .map_err(|e| Error::NumericalFailure(e.to_string()))?;
    check_finite(&z, "ls_solve")?;
    Ok(z)
}

/// Orthogonal projector onto the column span of `xbar` restricted to `omega`:
/// `P = Xbar_omega (Xbar_omega)^dagger`, built as `U_r U_r^H` from the SVD.
pub fn projection(xbar: &CMat, omega: &IndexSet) -> Result<CMat> {
    if omega.is_empty() {
        return Err(Error::InvalidConfig("projection: empty index set".into()));
    }
    if let Some(&max) = omega.as_slice().last() {
        if max >= xbar.ncols() {
            return Err(Error::InvalidConfig(format!(
                "projection: index {max} out of range for {} columns",
                xbar.ncols()
            )));
        }
    }
    let sub = columns(xbar, omega);
    let svd = sub
        .clone()
        .try_svd(true, false, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::NumericalFailure("SVD missing U".into()))?;
    let sigma_max = svd.singular_values.max();
    let eps = RANK_EPS_REL * sigma_max.max(f64::MIN_POSITIVE);
    let rank = svd.singular_values.iter().filter(|&&s| s > eps).count();
    if rank == 0 {
        return Err(Error::NumericalFailure("projection: zero-rank column subset".into()));
    }
    let ur = u.columns(0, rank);
    let p = &ur * ur.adjoint();
    check_finite(&p, "projection")?;
    Ok(p)
}

/// Frobenius and spectral norms of a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub frobenius: f64,
    pub spectral: f64,
}

pub fn norms(a: &CMat) -> Result<Norms> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::InvalidConfig("norms: empty matrix".into()));
    }
    let frobenius = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let sv = a
        .clone()
        .try_svd(false, false, f64::EPSILON, SVD_MAX_ITERS)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?
        .singular_values;
    Ok(Norms {
        frobenius,
        spectral: sv.max(),
    })
}

/// Squared Frobenius norm, the residual-energy quantity used by the greedy
/// stopping rules.
pub fn fro_norm_sqr(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn fro_norm(a: &CMat) -> f64 {
    fro_norm_sqr(a).sqrt()
}

/// A complex matrix stored as separate real and imaginary parts, so that
/// products can run through the SIMD-optimized real-matrix kernels.
#[derive(Debug, Clone)]
pub struct SplitMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl SplitMat {
    pub fn from_cmat(a: &CMat) -> Self {
        SplitMat {
            re: a.map(|z| z.re),
            im: a.map(|z| z.im),
        }
    }

    /// `self * b` evaluated as four real matrix products.
    pub fn mul(&self, b: &SplitMat) -> CMat {
        let re = &self.re * &b.re - &self.im * &b.im;
        let im = &self.re * &b.im + &self.im * &b.re;
        CMat::from_fn(re.nrows(), re.ncols(), |r, c| {
            Complex64::new(re[(r, c)], im[(r, c)])
        })
    }
}
