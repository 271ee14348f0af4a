//! Sparse channel recovery in the transformed coordinates.
//!
//! All routines work on the model `Ybar_i = Xbar Hbar_i + noise` with
//! `Ybar_i` of size T x N, `Xbar` of size T x M, and row-sparse `Hbar_i`
//! (M x N). The joint algorithm first identifies support indices shared
//! across users by voting, then extends each user's support greedily, and
//! finally refits by least squares on the estimated support.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{fro_norm, fro_norm_sqr, ls_solve, CMat, IndexSet, RANK_EPS_REL, SVD_MAX_ITERS};

/// Parameters of the joint recovery algorithm.
///
/// `eta1 in (0,1)` is the pruning threshold for vote candidates; `eta2 > 1`
/// scales the residual-energy stopping level `eta2 * N * M / P` used during
/// the per-user extension phase. `power` is the total pilot power P.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JompConfig {
    pub s_c: usize,
    pub s: usize,
    pub eta1: f64,
    pub eta2: f64,
    pub power: f64,
}

impl JompConfig {
    pub fn validate(&self) -> Result<()> {
        if self.s_c > self.s {
            return Err(Error::InvalidConfig(format!(
                "s_c={} exceeds s={}",
                self.s_c, self.s
            )));
        }
        if !(0.0 < self.eta1 && self.eta1 < 1.0) {
            return Err(Error::InvalidConfig(format!("eta1={} not in (0,1)", self.eta1)));
        }
        if self.eta2 <= 1.0 {
            return Err(Error::InvalidConfig(format!("eta2={} must exceed 1", self.eta2)));
        }
        if self.power <= 0.0 {
            return Err(Error::InvalidConfig("power must be positive".into()));
        }
        Ok(())
    }

    /// Residual-energy level below which a user's extension stops.
    pub fn stop_energy(&self, n: usize, m: usize) -> f64 {
        self.eta2 * n as f64 * m as f64 / self.power
    }
}

/// Recovered row-sparse estimates and the supports they live on.
#[derive(Debug, Clone)]
pub struct RecoveryReport {
    /// Per-user M x N estimates, zero outside the estimated support rows.
    pub hbar: Vec<CMat>,
    /// Estimated common support (empty for per-user baselines).
    pub common: IndexSet,
    /// Per-user estimated supports.
    pub individual: Vec<IndexSet>,
}

/// Per-iteration record of one greedy extension run.
#[derive(Debug, Clone, Default)]
pub struct GreedyTrace {
    /// Indices in selection order.
    pub selections: Vec<usize>,
    /// Residual Frobenius norm before any selection, then after each one.
    pub residual_norms: Vec<f64>,
}

/// Diagnostic trace of a full joint-recovery run.
#[derive(Debug, Clone, Default)]
pub struct JompTrace {
    /// Common-support indices in selection order.
    pub common_selections: Vec<usize>,
    /// Per common-iteration residual norm of every user (after the
    /// projection update), preceded by the initial norms.
    pub common_residual_norms: Vec<Vec<f64>>,
    /// Per-user extension traces.
    pub extension: Vec<GreedyTrace>,
    /// Final residuals `Ybar_i - Xbar_{Omega_i} coef` before the refit.
    pub final_residuals: Vec<CMat>,
}

/// Normal-equations least squares over a growing column subset.
///
/// Keeps the Gram submatrix and the full Gram columns of the selected
/// indices, so adding an index costs one dictionary correlation (M x T)
/// and re-solving costs a small |Omega|-sized factorization instead of a
/// fresh decomposition of the column block.
#[derive(Debug, Clone)]
struct GramFit {
    /// Selected indices in insertion order.
    order: Vec<usize>,
    /// M x |order| block of full Gram columns `Xbar^H xbar_j`.
    gcols: CMat,
    /// |order| x |order| Gram submatrix.
    g: CMat,
}

impl GramFit {
    fn empty(m: usize) -> Self {
        GramFit { order: Vec::new(), gcols: CMat::zeros(m, 0), g: CMat::zeros(0, 0) }
    }

    fn from_support(xbar: &CMat, support: &IndexSet) -> Self {
        let mut fit = GramFit::empty(xbar.ncols());
        for &j in support.iter() {
            fit.push(xbar, j);
        }
        fit
    }

    fn push(&mut self, xbar: &CMat, j: usize) {
        let col = xbar.adjoint() * CMat::from_columns(&[xbar.column(j).clone_owned()]);
        let l = self.order.len();
        let mut g = CMat::zeros(l + 1, l + 1);
        g.view_mut((0, 0), (l, l)).copy_from(&self.g);
        for (a, &ja) in self.order.iter().enumerate() {
            g[(a, l)] = col[ja];
            g[(l, a)] = col[ja].conj();
        }
        g[(l, l)] = col[j];
        let mut gcols = CMat::zeros(xbar.ncols(), l + 1);
        gcols.view_mut((0, 0), (xbar.ncols(), l)).copy_from(&self.gcols);
        gcols.set_column(l, &col.column(0));
        self.order.push(j);
        self.g = g;
        self.gcols = gcols;
    }

    /// Rows of `corr` at the selected indices, in insertion order.
    fn corr_rows(&self, corr: &CMat) -> CMat {
        let n = corr.ncols();
        let mut out = CMat::zeros(self.order.len(), n);
        for (a, &j) in self.order.iter().enumerate() {
            for c in 0..n {
                out[(a, c)] = corr[(j, c)];
            }
        }
        out
    }

    /// Coefficients solving the normal equations for the right-hand side
    /// `corr = Xbar^H ybar`; Cholesky with an SVD fallback for
    /// rank-deficient subsets.
    fn solve(&self, c_om: &CMat) -> Result<CMat> {
        if let Some(chol) = nalgebra::linalg::Cholesky::new(self.g.clone()) {
            return Ok(chol.solve(c_om));
        }
        let svd = self
            .g
            .clone()
            .try_svd(true, true, f64::EPSILON, SVD_MAX_ITERS)
            .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
        let tol = RANK_EPS_REL * svd.singular_values.max();
        svd.pseudo_inverse(tol)
            .map(|pinv| pinv * c_om)
            .map_err(|e| Error::NumericalFailure(e.to_string()))
    }

    /// Least-squares residual `ybar - Xbar_order coef` for the current
    /// subset, with the coefficients from the normal equations.
    fn lsq_residual(&self, ybar: &CMat, xbar: &CMat, corr: &CMat) -> Result<CMat> {
        if self.order.is_empty() {
            return Ok(ybar.clone());
        }
        let coef = self.solve(&self.corr_rows(corr))?;
        let mut resid = ybar.clone();
        for (a, &j) in self.order.iter().enumerate() {
            for c in 0..ybar.ncols() {
                for r in 0..ybar.nrows() {
                    resid[(r, c)] -= xbar[(r, j)] * coef[(a, c)];
                }
            }
        }
        Ok(resid)
    }
}

/// Per-row match scores `||Xbar(j)^H R||_F` from the residual correlation.
fn row_scores(z: &CMat) -> Vec<f64> {
    (0..z.nrows())
        .map(|j| z.row(j).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect()
}

/// Greedy column selection: starting from `support`, repeatedly add the
/// unselected column best matching the current residual, for at most
/// `max_extra` additions or until the residual energy drops to
/// `stop_energy`. Returns the grown support, the final residual, and a
/// trace of the run.
fn greedy_extend(
    ybar: &CMat,
    xbar: &CMat,
    support: IndexSet,
    max_extra: usize,
    stop_energy: f64,
) -> Result<(IndexSet, CMat, GreedyTrace)> {
    let corr = xbar.adjoint() * ybar;
    let fit = GramFit::from_support(xbar, &support);
    greedy_extend_from(ybar, xbar, &corr, support, fit, max_extra, stop_energy)
}

/// Greedy extension continuing from a prepared Gram state.
fn greedy_extend_from(
    ybar: &CMat,
    xbar: &CMat,
    corr: &CMat,
    support: IndexSet,
    mut fit: GramFit,
    max_extra: usize,
    stop_energy: f64,
) -> Result<(IndexSet, CMat, GreedyTrace)> {
    let m = xbar.ncols();
    let mut omega = support;
    let mut resid = fit.lsq_residual(ybar, xbar, corr)?;
    let mut res_sqr = fro_norm_sqr(&resid);
    let mut trace = GreedyTrace::default();
    trace.residual_norms.push(res_sqr.sqrt());
    for _ in 0..max_extra {
        if res_sqr <= stop_energy || omega.len() >= m {
            break;
        }
        let z = xbar.adjoint() * &resid;
        let scores = row_scores(&z);
        let mut best: Option<(usize, f64)> = None;
        for (j, &sc) in scores.iter().enumerate() {
            if omega.contains(j) {
                continue;
            }
            match best {
                Some((_, b)) if sc <= b => {}
                _ => best = Some((j, sc)),
            }
        }
        let (j, _) = best.expect("support smaller than M leaves candidates");
        omega.insert(j);
        fit.push(xbar, j);
        resid = fit.lsq_residual(ybar, xbar, corr)?;
        res_sqr = fro_norm_sqr(&resid);
        trace.selections.push(j);
        trace.residual_norms.push(res_sqr.sqrt());
    }
    Ok((omega, resid, trace))
}

/// Least-squares refit on a fixed support, scattered back to M x N.
fn refit(ybar: &CMat, xbar: &CMat, omega: &IndexSet) -> Result<CMat> {
    let m = xbar.ncols();
    let n = ybar.ncols();
    let mut out = CMat::zeros(m, n);
    if omega.is_empty() {
        return Ok(out);
    }
    let fit = GramFit::from_support(xbar, omega);
    let corr = xbar.adjoint() * ybar;
    let coef = fit.solve(&fit.corr_rows(&corr))?;
    for (row, &j) in fit.order.iter().enumerate() {
        for c in 0..n {
            out[(j, c)] = coef[(row, c)];
        }
    }
    Ok(out)
}

fn check_shapes(ybars: &[CMat], xbar: &CMat) -> Result<(usize, usize, usize)> {
    if ybars.is_empty() {
        return Err(Error::InvalidConfig("no measurements".into()));
    }
    let t = xbar.nrows();
    let m = xbar.ncols();
    let n = ybars[0].ncols();
    for y in ybars {
        if y.nrows() != t || y.ncols() != n {
            return Err(Error::InvalidConfig(format!(
                "measurement block is {}x{}, expected {}x{}",
                y.nrows(),
                y.ncols(),
                t,
                n
            )));
        }
    }
    Ok((t, m, n))
}

/// Joint recovery: cross-user voting for the common support, per-user
/// greedy extension, least-squares refit.
pub fn jomp(ybars: &[CMat], xbar: &CMat, cfg: &JompConfig) -> Result<RecoveryReport> {
    jomp_traced(ybars, xbar, cfg).map(|(r, _)| r)
}

/// Same as [`jomp`] but also returns a per-iteration trace for
/// invariant checking.
pub fn jomp_traced(
    ybars: &[CMat],
    xbar: &CMat,
    cfg: &JompConfig,
) -> Result<(RecoveryReport, JompTrace)> {
    cfg.validate()?;
    let (_t, m, n) = check_shapes(ybars, xbar)?;
    let k = ybars.len();
    let stop_energy = cfg.stop_energy(n, m);

    let mut trace = JompTrace::default();
    let mut omega_c = IndexSet::empty();
    let corrs: Vec<CMat> = ybars.iter().map(|y| xbar.adjoint() * y).collect();
    let mut fit = GramFit::empty(m);
    let mut residuals: Vec<CMat> = ybars.to_vec();
    trace
        .common_residual_norms
        .push(residuals.iter().map(fro_norm).collect());

    for _round in 0..cfg.s_c {
        if omega_c.len() >= m {
            break;
        }
        // per-user candidate sets: top (s - |omega_c|) matches, pruned by
        // the per-index energy threshold eta1 * N
        let mut votes = vec![0usize; m];
        let mut vote_weight = vec![0.0f64; m];
        let keep = cfg.s.saturating_sub(omega_c.len());
        if keep == 0 {
            break;
        }
        for resid in &residuals {
            let z = xbar.adjoint() * resid;
            let scores = row_scores(&z);
            let mut cand: Vec<(usize, f64)> = scores
                .iter()
                .enumerate()
                .filter(|(j, _)| !omega_c.contains(*j))
                .map(|(j, &s)| (j, s))
                .collect();
            cand.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            for &(j, sc) in cand.iter().take(keep) {
                if sc * sc >= cfg.eta1 * n as f64 {
                    votes[j] += 1;
                    vote_weight[j] += sc * sc;
                }
            }
        }
        // winner: most votes, then largest accumulated energy, then lowest
        // index; no votes at all ends the common phase
        let mut winner: Option<usize> = None;
        for j in 0..m {
            if votes[j] == 0 {
                continue;
            }
            winner = match winner {
                None => Some(j),
                Some(w) => {
                    if votes[j] > votes[w]
                        || (votes[j] == votes[w] && vote_weight[j] > vote_weight[w])
                    {
                        Some(j)
                    } else {
                        Some(w)
                    }
                }
            };
        }
        let Some(j) = winner else { break };
        omega_c.insert(j);
        fit.push(xbar, j);
        trace.common_selections.push(j);
        for (i, y) in ybars.iter().enumerate() {
            residuals[i] = fit.lsq_residual(y, xbar, &corrs[i])?;
        }
        trace
            .common_residual_norms
            .push(residuals.iter().map(fro_norm).collect());
    }

    let mut hbar = Vec::with_capacity(k);
    let mut individual = Vec::with_capacity(k);
    for (i, y) in ybars.iter().enumerate() {
        let max_extra = cfg.s.saturating_sub(omega_c.len());
        let (omega, resid, gtrace) = greedy_extend_from(
            y,
            xbar,
            &corrs[i],
            omega_c.clone(),
            fit.clone(),
            max_extra,
            stop_energy,
        )?;
        hbar.push(refit(y, xbar, &omega)?);
        individual.push(omega);
        trace.extension.push(gtrace);
        trace.final_residuals.push(resid);
    }
    Ok((
        RecoveryReport { hbar, common: omega_c, individual },
        trace,
    ))
}

/// Per-user simultaneous greedy recovery (no cross-user information).
/// Each user runs the same greedy extension as the joint algorithm but
/// from an empty support, treating the N residual columns as one block.
pub fn somp(ybars: &[CMat], xbar: &CMat, cfg: &JompConfig) -> Result<RecoveryReport> {
    cfg.validate()?;
    let (_t, m, n) = check_shapes(ybars, xbar)?;
    let stop_energy = cfg.stop_energy(n, m);
    let mut hbar = Vec::with_capacity(ybars.len());
    let mut individual = Vec::with_capacity(ybars.len());
    for y in ybars {
        let (omega, _resid, _trace) =
            greedy_extend(y, xbar, IndexSet::empty(), cfg.s, stop_energy)?;
        hbar.push(refit(y, xbar, &omega)?);
        individual.push(omega);
    }
    Ok(RecoveryReport { hbar, common: IndexSet::empty(), individual })
}

/// Column-by-column greedy recovery: each of the N receive dimensions is
/// solved as an independent single-vector problem (with a proportional
/// share of the stopping energy), then the supports are unioned and the
/// block refit jointly.
pub fn omp(ybars: &[CMat], xbar: &CMat, cfg: &JompConfig) -> Result<RecoveryReport> {
    cfg.validate()?;
    let (_t, m, n) = check_shapes(ybars, xbar)?;
    let stop_energy = cfg.stop_energy(n, m) / n as f64;
    let mut hbar = Vec::with_capacity(ybars.len());
    let mut individual = Vec::with_capacity(ybars.len());
    for y in ybars {
        let mut omega = IndexSet::empty();
        for c in 0..n {
            let col = CMat::from_columns(&[y.column(c).clone_owned()]);
            let (om, _resid, _trace) =
                greedy_extend(&col, xbar, IndexSet::empty(), cfg.s, stop_energy)?;
            omega = omega.union(&om);
        }
        hbar.push(refit(y, xbar, &omega)?);
        individual.push(omega);
    }
    Ok(RecoveryReport { hbar, common: IndexSet::empty(), individual })
}

/// Plain least squares on the full dictionary (minimum-norm when T < M).
pub fn ls_full(ybars: &[CMat], xbar: &CMat) -> Result<RecoveryReport> {
    let (_t, m, _n) = check_shapes(ybars, xbar)?;
    let full = IndexSet::new((0..m).collect(), m)?;
    let hbar = ybars
        .iter()
        .map(|y| ls_solve(xbar, y))
        .collect::<Result<Vec<_>>>()?;
    let individual = vec![full.clone(); ybars.len()];
    Ok(RecoveryReport { hbar, common: full, individual })
}

/// Least squares on the true supports (performance ceiling).
pub fn genie_ls(ybars: &[CMat], xbar: &CMat, supports: &[IndexSet]) -> Result<RecoveryReport> {
    check_shapes(ybars, xbar)?;
    if supports.len() != ybars.len() {
        return Err(Error::InvalidConfig("one support per user required".into()));
    }
    let mut common = supports[0].clone();
    for s in &supports[1..] {
        common = common.intersection(s);
    }
    let hbar = ybars
        .iter()
        .zip(supports.iter())
        .map(|(y, om)| refit(y, xbar, om))
        .collect::<Result<Vec<_>>>()?;
    Ok(RecoveryReport { hbar, common, individual: supports.to_vec() })
}

/// Maps a transformed-domain estimate back to the antenna domain:
/// `H = A_R Hbar^H A_T^H`.
pub fn to_antenna(hbar: &CMat, a_r: &CMat, a_t: &CMat) -> CMat {
    a_r * hbar.adjoint() * a_t.adjoint()
}
