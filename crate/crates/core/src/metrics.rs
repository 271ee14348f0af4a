//! Estimation-quality metrics and support-detection events.

use serde::{Deserialize, Serialize};

use crate::numeric::{fro_norm, CMat, IndexSet};

/// `||H - H_e||_F^2 / ||H||_F^2`.
pub fn nmse(truth: &CMat, estimate: &CMat) -> f64 {
    let denom = fro_norm(truth).powi(2);
    if denom == 0.0 {
        return f64::INFINITY;
    }
    fro_norm(&(truth - estimate)).powi(2) / denom
}

/// `||H - H_e||_F / ||H||_F`.
pub fn nmae(truth: &CMat, estimate: &CMat) -> f64 {
    let denom = fro_norm(truth);
    if denom == 0.0 {
        return f64::INFINITY;
    }
    fro_norm(&(truth - estimate)) / denom
}

/// Support detection outcomes for one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvents {
    /// The estimated common support only contains true common indices
    /// (empty estimates count as success).
    pub theta_c: bool,
    /// Per-user exact support recovery.
    pub theta_i: Vec<bool>,
}

impl DetectionEvents {
    pub fn individual_rate(&self) -> f64 {
        if self.theta_i.is_empty() {
            return 0.0;
        }
        self.theta_i.iter().filter(|&&b| b).count() as f64 / self.theta_i.len() as f64
    }
}

/// Compares recovered supports against the truth: the common event asks
/// that no wrong index entered the shared support (`est_c` a subset of the
/// true common set), the individual event asks for exact equality.
pub fn detect_events(
    true_common: &IndexSet,
    true_individual: &[IndexSet],
    est_common: &IndexSet,
    est_individual: &[IndexSet],
) -> DetectionEvents {
    let theta_c = est_common.is_subset_of(true_common);
    let theta_i = true_individual
        .iter()
        .zip(est_individual.iter())
        .map(|(t, e)| t == e)
        .collect();
    DetectionEvents { theta_c, theta_i }
}

/// Everything one algorithm produced on one Monte Carlo trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialMetrics {
    /// Per-user squared error ratios.
    pub nmse: Vec<f64>,
    /// Per-user unsquared error ratios.
    pub nmae: Vec<f64>,
    pub events: DetectionEvents,
    /// Wall time divided by the number of users.
    pub time_per_user_s: f64,
}

/// Mean and standard error of a sample.
pub fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn nmse_and_nmae_closed_forms() {
        let truth = CMat::from_row_slice(
            1,
            2,
            &[Complex64::new(3.0, 0.0), Complex64::new(4.0, 0.0)],
        );
        let est = CMat::from_row_slice(
            1,
            2,
            &[Complex64::new(3.0, 0.0), Complex64::new(4.0, 3.0)],
        );
        // ||diff|| = 3, ||truth|| = 5
        assert!((nmse(&truth, &est) - 9.0 / 25.0).abs() < 1e-15);
        assert!((nmae(&truth, &est) - 3.0 / 5.0).abs() < 1e-15);
        assert_eq!(nmse(&truth, &truth), 0.0);
    }

    #[test]
    fn zero_truth_is_infinite() {
        let z = CMat::zeros(2, 2);
        let e = CMat::from_element(2, 2, Complex64::new(1.0, 0.0));
        assert!(nmse(&z, &e).is_infinite());
        assert!(nmae(&z, &e).is_infinite());
    }

    #[test]
    fn detection_events_follow_definitions() {
        let tc = IndexSet::new(vec![1, 2], 8).unwrap();
        let ti = vec![
            IndexSet::new(vec![1, 2, 3], 8).unwrap(),
            IndexSet::new(vec![1, 2, 5], 8).unwrap(),
        ];
        // subset of the true common support: success even if incomplete
        let ec = IndexSet::new(vec![1], 8).unwrap();
        let ei = vec![
            IndexSet::new(vec![1, 2, 3], 8).unwrap(), // exact
            IndexSet::new(vec![1, 2], 8).unwrap(),    // strict subset: fails
        ];
        let ev = detect_events(&tc, &ti, &ec, &ei);
        assert!(ev.theta_c);
        assert_eq!(ev.theta_i, vec![true, false]);
        assert!((ev.individual_rate() - 0.5).abs() < 1e-15);

        // a wrong index in the common estimate fails the common event
        let bad_ec = IndexSet::new(vec![1, 4], 8).unwrap();
        assert!(!detect_events(&tc, &ti, &bad_ec, &ei).theta_c);
        // the empty estimate is vacuously correct
        assert!(detect_events(&tc, &ti, &IndexSet::empty(), &ei).theta_c);
    }

    #[test]
    fn mean_stderr_known_values() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        // sample var = 5/3, stderr = sqrt(5/12)
        assert!((s - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
        let (m1, s1) = mean_stderr(&[7.0]);
        assert_eq!((m1, s1), (7.0, 0.0));
    }
}
