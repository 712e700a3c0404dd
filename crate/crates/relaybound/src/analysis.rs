//! Numeric comparisons between fronts, bounds, and estimates.

/// Smallest analytic capacity at which a counting simulation of the default
/// frame budget says anything about relative accuracy. Below roughly ten
/// expected deliveries per run the relative error of the estimate is order
/// one no matter how exact the model is, so model-versus-simulation error
/// reports exclude (and count) entries under this floor.
pub const SIM_COMPARE_CAPACITY_FLOOR: f64 = 1e-3;

/// Relative root-mean-square error between reference values and estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmseReport {
    /// `(1/N) * sqrt(sum(((ref - est) / ref)^2))` over the compared entries.
    pub rmse: f64,
    pub compared: usize,
    /// Entries whose reference value is zero cannot be compared relatively
    /// and are left out (and counted here).
    pub skipped_zero_reference: usize,
}

/// Computes the relative RMSE of `estimates` against `reference`, pairwise.
pub fn relative_rmse(reference: &[f64], estimates: &[f64]) -> RmseReport {
    assert_eq!(reference.len(), estimates.len());
    let mut sum = 0.0;
    let mut compared = 0usize;
    let mut skipped = 0usize;
    for (&f, &e) in reference.iter().zip(estimates) {
        if f == 0.0 {
            skipped += 1;
            continue;
        }
        let rel = (f - e) / f;
        sum += rel * rel;
        compared += 1;
    }
    let rmse = if compared > 0 { sum.sqrt() / compared as f64 } else { 0.0 };
    RmseReport { rmse, compared, skipped_zero_reference: skipped }
}

/// Generational distance from `candidate` to `reference`:
/// `(1/|candidate|) * sqrt(sum of squared nearest-neighbor distances)`.
/// `None` if either set is empty.
pub fn generational_distance(candidate: &[[f64; 2]], reference: &[[f64; 2]]) -> Option<f64> {
    if candidate.is_empty() || reference.is_empty() {
        return None;
    }
    let sum: f64 = candidate
        .iter()
        .map(|c| {
            reference
                .iter()
                .map(|r| (c[0] - r[0]).powi(2) + (c[1] - r[1]).powi(2))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Some(sum.sqrt() / candidate.len() as f64)
}

/// True if every point of `dominated` has a point of `dominator` that is at
/// least as good on both (minimized) axes, up to `tol`. A tolerance around
/// 1e-12 checks exact relations; fronts sampled by independent optimizer runs
/// need a coarser one to absorb their sampling error.
pub fn weakly_dominates_set(dominator: &[[f64; 2]], dominated: &[[f64; 2]], tol: f64) -> bool {
    dominated.iter().all(|y| {
        dominator
            .iter()
            .any(|x| x[0] <= y[0] + tol && x[1] <= y[1] + tol)
    })
}
