use statrs::distribution::{Continuous, ContinuousCDF, Normal};

/// Closed-form expected improvement for maximisation.
///
/// With `z = (mean - best - xi) / std`,
/// `EI = (mean - best - xi) · Φ(z) + std · φ(z)`; zero when `std == 0`.
pub fn expected_improvement(mean: f64, std: f64, best: f64, xi: f64) -> f64 {
    if !(std > 0.0) {
        return 0.0;
    }
    let unit = Normal::standard();
    let gap = mean - best - xi;
    let z = gap / std;
    (gap * unit.cdf(z) + std * unit.pdf(z)).max(0.0)
}
