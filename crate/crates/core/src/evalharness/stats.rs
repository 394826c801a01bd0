use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{contract, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// Number of pairs `(a, b)` with `a < b`, ties counting one half.
    pub u: f64,
    /// Two-sided p-value from the normal approximation.
    pub p: f64,
}

/// Mann-Whitney U test of `a` against `b`.
///
/// `U` is computed from mid-ranks of the pooled sample. The p-value uses the
/// tie-corrected variance and a continuity correction of 1/2; when every
/// value is tied the variance vanishes and `p = 1`.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(contract("Mann-Whitney U needs two non-empty samples"));
    }
    if a.iter().chain(b).any(|v| v.is_nan()) {
        return Err(contract("Mann-Whitney U got a NaN"));
    }
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let mut pooled: Vec<(f64, bool)> = a.iter().map(|&v| (v, false)).chain(b.iter().map(|&v| (v, true))).collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let n = pooled.len();
    let mut rank_sum_b = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pooled[j + 1].0 == pooled[i].0 {
            j += 1;
        }
        // ranks i+1 ..= j+1 share their average
        let rank = (i + j + 2) as f64 / 2.0;
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        rank_sum_b += rank * pooled[i..=j].iter().filter(|p| p.1).count() as f64;
        i = j + 1;
    }
    let u = rank_sum_b - n2 * (n2 + 1.0) / 2.0;

    let nf = n as f64;
    let mu = n1 * n2 / 2.0;
    let var = n1 * n2 / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if !(var > 0.0) {
        return Ok(MannWhitney { u, p: 1.0 });
    }
    let z = ((u - mu).abs() - 0.5).max(0.0) / var.sqrt();
    let p = (2.0 * Normal::standard().sf(z)).min(1.0);
    Ok(MannWhitney { u, p })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn pair_count(a: &[f64], b: &[f64]) -> f64 {
        let mut u = 0.0;
        for x in a {
            for y in b {
                if x < y {
                    u += 1.0;
                } else if x == y {
                    u += 0.5;
                }
            }
        }
        u
    }

    #[test]
    fn small_example() {
        let r = mann_whitney_u(&[1.0, 2.0, 4.0], &[3.0, 5.0]).unwrap();
        assert_eq!(r.u, 5.0);
    }

    #[test]
    fn identical_and_separated_samples() {
        let a = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(mann_whitney_u(&a, &a).unwrap().u, 8.0);
        assert_eq!(mann_whitney_u(&a, &a).unwrap().p, 1.0);
        let b = [10.0, 11.0, 12.0];
        assert_eq!(mann_whitney_u(&a, &b).unwrap().u, 12.0);
        assert_eq!(mann_whitney_u(&b, &a).unwrap().u, 0.0);
        assert!(mann_whitney_u(&a, &b).unwrap().p < 0.1);
    }

    #[test]
    fn all_tied_gives_p_one() {
        let r = mann_whitney_u(&[2.0; 5], &[2.0; 7]).unwrap();
        assert_eq!(r.p, 1.0);
        assert_eq!(r.u, 17.5);
    }

    #[test]
    fn empty_sample_is_rejected() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn clear_shift_is_significant() {
        let a: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..30).map(|i| i as f64 + 40.0).collect();
        assert!(mann_whitney_u(&a, &b).unwrap().p < 1e-6);
    }

    proptest! {
        #[test]
        fn u_equals_pair_counting(
            a in prop::collection::vec(0u8..6, 1..20),
            b in prop::collection::vec(0u8..6, 1..20),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let r = mann_whitney_u(&a, &b).unwrap();
            prop_assert_eq!(r.u, pair_count(&a, &b));
            prop_assert!((0.0..=1.0).contains(&r.p));
        }
    }
}
