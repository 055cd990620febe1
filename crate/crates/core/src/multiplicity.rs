//! Multiplicity adjustments: Holm step-down adjusted p-values and
//! Benjamini–Hochberg / Benjamini–Yekutieli q-values.
//!
//! All procedures sort with a stable order on `(value, original index)`, so
//! tied p-values always receive identical adjusted values, and every output
//! is capped at exactly 1.

use crate::{Result, SafeError};

fn validate(p: &[f64]) -> Result<()> {
    if p.is_empty() {
        return Err(SafeError::invalid("p-value vector is empty"));
    }
    if let Some((i, v)) = p.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(SafeError::invalid(format!("p-value at index {i} is outside [0, 1]: {v}")));
    }
    Ok(())
}

/// Indices that stably sort `p` ascending.
fn ascending_order(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    order
}

/// Holm step-down adjusted p-values, index-aligned with the input.
///
/// With `p(1) ≤ … ≤ p(n)` the sorted values, the k-th adjusted value is
/// `min(1, max_{j ≤ k} (n − j + 1)·p(j))`.
pub fn holm_adjust(p: &[f64]) -> Result<Vec<f64>> {
    validate(p)?;
    Ok(holm_unchecked(p))
}

pub(crate) fn holm_unchecked(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut adjusted = vec![0.0; n];
    let mut running_max = 0.0_f64;
    for (rank, &idx) in ascending_order(p).iter().enumerate() {
        let scaled = ((n - rank) as f64 * p[idx]).min(1.0);
        running_max = running_max.max(scaled);
        adjusted[idx] = running_max;
    }
    adjusted
}

/// Benjamini–Hochberg q-values, index-aligned with the input.
///
/// Sort ascending, set `q(m) = p(m)`, recurse backwards with
/// `q(i) = min((m/i)·p(i), q(i+1))`, then map back through the sort order.
/// Forming `m/i` first keeps exact ties such as `0.05·6/3 = 0.1` exact.
pub fn bh_qvalues(p: &[f64]) -> Result<Vec<f64>> {
    validate(p)?;
    Ok(bh_unchecked(p))
}

pub(crate) fn bh_unchecked(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let order = ascending_order(p);
    let mut q = vec![0.0; m];
    let mut running_min = p[order[m - 1]].min(1.0);
    q[order[m - 1]] = running_min;
    for rank in (1..m).rev() {
        let idx = order[rank - 1];
        running_min = running_min.min(m as f64 / rank as f64 * p[idx]).min(1.0);
        q[idx] = running_min;
    }
    q
}

/// Harmonic sum `c(m) = Σ_{i=1..m} 1/i` used by the BY correction.
pub fn harmonic_sum(m: usize) -> f64 {
    (1..=m).map(|i| 1.0 / i as f64).sum()
}

/// Benjamini–Yekutieli q-values: BH q-values of `min(1, c(m)·p)`.
pub fn by_qvalues(p: &[f64]) -> Result<Vec<f64>> {
    validate(p)?;
    Ok(by_unchecked(p))
}

pub(crate) fn by_unchecked(p: &[f64]) -> Vec<f64> {
    let c = harmonic_sum(p.len());
    let inflated: Vec<f64> = p.iter().map(|&v| (v * c).min(1.0)).collect();
    bh_unchecked(&inflated)
}

/// The `k`-th smallest value (1-based) of `p`.
pub fn kth_smallest(p: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > p.len() {
        return Err(SafeError::invalid(format!("order statistic {k} requested from a vector of length {}", p.len())));
    }
    let mut sorted = p.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[k - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn holm_examples() {
        assert_eq!(holm_adjust(&[0.02]).unwrap(), vec![0.02]);
        close(&holm_adjust(&[0.01, 0.04, 0.03]).unwrap(), &[0.03, 0.06, 0.06]);
        assert_eq!(holm_adjust(&[0.5; 4]).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn bh_examples() {
        close(&bh_qvalues(&[0.01, 0.02, 0.03, 0.04, 0.05]).unwrap(), &[0.05; 5]);
        close(&bh_qvalues(&[0.005, 0.011, 0.02, 0.04, 0.13]).unwrap(), &[0.025, 0.0275, 0.02 * 5.0 / 3.0, 0.05, 0.13]);
        assert_eq!(bh_qvalues(&[0.3]).unwrap(), vec![0.3]);
    }

    #[test]
    fn by_examples() {
        assert_eq!(by_qvalues(&[0.3]).unwrap(), vec![0.3]);
        close(&by_qvalues(&[0.01, 0.02]).unwrap(), &[0.03, 0.03]);
        assert_eq!(by_qvalues(&[1.0; 6]).unwrap(), vec![1.0; 6]);
        assert!((harmonic_sum(2) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn kth_smallest_examples() {
        assert_eq!(kth_smallest(&[0.5, 0.1, 0.9], 2).unwrap(), 0.5);
        assert_eq!(kth_smallest(&[0.2, 0.2], 2).unwrap(), 0.2);
        let adjusted = holm_adjust(&[0.01, 0.04, 0.03]).unwrap();
        assert!((kth_smallest(&adjusted, 2).unwrap() - 0.06).abs() < 1e-12);
        assert!(kth_smallest(&[0.1], 0).is_err());
        assert!(kth_smallest(&[0.1], 2).is_err());
    }

    #[test]
    fn rejects_invalid_vectors() {
        assert!(holm_adjust(&[]).is_err());
        assert!(bh_qvalues(&[]).is_err());
        assert!(by_qvalues(&[]).is_err());
        assert!(holm_adjust(&[0.1, 1.5]).is_err());
        assert!(bh_qvalues(&[f64::NAN]).is_err());
    }

    #[test]
    fn bh_uncapped_recursion_is_capped() {
        // 0.9 * 2 / 1 = 1.8 would exceed 1 without the cap.
        assert_eq!(bh_qvalues(&[0.9, 0.95]).unwrap(), vec![0.95, 0.95]);
        assert_eq!(bh_qvalues(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn bh_boundary_tie_is_rejected() {
        // 0.05 at rank 3 of 6 sits exactly on the step-up line 3·0.1/6.
        let q = bh_qvalues(&[0.2, 0.2, 0.2, 0.05, 0.001, 0.001]).unwrap();
        assert!(q[3] <= 0.1, "{q:?}");
    }

    #[test]
    fn ties_get_identical_values() {
        let p = [0.04, 0.01, 0.04, 0.2, 0.01];
        let h = holm_adjust(&p).unwrap();
        let q = bh_qvalues(&p).unwrap();
        assert_eq!(h[1], h[4]);
        assert_eq!(h[0], h[2]);
        assert_eq!(q[1], q[4]);
        assert_eq!(q[0], q[2]);
    }

    fn pvec() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![0.0f64..=1.0, Just(0.05), Just(1.0), Just(0.0)], 1..12)
    }

    proptest! {
        #[test]
        fn holm_dominates_raw_and_is_permutation_equivariant(p in pvec(), seed in any::<u64>()) {
            let h = holm_adjust(&p).unwrap();
            for (a, r) in h.iter().zip(&p) {
                prop_assert!(*a >= *r && *a <= 1.0);
            }
            let n = p.len();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.sort_by_key(|&i| (i as u64).wrapping_mul(seed | 1).rotate_left(17));
            let permuted: Vec<f64> = perm.iter().map(|&i| p[i]).collect();
            let hp = holm_adjust(&permuted).unwrap();
            for (k, &i) in perm.iter().enumerate() {
                prop_assert_eq!(hp[k], h[i]);
            }
        }

        #[test]
        fn qvalues_nondecreasing_along_sorted_input(mut p in pvec()) {
            p.sort_by(f64::total_cmp);
            for q in [bh_qvalues(&p).unwrap(), by_qvalues(&p).unwrap()] {
                prop_assert!(q.windows(2).all(|w| w[0] <= w[1]));
                prop_assert!(q.iter().all(|v| (0.0..=1.0).contains(v)));
            }
        }

        #[test]
        fn qvalues_monotone_in_each_input(p in pvec(), idx in any::<prop::sample::Index>(), bump in 0.0f64..1.0) {
            let i = idx.index(p.len());
            let mut larger = p.clone();
            larger[i] = (p[i] + bump).min(1.0);
            for (before, after) in [
                (bh_qvalues(&p).unwrap(), bh_qvalues(&larger).unwrap()),
                (by_qvalues(&p).unwrap(), by_qvalues(&larger).unwrap()),
            ] {
                for (b, a) in before.iter().zip(&after) {
                    prop_assert!(a >= b);
                }
            }
        }

        #[test]
        fn by_dominates_bh(p in pvec()) {
            let bh = bh_qvalues(&p).unwrap();
            let by = by_qvalues(&p).unwrap();
            for (b, y) in bh.iter().zip(&by) {
                prop_assert!(y >= b);
            }
        }
    }
}
