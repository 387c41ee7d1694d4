use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use super::SolverParams;
use crate::error::{Error, Result};

/// `ln C(n, k)` through log-gamma.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    let (n, k) = (n as f64, k as f64);
    (ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SamplePlan {
    pub l: usize,
    /// Numerator bounding the estimates at the greedy solutions.
    pub l1: f64,
    /// Numerator bounding the estimate at the optimum.
    pub l2: f64,
}

/// `l1 = n (ln C(n,k) + ln N)(2 + eps1) / eps1^2` and `l2 = 2 n ln N / eps2^2`.
pub fn sample_bounds(n: usize, k: usize, params: &SolverParams) -> (f64, f64) {
    let ln_n = params.n_fail.ln();
    let nf = n as f64;
    let l1 = nf * (ln_binomial(n, k) + ln_n) * (2.0 + params.eps1) / (params.eps1 * params.eps1);
    let l2 = 2.0 * nf * ln_n / (params.eps2 * params.eps2);
    (l1, l2)
}

/// `l = ceil(max(l1, l2) / f_lo)`, failing if it exceeds the tuple cap.
pub fn plan_sample_size(n: usize, k: usize, params: &SolverParams, f_lo: f64) -> Result<SamplePlan> {
    if f_lo <= 0.0 || !f_lo.is_finite() {
        return Err(Error::InvalidParameter(format!("f_lo = {f_lo} must be positive")));
    }
    let (l1, l2) = sample_bounds(n, k, params);
    let need = (l1.max(l2) / f_lo).ceil();
    if !need.is_finite() || need > params.max_tuples as f64 {
        return Err(Error::ResourceCap {
            needed: if need.is_finite() { need as u64 } else { u64::MAX },
            cap: params.max_tuples as u64,
        });
    }
    Ok(SamplePlan { l: (need as usize).max(1), l1, l2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn hand_computed_bounds() {
        let p = SolverParams::explicit(2, 0.5, 0.5, 0.5, 100.0);
        let (l1, l2) = sample_bounds(10, 2, &p);
        let want1 = 10.0 * (45f64.ln() + 100f64.ln()) * 2.5 / 0.25;
        let want2 = 2.0 * 10.0 * 100f64.ln() / 0.25;
        assert!(rel(l1, want1) < 1e-12 && rel(l1, 841.18) < 1e-5);
        assert!(rel(l2, want2) < 1e-12 && rel(l2, 368.41) < 1e-5);
        assert_eq!(plan_sample_size(10, 2, &p, 1.0).unwrap().l, 842);
    }

    #[test]
    fn ln_binomial_matches_products() {
        assert!((ln_binomial(10, 2) - 45f64.ln()).abs() < 1e-12);
        assert!((ln_binomial(52, 5) - 2_598_960f64.ln()).abs() < 1e-9);
        assert_eq!(ln_binomial(7, 0), 0.0);
        assert!(ln_binomial(2_000_000, 50).is_finite());
    }

    #[test]
    fn cap_is_enforced() {
        let p = SolverParams::explicit(2, 0.5, 0.01, 0.01, 100.0).with_max_tuples(1000);
        assert!(matches!(plan_sample_size(1000, 2, &p, 1.0), Err(Error::ResourceCap { .. })));
        assert!(plan_sample_size(1000, 2, &p, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn monotone_in_f_lo_and_eps(
            n in 2usize..5000, kf in 0.0f64..1.0, f in 1.0f64..1000.0, df in 0.0f64..1000.0,
            e in 0.05f64..0.9, de in 0.0f64..0.09,
        ) {
            let k = ((n as f64 * kf) as usize).max(1);
            let p = SolverParams::explicit(k, 0.5, e, e, 50.0).with_max_tuples(usize::MAX);
            let q = SolverParams::explicit(k, 0.5, e + de, e + de, 50.0).with_max_tuples(usize::MAX);
            let base = plan_sample_size(n, k, &p, f).unwrap().l;
            prop_assert!(plan_sample_size(n, k, &p, f + df).unwrap().l <= base);
            prop_assert!(plan_sample_size(n, k, &q, f).unwrap().l <= base);
        }

        #[test]
        fn scales_inverse_square_in_eps(n in 10usize..2000, e in 0.05f64..0.45) {
            let p = SolverParams::explicit(1, 0.5, e, e, 50.0);
            let q = SolverParams::explicit(1, 0.5, 2.0 * e, 2.0 * e, 50.0);
            let (a1, a2) = sample_bounds(n, 1, &p);
            let (b1, b2) = sample_bounds(n, 1, &q);
            prop_assert!(rel(a2 / b2, 4.0) < 1e-9);
            prop_assert!(rel(a1 / b1, 4.0 * (2.0 + e) / (2.0 + 2.0 * e)) < 1e-9);
        }
    }
}
