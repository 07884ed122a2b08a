use std::f64::consts::PI;

use crate::model::ModelParams;

/// A-priori bound on `D12(p, z0(|p|))`:
/// `4/(3(1+2s)) R^(1+2s)/(1-|p|)` for `|p| < 1/2`, `4/(1+2s) R^(1+2s)/|p|` otherwise.
pub fn lemma_dd1_bound(p_abs: f64, params: &ModelParams) -> f64 {
    let m = params.cutoff_moment();
    if p_abs < 0.5 {
        4.0 / 3.0 * m / (1.0 - p_abs)
    } else {
        4.0 * m / p_abs
    }
}

/// Upper bound on the eigenvalue, `7/2 + 4 pi e^2 R^(1+2s)/(1+2s) + gamma0`.
///
/// The same bound also circulates with `2 pi` in place of `4 pi`; the audit
/// uses the larger constant.
pub fn theorem1_bound(params: &ModelParams) -> f64 {
    3.5 + 4.0 * PI * params.e * params.e * params.cutoff_moment() + params.gamma0
}

/// `|p|` beyond which `F(p, z0) > 0`, hence no eigenvalue:
/// `4 + 4 pi e^2 R^(1+2s)/(1+2s)`.
pub fn no_root_threshold(params: &ModelParams) -> f64 {
    4.0 + 4.0 * PI * params.e * params.e * params.cutoff_moment()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{d12_at_edge, QuadratureSpec};

    #[test]
    fn bound_values() {
        let p = ModelParams::new(1.0, 1.0, 0.0, PI).unwrap();
        assert!((lemma_dd1_bound(0.25, &p) - 16.0 / 9.0).abs() < 1e-15);
        assert!((lemma_dd1_bound(2.0, &p) - 2.0).abs() < 1e-15);
        assert!((theorem1_bound(&p) - (3.5 + 5.0 * PI)).abs() < 1e-14);
        let free = ModelParams::new(0.0, 1.0, 0.0, 0.0).unwrap();
        assert_eq!(theorem1_bound(&free), 3.5);
        assert_eq!(no_root_threshold(&free), 4.0);
    }

    #[test]
    fn edge_kernel_respects_the_bound() {
        let q = QuadratureSpec::default();
        for (e, r, s) in [(1.0, 1.0, 0.0), (0.3, 2.0, 0.2), (2.0, 0.5, 0.4)] {
            let p = ModelParams::with_default_gamma0(e, r, s).unwrap();
            for i in 0..30 {
                let pa = 0.05 + 0.1 * i as f64;
                let d = d12_at_edge(pa, &p, &q).unwrap().re();
                assert!(d <= lemma_dd1_bound(pa, &p), "p={pa}: {d}");
            }
        }
    }
}
