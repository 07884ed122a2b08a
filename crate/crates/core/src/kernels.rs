//! The scalar integrals `D1`, `D2`, `D12` and the matrix `C`.
//!
//! All three kernels share the denominator
//! `p^2/2 - |p| rho t + rho^2/2 + rho + gamma0 - z` and differ only in the
//! angular weight (`1`, `t^2`, `1 - t^2`). For fixed `rho` the `t`-integral is
//! rational and done in closed form; the remaining radial integral runs
//! through the adaptive Gauss-Legendre integrator. The only singular
//! direction is `rho`: the endpoint `rho = 0` (for `sigma > 0` and at the band
//! edge) and `rho = |p| - 1` on the band edge when `|p| > 1`.

use nalgebra::Matrix3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{z0, z0_offset, Momentum, ModelParams};
use crate::quadrature::{gauss_legendre_on, AdaptiveGaussLegendre};

type C64 = Complex64;

/// Ratio `|p| rho / A` below which the `t`-moments are summed as a series.
const SERIES_CUTOFF: f64 = 0.5;

/// A kernel value with its absolute quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelValue {
    pub value: C64,
    pub est_error: f64,
    /// `false` when the panel budget ran out before `abs_tol` was reached.
    pub converged: bool,
}

impl KernelValue {
    fn scaled(self, factor: f64) -> Self {
        KernelValue {
            value: self.value * factor,
            est_error: self.est_error * factor.abs(),
            converged: self.converged,
        }
    }

    pub fn re(&self) -> f64 {
        self.value.re
    }
}

/// Radial quadrature settings.
///
/// `n_rho` is the Gauss-Legendre order used on each adaptive radial panel
/// and `max_refine` caps the number of panels; `n_t` is only used by the
/// tensor-product cross-check, the production path integrates `t` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub n_rho: usize,
    pub n_t: usize,
    pub abs_tol: f64,
    pub max_refine: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            n_rho: 20,
            n_t: 32,
            abs_tol: 1e-10,
            max_refine: 256,
        }
    }
}

impl QuadratureSpec {
    /// Tight settings for finite differencing and convergence studies.
    pub fn precise() -> Self {
        QuadratureSpec {
            abs_tol: 1e-14,
            max_refine: 2000,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rho < 2 || self.n_t < 2 {
            return Err(Error::InvalidParams(
                "quadrature node counts must be >= 2".into(),
            ));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParams("abs_tol must be > 0".into()));
        }
        if self.max_refine == 0 {
            return Err(Error::InvalidParams("max_refine must be >= 1".into()));
        }
        Ok(())
    }

    fn integrator(&self, abs_tol: f64) -> AdaptiveGaussLegendre {
        AdaptiveGaussLegendre::new(self.n_rho, abs_tol, self.max_refine)
    }
}

/// Angular weight of a kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelWeight {
    /// `D1 / (pi e^2)`
    One,
    /// `D2 / (pi e^2)`
    TSquared,
    /// `D12`
    OneMinusTSquared,
    /// `d D12 / dz`, the `(1 - t^2)` weight over the squared denominator.
    OneMinusTSquaredSquared,
}

/// `p^2/2 - |p| rho t + rho^2/2 + rho + gamma0 - z`.
pub fn denom(p_abs: f64, rho: f64, t: f64, z: C64, params: &ModelParams) -> C64 {
    let zeta = z - params.gamma0;
    C64::new(0.5 * p_abs * p_abs - p_abs * rho * t + 0.5 * rho * rho + rho, 0.0) - zeta
}

/// Closed-form `int_{-1}^{1} w(t) / (a - b t) dt` with `amb = a - b`,
/// `apb = a + b` supplied separately so edge cancellations stay exact.
fn t_moment(weight: KernelWeight, a: C64, b: f64, amb: C64, apb: C64) -> C64 {
    let x = if a.norm() > 0.0 { b / a.norm() } else { f64::INFINITY };
    if b == 0.0 || x < SERIES_CUTOFF {
        return t_moment_series(weight, a, b / a);
    }
    // ln(a + b) - ln(a - b) along the straight segment a - b t; principal
    // logs are continuous there because the segment never meets (-inf, 0].
    let ln_apb = apb.ln();
    let amb_ln_amb = if amb.norm() == 0.0 {
        C64::new(0.0, 0.0)
    } else {
        amb * amb.ln()
    };
    let b2 = b * b;
    match weight {
        KernelWeight::One => (ln_apb - amb.ln()) / b,
        KernelWeight::TSquared => {
            let i0 = (ln_apb - amb.ln()) / b;
            let i1 = (a * i0 - 2.0) / b;
            a * i1 / b
        }
        KernelWeight::OneMinusTSquared => {
            let amb_log = amb * ln_apb - amb_ln_amb;
            -(amb_log * apb) / (b2 * b) + a * (2.0 / b2)
        }
        KernelWeight::OneMinusTSquaredSquared => {
            let i0 = (ln_apb - amb.ln()) / b;
            (a * i0 * 2.0 - 4.0) / b2
        }
    }
}

fn t_moment_series(weight: KernelWeight, a: C64, x: C64) -> C64 {
    let x2 = x * x;
    let mut power = C64::new(1.0, 0.0);
    let mut sum = C64::new(0.0, 0.0);
    for k in 0..200 {
        let n = 2.0 * k as f64;
        let c = match weight {
            KernelWeight::One => 1.0 / (n + 1.0),
            KernelWeight::TSquared => 1.0 / (n + 3.0),
            KernelWeight::OneMinusTSquared => 2.0 / ((n + 1.0) * (n + 3.0)),
            KernelWeight::OneMinusTSquaredSquared => 2.0 / (n + 3.0),
        };
        let term = power * c;
        sum += term;
        if term.norm() <= 1e-18 * sum.norm() {
            break;
        }
        power *= x2;
    }
    match weight {
        KernelWeight::OneMinusTSquaredSquared => sum * 2.0 / (a * a),
        _ => sum * 2.0 / a,
    }
}

/// `rho^(1+2 sigma) int w(t)/denom dt` at a generic point `zeta = z - gamma0`.
fn radial_integrand(weight: KernelWeight, p_abs: f64, rho: f64, zeta: C64, sigma: f64) -> C64 {
    let base = C64::new(rho, 0.0) - zeta;
    let a = base + 0.5 * (p_abs * p_abs + rho * rho);
    let amb = base + 0.5 * (p_abs - rho) * (p_abs - rho);
    let apb = base + 0.5 * (p_abs + rho) * (p_abs + rho);
    let b = p_abs * rho;
    t_moment(weight, a, b, amb, apb) * rho.powf(1.0 + 2.0 * sigma)
}

/// Same integrand exactly on the band edge `z = z0(|p|)`.
fn radial_integrand_edge(weight: KernelWeight, p_abs: f64, rho: f64, sigma: f64) -> C64 {
    if p_abs <= 1.0 {
        // Everything is proportional to rho; the moment is homogeneous of
        // degree -1 (degree -2 for the squared denominator).
        let a = 0.5 * rho + 1.0;
        let m = t_moment(
            weight,
            C64::new(a, 0.0),
            p_abs,
            C64::new(a - p_abs, 0.0),
            C64::new(a + p_abs, 0.0),
        );
        let power = match weight {
            KernelWeight::OneMinusTSquaredSquared => 2.0 * sigma - 1.0,
            _ => 2.0 * sigma,
        };
        m * rho.powf(power)
    } else {
        let d = rho - (p_abs - 1.0);
        let amb = 0.5 * d * d;
        let b = p_abs * rho;
        let m = t_moment(
            weight,
            C64::new(amb + b, 0.0),
            b,
            C64::new(amb, 0.0),
            C64::new(amb + 2.0 * b, 0.0),
        );
        m * rho.powf(1.0 + 2.0 * sigma)
    }
}

fn check_off_spectrum(p_abs: f64, z: C64, params: &ModelParams) -> Result<()> {
    if !(p_abs >= 0.0 && p_abs.is_finite()) {
        return Err(Error::Domain(format!("|p| = {p_abs} must be finite and >= 0")));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain("z must be finite".into()));
    }
    let edge = z0(p_abs, params);
    if z.im == 0.0 && z.re >= edge {
        return Err(Error::OnEssentialSpectrum { z: z.re, edge });
    }
    Ok(())
}

fn breakpoints(p_abs: f64, params: &ModelParams) -> Vec<f64> {
    if p_abs > 1.0 && p_abs - 1.0 < params.cutoff {
        vec![p_abs - 1.0]
    } else {
        Vec::new()
    }
}

/// `int_0^R int_{-1}^{1} w(t) rho^(1+2 sigma) / denom dt d rho`, without the
/// `pi e^2` prefactor, for `z` off the essential spectrum.
pub fn kernel(
    weight: KernelWeight,
    p_abs: f64,
    z: C64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<KernelValue> {
    check_off_spectrum(p_abs, z, params)?;
    kernel_zeta(weight, p_abs, z - params.gamma0, params, quad)
}

/// [`kernel`] parametrised by `zeta = z - gamma0`, so that points close to
/// the edge do not lose digits to the shift.
pub(crate) fn kernel_zeta(
    weight: KernelWeight,
    p_abs: f64,
    zeta: C64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<KernelValue> {
    quad.validate()?;
    if zeta.im == 0.0 && zeta.re >= z0_offset(p_abs) {
        return Err(Error::OnEssentialSpectrum {
            z: params.gamma0 + zeta.re,
            edge: z0(p_abs, params),
        });
    }
    let r = quad.integrator(quad.abs_tol).integrate(
        |rho| radial_integrand(weight, p_abs, rho, zeta, params.sigma),
        0.0,
        params.cutoff,
        &breakpoints(p_abs, params),
    );
    Ok(KernelValue {
        value: r.value,
        est_error: r.est_error,
        converged: r.converged,
    })
}

/// Kernel evaluated exactly on the band edge `z = z0(|p|)`.
///
/// Finite for the `1`, `t^2` and `1 - t^2` weights; the squared denominator
/// diverges there and is rejected.
pub fn kernel_at_edge(
    weight: KernelWeight,
    p_abs: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<KernelValue> {
    quad.validate()?;
    if !(p_abs >= 0.0 && p_abs.is_finite()) {
        return Err(Error::Domain(format!("|p| = {p_abs} must be finite and >= 0")));
    }
    if weight == KernelWeight::OneMinusTSquaredSquared {
        return Err(Error::Domain(
            "d D12/dz diverges on the band edge".into(),
        ));
    }
    let r = quad.integrator(quad.abs_tol).integrate(
        |rho| radial_integrand_edge(weight, p_abs, rho, params.sigma),
        0.0,
        params.cutoff,
        &breakpoints(p_abs, params),
    );
    Ok(KernelValue {
        value: r.value,
        est_error: r.est_error,
        converged: r.converged,
    })
}

fn prefactor_tol(quad: &QuadratureSpec, prefactor: f64) -> QuadratureSpec {
    let mut q = *quad;
    if prefactor > 1.0 {
        q.abs_tol /= prefactor;
    }
    q
}

fn with_prefactor(
    weight: KernelWeight,
    p_abs: f64,
    z: C64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<KernelValue> {
    let pre = params.pi_e2();
    check_off_spectrum(p_abs, z, params)?;
    if pre == 0.0 {
        return Ok(KernelValue {
            value: C64::new(0.0, 0.0),
            est_error: 0.0,
            converged: true,
        });
    }
    Ok(kernel(weight, p_abs, z, params, &prefactor_tol(quad, pre))?.scaled(pre))
}

/// `D1(p, z) = pi e^2 int int rho^(1+2 sigma) / denom dt d rho`.
pub fn d1(p_abs: f64, z: C64, params: &ModelParams, quad: &QuadratureSpec) -> Result<KernelValue> {
    with_prefactor(KernelWeight::One, p_abs, z, params, quad)
}

/// `D2(p, z) = pi e^2 int int t^2 rho^(1+2 sigma) / denom dt d rho`.
pub fn d2(p_abs: f64, z: C64, params: &ModelParams, quad: &QuadratureSpec) -> Result<KernelValue> {
    with_prefactor(KernelWeight::TSquared, p_abs, z, params, quad)
}

/// `D12(p, z) = (D1 - D2)/(pi e^2)`, integrated from its own `(1 - t^2)`
/// weight so it stays exact at `e = 0`.
pub fn d12(p_abs: f64, z: C64, params: &ModelParams, quad: &QuadratureSpec) -> Result<KernelValue> {
    kernel(KernelWeight::OneMinusTSquared, p_abs, z, params, quad)
}

/// `dD12/dz`.
pub fn d12_dz(
    p_abs: f64,
    z: C64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<KernelValue> {
    kernel(KernelWeight::OneMinusTSquaredSquared, p_abs, z, params, quad)
}

/// `D1(p, z0(|p|))`.
pub fn d1_at_edge(p_abs: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<KernelValue> {
    edge_with_prefactor(KernelWeight::One, p_abs, params, quad)
}

/// `D2(p, z0(|p|))`.
pub fn d2_at_edge(p_abs: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<KernelValue> {
    edge_with_prefactor(KernelWeight::TSquared, p_abs, params, quad)
}

fn edge_with_prefactor(
    weight: KernelWeight,
    p_abs: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<KernelValue> {
    let pre = params.pi_e2();
    if pre == 0.0 {
        return Ok(KernelValue {
            value: C64::new(0.0, 0.0),
            est_error: 0.0,
            converged: true,
        });
    }
    Ok(kernel_at_edge(weight, p_abs, params, &prefactor_tol(quad, pre))?.scaled(pre))
}

/// `D12(p, z0(|p|))`.
pub fn d12_at_edge(p_abs: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<KernelValue> {
    kernel_at_edge(KernelWeight::OneMinusTSquared, p_abs, params, quad)
}

/// The point `z0(|p|)` split as `(gamma0, z0 - gamma0)`.
pub fn edge_point(p_abs: f64, params: &ModelParams) -> (f64, f64) {
    (params.gamma0, z0_offset(p_abs))
}

/// Assemble `C` from `D1`, `D2`:
/// `c_ii = [D1 (p^2 - p_i^2) + D2 (3 p_i^2 - p^2)] / (2 p^2)`,
/// `c_ij = -p_i p_j (D1 - 3 D2) / (2 p^2)`; `(D1/3) I` at `p = 0`.
pub fn c_matrix_from(d1: C64, d2: C64, p: &Momentum) -> Matrix3<C64> {
    let p2 = p.abs_sq();
    if p2 == 0.0 {
        return Matrix3::from_diagonal_element(d1 / 3.0);
    }
    let v = p.vector();
    Matrix3::from_fn(|i, j| {
        if i == j {
            (d1 * (p2 - v[i] * v[i]) + d2 * (3.0 * v[i] * v[i] - p2)) / (2.0 * p2)
        } else {
            -(d1 - d2 * 3.0) * (v[i] * v[j]) / (2.0 * p2)
        }
    })
}

/// `C_ij = (e^2/2) int g(k)^2 k_i k_j / (L |k|^2) dk` through the closed form.
pub fn c_matrix(
    p: &Momentum,
    z: C64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<Matrix3<C64>> {
    let p_abs = p.abs();
    let v1 = d1(p_abs, z, params, quad)?;
    let v2 = d2(p_abs, z, params, quad)?;
    Ok(c_matrix_from(v1.value, v2.value, p))
}

/// Plain tensor-product Gauss-Legendre rule in `(rho, t)`, no closed-form
/// `t` integration and no adaptivity. Cross-check for [`kernel`].
pub fn tensor_kernel(
    weight: KernelWeight,
    p_abs: f64,
    z: C64,
    params: &ModelParams,
    n_rho: usize,
    n_t: usize,
) -> Result<C64> {
    check_off_spectrum(p_abs, z, params)?;
    let (rho, w_rho) = gauss_legendre_on(n_rho, 0.0, params.cutoff);
    let (ts, w_t) = gauss_legendre_on(n_t, -1.0, 1.0);
    let mut acc = C64::new(0.0, 0.0);
    for (r, wr) in rho.iter().zip(&w_rho) {
        let radial = r.powf(1.0 + 2.0 * params.sigma) * wr;
        for (t, wt) in ts.iter().zip(&w_t) {
            let d = denom(p_abs, *r, *t, z, params);
            let w = match weight {
                KernelWeight::One => 1.0,
                KernelWeight::TSquared => t * t,
                KernelWeight::OneMinusTSquared => 1.0 - t * t,
                KernelWeight::OneMinusTSquaredSquared => 1.0 - t * t,
            };
            let term = match weight {
                KernelWeight::OneMinusTSquaredSquared => w / (d * d),
                _ => w / d,
            };
            acc += term * (radial * wt);
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Vec3;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn params(e: f64, r: f64, s: f64) -> ModelParams {
        ModelParams::with_default_gamma0(e, r, s).unwrap()
    }

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Brute-force `int_{-1}^{1} w(t)/(a - b t)` by a high-order GL rule.
    fn brute_t(weight: KernelWeight, a: C64, b: f64) -> C64 {
        let (t, w) = gauss_legendre_on(200, -1.0, 1.0);
        t.iter()
            .zip(&w)
            .map(|(t, w)| {
                let d = a - b * t;
                let v = match weight {
                    KernelWeight::One => c(1.0) / d,
                    KernelWeight::TSquared => t * t / d,
                    KernelWeight::OneMinusTSquared => (1.0 - t * t) / d,
                    KernelWeight::OneMinusTSquaredSquared => (1.0 - t * t) / (d * d),
                };
                v * *w
            })
            .sum()
    }

    #[test]
    fn t_moments_match_brute_force_both_branches() {
        let weights = [
            KernelWeight::One,
            KernelWeight::TSquared,
            KernelWeight::OneMinusTSquared,
            KernelWeight::OneMinusTSquaredSquared,
        ];
        for a in [C64::new(3.0, 0.0), C64::new(2.0, 0.7), C64::new(1.5, -1.0)] {
            for b in [0.0, 0.1, 0.9, 1.2, 1.4] {
                for w in weights {
                    let got = t_moment(w, a, b, a - b, a + b);
                    let want = brute_t(w, a, b);
                    assert!(
                        (got - want).norm() < 1e-12 * (1.0 + want.norm()),
                        "{w:?} a={a} b={b}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn denom_values() {
        let p = params(1.0, 1.0, 0.0);
        assert_relative_eq!(denom(0.0, 1.0, 0.37, c(p.gamma0), &p).re, 1.5, epsilon = 1e-14);
        // edge singularity at |p| = 1, rho -> 0, t = 1
        let z = c(z0(1.0, &p));
        for rho in [1e-2, 1e-4, 1e-6] {
            let d = denom(1.0, rho, 1.0, z, &p).re;
            assert!(d.abs() <= 2.0 * rho, "{rho}: {d}");
        }
    }

    #[test]
    fn denom_positive_below_edge() {
        let p = params(0.5, 2.0, 0.1);
        for &pa in &[0.0, 0.4, 1.0, 1.6, 3.0] {
            let z = c(z0(pa, &p) - 1e-9);
            let mut min = f64::INFINITY;
            for i in 0..=400 {
                for j in 0..=100 {
                    let rho = p.cutoff * i as f64 / 400.0;
                    let t = -1.0 + 2.0 * j as f64 / 100.0;
                    min = min.min(denom(pa, rho, t, z, &p).re);
                }
            }
            assert!(min > 0.0, "|p|={pa} min={min}");
        }
    }

    #[test]
    fn d1_d2_d12_closed_forms_at_zero_momentum() {
        for r in [1.0, 2.0, 5.0] {
            for e in [0.3, 1.0] {
                let p = params(e, r, 0.0);
                let q = QuadratureSpec::default();
                // z = gamma0 is the band edge at p = 0
                let l = (r / 2.0 + 1.0).ln();
                let v1 = d1_at_edge(0.0, &p, &q).unwrap();
                assert!((v1.re() - 4.0 * PI * e * e * l).abs() < 1e-9);
                let v2 = d2_at_edge(0.0, &p, &q).unwrap();
                assert!((v2.re() - v1.re() / 3.0).abs() < 1e-9);
                let e12 = d12_at_edge(0.0, &p, &q).unwrap();
                assert!((e12.re() - 8.0 / 3.0 * l).abs() < 1e-9);
                // factorisation d2 = d1/3 holds at p = 0 for any z below the edge
                let w1 = d1(0.0, c(p.gamma0 - 0.8), &p, &q).unwrap().re();
                let w2 = d2(0.0, c(p.gamma0 - 0.8), &p, &q).unwrap().re();
                assert!((w2 - w1 / 3.0).abs() < 1e-12);
            }
        }
        let p = params(1.0, 2.0, 0.0);
        let v = d12_at_edge(0.0, &p, &QuadratureSpec::default()).unwrap();
        assert!((v.re() - 1.848_392_481_493_91).abs() < 1e-9, "{}", v.re());
    }

    #[test]
    fn zero_coupling_kills_d1_d2_but_not_d12() {
        let p = params(0.0, 1.0, 0.0);
        let q = QuadratureSpec::default();
        assert_eq!(d1(0.3, c(-1.0), &p, &q).unwrap().value, c(0.0));
        assert_eq!(d2(0.3, c(-1.0), &p, &q).unwrap().value, c(0.0));
        assert!(d12(0.3, c(-1.0), &p, &q).unwrap().re() > 0.0);
    }

    #[test]
    fn essential_spectrum_is_rejected() {
        let p = params(1.0, 1.0, 0.0);
        let q = QuadratureSpec::default();
        let edge = z0(0.5, &p);
        assert!(matches!(
            d1(0.5, c(edge), &p, &q),
            Err(Error::OnEssentialSpectrum { .. })
        ));
        assert!(d1(0.5, c(edge + 3.0), &p, &q).is_err());
        assert!(d1(0.5, C64::new(edge + 3.0, 0.1), &p, &q).is_ok());
    }

    #[test]
    fn production_path_matches_tensor_rule() {
        let q = QuadratureSpec {
            abs_tol: 1e-13,
            ..Default::default()
        };
        let p = params(0.8, 1.5, 0.0);
        for &pa in &[0.0, 0.3, 0.9, 1.6] {
            for z in [c(z0(pa, &p) - 0.7), C64::new(z0(pa, &p) + 0.5, 0.8)] {
                for w in [
                    KernelWeight::One,
                    KernelWeight::TSquared,
                    KernelWeight::OneMinusTSquared,
                    KernelWeight::OneMinusTSquaredSquared,
                ] {
                    let got = kernel(w, pa, z, &p, &q).unwrap().value;
                    let want = tensor_kernel(w, pa, z, &p, 96, 96).unwrap();
                    assert!(
                        (got - want).norm() < 1e-10 * (1.0 + want.norm()),
                        "{w:?} p={pa} z={z}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn d12_dz_is_the_z_derivative() {
        let p = params(0.5, 1.0, 0.1);
        let q = QuadratureSpec::precise();
        for &pa in &[0.0, 0.5, 1.3] {
            let z = z0(pa, &p) - 0.4;
            let h = 1e-4;
            let fd = (d12(pa, c(z + h), &p, &q).unwrap().re() - d12(pa, c(z - h), &p, &q).unwrap().re())
                / (2.0 * h);
            let exact = d12_dz(pa, c(z), &p, &q).unwrap().re();
            assert_relative_eq!(fd, exact, max_relative = 1e-7);
        }
    }

    #[test]
    fn edge_path_is_the_limit_from_below() {
        let p = params(0.7, 2.0, 0.0);
        let q = QuadratureSpec::precise();
        for &pa in &[0.0, 0.4, 0.8, 1.0, 1.5, 2.5] {
            let edge = d12_at_edge(pa, &p, &q).unwrap().re();
            let (g0, off) = edge_point(pa, &p);
            assert_eq!(g0 + off, z0(pa, &p));
            let near = d12(pa, c(z0(pa, &p) - 1e-7), &p, &q).unwrap().re();
            assert!(near < edge);
            assert!((edge - near).abs() < 1e-3 * edge.max(1.0), "p={pa}: {edge} vs {near}");
        }
    }

    #[test]
    fn kernels_depend_on_p_only_through_its_norm() {
        let p = params(0.9, 1.0, 0.2);
        let q = QuadratureSpec::default();
        let a = Momentum::new(0.3, 0.4, 0.0);
        let b = Momentum::new(0.0, 0.0, -0.5);
        let z = C64::new(0.2, 0.3);
        let ca = c_matrix(&a, z, &p, &q).unwrap();
        let cb = c_matrix(&b, z, &p, &q).unwrap();
        assert!((ca.trace() - cb.trace()).norm() < 1e-14);
        assert_eq!(
            d12(a.abs(), z, &p, &q).unwrap().value,
            d12(b.abs(), z, &p, &q).unwrap().value
        );
    }

    #[test]
    fn c_matrix_structure() {
        let p = params(1.0, 1.0, 0.0);
        let q = QuadratureSpec::default();
        let z = c(1.0);
        let along = Momentum::new(0.0, 0.0, 0.6);
        let m = c_matrix(&along, z, &p, &q).unwrap();
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(m[(i, j)], c(0.0));
        }
        assert!((m[(0, 0)] - m[(1, 1)]).norm() < 1e-15);
        let general = Momentum::new(0.2, -0.5, 0.3);
        let v1 = d1(general.abs(), z, &p, &q).unwrap().value;
        let m = c_matrix(&general, z, &p, &q).unwrap();
        assert!((m.trace() - v1).norm() < 1e-13);
        assert_eq!(m, m.transpose());
        let zero = c_matrix(&Momentum(Vec3::zeros()), z, &p, &q).unwrap();
        assert!((zero[(1, 1)] - d1(0.0, z, &p, &q).unwrap().value / 3.0).norm() < 1e-15);
    }
}
