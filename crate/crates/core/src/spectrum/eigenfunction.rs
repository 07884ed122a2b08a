use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{self, KernelWeight, QuadratureSpec};
use crate::oracle::QuadratureGrid;
use crate::resolvent::StateVector;
use crate::model::{form_factor, tilde_l, tilde_t, z0, Momentum, ModelParams, Polarization, Vec3};

/// Eigenvector of `H(p)` at a root `z*` of `F(p, .)`:
///
/// ```text
/// psi_0       = p^2 / T
/// psi_1(k, l) = -(e/sqrt 2) (p . G(k, l)) (1 - p^2/T) / L(k)
/// ```
///
/// with `T = T~(p) - z*`, `L(k) = L~(p, k) - z*`. Unnormalized.
///
/// When `T` vanishes (the free electron, `e = 0`) the vector is rescaled by
/// `T`, and at `p = 0` it is the bare vacuum `(1, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenfunction {
    pub p: Momentum,
    pub z_star: f64,
    pub zero_photon: f64,
    /// `psi_1(k, l) = photon_coefficient * (p . G(k, l)) / L(k)`.
    pub photon_coefficient: f64,
    params: ModelParams,
}

pub fn eigenfunction(p: &Momentum, z_star: f64, params: &ModelParams) -> Result<Eigenfunction> {
    params.validate()?;
    let p_abs = p.abs();
    let edge = z0(p_abs, params);
    if !z_star.is_finite() || z_star > edge {
        return Err(Error::OnEssentialSpectrum { z: z_star, edge });
    }
    let p2 = p.abs_sq();
    let t = tilde_t(p, params) - z_star;
    let (zero_photon, photon_coefficient) = if p2 == 0.0 {
        (1.0, 0.0)
    } else if t.abs() <= 8.0 * f64::EPSILON * (1.0 + z_star.abs()) {
        (p2, -params.e * FRAC_1_SQRT_2 * (t - p2))
    } else {
        (p2 / t, -params.e * FRAC_1_SQRT_2 * (1.0 - p2 / t))
    };
    if photon_coefficient != 0.0 && z_star >= edge {
        return Err(Error::Domain(format!(
            "L(p, k, z) vanishes inside the cutoff ball at z = {z_star}"
        )));
    }
    Ok(Eigenfunction {
        p: *p,
        z_star,
        zero_photon,
        photon_coefficient,
        params: *params,
    })
}

impl Eigenfunction {
    /// `psi_1(k, lambda)`; zero outside the cutoff ball.
    pub fn one_photon(&self, k: &Vec3, lambda: Polarization) -> Result<f64> {
        if self.photon_coefficient == 0.0 {
            return Ok(0.0);
        }
        let g = form_factor(k, lambda, &self.params)?;
        if g == Vec3::zeros() {
            return Ok(0.0);
        }
        let l = tilde_l(&self.p, k, &self.params) - self.z_star;
        Ok(self.photon_coefficient * self.p.0.dot(&g) / l)
    }

    /// `||psi||^2 = psi_0^2 + 2 pi c^2 p^2 dD12/dz`.
    pub fn norm_sq(&self, quad: &QuadratureSpec) -> Result<f64> {
        let mut n = self.zero_photon * self.zero_photon;
        if self.photon_coefficient != 0.0 {
            let dd = kernels::kernel(
                KernelWeight::OneMinusTSquaredSquared,
                self.p.abs(),
                Complex64::new(self.z_star, 0.0),
                &self.params,
                quad,
            )?
            .re();
            n += 2.0
                * std::f64::consts::PI
                * self.photon_coefficient.powi(2)
                * self.p.abs_sq()
                * dd;
        }
        Ok(n)
    }

    pub fn normalized(&self, quad: &QuadratureSpec) -> Result<Eigenfunction> {
        let n = self.norm_sq(quad)?.sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::Domain(format!("eigenfunction norm {n} cannot be normalized")));
        }
        Ok(Eigenfunction {
            zero_photon: self.zero_photon / n,
            photon_coefficient: self.photon_coefficient / n,
            ..self.clone()
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// Samples on `grid`.
    pub fn discretize(&self, grid: &Arc<QuadratureGrid>) -> Result<StateVector> {
        let f1 = [Polarization::First, Polarization::Second].map(|l| {
            grid.nodes
                .iter()
                .map(|k| self.one_photon(k, l).map(|v| Complex64::new(v, 0.0)))
                .collect::<Result<Vec<_>>>()
        });
        let [a, b] = f1;
        StateVector::new(grid.clone(), Complex64::new(self.zero_photon, 0.0), [a?, b?])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre_on;
    use crate::spectrum::solve_ground;

    fn setup(pa: f64) -> (Momentum, f64, ModelParams) {
        let params = ModelParams::with_default_gamma0(1.0, 1.0, 0.0).unwrap();
        let p = Momentum::new(0.0, pa * 0.6, pa * 0.8);
        let z = solve_ground(&p, &params, &QuadratureSpec::precise(), 1e-14).unwrap().unwrap();
        (p, z, params)
    }

    #[test]
    fn vacuum_at_zero_momentum() {
        let params = ModelParams::with_default_gamma0(0.7, 1.0, 0.1).unwrap();
        let psi = eigenfunction(&Momentum::new(0.0, 0.0, 0.0), params.gamma0, &params).unwrap();
        assert_eq!(psi.zero_photon, 1.0);
        assert_eq!(psi.one_photon(&Vec3::new(0.3, 0.1, 0.2), Polarization::First).unwrap(), 0.0);
        assert_eq!(psi.norm_sq(&QuadratureSpec::default()).unwrap(), 1.0);
    }

    #[test]
    fn rejects_points_above_the_edge() {
        let (p, _, params) = setup(0.5);
        assert!(eigenfunction(&p, z0(0.5, &params) + 1e-6, &params).is_err());
        assert!(eigenfunction(&p, z0(0.5, &params), &params).is_err());
    }

    #[test]
    fn transverse_component_vanishes() {
        let (p, z, params) = setup(0.5);
        let psi = eigenfunction(&p, z, &params).unwrap();
        // k along x: e1 = k^ x z^ is along -y, e2 along z
        let k = Vec3::new(0.4, 0.0, 0.0);
        let (e1, _) = crate::model::polarization(&k).unwrap();
        let perp = p.0.dot(&e1);
        let a = psi.one_photon(&k, Polarization::First).unwrap();
        assert!(perp.abs() > 0.0 && a != 0.0);
        let p_z = Momentum::new(0.0, 0.0, 0.5);
        let z2 = solve_ground(&p_z, &params, &QuadratureSpec::default(), 1e-12).unwrap().unwrap();
        let psi_z = eigenfunction(&p_z, z2, &params).unwrap();
        assert_eq!(psi_z.one_photon(&k, Polarization::First).unwrap(), 0.0);
        // outside the cutoff
        assert_eq!(psi.one_photon(&Vec3::new(2.0, 0.0, 0.0), Polarization::Second).unwrap(), 0.0);
    }

    #[test]
    fn closed_form_norm_matches_cartesian_quadrature() {
        let (p, z, params) = setup(0.6);
        let psi = eigenfunction(&p, z, &params).unwrap();
        let closed = psi.norm_sq(&QuadratureSpec::precise()).unwrap();
        // spherical product rule about the z-axis, straight from the evaluator
        let (rs, wr) = gauss_legendre_on(48, 0.0, params.cutoff);
        let (ts, wt) = gauss_legendre_on(48, -1.0, 1.0);
        let n_phi = 48;
        let mut acc = psi.zero_photon.powi(2);
        for (r, w1) in rs.iter().zip(&wr) {
            for (t, w2) in ts.iter().zip(&wt) {
                let s = (1.0 - t * t).sqrt();
                for j in 0..n_phi {
                    let phi = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / n_phi as f64;
                    let k = Vec3::new(r * s * phi.cos(), r * s * phi.sin(), r * t);
                    let w = w1 * w2 * r * r * 2.0 * std::f64::consts::PI / n_phi as f64;
                    for l in Polarization::BOTH {
                        acc += w * psi.one_photon(&k, l).unwrap().powi(2);
                    }
                }
            }
        }
        assert!((acc - closed).abs() / closed < 1e-6, "{acc} vs {closed}");
        let unit = psi.normalized(&QuadratureSpec::precise()).unwrap();
        assert!((unit.norm_sq(&QuadratureSpec::precise()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn free_electron_is_bare() {
        let free = ModelParams::with_default_gamma0(0.0, 1.0, 0.0).unwrap();
        let p = Momentum::new(0.5, 0.0, 0.0);
        let psi = eigenfunction(&p, 0.125, &free).unwrap();
        assert_eq!(psi.photon_coefficient, 0.0);
        assert!(psi.zero_photon > 0.0);
    }
}
