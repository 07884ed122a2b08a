//! Physical parameters and the bare symbols of the fiber operator `H(p)`.
//!
//! Units are natural (`m = c = 1`). The coupling is
//! `g(k) = chi(|k| <= R) |k|^(sigma - 1/2)`, photons carry two transversal
//! polarizations, and the one-photon-truncated fiber Hamiltonian acts on
//! `C + L2(R^3) + L2(R^3)`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;

/// One instance of the model: coupling `e`, ultraviolet cutoff `R`,
/// infrared exponent `sigma` and the energy shift `gamma0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub e: f64,
    #[serde(rename = "R")]
    pub cutoff: f64,
    pub sigma: f64,
    pub gamma0: f64,
}

impl ModelParams {
    pub fn new(e: f64, cutoff: f64, sigma: f64, gamma0: f64) -> Result<Self> {
        let params = ModelParams {
            e,
            cutoff,
            sigma,
            gamma0,
        };
        params.validate()?;
        Ok(params)
    }

    /// Parameters with `gamma0 = pi e^2 R^(2+2 sigma) / (1 + sigma)`.
    pub fn with_default_gamma0(e: f64, cutoff: f64, sigma: f64) -> Result<Self> {
        Self::new(e, cutoff, sigma, default_gamma0(e, cutoff, sigma))
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.e, self.cutoff, self.sigma, self.gamma0]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if self.e < 0.0 {
            return Err(Error::InvalidParams(format!("e = {} must be >= 0", self.e)));
        }
        if self.cutoff <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "R = {} must be > 0",
                self.cutoff
            )));
        }
        if !(0.0..0.5).contains(&self.sigma) {
            return Err(Error::InvalidParams(format!(
                "sigma = {} must lie in [0, 1/2)",
                self.sigma
            )));
        }
        if self.gamma0 < 0.0 {
            return Err(Error::InvalidParams(format!(
                "gamma0 = {} must be >= 0",
                self.gamma0
            )));
        }
        Ok(())
    }

    /// `pi e^2`, the prefactor shared by `D1`, `D2` and the secular function.
    pub fn pi_e2(&self) -> f64 {
        PI * self.e * self.e
    }

    /// Diagonal shift `(e^2/4) ||G||^2` carried by `T~` and `L~`.
    pub fn diagonal_shift(&self) -> f64 {
        0.25 * self.e * self.e * norm_g_sq(self)
    }

    /// `R^(1+2 sigma) / (1 + 2 sigma)`, recurring in the a-priori bounds.
    pub(crate) fn cutoff_moment(&self) -> f64 {
        self.cutoff.powf(1.0 + 2.0 * self.sigma) / (1.0 + 2.0 * self.sigma)
    }
}

/// Total momentum `p` of the fiber.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Momentum(pub Vec3);

impl Momentum {
    pub fn new(px: f64, py: f64, pz: f64) -> Self {
        Momentum(Vec3::new(px, py, pz))
    }

    /// `|p|` along a direction; the direction is normalized here.
    pub fn along(direction: &Vec3, p_abs: f64) -> Result<Self> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParams("direction must be a non-zero vector".into()));
        }
        Ok(Momentum(direction * (p_abs / n)))
    }

    pub fn abs(&self) -> f64 {
        self.0.norm()
    }

    pub fn abs_sq(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn vector(&self) -> &Vec3 {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    First,
    Second,
}

impl Polarization {
    pub const BOTH: [Polarization; 2] = [Polarization::First, Polarization::Second];

    pub fn index(self) -> usize {
        match self {
            Polarization::First => 1,
            Polarization::Second => 2,
        }
    }

    /// Zero-based position for per-polarization arrays.
    pub fn slot(self) -> usize {
        self.index() - 1
    }

    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Polarization::First),
            2 => Ok(Polarization::Second),
            _ => Err(Error::Domain(format!("polarization index {i} not in {{1, 2}}"))),
        }
    }
}

/// A photon momentum with its polarization label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonMode {
    pub k: Vec3,
    pub lambda: Polarization,
}

impl PhotonMode {
    pub fn omega(&self) -> f64 {
        self.k.norm()
    }

    /// `G(k, lambda) = e(k, lambda) g(k)`.
    pub fn form_factor(&self, params: &ModelParams) -> Result<Vec3> {
        form_factor(&self.k, self.lambda, params)
    }
}

/// `g(k) = chi(|k| <= R) / |k|^(1/2 - sigma)`.
///
/// `k = 0` is a domain error: the coupling is only ever needed under a
/// measure that vanishes there.
pub fn coupling_g(k: &Vec3, params: &ModelParams) -> Result<f64> {
    coupling_g_radial(k.norm(), params)
}

pub(crate) fn coupling_g_radial(rho: f64, params: &ModelParams) -> Result<f64> {
    if rho == 0.0 {
        return Err(Error::Domain("g(k) is singular at k = 0".into()));
    }
    if rho > params.cutoff {
        return Ok(0.0);
    }
    Ok(rho.powf(params.sigma - 0.5))
}

/// Transversal polarization frame.
///
/// `e1 = (k^ x z^)/|k^ x z^|`, `e2 = k^ x e1`, with `x^` as reference axis
/// when `k` is (nearly) parallel to `z^`.
pub fn polarization(k: &Vec3) -> Result<(Vec3, Vec3)> {
    let n = k.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::Domain("polarization undefined at k = 0".into()));
    }
    let khat = k / n;
    let mut cross = khat.cross(&Vec3::z());
    if cross.norm() < 1e-12 {
        cross = khat.cross(&Vec3::x());
    }
    let e1 = cross.normalize();
    let e2 = khat.cross(&e1);
    Ok((e1, e2))
}

pub fn polarization_vector(k: &Vec3, lambda: Polarization) -> Result<Vec3> {
    let (e1, e2) = polarization(k)?;
    Ok(match lambda {
        Polarization::First => e1,
        Polarization::Second => e2,
    })
}

pub fn form_factor(k: &Vec3, lambda: Polarization, params: &ModelParams) -> Result<Vec3> {
    let g = coupling_g(k, params)?;
    Ok(polarization_vector(k, lambda)? * g)
}

/// `||G||^2 = sum_lambda int |e(k,lambda)|^2 g(k)^2 dk = 4 pi R^(2+2 sigma) / (1 + sigma)`.
pub fn norm_g_sq(params: &ModelParams) -> f64 {
    4.0 * PI * params.cutoff.powf(2.0 + 2.0 * params.sigma) / (1.0 + params.sigma)
}

/// The suggested energy shift `pi e^2 R^(2+2 sigma) / (1 + sigma)`.
pub fn default_gamma0(e: f64, cutoff: f64, sigma: f64) -> f64 {
    PI * e * e * cutoff.powf(2.0 + 2.0 * sigma) / (1.0 + sigma)
}

/// Bottom of the essential spectrum, `min_k (p-k)^2/2 + |k| + gamma0`.
pub fn z0(p_abs: f64, params: &ModelParams) -> f64 {
    params.gamma0 + z0_offset(p_abs)
}

/// `z0(|p|) - gamma0`, computed without the shift so edge evaluations are exact.
pub(crate) fn z0_offset(p_abs: f64) -> f64 {
    if p_abs <= 1.0 {
        0.5 * p_abs * p_abs
    } else {
        p_abs - 0.5
    }
}

/// `T~(p) = p^2/2 + (e^2/4)||G||^2`.
pub fn tilde_t(p: &Momentum, params: &ModelParams) -> f64 {
    0.5 * p.abs_sq() + params.diagonal_shift()
}

/// `L~(p, k) = (p-k)^2/2 + |k| + (e^2/4)||G||^2`.
pub fn tilde_l(p: &Momentum, k: &Vec3, params: &ModelParams) -> f64 {
    0.5 * (p.0 - k).norm_squared() + k.norm() + params.diagonal_shift()
}
