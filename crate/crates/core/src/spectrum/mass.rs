use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, QuadratureSpec};
use crate::model::ModelParams;

use super::ground_search;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassMethod {
    Formula,
    FiniteDifference,
    SigmaLimit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveMassResult {
    /// `1 / m_eff`, the curvature of the dispersion at `p = 0`.
    pub inv_mass: f64,
    /// Absent when `inv_mass <= 0`.
    pub mass: Option<f64>,
    pub method: MassMethod,
}

impl EffectiveMassResult {
    fn new(inv_mass: f64, method: MassMethod) -> Self {
        EffectiveMassResult {
            inv_mass,
            mass: (inv_mass > 0.0).then(|| 1.0 / inv_mass),
            method,
        }
    }
}

/// `1/m = (1 - pi e^2 D12(0, gamma0)) / (1 + pi e^2 D12(0, gamma0))`.
pub fn effective_mass(params: &ModelParams, quad: &QuadratureSpec) -> Result<EffectiveMassResult> {
    params.validate()?;
    let x = if params.e == 0.0 {
        0.0
    } else {
        params.pi_e2() * kernels::d12_at_edge(0.0, params, quad)?.re()
    };
    Ok(EffectiveMassResult::new((1.0 - x) / (1.0 + x), MassMethod::Formula))
}

/// Closed form of [`effective_mass`] at `sigma = 0`, where
/// `D12(0, gamma0) = (8/3) ln(R/2 + 1)`.
pub fn effective_mass_sigma0(e: f64, cutoff: f64) -> Result<f64> {
    if !(cutoff > 0.0 && cutoff.is_finite()) || !e.is_finite() {
        return Err(Error::InvalidParams(format!("need finite e and R > 0, got e = {e}, R = {cutoff}")));
    }
    let x = 8.0 / 3.0 * std::f64::consts::PI * e * e * (0.5 * cutoff).ln_1p();
    Ok((1.0 - x) / (1.0 + x))
}

/// `2 (E(h) - E(0)) / h^2`, the central second difference with `E` even.
pub fn effective_mass_fd(
    params: &ModelParams,
    quad: &QuadratureSpec,
    h: f64,
) -> Result<EffectiveMassResult> {
    Ok(EffectiveMassResult::new(
        difference_quotient(params, quad, h)?,
        MassMethod::FiniteDifference,
    ))
}

/// Richardson-extrapolated difference quotient from steps `h` and `h/2`.
pub fn effective_mass_fd_extrapolated(
    params: &ModelParams,
    quad: &QuadratureSpec,
    h: f64,
) -> Result<EffectiveMassResult> {
    let coarse = difference_quotient(params, quad, h)?;
    let fine = difference_quotient(params, quad, 0.5 * h)?;
    Ok(EffectiveMassResult::new(
        (4.0 * fine - coarse) / 3.0,
        MassMethod::FiniteDifference,
    ))
}

fn difference_quotient(params: &ModelParams, quad: &QuadratureSpec, h: f64) -> Result<f64> {
    params.validate()?;
    if !(h > 0.0 && 2.0 * h < 1.0) {
        return Err(Error::InvalidParams(format!("step h = {h} must satisfy 0 < 2h < 1")));
    }
    // E(0) = gamma0 exactly, so E(h) - E(0) is the root offset itself
    let tol = 1e-15 * (1.0 + h * h);
    let search = ground_search(h, params, quad, tol)?;
    let zeta = search.zeta.ok_or_else(|| {
        Error::Domain(format!("no eigenvalue below the band at |p| = {h}"))
    })?;
    Ok(2.0 * zeta / (h * h))
}

/// `inv_mass` along a sequence of `sigma` values, extrapolated to `sigma = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaLimit {
    /// `(sigma, inv_mass)` with the default `gamma0` at each `sigma`.
    pub sequence: Vec<(f64, f64)>,
    pub extrapolated: EffectiveMassResult,
    /// `effective_mass_sigma0(e, R)`.
    pub target: f64,
}

impl SigmaLimit {
    pub fn error(&self) -> f64 {
        (self.extrapolated.inv_mass - self.target).abs()
    }
}

/// Evaluate [`effective_mass`] on `sigmas` and extrapolate polynomially
/// (Neville) to `sigma = 0`.
pub fn effective_mass_sigma_limit(
    e: f64,
    cutoff: f64,
    sigmas: &[f64],
    quad: &QuadratureSpec,
) -> Result<SigmaLimit> {
    if sigmas.is_empty() {
        return Err(Error::InvalidParams("sigma sequence is empty".into()));
    }
    let mut sequence = Vec::with_capacity(sigmas.len());
    for &s in sigmas {
        let params = ModelParams::with_default_gamma0(e, cutoff, s)?;
        sequence.push((s, effective_mass(&params, quad)?.inv_mass));
    }
    let xs: Vec<f64> = sequence.iter().map(|&(s, _)| s).collect();
    let mut table: Vec<f64> = sequence.iter().map(|&(_, v)| v).collect();
    let n = table.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xa, xb) = (xs[i], xs[i + level]);
            if xa == xb {
                return Err(Error::InvalidParams("sigma values must be distinct".into()));
            }
            table[i] = (xb * table[i] - xa * table[i + 1]) / (xb - xa);
        }
    }
    Ok(SigmaLimit {
        sequence,
        extrapolated: EffectiveMassResult::new(table[0], MassMethod::SigmaLimit),
        target: effective_mass_sigma0(e, cutoff)?,
    })
}
