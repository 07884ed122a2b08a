//! Point spectrum of `H(p)` below the band.
//!
//! Below `z0(|p|)` the only possible spectrum is the zero set of
//! `K(p, z) = det U`, which in that region coincides with the zero set of the
//! secular function
//!
//! ```text
//! F(p, z) = p^2/2 - z + gamma0 - pi e^2 (p^2/2 + z - gamma0) D12(p, z).
//! ```
//!
//! `F > 0` for `z < gamma0 - p^2/2` and `F` is strictly decreasing above that
//! point, so there is at most one root and the sign of `F` on the band edge
//! decides whether it exists.

mod bounds;
mod eigenfunction;
mod mass;

pub use bounds::{lemma_dd1_bound, no_root_threshold, theorem1_bound};
pub use eigenfunction::{eigenfunction, Eigenfunction};
pub use mass::{
    effective_mass, effective_mass_fd, effective_mass_fd_extrapolated, effective_mass_sigma0,
    effective_mass_sigma_limit, EffectiveMassResult, MassMethod, SigmaLimit,
};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, KernelWeight, QuadratureSpec};
use crate::model::{z0, z0_offset, Momentum, ModelParams, Vec3};

const MAX_ITERATIONS: usize = 400;

/// `F(p, z)` for `z <= z0(|p|)`; `z = z0` goes through the edge path.
pub fn secular_f(p_abs: f64, z: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    let edge = z0(p_abs, params);
    if z > edge {
        return Err(Error::OnEssentialSpectrum { z, edge });
    }
    if z == edge {
        return secular_f_edge(p_abs, params, quad);
    }
    secular_f_zeta(p_abs, z - params.gamma0, params, quad)
}

/// `F` as a function of `zeta = z - gamma0` strictly below the edge.
pub(crate) fn secular_f_zeta(
    p_abs: f64,
    zeta: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let half_p2 = 0.5 * p_abs * p_abs;
    let d12 = kernels::kernel_zeta(
        KernelWeight::OneMinusTSquared,
        p_abs,
        Complex64::new(zeta, 0.0),
        params,
        quad,
    )?;
    Ok(half_p2 - zeta - params.pi_e2() * (half_p2 + zeta) * d12.re())
}

/// `F(p, z0(|p|))`.
pub fn secular_f_edge(p_abs: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    let half_p2 = 0.5 * p_abs * p_abs;
    let zeta = z0_offset(p_abs);
    let d12 = kernels::d12_at_edge(p_abs, params, quad)?;
    Ok(half_p2 - zeta - params.pi_e2() * (half_p2 + zeta) * d12.re())
}

/// `dF/dz` strictly below the edge.
pub fn secular_f_dz(p_abs: f64, z: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    let zeta = z - params.gamma0;
    let zc = Complex64::new(z, 0.0);
    let d12 = kernels::d12(p_abs, zc, params, quad)?.re();
    let d12_dz = kernels::d12_dz(p_abs, zc, params, quad)?.re();
    let mu = params.pi_e2();
    Ok(-1.0 - mu * d12 - mu * (0.5 * p_abs * p_abs + zeta) * d12_dz)
}

/// `K(p, z) = det U = (D1 + D2 + 2)^2 / (4T) * F(p, z)` with `T = T~(p) - z`.
pub fn k_det(p_abs: f64, z: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    let edge = z0(p_abs, params);
    if z > edge {
        return Err(Error::OnEssentialSpectrum { z, edge });
    }
    let t = 0.5 * p_abs * p_abs + params.diagonal_shift() - z;
    if t == 0.0 {
        return Err(Error::Pole(format!("T = T~(p) - z vanishes at z = {z}")));
    }
    let (d1, d2) = if z == edge {
        (
            kernels::d1_at_edge(p_abs, params, quad)?.re(),
            kernels::d2_at_edge(p_abs, params, quad)?.re(),
        )
    } else {
        let zc = Complex64::new(z, 0.0);
        (
            kernels::d1(p_abs, zc, params, quad)?.re(),
            kernels::d2(p_abs, zc, params, quad)?.re(),
        )
    };
    let f = secular_f(p_abs, z, params, quad)?;
    Ok((d1 + d2 + 2.0).powi(2) / (4.0 * t) * f)
}

/// Outcome of the bracketed search for the root of `F(p, .)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct GroundSearch {
    /// Root as an offset from `gamma0`.
    pub zeta: Option<f64>,
    pub f_at_edge: f64,
    /// `F` was positive at the lower bracket `max(0, gamma0 - p^2/2 - 1)`.
    pub lower_bracket_positive: bool,
    pub iterations: usize,
}

pub(crate) fn ground_search(
    p_abs: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<GroundSearch> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(format!("tol = {tol} must be > 0")));
    }
    let f = |zeta: f64| secular_f_zeta(p_abs, zeta, params, quad);
    let half_p2 = 0.5 * p_abs * p_abs;

    let edge_zeta = z0_offset(p_abs);
    let f_edge = secular_f_edge(p_abs, params, quad)?;
    let edge_eps = 1e-15 * (1.0 + half_p2 + edge_zeta.abs());
    if f_edge > edge_eps {
        return Ok(GroundSearch {
            zeta: None,
            f_at_edge: f_edge,
            lower_bracket_positive: true,
            iterations: 0,
        });
    }
    if f_edge.abs() <= edge_eps {
        // the root sits on the edge itself (p = 0, or e = 0 with |p| <= 1)
        return Ok(GroundSearch {
            zeta: Some(edge_zeta),
            f_at_edge: f_edge,
            lower_bracket_positive: true,
            iterations: 0,
        });
    }

    // F > 0 is guaranteed strictly below gamma0 - p^2/2.
    let safe_lo = -half_p2 - 1.0;
    let mut lo = safe_lo.max(-params.gamma0);
    let mut f_lo = f(lo)?;
    let lower_bracket_positive = f_lo > 0.0;
    if !lower_bracket_positive {
        lo = safe_lo;
        f_lo = f(lo)?;
        if !(f_lo > 0.0) {
            return Err(Error::NoConvergence {
                iterations: 0,
                lo,
                hi: edge_zeta,
                f_lo,
                f_hi: f_edge,
            });
        }
    }
    let mut hi = edge_zeta;
    let mut f_hi = f_edge;

    for iter in 1..=MAX_ITERATIONS {
        let width = hi - lo;
        if width <= tol {
            // secant polish inside the bracket
            let s = lo - f_lo * width / (f_hi - f_lo);
            if s > lo && s < hi {
                let fs = f(s)?;
                if fs.abs() <= 10.0 * tol || width <= 4.0 * f64::EPSILON * (1.0 + hi.abs()) {
                    return Ok(GroundSearch {
                        zeta: Some(s),
                        f_at_edge: f_edge,
                        lower_bracket_positive,
                        iterations: iter,
                    });
                }
                if fs > 0.0 {
                    lo = s;
                    f_lo = fs;
                } else {
                    hi = s;
                    f_hi = fs;
                }
                continue;
            }
            if width <= 4.0 * f64::EPSILON * (1.0 + hi.abs()) {
                let best = if f_lo.abs() < f_hi.abs() { lo } else { hi };
                return Ok(GroundSearch {
                    zeta: Some(best),
                    f_at_edge: f_edge,
                    lower_bracket_positive,
                    iterations: iter,
                });
            }
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm > 0.0 {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        lo: params.gamma0 + lo,
        hi: params.gamma0 + hi,
        f_lo,
        f_hi,
    })
}

/// Eigenvalue `z*(p)` of `H(p)` below the band edge, or `None` when
/// `F(p, z0(|p|)) > 0` and no point spectrum exists below the band.
pub fn solve_ground(
    p: &Momentum,
    params: &ModelParams,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<Option<f64>> {
    let search = ground_search(p.abs(), params, quad, tol)?;
    Ok(search.zeta.map(|zeta| params.gamma0 + zeta))
}

/// How much is known about the existence of a root at a given `|p|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `|p| <= 1`: a unique root exists.
    RootProven,
    /// `1 < |p| < 4 + 4 pi e^2 R^(1+2s)/(1+2s)`: decided by the edge sign.
    Unsettled,
    /// Beyond the a-priori threshold: no root.
    NoRootProven,
}

/// Soft audits of the a-priori bounds; `false` marks a violation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundAudit {
    /// `z* <= 7/2 + 4 pi e^2 R^(1+2s)/(1+2s) + gamma0`
    pub upper_bound: bool,
    /// `D12(p, z0(|p|))` below its a-priori bound
    pub d12_bound: bool,
    /// `z* > 0`, and `F > 0` on the lower bracket
    pub positivity: bool,
}

impl BoundAudit {
    pub fn all(&self) -> bool {
        self.upper_bound && self.d12_bound && self.positivity
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub p_abs: f64,
    pub ess_edge: f64,
    pub eigenvalue: Option<f64>,
    pub f_at_edge: f64,
    pub d12_edge: f64,
    pub regime: Regime,
    pub bounds: BoundAudit,
}

impl SpectrumReport {
    /// A root where none may exist counts as a failed audit too.
    pub fn consistent(&self) -> bool {
        self.bounds.all() && !(self.regime == Regime::NoRootProven && self.eigenvalue.is_some())
    }
}

pub fn regime(p_abs: f64, params: &ModelParams) -> Regime {
    if p_abs <= 1.0 {
        Regime::RootProven
    } else if p_abs < no_root_threshold(params) {
        Regime::Unsettled
    } else {
        Regime::NoRootProven
    }
}

pub fn spectrum_report(
    p_abs: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<SpectrumReport> {
    let search = ground_search(p_abs, params, quad, tol)?;
    let eigenvalue = search.zeta.map(|zeta| params.gamma0 + zeta);
    let d12_edge = kernels::d12_at_edge(p_abs, params, quad)?.re();
    let bounds = BoundAudit {
        upper_bound: eigenvalue.is_none_or(|z| z <= theorem1_bound(params)),
        d12_bound: d12_edge <= lemma_dd1_bound(p_abs, params),
        positivity: search.lower_bracket_positive && eigenvalue.is_none_or(|z| z > 0.0),
    };
    Ok(SpectrumReport {
        p_abs,
        ess_edge: z0(p_abs, params),
        eigenvalue,
        f_at_edge: search.f_at_edge,
        d12_edge,
        regime: regime(p_abs, params),
        bounds,
    })
}

/// Sweep `solve_ground` along `direction`; results are in grid order and a
/// failing point does not abort the others.
pub fn dispersion_curve(
    p_grid: &[f64],
    direction: &Vec3,
    params: &ModelParams,
    quad: &QuadratureSpec,
    tol: f64,
) -> Result<Vec<Result<SpectrumReport>>> {
    if p_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParams("momentum grid must be sorted ascending".into()));
    }
    let n = direction.norm();
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidParams("direction must be a non-zero vector".into()));
    }
    let unit = direction / n;
    Ok(p_grid
        .par_iter()
        .map(|&p_abs| {
            let p = Momentum(unit * p_abs);
            spectrum_report(p.abs(), params, quad, tol)
        })
        .collect())
}
