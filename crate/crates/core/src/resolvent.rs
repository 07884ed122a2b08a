//! Explicit resolvent `(H(p) - z)^{-1}` on grid samples.
//!
//! Writing `T = T~(p) - z`, `L = L~(p, k) - z`, `b_l = -(e/sqrt 2) p . G(k, l)`
//! and `N = b_l p + (T e/sqrt 2) G(k, l)`, the solution of `(H - z) f = u` is
//!
//! ```text
//! f0       = (u0 + p . Q) / T
//! f1(k, l) = (T u1 - b_l u0 - N . Q) / (T L)
//! ```
//!
//! where `Q U = S` with `U = a I + b p p^T` and
//! `S = (e/sqrt 2) sum_l int G(k, l) [u1/L - b_l u0/(T L)] dk`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::Arc;

use nalgebra::{DVector, Matrix3, Vector3};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{self, QuadratureSpec};
use crate::model::{
    coupling_g, form_factor, tilde_l, tilde_t, z0, Momentum, ModelParams, Polarization, Vec3,
};
use crate::oracle::QuadratureGrid;

type C64 = Complex64;

/// Real `z` must stay this far below the lowest photon energy on the grid.
pub const REAL_Z_MARGIN: f64 = 1e-8;

/// `(f0, f1(k_m, 1), f1(k_m, 2))` sampled on a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub grid: Arc<QuadratureGrid>,
    pub f0: C64,
    pub f1: [Vec<C64>; 2],
}

impl StateVector {
    pub fn new(grid: Arc<QuadratureGrid>, f0: C64, f1: [Vec<C64>; 2]) -> Result<Self> {
        let m = grid.len();
        if f1[0].len() != m || f1[1].len() != m {
            return Err(Error::GridMismatch(format!(
                "photon samples have lengths ({}, {}), grid has {m} nodes",
                f1[0].len(),
                f1[1].len()
            )));
        }
        Ok(StateVector { grid, f0, f1 })
    }

    pub fn zeros(grid: Arc<QuadratureGrid>) -> Self {
        let m = grid.len();
        StateVector {
            grid,
            f0: C64::new(0.0, 0.0),
            f1: [vec![C64::new(0.0, 0.0); m], vec![C64::new(0.0, 0.0); m]],
        }
    }

    /// `|f0|^2 + sum_l sum_m w_m |f1(k_m, l)|^2`.
    pub fn norm_sq(&self) -> f64 {
        let w = &self.grid.weights;
        self.f0.norm_sqr()
            + self
                .f1
                .iter()
                .map(|c| c.iter().zip(w).map(|(x, wi)| wi * x.norm_sqr()).sum::<f64>())
                .sum::<f64>()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    fn same_grid(&self, other: &StateVector) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("state vectors live on different grids".into()))
        }
    }

    /// `alpha self + beta other`.
    pub fn combine(&self, alpha: C64, other: &StateVector, beta: C64) -> Result<StateVector> {
        self.same_grid(other)?;
        let f1 = std::array::from_fn(|l| {
            self.f1[l]
                .iter()
                .zip(&other.f1[l])
                .map(|(x, y)| alpha * x + beta * y)
                .collect()
        });
        Ok(StateVector {
            grid: self.grid.clone(),
            f0: alpha * self.f0 + beta * other.f0,
            f1,
        })
    }

    pub fn sub(&self, other: &StateVector) -> Result<StateVector> {
        self.combine(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, alpha: C64) -> StateVector {
        StateVector {
            grid: self.grid.clone(),
            f0: alpha * self.f0,
            f1: std::array::from_fn(|l| self.f1[l].iter().map(|x| alpha * x).collect()),
        }
    }

    pub fn conj(&self) -> StateVector {
        StateVector {
            grid: self.grid.clone(),
            f0: self.f0.conj(),
            f1: std::array::from_fn(|l| self.f1[l].iter().map(|x| x.conj()).collect()),
        }
    }

    /// Euclidean amplitudes `(f0, sqrt(w) f1)` in the matrix layout of
    /// [`crate::oracle::DiscretizedHamiltonian`].
    pub fn amplitudes(&self) -> DVector<C64> {
        let w = &self.grid.weights;
        let mut v = Vec::with_capacity(self.grid.state_dim());
        v.push(self.f0);
        for l in 0..2 {
            v.extend(self.f1[l].iter().zip(w).map(|(x, wi)| x * wi.sqrt()));
        }
        DVector::from_vec(v)
    }

    pub fn from_amplitudes(grid: Arc<QuadratureGrid>, x: &DVector<C64>) -> Result<Self> {
        let m = grid.len();
        if x.len() != 1 + 2 * m {
            return Err(Error::GridMismatch(format!(
                "amplitude vector of length {} does not fit {m} nodes",
                x.len()
            )));
        }
        let f1 = std::array::from_fn(|l| {
            (0..m)
                .map(|i| x[1 + l * m + i] / grid.weights[i].sqrt())
                .collect()
        });
        Ok(StateVector {
            f0: x[0],
            f1,
            grid,
        })
    }
}

/// `b_l = -(e/sqrt 2) p . G(k, l)`.
pub fn b_lambda(p: &Momentum, k: &Vec3, lambda: Polarization, params: &ModelParams) -> Result<f64> {
    Ok(-params.e * FRAC_1_SQRT_2 * p.0.dot(&form_factor(k, lambda, params)?))
}

/// `N = b_l p + (T e/sqrt 2) G(k, l)`.
pub fn n_vector(
    p: &Momentum,
    k: &Vec3,
    lambda: Polarization,
    t: C64,
    params: &ModelParams,
) -> Result<Vector3<C64>> {
    let g = form_factor(k, lambda, params)?;
    let b = -params.e * FRAC_1_SQRT_2 * p.0.dot(&g);
    let c = t * (params.e * FRAC_1_SQRT_2);
    Ok(Vector3::from_fn(|i, _| C64::new(b * p.0[i], 0.0) + c * g[i]))
}

/// Where the scalar kernels `D1`, `D2` inside `U` come from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSource {
    /// Continuum integrals; the result then carries the grid's
    /// discretization error in `S`.
    Continuum(QuadratureSpec),
    /// The same weighted sums that define `S`, so the output solves the
    /// discretized equation exactly. Needs a grid aligned with `p` and
    /// `n_phi >= 3`.
    Grid,
}

/// The `3 x 3` problem `Q U = S` behind one resolvent application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedSystem {
    pub t: C64,
    pub a: C64,
    pub b: C64,
    pub s: [C64; 3],
    pub q: [C64; 3],
}

impl ReducedSystem {
    pub fn u_matrix(&self, p: &Momentum) -> Matrix3<C64> {
        u_matrix(self.a, self.b, p)
    }
}

fn u_matrix(a: C64, b: C64, p: &Momentum) -> Matrix3<C64> {
    let v = p.0;
    Matrix3::from_fn(|i, j| {
        let d = if i == j { a } else { C64::new(0.0, 0.0) };
        d + b * (v[i] * v[j])
    })
}

/// `a = (2 + D1 + D2)/2`, `b = (D1 - 3 D2)/(2 p^2) - (D1 - D2)/T`; `b = 0` at `p = 0`.
pub fn u_coeffs_from(d1: C64, d2: C64, p: &Momentum, t: C64) -> (C64, C64) {
    let a = (2.0 + d1 + d2) * 0.5;
    let p2 = p.abs_sq();
    if p2 == 0.0 {
        return (a, C64::new(0.0, 0.0));
    }
    (a, (d1 - d2 * 3.0) / (2.0 * p2) - (d1 - d2) / t)
}

fn t_value(p: &Momentum, z: C64, params: &ModelParams) -> Result<C64> {
    let t = tilde_t(p, params) - z;
    if t == C64::new(0.0, 0.0) {
        return Err(Error::Pole(format!("T = T~(p) - z vanishes at z = {z}")));
    }
    Ok(t)
}

/// `(a, b)` from the continuum kernels.
pub fn u_coeffs(
    p: &Momentum,
    z: C64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<(C64, C64)> {
    let t = t_value(p, z, params)?;
    let d1 = kernels::d1(p.abs(), z, params, quad)?.value;
    let d2 = kernels::d2(p.abs(), z, params, quad)?.value;
    Ok(u_coeffs_from(d1, d2, p, t))
}

/// `D1`, `D2` as the grid sums `(e^2/2) sum_m w_m g^2 {1, t^2} / L`, with
/// `t = k^ . p^`.
pub fn grid_kernels(
    p: &Momentum,
    z: C64,
    grid: &QuadratureGrid,
    params: &ModelParams,
) -> Result<(C64, C64)> {
    if !grid.is_aligned_with(p) || grid.n_phi < 3 {
        return Err(Error::GridMismatch(
            "grid kernels need a grid aligned with p and n_phi >= 3".into(),
        ));
    }
    let axis = grid.axis[0];
    let half_e2 = 0.5 * params.e * params.e;
    let mut d1 = C64::new(0.0, 0.0);
    let mut d2 = C64::new(0.0, 0.0);
    for (k, w) in grid.nodes.iter().zip(&grid.weights) {
        let g2 = coupling_g(k, params)?.powi(2);
        let l = tilde_l(p, k, params) - z;
        let c = axis.dot(k) / k.norm();
        let term = w * g2 / l;
        d1 += term;
        d2 += term * (c * c);
    }
    Ok((d1 * half_e2, d2 * half_e2))
}

/// `S(p, z)` as the grid quadrature of `u`.
pub fn s_vector(p: &Momentum, z: C64, u: &StateVector, params: &ModelParams) -> Result<Vector3<C64>> {
    let t = t_value(p, z, params)?;
    let grid = &u.grid;
    let c = params.e * FRAC_1_SQRT_2;
    let mut s = Vector3::<C64>::zeros();
    if c == 0.0 {
        return Ok(s);
    }
    for lambda in Polarization::BOTH {
        let l_idx = lambda.slot();
        for (m, (k, w)) in grid.nodes.iter().zip(&grid.weights).enumerate() {
            let g = form_factor(k, lambda, params)?;
            let b = -c * p.0.dot(&g);
            let l = tilde_l(p, k, params) - z;
            let amp = (u.f1[l_idx][m] - u.f0 * b / t) / l * (*w * c);
            s += Vector3::from_fn(|i, _| amp * g[i]);
        }
    }
    Ok(s)
}

/// `Q = S U^{-1}` with `U^{-1} = (1/a)(I - b/(a + b p^2) p p^T)`.
pub fn solve_q(a: C64, b: C64, p: &Momentum, s: &Vector3<C64>) -> Result<Vector3<C64>> {
    let p2 = p.abs_sq();
    let c = a + b * p2;
    let scale = 1.0 + a.norm() + b.norm() * p2;
    if a.norm() <= 1e-14 * scale || c.norm() <= 1e-14 * scale {
        return Err(Error::Singular { re: a.re, im: a.im });
    }
    let v = p.0.map(|x| C64::new(x, 0.0));
    let ps = v.dot(s);
    Ok((s - v * (b / c * ps)) / a)
}

/// Resolvent on the grid of `u`, with grid-sourced kernels.
pub fn apply_resolvent(
    p: &Momentum,
    z: C64,
    u: &StateVector,
    params: &ModelParams,
) -> Result<StateVector> {
    Ok(apply_resolvent_with(p, z, u, params, KernelSource::Grid)?.0)
}

pub fn apply_resolvent_with(
    p: &Momentum,
    z: C64,
    u: &StateVector,
    params: &ModelParams,
    source: KernelSource,
) -> Result<(StateVector, ReducedSystem)> {
    params.validate()?;
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("z = {z} is not finite")));
    }
    let grid = u.grid.clone();
    if (grid.cutoff - params.cutoff).abs() > 1e-14 * params.cutoff {
        return Err(Error::GridMismatch(format!(
            "grid cutoff {} differs from R = {}",
            grid.cutoff, params.cutoff
        )));
    }
    let l_tilde: Vec<f64> = grid.nodes.iter().map(|k| tilde_l(p, k, params)).collect();
    if z.im == 0.0 {
        let floor = match source {
            KernelSource::Grid => l_tilde.iter().copied().fold(f64::INFINITY, f64::min),
            KernelSource::Continuum(_) => z0(p.abs(), params),
        };
        if z.re > floor - REAL_Z_MARGIN * (1.0 + floor.abs()) {
            return Err(Error::OnEssentialSpectrum { z: z.re, edge: floor });
        }
    }
    let t = t_value(p, z, params)?;
    let (d1, d2) = match source {
        KernelSource::Grid => grid_kernels(p, z, &grid, params)?,
        KernelSource::Continuum(quad) => {
            let d1 = kernels::d1(p.abs(), z, params, &quad)?.value;
            let d2 = kernels::d2(p.abs(), z, params, &quad)?.value;
            (d1, d2)
        }
    };
    let (a, b) = u_coeffs_from(d1, d2, p, t);
    let s = s_vector(p, z, u, params)?;
    let q = solve_q(a, b, p, &s)?;

    let pv = p.0.map(|x| C64::new(x, 0.0));
    let f0 = (u.f0 + pv.dot(&q)) / t;
    let c = params.e * FRAC_1_SQRT_2;
    let mut f1: [Vec<C64>; 2] = [Vec::new(), Vec::new()];
    for lambda in Polarization::BOTH {
        let l_idx = lambda.slot();
        f1[l_idx] = grid
            .nodes
            .par_iter()
            .enumerate()
            .map(|(m, k)| {
                let g = form_factor(k, lambda, params)?;
                let bl = -c * p.0.dot(&g);
                let n_dot_q: C64 = (0..3).map(|i| (C64::new(bl * p.0[i], 0.0) + t * c * g[i]) * q[i]).sum();
                let l = l_tilde[m] - z;
                Ok((t * u.f1[l_idx][m] - u.f0 * bl - n_dot_q) / (t * l))
            })
            .collect::<Result<Vec<C64>>>()?;
    }
    let out = StateVector::new(grid, f0, f1)?;
    let system = ReducedSystem {
        t,
        a,
        b,
        s: [s[0], s[1], s[2]],
        q: [q[0], q[1], q[2]],
    };
    Ok((out, system))
}
