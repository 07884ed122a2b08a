//! Finite-dimensional discretization of `H(p)` on a product quadrature grid.
//!
//! States are `(f0, f1(k_m, 1), f1(k_m, 2))` sampled at grid nodes. The
//! matrix acts on the amplitudes `sqrt(w_m) f1(k_m, l)` so that it is
//! symmetric and the discrete inner product is Euclidean; the state-level
//! routines take plain samples and apply the weights themselves.
//!
//! Matrix layout: index `0` is the vacuum, then `1 + l M + m` for
//! polarization `l` in `{0, 1}` and node `m < M`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{
    coupling_g_radial, form_factor, tilde_l, tilde_t, Momentum, ModelParams, Polarization, Vec3,
};
use crate::quadrature::gauss_legendre_on;
use crate::resolvent::StateVector;

/// Largest matrix the dense eigensolver is asked to handle.
pub const MAX_DENSE_DIM: usize = 6001;

/// Product rule on the ball `|k| <= R`: Gauss-Legendre in `rho` and in
/// `t = cos(theta)` about the polar axis `axis[0]`, uniform midpoints in `phi`.
///
/// Node `m = (i n_t + j) n_phi + l` for radial index `i`, polar `j`, azimuthal `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    pub n_rho: usize,
    pub n_t: usize,
    pub n_phi: usize,
    pub cutoff: f64,
    /// Right-handed orthonormal frame, polar axis first.
    pub axis: [Vec3; 3],
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_weights: Vec<f64>,
    pub t: Vec<f64>,
    pub t_weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Grid with polar axis `z^`.
    pub fn build(n_rho: usize, n_t: usize, n_phi: usize, params: &ModelParams) -> Result<Self> {
        Self::with_frame(n_rho, n_t, n_phi, params.cutoff, [Vec3::z(), Vec3::x(), Vec3::y()])
    }

    /// Grid whose polar axis is `p^`, so that `L~(p, k)` is constant on
    /// every azimuthal ring.
    pub fn build_aligned(
        p: &Momentum,
        n_rho: usize,
        n_t: usize,
        n_phi: usize,
        params: &ModelParams,
    ) -> Result<Self> {
        Self::with_frame(n_rho, n_t, n_phi, params.cutoff, aligned_frame(p))
    }

    fn with_frame(
        n_rho: usize,
        n_t: usize,
        n_phi: usize,
        cutoff: f64,
        axis: [Vec3; 3],
    ) -> Result<Self> {
        if n_rho < 2 || n_t < 2 || n_phi < 2 {
            return Err(Error::InvalidParams(format!(
                "grid counts must be >= 2, got ({n_rho}, {n_t}, {n_phi})"
            )));
        }
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::InvalidParams(format!("cutoff R = {cutoff} must be > 0")));
        }
        let (rho, rho_weights) = gauss_legendre_on(n_rho, 0.0, cutoff);
        let (t, t_weights) = gauss_legendre_on(n_t, -1.0, 1.0);
        let dphi = 2.0 * PI / n_phi as f64;
        let m = n_rho * n_t * n_phi;
        let mut nodes = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for (r, wr) in rho.iter().zip(&rho_weights) {
            for (c, wt) in t.iter().zip(&t_weights) {
                let s = (1.0 - c * c).sqrt();
                for l in 0..n_phi {
                    let phi = dphi * (l as f64 + 0.5);
                    let dir = axis[0] * *c + axis[1] * (s * phi.cos()) + axis[2] * (s * phi.sin());
                    nodes.push(dir * *r);
                    weights.push(wr * r * r * wt * dphi);
                }
            }
        }
        Ok(QuadratureGrid {
            n_rho,
            n_t,
            n_phi,
            cutoff,
            axis,
            nodes,
            weights,
            rho,
            rho_weights,
            t,
            t_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Dimension of the discretized state space, `1 + 2M`.
    pub fn state_dim(&self) -> usize {
        1 + 2 * self.len()
    }

    /// Radial and polar indices of node `m`.
    pub fn ring_of(&self, m: usize) -> (usize, usize) {
        let ring = m / self.n_phi;
        (ring / self.n_t, ring % self.n_t)
    }

    /// Whether the polar axis is parallel to `p` (always true at `p = 0`).
    pub fn is_aligned_with(&self, p: &Momentum) -> bool {
        let n = p.abs();
        n == 0.0 || (self.axis[0].dot(&p.0) / n - 1.0).abs() <= 1e-12
    }

    pub fn integrate<F: Fn(&Vec3) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(k, w)| w * f(k)).sum()
    }
}

/// `l1 = p^`, `l2 = (p2, -p1, 0)/p+`, `l3 = l1 x l2`; the `z^` frame when `p`
/// lies on the `z` axis.
pub fn aligned_frame(p: &Momentum) -> [Vec3; 3] {
    let v = p.0;
    let n = v.norm();
    if n == 0.0 {
        return [Vec3::z(), Vec3::x(), Vec3::y()];
    }
    let l1 = v / n;
    let p_plus = (v.x * v.x + v.y * v.y).sqrt();
    if p_plus <= 1e-14 * n {
        let l2 = Vec3::x();
        return [l1, l2, l1.cross(&l2)];
    }
    let l2 = Vec3::new(v.y, -v.x, 0.0) / p_plus;
    [l1, l2, l1.cross(&l2)]
}

/// Per-node data of the discretized operator.
#[derive(Debug, Clone)]
pub struct DiscretizedHamiltonian {
    pub p: Momentum,
    pub params: ModelParams,
    pub grid: Arc<QuadratureGrid>,
    /// `T~(p)`.
    pub t_tilde: f64,
    /// `L~(p, k_m)`.
    pub l_tilde: Vec<f64>,
    /// `G(k_m, l)` for both polarizations.
    pub form: [Vec<Vec3>; 2],
    /// `b_l(k_m) = -(e/sqrt 2) p . G(k_m, l)`.
    pub coupling: [Vec<f64>; 2],
}

impl DiscretizedHamiltonian {
    pub fn new(p: &Momentum, grid: Arc<QuadratureGrid>, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        if (grid.cutoff - params.cutoff).abs() > 1e-14 * params.cutoff {
            return Err(Error::GridMismatch(format!(
                "grid cutoff {} differs from R = {}",
                grid.cutoff, params.cutoff
            )));
        }
        let l_tilde = grid.nodes.iter().map(|k| tilde_l(p, k, params)).collect();
        let mut form = [Vec::new(), Vec::new()];
        let mut coupling = [Vec::new(), Vec::new()];
        let scale = -params.e * FRAC_1_SQRT_2;
        for lambda in Polarization::BOTH {
            let g: Vec<Vec3> = grid
                .nodes
                .iter()
                .map(|k| form_factor(k, lambda, params))
                .collect::<Result<_>>()?;
            coupling[lambda.slot()] = g.iter().map(|gv| scale * p.0.dot(gv)).collect();
            form[lambda.slot()] = g;
        }
        Ok(DiscretizedHamiltonian {
            p: *p,
            params: *params,
            t_tilde: tilde_t(p, params),
            l_tilde,
            form,
            coupling,
            grid,
        })
    }

    pub fn dim(&self) -> usize {
        self.grid.state_dim()
    }

    fn node_count(&self) -> usize {
        self.grid.len()
    }

    /// Dense symmetric matrix; fails above [`MAX_DENSE_DIM`].
    pub fn matrix(&self) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        if dim > MAX_DENSE_DIM {
            return Err(Error::InvalidParams(format!(
                "dense matrix of dimension {dim} exceeds the limit {MAX_DENSE_DIM}"
            )));
        }
        let m = self.node_count();
        let half_e2 = 0.5 * self.params.e * self.params.e;
        let sqrt_w: Vec<f64> = self.grid.weights.iter().map(|w| w.sqrt()).collect();
        // scaled form factors G sqrt(w) in matrix order
        let scaled: Vec<Vec3> = (0..2)
            .flat_map(|l| (0..m).map(move |i| (l, i)))
            .map(|(l, i)| self.form[l][i] * sqrt_w[i])
            .collect();
        let first_row: Vec<f64> = (0..2)
            .flat_map(|l| (0..m).map(move |i| (l, i)))
            .map(|(l, i)| self.coupling[l][i] * sqrt_w[i])
            .collect();

        let mut h = DMatrix::<f64>::zeros(dim, dim);
        h.as_mut_slice()
            .par_chunks_mut(dim)
            .enumerate()
            .for_each(|(col, column)| {
                if col == 0 {
                    column[0] = self.t_tilde;
                    column[1..].copy_from_slice(&first_row);
                    return;
                }
                let c = col - 1;
                column[0] = first_row[c];
                let gc = scaled[c];
                for (r, entry) in column[1..].iter_mut().enumerate() {
                    *entry = half_e2 * scaled[r].dot(&gc);
                }
                column[col] += self.l_tilde[c % m];
            });
        Ok(h)
    }

    /// `H0 = diag(T~, L~)`, the part without the field coupling.
    pub fn free_part(&self) -> DMatrix<f64> {
        let m = self.node_count();
        let mut d = Vec::with_capacity(self.dim());
        d.push(self.t_tilde);
        d.extend(self.l_tilde.iter());
        d.extend(self.l_tilde.iter());
        debug_assert_eq!(d.len(), 1 + 2 * m);
        DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d))
    }

    /// Lowest eigenvalue from a dense symmetric eigensolve.
    pub fn ground_eigenvalue(&self) -> Result<f64> {
        Ok(self.matrix()?.symmetric_eigenvalues().min())
    }

    /// Lowest eigenvalue through the exact azimuthal reduction; needs a grid
    /// aligned with `p`.
    pub fn ground_eigenvalue_reduced(&self) -> Result<f64> {
        AzimuthalBlock::new(self)?.ground_eigenvalue()
    }

    /// `(H - z) f` on node samples.
    pub fn apply_h_minus_z(&self, z: Complex64, f: &StateVector) -> Result<StateVector> {
        self.check_grid(f)?;
        let m = self.node_count();
        let w = &self.grid.weights;
        let mut x = nalgebra::Vector3::<Complex64>::zeros();
        let mut y0 = (self.t_tilde - z) * f.f0;
        for l in 0..2 {
            for (i, wi) in w.iter().enumerate() {
                let wf = f.f1[l][i] * wi;
                y0 += wf * self.coupling[l][i];
                x += self.form[l][i].map(|c| Complex64::new(c, 0.0)) * wf;
            }
        }
        let half_e2 = 0.5 * self.params.e * self.params.e;
        let f1: [Vec<Complex64>; 2] = std::array::from_fn(|l| {
            (0..m)
                .into_par_iter()
                .map(|i| {
                    let g = &self.form[l][i];
                    let gx = x[0] * g.x + x[1] * g.y + x[2] * g.z;
                    (self.l_tilde[i] - z) * f.f1[l][i] + self.coupling[l][i] * f.f0 + gx * half_e2
                })
                .collect()
        });
        StateVector::new(self.grid.clone(), y0, f1)
    }

    /// `||(H - z) f - u|| / ||u||`, `0` when both `f` and `u` vanish.
    pub fn residual(&self, z: Complex64, f: &StateVector, u: &StateVector) -> Result<f64> {
        self.check_grid(u)?;
        let r = self.apply_h_minus_z(z, f)?.sub(u)?;
        let nu = u.norm();
        let nr = r.norm();
        if nu == 0.0 {
            return Ok(if nr == 0.0 { 0.0 } else { f64::INFINITY });
        }
        Ok(nr / nu)
    }

    fn check_grid(&self, f: &StateVector) -> Result<()> {
        if Arc::ptr_eq(&f.grid, &self.grid) || *f.grid == *self.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch("state vector lives on a different grid".into()))
        }
    }

    /// Nonzero entries as `row col value` lines, upper triangle included.
    pub fn write_triplets<W: Write>(&self, out: &mut W) -> Result<()> {
        let h = self.matrix()?;
        writeln!(out, "row,col,value")?;
        for j in 0..h.ncols() {
            for i in 0..h.nrows() {
                let v = h[(i, j)];
                if v != 0.0 {
                    writeln!(out, "{i},{j},{v:.16e}")?;
                }
            }
        }
        Ok(())
    }
}

/// The part of the discretized operator reachable from the vacuum.
///
/// On a `p`-aligned grid with `n_phi >= 2` the vacuum only couples to one
/// vector per `(rho_i, t_j)` ring, `(p^ . e_l(k)) sqrt(w)`. The span of the
/// vacuum and these ring vectors is invariant, and its complement has
/// spectrum in `[min L~, inf)` with `min L~` itself an eigenvalue, so the
/// ground state is `min(eig(block), min L~)`.
#[derive(Debug, Clone)]
pub struct AzimuthalBlock {
    pub matrix: DMatrix<f64>,
    pub l_tilde_min: f64,
}

impl AzimuthalBlock {
    pub fn new(h: &DiscretizedHamiltonian) -> Result<Self> {
        let grid = &h.grid;
        if !grid.is_aligned_with(&h.p) {
            return Err(Error::GridMismatch(
                "azimuthal reduction needs a grid aligned with p".into(),
            ));
        }
        let rings = grid.n_rho * grid.n_t;
        let dim = 1 + rings;
        if dim > MAX_DENSE_DIM {
            return Err(Error::InvalidParams(format!(
                "reduced block of dimension {dim} exceeds the limit {MAX_DENSE_DIM}"
            )));
        }
        let params = &h.params;
        let p_abs = h.p.abs();
        let shift = params.diagonal_shift();
        let mut coupling = Vec::with_capacity(rings);
        let mut diag = Vec::with_capacity(rings);
        for (i, (r, wr)) in grid.rho.iter().zip(&grid.rho_weights).enumerate() {
            let g = coupling_g_radial(*r, params)?;
            for (j, (t, wt)) in grid.t.iter().zip(&grid.t_weights).enumerate() {
                let s = (1.0 - t * t).sqrt();
                let big_w = 2.0 * PI * wr * r * r * wt;
                coupling.push(g * s * big_w.sqrt());
                diag.push(0.5 * (p_abs * p_abs - 2.0 * p_abs * r * t + r * r) + r + shift);
                debug_assert_eq!(coupling.len(), 1 + i * grid.n_t + j);
            }
        }
        let half_e2 = 0.5 * params.e * params.e;
        let vac = -params.e * FRAC_1_SQRT_2 * p_abs;
        let mut matrix = DMatrix::<f64>::zeros(dim, dim);
        matrix[(0, 0)] = h.t_tilde;
        for a in 0..rings {
            matrix[(0, a + 1)] = vac * coupling[a];
            matrix[(a + 1, 0)] = vac * coupling[a];
            for b in 0..rings {
                matrix[(a + 1, b + 1)] = half_e2 * coupling[a] * coupling[b];
            }
            matrix[(a + 1, a + 1)] += diag[a];
        }
        let l_tilde_min = h.l_tilde.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(AzimuthalBlock { matrix, l_tilde_min })
    }

    pub fn ground_eigenvalue(&self) -> Result<f64> {
        Ok(self
            .matrix
            .clone()
            .symmetric_eigenvalues()
            .min()
            .min(self.l_tilde_min))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::norm_g_sq;
    use approx::assert_relative_eq;

    fn params(e: f64) -> ModelParams {
        ModelParams::with_default_gamma0(e, 1.0, 0.0).unwrap()
    }

    #[test]
    fn grid_integrates_ball_volume_and_coupling() {
        let p = params(1.0);
        let g = QuadratureGrid::build(8, 8, 8, &p).unwrap();
        assert_relative_eq!(g.weights.iter().sum::<f64>(), 4.0 * PI / 3.0, epsilon = 1e-12);
        assert!(g.weights.iter().all(|&w| w > 0.0));
        assert!(g.nodes.iter().all(|k| k.norm() > 0.0 && k.norm() <= 1.0));
        // sum over both polarizations of g^2 gives ||G||^2
        let s = g.integrate(|k| 2.0 * crate::model::coupling_g(k, &p).unwrap().powi(2));
        assert_relative_eq!(s, norm_g_sq(&p), max_relative = 1e-12);
        assert!(QuadratureGrid::build(1, 8, 8, &p).is_err());
    }

    #[test]
    fn aligned_frame_is_right_handed() {
        for v in [
            Vec3::new(0.3, -0.2, 0.5),
            Vec3::new(0.0, 0.0, -2.0),
            Vec3::new(1.0, 0.0, 0.0),
        ] {
            let f = aligned_frame(&Momentum(v));
            assert_relative_eq!(f[0], v.normalize(), epsilon = 1e-15);
            for axis in &f {
                assert_relative_eq!(axis.norm(), 1.0, epsilon = 1e-15);
            }
            assert!(f[0].dot(&f[1]).abs() < 1e-15);
            assert_relative_eq!(f[0].cross(&f[1]), f[2], epsilon = 1e-15);
        }
    }

    #[test]
    fn matrix_is_symmetric_with_low_rank_coupling() {
        let p = params(0.8);
        let mom = Momentum::new(0.2, -0.3, 0.1);
        let grid = Arc::new(QuadratureGrid::build(4, 4, 4, &p).unwrap());
        let h = DiscretizedHamiltonian::new(&mom, grid, &p).unwrap();
        let m = h.matrix().unwrap();
        assert_eq!(&m - m.transpose(), DMatrix::zeros(h.dim(), h.dim()));
        assert!(m.diagonal().iter().all(|&d| d >= p.diagonal_shift()));
        let w = &m - h.free_part();
        let sv = w.singular_values();
        let rank = sv.iter().filter(|&&s| s > 1e-12 * sv.max()).count();
        assert!(rank <= 7, "rank {rank}");
    }

    #[test]
    fn free_operator_is_diagonal() {
        let free = params(0.0);
        let mom = Momentum::new(0.0, 0.4, 0.0);
        let grid = Arc::new(QuadratureGrid::build(3, 3, 3, &free).unwrap());
        let h = DiscretizedHamiltonian::new(&mom, grid, &free).unwrap();
        let m = h.matrix().unwrap();
        assert_eq!(m, h.free_part());
        assert_relative_eq!(m[(0, 0)], 0.08, epsilon = 1e-16);
    }

    #[test]
    fn reduced_block_reproduces_dense_ground_state() {
        for (e, pa) in [(1.0, 0.5), (0.4, 0.9), (1.0, 0.0), (2.0, 1.3)] {
            let p = params(e);
            let mom = Momentum::new(pa * 0.48, pa * 0.6, pa * 0.64);
            let grid = Arc::new(QuadratureGrid::build_aligned(&mom, 6, 5, 4, &p).unwrap());
            let h = DiscretizedHamiltonian::new(&mom, grid, &p).unwrap();
            let dense = h.ground_eigenvalue().unwrap();
            let reduced = h.ground_eigenvalue_reduced().unwrap();
            assert!((dense - reduced).abs() < 1e-11, "e={e} p={pa}: {dense} vs {reduced}");
        }
    }

    #[test]
    fn reduction_rejects_misaligned_grid() {
        let p = params(1.0);
        let mom = Momentum::new(0.5, 0.0, 0.0);
        let grid = Arc::new(QuadratureGrid::build(4, 4, 4, &p).unwrap());
        let h = DiscretizedHamiltonian::new(&mom, grid, &p).unwrap();
        assert!(matches!(h.ground_eigenvalue_reduced(), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn zero_momentum_ground_state_is_gamma0() {
        let p = params(1.0);
        let mom = Momentum::new(0.0, 0.0, 0.0);
        let grid = Arc::new(QuadratureGrid::build(8, 6, 4, &p).unwrap());
        let h = DiscretizedHamiltonian::new(&mom, grid, &p).unwrap();
        assert_relative_eq!(h.ground_eigenvalue().unwrap(), PI, epsilon = 1e-12);
    }

    #[test]
    fn matrix_free_apply_matches_dense_product() {
        use rand::{Rng, SeedableRng};
        let p = params(0.9);
        let mom = Momentum::new(0.1, 0.7, -0.2);
        let grid = Arc::new(QuadratureGrid::build(4, 3, 4, &p).unwrap());
        let h = DiscretizedHamiltonian::new(&mom, grid.clone(), &p).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut c = || Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let f = StateVector::new(
            grid.clone(),
            c(),
            std::array::from_fn(|_| (0..grid.len()).map(|_| c()).collect()),
        )
        .unwrap();
        let z = Complex64::new(2.0, 0.5);
        let y = h.apply_h_minus_z(z, &f).unwrap();
        let m = h.matrix().unwrap().map(|v| Complex64::new(v, 0.0));
        let x = f.amplitudes();
        let expected = &m * &x - &x * z;
        let got = y.amplitudes();
        assert!((expected - got).norm() < 1e-12 * x.norm() * m.norm());

        let zero = StateVector::zeros(grid);
        assert_eq!(h.residual(z, &zero, &zero).unwrap(), 0.0);
    }

    #[test]
    fn triplets_cover_all_nonzeros() {
        let p = params(0.5);
        let grid = Arc::new(QuadratureGrid::build(2, 2, 2, &p).unwrap());
        let h = DiscretizedHamiltonian::new(&Momentum::new(0.3, 0.0, 0.0), grid, &p).unwrap();
        let mut buf = Vec::new();
        h.write_triplets(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let nnz = h.matrix().unwrap().iter().filter(|v| **v != 0.0).count();
        assert_eq!(text.lines().count(), nnz + 1);
    }
}
