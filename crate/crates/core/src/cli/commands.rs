use std::fs::File;
use std::io::{BufWriter, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::json;

use super::config::{CommandOptions, RunConfig};
use super::output::{Cell, Table};
use super::state_io::{read_state, state_table};
use super::CliError;
use crate::error::Error;
use crate::model::{z0, Momentum};
use crate::oracle::{DiscretizedHamiltonian, QuadratureGrid, MAX_DENSE_DIM};
use crate::resolvent::{apply_resolvent_with, KernelSource, StateVector};
use crate::spectrum::{
    dispersion_curve, effective_mass, effective_mass_fd_extrapolated, effective_mass_sigma_limit,
    eigenfunction, lemma_dd1_bound, no_root_threshold, solve_ground, spectrum_report,
    theorem1_bound, Regime,
};

/// Result of a command that ran to completion.
pub struct Report {
    pub table: Table,
    /// Reasons a `--strict` run should fail.
    pub audit_failures: Vec<String>,
}

fn regime_name(r: Regime) -> &'static str {
    match r {
        Regime::RootProven => "root_proven",
        Regime::Unsettled => "unsettled",
        Regime::NoRootProven => "no_root_proven",
    }
}

pub fn dispersion(cfg: &RunConfig) -> Result<Report, CliError> {
    let ps = cfg.p_grid.values();
    let rows = dispersion_curve(&ps, &cfg.p_grid.direction(), &cfg.params, &cfg.quad, cfg.tol)?;
    let mut table = Table::new(vec![
        "p_abs",
        "z0",
        "z_star",
        "f_at_edge",
        "d12_edge",
        "regime",
        "upper_bound_ok",
        "d12_bound_ok",
        "positivity_ok",
        "error",
    ]);
    let mut failures = Vec::new();
    for (p, row) in ps.iter().zip(rows) {
        let edge = Cell::Num(z0(*p, &cfg.params));
        match row {
            Ok(r) => {
                if !r.consistent() {
                    failures.push(format!("bound audit failed at |p| = {p}"));
                }
                table.push(vec![
                    Cell::Num(r.p_abs),
                    edge,
                    Cell::opt(r.eigenvalue),
                    Cell::Num(r.f_at_edge),
                    Cell::Num(r.d12_edge),
                    Cell::Text(regime_name(r.regime).into()),
                    Cell::Bool(r.bounds.upper_bound),
                    Cell::Bool(r.bounds.d12_bound),
                    Cell::Bool(r.bounds.positivity),
                    Cell::Empty,
                ]);
            }
            Err(e) => {
                failures.push(format!("solver failed at |p| = {p}: {e}"));
                let mut cells = vec![Cell::Num(*p), edge];
                cells.extend(std::iter::repeat_n(Cell::Empty, 7));
                cells.push(Cell::Text(e.to_string()));
                table.push(cells);
            }
        }
    }
    Ok(Report {
        table,
        audit_failures: failures,
    })
}

pub fn effmass(cfg: &RunConfig) -> Result<Report, CliError> {
    let CommandOptions::Effmass {
        h,
        sigma_sweep,
        mass_tol,
    } = &cfg.options
    else {
        unreachable!("effmass called with other options")
    };
    let mut table = Table::new(vec![
        "method", "sigma", "h", "inv_mass", "mass", "target", "deviation", "flagged",
    ]);
    let mut failures = Vec::new();
    let p = &cfg.params;
    let formula = effective_mass(p, &cfg.quad)?;
    table.push(vec![
        Cell::Text("formula".into()),
        Cell::Num(p.sigma),
        Cell::Empty,
        Cell::Num(formula.inv_mass),
        Cell::opt(formula.mass),
        Cell::Empty,
        Cell::Empty,
        Cell::Bool(false),
    ]);
    let fd = effective_mass_fd_extrapolated(p, &cfg.quad, *h)?;
    let dev = (fd.inv_mass - formula.inv_mass).abs();
    let flagged = !(dev <= *mass_tol);
    if flagged {
        failures.push(format!("finite difference deviates from formula by {dev:e}"));
    }
    table.push(vec![
        Cell::Text("finite_difference".into()),
        Cell::Num(p.sigma),
        Cell::Num(*h),
        Cell::Num(fd.inv_mass),
        Cell::opt(fd.mass),
        Cell::Num(formula.inv_mass),
        Cell::Num(dev),
        Cell::Bool(flagged),
    ]);
    if let Some(sigmas) = sigma_sweep {
        let lim = effective_mass_sigma_limit(p.e, p.cutoff, sigmas, &cfg.quad)?;
        for (s, inv) in &lim.sequence {
            table.push(vec![
                Cell::Text("formula".into()),
                Cell::Num(*s),
                Cell::Empty,
                Cell::Num(*inv),
                Cell::opt((*inv > 0.0).then(|| 1.0 / inv)),
                Cell::Num(lim.target),
                Cell::Num((inv - lim.target).abs()),
                Cell::Bool(false),
            ]);
        }
        let flagged = !(lim.error() <= *mass_tol);
        if flagged {
            failures.push(format!("sigma limit misses the closed form by {:e}", lim.error()));
        }
        table.push(vec![
            Cell::Text("sigma_limit".into()),
            Cell::Num(0.0),
            Cell::Empty,
            Cell::Num(lim.extrapolated.inv_mass),
            Cell::opt(lim.extrapolated.mass),
            Cell::Num(lim.target),
            Cell::Num(lim.error()),
            Cell::Bool(flagged),
        ]);
    }
    Ok(Report {
        table,
        audit_failures: failures,
    })
}

fn aligned_grid(cfg: &RunConfig, p: &Momentum, n_rho: usize) -> Result<Arc<QuadratureGrid>, Error> {
    Ok(Arc::new(QuadratureGrid::build_aligned(
        p,
        n_rho,
        cfg.grid.n_t,
        cfg.grid.n_phi,
        &cfg.params,
    )?))
}

pub fn resolvent(cfg: &RunConfig) -> Result<Report, CliError> {
    let CommandOptions::Resolvent {
        p,
        z,
        input,
        residual_tol,
    } = &cfg.options
    else {
        unreachable!("resolvent called with other options")
    };
    let p = RunConfig::momentum(p);
    let z = Complex64::new(z[0], z[1]);
    let grid = aligned_grid(cfg, &p, cfg.grid.n_rho)?;
    let u = match input {
        Some(path) => read_state(path, &grid).map_err(CliError::Usage)?,
        None => {
            let mut u = StateVector::zeros(grid.clone());
            u.f0 = Complex64::new(1.0, 0.0);
            u
        }
    };
    let (f, system) = apply_resolvent_with(&p, z, &u, &cfg.params, KernelSource::Grid)?;
    let h = DiscretizedHamiltonian::new(&p, grid, &cfg.params)?;
    let residual = h.residual(z, &f, &u)?;
    let mut failures = Vec::new();
    if !(residual <= *residual_tol) {
        failures.push(format!("residual {residual:e} exceeds {residual_tol:e}"));
    }
    let mut table = state_table(&f);
    table.notes.push(("residual", json!(residual)));
    table.notes.push(("reduced_system", serde_json::to_value(system).map_err(|e| CliError::Failure(e.to_string()))?));
    Ok(Report {
        table,
        audit_failures: failures,
    })
}

/// Dense eigensolve up to this dimension, exact azimuthal reduction above.
const DENSE_ORACLE_DIM: usize = 2001;

pub fn oracle_compare(cfg: &RunConfig, dump: Option<&std::path::Path>) -> Result<Report, CliError> {
    let CommandOptions::OracleCompare { p, levels } = &cfg.options else {
        unreachable!("oracle-compare called with other options")
    };
    let p = RunConfig::momentum(p);
    let z_star = solve_ground(&p, &cfg.params, &cfg.quad, cfg.tol)?;
    let psi = z_star.map(|z| eigenfunction(&p, z, &cfg.params)).transpose()?;
    let mut table = Table::new(vec![
        "n_rho",
        "n_t",
        "n_phi",
        "dim",
        "method",
        "oracle_ground",
        "z_star",
        "gap",
        "eigenfunction_residual",
        "z0",
    ]);
    let mut gaps = Vec::new();
    for level in 0..*levels {
        let n_rho = cfg.grid.n_rho << level;
        let grid = aligned_grid(cfg, &p, n_rho)?;
        let h = DiscretizedHamiltonian::new(&p, grid.clone(), &cfg.params)?;
        if level == 0 {
            if let Some(path) = dump {
                if h.dim() > MAX_DENSE_DIM {
                    return Err(CliError::Usage(format!(
                        "cannot dump a matrix of dimension {}",
                        h.dim()
                    )));
                }
                let mut w = BufWriter::new(File::create(path).map_err(|e| {
                    CliError::Failure(format!("cannot create {}: {e}", path.display()))
                })?);
                h.write_triplets(&mut w)?;
                w.flush().map_err(|e| CliError::Failure(e.to_string()))?;
            }
        }
        let (method, ground) = if h.dim() <= DENSE_ORACLE_DIM {
            ("dense", h.ground_eigenvalue()?)
        } else {
            ("reduced", h.ground_eigenvalue_reduced()?)
        };
        let gap = z_star.map(|z| (ground - z).abs());
        if let Some(g) = gap {
            gaps.push(g);
        }
        let residual = match (&psi, z_star) {
            (Some(psi), Some(z)) => {
                let v = psi.discretize(&grid)?;
                Some(h.apply_h_minus_z(Complex64::new(z, 0.0), &v)?.norm() / v.norm())
            }
            _ => None,
        };
        table.push(vec![
            Cell::Int(n_rho as i64),
            Cell::Int(cfg.grid.n_t as i64),
            Cell::Int(cfg.grid.n_phi as i64),
            Cell::Int(h.dim() as i64),
            Cell::Text(method.into()),
            Cell::Num(ground),
            Cell::opt(z_star),
            Cell::opt(gap),
            Cell::opt(residual),
            Cell::Num(z0(p.abs(), &cfg.params)),
        ]);
    }
    let mut failures = Vec::new();
    for (i, w) in gaps.windows(2).enumerate() {
        if w[1] > w[0] && w[1] > 1e-12 {
            failures.push(format!("gap grew between levels {i} and {}", i + 1));
        }
    }
    Ok(Report {
        table,
        audit_failures: failures,
    })
}

pub fn bounds_audit(cfg: &RunConfig) -> Result<Report, CliError> {
    let params = &cfg.params;
    let mut ps = cfg.p_grid.values();
    ps.push(no_root_threshold(params) + 1.0);
    let upper = theorem1_bound(params);
    let reports: Vec<_> = ps
        .par_iter()
        .map(|&p| spectrum_report(p, params, &cfg.quad, cfg.tol))
        .collect();
    let mut table = Table::new(vec![
        "p_abs",
        "d12_edge",
        "d12_bound",
        "z_star",
        "upper_bound",
        "regime",
        "d12_ok",
        "upper_ok",
        "positivity_ok",
        "root_consistent",
        "error",
    ]);
    let mut failures = Vec::new();
    for (p, r) in ps.iter().zip(reports) {
        match r {
            Ok(r) => {
                let consistent = !(r.regime == Regime::NoRootProven && r.eigenvalue.is_some());
                if !(r.bounds.all() && consistent) {
                    failures.push(format!("audit failed at |p| = {p}"));
                }
                table.push(vec![
                    Cell::Num(*p),
                    Cell::Num(r.d12_edge),
                    Cell::Num(lemma_dd1_bound(*p, params)),
                    Cell::opt(r.eigenvalue),
                    Cell::Num(upper),
                    Cell::Text(regime_name(r.regime).into()),
                    Cell::Bool(r.bounds.d12_bound),
                    Cell::Bool(r.bounds.upper_bound),
                    Cell::Bool(r.bounds.positivity),
                    Cell::Bool(consistent),
                    Cell::Empty,
                ]);
            }
            Err(e) => {
                failures.push(format!("solver failed at |p| = {p}: {e}"));
                let mut cells = vec![Cell::Num(*p)];
                cells.extend(std::iter::repeat_n(Cell::Empty, 9));
                cells.push(Cell::Text(e.to_string()));
                table.push(cells);
            }
        }
    }
    Ok(Report {
        table,
        audit_failures: failures,
    })
}
