//! State vectors as CSV: `kx,ky,kz,weight,lambda,re,im`.
//!
//! One `lambda = 0` row carries the vacuum amplitude (coordinates and weight
//! are written as `0` and `1`); then one row per node for `lambda = 1` and
//! `lambda = 2`, in grid order.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Deserialize;

use super::output::{Cell, Table};
use crate::oracle::QuadratureGrid;
use crate::resolvent::StateVector;

pub const COLUMNS: [&str; 7] = ["kx", "ky", "kz", "weight", "lambda", "re", "im"];

#[derive(Debug, Deserialize)]
struct Row {
    kx: f64,
    ky: f64,
    kz: f64,
    weight: f64,
    lambda: u8,
    re: f64,
    im: f64,
}

pub fn state_table(f: &StateVector) -> Table {
    let mut t = Table::new(COLUMNS.to_vec());
    t.push(vec![
        Cell::Num(0.0),
        Cell::Num(0.0),
        Cell::Num(0.0),
        Cell::Num(1.0),
        Cell::Int(0),
        Cell::Num(f.f0.re),
        Cell::Num(f.f0.im),
    ]);
    for l in 0..2 {
        for (m, (k, w)) in f.grid.nodes.iter().zip(&f.grid.weights).enumerate() {
            let v = f.f1[l][m];
            t.push(vec![
                Cell::Num(k.x),
                Cell::Num(k.y),
                Cell::Num(k.z),
                Cell::Num(*w),
                Cell::Int(l as i64 + 1),
                Cell::Num(v.re),
                Cell::Num(v.im),
            ]);
        }
    }
    t
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

/// Read a state file written on `grid`; nodes and weights must match.
pub fn read_state(path: &Path, grid: &Arc<QuadratureGrid>) -> Result<StateVector, String> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let headers = reader
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(format!(
            "{}: expected header {}, found {}",
            path.display(),
            COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        ));
    }
    let m = grid.len();
    let mut f0 = None;
    let mut f1: [Vec<Complex64>; 2] = [Vec::with_capacity(m), Vec::with_capacity(m)];
    for (i, rec) in reader.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let row = rec.map_err(|e| format!("{}: row {line}: {e}", path.display()))?;
        let v = Complex64::new(row.re, row.im);
        match row.lambda {
            0 if f0.is_none() => f0 = Some(v),
            0 => return Err(format!("{}: row {line}: second lambda = 0 row", path.display())),
            1 | 2 => {
                let slot = &mut f1[row.lambda as usize - 1];
                let idx = slot.len();
                if idx >= m {
                    return Err(format!(
                        "{}: row {line}: more than {m} rows for lambda = {}",
                        path.display(),
                        row.lambda
                    ));
                }
                let k = grid.nodes[idx];
                if !(close(row.kx, k.x) && close(row.ky, k.y) && close(row.kz, k.z) && close(row.weight, grid.weights[idx])) {
                    return Err(format!(
                        "{}: row {line}: node ({}, {}, {}) with weight {} does not match grid node {idx}",
                        path.display(),
                        row.kx,
                        row.ky,
                        row.kz,
                        row.weight
                    ));
                }
                slot.push(v);
            }
            other => return Err(format!("{}: row {line}: lambda = {other} not in 0..=2", path.display())),
        }
    }
    let f0 = f0.ok_or_else(|| format!("{}: missing the lambda = 0 row", path.display()))?;
    StateVector::new(grid.clone(), f0, f1).map_err(|e| format!("{}: {e}", path.display()))
}
