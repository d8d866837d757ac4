//! Canonical operator instances and the compact-commutant scenario setup.

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::{norm, NormKind};
use crate::operator::{operator_norm, top_singular_pair, OperatorHandle};
use crate::tolerance::Tolerances;

pub const DEFAULT_ETA: f64 = 1e-8;

/// Ball radius fixed by the compact-commutant construction.
pub const COROLLARY_EPSILON: f64 = 1.0 / 3.0;
/// Required lower bound on `‖K x₀‖` for a unit `x₀` when `‖K‖ = 1`.
pub const COROLLARY_THRESHOLD: f64 = 2.0 / 3.0;

fn default_eta() -> f64 {
    DEFAULT_ETA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GallerySpec {
    Volterra {
        size: usize,
    },
    JordanShift {
        size: usize,
        #[serde(default = "default_eta")]
        eta: f64,
    },
    WeightedShift {
        weights: Vec<f64>,
        #[serde(default = "default_eta")]
        eta: f64,
    },
    DenseUser {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rows: Option<Vec<Vec<f64>>>,
    },
}

impl GallerySpec {
    /// Build the operator; relative `dense_user` paths resolve against `base_dir`.
    pub fn build(&self, kind: NormKind, tol: Tolerances, base_dir: &Path) -> Result<OperatorHandle> {
        let m = match self {
            GallerySpec::Volterra { size } => volterra_matrix(*size)?,
            GallerySpec::JordanShift { size, eta } => jordan_matrix(*size, *eta)?,
            GallerySpec::WeightedShift { weights, eta } => weighted_shift_matrix(weights, *eta)?,
            GallerySpec::DenseUser { path: Some(p), rows: None } => {
                let p = if p.is_relative() { base_dir.join(p) } else { p.clone() };
                read_matrix_csv(&p)?
            }
            GallerySpec::DenseUser { path: None, rows: Some(rows) } => matrix_from_rows(rows)?,
            GallerySpec::DenseUser { .. } => {
                return Err(Error::Input("dense_user needs exactly one of `path` or `rows`".into()))
            }
        };
        OperatorHandle::with_tolerances(m, kind, tol)
    }
}

fn volterra_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::Input(format!("volterra needs n >= 2, got {n}")));
    }
    let h = 1.0 / n as f64;
    Ok(DMatrix::from_fn(n, n, |i, j| match i.cmp(&j) {
        std::cmp::Ordering::Greater => h,
        std::cmp::Ordering::Equal => h / 2.0,
        std::cmp::Ordering::Less => 0.0,
    }))
}

fn jordan_matrix(n: usize, eta: f64) -> Result<DMatrix<f64>> {
    if n < 2 {
        return Err(Error::Input(format!("jordan_shift needs n >= 2, got {n}")));
    }
    weighted_shift_matrix(&vec![1.0; n - 1], eta)
}

fn weighted_shift_matrix(weights: &[f64], eta: f64) -> Result<DMatrix<f64>> {
    if weights.is_empty() {
        return Err(Error::Input("weighted_shift needs at least one weight".into()));
    }
    if !(eta >= 0.0) || weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::Input("weighted_shift needs finite weights and eta >= 0".into()));
    }
    let n = weights.len() + 1;
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            eta
        } else if i == j + 1 {
            weights[j]
        } else {
            0.0
        }
    }))
}

/// Trapezoidal discretization of `(Vf)(t) = ∫₀ᵗ f` on `n` cells: `1/n` below
/// the diagonal, `1/(2n)` on it. Invertible, with spectral radius `1/(2n)`.
pub fn volterra(n: usize, kind: NormKind) -> Result<OperatorHandle> {
    OperatorHandle::new(volterra_matrix(n)?, kind)
}

/// Ones on the first subdiagonal plus `eta` on the diagonal. `eta = 0` is the
/// exact nilpotent shift and fails the injectivity check.
pub fn jordan_shift(n: usize, eta: f64, kind: NormKind) -> Result<OperatorHandle> {
    OperatorHandle::new(jordan_matrix(n, eta)?, kind)
}

pub fn weighted_shift(weights: &[f64], eta: f64, kind: NormKind) -> Result<OperatorHandle> {
    OperatorHandle::new(weighted_shift_matrix(weights, eta)?, kind)
}

pub fn dense_user(path: &Path, kind: NormKind) -> Result<OperatorHandle> {
    OperatorHandle::new(read_matrix_csv(path)?, kind)
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Input("matrix rows must form a non-empty square array".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Row-major, comma-separated, no header.
pub fn read_matrix_csv(path: &Path) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| s.parse::<f64>().map_err(|e| Error::Input(format!("{}: bad number `{s}`: {e}", path.display()))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    matrix_from_rows(&rows)
}

pub fn write_matrix_csv<W: std::io::Write>(m: &DMatrix<f64>, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    for r in m.row_iter() {
        w.write_record(r.iter().map(|x| x.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// `K / ‖K‖` in the handle's norm.
pub fn normalized(op: &OperatorHandle) -> Result<OperatorHandle> {
    let nrm = op.norm()?;
    if !(nrm > 0.0) {
        return Err(Error::Degenerate("cannot normalize the zero operator".into()));
    }
    OperatorHandle::with_tolerances(op.matrix() / nrm, op.kind(), *op.tolerances())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorollarySetup {
    #[serde(with = "crate::serde_vec")]
    pub x0: DVector<f64>,
    pub epsilon: f64,
    pub threshold: f64,
    pub k_x0_norm: f64,
    pub k_norm: f64,
    /// Certified `min_{x ∈ B(x₀,ε)} ‖Kx‖ ≥ ‖Kx₀‖ − ε‖K‖`.
    pub lower_bound: f64,
}

/// Pick a unit `x₀` with `‖Kx₀‖ ≥ 2/3` for a norm-one `K`, with `ε = 1/3`.
///
/// Candidates, in order: coordinate vectors, sign patterns of the rows, and
/// the top right singular vector. A later candidate replaces an earlier one
/// only on strict improvement.
pub fn corollary_setup(k: &OperatorHandle) -> Result<CorollarySetup> {
    let kind = k.kind();
    let tol = k.tolerances();
    let k_norm = operator_norm(k.matrix(), kind, tol)?;
    if (k_norm - 1.0).abs() > 1e-9 {
        return Err(Error::Input(format!("corollary setup expects ‖K‖ = 1, got {k_norm}")));
    }
    let n = k.dim();
    let m = k.matrix();
    let mut candidates: Vec<DVector<f64>> = (0..n)
        .map(|j| {
            let mut e = DVector::zeros(n);
            e[j] = 1.0;
            e
        })
        .collect();
    for r in m.row_iter() {
        let s = DVector::from_iterator(n, r.iter().map(|&x| if x < 0.0 { -1.0 } else { 1.0 }));
        candidates.push(s);
    }
    let (_, v) = top_singular_pair(m, tol)?;
    candidates.push(v);

    let mut best: Option<(f64, DVector<f64>)> = None;
    for c in candidates {
        let cn = norm(&c, kind);
        if cn == 0.0 {
            continue;
        }
        let x = c / cn;
        let val = norm(&(m * &x), kind);
        if best.as_ref().is_none_or(|(b, _)| val > *b * (1.0 + 1e-15)) {
            best = Some((val, x));
        }
    }
    let (k_x0_norm, x0) = best.ok_or_else(|| Error::Degenerate("no corollary candidate".into()))?;
    if k_x0_norm < COROLLARY_THRESHOLD {
        return Err(Error::Hypothesis(format!(
            "best candidate reaches ‖Kx₀‖ = {k_x0_norm}, below {COROLLARY_THRESHOLD}"
        )));
    }
    Ok(CorollarySetup {
        x0,
        epsilon: COROLLARY_EPSILON,
        threshold: COROLLARY_THRESHOLD,
        k_x0_norm,
        k_norm,
        lower_bound: k_x0_norm - COROLLARY_EPSILON * k_norm,
    })
}
