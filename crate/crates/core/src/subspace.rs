//! Candidate invariant subspaces spanned by polynomial images of `Qw`.
//!
//! The candidate is `span{Qᵏ(Qw) : 0 ≤ k ≤ m}`. Columns are normalized before
//! a rank-revealing SVD so that rapidly shrinking powers still contribute
//! directions; singular values below `rank_tol·σ_max` are dropped.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::check::{all_passed, Check};
use crate::error::{check_dim, Error, Result};
use crate::norm::{norm, Functional, SpaceSpec};
use crate::operator::OperatorHandle;

const RESIDUAL_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubspaceCandidate {
    /// Orthonormal columns.
    #[serde(with = "crate::serde_vec::rows")]
    pub basis: DMatrix<f64>,
    pub dim: usize,
    pub ambient_dim: usize,
    pub degree: usize,
    pub rank_tol: f64,
    /// Singular values of the normalized Krylov matrix, largest first.
    pub singular_values: Vec<f64>,
}

impl SubspaceCandidate {
    /// Orthogonal projector `B Bᵀ`.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// `‖BᵀB − I‖` entrywise maximum.
    pub fn orthonormality_defect(&self) -> f64 {
        let g = self.basis.tr_mul(&self.basis) - DMatrix::identity(self.dim, self.dim);
        g.amax()
    }

    /// `(‖P² − P‖, ‖P − Pᵀ‖)` in the spectral norm.
    pub fn projector_defects(&self) -> (f64, f64) {
        let p = self.projector();
        let idem = (&p * &p - &p).singular_values().max();
        let sym = (&p - p.transpose()).singular_values().max();
        (idem, sym)
    }
}

pub fn build_candidate(op: &OperatorHandle, w: &DVector<f64>, degree: usize, rank_tol: f64) -> Result<SubspaceCandidate> {
    check_dim(op.dim(), w.len())?;
    if degree < 1 {
        return Err(Error::Input("Krylov degree must be at least 1".into()));
    }
    if !(rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(Error::Input(format!("rank tolerance must lie in (0, 1), got {rank_tol}")));
    }
    let w_norm = w.norm();
    if !(w_norm > 0.0) {
        return Err(Error::Degenerate("w is zero".into()));
    }
    let q = op.matrix();
    let mut v = q * w;
    let q_norm = q.norm();
    if !(v.norm() > op.tolerances().injectivity * q_norm * w_norm) {
        let inj = op.injectivity();
        return Err(Error::NotInjective { sigma_min: inj.sigma_min, threshold: inj.threshold });
    }
    let n = op.dim();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(degree + 1);
    for _ in 0..=degree {
        let vn = v.norm();
        if vn > 0.0 {
            v /= vn;
            cols.push(v.clone());
            v = q * &v;
        } else {
            break;
        }
    }
    let krylov = DMatrix::from_columns(&cols);
    let svd = krylov.svd(true, false);
    let u = svd.u.ok_or_else(|| Error::Solver("SVD did not return left singular vectors".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let cutoff = rank_tol * singular_values[0];
    let keep: Vec<usize> = order.iter().copied().filter(|&i| svd.singular_values[i] > cutoff).collect();
    let basis = DMatrix::from_fn(n, keep.len(), |r, c| u[(r, keep[c])]);
    Ok(SubspaceCandidate { dim: keep.len(), basis, ambient_dim: n, degree, rank_tol, singular_values })
}

/// `max_b ‖(I − P)Ab‖ / max(‖Ab‖, floor)` over the basis columns.
pub fn invariance_residual(cand: &SubspaceCandidate, a: &DMatrix<f64>) -> Result<f64> {
    check_dim(cand.ambient_dim, a.nrows())?;
    check_dim(cand.ambient_dim, a.ncols())?;
    let ab = a * &cand.basis;
    let proj = &cand.basis * cand.basis.tr_mul(&ab);
    let mut worst: f64 = 0.0;
    for j in 0..cand.dim {
        let out = (ab.column(j) - proj.column(j)).norm();
        worst = worst.max(out / ab.column(j).norm().max(RESIDUAL_FLOOR));
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProperReport {
    pub dim: usize,
    pub ambient_dim: usize,
    /// `max_b |g(b)|/‖b‖` over the basis.
    pub annihilation: f64,
    pub checks: Vec<Check>,
    pub proper: bool,
}

pub fn properness_check(cand: &SubspaceCandidate, g: &Functional, space: &SpaceSpec) -> Result<ProperReport> {
    check_dim(space.dim(), cand.ambient_dim)?;
    check_dim(space.dim(), g.dim())?;
    let mut annihilation: f64 = 0.0;
    for j in 0..cand.dim {
        let b: DVector<f64> = cand.basis.column(j).into_owned();
        let bn = norm(&b, space.kind());
        annihilation = annihilation.max(g.apply(&b)?.abs() / bn.max(RESIDUAL_FLOOR));
    }
    let checks = vec![
        Check::at_least("dim_nontrivial", cand.dim as f64, 1.0, 0.0),
        Check::at_most("dim_proper", cand.dim as f64, (cand.ambient_dim - 1) as f64, 0.0),
    ];
    let proper = all_passed(&checks);
    Ok(ProperReport { dim: cand.dim, ambient_dim: cand.ambient_dim, annihilation, checks, proper })
}
