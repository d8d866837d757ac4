//! The ℓ¹, ℓ² and ℓ∞ norms on ℝⁿ, their duals, and norming functionals.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NormKind {
    L1,
    L2,
    #[serde(rename = "LINF")]
    Linf,
}

impl NormKind {
    pub fn dual(self) -> NormKind {
        match self {
            NormKind::L1 => NormKind::Linf,
            NormKind::L2 => NormKind::L2,
            NormKind::Linf => NormKind::L1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::L1 => "L1",
            NormKind::L2 => "L2",
            NormKind::Linf => "LINF",
        }
    }
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "L1" => Ok(NormKind::L1),
            "L2" => Ok(NormKind::L2),
            "LINF" | "L_INF" | "INF" => Ok(NormKind::Linf),
            other => Err(Error::Input(format!("unknown norm kind `{other}`"))),
        }
    }
}

/// The ambient space: ℝ^dim with one of the three norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    dim: usize,
    kind: NormKind,
}

impl SpaceSpec {
    pub fn new(dim: usize, kind: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Input("space dimension must be at least 1".into()));
        }
        Ok(Self { dim, kind })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn dual(&self) -> SpaceSpec {
        SpaceSpec { dim: self.dim, kind: self.kind.dual() }
    }

    pub fn norm(&self, v: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim, v.len())?;
        Ok(norm(v, self.kind))
    }

    pub fn dual_norm(&self, f: &Functional) -> Result<f64> {
        check_dim(self.dim, f.dim())?;
        if f.primal_kind() != self.kind {
            return Err(Error::Input(format!(
                "functional built for {} applied in {}",
                f.primal_kind(),
                self.kind
            )));
        }
        Ok(f.dual_norm())
    }
}

/// A linear functional on (ℝⁿ, ‖·‖), stored by its coefficients in the
/// standard pairing. Its norm is measured in the dual norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Functional {
    #[serde(with = "crate::serde_vec")]
    coefficients: DVector<f64>,
    primal_kind: NormKind,
}

impl Functional {
    pub fn new(coefficients: DVector<f64>, primal_kind: NormKind) -> Self {
        Self { coefficients, primal_kind }
    }

    pub fn zeros(dim: usize, primal_kind: NormKind) -> Self {
        Self::new(DVector::zeros(dim), primal_kind)
    }

    pub fn coefficients(&self) -> &DVector<f64> {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> DVector<f64> {
        self.coefficients
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }

    /// Norm kind of the space the functional acts on.
    pub fn primal_kind(&self) -> NormKind {
        self.primal_kind
    }

    /// Norm kind used to measure the functional itself.
    pub fn dual_kind(&self) -> NormKind {
        self.primal_kind.dual()
    }

    pub fn dual_norm(&self) -> f64 {
        norm(&self.coefficients, self.dual_kind())
    }

    pub fn apply(&self, v: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), v.len())?;
        Ok(self.coefficients.dot(v))
    }

    /// Rescale to dual norm one. Fails on the zero functional.
    pub fn normalized(&self) -> Result<Functional> {
        let n = self.dual_norm();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Degenerate("cannot normalize a zero or non-finite functional".into()));
        }
        Ok(Functional::new(&self.coefficients / n, self.primal_kind))
    }
}

pub fn norm(v: &DVector<f64>, kind: NormKind) -> f64 {
    match kind {
        NormKind::L1 => v.iter().map(|x| x.abs()).sum(),
        NormKind::L2 => v.norm(),
        NormKind::Linf => v.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
    }
}

/// Dual norm of the coefficient vector `f` of a functional on (ℝⁿ, `primal`).
pub fn dual_norm(f: &DVector<f64>, primal: NormKind) -> f64 {
    norm(f, primal.dual())
}

pub fn dual_pair(f: &Functional, v: &DVector<f64>) -> Result<f64> {
    f.apply(v)
}

/// A dual-norm-one functional `f` with `f(v) = ‖v‖`.
///
/// ℓ¹ uses the sign vector with 0 on zero coordinates; ℓ∞ spreads weight
/// uniformly over every coordinate within `tol.linf_tie` (relative) of the
/// maximum, which keeps the result invariant under coordinate permutations.
pub fn norming_functional(v: &DVector<f64>, kind: NormKind, tol: &Tolerances) -> Result<Functional> {
    let nv = norm(v, kind);
    if nv == 0.0 {
        return Err(Error::Degenerate("norming functional of the zero vector".into()));
    }
    if !nv.is_finite() {
        return Err(Error::Degenerate("norming functional of a non-finite vector".into()));
    }
    let coefficients = match kind {
        NormKind::L2 => v / nv,
        NormKind::L1 => v.map(signum0),
        NormKind::Linf => {
            let cutoff = nv * (1.0 - tol.linf_tie);
            let count = v.iter().filter(|x| x.abs() >= cutoff).count() as f64;
            v.map(|x| if x.abs() >= cutoff { signum0(x) / count } else { 0.0 })
        }
    };
    Ok(Functional::new(coefficients, kind))
}

fn signum0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
