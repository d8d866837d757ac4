//! Dense realization of the operator `Q` with a read-through power cache.

use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::norm::{Functional, NormKind, SpaceSpec};
use crate::tolerance::Tolerances;

/// Outcome of the injectivity test, kept on the handle and consulted by solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Injectivity {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub threshold: f64,
    pub injective: bool,
}

pub struct OperatorHandle {
    matrix: DMatrix<f64>,
    space: SpaceSpec,
    tol: Tolerances,
    injectivity: Injectivity,
    // powers[k] holds Q^(k+1); grown under the lock, so readers see complete entries only.
    powers: Mutex<Vec<Arc<DMatrix<f64>>>>,
}

impl std::fmt::Debug for OperatorHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorHandle")
            .field("dim", &self.dim())
            .field("kind", &self.space.kind())
            .field("injectivity", &self.injectivity)
            .finish()
    }
}

impl Clone for OperatorHandle {
    fn clone(&self) -> Self {
        let powers = self.powers.lock().expect("power cache poisoned").clone();
        Self {
            matrix: self.matrix.clone(),
            space: self.space,
            tol: self.tol,
            injectivity: self.injectivity,
            powers: Mutex::new(powers),
        }
    }
}

impl OperatorHandle {
    pub fn new(matrix: DMatrix<f64>, kind: NormKind) -> Result<Self> {
        Self::with_tolerances(matrix, kind, Tolerances::default())
    }

    pub fn with_tolerances(matrix: DMatrix<f64>, kind: NormKind, tol: Tolerances) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Input(format!(
                "operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("operator has non-finite entries".into()));
        }
        let space = SpaceSpec::new(matrix.nrows(), kind)?;
        let injectivity = injectivity_of(&matrix, tol.injectivity);
        Ok(Self {
            powers: Mutex::new(vec![Arc::new(matrix.clone())]),
            matrix,
            space,
            tol,
            injectivity,
        })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn kind(&self) -> NormKind {
        self.space.kind()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn injectivity(&self) -> Injectivity {
        self.injectivity
    }

    pub fn ensure_injective(&self) -> Result<()> {
        if self.injectivity.injective {
            Ok(())
        } else {
            Err(Error::NotInjective {
                sigma_min: self.injectivity.sigma_min,
                threshold: self.injectivity.threshold,
            })
        }
    }

    /// `Qⁿ` for `n ≥ 1`, computed by sequential multiplication and cached.
    pub fn power(&self, n: usize) -> Result<Arc<DMatrix<f64>>> {
        if n == 0 {
            return Err(Error::Input("power exponent must be at least 1".into()));
        }
        let mut cache = self.powers.lock().expect("power cache poisoned");
        while cache.len() < n {
            let next = &self.matrix * cache.last().expect("cache holds Q").as_ref();
            if next.iter().any(|x| !x.is_finite()) {
                return Err(Error::Overflow(cache.len() + 1));
            }
            cache.push(Arc::new(next));
        }
        Ok(Arc::clone(&cache[n - 1]))
    }

    /// `Qᵏ` with `Q⁰ = I`.
    pub fn power_or_identity(&self, k: usize) -> Result<DMatrix<f64>> {
        if k == 0 {
            Ok(DMatrix::identity(self.dim(), self.dim()))
        } else {
            Ok(self.power(k)?.as_ref().clone())
        }
    }

    pub fn apply_power(&self, n: usize, v: &DVector<f64>) -> Result<DVector<f64>> {
        check_dim(self.dim(), v.len())?;
        Ok(self.power(n)?.as_ref() * v)
    }

    /// The functional `Q*ⁿf = f ∘ Qⁿ`, i.e. coefficients `(Qⁿ)ᵀ f`.
    pub fn adjoint_power(&self, n: usize, f: &Functional) -> Result<Functional> {
        check_dim(self.dim(), f.dim())?;
        let a = self.power(n)?;
        Ok(Functional::new(a.tr_mul(f.coefficients()), f.primal_kind()))
    }

    /// `‖Qⁿ‖` in the handle's norm.
    pub fn power_norm(&self, n: usize) -> Result<f64> {
        operator_norm(self.power(n)?.as_ref(), self.kind(), &self.tol)
    }

    pub fn norm(&self) -> Result<f64> {
        self.power_norm(1)
    }
}

fn injectivity_of(m: &DMatrix<f64>, rel: f64) -> Injectivity {
    let svals = m.clone().singular_values();
    let sigma_max = svals.max();
    // The inverse route keeps relative accuracy for triangular and graded
    // matrices, where the SVD floor of eps·σ_max would swamp σ_min.
    let sigma_min = match m.clone().try_inverse() {
        Some(inv) if inv.iter().all(|x| x.is_finite()) => {
            let s = inv.singular_values().max();
            if s > 0.0 && s.is_finite() {
                1.0 / s
            } else {
                svals.min()
            }
        }
        _ => 0.0,
    };
    let threshold = rel * sigma_max;
    Injectivity { sigma_min, sigma_max, threshold, injective: sigma_min > threshold && sigma_max > 0.0 }
}

/// Operator norm of a square matrix induced by `kind`.
///
/// ℓ¹ and ℓ∞ are the exact column and row sums. ℓ² runs power iteration on
/// `AᵀA` from the normalized all-ones vector and stops once both the relative
/// change of the estimate and the relative eigen-residual are small.
pub fn operator_norm(a: &DMatrix<f64>, kind: NormKind, tol: &Tolerances) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::Input("operator norm of a non-square matrix".into()));
    }
    match kind {
        NormKind::L1 => Ok(a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)),
        NormKind::Linf => Ok(a.row_iter().map(|r| r.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)),
        NormKind::L2 => spectral_norm(a, tol),
    }
}

fn spectral_norm(a: &DMatrix<f64>, tol: &Tolerances) -> Result<f64> {
    top_singular_pair(a, tol).map(|(s, _)| s)
}

/// Largest singular value and its right singular vector (unit ℓ² norm) by
/// power iteration on `AᵀA` from the normalized all-ones vector.
pub(crate) fn top_singular_pair(a: &DMatrix<f64>, tol: &Tolerances) -> Result<(f64, DVector<f64>)> {
    let n = a.ncols();
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    if a.iter().all(|&x| x == 0.0) {
        return Ok((0.0, v));
    }
    let gram = a.tr_mul(a);
    if (&gram * &v).norm() == 0.0 {
        // All-ones sits in the kernel; restart from the heaviest column.
        let j = (0..n)
            .max_by(|&i, &j| a.column(i).norm().total_cmp(&a.column(j).norm()))
            .unwrap_or(0);
        v = DVector::zeros(n);
        v[j] = 1.0;
    }
    let mut prev = 0.0;
    let mut mu = 0.0;
    for _ in 0..tol.power_iteration_cap {
        let w = &gram * &v;
        mu = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return Ok((0.0, v));
        }
        let resid = (&w - &v * mu).norm();
        v = w / wn;
        if (mu - prev).abs() <= tol.power_iteration * mu && resid <= tol.power_iteration.sqrt() * mu {
            return Ok(((a * &v).norm(), v));
        }
        prev = mu;
    }
    Err(Error::Estimation { iterations: tol.power_iteration_cap, best_bound: mu.max(0.0).sqrt() })
}

/// `‖Qⁿ‖^{1/n}` for `n = 1..=count`.
pub fn quasinilpotence_profile(op: &OperatorHandle, count: usize, kind: NormKind) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Input("profile length must be at least 1".into()));
    }
    (1..=count)
        .map(|n| {
            let nrm = operator_norm(op.power(n)?.as_ref(), kind, op.tolerances())?;
            Ok(nrm.powf(1.0 / n as f64))
        })
        .collect()
}

/// A polynomial `T = Σ c_k Qᵏ` in the operator, which always commutes with it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CommutantElement {
    pub coefficients: Vec<f64>,
    #[serde(skip)]
    matrix: DMatrix<f64>,
    pub norm: f64,
    pub commutation_residual: f64,
}

impl CommutantElement {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    /// The same polynomial scaled to operator norm one.
    pub fn normalized(&self) -> Result<CommutantElement> {
        if !(self.norm > 0.0) {
            return Err(Error::Degenerate("cannot normalize the zero commutant element".into()));
        }
        let s = 1.0 / self.norm;
        Ok(CommutantElement {
            coefficients: self.coefficients.iter().map(|c| c * s).collect(),
            matrix: &self.matrix * s,
            norm: 1.0,
            commutation_residual: self.commutation_residual * s,
        })
    }
}

pub fn commutant_sample(op: &OperatorHandle, coefficients: &[f64]) -> Result<CommutantElement> {
    if coefficients.is_empty() {
        return Err(Error::Input("commutant sample needs at least one coefficient".into()));
    }
    let n = op.dim();
    let mut matrix = DMatrix::zeros(n, n);
    for (k, &c) in coefficients.iter().enumerate() {
        if c != 0.0 {
            matrix += op.power_or_identity(k)? * c;
        }
    }
    let tol = op.tolerances();
    let norm = operator_norm(&matrix, op.kind(), tol)?;
    let q = op.matrix();
    let comm = &matrix * q - q * &matrix;
    // Frobenius dominates the spectral norm, so the ℓ² residual is conservative.
    let (comm_norm, q_norm) = match op.kind() {
        NormKind::L2 => (comm.norm(), q.norm()),
        k => (operator_norm(&comm, k, tol)?, operator_norm(q, k, tol)?),
    };
    if comm_norm > tol.commutation * norm * q_norm + f64::MIN_POSITIVE {
        return Err(Error::Hypothesis(format!(
            "commutation residual {comm_norm:e} exceeds {:e}",
            tol.commutation * norm * q_norm
        )));
    }
    Ok(CommutantElement { coefficients: coefficients.to_vec(), matrix, norm, commutation_residual: comm_norm })
}
