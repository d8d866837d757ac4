//! Minimal vectors and minimal functionals.
//!
//! For `A = Qⁿ`, a centre `x₀` and a radius `0 < ε < ‖x₀‖`, the solvers find
//! `y` of least norm with `‖Ay − x₀‖ ≤ ε`, together with a norm-one
//! functional `f` and a level `c` such that `f ≤ c` on `A·B(0,d)` and
//! `f ≥ c` on `B(x₀,ε)`, where `d = ‖y‖`. Every solution is certified before
//! it is returned:
//!
//! - the ball constraint is active, `‖Ay − x₀‖ = ε`;
//! - `‖f‖* = 1` and `f(x₀) ≥ ε`;
//! - `‖A*f‖* = c/d`;
//! - `(A*f)(y) ≥ (1/λ)‖A*f‖*‖y‖`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::check::{all_passed, Check};
use crate::error::{check_dim, Error, Result};
use crate::lp::{solve_lp_with, LinearProgram, LpStatus, RowSense};
use crate::norm::{norm, Functional, NormKind};
use crate::operator::{operator_norm, OperatorHandle};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone)]
pub struct MinimalProblem<'a> {
    op: &'a OperatorHandle,
    power: usize,
    x0: DVector<f64>,
    epsilon: f64,
    lambda: f64,
    tol: Tolerances,
}

impl<'a> MinimalProblem<'a> {
    pub fn new(op: &'a OperatorHandle, power: usize, x0: DVector<f64>, epsilon: f64) -> Result<Self> {
        if power == 0 {
            return Err(Error::InvalidProblem("power must be at least 1".into()));
        }
        check_dim(op.dim(), x0.len())?;
        let x0_norm = norm(&x0, op.kind());
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::InvalidProblem(format!("epsilon must be positive, got {epsilon}")));
        }
        if epsilon >= x0_norm {
            return Err(Error::InvalidProblem(format!(
                "epsilon {epsilon} must be below ‖x0‖ = {x0_norm}; otherwise 0 lies in the feasible set"
            )));
        }
        op.ensure_injective()?;
        Ok(Self { op, power, x0, epsilon, lambda: 1.0, tol: *op.tolerances() })
    }

    pub fn with_lambda(mut self, lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0) || !lambda.is_finite() {
            return Err(Error::InvalidProblem(format!("lambda must be finite and >= 1, got {lambda}")));
        }
        self.lambda = lambda;
        Ok(self)
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn operator(&self) -> &'a OperatorHandle {
        self.op
    }

    pub fn power(&self) -> usize {
        self.power
    }

    pub fn x0(&self) -> &DVector<f64> {
        &self.x0
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn kind(&self) -> NormKind {
        self.op.kind()
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinimalSolution {
    pub power: usize,
    #[serde(with = "crate::serde_vec")]
    pub y: DVector<f64>,
    pub f: Functional,
    /// `Q*ⁿf`.
    pub adjoint: Functional,
    pub adjoint_norm: f64,
    pub c: f64,
    pub d: f64,
    pub residual_norm: f64,
    pub eq1_slack: f64,
    pub lambda: f64,
    /// Lagrange multiplier of the ball constraint on the ℓ² path.
    pub multiplier: Option<f64>,
    pub relaxed: bool,
    /// Set when relaxation was requested but no admissible perturbation was found.
    pub relax_failed: bool,
}

impl MinimalSolution {
    pub fn norm_y(&self) -> f64 {
        norm(&self.y, self.f.primal_kind())
    }

    /// `‖Q*ⁿf‖·‖y‖`, the natural size of pairings against `y`.
    pub fn scale(&self) -> f64 {
        self.adjoint_norm * self.norm_y()
    }

    pub fn f_x0(&self, x0: &DVector<f64>) -> f64 {
        self.f.coefficients().dot(x0)
    }
}

/// Dispatch on the operator's norm.
pub fn solve(problem: &MinimalProblem) -> Result<MinimalSolution> {
    match problem.kind() {
        NormKind::L2 => solve_l2(problem),
        NormKind::L1 | NormKind::Linf => solve_polyhedral(problem),
    }
}

/// Hilbert-norm path. Stationarity gives `z(ν) = ν(I + νAᵀA)⁻¹Aᵀx₀`; with
/// `A = UΣVᵀ` the residual is `‖Az(ν) − x₀‖² = Σ bᵢ²/(1 + νσᵢ²)²`, `b = Uᵀx₀`,
/// which decreases strictly in `ν`. The multiplier is bracketed by doubling
/// and then bisected.
pub fn solve_l2(problem: &MinimalProblem) -> Result<MinimalSolution> {
    if problem.kind() != NormKind::L2 {
        return Err(Error::InvalidProblem(format!("solve_l2 called on a {} problem", problem.kind())));
    }
    let tol = problem.tol;
    let eps = problem.epsilon;
    let a = problem.op.power(problem.power)?;
    let svd = a.as_ref().clone().svd(true, true);
    let (u, vt) = match (svd.u, svd.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => return Err(Error::Solver("SVD did not return singular vectors".into())),
    };
    let sigma = svd.singular_values;
    let b = u.tr_mul(&problem.x0);
    let outside = (&problem.x0 - &u * &b).norm_squared();
    let residual = |nu: f64| -> f64 {
        let s: f64 = b.iter().zip(sigma.iter()).map(|(bi, si)| (bi / (1.0 + nu * si * si)).powi(2)).sum();
        (s + outside).sqrt()
    };
    let monotone_slop = 1e-12;
    let not_monotone = |nu_lo: f64, nu_hi: f64, r_lo: f64, r_hi: f64| {
        Error::Solver(format!(
            "residual not decreasing in the multiplier: r({nu_lo:e}) = {r_lo:e} < r({nu_hi:e}) = {r_hi:e}"
        ))
    };

    let (mut lo, mut r_lo) = (0.0, residual(0.0));
    let (mut hi, mut r_hi) = (1.0, residual(1.0));
    if r_hi > r_lo * (1.0 + monotone_slop) {
        return Err(not_monotone(lo, hi, r_lo, r_hi));
    }
    let mut doublings = 0;
    while r_hi >= eps {
        if doublings >= tol.bracket_cap {
            return Err(Error::Solver(format!(
                "could not bracket the multiplier: residual {r_hi:e} >= epsilon {eps:e} at nu = {hi:e}"
            )));
        }
        let next = 2.0 * hi;
        let r_next = residual(next);
        if r_next > r_hi * (1.0 + monotone_slop) {
            return Err(not_monotone(hi, next, r_hi, r_next));
        }
        (lo, r_lo) = (hi, r_hi);
        (hi, r_hi) = (next, r_next);
        doublings += 1;
    }
    let mut steps = 0;
    while hi - lo > tol.root_find * hi && steps < 4096 {
        let mid = 0.5 * (lo + hi);
        let r = residual(mid);
        if r > r_lo * (1.0 + monotone_slop) || r < r_hi * (1.0 - monotone_slop) {
            return Err(not_monotone(lo, hi, r_lo, r_hi));
        }
        if r > eps {
            (lo, r_lo) = (mid, r);
        } else {
            (hi, r_hi) = (mid, r);
        }
        steps += 1;
    }
    let nu = hi;
    let coeffs = DVector::from_iterator(
        b.len(),
        b.iter().zip(sigma.iter()).map(|(bi, si)| nu * si / (1.0 + nu * si * si) * bi),
    );
    let y = vt.tr_mul(&coeffs);

    // x₀ − Ay in the singular basis; forming it as a difference of computed
    // vectors loses the tiny components along the leading singular directions.
    let damped = DVector::from_iterator(b.len(), b.iter().zip(sigma.iter()).map(|(bi, si)| bi / (1.0 + nu * si * si)));
    let gap = &u * damped + (&problem.x0 - &u * &b);
    let gap_norm = gap.norm();
    if !(gap_norm > 0.0) {
        return Err(Error::Solver("minimal vector reaches the centre exactly".into()));
    }
    let f = Functional::new(gap / gap_norm, NormKind::L2);
    let mut sol = assemble(problem, y, f)?;
    sol.multiplier = Some(nu);
    certify(&sol, problem)?;
    Ok(sol)
}

/// Polyhedral path (ℓ¹ or ℓ∞) through linear programming. The norm of `z`
/// is an epigraph variable; the ball constraint becomes box rows (ℓ∞) or
/// auxiliary absolute-value variables with one budget row (ℓ¹). The minimal
/// functional is the dual multiplier vector of the rows involving `Az`,
/// rescaled to dual norm one.
pub fn solve_polyhedral(problem: &MinimalProblem) -> Result<MinimalSolution> {
    let kind = problem.kind();
    if kind == NormKind::L2 {
        return Err(Error::InvalidProblem("solve_polyhedral needs an L1 or LINF problem".into()));
    }
    let n = problem.op.dim();
    let a = problem.op.power(problem.power)?;
    let x0 = &problem.x0;
    let eps = problem.epsilon;

    // variable layout: z (n, free) | t (1 or n) | s (n, L1 only)
    let nt = if kind == NormKind::Linf { 1 } else { n };
    let ns = if kind == NormKind::L1 { n } else { 0 };
    let nv = n + nt + ns;
    let mut objective = vec![0.0; nv];
    objective[n..n + nt].iter_mut().for_each(|c| *c = 1.0);
    let mut lp = LinearProgram::new(objective);
    for j in 0..n {
        lp.set_free(j);
    }
    for j in 0..n {
        let t = if kind == NormKind::Linf { n } else { n + j };
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; nv];
            row[t] = 1.0;
            row[j] = -sign;
            lp.add_row(row, RowSense::Ge, 0.0);
        }
    }
    // (row index, coordinate, sign of A_i in the row)
    let mut ball_rows: Vec<(usize, usize, f64)> = Vec::with_capacity(2 * n);
    for i in 0..n {
        let a_row: Vec<f64> = a.row(i).iter().copied().collect();
        match kind {
            NormKind::Linf => {
                let mut row = vec![0.0; nv];
                row[..n].copy_from_slice(&a_row);
                ball_rows.push((lp.add_row(row.clone(), RowSense::Ge, x0[i] - eps), i, 1.0));
                ball_rows.push((lp.add_row(row, RowSense::Le, x0[i] + eps), i, 1.0));
            }
            NormKind::L1 => {
                let s = n + nt + i;
                let mut row = vec![0.0; nv];
                row[s] = 1.0;
                row[..n].iter_mut().zip(&a_row).for_each(|(r, v)| *r = -v);
                ball_rows.push((lp.add_row(row, RowSense::Ge, -x0[i]), i, -1.0));
                let mut row = vec![0.0; nv];
                row[s] = 1.0;
                row[..n].copy_from_slice(&a_row);
                ball_rows.push((lp.add_row(row, RowSense::Ge, x0[i]), i, 1.0));
            }
            NormKind::L2 => unreachable!(),
        }
    }
    if kind == NormKind::L1 {
        let mut row = vec![0.0; nv];
        row[n + nt..].iter_mut().for_each(|r| *r = 1.0);
        lp.add_row(row, RowSense::Le, eps);
    }

    let sol = solve_lp_with(&lp, &problem.tol)?;
    if sol.status != LpStatus::Optimal {
        return Err(Error::Solver(format!("minimal-vector LP ended {:?}", sol.status)));
    }
    if !sol.residuals.within(problem.tol.lp_feasibility) {
        return Err(Error::Solver(format!("LP optimality residuals too large: {:?}", sol.residuals)));
    }
    let mut y = DVector::from_column_slice(&sol.x[..n]);
    if kind == NormKind::Linf {
        if let Some(alt) = linf_tie_break(problem, &a, sol.objective)? {
            let res = |v: &DVector<f64>| norm(&(a.as_ref() * v - x0), kind);
            if norm(&alt, kind) <= norm(&y, kind) * (1.0 + 4.0 * f64::EPSILON) && res(&alt) <= res(&y).max(eps) {
                y = alt;
            }
        }
    }
    let mut fhat = DVector::zeros(n);
    for &(r, i, sign) in &ball_rows {
        fhat[i] += sign * sol.duals[r];
    }
    let f = Functional::new(fhat, kind)
        .normalized()
        .map_err(|_| Error::Solver("ball-row multipliers vanish; no separating functional".into()))?;
    let sol = assemble(problem, y, f)?;
    certify(&sol, problem)?;
    Ok(sol)
}

/// ℓ∞ minimizers are rarely unique. Among vectors with `‖z‖∞ ≤ d` in the
/// ball, pick one of least ℓ¹ norm.
fn linf_tie_break(problem: &MinimalProblem, a: &DMatrix<f64>, d: f64) -> Result<Option<DVector<f64>>> {
    let n = a.nrows();
    let cap = d;
    let mut objective = vec![0.0; 2 * n];
    objective[n..].iter_mut().for_each(|c| *c = 1.0);
    let mut lp = LinearProgram::new(objective);
    for j in 0..n {
        lp.set_bounds(j, -cap, cap);
        for sign in [1.0, -1.0] {
            let mut row = vec![0.0; 2 * n];
            row[n + j] = 1.0;
            row[j] = -sign;
            lp.add_row(row, RowSense::Ge, 0.0);
        }
    }
    for i in 0..n {
        let mut row = vec![0.0; 2 * n];
        row[..n].iter_mut().zip(a.row(i).iter()).for_each(|(r, v)| *r = *v);
        lp.add_row(row.clone(), RowSense::Ge, problem.x0[i] - problem.epsilon);
        lp.add_row(row, RowSense::Le, problem.x0[i] + problem.epsilon);
    }
    let sol = solve_lp_with(&lp, &problem.tol)?;
    if sol.status != LpStatus::Optimal || !sol.residuals.within(problem.tol.lp_feasibility) {
        return Ok(None);
    }
    Ok(Some(DVector::from_column_slice(&sol.x[..n])))
}

fn assemble(problem: &MinimalProblem, y: DVector<f64>, f: Functional) -> Result<MinimalSolution> {
    let kind = problem.kind();
    let a = problem.op.power(problem.power)?;
    let ay = a.as_ref() * &y;
    let residual_norm = norm(&(&ay - &problem.x0), kind);
    let d = norm(&y, kind);
    let adjoint = Functional::new(a.tr_mul(f.coefficients()), kind);
    // f(Ay) evaluated as (A*f)(y): rounding in A*f then moves c and ‖A*f‖ together.
    let c = adjoint.coefficients().dot(&y);
    let adjoint_norm = adjoint.dual_norm();
    let eq1_slack = adjoint.coefficients().dot(&y) - adjoint_norm * d / problem.lambda;
    Ok(MinimalSolution {
        power: problem.power,
        y,
        f,
        adjoint,
        adjoint_norm,
        c,
        d,
        residual_norm,
        eq1_slack,
        lambda: problem.lambda,
        multiplier: None,
        relaxed: false,
        relax_failed: false,
    })
}

/// The algebraic checks every returned solution must pass. The sampled
/// separation checks live only in [`certificate_report`].
fn algebraic_checks(sol: &MinimalSolution, problem: &MinimalProblem) -> Vec<Check> {
    let tol = &problem.tol;
    let eps = problem.epsilon;
    let scale = sol.scale();
    let norm_y = sol.norm_y();
    let ratio = if sol.d > 0.0 { sol.c / sol.d } else { f64::INFINITY };
    let lam = sol.lambda;
    let mut checks = vec![
        Check::at_least("d_positive", sol.d, 0.0, 0.0),
        Check::close("dual_norm_one", sol.f.dual_norm(), 1.0, tol.certificate),
        Check::at_least("f_x0_at_least_epsilon", sol.f_x0(&problem.x0), eps, tol.certificate),
        Check::close("adjoint_norm_equals_c_over_d", sol.adjoint_norm, ratio, tol.norm_identity * ratio),
        Check::at_least("eq1_slack", sol.eq1_slack, 0.0, tol.certificate * scale),
        Check::at_most("lambda_minimal", norm_y, lam * sol.d, tol.certificate * sol.d),
    ];
    if sol.relaxed {
        checks.push(Check::at_most("residual_within_epsilon", sol.residual_norm, eps, tol.certificate * eps.max(1.0)));
    } else {
        checks.push(Check::close("residual_active", sol.residual_norm, eps, tol.certificate * eps.max(1.0)));
    }
    checks
}

const CHECK_NAMES: [&str; 8] = [
    "d_positive",
    "dual_norm_one",
    "f_x0_at_least_epsilon",
    "adjoint_norm_equals_c_over_d",
    "eq1_slack",
    "lambda_minimal",
    "residual_within_epsilon",
    "residual_active",
];

fn certify(sol: &MinimalSolution, problem: &MinimalProblem) -> Result<()> {
    if let Some(c) = algebraic_checks(sol, problem).into_iter().find(|c| !c.passed) {
        let check = CHECK_NAMES.iter().copied().find(|n| *n == c.name).unwrap_or("certificate");
        return Err(Error::Certificate { check, slack: c.slack, tol: c.tol });
    }
    Ok(())
}

/// Re-derive the certificate of a stored solution from its vectors `y` and
/// `f` alone, and compare the stored scalars against the recomputed ones.
pub fn recertify(sol: &MinimalSolution, problem: &MinimalProblem) -> Result<Vec<Check>> {
    check_dim(problem.op.dim(), sol.y.len())?;
    check_dim(problem.op.dim(), sol.f.dim())?;
    let kind = problem.kind();
    let tol = &problem.tol;
    let a = problem.op.power(problem.power)?;
    let adjoint = Functional::new(a.tr_mul(sol.f.coefficients()), kind);
    let adjoint_norm = adjoint.dual_norm();
    let norm_y = norm(&sol.y, kind);
    let fresh = MinimalSolution {
        adjoint_norm,
        residual_norm: norm(&(a.as_ref() * &sol.y - &problem.x0), kind),
        eq1_slack: adjoint.coefficients().dot(&sol.y) - adjoint_norm * norm_y / sol.lambda,
        c: if sol.relaxed { sol.c } else { adjoint.coefficients().dot(&sol.y) },
        adjoint,
        ..sol.clone()
    };
    let mut checks = algebraic_checks(&fresh, problem);
    let scale = fresh.scale().max(fresh.c.abs());
    checks.push(Check::close("stored_power", sol.power as f64, problem.power as f64, 0.0));
    checks.push(Check::close("stored_c", sol.c, fresh.c, tol.certificate * scale));
    checks.push(Check::close("stored_eq1_slack", sol.eq1_slack, fresh.eq1_slack, tol.certificate * scale));
    checks.push(Check::close("stored_adjoint_norm", sol.adjoint_norm, adjoint_norm, tol.norm_identity * adjoint_norm));
    checks.push(Check::close("stored_residual", sol.residual_norm, fresh.residual_norm, tol.certificate * problem.epsilon.max(1.0)));
    if !sol.relaxed {
        checks.push(Check::close("stored_d", sol.d, norm_y, tol.certificate * norm_y));
    }
    Ok(checks)
}

/// Replace the exact minimizer by a feasible `y′` with `d < ‖y′‖ ≤ λd`.
///
/// `y′ = y + τp + σv` where `p = A⁻¹(x₀ − Ay)` pulls `Ay` toward the centre
/// and `v` is a random unit vector. The step sizes keep `‖y′‖ ≤ λd` and
/// `‖Ay′ − x₀‖ ≤ (1 − τ/2)ε`; retries halve them. `f`, `c` and `d` do not
/// change, only `y`, the residual and the norm-attainment slack with factor `1/λ`.
pub fn relax_to_lambda(sol: &MinimalSolution, problem: &MinimalProblem, lambda: f64, seed: u64) -> Result<MinimalSolution> {
    if !(lambda >= 1.0) || !lambda.is_finite() {
        return Err(Error::InvalidProblem(format!("lambda must be finite and >= 1, got {lambda}")));
    }
    if lambda == 1.0 {
        return Ok(sol.clone());
    }
    let kind = problem.kind();
    let tol = &problem.tol;
    let a = problem.op.power(problem.power)?;
    let a_norm = operator_norm(&a, kind, tol)?;
    let eps = problem.epsilon;
    let d = sol.d;
    let ay = a.as_ref() * &sol.y;
    let pull = a
        .as_ref()
        .clone()
        .lu()
        .solve(&(&problem.x0 - &ay))
        .ok_or_else(|| Error::Solver("singular power while relaxing".into()))?;
    let pull_norm = norm(&pull, kind);
    let budget = (lambda - 1.0) * d / 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = sol.y.len();

    let mut shrink = 1.0;
    for _ in 0..tol.relax_retries.max(1) {
        let tau_cap = if pull_norm > 0.0 { (budget / pull_norm).min(1.0) } else { 1.0 };
        let tau = rng.random_range(0.25..=1.0) * tau_cap * shrink;
        let sigma = rng.random_range(0.25..=1.0) * budget.min(tau * eps / (2.0 * a_norm.max(f64::MIN_POSITIVE))) * shrink;
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
        let vn = norm(&v, kind);
        let v = if vn > 0.0 { v / vn } else { v };
        let candidate = &sol.y + &pull * tau + v * sigma;
        let residual = norm(&(a.as_ref() * &candidate - &problem.x0), kind);
        let cn = norm(&candidate, kind);
        if residual <= eps && cn <= lambda * d {
            let adj = sol.adjoint.coefficients();
            let mut out = sol.clone();
            out.eq1_slack = adj.dot(&candidate) - sol.adjoint_norm * cn / lambda;
            out.y = candidate;
            out.residual_norm = residual;
            out.lambda = lambda;
            out.relaxed = true;
            out.relax_failed = false;
            return Ok(out);
        }
        shrink *= 0.5;
    }
    let mut out = sol.clone();
    out.relax_failed = true;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl CertificateReport {
    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Full certificate: the algebraic identities plus a sampled separation
/// check of the hyperplane `Q*ⁿf = c` between `B(0,d)` and `K`.
///
/// Points of `K` are drawn as `Q⁻ⁿ(x₀ + εu)` with `‖u‖ ≤ 1`. Sampled
/// comparisons use the tolerance `tol·max(c, ‖Q*ⁿf‖‖z‖)`.
pub fn certificate_report(sol: &MinimalSolution, problem: &MinimalProblem, seed: u64) -> Result<CertificateReport> {
    let mut checks = algebraic_checks(sol, problem);
    let kind = problem.kind();
    let tol = &problem.tol;
    let n = sol.y.len();
    let a = problem.op.power(problem.power)?;
    let lu = a.as_ref().clone().lu();
    let adj = sol.adjoint.coefficients();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = tol.separation_samples;

    let mut ball_slack = f64::INFINITY;
    let mut ball_tol = 0.0;
    let mut k_slack = f64::INFINITY;
    let mut k_tol = 0.0;
    for _ in 0..samples {
        let z = unit_ball_sample(&mut rng, n, kind) * sol.d;
        let t = tol.certificate * sol.c.max(sol.adjoint_norm * norm(&z, kind));
        let s = sol.c - adj.dot(&z);
        if s + t < ball_slack + ball_tol || ball_slack.is_infinite() {
            ball_slack = s;
            ball_tol = t;
        }

        let u = unit_ball_sample(&mut rng, n, kind);
        let target = &problem.x0 + u * problem.epsilon;
        let z = lu.solve(&target).ok_or_else(|| Error::Solver("singular power in separation sampling".into()))?;
        let t = tol.certificate * sol.c.max(sol.adjoint_norm * norm(&z, kind));
        let s = adj.dot(&z) - sol.c;
        if s + t < k_slack + k_tol || k_slack.is_infinite() {
            k_slack = s;
            k_tol = t;
        }
    }
    if samples > 0 {
        checks.push(Check::at_least("separation_ball_side", sol.c, sol.c - ball_slack, ball_tol));
        checks.push(Check::at_least("separation_k_side", sol.c + k_slack, sol.c, k_tol));
    }
    let passed = all_passed(&checks);
    Ok(CertificateReport { checks, passed })
}

/// A point of the closed unit ball of `kind`: a uniform direction in the
/// cube, projected radially, at radius `U^(1/n)`.
pub(crate) fn unit_ball_sample(rng: &mut ChaCha8Rng, n: usize, kind: NormKind) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.random_range(-1.0..=1.0));
        let vn = norm(&v, kind);
        if vn > 1e-12 {
            let r: f64 = rng.random_range(0.0..=1.0_f64).powf(1.0 / n as f64);
            return v * (r / vn);
        }
    }
}
