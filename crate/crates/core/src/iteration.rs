//! The iteration over powers `Qⁿ`, `n = 1..N`.
//!
//! For each power a minimal vector `yₙ` and minimal functional `fₙ` are
//! computed for the same `x₀` and `ε`. From the trace we select indices along
//! which `‖y_{n−1}‖/‖yₙ‖` decays, estimate `w` as the last iterate of
//! `K Q^{n_i−1} y_{n_i−1}` and `g` as a cluster average of the `f_{n_i}`, and
//! decompose `T K y_{n_i−1} = α_i y_{n_i} + r_i` for sampled commutant
//! elements `T`.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::{all_passed, Check};
use crate::error::{check_dim, Error, Result};
use crate::minvec::{relax_to_lambda, solve, MinimalProblem, MinimalSolution};
use crate::norm::{dual_norm, norm, Functional, NormKind};
use crate::operator::{CommutantElement, OperatorHandle};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub n_max: usize,
    pub lambda: f64,
    /// Replace each exact minimizer by a λ-minimal perturbation.
    pub relax: bool,
    pub seed: u64,
}

impl TraceConfig {
    pub fn new(n_max: usize) -> Self {
        Self { n_max, lambda: 1.0, relax: false, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub n: usize,
    pub d: f64,
    pub norm_y: f64,
    /// `‖y_{n−1}‖/‖yₙ‖`, absent for `n = 1`.
    pub ratio: Option<f64>,
    pub eq1_slack: f64,
    pub f_x0: f64,
    pub residual: f64,
    pub solution: MinimalSolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub kind: NormKind,
    #[serde(with = "crate::serde_vec")]
    pub x0: DVector<f64>,
    pub epsilon: f64,
    pub lambda: f64,
    pub records: Vec<TraceRecord>,
}

impl IterationTrace {
    pub fn record(&self, n: usize) -> Option<&TraceRecord> {
        self.records.get(n.checked_sub(1)?).filter(|r| r.n == n)
    }

    pub fn ratios(&self) -> Vec<(usize, f64)> {
        self.records.iter().filter_map(|r| r.ratio.map(|q| (r.n, q))).collect()
    }

    /// Per-record norm-attainment and `fₙ(x₀) ≥ ε` checks.
    pub fn record_checks(&self, tol: &Tolerances) -> Vec<Check> {
        let mut out = Vec::with_capacity(2 * self.records.len());
        for r in &self.records {
            let scale = r.solution.scale();
            out.push(Check::at_least(format!("eq1_slack[n={}]", r.n), r.eq1_slack, 0.0, tol.certificate * scale));
            out.push(Check::at_least(format!("f_x0[n={}]", r.n), r.f_x0, self.epsilon, tol.certificate));
        }
        out
    }
}

/// Solve the minimal-vector problem for `Q, Q², …, Q^N`.
///
/// Powers are formed once up front; the solves then run in parallel. A
/// failing power aborts the trace and is reported with its exponent.
pub fn run_trace(op: &OperatorHandle, x0: &DVector<f64>, epsilon: f64, cfg: &TraceConfig) -> Result<IterationTrace> {
    if cfg.n_max < 2 {
        return Err(Error::InvalidProblem(format!("a trace needs N >= 2, got {}", cfg.n_max)));
    }
    check_dim(op.dim(), x0.len())?;
    op.power(cfg.n_max).map_err(|e| Error::Trace { n: cfg.n_max, source: Box::new(e) })?;

    let solve_one = |n: usize| -> Result<MinimalSolution> {
        let problem = MinimalProblem::new(op, n, x0.clone(), epsilon)?.with_lambda(cfg.lambda)?;
        let sol = solve(&problem)?;
        if cfg.relax && cfg.lambda > 1.0 {
            relax_to_lambda(&sol, &problem, cfg.lambda, cfg.seed.wrapping_add(n as u64))
        } else {
            Ok(sol)
        }
    };
    let solutions: Vec<MinimalSolution> = (1..=cfg.n_max)
        .into_par_iter()
        .map(|n| solve_one(n).map_err(|e| Error::Trace { n, source: Box::new(e) }))
        .collect::<Result<_>>()?;

    let kind = op.kind();
    let mut records = Vec::with_capacity(solutions.len());
    let mut prev_norm: Option<f64> = None;
    for (i, sol) in solutions.into_iter().enumerate() {
        let norm_y = sol.norm_y();
        records.push(TraceRecord {
            n: i + 1,
            d: sol.d,
            norm_y,
            ratio: prev_norm.map(|p| p / norm_y),
            eq1_slack: sol.eq1_slack,
            f_x0: sol.f_x0(x0),
            residual: sol.residual_norm,
            solution: sol,
        });
        prev_norm = Some(norm_y);
    }
    Ok(IterationTrace { kind, x0: x0.clone(), epsilon, lambda: cfg.lambda, records })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsequencePlan {
    pub indices: Vec<usize>,
    pub rho: f64,
    pub ratios: Vec<f64>,
    /// Fewer than three indices qualified.
    pub short: bool,
}

impl SubsequencePlan {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `ratio(n_{i+1}) ≤ ρ·ratio(n_i)` for consecutive entries.
    pub fn is_geometric(&self) -> bool {
        self.ratios.windows(2).all(|w| w[1] <= self.rho * w[0])
    }
}

/// Greedy geometric selection over `(n, ratio)` pairs: the first pair is
/// taken, then each pair whose ratio is at most `ρ` times the last taken.
pub fn select_from_ratios(ratios: &[(usize, f64)], rho: f64) -> Result<SubsequencePlan> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Input(format!("rho must lie in (0, 1), got {rho}")));
    }
    let mut indices = Vec::new();
    let mut picked = Vec::new();
    for &(n, q) in ratios {
        if picked.last().is_none_or(|&last: &f64| q <= rho * last) {
            indices.push(n);
            picked.push(q);
        }
    }
    let short = indices.len() < 3;
    Ok(SubsequencePlan { indices, rho, ratios: picked, short })
}

pub fn select_subsequence(trace: &IterationTrace, rho: f64) -> Result<SubsequencePlan> {
    if trace.records.len() < 2 {
        return Err(Error::Input("subsequence selection needs at least two records".into()));
    }
    select_from_ratios(&trace.ratios(), rho)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrapositiveEntry {
    pub n: usize,
    pub power_norm: f64,
    pub bound: f64,
    pub check: Check,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrapositiveReport {
    pub delta: f64,
    /// Every traced ratio exceeds `δ`.
    pub hypothesis: bool,
    /// The hypothesis fails, so nothing is asserted.
    pub vacuous: bool,
    pub entries: Vec<ContrapositiveEntry>,
    pub passed: bool,
}

/// If every ratio exceeds `δ` then `‖Qⁿ‖ ≥ δⁿ/λ` for `n = 1..N−1`.
///
/// The chain: `Q^{n+1}y_{n+1} ∈ B(x₀,ε)` puts `Qⁿy_{n+1}` in the feasible set
/// for the first power, so `‖Qⁿy_{n+1}‖ ≥ d₁ ≥ ‖y₁‖/λ > (δⁿ/λ)‖y_{n+1}‖`.
pub fn check_quasinilpotence_contrapositive(trace: &IterationTrace, delta: f64, op: &OperatorHandle) -> Result<ContrapositiveReport> {
    if !(delta > 0.0) {
        return Err(Error::Input(format!("delta must be positive, got {delta}")));
    }
    let hypothesis = trace.ratios().iter().all(|&(_, q)| q > delta);
    let mut entries = Vec::new();
    if hypothesis {
        let n_max = trace.records.len();
        for n in 1..n_max {
            let power_norm = op.power_norm(n)?;
            let bound = delta.powi(n as i32) / trace.lambda;
            let check = Check::at_least(format!("power_norm[n={n}]"), power_norm, bound, op.tolerances().certificate);
            entries.push(ContrapositiveEntry { n, power_norm, bound, check });
        }
    }
    let passed = entries.iter().all(|e| e.check.passed);
    Ok(ContrapositiveReport { delta, hypothesis, vacuous: !hypothesis, entries, passed })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WEstimate {
    #[serde(with = "crate::serde_vec")]
    pub w: DVector<f64>,
    pub w_norm: f64,
    pub iterates: Vec<Vec<f64>>,
    pub cauchy_residuals: Vec<f64>,
    /// Cauchy residuals are non-increasing (and there is at least one).
    pub contracting: bool,
    /// `‖K x₀‖ − ε‖K‖`, a lower bound for `‖K x‖` on `B(x₀,ε)`.
    pub hypothesis_bound: f64,
    pub k_coefficients: Vec<f64>,
}

/// `w_i = K Q^{n_i−1} y_{n_i−1}` along the plan; `w` is the last iterate.
pub fn estimate_w(trace: &IterationTrace, plan: &SubsequencePlan, op: &OperatorHandle, k: &CommutantElement) -> Result<WEstimate> {
    if plan.is_empty() {
        return Err(Error::Input("estimate_w needs a non-empty plan".into()));
    }
    let kind = trace.kind;
    let tol = op.tolerances();
    if k.norm > 1.0 + tol.certificate {
        return Err(Error::Hypothesis(format!("the compact element must have norm <= 1, got {}", k.norm)));
    }
    let hypothesis_bound = norm(&k.apply(&trace.x0), kind) - trace.epsilon * k.norm;
    if !(hypothesis_bound > 0.0) {
        return Err(Error::Hypothesis(format!(
            "‖K x0‖ − ε‖K‖ = {hypothesis_bound:e} is not positive; 0 may lie in K·B(x0, ε)"
        )));
    }
    let mut iterates: Vec<DVector<f64>> = Vec::with_capacity(plan.len());
    for &n in &plan.indices {
        let prev = trace
            .record(n - 1)
            .ok_or_else(|| Error::Input(format!("plan index {n} has no predecessor in the trace")))?;
        let image = op.apply_power(n - 1, &prev.solution.y)?;
        iterates.push(k.apply(&image));
    }
    let cauchy_residuals: Vec<f64> = iterates.windows(2).map(|w| norm(&(&w[1] - &w[0]), kind)).collect();
    let contracting = !cauchy_residuals.is_empty() && cauchy_residuals.windows(2).all(|r| r[1] <= r[0]);
    let w = iterates.last().expect("plan is non-empty").clone();
    let w_norm = norm(&w, kind);
    if !(w_norm > 0.0) {
        return Err(Error::Degenerate("the limit estimate w vanishes".into()));
    }
    Ok(WEstimate {
        w,
        w_norm,
        iterates: iterates.iter().map(|v| v.iter().copied().collect()).collect(),
        cauchy_residuals,
        contracting,
        hypothesis_bound,
        k_coefficients: k.coefficients.clone(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GEstimate {
    pub g: Functional,
    /// Powers `n` whose functionals form the cluster.
    pub members: Vec<usize>,
    pub diameter: f64,
    pub diameter_cap: f64,
    /// No two functionals were within the cap; `g` is the last `f_{n_i}`.
    pub low_confidence: bool,
    pub g_x0: f64,
    pub check: Check,
}

/// Cluster-and-average stand-in for a weak* cluster point of the `f_{n_i}`.
///
/// Clusters are grown greedily from each seed in plan order, admitting a
/// functional only if it is within the cap of every current member. The
/// largest cluster wins; ties go to the one reaching the latest power.
pub fn estimate_g(trace: &IterationTrace, plan: &SubsequencePlan, tol: &Tolerances) -> Result<GEstimate> {
    if plan.is_empty() {
        return Err(Error::Input("estimate_g needs a non-empty plan".into()));
    }
    let cap = tol.cluster_diameter;
    let fs: Vec<(usize, &Functional)> = plan
        .indices
        .iter()
        .map(|&n| {
            trace.record(n).map(|r| (n, &r.solution.f)).ok_or_else(|| Error::Input(format!("plan index {n} not in trace")))
        })
        .collect::<Result<_>>()?;
    for (n, f) in &fs {
        if (f.dual_norm() - 1.0).abs() > tol.certificate {
            return Err(Error::Input(format!("f_{n} does not have dual norm one")));
        }
    }
    let dist = |a: &Functional, b: &Functional| dual_norm(&(a.coefficients() - b.coefficients()), a.primal_kind());

    let mut best: Vec<usize> = Vec::new();
    for seed in 0..fs.len() {
        let mut cluster = vec![seed];
        for j in 0..fs.len() {
            if j != seed && cluster.iter().all(|&m| dist(fs[m].1, fs[j].1) <= cap) {
                cluster.push(j);
            }
        }
        cluster.sort_unstable();
        let better = cluster.len() > best.len()
            || (cluster.len() == best.len() && cluster.last() > best.last());
        if better {
            best = cluster;
        }
    }
    let kind = trace.kind;
    let (g, members, diameter, low_confidence) = if best.len() >= 2 {
        let mut sum = DVector::zeros(trace.x0.len());
        for &m in &best {
            sum += fs[m].1.coefficients();
        }
        let g = Functional::new(sum, kind).normalized()?;
        let mut diameter: f64 = 0.0;
        for (a, &i) in best.iter().enumerate() {
            for &j in &best[a + 1..] {
                diameter = diameter.max(dist(fs[i].1, fs[j].1));
            }
        }
        (g, best.iter().map(|&m| fs[m].0).collect(), diameter, false)
    } else {
        let (n, f) = *fs.last().expect("plan is non-empty");
        (f.clone(), vec![n], 0.0, true)
    };
    let g_x0 = g.coefficients().dot(&trace.x0);
    let check = Check::at_least("g_x0_at_least_epsilon", g_x0, trace.epsilon, tol.limit_level);
    Ok(GEstimate { g, members, diameter, diameter_cap: cap, low_confidence, g_x0, check })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaRecord {
    pub i: usize,
    pub n: usize,
    pub alpha: f64,
    /// `λ‖T‖·ratio(n_i)`.
    pub bound: f64,
    pub ratio: f64,
    /// `‖Q*ⁿfₙ‖·‖yₙ‖`.
    pub scale: f64,
    /// `(Q*ⁿfₙ)(T K y_{n−1})`.
    pub numerator: f64,
    /// `(Q*ⁿfₙ)(yₙ)`.
    pub denominator: f64,
    /// `|(Q*ⁿfₙ)(r_i)|` with `r_i = T K y_{n−1} − α_i yₙ`.
    pub membership_residual: f64,
    /// `|fₙ(Qⁿ T K y_{n−1})|`.
    pub envelope_value: f64,
    /// `|α_i|·(‖x₀‖ + ε)`.
    pub envelope_bound: f64,
    /// Relative gap between `Qⁿ T K y_{n−1}` and `T Q K Q^{n−1} y_{n−1}`.
    pub commutation_error: f64,
    pub checks: Vec<Check>,
}

/// Decompose `T K y_{n_i−1} = α_i y_{n_i} + r_i` with `r_i` in the kernel of
/// `Q*^{n_i} f_{n_i}`, and certify `|α_i| ≤ λ‖T‖·ratio(n_i)`.
pub fn alpha_sequence(
    trace: &IterationTrace,
    plan: &SubsequencePlan,
    op: &OperatorHandle,
    t: &CommutantElement,
    k: &CommutantElement,
) -> Result<Vec<AlphaRecord>> {
    let tol = op.tolerances();
    let kind = trace.kind;
    let x0_norm = norm(&trace.x0, kind);
    let mut out = Vec::with_capacity(plan.len());
    for (i, &n) in plan.indices.iter().enumerate() {
        let (cur, prev) = match (trace.record(n), trace.record(n.wrapping_sub(1))) {
            (Some(c), Some(p)) => (c, p),
            _ => return Err(Error::Input(format!("plan index {n} lacks a record or its predecessor"))),
        };
        let sol = &cur.solution;
        let adj = sol.adjoint.coefficients();
        let scale = sol.scale();
        let y_prev = &prev.solution.y;
        let tky = t.apply(&k.apply(y_prev));
        let numerator = adj.dot(&tky);
        let denominator = adj.dot(&sol.y);
        if !(denominator.abs() > tol.decomposition * scale) {
            return Err(Error::Degenerate(format!(
                "(Q*^{n} f_{n})(y_{n}) = {denominator:e} vanishes relative to scale {scale:e}"
            )));
        }
        let alpha = numerator / denominator;
        let ratio = prev.norm_y / cur.norm_y;
        let bound = trace.lambda * t.norm * ratio;
        let r = &tky - &sol.y * alpha;
        let membership_residual = adj.dot(&r).abs();

        let lhs = op.apply_power(n, &tky)?;
        let rhs = t.apply(&op.apply_power(1, &k.apply(&op.apply_power(n - 1, y_prev)?))?);
        let lhs_norm = norm(&lhs, kind);
        let commutation_error = if lhs_norm > 0.0 { norm(&(&lhs - &rhs), kind) / lhs_norm } else { norm(&rhs, kind) };
        let envelope_value = sol.f.coefficients().dot(&lhs).abs();
        let envelope_bound = alpha.abs() * (x0_norm + trace.epsilon);

        let checks = vec![
            Check::at_most(format!("alpha_bound[i={i}]"), alpha.abs(), bound, tol.certificate * scale),
            Check::at_most(format!("membership[i={i}]"), membership_residual, 0.0, tol.certificate * scale),
            Check::at_most(format!("envelope[i={i}]"), envelope_value, envelope_bound, tol.certificate * envelope_bound.max(f64::MIN_POSITIVE)),
            Check::at_most(format!("commutation[i={i}]"), commutation_error, 0.0, tol.commutation),
        ];
        out.push(AlphaRecord {
            i,
            n,
            alpha,
            bound,
            ratio,
            scale,
            numerator,
            denominator,
            membership_residual,
            envelope_value,
            envelope_bound,
            commutation_error,
            checks,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnihilationEntry {
    pub t_coefficients: Vec<f64>,
    pub t_norm: f64,
    /// `|g(T Q w)| / (‖T‖‖Qw‖)`.
    pub residual: f64,
    /// `|f_{n_i}(Q^{n_i} T K y_{n_i−1})|` along the plan.
    pub envelope_values: Vec<f64>,
    /// `|α_i|(‖x₀‖ + ε)` along the plan.
    pub envelope_bounds: Vec<f64>,
    /// Residual at most ten times the last envelope bound.
    pub check: Option<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnihilationReport {
    pub qw_norm: f64,
    pub entries: Vec<AnnihilationEntry>,
}

/// `g(TQw)` for each sampled `T`, next to the α envelope of that `T`.
/// `alphas[j]` belongs to `t_samples[j]`; missing entries leave the
/// envelope empty.
pub fn verify_annihilation(
    g: &Functional,
    w: &DVector<f64>,
    t_samples: &[CommutantElement],
    alphas: &[Vec<AlphaRecord>],
    op: &OperatorHandle,
) -> Result<AnnihilationReport> {
    let kind = op.kind();
    let qw = op.apply_power(1, w)?;
    let qw_norm = norm(&qw, kind);
    let mut entries = Vec::with_capacity(t_samples.len());
    for (j, t) in t_samples.iter().enumerate() {
        let value = g.apply(&t.apply(&qw))?;
        let denom = t.norm * qw_norm;
        let residual = if denom > 0.0 { value.abs() / denom } else { 0.0 };
        let recs = alphas.get(j).map(Vec::as_slice).unwrap_or(&[]);
        let envelope_values: Vec<f64> = recs.iter().map(|a| a.envelope_value).collect();
        let envelope_bounds: Vec<f64> = recs.iter().map(|a| a.envelope_bound).collect();
        let check = envelope_bounds
            .last()
            .map(|&b| Check::at_most(format!("annihilation[T{j}]"), residual, 10.0 * b, 0.0));
        entries.push(AnnihilationEntry {
            t_coefficients: t.coefficients.clone(),
            t_norm: t.norm,
            residual,
            envelope_values,
            envelope_bounds,
            check,
        });
    }
    Ok(AnnihilationReport { qw_norm, entries })
}

pub fn alpha_checks_passed(records: &[AlphaRecord]) -> bool {
    records.iter().all(|r| all_passed(&r.checks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gallery;
    use crate::operator::commutant_sample;
    use nalgebra::DMatrix;

    fn identity(n: usize) -> OperatorHandle {
        OperatorHandle::new(DMatrix::identity(n, n), NormKind::L2).unwrap()
    }

    #[test]
    fn greedy_rule_on_listed_ratios() {
        let ratios: Vec<(usize, f64)> = [0.5, 0.4, 0.05, 0.3, 0.01].iter().enumerate().map(|(i, &q)| (i + 2, q)).collect();
        let plan = select_from_ratios(&ratios, 0.5).unwrap();
        assert_eq!(plan.ratios, vec![0.5, 0.05, 0.01]);
        assert_eq!(plan.indices, vec![2, 4, 6]);
        assert!(!plan.short);
        assert!(plan.is_geometric());
    }

    #[test]
    fn rho_out_of_range() {
        assert!(select_from_ratios(&[(2, 0.5)], 1.0).is_err());
        assert!(select_from_ratios(&[(2, 0.5)], 0.0).is_err());
    }

    #[test]
    fn identity_trace() {
        let q = identity(2);
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let trace = run_trace(&q, &x0, 1.0 / 3.0, &TraceConfig::new(3)).unwrap();
        assert_eq!(trace.records.len(), 3);
        assert!(trace.records[0].ratio.is_none());
        for r in &trace.records {
            assert!((&r.solution.y - &trace.records[0].solution.y).norm() < 1e-14);
        }
        for (_, q) in trace.ratios() {
            assert!((q - 1.0).abs() < 1e-14);
        }
        let plan = select_subsequence(&trace, 0.5).unwrap();
        assert_eq!(plan.len(), 1);
        assert!(plan.short);

        let rep = check_quasinilpotence_contrapositive(&trace, 0.5, &q).unwrap();
        assert!(rep.hypothesis && rep.passed);
        assert_eq!(rep.entries.len(), 2);
        let rep = check_quasinilpotence_contrapositive(&trace, 1.5, &q).unwrap();
        assert!(rep.vacuous && rep.entries.is_empty());
    }

    #[test]
    fn trace_rejects_short_horizon() {
        let q = identity(2);
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        assert!(run_trace(&q, &x0, 0.3, &TraceConfig::new(1)).is_err());
    }

    #[test]
    fn trace_failure_names_the_power() {
        let q = OperatorHandle::new(DMatrix::from_row_slice(2, 2, &[1e200, 0.0, 0.0, 1e200]), NormKind::L2).unwrap();
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        match run_trace(&q, &x0, 0.3, &TraceConfig::new(3)) {
            Err(Error::Trace { n, .. }) => assert_eq!(n, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constant_w_and_g_on_identity() {
        let q = identity(2);
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let trace = run_trace(&q, &x0, 1.0 / 3.0, &TraceConfig::new(4)).unwrap();
        let plan = SubsequencePlan { indices: vec![2, 3, 4], rho: 0.5, ratios: vec![1.0; 3], short: false };
        let k = commutant_sample(&q, &[1.0]).unwrap();
        let w = estimate_w(&trace, &plan, &q, &k).unwrap();
        assert!(w.cauchy_residuals.iter().all(|&r| r == 0.0));
        assert!((&w.w - &trace.records[0].solution.y).norm() < 1e-14);
        assert!((w.hypothesis_bound - 2.0 / 3.0).abs() < 1e-15);

        let g = estimate_g(&trace, &plan, q.tolerances()).unwrap();
        assert_eq!(g.diameter, 0.0);
        assert!(!g.low_confidence);
        assert_eq!(g.members, vec![2, 3, 4]);
        assert!((g.g.coefficients()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn antipodal_functionals_are_low_confidence() {
        let q = identity(2);
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let mut trace = run_trace(&q, &x0, 1.0 / 3.0, &TraceConfig::new(3)).unwrap();
        let f = trace.records[2].solution.f.clone();
        trace.records[1].solution.f = Functional::new(-f.coefficients(), NormKind::L2);
        let plan = SubsequencePlan { indices: vec![2, 3], rho: 0.5, ratios: vec![1.0, 1.0], short: true };
        let g = estimate_g(&trace, &plan, q.tolerances()).unwrap();
        assert!(g.low_confidence);
        assert_eq!(g.members, vec![3]);
    }

    #[test]
    fn hypothesis_violation_is_an_error() {
        let q = OperatorHandle::new(DMatrix::from_diagonal(&DVector::from_column_slice(&[1.0, 2.0])), NormKind::L2).unwrap();
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let trace = run_trace(&q, &x0, 1.0 / 3.0, &TraceConfig::new(3)).unwrap();
        let plan = select_subsequence(&trace, 0.5).unwrap();
        // K = diag(0.1, 1): ‖K x₀‖ = 0.1 < ε‖K‖
        let k = commutant_sample(&q, &[-0.8, 0.9]).unwrap();
        assert!(matches!(estimate_w(&trace, &plan, &q, &k), Err(Error::Hypothesis(_))));
    }

    #[test]
    fn zero_t_gives_zero_alpha_and_residual() {
        let q = identity(2);
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let trace = run_trace(&q, &x0, 1.0 / 3.0, &TraceConfig::new(3)).unwrap();
        let plan = select_subsequence(&trace, 0.5).unwrap();
        let zero = commutant_sample(&q, &[0.0]).unwrap();
        let k = commutant_sample(&q, &[1.0]).unwrap();
        let recs = alpha_sequence(&trace, &plan, &q, &zero, &k).unwrap();
        assert!(recs.iter().all(|r| r.alpha == 0.0 && r.membership_residual == 0.0));
        let w = estimate_w(&trace, &plan, &q, &k).unwrap();
        let g = estimate_g(&trace, &plan, q.tolerances()).unwrap();
        let rep = verify_annihilation(&g.g, &w.w, &[zero], &[recs], &q).unwrap();
        assert_eq!(rep.entries[0].residual, 0.0);
    }

    #[test]
    fn identity_alpha_single_index() {
        let q = identity(2);
        let x0 = DVector::from_column_slice(&[1.0, 0.0]);
        let trace = run_trace(&q, &x0, 1.0 / 3.0, &TraceConfig::new(2)).unwrap();
        let plan = select_subsequence(&trace, 0.5).unwrap();
        let t = commutant_sample(&q, &[1.0]).unwrap();
        let recs = alpha_sequence(&trace, &plan, &q, &t, &t).unwrap();
        assert_eq!(recs.len(), 1);
        // both pairings by hand: y₁ = y₂ and Q*²f = f, so α = 1
        let f = trace.records[1].solution.f.coefficients();
        let y1 = &trace.records[0].solution.y;
        let y2 = &trace.records[1].solution.y;
        assert!((recs[0].alpha - f.dot(y1) / f.dot(y2)).abs() < 1e-15);
        assert!(recs[0].alpha.abs() <= 1.0 + 1e-12);
        assert!(alpha_checks_passed(&recs));
    }

    #[test]
    fn volterra_pipeline_small() {
        let q = gallery::volterra(8, NormKind::L2).unwrap();
        let k = gallery::normalized(&q).unwrap();
        let setup = gallery::corollary_setup(&k).unwrap();
        let trace = run_trace(&q, &setup.x0, setup.epsilon, &TraceConfig::new(4)).unwrap();
        let ratios = trace.ratios();
        assert!(ratios.iter().all(|&(_, r)| r < 1.0));
        assert!(all_passed(&trace.record_checks(q.tolerances())));
        let plan = select_subsequence(&trace, 0.5).unwrap();
        let k_op = commutant_sample(&q, &[0.0, 1.0]).unwrap().normalized().unwrap();
        let w = estimate_w(&trace, &plan, &q, &k_op).unwrap();
        assert!(w.w_norm >= w.hypothesis_bound - 1e-12);
        let t = commutant_sample(&q, &[0.0, 1.0, 2.0]).unwrap();
        let recs = alpha_sequence(&trace, &plan, &q, &t, &k_op).unwrap();
        assert!(alpha_checks_passed(&recs), "{recs:#?}");
    }
}
