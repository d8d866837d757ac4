//! JSON scenario files and the batch pipeline they drive.

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::check::{all_passed, Check};
use crate::error::{Error, Result};
use crate::gallery::{self, GallerySpec, COROLLARY_EPSILON};
use crate::iteration::{
    alpha_checks_passed, alpha_sequence, check_quasinilpotence_contrapositive, estimate_g, estimate_w, run_trace,
    select_subsequence, verify_annihilation, TraceConfig,
};
use crate::minvec::{certificate_report, relax_to_lambda, solve, MinimalProblem};
use crate::norm::{norm, NormKind};
use crate::operator::{commutant_sample, quasinilpotence_profile, CommutantElement, OperatorHandle};
use crate::report::{
    AlphaSet, GalleryReport, InvarianceEntry, OperatorSection, ProblemSection, Report, SolveSection, SubspaceSection,
    TraceSection,
};
use crate::subspace::{build_candidate, invariance_residual, properness_check};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum X0Source {
    Explicit {
        values: Vec<f64>,
    },
    /// Unit `x₀` with `‖Kx₀‖ ≥ 2/3` for the normalized compact element.
    #[default]
    Corollary,
    /// All-ones vector scaled to norm one.
    AllOnes,
}

fn default_norm() -> NormKind {
    NormKind::L2
}
fn default_n_max() -> usize {
    6
}
fn default_one() -> usize {
    1
}
fn default_lambda() -> f64 {
    1.0
}
fn default_rho() -> f64 {
    0.5
}
fn default_degree() -> usize {
    12
}
fn default_k() -> Vec<f64> {
    vec![0.0, 1.0]
}
fn default_t() -> Vec<Vec<f64>> {
    vec![vec![1.0], vec![0.0, 1.0], vec![0.0, 1.0, 2.0]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub operator: GallerySpec,
    #[serde(default = "default_norm")]
    pub norm: NormKind,
    #[serde(default)]
    pub x0: X0Source,
    /// Defaults to 1/3 for the corollary source and `‖x₀‖/3` otherwise.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Power used by the `solve` command.
    #[serde(default = "default_one")]
    pub power: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default)]
    pub relax: bool,
    #[serde(default = "default_rho")]
    pub rho: f64,
    /// Krylov degree of the subspace candidate.
    #[serde(default = "default_degree")]
    pub degree: usize,
    /// Polynomial coefficients of the compact element `K`, normalized to norm one.
    #[serde(default = "default_k")]
    pub k_coefficients: Vec<f64>,
    #[serde(default = "default_t")]
    pub t_samples: Vec<Vec<f64>>,
    /// Threshold of the contrapositive check; defaults to half the smallest ratio.
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Input(m));
        if self.n_max < 2 {
            return bad(format!("n_max must be at least 2, got {}", self.n_max));
        }
        if self.power < 1 {
            return bad("power must be at least 1".into());
        }
        if !(self.lambda >= 1.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be finite and >= 1, got {}", self.lambda));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad(format!("rho must lie in (0, 1), got {}", self.rho));
        }
        if self.degree < 1 {
            return bad("degree must be at least 1".into());
        }
        if self.k_coefficients.is_empty() || self.t_samples.iter().any(Vec::is_empty) {
            return bad("polynomial coefficient lists must be non-empty".into());
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0) || !e.is_finite() {
                return bad(format!("epsilon must be positive, got {e}"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return bad(format!("delta must be positive, got {d}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Trace,
    Subspace,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Trace => "trace",
            Command::Subspace => "subspace",
        }
    }
}

/// A pipeline failure tagged with the stage that raised it.
#[derive(Debug, thiserror::Error)]
#[error("stage `{stage}` failed: {source}")]
pub struct StageError {
    pub stage: &'static str,
    #[source]
    pub source: Error,
}

impl StageError {
    /// Failures before any solver runs are problems with the input.
    pub fn is_input(&self) -> bool {
        matches!(self.stage, "scenario" | "operator" | "setup")
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> std::result::Result<T, StageError> {
    r.map_err(|source| StageError { stage: name, source })
}

/// Operator, compact element and starting data shared by every command.
pub struct Setup {
    pub op: OperatorHandle,
    pub k: CommutantElement,
    pub x0: DVector<f64>,
    pub epsilon: f64,
}

pub fn prepare(scenario: &Scenario, base_dir: &Path) -> std::result::Result<Setup, StageError> {
    stage("scenario", scenario.validate())?;
    let tol = scenario.tolerances;
    let op = stage("operator", scenario.operator.build(scenario.norm, tol, base_dir))?;
    stage("operator", op.ensure_injective())?;
    let k = stage("setup", commutant_sample(&op, &scenario.k_coefficients).and_then(|k| k.normalized()))?;
    let (x0, default_eps) = match &scenario.x0 {
        X0Source::Explicit { values } => {
            let x0 = DVector::from_column_slice(values);
            let e = norm(&x0, scenario.norm) / 3.0;
            (x0, e)
        }
        X0Source::AllOnes => {
            let ones = DVector::from_element(op.dim(), 1.0);
            let x0 = &ones / norm(&ones, scenario.norm);
            (x0, 1.0 / 3.0)
        }
        X0Source::Corollary => {
            let k_op = stage("setup", OperatorHandle::with_tolerances(k.matrix().clone(), scenario.norm, tol))?;
            let setup = stage("setup", gallery::corollary_setup(&k_op))?;
            (setup.x0, COROLLARY_EPSILON)
        }
    };
    let epsilon = scenario.epsilon.unwrap_or(default_eps);
    // Validates dimensions, ε < ‖x₀‖ and λ once, before any solve.
    stage("setup", MinimalProblem::new(&op, 1, x0.clone(), epsilon).and_then(|p| p.with_lambda(scenario.lambda)))?;
    Ok(Setup { op, k, x0, epsilon })
}

/// Run one command of the pipeline and assemble its report.
pub fn run(scenario: &Scenario, command: Command, base_dir: &Path) -> std::result::Result<Report, StageError> {
    let setup = prepare(scenario, base_dir)?;
    let Setup { op, k, x0, epsilon } = &setup;
    let tol = scenario.tolerances;
    let op_norm = stage("operator", op.norm())?;
    let mut report = Report {
        command: command.as_str().to_string(),
        scenario: scenario.clone(),
        operator: OperatorSection {
            matrix: op.matrix().clone(),
            norm: op.kind(),
            injectivity: op.injectivity(),
            operator_norm: op_norm,
        },
        problem: ProblemSection { x0: x0.clone(), epsilon: *epsilon, lambda: scenario.lambda },
        solve: None,
        trace: None,
        subspace: None,
        invariants: Vec::new(),
        passed: true,
    };

    if command == Command::Solve {
        let problem = stage("solve", MinimalProblem::new(op, scenario.power, x0.clone(), *epsilon))?;
        let problem = stage("solve", problem.with_lambda(scenario.lambda))?;
        let mut sol = stage("solve", solve(&problem))?;
        if scenario.relax && scenario.lambda > 1.0 {
            sol = stage("solve", relax_to_lambda(&sol, &problem, scenario.lambda, scenario.seed))?;
        }
        let certificate = stage("solve", certificate_report(&sol, &problem, scenario.seed))?;
        report.solve = Some(SolveSection { solution: sol, certificate });
    } else {
        let cfg = TraceConfig { n_max: scenario.n_max, lambda: scenario.lambda, relax: scenario.relax, seed: scenario.seed };
        let trace = stage("trace", run_trace(op, x0, *epsilon, &cfg))?;
        let plan = stage("subsequence", select_subsequence(&trace, scenario.rho))?;
        let delta = scenario.delta.unwrap_or_else(|| {
            trace.ratios().iter().map(|&(_, q)| q).fold(f64::INFINITY, f64::min) / 2.0
        });
        let contrapositive = stage("contrapositive", check_quasinilpotence_contrapositive(&trace, delta, op))?;
        let w = stage("limits", estimate_w(&trace, &plan, op, k))?;
        let g = stage("limits", estimate_g(&trace, &plan, &tol))?;
        let ts: Vec<CommutantElement> =
            stage("alpha", scenario.t_samples.iter().map(|c| commutant_sample(op, c)).collect::<Result<_>>())?;
        let mut alphas = Vec::with_capacity(ts.len());
        for t in &ts {
            let records = stage("alpha", alpha_sequence(&trace, &plan, op, t, k))?;
            alphas.push(records);
        }
        let annihilation = stage("annihilation", verify_annihilation(&g.g, &w.w, &ts, &alphas, op))?;

        if command == Command::Subspace {
            let cand = stage("subspace", build_candidate(op, &w.w, scenario.degree, tol.rank))?;
            let mut invariance = Vec::with_capacity(ts.len() + 1);
            for (label, el) in std::iter::once(("K", k)).chain(ts.iter().map(|t| ("T", t))) {
                let residual = stage("subspace", invariance_residual(&cand, el.matrix()))?;
                let name = format!("invariance[{label}={:?}]", el.coefficients);
                let check = Check::at_most(name, residual, 0.0, tol.invariance);
                invariance.push(InvarianceEntry { coefficients: el.coefficients.clone(), residual, check });
            }
            let properness = stage("subspace", properness_check(&cand, &g.g, &op.space()))?;
            let (idem, sym) = cand.projector_defects();
            report.subspace = Some(SubspaceSection {
                orthonormality_defect: cand.orthonormality_defect(),
                projector_idempotence: idem,
                projector_symmetry: sym,
                candidate: cand,
                invariance,
                properness,
            });
        }
        report.trace = Some(TraceSection {
            records: trace.records.clone(),
            record_checks: trace.record_checks(&tol),
            plan,
            contrapositive,
            k: k.clone(),
            w,
            g,
            alphas: ts.into_iter().zip(alphas).map(|(t, records)| AlphaSet { t, records }).collect(),
            annihilation,
        });
    }
    report.invariants = report.collect_invariants();
    report.passed = all_passed(&report.invariants)
        && report.trace.as_ref().is_none_or(|t| t.alphas.iter().all(|a| alpha_checks_passed(&a.records)));
    Ok(report)
}

/// Operator facts for the `gallery` command.
pub fn gallery_report(scenario: &Scenario, base_dir: &Path) -> std::result::Result<GalleryReport, StageError> {
    stage("scenario", scenario.validate())?;
    let op = stage("operator", scenario.operator.build(scenario.norm, scenario.tolerances, base_dir))?;
    let operator_norm = stage("operator", op.norm())?;
    let profile = stage("operator", quasinilpotence_profile(&op, scenario.n_max, scenario.norm))?;
    let corollary = commutant_sample(&op, &scenario.k_coefficients)
        .and_then(|k| k.normalized())
        .and_then(|k| OperatorHandle::with_tolerances(k.matrix().clone(), scenario.norm, scenario.tolerances))
        .and_then(|k| gallery::corollary_setup(&k))
        .ok();
    Ok(GalleryReport {
        spec: scenario.operator.clone(),
        norm: scenario.norm,
        matrix: op.matrix().clone(),
        injectivity: op.injectivity(),
        operator_norm,
        quasinilpotence_profile: profile,
        corollary,
    })
}
