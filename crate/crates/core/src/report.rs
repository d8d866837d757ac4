//! Report files: `report.json`, `trace.csv`, `basis.csv`, and re-verification
//! of a stored run from its vectors.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::check::{all_passed, Check};
use crate::error::{Error, Result};
use crate::gallery::{write_matrix_csv, CorollarySetup, GallerySpec};
use crate::iteration::{
    alpha_sequence, check_quasinilpotence_contrapositive, estimate_g, estimate_w, select_from_ratios,
    verify_annihilation, AlphaRecord, AnnihilationReport, ContrapositiveReport, GEstimate, IterationTrace,
    SubsequencePlan, TraceRecord, WEstimate,
};
use crate::minvec::{recertify, CertificateReport, MinimalProblem, MinimalSolution};
use crate::norm::{norm, NormKind};
use crate::operator::{commutant_sample, CommutantElement, Injectivity, OperatorHandle};
use crate::plot;
use crate::scenario::Scenario;
use crate::subspace::{invariance_residual, properness_check, ProperReport, SubspaceCandidate};

pub const REPORT_FILE: &str = "report.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const BASIS_FILE: &str = "basis.csv";
pub const PLOT_FILE: &str = "plots.svg";
pub const TRACE_COLUMNS: [&str; 7] = ["n", "d_n", "norm_y_n", "ratio_n", "eq1_slack", "f_n_x0", "residual"];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorSection {
    #[serde(with = "crate::serde_vec::rows")]
    pub matrix: DMatrix<f64>,
    pub norm: NormKind,
    pub injectivity: Injectivity,
    pub operator_norm: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemSection {
    #[serde(with = "crate::serde_vec")]
    pub x0: DVector<f64>,
    pub epsilon: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSection {
    pub solution: MinimalSolution,
    pub certificate: CertificateReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaSet {
    pub t: CommutantElement,
    pub records: Vec<AlphaRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceSection {
    pub records: Vec<TraceRecord>,
    pub record_checks: Vec<Check>,
    pub plan: SubsequencePlan,
    pub contrapositive: ContrapositiveReport,
    pub k: CommutantElement,
    pub w: WEstimate,
    pub g: GEstimate,
    pub alphas: Vec<AlphaSet>,
    pub annihilation: AnnihilationReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InvarianceEntry {
    pub coefficients: Vec<f64>,
    pub residual: f64,
    pub check: Check,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubspaceSection {
    pub candidate: SubspaceCandidate,
    pub orthonormality_defect: f64,
    pub projector_idempotence: f64,
    pub projector_symmetry: f64,
    pub invariance: Vec<InvarianceEntry>,
    pub properness: ProperReport,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub scenario: Scenario,
    pub operator: OperatorSection,
    pub problem: ProblemSection,
    pub solve: Option<SolveSection>,
    pub trace: Option<TraceSection>,
    pub subspace: Option<SubspaceSection>,
    /// Every check of the run, flattened with qualified names.
    pub invariants: Vec<Check>,
    pub passed: bool,
}

fn prefixed<'a>(prefix: &str, checks: &'a [Check]) -> impl Iterator<Item = Check> + 'a {
    let prefix = prefix.to_string();
    checks.iter().map(move |c| Check { name: format!("{prefix}.{}", c.name), ..c.clone() })
}

impl Report {
    pub fn collect_invariants(&self) -> Vec<Check> {
        let mut out = Vec::new();
        if let Some(s) = &self.solve {
            out.extend(prefixed("solve", &s.certificate.checks));
        }
        if let Some(t) = &self.trace {
            out.extend(prefixed("trace", &t.record_checks));
            for e in &t.contrapositive.entries {
                out.extend(prefixed("contrapositive", std::slice::from_ref(&e.check)));
            }
            out.extend(prefixed("limits", std::slice::from_ref(&t.g.check)));
            for (j, set) in t.alphas.iter().enumerate() {
                for r in &set.records {
                    out.extend(prefixed(&format!("alpha[T{j}]"), &r.checks));
                }
            }
            for e in &t.annihilation.entries {
                out.extend(prefixed("annihilation", e.check.as_slice()));
            }
        }
        if let Some(s) = &self.subspace {
            out.push(Check::at_most("subspace.orthonormality", s.orthonormality_defect, 0.0, 1e-12));
            out.push(Check::at_most("subspace.projector_idempotence", s.projector_idempotence, 0.0, 1e-10));
            out.push(Check::at_most("subspace.projector_symmetry", s.projector_symmetry, 0.0, 1e-12));
            for e in &s.invariance {
                out.extend(prefixed("subspace", std::slice::from_ref(&e.check)));
            }
            out.extend(prefixed("subspace", &s.properness.checks));
        }
        out
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.invariants.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

pub fn trace_csv(records: &[TraceRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRACE_COLUMNS)?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            fmt_f64(r.d),
            fmt_f64(r.norm_y),
            r.ratio.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.eq1_slack),
            fmt_f64(r.f_x0),
            fmt_f64(r.residual),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Input(e.to_string()))
}

/// One parsed row of `trace.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub n: usize,
    pub d: f64,
    pub norm_y: f64,
    pub ratio: Option<f64>,
    pub eq1_slack: f64,
    pub f_x0: f64,
    pub residual: f64,
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>> {
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let header = rdr.headers()?.clone();
    if header.iter().ne(TRACE_COLUMNS) {
        return Err(Error::Input(format!("unexpected trace.csv header: {header:?}")));
    }
    let num = |s: &str| -> Result<f64> { s.trim().parse().map_err(|_| Error::Input(format!("bad number `{s}` in trace.csv"))) };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let n = rec[0].trim().parse().map_err(|_| Error::Input(format!("bad index `{}` in trace.csv", &rec[0])))?;
        let ratio = if rec[3].trim().is_empty() { None } else { Some(num(&rec[3])?) };
        out.push(TraceRow {
            n,
            d: num(&rec[1])?,
            norm_y: num(&rec[2])?,
            ratio,
            eq1_slack: num(&rec[4])?,
            f_x0: num(&rec[5])?,
            residual: num(&rec[6])?,
        });
    }
    Ok(out)
}

/// Write every output of a report into `dir`; returns the files written.
pub fn write_outputs(report: &Report, dir: &Path, emit_plot: bool) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if let Some(t) = &report.trace {
        let p = dir.join(TRACE_FILE);
        fs::write(&p, trace_csv(&t.records)?)?;
        written.push(p);
    }
    if let Some(s) = &report.subspace {
        let p = dir.join(BASIS_FILE);
        let mut buf = Vec::new();
        write_matrix_csv(&s.candidate.basis, &mut buf)?;
        fs::write(&p, buf)?;
        written.push(p);
    }
    if emit_plot {
        let p = dir.join(PLOT_FILE);
        fs::write(&p, plot::render(report))?;
        written.push(p);
    }
    let p = dir.join(REPORT_FILE);
    fs::write(&p, report.to_json()?)?;
    written.push(p);
    Ok(written)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GalleryReport {
    pub spec: GallerySpec,
    pub norm: NormKind,
    #[serde(with = "crate::serde_vec::rows")]
    pub matrix: DMatrix<f64>,
    pub injectivity: Injectivity,
    pub operator_norm: f64,
    pub quasinilpotence_profile: Vec<f64>,
    pub corollary: Option<CorollarySetup>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyOutcome {
    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }
}

fn rel_close(name: String, stored: f64, fresh: f64, rel: f64) -> Check {
    Check::close(name, stored, fresh, rel * fresh.abs().max(f64::MIN_POSITIVE))
}

fn same_vector(name: impl Into<String>, a: &DVector<f64>, b: &DVector<f64>, rel: f64) -> Check {
    if a.len() != b.len() {
        return Check::flag(name, false);
    }
    let diff = (a - b).amax();
    Check::at_most(name, diff, 0.0, rel * b.amax().max(f64::MIN_POSITIVE))
}

/// Recompute every identity of a stored run from its vectors.
///
/// Certificates, α values and bounds, envelopes, limit estimates and the
/// subspace residuals are derived again from `y`, `f`, the operator and the
/// stored polynomial coefficients, then compared with what the report says.
/// Threshold findings that do not follow from the stored data alone (the
/// invariance threshold of the subspace, plan length) are not re-judged.
pub fn verify(report: &Report, trace_csv_text: Option<&str>) -> Result<VerifyOutcome> {
    let sc = &report.scenario;
    let tol = sc.tolerances;
    let op = OperatorHandle::with_tolerances(report.operator.matrix.clone(), report.operator.norm, tol)?;
    let kind = op.kind();
    let x0 = &report.problem.x0;
    let eps = report.problem.epsilon;
    let lambda = report.problem.lambda;
    let problem = |n: usize| -> Result<MinimalProblem<'_>> {
        Ok(MinimalProblem::new(&op, n, x0.clone(), eps)?.with_lambda(lambda)?.with_tolerances(tol))
    };
    let mut checks = Vec::new();

    if let Some(s) = &report.solve {
        let p = problem(s.solution.power)?;
        checks.extend(prefixed("solve", &recertify(&s.solution, &p)?));
    }

    if let Some(t) = &report.trace {
        let mut prev: Option<f64> = None;
        for (i, r) in t.records.iter().enumerate() {
            let tag = format!("trace[n={}]", r.n);
            checks.push(Check::close(format!("{tag}.index"), r.n as f64, (i + 1) as f64, 0.0));
            checks.extend(prefixed(&tag, &recertify(&r.solution, &problem(r.n)?)?));
            let ny = norm(&r.solution.y, kind);
            checks.push(rel_close(format!("{tag}.norm_y"), r.norm_y, ny, tol.certificate));
            checks.push(Check::close(format!("{tag}.d"), r.d, r.solution.d, 0.0));
            checks.push(Check::close(format!("{tag}.eq1_slack"), r.eq1_slack, r.solution.eq1_slack, 0.0));
            checks.push(Check::close(format!("{tag}.residual"), r.residual, r.solution.residual_norm, 0.0));
            checks.push(rel_close(format!("{tag}.f_x0"), r.f_x0, r.solution.f_x0(x0), tol.certificate));
            let ratio_ok = match (prev, r.ratio) {
                (None, None) => true,
                (Some(p), Some(q)) => (q - p / ny).abs() <= tol.certificate * q.abs(),
                _ => false,
            };
            checks.push(Check::flag(format!("{tag}.ratio"), ratio_ok));
            prev = Some(ny);
        }
        if let Some(text) = trace_csv_text {
            let rows = parse_trace_csv(text)?;
            checks.push(Check::close("trace_csv.rows", rows.len() as f64, t.records.len() as f64, 0.0));
            for (row, r) in rows.iter().zip(&t.records) {
                let same = row.n == r.n
                    && row.d == r.d
                    && row.norm_y == r.norm_y
                    && row.ratio == r.ratio
                    && row.eq1_slack == r.eq1_slack
                    && row.f_x0 == r.f_x0
                    && row.residual == r.residual;
                checks.push(Check::flag(format!("trace_csv[n={}]", row.n), same));
            }
        }

        let trace = IterationTrace { kind, x0: x0.clone(), epsilon: eps, lambda, records: t.records.clone() };
        let plan = select_from_ratios(&trace.ratios(), t.plan.rho)?;
        checks.push(Check::flag("plan.reproduced", plan == t.plan));
        checks.push(Check::flag("plan.geometric", t.plan.is_geometric()));

        let contra = check_quasinilpotence_contrapositive(&trace, t.contrapositive.delta, &op)?;
        checks.push(Check::flag("contrapositive.hypothesis", contra.hypothesis == t.contrapositive.hypothesis));
        for (fresh, stored) in contra.entries.iter().zip(&t.contrapositive.entries) {
            checks.push(rel_close(format!("contrapositive[n={}].power_norm", fresh.n), stored.power_norm, fresh.power_norm, tol.certificate));
            checks.extend(prefixed("contrapositive", std::slice::from_ref(&fresh.check)));
        }

        let k = commutant_sample(&op, &t.k.coefficients)?;
        checks.push(rel_close("limits.k_norm".into(), t.k.norm, k.norm, tol.certificate));
        let w = estimate_w(&trace, &t.plan, &op, &k)?;
        checks.push(same_vector("limits.w", &t.w.w, &w.w, 1e-12));
        let g = estimate_g(&trace, &t.plan, &tol)?;
        checks.push(same_vector("limits.g", t.g.g.coefficients(), g.g.coefficients(), 1e-12));
        checks.push(Check::at_least("limits.g_x0_at_least_epsilon", t.g.g.coefficients().dot(x0), eps, tol.limit_level));

        let mut ts = Vec::with_capacity(t.alphas.len());
        let mut fresh_sets = Vec::with_capacity(t.alphas.len());
        for (j, set) in t.alphas.iter().enumerate() {
            let tj = commutant_sample(&op, &set.t.coefficients)?;
            let fresh = alpha_sequence(&trace, &t.plan, &op, &tj, &k)?;
            checks.push(Check::close(format!("alpha[T{j}].count"), set.records.len() as f64, fresh.len() as f64, 0.0));
            for (stored, fr) in set.records.iter().zip(&fresh) {
                let tag = format!("alpha[T{j}][i={}]", fr.i);
                let a_tol = tol.certificate * fr.alpha.abs().max(fr.bound).max(f64::MIN_POSITIVE);
                checks.push(Check::close(format!("{tag}.alpha"), stored.alpha, fr.alpha, a_tol));
                checks.push(rel_close(format!("{tag}.bound"), stored.bound, fr.bound, tol.certificate));
                checks.push(Check::at_most(format!("{tag}.stored_alpha_bound"), stored.alpha.abs(), fr.bound, tol.certificate * fr.scale));
                let env = stored.alpha.abs() * (norm(x0, kind) + eps);
                checks.push(Check::at_most(format!("{tag}.stored_envelope"), fr.envelope_value, env, tol.certificate * env.max(f64::MIN_POSITIVE)));
                checks.extend(prefixed(&tag, &fr.checks));
            }
            ts.push(tj);
            fresh_sets.push(fresh);
        }
        let ann = verify_annihilation(&t.g.g, &t.w.w, &ts, &fresh_sets, &op)?;
        for (j, (stored, fr)) in t.annihilation.entries.iter().zip(&ann.entries).enumerate() {
            checks.push(Check::close(format!("annihilation[T{j}].residual"), stored.residual, fr.residual, tol.certificate * fr.residual.max(1e-300)));
            checks.extend(fr.check.iter().cloned());
        }

        if let Some(s) = &report.subspace {
            let cand = &s.candidate;
            checks.push(Check::at_most("subspace.orthonormality", cand.orthonormality_defect(), 0.0, 1e-12));
            checks.push(Check::close("subspace.dim", cand.dim as f64, cand.basis.ncols() as f64, 0.0));
            for (j, e) in s.invariance.iter().enumerate() {
                let el = if j == 0 { k.clone() } else { commutant_sample(&op, &e.coefficients)? };
                let r = invariance_residual(cand, el.matrix())?;
                checks.push(Check::close(format!("subspace.invariance[{j}].reproduced"), e.residual, r, 1e-9 * r.max(f64::EPSILON)));
            }
            let prop = properness_check(cand, &t.g.g, &op.space())?;
            checks.push(Check::close("subspace.annihilation.reproduced", s.properness.annihilation, prop.annihilation, 1e-9 * prop.annihilation.max(f64::EPSILON)));
        }
    }
    let passed = all_passed(&checks);
    Ok(VerifyOutcome { checks, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 6590864169.547408, 4.67e-12, -0.0, 1e300, f64::MIN_POSITIVE] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }
}
