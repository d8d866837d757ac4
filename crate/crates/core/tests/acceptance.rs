//! Acceptance criteria 1 to 8. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use minvec::gallery::{self, COROLLARY_EPSILON};
use minvec::iteration::{check_quasinilpotence_contrapositive, run_trace, TraceConfig};
use minvec::report::Report;
use minvec::scenario::{self, Scenario};
use minvec::subspace::build_candidate;
use minvec::{norm, relax_to_lambda, solve, MinimalProblem, MinimalSolution, NormKind, OperatorHandle};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(failures: &[String], summary: String) -> Self {
        if failures.is_empty() {
            Outcome { passed: true, detail: summary }
        } else {
            let shown: Vec<&str> = failures.iter().take(4).map(String::as_str).collect();
            let more = if failures.len() > 4 { format!(" (+{} more)", failures.len() - 4) } else { String::new() };
            Outcome { passed: false, detail: format!("{summary}; {}{more}", shown.join("; ")) }
        }
    }
}

fn runtime(failures: &mut Vec<String>, elapsed: Duration, limit: f64) {
    if elapsed.as_secs_f64() >= limit {
        failures.push(format!("runtime {:.2}s >= {limit}s", elapsed.as_secs_f64()));
    }
}

/// One randomized L2 instance: an operator from the gallery, a power, `x₀`
/// and `ε = ‖x₀‖/3`.
struct Instance {
    label: String,
    op: OperatorHandle,
    power: usize,
    x0: DVector<f64>,
    eps: f64,
}

fn suite_instances() -> Vec<Instance> {
    let mut r = common::rng(20240601);
    (0..50)
        .map(|i| {
            let (label, op, power) = match i % 3 {
                0 => {
                    let n = r.random_range(2..=16);
                    (format!("volterra({n})"), gallery::volterra(n, NormKind::L2).unwrap(), r.random_range(1..=4))
                }
                1 => {
                    let n = r.random_range(2..=10);
                    let eta = r.random_range(0.6..1.2);
                    (format!("jordan_shift({n},{eta:.3})"), gallery::jordan_shift(n, eta, NormKind::L2).unwrap(), r.random_range(1..=3))
                }
                _ => {
                    let n = r.random_range(2..=12);
                    let w: Vec<f64> = (0..n - 1).map(|_| r.random_range(0.5..1.5)).collect();
                    let eta = r.random_range(0.6..1.2);
                    (format!("weighted_shift({n},{eta:.3})"), gallery::weighted_shift(&w, eta, NormKind::L2).unwrap(), r.random_range(1..=3))
                }
            };
            let x0 = common::random_vec(&mut r, op.dim(), -1.0, 1.0);
            let eps = x0.norm() / 3.0;
            Instance { label: format!("#{i} {label} n={power}"), op, power, x0, eps }
        })
        .collect()
}

/// Certificate quantities recomputed from `y`, `f` and an independently
/// formed power `Aⁿ`.
struct Recomputed {
    residual: f64,
    f_x0: f64,
    adj_norm: f64,
    c: f64,
    d: f64,
    adj_y: f64,
}

fn recompute(inst: &Instance, y: &DVector<f64>, f: &DVector<f64>) -> Recomputed {
    let a = common::mat_pow(inst.op.matrix(), inst.power);
    let ay = &a * y;
    let adj = a.transpose() * f;
    Recomputed {
        residual: (&ay - &inst.x0).norm(),
        f_x0: f.dot(&inst.x0),
        adj_norm: adj.norm(),
        c: f.dot(&ay),
        d: y.norm(),
        adj_y: adj.dot(y),
    }
}

fn criterion_1(suite: &[(Instance, MinimalSolution)], elapsed: Duration) -> Outcome {
    let mut failures = Vec::new();
    let mut worst_cd: f64 = 0.0;
    for (inst, sol) in suite {
        let q = recompute(inst, &sol.y, sol.f.coefficients());
        let cd = q.c / q.d;
        worst_cd = worst_cd.max((q.adj_norm - cd).abs() / cd);
        if (q.residual - inst.eps).abs() > 1e-9 {
            failures.push(format!("{}: |residual - eps| = {:e}", inst.label, (q.residual - inst.eps).abs()));
        }
        if q.f_x0 < inst.eps - 1e-9 {
            failures.push(format!("{}: f(x0) - eps = {:e}", inst.label, q.f_x0 - inst.eps));
        }
        if (q.adj_norm - cd).abs() > 1e-8 * cd {
            failures.push(format!("{}: ||Q*^n f|| vs c/d rel {:e}", inst.label, (q.adj_norm - cd).abs() / cd));
        }
        let slack = q.adj_y - q.adj_norm * q.d;
        if slack < -1e-9 * q.adj_norm * q.d {
            failures.push(format!("{}: norm-attainment slack {:e}", inst.label, slack));
        }
    }
    runtime(&mut failures, elapsed, 10.0);
    Outcome::new(&failures, format!("{} instances, worst c/d rel err {worst_cd:.1e}, {:.2}s", suite.len(), elapsed.as_secs_f64()))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut r = common::rng(77);
    let mut worst_grid: f64 = 0.0;
    for i in 0..20 {
        let n = if i % 5 == 4 { (1 + i % 3).max(2) } else { 1 + i % 3 };
        let (a, label) = if i % 5 == 4 {
            (gallery::volterra(n, NormKind::L2).unwrap().matrix().clone(), format!("volterra({n})"))
        } else {
            (common::well_conditioned(&mut r, n), format!("random({n})"))
        };
        let power = 1 + i % 2;
        let op = OperatorHandle::new(a.clone(), NormKind::L2).unwrap();
        let x0 = common::random_vec(&mut r, n, 0.2, 1.0);
        let eps = x0.norm() / 3.0;
        let sol = match MinimalProblem::new(&op, power, x0.clone(), eps).and_then(|p| solve(&p)) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("grid #{i} {label}: {e}"));
                continue;
            }
        };
        let oracle = common::grid_oracle(&common::mat_pow(&a, power), &x0, eps, "L2", 1e-3);
        worst_grid = worst_grid.max((oracle - sol.d).abs());
        if (oracle - sol.d).abs() > 2e-3 {
            failures.push(format!("grid #{i} {label}: solver {} vs oracle {oracle}", sol.d));
        }
    }
    let mut worst_vertex: f64 = 0.0;
    for i in 0..20 {
        let kind = if i % 2 == 0 { NormKind::Linf } else { NormKind::L1 };
        let n = 1 + i % 4;
        let a = if i % 5 == 3 && n >= 2 { gallery::volterra(n, kind).unwrap().matrix().clone() } else { common::well_conditioned(&mut r, n) };
        let power = if i % 3 == 2 { 2 } else { 1 };
        let op = OperatorHandle::new(a.clone(), kind).unwrap();
        let x0 = common::random_vec(&mut r, n, -1.0, 1.0);
        let eps = norm(&x0, kind) / 3.0;
        let sol = match MinimalProblem::new(&op, power, x0.clone(), eps).and_then(|p| solve(&p)) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("vertex #{i} {kind:?}: {e}"));
                continue;
            }
        };
        let oracle = common::polyhedral_oracle(&common::mat_pow(&a, power), &x0, eps, kind.as_str());
        worst_vertex = worst_vertex.max((oracle - sol.d).abs());
        if (oracle - sol.d).abs() > 1e-7 {
            failures.push(format!("vertex #{i} {kind:?} dim {n}: solver {} vs oracle {oracle}", sol.d));
        }
    }
    let elapsed = start.elapsed();
    runtime(&mut failures, elapsed, 60.0);
    Outcome::new(
        &failures,
        format!("grid worst {worst_grid:.1e} (tol 2e-3), vertex worst {worst_vertex:.1e} (tol 1e-7), {:.2}s", elapsed.as_secs_f64()),
    )
}

fn criterion_3(suite: &[(Instance, MinimalSolution)]) -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = f64::INFINITY;
    for (k, (inst, sol)) in suite.iter().enumerate() {
        let problem = MinimalProblem::new(&inst.op, inst.power, inst.x0.clone(), inst.eps).unwrap();
        let relaxed = match relax_to_lambda(sol, &problem, 2.0, k as u64) {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("{}: {e}", inst.label));
                continue;
            }
        };
        if relaxed.relax_failed {
            failures.push(format!("{}: no relaxed point found", inst.label));
            continue;
        }
        let q = recompute(inst, &relaxed.y, relaxed.f.coefficients());
        if q.residual > inst.eps + 1e-9 {
            failures.push(format!("{}: relaxed point infeasible by {:e}", inst.label, q.residual - inst.eps));
        }
        if q.d > 2.0 * sol.d * (1.0 + 1e-12) {
            failures.push(format!("{}: ||y'|| = {} exceeds 2d", inst.label, q.d));
        }
        let scale = q.adj_norm * q.d;
        let slack = q.adj_y - 0.5 * scale;
        worst = worst.min(slack / scale);
        if slack < -1e-9 * scale {
            failures.push(format!("{}: half-factor slack {slack:e}", inst.label));
        }
    }
    Outcome::new(&failures, format!("{} relaxations at lambda = 2, smallest slack/scale {worst:.3}", suite.len()))
}

fn volterra_scenario() -> Scenario {
    Scenario::from_json(
        r#"{"operator": {"kind": "volterra", "size": 16}, "norm": "L2", "n_max": 6, "rho": 0.5,
            "t_samples": [[1], [0, 1], [0, 1, 2]]}"#,
    )
    .unwrap()
}

fn poly(q: &DMatrix<f64>, coefficients: &[f64]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(q.nrows(), q.ncols());
    for (k, c) in coefficients.iter().enumerate() {
        out += common::mat_pow(q, k) * *c;
    }
    out
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    let report = match scenario::run(&volterra_scenario(), scenario::Command::Trace, Path::new(".")) {
        Ok(r) => r,
        Err(e) => return Outcome::new(&[e.to_string()], "pipeline".into()),
    };
    let t = report.trace.as_ref().unwrap();
    let q = report.operator.matrix.clone();
    let x0 = &report.problem.x0;
    let eps = report.problem.epsilon;
    let plan = &t.plan.indices;
    if plan.len() < 3 {
        failures.push(format!("plan {plan:?} shorter than 3"));
    }
    let rec = |n: usize| t.records.iter().find(|r| r.n == n).unwrap();
    let k = poly(&q, &t.k.coefficients);
    let mut last_envelope = Vec::new();
    for set in &t.alphas {
        let tm = poly(&q, &set.t.coefficients);
        let t_norm = common::spectral_norm(&tm);
        let mut env_last = 0.0;
        for (i, &n) in plan.iter().enumerate() {
            let (cur, prev) = (rec(n), rec(n - 1));
            let an = common::mat_pow(&q, n);
            let f = cur.solution.f.coefficients();
            let adj = an.transpose() * f;
            let tky = &tm * (&k * &prev.solution.y);
            let alpha = adj.dot(&tky) / adj.dot(&cur.solution.y);
            let ratio = prev.solution.y.norm() / cur.solution.y.norm();
            let scale = adj.norm() * cur.solution.y.norm();
            let tag = format!("T={:?} i={i}", set.t.coefficients);
            if alpha.abs() > 2.0 * t_norm * ratio + 1e-9 * scale {
                failures.push(format!("{tag}: |alpha| {} > 2||T|| ratio {}", alpha.abs(), 2.0 * t_norm * ratio));
            }
            let stored = set.records[i].alpha;
            if (stored - alpha).abs() > 1e-9 * alpha.abs().max(ratio) {
                failures.push(format!("{tag}: stored alpha {stored} vs recomputed {alpha}"));
            }
            let value = f.dot(&(&an * &tky)).abs();
            let bound = alpha.abs() * (x0.norm() + eps);
            if value > bound * (1.0 + 1e-9) {
                failures.push(format!("{tag}: envelope {value:e} > {bound:e}"));
            }
            env_last = bound;
        }
        last_envelope.push((tm, t_norm, env_last));
    }
    let g = t.g.g.coefficients();
    let g_x0 = g.dot(x0);
    if g_x0 < 1.0 / 3.0 - 1e-8 {
        failures.push(format!("g(x0) = {g_x0} < 1/3"));
    }
    let n_last = *plan.last().unwrap();
    let w = &k * (common::mat_pow(&q, n_last - 1) * &rec(n_last - 1).solution.y);
    if (&w - &t.w.w).norm() > 1e-9 * w.norm() {
        failures.push("stored w differs from K Q^(n-1) y_(n-1)".into());
    }
    let qw = &q * &w;
    let mut residuals = Vec::new();
    for (tm, t_norm, env) in &last_envelope {
        let res = g.dot(&(tm * &qw)).abs() / (t_norm * qw.norm());
        residuals.push(res);
        if res > 10.0 * env {
            failures.push(format!("annihilation {res:e} > 10 x envelope {env:e}"));
        }
    }
    let elapsed = start.elapsed();
    runtime(&mut failures, elapsed, 30.0);
    Outcome::new(
        &failures,
        format!(
            "plan {plan:?}, g(x0) = {g_x0:.4}, annihilation residuals {:?}, {:.2}s",
            residuals.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>(),
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5() -> Outcome {
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    let cases: Vec<(&str, OperatorHandle, DVector<f64>, Option<f64>)> = vec![
        ("identity(3)", OperatorHandle::new(DMatrix::identity(3, 3), NormKind::L2).unwrap(), DVector::from_element(3, 1.0), Some(0.5)),
        ("volterra(8)", gallery::volterra(8, NormKind::L2).unwrap(), DVector::from_element(8, 0.5), None),
        (
            "weighted_shift(6)",
            gallery::weighted_shift(&[0.5, 2.0, 0.7, 1.5, 1.0], 0.8, NormKind::L2).unwrap(),
            DVector::from_fn(6, |i, _| 1.0 - 0.1 * i as f64),
            None,
        ),
    ];
    for (label, op, x0, delta) in cases {
        let eps = x0.norm() / 3.0;
        let trace = match run_trace(&op, &x0, eps, &TraceConfig::new(6)) {
            Ok(t) => t,
            Err(e) => {
                failures.push(format!("{label}: {e}"));
                continue;
            }
        };
        let ratios = trace.ratios();
        let delta = delta.unwrap_or_else(|| 0.5 * ratios.iter().map(|&(_, q)| q).fold(f64::INFINITY, f64::min));
        if !ratios.iter().all(|&(_, q)| q > delta) {
            failures.push(format!("{label}: ratios do not all exceed delta"));
            continue;
        }
        let rep = check_quasinilpotence_contrapositive(&trace, delta, &op).unwrap();
        if !rep.hypothesis || !rep.passed {
            failures.push(format!("{label}: library check hypothesis {} passed {}", rep.hypothesis, rep.passed));
        }
        let mut min_slack = f64::INFINITY;
        for n in 1..trace.records.len() {
            let pn = common::spectral_norm(&common::mat_pow(op.matrix(), n));
            let slack = pn - delta.powi(n as i32) / trace.lambda;
            min_slack = min_slack.min(slack);
            if slack < -1e-9 {
                failures.push(format!("{label}: ||Q^{n}|| = {pn:e} below delta^n"));
            }
        }
        summary.push(format!("{label} delta={delta:.2e} min slack {min_slack:.2e}"));
    }
    Outcome::new(&failures, summary.join(", "))
}

fn projection_residual(basis: &DMatrix<f64>, a: &DMatrix<f64>) -> f64 {
    let qb = basis.clone().qr().q();
    (0..basis.ncols())
        .map(|j| {
            let ab = a * basis.column(j);
            (&ab - &qb * qb.tr_mul(&ab)).norm() / ab.norm().max(1e-300)
        })
        .fold(0.0, f64::max)
}

fn criterion_6() -> Outcome {
    let mut failures = Vec::new();
    let n = 8;
    let s = gallery::jordan_shift(n, 0.0, NormKind::L2).unwrap();
    let mut e1 = DVector::zeros(n);
    e1[0] = 1.0;
    let mut jordan_worst: f64 = 0.0;
    match build_candidate(&s, &e1, n, 1e-10) {
        Ok(c) => {
            if c.dim != n - 1 {
                failures.push(format!("jordan dim {} != {}", c.dim, n - 1));
            }
            for coeffs in [vec![0.0, 1.0], vec![0.0, 0.0, 1.0], vec![1.0, 1.0, 2.0]] {
                let r = projection_residual(&c.basis, &poly(s.matrix(), &coeffs));
                jordan_worst = jordan_worst.max(r);
            }
            let ann = (0..c.dim).map(|j| c.basis.column(j).dot(&e1).abs()).fold(0.0, f64::max);
            jordan_worst = jordan_worst.max(ann);
            if jordan_worst > 1e-12 {
                failures.push(format!("jordan residual {jordan_worst:e} > 1e-12"));
            }
        }
        Err(e) => failures.push(format!("jordan: {e}")),
    }

    let report = match scenario::run(&volterra_scenario(), scenario::Command::Subspace, Path::new(".")) {
        Ok(r) => r,
        Err(e) => return Outcome::new(&[e.to_string()], "volterra subspace".into()),
    };
    let sub = report.subspace.as_ref().unwrap();
    let cand = &sub.candidate;
    let q = &report.operator.matrix;
    if cand.dim < 1 || cand.dim > cand.ambient_dim - 1 {
        failures.push(format!("volterra dim {} outside [1, {}]", cand.dim, cand.ambient_dim - 1));
    }
    let mut residuals = Vec::new();
    for entry in &sub.invariance {
        let r = projection_residual(&cand.basis, &poly(q, &entry.coefficients));
        residuals.push(r);
        if r > 1e-6 {
            failures.push(format!("volterra invariance {r:.2e} > 1e-6 for {:?}", entry.coefficients));
        }
    }
    let ann = sub.properness.annihilation;
    if !ann.is_finite() {
        failures.push("g-annihilation residual missing".into());
    }
    Outcome::new(
        &failures,
        format!(
            "jordan n={n} worst {jordan_worst:.1e}; volterra dim {} of {}, invariance {:?}, g-annihilation {ann:.2e}",
            cand.dim,
            cand.ambient_dim,
            residuals.iter().map(|r| format!("{r:.1e}")).collect::<Vec<_>>()
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut failures = Vec::new();
    let v = gallery::volterra(16, NormKind::L2).unwrap();
    let k = gallery::normalized(&v).unwrap();
    let setup = match gallery::corollary_setup(&k) {
        Ok(s) => s,
        Err(e) => return Outcome::new(&[e.to_string()], "corollary setup".into()),
    };
    let k_norm = common::spectral_norm(k.matrix());
    let kx0 = (k.matrix() * &setup.x0).norm();
    let bound = kx0 - setup.epsilon * k_norm;
    if setup.epsilon != COROLLARY_EPSILON || setup.epsilon != 1.0 / 3.0 {
        failures.push(format!("epsilon {} != 1/3", setup.epsilon));
    }
    if setup.threshold != 2.0 / 3.0 {
        failures.push(format!("threshold {} != 2/3", setup.threshold));
    }
    if (setup.x0.norm() - 1.0).abs() > 1e-12 {
        failures.push(format!("||x0|| = {}", setup.x0.norm()));
    }
    if kx0 < 2.0 / 3.0 {
        failures.push(format!("||K x0|| = {kx0} < 2/3"));
    }
    if bound < 1.0 / 3.0 - 1e-10 {
        failures.push(format!("bound {bound} < 1/3"));
    }
    Outcome::new(&failures, format!("||K|| = {k_norm:.12}, ||K x0|| = {kx0:.6}, certified bound {bound:.6}"))
}

fn criterion_8() -> Outcome {
    let mut failures = Vec::new();
    let dir = tempfile::TempDir::new().unwrap();
    let sc = dir.path().join("v.json");
    std::fs::write(&sc, serde_json::to_string(&volterra_scenario()).unwrap()).unwrap();
    let run = |args: &[&str]| {
        Command::new(env!("CARGO_BIN_EXE_minvec"))
            .args(args)
            .current_dir(dir.path())
            .env_remove("MINVEC_OUT_DIR")
            .output()
            .unwrap()
            .status
            .code()
    };
    for out in ["a", "b"] {
        if run(&["subspace", "--scenario", "v.json", "--out", out, "--emit-plot"]) != Some(0) {
            failures.push(format!("run {out} failed"));
        }
    }
    for f in ["trace.csv", "report.json", "basis.csv", "plots.svg"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap_or_default();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap_or_default();
        if a.is_empty() || a != b {
            failures.push(format!("{f} not byte-identical"));
        }
    }
    let fresh = run(&["verify", "--out", "a"]);
    if fresh != Some(0) {
        failures.push(format!("verify on fresh outputs exited {fresh:?}"));
    }
    let text = std::fs::read_to_string(dir.path().join("a/report.json")).unwrap();
    let mut report = Report::from_json(&text).unwrap();
    report.trace.as_mut().unwrap().alphas[0].records[0].alpha += 1.0;
    std::fs::write(dir.path().join("bad.json"), report.to_json().unwrap()).unwrap();
    let faulty = run(&["verify", "--report", "bad.json", "--trace", "a/trace.csv"]);
    if faulty != Some(4) {
        failures.push(format!("verify on corrupted alpha exited {faulty:?}"));
    }
    Outcome::new(&failures, format!("byte-identical reruns, verify fresh {fresh:?}, corrupted {faulty:?}"))
}

fn main() {
    let start = Instant::now();
    let instances = suite_instances();
    let mut suite = Vec::new();
    let mut setup_failures = Vec::new();
    for inst in instances {
        match MinimalProblem::new(&inst.op, inst.power, inst.x0.clone(), inst.eps).and_then(|p| solve(&p)) {
            Ok(sol) => suite.push((inst, sol)),
            Err(e) => setup_failures.push(format!("{}: {e}", inst.label)),
        }
    }
    let suite_time = start.elapsed();

    let c1 = {
        let o = criterion_1(&suite, suite_time);
        if setup_failures.is_empty() {
            o
        } else {
            let mut f = setup_failures.clone();
            f.push(o.detail);
            Outcome::new(&f, "solver errors".into())
        }
    };
    let results = [
        ("certificate suite", c1),
        ("oracle equivalence", criterion_2()),
        ("lambda-relaxation robustness", criterion_3(&suite)),
        ("volterra(16) pipeline", criterion_4()),
        ("contrapositive check", criterion_5()),
        ("subspace suite", criterion_6()),
        ("corollary setup", criterion_7()),
        ("determinism and verify", criterion_8()),
    ];
    let mut all = true;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} criterion {} ({name}): {}", if o.passed { "PASS" } else { "FAIL" }, i + 1, o.detail);
        all &= o.passed;
    }
    if !all {
        std::process::exit(1);
    }
}
