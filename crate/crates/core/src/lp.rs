//! Dense two-phase primal simplex with Bland's rule.
//!
//! Problems are stated as
//!
//! ```text
//! minimize    cᵀx
//! subject to  a_rᵀx (≤ | = | ≥) b_r     for every row r
//!             l ≤ x ≤ u                  (either side may be infinite)
//! ```
//!
//! and translated internally to `min c'ᵀx', A'x' = b', x' ≥ 0, b' ≥ 0`.
//! Dual multipliers use the Lagrangian `cᵀx − yᵀ(Ax − b)`, so `y_r ≤ 0` on
//! `≤` rows, `y_r ≥ 0` on `≥` rows and free on equalities.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// A program over `objective.len()` variables, all bounded to `[0, ∞)`.
    pub fn new(objective: Vec<f64>) -> Self {
        let k = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            lower: vec![0.0; k],
            upper: vec![f64::INFINITY; k],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coefficients: Vec<f64>, sense: RowSense, rhs: f64) -> usize {
        self.rows.push(coefficients);
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) {
        self.lower[var] = lower;
        self.upper[var] = upper;
    }

    pub fn set_free(&mut self, var: usize) {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY);
    }

    fn validate(&self) -> Result<()> {
        let k = self.num_vars();
        let m = self.num_rows();
        if self.senses.len() != m || self.rhs.len() != m {
            return Err(Error::Input(format!(
                "row data disagree: {m} rows, {} senses, {} right-hand sides",
                self.senses.len(),
                self.rhs.len()
            )));
        }
        if self.lower.len() != k || self.upper.len() != k {
            return Err(Error::Input("bound vectors must match the variable count".into()));
        }
        if let Some((r, row)) = self.rows.iter().enumerate().find(|(_, row)| row.len() != k) {
            return Err(Error::Input(format!("row {r} has {} coefficients, expected {k}", row.len())));
        }
        let finite = self.objective.iter().chain(self.rhs.iter()).chain(self.rows.iter().flatten());
        if finite.into_iter().any(|x| !x.is_finite()) {
            return Err(Error::Input("linear program data must be finite".into()));
        }
        for j in 0..k {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(Error::Input(format!("variable {j} has invalid bounds [{l}, {u}]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Optimality residuals measured on the original problem.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LpResiduals {
    pub primal: f64,
    pub dual: f64,
    pub complementarity: f64,
    pub gap: f64,
    /// `1 + max(|cᵀx|, ‖b‖∞, ‖c‖∞)`; residuals are meant to be read relative to it.
    pub scale: f64,
}

impl LpResiduals {
    pub fn max(&self) -> f64 {
        self.primal.max(self.dual).max(self.complementarity).max(self.gap)
    }

    pub fn within(&self, tol: f64) -> bool {
        self.max() <= tol * self.scale
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub residuals: LpResiduals,
    pub pivots: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, pivots: usize) -> Self {
        let objective = match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        };
        Self {
            status,
            x: Vec::new(),
            objective,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            residuals: LpResiduals::default(),
            pivots,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = lo + x'
    Shift { col: usize, lo: f64 },
    /// x = hi − x'
    Mirror { col: usize, hi: f64 },
    /// x = x⁺ − x⁻
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    a: DMatrix<f64>,
    b: Vec<f64>,
    c: Vec<f64>,
    offset: f64,
    maps: Vec<VarMap>,
    /// For each standard row: originating row (if any) and the factor mapping
    /// its multiplier back, `y_orig = factor · y_std`.
    row_origin: Vec<Option<(usize, f64)>>,
    /// Column `j` of `a` holds the original column times `col_scale[j]`, so
    /// the unscaled variable is `col_scale[j] · x_j`.
    col_scale: Vec<f64>,
    structural: usize,
}

fn standard_form(lp: &LinearProgram) -> StandardForm {
    let k = lp.num_vars();
    let mut maps = Vec::with_capacity(k);
    let mut ncols = 0;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..k {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let map = if lo.is_finite() {
            if hi.is_finite() {
                bound_rows.push((ncols, hi - lo));
            }
            VarMap::Shift { col: ncols, lo }
        } else if hi.is_finite() {
            VarMap::Mirror { col: ncols, hi }
        } else {
            ncols += 1;
            VarMap::Split { pos: ncols - 1, neg: ncols }
        };
        ncols += 1;
        maps.push(map);
    }
    let structural = ncols;

    // rows as (coefficients over structural columns, sense, rhs, origin)
    let mut rows: Vec<(Vec<f64>, RowSense, f64, Option<usize>)> = Vec::new();
    for (r, coeffs) in lp.rows.iter().enumerate() {
        let mut a = vec![0.0; structural];
        let mut rhs = lp.rhs[r];
        for (j, &v) in coeffs.iter().enumerate() {
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    a[col] += v;
                    rhs -= v * lo;
                }
                VarMap::Mirror { col, hi } => {
                    a[col] -= v;
                    rhs -= v * hi;
                }
                VarMap::Split { pos, neg } => {
                    a[pos] += v;
                    a[neg] -= v;
                }
            }
        }
        rows.push((a, lp.senses[r], rhs, Some(r)));
    }
    for (col, width) in bound_rows {
        let mut a = vec![0.0; structural];
        a[col] = 1.0;
        rows.push((a, RowSense::Le, width, None));
    }

    let mut c = vec![0.0; structural];
    let mut offset = 0.0;
    for (j, &cj) in lp.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shift { col, lo } => {
                c[col] += cj;
                offset += cj * lo;
            }
            VarMap::Mirror { col, hi } => {
                c[col] -= cj;
                offset += cj * hi;
            }
            VarMap::Split { pos, neg } => {
                c[pos] += cj;
                c[neg] -= cj;
            }
        }
    }

    let m = rows.len();
    let slacks = rows.iter().filter(|r| r.1 != RowSense::Eq).count();
    let n = structural + slacks;
    let mut a = DMatrix::zeros(m, n);
    let mut b = vec![0.0; m];
    let mut row_origin = Vec::with_capacity(m);
    let mut slack = structural;
    for (i, (coeffs, sense, rhs, origin)) in rows.into_iter().enumerate() {
        for (j, v) in coeffs.into_iter().enumerate() {
            a[(i, j)] = v;
        }
        match sense {
            RowSense::Le => {
                a[(i, slack)] = 1.0;
                slack += 1;
            }
            RowSense::Ge => {
                a[(i, slack)] = -1.0;
                slack += 1;
            }
            RowSense::Eq => {}
        }
        let mut factor = 1.0;
        if rhs < 0.0 {
            factor = -1.0;
        }
        for j in 0..n {
            a[(i, j)] *= factor;
        }
        b[i] = rhs * factor;
        row_origin.push(origin.map(|r| (r, factor)));
    }
    c.resize(n, 0.0);

    // Geometric equilibration: a few alternating passes that divide each row
    // and column by the square root of its max·min magnitude, then a final
    // row pass normalising the largest entry of each row to one.
    let mut col_scale = vec![1.0; n];
    let scale_row = |a: &mut DMatrix<f64>, b: &mut Vec<f64>, origin: &mut Vec<Option<(usize, f64)>>, i: usize, s: f64| {
        for j in 0..n {
            a[(i, j)] *= s;
        }
        b[i] *= s;
        if let Some((_, f)) = origin[i].as_mut() {
            *f *= s;
        }
    };
    let extremes = |it: &mut dyn Iterator<Item = f64>| {
        it.filter(|v| *v != 0.0).fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())))
    };
    for _ in 0..4 {
        for i in 0..m {
            let (lo, hi) = extremes(&mut a.row(i).iter().copied());
            if hi > 0.0 {
                scale_row(&mut a, &mut b, &mut row_origin, i, 1.0 / (lo * hi).sqrt());
            }
        }
        for j in 0..n {
            let (lo, hi) = extremes(&mut a.column(j).iter().copied());
            if hi > 0.0 {
                let s = 1.0 / (lo * hi).sqrt();
                a.column_mut(j).iter_mut().for_each(|v| *v *= s);
                c[j] *= s;
                col_scale[j] *= s;
            }
        }
    }
    for i in 0..m {
        let (_, hi) = extremes(&mut a.row(i).iter().copied());
        if hi > 0.0 {
            scale_row(&mut a, &mut b, &mut row_origin, i, 1.0 / hi);
        }
    }
    StandardForm { a, b, c, offset, maps, row_origin, col_scale, structural }
}

struct Tableau {
    t: DMatrix<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    pivots: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
}

impl Tableau {
    fn rhs_col(&self) -> usize {
        self.t.ncols() - 1
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let rhs = self.rhs_col();
        let p = self.t[(row, col)];
        for j in 0..=rhs {
            self.t[(row, j)] /= p;
        }
        for i in 0..self.t.nrows() {
            if i == row {
                continue;
            }
            let f = self.t[(i, col)];
            if f != 0.0 {
                for j in 0..=rhs {
                    let v = self.t[(row, j)];
                    self.t[(i, j)] -= f * v;
                }
            }
        }
        let f = self.cost[col];
        if f != 0.0 {
            for j in 0..=rhs {
                self.cost[j] -= f * self.t[(row, j)];
            }
        }
        self.basis[row] = col;
        self.pivots += 1;
    }

    /// Bland's rule: lowest-index improving column, lowest-index leaving
    /// variable among ratio ties.
    fn run(&mut self, allowed: usize, tol: &Tolerances) -> Result<PhaseOutcome> {
        let rhs = self.rhs_col();
        loop {
            let entering = (0..allowed).find(|&j| self.cost[j] < -tol.lp_pivot);
            let Some(e) = entering else {
                return Ok(PhaseOutcome::Optimal);
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.t.nrows() {
                let a = self.t[(i, e)];
                if a > tol.lp_pivot {
                    let ratio = self.t[(i, rhs)].max(0.0) / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            let tie = (ratio - lr).abs() <= 1e-12 * (1.0 + lr.abs());
                            if (tie && self.basis[i] < self.basis[li]) || (!tie && ratio < lr) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leave else {
                return Ok(PhaseOutcome::Unbounded);
            };
            if self.pivots >= tol.lp_pivot_cap {
                return Err(Error::Stalled(self.pivots));
            }
            self.pivot(row, e);
        }
    }
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    solve_lp_with(lp, &Tolerances::default())
}

pub fn solve_lp_with(lp: &LinearProgram, tol: &Tolerances) -> Result<LpSolution> {
    lp.validate()?;
    let sf = standard_form(lp);
    let m = sf.a.nrows();
    let n = sf.a.ncols();
    let total = n + m;

    // Phase 1 tableau [A | I | b] with the artificial identity as basis.
    let mut t = DMatrix::zeros(m, total + 1);
    t.view_mut((0, 0), (m, n)).copy_from(&sf.a);
    for i in 0..m {
        t[(i, n + i)] = 1.0;
        t[(i, total)] = sf.b[i];
    }
    let mut cost = vec![0.0; total + 1];
    for j in (0..n).chain(std::iter::once(total)) {
        cost[j] = -(0..m).map(|i| t[(i, j)]).sum::<f64>();
    }
    let mut tab = Tableau { t, cost, basis: (n..total).collect(), pivots: 0 };
    tab.run(n, tol)?;

    let bmax = sf.b.iter().fold(1.0_f64, |a, &x| a.max(x));
    let infeasibility: f64 = (0..m).filter(|&i| tab.basis[i] >= n).map(|i| tab.t[(i, total)]).sum();
    if infeasibility > tol.lp_feasibility * bmax {
        return Ok(LpSolution::without_point(LpStatus::Infeasible, tab.pivots));
    }
    // Drive zero-level artificials out where the row allows it; rows that stay
    // are redundant and never change value again.
    for i in 0..m {
        if tab.basis[i] >= n {
            if let Some(j) = (0..n).find(|&j| tab.t[(i, j)].abs() > tol.lp_pivot) {
                tab.pivot(i, j);
            }
        }
    }

    // Phase 2 costs.
    let mut cost = vec![0.0; total + 1];
    cost[..n].copy_from_slice(&sf.c);
    for i in 0..m {
        let cb = if tab.basis[i] < n { sf.c[tab.basis[i]] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=total {
                cost[j] -= cb * tab.t[(i, j)];
            }
        }
    }
    tab.cost = cost;
    if let PhaseOutcome::Unbounded = tab.run(n, tol)? {
        return Ok(LpSolution::without_point(LpStatus::Unbounded, tab.pivots));
    }

    // Basis matrix of the final tableau; primal values and multipliers are
    // recomputed from it rather than read off the updated tableau.
    let mut basis_matrix = DMatrix::zeros(m, m);
    let mut cb = DVector::zeros(m);
    for (i, &col) in tab.basis.iter().enumerate() {
        if col < n {
            basis_matrix.set_column(i, &sf.a.column(col));
            cb[i] = sf.c[col];
        } else {
            basis_matrix[(col - n, i)] = 1.0;
        }
    }
    let lu = basis_matrix.clone().lu();
    let xb = if m == 0 { Some(DVector::zeros(0)) } else { lu.solve(&DVector::from_column_slice(&sf.b)) };
    let mut xs = vec![0.0; n];
    for i in 0..m {
        if tab.basis[i] < n {
            let v = xb.as_ref().map_or(tab.t[(i, total)], |xb| xb[i]);
            xs[tab.basis[i]] = v.max(0.0);
        }
    }
    let objective = sf.offset + (0..n).map(|j| sf.c[j] * xs[j]).sum::<f64>();
    for (x, s) in xs.iter_mut().zip(&sf.col_scale) {
        *x *= s;
    }
    let x: Vec<f64> = sf
        .maps
        .iter()
        .map(|map| match *map {
            VarMap::Shift { col, lo } => lo + xs[col],
            VarMap::Mirror { col, hi } => hi - xs[col],
            VarMap::Split { pos, neg } => xs[pos] - xs[neg],
        })
        .collect();
    debug_assert!(sf.structural <= n);

    // Duals from Bᵀy = c_B on the scaled standard form.
    let y_std = if m == 0 {
        DVector::zeros(0)
    } else {
        basis_matrix
            .transpose()
            .lu()
            .solve(&cb)
            .ok_or_else(|| Error::Solver("singular basis while recovering duals".into()))?
    };
    let mut duals = vec![0.0; lp.num_rows()];
    for (i, origin) in sf.row_origin.iter().enumerate() {
        if let Some((r, factor)) = origin {
            duals[*r] = factor * y_std[i];
        }
    }

    let reduced_costs: Vec<f64> = (0..lp.num_vars())
        .map(|j| lp.objective[j] - (0..lp.num_rows()).map(|r| lp.rows[r][j] * duals[r]).sum::<f64>())
        .collect();
    let residuals = residuals(lp, &x, &duals, &reduced_costs, tol);
    Ok(LpSolution { status: LpStatus::Optimal, x, objective, duals, reduced_costs, residuals, pivots: tab.pivots })
}

fn residuals(lp: &LinearProgram, x: &[f64], y: &[f64], d: &[f64], tol: &Tolerances) -> LpResiduals {
    let mut primal: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut comp: f64 = 0.0;
    let mut dual_obj = 0.0;
    for r in 0..lp.num_rows() {
        let ax: f64 = lp.rows[r].iter().zip(x).map(|(a, x)| a * x).sum();
        let slack = ax - lp.rhs[r];
        let (viol, sign_viol) = match lp.senses[r] {
            RowSense::Le => (slack.max(0.0), y[r].max(0.0)),
            RowSense::Ge => ((-slack).max(0.0), (-y[r]).max(0.0)),
            RowSense::Eq => (slack.abs(), 0.0),
        };
        primal = primal.max(viol);
        dual = dual.max(sign_viol);
        comp = comp.max((y[r] * slack).abs());
        dual_obj += lp.rhs[r] * y[r];
    }
    for j in 0..lp.num_vars() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        primal = primal.max((lo - x[j]).max(0.0)).max((x[j] - hi).max(0.0));
        let dj = d[j];
        let small = dj.abs() <= tol.lp_pivot * (1.0 + lp.objective[j].abs());
        if dj > 0.0 {
            if lo.is_finite() {
                comp = comp.max(dj * (x[j] - lo));
                dual_obj += dj * lo;
            } else if !small {
                dual = dual.max(dj);
            }
        } else if dj < 0.0 {
            if hi.is_finite() {
                comp = comp.max(-dj * (hi - x[j]));
                dual_obj += dj * hi;
            } else if !small {
                dual = dual.max(-dj);
            }
        }
    }
    let obj: f64 = lp.objective.iter().zip(x).map(|(c, x)| c * x).sum();
    let bmax = lp.rhs.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let cmax = lp.objective.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    LpResiduals {
        primal,
        dual,
        complementarity: comp,
        gap: (obj - dual_obj).abs(),
        scale: 1.0 + obj.abs().max(bmax).max(cmax),
    }
}
