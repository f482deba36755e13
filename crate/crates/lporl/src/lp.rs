//! Self-contained dense linear programming.
//!
//! [`solve_lp`] runs a two-phase revised simplex with Bland's rule. Bland's
//! rule is deliberate: the programs compiled by the solvers are degenerate at
//! their optima (occupancies supported on a face), and anti-cycling matters
//! more than pivot counts at desk scale. Fixed input produces an identical
//! pivot sequence and solution every run.
//!
//! [`l1_epigraph`] appends the auxiliary variables and rows that realize
//! `||A w - b||_1` inside an LP, either budgeted (`sum t <= eps`) or weighted
//! into the objective.

use crate::linalg::{dot, Mat};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

impl Rel {
    fn symbol(self) -> &'static str {
        match self {
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
        }
    }
}

#[derive(Clone, Debug)]
struct RowSpec {
    coeffs: Vec<(usize, f64)>,
    rel: Rel,
    rhs: f64,
}

/// A linear program over variables with box bounds (infinities allowed).
#[derive(Clone, Debug)]
pub struct LinearProgram {
    sense: Sense,
    objective: Vec<f64>,
    rows: Vec<RowSpec>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    pub fn new(sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: Vec::new(),
            rows: Vec::new(),
            bounds: Vec::new(),
        }
    }

    /// Adds a variable with objective coefficient `obj` and bounds
    /// `[lower, upper]`; returns its index.
    pub fn add_var(&mut self, obj: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(obj);
        self.bounds.push((lower, upper));
        self.objective.len() - 1
    }

    /// Adds the constraint `sum coeffs[i].1 * x[coeffs[i].0]  rel  rhs`.
    pub fn add_row(&mut self, coeffs: &[(usize, f64)], rel: Rel, rhs: f64) {
        self.rows.push(RowSpec {
            coeffs: coeffs.to_vec(),
            rel,
            rhs,
        });
    }

    #[inline]
    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    #[inline]
    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    fn validate(&self) -> Result<()> {
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(Error::Invalid(format!("objective[{j}] is not finite")));
            }
        }
        for (j, &(l, u)) in self.bounds.iter().enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(Error::Invalid(format!(
                    "bounds of variable {j} contain NaN"
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.rhs.is_nan() {
                return Err(Error::Invalid(format!("row {i} rhs is NaN")));
            }
            for &(j, c) in &row.coeffs {
                if j >= self.num_vars() {
                    return Err(Error::Invalid(format!(
                        "row {i} references unknown variable {j}"
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::Invalid(format!(
                        "row {i} has non-finite coefficient"
                    )));
                }
            }
            if row.rhs.is_infinite() && row.rel == Rel::Eq {
                return Err(Error::Invalid(format!(
                    "row {i}: equality with infinite rhs"
                )));
            }
        }
        Ok(())
    }

    /// Plain-text dump (objective, rows, bounds) for cross-implementation
    /// diffing.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        out.push_str(match self.sense {
            Sense::Minimize => "minimize\n",
            Sense::Maximize => "maximize\n",
        });
        out.push_str("objective:");
        for c in &self.objective {
            out.push_str(&format!(" {c}"));
        }
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            let mut dense = vec![0.0; self.num_vars()];
            for &(j, c) in &row.coeffs {
                dense[j] += c;
            }
            out.push_str(&format!("row {i}:"));
            for c in &dense {
                out.push_str(&format!(" {c}"));
            }
            out.push_str(&format!(" {} {}\n", row.rel.symbol(), row.rhs));
        }
        for (j, &(l, u)) in self.bounds.iter().enumerate() {
            out.push_str(&format!("var {j}: [{l}, {u}]\n"));
        }
        out
    }

    /// Worst violation of rows and bounds at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0_f64;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
            let defect = match row.rel {
                Rel::Le => lhs - row.rhs,
                Rel::Ge => row.rhs - lhs,
                Rel::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(defect);
        }
        for (j, &(l, u)) in self.bounds.iter().enumerate() {
            if l.is_finite() {
                worst = worst.max(l - x[j]);
            }
            if u.is_finite() {
                worst = worst.max(x[j] - u);
            }
        }
        worst.max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// The pivot cap (50 * (rows + cols) of the standard form) was reached;
    /// distinct from infeasibility.
    IterationLimit,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    pub max_primal_residual: f64,
    pub iterations: usize,
}

/// Budget mode for [`l1_epigraph`].
#[derive(Clone, Copy, Debug)]
pub enum L1Budget {
    /// Constrain `sum_i t_i <= eps`; an infinite `eps` adds no budget row.
    SumLe(f64),
    /// Add `weight * t_i` to the objective instead of a hard budget.
    Weighted(f64),
}

/// Installs `t >= |A w - b|` through the usual pair of rows
/// `A_i w - t_i <= b_i` and `-A_i w - t_i <= -b_i`, where column `k` of `a`
/// acts on LP variable `cols[k]`. Returns the indices of the fresh `t`
/// variables. For any feasible point, `sum t >= ||A w - b||_1`, with equality
/// at the optimum of any objective nondecreasing in `sum t`.
pub fn l1_epigraph(
    lp: &mut LinearProgram,
    a: &Mat,
    cols: &[usize],
    offset: &[f64],
    budget: L1Budget,
) -> Vec<usize> {
    assert_eq!(a.cols(), cols.len(), "l1_epigraph: column map mismatch");
    assert_eq!(
        a.rows(),
        offset.len(),
        "l1_epigraph: offset length mismatch"
    );
    let t_obj = match budget {
        L1Budget::SumLe(_) => 0.0,
        L1Budget::Weighted(w) => w,
    };
    let t_ids: Vec<usize> = (0..a.rows())
        .map(|_| lp.add_var(t_obj, 0.0, f64::INFINITY))
        .collect();
    for i in 0..a.rows() {
        let mut plus: Vec<(usize, f64)> = Vec::with_capacity(cols.len() + 1);
        let mut minus: Vec<(usize, f64)> = Vec::with_capacity(cols.len() + 1);
        for (k, &var) in cols.iter().enumerate() {
            let c = a.get(i, k);
            if c != 0.0 {
                plus.push((var, c));
                minus.push((var, -c));
            }
        }
        plus.push((t_ids[i], -1.0));
        minus.push((t_ids[i], -1.0));
        lp.add_row(&plus, Rel::Le, offset[i]);
        lp.add_row(&minus, Rel::Le, -offset[i]);
    }
    if let L1Budget::SumLe(eps) = budget {
        if eps.is_finite() {
            let row: Vec<(usize, f64)> = t_ids.iter().map(|&t| (t, 1.0)).collect();
            lp.add_row(&row, Rel::Le, eps);
        }
    }
    t_ids
}

// How a standard-form column maps back to an original variable.
#[derive(Clone, Copy, Debug)]
enum ColMap {
    Shifted { var: usize, lower: f64 },
    Negated { var: usize, upper: f64 },
    SplitPos { var: usize },
    SplitNeg { var: usize },
    Slack,
}

struct StdForm {
    a: Mat,
    b: Vec<f64>,
    cost: Vec<f64>,
    col_map: Vec<ColMap>,
    /// Columns whose slack can serve as the initial basic variable per row;
    /// `usize::MAX` marks rows that need an artificial.
    row_basis_col: Vec<usize>,
}

fn build_standard_form(lp: &LinearProgram) -> Result<Option<StdForm>> {
    // Map each variable to nonnegative standard-form columns.
    let mut col_map: Vec<ColMap> = Vec::new();
    // var_cols[j] = (column index, companion column for split vars).
    let mut var_cols: Vec<(usize, Option<usize>)> = Vec::with_capacity(lp.num_vars());
    let mut bound_rows: Vec<RowSpec> = Vec::new();
    for (j, &(l, u)) in lp.bounds.iter().enumerate() {
        if l > u {
            return Ok(None); // empty box: trivially infeasible
        }
        if l.is_finite() {
            let col = col_map.len();
            col_map.push(ColMap::Shifted { var: j, lower: l });
            var_cols.push((col, None));
            if u.is_finite() {
                bound_rows.push(RowSpec {
                    coeffs: vec![(j, 1.0)],
                    rel: Rel::Le,
                    rhs: u,
                });
            }
        } else if u.is_finite() {
            let col = col_map.len();
            col_map.push(ColMap::Negated { var: j, upper: u });
            var_cols.push((col, None));
        } else {
            let pos = col_map.len();
            col_map.push(ColMap::SplitPos { var: j });
            col_map.push(ColMap::SplitNeg { var: j });
            var_cols.push((pos, Some(pos + 1)));
        }
    }
    let n_struct = col_map.len();

    // Transform rows into `row_coeffs * y (rel) rhs'` over standard columns.
    struct BuiltRow {
        dense: Vec<f64>,
        rel: Rel,
        rhs: f64,
    }
    let mut built: Vec<BuiltRow> = Vec::new();
    for row in lp.rows.iter().chain(bound_rows.iter()) {
        if row.rhs.is_infinite() {
            match (row.rel, row.rhs > 0.0) {
                (Rel::Le, true) | (Rel::Ge, false) => continue, // vacuous
                _ => return Ok(None),                           // unsatisfiable
            }
        }
        let mut dense = vec![0.0; n_struct];
        let mut rhs = row.rhs;
        for &(j, c) in &row.coeffs {
            let (col, companion) = var_cols[j];
            match col_map[col] {
                ColMap::Shifted { lower, .. } => {
                    dense[col] += c;
                    rhs -= c * lower;
                }
                ColMap::Negated { upper, .. } => {
                    dense[col] -= c;
                    rhs -= c * upper;
                }
                ColMap::SplitPos { .. } => {
                    dense[col] += c;
                    dense[companion.unwrap()] -= c;
                }
                _ => unreachable!(),
            }
        }
        built.push(BuiltRow {
            dense,
            rel: row.rel,
            rhs,
        });
    }

    // Objective over standard columns (constant offset is irrelevant: the
    // reported objective is recomputed from the extracted point).
    let internal_obj: Vec<f64> = match lp.sense {
        Sense::Minimize => lp.objective.clone(),
        Sense::Maximize => lp.objective.iter().map(|c| -c).collect(),
    };
    let mut cost = vec![0.0; n_struct];
    for (j, &(col, companion)) in var_cols.iter().enumerate() {
        let c = internal_obj[j];
        match col_map[col] {
            ColMap::Shifted { .. } => cost[col] += c,
            ColMap::Negated { .. } => cost[col] -= c,
            ColMap::SplitPos { .. } => {
                cost[col] += c;
                cost[companion.unwrap()] -= c;
            }
            _ => unreachable!(),
        }
    }

    // Append slacks, flip rows to nonnegative rhs, record basis candidates.
    let n_rows = built.len();
    let mut columns = n_struct;
    let mut slack_cols: Vec<Option<(usize, f64)>> = Vec::with_capacity(n_rows);
    for row in &built {
        match row.rel {
            Rel::Le => {
                slack_cols.push(Some((columns, 1.0)));
                columns += 1;
            }
            Rel::Ge => {
                slack_cols.push(Some((columns, -1.0)));
                columns += 1;
            }
            Rel::Eq => slack_cols.push(None),
        }
    }
    let mut a = Mat::zeros(n_rows, columns);
    let mut b = vec![0.0; n_rows];
    let mut row_basis_col = vec![usize::MAX; n_rows];
    for (i, row) in built.iter().enumerate() {
        let flip = if row.rhs < 0.0 { -1.0 } else { 1.0 };
        for (c, &v) in row.dense.iter().enumerate() {
            if v != 0.0 {
                a.set(i, c, flip * v);
            }
        }
        b[i] = flip * row.rhs;
        if let Some((col, sign)) = slack_cols[i] {
            a.set(i, col, flip * sign);
            if flip * sign > 0.0 {
                row_basis_col[i] = col;
            }
        }
    }
    let mut full_cost = cost;
    full_cost.resize(columns, 0.0);
    let mut full_map = col_map;
    full_map.resize(columns, ColMap::Slack);
    Ok(Some(StdForm {
        a,
        b,
        cost: full_cost,
        col_map: full_map,
        row_basis_col,
    }))
}

struct SimplexState {
    a: Mat,
    b: Vec<f64>,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Mat,
    x_b: Vec<f64>,
    iterations: usize,
    max_iterations: usize,
    pivots_since_refactor: usize,
}

enum RunOutcome {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl SimplexState {
    fn refactor(&mut self) -> Result<()> {
        let m = self.basis.len();
        let mut basis_mat = Mat::zeros(m, m);
        for (k, &col) in self.basis.iter().enumerate() {
            for r in 0..m {
                basis_mat.set(r, k, self.a.get(r, col));
            }
        }
        self.binv = basis_mat
            .inverse()
            .ok_or_else(|| Error::Singular("simplex basis".into()))?;
        self.x_b = self.binv.matvec(&self.b);
        self.pivots_since_refactor = 0;
        Ok(())
    }

    /// Runs Bland-rule simplex minimizing `cost` over columns where
    /// `allowed[j]` holds (entering candidates only).
    fn run(&mut self, cost: &[f64], allowed: &[bool], opt_tol: f64) -> Result<RunOutcome> {
        let m = self.basis.len();
        let n = self.a.cols();
        loop {
            if self.iterations >= self.max_iterations {
                return Ok(RunOutcome::IterationLimit);
            }
            // y = c_B^T Binv
            let c_b: Vec<f64> = self.basis.iter().map(|&j| cost[j]).collect();
            let y = self.binv.transpose_matvec(&c_b);
            // Bland: first eligible column by index.
            let mut entering = None;
            for j in 0..n {
                if self.in_basis[j] || !allowed[j] {
                    continue;
                }
                let mut rc = cost[j];
                for r in 0..m {
                    let aij = self.a.get(r, j);
                    if aij != 0.0 {
                        rc -= y[r] * aij;
                    }
                }
                if rc < -opt_tol {
                    entering = Some(j);
                    break;
                }
            }
            let entering = match entering {
                Some(j) => j,
                None => return Ok(RunOutcome::Optimal),
            };
            // Direction d = Binv * A_entering.
            let col: Vec<f64> = (0..m).map(|r| self.a.get(r, entering)).collect();
            let d = self.binv.matvec(&col);
            // Ratio test; ties by smallest leaving variable index (Bland).
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..m {
                if d[r] > 1e-9 {
                    let ratio = (self.x_b[r].max(0.0)) / d[r];
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || ((ratio - lratio).abs() <= 1e-12
                                    && self.basis[r] < self.basis[lr])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let (leave_row, step) = match leave {
                Some(l) => l,
                None => return Ok(RunOutcome::Unbounded),
            };
            self.pivot(entering, leave_row, &d, step);
            self.iterations += 1;
            if self.pivots_since_refactor >= 64 {
                self.refactor()?;
            }
        }
    }

    fn pivot(&mut self, entering: usize, leave_row: usize, d: &[f64], step: f64) {
        let m = self.basis.len();
        let leaving = self.basis[leave_row];
        self.in_basis[leaving] = false;
        self.in_basis[entering] = true;
        self.basis[leave_row] = entering;
        // Update basic values.
        for r in 0..m {
            self.x_b[r] -= d[r] * step;
            if self.x_b[r].abs() < 1e-14 {
                self.x_b[r] = 0.0;
            }
        }
        self.x_b[leave_row] = step;
        // Eta update of Binv.
        let pivot_val = d[leave_row];
        for c in 0..m {
            let v = self.binv.get(leave_row, c) / pivot_val;
            self.binv.set(leave_row, c, v);
        }
        for r in 0..m {
            if r == leave_row {
                continue;
            }
            let factor = d[r];
            if factor == 0.0 {
                continue;
            }
            for c in 0..m {
                let v = self.binv.get(r, c) - factor * self.binv.get(leave_row, c);
                self.binv.set(r, c, v);
            }
        }
        self.pivots_since_refactor += 1;
    }
}

/// Solves `lp` to `feas_tol` feasibility and `opt_tol` reduced-cost
/// optimality. Non-optimal outcomes (infeasible, unbounded, iteration cap) are
/// reported through [`LpSolution::status`]; `Err` is reserved for malformed
/// input.
pub fn solve_lp(lp: &LinearProgram, feas_tol: f64, opt_tol: f64) -> Result<LpSolution> {
    lp.validate()?;
    let std = match build_standard_form(lp)? {
        Some(s) => s,
        None => {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; lp.num_vars()],
                objective_value: f64::NAN,
                max_primal_residual: f64::INFINITY,
                iterations: 0,
            })
        }
    };
    let m = std.a.rows();
    let n = std.a.cols();
    let max_iterations = 50 * (m + n);

    // Assemble columns including artificials for rows without a usable slack.
    let num_artificial = std
        .row_basis_col
        .iter()
        .filter(|&&c| c == usize::MAX)
        .count();
    let total_cols = n + num_artificial;
    let mut a = Mat::zeros(m, total_cols);
    for r in 0..m {
        for c in 0..n {
            let v = std.a.get(r, c);
            if v != 0.0 {
                a.set(r, c, v);
            }
        }
    }
    let mut basis = Vec::with_capacity(m);
    let mut phase1_cost = vec![0.0; total_cols];
    let mut next_art = n;
    for (r, &cand) in std.row_basis_col.iter().enumerate() {
        if cand != usize::MAX {
            basis.push(cand);
        } else {
            a.set(r, next_art, 1.0);
            phase1_cost[next_art] = 1.0;
            basis.push(next_art);
            next_art += 1;
        }
    }
    let mut in_basis = vec![false; total_cols];
    for &j in &basis {
        in_basis[j] = true;
    }
    let mut state = SimplexState {
        a,
        b: std.b.clone(),
        basis,
        in_basis,
        binv: Mat::identity(m),
        x_b: vec![0.0; m],
        iterations: 0,
        max_iterations,
        pivots_since_refactor: 0,
    };
    state.refactor()?;

    let is_artificial = |j: usize| j >= n;
    let finish = |state: &SimplexState, status: LpStatus| -> LpSolution {
        let x = extract_point(lp, &std, state, n);
        let objective_value = match status {
            LpStatus::Optimal | LpStatus::IterationLimit => dot(&lp.objective, &x),
            LpStatus::Unbounded => match lp.sense {
                Sense::Minimize => f64::NEG_INFINITY,
                Sense::Maximize => f64::INFINITY,
            },
            LpStatus::Infeasible => f64::NAN,
        };
        LpSolution {
            status,
            objective_value,
            max_primal_residual: lp.primal_residual(&x),
            iterations: state.iterations,
            x,
        }
    };

    // Phase 1: drive out infeasibility if any artificial is in play.
    if num_artificial > 0 {
        let allowed: Vec<bool> = (0..total_cols).map(|_| true).collect();
        match state.run(&phase1_cost, &allowed, opt_tol.min(1e-10))? {
            RunOutcome::IterationLimit => return Ok(finish(&state, LpStatus::IterationLimit)),
            RunOutcome::Unbounded => {
                return Err(Error::Singular("phase-1 objective unbounded".into()))
            }
            RunOutcome::Optimal => {}
        }
        let infeasibility: f64 = state
            .basis
            .iter()
            .zip(&state.x_b)
            .filter(|(&j, _)| is_artificial(j))
            .map(|(_, &v)| v.max(0.0))
            .sum();
        let b_scale = 1.0 + crate::linalg::l1_norm(&std.b);
        if infeasibility > feas_tol * b_scale {
            return Ok(finish(&state, LpStatus::Infeasible));
        }
        // Degenerate pivots to expel zero-level artificials from the basis.
        // Rows where every original column has a zero tableau entry are
        // redundant; their artificials stay pinned at zero and are harmless.
        for r in 0..m {
            if !is_artificial(state.basis[r]) {
                continue;
            }
            for j in 0..n {
                if state.in_basis[j] {
                    continue;
                }
                let col: Vec<f64> = (0..m).map(|i| state.a.get(i, j)).collect();
                let d = state.binv.matvec(&col);
                if d[r].abs() > 1e-7 {
                    state.pivot(j, r, &d, 0.0);
                    break;
                }
            }
        }
    }

    // Phase 2 with artificials barred from entering.
    let mut phase2_cost = std.cost.clone();
    phase2_cost.resize(total_cols, 0.0);
    let allowed: Vec<bool> = (0..total_cols).map(|j| !is_artificial(j)).collect();
    let outcome = state.run(&phase2_cost, &allowed, opt_tol)?;
    let status = match outcome {
        RunOutcome::Optimal => LpStatus::Optimal,
        RunOutcome::Unbounded => LpStatus::Unbounded,
        RunOutcome::IterationLimit => LpStatus::IterationLimit,
    };
    Ok(finish(&state, status))
}

fn extract_point(lp: &LinearProgram, std: &StdForm, state: &SimplexState, n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    for (r, &j) in state.basis.iter().enumerate() {
        if j < n {
            y[j] = state.x_b[r].max(0.0);
        }
    }
    let mut x = vec![0.0; lp.num_vars()];
    for (col, map) in std.col_map.iter().enumerate() {
        match *map {
            ColMap::Shifted { var, lower } => x[var] = lower + y[col],
            ColMap::Negated { var, upper } => x[var] = upper - y[col],
            ColMap::SplitPos { var } => x[var] += y[col],
            ColMap::SplitNeg { var } => x[var] -= y[col],
            ColMap::Slack => {}
        }
    }
    x
}
