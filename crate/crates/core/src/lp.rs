//! Dense two-phase simplex with bounded variables, and the dwell-time LP.
//!
//! The solver works on a full tableau `B⁻¹A`. Nonbasic variables sit at
//! their lower or upper bound; pricing is Dantzig's largest reduced cost
//! and switches to Bland's rule after a long run of degenerate pivots.
//! Rows whose constraint already has a usable unit column (a slack, or a
//! structural column appearing in no other row) start with it in the basis,
//! so Phase 1 is needed only for the remaining rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radiometry::IrradianceMatrix;

/// Primal feasibility slack allowed by the ratio test.
/// Refactor-and-reoptimize rounds after each phase.
const POLISH_ROUNDS: usize = 6;
const FEAS_TOL: f64 = 1e-9;
pub const PIVOT_TOL: f64 = 1e-9;
const BLAND_AFTER: usize = 1000;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("invalid dosing problem: {0}")]
    InvalidProblem(String),
    #[error("simplex failed: {0}")]
    Numeric(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Ge,
    Le,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// `min c·x` subject to the rows and `lower <= x <= upper`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    /// `f64::INFINITY` when unbounded above.
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals in the original row orientation: `>= 0` on `Ge` rows,
    /// `<= 0` on `Le` rows (minimization).
    pub duals: Vec<f64>,
    pub iterations: usize,
    pub diagnostics: Option<String>,
}

/// Strong-duality evidence for an optimal solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// Largest absolute row or bound violation of the primal point.
    pub primal_infeasibility: f64,
    /// Largest violation of the dual sign conditions.
    pub dual_infeasibility: f64,
}

impl Certificate {
    pub fn gap(&self) -> f64 {
        (self.primal_objective - self.dual_objective).abs()
    }

    /// Relative gap and dual infeasibility within `tol` (scaled by
    /// `1 + |objective|`), primal infeasibility within `primal_tol`.
    pub fn holds(&self, tol: f64, primal_tol: f64) -> bool {
        let scale = 1.0 + self.primal_objective.abs();
        self.gap() <= tol * scale && self.dual_infeasibility <= tol * scale && self.primal_infeasibility <= primal_tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    pub max_iterations: usize,
    /// Rebuild `B⁻¹A` from the original rows every this many pivots; 0
    /// refactors only at the end of each phase.
    pub refactor_every: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iterations: 1_000_000, refactor_every: 0 }
    }
}

impl LinearProgram {
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        LinearProgram { c, rows: Vec::new(), lower: vec![0.0; n], upper: vec![f64::INFINITY; n] }
    }

    pub fn n_vars(&self) -> usize {
        self.c.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Dimension(format!("{} costs but {} / {} bounds", n, self.lower.len(), self.upper.len())));
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite("objective".into()));
        }
        if self.lower.iter().any(|v| !v.is_finite()) || self.upper.iter().any(|v| v.is_nan()) {
            return Err(LpError::NonFinite("bounds".into()));
        }
        for (i, r) in self.rows.iter().enumerate() {
            if !r.rhs.is_finite() {
                return Err(LpError::NonFinite(format!("rhs of row {i}")));
            }
            for &(j, a) in &r.coeffs {
                if j >= n {
                    return Err(LpError::Dimension(format!("row {i} references variable {j} of {n}")));
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite(format!("row {i}")));
                }
            }
        }
        Ok(())
    }

    pub fn row_activity(&self, i: usize, x: &[f64]) -> f64 {
        self.rows[i].coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, r) in self.rows.iter().enumerate() {
            let act = self.row_activity(i, x);
            let v = match r.sense {
                Sense::Ge => r.rhs - act,
                Sense::Le => act - r.rhs,
                Sense::Eq => (act - r.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for j in 0..self.n_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        worst
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Check an optimal solution against the Lagrangian dual built from
    /// its row duals.
    pub fn certify(&self, sol: &LpSolution) -> Certificate {
        let n = self.n_vars();
        let mut d = self.c.clone();
        let mut dual_inf: f64 = 0.0;
        let mut dual_obj = 0.0;
        for (i, r) in self.rows.iter().enumerate() {
            let y = sol.duals[i];
            match r.sense {
                Sense::Ge => dual_inf = dual_inf.max(-y),
                Sense::Le => dual_inf = dual_inf.max(y),
                Sense::Eq => {}
            }
            dual_obj += y * r.rhs;
            for &(j, a) in &r.coeffs {
                d[j] -= y * a;
            }
        }
        for j in 0..n {
            if d[j] >= 0.0 {
                dual_obj += d[j] * self.lower[j];
            } else if self.upper[j].is_finite() {
                dual_obj += d[j] * self.upper[j];
            } else {
                dual_inf = dual_inf.max(-d[j]);
            }
        }
        Certificate {
            primal_objective: self.objective(&sol.x),
            dual_objective: dual_obj,
            primal_infeasibility: self.max_violation(&sol.x),
            dual_infeasibility: dual_inf,
        }
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(&SimplexOptions::default())
    }

    pub fn solve_with(&self, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
        self.validate()?;
        let sol = Tableau::build(self).run(self, opts);
        if sol.status == LpStatus::Numerical && opts.refactor_every == 0 {
            let retry = SimplexOptions { refactor_every: self.rows.len().max(50), ..*opts };
            let mut again = Tableau::build(self).run(self, &retry);
            again.iterations += sol.iterations;
            return Ok(again);
        }
        Ok(sol)
    }

    /// Text export in the CPLEX LP format.
    pub fn to_lp_format(&self, names: &[String], integer: &[usize]) -> String {
        use std::fmt::Write as _;
        let name = |j: usize| names.get(j).cloned().unwrap_or_else(|| format!("x{j}"));
        let term = |out: &mut String, a: f64, j: usize, first: bool| {
            if a < 0.0 {
                let _ = write!(out, " - {} {}", -a, name(j));
            } else if first {
                let _ = write!(out, " {} {}", a, name(j));
            } else {
                let _ = write!(out, " + {} {}", a, name(j));
            }
        };
        let mut out = String::from("Minimize\n obj:");
        let mut first = true;
        for (j, &c) in self.c.iter().enumerate() {
            if c != 0.0 {
                term(&mut out, c, j, first);
                first = false;
            }
        }
        if first {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = write!(out, " c{i}:");
            for (k, &(j, a)) in r.coeffs.iter().enumerate() {
                term(&mut out, a, j, k == 0);
            }
            if r.coeffs.is_empty() {
                let _ = write!(out, " 0 {}", name(0));
            }
            let op = match r.sense {
                Sense::Ge => ">=",
                Sense::Le => "<=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", r.rhs);
        }
        out.push_str("Bounds\n");
        for j in 0..self.n_vars() {
            if self.upper[j].is_finite() {
                let _ = writeln!(out, " {} <= {} <= {}", self.lower[j], name(j), self.upper[j]);
            } else {
                let _ = writeln!(out, " {} >= {}", name(j), self.lower[j]);
            }
        }
        if !integer.is_empty() {
            out.push_str("General\n");
            for &j in integer {
                let _ = writeln!(out, " {}", name(j));
            }
        }
        out.push_str("End\n");
        out
    }
}

/// `min c·x` s.t. `A_ge x >= b_ge`, `A_le x <= b_le`, `x >= lower`.
pub fn solve_lp(
    c: &[f64],
    a_ge: &[Vec<f64>],
    b_ge: &[f64],
    a_le: &[Vec<f64>],
    b_le: &[f64],
    lower: &[f64],
) -> Result<LpSolution, LpError> {
    let n = c.len();
    if a_ge.len() != b_ge.len() || a_le.len() != b_le.len() {
        return Err(LpError::Dimension("row count differs from rhs length".into()));
    }
    if lower.len() != n {
        return Err(LpError::Dimension(format!("{} lower bounds for {} variables", lower.len(), n)));
    }
    let mut lp = LinearProgram::new(c.to_vec());
    lp.lower = lower.to_vec();
    for (rows, rhs, sense) in [(a_ge, b_ge, Sense::Ge), (a_le, b_le, Sense::Le)] {
        for (r, &b) in rows.iter().zip(rhs) {
            if r.len() != n {
                return Err(LpError::Dimension(format!("row of length {} for {} variables", r.len(), n)));
            }
            let coeffs = r.iter().enumerate().filter(|(_, a)| **a != 0.0).map(|(j, &a)| (j, a)).collect();
            lp.add_row(coeffs, sense, b);
        }
    }
    lp.solve()
}

struct Tableau {
    m: usize,
    width: usize,
    n_struct: usize,
    /// Row-major `m x width`, holding `B⁻¹A` of the normalized system.
    t: Vec<f64>,
    /// Current values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    at_upper: Vec<bool>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    artificial: Vec<bool>,
    /// Column initially basic in each row, and the row multiplier
    /// `sign / scale` applied to the original row.
    unit_col: Vec<usize>,
    row_mult: Vec<f64>,
    iterations: usize,
    /// Tableau and right-hand side as built, for refactorization.
    t0: Vec<f64>,
    beta0: Vec<f64>,
    since_refactor: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Limit,
    Singular,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.n_vars();
        let m = lp.rows.len();
        let mut shifted_rhs: Vec<f64> = Vec::with_capacity(m);
        for (i, r) in lp.rows.iter().enumerate() {
            shifted_rhs.push(r.rhs - lp.row_activity(i, &lp.lower));
        }
        let mut col_count = vec![0usize; n];
        for r in &lp.rows {
            for &(j, a) in &r.coeffs {
                if a != 0.0 {
                    col_count[j] += 1;
                }
            }
        }
        let n_slack = lp.rows.iter().filter(|r| r.sense != Sense::Eq).count();
        // dense normalized rows over structural + slack columns
        let mut dense: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut slack_of = vec![usize::MAX; m];
        let mut next_slack = n;
        for (i, r) in lp.rows.iter().enumerate() {
            let mut row = vec![0.0; n + n_slack];
            for &(j, a) in &r.coeffs {
                row[j] += a;
            }
            match r.sense {
                Sense::Ge => {
                    row[next_slack] = -1.0;
                    slack_of[i] = next_slack;
                    next_slack += 1;
                }
                Sense::Le => {
                    row[next_slack] = 1.0;
                    slack_of[i] = next_slack;
                    next_slack += 1;
                }
                Sense::Eq => {}
            }
            dense.push(row);
        }
        let mut upper: Vec<f64> = (0..n).map(|j| lp.upper[j] - lp.lower[j]).collect();
        upper.extend(std::iter::repeat_n(f64::INFINITY, n_slack));
        let mut sign = vec![1.0; m];
        for i in 0..m {
            if shifted_rhs[i] < 0.0 {
                sign[i] = -1.0;
                shifted_rhs[i] = -shifted_rhs[i];
                dense[i].iter_mut().for_each(|v| *v = -*v);
            }
        }
        // crash basis
        let mut unit_col = vec![usize::MAX; m];
        let mut scale = vec![1.0; m];
        let mut taken = vec![false; n + n_slack];
        for i in 0..m {
            let s = slack_of[i];
            if s != usize::MAX && dense[i][s] > 0.0 {
                unit_col[i] = s;
                taken[s] = true;
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for &(j, _) in &lp.rows[i].coeffs {
                let a = dense[i][j];
                if taken[j] || col_count[j] != 1 || a <= PIVOT_TOL {
                    continue;
                }
                if shifted_rhs[i] / a > upper[j] {
                    continue;
                }
                // cheapest per unit of row activity
                let price = lp.c[j] / a;
                if best.is_none_or(|(_, p)| price < p) {
                    best = Some((j, price));
                }
            }
            if let Some((j, _)) = best {
                unit_col[i] = j;
                scale[i] = dense[i][j];
                taken[j] = true;
            }
        }
        let n_art = unit_col.iter().filter(|&&c| c == usize::MAX).count();
        let width = n + n_slack + n_art;
        let mut t = vec![0.0; m * width];
        let mut artificial = vec![false; width];
        let mut next_art = n + n_slack;
        upper.extend(std::iter::repeat_n(f64::INFINITY, n_art));
        for i in 0..m {
            if unit_col[i] == usize::MAX {
                unit_col[i] = next_art;
                artificial[next_art] = true;
                next_art += 1;
            }
            let inv = 1.0 / scale[i];
            let row = &mut t[i * width..(i + 1) * width];
            for (j, v) in dense[i].iter().enumerate() {
                row[j] = v * inv;
            }
            row[unit_col[i]] = 1.0;
            shifted_rhs[i] *= inv;
        }
        let mut is_basic = vec![false; width];
        for &c in &unit_col {
            is_basic[c] = true;
        }
        let mut cost = vec![0.0; width];
        cost[..n].copy_from_slice(&lp.c);
        Tableau {
            m,
            width,
            n_struct: n,
            t0: t.clone(),
            beta0: shifted_rhs.clone(),
            since_refactor: 0,
            t,
            beta: shifted_rhs,
            basis: unit_col.clone(),
            is_basic,
            at_upper: vec![false; width],
            upper,
            cost,
            artificial,
            row_mult: (0..m).map(|i| sign[i] / scale[i]).collect(),
            unit_col,
            iterations: 0,
        }
    }

    /// Recompute `B⁻¹A` and the basic values from the original tableau by
    /// Gauss–Jordan elimination with partial pivoting. Returns the largest
    /// bound violation among the recomputed basic values, or `None` when the
    /// basis is numerically singular.
    fn refactor(&mut self) -> Option<f64> {
        let (m, w) = (self.m, self.width);
        let mut t = self.t0.clone();
        let mut b = self.beta0.clone();
        let mut row_of = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for k in 0..m {
            let q = self.basis[k];
            let r = (0..m).filter(|&r| !used[r]).max_by(|&a, &c| t[a * w + q].abs().total_cmp(&t[c * w + q].abs()))?;
            let piv = t[r * w + q];
            if piv.abs() <= 1e-12 {
                return None;
            }
            used[r] = true;
            row_of[k] = r;
            let inv = 1.0 / piv;
            t[r * w..(r + 1) * w].iter_mut().for_each(|v| *v *= inv);
            b[r] *= inv;
            let prow: Vec<f64> = t[r * w..(r + 1) * w].to_vec();
            let br = b[r];
            for i in 0..m {
                if i == r {
                    continue;
                }
                let f = t[i * w + q];
                if f != 0.0 {
                    for (v, p) in t[i * w..(i + 1) * w].iter_mut().zip(&prow) {
                        *v -= f * p;
                    }
                    t[i * w + q] = 0.0;
                    b[i] -= f * br;
                }
            }
        }
        let mut nt = vec![0.0; m * w];
        let mut nb = vec![0.0; m];
        for k in 0..m {
            let r = row_of[k];
            nt[k * w..(k + 1) * w].copy_from_slice(&t[r * w..(r + 1) * w]);
            nb[k] = b[r];
        }
        for j in 0..w {
            if !self.is_basic[j] && self.at_upper[j] && self.upper[j] != 0.0 {
                let u = self.upper[j];
                for k in 0..m {
                    nb[k] -= nt[k * w + j] * u;
                }
            }
        }
        let mut worst: f64 = 0.0;
        for k in 0..m {
            let v = nb[k];
            let u = self.upper[self.basis[k]];
            worst = worst.max(-v).max(v - u);
        }
        self.t = nt;
        self.beta = nb;
        self.since_refactor = 0;
        Some(worst)
    }

    fn clamp_beta(&mut self) {
        for k in 0..self.m {
            self.beta[k] = self.beta[k].clamp(0.0, self.upper[self.basis[k]]);
        }
    }

    /// Refactor after a phase and reoptimize until the refactored basis is
    /// stable. Fails when drift has left the basis infeasible.
    fn polish(&mut self, cost: &[f64], allow_artificial: bool, d: &mut Vec<f64>, opts: &SimplexOptions) -> Result<(), LpStatus> {
        let tol = 1e-7 * (1.0 + self.beta0.iter().fold(0.0f64, |a, b| a.max(b.abs())));
        let mut last = f64::INFINITY;
        for _ in 0..POLISH_ROUNDS {
            match self.refactor() {
                Some(worst) if worst <= tol => {}
                _ => return Err(LpStatus::Numerical),
            }
            self.clamp_beta();
            *d = self.reduced_costs(cost);
            let before = self.iterations;
            match self.optimize(cost, allow_artificial, d, opts) {
                Step::Optimal => {}
                Step::Limit => return Err(LpStatus::IterationLimit),
                Step::Unbounded => return Err(LpStatus::Unbounded),
                Step::Singular => return Err(LpStatus::Numerical),
            }
            let value = self.basic_objective(cost);
            // degenerate pivots can reappear after every refactorization;
            // stop once they no longer move the objective
            if self.iterations == before || (last - value).abs() <= 1e-9 * (1.0 + value.abs()) {
                if self.iterations == before {
                    return Ok(());
                }
                match self.refactor() {
                    Some(worst) if worst <= tol => {}
                    _ => return Err(LpStatus::Numerical),
                }
                self.clamp_beta();
                *d = self.reduced_costs(cost);
                let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
                return if self.dual_infeasibility(allow_artificial, d) <= 1e-7 * scale { Ok(()) } else { Err(LpStatus::Numerical) };
            }
            last = value;
        }
        Err(LpStatus::Numerical)
    }

    /// Largest improving reduced cost among the nonbasic columns.
    fn dual_infeasibility(&self, allow_artificial: bool, d: &[f64]) -> f64 {
        (0..self.width)
            .filter(|&j| !self.is_basic[j] && (allow_artificial || !self.artificial[j]) && self.upper[j] != 0.0)
            .map(|j| if self.at_upper[j] { d[j] } else { -d[j] })
            .fold(0.0f64, f64::max)
    }

    fn basic_objective(&self, cost: &[f64]) -> f64 {
        let basic: f64 = (0..self.m).map(|i| cost[self.basis[i]] * self.beta[i]).sum();
        let bounded: f64 = (0..self.width).filter(|&j| !self.is_basic[j] && self.at_upper[j]).map(|j| cost[j] * self.upper[j]).sum();
        basic + bounded
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.width..(i + 1) * self.width];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let w = self.width;
        let piv = self.t[r * w + q];
        let inv = 1.0 / piv;
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v *= inv;
        }
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        let prow: &[f64] = prow;
        for row in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = row[q];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow) {
                    *v -= f * p;
                }
                row[q] = 0.0;
            }
        }
        let f = d[q];
        if f != 0.0 {
            for (v, p) in d.iter_mut().zip(prow) {
                *v -= f * p;
            }
            d[q] = 0.0;
        }
        let leaving = self.basis[r];
        self.is_basic[leaving] = false;
        self.is_basic[q] = true;
        self.basis[r] = q;
    }

    /// Primal simplex on the given costs. Artificial columns may enter only
    /// when `allow_artificial` is set.
    fn optimize(&mut self, cost: &[f64], allow_artificial: bool, d: &mut Vec<f64>, opts: &SimplexOptions) -> Step {
        let tol = 1e-9 * cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
        let mut degenerate_run = 0usize;
        let mut bland = false;
        let w = self.width;
        loop {
            if self.iterations >= opts.max_iterations {
                return Step::Limit;
            }
            if opts.refactor_every > 0 && self.since_refactor >= opts.refactor_every {
                if self.refactor().is_none() {
                    return Step::Singular;
                }
                self.clamp_beta();
                *d = self.reduced_costs(cost);
            }
            // pricing
            let mut enter: Option<(usize, f64)> = None;
            for j in 0..w {
                if self.is_basic[j] || (!allow_artificial && self.artificial[j]) || self.upper[j] == 0.0 {
                    continue;
                }
                let dj = d[j];
                let gain = if self.at_upper[j] { dj } else { -dj };
                if gain > tol {
                    if bland {
                        enter = Some((j, gain));
                        break;
                    }
                    if enter.is_none_or(|(_, g)| gain > g) {
                        enter = Some((j, gain));
                    }
                }
            }
            let Some((q, _)) = enter else { return Step::Optimal };
            let dir = if self.at_upper[q] { -1.0 } else { 1.0 };
            // Harris ratio test; basic i moves by -dir * alpha_i * theta
            let mut theta_max = self.upper[q];
            for i in 0..self.m {
                let alpha = self.t[i * w + q] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let relaxed = if alpha > 0.0 {
                    (self.beta[i].max(0.0) + FEAS_TOL) / alpha
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.beta[i]).max(0.0) + FEAS_TOL) / -alpha
                } else {
                    continue;
                };
                theta_max = theta_max.min(relaxed);
            }
            let mut theta = self.upper[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut best_alpha = 0.0;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                let alpha = self.t[i * w + q] * dir;
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let (limit, to_upper) = if alpha > 0.0 {
                    (self.beta[i].max(0.0) / alpha, false)
                } else if self.upper[b].is_finite() {
                    ((self.upper[b] - self.beta[i]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                if limit > theta_max {
                    continue;
                }
                let better = match leave {
                    None => true,
                    Some((r, _)) => {
                        if bland {
                            limit < best_ratio - 1e-12 || (limit <= best_ratio + 1e-12 && b < self.basis[r])
                        } else {
                            alpha.abs() > best_alpha
                        }
                    }
                };
                if better {
                    leave = Some((i, to_upper));
                    best_alpha = alpha.abs();
                    best_ratio = limit;
                }
            }
            if leave.is_some() {
                if self.upper[q] <= best_ratio {
                    leave = None;
                } else {
                    theta = best_ratio;
                }
            }
            if theta.is_infinite() {
                return Step::Unbounded;
            }
            self.iterations += 1;
            self.since_refactor += 1;
            if theta <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run >= BLAND_AFTER {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            for i in 0..self.m {
                let a = self.t[i * w + q];
                if a != 0.0 {
                    self.beta[i] -= dir * a * theta;
                }
            }
            match leave {
                None => {
                    // bound flip
                    self.at_upper[q] = !self.at_upper[q];
                }
                Some((r, to_upper)) => {
                    let leaving = self.basis[r];
                    let entering_value = if self.at_upper[q] { self.upper[q] - theta } else { theta };
                    self.at_upper[leaving] = to_upper;
                    self.at_upper[q] = false;
                    self.pivot(r, q, d);
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn value_of(&self, j: usize, pos: &[usize]) -> f64 {
        if self.is_basic[j] {
            self.beta[pos[j]]
        } else if self.at_upper[j] {
            self.upper[j]
        } else {
            0.0
        }
    }

    fn run(mut self, lp: &LinearProgram, opts: &SimplexOptions) -> LpSolution {
        let m = self.m;
        let n = self.n_struct;
        let fail = |status: LpStatus, iterations: usize, msg: Option<String>| LpSolution {
            status,
            x: vec![f64::NAN; n],
            objective: f64::NAN,
            duals: vec![f64::NAN; m],
            iterations,
            diagnostics: msg,
        };
        if (0..n).any(|j| self.upper[j] < 0.0) {
            return fail(LpStatus::Infeasible, 0, Some("empty variable bound interval".into()));
        }
        if self.artificial.iter().any(|&a| a) {
            let phase1: Vec<f64> = (0..self.width).map(|j| if self.artificial[j] { 1.0 } else { 0.0 }).collect();
            let mut d = self.reduced_costs(&phase1);
            match self.optimize(&phase1, false, &mut d, opts) {
                Step::Optimal => {}
                Step::Limit => return fail(LpStatus::IterationLimit, self.iterations, None),
                Step::Unbounded => {
                    return fail(LpStatus::Numerical, self.iterations, Some("phase 1 reported unbounded".into()));
                }
                Step::Singular => return fail(LpStatus::Numerical, self.iterations, Some("singular basis".into())),
            }
            if let Err(status) = self.polish(&phase1, false, &mut d, opts) {
                return fail(status, self.iterations, Some("phase 1 refactorization".into()));
            }
            // residual per row, against that row's own right-hand side
            let infeas: f64 = (0..m).filter(|&i| self.artificial[self.basis[i]]).map(|i| self.beta[i]).sum();
            let worst = (0..m)
                .filter(|&i| self.artificial[self.basis[i]])
                .map(|i| {
                    let row = self.unit_col.iter().position(|&c| c == self.basis[i]).expect("artificial owns a row");
                    self.beta[i] / (1.0 + self.beta0[row].abs())
                })
                .fold(0.0f64, f64::max);
            if worst > 1e-8 {
                return fail(LpStatus::Infeasible, self.iterations, Some(format!("phase 1 residual {infeas:e}")));
            }
            // drive zero-level artificials out where possible
            for r in 0..m {
                if !self.artificial[self.basis[r]] {
                    continue;
                }
                let w = self.width;
                let q = (0..w)
                    .filter(|&j| !self.artificial[j] && !self.is_basic[j])
                    .max_by(|&a, &b| self.t[r * w + a].abs().total_cmp(&self.t[r * w + b].abs()));
                if let Some(q) = q {
                    if self.t[r * w + q].abs() > PIVOT_TOL {
                        let value = if self.at_upper[q] { self.upper[q] } else { 0.0 };
                        self.pivot(r, q, &mut d);
                        self.beta[r] = value;
                        self.at_upper[q] = false;
                    }
                }
            }
            for j in 0..self.width {
                if self.artificial[j] {
                    self.upper[j] = 0.0;
                }
            }
        }
        let cost = self.cost.clone();
        let mut d = self.reduced_costs(&cost);
        match self.optimize(&cost, false, &mut d, opts) {
            Step::Optimal => {}
            Step::Limit => return fail(LpStatus::IterationLimit, self.iterations, None),
            Step::Unbounded => return fail(LpStatus::Unbounded, self.iterations, None),
            Step::Singular => return fail(LpStatus::Numerical, self.iterations, Some("singular basis".into())),
        }
        if let Err(status) = self.polish(&cost, false, &mut d, opts) {
            let msg = (status == LpStatus::Numerical).then(|| "phase 2 refactorization".to_string());
            return fail(status, self.iterations, msg);
        }
        let mut pos = vec![usize::MAX; self.width];
        for (i, &b) in self.basis.iter().enumerate() {
            pos[b] = i;
        }
        let x: Vec<f64> = (0..n)
            .map(|j| (lp.lower[j] + self.value_of(j, &pos).clamp(0.0, self.upper[j])).min(lp.upper[j]))
            .collect();
        let duals: Vec<f64> = (0..m)
            .map(|i| {
                let j = self.unit_col[i];
                let scale_back = self.row_mult[i];
                (cost[j] - d[j]) * scale_back
            })
            .collect();
        let sol = LpSolution {
            status: LpStatus::Optimal,
            objective: lp.objective(&x),
            x,
            duals,
            iterations: self.iterations,
            diagnostics: None,
        };
        let viol = lp.max_violation(&sol.x);
        let scale = 1.0 + lp.rows.iter().fold(0.0f64, |a, r| a.max(r.rhs.abs()));
        if viol > 1e-6 * scale {
            return LpSolution {
                status: LpStatus::Numerical,
                diagnostics: Some(format!("primal violation {viol:e} after {} pivots", self.iterations)),
                ..sol
            };
        }
        sol
    }
}

/// Relaxed dosing LP: minimize `Σ t_k + Σ p_i σ_i` subject to
/// `Σ_k I_ik t_k + σ_i >= μ_i`, `Σ t_k <= T_max`, `t, σ >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosingProblem {
    pub irradiance: IrradianceMatrix,
    /// Required fluence per patch (J/m²).
    pub mu_min: Vec<f64>,
    pub penalties: Vec<f64>,
    /// Total dwell budget (s).
    pub t_max: f64,
}

pub const DEFAULT_T_MAX: f64 = 1e6;
pub const DEFAULT_PENALTY_FACTOR: f64 = 10.0;

impl DosingProblem {
    /// Uniform `μ_min`, penalties `10 ‖I‖_F`, `T_max = 10⁶ s`.
    pub fn new(irradiance: IrradianceMatrix, mu_min: f64) -> Self {
        let n = irradiance.n_patches;
        let p = DEFAULT_PENALTY_FACTOR * irradiance.frobenius_norm().max(1.0);
        DosingProblem { irradiance, mu_min: vec![mu_min; n], penalties: vec![p; n], t_max: DEFAULT_T_MAX }
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.irradiance.n_patches;
        if self.mu_min.len() != n || self.penalties.len() != n {
            return Err(LpError::Dimension(format!("{} patches but {} mu_min / {} penalties", n, self.mu_min.len(), self.penalties.len())));
        }
        if self.irradiance.values.len() != n * self.irradiance.n_vantages {
            return Err(LpError::Dimension("irradiance storage does not match its shape".into()));
        }
        if self.mu_min.iter().any(|&m| !(m > 0.0 && m.is_finite())) {
            return Err(LpError::InvalidProblem("mu_min must be positive".into()));
        }
        let fro = self.irradiance.frobenius_norm();
        if self.penalties.iter().any(|&p| !(p > fro && p.is_finite())) {
            return Err(LpError::InvalidProblem(format!("penalties must exceed ||I||_F = {fro}")));
        }
        if !(self.t_max > 0.0) {
            return Err(LpError::InvalidProblem("T_max must be positive".into()));
        }
        if self.irradiance.values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(LpError::InvalidProblem("irradiance must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Variables `t_0..t_K` then `σ_0..σ_N`; rows are the patches then the
    /// budget.
    pub fn to_linear_program(&self) -> LinearProgram {
        let (n, k) = (self.irradiance.n_patches, self.irradiance.n_vantages);
        let mut c = vec![1.0; k];
        c.extend_from_slice(&self.penalties);
        let mut lp = LinearProgram::new(c);
        for i in 0..n {
            let mut coeffs: Vec<(usize, f64)> =
                self.irradiance.row(i).iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(j, &v)| (j, v)).collect();
            coeffs.push((k + i, 1.0));
            lp.add_row(coeffs, Sense::Ge, self.mu_min[i]);
        }
        lp.add_row((0..k).map(|j| (j, 1.0)).collect(), Sense::Le, self.t_max);
        lp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DosingStatus {
    Optimal,
    /// Optimal, with the dwell budget binding.
    BudgetBound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DosingSolution {
    pub dwell: Vec<f64>,
    pub slack: Vec<f64>,
    pub objective: f64,
    pub status: DosingStatus,
    pub certificate: Certificate,
}

impl DosingSolution {
    pub fn total_dwell(&self) -> f64 {
        self.dwell.iter().sum()
    }

    /// Vantages with dwell above `tol` seconds.
    pub fn selected(&self, tol: f64) -> Vec<usize> {
        (0..self.dwell.len()).filter(|&k| self.dwell[k] > tol).collect()
    }
}

pub fn solve_dwell_times(problem: &DosingProblem) -> Result<DosingSolution, LpError> {
    problem.validate()?;
    let k = problem.irradiance.n_vantages;
    let lp = problem.to_linear_program();
    let sol = lp.solve()?;
    if sol.status != LpStatus::Optimal {
        return Err(LpError::Numeric(format!(
            "dosing LP ended {:?}{}",
            sol.status,
            sol.diagnostics.as_deref().map(|d| format!(": {d}")).unwrap_or_default()
        )));
    }
    let certificate = lp.certify(&sol);
    let dwell: Vec<f64> = sol.x[..k].to_vec();
    let total: f64 = dwell.iter().sum();
    let status = if total >= problem.t_max - 1e-6 { DosingStatus::BudgetBound } else { DosingStatus::Optimal };
    Ok(DosingSolution { slack: sol.x[k..].to_vec(), dwell, objective: sol.objective, status, certificate })
}
