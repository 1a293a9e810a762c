//! Dense two-phase primal simplex.
//!
//! Problems are stated as `min c'x` over rows `a'x (<=|>=|=) b` and
//! per-variable bounds, then rewritten into standard equality form with
//! non-negative variables. Pricing is Dantzig's rule until a run of
//! degenerate pivots is seen, after which Bland's rule takes over for the
//! rest of the phase, which rules out cycling.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("problem is infeasible")]
    Infeasible,
    #[error("objective is unbounded below")]
    Unbounded,
    #[error("iteration cap of {0} pivots reached")]
    IterationLimit(usize),
    #[error("non-finite coefficient in problem data")]
    NonFinite,
    #[error("malformed problem: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpRow {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Minimize `objective . x` subject to the rows and `lower <= x <= upper`.
/// Bounds may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub rows: Vec<LpRow>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LpProblem {
    /// `num_vars` variables, zero objective, bounds [0, inf).
    pub fn new(num_vars: usize) -> Self {
        LpProblem {
            objective: vec![0.0; num_vars],
            rows: Vec::new(),
            lower: vec![0.0; num_vars],
            upper: vec![f64::INFINITY; num_vars],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(LpRow { coeffs, sense, rhs });
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed("bound vectors do not match variable count".into()));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(LpError::NonFinite);
        }
        for j in 0..n {
            if self.lower[j].is_nan()
                || self.upper[j].is_nan()
                || self.lower[j] == f64::INFINITY
                || self.upper[j] == f64::NEG_INFINITY
            {
                return Err(LpError::NonFinite);
            }
            if self.lower[j] > self.upper[j] {
                return Err(LpError::Infeasible);
            }
        }
        for row in &self.rows {
            if !row.rhs.is_finite() {
                return Err(LpError::NonFinite);
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::Malformed(format!("row references variable {j} of {n}")));
                }
                if !a.is_finite() {
                    return Err(LpError::NonFinite);
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values; empty unless optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Whether Bland's rule had to take over in either phase.
    pub used_bland: bool,
}

impl LpSolution {
    pub fn into_optimal(self) -> Result<LpSolution, LpError> {
        match self.status {
            LpStatus::Optimal => Ok(self),
            LpStatus::Infeasible => Err(LpError::Infeasible),
            LpStatus::Unbounded => Err(LpError::Unbounded),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpOptions {
    pub max_iterations: usize,
    /// Consecutive degenerate pivots tolerated before switching to Bland.
    pub degenerate_run: usize,
    pub pivot_tol: f64,
    pub cost_tol: f64,
    pub feas_tol: f64,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { max_iterations: 1_000_000, degenerate_run: 50, pivot_tol: 1e-9, cost_tol: 1e-10, feas_tol: 1e-8 }
    }
}

/// How an original variable is recovered from standard-form columns.
#[derive(Clone, Copy, Debug)]
enum VarMap {
    /// x = offset + col
    Shifted { col: usize, offset: f64 },
    /// x = offset - col
    Mirrored { col: usize, offset: f64 },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

struct Tableau {
    m: usize,
    cols: usize,
    /// Row-major m x cols.
    a: Vec<f64>,
    b: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.a[i * self.cols..(i + 1) * self.cols]
    }

    fn pivot(&mut self, r: usize, j: usize, cost: &mut [f64], obj: &mut f64, nz: &mut Vec<usize>) {
        let cols = self.cols;
        let piv = self.a[r * cols + j];
        {
            let row = &mut self.a[r * cols..(r + 1) * cols];
            nz.clear();
            for (k, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v /= piv;
                    nz.push(k);
                }
            }
            row[j] = 1.0;
        }
        self.b[r] /= piv;
        let br = self.b[r];
        let (before, rest) = self.a.split_at_mut(r * cols);
        let (prow, after) = rest.split_at_mut(cols);
        let update = |row: &mut [f64], b: &mut f64| {
            let f = row[j];
            if f != 0.0 {
                for &k in nz.iter() {
                    row[k] -= f * prow[k];
                }
                row[j] = 0.0;
                *b -= f * br;
                if b.abs() < 1e-13 {
                    *b = 0.0;
                }
            }
        };
        for (i, row) in before.chunks_mut(cols).enumerate() {
            update(row, &mut self.b[i]);
        }
        for (i, row) in after.chunks_mut(cols).enumerate() {
            update(row, &mut self.b[r + 1 + i]);
        }
        let f = cost[j];
        if f != 0.0 {
            for &k in nz.iter() {
                cost[k] -= f * prow[k];
            }
            cost[j] = 0.0;
            *obj -= f * br;
        }
        self.basis[r] = j;
    }
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

/// Runs simplex iterations on `t` for the reduced-cost row `cost` (kept in
/// canonical form with respect to the basis). Columns with `allowed[j]`
/// false never enter.
fn run_phase(
    t: &mut Tableau,
    cost: &mut [f64],
    obj: &mut f64,
    allowed: &[bool],
    opts: &LpOptions,
    iterations: &mut usize,
    used_bland: &mut bool,
) -> Result<PhaseEnd, LpError> {
    let mut bland = false;
    let mut degenerate = 0usize;
    let mut nz = Vec::with_capacity(t.cols);
    loop {
        let mut enter = None;
        if bland {
            enter = (0..t.cols).find(|&j| allowed[j] && cost[j] < -opts.cost_tol);
        } else {
            let mut best = -opts.cost_tol;
            for j in 0..t.cols {
                if allowed[j] && cost[j] < best {
                    best = cost[j];
                    enter = Some(j);
                }
            }
        }
        let Some(j) = enter else {
            return Ok(PhaseEnd::Optimal);
        };

        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..t.m {
            let aij = t.row(i)[j];
            if aij > opts.pivot_tol {
                let ratio = t.b[i] / aij;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        if ratio < best_ratio - 1e-12 {
                            true
                        } else if ratio <= best_ratio + 1e-12 {
                            if bland {
                                t.basis[i] < t.basis[l]
                            } else {
                                aij > t.row(l)[j]
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    best_ratio = best_ratio.min(ratio);
                    leave = Some(i);
                }
            }
        }
        let Some(r) = leave else {
            return Ok(PhaseEnd::Unbounded);
        };

        if *iterations >= opts.max_iterations {
            return Err(LpError::IterationLimit(opts.max_iterations));
        }
        *iterations += 1;
        if t.b[r].abs() <= 1e-12 {
            degenerate += 1;
            if !bland && degenerate >= opts.degenerate_run {
                bland = true;
                *used_bland = true;
            }
        } else {
            degenerate = 0;
        }
        t.pivot(r, j, cost, obj, &mut nz);
        if !obj.is_finite() {
            return Err(LpError::NonFinite);
        }
    }
}

pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    lp_solve_with(problem, &LpOptions::default())
}

pub fn lp_solve_with(problem: &LpProblem, opts: &LpOptions) -> Result<LpSolution, LpError> {
    problem.validate()?;
    let n = problem.num_vars();

    // Column layout of the structural part.
    let mut maps = Vec::with_capacity(n);
    let mut struct_cost = Vec::new();
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (l, u, c) = (problem.lower[j], problem.upper[j], problem.objective[j]);
        if l.is_finite() {
            let col = struct_cost.len();
            struct_cost.push(c);
            maps.push(VarMap::Shifted { col, offset: l });
            if u.is_finite() {
                extra_rows.push((col, u - l));
            }
        } else if u.is_finite() {
            let col = struct_cost.len();
            struct_cost.push(-c);
            maps.push(VarMap::Mirrored { col, offset: u });
        } else {
            let pos = struct_cost.len();
            struct_cost.push(c);
            struct_cost.push(-c);
            maps.push(VarMap::Split { pos, neg: pos + 1 });
        }
    }
    let n_struct = struct_cost.len();

    // Standardized rows over structural columns: (entries, sense, rhs).
    let mut rows: Vec<(Vec<(usize, f64)>, Sense, f64)> = Vec::with_capacity(problem.rows.len() + extra_rows.len());
    for row in &problem.rows {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(row.coeffs.len());
        let mut rhs = row.rhs;
        for &(j, a) in &row.coeffs {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shifted { col, offset } => {
                    rhs -= a * offset;
                    entries.push((col, a));
                }
                VarMap::Mirrored { col, offset } => {
                    rhs -= a * offset;
                    entries.push((col, -a));
                }
                VarMap::Split { pos, neg } => {
                    entries.push((pos, a));
                    entries.push((neg, -a));
                }
            }
        }
        rows.push((entries, row.sense, rhs));
    }
    for (col, width) in extra_rows {
        rows.push((vec![(col, 1.0)], Sense::Le, width));
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Sense::Eq).count();
    let base_cols = n_struct + n_slack;

    // Dense rows with slacks; flip rows with negative rhs.
    let mut dense: Vec<Vec<f64>> = Vec::with_capacity(m);
    let mut rhs_vec = Vec::with_capacity(m);
    let mut slack = n_struct;
    for (entries, sense, rhs) in &rows {
        let mut d = vec![0.0; base_cols];
        for &(c, a) in entries {
            d[c] += a;
        }
        match sense {
            Sense::Le => {
                d[slack] = 1.0;
                slack += 1;
            }
            Sense::Ge => {
                d[slack] = -1.0;
                slack += 1;
            }
            Sense::Eq => {}
        }
        let mut r = *rhs;
        if r < 0.0 {
            d.iter_mut().for_each(|v| *v = -*v);
            r = -r;
        }
        dense.push(d);
        rhs_vec.push(r);
    }

    // Find existing unit columns to seed the basis.
    let mut col_rows: Vec<(usize, usize)> = vec![(0, usize::MAX); base_cols];
    for (i, d) in dense.iter().enumerate() {
        for (c, &v) in d.iter().enumerate() {
            if v != 0.0 {
                let e = &mut col_rows[c];
                e.0 += 1;
                e.1 = i;
            }
        }
    }
    let mut basis = vec![usize::MAX; m];
    for c in 0..base_cols {
        let (count, i) = col_rows[c];
        if count == 1 && basis[i] == usize::MAX && dense[i][c] > 0.0 {
            let s = dense[i][c];
            if s != 1.0 {
                dense[i].iter_mut().for_each(|v| *v /= s);
                rhs_vec[i] /= s;
            }
            basis[i] = c;
        }
    }
    let artificial_rows: Vec<usize> = (0..m).filter(|&i| basis[i] == usize::MAX).collect();
    let n_art = artificial_rows.len();
    let cols = base_cols + n_art;
    let mut a = vec![0.0; m * cols];
    for (i, d) in dense.iter().enumerate() {
        a[i * cols..i * cols + base_cols].copy_from_slice(d);
    }
    for (k, &i) in artificial_rows.iter().enumerate() {
        a[i * cols + base_cols + k] = 1.0;
        basis[i] = base_cols + k;
    }
    let mut t = Tableau { m, cols, a, b: rhs_vec, basis };

    let mut iterations = 0;
    let mut used_bland = false;
    let mut allowed = vec![true; cols];

    if n_art > 0 {
        // Phase 1: minimize the sum of artificials.
        let mut cost = vec![0.0; cols];
        let mut obj = 0.0;
        for k in 0..n_art {
            cost[base_cols + k] = 1.0;
        }
        for &i in &artificial_rows {
            for c in 0..cols {
                cost[c] -= t.row(i)[c];
            }
            obj -= t.b[i];
        }
        for k in 0..n_art {
            cost[base_cols + k] = 0.0;
        }
        run_phase(&mut t, &mut cost, &mut obj, &allowed, opts, &mut iterations, &mut used_bland)?;
        let infeas: f64 = (0..m).filter(|&i| t.basis[i] >= base_cols).map(|i| t.b[i]).sum();
        let scale = 1.0 + t.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if infeas > opts.feas_tol * scale {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: Vec::new(),
                objective: f64::NAN,
                iterations,
                used_bland,
            });
        }
        // Drive remaining (zero-valued) artificials out where possible.
        let mut nz = Vec::new();
        let mut dummy_cost = vec![0.0; cols];
        let mut dummy_obj = 0.0;
        for i in 0..m {
            if t.basis[i] >= base_cols {
                let row = t.row(i);
                if let Some(c) = (0..base_cols).find(|&c| row[c].abs() > 1e-7) {
                    t.pivot(i, c, &mut dummy_cost, &mut dummy_obj, &mut nz);
                }
            }
        }
        for flag in allowed.iter_mut().skip(base_cols) {
            *flag = false;
        }
    }

    // Phase 2 reduced costs.
    let mut cost = vec![0.0; cols];
    cost[..n_struct].copy_from_slice(&struct_cost);
    let mut obj = 0.0;
    for i in 0..m {
        let cb = cost_of(t.basis[i], &struct_cost);
        if cb != 0.0 {
            let row = &t.a[i * cols..(i + 1) * cols];
            for c in 0..cols {
                cost[c] -= cb * row[c];
            }
            obj -= cb * t.b[i];
        }
    }
    let end = run_phase(&mut t, &mut cost, &mut obj, &allowed, opts, &mut iterations, &mut used_bland)?;
    if let PhaseEnd::Unbounded = end {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: Vec::new(),
            objective: f64::NEG_INFINITY,
            iterations,
            used_bland,
        });
    }

    let mut z = vec![0.0; cols];
    for i in 0..m {
        z[t.basis[i]] = t.b[i].max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|mp| match *mp {
            VarMap::Shifted { col, offset } => offset + z[col],
            VarMap::Mirrored { col, offset } => offset - z[col],
            VarMap::Split { pos, neg } => z[pos] - z[neg],
        })
        .collect();
    let objective = problem.objective_value(&x);
    Ok(LpSolution { status: LpStatus::Optimal, x, objective, iterations, used_bland })
}

fn cost_of(col: usize, struct_cost: &[f64]) -> f64 {
    struct_cost.get(col).copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound() {
        let mut p = LpProblem::new(1);
        p.objective[0] = 1.0;
        p.set_free(0);
        p.add_row(vec![(0, 1.0)], Sense::Ge, 3.0);
        let s = lp_solve(&p).unwrap().into_optimal().unwrap();
        assert!((s.objective - 3.0).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut p = LpProblem::new(1);
        p.add_row(vec![(0, 1.0)], Sense::Le, -1.0);
        assert_eq!(lp_solve(&p).unwrap().status, LpStatus::Infeasible);

        let mut q = LpProblem::new(2);
        q.objective = vec![-1.0, 0.0];
        q.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
        assert_eq!(lp_solve(&q).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_with_bounds() {
        // min -x - 2y s.t. x + y = 4, 0 <= x <= 3, 1 <= y <= 2
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, -2.0];
        p.set_bounds(0, 0.0, 3.0);
        p.set_bounds(1, 1.0, 2.0);
        p.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 4.0);
        let s = lp_solve(&p).unwrap().into_optimal().unwrap();
        assert!((s.objective + 6.0).abs() < 1e-9, "{s:?}");
        assert!(p.max_violation(&s.x) < 1e-9);
    }

    #[test]
    fn degenerate_ties_share_objective() {
        // min -x - y s.t. x + y <= 1, x <= 1, y <= 1: a whole edge is optimal.
        let mut p = LpProblem::new(2);
        p.objective = vec![-1.0, -1.0];
        p.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Le, 1.0);
        p.add_row(vec![(0, 1.0)], Sense::Le, 1.0);
        p.add_row(vec![(1, 1.0)], Sense::Le, 1.0);
        let s = lp_solve(&p).unwrap().into_optimal().unwrap();
        assert!((s.objective + 1.0).abs() < 1e-9);
    }
}
