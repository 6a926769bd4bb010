//! Dense two-phase primal simplex with bounded variables.
//!
//! Problems have the form
//!
//! ```text
//! minimize    c . x
//! subject to  A_eq x  = b_eq
//!             A_ub x <= b_ub
//!             0 <= x <= u          (u_j may be +inf)
//! ```
//!
//! Upper bounds are handled inside the ratio test (nonbasic variables sit at
//! either bound), so they never add rows. Inequality rows get a slack column.
//! Rows whose sign-normalized form has a singleton column able to carry the
//! right-hand side start with that column basic; every other row gets an
//! artificial variable that phase 1 drives to zero.
//!
//! The entering rule is Dantzig's largest reduced cost. After a run of
//! degenerate pivots the solver switches to Bland's lowest-index rule until
//! the objective moves again, which rules out cycling.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub eq_matrix: Vec<Vec<f64>>,
    pub eq_rhs: Vec<f64>,
    pub ub_matrix: Vec<Vec<f64>>,
    pub ub_rhs: Vec<f64>,
    pub var_upper_bounds: Vec<f64>,
}

impl LpProblem {
    /// An unconstrained problem over `objective.len()` non-negative variables.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LpProblem {
            objective,
            var_upper_bounds: vec![f64::INFINITY; n],
            ..Default::default()
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_matrix.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn add_ub(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.ub_matrix.push(row);
        self.ub_rhs.push(rhs);
        self
    }

    pub fn set_upper_bound(&mut self, var: usize, bound: f64) -> &mut Self {
        self.var_upper_bounds[var] = bound;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.var_upper_bounds.len() != n {
            return Err(Error::invalid(format!(
                "{} upper bounds for {n} variables",
                self.var_upper_bounds.len()
            )));
        }
        for (kind, m, b) in [
            ("equality", &self.eq_matrix, &self.eq_rhs),
            ("inequality", &self.ub_matrix, &self.ub_rhs),
        ] {
            if m.len() != b.len() {
                return Err(Error::invalid(format!(
                    "{} {kind} rows but {} right-hand sides",
                    m.len(),
                    b.len()
                )));
            }
            for (i, row) in m.iter().enumerate() {
                if row.len() != n {
                    return Err(Error::invalid(format!(
                        "{kind} row {i} has {} entries, expected {n}",
                        row.len()
                    )));
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid(format!("{kind} row {i} has a non-finite entry")));
                }
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite {kind} right-hand side")));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite objective coefficient"));
        }
        if self.var_upper_bounds.iter().any(|&u| !(u >= 0.0)) {
            return Err(Error::invalid("upper bounds must be >= 0"));
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        dot(&self.objective, x)
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .eq_matrix
            .iter()
            .zip(&self.eq_rhs)
            .map(|(row, b)| (dot(row, x) - b).abs());
        let ub = self
            .ub_matrix
            .iter()
            .zip(&self.ub_rhs)
            .map(|(row, b)| (dot(row, x) - b).max(0.0));
        let bounds = x
            .iter()
            .zip(&self.var_upper_bounds)
            .map(|(&v, &u)| (-v).max(v - u).max(0.0));
        eq.chain(ub).chain(bounds).fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Final point; meaningful only when `status` is `Optimal`.
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Reduced costs of the structural variables in the final basis.
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Smallest pivot magnitude accepted in the ratio test.
    pub pivot_tol: f64,
    /// Phase-1 residual above which a problem is declared infeasible.
    pub feasibility_tol: f64,
    /// Reduced-cost threshold for optimality.
    pub optimality_tol: f64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    /// Zero means Bland's rule throughout.
    pub stall_threshold: usize,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            pivot_tol: 1e-9,
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            stall_threshold: 25,
            max_iterations: 100_000,
        }
    }
}

pub fn solve(problem: &LpProblem) -> Result<LpSolution> {
    solve_with(problem, &SolverOptions::default())
}

pub fn solve_with(problem: &LpProblem, opts: &SolverOptions) -> Result<LpSolution> {
    problem.validate()?;
    let mut tab = Tableau::build(problem, opts);
    let n = problem.num_vars();

    if tab.num_artificial > 0 {
        tab.set_phase_one_costs();
        match tab.run(true)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => {
                return Err(Error::Solver("phase 1 reported an unbounded ray".into()));
            }
        }
        let residual = tab.artificial_residual();
        if residual > opts.feasibility_tol {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: tab.structural_values(n),
                objective_value: f64::NAN,
                reduced_costs: vec![f64::NAN; n],
                iterations: tab.iterations,
            });
        }
        tab.evict_artificials();
    }

    tab.set_phase_two_costs(&problem.objective);
    let outcome = tab.run(false)?;
    let x = tab.structural_values(n);
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    let objective_value = match status {
        LpStatus::Optimal => problem.objective_value(&x),
        _ => f64::NEG_INFINITY,
    };
    Ok(LpSolution {
        status,
        x,
        objective_value,
        reduced_costs: tab.cost[..n].to_vec(),
        iterations: tab.iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// Structural plus slack columns; artificials follow.
    real_cols: usize,
    num_artificial: usize,
    /// Row-major `rows x cols`, holds `B^-1 A`.
    data: Vec<f64>,
    /// Current values of the basic variables.
    beta: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    upper: Vec<f64>,
    /// Reduced costs.
    cost: Vec<f64>,
    /// Columns touched by row operations; shrinks once artificials are gone.
    width: usize,
    opts: SolverOptions,
    iterations: usize,
}

impl Tableau {
    fn build(p: &LpProblem, opts: &SolverOptions) -> Self {
        let n = p.num_vars();
        let m_eq = p.eq_matrix.len();
        let m_ub = p.ub_matrix.len();
        let rows = m_eq + m_ub;
        let real_cols = n + m_ub;

        // Sign-normalize so every right-hand side is non-negative.
        let mut dense = vec![0.0; rows * real_cols];
        let mut rhs = vec![0.0; rows];
        for i in 0..rows {
            let (row, b) = if i < m_eq {
                (&p.eq_matrix[i], p.eq_rhs[i])
            } else {
                (&p.ub_matrix[i - m_eq], p.ub_rhs[i - m_eq])
            };
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            let dst = &mut dense[i * real_cols..(i + 1) * real_cols];
            for (d, &a) in dst.iter_mut().zip(row) {
                *d = sign * a;
            }
            if i >= m_eq {
                dst[n + i - m_eq] = sign;
            }
            rhs[i] = sign * b;
        }

        let mut upper: Vec<f64> = p.var_upper_bounds.clone();
        upper.extend(std::iter::repeat_n(f64::INFINITY, m_ub));

        // Crash: a column whose only nonzero is positive in row i can start
        // basic there if its bound admits the value.
        let mut basis: Vec<Option<usize>> = vec![None; rows];
        let mut used = vec![false; real_cols];
        for j in (0..real_cols).rev() {
            let mut only = None;
            let mut count = 0;
            for i in 0..rows {
                if dense[i * real_cols + j] != 0.0 {
                    count += 1;
                    only = Some(i);
                }
            }
            let Some(i) = only else { continue };
            let a = dense[i * real_cols + j];
            if count == 1 && a > 0.0 && basis[i].is_none() && rhs[i] / a <= upper[j] && !used[j] {
                basis[i] = Some(j);
                used[j] = true;
            }
        }

        let num_artificial = basis.iter().filter(|b| b.is_none()).count();
        let cols = real_cols + num_artificial;
        let mut data = vec![0.0; rows * cols];
        let mut beta = vec![0.0; rows];
        let mut state = vec![VarState::AtLower; cols];
        let mut final_basis = vec![0; rows];
        let mut next_art = real_cols;
        for i in 0..rows {
            data[i * cols..i * cols + real_cols].copy_from_slice(&dense[i * real_cols..(i + 1) * real_cols]);
            let j = match basis[i] {
                Some(j) => {
                    // Scale the row so the crashed column is a unit column.
                    let a = data[i * cols + j];
                    for v in &mut data[i * cols..i * cols + real_cols] {
                        *v /= a;
                    }
                    beta[i] = rhs[i] / a;
                    j
                }
                None => {
                    let j = next_art;
                    next_art += 1;
                    data[i * cols + j] = 1.0;
                    beta[i] = rhs[i];
                    j
                }
            };
            final_basis[i] = j;
            state[j] = VarState::Basic(i);
        }
        upper.extend(std::iter::repeat_n(f64::INFINITY, num_artificial));

        Tableau {
            rows,
            cols,
            real_cols,
            num_artificial,
            data,
            beta,
            basis: final_basis,
            state,
            upper,
            cost: vec![0.0; cols],
            width: cols,
            opts: *opts,
            iterations: 0,
        }
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    fn is_artificial(&self, j: usize) -> bool {
        j >= self.real_cols
    }

    fn set_costs(&mut self, c: &[f64]) {
        // d_j = c_j - sum_i c_B(i) T_ij
        self.cost[..self.width].copy_from_slice(&c[..self.width]);
        for i in 0..self.rows {
            let cb = c[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[i * self.cols..i * self.cols + self.width];
            for (d, &t) in self.cost[..self.width].iter_mut().zip(row) {
                *d -= cb * t;
            }
        }
    }

    fn set_phase_one_costs(&mut self) {
        let mut c = vec![0.0; self.cols];
        for v in &mut c[self.real_cols..] {
            *v = 1.0;
        }
        self.set_costs(&c);
    }

    fn set_phase_two_costs(&mut self, objective: &[f64]) {
        let mut c = vec![0.0; self.cols];
        c[..objective.len()].copy_from_slice(objective);
        self.set_costs(&c);
    }

    fn artificial_residual(&self) -> f64 {
        (0..self.rows)
            .filter(|&i| self.is_artificial(self.basis[i]))
            .map(|i| self.beta[i].abs())
            .fold(0.0, f64::max)
    }

    /// Pivots zero-level artificials out of the basis. Rows where no real
    /// column can replace them are redundant; their artificial stays basic at
    /// zero and can never move because the row has no real entries.
    fn evict_artificials(&mut self) {
        for r in 0..self.rows {
            if !self.is_artificial(self.basis[r]) {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.real_cols {
                if matches!(self.state[j], VarState::Basic(_)) {
                    continue;
                }
                let a = self.at(r, j).abs();
                if a > self.opts.pivot_tol && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.column(j);
                let delta = self.beta[r] / alpha[r];
                for (b, a) in self.beta.iter_mut().zip(&alpha) {
                    *b -= delta * a;
                }
                self.beta[r] = self.nonbasic_value(j) + delta;
                self.pivot(r, j);
            }
        }
        // Artificial columns never enter again, so row operations skip them.
        self.width = self.real_cols;
    }

    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::AtUpper => self.upper[j],
            _ => 0.0,
        }
    }

    fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    fn choose_entering(&self, phase_one: bool, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let limit = if phase_one { self.cols } else { self.real_cols };
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..limit {
            let d = self.cost[j];
            let dir = match self.state[j] {
                VarState::Basic(_) => continue,
                VarState::AtLower if d < -tol => 1.0,
                VarState::AtUpper if d > tol => -1.0,
                _ => continue,
            };
            if self.upper[j] == 0.0 {
                continue;
            }
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, m)| d.abs() > m) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn run(&mut self, phase_one: bool) -> Result<Outcome> {
        let mut stalled = 0usize;
        loop {
            if self.iterations >= self.opts.max_iterations {
                return Err(Error::Solver(format!(
                    "no convergence after {} iterations",
                    self.iterations
                )));
            }
            let bland = stalled >= self.opts.stall_threshold;
            let Some((j, dir)) = self.choose_entering(phase_one, bland) else {
                return Ok(Outcome::Optimal);
            };
            self.iterations += 1;

            let alpha = self.column(j);
            let mut theta = self.upper[j];
            let mut leave: Option<(usize, f64)> = None;
            for (i, &a) in alpha.iter().enumerate() {
                let rate = dir * a;
                let limit = if rate > self.opts.pivot_tol {
                    self.beta[i].max(0.0) / rate
                } else if rate < -self.opts.pivot_tol && self.upper[self.basis[i]].is_finite() {
                    (self.upper[self.basis[i]] - self.beta[i]).max(0.0) / -rate
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit < theta - RATIO_TIE => true,
                    Some((r, mag)) if limit <= theta + RATIO_TIE => {
                        if bland {
                            self.basis[i] < self.basis[r]
                        } else {
                            a.abs() > mag
                        }
                    }
                    _ => false,
                };
                if better {
                    theta = limit;
                    leave = Some((i, a.abs()));
                }
            }
            if theta.is_infinite() {
                return Ok(Outcome::Unbounded);
            }

            if theta > RATIO_TIE {
                stalled = 0;
            } else {
                stalled += 1;
            }

            for (b, a) in self.beta.iter_mut().zip(&alpha) {
                *b -= dir * theta * a;
            }
            match leave {
                None => {
                    // The entering variable reaches its other bound first.
                    self.state[j] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                }
                Some((r, _)) => {
                    let leaving = self.basis[r];
                    let leaving_state = if dir * alpha[r] > 0.0 {
                        VarState::AtLower
                    } else {
                        VarState::AtUpper
                    };
                    self.beta[r] = if dir > 0.0 { theta } else { self.upper[j] - theta };
                    self.pivot(r, j);
                    self.state[leaving] = leaving_state;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let cols = self.cols;
        let width = self.width;
        let p = self.data[r * cols + j];
        let pivot_row: Vec<f64> = self.data[r * cols..r * cols + width]
            .iter()
            .map(|v| v / p)
            .collect();
        self.data[r * cols..r * cols + width].copy_from_slice(&pivot_row);
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * cols + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * cols..i * cols + width];
            for (v, &pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[j] = 0.0;
        }
        let f = self.cost[j];
        if f != 0.0 {
            for (d, &pv) in self.cost[..width].iter_mut().zip(&pivot_row) {
                *d -= f * pv;
            }
            self.cost[j] = 0.0;
        }
        self.basis[r] = j;
        self.state[j] = VarState::Basic(r);
    }

    fn structural_values(&self, n: usize) -> Vec<f64> {
        (0..n)
            .map(|j| {
                let v = match self.state[j] {
                    VarState::Basic(i) => self.beta[i],
                    VarState::AtLower => 0.0,
                    VarState::AtUpper => self.upper[j],
                };
                // Round-off may leave basics a hair outside their bounds.
                v.clamp(0.0, self.upper[j])
            })
            .collect()
    }
}

const RATIO_TIE: f64 = 1e-12;
