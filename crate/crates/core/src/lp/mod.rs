//! Linear programs in minimization form and a bounded primal simplex solver.
//!
//! Constraints are sparse rows `a·x (≤|≥|=) b`; variables carry bounds that
//! default to `[0, ∞)`. Dual values follow the minimization convention: a `≥`
//! row has a nonnegative dual, a `≤` row a nonpositive one.

mod dense;
mod factor;
mod lu;
mod simplex;

use thiserror::Error;

pub use simplex::SolverOptions;

/// Constraint sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Row>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with bounds `[0, ∞)`.
    pub fn add_var(&mut self, cost: f64) -> usize {
        self.add_bounded_var(cost, 0.0, f64::INFINITY)
    }

    pub fn add_bounded_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> usize {
        self.rows.push(Row { coeffs, sense, rhs });
        self.rows.len() - 1
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.coeffs.len()).sum()
    }

    /// Objective value of a point.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn primal_residual(&self, x: &[f64]) -> f64 {
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

    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::InvalidModel("bound vectors do not match variable count".into()));
        }
        for (j, &c) in self.objective.iter().enumerate() {
            if !c.is_finite() {
                return Err(LpError::InvalidModel(format!("objective coefficient of x{j} is not finite")));
            }
            let (lo, up) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || up.is_nan() || lo > up || lo == f64::INFINITY || up == f64::NEG_INFINITY {
                return Err(LpError::InvalidModel(format!("bad bounds [{lo}, {up}] on x{j}")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::InvalidModel(format!("rhs of row {i} is not finite")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::InvalidModel(format!("row {i} references x{j} out of range")));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidModel(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Position of a variable (structural or row slack) relative to the basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarStatus {
    Basic,
    AtLower,
    AtUpper,
    Free,
}

/// A basis snapshot usable as a warm start. Rows or variables appended after
/// the snapshot was taken default to a basic slack and a nonbasic variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Basis {
    pub vars: Vec<VarStatus>,
    pub rows: Vec<VarStatus>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    pub reduced_costs: Vec<f64>,
    pub objective: f64,
    pub dual_objective: f64,
    pub primal_residual: f64,
    pub cs_residual: f64,
    pub iterations: usize,
    pub basis: Basis,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidModel(String),
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
}

/// Solves with default options and a cold start.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &SolverOptions::default(), None)
}

/// Solves with explicit options and an optional warm-start basis.
pub fn solve_lp_with(
    lp: &LinearProgram,
    opts: &SolverOptions,
    warm: Option<&Basis>,
) -> Result<LpSolution, LpError> {
    lp.validate()?;
    simplex::solve(lp, opts, warm)
}

/// Dual objective and complementary-slackness residual of a primal/dual pair.
pub(crate) fn dual_certificate(
    lp: &LinearProgram,
    x: &[f64],
    duals: &[f64],
    reduced: &[f64],
    opt_tol: f64,
) -> (f64, f64) {
    let mut dual_obj: f64 = lp.rows.iter().zip(duals).map(|(r, y)| r.rhs * y).sum();
    let mut cs: f64 = 0.0;
    for (row, &y) in lp.rows.iter().zip(duals) {
        if row.sense == Sense::Eq {
            continue;
        }
        let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
        cs = cs.max(y.abs() * (lhs - row.rhs).abs());
    }
    for (j, &d) in reduced.iter().enumerate() {
        let (lo, up) = (lp.lower[j], lp.upper[j]);
        if d > opt_tol && lo.is_finite() {
            dual_obj += d * lo;
            cs = cs.max(d * (x[j] - lo).abs());
        } else if d < -opt_tol && up.is_finite() {
            dual_obj += d * up;
            cs = cs.max(-d * (up - x[j]).abs());
        } else if d.abs() > opt_tol {
            // sign of d not supported by a finite bound: dual infeasible
            cs = cs.max(d.abs());
        }
    }
    (dual_obj, cs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn approx(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-9
    }

    #[test]
    fn single_lower_bound_row() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0);
        lp.add_row(vec![(x, 1.0)], Sense::Ge, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(approx(s.x[0], 1.0));
        assert!(approx(s.objective, 1.0));
        assert!(approx(s.duals[0], 1.0));
    }

    #[test]
    fn two_by_two_vertex() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0);
        let y = lp.add_var(1.0);
        lp.add_row(vec![(x, 1.0), (y, 2.0)], Sense::Ge, 2.0);
        lp.add_row(vec![(x, 2.0), (y, 1.0)], Sense::Ge, 2.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(approx(s.x[0], 2.0 / 3.0));
        assert!(approx(s.x[1], 2.0 / 3.0));
        assert!(approx(s.objective, 4.0 / 3.0));
        assert!(approx(s.dual_objective, 4.0 / 3.0));
    }

    #[test]
    fn infeasible_bound_conflict() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0);
        lp.add_row(vec![(x, 1.0)], Sense::Le, -1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(-1.0);
        let y = lp.add_var(0.0);
        lp.add_row(vec![(x, 1.0), (y, -1.0)], Sense::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Unbounded);
    }

    #[test]
    fn equality_and_free_variable() {
        // min x - y, x + y = 4, x - y free-ish via free y, y <= 3
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0);
        let y = lp.add_bounded_var(-1.0, f64::NEG_INFINITY, 3.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Eq, 4.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!(approx(s.x[1], 3.0));
        assert!(approx(s.x[0], 1.0));
        assert!(approx(s.objective, -2.0));
    }

    #[test]
    fn rejects_nan() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0);
        lp.add_row(vec![(x, f64::NAN)], Sense::Ge, 1.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::InvalidModel(_))));
    }

    #[test]
    fn warm_start_after_appending_row() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(1.0);
        let y = lp.add_var(2.0);
        lp.add_row(vec![(x, 1.0), (y, 1.0)], Sense::Ge, 1.0);
        let first = solve_lp(&lp).unwrap();
        assert!(approx(first.objective, 1.0));
        lp.add_row(vec![(x, 1.0)], Sense::Le, 0.25);
        let second = solve_lp_with(&lp, &SolverOptions::default(), Some(&first.basis)).unwrap();
        assert!(approx(second.objective, 0.25 + 1.5));
    }
}
