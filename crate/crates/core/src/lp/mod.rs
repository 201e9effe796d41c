//! Linear programs with nonnegative variables.
//!
//! Two independent solvers: a generic dense two-phase simplex (exact over
//! rationals) and a sparse floating-point backend for larger programs.

pub mod dense;
pub mod export;
pub mod sparse;

use crate::error::{PcsError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row<S> {
    pub coefs: Vec<(usize, S)>,
    pub sense: Sense,
    pub rhs: S,
}

/// `min c·x` subject to rows, `x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<S> {
    pub objective: Vec<S>,
    pub rows: Vec<Row<S>>,
    pub names: Vec<String>,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new() -> Self {
        LinearProgram {
            objective: Vec::new(),
            rows: Vec::new(),
            names: Vec::new(),
        }
    }

    pub fn add_var(&mut self, cost: S, name: impl Into<String>) -> usize {
        self.objective.push(cost);
        self.names.push(name.into());
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, S)>, sense: Sense, rhs: S) {
        self.rows.push(Row { coefs, sense, rhs });
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    /// Objective value of an assignment.
    pub fn evaluate(&self, x: &[S]) -> S {
        self.objective
            .iter()
            .zip(x)
            .fold(S::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
    }

    /// Largest constraint or sign violation of an assignment (zero when feasible).
    pub fn max_violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for v in x {
            if -v.clone() > worst {
                worst = -v.clone();
            }
        }
        for r in &self.rows {
            let lhs = r
                .coefs
                .iter()
                .fold(S::zero(), |acc, (j, a)| acc + a.clone() * x[*j].clone());
            let viol = match r.sense {
                Sense::Le => lhs - r.rhs.clone(),
                Sense::Ge => r.rhs.clone() - lhs,
                Sense::Eq => (lhs - r.rhs.clone()).abs(),
            };
            if viol > worst {
                worst = viol;
            }
        }
        worst
    }

    /// Same program over another scalar type.
    pub fn convert<T: Scalar>(&self, f: impl Fn(&S) -> T) -> LinearProgram<T> {
        LinearProgram {
            objective: self.objective.iter().map(&f).collect(),
            rows: self
                .rows
                .iter()
                .map(|r| Row {
                    coefs: r.coefs.iter().map(|(j, a)| (*j, f(a))).collect(),
                    sense: r.sense,
                    rhs: f(&r.rhs),
                })
                .collect(),
            names: self.names.clone(),
        }
    }
}

impl<S: Scalar> Default for LinearProgram<S> {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<S> {
    pub values: Vec<S>,
    pub objective: S,
}

/// Which solver handles a program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum LpBackend {
    /// Dense simplex in the program's own scalar type.
    Dense,
    /// Sparse floating-point simplex, values converted back.
    Sparse,
    /// Dense when `vars × rows` is at most the given cell count, else sparse.
    Auto(usize),
}

impl Default for LpBackend {
    fn default() -> Self {
        LpBackend::Auto(6_000)
    }
}

/// Solve with the chosen backend. Sparse solutions are certified to violate no
/// constraint by more than `1e-9` (relative to the largest coefficient scale).
pub fn solve<S: Scalar>(lp: &LinearProgram<S>, backend: LpBackend) -> Result<LpSolution<S>> {
    let use_dense = match backend {
        LpBackend::Dense => true,
        LpBackend::Sparse => false,
        LpBackend::Auto(cells) => lp.vars().saturating_mul(lp.rows.len()) <= cells,
    };
    if use_dense {
        return dense::solve(lp);
    }
    let flp = lp.convert(|v| v.as_f64());
    let sol = sparse::solve(&flp)?;
    let viol = flp.max_violation(&sol.values);
    if viol > 1e-9 {
        return Err(PcsError::Lp(format!(
            "sparse solution violates constraints by {viol:e}"
        )));
    }
    let values: Vec<S> = sol.values.iter().map(|&v| S::from_f64(v)).collect();
    let objective = lp.evaluate(&values);
    Ok(LpSolution { values, objective })
}
