//! Sparse floating-point backend built on the `microlp` revised simplex.

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::{LinearProgram, LpSolution, Sense};
use crate::error::{PcsError, Result};

pub fn solve(lp: &LinearProgram<f64>) -> Result<LpSolution<f64>> {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<_> = lp
        .objective
        .iter()
        .map(|&c| p.add_var(c, (0.0, f64::INFINITY)))
        .collect();
    for r in &lp.rows {
        let expr: Vec<_> = r.coefs.iter().map(|&(j, a)| (vars[j], a)).collect();
        let op = match r.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(expr.as_slice(), op, r.rhs);
    }
    let outcome = p.solve().map_err(|e| PcsError::Lp(format!("{e:?}")))?;
    let sol = outcome
        .solution()
        .ok_or_else(|| PcsError::Lp("solver stopped without a solution".into()))?;
    let values: Vec<f64> = vars.iter().map(|&v| sol.var_value(v).max(0.0)).collect();
    Ok(LpSolution {
        objective: lp.evaluate(&values),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn agrees_with_dense_on_small_program() {
        let mut lp = LinearProgram::<f64>::new();
        let x = lp.add_var(-1.0, "x");
        let y = lp.add_var(-1.0, "y");
        lp.add_row(vec![(x, 1.0), (y, 2.0)], Sense::Le, 4.0);
        lp.add_row(vec![(x, 3.0), (y, 1.0)], Sense::Le, 6.0);
        let s = solve(&lp).unwrap();
        let d = super::super::dense::solve(&lp).unwrap();
        assert!((s.objective - d.objective).abs() < 1e-9);
        assert!((s.objective + 2.8).abs() < 1e-9);
    }
}
