//! Dense two-phase tableau simplex with Bland's rule, generic over the scalar type.

use super::{LinearProgram, LpSolution, Sense};
use crate::error::{PcsError, Result};
use crate::scalar::Scalar;

struct Tableau<S> {
    rows: Vec<Vec<S>>,
    basis: Vec<usize>,
    cols: usize,
}

enum Outcome {
    Optimal,
    Unbounded,
}

impl<S: Scalar> Tableau<S> {
    fn rhs(&self, i: usize) -> &S {
        &self.rows[i][self.cols]
    }

    fn pivot(&mut self, r: usize, j: usize, reduced: &mut [S]) {
        let p = self.rows[r][j].clone();
        for v in self.rows[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / p.clone();
            }
        }
        let pivot_row = self.rows[r].clone();
        let nz: Vec<usize> = (0..=self.cols).filter(|&k| !pivot_row[k].is_zero()).collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[j].is_zero() {
                continue;
            }
            let f = row[j].clone();
            for &k in &nz {
                row[k] = row[k].clone() - f.clone() * pivot_row[k].clone();
            }
        }
        if !reduced[j].is_zero() {
            let f = reduced[j].clone();
            for &k in &nz {
                reduced[k] = reduced[k].clone() - f.clone() * pivot_row[k].clone();
            }
        }
        self.basis[r] = j;
    }

    /// Reduced costs (last entry: minus the objective value).
    fn reduced_costs(&self, cost: &[S]) -> Vec<S> {
        let mut d: Vec<S> = cost.to_vec();
        d.push(S::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for k in 0..=self.cols {
                if !self.rows[i][k].is_zero() {
                    d[k] = d[k].clone() - cost[b].clone() * self.rows[i][k].clone();
                }
            }
        }
        d
    }

    fn run(&mut self, cost: &[S], active: &[bool]) -> Outcome {
        let tol = S::tolerance();
        let mut d = self.reduced_costs(cost);
        loop {
            let entering = (0..self.cols).find(|&j| active[j] && d[j] < -tol.clone());
            let Some(j) = entering else {
                return Outcome::Optimal;
            };
            let mut best: Option<(usize, S)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][j];
                if *a > tol {
                    let ratio = self.rhs(i).clone() / a.clone();
                    let take = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if take {
                        best = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = best else {
                return Outcome::Unbounded;
            };
            self.pivot(r, j, &mut d);
        }
    }
}

/// Solve `lp` exactly (for exact scalars) with the two-phase method.
pub fn solve<S: Scalar>(lp: &LinearProgram<S>) -> Result<LpSolution<S>> {
    let n = lp.vars();
    let m = lp.rows.len();
    let mut slack = vec![None; m];
    let mut art = vec![None; m];
    let mut cols = n;
    let mut senses = Vec::with_capacity(m);
    for (i, r) in lp.rows.iter().enumerate() {
        let flip = r.rhs < S::zero();
        let sense = match (r.sense, flip) {
            (Sense::Le, true) => Sense::Ge,
            (Sense::Ge, true) => Sense::Le,
            (s, _) => s,
        };
        senses.push((sense, flip));
        if sense != Sense::Eq {
            slack[i] = Some(cols);
            cols += 1;
        }
    }
    for (i, (sense, _)) in senses.iter().enumerate() {
        if *sense != Sense::Le {
            art[i] = Some(cols);
            cols += 1;
        }
    }
    let mut rows = Vec::with_capacity(m);
    let mut basis = Vec::with_capacity(m);
    for (i, r) in lp.rows.iter().enumerate() {
        let (sense, flip) = senses[i];
        let mut row = vec![S::zero(); cols + 1];
        for (j, a) in &r.coefs {
            row[*j] = row[*j].clone() + if flip { -a.clone() } else { a.clone() };
        }
        row[cols] = if flip { -r.rhs.clone() } else { r.rhs.clone() };
        if let Some(s) = slack[i] {
            row[s] = if sense == Sense::Le { S::one() } else { -S::one() };
        }
        match art[i] {
            Some(a) => {
                row[a] = S::one();
                basis.push(a);
            }
            None => basis.push(slack[i].expect("Le rows carry a slack")),
        }
        rows.push(row);
    }
    let mut t = Tableau { rows, basis, cols };
    let is_art: Vec<bool> = (0..cols).map(|j| art.contains(&Some(j))).collect();
    if is_art.iter().any(|&a| a) {
        let cost1: Vec<S> = is_art.iter().map(|&a| if a { S::one() } else { S::zero() }).collect();
        let all = vec![true; cols];
        if let Outcome::Unbounded = t.run(&cost1, &all) {
            return Err(PcsError::Lp("phase one unbounded".into()));
        }
        let infeas = t
            .basis
            .iter()
            .enumerate()
            .filter(|(_, &b)| is_art[b])
            .fold(S::zero(), |acc, (i, _)| acc + t.rhs(i).clone());
        if infeas > S::tolerance() {
            return Err(PcsError::Lp("program is infeasible".into()));
        }
        // Drive remaining artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.rows.len() {
            if is_art[t.basis[i]] {
                let j = (0..cols).find(|&j| !is_art[j] && t.rows[i][j].abs() > S::tolerance());
                match j {
                    Some(j) => {
                        let mut dummy = vec![S::zero(); cols + 1];
                        t.pivot(i, j, &mut dummy);
                        i += 1;
                    }
                    None => {
                        t.rows.remove(i);
                        t.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
    }
    let mut cost2 = vec![S::zero(); cols];
    cost2[..n].clone_from_slice(&lp.objective);
    let active: Vec<bool> = is_art.iter().map(|&a| !a).collect();
    if let Outcome::Unbounded = t.run(&cost2, &active) {
        return Err(PcsError::Lp("program is unbounded".into()));
    }
    let mut values = vec![S::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            values[b] = t.rhs(i).clone();
        }
    }
    let objective = lp.evaluate(&values);
    Ok(LpSolution { values, objective })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Q;

    fn q(a: i64, b: i64) -> Q {
        Q::from_ratio(a, b)
    }

    #[test]
    fn small_exact_program() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6
        let mut lp = LinearProgram::<Q>::new();
        let x = lp.add_var(q(-1, 1), "x");
        let y = lp.add_var(q(-1, 1), "y");
        lp.add_row(vec![(x, q(1, 1)), (y, q(2, 1))], Sense::Le, q(4, 1));
        lp.add_row(vec![(x, q(3, 1)), (y, q(1, 1))], Sense::Le, q(6, 1));
        let s = solve(&lp).unwrap();
        assert_eq!(s.values, vec![q(8, 5), q(6, 5)]);
        assert_eq!(s.objective, q(-14, 5));
    }

    #[test]
    fn equality_and_ge_rows() {
        // min 2a + 3b s.t. a + b = 1, a <= 1/3
        let mut lp = LinearProgram::<Q>::new();
        let a = lp.add_var(q(2, 1), "a");
        let b = lp.add_var(q(3, 1), "b");
        lp.add_row(vec![(a, q(1, 1)), (b, q(1, 1))], Sense::Eq, q(1, 1));
        lp.add_row(vec![(a, q(1, 1))], Sense::Le, q(1, 3));
        lp.add_row(vec![(b, q(1, 1))], Sense::Ge, q(0, 1));
        let s = solve(&lp).unwrap();
        assert_eq!(s.objective, q(8, 3));
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::<Q>::new();
        let a = lp.add_var(q(1, 1), "a");
        lp.add_row(vec![(a, q(1, 1))], Sense::Ge, q(2, 1));
        lp.add_row(vec![(a, q(1, 1))], Sense::Le, q(1, 1));
        assert!(solve(&lp).is_err());
        let mut lp = LinearProgram::<Q>::new();
        let a = lp.add_var(q(-1, 1), "a");
        lp.add_row(vec![(a, q(1, 1))], Sense::Ge, q(0, 1));
        assert!(solve(&lp).is_err());
    }
}
