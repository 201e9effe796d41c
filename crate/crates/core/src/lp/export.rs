//! CPLEX LP text export for differential testing against external solvers.

use std::fmt::Write as _;

use super::{LinearProgram, Sense};
use crate::scalar::Scalar;

fn term<S: Scalar>(out: &mut String, first: bool, coef: &S, name: &str) {
    let v = coef.as_f64();
    if first {
        let _ = write!(out, " {v} {name}");
    } else if v < 0.0 {
        let _ = write!(out, " - {} {name}", -v);
    } else {
        let _ = write!(out, " + {v} {name}");
    }
}

pub fn to_lp_format<S: Scalar>(lp: &LinearProgram<S>) -> String {
    let name = |j: usize| format!("v{j}");
    let mut out = String::from("\\ label-cover program\nMinimize\n obj:");
    let mut first = true;
    for (j, c) in lp.objective.iter().enumerate() {
        if !c.is_zero() {
            term(&mut out, first, c, &name(j));
            first = false;
        }
    }
    if first {
        out.push_str(" 0 v0");
    }
    out.push_str("\nSubject To\n");
    for (i, r) in lp.rows.iter().enumerate() {
        let _ = write!(out, " c{i}:");
        let mut first = true;
        for (j, a) in &r.coefs {
            term(&mut out, first, a, &name(*j));
            first = false;
        }
        if first {
            out.push_str(" 0 v0");
        }
        let op = match r.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", r.rhs.as_f64());
    }
    out.push_str("End\n");
    out
}
