//! Length scaling for rational and negative lengths.
//!
//! Every length is rounded up to a multiple of `Δ = θ·Bdgt_min / Hop-bound`,
//! so lengths become integers in units of Δ and a product graph can be
//! layered over them.

use serde_json::Value;

use crate::error::{PcsError, Result};
use crate::io::instance_to_value;
use crate::model::{condition_numbers, hop_bound, walk_resource, PcsInstance, Walk};
use crate::scalar::Scalar;
use crate::Q;

/// Instance whose lengths are rounded up to multiples of `delta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaledInstance<S = Q> {
    pub base: PcsInstance<S>,
    pub delta: S,
    pub theta: S,
    pub hop_bound: usize,
    /// `d_e` with `(d_e − 1)·Δ < r_e[0] ≤ d_e·Δ`.
    pub units: Vec<i64>,
}

/// `Δ = θ·Bdgt_min / Hop-bound`.
pub fn compute_delta<S: Scalar>(inst: &PcsInstance<S>, theta: &S, hop_cap_constant: usize) -> Result<S> {
    Ok(delta_and_hops(inst, theta, hop_cap_constant)?.0)
}

fn delta_and_hops<S: Scalar>(inst: &PcsInstance<S>, theta: &S, hop_cap_constant: usize) -> Result<(S, usize)> {
    if *theta <= S::zero() {
        return Err(PcsError::Parameter("theta must be positive".into()));
    }
    let cn = condition_numbers(inst)?;
    let hb = hop_bound(inst, hop_cap_constant)?;
    Ok((theta.clone() * cn.bdgt_min / S::from_int(hb as i64), hb))
}

/// `ceil(len / Δ)` for every length.
pub fn scale_lengths<S: Scalar>(lengths: &[S], delta: &S) -> Vec<i64> {
    lengths.iter().map(|l| (l.clone() / delta.clone()).ceil_int()).collect()
}

/// Scale with Δ computed from the instance.
pub fn scale_instance<S: Scalar>(
    inst: &PcsInstance<S>,
    theta: &S,
    hop_cap_constant: usize,
) -> Result<ScaledInstance<S>> {
    let (delta, hb) = delta_and_hops(inst, theta, hop_cap_constant)?;
    Ok(scale_with_delta(inst, theta, delta, hb))
}

/// Scale with an explicit Δ and hop bound.
pub fn scale_with_delta<S: Scalar>(inst: &PcsInstance<S>, theta: &S, delta: S, hop_bound: usize) -> ScaledInstance<S> {
    let lengths: Vec<S> = inst.edges.iter().map(|e| e.cons.length.clone()).collect();
    let units = scale_lengths(&lengths, &delta);
    ScaledInstance {
        base: inst.clone(),
        delta,
        theta: theta.clone(),
        hop_bound,
        units,
    }
}

impl<S: Scalar> ScaledInstance<S> {
    pub fn scaled_length(&self, e: usize) -> S {
        S::from_int(self.units[e]) * self.delta.clone()
    }

    /// The base instance with every length replaced by its scaled value.
    pub fn scaled_instance(&self) -> PcsInstance<S> {
        let mut out = self.base.clone();
        for (e, edge) in out.edges.iter_mut().enumerate() {
            edge.cons.length = S::from_int(self.units[e]) * self.delta.clone();
        }
        out
    }

    /// `(t⁻[0], t⁺[0])` in units of Δ for the given demands.
    pub fn length_label_bounds(&self, demand_ids: &[usize]) -> (i64, i64) {
        let min_unit = self.units.iter().copied().min().unwrap_or(0).min(0);
        let t_minus = min_unit * self.hop_bound as i64;
        let bmax = demand_ids
            .iter()
            .map(|&d| self.base.demands[d].budget.length.abs())
            .reduce(crate::scalar::max_of)
            .unwrap_or_else(S::zero);
        let t_plus = (bmax * (S::one() + self.theta.clone()) / self.delta.clone()).ceil_int() + t_minus.abs();
        (t_minus, t_plus)
    }

    pub fn to_json_value(&self) -> Value {
        let mut v = instance_to_value(&self.scaled_instance());
        let obj = v.as_object_mut().expect("instance is an object");
        obj.insert("delta".into(), Value::String(self.delta.to_text()));
        obj.insert("theta".into(), Value::String(self.theta.to_text()));
        v
    }
}

/// A walk breaking one of the scaling bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingViolation {
    pub walk: usize,
    pub message: String,
}

/// Checks `RES ⪯ ScaledRes` and `ScaledRes[0] ≤ RES[0] + θ·Bdgt_min` for each walk.
///
/// Walks with `Hop-bound` or more edges are outside the guarantee and reported as violations.
pub fn check_scaling_claims<S: Scalar>(scaled: &ScaledInstance<S>, walks: &[Walk]) -> Result<Vec<ScalingViolation>> {
    let cn = condition_numbers(&scaled.base)?;
    let slack = scaled.theta.clone() * cn.bdgt_min;
    let scaled_inst = scaled.scaled_instance();
    let mut out = Vec::new();
    for (i, w) in walks.iter().enumerate() {
        if w.len() >= scaled.hop_bound {
            out.push(ScalingViolation {
                walk: i,
                message: format!("walk has {} edges, hop bound is {}", w.len(), scaled.hop_bound),
            });
            continue;
        }
        let res = walk_resource(w, &scaled.base)?;
        let sres = walk_resource(w, &scaled_inst)?;
        if !res.le(&sres) || res.res != sres.res {
            out.push(ScalingViolation {
                walk: i,
                message: "RES is not dominated by ScaledRes".into(),
            });
        }
        if sres.length > res.length.clone() + slack.clone() {
            out.push(ScalingViolation {
                walk: i,
                message: "scaled length exceeds RES[0] + θ·Bdgt_min".into(),
            });
        }
    }
    Ok(out)
}
