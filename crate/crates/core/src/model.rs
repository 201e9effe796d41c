//! Instance data model, feasibility predicates, condition numbers and the hop bound.

use serde::{Deserialize, Serialize};

use crate::error::{PcsError, Result};
use crate::rcsp;
use crate::scalar::Scalar;
use crate::Q;

/// Consumption or budget vector: a length entry plus `m` integer resources.
#[derive(Clone, Debug, PartialEq)]
pub struct ResourceVector<S = Q> {
    pub length: S,
    pub res: Vec<i64>,
}

impl<S: Scalar> ResourceVector<S> {
    pub fn new(length: S, res: Vec<i64>) -> Self {
        ResourceVector { length, res }
    }

    pub fn zero(m: usize) -> Self {
        ResourceVector {
            length: S::zero(),
            res: vec![0; m],
        }
    }

    pub fn m(&self) -> usize {
        self.res.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        ResourceVector {
            length: self.length.clone() + other.length.clone(),
            res: self.res.iter().zip(&other.res).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        self.length = self.length.clone() + other.length.clone();
        for (a, b) in self.res.iter_mut().zip(&other.res) {
            *a += b;
        }
    }

    /// Componentwise `self ⪯ other`.
    pub fn le(&self, other: &Self) -> bool {
        self.length <= other.length && self.res_le(other)
    }

    /// Componentwise comparison of entries 1..m only.
    pub fn res_le(&self, other: &Self) -> bool {
        self.res.iter().zip(&other.res).all(|(a, b)| a <= b)
    }
}

/// Directed edge with cost and consumption.
#[derive(Clone, Debug, PartialEq)]
pub struct Edge<S = Q> {
    pub tail: usize,
    pub head: usize,
    pub cost: S,
    pub cons: ResourceVector<S>,
}

/// Ordered demand pair with its budget.
#[derive(Clone, Debug, PartialEq)]
pub struct Demand<S = Q> {
    pub source: usize,
    pub target: usize,
    pub budget: ResourceVector<S>,
}

/// Edge-id sequence; repeats allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Walk {
    pub edges: Vec<usize>,
}

impl Walk {
    pub fn new(edges: Vec<usize>) -> Self {
        Walk { edges }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn concat(&self, other: &Walk) -> Walk {
        let mut edges = self.edges.clone();
        edges.extend_from_slice(&other.edges);
        Walk { edges }
    }

    /// Vertex sequence starting at `start`.
    pub fn vertices<S: Scalar>(&self, start: usize, inst: &PcsInstance<S>) -> Vec<usize> {
        let mut out = vec![start];
        for &e in &self.edges {
            out.push(inst.edges[e].head);
        }
        out
    }
}

/// Packing-covering spanner instance.
///
/// Resources `1..=packing` are packing resources, the following `covering`
/// entries are covering resources.
#[derive(Clone, Debug, PartialEq)]
pub struct PcsInstance<S = Q> {
    pub n: usize,
    pub tau: i64,
    pub packing: usize,
    pub covering: usize,
    pub edges: Vec<Edge<S>>,
    pub demands: Vec<Demand<S>>,
}

/// Negative-length severity and budget spread of an instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionNumbers<S = Q> {
    pub eta: S,
    pub xi: S,
    pub bdgt_min: S,
    pub bdgt_max: S,
    pub min_length: S,
    pub max_length: S,
}

impl<S: Scalar> PcsInstance<S> {
    pub fn m(&self) -> usize {
        self.packing + self.covering
    }

    pub fn is_covering(&self, resource: usize) -> bool {
        resource >= self.packing
    }

    /// Structural validation: ranges, costs and the no-negative-cycle condition.
    pub fn validate(&self) -> Result<()> {
        let m = self.m();
        if self.tau < 0 {
            return Err(PcsError::InvalidInstance("tau must be nonnegative".into()));
        }
        let check_vec = |v: &ResourceVector<S>, what: &str| -> Result<()> {
            if v.res.len() != m {
                return Err(PcsError::InvalidInstance(format!(
                    "{what} has {} resource entries, expected {m}",
                    v.res.len()
                )));
            }
            for (i, &x) in v.res.iter().enumerate() {
                let ok = if self.is_covering(i) {
                    (-self.tau..=0).contains(&x)
                } else {
                    (0..=self.tau).contains(&x)
                };
                if !ok {
                    return Err(PcsError::InvalidInstance(format!(
                        "{what} resource {} = {x} outside its range for tau = {}",
                        i + 1,
                        self.tau
                    )));
                }
            }
            Ok(())
        };
        for (id, e) in self.edges.iter().enumerate() {
            if e.tail >= self.n || e.head >= self.n {
                return Err(PcsError::InvalidInstance(format!(
                    "edge {id} has an endpoint outside 0..{}",
                    self.n
                )));
            }
            if e.cost < S::zero() {
                return Err(PcsError::InvalidInstance(format!("edge {id} has negative cost")));
            }
            check_vec(&e.cons, &format!("edge {id}"))?;
        }
        for (id, d) in self.demands.iter().enumerate() {
            if d.source >= self.n || d.target >= self.n {
                return Err(PcsError::InvalidInstance(format!(
                    "demand {id} has an endpoint outside 0..{}",
                    self.n
                )));
            }
            check_vec(&d.budget, &format!("demand {id} budget"))?;
        }
        if has_negative_cycle(self) {
            return Err(PcsError::InvalidInstance("graph has a negative-length cycle".into()));
        }
        Ok(())
    }

    /// Validation plus the requirement that every demand has a feasible walk.
    pub fn validate_feasible(&self) -> Result<()> {
        self.validate()?;
        for (index, d) in self.demands.iter().enumerate() {
            if rcsp::feasible_witness(self, d, None, None).is_none() {
                return Err(PcsError::InfeasibleDemand {
                    index,
                    source_vertex: d.source,
                    target: d.target,
                });
            }
        }
        Ok(())
    }

    /// All edge lengths are nonnegative integers and all length budgets are integers.
    pub fn is_integer_regime(&self) -> bool {
        self.edges
            .iter()
            .all(|e| e.cons.length.is_integer() && e.cons.length >= S::zero())
            && self.demands.iter().all(|d| d.budget.length.is_integer())
    }

    pub fn edge_cost_sum<'a>(&self, edges: impl IntoIterator<Item = &'a usize>) -> S {
        edges
            .into_iter()
            .fold(S::zero(), |acc, &e| acc + self.edges[e].cost.clone())
    }

    /// Same instance with a different demand list.
    pub fn with_demands(&self, demands: Vec<Demand<S>>) -> Self {
        PcsInstance {
            demands,
            ..self.clone()
        }
    }
}

fn has_negative_cycle<S: Scalar>(inst: &PcsInstance<S>) -> bool {
    let mut dist = vec![S::zero(); inst.n];
    for _ in 0..=inst.n {
        let mut changed = false;
        for e in &inst.edges {
            let cand = dist[e.tail].clone() + e.cons.length.clone();
            if cand < dist[e.head] {
                dist[e.head] = cand;
                changed = true;
            }
        }
        if !changed {
            return false;
        }
    }
    true
}

/// Componentwise sum of edge consumptions along `walk`.
pub fn walk_resource<S: Scalar>(walk: &Walk, inst: &PcsInstance<S>) -> Result<ResourceVector<S>> {
    let mut acc = ResourceVector::zero(inst.m());
    for &e in &walk.edges {
        let edge = inst.edges.get(e).ok_or(PcsError::UnknownEdge(e))?;
        acc.add_assign(&edge.cons);
    }
    Ok(acc)
}

/// Checks that `walk` is a contiguous walk from `source` to `target`.
pub fn check_endpoints<S: Scalar>(walk: &Walk, source: usize, target: usize, inst: &PcsInstance<S>) -> Result<()> {
    let mut at = source;
    for &e in &walk.edges {
        let edge = inst.edges.get(e).ok_or(PcsError::UnknownEdge(e))?;
        if edge.tail != at {
            return Err(PcsError::Contract(format!(
                "edge {e} starts at {} but the walk is at {at}",
                edge.tail
            )));
        }
        at = edge.head;
    }
    if at != target {
        return Err(PcsError::Contract(format!("walk ends at {at}, expected {target}")));
    }
    Ok(())
}

/// True iff the walk's resource sum is within the budget componentwise.
pub fn is_feasible<S: Scalar>(walk: &Walk, demand: &Demand<S>, inst: &PcsInstance<S>) -> Result<bool> {
    check_endpoints(walk, demand.source, demand.target, inst)?;
    Ok(walk_resource(walk, inst)?.le(&demand.budget))
}

/// Length threshold `Bdgt[0]·(1 + θ·sign(Bdgt[0]))`.
pub fn theta_length_cap<S: Scalar>(budget_length: &S, theta: &S) -> S {
    let sign = budget_length.signum();
    budget_length.clone() * (S::one() + theta.clone() * sign)
}

/// θ-feasibility: relaxes only the length entry.
pub fn is_theta_feasible<S: Scalar>(walk: &Walk, demand: &Demand<S>, inst: &PcsInstance<S>, theta: &S) -> Result<bool> {
    if *theta <= S::zero() {
        return Err(PcsError::Parameter("theta must be positive".into()));
    }
    check_endpoints(walk, demand.source, demand.target, inst)?;
    let r = walk_resource(walk, inst)?;
    Ok(r.length <= theta_length_cap(&demand.budget.length, theta) && r.res_le(&demand.budget))
}

/// Condition numbers η and ξ plus the extreme budgets and lengths.
pub fn condition_numbers<S: Scalar>(inst: &PcsInstance<S>) -> Result<ConditionNumbers<S>> {
    if inst.demands.is_empty() {
        return Err(PcsError::DivisionUndefined("instance has no demands".into()));
    }
    let abs_budgets: Vec<S> = inst.demands.iter().map(|d| d.budget.length.abs()).collect();
    let bdgt_min = abs_budgets.iter().cloned().reduce(crate::scalar::min_of).unwrap();
    let bdgt_max = abs_budgets.iter().cloned().reduce(crate::scalar::max_of).unwrap();
    if bdgt_min.is_zero() {
        return Err(PcsError::DivisionUndefined("minimum |Bdgt[0]| is zero".into()));
    }
    let lengths = inst.edges.iter().map(|e| e.cons.length.clone());
    let min_length = lengths.clone().reduce(crate::scalar::min_of).unwrap_or_else(S::zero);
    let max_length = lengths.reduce(crate::scalar::max_of).unwrap_or_else(S::zero);
    let neg = crate::scalar::min_of(min_length.clone(), S::zero()).abs();
    Ok(ConditionNumbers {
        eta: neg / bdgt_min.clone(),
        xi: bdgt_max.clone() / bdgt_min.clone(),
        bdgt_min,
        bdgt_max,
        min_length,
        max_length,
    })
}

/// Default constant `c` in the hop cap `c·n²·|configs|`.
pub const DEFAULT_HOP_CAP_CONSTANT: usize = 2;

/// Smallest `H` such that every demand has a feasible walk with fewer than `H` edges.
pub fn hop_bound<S: Scalar>(inst: &PcsInstance<S>, cap_constant: usize) -> Result<usize> {
    let configs = rcsp::ConfigSpace::for_instance(inst).size();
    let cap = cap_constant.max(1) * inst.n.max(1) * inst.n.max(1) * configs;
    let mut worst = 0usize;
    for d in &inst.demands {
        match rcsp::min_feasible_hops(inst, d, cap) {
            Some(h) => worst = worst.max(h),
            None => return Err(PcsError::HopCapExceeded { cap }),
        }
    }
    Ok(worst + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Scalar;

    fn q(n: i64) -> Q {
        Q::from_int(n)
    }

    fn chain() -> PcsInstance {
        // s=0 -> a=1 -> t=2 plus a direct long edge s -> t.
        PcsInstance {
            n: 3,
            tau: 1,
            packing: 1,
            covering: 0,
            edges: vec![
                Edge {
                    tail: 0,
                    head: 1,
                    cost: q(1),
                    cons: ResourceVector::new(q(1), vec![1]),
                },
                Edge {
                    tail: 1,
                    head: 2,
                    cost: q(1),
                    cons: ResourceVector::new(q(1), vec![0]),
                },
                Edge {
                    tail: 0,
                    head: 2,
                    cost: q(5),
                    cons: ResourceVector::new(q(3), vec![0]),
                },
            ],
            demands: vec![Demand {
                source: 0,
                target: 2,
                budget: ResourceVector::new(q(2), vec![1]),
            }],
        }
    }

    #[test]
    fn walk_resource_sums_edges() {
        let inst = chain();
        assert_eq!(walk_resource(&Walk::default(), &inst).unwrap(), ResourceVector::zero(1));
        let r = walk_resource(&Walk::new(vec![0, 1]), &inst).unwrap();
        assert_eq!(r, ResourceVector::new(q(2), vec![1]));
        assert_eq!(walk_resource(&Walk::new(vec![9]), &inst), Err(PcsError::UnknownEdge(9)));
    }

    #[test]
    fn feasibility_is_componentwise() {
        let inst = chain();
        let d = &inst.demands[0];
        assert!(is_feasible(&Walk::new(vec![0, 1]), d, &inst).unwrap());
        assert!(!is_feasible(&Walk::new(vec![2]), d, &inst).unwrap());
        assert!(is_feasible(&Walk::new(vec![0]), d, &inst).is_err());
    }

    #[test]
    fn theta_cap_follows_budget_sign() {
        let theta = Q::from_ratio(1, 10);
        assert_eq!(theta_length_cap(&q(10), &theta), q(11));
        assert_eq!(theta_length_cap(&q(-10), &theta), q(-9));
        assert_eq!(theta_length_cap(&q(0), &theta), q(0));
    }

    #[test]
    fn hop_bound_is_strict() {
        let inst = chain();
        assert_eq!(hop_bound(&inst, DEFAULT_HOP_CAP_CONSTANT).unwrap(), 3);
        let mut direct = inst.clone();
        direct.demands[0].budget = ResourceVector::new(q(3), vec![1]);
        assert_eq!(hop_bound(&direct, DEFAULT_HOP_CAP_CONSTANT).unwrap(), 2);
    }

    #[test]
    fn negative_cycle_rejected() {
        let mut inst = chain();
        inst.edges.push(Edge {
            tail: 2,
            head: 0,
            cost: q(0),
            cons: ResourceVector::new(q(-3), vec![0]),
        });
        assert!(inst.validate().is_err());
    }
}
