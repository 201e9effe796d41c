//! Routing-controlled spanners and generalized hopsets as packing-covering instances.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{PcsError, Result};
use crate::greedy::{solve_pcs, SolveConfig, SolveReport};
use crate::io::{json_error, RawNum};
use crate::junction::Mode;
use crate::model::{check_endpoints, Demand, Edge, PcsInstance, ResourceVector, Walk};
use crate::scalar::Scalar;
use crate::Q;

// ---------------------------------------------------------------------------
// Routing-controlled spanners

#[derive(Clone, Debug, PartialEq)]
pub struct RcsEdge<S = Q> {
    pub tail: usize,
    pub head: usize,
    pub cost: S,
    pub length: i64,
}

/// `ctrl[0]` is the length bound, `ctrl[1..=c]` ∈ {0,1} request a visit to a
/// must-visit group, `ctrl[c+1..]` ∈ {−1,0} forbid an avoid group.
#[derive(Clone, Debug, PartialEq)]
pub struct RcsDemand {
    pub source: usize,
    pub target: usize,
    pub ctrl: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RcsInstance<S = Q> {
    pub n: usize,
    pub edges: Vec<RcsEdge<S>>,
    /// Must-visit groups first (`must_visit` of them), then avoid groups.
    pub groups: Vec<Vec<usize>>,
    pub must_visit: usize,
    pub demands: Vec<RcsDemand>,
}

impl<S: Scalar> RcsInstance<S> {
    pub fn avoid(&self) -> usize {
        self.groups.len() - self.must_visit
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PcsError::InvalidInstance(m));
        if self.must_visit > self.groups.len() {
            return bad("more must-visit groups than groups".into());
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.tail >= self.n || e.head >= self.n {
                return bad(format!("edge {i} has an endpoint outside 0..{}", self.n));
            }
            if e.length <= 0 || e.cost < S::zero() {
                return bad(format!("edge {i} needs a positive length and nonnegative cost"));
            }
        }
        for (i, g) in self.groups.iter().enumerate() {
            if g.iter().any(|&v| v >= self.n) {
                return bad(format!("group {i} has a vertex outside 0..{}", self.n));
            }
        }
        let c = self.must_visit;
        for (i, d) in self.demands.iter().enumerate() {
            if d.source >= self.n || d.target >= self.n || d.ctrl.len() != self.groups.len() + 1 {
                return bad(format!("demand {i} is malformed"));
            }
            if d.ctrl[0] <= 0
                || d.ctrl[1..=c].iter().any(|&x| x != 0 && x != 1)
                || d.ctrl[c + 1..].iter().any(|&x| x != 0 && x != -1)
            {
                return bad(format!("demand {i} has control entries out of range"));
            }
        }
        Ok(())
    }
}

fn in_group(groups: &[Vec<usize>], g: usize, v: usize) -> bool {
    groups[g].contains(&v)
}

/// Length within `ctrl[0]`, every requested group visited, every forbidden group avoided.
/// The start vertex counts as visited.
pub fn is_routing_feasible<S: Scalar>(walk: &Walk, demand: &RcsDemand, rcs: &RcsInstance<S>) -> Result<bool> {
    let pcs_view = PcsInstance::<S> {
        n: rcs.n,
        tau: 0,
        packing: 0,
        covering: 0,
        edges: rcs
            .edges
            .iter()
            .map(|e| Edge {
                tail: e.tail,
                head: e.head,
                cost: e.cost.clone(),
                cons: ResourceVector::new(S::from_int(e.length), vec![]),
            })
            .collect(),
        demands: vec![],
    };
    check_endpoints(walk, demand.source, demand.target, &pcs_view)?;
    let verts = walk.vertices(demand.source, &pcs_view);
    let length: i64 = walk.edges.iter().map(|&e| rcs.edges[e].length).sum();
    if length > demand.ctrl[0] {
        return Ok(false);
    }
    let c = rcs.must_visit;
    for g in 0..rcs.groups.len() {
        let touched = verts.iter().any(|&v| in_group(&rcs.groups, g, v));
        if g < c && demand.ctrl[1 + g] == 1 && !touched {
            return Ok(false);
        }
        if g >= c && demand.ctrl[1 + g] == -1 && touched {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Shortest routing-feasible walk inside `allowed` edges: Dijkstra over
/// (vertex, visited-required-groups) states, never entering forbidden vertices.
pub fn rcs_shortest_feasible<S: Scalar>(
    rcs: &RcsInstance<S>,
    demand: &RcsDemand,
    allowed: Option<&[bool]>,
) -> Option<Walk> {
    let c = rcs.must_visit;
    let required: Vec<usize> = (0..c).filter(|&g| demand.ctrl[1 + g] == 1).collect();
    let forbidden = |v: usize| (c..rcs.groups.len()).any(|g| demand.ctrl[1 + g] == -1 && in_group(&rcs.groups, g, v));
    let mask_of = |v: usize| {
        required
            .iter()
            .enumerate()
            .filter(|(_, &g)| in_group(&rcs.groups, g, v))
            .fold(0usize, |m, (i, _)| m | (1 << i))
    };
    if forbidden(demand.source) {
        return None;
    }
    let full = (1usize << required.len()) - 1;
    let states = rcs.n << required.len();
    let id = |v: usize, m: usize| (v << required.len()) | m;
    let mut dist = vec![i64::MAX; states];
    let mut pred: Vec<Option<(usize, usize)>> = vec![None; states];
    let start = id(demand.source, mask_of(demand.source));
    dist[start] = 0;
    let mut heap = BinaryHeap::from([Reverse((0i64, start))]);
    let mut out = vec![Vec::new(); rcs.n];
    for (k, e) in rcs.edges.iter().enumerate() {
        if allowed.is_none_or(|a| a[k]) {
            out[e.tail].push(k);
        }
    }
    while let Some(Reverse((d, x))) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        let (v, m) = (x >> required.len(), x & full);
        for &k in &out[v] {
            let e = &rcs.edges[k];
            if forbidden(e.head) {
                continue;
            }
            let y = id(e.head, m | mask_of(e.head));
            let nd = d + e.length;
            if nd < dist[y] {
                dist[y] = nd;
                pred[y] = Some((x, k));
                heap.push(Reverse((nd, y)));
            }
        }
    }
    let goal = id(demand.target, full);
    if dist[goal] > demand.ctrl[0] {
        return None;
    }
    let mut edges = Vec::new();
    let mut x = goal;
    while let Some((p, k)) = pred[x] {
        edges.push(k);
        x = p;
    }
    edges.reverse();
    Some(Walk::new(edges))
}

/// Reduced instance. Resources: one packing entry per avoid group (edges
/// entering the group consume 1), then one covering entry per must-visit group
/// (edges entering it consume −1). Edge ids are unchanged.
pub fn rcs_to_pcs<S: Scalar>(rcs: &RcsInstance<S>) -> Result<PcsInstance<S>> {
    rcs.validate()?;
    let c = rcs.must_visit;
    let p = rcs.avoid();
    let max_avoid = rcs.groups[c..].iter().map(|g| g.len() as i64).max().unwrap_or(0);
    let tau = (((c as i64) + 1) * max_avoid).max(1);
    let edges = rcs
        .edges
        .iter()
        .map(|e| {
            let mut res = Vec::with_capacity(c + p);
            for g in c..c + p {
                res.push(in_group(&rcs.groups, g, e.head) as i64);
            }
            for g in 0..c {
                res.push(-(in_group(&rcs.groups, g, e.head) as i64));
            }
            Edge {
                tail: e.tail,
                head: e.head,
                cost: e.cost.clone(),
                cons: ResourceVector::new(S::from_int(e.length), res),
            }
        })
        .collect();
    let mut demands = Vec::with_capacity(rcs.demands.len());
    for (index, d) in rcs.demands.iter().enumerate() {
        let mut res = Vec::with_capacity(c + p);
        for g in c..c + p {
            let inside = in_group(&rcs.groups, g, d.source);
            if d.ctrl[1 + g] == -1 {
                if inside {
                    return Err(PcsError::InfeasibleDemand {
                        index,
                        source_vertex: d.source,
                        target: d.target,
                    });
                }
                res.push(0);
            } else {
                res.push((c as i64 + 1) * rcs.groups[g].len() as i64);
            }
        }
        for g in 0..c {
            let need = d.ctrl[1 + g] == 1 && !in_group(&rcs.groups, g, d.source);
            res.push(if need { -1 } else { 0 });
        }
        demands.push(Demand {
            source: d.source,
            target: d.target,
            budget: ResourceVector::new(S::from_int(d.ctrl[0]), res),
        });
    }
    let inst = PcsInstance {
        n: rcs.n,
        tau,
        packing: p,
        covering: c,
        edges,
        demands,
    };
    inst.validate()?;
    Ok(inst)
}

/// Solves the reduced instance and checks every witness against the routing rules.
pub fn solve_rcs<S: Scalar>(rcs: &RcsInstance<S>, cfg: &SolveConfig<S>) -> Result<SolveReport<S>> {
    let inst = rcs_to_pcs(rcs)?;
    inst.validate_feasible()?;
    let report = solve_pcs(&inst, &Mode::Integer, cfg)?;
    for (i, (w, d)) in report.witnesses.iter().zip(&rcs.demands).enumerate() {
        if !is_routing_feasible(w, d, rcs)? {
            return Err(PcsError::Internal(format!(
                "demand {i}: witness is not routing-feasible"
            )));
        }
    }
    Ok(report)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawRcsEdge {
    pub u: usize,
    pub v: usize,
    pub cost: RawNum,
    pub len: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawRcsDemand {
    pub s: usize,
    pub t: usize,
    pub ctrl: Vec<i64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawRcs {
    pub n: usize,
    pub edges: Vec<RawRcsEdge>,
    pub groups: Vec<Vec<usize>>,
    pub must_visit: usize,
    pub demands: Vec<RawRcsDemand>,
}

pub fn parse_rcs<S: Scalar>(text: &str) -> Result<RcsInstance<S>> {
    let raw: RawRcs = serde_json::from_str(text).map_err(json_error)?;
    let edges = raw
        .edges
        .iter()
        .enumerate()
        .map(|(i, e)| {
            Ok(RcsEdge {
                tail: e.u,
                head: e.v,
                cost: e.cost.scalar(&format!("edges[{i}].cost"))?,
                length: e.len,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let rcs = RcsInstance {
        n: raw.n,
        edges,
        groups: raw.groups,
        must_visit: raw.must_visit,
        demands: raw
            .demands
            .into_iter()
            .map(|d| RcsDemand {
                source: d.s,
                target: d.t,
                ctrl: d.ctrl,
            })
            .collect(),
    };
    rcs.validate()?;
    Ok(rcs)
}

pub fn rcs_to_json<S: Scalar>(rcs: &RcsInstance<S>) -> String {
    let raw = RawRcs {
        n: rcs.n,
        edges: rcs
            .edges
            .iter()
            .map(|e| RawRcsEdge {
                u: e.tail,
                v: e.head,
                cost: RawNum::from_scalar(&e.cost),
                len: e.length,
            })
            .collect(),
        groups: rcs.groups.clone(),
        must_visit: rcs.must_visit,
        demands: rcs
            .demands
            .iter()
            .map(|d| RawRcsDemand {
                s: d.source,
                t: d.target,
                ctrl: d.ctrl.clone(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&raw).expect("rcs serializes")
}

// ---------------------------------------------------------------------------
// Hopsets

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopDemand {
    pub source: usize,
    pub target: usize,
    pub dist: i64,
    pub beta: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopsetInstance {
    pub n: usize,
    /// `(tail, head, length)` with positive integer lengths.
    pub edges: Vec<(usize, usize, i64)>,
    pub demands: Vec<HopDemand>,
}

impl HopsetInstance {
    pub fn validate(&self) -> Result<()> {
        for (i, &(u, v, l)) in self.edges.iter().enumerate() {
            if u >= self.n || v >= self.n || l <= 0 {
                return Err(PcsError::InvalidInstance(format!("edge {i} is malformed")));
            }
        }
        for (i, d) in self.demands.iter().enumerate() {
            if d.source >= self.n || d.target >= self.n || d.dist <= 0 || d.beta == 0 {
                return Err(PcsError::InvalidInstance(format!(
                    "demand {i} needs in-range endpoints and positive dist and beta"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClosureEdge {
    pub tail: usize,
    pub head: usize,
    /// Shortest-path distance in the original graph.
    pub weight: i64,
    /// 0 when the pair is an original edge, 1 otherwise.
    pub cost: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightedClosure {
    pub n: usize,
    pub edges: Vec<ClosureEdge>,
}

/// All-pairs shortest distances (Floyd–Warshall) as a closure edge list in `(tail, head)` order.
pub fn weighted_transitive_closure(n: usize, edges: &[(usize, usize, i64)]) -> WeightedClosure {
    let mut d: Vec<Vec<Option<i64>>> = vec![vec![None; n]; n];
    let mut original = vec![vec![false; n]; n];
    for &(u, v, l) in edges {
        if u != v {
            original[u][v] = true;
            d[u][v] = Some(d[u][v].map_or(l, |x: i64| x.min(l)));
        }
    }
    for k in 0..n {
        for i in 0..n {
            let Some(a) = d[i][k] else { continue };
            for j in 0..n {
                if let Some(b) = d[k][j] {
                    if i != j && d[i][j].is_none_or(|x| a + b < x) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if let Some(w) = d[i][j] {
                out.push(ClosureEdge {
                    tail: i,
                    head: j,
                    weight: w,
                    cost: if original[i][j] { 0 } else { 1 },
                });
            }
        }
    }
    WeightedClosure { n, edges: out }
}

/// Reduced instance over the closure: length `d_G(u,v)`, one packing hop
/// resource consuming 1 per edge, budgets `(Dist, β)`.
pub fn hopset_to_pcs<S: Scalar>(hs: &HopsetInstance) -> Result<(PcsInstance<S>, WeightedClosure)> {
    hs.validate()?;
    let closure = weighted_transitive_closure(hs.n, &hs.edges);
    let tau = hs.demands.iter().map(|d| d.beta as i64).max().unwrap_or(1).max(1);
    let inst = PcsInstance {
        n: hs.n,
        tau,
        packing: 1,
        covering: 0,
        edges: closure
            .edges
            .iter()
            .map(|e| Edge {
                tail: e.tail,
                head: e.head,
                cost: S::from_int(e.cost),
                cons: ResourceVector::new(S::from_int(e.weight), vec![1]),
            })
            .collect(),
        demands: hs
            .demands
            .iter()
            .map(|d| Demand {
                source: d.source,
                target: d.target,
                budget: ResourceVector::new(S::from_int(d.dist), vec![d.beta as i64]),
            })
            .collect(),
    };
    inst.validate()?;
    inst.validate_feasible()?;
    Ok((inst, closure))
}

/// Per demand: a path in `G ∪ H` with at most β hops and length at most Dist exists.
/// `added` lists closure edges by `(tail, head)`; their length is the closure weight.
pub fn verify_hopset(hs: &HopsetInstance, added: &[(usize, usize)]) -> Vec<bool> {
    let closure = weighted_transitive_closure(hs.n, &hs.edges);
    let weight: HashMap<(usize, usize), i64> = closure.edges.iter().map(|e| ((e.tail, e.head), e.weight)).collect();
    let mut arcs: Vec<(usize, usize, i64)> = hs.edges.clone();
    for &(u, v) in added {
        if let Some(&w) = weight.get(&(u, v)) {
            arcs.push((u, v, w));
        }
    }
    hs.demands
        .iter()
        .map(|d| {
            let mut dist: Vec<Option<i64>> = vec![None; hs.n];
            dist[d.source] = Some(0);
            for _ in 0..d.beta {
                let mut next = dist.clone();
                for &(u, v, l) in &arcs {
                    if let Some(a) = dist[u] {
                        if next[v].is_none_or(|x| a + l < x) {
                            next[v] = Some(a + l);
                        }
                    }
                }
                dist = next;
            }
            dist[d.target].is_some_and(|x| x <= d.dist)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct HopsetSolution<S> {
    pub report: SolveReport<S>,
    /// Closure-only edges selected, as `(tail, head)`.
    pub hopset: Vec<(usize, usize)>,
    pub verified: Vec<bool>,
}

pub fn solve_hopset<S: Scalar>(hs: &HopsetInstance, cfg: &SolveConfig<S>) -> Result<HopsetSolution<S>> {
    let (inst, closure) = hopset_to_pcs::<S>(hs)?;
    let report = solve_pcs(&inst, &Mode::Integer, cfg)?;
    let hopset: Vec<(usize, usize)> = report
        .edges
        .iter()
        .map(|&e| &closure.edges[e])
        .filter(|e| e.cost == 1)
        .map(|e| (e.tail, e.head))
        .collect();
    let verified = verify_hopset(hs, &hopset);
    if let Some(i) = verified.iter().position(|ok| !ok) {
        return Err(PcsError::Internal(format!("hopset misses demand {i}")));
    }
    Ok(HopsetSolution {
        report,
        hopset,
        verified,
    })
}

/// Smallest hopset by exhaustive search over closure-only edge subsets of increasing size.
pub fn exact_min_hopset(hs: &HopsetInstance, limit: usize) -> Result<Vec<(usize, usize)>> {
    let closure = weighted_transitive_closure(hs.n, &hs.edges);
    let cands: Vec<(usize, usize)> = closure
        .edges
        .iter()
        .filter(|e| e.cost == 1)
        .map(|e| (e.tail, e.head))
        .collect();
    let mut checked = 0usize;
    for size in 0..=cands.len() {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            checked += 1;
            if checked > limit {
                return Err(PcsError::ResourceLimit { size: checked, limit });
            }
            let set: Vec<(usize, usize)> = idx.iter().map(|&i| cands[i]).collect();
            if verify_hopset(hs, &set).iter().all(|&ok| ok) {
                return Ok(set);
            }
            // Next combination in lexicographic order.
            let mut i = size;
            while i > 0 && idx[i - 1] == cands.len() - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Err(PcsError::InfeasibleDemand {
        index: verify_hopset(hs, &cands).iter().position(|ok| !ok).unwrap_or(0),
        source_vertex: 0,
        target: 0,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawHopDemand {
    pub s: usize,
    pub t: usize,
    pub dist: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawHopset {
    pub n: usize,
    pub beta: usize,
    /// `[u, v, length]` triples.
    pub edges: Vec<(usize, usize, i64)>,
    pub demands: Vec<RawHopDemand>,
}

pub fn parse_hopset(text: &str) -> Result<HopsetInstance> {
    let raw: RawHopset = serde_json::from_str(text).map_err(json_error)?;
    let hs = HopsetInstance {
        n: raw.n,
        edges: raw.edges,
        demands: raw
            .demands
            .into_iter()
            .map(|d| HopDemand {
                source: d.s,
                target: d.t,
                dist: d.dist,
                beta: d.beta.unwrap_or(raw.beta),
            })
            .collect(),
    };
    hs.validate()?;
    Ok(hs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closure_of_triangle() {
        let c = weighted_transitive_closure(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 5)]);
        let e02 = c.edges.iter().find(|e| (e.tail, e.head) == (0, 2)).unwrap();
        assert_eq!((e02.weight, e02.cost), (2, 0));
        let e01 = c.edges.iter().find(|e| (e.tail, e.head) == (0, 1)).unwrap();
        assert_eq!((e01.weight, e01.cost), (1, 0));
        assert!(!c.edges.iter().any(|e| (e.tail, e.head) == (2, 0)));
    }

    #[test]
    fn path_hopset_needs_shortcut() {
        // P4: 0->1->2->3, beta 2, exact distances.
        let hs = HopsetInstance {
            n: 4,
            edges: vec![(0, 1, 1), (1, 2, 1), (2, 3, 1)],
            demands: vec![HopDemand {
                source: 0,
                target: 3,
                dist: 3,
                beta: 2,
            }],
        };
        assert_eq!(verify_hopset(&hs, &[]), vec![false]);
        let best = exact_min_hopset(&hs, 10_000).unwrap();
        assert_eq!(best.len(), 1);
        let sol = solve_hopset::<Q>(&hs, &SolveConfig::default()).unwrap();
        assert!(sol.verified.iter().all(|&ok| ok));
        assert_eq!(sol.hopset.len(), 1);
    }

    #[test]
    fn forbidden_group_blocks_walk() {
        let e = |t, h| RcsEdge {
            tail: t,
            head: h,
            cost: Q::from_int(1),
            length: 1,
        };
        let rcs = RcsInstance {
            n: 3,
            edges: vec![e(0, 1), e(1, 2)],
            groups: vec![vec![1]],
            must_visit: 0,
            demands: vec![RcsDemand {
                source: 0,
                target: 2,
                ctrl: vec![5, -1],
            }],
        };
        let w = Walk::new(vec![0, 1]);
        assert!(!is_routing_feasible(&w, &rcs.demands[0], &rcs).unwrap());
        assert!(rcs_shortest_feasible(&rcs, &rcs.demands[0], None).is_none());
        let inst = rcs_to_pcs(&rcs).unwrap();
        assert!(crate::rcsp::feasible_witness(&inst, &inst.demands[0], None, None).is_none());
    }
}
