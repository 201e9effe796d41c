//! Resource-constrained shortest walks over the (vertex × configuration) state graph.
//!
//! Configurations hold resources 1..m only: packing entries live in `[0, τ]`
//! (a step above τ is dropped), covering entries in `[−τ, 0]` with `−τ`
//! absorbing. Lengths are minimized by Bellman-Ford relaxation; the state
//! graph has no negative cycle whenever the base graph has none.

use serde::Serialize;

use crate::error::{PcsError, Result};
use crate::labels::LabelSpace;
use crate::model::{theta_length_cap, Demand, PcsInstance, Walk};
use crate::scalar::Scalar;

/// Configuration space of an instance.
pub struct ConfigSpace;

impl ConfigSpace {
    pub fn for_instance<S: Scalar>(inst: &PcsInstance<S>) -> LabelSpace {
        let m = inst.m();
        let mut lo = Vec::with_capacity(m);
        let mut hi = Vec::with_capacity(m);
        let mut clamp = Vec::with_capacity(m);
        for i in 0..m {
            if inst.is_covering(i) {
                lo.push(-inst.tau);
                hi.push(0);
                clamp.push(true);
            } else {
                lo.push(0);
                hi.push(inst.tau);
                clamp.push(false);
            }
        }
        LabelSpace::new(lo, hi, clamp)
    }
}

/// Minimal walk length per (vertex, configuration) from one source.
#[derive(Clone, Debug)]
pub struct LabelTable<S> {
    pub source: usize,
    pub space: LabelSpace,
    /// `dist[v * C + c]`; `None` when unreachable.
    pub dist: Vec<Option<S>>,
    /// Edge and previous state of the relaxation that set `dist`.
    pub pred: Vec<Option<(usize, usize)>>,
}

impl<S: Scalar> LabelTable<S> {
    pub fn get(&self, v: usize, config: &[i64]) -> Option<&S> {
        let c = self.space.encode(config)?;
        self.dist[v * self.space.size() + c].as_ref()
    }
}

/// State graph of an instance restricted to an optional edge mask.
pub(crate) struct Engine<'a, S> {
    inst: &'a PcsInstance<S>,
    pub space: LabelSpace,
    trans: Vec<Vec<Option<u32>>>,
    /// Outgoing allowed edges per vertex, ascending by id.
    out: Vec<Vec<usize>>,
}

impl<'a, S: Scalar> Engine<'a, S> {
    pub fn new(inst: &'a PcsInstance<S>, allowed: Option<&[bool]>) -> Self {
        let space = ConfigSpace::for_instance(inst);
        let trans = inst.edges.iter().map(|e| space.step_table(&e.cons.res)).collect();
        let mut out = vec![Vec::new(); inst.n];
        for (id, e) in inst.edges.iter().enumerate() {
            if allowed.is_none_or(|a| a[id]) {
                out[e.tail].push(id);
            }
        }
        Engine {
            inst,
            space,
            trans,
            out,
        }
    }

    fn c(&self) -> usize {
        self.space.size()
    }

    fn states(&self) -> usize {
        self.inst.n * self.c()
    }

    fn zero_config(&self) -> usize {
        self.space
            .encode(&vec![0; self.space.dims()])
            .expect("zero configuration is valid")
    }

    fn next(&self, state: usize, e: usize) -> Option<usize> {
        let c = state % self.c();
        self.trans[e][c].map(|nc| self.inst.edges[e].head * self.c() + nc as usize)
    }

    /// One Bellman-Ford round: `min(D, relax(D))`.
    fn relax_round(&self, d: &[Option<S>]) -> (Vec<Option<S>>, Vec<Option<(usize, usize)>>, bool) {
        let mut nd = d.to_vec();
        let mut pred = vec![None; d.len()];
        let mut changed = false;
        for v in 0..self.inst.n {
            for c in 0..self.c() {
                let x = v * self.c() + c;
                let Some(dx) = &d[x] else { continue };
                for &e in &self.out[v] {
                    if let Some(y) = self.next(x, e) {
                        let cand = dx.clone() + self.inst.edges[e].cons.length.clone();
                        let better = match &nd[y] {
                            None => true,
                            Some(cur) => cand < *cur,
                        };
                        if better {
                            nd[y] = Some(cand);
                            pred[y] = Some((e, x));
                            changed = true;
                        }
                    }
                }
            }
        }
        (nd, pred, changed)
    }

    pub fn table_from(&self, source: usize) -> LabelTable<S> {
        let mut d = vec![None; self.states()];
        d[source * self.c() + self.zero_config()] = Some(S::zero());
        let mut pred = vec![None; self.states()];
        for _ in 0..=self.states() {
            let (nd, np, changed) = self.relax_round(&d);
            for (i, p) in np.into_iter().enumerate() {
                if p.is_some() {
                    pred[i] = p;
                }
            }
            d = nd;
            if !changed {
                break;
            }
        }
        LabelTable {
            source,
            space: self.space.clone(),
            dist: d,
            pred,
        }
    }

    /// Minimum-length walk from `source` into an accepting state; among those,
    /// fewest edges, then lexicographically smallest edge ids.
    pub fn best_walk(&self, source: usize, accept: &dyn Fn(usize) -> bool) -> Option<(Walk, S, usize)> {
        let start = source * self.c() + self.zero_config();
        let mut d = vec![None; self.states()];
        d[start] = Some(S::zero());
        let best_accept = |d: &[Option<S>]| -> Option<S> {
            let mut best: Option<S> = None;
            for (x, v) in d.iter().enumerate() {
                if let Some(v) = v {
                    if accept(x) && best.as_ref().is_none_or(|b| v < b) {
                        best = Some(v.clone());
                    }
                }
            }
            best
        };
        let mut per_hop = vec![best_accept(&d)];
        for _ in 0..self.states() {
            let (nd, _, changed) = self.relax_round(&d);
            if !changed {
                break;
            }
            d = nd;
            per_hop.push(best_accept(&d));
        }
        let target_len = per_hop.last().cloned().flatten()?;
        let hops = per_hop
            .iter()
            .position(|b| b.as_ref() == Some(&target_len))
            .expect("final value occurs");
        // back[k][x]: minimum length from x into an accepting state within k edges.
        let mut back: Vec<Vec<Option<S>>> = Vec::with_capacity(hops + 1);
        back.push(
            (0..self.states())
                .map(|x| if accept(x) { Some(S::zero()) } else { None })
                .collect(),
        );
        for k in 1..=hops {
            let prev = &back[k - 1];
            let mut cur = prev.clone();
            for x in 0..self.states() {
                let v = x / self.c();
                for &e in &self.out[v] {
                    if let Some(y) = self.next(x, e) {
                        if let Some(by) = &prev[y] {
                            let cand = by.clone() + self.inst.edges[e].cons.length.clone();
                            if cur[x].as_ref().is_none_or(|c| cand < *c) {
                                cur[x] = Some(cand);
                            }
                        }
                    }
                }
            }
            back.push(cur);
        }
        let mut x = start;
        let mut prefix = S::zero();
        let mut edges = Vec::with_capacity(hops);
        for j in 0..hops {
            let k = hops - j;
            let v = x / self.c();
            let mut chosen = None;
            for &e in &self.out[v] {
                if let Some(y) = self.next(x, e) {
                    if let Some(by) = &back[k - 1][y] {
                        let total = prefix.clone() + self.inst.edges[e].cons.length.clone() + by.clone();
                        if total == target_len {
                            chosen = Some((e, y));
                            break;
                        }
                    }
                }
            }
            let (e, y) = chosen?;
            prefix = prefix + self.inst.edges[e].cons.length.clone();
            edges.push(e);
            x = y;
        }
        debug_assert!(accept(x));
        Some((Walk::new(edges), target_len, x % self.c()))
    }

    /// Fewest edges of a walk from `source` reaching an accepting state within `cap` length.
    fn min_hops(&self, source: usize, accept: &dyn Fn(usize, &S) -> bool, max_hops: usize) -> Option<usize> {
        let mut d = vec![None; self.states()];
        d[source * self.c() + self.zero_config()] = Some(S::zero());
        let ok = |d: &[Option<S>]| {
            d.iter()
                .enumerate()
                .any(|(x, v)| v.as_ref().is_some_and(|v| accept(x, v)))
        };
        if ok(&d) {
            return Some(0);
        }
        for h in 1..=max_hops {
            let (nd, _, changed) = self.relax_round(&d);
            if !changed {
                return None;
            }
            d = nd;
            if ok(&d) {
                return Some(h);
            }
        }
        None
    }
}

fn demand_accept<'b, S: Scalar>(engine: &'b Engine<'_, S>, demand: &'b Demand<S>) -> impl Fn(usize) -> bool + 'b {
    let c = engine.c();
    move |x: usize| {
        x / c == demand.target && {
            let cfg = engine.space.decode(x % c);
            cfg.iter().zip(&demand.budget.res).all(|(a, b)| a <= b)
        }
    }
}

fn length_cap<S: Scalar>(demand: &Demand<S>, theta: Option<&S>) -> S {
    match theta {
        Some(t) => theta_length_cap(&demand.budget.length, t),
        None => demand.budget.length.clone(),
    }
}

/// Minimum walk length per (vertex, configuration) from `source`.
pub fn shortest_lengths_from<S: Scalar>(
    inst: &PcsInstance<S>,
    source: usize,
    allowed: Option<&[bool]>,
) -> LabelTable<S> {
    Engine::new(inst, allowed).table_from(source)
}

/// A feasible (θ-feasible when `theta` is set) walk for the demand, if any.
pub fn feasible_witness<S: Scalar>(
    inst: &PcsInstance<S>,
    demand: &Demand<S>,
    allowed: Option<&[bool]>,
    theta: Option<&S>,
) -> Option<Walk> {
    let engine = Engine::new(inst, allowed);
    let accept = demand_accept(&engine, demand);
    let (walk, len, _) = engine.best_walk(demand.source, &accept)?;
    if len <= length_cap(demand, theta) {
        Some(walk)
    } else {
        None
    }
}

/// Fewest edges of any feasible walk for the demand, searching at most `max_hops` edges.
pub fn min_feasible_hops<S: Scalar>(inst: &PcsInstance<S>, demand: &Demand<S>, max_hops: usize) -> Option<usize> {
    let engine = Engine::new(inst, None);
    let accept = demand_accept(&engine, demand);
    let cap = demand.budget.length.clone();
    engine.min_hops(demand.source, &|x, len| accept(x) && *len <= cap, max_hops)
}

/// Per-demand verification outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DemandCheck {
    pub feasible: bool,
    pub witness: Option<Walk>,
}

pub(crate) fn edge_mask<S: Scalar>(inst: &PcsInstance<S>, subgraph: &[usize]) -> Result<Vec<bool>> {
    let mut mask = vec![false; inst.edges.len()];
    for &e in subgraph {
        if e >= mask.len() {
            return Err(PcsError::UnknownEdge(e));
        }
        mask[e] = true;
    }
    Ok(mask)
}

/// Checks every demand of `inst` inside the edge set `subgraph`.
pub fn verify_solution<S: Scalar>(
    inst: &PcsInstance<S>,
    subgraph: &[usize],
    theta: Option<&S>,
) -> Result<Vec<DemandCheck>> {
    let mask = edge_mask(inst, subgraph)?;
    Ok(inst
        .demands
        .iter()
        .map(|d| {
            let witness = feasible_witness(inst, d, Some(&mask), theta);
            DemandCheck {
                feasible: witness.is_some(),
                witness,
            }
        })
        .collect())
}

/// Feasible walk `source ⇝ root ⇝ target` inside the mask, split at a visit of `root`.
///
/// Equivalent to searching the graph made of two copies of `G` glued at the
/// root. Among minimum-length splits the smallest (first-half, second-half)
/// configuration pair is used.
pub fn through_root_witness<S: Scalar>(
    inst: &PcsInstance<S>,
    demand: &Demand<S>,
    root: usize,
    allowed: Option<&[bool]>,
    theta: Option<&S>,
) -> Option<Walk> {
    let engine = Engine::new(inst, allowed);
    through_root_with(&engine, demand, root, theta)
}

pub(crate) fn through_root_with<S: Scalar>(
    engine: &Engine<'_, S>,
    demand: &Demand<S>,
    root: usize,
    theta: Option<&S>,
) -> Option<Walk> {
    let c = engine.c();
    let first = engine.table_from(demand.source);
    let second = engine.table_from(root);
    let cap = length_cap(demand, theta);
    let mut best: Option<(S, usize, usize)> = None;
    for c1 in 0..c {
        let Some(l1) = &first.dist[root * c + c1] else { continue };
        let v1 = engine.space.decode(c1);
        for c2 in 0..c {
            let Some(l2) = &second.dist[demand.target * c + c2] else {
                continue;
            };
            let v2 = engine.space.decode(c2);
            let sum: Vec<i64> = v1.iter().zip(&v2).map(|(a, b)| a + b).collect();
            let Some(cfg) = engine.space.clamp(&sum) else { continue };
            if !cfg.iter().zip(&demand.budget.res).all(|(a, b)| a <= b) {
                continue;
            }
            let total = l1.clone() + l2.clone();
            if total > cap {
                continue;
            }
            if best.as_ref().is_none_or(|(b, _, _)| total < *b) {
                best = Some((total, c1, c2));
            }
        }
    }
    let (_, c1, c2) = best?;
    let (w1, _, _) = engine.best_walk(demand.source, &|x| x == root * c + c1)?;
    let (w2, _, _) = engine.best_walk(root, &|x| x == demand.target * c + c2)?;
    Some(w1.concat(&w2))
}

/// Through-root check for several demands sharing one edge mask.
pub fn verify_through_root<S: Scalar>(
    inst: &PcsInstance<S>,
    demands: &[usize],
    root: usize,
    subgraph: &[usize],
    theta: Option<&S>,
) -> Result<Vec<Option<Walk>>> {
    let mask = edge_mask(inst, subgraph)?;
    let engine = Engine::new(inst, Some(&mask));
    Ok(demands
        .iter()
        .map(|&d| through_root_with(&engine, &inst.demands[d], root, theta))
        .collect())
}
