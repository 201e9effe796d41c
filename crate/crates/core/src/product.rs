//! Rooted product graph over (vertex, label, side) states.
//!
//! An L-side state `(u, I, L)` means "u reaches the root consuming exactly I"
//! (covering entries saturate at their floor); an R-side state `(v, J, R)`
//! means "the root reaches v consuming J". Each demand gets one source
//! terminal per label attached to `(s, I, L)` and one sink terminal per label
//! attached from `(t, J, R)`; a terminal pair is admissible when `I + J`
//! fits the budget.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{PcsError, Result};
use crate::labels::LabelSpace;
use crate::model::{theta_length_cap, PcsInstance, Walk};
use crate::rcsp;
use crate::scalar::Scalar;
use crate::scaling::ScaledInstance;

/// Default cap on product-graph vertices.
pub const DEFAULT_MAX_PRODUCT_VERTICES: usize = 10_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Side {
    L,
    R,
}

/// How resource label ranges are chosen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LabelBounds {
    /// Packing `[0, max budget]`, covering `[min budget, 0]` over the included demands.
    Tight,
    /// Packing `[0, τ]`, covering `[−τ, 0]`.
    Tau,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductConfig {
    pub max_vertices: usize,
    pub bounds: LabelBounds,
}

impl Default for ProductConfig {
    fn default() -> Self {
        ProductConfig {
            max_vertices: DEFAULT_MAX_PRODUCT_VERTICES,
            bounds: LabelBounds::Tight,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PNode {
    State { v: usize, label: usize, side: Side },
    Source { demand: usize, label: usize },
    Sink { demand: usize, label: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PEdge<S> {
    pub from: usize,
    pub to: usize,
    pub cost: S,
    /// Originating base edge; `None` for dummy and terminal edges.
    pub base: Option<usize>,
}

/// Length handling of a product graph.
#[derive(Clone, Debug, PartialEq)]
pub enum LengthRegime<S> {
    /// Integer lengths, one label unit per length unit.
    Integer,
    /// Lengths in units of `delta`; the relation uses the θ-relaxed length budget.
    Scaled { delta: S, theta: S },
}

#[derive(Clone, Debug)]
pub struct ProductGraph<S> {
    pub root: usize,
    pub n: usize,
    pub space: LabelSpace,
    pub regime: LengthRegime<S>,
    /// Instance demand ids represented, in order; terminal blocks follow this order.
    pub demand_ids: Vec<usize>,
    pub edges: Vec<PEdge<S>>,
    pub out: Vec<Vec<usize>>,
    pub inc: Vec<Vec<usize>>,
    pub dummy_edge: usize,
    /// Per included demand: length cap in label units and resource budgets.
    caps: Vec<(i64, Vec<i64>)>,
    pub demand_ends: Vec<(usize, usize)>,
}

impl<S: Scalar> ProductGraph<S> {
    pub fn labels(&self) -> usize {
        self.space.size()
    }

    pub fn node_count(&self) -> usize {
        2 * self.n * self.labels() + 2 * self.demand_ids.len() * self.labels()
    }

    pub fn state(&self, v: usize, label: usize, side: Side) -> usize {
        let s = match side {
            Side::L => 0,
            Side::R => 1,
        };
        (s * self.n + v) * self.labels() + label
    }

    pub fn source_terminal(&self, j: usize, label: usize) -> usize {
        2 * self.n * self.labels() + (2 * j) * self.labels() + label
    }

    pub fn sink_terminal(&self, j: usize, label: usize) -> usize {
        2 * self.n * self.labels() + (2 * j + 1) * self.labels() + label
    }

    pub fn zero_label(&self) -> usize {
        self.space
            .encode(&vec![0; self.space.dims()])
            .expect("zero label is valid")
    }

    pub fn root_l(&self) -> usize {
        self.state(self.root, self.zero_label(), Side::L)
    }

    pub fn root_r(&self) -> usize {
        self.state(self.root, self.zero_label(), Side::R)
    }

    pub fn node(&self, id: usize) -> PNode {
        let nl = self.labels();
        let states = 2 * self.n * nl;
        if id < states {
            let label = id % nl;
            let sv = id / nl;
            let side = if sv < self.n { Side::L } else { Side::R };
            PNode::State {
                v: sv % self.n,
                label,
                side,
            }
        } else {
            let t = id - states;
            let label = t % nl;
            let block = t / nl;
            if block.is_multiple_of(2) {
                PNode::Source {
                    demand: block / 2,
                    label,
                }
            } else {
                PNode::Sink {
                    demand: block / 2,
                    label,
                }
            }
        }
    }

    /// Number of resource-1..m configurations.
    pub fn config_count(&self) -> usize {
        (1..self.space.dims())
            .map(|i| (self.space.hi[i] - self.space.lo[i] + 1) as usize)
            .product()
    }

    /// Whether labels `I` (source) and `J` (sink) of included demand `j` are related.
    pub fn related(&self, j: usize, src_label: usize, snk_label: usize) -> bool {
        let a = self.space.decode(src_label);
        let b = self.space.decode(snk_label);
        let (cap0, res) = &self.caps[j];
        a[0] + b[0] <= *cap0 && (1..a.len()).all(|i| a[i] + b[i] <= res[i - 1])
    }

    /// Per-coordinate caps `[length cap, Bdgt[1..m]]` of included demand `j` in label units.
    pub fn label_caps(&self, j: usize) -> Vec<i64> {
        let (cap0, res) = &self.caps[j];
        let mut out = vec![*cap0];
        out.extend_from_slice(res);
        out
    }

    /// Nodes that reach `(r,0,L)`.
    pub fn reaches_root(&self) -> Vec<bool> {
        self.search(self.root_l(), true)
    }

    /// Nodes reachable from `(r,0,R)`.
    pub fn reached_from_root(&self) -> Vec<bool> {
        self.search(self.root_r(), false)
    }

    fn search(&self, start: usize, backward: bool) -> Vec<bool> {
        let mut seen = vec![false; self.node_count()];
        seen[start] = true;
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            let adj = if backward { &self.inc[x] } else { &self.out[x] };
            for &e in adj {
                let y = if backward { self.edges[e].from } else { self.edges[e].to };
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        seen
    }

    /// Related terminal label pairs whose terminals connect through the root, per included demand.
    pub fn connected_pairs(&self) -> Vec<Vec<(usize, usize)>> {
        let to_root = self.reaches_root();
        let from_root = self.reached_from_root();
        (0..self.demand_ids.len())
            .map(|j| {
                let srcs: Vec<usize> = (0..self.labels())
                    .filter(|&l| to_root[self.source_terminal(j, l)])
                    .collect();
                let snks: Vec<usize> = (0..self.labels())
                    .filter(|&l| from_root[self.sink_terminal(j, l)])
                    .collect();
                let mut pairs = Vec::new();
                for &a in &srcs {
                    for &b in &snks {
                        if self.related(j, a, b) {
                            pairs.push((a, b));
                        }
                    }
                }
                pairs
            })
            .collect()
    }

    /// Edge-list text: one line per state edge (side, u, I, v, J, cost).
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            if let (PNode::State { v: u, label: i, side }, PNode::State { v, label: j, .. }) =
                (self.node(e.from), self.node(e.to))
            {
                let _ = writeln!(
                    out,
                    "{:?} {} {:?} {} {:?} {}",
                    side,
                    u,
                    self.space.decode(i),
                    v,
                    self.space.decode(j),
                    e.cost.to_text()
                );
            }
        }
        out
    }
}

/// Base edges of a product edge path; dummy and terminal edges vanish.
pub fn project_to_base<S: Scalar>(pg: &ProductGraph<S>, path: &[usize]) -> Result<Walk> {
    for w in path.windows(2) {
        if pg.edges[w[0]].to != pg.edges[w[1]].from {
            return Err(PcsError::Internal("product path is not contiguous".into()));
        }
    }
    Ok(Walk::new(path.iter().filter_map(|&e| pg.edges[e].base).collect()))
}

struct Input<'a, S> {
    inst: &'a PcsInstance<S>,
    unit_lengths: Vec<i64>,
    length_lo: i64,
    length_hi: i64,
    regime: LengthRegime<S>,
}

/// Product graph for the integer regime over the given demands.
pub fn build_product_graph<S: Scalar>(
    inst: &PcsInstance<S>,
    root: usize,
    demand_ids: &[usize],
    cfg: &ProductConfig,
) -> Result<ProductGraph<S>> {
    if !inst.is_integer_regime() {
        return Err(PcsError::Parameter(
            "integer regime requires nonnegative integer lengths and integer length budgets".into(),
        ));
    }
    let unit_lengths = inst.edges.iter().map(|e| e.cons.length.floor_int()).collect();
    let bmax = demand_ids
        .iter()
        .map(|&d| inst.demands[d].budget.length.floor_int())
        .max()
        .unwrap_or(0)
        .max(0);
    build(
        Input {
            inst,
            unit_lengths,
            length_lo: 0,
            length_hi: bmax,
            regime: LengthRegime::Integer,
        },
        root,
        demand_ids,
        cfg,
    )
}

/// Product graph for the scaled regime; labels count multiples of Δ.
pub fn build_scaled_product_graph<S: Scalar>(
    scaled: &ScaledInstance<S>,
    root: usize,
    demand_ids: &[usize],
    cfg: &ProductConfig,
) -> Result<ProductGraph<S>> {
    let (lo, hi) = scaled.length_label_bounds(demand_ids);
    build(
        Input {
            inst: &scaled.base,
            unit_lengths: scaled.units.clone(),
            length_lo: lo,
            length_hi: hi,
            regime: LengthRegime::Scaled {
                delta: scaled.delta.clone(),
                theta: scaled.theta.clone(),
            },
        },
        root,
        demand_ids,
        cfg,
    )
}

fn build<S: Scalar>(
    input: Input<'_, S>,
    root: usize,
    demand_ids: &[usize],
    cfg: &ProductConfig,
) -> Result<ProductGraph<S>> {
    let inst = input.inst;
    if root >= inst.n {
        return Err(PcsError::Parameter(format!("root {root} outside 0..{}", inst.n)));
    }
    let m = inst.m();
    let mut lo = vec![input.length_lo];
    let mut hi = vec![input.length_hi];
    let mut clamp = vec![false];
    for i in 0..m {
        let budgets = demand_ids.iter().map(|&d| inst.demands[d].budget.res[i]);
        if inst.is_covering(i) {
            let l = match cfg.bounds {
                LabelBounds::Tight => budgets.min().unwrap_or(0).min(0),
                LabelBounds::Tau => -inst.tau,
            };
            lo.push(l);
            hi.push(0);
            clamp.push(true);
        } else {
            let h = match cfg.bounds {
                LabelBounds::Tight => budgets.max().unwrap_or(0).max(0),
                LabelBounds::Tau => inst.tau,
            };
            lo.push(0);
            hi.push(h);
            clamp.push(false);
        }
    }
    let space = LabelSpace::new(lo, hi, clamp);
    let nl = space.size();
    let size = nl.saturating_mul(2).saturating_mul(inst.n + demand_ids.len());
    if size > cfg.max_vertices {
        return Err(PcsError::ResourceLimit {
            size,
            limit: cfg.max_vertices,
        });
    }
    let caps = demand_ids
        .iter()
        .map(|&d| {
            let b = &inst.demands[d].budget;
            let cap0 = match &input.regime {
                LengthRegime::Integer => b.length.floor_int(),
                LengthRegime::Scaled { delta, theta } => {
                    (theta_length_cap(&b.length, theta) / delta.clone()).floor_int()
                }
            };
            (cap0, b.res.clone())
        })
        .collect();
    let mut pg = ProductGraph {
        root,
        n: inst.n,
        space,
        regime: input.regime.clone(),
        demand_ids: demand_ids.to_vec(),
        edges: Vec::new(),
        out: Vec::new(),
        inc: Vec::new(),
        dummy_edge: 0,
        caps,
        demand_ends: demand_ids
            .iter()
            .map(|&d| (inst.demands[d].source, inst.demands[d].target))
            .collect(),
    };
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<PEdge<S>> = Vec::new();
    let mut add = |from: usize, to: usize, cost: S, base: Option<usize>, edges: &mut Vec<PEdge<S>>| match index
        .get(&(from, to))
    {
        Some(&k) => {
            let cur = &mut edges[k];
            if cost < cur.cost {
                cur.cost = cost;
                cur.base = base;
            }
        }
        None => {
            index.insert((from, to), edges.len());
            edges.push(PEdge { from, to, cost, base });
        }
    };
    for (id, e) in inst.edges.iter().enumerate() {
        let mut delta = vec![input.unit_lengths[id]];
        delta.extend_from_slice(&e.cons.res);
        let table = pg.space.step_table(&delta);
        for (a, b) in table.iter().enumerate() {
            if let Some(b) = b {
                let b = *b as usize;
                // R side: the root reaches the tail with label a, the head with label b.
                add(
                    pg.state(e.tail, a, Side::R),
                    pg.state(e.head, b, Side::R),
                    e.cost.clone(),
                    Some(id),
                    &mut edges,
                );
                // L side: the head reaches the root with label a, the tail with label b.
                add(
                    pg.state(e.tail, b, Side::L),
                    pg.state(e.head, a, Side::L),
                    e.cost.clone(),
                    Some(id),
                    &mut edges,
                );
            }
        }
    }
    let dummy = edges.len();
    add(pg.root_l(), pg.root_r(), S::zero(), None, &mut edges);
    for (j, &d) in demand_ids.iter().enumerate() {
        let dm = &inst.demands[d];
        for l in 0..nl {
            add(
                pg.source_terminal(j, l),
                pg.state(dm.source, l, Side::L),
                S::zero(),
                None,
                &mut edges,
            );
            add(
                pg.state(dm.target, l, Side::R),
                pg.sink_terminal(j, l),
                S::zero(),
                None,
                &mut edges,
            );
        }
    }
    let count = pg.node_count();
    let mut out = vec![Vec::new(); count];
    let mut inc = vec![Vec::new(); count];
    for (k, e) in edges.iter().enumerate() {
        out[e.from].push(k);
        inc[e.to].push(k);
    }
    pg.edges = edges;
    pg.out = out;
    pg.inc = inc;
    pg.dummy_edge = dummy;
    Ok(pg)
}

/// Per-demand comparison of product connectivity with through-root feasibility.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub demand: usize,
    pub product_connected: bool,
    pub oracle_feasible: bool,
}

/// Compares product-graph terminal connectivity against the oracle for every demand.
pub fn equivalence_check<S: Scalar>(
    inst: &PcsInstance<S>,
    root: usize,
    cfg: &ProductConfig,
) -> Result<Vec<EquivalenceRow>> {
    let ids: Vec<usize> = (0..inst.demands.len()).collect();
    let pg = build_product_graph(inst, root, &ids, cfg)?;
    let pairs = pg.connected_pairs();
    Ok(ids
        .iter()
        .map(|&d| EquivalenceRow {
            demand: d,
            product_connected: !pairs[d].is_empty(),
            oracle_feasible: rcsp::through_root_witness(inst, &inst.demands[d], root, None, None).is_some(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Demand, Edge, ResourceVector};
    use crate::Q;

    fn q(n: i64) -> Q {
        Q::from_int(n)
    }

    fn single_edge() -> PcsInstance {
        PcsInstance {
            n: 2,
            tau: 2,
            packing: 1,
            covering: 0,
            edges: vec![Edge {
                tail: 0,
                head: 1,
                cost: q(3),
                cons: ResourceVector::new(q(1), vec![1]),
            }],
            demands: vec![Demand {
                source: 0,
                target: 1,
                budget: ResourceVector::new(q(2), vec![1]),
            }],
        }
    }

    #[test]
    fn vl_count_for_single_packing_resource() {
        let inst = single_edge();
        let cfg = ProductConfig {
            bounds: LabelBounds::Tau,
            ..ProductConfig::default()
        };
        let pg = build_product_graph(&inst, 1, &[0], &cfg).unwrap();
        assert_eq!(pg.config_count(), 3);
    }

    #[test]
    fn path_through_target_root() {
        let inst = single_edge();
        let pg = build_product_graph(&inst, 1, &[0], &ProductConfig::default()).unwrap();
        let label = pg.space.encode(&[1, 1]).unwrap();
        let src = pg.source_terminal(0, label);
        let s_state = pg.state(0, label, Side::L);
        let e0 = pg.out[src][0];
        assert_eq!(pg.edges[e0].to, s_state);
        let e1 = *pg.out[s_state]
            .iter()
            .find(|&&e| pg.edges[e].to == pg.root_l())
            .unwrap();
        let walk = project_to_base(&pg, &[e0, e1, pg.dummy_edge]).unwrap();
        assert_eq!(walk.edges, vec![0]);
        let pairs = pg.connected_pairs();
        assert!(pairs[0].contains(&(label, pg.zero_label())));
    }

    #[test]
    fn edges_follow_label_differences() {
        let inst = single_edge();
        let pg = build_product_graph(&inst, 0, &[0], &ProductConfig::default()).unwrap();
        let mut per_side = [0usize; 2];
        for e in pg.edges.iter().filter(|e| e.base.is_some()) {
            if let (PNode::State { label: a, side, .. }, PNode::State { label: b, .. }) =
                (pg.node(e.from), pg.node(e.to))
            {
                let (va, vb) = (pg.space.decode(a), pg.space.decode(b));
                let diff: Vec<i64> = match side {
                    Side::R => vb.iter().zip(&va).map(|(x, y)| x - y).collect(),
                    Side::L => va.iter().zip(&vb).map(|(x, y)| x - y).collect(),
                };
                assert_eq!(diff, vec![1, 1]);
                per_side[matches!(side, Side::R) as usize] += 1;
            }
        }
        // labels: length 0..=2, packing 0..=1; pairs (I, I + (1,1)) inside the box: (0,0)->(1,1), (1,0)->(2,1).
        assert_eq!(per_side, [2, 2]);
    }
}
