//! Label-cover LP on the joined layered graph, representative pruning,
//! bucketing, and randomized rounding to a junction tree.

use std::collections::{BTreeSet, HashMap};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{PcsError, Result};
use crate::height::{dijkstra, trace_path, Direction, JoinedGraph, LayeredGraph};
use crate::lp::{self, LinearProgram, LpBackend, Sense};
use crate::product::ProductGraph;
use crate::scalar::Scalar;

/// Terminal of one half: a product terminal node with its label.
#[derive(Clone, Debug, PartialEq)]
pub struct TerminalRef {
    /// Included-demand index in the product graph.
    pub demand: usize,
    pub label: usize,
    pub product: usize,
    pub layered: usize,
}

/// LP over `x_e` (layered edges), `y` (relation pairs), `z` (terminals) and per-terminal flows.
#[derive(Clone, Debug)]
pub struct LabelCoverLp<S> {
    pub lp: LinearProgram<S>,
    /// `(demand, source terminal index, sink terminal index)` per relation pair.
    pub pairs: Vec<(usize, usize, usize)>,
    pub sources: Vec<TerminalRef>,
    pub sinks: Vec<TerminalRef>,
    pub y_var: Vec<usize>,
    pub z_src_var: Vec<usize>,
    pub z_snk_var: Vec<usize>,
    /// LP column of each up-half layered edge (`None` when no terminal can use it).
    pub x_up_var: Vec<Option<usize>>,
    pub x_down_var: Vec<Option<usize>>,
}

/// Edges usable by a terminal: forward-reachable in the up half, backward-reachable in the down half.
fn usable_edges<S: Scalar>(g: &LayeredGraph<S>, start: usize) -> Vec<usize> {
    let mut seen = vec![false; g.psi.len()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut edges = Vec::new();
    while let Some(v) = stack.pop() {
        let adj = match g.direction {
            Direction::Up => &g.out[v],
            Direction::Down => &g.inc[v],
        };
        for &e in adj {
            edges.push(e);
            let w = match g.direction {
                Direction::Up => g.edges[e].to,
                Direction::Down => g.edges[e].from,
            };
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Builds the label-cover LP for the related terminal pairs `pairs[j]` of each included demand.
pub fn build_lp<S: Scalar>(
    pg: &ProductGraph<S>,
    jg: &JoinedGraph<S>,
    pairs: &[Vec<(usize, usize)>],
) -> Result<LabelCoverLp<S>> {
    if pairs.iter().all(|p| p.is_empty()) {
        return Err(PcsError::Contract("no related terminal pair at this root".into()));
    }
    let mut lp = LinearProgram::new();
    let mut sources: Vec<TerminalRef> = Vec::new();
    let mut sinks: Vec<TerminalRef> = Vec::new();
    let mut src_index: HashMap<usize, usize> = HashMap::new();
    let mut snk_index: HashMap<usize, usize> = HashMap::new();
    let mut flat = Vec::new();
    for (j, list) in pairs.iter().enumerate() {
        for &(a, b) in list {
            let sp = pg.source_terminal(j, a);
            let tp = pg.sink_terminal(j, b);
            let si = *src_index.entry(sp).or_insert_with(|| {
                sources.push(TerminalRef {
                    demand: j,
                    label: a,
                    product: sp,
                    layered: jg.up.terminal_vertex[&sp],
                });
                sources.len() - 1
            });
            let ti = *snk_index.entry(tp).or_insert_with(|| {
                sinks.push(TerminalRef {
                    demand: j,
                    label: b,
                    product: tp,
                    layered: jg.down.terminal_vertex[&tp],
                });
                sinks.len() - 1
            });
            flat.push((j, si, ti));
        }
    }
    let y_var: Vec<usize> = flat
        .iter()
        .map(|(j, s, t)| lp.add_var(S::zero(), format!("y_{j}_{s}_{t}")))
        .collect();
    let z_src_var: Vec<usize> = (0..sources.len())
        .map(|i| lp.add_var(S::zero(), format!("zs_{i}")))
        .collect();
    let z_snk_var: Vec<usize> = (0..sinks.len())
        .map(|i| lp.add_var(S::zero(), format!("zt_{i}")))
        .collect();

    lp.add_row(y_var.iter().map(|&v| (v, S::one())).collect(), Sense::Eq, S::one());
    let mut src_rows: Vec<Vec<(usize, S)>> = vec![Vec::new(); sources.len()];
    let mut snk_rows: Vec<Vec<(usize, S)>> = vec![Vec::new(); sinks.len()];
    for (k, &(_, s, t)) in flat.iter().enumerate() {
        src_rows[s].push((y_var[k], S::one()));
        snk_rows[t].push((y_var[k], S::one()));
    }
    for (i, mut row) in src_rows.into_iter().enumerate() {
        row.push((z_src_var[i], -S::one()));
        lp.add_row(row, Sense::Le, S::zero());
    }
    for (i, mut row) in snk_rows.into_iter().enumerate() {
        row.push((z_snk_var[i], -S::one()));
        lp.add_row(row, Sense::Le, S::zero());
    }

    let x_up_var = add_flow_systems(&mut lp, &jg.up, &sources, &z_src_var, "u");
    let x_down_var = add_flow_systems(&mut lp, &jg.down, &sinks, &z_snk_var, "d");
    Ok(LabelCoverLp {
        lp,
        pairs: flat,
        sources,
        sinks,
        y_var,
        z_src_var,
        z_snk_var,
        x_up_var,
        x_down_var,
    })
}

/// Capacity columns of one half and one conservation system per terminal.
/// A flow on an edge used by a single terminal is the capacity column itself.
fn add_flow_systems<S: Scalar>(
    lp: &mut LinearProgram<S>,
    g: &LayeredGraph<S>,
    terminals: &[TerminalRef],
    z_var: &[usize],
    tag: &str,
) -> Vec<Option<usize>> {
    let usable: Vec<Vec<usize>> = terminals.iter().map(|t| usable_edges(g, t.layered)).collect();
    let mut users = vec![0usize; g.edges.len()];
    for list in &usable {
        for &e in list {
            users[e] += 1;
        }
    }
    let x_var: Vec<Option<usize>> = g
        .edges
        .iter()
        .enumerate()
        .map(|(e, le)| (users[e] > 0).then(|| lp.add_var(le.cost.clone(), format!("x{tag}_{e}"))))
        .collect();
    for (ti, list) in usable.iter().enumerate() {
        let mut flow: HashMap<usize, usize> = HashMap::new();
        for &e in list {
            let x = x_var[e].expect("usable edges carry a capacity column");
            let f = if users[e] == 1 {
                x
            } else {
                let f = lp.add_var(S::zero(), format!("f{tag}_{ti}_{e}"));
                lp.add_row(vec![(f, S::one()), (x, -S::one())], Sense::Le, S::zero());
                f
            };
            flow.insert(e, f);
        }
        // Net flow away from the terminal side at every vertex except the root.
        let mut rows: HashMap<usize, Vec<(usize, S)>> = HashMap::new();
        for &e in list {
            let le = &g.edges[e];
            let (near, far) = match g.direction {
                Direction::Up => (le.from, le.to),
                Direction::Down => (le.to, le.from),
            };
            rows.entry(near).or_default().push((flow[&e], S::one()));
            rows.entry(far).or_default().push((flow[&e], -S::one()));
        }
        let start = terminals[ti].layered;
        rows.entry(start).or_default();
        let mut verts: Vec<usize> = rows.keys().copied().filter(|&v| v != g.root).collect();
        verts.sort_unstable();
        for v in verts {
            let mut row = rows.remove(&v).unwrap_or_default();
            if v == start {
                row.push((z_var[ti], -S::one()));
            }
            lp.add_row(row, Sense::Eq, S::zero());
        }
    }
    x_var
}

/// Repaired LP values: `y ≥ 0` summing to one, `z` dominating its marginals, `x ≥ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FractionalSolution<S> {
    pub y: Vec<S>,
    pub z_src: Vec<S>,
    pub z_snk: Vec<S>,
    pub x_up: Vec<S>,
    pub x_down: Vec<S>,
    pub objective: S,
    /// Largest LP residual of the raw solver output.
    pub residual: S,
}

pub fn solve_lp<S: Scalar>(lcp: &LabelCoverLp<S>, backend: LpBackend) -> Result<FractionalSolution<S>> {
    let sol = lp::solve(&lcp.lp, backend)?;
    let residual = lcp.lp.max_violation(&sol.values);
    let v = |i: usize| {
        let x = sol.values[i].clone();
        if x < S::zero() {
            S::zero()
        } else {
            x
        }
    };
    let mut y: Vec<S> = lcp.y_var.iter().map(|&i| v(i)).collect();
    if !S::is_exact() {
        for t in y.iter_mut() {
            if *t <= S::tolerance() {
                *t = S::zero();
            }
        }
    }
    let total = y.iter().fold(S::zero(), |a, b| a + b.clone());
    if total <= S::zero() {
        return Err(PcsError::Lp("normalization mass vanished".into()));
    }
    for t in y.iter_mut() {
        *t = t.clone() / total.clone();
    }
    let mut z_src: Vec<S> = lcp.z_src_var.iter().map(|&i| v(i)).collect();
    let mut z_snk: Vec<S> = lcp.z_snk_var.iter().map(|&i| v(i)).collect();
    let (ms, mt) = marginals(lcp, &y);
    for (z, m) in z_src.iter_mut().zip(ms).chain(z_snk.iter_mut().zip(mt)) {
        if *z < m {
            *z = m;
        }
    }
    let xs = |vars: &[Option<usize>]| -> Vec<S> { vars.iter().map(|o| o.map_or(S::zero(), v)).collect() };
    Ok(FractionalSolution {
        y,
        z_src,
        z_snk,
        x_up: xs(&lcp.x_up_var),
        x_down: xs(&lcp.x_down_var),
        objective: sol.objective,
        residual,
    })
}

/// Relation-incident y mass of every source and sink terminal.
pub fn marginals<S: Scalar>(lcp: &LabelCoverLp<S>, y: &[S]) -> (Vec<S>, Vec<S>) {
    let mut ms = vec![S::zero(); lcp.sources.len()];
    let mut mt = vec![S::zero(); lcp.sinks.len()];
    for (k, &(_, s, t)) in lcp.pairs.iter().enumerate() {
        ms[s] = ms[s].clone() + y[k].clone();
        mt[t] = mt[t].clone() + y[k].clone();
    }
    (ms, mt)
}

/// A terminal of one demand with its label vector and masses.
#[derive(Clone, Debug, PartialEq)]
pub struct Representative<S> {
    pub id: usize,
    pub values: Vec<i64>,
    /// Relation-incident y mass.
    pub mass: S,
    pub z: S,
}

/// Sorts by entry `c`, then by the full label, then by id.
pub fn sort_representatives<S: Scalar>(set: &mut [Representative<S>], c: usize) {
    set.sort_by(|a, b| {
        a.values[c]
            .cmp(&b.values[c])
            .then_with(|| a.values.cmp(&b.values))
            .then_with(|| a.id.cmp(&b.id))
    });
}

/// Smallest `q` such that the mass with entry `c` at most `q` reaches `lambda`.
pub fn median_one<S: Scalar>(set: &[Representative<S>], lambda: &S, c: usize) -> Result<i64> {
    let mut sorted = set.to_vec();
    sort_representatives(&mut sorted, c);
    let mut cum = S::zero();
    for r in &sorted {
        cum = cum + r.mass.clone();
        if cum >= *lambda {
            return Ok(r.values[c]);
        }
    }
    Err(PcsError::Contract(format!(
        "median mass deficit: total {} below {}",
        cum.to_text(),
        lambda.to_text()
    )))
}

/// Source and sink medians of coordinate `c` at mass level `lambda`.
pub fn median_consumption<S: Scalar>(
    sources: &[Representative<S>],
    sinks: &[Representative<S>],
    lambda: &S,
    c: usize,
) -> Result<(i64, i64)> {
    if *lambda <= S::zero() {
        return Err(PcsError::Parameter("median level must be positive".into()));
    }
    Ok((median_one(sources, lambda, c)?, median_one(sinks, lambda, c)?))
}

/// Surviving representatives of one demand.
#[derive(Clone, Debug, PartialEq)]
pub struct PrunedDemand<S> {
    pub demand: usize,
    pub gamma: S,
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
    /// Per coordinate: (source threshold, sink threshold).
    pub thresholds: Vec<(i64, i64)>,
    /// Per coordinate: the medians bounding the admissible threshold range.
    pub medians: Vec<(i64, i64)>,
    pub order: Vec<usize>,
    pub source_z: S,
    pub sink_z: S,
    /// Both survivor z-masses reach `gamma / 2^(m+1)`.
    pub mass_bound_met: bool,
}

fn mass_at_most<S: Scalar>(set: &[&Representative<S>], c: usize, q: i64) -> S {
    set.iter()
        .filter(|r| r.values[c] <= q)
        .fold(S::zero(), |a, r| a + r.mass.clone())
}

/// One balanced split of coordinate `c`; `None` when no admissible level exists.
fn split_coordinate<S: Scalar>(
    src: &[&Representative<S>],
    snk: &[&Representative<S>],
    cap: i64,
    c: usize,
) -> Option<((i64, i64), (i64, i64))> {
    let owned_s: Vec<Representative<S>> = src.iter().map(|r| (*r).clone()).collect();
    let owned_t: Vec<Representative<S>> = snk.iter().map(|r| (*r).clone()).collect();
    let total_s = owned_s.iter().fold(S::zero(), |a, r| a + r.mass.clone());
    let total_t = owned_t.iter().fold(S::zero(), |a, r| a + r.mass.clone());
    let top = if total_s < total_t { total_s } else { total_t };
    if top <= S::zero() {
        return None;
    }
    let mut levels: Vec<S> = Vec::new();
    for set in [&owned_s, &owned_t] {
        let mut sorted = set.clone();
        sort_representatives(&mut sorted, c);
        let mut cum = S::zero();
        for r in &sorted {
            cum = cum + r.mass.clone();
            if cum > S::zero() && cum <= top {
                levels.push(cum.clone());
            }
        }
    }
    levels.push(top);
    levels.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    levels.dedup();
    let mut chosen = None;
    for lambda in &levels {
        let (ms, mt) = median_consumption(&owned_s, &owned_t, lambda, c).ok()?;
        if ms + mt <= cap {
            chosen = Some((ms, mt));
            break;
        }
    }
    let (ms, mt) = chosen?;
    let (lo, hi) = (ms, cap - mt);
    let mut cands: BTreeSet<i64> = BTreeSet::new();
    cands.insert(lo);
    for r in src {
        if r.values[c] >= lo && r.values[c] <= hi {
            cands.insert(r.values[c]);
        }
    }
    for r in snk {
        let v = cap - r.values[c];
        if v >= lo && v <= hi {
            cands.insert(v);
        }
    }
    let mut best: Option<(S, i64)> = None;
    for v in cands {
        let kept = mass_at_most(src, c, v) + mass_at_most(snk, c, cap - v);
        if best.as_ref().is_none_or(|(b, _)| kept > *b) {
            best = Some((kept, v));
        }
    }
    let (_, v) = best?;
    Some(((v, cap - v), (ms, mt)))
}

fn prune_in_order<S: Scalar>(
    sources: &[Representative<S>],
    sinks: &[Representative<S>],
    caps: &[i64],
    order: &[usize],
) -> (Vec<usize>, Vec<usize>, Vec<(i64, i64)>, Vec<(i64, i64)>) {
    let dims = caps.len();
    let mut src: Vec<&Representative<S>> = sources.iter().collect();
    let mut snk: Vec<&Representative<S>> = sinks.iter().collect();
    let mut thresholds = vec![(0, 0); dims];
    let mut medians = vec![(0, 0); dims];
    for &c in order {
        match split_coordinate(&src, &snk, caps[c], c) {
            Some(((vs, vt), m)) => {
                src.retain(|r| r.values[c] <= vs);
                snk.retain(|r| r.values[c] <= vt);
                thresholds[c] = (vs, vt);
                medians[c] = m;
            }
            None => {
                return (Vec::new(), Vec::new(), thresholds, medians);
            }
        }
    }
    let mut s: Vec<usize> = src.iter().map(|r| r.id).collect();
    let mut t: Vec<usize> = snk.iter().map(|r| r.id).collect();
    s.sort_unstable();
    t.sort_unstable();
    (s, t, thresholds, medians)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in (0..=p.len()).rev() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Prunes one demand's representatives so every surviving source/sink pair
/// fits `caps` coordinatewise.
///
/// Each coordinate is split at a threshold pair `(v, cap − v)` inside the
/// range allowed by the source and sink medians at the largest admissible
/// mass level, choosing the `v` that keeps the most mass. The natural
/// coordinate order is tried first; other orders only if it leaves less than
/// `gamma / 2^(m+1)` survivor z-mass on a side.
pub fn prune<S: Scalar>(
    demand: usize,
    sources: &[Representative<S>],
    sinks: &[Representative<S>],
    caps: &[i64],
) -> PrunedDemand<S> {
    let gamma = sources.iter().fold(S::zero(), |a, r| a + r.mass.clone());
    let m = caps.len() - 1;
    let bound = gamma.clone() / S::pow2(m as i64 + 1);
    let zsum = |set: &[Representative<S>], ids: &[usize]| {
        set.iter()
            .filter(|r| ids.binary_search(&r.id).is_ok())
            .fold(S::zero(), |a, r| a + r.z.clone())
    };
    let mut best: Option<PrunedDemand<S>> = None;
    let natural: Vec<usize> = (0..caps.len()).collect();
    let mut orders = vec![natural.clone()];
    orders.extend(permutations(caps.len()).into_iter().filter(|p| *p != natural));
    for order in orders {
        let (s, t, thresholds, medians) = prune_in_order(sources, sinks, caps, &order);
        let source_z = zsum(sources, &s);
        let sink_z = zsum(sinks, &t);
        let met = source_z >= bound && sink_z >= bound;
        let score = if source_z < sink_z {
            source_z.clone()
        } else {
            sink_z.clone()
        };
        let better = match &best {
            None => true,
            Some(b) => {
                let bs = if b.source_z < b.sink_z { &b.source_z } else { &b.sink_z };
                score > *bs
            }
        };
        if better {
            best = Some(PrunedDemand {
                demand,
                gamma: gamma.clone(),
                sources: s,
                sinks: t,
                thresholds,
                medians,
                order,
                source_z,
                sink_z,
                mass_bound_met: met,
            });
        }
        if best.as_ref().is_some_and(|b| b.mass_bound_met) {
            break;
        }
    }
    best.expect("at least one coordinate order")
}

/// Representatives of every included demand from an LP solution.
pub fn representatives<S: Scalar>(
    pg: &ProductGraph<S>,
    lcp: &LabelCoverLp<S>,
    sol: &FractionalSolution<S>,
) -> Vec<(Vec<Representative<S>>, Vec<Representative<S>>)> {
    let (ms, mt) = marginals(lcp, &sol.y);
    let mut out = vec![(Vec::new(), Vec::new()); pg.demand_ids.len()];
    for (i, t) in lcp.sources.iter().enumerate() {
        out[t.demand].0.push(Representative {
            id: i,
            values: pg.space.decode(t.label),
            mass: ms[i].clone(),
            z: sol.z_src[i].clone(),
        });
    }
    for (i, t) in lcp.sinks.iter().enumerate() {
        out[t.demand].1.push(Representative {
            id: i,
            values: pg.space.decode(t.label),
            mass: mt[i].clone(),
            z: sol.z_snk[i].clone(),
        });
    }
    out
}

/// Prunes every demand with positive relation mass.
pub fn prune_all<S: Scalar>(
    pg: &ProductGraph<S>,
    lcp: &LabelCoverLp<S>,
    sol: &FractionalSolution<S>,
) -> Vec<PrunedDemand<S>> {
    representatives(pg, lcp, sol)
        .into_iter()
        .enumerate()
        .filter(|(_, (s, _))| s.iter().any(|r| r.mass > S::zero()))
        .map(|(j, (s, t))| prune(j, &s, &t, &pg.label_caps(j)))
        .collect()
}

/// Bucket of `gamma`: the `i ≥ 0` with `2^(−i−1) < gamma ≤ 2^(−i)`.
pub fn bucket_index<S: Scalar>(gamma: &S) -> usize {
    let mut i = 0usize;
    while *gamma <= S::pow2(-(i as i64) - 1) {
        i += 1;
    }
    i
}

#[derive(Clone, Debug, PartialEq)]
pub struct Bucketing<S> {
    pub i_star: usize,
    /// Indices into the pruned list.
    pub members: Vec<usize>,
    pub mass: S,
    /// `mass ≥ 1 / (2(⌈log2 |D|⌉ + 1))`.
    pub guarantee_met: bool,
    pub x_up: Vec<S>,
    pub x_down: Vec<S>,
}

fn ceil_log2(n: usize) -> i64 {
    let mut k = 0;
    while (1usize << k) < n {
        k += 1;
    }
    k
}

/// Picks the heaviest γ-bucket (smaller index on ties) and scales capacities
/// by `2^(m+1) · 2^(i*+1)`, clamped at one.
pub fn bucket_and_scale<S: Scalar>(pruned: &[PrunedDemand<S>], m: usize, sol: &FractionalSolution<S>) -> Bucketing<S> {
    let mut mass: Vec<S> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for (k, p) in pruned.iter().enumerate() {
        let i = bucket_index(&p.gamma);
        if mass.len() <= i {
            mass.resize(i + 1, S::zero());
            members.resize(i + 1, Vec::new());
        }
        mass[i] = mass[i].clone() + p.gamma.clone();
        members[i].push(k);
    }
    let mut i_star = 0;
    for i in 1..mass.len() {
        if mass[i] > mass[i_star] {
            i_star = i;
        }
    }
    let d = pruned.len().max(1);
    let need = S::one() / S::from_int(2 * (ceil_log2(d) + 1));
    let factor = S::pow2(m as i64 + 1) * S::pow2(i_star as i64 + 1);
    let scale = |xs: &[S]| -> Vec<S> {
        xs.iter()
            .map(|x| {
                let v = factor.clone() * x.clone();
                if v > S::one() {
                    S::one()
                } else {
                    v
                }
            })
            .collect()
    };
    let total = mass.get(i_star).cloned().unwrap_or_else(S::zero);
    Bucketing {
        i_star,
        members: members.get(i_star).cloned().unwrap_or_default(),
        guarantee_met: total >= need,
        mass: total,
        x_up: scale(&sol.x_up),
        x_down: scale(&sol.x_down),
    }
}

/// Per-demand groups in layered vertex ids.
#[derive(Clone, Debug, PartialEq)]
pub struct Group {
    pub demand: usize,
    pub sources: Vec<usize>,
    pub sinks: Vec<usize>,
}

pub fn groups_for<S: Scalar>(lcp: &LabelCoverLp<S>, pruned: &[PrunedDemand<S>], members: &[usize]) -> Vec<Group> {
    members
        .iter()
        .map(|&k| {
            let p = &pruned[k];
            Group {
                demand: p.demand,
                sources: p.sources.iter().map(|&i| lcp.sources[i].layered).collect(),
                sinks: p.sinks.iter().map(|&i| lcp.sinks[i].layered).collect(),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rounded {
    pub up_edges: Vec<usize>,
    pub down_edges: Vec<usize>,
    /// Demands (included-demand indices) whose groups are connected through the root.
    pub connected: Vec<usize>,
    pub runs: usize,
}

/// Deterministic 64-bit mixing of a seed with stream coordinates.
pub fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    let mut x = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

struct HalfRound {
    reached: Vec<bool>,
    selected: Vec<bool>,
}

fn round_half<S: Scalar>(g: &LayeredGraph<S>, x: &[S], rng: &mut ChaCha8Rng) -> HalfRound {
    let nv = g.psi.len();
    // Root-ward edges of a vertex and the flow value through it.
    let rootward = |v: usize| match g.direction {
        Direction::Up => &g.out[v],
        Direction::Down => &g.inc[v],
    };
    let through: Vec<S> = (0..nv)
        .map(|v| {
            if v == g.root {
                return S::one();
            }
            let s = rootward(v).iter().fold(S::zero(), |a, &e| a + x[e].clone());
            if s > S::one() {
                S::one()
            } else {
                s
            }
        })
        .collect();
    let mut by_level: Vec<Vec<usize>> = vec![Vec::new(); g.h + 1];
    for v in 0..nv {
        by_level[g.level_of(v)].push(v);
    }
    let levels: Vec<usize> = match g.direction {
        Direction::Up => (0..g.h).rev().collect(),
        Direction::Down => (1..=g.h).collect(),
    };
    let mut reached = vec![false; nv];
    reached[g.root] = true;
    let mut selected = vec![false; g.edges.len()];
    for lvl in levels {
        for &v in &by_level[lvl] {
            for &e in rootward(v) {
                let parent = match g.direction {
                    Direction::Up => g.edges[e].to,
                    Direction::Down => g.edges[e].from,
                };
                if !reached[parent] || x[e] <= S::zero() {
                    continue;
                }
                let p = if through[parent] <= S::zero() {
                    1.0
                } else {
                    (x[e].clone() / through[parent].clone()).as_f64().min(1.0)
                };
                if rng.random::<f64>() < p {
                    selected[e] = true;
                    reached[v] = true;
                }
            }
        }
    }
    HalfRound { reached, selected }
}

/// Path from a reached terminal to the root along smallest-id selected edges.
fn trace_selected<S: Scalar>(g: &LayeredGraph<S>, half: &HalfRound, start: usize) -> Vec<usize> {
    let mut path = Vec::new();
    let mut v = start;
    while v != g.root {
        let adj = match g.direction {
            Direction::Up => &g.out[v],
            Direction::Down => &g.inc[v],
        };
        let e = *adj
            .iter()
            .filter(|&&e| half.selected[e])
            .min()
            .expect("reached vertices have a selected root-ward edge");
        path.push(e);
        v = match g.direction {
            Direction::Up => g.edges[e].to,
            Direction::Down => g.edges[e].from,
        };
    }
    path
}

/// Randomized group-Steiner rounding on the joined layered graph.
///
/// Each half is rounded outward from the root: an edge whose root-side
/// endpoint is reached is kept with probability `x*_e / X(parent)`, where
/// `X` is the capped scaled capacity through the parent. Runs repeat with
/// independent streams until half of the groups connect, keeping the best run.
pub fn gst_round<S: Scalar>(
    jg: &JoinedGraph<S>,
    x_up: &[S],
    x_down: &[S],
    groups: &[Group],
    seed: u64,
    max_runs: usize,
) -> Result<Rounded> {
    let need = groups.len().div_ceil(2);
    let mut best: Option<Rounded> = None;
    for run in 0..max_runs.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x5EED, run as u64));
        let up = round_half(&jg.up, x_up, &mut rng);
        let down = round_half(&jg.down, x_down, &mut rng);
        let mut connected = Vec::new();
        let mut up_edges = BTreeSet::new();
        let mut down_edges = BTreeSet::new();
        for g in groups {
            let s = g.sources.iter().copied().find(|&v| up.reached[v]);
            let t = g.sinks.iter().copied().find(|&v| down.reached[v]);
            if let (Some(s), Some(t)) = (s, t) {
                connected.push(g.demand);
                up_edges.extend(trace_selected(&jg.up, &up, s));
                down_edges.extend(trace_selected(&jg.down, &down, t));
            }
        }
        let better = best.as_ref().is_none_or(|b| connected.len() > b.connected.len());
        if better {
            best = Some(Rounded {
                up_edges: up_edges.into_iter().collect(),
                down_edges: down_edges.into_iter().collect(),
                connected,
                runs: run + 1,
            });
        }
        if best.as_ref().is_some_and(|b| b.connected.len() >= need) {
            break;
        }
    }
    let best = best.expect("at least one run");
    if best.connected.is_empty() {
        return Err(PcsError::RoundingFailure { runs: max_runs });
    }
    Ok(best)
}

/// Base edges of a layered selection (through closure paths and product edges).
pub fn layered_to_base<S: Scalar>(
    pg: &ProductGraph<S>,
    jg: &JoinedGraph<S>,
    up: &[usize],
    down: &[usize],
) -> Vec<usize> {
    let mut product = jg.up.expand(up);
    product.extend(jg.down.expand(down));
    product_to_base(pg, &product)
}

pub fn product_to_base<S: Scalar>(pg: &ProductGraph<S>, product_edges: &[usize]) -> Vec<usize> {
    let mut base: Vec<usize> = product_edges.iter().filter_map(|&e| pg.edges[e].base).collect();
    base.sort_unstable();
    base.dedup();
    base
}

/// Cheapest related terminal pair per demand: `distL(ŝ → root) + distR(root → t̂)`,
/// returned as `(demand, cost, product path)`.
pub fn cheapest_pair_paths<S: Scalar>(
    pg: &ProductGraph<S>,
    pairs: &[Vec<(usize, usize)>],
) -> Vec<(usize, S, Vec<usize>)> {
    let nodes = pg.node_count();
    let ends = |e: usize| (pg.edges[e].from, pg.edges[e].to);
    let cost = |e: usize| pg.edges[e].cost.clone();
    let (dl, pl) = dijkstra(nodes, pg.root_l(), &pg.inc, &ends, &cost, true, &|_| true);
    let (dr, pr) = dijkstra(nodes, pg.root_r(), &pg.out, &ends, &cost, false, &|_| true);
    let mut out = Vec::new();
    for (j, list) in pairs.iter().enumerate() {
        let mut best: Option<(S, usize, usize)> = None;
        for &(a, b) in list {
            let s = pg.source_terminal(j, a);
            let t = pg.sink_terminal(j, b);
            let (Some(x), Some(y)) = (&dl[s], &dr[t]) else { continue };
            let c = x.clone() + y.clone();
            if best.as_ref().is_none_or(|(bc, _, _)| c < *bc) {
                best = Some((c, s, t));
            }
        }
        if let Some((c, s, t)) = best {
            let mut path = trace_path(&pl, s, &ends, true);
            path.push(pg.dummy_edge);
            path.extend(trace_path(&pr, t, &ends, false));
            out.push((j, c, path));
        }
    }
    out
}
