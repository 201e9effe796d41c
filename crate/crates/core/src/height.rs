//! Height reduction: each half of the product graph becomes an (h+1)-level
//! layered DAG whose edges carry metric-closure costs, with a map ψ back to
//! product vertices and closure paths for recovery.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::product::{PNode, ProductGraph, Side};
use crate::scalar::Scalar;

struct HeapItem<S> {
    dist: S,
    node: usize,
}

impl<S: Scalar> PartialEq for HeapItem<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<S: Scalar> Eq for HeapItem<S> {}
impl<S: Scalar> PartialOrd for HeapItem<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<S: Scalar> Ord for HeapItem<S> {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

/// Single-source (or single-target when `reverse`) minimum costs with the edge used last.
///
/// `adj[x]` lists edge ids leaving `x` (entering `x` when `reverse`); `ends(e)`
/// returns `(from, to)`. Costs must be nonnegative.
pub fn dijkstra<S: Scalar>(
    nodes: usize,
    start: usize,
    adj: &[Vec<usize>],
    ends: &dyn Fn(usize) -> (usize, usize),
    cost: &dyn Fn(usize) -> S,
    reverse: bool,
    allowed: &dyn Fn(usize) -> bool,
) -> (Vec<Option<S>>, Vec<Option<usize>>) {
    let mut dist: Vec<Option<S>> = vec![None; nodes];
    let mut pred = vec![None; nodes];
    let mut done = vec![false; nodes];
    let mut heap = BinaryHeap::new();
    dist[start] = Some(S::zero());
    heap.push(HeapItem {
        dist: S::zero(),
        node: start,
    });
    while let Some(HeapItem { dist: d, node: x }) = heap.pop() {
        if done[x] {
            continue;
        }
        done[x] = true;
        for &e in &adj[x] {
            let (a, b) = ends(e);
            let y = if reverse { a } else { b };
            if done[y] || !allowed(y) {
                continue;
            }
            let cand = d.clone() + cost(e);
            let better = match &dist[y] {
                None => true,
                Some(cur) => cand < *cur || (cand == *cur && pred[y].is_some_and(|p: usize| e < p)),
            };
            if better {
                dist[y] = Some(cand.clone());
                pred[y] = Some(e);
                heap.push(HeapItem { dist: cand, node: y });
            }
        }
    }
    (dist, pred)
}

/// Walks the predecessor links back from `target` to the search start.
pub fn trace_path(
    pred: &[Option<usize>],
    target: usize,
    ends: &dyn Fn(usize) -> (usize, usize),
    reverse: bool,
) -> Vec<usize> {
    let mut path = Vec::new();
    let mut x = target;
    while let Some(e) = pred[x] {
        path.push(e);
        let (a, b) = ends(e);
        x = if reverse { b } else { a };
    }
    if !reverse {
        path.reverse();
    }
    path
}

/// All-pairs minimum-cost table with path reconstruction on a small graph.
#[derive(Clone, Debug)]
pub struct CostClosure<S> {
    pub n: usize,
    dist: Vec<Vec<Option<S>>>,
    pred: Vec<Vec<Option<usize>>>,
    ends: Vec<(usize, usize)>,
}

impl<S: Scalar> CostClosure<S> {
    pub fn value(&self, a: usize, b: usize) -> Option<&S> {
        self.dist[a][b].as_ref()
    }

    /// Edge ids of a minimum-cost `a ⇝ b` path.
    pub fn path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        self.dist[a][b].as_ref()?;
        let ends = &self.ends;
        Some(trace_path(&self.pred[a], b, &|e| ends[e], false))
    }
}

/// Metric closure of a graph given as `(from, to, cost)` edges.
pub fn cost_metric_closure<S: Scalar>(n: usize, edges: &[(usize, usize, S)]) -> CostClosure<S> {
    let mut adj = vec![Vec::new(); n];
    for (k, e) in edges.iter().enumerate() {
        adj[e.0].push(k);
    }
    let ends: Vec<(usize, usize)> = edges.iter().map(|e| (e.0, e.1)).collect();
    let mut dist = Vec::with_capacity(n);
    let mut pred = Vec::with_capacity(n);
    for a in 0..n {
        let (d, p) = dijkstra(n, a, &adj, &|e| ends[e], &|e| edges[e].2.clone(), false, &|_| true);
        dist.push(d);
        pred.push(p);
    }
    CostClosure { n, dist, pred, ends }
}

/// Orientation of a layered half.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Flow runs from terminals at level 0 up to the root at level h (L half).
    Up,
    /// Flow runs from the root at level 0 down to terminals at level h (R half).
    Down,
}

#[derive(Clone, Debug)]
pub struct LayeredEdge<S> {
    pub from: usize,
    pub to: usize,
    pub cost: S,
    /// Product edge ids realizing the closure value (empty for self-progression).
    pub path: Vec<usize>,
}

/// (h+1)-level layered DAG built from one half of a product graph.
#[derive(Clone, Debug)]
pub struct LayeredGraph<S> {
    pub h: usize,
    pub direction: Direction,
    /// ψ: layered vertex → (level, product node).
    pub psi: Vec<(usize, usize)>,
    pub edges: Vec<LayeredEdge<S>>,
    pub out: Vec<Vec<usize>>,
    pub inc: Vec<Vec<usize>>,
    pub root: usize,
    /// Product terminal node → layered vertex at the terminal level.
    pub terminal_vertex: HashMap<usize, usize>,
}

impl<S: Scalar> LayeredGraph<S> {
    pub fn level_of(&self, v: usize) -> usize {
        self.psi[v].0
    }

    /// Product edge ids of a layered edge set (closure paths concatenated, duplicates removed).
    pub fn expand(&self, edge_ids: &[usize]) -> Vec<usize> {
        let mut out: Vec<usize> = edge_ids
            .iter()
            .flat_map(|&e| self.edges[e].path.iter().copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// `h = ⌈1/ε⌉`.
pub fn height_for_epsilon<S: Scalar>(epsilon: &S) -> usize {
    (S::one() / epsilon.clone()).ceil_int().max(1) as usize
}

/// Builds the layered graph of one product half.
///
/// Level sets: the terminal level holds `terminals`; the root level holds the
/// root copy; middle levels hold the terminals plus product states of this
/// half that touch at least two terminals and connect to the root. Copies
/// outside these sets cannot carry terminal flow, or are dominated by the
/// direct closure edge.
pub fn build_layered<S: Scalar>(pg: &ProductGraph<S>, side: Side, terminals: &[usize], h: usize) -> LayeredGraph<S> {
    assert!(h >= 1);
    let nodes = pg.node_count();
    let direction = match side {
        Side::L => Direction::Up,
        Side::R => Direction::Down,
    };
    let root = match side {
        Side::L => pg.root_l(),
        Side::R => pg.root_r(),
    };
    let in_half = |x: usize| match pg.node(x) {
        PNode::State { side: s, .. } => s == side,
        PNode::Source { .. } => side == Side::L,
        PNode::Sink { .. } => side == Side::R,
    };
    let ends = |e: usize| (pg.edges[e].from, pg.edges[e].to);
    let cost = |e: usize| pg.edges[e].cost.clone();
    // Forward in flow direction for Up is along edges; for Down, along edges too.
    // Searches "from a terminal" in Down run backward from the terminal.
    let from_terminal_reverse = direction == Direction::Down;
    let term_adj = if from_terminal_reverse { &pg.inc } else { &pg.out };
    let mut term_rows: Vec<(Vec<Option<S>>, Vec<Option<usize>>)> = Vec::with_capacity(terminals.len());
    let mut touch = vec![0u32; nodes];
    for &t in terminals {
        let row = dijkstra(nodes, t, term_adj, &ends, &cost, from_terminal_reverse, &in_half);
        for (x, d) in row.0.iter().enumerate() {
            if d.is_some() {
                touch[x] += 1;
            }
        }
        term_rows.push(row);
    }
    // Root row: costs between every node and the root.
    let root_adj = if direction == Direction::Up { &pg.inc } else { &pg.out };
    let root_row = dijkstra(
        nodes,
        root,
        root_adj,
        &ends,
        &cost,
        direction == Direction::Up,
        &in_half,
    );
    let is_terminal: HashMap<usize, usize> = terminals.iter().enumerate().map(|(i, &t)| (t, i)).collect();
    let mut middle: Vec<usize> = terminals.to_vec();
    for x in 0..nodes {
        if x != root && !is_terminal.contains_key(&x) && in_half(x) && touch[x] >= 2 && root_row.0[x].is_some() {
            middle.push(x);
        }
    }
    if h >= 2 {
        // Middle states that never reach the root are already excluded.
        middle.retain(|&x| root_row.0[x].is_some() || is_terminal.contains_key(&x));
    }
    // Rows from middle vertices are needed only between two middle levels.
    let mut mid_rows: HashMap<usize, (Vec<Option<S>>, Vec<Option<usize>>)> = HashMap::new();
    if h >= 3 {
        for &x in &middle {
            if is_terminal.contains_key(&x) {
                continue;
            }
            let row = if direction == Direction::Up {
                dijkstra(nodes, x, &pg.out, &ends, &cost, false, &in_half)
            } else {
                dijkstra(nodes, x, &pg.inc, &ends, &cost, true, &in_half)
            };
            mid_rows.insert(x, row);
        }
    }

    // Level layout in flow order: level 0 is the flow start.
    let mut levels: Vec<Vec<usize>> = Vec::with_capacity(h + 1);
    for lvl in 0..=h {
        let set = match direction {
            Direction::Up if lvl == 0 => terminals.to_vec(),
            Direction::Up if lvl == h => vec![root],
            Direction::Down if lvl == 0 => vec![root],
            Direction::Down if lvl == h => terminals.to_vec(),
            _ => middle.clone(),
        };
        levels.push(set);
    }
    let mut psi = Vec::new();
    let mut vid: Vec<HashMap<usize, usize>> = Vec::with_capacity(h + 1);
    for (lvl, set) in levels.iter().enumerate() {
        let mut map = HashMap::new();
        for &x in set {
            map.insert(x, psi.len());
            psi.push((lvl, x));
        }
        vid.push(map);
    }
    // Closure value and path between product nodes a (earlier in flow) and b.
    let closure = |a: usize, b: usize| -> Option<(S, Vec<usize>)> {
        if a == b {
            return Some((S::zero(), Vec::new()));
        }
        match direction {
            Direction::Up => {
                if b == root {
                    let d = root_row.0[a].clone()?;
                    return Some((d, trace_path(&root_row.1, a, &ends, true)));
                }
                let row = if let Some(&i) = is_terminal.get(&a) {
                    &term_rows[i]
                } else {
                    mid_rows.get(&a)?
                };
                let d = row.0[b].clone()?;
                Some((d, trace_path(&row.1, b, &ends, false)))
            }
            Direction::Down => {
                if a == root {
                    let d = root_row.0[b].clone()?;
                    return Some((d, trace_path(&root_row.1, b, &ends, false)));
                }
                let row = if let Some(&i) = is_terminal.get(&b) {
                    &term_rows[i]
                } else {
                    mid_rows.get(&b)?
                };
                let d = row.0[a].clone()?;
                Some((d, trace_path(&row.1, a, &ends, true)))
            }
        }
    };
    let mut edges = Vec::new();
    for lvl in 0..h {
        for &a in &levels[lvl] {
            for &b in &levels[lvl + 1] {
                // Terminal copies only progress to themselves, except into the root.
                let a_term = is_terminal.contains_key(&a);
                let b_term = is_terminal.contains_key(&b);
                if direction == Direction::Up && b_term && a != b {
                    continue;
                }
                if direction == Direction::Down && a_term && a != b {
                    continue;
                }
                if let Some((c, path)) = closure(a, b) {
                    edges.push(LayeredEdge {
                        from: vid[lvl][&a],
                        to: vid[lvl + 1][&b],
                        cost: c,
                        path,
                    });
                }
            }
        }
    }
    let mut out = vec![Vec::new(); psi.len()];
    let mut inc = vec![Vec::new(); psi.len()];
    for (k, e) in edges.iter().enumerate() {
        out[e.from].push(k);
        inc[e.to].push(k);
    }
    let root_id = match direction {
        Direction::Up => vid[h][&root],
        Direction::Down => vid[0][&root],
    };
    let term_level = match direction {
        Direction::Up => 0,
        Direction::Down => h,
    };
    let terminal_vertex = terminals.iter().map(|&t| (t, vid[term_level][&t])).collect();
    LayeredGraph {
        h,
        direction,
        psi,
        edges,
        out,
        inc,
        root: root_id,
        terminal_vertex,
    }
}

/// Both layered halves joined by a zero-cost bridge between their roots.
#[derive(Clone, Debug)]
pub struct JoinedGraph<S> {
    pub up: LayeredGraph<S>,
    pub down: LayeredGraph<S>,
    pub bridge_cost: S,
}

pub fn join_halves<S: Scalar>(up: LayeredGraph<S>, down: LayeredGraph<S>) -> JoinedGraph<S> {
    assert_eq!(up.direction, Direction::Up);
    assert_eq!(down.direction, Direction::Down);
    JoinedGraph {
        up,
        down,
        bridge_cost: S::zero(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Q;

    #[test]
    fn triangle_closure_prefers_two_hops() {
        let q = |x: i64| Q::from_int(x);
        let c = cost_metric_closure(3, &[(0, 1, q(1)), (1, 2, q(1)), (0, 2, q(5))]);
        assert_eq!(c.value(0, 2), Some(&q(2)));
        assert_eq!(c.path(0, 2), Some(vec![0, 1]));
        assert_eq!(c.value(0, 1), Some(&q(1)));
        assert_eq!(c.value(2, 0), None);
    }

    #[test]
    fn epsilon_to_height() {
        assert_eq!(height_for_epsilon(&Q::from_ratio(1, 2)), 2);
        assert_eq!(height_for_epsilon(&Q::from_ratio(1, 3)), 3);
        assert_eq!(height_for_epsilon(&Q::from_ratio(2, 5)), 3);
        assert_eq!(height_for_epsilon(&Q::from_int(1)), 1);
    }
}
