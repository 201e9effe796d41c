//! Brute-force ground truth for small instances: walk catalogs, optimal
//! subgraphs and minimum-density junction trees.

use std::collections::BTreeSet;

use crate::error::{PcsError, Result};
use crate::model::{theta_length_cap, Demand, PcsInstance, Walk};
use crate::scalar::Scalar;

pub const DEFAULT_WALK_CAP: usize = 12;
pub const DEFAULT_CATALOG_LIMIT: usize = 1_000_000;
/// Search nodes visited by one enumeration before giving up.
const DFS_STEP_LIMIT: usize = 50_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleLimits {
    /// Maximum edges per walk.
    pub walk_cap: usize,
    /// Maximum catalog entries per demand, and maximum product of catalog sizes.
    pub limit: usize,
}

impl Default for OracleLimits {
    fn default() -> Self {
        OracleLimits {
            walk_cap: DEFAULT_WALK_CAP,
            limit: DEFAULT_CATALOG_LIMIT,
        }
    }
}

struct Dfs<'a, S> {
    inst: &'a PcsInstance<S>,
    demand: &'a Demand<S>,
    cap: usize,
    length_cap: S,
    prune_length: bool,
    out: Vec<Vec<usize>>,
    path: Vec<usize>,
    steps: usize,
    visit: &'a mut dyn FnMut(&[usize]) -> Result<()>,
}

impl<S: Scalar> Dfs<'_, S> {
    fn go(&mut self, v: usize, len: S, res: &mut Vec<i64>) -> Result<()> {
        self.steps += 1;
        if self.steps > DFS_STEP_LIMIT {
            return Err(PcsError::ResourceLimit {
                size: self.steps,
                limit: DFS_STEP_LIMIT,
            });
        }
        if v == self.demand.target
            && len <= self.length_cap
            && res.iter().zip(&self.demand.budget.res).all(|(a, b)| a <= b)
        {
            (self.visit)(&self.path)?;
        }
        if self.path.len() == self.cap {
            return Ok(());
        }
        for k in 0..self.out[v].len() {
            let e = self.out[v][k];
            let edge = &self.inst.edges[e];
            let nl = len.clone() + edge.cons.length.clone();
            if self.prune_length && nl > self.length_cap {
                continue;
            }
            let mut over = false;
            for (i, r) in edge.cons.res.iter().enumerate() {
                res[i] += r;
                if i < self.inst.packing && res[i] > self.demand.budget.res[i] {
                    over = true;
                }
            }
            if !over {
                self.path.push(e);
                self.go(edge.head, nl, res)?;
                self.path.pop();
            }
            for (i, r) in edge.cons.res.iter().enumerate() {
                res[i] -= r;
            }
        }
        Ok(())
    }
}

fn walk_dfs<S: Scalar>(
    inst: &PcsInstance<S>,
    demand: &Demand<S>,
    cap: usize,
    theta: Option<&S>,
    visit: &mut dyn FnMut(&[usize]) -> Result<()>,
) -> Result<()> {
    let mut out = vec![Vec::new(); inst.n];
    for (id, e) in inst.edges.iter().enumerate() {
        out[e.tail].push(id);
    }
    let length_cap = match theta {
        Some(t) => theta_length_cap(&demand.budget.length, t),
        None => demand.budget.length.clone(),
    };
    let mut dfs = Dfs {
        inst,
        demand,
        cap,
        length_cap,
        prune_length: inst.edges.iter().all(|e| e.cons.length >= S::zero()),
        out,
        path: Vec::new(),
        steps: 0,
        visit,
    };
    let mut res = vec![0i64; inst.m()];
    dfs.go(demand.source, S::zero(), &mut res)
}

/// All feasible walks with at most `cap` edges, one per edge multiset, in depth-first order.
pub fn enumerate_feasible_walks<S: Scalar>(
    inst: &PcsInstance<S>,
    demand: &Demand<S>,
    cap: usize,
    theta: Option<&S>,
    limit: usize,
) -> Result<Vec<Walk>> {
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut walks = Vec::new();
    walk_dfs(inst, demand, cap, theta, &mut |path| {
        let mut key = path.to_vec();
        key.sort_unstable();
        if seen.insert(key) {
            walks.push(Walk::new(path.to_vec()));
            if walks.len() > limit {
                return Err(PcsError::ResourceLimit {
                    size: walks.len(),
                    limit,
                });
            }
        }
        Ok(())
    })?;
    Ok(walks)
}

/// Number of feasible walks with at most `cap` edges, without deduplication.
pub fn count_feasible_walks<S: Scalar>(inst: &PcsInstance<S>, demand: &Demand<S>, cap: usize) -> Result<u64> {
    let mut count = 0u64;
    walk_dfs(inst, demand, cap, None, &mut |_| {
        count += 1;
        Ok(())
    })?;
    Ok(count)
}

type EdgeSet = u128;

fn to_set(walk: &Walk) -> EdgeSet {
    walk.edges.iter().fold(0, |acc, &e| acc | (1u128 << e))
}

fn set_cost<S: Scalar>(inst: &PcsInstance<S>, set: EdgeSet) -> S {
    (0..inst.edges.len())
        .filter(|&e| set >> e & 1 == 1)
        .fold(S::zero(), |a, e| a + inst.edges[e].cost.clone())
}

fn set_edges(set: EdgeSet) -> Vec<usize> {
    (0..128).filter(|&e| set >> e & 1 == 1).collect()
}

/// Inclusion-minimal edge sets, sorted for determinism.
fn minimal_sets(sets: impl IntoIterator<Item = EdgeSet>) -> Vec<EdgeSet> {
    let mut all: Vec<EdgeSet> = sets.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
    all.sort_by_key(|s| (s.count_ones(), *s));
    let mut keep: Vec<EdgeSet> = Vec::new();
    for s in all {
        if !keep.iter().any(|k| k & s == *k) {
            keep.push(s);
        }
    }
    keep
}

/// Minimum cost of a union picking one set per option list (branch and bound).
fn min_union<S: Scalar>(inst: &PcsInstance<S>, options: &[Vec<EdgeSet>]) -> Option<(S, EdgeSet)> {
    if options.iter().any(|o| o.is_empty()) {
        return None;
    }
    let mut order: Vec<usize> = (0..options.len()).collect();
    order.sort_by_key(|&i| options[i].len());
    let mut best: Option<(S, EdgeSet)> = None;
    fn rec<S: Scalar>(
        inst: &PcsInstance<S>,
        options: &[Vec<EdgeSet>],
        order: &[usize],
        depth: usize,
        union: EdgeSet,
        best: &mut Option<(S, EdgeSet)>,
    ) {
        let cost = set_cost(inst, union);
        if let Some((b, _)) = best {
            if cost >= *b {
                return;
            }
        }
        if depth == order.len() {
            *best = Some((cost, union));
            return;
        }
        let opts = &options[order[depth]];
        if opts.iter().any(|s| s & union == *s) {
            rec(inst, options, order, depth + 1, union, best);
            return;
        }
        for &s in opts {
            rec(inst, options, order, depth + 1, union | s, best);
        }
    }
    rec(inst, options, &order, 0, 0, &mut best);
    best
}

fn check_edges<S: Scalar>(inst: &PcsInstance<S>) -> Result<()> {
    if inst.edges.len() > 128 {
        return Err(PcsError::ResourceLimit {
            size: inst.edges.len(),
            limit: 128,
        });
    }
    Ok(())
}

fn catalogs<S: Scalar>(inst: &PcsInstance<S>, theta: Option<&S>, limits: &OracleLimits) -> Result<Vec<Vec<Walk>>> {
    check_edges(inst)?;
    inst.demands
        .iter()
        .map(|d| enumerate_feasible_walks(inst, d, limits.walk_cap, theta, limits.limit))
        .collect()
}

fn check_product(options: &[Vec<EdgeSet>], limit: usize) -> Result<()> {
    let mut prod: usize = 1;
    for o in options {
        prod = prod.saturating_mul(o.len().max(1));
    }
    if prod > limit {
        return Err(PcsError::ResourceLimit { size: prod, limit });
    }
    Ok(())
}

/// Exact optimum: minimum cost of an edge set containing a feasible walk for every demand.
pub fn brute_force_opt<S: Scalar>(
    inst: &PcsInstance<S>,
    theta: Option<&S>,
    limits: &OracleLimits,
) -> Result<(S, Vec<usize>)> {
    let cats = catalogs(inst, theta, limits)?;
    let options: Vec<Vec<EdgeSet>> = cats.iter().map(|c| minimal_sets(c.iter().map(to_set))).collect();
    check_product(&options, limits.limit)?;
    if options.is_empty() {
        return Ok((S::zero(), Vec::new()));
    }
    let (cost, set) = min_union(inst, &options).ok_or_else(|| {
        PcsError::Scale(format!(
            "some demand has no feasible walk within {} edges",
            limits.walk_cap
        ))
    })?;
    Ok((cost, set_edges(set)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinDensity<S> {
    pub root: usize,
    pub density: S,
    pub demands: Vec<usize>,
    pub edges: Vec<usize>,
}

/// Exact minimum junction-tree density over all roots and demand subsets.
pub fn brute_force_min_density_junction<S: Scalar>(
    inst: &PcsInstance<S>,
    theta: Option<&S>,
    limits: &OracleLimits,
) -> Result<MinDensity<S>> {
    let k = inst.demands.len();
    if k == 0 || k > 16 {
        return Err(PcsError::Parameter(format!(
            "min-density oracle needs 1..=16 demands, got {k}"
        )));
    }
    let cats = catalogs(inst, theta, limits)?;
    let visits: Vec<Vec<Vec<usize>>> = cats
        .iter()
        .zip(&inst.demands)
        .map(|(c, d)| c.iter().map(|w| w.vertices(d.source, inst)).collect())
        .collect();
    let mut best: Option<MinDensity<S>> = None;
    for r in 0..inst.n {
        let options: Vec<Vec<EdgeSet>> = cats
            .iter()
            .zip(&visits)
            .map(|(c, vs)| minimal_sets(c.iter().zip(vs).filter(|(_, v)| v.contains(&r)).map(|(w, _)| to_set(w))))
            .collect();
        check_product(&options, limits.limit)?;
        for mask in 1u32..(1u32 << k) {
            let subset: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
            let opts: Vec<Vec<EdgeSet>> = subset.iter().map(|&i| options[i].clone()).collect();
            let Some((cost, set)) = min_union(inst, &opts) else {
                continue;
            };
            let density = cost / S::from_int(subset.len() as i64);
            let better = best.as_ref().is_none_or(|b| density < b.density);
            if better {
                best = Some(MinDensity {
                    root: r,
                    density,
                    demands: subset,
                    edges: set_edges(set),
                });
            }
        }
    }
    best.ok_or_else(|| PcsError::Scale("no demand has a feasible walk within the cap".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Edge, ResourceVector};
    use crate::Q;

    fn q(n: i64) -> Q {
        Q::from_int(n)
    }

    fn three_vertex() -> PcsInstance {
        // s=0, a=1, t=2; direct s->t is too long.
        let e = |t, h, c, len, r| Edge {
            tail: t,
            head: h,
            cost: q(c),
            cons: ResourceVector::new(q(len), vec![r]),
        };
        PcsInstance {
            n: 3,
            tau: 1,
            packing: 1,
            covering: 0,
            edges: vec![e(0, 1, 1, 1, 1), e(1, 2, 1, 1, 0), e(0, 2, 1, 3, 0)],
            demands: vec![Demand {
                source: 0,
                target: 2,
                budget: ResourceVector::new(q(2), vec![1]),
            }],
        }
    }

    #[test]
    fn three_vertex_optimum() {
        let inst = three_vertex();
        let (cost, edges) = brute_force_opt(&inst, None, &OracleLimits::default()).unwrap();
        assert_eq!(cost, q(2));
        assert_eq!(edges, vec![0, 1]);
        let md = brute_force_min_density_junction(&inst, None, &OracleLimits::default()).unwrap();
        assert_eq!(md.density, q(2));
    }

    #[test]
    fn packing_overflow_empties_catalog() {
        let e = |t, h| Edge {
            tail: t,
            head: h,
            cost: q(1),
            cons: ResourceVector::new(q(1), vec![1]),
        };
        let inst = PcsInstance {
            n: 3,
            tau: 1,
            packing: 1,
            covering: 0,
            edges: vec![e(0, 1), e(1, 2)],
            demands: vec![],
        };
        let d = Demand {
            source: 0,
            target: 2,
            budget: ResourceVector::new(q(5), vec![1]),
        };
        assert!(enumerate_feasible_walks(&inst, &d, 12, None, 100).unwrap().is_empty());
        let direct = Demand {
            source: 0,
            target: 1,
            budget: ResourceVector::new(q(1), vec![1]),
        };
        assert_eq!(enumerate_feasible_walks(&inst, &direct, 1, None, 100).unwrap().len(), 1);
    }

    #[test]
    fn shared_edges_make_union_cheaper() {
        // 0->1 expensive trunk shared by demands to 2 and 3.
        let e = |t, h, c| Edge {
            tail: t,
            head: h,
            cost: q(c),
            cons: ResourceVector::new(q(1), vec![]),
        };
        let d = |t| Demand {
            source: 0,
            target: t,
            budget: ResourceVector::new(q(2), vec![]),
        };
        let inst = PcsInstance {
            n: 4,
            tau: 0,
            packing: 0,
            covering: 0,
            edges: vec![e(0, 1, 5), e(1, 2, 1), e(1, 3, 1)],
            demands: vec![d(2), d(3)],
        };
        let (cost, _) = brute_force_opt(&inst, None, &OracleLimits::default()).unwrap();
        assert_eq!(cost, q(7));
        let md = brute_force_min_density_junction(&inst, None, &OracleLimits::default()).unwrap();
        assert_eq!(md.density, Q::from_ratio(7, 2));
    }
}
