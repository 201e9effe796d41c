//! Minimum-density resource-constrained junction trees: every root runs
//! product graph, height reduction, LP, pruning and rounding; the best
//! verified candidate wins.

use rayon::prelude::*;
use serde::Serialize;

use crate::density::{self, FractionalSolution, LabelCoverLp};
use crate::error::{PcsError, Result};
use crate::height::{build_layered, height_for_epsilon, join_halves};
use crate::lp::LpBackend;
use crate::model::{PcsInstance, Walk, DEFAULT_HOP_CAP_CONSTANT};
use crate::product::{build_product_graph, build_scaled_product_graph, ProductConfig, ProductGraph, Side};
use crate::rcsp::verify_through_root;
use crate::scalar::Scalar;
use crate::scaling::{scale_instance, ScaledInstance};

/// Default number of rounding runs per root.
pub const DEFAULT_ROUNDING_RETRIES: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub enum Mode<S> {
    /// Integer lengths, exact feasibility.
    Integer,
    /// Rational lengths, θ-relaxed length feasibility.
    Theta(S),
}

impl<S: Scalar> Mode<S> {
    pub fn theta(&self) -> Option<&S> {
        match self {
            Mode::Integer => None,
            Mode::Theta(t) => Some(t),
        }
    }
}

#[derive(Clone, Debug)]
pub struct JunctionConfig<S> {
    pub epsilon: S,
    pub seed: u64,
    pub product: ProductConfig,
    pub rounding_retries: usize,
    pub lp_backend: LpBackend,
    /// Candidate roots; `None` means every vertex.
    pub roots: Option<Vec<usize>>,
    pub hop_cap_constant: usize,
}

impl<S: Scalar> Default for JunctionConfig<S> {
    fn default() -> Self {
        JunctionConfig {
            epsilon: S::from_ratio(1, 2),
            seed: 0,
            product: ProductConfig::default(),
            rounding_retries: DEFAULT_ROUNDING_RETRIES,
            lp_backend: LpBackend::default(),
            roots: None,
            hop_cap_constant: DEFAULT_HOP_CAP_CONSTANT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Rounding,
    CheapestPath,
    CheapestPathUnion,
}

/// A verified junction tree.
#[derive(Clone, Debug, PartialEq)]
pub struct JunctionTree<S> {
    pub root: usize,
    pub edges: Vec<usize>,
    /// Instance demand ids with a witness through the root inside `edges`.
    pub resolved: Vec<usize>,
    pub witnesses: Vec<Walk>,
    pub cost: S,
    pub density: S,
    pub origin: Origin,
    pub diagnostics: RootDiagnostics<S>,
}

/// Per-root pipeline measurements.
#[derive(Clone, Debug, PartialEq)]
pub struct RootDiagnostics<S> {
    pub product_vertices: usize,
    pub product_edges: usize,
    pub layered_vertices: usize,
    pub lp_columns: usize,
    pub lp_rows: usize,
    pub lp_value: Option<S>,
    pub i_star: Option<usize>,
    pub rounding_runs: usize,
    pub rounding_connected: usize,
    pub mass_bound_met: bool,
}

/// Everything the LP stage produced at one root, kept for inspection and tests.
pub struct RootStages<S> {
    pub pg: ProductGraph<S>,
    pub pairs: Vec<Vec<(usize, usize)>>,
    pub joined: crate::height::JoinedGraph<S>,
    pub lp: LabelCoverLp<S>,
    pub solution: FractionalSolution<S>,
    pub pruned: Vec<density::PrunedDemand<S>>,
}

enum Graphs<'a, S> {
    Integer(&'a PcsInstance<S>),
    Scaled(&'a ScaledInstance<S>),
}

fn product_at<S: Scalar>(
    g: &Graphs<'_, S>,
    root: usize,
    ids: &[usize],
    cfg: &ProductConfig,
) -> Result<ProductGraph<S>> {
    match g {
        Graphs::Integer(inst) => build_product_graph(inst, root, ids, cfg),
        Graphs::Scaled(sc) => build_scaled_product_graph(sc, root, ids, cfg),
    }
}

/// Product graph, layered halves, LP and pruning at one root; `None` when no pair is related.
pub fn root_stages<S: Scalar>(
    inst: &PcsInstance<S>,
    demand_ids: &[usize],
    root: usize,
    mode: &Mode<S>,
    cfg: &JunctionConfig<S>,
) -> Result<Option<RootStages<S>>> {
    let scaled = match mode {
        Mode::Integer => None,
        Mode::Theta(t) => Some(scale_instance(inst, t, cfg.hop_cap_constant)?),
    };
    let graphs = match &scaled {
        None => Graphs::Integer(inst),
        Some(s) => Graphs::Scaled(s),
    };
    stages_with(&graphs, demand_ids, root, cfg)
}

fn stages_with<S: Scalar>(
    graphs: &Graphs<'_, S>,
    demand_ids: &[usize],
    root: usize,
    cfg: &JunctionConfig<S>,
) -> Result<Option<RootStages<S>>> {
    let pg = product_at(graphs, root, demand_ids, &cfg.product)?;
    let pairs = pg.connected_pairs();
    if pairs.iter().all(|p| p.is_empty()) {
        return Ok(None);
    }
    let mut up_terms: Vec<usize> = Vec::new();
    let mut down_terms: Vec<usize> = Vec::new();
    for (j, list) in pairs.iter().enumerate() {
        for &(a, b) in list {
            up_terms.push(pg.source_terminal(j, a));
            down_terms.push(pg.sink_terminal(j, b));
        }
    }
    up_terms.sort_unstable();
    up_terms.dedup();
    down_terms.sort_unstable();
    down_terms.dedup();
    let h = height_for_epsilon(&cfg.epsilon);
    let up = build_layered(&pg, Side::L, &up_terms, h);
    let down = build_layered(&pg, Side::R, &down_terms, h);
    let joined = join_halves(up, down);
    let lp = density::build_lp(&pg, &joined, &pairs)?;
    let solution = density::solve_lp(&lp, cfg.lp_backend)?;
    let pruned = density::prune_all(&pg, &lp, &solution);
    Ok(Some(RootStages {
        pg,
        pairs,
        joined,
        lp,
        solution,
        pruned,
    }))
}

struct Candidate {
    edges: Vec<usize>,
    origin: Origin,
}

fn evaluate<S: Scalar>(
    inst: &PcsInstance<S>,
    demand_ids: &[usize],
    root: usize,
    theta: Option<&S>,
    cand: Candidate,
) -> Result<Option<(Vec<usize>, Vec<Walk>, S, S, Origin)>> {
    let checks = verify_through_root(inst, demand_ids, root, &cand.edges, theta)?;
    let mut resolved = Vec::new();
    let mut witnesses = Vec::new();
    for (&d, w) in demand_ids.iter().zip(checks) {
        if let Some(w) = w {
            resolved.push(d);
            witnesses.push(w);
        }
    }
    if resolved.is_empty() {
        return Ok(None);
    }
    let cost = inst.edge_cost_sum(&cand.edges);
    let density = cost.clone() / S::from_int(resolved.len() as i64);
    Ok(Some((resolved, witnesses, cost, density, cand.origin)))
}

/// Best junction tree rooted at `root`, or `None` when the root resolves nothing.
fn solve_root<S: Scalar>(
    inst: &PcsInstance<S>,
    graphs: &Graphs<'_, S>,
    demand_ids: &[usize],
    root: usize,
    theta: Option<&S>,
    cfg: &JunctionConfig<S>,
) -> Result<Option<JunctionTree<S>>> {
    let Some(st) = stages_with(graphs, demand_ids, root, cfg)? else {
        return Ok(None);
    };
    let mut diag = RootDiagnostics {
        product_vertices: st.pg.node_count(),
        product_edges: st.pg.edges.len(),
        layered_vertices: st.joined.up.psi.len() + st.joined.down.psi.len(),
        lp_columns: st.lp.lp.vars(),
        lp_rows: st.lp.lp.rows.len(),
        lp_value: Some(st.solution.objective.clone()),
        i_star: None,
        rounding_runs: 0,
        rounding_connected: 0,
        mass_bound_met: st.pruned.iter().all(|p| p.mass_bound_met),
    };
    let mut candidates: Vec<Candidate> = Vec::new();

    let m = inst.m();
    let bucketing = density::bucket_and_scale(&st.pruned, m, &st.solution);
    diag.i_star = Some(bucketing.i_star);
    let groups = density::groups_for(&st.lp, &st.pruned, &bucketing.members);
    let groups: Vec<_> = groups
        .into_iter()
        .filter(|g| !g.sources.is_empty() && !g.sinks.is_empty())
        .collect();
    if !groups.is_empty() {
        let seed = density::derive_seed(cfg.seed, root as u64, 1);
        match density::gst_round(
            &st.joined,
            &bucketing.x_up,
            &bucketing.x_down,
            &groups,
            seed,
            cfg.rounding_retries,
        ) {
            Ok(r) => {
                diag.rounding_runs = r.runs;
                diag.rounding_connected = r.connected.len();
                let edges = density::layered_to_base(&st.pg, &st.joined, &r.up_edges, &r.down_edges);
                let claimed: Vec<usize> = r.connected.iter().map(|&j| st.pg.demand_ids[j]).collect();
                let checks = verify_through_root(inst, &claimed, root, &edges, theta)?;
                if let Some(k) = checks.iter().position(|w| w.is_none()) {
                    return Err(PcsError::Internal(format!(
                        "rounded tree at root {root} does not verify demand {}",
                        claimed[k]
                    )));
                }
                candidates.push(Candidate {
                    edges,
                    origin: Origin::Rounding,
                });
            }
            Err(PcsError::RoundingFailure { runs }) => {
                diag.rounding_runs = runs;
                log::debug!("root {root}: rounding connected nothing after {runs} runs");
            }
            Err(e) => return Err(e),
        }
    }

    let mut cheapest = density::cheapest_pair_paths(&st.pg, &st.pairs);
    cheapest.sort_by(|a, b| {
        a.1.partial_cmp(&b.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    let mut union: Vec<usize> = Vec::new();
    for (k, (_, _, path)) in cheapest.iter().enumerate() {
        let edges = density::product_to_base(&st.pg, path);
        union.extend(edges.iter().copied());
        union.sort_unstable();
        union.dedup();
        candidates.push(Candidate {
            edges,
            origin: Origin::CheapestPath,
        });
        if k > 0 {
            candidates.push(Candidate {
                edges: union.clone(),
                origin: Origin::CheapestPathUnion,
            });
        }
    }

    let mut best: Option<JunctionTree<S>> = None;
    for cand in candidates {
        let edges = cand.edges.clone();
        let Some((resolved, witnesses, cost, dens, origin)) = evaluate(inst, demand_ids, root, theta, cand)? else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => dens < b.density || (dens == b.density && resolved.len() > b.resolved.len()),
        };
        if better {
            best = Some(JunctionTree {
                root,
                edges,
                resolved,
                witnesses,
                cost,
                density: dens,
                origin,
                diagnostics: diag.clone(),
            });
        }
    }
    Ok(best)
}

/// Minimum-density junction tree over the candidate roots for `demand_ids`.
pub fn min_density_junction_tree<S: Scalar>(
    inst: &PcsInstance<S>,
    demand_ids: &[usize],
    mode: &Mode<S>,
    cfg: &JunctionConfig<S>,
) -> Result<JunctionTree<S>> {
    let scaled = match mode {
        Mode::Integer => None,
        Mode::Theta(t) => Some(scale_instance(inst, t, cfg.hop_cap_constant)?),
    };
    let graphs = match &scaled {
        None => Graphs::Integer(inst),
        Some(s) => Graphs::Scaled(s),
    };
    let roots: Vec<usize> = cfg.roots.clone().unwrap_or_else(|| (0..inst.n).collect());
    let theta = mode.theta();
    let results: Vec<Result<Option<JunctionTree<S>>>> = roots
        .par_iter()
        .map(|&r| solve_root(inst, &graphs, demand_ids, r, theta, cfg))
        .collect();
    let mut best: Option<JunctionTree<S>> = None;
    for res in results {
        let Some(t) = res? else { continue };
        let better = match &best {
            None => true,
            Some(b) => t.density < b.density || (t.density == b.density && t.root < b.root),
        };
        if better {
            best = Some(t);
        }
    }
    best.ok_or_else(|| {
        PcsError::Internal(format!(
            "no candidate root resolves any of the {} residual demands",
            demand_ids.len()
        ))
    })
}

/// Sequence of junction trees rooted inside `essential` until every demand resolves.
#[derive(Clone, Debug, PartialEq)]
pub struct EssentialSolution<S> {
    pub trees: Vec<JunctionTree<S>>,
    pub edges: Vec<usize>,
    pub cost: S,
}

/// Restricts roots to the essential set and iterates until all demands resolve.
pub fn essential_set_mode<S: Scalar>(
    inst: &PcsInstance<S>,
    essential: &[usize],
    mode: &Mode<S>,
    cfg: &JunctionConfig<S>,
) -> Result<EssentialSolution<S>> {
    let mut cfg = cfg.clone();
    cfg.roots = Some(essential.to_vec());
    let mut residual: Vec<usize> = (0..inst.demands.len()).collect();
    let mut work = inst.clone();
    let mut trees = Vec::new();
    let mut edges: Vec<usize> = Vec::new();
    while !residual.is_empty() {
        let tree = match min_density_junction_tree(&work, &residual, mode, &cfg) {
            Ok(t) => t,
            Err(PcsError::Internal(_)) => {
                return Err(PcsError::Contract(format!(
                    "demands {residual:?} are not resolvable from any root of the essential set"
                )))
            }
            Err(e) => return Err(e),
        };
        for &e in &tree.edges {
            work.edges[e].cost = S::zero();
        }
        edges.extend(tree.edges.iter().copied());
        edges.sort_unstable();
        edges.dedup();
        residual.retain(|d| !tree.resolved.contains(d));
        trees.push(tree);
        cfg.seed = density::derive_seed(cfg.seed, trees.len() as u64, 2);
    }
    let cost = inst.edge_cost_sum(&edges);
    Ok(EssentialSolution { trees, edges, cost })
}
