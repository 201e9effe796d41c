//! Greedy covering by minimum-density junction trees.

use serde_json::{json, Value};

use crate::density::derive_seed;
use crate::error::{PcsError, Result};
use crate::junction::{min_density_junction_tree, JunctionConfig, Mode, Origin};
use crate::model::{PcsInstance, Walk};
use crate::oracle::{brute_force_min_density_junction, brute_force_opt, OracleLimits};
use crate::rcsp::verify_solution;
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub struct SolveConfig<S> {
    pub junction: JunctionConfig<S>,
    /// Selected edges cost zero in later iterations.
    pub reprice_selected: bool,
}

impl<S: Scalar> Default for SolveConfig<S> {
    fn default() -> Self {
        SolveConfig {
            junction: JunctionConfig::default(),
            reprice_selected: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Iteration<S> {
    pub root: usize,
    pub density: S,
    /// Cost of the tree's edges not selected before.
    pub added_cost: S,
    pub resolved: Vec<usize>,
    pub origin: Origin,
    pub seed: u64,
    pub product_vertices: usize,
    pub lp_value: Option<S>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport<S> {
    pub mode: Mode<S>,
    pub epsilon: S,
    pub seed: u64,
    pub edges: Vec<usize>,
    pub cost: S,
    pub iterations: Vec<Iteration<S>>,
    /// Per demand, a feasible (or θ-feasible) walk inside `edges`.
    pub witnesses: Vec<Walk>,
    /// Largest product graph built, a size measure for approximation bounds.
    pub max_product_vertices: usize,
}

fn text<S: Scalar>(v: &S) -> Value {
    Value::String(v.to_text())
}

impl<S: Scalar> SolveReport<S> {
    pub fn to_json_value(&self) -> Value {
        let (mode, theta) = match &self.mode {
            Mode::Integer => ("integer", Value::Null),
            Mode::Theta(t) => ("theta", text(t)),
        };
        json!({
            "mode": mode,
            "theta": theta,
            "epsilon": text(&self.epsilon),
            "seed": self.seed,
            "reprice_selected": true,
            "edges": self.edges,
            "cost": text(&self.cost),
            "max_product_vertices": self.max_product_vertices,
            "iterations": self.iterations.iter().map(|it| json!({
                "root": it.root,
                "density": text(&it.density),
                "added_cost": text(&it.added_cost),
                "resolved": it.resolved,
                "origin": it.origin,
                "seed": it.seed,
                "product_vertices": it.product_vertices,
                "lp_value": it.lp_value.as_ref().map(text),
            })).collect::<Vec<_>>(),
            "witnesses": self.witnesses.iter().enumerate().map(|(d, w)| json!({
                "demand": d,
                "walk": w.edges,
            })).collect::<Vec<_>>(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("report serializes")
    }
}

/// Repeatedly adds the best junction tree for the residual demands until all are resolved.
pub fn solve_pcs<S: Scalar>(inst: &PcsInstance<S>, mode: &Mode<S>, cfg: &SolveConfig<S>) -> Result<SolveReport<S>> {
    inst.validate()?;
    let theta = mode.theta();
    let mut work = inst.clone();
    let mut residual: Vec<usize> = (0..inst.demands.len()).collect();
    let mut selected = vec![false; inst.edges.len()];
    let mut iterations = Vec::new();
    let mut max_pv = 0;
    while !residual.is_empty() {
        let mut jc = cfg.junction.clone();
        jc.seed = derive_seed(cfg.junction.seed, iterations.len() as u64, 7);
        let tree = min_density_junction_tree(&work, &residual, mode, &jc)?;
        if tree.resolved.is_empty() {
            return Err(PcsError::Internal("junction tree resolved no demand".into()));
        }
        let added_cost = tree
            .edges
            .iter()
            .filter(|&&e| !selected[e])
            .fold(S::zero(), |a, &e| a + inst.edges[e].cost.clone());
        for &e in &tree.edges {
            selected[e] = true;
            if cfg.reprice_selected {
                work.edges[e].cost = S::zero();
            }
        }
        residual.retain(|d| !tree.resolved.contains(d));
        max_pv = max_pv.max(tree.diagnostics.product_vertices);
        log::info!(
            "iteration {}: root {} resolves {:?} at density {}",
            iterations.len(),
            tree.root,
            tree.resolved,
            tree.density.to_text()
        );
        iterations.push(Iteration {
            root: tree.root,
            density: tree.density.clone(),
            added_cost,
            resolved: tree.resolved.clone(),
            origin: tree.origin,
            seed: jc.seed,
            product_vertices: tree.diagnostics.product_vertices,
            lp_value: tree.diagnostics.lp_value.clone(),
        });
    }
    let edges: Vec<usize> = (0..inst.edges.len()).filter(|&e| selected[e]).collect();
    let checks = verify_solution(inst, &edges, theta)?;
    let mut witnesses = Vec::with_capacity(checks.len());
    for (d, c) in checks.into_iter().enumerate() {
        match c.witness {
            Some(w) => witnesses.push(w),
            None => return Err(PcsError::Internal(format!("demand {d} fails final verification"))),
        }
    }
    Ok(SolveReport {
        mode: mode.clone(),
        epsilon: cfg.junction.epsilon.clone(),
        seed: cfg.junction.seed,
        cost: inst.edge_cost_sum(&edges),
        edges,
        iterations,
        witnesses,
        max_product_vertices: max_pv,
    })
}

/// Exact comparison of the minimum junction-tree density with `OPT / √k`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityLemmaReport<S> {
    pub k: usize,
    pub opt: S,
    pub min_density: S,
    pub root: usize,
    /// `min_density ≤ OPT / √k`, decided as `min_density² · k ≤ OPT²`.
    pub holds: bool,
}

pub fn density_lemma_check<S: Scalar>(inst: &PcsInstance<S>, limits: &OracleLimits) -> Result<DensityLemmaReport<S>> {
    let k = inst.demands.len();
    let (opt, _) = brute_force_opt(inst, None, limits)?;
    let md = brute_force_min_density_junction(inst, None, limits)?;
    let lhs = md.density.clone() * md.density.clone() * S::from_int(k as i64);
    let holds = lhs <= opt.clone() * opt.clone();
    Ok(DensityLemmaReport {
        k,
        opt,
        min_density: md.density,
        root: md.root,
        holds,
    })
}
