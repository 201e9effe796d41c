//! Seeded random instances with guaranteed-feasible demands.

use std::collections::VecDeque;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{PcsError, Result};
use crate::model::{walk_resource, Demand, Edge, PcsInstance, ResourceVector, Walk};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Lengths in `1..=max_length`.
    Integer,
    /// Positive rational lengths.
    Rational,
    /// Rational lengths, some negative, no negative cycle.
    RationalNegative,
}

impl std::str::FromStr for Regime {
    type Err = PcsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "integer" => Ok(Regime::Integer),
            "rational" => Ok(Regime::Rational),
            "rational-negative" => Ok(Regime::RationalNegative),
            other => Err(PcsError::Parameter(format!("unknown regime {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub n: usize,
    pub k: usize,
    pub packing: usize,
    pub covering: usize,
    pub tau: i64,
    pub regime: Regime,
    pub seed: u64,
    /// Random edges beyond the spanning cycle.
    pub extra_edges: usize,
    pub max_length: i64,
    pub max_cost: i64,
    /// Extra length budget beyond the sampled witness.
    pub length_slack: i64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n: 6,
            k: 3,
            packing: 1,
            covering: 0,
            tau: 2,
            regime: Regime::Integer,
            seed: 0,
            extra_edges: 6,
            max_length: 3,
            max_cost: 5,
            length_slack: 1,
        }
    }
}

const RETRY_CAP: usize = 200;

fn random_length<S: Scalar>(rng: &mut ChaCha8Rng, p: &GenParams) -> S {
    match p.regime {
        Regime::Integer => S::from_int(rng.random_range(1..=p.max_length)),
        _ => {
            let den = rng.random_range(1..=4i64);
            S::from_ratio(rng.random_range(1..=p.max_length * den), den)
        }
    }
}

fn bfs_path<S: Scalar>(inst: &PcsInstance<S>, s: usize, t: usize) -> Option<Vec<usize>> {
    let mut pred = vec![None; inst.n];
    let mut seen = vec![false; inst.n];
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(v) = queue.pop_front() {
        if v == t {
            break;
        }
        for (id, e) in inst.edges.iter().enumerate() {
            if e.tail == v && !seen[e.head] {
                seen[e.head] = true;
                pred[e.head] = Some(id);
                queue.push_back(e.head);
            }
        }
    }
    if !seen[t] {
        return None;
    }
    let mut path = Vec::new();
    let mut v = t;
    while v != s {
        let e = pred[v]?;
        path.push(e);
        v = inst.edges[e].tail;
    }
    path.reverse();
    Some(path)
}

/// A short random walk from `s` followed by a BFS path to `t`.
fn witness<S: Scalar>(inst: &PcsInstance<S>, rng: &mut ChaCha8Rng, s: usize, t: usize) -> Option<Vec<usize>> {
    let mut walk = Vec::new();
    let mut v = s;
    let steps = rng.random_range(0..=2usize);
    for _ in 0..steps {
        let out: Vec<usize> = (0..inst.edges.len()).filter(|&e| inst.edges[e].tail == v).collect();
        if out.is_empty() {
            break;
        }
        let e = out[rng.random_range(0..out.len())];
        walk.push(e);
        v = inst.edges[e].head;
    }
    walk.extend(bfs_path(inst, v, t)?);
    Some(walk)
}

/// Random instance: a Hamiltonian cycle plus random extra edges, demands
/// whose budgets come from a sampled witness walk plus slack.
pub fn generate<S: Scalar>(p: &GenParams) -> Result<PcsInstance<S>> {
    if p.n < 2 || p.max_length < 1 || p.max_cost < 0 || p.tau < 0 {
        return Err(PcsError::Parameter(
            "generator needs n ≥ 2, max_length ≥ 1, tau ≥ 0".into(),
        ));
    }
    let m = p.packing + p.covering;
    if m > 0 && p.tau == 0 {
        return Err(PcsError::Parameter("resources need tau ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut perm: Vec<usize> = (0..p.n).collect();
    for i in (1..p.n).rev() {
        let j = rng.random_range(0..=i);
        perm.swap(i, j);
    }
    let mut pairs: Vec<(usize, usize)> = (0..p.n).map(|i| (perm[i], perm[(i + 1) % p.n])).collect();
    for _ in 0..p.extra_edges {
        let u = rng.random_range(0..p.n);
        let mut v = rng.random_range(0..p.n - 1);
        if v >= u {
            v += 1;
        }
        pairs.push((u, v));
    }
    let potential: Vec<S> = (0..p.n)
        .map(|_| match p.regime {
            Regime::RationalNegative => S::from_ratio(rng.random_range(0..=2 * p.max_length), 2),
            _ => S::zero(),
        })
        .collect();
    let edges: Vec<Edge<S>> = pairs
        .iter()
        .map(|&(u, v)| {
            let base: S = random_length(&mut rng, p);
            let length = base + potential[u].clone() - potential[v].clone();
            let res: Vec<i64> = (0..m)
                .map(|i| {
                    let mag = if rng.random_bool(0.5) {
                        0
                    } else {
                        rng.random_range(1..=p.tau)
                    };
                    if i < p.packing {
                        mag
                    } else {
                        -mag
                    }
                })
                .collect();
            Edge {
                tail: u,
                head: v,
                cost: S::from_int(rng.random_range(0..=p.max_cost)),
                cons: ResourceVector::new(length, res),
            }
        })
        .collect();
    let mut inst = PcsInstance {
        n: p.n,
        tau: p.tau,
        packing: p.packing,
        covering: p.covering,
        edges,
        demands: Vec::new(),
    };
    let mut tries = 0;
    while inst.demands.len() < p.k {
        tries += 1;
        if tries > RETRY_CAP {
            return Err(PcsError::Scale(format!(
                "generation gave up after {RETRY_CAP} attempts"
            )));
        }
        let s = rng.random_range(0..p.n);
        let mut t = rng.random_range(0..p.n - 1);
        if t >= s {
            t += 1;
        }
        let Some(path) = witness(&inst, &mut rng, s, t) else {
            continue;
        };
        let rv = walk_resource(&Walk::new(path), &inst)?;
        if rv.res.iter().take(p.packing).any(|&x| x > p.tau) {
            continue;
        }
        let slack = match p.regime {
            Regime::Integer => S::from_int(rng.random_range(0..=p.length_slack)),
            _ => S::from_ratio(rng.random_range(0..=2 * p.length_slack), 2),
        };
        let mut length = rv.length.clone() + slack;
        if length.is_zero() {
            length = S::one();
        }
        let res: Vec<i64> = rv
            .res
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if i < p.packing {
                    (x + rng.random_range(0..=1)).min(p.tau)
                } else {
                    x.max(-p.tau)
                }
            })
            .collect();
        inst.demands.push(Demand {
            source: s,
            target: t,
            budget: ResourceVector::new(length, res),
        });
    }
    inst.validate()?;
    inst.validate_feasible()?;
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::instance_to_json;
    use crate::Q;

    #[test]
    fn same_seed_same_bytes() {
        let p = GenParams {
            seed: 9,
            ..GenParams::default()
        };
        let a = instance_to_json(&generate::<Q>(&p).unwrap());
        let b = instance_to_json(&generate::<Q>(&p).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn integer_lengths_in_range() {
        let p = GenParams {
            seed: 3,
            max_length: 4,
            ..GenParams::default()
        };
        let inst = generate::<Q>(&p).unwrap();
        for e in &inst.edges {
            assert!(e.cons.length.is_integer());
            assert!(e.cons.length >= Q::from_int(1) && e.cons.length <= Q::from_int(4));
        }
    }

    #[test]
    fn negative_regime_has_negative_lengths_somewhere() {
        let found = (0..20).any(|seed| {
            let p = GenParams {
                seed,
                regime: Regime::RationalNegative,
                ..GenParams::default()
            };
            let inst = generate::<Q>(&p).unwrap();
            inst.edges.iter().any(|e| e.cons.length < Q::from_int(0))
        });
        assert!(found);
    }
}
