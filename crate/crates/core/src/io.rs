//! JSON instance files. Rationals are written as `"num/den"`; readers also accept integers.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{PcsError, Result};
use crate::model::{Demand, Edge, PcsInstance, ResourceVector};
use crate::scalar::Scalar;

/// Number as it appears in a file: an integer or a `"num/den"` string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawNum {
    Int(i64),
    Text(String),
}

impl RawNum {
    pub fn from_scalar<S: Scalar>(v: &S) -> Self {
        RawNum::Text(v.to_text())
    }

    pub fn scalar<S: Scalar>(&self, location: &str) -> Result<S> {
        match self {
            RawNum::Int(i) => Ok(S::from_int(*i)),
            RawNum::Text(t) => S::parse_text(t).ok_or_else(|| PcsError::Parse {
                location: location.to_string(),
                message: format!("malformed rational {t:?}"),
            }),
        }
    }

    pub fn integer(&self, location: &str) -> Result<i64> {
        let bad = || PcsError::Parse {
            location: location.to_string(),
            message: format!("expected an integer, found {self:?}"),
        };
        match self {
            RawNum::Int(i) => Ok(*i),
            RawNum::Text(t) => {
                let q = crate::Q::parse_text(t).ok_or_else(bad)?;
                if q.is_integer() {
                    Ok(q.floor_int())
                } else {
                    Err(bad())
                }
            }
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawEdge {
    pub u: usize,
    pub v: usize,
    pub cost: RawNum,
    pub res: Vec<RawNum>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawDemand {
    pub s: usize,
    pub t: usize,
    pub budget: Vec<RawNum>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawInstance {
    pub n: usize,
    pub m: usize,
    pub tau: i64,
    pub packing: usize,
    pub covering: usize,
    pub edges: Vec<RawEdge>,
    pub demands: Vec<RawDemand>,
}

pub(crate) fn json_error(e: serde_json::Error) -> PcsError {
    PcsError::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    }
}

fn vector<S: Scalar>(raw: &[RawNum], m: usize, location: &str) -> Result<ResourceVector<S>> {
    if raw.len() != m + 1 {
        return Err(PcsError::Parse {
            location: location.to_string(),
            message: format!("expected {} entries, found {}", m + 1, raw.len()),
        });
    }
    let length = raw[0].scalar(&format!("{location}[0]"))?;
    let res = raw[1..]
        .iter()
        .enumerate()
        .map(|(i, r)| r.integer(&format!("{location}[{}]", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResourceVector { length, res })
}

fn raw_vector<S: Scalar>(v: &ResourceVector<S>) -> Vec<RawNum> {
    let mut out = vec![RawNum::from_scalar(&v.length)];
    out.extend(v.res.iter().map(|&x| RawNum::Int(x)));
    out
}

impl RawInstance {
    pub fn into_instance<S: Scalar>(self) -> Result<PcsInstance<S>> {
        if self.m != self.packing + self.covering {
            return Err(PcsError::Parse {
                location: "m".into(),
                message: format!(
                    "m = {} but packing + covering = {}",
                    self.m,
                    self.packing + self.covering
                ),
            });
        }
        let edges = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| {
                Ok(Edge {
                    tail: e.u,
                    head: e.v,
                    cost: e.cost.scalar(&format!("edges[{i}].cost"))?,
                    cons: vector(&e.res, self.m, &format!("edges[{i}].res"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let demands = self
            .demands
            .iter()
            .enumerate()
            .map(|(i, d)| {
                Ok(Demand {
                    source: d.s,
                    target: d.t,
                    budget: vector(&d.budget, self.m, &format!("demands[{i}].budget"))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(PcsInstance {
            n: self.n,
            tau: self.tau,
            packing: self.packing,
            covering: self.covering,
            edges,
            demands,
        })
    }

    pub fn from_instance<S: Scalar>(inst: &PcsInstance<S>) -> Self {
        RawInstance {
            n: inst.n,
            m: inst.m(),
            tau: inst.tau,
            packing: inst.packing,
            covering: inst.covering,
            edges: inst
                .edges
                .iter()
                .map(|e| RawEdge {
                    u: e.tail,
                    v: e.head,
                    cost: RawNum::from_scalar(&e.cost),
                    res: raw_vector(&e.cons),
                })
                .collect(),
            demands: inst
                .demands
                .iter()
                .map(|d| RawDemand {
                    s: d.source,
                    t: d.target,
                    budget: raw_vector(&d.budget),
                })
                .collect(),
        }
    }
}

/// Parse an instance without validating it.
pub fn parse_instance<S: Scalar>(text: &str) -> Result<PcsInstance<S>> {
    let raw: RawInstance = serde_json::from_str(text).map_err(json_error)?;
    raw.into_instance()
}

/// Parse, validate, and reject demands without a feasible walk.
pub fn load_instance<S: Scalar>(text: &str) -> Result<PcsInstance<S>> {
    let inst = parse_instance(text)?;
    inst.validate_feasible()?;
    Ok(inst)
}

pub fn instance_to_value<S: Scalar>(inst: &PcsInstance<S>) -> Value {
    serde_json::to_value(RawInstance::from_instance(inst)).expect("instance serializes")
}

pub fn instance_to_json<S: Scalar>(inst: &PcsInstance<S>) -> String {
    serde_json::to_string_pretty(&RawInstance::from_instance(inst)).expect("instance serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Q;

    const TEXT: &str = r#"{"n":3,"m":1,"tau":1,"packing":1,"covering":0,
        "edges":[{"u":0,"v":1,"cost":"1/1","res":["1/2",1]},{"u":1,"v":2,"cost":1,"res":[1,0]}],
        "demands":[{"s":0,"t":2,"budget":["3/2",1]}]}"#;

    #[test]
    fn roundtrip() {
        let inst: PcsInstance<Q> = load_instance(TEXT).unwrap();
        assert_eq!(inst.edges[0].cons.length, Q::from_ratio(1, 2));
        let again: PcsInstance<Q> = parse_instance(&instance_to_json(&inst)).unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn rejects_zero_denominator() {
        let bad = TEXT.replace("\"1/2\"", "\"3/0\"");
        match parse_instance::<Q>(&bad) {
            Err(PcsError::Parse { location, .. }) => assert_eq!(location, "edges[0].res[0]"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_infeasible_demand() {
        let bad = TEXT.replace("[\"3/2\",1]", "[\"1/1\",1]");
        assert!(matches!(
            load_instance::<Q>(&bad),
            Err(PcsError::InfeasibleDemand { .. })
        ));
    }
}
