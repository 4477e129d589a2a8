//! JSON network documents.

use serde::{Deserialize, Serialize};

use super::{Link, Network, PiecewiseLinear};
use crate::error::NetworkError;

/// A node or link id; documents may use strings or integers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NodeRef {
    Text(String),
    Number(i64),
}

impl std::fmt::Display for NodeRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NodeRef::Text(s) => f.write_str(s),
            NodeRef::Number(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub id: NodeRef,
    pub tail: Option<NodeRef>,
    pub head: NodeRef,
    pub demand_breakpoints: Vec<(f64, f64)>,
    pub supply_breakpoints: Vec<(f64, f64)>,
    pub jam_density: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Ratio {
    Number(f64),
    Text(String),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub node: NodeRef,
    pub link: NodeRef,
    pub ratio: Ratio,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub nodes: Vec<NodeRef>,
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub splits: Vec<SplitSpec>,
}

/// Parses a split ratio written as a decimal (`"0.5"`) or a fraction (`"1/2"`).
pub fn parse_ratio(text: &str) -> Option<f64> {
    let text = text.trim();
    let value = match text.split_once('/') {
        Some((num, den)) => {
            let num: f64 = num.trim().parse().ok()?;
            let den: f64 = den.trim().parse().ok()?;
            if den == 0.0 {
                return None;
            }
            num / den
        }
        None => text.parse().ok()?,
    };
    value.is_finite().then_some(value)
}

impl NetworkSpec {
    pub fn build(&self) -> Result<Network, NetworkError> {
        let node_ids: Vec<String> = self.nodes.iter().map(ToString::to_string).collect();
        let node_index = |link: &str, r: &NodeRef| {
            let name = r.to_string();
            node_ids
                .iter()
                .position(|n| *n == name)
                .ok_or(NetworkError::UnknownNode {
                    link: link.to_string(),
                    node: name,
                })
        };

        let mut links = Vec::with_capacity(self.links.len());
        for spec in &self.links {
            let id = spec.id.to_string();
            let curve = |which: &'static str, pts: &Vec<(f64, f64)>| {
                let f = PiecewiseLinear::new(pts.clone()).map_err(|source| NetworkError::Curve {
                    link: id.clone(),
                    which,
                    source,
                })?;
                if f.upper() != spec.jam_density {
                    return Err(NetworkError::DomainMismatch {
                        link: id.clone(),
                        which,
                        end: f.upper(),
                        jam: spec.jam_density,
                    });
                }
                Ok(f)
            };
            let demand = curve("demand", &spec.demand_breakpoints)?;
            let supply = curve("supply", &spec.supply_breakpoints)?;
            let head = node_index(&id, &spec.head)?;
            let tail = spec.tail.as_ref().map(|t| node_index(&id, t)).transpose()?;
            links.push(Link::new(id, tail, head, demand, supply));
        }

        for split in &self.splits {
            let node = split.node.to_string();
            let link_id = split.link.to_string();
            let i = links
                .iter()
                .position(|l| l.id == link_id)
                .ok_or_else(|| NetworkError::UnknownLink(link_id.clone()))?;
            let v = node_ids.iter().position(|n| *n == node);
            if v.is_none() || links[i].tail != v {
                return Err(NetworkError::SplitNotOutLink { node, link: link_id });
            }
            if links[i].split.is_some() {
                return Err(NetworkError::DuplicateSplit { node, link: link_id });
            }
            let ratio = match &split.ratio {
                Ratio::Number(r) => Some(*r),
                Ratio::Text(t) => parse_ratio(t),
            }
            .ok_or_else(|| NetworkError::BadRatio {
                node: node.clone(),
                link: link_id.clone(),
                text: match &split.ratio {
                    Ratio::Number(r) => r.to_string(),
                    Ratio::Text(t) => t.clone(),
                },
            })?;
            links[i].split = Some(ratio);
        }

        Network::new(node_ids, links)
    }
}
