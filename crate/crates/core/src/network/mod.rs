//! Flow-network data model: nodes, links with supply/demand curves, split
//! ratios, and the routing matrices derived from them.

mod curve;
mod io;
mod validate;

use nalgebra::DMatrix;

pub use curve::{critical_point, CriticalPoint, PiecewiseLinear};
pub use io::{parse_ratio, LinkSpec, NetworkSpec, NodeRef, Ratio, SplitSpec};
pub use validate::{Assumption, Subject, ValidationReport, Violation};

use crate::error::{ModelError, NetworkError};

/// Default minimum demand slope required below the critical density.
pub const DEFAULT_MIN_SLOPE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Link {
    pub id: String,
    /// Tail node index, `None` for entry links.
    pub tail: Option<usize>,
    pub head: usize,
    pub demand: PiecewiseLinear,
    pub supply: PiecewiseLinear,
    pub jam_density: f64,
    /// Split ratio at the tail node, `R_i^{tail}`.
    pub split: Option<f64>,
    critical: Option<CriticalPoint>,
}

impl Link {
    pub fn new(
        id: impl Into<String>,
        tail: Option<usize>,
        head: usize,
        demand: PiecewiseLinear,
        supply: PiecewiseLinear,
    ) -> Self {
        let jam_density = demand.upper();
        let critical = critical_point(&demand, &supply);
        Self {
            id: id.into(),
            tail,
            head,
            demand,
            supply,
            jam_density,
            split: None,
            critical,
        }
    }

    pub fn is_entry(&self) -> bool {
        self.tail.is_none()
    }

    pub fn critical(&self) -> Option<CriticalPoint> {
        self.critical
    }

    /// Critical flow, or an error naming the link when the curves never cross.
    pub fn critical_flow(&self) -> Result<f64, ModelError> {
        self.critical
            .map(|c| c.flow)
            .ok_or_else(|| ModelError::NoCriticalPoint(self.id.clone()))
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: String,
    pub in_links: Vec<usize>,
    pub out_links: Vec<usize>,
}

/// A validated-or-not flow network. Immutable once built.
#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<Node>,
    links: Vec<Link>,
    entries: Vec<usize>,
    ordinary: Vec<usize>,
    /// Position of each link inside `entries` or `ordinary`.
    position: Vec<usize>,
    diverging: Vec<bool>,
    min_slope: f64,
}

impl Network {
    /// Assembles a network from node ids and links whose `tail`/`head` are
    /// indices into `node_ids`.
    pub fn new(node_ids: Vec<String>, links: Vec<Link>) -> Result<Self, NetworkError> {
        let mut nodes: Vec<Node> = Vec::with_capacity(node_ids.len());
        for id in node_ids {
            if nodes.iter().any(|n| n.id == id) {
                return Err(NetworkError::DuplicateNode(id));
            }
            nodes.push(Node {
                id,
                in_links: Vec::new(),
                out_links: Vec::new(),
            });
        }
        let mut entries = Vec::new();
        let mut ordinary = Vec::new();
        let mut position = Vec::with_capacity(links.len());
        for (i, link) in links.iter().enumerate() {
            if links[..i].iter().any(|l| l.id == link.id) {
                return Err(NetworkError::DuplicateLink(link.id.clone()));
            }
            let bad_node = |n: usize| NetworkError::UnknownNode {
                link: link.id.clone(),
                node: format!("#{n}"),
            };
            nodes
                .get_mut(link.head)
                .ok_or_else(|| bad_node(link.head))?
                .in_links
                .push(i);
            match link.tail {
                Some(t) => {
                    nodes.get_mut(t).ok_or_else(|| bad_node(t))?.out_links.push(i);
                    position.push(ordinary.len());
                    ordinary.push(i);
                }
                None => {
                    position.push(entries.len());
                    entries.push(i);
                }
            }
        }
        let diverging = nodes.iter().map(|n| n.out_links.len() > 1).collect();
        Ok(Self {
            nodes,
            links,
            entries,
            ordinary,
            position,
            diverging,
            min_slope: DEFAULT_MIN_SLOPE,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, NetworkError> {
        let spec: NetworkSpec = serde_json::from_str(text)?;
        spec.build()
    }

    pub fn with_min_slope(mut self, min_slope: f64) -> Self {
        self.min_slope = min_slope;
        self
    }

    pub fn min_slope(&self) -> f64 {
        self.min_slope
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn link(&self, i: usize) -> &Link {
        &self.links[i]
    }

    pub fn num_links(&self) -> usize {
        self.links.len()
    }

    /// Entry link indices in document order.
    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    /// Ordinary link indices in document order.
    pub fn ordinary(&self) -> &[usize] {
        &self.ordinary
    }

    pub fn link_index(&self, id: &str) -> Option<usize> {
        self.links.iter().position(|l| l.id == id)
    }

    pub fn node_index(&self, id: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.id == id)
    }

    /// Position of entry link `i` inside the input vector.
    pub fn entry_position(&self, i: usize) -> usize {
        debug_assert!(self.links[i].is_entry());
        self.position[i]
    }

    pub fn is_diverging(&self, v: usize) -> bool {
        self.diverging[v]
    }

    pub fn split_sum(&self, v: usize) -> f64 {
        self.nodes[v]
            .out_links
            .iter()
            .map(|&k| self.links[k].split.unwrap_or(0.0))
            .sum()
    }

    /// Nodes with more than one out-link.
    pub fn diverging_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| self.diverging[v]).collect()
    }

    /// Nodes whose split ratios sum to strictly less than one.
    pub fn out_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len()).filter(|&v| self.split_sum(v) < 1.0).collect()
    }

    /// Heads of entry links.
    pub fn in_nodes(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.entries.iter().map(|&i| self.links[i].head).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Jam densities, one per link.
    pub fn jam(&self) -> Vec<f64> {
        self.links.iter().map(|l| l.jam_density).collect()
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    /// Routing matrices `(R_O, R_R)`.
    ///
    /// Rows and columns follow [`Network::ordinary`] and [`Network::entries`].
    /// Entry `(k, l)` is the split ratio of link `k` when `k` leaves the head
    /// node of link `l`, and zero otherwise.
    pub fn routing_matrices(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let n_o = self.ordinary.len();
        let mut r_o = DMatrix::zeros(n_o, n_o);
        let mut r_r = DMatrix::zeros(n_o, self.entries.len());
        for (row, &k) in self.ordinary.iter().enumerate() {
            let link = &self.links[k];
            let (Some(tail), Some(ratio)) = (link.tail, link.split) else {
                continue;
            };
            for &l in &self.nodes[tail].in_links {
                let col = self.position[l];
                if self.links[l].is_entry() {
                    r_r[(row, col)] = ratio;
                } else {
                    r_o[(row, col)] = ratio;
                }
            }
        }
        (r_o, r_r)
    }

    pub fn check_state(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.links.len() {
            return Err(ModelError::StateDimension {
                expected: self.links.len(),
                got: x.len(),
            });
        }
        for (l, &v) in self.links.iter().zip(x) {
            if !(0.0..=l.jam_density).contains(&v) {
                return Err(ModelError::DensityOutOfRange {
                    link: l.id.clone(),
                    value: v,
                    jam: l.jam_density,
                });
            }
        }
        Ok(())
    }

    pub fn check_input(&self, u: &[f64]) -> Result<(), ModelError> {
        if u.len() != self.entries.len() {
            return Err(ModelError::InputDimension {
                expected: self.entries.len(),
                got: u.len(),
            });
        }
        for (&i, &v) in self.entries.iter().zip(u) {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ModelError::NegativeInput {
                    link: self.links[i].id.clone(),
                    value: v,
                });
            }
        }
        Ok(())
    }
}

/// A density vector over all links, bounded by the jam densities.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
#[serde(transparent)]
pub struct DensityState(Vec<f64>);

impl DensityState {
    pub fn new(net: &Network, x: Vec<f64>) -> Result<Self, ModelError> {
        net.check_state(&x)?;
        Ok(Self(x))
    }

    pub fn zeros(net: &Network) -> Self {
        Self(vec![0.0; net.num_links()])
    }

    pub fn jam(net: &Network) -> Self {
        Self(net.jam())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Deref for DensityState {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
