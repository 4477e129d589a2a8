//! The FIFO vector field, its monotone extension, and domain classification.
//!
//! Every node `v` computes a throttle
//!
//! ```text
//! alpha_v(x) = min over out-links k of min{1, s_k(x_k) / (R_k^v * sum_{j in in(v)} d_j(x_j))}
//! ```
//!
//! which scales the outflow of every link entering `v`. The monotone
//! extension drops the throttle at diverging nodes: links entering a node with
//! more than one out-link discharge their full demand. Both fields coincide on
//! the monotone-flow domain, the set of states where those diverging throttles
//! are inactive.

use serde::{Deserialize, Serialize};

use crate::network::Network;

/// Default tolerance for the operational interior of the monotone-flow domain.
pub const DEFAULT_MARGIN_TOL: f64 = 1e-6;

/// Relative tolerance for treating an outflow as equal to the demand.
pub const FREE_FLOW_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Field {
    /// The FIFO dynamics.
    #[serde(rename = "F")]
    Fifo,
    /// The monotone extension.
    #[serde(rename = "H")]
    Monotone,
}

/// All intermediate flows of one vector-field evaluation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Flows {
    pub demand: Vec<f64>,
    pub supply: Vec<f64>,
    /// Total demand entering each node.
    pub node_demand: Vec<f64>,
    /// Throttle per node.
    pub alpha: Vec<f64>,
    pub outflow: Vec<f64>,
    pub inflow: Vec<f64>,
}

impl Flows {
    pub fn rates(&self) -> Vec<f64> {
        self.inflow.iter().zip(&self.outflow).map(|(a, b)| a - b).collect()
    }
}

/// Reusable evaluator holding scratch buffers; used on every integration step.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    net: &'a Network,
    flows: Flows,
    no_input: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(net: &'a Network) -> Self {
        let (n, m) = (net.num_links(), net.nodes().len());
        Self {
            net,
            flows: Flows {
                demand: vec![0.0; n],
                supply: vec![0.0; n],
                node_demand: vec![0.0; m],
                alpha: vec![1.0; m],
                outflow: vec![0.0; n],
                inflow: vec![0.0; n],
            },
            no_input: vec![0.0; net.entries().len()],
        }
    }

    pub fn network(&self) -> &'a Network {
        self.net
    }

    pub fn evaluate(&mut self, x: &[f64], u: &[f64], field: Field) -> &Flows {
        let net = self.net;
        let f = &mut self.flows;
        for (i, link) in net.links().iter().enumerate() {
            f.demand[i] = link.demand.eval(x[i]);
            f.supply[i] = link.supply.eval(x[i]);
        }
        for (v, node) in net.nodes().iter().enumerate() {
            let total: f64 = node.in_links.iter().map(|&j| f.demand[j]).sum();
            f.node_demand[v] = total;
            f.alpha[v] = throttle(net, &f.supply, v, total);
        }
        for (i, link) in net.links().iter().enumerate() {
            let unthrottled = field == Field::Monotone && net.is_diverging(link.head);
            f.outflow[i] = if unthrottled {
                f.demand[i]
            } else {
                f.alpha[link.head] * f.demand[i]
            };
        }
        for (i, link) in net.links().iter().enumerate() {
            f.inflow[i] = match link.tail {
                None => u[net.entry_position(i)].min(f.supply[i]),
                Some(t) => {
                    let through: f64 = net.nodes()[t].in_links.iter().map(|&j| f.outflow[j]).sum();
                    link.split.unwrap_or(0.0) * through
                }
            };
        }
        &self.flows
    }

    /// Domain of `x`; outflows, and hence the domain, do not depend on the input.
    pub fn domain(&mut self, x: &[f64]) -> Domain {
        let u = std::mem::take(&mut self.no_input);
        self.evaluate(x, &u, Field::Fifo);
        self.no_input = u;
        domain_of(self.net, &self.flows)
    }

    /// Writes `inflow - outflow` into `out`.
    pub fn rates_into(&mut self, x: &[f64], u: &[f64], field: Field, out: &mut [f64]) {
        let f = self.evaluate(x, u, field);
        for ((o, a), b) in out.iter_mut().zip(&f.inflow).zip(&f.outflow) {
            *o = a - b;
        }
    }
}

fn throttle(net: &Network, supply: &[f64], v: usize, node_demand: f64) -> f64 {
    let mut alpha: f64 = 1.0;
    if node_demand <= 0.0 {
        return alpha;
    }
    for &k in &net.nodes()[v].out_links {
        let requested = net.link(k).split.unwrap_or(0.0) * node_demand;
        if requested > supply[k] {
            alpha = alpha.min(supply[k] / requested);
        }
    }
    alpha
}

/// Throttle `alpha_v(x)` at node `v`; 1 when `v` has no out-links or no
/// incoming demand.
pub fn alpha(net: &Network, x: &[f64], v: usize) -> f64 {
    let supply: Vec<f64> = net.links().iter().zip(x).map(|(l, &xi)| l.supply.eval(xi)).collect();
    let total: f64 = net.nodes()[v]
        .in_links
        .iter()
        .map(|&j| net.link(j).demand.eval(x[j]))
        .sum();
    throttle(net, &supply, v, total)
}

pub fn flows(net: &Network, x: &[f64], u: &[f64], field: Field) -> Flows {
    let mut ev = Evaluator::new(net);
    ev.evaluate(x, u, field);
    ev.flows
}

/// The FIFO vector field `F(x, u)`.
pub fn vector_field(net: &Network, x: &[f64], u: &[f64]) -> Vec<f64> {
    flows(net, x, u, Field::Fifo).rates()
}

/// The monotone extension `H(x, u)`.
pub fn monotone_extension(net: &Network, x: &[f64], u: &[f64]) -> Vec<f64> {
    flows(net, x, u, Field::Monotone).rates()
}

/// Flow leaving the network: at every node, the share of its throughput not
/// routed to an out-link.
pub fn exit_flow(net: &Network, flows: &Flows) -> f64 {
    net.nodes()
        .iter()
        .enumerate()
        .map(|(v, node)| {
            let through: f64 = node.in_links.iter().map(|&j| flows.outflow[j]).sum();
            (1.0 - net.split_sum(v)) * through
        })
        .sum()
}

/// Flow admitted through entry links.
pub fn admitted_flow(net: &Network, flows: &Flows) -> f64 {
    net.entries().iter().map(|&i| flows.inflow[i]).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkRegime {
    FreeFlow,
    Congested,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Domain {
    /// Every link is in free flow.
    #[serde(rename = "IN_F")]
    FreeFlow,
    /// Diverging throttles are inactive but some link is congested.
    #[serde(rename = "IN_M_NOT_F")]
    MonotoneOnly,
    #[serde(rename = "OUTSIDE_M")]
    Outside,
}

impl Domain {
    pub fn in_monotone(self) -> bool {
        self != Domain::Outside
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DomainClassification {
    pub domain: Domain,
    pub links: Vec<LinkRegime>,
    /// Smallest supply slack `s_k - R_k^v * sum_j d_j` over the out-links of
    /// diverging nodes; `None` when the network has no diverging node.
    pub margin: Option<f64>,
    /// Whether `margin` exceeds the tolerance the classification was run with.
    pub interior: bool,
}

/// Supply slack at the diverging nodes; see [`DomainClassification::margin`].
pub fn monotone_margin(net: &Network, x: &[f64]) -> Option<f64> {
    let u = vec![0.0; net.entries().len()];
    margin_of(net, &flows(net, x, &u, Field::Fifo))
}

/// [`monotone_margin`] from already evaluated flows.
pub fn margin_of(net: &Network, f: &Flows) -> Option<f64> {
    let mut margin: Option<f64> = None;
    for (v, node) in net.nodes().iter().enumerate() {
        if !net.is_diverging(v) {
            continue;
        }
        for &k in &node.out_links {
            let slack = f.supply[k] - net.link(k).split.unwrap_or(0.0) * f.node_demand[v];
            margin = Some(margin.map_or(slack, |m| m.min(slack)));
        }
    }
    margin
}

/// Whether `x` lies in the operational interior of the monotone-flow domain.
pub fn in_interior(net: &Network, x: &[f64], margin_tol: f64) -> bool {
    monotone_margin(net, x).is_none_or(|m| m > margin_tol)
}

fn regime(net: &Network, f: &Flows, i: usize) -> LinkRegime {
    let scale = net.link(i).critical().map_or(1.0, |c| c.flow.max(1.0));
    if (f.outflow[i] - f.demand[i]).abs() <= FREE_FLOW_TOL * scale {
        LinkRegime::FreeFlow
    } else {
        LinkRegime::Congested
    }
}

fn domain_of(net: &Network, f: &Flows) -> Domain {
    let mut all_free = true;
    for (i, link) in net.links().iter().enumerate() {
        if regime(net, f, i) == LinkRegime::Congested {
            if net.is_diverging(link.head) {
                return Domain::Outside;
            }
            all_free = false;
        }
    }
    if all_free {
        Domain::FreeFlow
    } else {
        Domain::MonotoneOnly
    }
}

pub fn classify(net: &Network, x: &[f64], margin_tol: f64) -> DomainClassification {
    // The input does not affect outflows.
    let u = vec![0.0; net.entries().len()];
    let f = flows(net, x, &u, Field::Fifo);
    let links = (0..net.num_links()).map(|i| regime(net, &f, i)).collect();
    let domain = domain_of(net, &f);
    let margin = monotone_margin(net, x);
    DomainClassification {
        domain,
        links,
        margin,
        interior: margin.is_none_or(|m| m > margin_tol),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn idx(net: &Network, id: &str) -> usize {
        net.link_index(id).unwrap()
    }

    #[test]
    fn alpha_at_diamond_equilibrium() {
        let net = fixtures::diamond();
        let a = net.node_index("a").unwrap();
        assert_eq!(alpha(&net, &[8.0, 4.0, 4.0, 4.0, 8.0], a), 1.0);
    }

    #[test]
    fn alpha_at_congested_merge() {
        // One out-link with supply 15 fed by demands 50 and 15.
        let net = fixtures::diamond();
        let b = net.node_index("b").unwrap();
        let x = [0.0, 60.0, 0.0, 15.0, 15.0];
        assert!((alpha(&net, &x, b) - 15.0 / 65.0).abs() < 1e-15);
    }

    #[test]
    fn alpha_is_one_without_demand() {
        let net = fixtures::loop_network();
        let x = [10.0, 0.0, 30.0, 30.0];
        let a = net.node_index("a").unwrap();
        assert!((alpha(&net, &x, a) - 0.6).abs() < 1e-15);
        let b = net.node_index("b").unwrap();
        assert_eq!(alpha(&net, &x, b), 1.0);
        let exit = net.node_index("exit").unwrap();
        assert_eq!(alpha(&net, &x, exit), 1.0);
    }

    #[test]
    fn equilibria_are_stationary() {
        let net = fixtures::diamond();
        let r = vector_field(&net, &[8.0, 4.0, 4.0, 4.0, 8.0], &[8.0]);
        assert!(r.iter().all(|&v| v == 0.0), "{r:?}");
        let net = fixtures::loop_network();
        let r = vector_field(&net, &[5.0, 10.0, 5.0, 5.0], &[5.0]);
        assert!(r.iter().all(|&v| v == 0.0), "{r:?}");
    }

    #[test]
    fn zero_state_zero_input() {
        for net in [fixtures::diamond(), fixtures::loop_network()] {
            let x = vec![0.0; net.num_links()];
            assert!(vector_field(&net, &x, &[0.0]).iter().all(|&v| v == 0.0));
            assert!(monotone_extension(&net, &x, &[0.0]).iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn extension_differs_when_diverge_is_throttled() {
        let net = fixtures::diamond();
        // s_2(95) = 5 < d_1(15) / 2, so node a throttles link 1.
        let x = [15.0, 95.0, 4.0, 4.0, 8.0];
        let f = vector_field(&net, &x, &[8.0]);
        let h = monotone_extension(&net, &x, &[8.0]);
        let (l1, l2) = (idx(&net, "1"), idx(&net, "2"));
        // F: link 1 discharges 10 (alpha = 2/3), H: the full demand of 15.
        assert!((f[l1] - (8.0 - 10.0)).abs() < 1e-12);
        assert!((h[l1] - (8.0 - 15.0)).abs() < 1e-12);
        assert!((h[l2] - f[l2] - 2.5).abs() < 1e-12);
        assert_eq!(classify(&net, &x, DEFAULT_MARGIN_TOL).domain, Domain::Outside);
    }

    #[test]
    fn extension_matches_on_congested_merge() {
        let net = fixtures::diamond();
        // Link 2 is throttled by the merge at b, but the diverging node a is not.
        let x = [8.0, 95.0, 4.0, 4.0, 29.0];
        let c = classify(&net, &x, DEFAULT_MARGIN_TOL);
        assert_eq!(c.domain, Domain::MonotoneOnly);
        assert_eq!(c.links[idx(&net, "2")], LinkRegime::Congested);
        assert_eq!(vector_field(&net, &x, &[8.0]), monotone_extension(&net, &x, &[8.0]));
    }

    #[test]
    fn classification_examples() {
        let net = fixtures::diamond();
        let c = classify(&net, &[8.0, 4.0, 4.0, 4.0, 8.0], DEFAULT_MARGIN_TOL);
        assert_eq!(c.domain, Domain::FreeFlow);
        assert!(c.interior);
        let c = classify(&net, &net.jam(), DEFAULT_MARGIN_TOL);
        assert_eq!(c.domain, Domain::Outside);
        assert!(c.margin.unwrap() < 0.0);
        let c = classify(&net, &[0.0; 5], DEFAULT_MARGIN_TOL);
        assert_eq!(c.domain, Domain::FreeFlow);
        // margin at 0 is the smallest supply among a's out-links
        assert_eq!(c.margin, Some(50.0));
    }

    #[test]
    fn mass_balance_holds() {
        let net = fixtures::diamond();
        let x = [20.0, 70.0, 99.0, 25.0, 29.0];
        let f = flows(&net, &x, &[12.0], Field::Fifo);
        let total: f64 = f.rates().iter().sum();
        let expected = admitted_flow(&net, &f) - exit_flow(&net, &f);
        assert!((total - expected).abs() < 1e-12);
    }
}
