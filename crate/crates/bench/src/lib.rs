//! Workloads for the engine benchmarks.

use fifonet_core::network::{Link, PiecewiseLinear};
use fifonet_core::Network;

fn triangular(cap: f64, jam: f64) -> (PiecewiseLinear, PiecewiseLinear) {
    let demand = PiecewiseLinear::new(vec![(0.0, 0.0), (cap, cap), (jam, cap)]).unwrap();
    let supply = PiecewiseLinear::new(vec![(0.0, cap), (jam - cap, cap), (jam, 0.0)]).unwrap();
    (demand, supply)
}

/// A freeway corridor with `sections` mainline links, an on-ramp entry link
/// at every node and an off-ramp share of 10% leaving at every node.
///
/// Mainline links carry capacity 60 and jam density 120; ramps carry 15 and 30.
pub fn corridor(sections: usize) -> Network {
    assert!(sections > 0);
    let nodes: Vec<String> = (0..=sections).map(|v| format!("n{v}")).collect();
    let mut links = Vec::new();
    let (d, s) = triangular(15.0, 30.0);
    links.push(Link::new("main0", None, 0, d, s));
    for v in 0..sections {
        let (d, s) = triangular(15.0, 30.0);
        links.push(Link::new(format!("ramp{v}"), None, v, d, s));
        let (d, s) = triangular(60.0, 120.0);
        let mut l = Link::new(format!("main{}", v + 1), Some(v), v + 1, d, s);
        l.split = Some(0.9);
        links.push(l);
    }
    Network::new(nodes, links).unwrap()
}

/// A constant input that is strictly feasible on [`corridor`].
pub fn corridor_input(net: &Network) -> Vec<f64> {
    vec![1.0; net.entries().len()]
}
