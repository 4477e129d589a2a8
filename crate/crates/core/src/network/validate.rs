use std::collections::VecDeque;

use serde::Serialize;

use super::Network;

/// Tolerance on `|d(x_crit) - s(x_crit)|`, relative to the critical flow.
const CROSSING_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// Every node reaches some out-node.
    ReachesOutNode,
    /// Every node is reached from some in-node.
    ReachedFromInNode,
    SplitPositive,
    SplitSum,
    DemandCurve,
    SupplyCurve,
    CriticalPoint,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum Subject {
    Node(String),
    Link(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub assumption: Assumption,
    pub subject: Subject,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            pass: violations.is_empty(),
            violations,
        }
    }

    pub fn violations_of(&self, a: Assumption) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(move |v| v.assumption == a)
    }
}

pub(super) fn validate(net: &Network) -> ValidationReport {
    let mut out = Vec::new();
    check_splits(net, &mut out);
    check_reachability(net, &mut out);
    for i in 0..net.num_links() {
        check_curves(net, i, &mut out);
    }
    ValidationReport::from_violations(out)
}

fn check_splits(net: &Network, out: &mut Vec<Violation>) {
    for (v, node) in net.nodes().iter().enumerate() {
        for &k in &node.out_links {
            let link = net.link(k);
            match link.split {
                Some(r) if r > 0.0 => {}
                Some(r) => out.push(Violation {
                    assumption: Assumption::SplitPositive,
                    subject: Subject::Link(link.id.clone()),
                    detail: format!("split ratio at node `{}` is {r}, must be > 0", node.id),
                }),
                None => out.push(Violation {
                    assumption: Assumption::SplitPositive,
                    subject: Subject::Link(link.id.clone()),
                    detail: format!("no split ratio given at node `{}`", node.id),
                }),
            }
        }
        let sum = net.split_sum(v);
        if sum > 1.0 + 1e-12 {
            out.push(Violation {
                assumption: Assumption::SplitSum,
                subject: Subject::Node(node.id.clone()),
                detail: format!("split ratios sum to {sum}, must be <= 1"),
            });
        }
    }
}

fn check_reachability(net: &Network, out: &mut Vec<Violation>) {
    let n = net.nodes().len();
    // successor/predecessor lists over ordinary links
    let mut succ = vec![Vec::new(); n];
    let mut pred = vec![Vec::new(); n];
    for l in net.links() {
        if let Some(t) = l.tail {
            succ[t].push(l.head);
            pred[l.head].push(t);
        }
    }
    let reaches_out = search(&pred, &net.out_nodes(), n);
    let reached_from_in = search(&succ, &net.in_nodes(), n);
    for (v, node) in net.nodes().iter().enumerate() {
        if !reaches_out[v] {
            out.push(Violation {
                assumption: Assumption::ReachesOutNode,
                subject: Subject::Node(node.id.clone()),
                detail: "no directed path to a node where flow leaves the network".into(),
            });
        }
        if !reached_from_in[v] {
            out.push(Violation {
                assumption: Assumption::ReachedFromInNode,
                subject: Subject::Node(node.id.clone()),
                detail: "no directed path from a node fed by an entry link".into(),
            });
        }
    }
}

/// Breadth-first search from `seeds` along `adj`; returns the visited mask.
fn search(adj: &[Vec<usize>], seeds: &[usize], n: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut queue: VecDeque<usize> = seeds.iter().copied().collect();
    for &s in seeds {
        seen[s] = true;
    }
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    seen
}

fn check_curves(net: &Network, i: usize, out: &mut Vec<Violation>) {
    let link = net.link(i);
    let eps = net.min_slope();
    let mut push = |assumption, detail: String| {
        out.push(Violation {
            assumption,
            subject: Subject::Link(link.id.clone()),
            detail,
        });
    };

    let d0 = link.demand.eval(0.0);
    if d0 != 0.0 {
        push(
            Assumption::DemandCurve,
            format!("demand at zero density is {d0}, must be 0"),
        );
    }
    let s_jam = link.supply.eval(link.jam_density);
    if s_jam != 0.0 {
        push(
            Assumption::SupplyCurve,
            format!("supply at jam density is {s_jam}, must be 0"),
        );
    }
    if link.supply.breakpoints().iter().any(|p| p.1 < 0.0) {
        push(Assumption::SupplyCurve, "supply takes negative values".into());
    }

    let Some(crit) = link.critical() else {
        push(
            Assumption::CriticalPoint,
            "demand and supply never cross on [0, jam]".into(),
        );
        return;
    };
    let mismatch = (link.demand.eval(crit.density) - link.supply.eval(crit.density)).abs();
    if mismatch > CROSSING_TOL * crit.flow.max(f64::MIN_POSITIVE) {
        push(
            Assumption::CriticalPoint,
            format!("curves differ by {mismatch} at the critical density {}", crit.density),
        );
    }

    for (a, b, m) in link.demand.slopes() {
        if a < crit.density && m < eps {
            push(
                Assumption::DemandCurve,
                format!("demand slope {m} on [{a}, {b}] below the critical density; must be >= {eps}"),
            );
        } else if m < 0.0 {
            push(Assumption::DemandCurve, format!("demand decreases on [{a}, {b}]"));
        }
    }
    for (a, b, m) in link.supply.slopes() {
        if b > crit.density && m > -eps {
            push(
                Assumption::SupplyCurve,
                format!("supply slope {m} on [{a}, {b}] above the critical density; must be <= -{eps}"),
            );
        } else if m > 0.0 {
            push(Assumption::SupplyCurve, format!("supply increases on [{a}, {b}]"));
        }
    }
}
