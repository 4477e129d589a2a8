use rayon::prelude::*;
use serde::Serialize;

use super::integrate::{steps_for, Integration, Stepper};
use super::signal::MeteringSignal;
use crate::dynamics::Domain;
use crate::error::SimulationError;
use crate::network::Network;

/// Slack allowed on distance increases and order checks.
pub const AUDIT_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PairStatus {
    Pass,
    Fail,
    /// A trajectory left the monotone-flow domain, so nothing is claimed.
    Void,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairAudit {
    pub status: PairStatus,
    pub initial_distance: f64,
    pub final_distance: f64,
    /// Largest one-step growth of the l1 distance beyond the allowed slack.
    pub worst_increase: f64,
    /// Whether the starting points were componentwise ordered.
    pub ordered: bool,
    /// Largest violation of the initial order along the run.
    pub worst_order_violation: f64,
    /// Time at which a trajectory left the monotone-flow domain.
    pub void_at: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractionReport {
    pub pairs: Vec<PairAudit>,
}

impl ContractionReport {
    pub fn count(&self, status: PairStatus) -> usize {
        self.pairs.iter().filter(|p| p.status == status).count()
    }

    pub fn passed(&self) -> bool {
        self.count(PairStatus::Fail) == 0
    }
}

fn leq(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

fn audit_pair(
    net: &Network,
    x0: &[f64],
    y0: &[f64],
    signal: &MeteringSignal,
    opts: &Integration,
) -> Result<PairAudit, SimulationError> {
    let mut a = Stepper::new(net, x0, signal, opts.field, opts.method, opts.dt)?;
    let mut b = Stepper::new(net, y0, signal, opts.field, opts.method, opts.dt)?;
    let steps = steps_for(opts.t_end, a.dt())?;
    // orient so that `lo <= hi` when the pair is ordered
    let order = if leq(x0, y0) {
        Some(false)
    } else if leq(y0, x0) {
        Some(true)
    } else {
        None
    };

    let initial = crate::l1_distance(x0, y0);
    let mut audit = PairAudit {
        status: PairStatus::Pass,
        initial_distance: initial,
        final_distance: initial,
        worst_increase: 0.0,
        ordered: order.is_some(),
        worst_order_violation: 0.0,
        void_at: None,
    };
    let mut prev = initial;
    for k in 0..=steps {
        if k > 0 {
            a.advance()?;
            b.advance()?;
        }
        if a.domain() == Domain::Outside || b.domain() == Domain::Outside {
            audit.status = PairStatus::Void;
            audit.void_at = Some(a.time());
            return Ok(audit);
        }
        let d = crate::l1_distance(a.state(), b.state());
        let excess = d - prev - AUDIT_SLACK * (1.0 + d);
        if excess > 0.0 {
            audit.status = PairStatus::Fail;
            audit.worst_increase = audit.worst_increase.max(d - prev);
        }
        prev = d;
        if let Some(swap) = order {
            let (lo, hi) = if swap {
                (b.state(), a.state())
            } else {
                (a.state(), b.state())
            };
            let violation = lo.iter().zip(hi).map(|(l, h)| l - h).fold(0.0, f64::max);
            if violation > AUDIT_SLACK {
                audit.status = PairStatus::Fail;
            }
            audit.worst_order_violation = audit.worst_order_violation.max(violation);
        }
    }
    audit.final_distance = prev;
    Ok(audit)
}

/// Checks that l1 distances between paired trajectories never grow and that
/// ordered pairs stay ordered, for as long as both remain in the
/// monotone-flow domain. Pairs run in parallel; the report keeps input order.
pub fn contraction_audit(
    net: &Network,
    pairs: &[(Vec<f64>, Vec<f64>)],
    signal: &MeteringSignal,
    opts: &Integration,
) -> Result<ContractionReport, SimulationError> {
    let pairs = pairs
        .par_iter()
        .map(|(x, y)| audit_pair(net, x, y, signal, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ContractionReport { pairs })
}
