//! Monotone-invariant points and region-of-attraction certificates.
//!
//! A point `y` in the monotone-flow domain whose trajectory under constant
//! `u_bar` never leaves that domain makes the box `[0, y]` a region of
//! attraction for every input dominated by `u_bar`: the free-flow
//! equilibrium for constant strictly feasible input, the periodic orbit for
//! periodic input with a strictly feasible bound.

mod iteration;
mod point;
mod sample;

use serde::{Deserialize, Serialize};

pub use iteration::{
    iteration_certificate, monotone_flow_iteration, step_bound, IterationOptions, IterationRecord, DEFAULT_ALPHA,
    DEFAULT_ITERATION_TOL, LIMIT_TOL,
};
pub use point::{
    check_vector_field_certificate, user_supplied_certificate, verify_invariant_point, CertMethod, Evidence,
    InvariantCheck, InvariantPointCertificate, DEFAULT_HORIZON, FIELD_TOL,
};
pub use sample::{sample_points, sample_verify, SampleOptions, SampleOutcome, SampleReport};

use crate::dynamics::{classify, vector_field, Domain, DEFAULT_MARGIN_TOL};
use crate::equilibrium::{self, Feasibility};
use crate::error::CertifyError;
use crate::network::Network;
use crate::simulate::{find_periodic_orbit, MeteringSignal, PeriodicOrbit, DEFAULT_DT};

pub const DEFAULT_ORBIT_TOL: f64 = 1e-8;
pub const DEFAULT_ORBIT_MAX_ITERS: usize = 10_000;

/// Which convergence guarantee a certificate relies on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremClause {
    /// Constant strictly feasible input: every trajectory in the box
    /// converges to the free-flow equilibrium.
    EquilibriumConvergence,
    /// Constant input on the feasibility boundary: trajectories converge to
    /// some equilibrium in the monotone-flow domain, not necessarily the
    /// free-flow one.
    WeakEquilibriumConvergence,
    /// Periodic input with strictly feasible bound: every trajectory in the
    /// box converges to the periodic orbit.
    PeriodicOrbitConvergence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Attractor {
    Equilibrium {
        value: Vec<f64>,
    },
    /// Unspecified equilibrium in the monotone-flow domain.
    EquilibriumInMonotoneDomain,
    PeriodicOrbit {
        period: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        orbit_file: Option<String>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertParams {
    pub alpha: Option<f64>,
    pub margin_tol: f64,
    /// Horizon of the simulation check behind the invariant point, if any.
    pub horizon: Option<f64>,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoaCertificate {
    pub method: CertMethod,
    pub ubar: Vec<f64>,
    /// Upper corner of the certified box `[0, y]`.
    pub y: Vec<f64>,
    pub attractor: Attractor,
    pub theorem_clause: TheoremClause,
    pub params: CertParams,
    pub signal: MeteringSignal,
    /// Feasibility class of the signal's upper bound.
    pub feasibility: Feasibility,
    pub evidence: Evidence,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RoaOptions {
    /// Step for any integration the certificate depends on.
    pub dt: f64,
    pub margin_tol: f64,
    pub orbit_tol: f64,
    pub orbit_max_iters: usize,
}

impl Default for RoaOptions {
    fn default() -> Self {
        Self {
            dt: DEFAULT_DT,
            margin_tol: DEFAULT_MARGIN_TOL,
            orbit_tol: DEFAULT_ORBIT_TOL,
            orbit_max_iters: DEFAULT_ORBIT_MAX_ITERS,
        }
    }
}

/// Errors unless `ubar` bounds the signal on every entry link.
pub fn check_dominated(net: &Network, signal: &MeteringSignal, ubar: &[f64]) -> Result<(), CertifyError> {
    for ((&i, &b), v) in net.entries().iter().zip(ubar).zip(signal.upper_bound()) {
        if v > b {
            return Err(CertifyError::NotDominated {
                link: net.link(i).id.clone(),
                bound: b,
                input: v,
            });
        }
    }
    Ok(())
}

fn recheck_point(net: &Network, point: &InvariantPointCertificate, margin_tol: f64) -> Result<(), CertifyError> {
    net.check_state(&point.y)?;
    if classify(net, &point.y, margin_tol).domain == Domain::Outside {
        return Err(CertifyError::OutsideMonotone);
    }
    match point.method {
        CertMethod::VectorField => {
            let field = vector_field(net, &point.y, &point.ubar);
            if let Some((i, &value)) = field.iter().enumerate().find(|(_, v)| **v > FIELD_TOL) {
                return Err(CertifyError::FieldPositive {
                    link: net.link(i).id.clone(),
                    value,
                });
            }
        }
        CertMethod::Iteration | CertMethod::UserSupplied => match &point.verification {
            Some(check) if check.holds => {}
            Some(check) => {
                return Err(CertifyError::LeavesMonotone {
                    time: check.first_exit.unwrap_or(0.0),
                })
            }
            None => return Err(CertifyError::LeavesMonotone { time: 0.0 }),
        },
    }
    Ok(())
}

/// Binds the box `[0, y]` of an invariant point to the attractor of `signal`.
///
/// Returns the periodic orbit alongside the certificate for periodic signals.
pub fn certify_roa(
    net: &Network,
    signal: &MeteringSignal,
    point: &InvariantPointCertificate,
    opts: &RoaOptions,
) -> Result<(RoaCertificate, Option<PeriodicOrbit>), CertifyError> {
    if net.entries().is_empty() {
        return Err(CertifyError::NoEntries);
    }
    signal.check(net)?;
    net.check_input(&point.ubar)?;
    check_dominated(net, signal, &point.ubar)?;
    recheck_point(net, point, opts.margin_tol)?;

    let bound = signal.upper_bound();
    let feasibility = equilibrium::feasibility(net, &bound)?.class;
    let (attractor, clause, orbit) = match signal {
        MeteringSignal::Constant { u } => match feasibility {
            Feasibility::Infeasible => return Err(CertifyError::Infeasible),
            Feasibility::Boundary => {
                log::warn!("input is only boundary-feasible; certifying convergence to some equilibrium in M");
                (
                    Attractor::EquilibriumInMonotoneDomain,
                    TheoremClause::WeakEquilibriumConvergence,
                    None,
                )
            }
            Feasibility::Strict => {
                let xe = equilibrium::equilibrium_state(net, u)?;
                if let Some((i, by)) = xe
                    .iter()
                    .zip(&point.y)
                    .map(|(e, y)| e - y)
                    .enumerate()
                    .find(|(_, d)| *d > 1e-9)
                {
                    return Err(CertifyError::NotAboveEquilibrium {
                        link: net.link(i).id.clone(),
                        by,
                    });
                }
                (
                    Attractor::Equilibrium { value: xe },
                    TheoremClause::EquilibriumConvergence,
                    None,
                )
            }
        },
        MeteringSignal::Periodic(s) => {
            match equilibrium::feasibility(net, &point.ubar)?.class {
                Feasibility::Strict => {}
                Feasibility::Boundary => return Err(CertifyError::NotStrict("FEASIBLE_BOUNDARY")),
                Feasibility::Infeasible => return Err(CertifyError::NotStrict("INFEASIBLE")),
            }
            let orbit = find_periodic_orbit(net, signal, opts.dt, opts.orbit_tol, opts.orbit_max_iters)?;
            (
                Attractor::PeriodicOrbit {
                    period: s.period,
                    orbit_file: None,
                },
                TheoremClause::PeriodicOrbitConvergence,
                Some(orbit),
            )
        }
    };

    let alpha = match point.evidence {
        Evidence::Iteration { alpha, .. } => Some(alpha),
        _ => None,
    };
    let cert = RoaCertificate {
        method: point.method,
        ubar: point.ubar.clone(),
        y: point.y.clone(),
        attractor,
        theorem_clause: clause,
        params: CertParams {
            alpha,
            margin_tol: opts.margin_tol,
            horizon: point.verification.as_ref().map(|c| c.horizon),
            dt: opts.dt,
        },
        signal: signal.clone(),
        feasibility,
        evidence: point.evidence.clone(),
    };
    Ok((cert, orbit))
}

/// One certified box `[0, x^e(v)]` per candidate bound `v >= u`. Candidates
/// that are infeasible, fail to dominate `u`, or fail certification are
/// skipped with a warning.
pub fn union_roa(net: &Network, u: &[f64], candidates: &[Vec<f64>], opts: &RoaOptions) -> Vec<RoaCertificate> {
    let signal = MeteringSignal::constant(u.to_vec());
    candidates
        .iter()
        .filter_map(|v| {
            let cert = equilibrium::equilibrium_state(net, v)
                .map_err(CertifyError::from)
                .and_then(|y| check_vector_field_certificate(net, &y, v))
                .and_then(|point| certify_roa(net, &signal, &point, opts));
            match cert {
                Ok((cert, _)) => Some(cert),
                Err(e) => {
                    log::warn!("skipping candidate {v:?}: {e}");
                    None
                }
            }
        })
        .collect()
}
