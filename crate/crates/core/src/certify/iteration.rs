use serde::Serialize;

use super::point::{verify_invariant_point, CertMethod, Evidence, InvariantPointCertificate};
use crate::dynamics::{classify, margin_of, Evaluator, Field, DEFAULT_MARGIN_TOL};
use crate::equilibrium::{self, Feasibility};
use crate::error::CertifyError;
use crate::network::Network;
use crate::simulate::MeteringSignal;

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_ITERATION_TOL: f64 = 1e-10;

/// Allowed l1 gap between the iteration limit and the closed-form equilibrium.
pub const LIMIT_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct IterationOptions {
    pub alpha: f64,
    /// Stop once `||x^{k+1} - x^k||_1 <= tol * alpha`.
    pub tol: f64,
    pub max_iters: usize,
    pub margin_tol: f64,
    /// Defaults to the jam density.
    pub start: Option<Vec<f64>>,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            tol: DEFAULT_ITERATION_TOL,
            max_iters: 50_000_000,
            margin_tol: DEFAULT_MARGIN_TOL,
            start: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub limit: Vec<f64>,
    pub equilibrium: Vec<f64>,
    pub iterations: usize,
    /// Largest index whose iterate fails the operational-interior test; -1
    /// if the start already passes it.
    pub n: i64,
    /// The iterate right after index `n`.
    pub x_next: Vec<f64>,
    pub alpha: f64,
    pub alpha_bound: f64,
    pub margin_tol: f64,
}

/// Largest admissible step: `0.5 / L` with `L` the largest sum of demand and
/// supply slopes over the links.
pub fn step_bound(net: &Network) -> f64 {
    let l = net
        .links()
        .iter()
        .map(|l| l.demand.max_abs_slope() + l.supply.max_abs_slope())
        .fold(0.0, f64::max);
    if l > 0.0 {
        0.5 / l
    } else {
        f64::INFINITY
    }
}

/// Forward-Euler iteration `x <- x + alpha * H(x, ubar)`, started from the
/// jam density unless `opts.start` says otherwise. No clamping is applied.
pub fn monotone_flow_iteration(
    net: &Network,
    ubar: &[f64],
    opts: &IterationOptions,
) -> Result<IterationRecord, CertifyError> {
    let alpha = opts.alpha;
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(CertifyError::BadStep(alpha));
    }
    let bound = step_bound(net);
    if alpha > bound {
        return Err(CertifyError::StepTooLarge { alpha, bound });
    }
    match equilibrium::feasibility(net, ubar)?.class {
        Feasibility::Strict => {}
        Feasibility::Boundary => return Err(CertifyError::NotStrict("FEASIBLE_BOUNDARY")),
        Feasibility::Infeasible => return Err(CertifyError::NotStrict("INFEASIBLE")),
    }
    let xe = equilibrium::equilibrium_state(net, ubar)?;

    let mut x = match &opts.start {
        Some(s) => {
            net.check_state(s)?;
            s.clone()
        }
        None => net.jam(),
    };
    let mut ev = Evaluator::new(net);
    let mut h = vec![0.0; x.len()];
    let mut n: i64 = -1;
    let mut x_next = x.clone();
    let mut capture = false;
    let mut k = 0usize;
    loop {
        let flows = ev.evaluate(&x, ubar, Field::Monotone);
        let interior = margin_of(net, flows).is_none_or(|m| m > opts.margin_tol);
        for (hi, (a, b)) in h.iter_mut().zip(flows.inflow.iter().zip(&flows.outflow)) {
            *hi = a - b;
        }
        if !interior {
            n = k as i64;
            capture = true;
        }
        let step: f64 = alpha * h.iter().map(|v| v.abs()).sum::<f64>();
        for (xi, hi) in x.iter_mut().zip(&h) {
            *xi += alpha * hi;
        }
        k += 1;
        if capture {
            x_next.copy_from_slice(&x);
            capture = false;
        }
        if interior && step <= opts.tol * alpha {
            break;
        }
        if k >= opts.max_iters {
            return Err(CertifyError::NoConvergence { iterations: k, step });
        }
    }

    let distance = crate::l1_distance(&x, &xe);
    if distance > LIMIT_TOL {
        return Err(CertifyError::LimitMismatch { distance });
    }
    if let Some((i, by)) = xe
        .iter()
        .zip(&x_next)
        .map(|(e, y)| e - y)
        .enumerate()
        .find(|(_, d)| *d > 1e-9)
    {
        return Err(CertifyError::NotAboveEquilibrium {
            link: net.link(i).id.clone(),
            by,
        });
    }
    Ok(IterationRecord {
        limit: x,
        equilibrium: xe,
        iterations: k,
        n,
        x_next,
        alpha,
        alpha_bound: bound,
        margin_tol: opts.margin_tol,
    })
}

/// Runs the iteration and certifies its returned point after checking by
/// simulation that the trajectory from it stays in the monotone-flow domain.
pub fn iteration_certificate(
    net: &Network,
    ubar: &[f64],
    opts: &IterationOptions,
    horizon: f64,
    dt: f64,
) -> Result<(InvariantPointCertificate, IterationRecord), CertifyError> {
    let record = monotone_flow_iteration(net, ubar, opts)?;
    let y = record.x_next.clone();
    let domain = classify(net, &y, opts.margin_tol).domain;
    let check = verify_invariant_point(net, &y, &MeteringSignal::constant(ubar.to_vec()), horizon, dt)?;
    if let Some(time) = check.first_exit {
        return Err(CertifyError::LeavesMonotone { time });
    }
    let cert = InvariantPointCertificate {
        y,
        method: CertMethod::Iteration,
        ubar: ubar.to_vec(),
        domain,
        evidence: Evidence::Iteration {
            alpha: record.alpha,
            iterations: record.iterations,
            n: record.n,
            limit: record.limit.clone(),
            margin_tol: record.margin_tol,
        },
        verification: Some(check),
    };
    Ok((cert, record))
}
