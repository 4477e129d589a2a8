use serde::Serialize;

use super::integrate::{write_csv, Method, Stepper};
use super::signal::MeteringSignal;
use crate::dynamics::{Domain, Field};
use crate::equilibrium::{self, Feasibility};
use crate::error::SimulationError;
use crate::network::Network;

/// Integrates F over exactly one period from time 0.
pub fn period_map(
    net: &Network,
    x0: &[f64],
    signal: &MeteringSignal,
    dt: f64,
    method: Method,
) -> Result<Vec<f64>, SimulationError> {
    let mut st = Stepper::new(net, x0, signal, Field::Fifo, method, dt)?;
    let n = st.steps_per_period().ok_or(SimulationError::NotPeriodic)?;
    for _ in 0..n {
        st.advance()?;
    }
    Ok(st.state().to_vec())
}

/// One period of a periodic solution, sampled on the integration grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    pub period: f64,
    pub dt: f64,
    pub times: Vec<f64>,
    /// `states[j]` is the orbit at `times[j]`; the last entry closes the period.
    pub states: Vec<Vec<f64>>,
    /// `||G(x) - x||_1` at the returned initial state.
    pub gap: f64,
    pub iterations: usize,
    pub feasibility: Feasibility,
}

impl PeriodicOrbit {
    /// Largest l1 distance between the orbit at the start and end of the period.
    pub fn closure_error(&self) -> f64 {
        crate::l1_distance(&self.states[0], self.states.last().unwrap())
    }

    /// Orbit state at grid step `step` of an integration started at phase 0.
    pub fn at_step(&self, step: usize) -> &[f64] {
        &self.states[step % (self.states.len() - 1)]
    }

    /// Smallest l1 distance from `x` to any orbit sample.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.states
            .iter()
            .map(|s| crate::l1_distance(s, x))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn write_csv<W: std::io::Write>(&self, net: &Network, out: W) -> std::io::Result<()> {
        write_csv(net, &self.times, &self.states, out)
    }
}

/// Iterates the period map from `x^e(u_bar)` to a fixed point and samples
/// the resulting orbit. Every sample must be in free flow.
pub fn find_periodic_orbit(
    net: &Network,
    signal: &MeteringSignal,
    dt: f64,
    tol: f64,
    max_iters: usize,
) -> Result<PeriodicOrbit, SimulationError> {
    let period = signal.period().ok_or(SimulationError::NotPeriodic)?;
    let ubar = signal.upper_bound();
    let feasibility = equilibrium::feasibility(net, &ubar)?.class;
    match feasibility {
        Feasibility::Infeasible => return Err(SimulationError::InfeasibleBound),
        Feasibility::Boundary => {
            log::warn!("input bound is only boundary-feasible; the orbit exists but need not attract")
        }
        Feasibility::Strict => {}
    }

    let mut x = equilibrium::equilibrium_state(net, &ubar)?;
    let mut gap = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iters {
        let next = period_map(net, &x, signal, dt, Method::Rk4)?;
        gap = crate::l1_distance(&next, &x);
        iterations += 1;
        log::debug!("period map iteration {iterations}: gap {gap:e}");
        x = next;
        if gap <= tol {
            break;
        }
    }
    if gap > tol {
        return Err(SimulationError::NoConvergence { iterations, gap });
    }

    let mut st = Stepper::new(net, &x, signal, Field::Fifo, Method::Rk4, dt)?;
    let n = st.steps_per_period().expect("periodic signal");
    let mut times = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    for j in 0..=n {
        if j > 0 {
            st.advance()?;
        }
        if st.domain() != Domain::FreeFlow {
            return Err(SimulationError::OrbitNotFreeFlow { time: st.time() });
        }
        times.push(st.time());
        states.push(st.state().to_vec());
    }
    Ok(PeriodicOrbit {
        period,
        dt: st.dt(),
        times,
        states,
        gap,
        iterations,
        feasibility,
    })
}
