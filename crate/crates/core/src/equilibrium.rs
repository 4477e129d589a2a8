//! Free-flow equilibria under constant metering.
//!
//! Equilibrium flows solve `(I - R_O) f_O = R_R u` on ordinary links and equal
//! the input on entry links; densities are the minimal demand preimages of
//! those flows.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{vector_field, FREE_FLOW_TOL};
use crate::error::ModelError;
use crate::network::Network;

/// Absolute tolerance separating strict feasibility from the boundary.
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Feasibility {
    #[serde(rename = "STRICT")]
    Strict,
    #[serde(rename = "FEASIBLE_BOUNDARY")]
    Boundary,
    #[serde(rename = "INFEASIBLE")]
    Infeasible,
}

impl Feasibility {
    pub fn is_feasible(self) -> bool {
        self != Feasibility::Infeasible
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub class: Feasibility,
    /// `f_crit - f_e` per link.
    pub slacks: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumResult {
    pub flows: Vec<f64>,
    /// `None` for infeasible inputs.
    pub state: Option<Vec<f64>>,
    pub class: Feasibility,
    pub slacks: Vec<f64>,
}

/// `P = (I - R_O)^{-1} R_R`, mapping entry inputs to ordinary-link flows.
pub fn propagation_matrix(net: &Network) -> Result<DMatrix<f64>, ModelError> {
    let (r_o, r_r) = net.routing_matrices();
    let n = r_o.nrows();
    let lu = (DMatrix::identity(n, n) - r_o).lu();
    let p = lu.solve(&r_r).ok_or(ModelError::SingularRouting)?;
    if p.iter().any(|v| !v.is_finite()) {
        return Err(ModelError::SingularRouting);
    }
    Ok(p)
}

/// Equilibrium flow on every link for constant input `u`.
pub fn equilibrium_flows(net: &Network, u: &[f64]) -> Result<Vec<f64>, ModelError> {
    net.check_input(u)?;
    let (r_o, r_r) = net.routing_matrices();
    let n = r_o.nrows();
    let rhs = &r_r * DVector::from_column_slice(u);
    let f_o = (DMatrix::identity(n, n) - r_o)
        .lu()
        .solve(&rhs)
        .ok_or(ModelError::SingularRouting)?;

    let mut flows = vec![0.0; net.num_links()];
    for (&i, &ui) in net.entries().iter().zip(u) {
        flows[i] = ui;
    }
    for (&i, &f) in net.ordinary().iter().zip(f_o.iter()) {
        if !f.is_finite() {
            return Err(ModelError::SingularRouting);
        }
        if f < -BOUNDARY_TOL {
            return Err(ModelError::NegativeRoutedFlow {
                link: net.link(i).id.clone(),
                value: f,
            });
        }
        flows[i] = f.max(0.0);
    }
    Ok(flows)
}

fn classify_slacks(slacks: &[f64]) -> Feasibility {
    if slacks.iter().any(|&s| s < -BOUNDARY_TOL) {
        Feasibility::Infeasible
    } else if slacks.iter().any(|&s| s <= BOUNDARY_TOL) {
        Feasibility::Boundary
    } else {
        Feasibility::Strict
    }
}

fn slacks_for(net: &Network, flows: &[f64]) -> Result<Vec<f64>, ModelError> {
    net.links()
        .iter()
        .zip(flows)
        .map(|(l, &f)| Ok(l.critical_flow()? - f))
        .collect()
}

pub fn feasibility(net: &Network, u: &[f64]) -> Result<FeasibilityReport, ModelError> {
    let flows = equilibrium_flows(net, u)?;
    let slacks = slacks_for(net, &flows)?;
    Ok(FeasibilityReport {
        class: classify_slacks(&slacks),
        slacks,
    })
}

fn densities(net: &Network, flows: &[f64], slacks: &[f64]) -> Result<Vec<f64>, ModelError> {
    net.links()
        .iter()
        .zip(flows)
        .zip(slacks)
        .map(|((l, &f), &slack)| {
            let infeasible = || ModelError::Infeasible {
                link: l.id.clone(),
                flow: f,
                critical: f + slack,
            };
            if slack < -BOUNDARY_TOL {
                return Err(infeasible());
            }
            // Boundary flows may overshoot the critical flow by rounding.
            let target = f.min(f + slack);
            l.demand.min_preimage(target, BOUNDARY_TOL).ok_or_else(infeasible)
        })
        .collect()
}

/// Free-flow equilibrium density `x^e(u)`.
pub fn equilibrium_state(net: &Network, u: &[f64]) -> Result<Vec<f64>, ModelError> {
    let flows = equilibrium_flows(net, u)?;
    let slacks = slacks_for(net, &flows)?;
    densities(net, &flows, &slacks)
}

/// Flows, densities (when feasible), feasibility class and slacks in one go.
pub fn analyze(net: &Network, u: &[f64]) -> Result<EquilibriumResult, ModelError> {
    let flows = equilibrium_flows(net, u)?;
    let slacks = slacks_for(net, &flows)?;
    let class = classify_slacks(&slacks);
    let state = if class.is_feasible() {
        Some(densities(net, &flows, &slacks)?)
    } else {
        None
    };
    Ok(EquilibriumResult {
        flows,
        state,
        class,
        slacks,
    })
}

/// `||F(x, u)||_1`.
pub fn residual(net: &Network, x: &[f64], u: &[f64]) -> f64 {
    vector_field(net, x, u).iter().map(|v| v.abs()).sum()
}

/// Tolerance used when auditing a residual against zero.
pub fn residual_tol(net: &Network) -> f64 {
    let scale: f64 = net
        .links()
        .iter()
        .map(|l| l.critical().map_or(1.0, |c| c.flow.max(1.0)))
        .sum();
    FREE_FLOW_TOL * scale
}
