use serde::{Deserialize, Serialize};

use crate::dynamics::{classify, vector_field, Domain, Field, DEFAULT_MARGIN_TOL};
use crate::equilibrium;
use crate::error::CertifyError;
use crate::network::Network;
use crate::simulate::{steps_for, MeteringSignal, Method, Stepper};

/// Componentwise tolerance on `F(y, u_bar) <= 0`.
pub const FIELD_TOL: f64 = 1e-9;

/// Default verification horizon, in time units.
pub const DEFAULT_HORIZON: f64 = 500.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CertMethod {
    VectorField,
    Iteration,
    UserSupplied,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// `F(y, u_bar)` per link.
    VectorField { field: Vec<f64> },
    /// Outcome of the monotone-flow iteration that produced `y`.
    Iteration {
        alpha: f64,
        iterations: usize,
        /// Last iterate index outside the operational interior; -1 if none.
        n: i64,
        limit: Vec<f64>,
        margin_tol: f64,
    },
    /// Only the simulated trajectory from `y` backs the claim.
    Simulation,
}

/// Result of integrating F from a candidate point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub holds: bool,
    pub first_exit: Option<f64>,
    pub horizon: f64,
    pub dt: f64,
}

/// A point whose forward trajectory under constant `ubar` stays in the
/// monotone-flow domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvariantPointCertificate {
    pub y: Vec<f64>,
    pub method: CertMethod,
    pub ubar: Vec<f64>,
    pub domain: Domain,
    pub evidence: Evidence,
    pub verification: Option<InvariantCheck>,
}

fn check_point(net: &Network, y: &[f64]) -> Result<Domain, CertifyError> {
    if y.len() != net.num_links() {
        return Err(CertifyError::PointDimension {
            expected: net.num_links(),
            got: y.len(),
        });
    }
    net.check_state(y)?;
    let domain = classify(net, y, DEFAULT_MARGIN_TOL).domain;
    if domain == Domain::Outside {
        return Err(CertifyError::OutsideMonotone);
    }
    Ok(domain)
}

fn check_bound(net: &Network, ubar: &[f64]) -> Result<(), CertifyError> {
    if !equilibrium::feasibility(net, ubar)?.class.is_feasible() {
        return Err(CertifyError::Infeasible);
    }
    Ok(())
}

/// Accepts `y` when it lies in the monotone-flow domain and `F(y, ubar) <= 0`.
pub fn check_vector_field_certificate(
    net: &Network,
    y: &[f64],
    ubar: &[f64],
) -> Result<InvariantPointCertificate, CertifyError> {
    check_bound(net, ubar)?;
    let domain = check_point(net, y)?;
    let field = vector_field(net, y, ubar);
    if let Some((i, &value)) = field.iter().enumerate().find(|(_, v)| **v > FIELD_TOL) {
        return Err(CertifyError::FieldPositive {
            link: net.link(i).id.clone(),
            value,
        });
    }
    Ok(InvariantPointCertificate {
        y: y.to_vec(),
        method: CertMethod::VectorField,
        ubar: ubar.to_vec(),
        domain,
        evidence: Evidence::VectorField { field },
        verification: None,
    })
}

/// Integrates F from `y` and reports the first grid time at which the state
/// leaves the monotone-flow domain.
pub fn verify_invariant_point(
    net: &Network,
    y: &[f64],
    signal: &MeteringSignal,
    horizon: f64,
    dt: f64,
) -> Result<InvariantCheck, CertifyError> {
    check_point(net, y)?;
    let mut st = Stepper::new(net, y, signal, Field::Fifo, Method::Rk4, dt)?;
    let steps = steps_for(horizon, st.dt())?;
    let mut first_exit = None;
    for _ in 0..steps {
        st.advance()?;
        if st.domain() == Domain::Outside {
            first_exit = Some(st.time());
            break;
        }
    }
    Ok(InvariantCheck {
        holds: first_exit.is_none(),
        first_exit,
        horizon,
        dt: st.dt(),
    })
}

/// Certificate for a caller-chosen point backed only by simulation under
/// constant `ubar`.
pub fn user_supplied_certificate(
    net: &Network,
    y: &[f64],
    ubar: &[f64],
    horizon: f64,
    dt: f64,
) -> Result<InvariantPointCertificate, CertifyError> {
    check_bound(net, ubar)?;
    let domain = check_point(net, y)?;
    let check = verify_invariant_point(net, y, &MeteringSignal::constant(ubar.to_vec()), horizon, dt)?;
    if let Some(time) = check.first_exit {
        return Err(CertifyError::LeavesMonotone { time });
    }
    Ok(InvariantPointCertificate {
        y: y.to_vec(),
        method: CertMethod::UserSupplied,
        ubar: ubar.to_vec(),
        domain,
        evidence: Evidence::Simulation,
        verification: Some(check),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn equilibria_are_invariant_points() {
        let net = fixtures::diamond();
        let y = equilibrium::equilibrium_state(&net, &[15.0]).unwrap();
        assert_eq!(y, vec![15.0, 7.5, 7.5, 7.5, 15.0]);
        let c = check_vector_field_certificate(&net, &y, &[15.0]).unwrap();
        assert_eq!(c.method, CertMethod::VectorField);
        let c = check_vector_field_certificate(&net, &[0.0; 5], &[0.0]).unwrap();
        assert_eq!(c.domain, Domain::FreeFlow);
    }

    #[test]
    fn positive_field_names_link() {
        let net = fixtures::loop_network();
        match check_vector_field_certificate(&net, &[0.0; 4], &[5.0]) {
            Err(CertifyError::FieldPositive { link, value }) => {
                assert_eq!(link, "1");
                assert_eq!(value, 5.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(
            check_vector_field_certificate(&net, &[0.0; 4], &[9.0]),
            Err(CertifyError::Infeasible)
        );
    }

    #[test]
    fn jam_density_is_outside() {
        let net = fixtures::diamond();
        let signal = MeteringSignal::constant(vec![8.0]);
        assert_eq!(
            verify_invariant_point(&net, &net.jam(), &signal, 10.0, 0.01),
            Err(CertifyError::OutsideMonotone)
        );
    }

    #[test]
    fn equilibrium_stays_put() {
        let net = fixtures::loop_network();
        let y = equilibrium::equilibrium_state(&net, &[5.0]).unwrap();
        let check = verify_invariant_point(&net, &y, &MeteringSignal::constant(vec![5.0]), 50.0, 0.01).unwrap();
        assert!(check.holds);
        let cert = user_supplied_certificate(&net, &y, &[5.0], 50.0, 0.01).unwrap();
        assert_eq!(cert.evidence, Evidence::Simulation);
    }
}
