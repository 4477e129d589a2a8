use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{Attractor, RoaCertificate, DEFAULT_ORBIT_MAX_ITERS, DEFAULT_ORBIT_TOL};
use crate::dynamics::{Domain, Field};
use crate::equilibrium::residual;
use crate::error::CertifyError;
use crate::network::Network;
use crate::simulate::{find_periodic_orbit, steps_for, Method, PeriodicOrbit, Stepper, DEFAULT_WINDOW};

#[derive(Clone, Debug, PartialEq)]
pub struct SampleOptions {
    pub n: usize,
    pub seed: u64,
    pub horizon: f64,
    pub dt: f64,
    pub tol: f64,
    /// Trailing window checked for equilibrium attractors.
    pub window: f64,
}

impl Default for SampleOptions {
    fn default() -> Self {
        Self {
            n: 100,
            seed: 0,
            horizon: 500.0,
            dt: 0.01,
            tol: 1e-3,
            window: DEFAULT_WINDOW,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleOutcome {
    pub index: usize,
    pub start: Vec<f64>,
    /// Equilibrium: worst l1 distance inside the window. Periodic orbit:
    /// final distance to the orbit. Unspecified equilibrium: final residual.
    pub distance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleReport {
    pub n: usize,
    pub passed: usize,
    pub worst_distance: f64,
    /// Failing samples, verbatim, in index order.
    pub failures: Vec<SampleOutcome>,
}

impl SampleReport {
    pub fn all_passed(&self) -> bool {
        self.passed == self.n
    }
}

/// `n` points drawn uniformly from `[0, y]`; deterministic in `seed`.
pub fn sample_points(y: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| y.iter().map(|&yi| rng.random::<f64>() * yi).collect())
        .collect()
}

fn run_sample(
    net: &Network,
    cert: &RoaCertificate,
    orbit: Option<&PeriodicOrbit>,
    start: &[f64],
    opts: &SampleOptions,
) -> Result<f64, CertifyError> {
    let mut st = Stepper::new(net, start, &cert.signal, Field::Fifo, Method::Rk4, opts.dt)?;
    let steps = steps_for(opts.horizon, st.dt())?;
    let window_from = opts.horizon - opts.window;
    let mut worst: f64 = 0.0;
    for k in 0..=steps {
        if k > 0 {
            st.advance()?;
        }
        if let Attractor::Equilibrium { value } = &cert.attractor {
            if st.time() >= window_from - 1e-9 {
                worst = worst.max(crate::l1_distance(st.state(), value));
            }
        }
    }
    Ok(match &cert.attractor {
        Attractor::Equilibrium { .. } => worst,
        Attractor::PeriodicOrbit { .. } => orbit.expect("orbit computed").distance(st.state()),
        Attractor::EquilibriumInMonotoneDomain => {
            if st.domain() == Domain::Outside {
                f64::INFINITY
            } else {
                residual(net, st.state(), cert.signal.at(st.time()))
            }
        }
    })
}

/// Draws `opts.n` starts in the certified box, integrates each and checks that
/// it approaches the attractor within `opts.tol`. Samples run in parallel.
pub fn sample_verify(net: &Network, cert: &RoaCertificate, opts: &SampleOptions) -> Result<SampleReport, CertifyError> {
    net.check_state(&cert.y)?;
    cert.signal.check(net)?;
    let orbit = match cert.attractor {
        Attractor::PeriodicOrbit { .. } if opts.n > 0 => Some(find_periodic_orbit(
            net,
            &cert.signal,
            opts.dt,
            DEFAULT_ORBIT_TOL,
            DEFAULT_ORBIT_MAX_ITERS,
        )?),
        _ => None,
    };
    let starts = sample_points(&cert.y, opts.n, opts.seed);
    let outcomes = starts
        .into_par_iter()
        .enumerate()
        .map(|(index, start)| {
            let distance = run_sample(net, cert, orbit.as_ref(), &start, opts)?;
            Ok(SampleOutcome {
                index,
                start,
                distance,
                passed: distance <= opts.tol,
            })
        })
        .collect::<Result<Vec<_>, CertifyError>>()?;
    let worst_distance = outcomes.iter().map(|o| o.distance).fold(0.0, f64::max);
    let passed = outcomes.iter().filter(|o| o.passed).count();
    Ok(SampleReport {
        n: opts.n,
        passed,
        worst_distance,
        failures: outcomes.into_iter().filter(|o| !o.passed).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{certify_roa, check_vector_field_certificate, RoaOptions};
    use crate::equilibrium::equilibrium_state;
    use crate::fixtures;
    use crate::simulate::MeteringSignal;

    fn loop_cert() -> (Network, RoaCertificate) {
        let net = fixtures::loop_network();
        let y = equilibrium_state(&net, &[7.0]).unwrap();
        let point = check_vector_field_certificate(&net, &y, &[7.0]).unwrap();
        let (cert, _) = certify_roa(
            &net,
            &MeteringSignal::constant(vec![5.0]),
            &point,
            &RoaOptions::default(),
        )
        .unwrap();
        (net, cert)
    }

    #[test]
    fn samples_are_deterministic_and_inside() {
        let y = [15.0, 7.5, 7.5, 7.5, 15.0];
        let a = sample_points(&y, 20, 7);
        assert_eq!(a, sample_points(&y, 20, 7));
        assert_ne!(a, sample_points(&y, 20, 8));
        assert!(a.iter().all(|p| p.iter().zip(&y).all(|(v, b)| (0.0..=*b).contains(v))));
    }

    #[test]
    fn empty_sample_passes() {
        let (net, cert) = loop_cert();
        let rep = sample_verify(
            &net,
            &cert,
            &SampleOptions {
                n: 0,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(rep.all_passed());
        assert_eq!(rep.worst_distance, 0.0);
    }

    #[test]
    fn loop_samples_converge() {
        let (net, cert) = loop_cert();
        let opts = SampleOptions {
            n: 8,
            horizon: 200.0,
            ..Default::default()
        };
        let rep = sample_verify(&net, &cert, &opts).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn failures_are_reported_verbatim() {
        let (net, mut cert) = loop_cert();
        cert.attractor = Attractor::Equilibrium { value: vec![0.0; 4] };
        let opts = SampleOptions {
            n: 3,
            horizon: 20.0,
            ..Default::default()
        };
        let rep = sample_verify(&net, &cert, &opts).unwrap();
        assert_eq!(rep.passed, 0);
        let starts = sample_points(&cert.y, 3, opts.seed);
        assert_eq!(rep.failures.iter().map(|f| f.start.clone()).collect::<Vec<_>>(), starts);
    }
}
