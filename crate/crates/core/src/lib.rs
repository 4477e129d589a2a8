//! Dynamic flow networks with FIFO junctions.
//!
//! The crate evaluates the density dynamics of compartmental flow networks
//! under a FIFO junction rule, computes free-flow equilibria in closed form,
//! finds periodic orbits under periodic input metering, and certifies boxes
//! `[0, y]` that every trajectory leaves only towards the attractor.

pub mod certify;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod fixtures;
pub mod network;
pub mod simulate;

pub use dynamics::{classify, monotone_extension, vector_field, Domain, DomainClassification, Field};
pub use equilibrium::{equilibrium_flows, equilibrium_state, feasibility, residual, Feasibility};
pub use error::{CurveError, ModelError, NetworkError};
pub use network::{DensityState, Network, PiecewiseLinear, ValidationReport};
pub use simulate::{integrate, Integration, MeteringSignal, Method, Trajectory};

pub(crate) fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}
