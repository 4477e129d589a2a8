//! Fixed-step integration of F and H under constant or periodic metering.

mod audit;
mod integrate;
mod periodic;
mod signal;

pub use audit::{contraction_audit, ContractionReport, PairAudit, PairStatus, AUDIT_SLACK};
pub use integrate::{
    converged_to, integrate, steps_for, write_csv, Integration, Method, Stepper, Trajectory, DEFAULT_DT,
};
pub use periodic::{find_periodic_orbit, period_map, PeriodicOrbit};
pub use signal::{AlignedSchedule, MeteringSignal, Schedule, Segment};

/// Default trailing window, in time units, for convergence checks.
pub const DEFAULT_WINDOW: f64 = 10.0;
