use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("a curve needs at least two breakpoints, got {0}")]
    TooFewBreakpoints(usize),
    #[error("breakpoints must be finite")]
    NonFinite,
    #[error("first breakpoint must sit at density 0, found {0}")]
    NotAnchoredAtZero(f64),
    #[error("breakpoint densities must be strictly increasing (index {index})")]
    NotIncreasing { index: usize },
}

/// Structural problems found while assembling a network.
#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("malformed network document")]
    Parse(#[from] serde_json::Error),
    #[error("duplicate node id `{0}`")]
    DuplicateNode(String),
    #[error("duplicate link id `{0}`")]
    DuplicateLink(String),
    #[error("link `{link}` refers to unknown node `{node}`")]
    UnknownNode { link: String, node: String },
    #[error("split refers to unknown link `{0}`")]
    UnknownLink(String),
    #[error("split ({node}, {link}): link does not leave that node")]
    SplitNotOutLink { node: String, link: String },
    #[error("split ({node}, {link}) given twice")]
    DuplicateSplit { node: String, link: String },
    #[error("split ({node}, {link}): cannot parse ratio `{text}`")]
    BadRatio { node: String, link: String, text: String },
    #[error("link `{link}`: {which} curve: {source}")]
    Curve {
        link: String,
        which: &'static str,
        #[source]
        source: CurveError,
    },
    #[error("link `{link}`: {which} curve ends at {end}, jam density is {jam}")]
    DomainMismatch {
        link: String,
        which: &'static str,
        end: f64,
        jam: f64,
    },
}

/// Failures of the model-level computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("state has {got} entries, network has {expected} links")]
    StateDimension { expected: usize, got: usize },
    #[error("input has {got} entries, network has {expected} entry links")]
    InputDimension { expected: usize, got: usize },
    #[error("density {value} on link `{link}` lies outside [0, {jam}]")]
    DensityOutOfRange { link: String, value: f64, jam: f64 },
    #[error("input {value} on entry link `{link}` is negative or not finite")]
    NegativeInput { link: String, value: f64 },
    #[error("link `{0}` has no critical point: demand and supply never cross")]
    NoCriticalPoint(String),
    #[error("routing system I - R_O is singular; every node needs a path to an exit")]
    SingularRouting,
    #[error("routing solve produced negative flow {value} on link `{link}`")]
    NegativeRoutedFlow { link: String, value: f64 },
    #[error("input is infeasible: equilibrium flow {flow} exceeds critical flow {critical} on link `{link}`")]
    Infeasible { link: String, flow: f64, critical: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("period must be positive and finite, got {0}")]
    BadPeriod(f64),
    #[error("a periodic schedule needs at least one segment")]
    NoSegments,
    #[error("first segment must start at 0, found {0}")]
    FirstStart(f64),
    #[error("segment starts must increase strictly and stay below the period (segment {0})")]
    SegmentOrder(usize),
    #[error("segment {index} has {got} inputs, expected {expected}")]
    SegmentDimension { index: usize, expected: usize, got: usize },
    #[error("inputs must be finite and nonnegative (segment {0})")]
    BadInput(usize),
    #[error("malformed schedule document: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("time step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("horizon must be nonnegative and finite, got {0}")]
    BadHorizon(f64),
    #[error("no step size at or below {dt} places every segment boundary on the grid")]
    GridAlignment { dt: f64 },
    #[error("integration diverged: non-finite state at t = {time}")]
    Diverged { time: f64 },
    #[error("operation needs a periodic signal")]
    NotPeriodic,
    #[error("period-map iteration did not converge after {iterations} iterations (gap {gap:e})")]
    NoConvergence { iterations: usize, gap: f64 },
    #[error("periodic-orbit search needs a feasible upper bound; input bound is infeasible")]
    InfeasibleBound,
    #[error("orbit sample at t = {time} is not in free flow")]
    OrbitNotFreeFlow { time: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Simulation(#[from] SimulationError),
    #[error("network has no entry links; there is no metering to certify")]
    NoEntries,
    #[error("upper bound does not dominate signal (entry `{link}`: bound {bound} < input {input})")]
    NotDominated { link: String, bound: f64, input: f64 },
    #[error("upper bound is {0}; this step needs a strictly feasible bound")]
    NotStrict(&'static str),
    #[error("input is infeasible")]
    Infeasible,
    #[error("step {alpha} exceeds the admissible bound {bound}")]
    StepTooLarge { alpha: f64, bound: f64 },
    #[error("step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("iteration did not converge after {iterations} steps (last step norm {step:e}); try a smaller step")]
    NoConvergence { iterations: usize, step: f64 },
    #[error("iteration limit is {distance:e} away from the equilibrium; this indicates a model bug")]
    LimitMismatch { distance: f64 },
    #[error("returned point is not above the equilibrium on link `{link}` (by {by:e})")]
    NotAboveEquilibrium { link: String, by: f64 },
    #[error("point lies outside the monotone-flow domain")]
    OutsideMonotone,
    #[error("vector field is positive on link `{link}` ({value:e})")]
    FieldPositive { link: String, value: f64 },
    #[error("trajectory from the point leaves the monotone-flow domain at t = {time}")]
    LeavesMonotone { time: f64 },
    #[error("point has {got} entries, network has {expected} links")]
    PointDimension { expected: usize, got: usize },
}
