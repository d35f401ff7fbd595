use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure the library can report. `kind()` gives the stable name used in
/// machine-readable error output.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("topology error: {0}")]
    Topology(String),
    #[error("unit error: {0}")]
    Unit(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero entry in linearization voltage at bus {bus}")]
    SingularVoltage { bus: usize },
    #[error("power flow did not converge after {iterations} iterations (last update {last_update:.3e} p.u.)")]
    NonConvergence { iterations: usize, last_update: f64 },
    #[error("need at least 3 segments for a full circle, got {0}")]
    BadSegmentCount(usize),
    #[error("initial operating point of DER `{unit}` violates its capability set: {detail}")]
    InfeasibleBase { unit: String, detail: String },
    #[error("initial operating point violates a network limit: {0}")]
    BaseViolation(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("linear system is infeasible")]
    InfeasibleSystem,
    #[error("region is empty")]
    EmptyRegion,
    #[error("region is unbounded")]
    UnboundedRegion,
    #[error("reference region has zero area")]
    DegenerateReference,
    #[error("empty sample distribution for unit `{0}`")]
    EmptyDistribution(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("no uncertainty margin given for PV unit `{0}`")]
    MissingMargin(String),
    #[error("none of the {0} Monte Carlo samples was feasible")]
    NoFeasibleSamples(usize),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "ParseError",
            Error::Topology(_) => "TopologyError",
            Error::Unit(_) => "UnitError",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::SingularVoltage { .. } => "SingularVoltage",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::BadSegmentCount(_) => "BadSegmentCount",
            Error::InfeasibleBase { .. } => "InfeasibleBase",
            Error::BaseViolation(_) => "BaseViolation",
            Error::UnknownVariable(_) => "UnknownVariable",
            Error::InfeasibleSystem => "InfeasibleSystem",
            Error::EmptyRegion => "EmptyRegion",
            Error::UnboundedRegion => "UnboundedRegion",
            Error::DegenerateReference => "DegenerateReference",
            Error::EmptyDistribution(_) => "EmptyDistribution",
            Error::BadParameter(_) => "BadParameter",
            Error::MissingMargin(_) => "MissingMargin",
            Error::NoFeasibleSamples(_) => "NoFeasibleSamples",
            Error::Numerical(_) => "NumericalFailure",
            Error::Io(_) => "IoError",
        }
    }
}
