use thiserror::Error;

/// Errors raised by constructors, root solvers, quadrature and checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("semi-axis {index} is not a positive finite number ({value})")]
    NonPositiveAxis { index: usize, value: f64 },
    #[error("dimension {0} is too small, need at least 2 semi-axes")]
    DimensionTooSmall(usize),
    #[error("spherical parameter {name} is not a positive finite number ({value})")]
    NonPositiveParam { name: &'static str, value: f64 },
    #[error("confocal shift {gamma} collapses semi-axis {index}")]
    ShiftTooNegative { gamma: f64, index: usize },
    #[error("confocal shift {gamma} outside the admissible interval ({lower}, {upper})")]
    ShiftOutOfRange { gamma: f64, lower: f64, upper: f64 },
    #[error("no confocal member passes through the point")]
    NoRoot,
    #[error("root solver did not converge in {iterations} iterations (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("point is not on the unit 3-sphere (|q|^2 - 1 = {0:e})")]
    NotOnSphere(f64),
    #[error("point lies on the w axis; no confocal member passes through it")]
    PolePoint,
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("quadrics are not confocal (shift mismatch {0:e})")]
    NotConfocal(f64),
    #[error("point is not on the source quadric (witness {0:e})")]
    NotOnSource(f64),
    #[error("seed vector is zero")]
    ZeroSeed,
    #[error("operation does not apply to a {0} mass surface")]
    WrongKind(&'static str),
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("source and evaluation point coincide")]
    Coincident,
    #[error("evaluation point is antipodal to a source point")]
    Antipodal,
    #[error("evaluation point is {distance:e} from the carrying surface (min_sep {min_sep:e})")]
    TooCloseToSurface { distance: f64, min_sep: f64 },
    #[error("evaluation point is {distance:e} from the antipodal image of the surface (min_sep {min_sep:e})")]
    TooCloseToAntipode { distance: f64, min_sep: f64 },
    #[error("evaluation point is not exterior to the body")]
    InteriorPoint,
    #[error("layer has zero or negative mass")]
    ZeroMass,
    #[error("no exterior sample points were found")]
    NoExteriorSamples,
    #[error("least-squares fit is degenerate (condition number {0:e})")]
    DegenerateFit(f64),
    #[error("evaluation point is not exterior to both homeoids")]
    PNotExterior,
    #[error("unknown check {0:?}")]
    UnknownCheck(String),
    #[error("geometry mismatch: {0}")]
    GeometryMismatch(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
