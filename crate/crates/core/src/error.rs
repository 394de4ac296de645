use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid cutoff window: lambda={lambda}, kappa={kappa} (need 0 <= kappa <= lambda)")]
    InvalidWindow { lambda: f64, kappa: f64 },

    #[error("degenerate point r1 = r2 = 0: energy denominators vanish")]
    DegeneratePoint,

    #[error("point outside integration domain: {0}")]
    Domain(String),

    #[error("zero momentum vector")]
    ZeroVector,

    #[error("term {0} is not valid here")]
    WrongTerm(&'static str),

    #[error("non-finite integrand value at abscissa {abscissa}")]
    NonFinite { abscissa: f64 },

    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),

    #[error("Delta = {delta} <= 0 at X = {x}, lambda = {lambda}")]
    DeltaNonPositive { x: f64, lambda: f64, delta: f64 },

    #[error("b_Lambda denominator {denominator:e} is within pole tolerance at y = {y}")]
    NearPole { y: f64, denominator: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-positive value {value} in column {column} at row {row} (lambda = {lambda})")]
    NonPositive {
        column: String,
        row: usize,
        lambda: f64,
        value: f64,
    },

    #[error("unknown column {0}")]
    UnknownColumn(String),

    #[error("exponent gamma = {0} outside (0, 1): flow is not renormalizable in this scheme")]
    NotRenormalizable(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
