use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Everything that can go wrong in the decoupling pipeline.
#[derive(Debug, Clone, PartialEq)]
#[non_exhaustive]
pub enum Error {
    DimensionMismatch { expected: usize, found: usize },
    NonIdentityLinear,
    InvalidArgument(String),
    NonPositiveInertia { machine: usize },
    NoConvergence { iterations: usize, residual: f64 },
    SingularJacobian,
    ResidualTooLarge { residual: f64 },
    DefectiveMatrix { condition: f64 },
    UnpairedComplexEigenvalue { re: f64, im: f64 },
    AmbiguousGrouping { mode: usize },
    SmallDivisor { component: usize, exponents: Vec<u8>, divisor: f64 },
    PreconditionNotDecoupled { degree: usize },
    CosineSingular { mode: usize },
    ImaginaryResidue { residue: f64 },
    VariantMismatch,
    NotSimplified,
    NoPositiveRoot,
    NonFinite { time: f64 },
    GridMismatch,
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    /// Resonance-type failures, as opposed to plain numerical breakdown.
    pub fn is_resonance(&self) -> bool {
        matches!(self, Error::SmallDivisor { .. })
    }

    /// Errors caused by malformed input rather than by numerics.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch { .. }
                | Error::InvalidArgument(_)
                | Error::NonPositiveInertia { .. }
                | Error::VariantMismatch
                | Error::GridMismatch
        )
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::NonIdentityLinear => f.write_str("linear part is not the identity"),
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::NonPositiveInertia { machine } => {
                write!(f, "machine {} has non-positive inertia", machine + 1)
            }
            Error::NoConvergence { iterations, residual } => {
                write!(f, "Newton did not converge after {iterations} iterations (residual {residual:e})")
            }
            Error::SingularJacobian => f.write_str("singular Jacobian"),
            Error::ResidualTooLarge { residual } => {
                write!(f, "point is not an equilibrium (residual {residual:e})")
            }
            Error::DefectiveMatrix { condition } => {
                write!(f, "eigenvector matrix is ill-conditioned (condition {condition:e})")
            }
            Error::UnpairedComplexEigenvalue { re, im } => {
                write!(f, "complex eigenvalue {re}{im:+}j has no conjugate partner")
            }
            Error::AmbiguousGrouping { mode } => {
                write!(f, "mode {}: left-eigenvector entry lies on the grouping axis", mode + 1)
            }
            Error::SmallDivisor { component, exponents, divisor } => write!(
                f,
                "small divisor {divisor:e} for monomial {exponents:?} in component {}",
                component + 1
            ),
            Error::PreconditionNotDecoupled { degree } => {
                write!(f, "system still has inter-modal terms of degree {degree}")
            }
            Error::CosineSingular { mode } => {
                write!(f, "mode {}: cosine of the operating angle vanishes", mode + 1)
            }
            Error::ImaginaryResidue { residue } => {
                write!(f, "imaginary residue {residue:e} exceeds tolerance")
            }
            Error::VariantMismatch => f.write_str("target variant mismatch"),
            Error::NotSimplified => f.write_str("oscillator is not in simplified undamped form"),
            Error::NoPositiveRoot => f.write_str("force polynomial has no positive real root"),
            Error::NonFinite { time } => write!(f, "trajectory diverged at t = {time}"),
            Error::GridMismatch => f.write_str("trajectories are on different time grids"),
        }
    }
}

impl core::error::Error for Error {}
