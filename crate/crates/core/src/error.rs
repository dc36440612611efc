use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// Two elements of different matrix sizes were combined.
    DimensionMismatch {
        left: usize,
        right: usize,
    },
    /// A scalar or entry was NaN or infinite.
    NonFinite {
        what: &'static str,
    },
    /// `random_element` drew only near-zero matrices within its retry budget.
    DegenerateDraw {
        seed: u64,
        attempts: u32,
    },
    InvalidParameter {
        name: &'static str,
        reason: String,
    },
    /// Evaluating a map overflowed; `node` describes the offending subtree.
    NonFiniteEvaluation {
        node: String,
        probe: Option<usize>,
    },
    EmptyProbeSet,
    /// The control function vanishes at a probe where a ratio is needed.
    ZeroControl {
        probe: usize,
    },
    /// The contraction constant is not below one.
    HypothesisViolated {
        contraction_constant: f64,
    },
    ModeMismatch {
        requested: &'static str,
        control: &'static str,
    },
    /// The map does not send 0 to 0.
    NonZeroAtOrigin {
        norm: f64,
    },
    /// Iteration produced a non-finite value at step `iteration`.
    IterationOverflow {
        iteration: usize,
        probe: Option<usize>,
        node: String,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::DimensionMismatch { left, right } => {
                write!(f, "dimension mismatch: {left}x{left} vs {right}x{right}")
            }
            Error::NonFinite { what } => write!(f, "non-finite {what}"),
            Error::DegenerateDraw { seed, attempts } => {
                write!(
                    f,
                    "degenerate random draw for seed {seed} after {attempts} attempts"
                )
            }
            Error::InvalidParameter { name, reason } => write!(f, "invalid {name}: {reason}"),
            Error::NonFiniteEvaluation { node, probe: None } => {
                write!(f, "evaluation overflowed in subtree {node}")
            }
            Error::NonFiniteEvaluation {
                node,
                probe: Some(i),
            } => {
                write!(f, "evaluation overflowed at probe {i} in subtree {node}")
            }
            Error::EmptyProbeSet => f.write_str("probe set is empty"),
            Error::ZeroControl { probe } => {
                write!(f, "control function vanishes at probe {probe}")
            }
            Error::HypothesisViolated {
                contraction_constant,
            } => write!(
                f,
                "contraction constant L = {contraction_constant} is not below 1"
            ),
            Error::ModeMismatch { requested, control } => write!(
                f,
                "stabilizer mode {requested} does not match control function mode {control}"
            ),
            Error::NonZeroAtOrigin { norm } => {
                write!(f, "map does not vanish at 0 (|f(0)| = {norm})")
            }
            Error::IterationOverflow {
                iteration,
                probe,
                node,
            } => {
                write!(f, "iterate {iteration} overflowed in subtree {node}")?;
                if let Some(i) = probe {
                    write!(f, " at probe {i}")?;
                }
                Ok(())
            }
        }
    }
}

impl core::error::Error for Error {}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// Stable machine-readable name, used in tabular output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Error::NonFinite { .. } => "NON_FINITE",
            Error::DegenerateDraw { .. } => "DEGENERATE_DRAW",
            Error::InvalidParameter { .. } => "INVALID_PARAMETER",
            Error::NonFiniteEvaluation { .. } => "NON_FINITE_EVALUATION",
            Error::EmptyProbeSet => "EMPTY_PROBE_SET",
            Error::ZeroControl { .. } => "ZERO_CONTROL",
            Error::HypothesisViolated { .. } => "HYPOTHESIS_VIOLATED",
            Error::ModeMismatch { .. } => "MODE_MISMATCH",
            Error::NonZeroAtOrigin { .. } => "NON_ZERO_AT_ORIGIN",
            Error::IterationOverflow { .. } => "ITERATION_OVERFLOW",
        }
    }
}
