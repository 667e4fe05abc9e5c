use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported Bessel order {order} (maximum {max})")]
    UnsupportedOrder { order: u32, max: u32 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("kernel evaluated at coincident points (r = {0})")]
    Singularity(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate shape: minimum radius {min_radius:.3e} <= floor {floor:.3e}")]
    DegenerateShape { min_radius: f64, floor: f64 },

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("unsupported quadrature order {0} (supported: 2, 4, 6)")]
    QuadratureOrder(usize),

    #[error("non-finite matrix entry from element pair ({0}, {1})")]
    NonFinite(usize, usize),

    #[error("linear solve failed: {message} (condition estimate {condition:.3e})")]
    Solver { message: String, condition: f64 },

    #[error("point ({0}, {1}) is not inside the mesh")]
    Location(f64, f64),

    #[error("evaluation point ({0}, {1}) lies inside or on the scatterer mesh")]
    Proximity(f64, f64),

    #[error("parse error at line {line}: {message}")]
    Format { line: usize, message: String },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate posterior: normalisation constant {0:.3e} below underflow floor; try a larger sigma")]
    DegeneratePosterior(f64),

    #[error("interior resonance in disk transmission system at angular order {0}")]
    Resonance(usize),

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Attach the QMC sample index to a pipeline error.
    pub fn at_sample(self, index: usize) -> Error {
        match self {
            e @ Error::Sample { .. } => e,
            other => Error::Sample {
                index,
                source: Box::new(other),
            },
        }
    }

    /// Numerical failures map to exit code 2 in the CLI, everything else to 1.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Sample { source, .. } => source.is_numerical(),
            Error::Io(_)
            | Error::Format { .. }
            | Error::Parameter(_)
            | Error::Dimension { .. }
            | Error::QuadratureOrder(_) => false,
            _ => true,
        }
    }
}
