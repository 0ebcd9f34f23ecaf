use num_complex::Complex64;

/// Errors produced by the geometry, quadrature and solver layers.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("degenerate parameterization on curve {curve}: |z'({t})| = {speed:.3e}")]
    DegenerateCurve { curve: usize, t: f64, speed: f64 },

    #[error("point {0} is too close to the boundary")]
    TooCloseToBoundary(Complex64),

    #[error("point {0} is not in the interior of the domain")]
    NotInterior(Complex64),

    #[error("evaluation at {0} rejected: {1}")]
    PoleOrGuard(Complex64, String),

    #[error("ill-conditioned discrete system (estimate {cond:.3e}); try more nodes")]
    IllConditioned { cond: f64 },

    #[error("singular augmented system: {0}")]
    SingularSystem(String),

    #[error("inadmissible base point or insufficient nodes: {0}")]
    InadmissibleBase(String),

    #[error("no numerically primitive pair found after {attempts} attempts")]
    NoPrimitivePair { attempts: usize },

    #[error("argument-principle count failed: {0}")]
    WindingFailure(String),

    #[error("rational fit failed: {0}")]
    FitFailure(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config parse error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
