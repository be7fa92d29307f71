use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown potential `{0}` (expected pendulum, cos3 or fourier:c0,c1,...)")]
    UnknownPotential(String),
    #[error("fourier potential needs at least one coefficient")]
    EmptyCoefficients,
    #[error("cannot parse potential coefficient `{0}`")]
    BadCoefficient(String),
    #[error("frequency condition violated: need kappa > {threshold} (= -V''(pi)/2), got {kappa}")]
    FrequencyCondition { kappa: f64, threshold: f64 },
    #[error("potential maximum at pi is degenerate (V''(pi) = {0})")]
    DegenerateMaximum(f64),
    #[error("energy must be positive for a rotating orbit, got {0}")]
    NonPositiveEnergy(f64),
    #[error("energy {0} outside the admissible range {1}")]
    EnergyOutOfRange(f64, &'static str),
    #[error("elliptic modulus squared must lie in [0, 1), got {0}")]
    BadModulus(f64),
    #[error("integrator failed at t = {t}: {reason}")]
    Integrator { t: f64, reason: &'static str },
    #[error("quadrature did not reach tolerance (estimated error {0:e})")]
    Quadrature(f64),
    #[error("root finder did not converge: {0}")]
    RootFinder(String),
    #[error("monodromy is not unimodular (|det - 1| = {0:e}); refusing to classify")]
    NotUnimodular(f64),
    #[error("chain needs an even particle count >= 4, got {0}")]
    OddChain(usize),
    #[error("insufficient samples for the fit: {0}")]
    InsufficientSpan(String),
    #[error("regularized period methods disagree: limit {limit}, integral {integral}")]
    MethodsDisagree { limit: f64, integral: f64 },
    #[error("transition matrix horizon {0} too small to fit the convergence rate")]
    HorizonTooSmall(f64),
    #[error("samples are not sorted by increasing energy")]
    Unsorted,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Integrator { .. }
                | Error::Quadrature(_)
                | Error::RootFinder(_)
                | Error::NotUnimodular(_)
                | Error::MethodsDisagree { .. }
                | Error::HorizonTooSmall(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
