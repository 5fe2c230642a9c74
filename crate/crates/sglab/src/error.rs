use thiserror::Error;

/// Failure modes shared by every module of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SgError {
    #[error("kernel evaluated on a lightlike pair: {0}")]
    SingularPoint(String),

    #[error("vertex configuration contains a lightlike pair with non-zero charge product: {0}")]
    SingularConfiguration(String),

    #[error("quadrature budget exhausted: requested {requested:e}, achieved {achieved:e}")]
    BudgetExceeded { requested: f64, achieved: f64 },

    #[error("reference density integrates to {integral}, not 1")]
    PsiNotNormalized { integral: f64 },

    #[error("monomial has total charge {total}, expected 0")]
    NotNeutral { total: f64 },

    #[error("coupling outside the finite regime: hbar*a^2 = {value} must be < 4*pi")]
    RegimeViolation { value: f64 },

    #[error("causal precondition violated: {0}")]
    CausalPreconditionViolated(String),

    #[error("basis Gram matrix is ill-conditioned (condition number {condition:e})")]
    IllConditionedBasis { condition: f64 },

    #[error("non-finite sample: {0}")]
    NonFiniteSample(String),

    #[error("Richardson extrapolation unstable: relative residual {residual}")]
    ExtrapolationUnstable { residual: f64 },

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
}

impl SgError {
    /// Short machine-readable tag for records and logs.
    pub fn kind(&self) -> &'static str {
        match self {
            SgError::SingularPoint(_) => "SingularPoint",
            SgError::SingularConfiguration(_) => "SingularConfiguration",
            SgError::BudgetExceeded { .. } => "BudgetExceeded",
            SgError::PsiNotNormalized { .. } => "PsiNotNormalized",
            SgError::NotNeutral { .. } => "NotNeutral",
            SgError::RegimeViolation { .. } => "RegimeViolation",
            SgError::CausalPreconditionViolated(_) => "CausalPreconditionViolated",
            SgError::IllConditionedBasis { .. } => "IllConditionedBasis",
            SgError::NonFiniteSample(_) => "NonFiniteSample",
            SgError::ExtrapolationUnstable { .. } => "ExtrapolationUnstable",
            SgError::ConfigInvalid(_) => "ConfigInvalid",
        }
    }
}

pub type Result<T> = std::result::Result<T, SgError>;
