use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("action list has {found} permutations, expected one per generator ({expected})")]
    ActionArity { expected: usize, found: usize },

    #[error("permutation for generator {generator} has length {found}, expected {expected}")]
    ActionLength {
        generator: usize,
        expected: usize,
        found: usize,
    },

    #[error("action of generator {generator} is not a bijection of the unit set")]
    NonBijectiveAction { generator: usize },

    #[error("finite group table violates the group axioms: {0}")]
    GroupAxiom(String),

    #[error("generator action does not define a homomorphism: {0}")]
    NotHomomorphism(String),

    #[error("elements are not composable: source(g) = {left_source}, range(h) = {right_range}")]
    NotComposable {
        left_source: u32,
        right_range: u32,
    },

    #[error("elements lie in different range fibers ({left} vs {right})")]
    RangeMismatch { left: u32, right: u32 },

    #[error("functions belong to different groupoid models")]
    MixedModels,

    #[error("enumeration limit exceeded: {required} elements required, limit is {limit}")]
    EnumerationLimit { required: u128, limit: u128 },

    #[error("quadruple budget exceeded: {required} quadruples required, budget is {budget}; use a smaller radius")]
    QuadrupleBudget { required: u128, budget: u128 },

    #[error("support budget exceeded at power n = {n}: {required} entries, budget is {budget}")]
    SupportBudget { n: usize, required: u128, budget: u128 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("table kernel evaluated at length {length}, outside its ball of radius {radius}")]
    TableOutOfBall { length: usize, radius: usize },

    #[error("table kernel is not Hermitian: F(x^-1) != conj F(x) at {0}")]
    NotHermitian(String),

    #[error("kernel is not positive semi-definite: minimum eigenvalue {min_eig:e} < -{tol:e}")]
    NotPositive { min_eig: f64, tol: f64 },

    #[error("subexponential growth (lower rate {rate}): growth hypotheses unmet")]
    Subexponential { rate: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Budget-type failures map to the usage/budget exit code in the CLI.
    pub fn is_budget(&self) -> bool {
        matches!(
            self,
            Error::EnumerationLimit { .. } | Error::QuadrupleBudget { .. } | Error::SupportBudget { .. }
        )
    }
}
