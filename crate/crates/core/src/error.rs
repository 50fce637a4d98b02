use thiserror::Error;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct AxiomViolation {
    pub axiom: String,
    pub witness: Vec<String>,
    pub detail: String,
}

impl std::fmt::Display for AxiomViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} at ({}): {}", self.axiom, self.witness.join(","), self.detail)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error at {pointer}: {message}")]
    Schema { pointer: String, message: String },
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("{} axiom violation(s); first: {}", .0.len(), .0[0])]
    Axioms(Vec<AxiomViolation>),
    #[error("not an irreducible label: `{0}`")]
    NonIrreducibleInput(String),
    #[error("inapplicable move: {0}")]
    InapplicableMove(String),
    #[error("category has no braiding data")]
    MissingBraiding,
    #[error("conjugate equations could not be solved for `{0}`")]
    SolveFailed(String),
    #[error("hom space Hom({z}, {x}⊗{y}) is zero")]
    EmptyHomSpace { z: String, x: String, y: String },
    #[error("support too small; missing {0:?}")]
    SupportTooSmall(Vec<String>),
    #[error("label mismatch: {0} vs {1}")]
    LabelMismatch(String, String),
    #[error("counterexample found: {0}")]
    CounterexampleFound(String),
    #[error("product leaves the support: channel `{0}`")]
    SupportOverflow(String),
    #[error("not a state: {0}")]
    NotAState(String),
    #[error("ground algebra center is not declared trivial")]
    CenterNotTrivial,
    #[error("not semisimple: {0}")]
    NotSemisimpleInput(String),
    #[error("positivity failure: min eigenvalue {0:e}")]
    PositivityFailure(f64),
    #[error("row bound fails: {0}")]
    RowBoundFailure(String),
    #[error("complete positivity fails: Choi min eigenvalue {0:e}")]
    CpFailure(f64),
    #[error("not an automorphism: residual {0:e}")]
    NotAnAutomorphism(f64),
    #[error("dimension cap exceeded: {0} > {1}")]
    DimensionCap(usize, usize),
    #[error("word of length {len} exceeds twice the depth {depth}")]
    WordTooLong { len: usize, depth: usize },
    #[error("degenerate inner product: {0}")]
    Degenerate(String),
}

impl Error {
    pub fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema { pointer: pointer.into(), message: message.into() }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
