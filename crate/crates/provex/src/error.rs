use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("syntax error at {line}:{column}: {message} (found {found})")]
    Syntax {
        line: usize,
        column: usize,
        found: String,
        message: String,
    },
    #[error("rule {rule} is unsafe: variable {var} does not occur in a positive goal")]
    UnsafeRule { rule: String, var: String },
    #[error("recursion detected through predicates {}", cycle.join(" -> "))]
    RecursionDetected { cycle: Vec<String> },
    #[error("arity mismatch for {pred}: expected {expected}, found {found}")]
    ArityMismatch {
        pred: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate rule id {0}")]
    DuplicateRuleId(String),
    #[error("program has no rule deriving the answer predicate {0}")]
    UnknownAnswer(String),
    #[error("predicate {0} is used both as a rule id and a predicate")]
    NameClash(String),
    #[error("missing relation {0}")]
    MissingRelation(String),
    #[error("constant {value} lies outside dom({attribute})")]
    ConstantOutsideDomain { attribute: String, value: String },
    #[error("{0} is not an IDB predicate of the program")]
    NotIdb(String),
    #[error("graph would exceed {cap} nodes")]
    DomainTooLarge { cap: usize },
    #[error("{0} is not an undetermined EDB tuple node")]
    NotUndetermined(String),
    #[error("Which-provenance requires a program without negation")]
    NegationNotSupported,
    #[error("explanation contains negation")]
    NegationPresent,
    #[error("missing annotation for {0}")]
    MissingAnnotation(String),
    #[error("explanation contains undetermined statuses")]
    UndeterminedStatusPresent,
    #[error("malformed game: {0}")]
    MalformedGame(String),
    #[error("illegal K-interpretation row for {0}")]
    IllegalInterpretation(String),
    #[error("program is not the translation of a formula: {0}")]
    NotTranslatedProgram(String),
    #[error("d-tree variables do not match the query body: {0}")]
    VariableCoverageMismatch(String),
    #[error("d-tree violates the path condition for {0}")]
    PathConditionViolated(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("{path}: {source}")]
    File { path: String, source: Box<Error> },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn syntax(line: usize, column: usize, found: &str, message: impl Into<String>) -> Error {
        Error::Syntax {
            line,
            column,
            found: if found.is_empty() { "end of input".into() } else { format!("`{found}`") },
            message: message.into(),
        }
    }

    pub fn in_file(self, path: impl Into<String>) -> Error {
        Error::File { path: path.into(), source: Box::new(self) }
    }
}
