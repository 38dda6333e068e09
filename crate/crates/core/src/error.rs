use thiserror::Error;

pub type Result<T> = std::result::Result<T, CodaError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodaError {
    #[error("non-positive part {value} at position {index}")]
    NonPositive { index: usize, value: f64 },

    #[error("a composition needs at least 2 parts, got {0}")]
    TooFewParts(usize),

    #[error("closure constant must be positive, got {0}")]
    InvalidClosure(f64),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("geometric mean of an empty list")]
    Empty,

    #[error("sbp syntax error at {}: {message}", position_label(*.position))]
    SbpSyntax {
        /// Byte offset into the input, `None` for end of input.
        position: Option<usize>,
        message: String,
    },

    #[error("sbp references unknown level `{0}`")]
    UnknownLevel(String),

    #[error("level `{0}` appears more than once")]
    DuplicateLevel(String),

    #[error("level `{0}` is missing from the sbp")]
    MissingLevel(String),

    #[error("invalid factor `{factor}`: {reason}")]
    InvalidFactor { factor: String, reason: String },

    #[error("unknown factor `{0}`")]
    UnknownFactor(String),

    #[error("{}missing cell ({})", line_label(*.line), .cell.join(", "))]
    MissingCell {
        cell: Vec<String>,
        line: Option<u64>,
    },

    #[error("{}duplicate cell ({})", line_label(*.line), .cell.join(", "))]
    DuplicateCell {
        cell: Vec<String>,
        line: Option<u64>,
    },

    #[error("{}unknown level `{level}` for factor `{factor}`", line_label(*.line))]
    UnknownCellLevel {
        factor: String,
        level: String,
        line: Option<u64>,
    },

    #[error("{}non-positive value {value} in cell ({})", line_label(*.line), .cell.join(", "))]
    NonPositiveCell {
        cell: Vec<String>,
        value: f64,
        line: Option<u64>,
    },

    #[error("{}record has {found} level columns, expected {expected}", line_label(*.line))]
    RecordArity {
        expected: usize,
        found: usize,
        line: Option<u64>,
    },

    #[error("cube dimensions {found:?} do not match {expected:?}")]
    DimensionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("interaction subsets need at least 2 factors, got {0}")]
    SubsetTooSmall(usize),

    #[error("unknown coordinate group `{0}`")]
    UnknownGroup(String),

    #[error("entrywise product is identically zero")]
    ZeroProduct,

    #[error("coordinate set is incomplete: {found} of {expected} values")]
    IncompleteCoordinates { expected: usize, found: usize },

    #[error("inverse map needs normalized coordinates")]
    Unnormalized,

    #[error("row {row} of the log-contrast matrix sums to {sum}, not zero")]
    NotLogContrast { row: usize, sum: f64 },

    #[error("empty sample")]
    EmptySample,

    #[error("need at least {needed} observations, got {found}")]
    TooFewObservations { needed: usize, found: usize },

    #[error("invalid bootstrap setting: {0}")]
    InvalidBootstrap(String),

    #[error("no coordinates selected")]
    NoColumns,
}

fn position_label(position: Option<usize>) -> String {
    match position {
        Some(p) => format!("offset {p}"),
        None => "end of input".to_string(),
    }
}

fn line_label(line: Option<u64>) -> String {
    match line {
        Some(l) => format!("line {l}: "),
        None => String::new(),
    }
}
