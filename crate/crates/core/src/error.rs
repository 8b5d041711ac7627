use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cycle detected in hierarchy through unit `{0}`")]
    Cycle(String),

    #[error("hierarchy has {0} roots; split multi-tree inputs into one file per tid")]
    Forest(usize),

    #[error("ragged hierarchy: leaf `{shallow}` at depth {shallow_depth}, leaf `{deep}` at depth {deep_depth}")]
    RaggedLeaves {
        shallow: String,
        shallow_depth: usize,
        deep: String,
        deep_depth: usize,
    },

    #[error("unit `{0}` declared with conflicting parents")]
    ConflictingParent(String),

    #[error("unknown spatial unit `{0}`")]
    UnknownUnit(String),

    #[error("hierarchy is empty")]
    EmptyHierarchy,

    #[error("invalid grid configuration: {0}")]
    InvalidGrid(String),

    #[error("infeasible nesting: level {level} needs {width} units but level {next_level} only has {next_width}")]
    InfeasibleNesting {
        level: usize,
        width: usize,
        next_level: usize,
        next_width: usize,
    },

    #[error("presence of `{entity}` ends ({end}) before it starts ({start})")]
    InvalidInterval { entity: String, start: i64, end: i64 },

    #[error("negative timestamp {0} is not supported")]
    NegativeTime(i64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("records reference unknown locations at lines {lines:?}")]
    UnknownLocations { lines: Vec<usize> },

    #[error("sequences have different heights ({0} vs {1})")]
    LevelMismatch(usize, usize),

    #[error("sp-index mismatch: `{0}` vs `{1}`")]
    TidMismatch(String, String),

    #[error("entity `{0}` has an empty trace")]
    EmptyTrace(String),

    #[error("hash family mismatch: {0}")]
    FamilyMismatch(String),

    #[error("exclusion is unsound for a level-{cell_level} cell against a level-{sig_level} signature")]
    CoarserCell { cell_level: usize, sig_level: usize },

    #[error("hash index {u} out of range for {n_h} functions")]
    HashIndex { u: usize, n_h: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("k = {k} is out of range for {entities} entities (need 1 <= k < |E|)")]
    KOutOfRange { k: usize, entities: usize },

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),

    #[error("value {value} outside [0, {max}]")]
    OutOfRange { value: u64, max: u64 },

    #[error("ranked lists do not hold the same elements")]
    MismatchedLists,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },

    #[error("unsupported format version {0}")]
    Version(u16),

    #[error("not a {0} file")]
    Magic(&'static str),

    #[error("file is truncated")]
    Truncated,

    #[error("invalid measure configuration: {0}")]
    InvalidMeasure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("too few points to fit ({0}, need at least 10)")]
    TooShort(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
