use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row} has length {got}, expected {expected}")]
    RowLength { row: usize, got: usize, expected: usize },

    #[error("label {label} at row {row}, column {col} is outside 1..={d}")]
    LabelOutOfRange { row: usize, col: usize, label: u32, d: u32 },

    #[error("index {index} out of range for a sample of {n} points")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("point {index} has dimension {got}, expected {expected}")]
    DimensionMismatch { index: usize, got: usize, expected: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empty behavior table")]
    EmptyTable,

    #[error("vc dimension needs exactly two labels, table has d = {0}")]
    NotBinary(u32),

    #[error("enumeration would visit {projected} combinations, cap is {cap}")]
    EnumerationCap { projected: f64, cap: u64 },

    #[error("no solution of {what} below scan cap {cap}")]
    ScanCap { what: String, cap: u64 },

    #[error("bound certification failed: {0}")]
    Certification(String),

    #[error("invalid network structure: {}", .0.join("; "))]
    Structure(Vec<String>),

    #[error("invalid witness: {0}")]
    Witness(String),

    #[error("invalid config: {}", .0.join("; "))]
    Config(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
