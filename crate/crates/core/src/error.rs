use thiserror::Error;

use crate::task::ParseError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Growing a table would exceed the addressable index space.
    #[error("table full: capacity {capacity} cannot grow within {bits}-bit indices")]
    TableFull { capacity: usize, bits: u32 },

    #[error("index space exhausted: more than 2^{bits} entries")]
    IndexSpaceExhausted { bits: u32 },

    #[error("element {value:#x} does not fit in {bits} bits")]
    ElementTooWide { value: u64, bits: u32 },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: u64, len: u64 },

    #[error("id {id} does not name an occupied slot")]
    EmptySlot { id: u64 },

    #[error("rejected numeric value with bit pattern {0:#018x}")]
    InvalidNumeric(u64),

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Parse(#[from] ParseError),
}
