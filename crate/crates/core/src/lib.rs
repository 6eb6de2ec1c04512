pub mod codebooks;
pub mod error;
pub mod infoquant;
pub mod linalg;
pub mod permaction;
pub mod protocols;
pub mod qstate;
pub mod schreier;
pub mod schurweyl;
pub mod typelab;

pub use error::{Error, Result};
