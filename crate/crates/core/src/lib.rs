pub mod bench;
pub mod encoding;
pub mod error;
pub mod eventlog;
pub mod intercase;
pub mod qkernel;
pub mod qsim;
pub mod svm;
pub mod vqc;

pub use error::{Error, Result};
