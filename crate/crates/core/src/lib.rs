#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod acceptance;
pub mod bouncing;
pub mod diagnostics;
pub mod error;
pub mod fermi_ulam;
pub mod forcing;
pub mod harness;
#[cfg(feature = "oracle")]
pub mod oracle;
pub mod record;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
