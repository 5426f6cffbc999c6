//! Exact sequence-form tools for Dark Hex and Phantom Tic-Tac-Toe.

pub mod dh3;
pub mod error;
pub mod games;
pub mod gradient;
pub mod oracle;
pub mod policy_file;
pub mod solvers;
pub mod treeplex;

pub use error::{Error, Result};
