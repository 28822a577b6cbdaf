//! Library surface behind the shadowlab binary. The integration tests and
//! the binary drive the same code paths.

pub mod config;
pub mod report;
pub mod run;
