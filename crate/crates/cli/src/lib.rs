//! Command-line front end: problem files, benchmark plans and traces.

pub mod app;
pub mod plan;
pub mod problem_file;
