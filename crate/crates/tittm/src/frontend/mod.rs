//! Assembly parsing, the program store and corpus, trace export, and the
//! command-line runner.

pub mod cli;
pub mod parse;
pub mod store;
pub mod trace;
