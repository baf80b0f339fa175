//! Library side of the `funsel` command-line tool.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cases;
pub mod config;
pub mod io;
pub mod report;
pub mod run;
