//! Support code for the `indist` command-line tool: random experiment
//! generation and the cross-engine verification suite.

// `!(x >= lo)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod instances;
pub mod verify;
