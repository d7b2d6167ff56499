//! Reversible adder toolkit.
//!
//! Builds ripple-carry (CQP, MQP) and carry look-ahead (QCLA) adders as
//! lists of multi-controlled NOT gates, simulates them exactly on basis
//! states, and measures gate counts and processing stages.

pub mod circuit;
pub mod cli;
pub mod metrics;
pub mod qasm;
pub mod sim;
pub mod synth;

pub use circuit::{Circuit, CircuitError, Gate, RegisterLayout, Role, WireIndex};
pub use metrics::{asap_schedule, decompose_mcx, metrics, table1, MetricsReport, Schedule};
pub use sim::{add, exhaustive_verify, permutation_check, run, AdderResult, BasisState};
pub use synth::{build, build_cqp, build_mqp, build_qcla, AdderKind};
