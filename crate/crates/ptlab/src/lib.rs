//! `ptlab`: a finite-dimensional process-theory workbench.
//!
//! Classical, quantum, and classical-quantum processes are represented
//! uniformly as complex transfer matrices over system types. On top of that
//! representation the crate provides:
//!
//! - structural operations: composition, discarding, causality and complete
//!   positivity checks, cups/caps, feedback loops, spiders ([`process`]);
//! - a textual circuit language with parser, evaluator, and pretty-printer
//!   ([`dsl`]);
//! - leak detection, canonical forms, and leak quality ([`leak`]);
//! - the leak construction that adjoins leaks by splitting idempotents,
//!   including the decoherence instance mapping quantum to classical theory
//!   ([`construct`]);
//! - leak-aware purity certification ([`purity`]);
//! - machine-readable JSON reports backing the `ptlab` CLI ([`report`]).
//!
//! See the crate examples for one runnable program per capability.

pub mod construct;
pub mod dsl;
pub mod error;
pub mod leak;
pub mod mat;
pub mod process;
pub mod purity;
pub mod report;

pub use error::PtError;
pub use mat::{CMatrix, Tolerance};
pub use process::{Atom, Process, SystemType};
