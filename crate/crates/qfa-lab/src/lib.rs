//! Simulation and verification workbench for small probabilistic and
//! quantum finite automata.
//!
//! The crate covers three families of machines and the constructions
//! that connect them:
//!
//! * classical real-time machines with stochastic transitions, plus the
//!   generalized (unrestricted real matrix) variant;
//! * real-time quantum machines, both the Kraus-operator model and the
//!   measure-many unitary model with per-step halting measurement;
//! * one-way and two-way measure-many machines whose head walks over a
//!   circular tape, executed over an explicit configuration space.
//!
//! Conversions turn quantum machines into generalized automata over the
//! reals, embed stochastic machines into measure-many quantum ones, and
//! combine machines into equiprobable unions. Every construction is
//! paired with runners so the two sides can be compared numerically;
//! the wellformedness checkers report violations as structured data.
//!
//! Numeric policy, in brief: construction identities are expected to
//! hold to 1e-12, wellformedness gates use 1e-9, and probabilities are
//! clamped to `[0, 1]` only at report time.

pub mod alphabet;
pub mod amp_expr;
pub mod classical;
pub mod cli;
pub mod convert;
pub mod format;
pub mod linalg;
pub mod machines;
pub mod quantum_rt;
pub mod random;
pub mod twoway;
pub mod wellformed;

pub use alphabet::{Alphabet, AlphabetError, SymbolMap, TapeSym};
pub use linalg::{Complex64, ComplexMatrix, ComplexVector, LinalgError, RunOutcome};
