//! Branching processes in varying environments obtained by generation-wise
//! Bernoulli thinning of a fixed offspring law.
//!
//! The crate builds retention schedules that alternate growth stretches
//! (retention 1) with critical stretches (retention `1/m`), certifies that
//! the reciprocal generation means stay summable while the process still
//! dies out, and cross-validates the exact recursions against Monte Carlo
//! simulation of both population trajectories and vertex percolation on
//! sampled Galton-Watson trees.

pub mod construct;
pub mod error;
pub mod numeric;
pub mod offspring;
pub mod simulate;
pub mod survival;
pub mod verify;

pub use construct::{build_schedule, choose_l, BlockRecord, ConstantRetention, LogMean, RetentionSource, Schedule};
pub use error::{Error, NotCertifiableCause, Result, ViolationDump};
pub use offspring::{OffspringLaw, Sampler, SecondMoment};
pub use simulate::{derive_replicate_seed, simulate_bpve, simulate_percolation, McConfig, McOutput, McSummary};
pub use survival::{bpve_survival_exact, kkns_diagnostic, KknsConfig, KknsDiagnostic, KknsVerdict, SurvivalTable};
pub use verify::{condition_i_bruteforce, condition_i_closed_form, condition_ii_report, verification_report, VerificationReport, VerifyOptions};
