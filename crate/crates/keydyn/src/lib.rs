//! Online template-update simulation harness for keystroke-dynamics
//! authentication.
//!
//! A user is represented by a *meta-reference*: one or more statistical
//! sub-references built from sample galleries that evolve in parallel under
//! different update policies (keep, sliding window, growing window). Each
//! query is scored against every sub-reference, the scores are fused, and a
//! double threshold decides between reject / accept / accept-and-update.
//! The crate replays per-session query streams online (each query is scored,
//! logged, and may update the galleries before the next one) and reports
//! FMR, FNMR, EER plus the update-error rates IUSR and GUMR per session,
//! with a rank-based comparison across update methods.
//!
//! Modules follow the pipeline:
//!
//! * [`corpus`] -- dataset ingestion, validation and session indexing
//! * [`recognizer`] -- references, distance scoring, calibration, fusion
//! * [`adaptation`] -- update decisions, gallery policies, the method catalog
//! * [`evaluation`] -- stream construction, online replay, metrics, ranking
//! * [`harness`] -- experiment configuration, result files, CLI entry points

pub mod adaptation;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod recognizer;
pub mod rng;

pub use error::{Error, Result};
