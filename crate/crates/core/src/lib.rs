//! Agreement bounds for subjective quality tests.
//!
//! Subjective tests estimate the quality of media files by averaging discrete
//! ratings into mean opinion scores (MOS). Because votes are noisy and the
//! rating scale is discrete, no objective estimator can match MOS perfectly:
//! there is a floor on the achievable MSE and a ceiling on the achievable
//! Pearson correlation. This crate computes those bounds three ways:
//!
//! * **data-driven** — from per-file vote variance when a test publishes it,
//! * **global-average** — from a fixed vote variance pooled across tests that
//!   do publish it,
//! * **model-based** — from the BinoVotes binomial vote model, which needs
//!   only the MOS sample itself.
//!
//! The crate also ships a seedable Monte Carlo engine that generates
//! synthetic subjective tests under BinoVotes and verifies every bound
//! against realized MSE and sample correlation.
//!
//! Modules mirror the processing pipeline: [`scale`] (rating scales and MOS
//! lattices), [`quality`] (true-quality distributions), [`model`] (BinoVotes
//! and BinoMOS), [`bounds`] (closed-form bounds), [`estimate`] (bound
//! estimation from samples), [`simulate`] (Monte Carlo), and [`ingest`]
//! (file parsing plus bundled reference summaries).

// Negated comparisons like `!(x > 0.0)` are deliberate: they treat NaN as
// invalid input in one branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod estimate;
pub mod ingest;
pub mod model;
pub mod quad;
pub mod quality;
pub mod scale;
pub mod simulate;
pub mod stats;

pub use bounds::{BoundInputs, BoundReport, VarianceSource};
pub use estimate::{FileRecord, MosDataset, SampleStats, VarianceConvention, VarianceMode};
pub use model::{BinoMosPmf, BinoVotesModel};
pub use quality::QualityDistribution;
pub use scale::{MosLattice, RatingScale};
pub use simulate::{RandomStream, SimConfig, SimOutcome};
