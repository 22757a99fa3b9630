//! Demonstration selection for in-context learning driven by the inference
//! model's own attention projections, plus a numerical lab for the
//! influence-function analysis behind it.
//!
//! The crate is split by role:
//!
//! - [`bundle`]: on-disk format for embeddings, projection matrices and texts.
//! - [`scoring`]: per-demonstration similarity, stability and combined scores.
//! - [`selection`]: top-k selection with relative-rank rejection.
//! - [`baselines`]: random, TF-IDF and BM25 reference selectors.
//! - [`theory`]: linear-attention ICL, influence functions, retraining
//!   oracle and the sufficient-condition checks.
//! - [`cli`]: the `lms3` command-line front end.
//! - [`rng`]: the seeded generator every random draw flows through.
//! - [`synth`]: seeded synthetic bundles.

pub mod baselines;
pub mod bundle;
pub mod cli;
pub mod rng;
pub mod scoring;
pub mod selection;
pub mod synth;
pub mod theory;

pub use bundle::{load_bundle, write_bundle, BundleError, DemonstrationPool, ProjectionBundle, TestItem};
pub use scoring::{score_pool, ScoreConfig, ScoreVariant, ScoredDemonstration};
pub use selection::{select_lms3, sweep_lambda, Polarity, SelectionConfig, SelectionResult};
