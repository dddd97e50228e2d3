//! Hybrid feature-importance and feature-interaction framework for tabular
//! regression.
//!
//! The crate combines two explanation techniques over a trained regressor:
//!
//! * local surrogate importance ([`lime`]): perturbation sampling around an
//!   instance, exponential-kernel weighting, and a weighted lasso surrogate,
//!   aggregated globally by submodular pick;
//! * neural interaction detection ([`nid`]): a sparse multilayer perceptron
//!   whose first-layer weights rank candidate feature subsets by their
//!   interaction strength.
//!
//! The [`pipeline`] module chains both into a two-stage dataset
//! reconstruction: drop the least-important features, embed detected
//! interactions as product columns, then sweep further removals and keep the
//! best-scoring variant.
//!
//! All randomized components draw from counter-derived ChaCha streams
//! ([`seeding`]) so that every result is reproducible from a single seed,
//! including under data-parallel execution.

pub mod dataset;
pub mod lime;
pub mod matrix;
pub mod nid;
pub mod pipeline;
pub mod regressors;
pub mod seeding;
pub mod synth;
