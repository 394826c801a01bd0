//! Counterfactual explanations for clustering models.
//!
//! Given a fitted clustering model and an instance assigned to some cluster,
//! the engine searches for minimally changed variants of that instance that
//! the model would place in a chosen target cluster. Candidates are scored by
//! the product `S_f · S_x · S_y` of
//!
//! * `S_f`: the share of features left untouched,
//! * `S_x`: one minus the Gower distance to the original instance,
//! * `S_y`: how close the candidate is to the target cluster in the model's
//!   output space.
//!
//! Three `S_y` strategies are provided: a hard 0/1 membership indicator, a
//! centroid-distance soft score for centroid models, and a model-agnostic
//! membership probability learned by self-training on MMD-critic
//! prototypes and criticisms. The search itself is a Bayesian loop with a
//! random-forest surrogate and expected-improvement acquisition.
//!
//! The [`evalharness`] module runs the benchmark protocol (instances from the
//! two largest clusters, repeated seeded runs) and renders the metric tables.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod cli;
pub mod clustering;
pub mod dataspace;
mod error;
pub mod evalharness;
pub mod representatives;
pub mod scoring;
pub mod search;
pub mod semisup;
mod util;

pub use error::{Error, Result};
