//! Deep bootstrap sampling for loss-based Bayesian inference.
//!
//! A Gibbs posterior replaces the likelihood of a Bayesian model with an
//! exponentiated negative loss; a closely related nonparametric route places
//! a Dirichlet-process prior on the data distribution itself. Both can be
//! approximated by bootstrap: every posterior draw is the minimizer of a
//! randomly re-weighted empirical loss. This crate implements three samplers
//! for such posteriors:
//!
//! * [`dbs`] — the deep bootstrap sampler: a small feed-forward generator
//!   network is trained once to map bootstrap weight vectors to the matching
//!   weighted-loss minimizers, after which iid posterior draws cost one
//!   forward pass each.
//! * [`exact`] — the exact weighted bootstrap: one convex subgradient
//!   optimization per draw (weighted likelihood bootstrap and its
//!   nonparametric-learning variant with pseudo prior samples).
//! * [`gibbs_mcmc`] — random-walk Metropolis-Hastings on the Gibbs posterior
//!   density, with effective-sample-size and split R-hat diagnostics.
//!
//! Supporting modules provide the generator network ([`ndnet`]), bootstrap
//! weight schemes ([`weights`]), loss models and priors ([`losses`]),
//! simulation designs ([`datagen`]), posterior-quality metrics ([`metrics`])
//! and an experiment runner ([`experiment`]) behind the `dbs` command-line
//! tool.

pub mod datagen;
pub mod dbs;
pub mod error;
pub mod exact;
pub mod experiment;
pub mod gibbs_mcmc;
pub mod losses;
pub mod metrics;
pub mod ndnet;
pub mod weights;

mod linalg;

pub use error::{Error, Result};
pub use losses::{LaplacePrior, LossKind, LossModel, Parameter};
