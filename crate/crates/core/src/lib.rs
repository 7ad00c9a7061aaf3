//! Continuous-variable cluster states on complex networks.
//!
//! This crate builds Gaussian cluster states whose entanglement topology
//! follows complex-network graphs (Barabási-Albert, Erdős–Rényi,
//! Watts-Strogatz and fixed catalog shapes), optimizes their
//! nullifier-variance quality over the free orthogonal matrix of the
//! construction unitary, and reshapes distributed clusters into EPR
//! channels using only local linear optics found by a derandomized
//! evolution strategy.
//!
//! Modules:
//! - [`graph`]: network generators and catalog graphs
//! - [`spectrum`]: input squeezing spectra
//! - [`gaussian`]: covariance-matrix engine and nullifier variances
//! - [`optimizer`]: analytic quality optimization of the orthogonal freedom
//! - [`es`]: derandomized (μ, λ) evolution strategy
//! - [`routing`]: two-party entanglement routing via local unitaries
//! - [`runner`]: seeded ensemble experiments and CSV/JSON emission
//!
//! All randomized components are driven by explicit 64-bit seeds with
//! counter-split substreams; identical seeds reproduce identical results
//! regardless of thread count. Data-parallel loops run on rayon under the
//! default `parallel` feature and degrade to sequential iteration without
//! it.

pub mod error;
pub mod es;
pub mod gaussian;
pub mod graph;
pub mod optimizer;
pub mod par;
pub mod routing;
pub mod runner;
pub mod spectrum;

pub use error::{Error, Result};
pub use graph::{Graph, RngSeed};
pub use spectrum::SqueezingSpectrum;
