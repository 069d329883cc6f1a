//! Federated scientific machine learning at desk scale.
//!
//! The crate covers the whole pipeline needed to study how client data
//! heterogeneity affects federated training of scientific models:
//!
//! * [`heterogeneity`] builds non-iid client shards (1D / 2D partitions,
//!   Hammersley sampling, Chebyshev function spaces).
//! * [`transport`] measures shard heterogeneity with the exact discrete
//!   1-Wasserstein distance.
//! * [`autodiff`] and [`nn`] provide a scalar reverse-mode tape with
//!   higher-order derivatives, dense networks and the Adam/SGD client
//!   optimizers.
//! * [`pinn`] and [`operator`] bind networks to regression, physics-informed
//!   and DeepONet losses; [`solvers`] supplies the classical reference
//!   solutions.
//! * [`federation`] runs FedAvg with pluggable client optimizers, the
//!   centralized twin, and weight-divergence tracking.
//! * [`experiment`] wires everything into reproducible runs, sweeps and
//!   result files; the `fedsciml` binary is a thin CLI over it.

pub mod autodiff;
pub mod error;
pub mod experiment;
pub mod federation;
pub mod heterogeneity;
pub mod nn;
pub mod operator;
pub mod pinn;
pub mod rng;
pub mod solvers;
pub mod transport;

pub use error::{Error, Result};
