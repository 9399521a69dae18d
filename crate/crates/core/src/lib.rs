//! Exploratory HJB equations as a source of state-dependent temperature for
//! Langevin minimization.
//!
//! The pipeline has three stages:
//!
//! 1. [`pinn`] trains a tanh value network ([`diffnet`]) on the exploratory
//!    HJB equation of an objective, with residuals assembled from the
//!    analytically propagated value/gradient/Hessian jet.
//! 2. [`ops`] turns the Laplacian of the learned value into a noise
//!    coefficient through closed forms of the Gibbs control distribution
//!    that stay finite for any exponent range.
//! 3. [`langevin`] runs truncated, mirror-reflected Euler–Maruyama
//!    trajectories with that noise and returns the best visited point.
//!
//! [`fd`] is a classical one-dimensional reference solver (monotone finite
//! differences with Howard policy iteration), [`objectives`] holds the
//! benchmark instances and [`metrics`] the evaluation statistics.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled. The `parallel` feature evaluates collocation blocks and
//! trajectories on a rayon pool; results are bit-identical to serial runs.
#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod diffnet;
pub mod domain;
pub mod error;
pub mod fd;
pub mod langevin;
pub(crate) mod math;
pub mod metrics;
pub mod objectives;
pub mod ops;
pub mod pinn;
pub mod quadrature;

pub use diffnet::{backward, forward_jet, forward_jets, init_network, EvalJet, MlpParams, ParamGrads, Tape};
pub use domain::BoxDomain;
pub use error::{Error, Result};
pub use ops::{ControlSet, Problem};
