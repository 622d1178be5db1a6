//! Matrix-product-state engine for a chain of spins coupled to a single
//! cavity oscillator: ground states, Krylov time evolution, homodyne
//! trajectories and dense exact-diagonalization references.
//!
//! The numeric core is generic over the real scalar ([`scalar::Real`],
//! implemented for `f32` and `f64`); the aliases below fix the common
//! instantiations.

pub mod checkpoint;
pub mod dynamics;
pub mod ed;
pub mod error;
pub mod fit;
pub mod groundstate;
pub mod linalg;
pub mod model;
pub mod mpo;
pub mod mps;
pub mod noise;
pub mod observables;
pub mod ops;
pub mod scalar;
pub mod tensor;
pub mod trajectory;

mod env;

pub use error::{Error, Result};
pub use model::ModelParams;

pub type Tensor = tensor::DenseTensor<f64>;
pub type Mps = mps::MpsState<f64>;
pub type Mpo = mpo::MpOperator<f64>;
pub type Op = ops::LocalOp<f64>;

pub type Tensor32 = tensor::DenseTensor<f32>;
pub type Mps32 = mps::MpsState<f32>;
pub type Mpo32 = mpo::MpOperator<f32>;
