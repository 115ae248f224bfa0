//! Certified global optimization of convex objectives over the outputs of
//! small-input ReLU networks.
//!
//! Inputs are split eagerly, each cell is pushed through the network as a
//! zonotope, and a best-first branch and bound closes the gap between the best
//! center evaluation and the lowest zonotope lower bound.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the common instantiations. File formats and the query runner use `f64`.

pub mod bnb;
pub mod error;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod network;
pub mod problems;
pub mod propagation;
pub mod query;
pub mod scalar;
pub mod selftest;
pub mod subsolvers;

pub use bnb::{solve, solve_with_progress, BnbOptions, BranchProblem, Progress, Solution, SolveStatus, TieBreak};
pub use error::{Error, Result};
pub use geometry::{max_hyperrect_distance, BoxDistance, Hyperrectangle, Norm, Polytope, Zonotope};
pub use linalg::Matrix;
pub use network::{Activation, AffineLayer, FeedForwardNetwork};
pub use problems::{DistanceNorm, InputSet, Objective, Outcome, Sense};
pub use propagation::{propagate, propagate_with_bounds};
pub use scalar::Scalar;

pub type Matrix64 = Matrix<f64>;
pub type Matrix32 = Matrix<f32>;
pub type Zonotope64 = Zonotope<f64>;
pub type Zonotope32 = Zonotope<f32>;
pub type Hyperrectangle64 = Hyperrectangle<f64>;
pub type Hyperrectangle32 = Hyperrectangle<f32>;
pub type Polytope64 = Polytope<f64>;
pub type Polytope32 = Polytope<f32>;
pub type Network64 = FeedForwardNetwork<f64>;
pub type Network32 = FeedForwardNetwork<f32>;
pub type InputSet64 = InputSet<f64>;
pub type InputSet32 = InputSet<f32>;
pub type Objective64 = Objective<f64>;
pub type Objective32 = Objective<f32>;
pub type BnbOptions64 = BnbOptions<f64>;
pub type BnbOptions32 = BnbOptions<f32>;
