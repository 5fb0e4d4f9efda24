//! Distributed inexact Newton methods with adaptive step sizes, simulated
//! over a synchronous network of nodes.
//!
//! Each node owns a strongly convex local cost. The penalty formulation
//! couples the nodes through a consensus matrix, and the outer Newton loop
//! computes directions with distributed stationary solvers (JOR or a damped
//! block iteration), picks step sizes from a shrinking parameter `gamma`, and
//! accepts steps by checking the decrease of the gradient inf-norm, which the
//! nodes learn by flooding scalars. Every operation is charged to a
//! [`cost::CostLedger`] so that methods can be compared on
//! `computation + r * communication`.

pub mod baselines;
pub mod centralized;
pub mod continuation;
pub mod cost;
pub mod dinas;
pub mod error;
pub mod harness;
pub mod linear_solvers;
pub mod network;
pub mod objectives;
pub mod rng;

pub use error::{Error, Result};
