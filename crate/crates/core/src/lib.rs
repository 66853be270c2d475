//! Polluted bootstrap percolation on finite patches of the square lattice.
//!
//! Sites are open, occupied or closed. Occupied and closed sites never change;
//! open sites become occupied under one of three monotone neighbourhood rules.
//! The crate provides the dynamics, seeded polluted initial conditions,
//! executable blocking and spreading certificates, Monte Carlo experiments and
//! a command-line front end.

pub mod certificates;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod random;
pub mod render;
pub mod selftest;
pub mod stats;

pub use dynamics::{closure, closure_naive, FinalGrid, Rule};
pub use error::{Error, Result};
pub use lattice::{CellState, Grid, Rect};
pub use random::{sample, sample_coupled, BoundaryCondition, PollutionParams};
