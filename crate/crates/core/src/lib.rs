//! Secrecy rate regions for broadcast wiretap channels with asymmetric state
//! knowledge, together with random-binning simulations and the repeated-game
//! minimax bound.

pub mod channel;
pub mod coding;
pub mod error;
pub mod game;
pub mod gaussian;
pub mod geometry;
pub mod instances;
pub mod pmf;
pub mod random;
pub mod region;

pub use error::{Error, Result};
