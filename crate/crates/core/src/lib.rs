//! Simulation and exact analysis of dreidel and its overdraft variants.

pub mod chain;
pub mod cli;
pub mod error;
pub mod game;
pub mod gamelet;
pub mod mc_lab;
pub mod report;
pub mod rng;
pub mod variants;

pub use error::{Error, Result};
pub use game::{GameConfig, GameState, SpinOutcome, StepEvent, Terminal, Transcript};
pub use rng::SpinRng;
