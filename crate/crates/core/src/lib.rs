pub mod error;
pub mod knapsack;
pub mod pnk;
pub mod report;
mod rng;
pub mod sim;
pub mod theory;
pub mod voting;

pub use rng::derive_seed;
