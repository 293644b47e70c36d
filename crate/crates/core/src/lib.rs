//! Simplicial sets, horn filling, and lifting structures on finite truncated instances.

pub mod awfs;
pub mod cli;
pub mod delta;
pub mod salg;
pub mod kan;
pub mod sieve;
