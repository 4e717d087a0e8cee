//! Quantum key distribution over synthetic Internet-like networks.
//!
//! Networks are drawn from the S² geometric model ([`netgen`]), every link is
//! rated with a CV or DV QKD protocol ([`qkdrates`]), links below a key-rate
//! threshold are removed ([`qkdnet`]), and the result is measured for
//! percolation ([`analysis`]) and end-to-end key rates ([`routing`]).
//! [`experiment`] runs seeded ensemble scans over these.

pub mod analysis;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod graph;
pub mod netgen;
pub mod qkdnet;
pub mod qkdrates;
pub mod routing;
pub mod seed;

pub use error::{Error, Result};
