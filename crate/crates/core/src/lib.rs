//! Two-timescale learning for a navigating mobile robot.
//!
//! Long-term learning evolves behaviour repertoires with a genetic algorithm in a
//! small simulated building ([`ga`]). Those repertoires seed an idiotypic immune
//! network ([`ais`]) that arbitrates between behaviours during a target-finding
//! task ([`harness`]). Everything runs inside a deterministic desk-scale 2D
//! simulator ([`sim`]).

pub mod ais;
pub mod behavior;
pub mod diversity;
pub mod error;
pub mod ga;
pub mod harness;
pub mod perception;
pub mod reinforcement;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};

/// Control period: the IR ring is sampled every 192 ms.
pub const TICK_SECONDS: f64 = 0.192;
