//! Slotted ALOHA random access with physical-layer network coding and
//! multiuser detection.
//!
//! Colliding users' packets are decoded per slot, either individually or as
//! bitwise XOR combinations, and every decoded combination becomes one
//! equation over GF(2^m) in a frame-wide linear system whose solution
//! recovers the original messages. The crate provides the finite-field
//! algebra, the channel code and its decoders, the channel model, the five
//! slot-level receivers, the frame-level solver, the analytical throughput
//! bound, and a seeded parallel experiment harness.

pub mod bound;
pub mod channel;
pub mod code;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod gf2m;
pub mod phydec;
pub mod rng;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/codes.md")]
    mod codes {}
    #[doc = include_str!("../../../book/src/slot_receivers.md")]
    mod slot_receivers {}
    #[doc = include_str!("../../../book/src/frames.md")]
    mod frames {}
    #[doc = include_str!("../../../book/src/bound.md")]
    mod bound {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
}
