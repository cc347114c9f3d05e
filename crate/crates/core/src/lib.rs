//! Distributed-order fractional calculus and the ultraslow diffusion equation.

pub mod calculus;
pub mod cli;
pub mod error;
pub mod green;
pub mod kernels;
pub mod quad;
pub mod relaxation;
pub mod solver;
pub mod special;
pub mod transform;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
pub use weights::Weight;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/kernels.md")]
    mod kernels {}
    #[doc = include_str!("../../../book/src/relaxation.md")]
    mod relaxation {}
    #[doc = include_str!("../../../book/src/calculus.md")]
    mod calculus {}
    #[doc = include_str!("../../../book/src/green.md")]
    mod green {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
