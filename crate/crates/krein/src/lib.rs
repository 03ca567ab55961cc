#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod czkit;
pub mod error;
pub mod fft;
pub mod harmonic;
pub mod kreincore;
pub mod kreinsol;
pub mod linalg;
pub mod quad;
pub mod remainder;
pub mod steklov;
pub mod weights;

pub use error::{KreinError, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/weights.md")]
    mod weights {}
    #[doc = include_str!("../../../book/src/dyadic.md")]
    mod dyadic {}
    #[doc = include_str!("../../../book/src/resolvent.md")]
    mod resolvent {}
    #[doc = include_str!("../../../book/src/polynomials.md")]
    mod polynomials {}
    #[doc = include_str!("../../../book/src/remainders.md")]
    mod remainders {}
    #[doc = include_str!("../../../book/src/projections.md")]
    mod projections {}
}
