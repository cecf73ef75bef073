//! Certified computation in free Banach lattices `FBL[E]` over
//! finite-dimensional `ℓp` spaces.

pub mod constructions;
pub mod error;
pub mod homext;
pub mod lp;
pub mod majorant;
pub mod nakano;
pub mod norm;
pub mod par;
pub mod sample;
pub mod spaces;
pub mod terms;
pub mod verify;

pub use error::{Error, Result};
