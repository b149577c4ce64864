//! Checks that reproduce claims about the catalog maps, each emitting a
//! self-contained [`VerificationReport`].

mod newton_h;
mod report;
mod structures;
mod theorems;

pub use newton_h::*;
pub use report::*;
pub use structures::*;
pub use theorems::*;
