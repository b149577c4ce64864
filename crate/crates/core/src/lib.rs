//! Numerical laboratory for transcendental meromorphic iteration.

pub mod error;
pub mod fatou;
pub mod mapcat;
pub mod orbit;
pub mod psv;
pub mod verify;

pub use error::*;
pub use mapcat::{Cx, MapId, MapSpec, MeromorphicMap, SingularPointSet, Window};
pub use orbit::{iterate, iterate_with, IterParams, Orbit, Verdict};
