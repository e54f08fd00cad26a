//! Backdoor and sidedoor solving for constraint satisfaction problems over
//! partition schemes (RCC-5, the point algebra, equality languages, small
//! finite domains).
//!
//! The crate is organized bottom-up: [`algebra`] holds schemes and relation
//! representations, [`model`] the instances, [`oracle`] complete certificate
//! search used as ground truth, and the remaining modules the short-cut
//! artifacts (simplification maps, backdoors, branching maps, sidedoors) and
//! instance generators.

pub mod algebra;
pub mod backdoor;
pub mod branchmap;
pub mod error;
pub mod gadgets;
pub mod language;
pub mod model;
pub mod oracle;
pub mod sidedoor;
pub mod simpmap;

pub use error::{Error, Result};
