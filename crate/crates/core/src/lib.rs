//! Canonical cell decompositions of cusped hyperbolic manifolds, computed
//! from the light-cone convex hull and from the cut locus of the cusps,
//! together with the mixed decompositions of manifolds with totally geodesic
//! boundary obtained by doubling.

pub mod cutlocus;
pub mod decorations;
pub mod doubling;
pub mod ep_hull;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod frames;
pub mod group;
pub mod hull;
pub mod io;
mod linalg;
pub mod minkowski;

pub use error::{Error, Result};
