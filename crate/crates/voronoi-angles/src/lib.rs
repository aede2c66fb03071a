//! Monte Carlo toolkit for angle statistics on Poisson-Voronoi tessellations.
//!
//! The crate simulates, at desk scale, the point processes that live on the
//! one-dimensional facets of the Voronoi tessellation of a homogeneous
//! Poisson process — the process of facet points seeing their two generating
//! nuclei at a prescribed angle, and the process of crossings of a straight
//! line with the tessellation, marked by the angle at which each crossing
//! sees its pair — and validates the estimates against closed forms, in both
//! two and three dimensions. A cellular-handover model (directional panels on
//! a moving handset) is built on top of the crossing process.
//!
//! Everything is deterministic given a master seed: replications draw from
//! counter-based random streams, so results are independent of the worker
//! count. See the `book/` guide for a narrative walkthrough.

pub mod cli;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod geom;
pub mod grid;
pub mod oracles;
pub mod panel_swap;
pub mod processes;
pub mod sampling;
pub mod validation;

#[cfg(doctest)]
mod book;

pub use error::{Error, Result};
