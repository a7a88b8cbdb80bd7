//! Coverage planning for mobile UV disinfection robots.
//!
//! Given an environment (an extruded floorplan or a triangle mesh) and a
//! light-carrying robot, the crate computes dwell times at a set of vantage
//! positions and a tour through them so that every reachable surface patch
//! receives at least a prescribed radiant fluence (J/m²).
//!
//! Pipeline: [`roadmap`] samples vantage positions and connects them,
//! [`radiometry`] / [`raster3d`] build the irradiance matrix, [`lp`] solves
//! for dwell times, [`tour`] orders the chosen vantages, and [`planner`]
//! ties the stages together. [`milp`] solves the joint dwell/tour problem
//! exactly on small instances, and [`experiment`] runs batch comparisons
//! and resolution sweeps.

pub mod experiment;
pub mod geometry;
pub mod lp;
pub mod milp;
pub mod planner;
pub mod radiometry;
pub mod raster3d;
pub mod roadmap;
pub mod tour;
pub mod visibility;
pub mod worldgen;

pub use worldgen::{Rect, SurfacePatch, TriMeshWorld, World2p5D, WorldError, WorldModel};
