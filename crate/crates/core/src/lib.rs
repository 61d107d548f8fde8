//! Core of the cityforge pipeline.
//!
//! The crate is organised around the two layout languages and everything that
//! consumes them:
//!
//! - [`program`]: the Block Program and Building Program DSLs (parse, validate,
//!   serialize, format checks).
//! - [`geometry`]: planar polygon kernel shared by every other module.
//! - [`scoring`]: the spatial alignment reward, top-down rasterization and
//!   preference-pair construction.
//! - [`executor`]: turns programs into building shells, facade components and
//!   a full scene, exported as OBJ or binary glTF.
//! - [`metrics`]: format accuracy, collision rate, ROS and OTR plus reporting.
//! - [`edit`]: deterministic program edits driven by a small command grammar.

pub mod edit;
pub mod executor;
pub mod geometry;
pub mod metrics;
pub mod program;
pub mod scoring;

pub use program::{
    BlockElement, BlockProgram, BuildingComponent, BuildingProgram, CityProgram, FootprintPolygon, Region,
};
