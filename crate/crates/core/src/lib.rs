//! Screening of 2D brain-MRI slices for atrophy indicators.
//!
//! A target slice is resized, registered to an age-matched reference through
//! landmark control points, segmented into dark cavity and bright tissue
//! pixels, counted inside a region of interest and compared against a
//! normative baseline. Each stage lives in its own module; [`pipeline`] strings
//! them together and [`reporting`] renders the result.

pub mod analysis;
pub mod imgcore;
pub mod measurement;
pub mod phantom;
pub mod pipeline;
pub mod registration;
pub mod reporting;
pub mod segmentation;

pub use imgcore::{BitDepth, Image, InterpKind};
