//! Chain recurrence of homeomorphisms of the line and the plane.
//!
//! Chains come in four flavours: ε-chains, strong chains, chains whose jumps are
//! bounded by a radius field, and chains that may only jump inside a compact set.
//! [`gridgraph`] decides recurrence on box discretizations and labels how sound
//! each answer is. [`diskchain`] turns a recurrent chain of a fixed-point-free map
//! into a periodic disk chain certificate.
//!
//! All numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at the
//! crate root fix `f64`.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chains;
pub mod diskchain;
pub mod expr;
pub mod geometry;
pub mod gridgraph;
pub mod radius;
pub mod scalar;
pub mod systems;

pub use chains::{Chain, ChainError, ChainNotion, ChainReport};
pub use diskchain::{DiskChainCertificate, DiskChainError};
pub use geometry::{Dim, Disk, GeometryError, Metric, Point, Region, Window};
pub use gridgraph::{BoxGrid, GraphMode, TransitionGraph, Verdict, VerdictLabel};
pub use radius::{GridField, RadiusField};
pub use scalar::Scalar;
pub use systems::{DynSystem, SharedSystem, SystemError};

pub type Point64 = Point<f64>;
pub type Point32 = Point<f32>;
pub type Window64 = Window<f64>;
pub type Chain64 = Chain<f64>;
pub type ChainNotion64 = ChainNotion<f64>;
pub type RadiusField64 = RadiusField<f64>;
pub type TransitionGraph64 = TransitionGraph<f64>;
pub type Certificate64 = DiskChainCertificate<f64>;
