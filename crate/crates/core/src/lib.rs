//! Wide bounding volume hierarchies with discrete oriented bounding boxes.
//!
//! An N-wide AABB tree is built over a triangle mesh and then annotated
//! bottom-up: each interior node may pick one rotation from a small fixed
//! set and store all of its child boxes in that rotated frame. Rotations are
//! referenced by a 7-bit index into shared tables. The crate also contains
//! the traversal used to measure the effect, synthetic scenes and a
//! benchmark harness.

pub mod bench;
pub mod bvh;
pub mod convert;
pub mod error;
pub mod geom;
pub mod kdop;
pub mod rotation;
pub mod scene;
pub mod traverse;

pub use bvh::{build_bvh2, sah_cost, sah_cost_with, widen, BuildConfig, Leaf, NodeRef, SahCosts, WideBvh, WideNode};
pub use convert::{convert, leaf_frame, ConversionConfig, ConversionMode, DobbAnnotation, NodeObb};
pub use error::{Error, Result};
pub use geom::{Aabb, HitRecord, Mat3, Ray, Triangle, Vec3};
pub use kdop::{ApexMap, BasisAxes, BasisDop, Dop26, Extent};
pub use rotation::{ObbIndex, RotationSet};
pub use scene::{gen_axis_aligned_grid, gen_hairball, load_obj, parse_obj, HairballParams, Scene};
pub use traverse::{batch_trace, closest_hit_exhaustive, traverse_closest, TraversalStats};
