//! Generalized winding numbers for collections of trimmed NURBS surfaces.
//!
//! The winding number of a query point is computed per patch from a line
//! integral over the trimming curves, corrected by ±½ for every crossing of
//! an auxiliary line through the query with the surface. No tessellation is
//! involved, so the result converges to the exact solid angle within the
//! requested quadrature tolerance.

// `!(x > 0.0)` is used on purpose so NaN fails positivity checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod error;
pub mod gauss;
pub mod geom;
pub mod intersect;
pub mod io;
pub mod kernel;
pub mod shapes;
pub mod winding2d;
pub mod winding3d;

pub use error::{Error, Result};
pub use geom::{Aabb2, Aabb3, Line3, Obb3, ParamPoint, Point3, Rotation, Vec3};
pub use kernel::{
    circle_loop, KnotVector, LoopOrientation, Model, NurbsPatch, RationalCurve2, TrimmedPatch,
};
pub use winding3d::{
    antiderivative_field, evaluate_line_integral, extract_parameter_disk, model_gwn, patch_gwn,
    Axis, CaseCategory, CaseNode, GwnCase, GwnConfig, GwnEngine, GwnResult, ModelGwn,
    PreparedPatch, QuadratureCache,
};
