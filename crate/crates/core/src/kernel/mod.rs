//! Rational curve and surface evaluation, subdivision and bounding volumes.

pub mod bezier;
pub mod curve;
pub mod knots;
pub mod surface;
pub mod trimmed;

pub use bezier::{BezierCurve2, BezierPatch, SurfacePoint};
pub use curve::{circle_arc, circle_loop, LoopOrientation, RationalCurve2};
pub use knots::KnotVector;
pub use surface::NurbsPatch;
pub use trimmed::{random_unit, Model, TrimmedPatch};
