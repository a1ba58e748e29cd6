//! Planar variational shape constructions.
//!
//! Two dual constructions live here:
//!
//! - the Wulff construction ([`wulff`]), which builds the convex body
//!   minimizing an anisotropic surface energy at fixed area, and
//! - the maximizing construction ([`maxshape`]), which builds the monotone
//!   curve in the positive quadrant maximizing a boundary-decaying weight
//!   functional at fixed enclosed area.
//!
//! The [`partitions`] module is an independent combinatorial laboratory:
//! exact counting and uniform sampling of integer partitions, used to check
//! that random Young diagrams concentrate on the curve the maximizing
//! construction produces for the lattice-path entropy weight. The
//! [`duality`] module checks the per-segment identity that turns Wulff
//! minimality into maximality.

pub mod direction;
pub mod duality;
pub mod geom;
pub mod io;
pub mod limit_curve;
pub mod maxshape;
pub mod partitions;
pub mod rng;
pub mod tolerances;
pub mod wulff;

pub use direction::{Direction, DirectionWeight, ProblemClass, WeightError, WeightKind};
pub use geom::{ConvexPolygon, Decay, GeomError, HalfPlane, MonotoneCurve, Point, Sense, Volume};
