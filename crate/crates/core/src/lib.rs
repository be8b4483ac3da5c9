//! Ekeland–Hofer–Zehnder capacities and systolic ratios of Lagrangian
//! products `K × T` of planar convex polygons, computed through Minkowski
//! billiards in `K` measured by the support function of `T`.
//!
//! - [`geometry`]: convex polygons, support/gauge functions, polars, normal cones.
//! - [`capacity`]: minimal non-translatable closed curves, billiard certification, sweeps.
//! - [`flow`]: the polygonal billiard (Reeb) flow, periodicity and unfolding.
//! - [`products`]: p-products, volume factors and higher-dimensional systolic bookkeeping.
//! - [`io`]: JSON readers and writers for polygons and product specs.

pub mod capacity;
pub mod error;
pub mod flow;
pub mod geometry;
pub mod io;
pub mod products;
pub mod vec2;

pub use error::{Error, Result};
pub use geometry::{random_convex_polygon, regular_polygon, BoundaryPoint, Cone, Feature, Polygon2};
pub use vec2::Vec2;
