//! Self-avoiding isometric bending of single-layer and bilayer Kirchhoff plates.
//!
//! Deformations are discretized with discrete Kirchhoff triangles, self-contact is penalized by a
//! discretized tangent-point potential, and equilibria are approached by a semi-implicit gradient
//! flow constrained to the linearized nodal isometry condition.

pub mod error;
pub mod flow;
pub mod geom;
pub mod lab;
pub mod dkt;
pub mod energy;
pub mod mesh;
pub mod scalar;
pub mod tangent_point;

pub use error::{Error, Result};
pub use scalar::Real;

pub type TriMesh = mesh::TriMesh<f64>;
pub type TriMeshF32 = mesh::TriMesh<f32>;
