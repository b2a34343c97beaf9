//! Discrete p-harmonic maps with a free boundary on the unit sphere, and
//! diagnostics for their regularity theory.

pub mod diagnostics;
pub mod energy;
pub mod error;
pub mod field;
pub mod fixtures;
pub mod io;
pub mod mesh;
pub mod problem;
pub mod quadrature;
pub mod reflection;
pub mod solver;
mod vecops;

pub use diagnostics::{
    BallFamily, DiagnosticsConfig, DiagnosticsReport, GrowthProbe, HoelderFit, MaxPrinciple, MonotonicityReport,
    SingularSetReport,
};
pub use energy::{EnergyValue, OmegaField};
pub use error::{Error, Result};
pub use field::{ElementGradient, VectorField};
pub use mesh::{build_mesh, BoundaryFace, ElementSet, FaceClass, Mesh, NodeClass};
pub use problem::{BoundaryData, BoundaryPiece, Domain, ProblemSpec};
pub use solver::{SolveReport, SolverConfig, TraceRecord};
