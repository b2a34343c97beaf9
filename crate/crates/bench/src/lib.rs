//! Shared setup for the benchmarks.

use std::sync::Arc;

use freeharm_core::solver::initial_guess;
use freeharm_core::{build_mesh, BoundaryData, BoundaryPiece, Domain, ProblemSpec, VectorField};

/// Half box `[-1, 1]^{n-1} × [0, 1]` with a free bottom, sphere-wave data on
/// the rest, at cell size `h`; returns the problem and its harmonic initial
/// field.
pub fn half_box_problem(dim: usize, p: f64, h: f64) -> (ProblemSpec, VectorField) {
    let domain = Domain::HalfBox { half_width: vec![1.0; dim - 1], height: 1.0 };
    let mut dirichlet = BoundaryPiece::lateral(dim);
    dirichlet.push(BoundaryPiece::top(dim));
    let spec = ProblemSpec {
        p,
        dim,
        components: 3,
        free: vec![BoundaryPiece::bottom(dim)],
        dirichlet,
        natural: vec![],
        domain,
        data: BoundaryData::SphereWave { wavenumber: 2.0 },
    };
    let mesh = build_mesh(&spec.domain, h).unwrap().classified(&spec).unwrap();
    let init = initial_guess(Arc::new(mesh), &spec).unwrap();
    (spec, init)
}
