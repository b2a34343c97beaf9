use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::energy::p_energy;
use crate::fixtures::{make_fixture, FixtureKind};
use crate::mesh::build_mesh;
use crate::problem::{BoundaryData, BoundaryPiece, Domain, ProblemSpec};
use crate::solver::{initial_guess, retract_free_boundary, solve, SolverConfig};

fn square(lo: f64, hi: f64, h: f64) -> Arc<Mesh> {
    Arc::new(build_mesh(&Domain::Box { lower: vec![lo, lo], upper: vec![hi, hi] }, h).unwrap())
}

fn linear(mesh: &Arc<Mesh>, a: [f64; 4]) -> VectorField {
    VectorField::from_fn(mesh.clone(), 2, |x| vec![a[0] * x[0] + a[1] * x[1], a[2] * x[0] + a[3] * x[1]]).unwrap()
}

fn ball_volume(mesh: &Mesh, x0: &[f64], r: f64) -> f64 {
    mesh.ball_elements(x0, r).iter().map(|&e| mesh.volume(e)).sum()
}

#[test]
fn normalized_energy_examples() {
    let mesh = square(-1.0, 1.0, 1.0 / 32.0);
    let c = VectorField::constant(mesh.clone(), &[0.3, 0.1]);
    assert_eq!(normalized_energy(&c, 3.0, &[0.0, 0.0], 0.5), 0.0);
    let a = [1.0, 2.0, -0.5, 0.25];
    let u = linear(&mesh, a);
    let af2: f64 = a.iter().map(|x| x * x).sum();
    for p in [2.0, 3.0] {
        let r = 0.5;
        let got = normalized_energy(&u, p, &[0.1, -0.1], r);
        let discrete = r.powf(p - 2.0) * af2.powf(0.5 * p) * ball_volume(&mesh, &[0.1, -0.1], r);
        assert!((got - discrete).abs() < 1e-12 * got);
        let exact = PI * af2.powf(0.5 * p) * r.powf(p);
        assert!((got - exact).abs() < 0.02 * exact);
    }
}

#[test]
fn normalized_energy_is_dilation_invariant() {
    let small = square(0.0, 1.0, 1.0 / 16.0);
    let big = square(0.0, 2.0, 1.0 / 8.0);
    let a = [0.7, -0.2, 0.4, 1.1];
    let u = linear(&small, a);
    let scaled = [a[0] / 2.0, a[1] / 2.0, a[2] / 2.0, a[3] / 2.0];
    let v = linear(&big, scaled);
    for p in [2.0, 2.5, 4.0] {
        let e1 = normalized_energy(&u, p, &[0.5, 0.4], 0.3);
        let e2 = normalized_energy(&v, p, &[1.0, 0.8], 0.6);
        assert!((e1 - e2).abs() < 1e-12 * e1, "{e1} vs {e2}");
    }
}

#[test]
fn sup_normalized_energy_examples() {
    let mesh = square(-1.0, 1.0, 1.0 / 16.0);
    let c = VectorField::constant(mesh.clone(), &[1.0, 0.0]);
    let fam = BallFamily::new(vec![vec![0.0, 0.0], vec![0.3, 0.3]], BallFamily::dyadic_radii(0.5, 3)).unwrap();
    assert_eq!(sup_normalized_energy(&c, 2.0, &fam), 0.0);
    let u = linear(&mesh, [1.0, 0.0, 0.0, 1.0]);
    let single = BallFamily::new(vec![vec![0.1, 0.0]], vec![0.4]).unwrap();
    assert_eq!(sup_normalized_energy(&u, 3.0, &single), normalized_energy(&u, 3.0, &[0.1, 0.0], 0.4));
    let dyadic = BallFamily::new(vec![vec![0.0, 0.0]], BallFamily::dyadic_radii(0.5, 3)).unwrap();
    assert_eq!(sup_normalized_energy(&u, 3.0, &dyadic), normalized_energy(&u, 3.0, &[0.0, 0.0], 0.5));
    // enlarging the family cannot lower the sup
    let smaller = BallFamily::new(vec![vec![0.0, 0.0]], vec![0.25, 0.125]).unwrap();
    assert!(sup_normalized_energy(&u, 3.0, &smaller) <= sup_normalized_energy(&u, 3.0, &dyadic));
    assert!(BallFamily::new(vec![vec![0.0, 0.0]], vec![0.5, 0.5]).is_err());
    assert!(BallFamily::new(vec![], vec![0.5]).is_err());
}

#[test]
fn default_family() {
    let spec_domain = Domain::HalfBox { half_width: vec![1.0], height: 1.0 };
    let spec = ProblemSpec {
        p: 2.0,
        dim: 2,
        components: 2,
        free: vec![BoundaryPiece::bottom(2)],
        dirichlet: vec![BoundaryPiece::top(2)],
        natural: BoundaryPiece::lateral(2),
        domain: spec_domain.clone(),
        data: BoundaryData::Constant(vec![1.0, 0.0]),
    };
    let mesh = build_mesh(&spec_domain, 0.25).unwrap().classified(&spec).unwrap();
    let fam = BallFamily::default_for(&mesh, 0.25, 5).unwrap();
    // 9 free nodes plus the 7 × 3 interior lattice
    assert_eq!(fam.centers().len(), 9 + 7 * 3);
    assert_eq!(fam.radii().len(), 6);
}

#[test]
fn monotonicity_examples() {
    let mesh = square(-1.0, 1.0, 1.0 / 64.0);
    let c = VectorField::constant(mesh.clone(), &[0.0, 1.0]);
    let m = monotonicity_check(&c, 2.0, &[0.0, 0.0], 0.25, 0.5).unwrap();
    assert_eq!((m.lhs, m.rhs, m.discrepancy), (0.0, 0.0, 0.0));
    assert!(monotonicity_check(&c, 2.0, &[0.0, 0.0], 0.5, 0.5).is_err());
    // affine maps are stationary: both sides equal |A|² π (r² − ρ²) for n = p = 2
    let u = linear(&mesh, [1.0, 0.5, -0.3, 0.8]);
    let m = monotonicity_check(&u, 2.0, &[0.05, 0.0], 0.25, 0.5).unwrap();
    let exact = (1.0 + 0.25 + 0.09 + 0.64) * PI * (0.25 - 0.0625);
    assert!((m.lhs - exact).abs() < 0.03 * exact, "{m:?}");
    assert!((m.rhs - exact).abs() < 0.03 * exact, "{m:?}");
    assert!(m.discrepancy < 0.05 * m.normalized_energy);
}

#[test]
fn decay_ratio_examples() {
    let mesh = square(-1.0, 1.0, 1.0 / 64.0);
    let c = VectorField::constant(mesh.clone(), &[0.0, 1.0]);
    assert_eq!(decay_ratio(&c, 2.0, &[0.0, 0.0], 0.5, 0.5).unwrap(), None);
    let u = linear(&mesh, [1.0, 0.0, 0.0, 1.0]);
    let ratio = decay_ratio(&u, 2.0, &[0.0, 0.0], 0.8, 0.5).unwrap().unwrap();
    assert!((ratio - 0.25).abs() < 0.01, "{ratio}");
    assert!(decay_ratio(&u, 2.0, &[0.0, 0.0], 0.8, 1.0).is_err());
}

#[test]
fn growth_probe_examples() {
    let mesh = square(-1.0, 1.0, 1.0 / 16.0);
    let unit = VectorField::constant(mesh.clone(), &[0.0, 1.0]);
    let g = growth_probe(&unit, 3.0, &[0.0, 0.0], 0.2, 0.5, 0.5).unwrap();
    for t in [g.lhs, g.energy_outer, g.energy_annulus, g.oscillation, g.sphere_defect] {
        assert_eq!(t, 0.0);
    }
    assert_eq!((g.constant_energy, g.constant_interior, g.constant_boundary), (None, None, None));

    let c = VectorField::constant(mesh.clone(), &[0.3, 0.4]);
    let p = 3.0;
    let g = growth_probe(&c, p, &[0.85, 0.0], 0.2, 0.5, 0.5).unwrap();
    let vol = ball_volume(&mesh, &[0.85, 0.0], 0.8);
    let expected = (1.0f64 - 0.25).powf(p) * vol;
    assert!((g.sphere_defect - expected).abs() < 1e-14);
    assert_eq!((g.lhs, g.oscillation), (0.0, 0.0));
    assert!(g.rhs_boundary > 0.0 && g.rhs_interior == 0.0);
    assert!(g.near_boundary);

    assert_eq!(growth_probe(&c, p, &[0.0, 0.0], 1e-6, 0.5, 0.5).unwrap_err(), Error::EmptySubset);
    assert!(growth_probe(&c, p, &[0.0, 0.0], 0.2, 0.0, 0.5).is_err());
}

#[test]
fn bmo_examples() {
    let r = 0.5;
    let mesh = square(-1.0, 1.0, r / 32.0);
    let fam = BallFamily::new(vec![vec![0.0, 0.0]], vec![r]).unwrap();
    let c = VectorField::constant(mesh.clone(), &[2.0]);
    assert_eq!(bmo_seminorm(&c, &fam), 0.0);
    let f = VectorField::from_fn(mesh.clone(), 1, |x| vec![x[0]]).unwrap();
    // (1/|B|) ∫_B |x₁| = 4r / (3π) in the plane
    let exact = 4.0 * r / (3.0 * PI);
    let got = bmo_seminorm(&f, &fam);
    assert!((got - exact).abs() < 0.02 * exact, "{got} vs {exact}");

    let cube = Arc::new(build_mesh(&Domain::Box { lower: vec![-1.0; 3], upper: vec![1.0; 3] }, 1.0 / 16.0).unwrap());
    let f = VectorField::from_fn(cube, 1, |x| vec![x[0]]).unwrap();
    let fam = BallFamily::new(vec![vec![0.0; 3]], vec![0.75]).unwrap();
    let exact = 3.0 * 0.75 / 8.0;
    let got = bmo_seminorm(&f, &fam);
    assert!((got - exact).abs() < 0.03 * exact, "{got} vs {exact}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]
    #[test]
    fn bmo_ignores_constants(shift in -5.0..5.0f64, k in 0.5..3.0f64) {
        let mesh = square(-1.0, 1.0, 0.125);
        let fam = BallFamily::new(vec![vec![0.0, 0.0], vec![0.5, -0.25]], BallFamily::dyadic_radii(0.75, 3)).unwrap();
        let f = VectorField::from_fn(mesh.clone(), 1, |x| vec![(k * x[0]).sin() * x[1]]).unwrap();
        let g = VectorField::from_fn(mesh, 1, |x| vec![(k * x[0]).sin() * x[1] + shift]).unwrap();
        let (a, b) = (bmo_seminorm(&f, &fam), bmo_seminorm(&g, &fam));
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + shift.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn singular_sets_nest(e1 in 0.01..2.0f64, e2 in 0.01..2.0f64) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let mesh = square(-1.0, 1.0, 0.0625);
        let u = make_fixture(&FixtureKind::LogLog { center: vec![0.03, 0.0] }, mesh.clone()).unwrap().field;
        let centers: Vec<Vec<f64>> = (0..mesh.num_nodes()).step_by(7).map(|v| mesh.vertex(v).to_vec()).collect();
        let fam = BallFamily::new(centers, BallFamily::dyadic_radii(0.5, 3)).unwrap();
        let a = singular_set(&u, 2.0, lo, 0.5, &fam).unwrap();
        let b = singular_set(&u, 2.0, hi, 0.5, &fam).unwrap();
        prop_assert!(b.flagged.iter().all(|i| a.flagged.contains(i)));
    }
}

#[test]
fn dist_to_sphere_examples() {
    let mesh = square(0.0, 1.0, 0.25);
    let all: Vec<usize> = (0..mesh.num_nodes()).collect();
    let unit = VectorField::constant(mesh.clone(), &[0.0, 1.0]);
    assert_eq!(dist_to_sphere_sup(&unit, &all).unwrap(), 0.0);
    let half = VectorField::constant(mesh.clone(), &[0.5, 0.0]);
    assert_eq!(dist_to_sphere_sup(&half, &all).unwrap(), 0.5);
    assert_eq!(dist_to_sphere_sup(&half, &[]).unwrap_err(), Error::EmptySubset);
}

#[test]
fn singular_set_examples() {
    let mesh = Arc::new(build_mesh(&Domain::Box { lower: vec![-1.0; 3], upper: vec![1.0; 3] }, 0.125).unwrap());
    let centers: Vec<Vec<f64>> = [[0.0, 0.0, 0.0], [0.125, 0.0, 0.0], [0.0, 0.125, 0.125], [0.5, 0.5, 0.5], [-0.625, 0.5, 0.0]]
        .iter()
        .map(|c| c.to_vec())
        .collect();
    let fam = BallFamily::new(centers, BallFamily::dyadic_radii(0.25, 1)).unwrap();
    let radial = make_fixture(&FixtureKind::RadialProjection { center: vec![0.0; 3] }, mesh.clone()).unwrap().field;
    let s = singular_set(&radial, 2.0, 1.0, 0.25, &fam).unwrap();
    assert!(s.flagged.contains(&0) && s.flagged.contains(&1) && s.flagged.contains(&2), "{s:?}");
    assert!(!s.flagged.contains(&3) && !s.flagged.contains(&4));
    assert_eq!(s.flagged_count, s.flagged.len());
    assert!(s.covering.iter().all(|c| c.boxes >= 1 && c.boxes <= 3));

    let c = VectorField::constant(mesh.clone(), &[1.0, 0.0]);
    assert_eq!(singular_set(&c, 2.0, 1.0, 0.25, &fam).unwrap().flagged_count, 0);
    // |∇u|² = 3 · 0.01²: bound ω₃ |A|² R² below the threshold
    let small = VectorField::from_fn(mesh, 3, |x| x.iter().map(|t| 0.01 * t).collect()).unwrap();
    let bound = 4.0 * PI / 3.0 * 3e-4 * 0.25f64.powi(2);
    let s = singular_set(&small, 2.0, 2.0 * bound, 0.25, &fam).unwrap();
    assert_eq!(s.flagged_count, 0);
    assert!(singular_set(&small, 2.0, 0.0, 0.25, &fam).is_err());
}

#[test]
fn hoelder_examples() {
    let mesh = square(-1.0, 1.0, 1.0 / 64.0);
    let u = linear(&mesh, [1.0, 0.3, 0.0, 0.5]);
    let fit = hoelder_exponent(&u, &[0.0, 0.0], 0.5, 3).unwrap();
    let a = fit.alpha.unwrap();
    assert!((0.9..=1.1).contains(&a), "{fit:?}");
    let c = VectorField::constant(mesh.clone(), &[0.0, 1.0]);
    assert_eq!(hoelder_exponent(&c, &[0.0, 0.0], 0.5, 3).unwrap().alpha, None);
    let radial = make_fixture(&FixtureKind::RadialProjection { center: vec![0.0, 0.0] }, mesh.clone()).unwrap().field;
    let fit = hoelder_exponent(&radial, &[0.0, 0.0], 0.5, 3).unwrap();
    assert!(fit.raw_slope.unwrap().abs() <= 0.1, "{fit:?}");
    assert!(hoelder_exponent(&u, &[0.0, 0.0], 0.5, 2).is_err());
}

#[test]
fn max_principle_examples() {
    let mesh = square(0.0, 1.0, 0.125);
    let c = VectorField::constant(mesh.clone(), &[0.6, 0.8]);
    let m = max_principle_check(&c);
    assert!(m.pass && m.interior_sup == m.boundary_sup);
    let mut vals = c.values().to_vec();
    let centre = (0..mesh.num_nodes()).find(|&v| mesh.vertex(v) == [0.5, 0.5]).unwrap();
    vals[2 * centre] = 3.0;
    let spike = c.with_values(vals).unwrap();
    assert!(!max_principle_check(&spike).pass);

    // p = 2 with boundary values in [−1, 1]
    let domain = Domain::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] };
    let spec = ProblemSpec {
        p: 2.0,
        dim: 2,
        components: 2,
        free: vec![],
        dirichlet: domain.pieces(),
        natural: vec![],
        domain,
        data: BoundaryData::SphereWave { wavenumber: 5.0 },
    };
    let mesh = Arc::new(build_mesh(&spec.domain, 1.0 / 16.0).unwrap().classified(&spec).unwrap());
    let init = initial_guess(mesh, &spec).unwrap();
    let (u, report) = solve(&spec, &init, &SolverConfig::default()).unwrap();
    assert!(report.converged);
    assert!(max_principle_check(&u).pass);
}

fn half_box_spec(p: f64, data: BoundaryData, natural_sides: bool) -> ProblemSpec {
    let domain = Domain::HalfBox { half_width: vec![1.0], height: 1.0 };
    let (dirichlet, natural) = if natural_sides {
        (vec![BoundaryPiece::top(2)], BoundaryPiece::lateral(2))
    } else {
        let mut d = BoundaryPiece::lateral(2);
        d.push(BoundaryPiece::top(2));
        (d, vec![])
    };
    ProblemSpec { p, dim: 2, components: 2, free: vec![BoundaryPiece::bottom(2)], dirichlet, natural, domain, data }
}

#[test]
fn sphere_distance_shrinks_with_data_energy() {
    let near_free = |mesh: &Mesh| -> Vec<usize> { (0..mesh.num_nodes()).filter(|&v| mesh.vertex(v)[1] <= 0.25).collect() };
    let run = |k: f64| {
        let spec = half_box_spec(2.0, BoundaryData::SphereWave { wavenumber: k }, false);
        let mesh = Arc::new(build_mesh(&spec.domain, 1.0 / 16.0).unwrap().classified(&spec).unwrap());
        let init = initial_guess(mesh.clone(), &spec).unwrap();
        let (u, rep) = solve(&spec, &init, &SolverConfig::default()).unwrap();
        assert!(rep.converged);
        dist_to_sphere_sup(&u, &near_free(&mesh)).unwrap()
    };
    // halving the wavenumber scales the Dirichlet energy by 1/4 at p = 2
    let (d1, d2) = (run(3.0), run(1.5));
    assert!(d2 / d1 < 1.0, "{d1} -> {d2}");
}

#[test]
fn liouville_on_wide_half_box() {
    let domain = Domain::HalfBox { half_width: vec![4.0], height: 1.0 };
    let mut natural = BoundaryPiece::lateral(2);
    natural.push(BoundaryPiece::top(2));
    let spec = ProblemSpec {
        p: 3.0,
        dim: 2,
        components: 2,
        free: vec![BoundaryPiece::bottom(2)],
        dirichlet: vec![],
        natural,
        domain,
        data: BoundaryData::Constant(vec![1.0, 0.0]),
    };
    let mesh = Arc::new(build_mesh(&spec.domain, 0.125).unwrap().classified(&spec).unwrap());
    let raw = VectorField::from_fn(mesh, 2, |x| vec![1.0 + 0.3 * (x[0] * 1.7).sin(), 0.4 * (x[1] * 2.0 + x[0]).cos()]).unwrap();
    let init = retract_free_boundary(&raw).unwrap();
    let e0 = p_energy(&init, 3.0).total;
    let config = SolverConfig { grad_tol: 1e-9, ..SolverConfig::default() };
    let (u, report) = solve(&spec, &init, &config).unwrap();
    assert!(report.converged, "{:?}", report.final_residual_norm);
    assert!(report.final_p_energy < 1e-6 * e0, "{} vs {e0}", report.final_p_energy);
    assert!(max_principle_check(&u).pass);
}

#[test]
fn report_on_constant_fixture_is_zero() {
    let mesh = square(-1.0, 1.0, 0.125);
    let c = make_fixture(&FixtureKind::Constant { value: vec![0.0, 1.0] }, mesh.clone()).unwrap().field;
    let cfg = DiagnosticsConfig::for_mesh(&mesh);
    let rep = run_diagnostics(&c, 2.0, &cfg).unwrap();
    assert_eq!(rep.sup_normalized_energy, 0.0);
    assert_eq!(rep.bmo_seminorm, 0.0);
    assert!(rep.balls.iter().all(|b| b.normalized_energy == 0.0 && b.mean_oscillation == 0.0));
    assert_eq!(rep.decay_ratio, None);
    assert_eq!(rep.singular_set.flagged_count, 0);
    assert_eq!(rep.hoelder.alpha, None);
    assert_eq!(rep.dist_to_sphere, Some(0.0));
    let m = rep.monotonicity.unwrap();
    assert_eq!((m.lhs, m.rhs), (0.0, 0.0));
    assert!(rep.max_principle.pass);
}
