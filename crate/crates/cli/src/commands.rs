//! The five subcommands.

use std::fs::File;
use std::io::BufReader;
use std::sync::Arc;

use freeharm_core::diagnostics::{run_diagnostics, DiagnosticsConfig, DiagnosticsReport};
use freeharm_core::energy::p_energy;
use freeharm_core::fixtures::{fixture_energy_oracle, make_fixture, FixtureKind, QuadRegion};
use freeharm_core::io::{read_field_csv, write_field_csv, write_point_set_vtk, write_records_csv, write_trace_csv, VtkWriter};
use freeharm_core::reflection::{gradient_identity_check, reflect_field, reflected_residual_bound};
use freeharm_core::solver::{
    initial_guess, retract_free_boundary, solve, DescentDirection, EpsFloor, EpsSchedule, StepRule,
};
use freeharm_core::{
    BoundaryData, BoundaryPiece, Domain, Mesh, NodeClass, ProblemSpec, SolveReport, SolverConfig,
    VectorField,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::output::Outputs;

pub fn domain(cfg: &RunConfig) -> Result<Domain> {
    let n = cfg.usize("problem.dim")?;
    let d = match cfg.str("problem.domain")? {
        "box" => Domain::Box {
            lower: cfg.opt_floats("problem.lower").unwrap_or_else(|| vec![0.0; n]),
            upper: cfg.opt_floats("problem.upper").unwrap_or_else(|| vec![1.0; n]),
        },
        "half_box" => {
            let mut w = cfg.floats("problem.half_width")?;
            if w.len() == 1 && n > 2 {
                w = vec![w[0]; n - 1];
            }
            Domain::HalfBox { half_width: w, height: cfg.f64("problem.height")? }
        }
        "ball" => Domain::Ball { dim: n, radius: cfg.f64("problem.radius")? },
        _ => Domain::HalfBall { dim: n, radius: cfg.f64("problem.radius")? },
    };
    if d.dim() != n {
        return Err(CliError::Config(format!("domain extents do not match problem.dim = {n}")));
    }
    Ok(d)
}

fn raw_mesh(cfg: &RunConfig, domain: &Domain, h: f64) -> Result<Mesh> {
    Ok(freeharm_core::mesh::build_mesh_with_budget(domain, h, cfg.usize("mesh.max_nodes")?)?)
}

fn read_field(cfg: &RunConfig, key: &str, mesh: Arc<Mesh>) -> Result<VectorField> {
    let path = cfg.input_path(key)?;
    let file = File::open(&path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e })?;
    Ok(read_field_csv(BufReader::new(file), mesh)?)
}

/// Problem and classified mesh at resolution `h`.
pub fn problem(cfg: &RunConfig, h: f64) -> Result<(ProblemSpec, Arc<Mesh>)> {
    let domain = domain(cfg)?;
    let mesh = Arc::new(raw_mesh(cfg, &domain, h)?);
    let pieces = |key: &str| BoundaryPiece::parse_list(&cfg.list(key).join(","), &domain);
    let components = cfg.usize("problem.components")?;
    let data = match cfg.str("problem.data")? {
        "constant" => BoundaryData::Constant(cfg.floats("problem.data_value")?),
        "sphere_wave" => BoundaryData::SphereWave { wavenumber: cfg.f64("problem.wavenumber")? },
        "linear" => BoundaryData::Affine {
            matrix: cfg.floats("problem.data_matrix")?,
            offset: cfg.floats("problem.data_offset")?,
        },
        _ => {
            let f = read_field(cfg, "problem.data_file", mesh.clone())?;
            if f.components() != components {
                return Err(CliError::Config(format!("problem.data_file has {} components, expected {components}", f.components())));
            }
            BoundaryData::Nodal(f.into_values())
        }
    };
    // the nodal data has been copied out, so this is the only handle
    let mesh = Arc::try_unwrap(mesh).expect("unshared mesh");
    let spec = ProblemSpec {
        p: cfg.f64("problem.p")?,
        dim: domain.dim(),
        components,
        free: pieces("problem.free")?,
        dirichlet: pieces("problem.dirichlet")?,
        natural: pieces("problem.natural")?,
        domain,
        data,
    };
    spec.validate()?;
    let mesh = Arc::new(mesh.classified(&spec)?);
    Ok((spec, mesh))
}

pub fn solver_config(cfg: &RunConfig) -> Result<SolverConfig> {
    let floor = cfg.f64("solver.eps_floor")?;
    let direction = match cfg.str("solver.direction")? {
        "newton" => DescentDirection::Preconditioned {
            cg_tol: cfg.f64("solver.cg_tol")?,
            cg_max_iters: cfg.usize("solver.cg_max_iters")?,
        },
        _ => DescentDirection::Residual,
    };
    let config = SolverConfig {
        eps: EpsSchedule {
            initial: cfg.f64("solver.eps_initial")?,
            decay: cfg.f64("solver.eps_decay")?,
            floor: match cfg.str("solver.eps_floor_mode")? {
                "absolute" => EpsFloor::Absolute(floor),
                _ => EpsFloor::RelativeToInitialGradient(floor),
            },
        },
        step: StepRule {
            initial: cfg.f64("solver.step_initial")?,
            backtrack: cfg.f64("solver.backtrack")?,
            armijo_c: cfg.f64("solver.armijo_c")?,
            max_backtracks: cfg.usize("solver.max_backtracks")?,
            direction,
        },
        grad_tol: cfg.f64("solver.grad_tol")?,
        max_iters: cfg.usize("solver.max_iters")?,
        stage_tol_factor: cfg.f64("solver.stage_tol_factor")?,
        stage_max_iters: cfg.usize("solver.stage_max_iters")?,
    };
    config.validate()?;
    Ok(config)
}

fn init_field(cfg: &RunConfig, spec: &ProblemSpec, mesh: Arc<Mesh>) -> Result<VectorField> {
    match cfg.str("solver.init")? {
        "file" => read_field(cfg, "solver.init_file", mesh),
        "random" => {
            let base = initial_guess(mesh.clone(), spec)?;
            let amp = cfg.f64("solver.init_noise")?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.usize("run.seed")? as u64);
            let nc = base.components();
            let mut vals = base.values().to_vec();
            for (v, class) in mesh.node_class().iter().enumerate() {
                for c in 0..nc {
                    let noise = amp * rng.gen_range(-1.0..1.0);
                    if *class != NodeClass::Dirichlet {
                        vals[v * nc + c] += noise;
                    }
                }
            }
            Ok(retract_free_boundary(&base.with_values(vals)?)?)
        }
        _ => Ok(initial_guess(mesh, spec)?),
    }
}

fn node_class_codes(mesh: &Mesh) -> Vec<f64> {
    mesh.node_class()
        .iter()
        .map(|c| match c {
            NodeClass::Interior => 0.0,
            NodeClass::FreeSphere => 1.0,
            NodeClass::Dirichlet => 2.0,
        })
        .collect()
}

fn field_files(out: &mut Outputs, stem: &str, name: &str, u: &VectorField) -> Result<()> {
    out.csv(&format!("{stem}.csv"), |w| write_field_csv(w, u))?;
    let mesh = u.mesh();
    let mut vtk = VtkWriter::new(mesh, &format!("freeharm {stem}")).point_field(name, u)?;
    if mesh.node_class().len() == mesh.num_nodes() {
        vtk = vtk.point_array("node_class", 1, node_class_codes(mesh))?;
    }
    out.vtk(&format!("{stem}.vtk"), |w| vtk.write(w))
}

/// Solves at `mesh.h` and writes field, report and trace.
fn solve_and_write(cfg: &RunConfig, out: &mut Outputs) -> Result<(VectorField, SolveReport, ProblemSpec)> {
    let (spec, mesh) = problem(cfg, cfg.f64("mesh.h")?)?;
    let config = solver_config(cfg)?;
    let init = init_field(cfg, &spec, mesh)?;
    let (u, report) = solve(&spec, &init, &config)?;
    out.json("solve_report.json", &report)?;
    out.csv("trace.csv", |w| write_trace_csv(w, &report.energy_trace))?;
    field_files(out, "field", "u", &u)?;
    Ok((u, report, spec))
}

fn not_converged(report: &SolveReport) -> CliError {
    CliError::NotConverged { residual: report.final_residual_norm, iterations: report.iterations }
}

pub fn fixture_kind(cfg: &RunConfig, n: usize) -> Result<FixtureKind> {
    let center = cfg.opt_floats("fixture.center").unwrap_or_else(|| vec![0.0; n]);
    Ok(match cfg.str("fixture.kind")? {
        "constant" => FixtureKind::Constant { value: cfg.floats("fixture.value")? },
        "radial" => FixtureKind::RadialProjection { center },
        "loglog" => FixtureKind::LogLog { center },
        "sinloglog" => FixtureKind::SinLogLog { center },
        _ => FixtureKind::Linear { matrix: cfg.floats("fixture.matrix")?, offset: cfg.floats("fixture.offset")? },
    })
}

fn fixture_p(cfg: &RunConfig) -> Result<f64> {
    match cfg.opt_f64("fixture.p") {
        Some(p) => Ok(p),
        None => cfg.f64("problem.p"),
    }
}

/// Quadrature region covering the whole domain.
fn domain_region(domain: &Domain) -> QuadRegion {
    let n = domain.dim();
    match domain {
        Domain::Box { lower, upper } => QuadRegion::Box { lower: lower.clone(), upper: upper.clone() },
        Domain::HalfBox { half_width, height } => {
            let mut lower: Vec<f64> = half_width.iter().map(|w| -w).collect();
            lower.push(0.0);
            let mut upper = half_width.clone();
            upper.push(*height);
            QuadRegion::Box { lower, upper }
        }
        Domain::Ball { radius, .. } => QuadRegion::Ball { center: vec![0.0; n], radius: *radius },
        Domain::HalfBall { radius, .. } => QuadRegion::HalfBall { center: vec![0.0; n], radius: *radius },
    }
}

/// The field `diagnose` and `reflect` operate on, with its exponent.
fn source_field(cfg: &RunConfig, out: &mut Outputs) -> Result<(VectorField, f64, Option<SolveReport>)> {
    match cfg.str("run.source")? {
        "solve" => {
            let (u, rep, spec) = solve_and_write(cfg, out)?;
            Ok((u, spec.p, Some(rep)))
        }
        "fixture" => {
            let d = domain(cfg)?;
            let mesh = Arc::new(raw_mesh(cfg, &d, cfg.f64("mesh.h")?)?);
            let kind = fixture_kind(cfg, d.dim())?;
            Ok((make_fixture(&kind, mesh)?.field, fixture_p(cfg)?, None))
        }
        _ => {
            let d = domain(cfg)?;
            let mesh = Arc::new(raw_mesh(cfg, &d, cfg.f64("mesh.h")?)?);
            Ok((read_field(cfg, "input.file", mesh)?, cfg.f64("problem.p")?, None))
        }
    }
}

pub fn run_solve(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let (_, report, _) = solve_and_write(cfg, out)?;
    out.manifest(cfg, "solve", &[cfg.f64("mesh.h")?])?;
    if report.converged {
        Ok(())
    } else {
        Err(not_converged(&report))
    }
}

#[derive(Serialize)]
struct SingularRow {
    center: usize,
    x1: f64,
    x2: f64,
    x3: Option<f64>,
    center_sup: f64,
    flagged: bool,
}

fn diagnostics_config(cfg: &RunConfig, mesh: &Mesh) -> Result<DiagnosticsConfig> {
    let mut d = DiagnosticsConfig::for_mesh(mesh);
    if let Some(x0) = cfg.opt_floats("diagnostics.x0") {
        d.x0 = x0;
    }
    if let Some(r) = cfg.opt_f64("diagnostics.radius") {
        d.radius = r;
    }
    d.depth = cfg.usize("diagnostics.depth")?;
    d.eps_threshold = cfg.f64("diagnostics.eps_threshold")?;
    d.theta = cfg.f64("diagnostics.theta")?;
    d.lambda = cfg.f64("diagnostics.lambda")?;
    d.mu = cfg.f64("diagnostics.mu")?;
    d.hoelder_depth = cfg.usize("diagnostics.hoelder_depth")?;
    Ok(d)
}

pub fn run_diagnose(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let (u, p, report) = source_field(cfg, out)?;
    let dcfg = diagnostics_config(cfg, u.mesh())?;
    let rep: DiagnosticsReport = run_diagnostics(&u, p, &dcfg)?;
    out.json("diagnostics.json", &rep)?;
    out.csv("balls.csv", |w| write_records_csv(w, &rep.balls))?;
    let s = &rep.singular_set;
    let rows: Vec<SingularRow> = rep
        .family_centers
        .iter()
        .enumerate()
        .map(|(i, x)| SingularRow {
            center: i,
            x1: x[0],
            x2: x[1],
            x3: x.get(2).copied(),
            center_sup: s.center_sup[i],
            flagged: s.flagged.binary_search(&i).is_ok(),
        })
        .collect();
    out.csv("singular_set.csv", |w| write_records_csv(w, &rows))?;
    let sups: Vec<f64> = s.flagged.iter().map(|&i| s.center_sup[i]).collect();
    out.vtk("singular_set.vtk", |w| write_point_set_vtk(w, "freeharm singular set", &s.flagged_points, Some(("normalized_energy", &sups))))?;
    out.manifest(cfg, "diagnose", &[u.mesh().h()])?;
    match report {
        Some(r) if !r.converged => Err(not_converged(&r)),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct ReflectReport {
    p: f64,
    half_nodes: usize,
    doubled_nodes: usize,
    doubled_elements: usize,
    gradient_identity_deviation: f64,
    max_residual_ratio: f64,
    /// Largest ratio among nodes at height at least `2h` from the plane.
    max_residual_ratio_away: f64,
}

pub fn run_reflect(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let (u, p, report) = source_field(cfg, out)?;
    let refl = reflect_field(&u, p)?;
    let ratios = reflected_residual_bound(&refl, p);
    let h = u.mesh().h();
    let dm = refl.doubled.mesh();
    let rep = ReflectReport {
        p,
        half_nodes: refl.doubled.num_half_nodes(),
        doubled_nodes: dm.num_nodes(),
        doubled_elements: dm.num_elements(),
        gradient_identity_deviation: gradient_identity_check(&refl, p),
        max_residual_ratio: ratios.iter().map(|r| r.ratio).fold(0.0, f64::max),
        max_residual_ratio_away: ratios.iter().filter(|r| r.height.abs() >= 2.0 * h).map(|r| r.ratio).fold(0.0, f64::max),
    };
    out.json("reflect_report.json", &rep)?;
    out.csv("residual_ratios.csv", |w| write_records_csv(w, &ratios))?;
    let lower: Vec<f64> = (0..dm.num_elements()).map(|e| if refl.doubled.is_lower_element(e) { 1.0 } else { 0.0 }).collect();
    let vtk = VtkWriter::new(dm, "freeharm reflected field")
        .point_field("v", &refl.v)?
        .point_field("u_tilde", &refl.u_tilde)?
        .point_array("m", 1, refl.m.clone())?
        .cell_array("lower", 1, lower)?;
    out.vtk("doubled.vtk", |w| vtk.write(w))?;
    out.manifest(cfg, "reflect", &[h])?;
    match report {
        Some(r) if !r.converged => Err(not_converged(&r)),
        _ => Ok(()),
    }
}

#[derive(Serialize)]
struct FixtureReport {
    fixture: FixtureKind,
    p: f64,
    h: f64,
    nodes: usize,
    mesh_energy: f64,
    oracle: Option<f64>,
    relative_error: Option<f64>,
    oracle_note: Option<String>,
    singular_nodes: Vec<usize>,
}

pub fn run_fixtures(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let d = domain(cfg)?;
    let h = cfg.f64("mesh.h")?;
    let mesh = Arc::new(raw_mesh(cfg, &d, h)?);
    let kind = fixture_kind(cfg, d.dim())?;
    let p = fixture_p(cfg)?;
    let fx = make_fixture(&kind, mesh.clone())?;
    let mesh_energy = p_energy(&fx.field, p).total;
    let (oracle, oracle_note) = match fixture_energy_oracle(&kind, p, &domain_region(&d)) {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let rep = FixtureReport {
        relative_error: oracle.map(|o| if o == 0.0 { mesh_energy.abs() } else { (mesh_energy - o).abs() / o.abs() }),
        fixture: kind,
        p,
        h,
        nodes: mesh.num_nodes(),
        mesh_energy,
        oracle,
        oracle_note,
        singular_nodes: fx.singular_nodes,
    };
    out.json("fixture_report.json", &rep)?;
    field_files(out, "fixture", "u", &fx.field)?;
    out.manifest(cfg, "fixtures", &[h])
}

#[derive(Serialize)]
struct SweepRow {
    h: f64,
    nodes: usize,
    energy: f64,
    reference: Option<f64>,
    /// Against the oracle (fixture mode) or the next coarser level (solve mode).
    error: Option<f64>,
    order: Option<f64>,
    converged: Option<bool>,
}

#[derive(Serialize)]
struct SweepReport {
    mode: String,
    p: f64,
    fixture: Option<FixtureKind>,
    rows: Vec<SweepRow>,
    observed_order: Option<f64>,
}

pub fn run_sweep(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let hs = cfg.floats("sweep.h")?;
    if hs.len() < 2 || hs.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(CliError::Config("sweep.h needs at least two decreasing values".into()));
    }
    let mode = cfg.str("sweep.mode")?.to_string();
    let mut rows: Vec<SweepRow> = Vec::new();
    let mut failed: Option<SolveReport> = None;
    let (p, fixture) = if mode == "fixture" {
        let d = domain(cfg)?;
        let kind = fixture_kind(cfg, d.dim())?;
        let p = fixture_p(cfg)?;
        let oracle = fixture_energy_oracle(&kind, p, &domain_region(&d))?;
        for &h in &hs {
            let mesh = Arc::new(raw_mesh(cfg, &d, h)?);
            let energy = p_energy(&make_fixture(&kind, mesh.clone())?.field, p).total;
            let error = (energy - oracle).abs();
            rows.push(SweepRow { h, nodes: mesh.num_nodes(), energy, reference: Some(oracle), error: Some(error), order: None, converged: None });
        }
        (p, Some(kind))
    } else {
        let config = solver_config(cfg)?;
        let mut p = 0.0;
        for &h in &hs {
            let (spec, mesh) = problem(cfg, h)?;
            p = spec.p;
            let init = init_field(cfg, &spec, mesh.clone())?;
            let (_, rep) = solve(&spec, &init, &config)?;
            let prev = rows.last().map(|r| r.energy);
            rows.push(SweepRow {
                h,
                nodes: mesh.num_nodes(),
                energy: rep.final_p_energy,
                reference: prev,
                error: prev.map(|e| (rep.final_p_energy - e).abs()),
                order: None,
                converged: Some(rep.converged),
            });
            if !rep.converged && failed.is_none() {
                failed = Some(rep);
            }
        }
        (p, None)
    };
    for k in 1..rows.len() {
        if let (Some(a), Some(b)) = (rows[k - 1].error, rows[k].error) {
            if a > 0.0 && b > 0.0 {
                rows[k].order = Some((a / b).ln() / (rows[k - 1].h / rows[k].h).ln());
            }
        }
    }
    let observed_order = rows.last().and_then(|r| r.order);
    let rep = SweepReport { mode, p, fixture, rows, observed_order };
    out.json("sweep.json", &rep)?;
    out.csv("sweep.csv", |w| write_records_csv(w, &rep.rows))?;
    out.manifest(cfg, "sweep", &hs)?;
    match failed {
        Some(r) => Err(not_converged(&r)),
        None => Ok(()),
    }
}
