//! Minimization of the ε-regularized p-energy under Dirichlet data and the
//! sphere constraint on the free boundary.
//!
//! The iteration is a projected descent: the residual is projected onto
//! admissible variations (zero on Dirichlet nodes, tangent to the sphere at
//! free nodes), optionally preconditioned by the second variation of the
//! regularized energy (a damped Newton step), and the step is chosen by
//! Armijo backtracking on the energy of the retracted iterate. ε is decreased
//! geometrically between stages.

mod precond;

use std::sync::Arc;

use serde::Serialize;

use crate::energy::{first_variation, p_energy, regularized_energy_total};
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::mesh::{Mesh, NodeClass};
use crate::problem::ProblemSpec;
use precond::{project, projected_cg, SecondVariation};

/// Lower end of the ε schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EpsFloor {
    Absolute(f64),
    /// Multiple of the initial mean of `|∇u|²` over the domain.
    RelativeToInitialGradient(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpsSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: EpsFloor,
}

impl Default for EpsSchedule {
    fn default() -> Self {
        EpsSchedule { initial: 1e-2, decay: 0.5, floor: EpsFloor::RelativeToInitialGradient(1e-8) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DescentDirection {
    /// Negative projected residual.
    Residual,
    /// Negative projected residual mapped through the inverse second
    /// variation, solved by CG (a damped Newton direction).
    Preconditioned { cg_tol: f64, cg_max_iters: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepRule {
    pub initial: f64,
    pub backtrack: f64,
    pub armijo_c: f64,
    pub max_backtracks: usize,
    pub direction: DescentDirection,
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule {
            initial: 1.0,
            backtrack: 0.5,
            armijo_c: 1e-4,
            max_backtracks: 40,
            direction: DescentDirection::Preconditioned { cg_tol: 1e-6, cg_max_iters: 2000 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig {
    pub eps: EpsSchedule,
    pub step: StepRule,
    /// Stopping threshold on the Euclidean norm of the projected residual.
    pub grad_tol: f64,
    /// Total accepted steps over all ε stages.
    pub max_iters: usize,
    /// Intermediate stages stop at `stage_tol_factor · grad_tol`.
    pub stage_tol_factor: f64,
    pub stage_max_iters: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eps: EpsSchedule::default(),
            step: StepRule::default(),
            grad_tol: 1e-6,
            max_iters: 10_000,
            stage_tol_factor: 100.0,
            stage_max_iters: 50,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        let e = &self.eps;
        if !(e.initial > 0.0) {
            return bad("eps initial must be > 0");
        }
        if !(e.decay > 0.0 && e.decay < 1.0) {
            return bad("eps decay must lie in (0, 1)");
        }
        match e.floor {
            EpsFloor::Absolute(f) if !(f >= 0.0 && f < e.initial) => {
                return bad("eps floor must satisfy 0 <= floor < initial")
            }
            EpsFloor::RelativeToInitialGradient(f) if !(f >= 0.0) => {
                return bad("relative eps floor must be >= 0")
            }
            _ => {}
        }
        let s = &self.step;
        if !(s.initial > 0.0) || !(s.backtrack > 0.0 && s.backtrack < 1.0) {
            return bad("step initial must be > 0 and backtrack factor in (0, 1)");
        }
        if !(s.armijo_c > 0.0 && s.armijo_c < 1.0) {
            return bad("sufficient-decrease constant must lie in (0, 1)");
        }
        if !(self.grad_tol > 0.0) || !(self.stage_tol_factor >= 1.0) {
            return bad("grad_tol must be > 0 and stage_tol_factor >= 1");
        }
        Ok(())
    }
}

/// One row of the energy trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub eps: f64,
    pub energy: f64,
    pub residual_norm: f64,
    /// Accepted step length; 0 for stage boundaries and the initial record.
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub energy_trace: Vec<TraceRecord>,
    pub final_residual_norm: f64,
    pub eps_final: f64,
    pub converged: bool,
    /// Converged through the stagnation rule (line search exhausted with the
    /// residual below `10 · grad_tol`).
    pub stagnated: bool,
    /// Unregularized `∫|∇u|^p` of the returned field.
    pub final_p_energy: f64,
}

/// Projected residual: Dirichlet rows zeroed, free-sphere rows projected onto
/// the tangent space of the sphere at the current value.
pub fn projected_residual(field: &VectorField, p: f64, eps: f64) -> VectorField {
    let r = first_variation(field, p, eps);
    let mut vals = r.into_values();
    project(field, &mut vals, true);
    field.with_values(vals).expect("same layout")
}

/// Replaces every free-sphere nodal value by `u/|u|`.
pub fn retract_free_boundary(field: &VectorField) -> Result<VectorField> {
    let mut out = field.clone();
    retract_in_place(&mut out)?;
    Ok(out)
}

fn retract_in_place(field: &mut VectorField) -> Result<()> {
    let mesh = field.mesh().clone();
    for (v, class) in mesh.node_class().iter().enumerate() {
        if *class == NodeClass::FreeSphere {
            let val = field.value_mut(v);
            let n = crate::vecops::norm(val);
            if !(n > 0.0) {
                return Err(Error::ZeroVector);
            }
            val.iter_mut().for_each(|x| *x /= n);
        }
    }
    Ok(())
}

/// Nodal truncation: values with `|u| > M` become `M u/|u|`.
pub fn truncate_to_ball(field: &VectorField, m: f64) -> Result<VectorField> {
    if !(m > 0.0) {
        return Err(Error::InvalidParameter(format!("truncation radius {m} must be > 0")));
    }
    let nc = field.components();
    let mut vals = field.values().to_vec();
    for chunk in vals.chunks_mut(nc) {
        let n = crate::vecops::norm(chunk);
        if n > m {
            chunk.iter_mut().for_each(|x| *x *= m / n);
        }
    }
    field.with_values(vals)
}

struct StepOutcome {
    field: VectorField,
    step: f64,
    energy: f64,
}

/// One backtracking step along the (preconditioned) negative projected
/// residual, followed by [`retract_free_boundary`].
///
/// Returns the new field and the accepted step length, which is `0` when the
/// projected residual already vanishes.
pub fn descent_step(
    field: &VectorField,
    p: f64,
    eps: f64,
    rule: &StepRule,
) -> Result<(VectorField, f64)> {
    let residual = projected_residual(field, p, eps);
    let energy = regularized_energy_total(field, p, eps);
    let out = step_from(field, p, eps, rule, rule.initial, energy, residual.values())?;
    Ok((out.field, out.step))
}

fn has_dirichlet(mesh: &Mesh) -> bool {
    mesh.node_class().contains(&NodeClass::Dirichlet)
}

fn step_from(
    field: &VectorField,
    p: f64,
    eps: f64,
    rule: &StepRule,
    initial_step: f64,
    energy: f64,
    residual: &[f64],
) -> Result<StepOutcome> {
    if residual.iter().all(|&x| x == 0.0) {
        return Ok(StepOutcome { field: field.clone(), step: 0.0, energy });
    }
    let direction: Vec<f64> = match rule.direction {
        DescentDirection::Residual => residual.iter().map(|x| -x).collect(),
        DescentDirection::Preconditioned { cg_tol, cg_max_iters } => {
            let shift = if has_dirichlet(field.mesh()) { 0.0 } else { 1e-3 };
            let k = SecondVariation::assemble(field, p, eps, shift);
            projected_cg(&k, field, residual, true, cg_tol, cg_max_iters)
                .into_iter()
                .map(|x| -x)
                .collect()
        }
    };
    // d/dt E(u + t d) at t = 0; the energy gradient is p times the residual
    let slope = p * crate::vecops::dot(residual, &direction);
    if !(slope < 0.0) {
        return Err(Error::LineSearchExhausted(0));
    }
    let classes = field.mesh().node_class();
    let nc = field.components();
    let mut t = initial_step;
    for _ in 0..=rule.max_backtracks {
        let mut trial = field.clone();
        for (v, class) in classes.iter().enumerate() {
            if *class == NodeClass::Dirichlet {
                continue;
            }
            let val = trial.value_mut(v);
            for c in 0..nc {
                val[c] += t * direction[v * nc + c];
            }
        }
        if retract_in_place(&mut trial).is_ok() {
            let e_trial = regularized_energy_total(&trial, p, eps);
            if e_trial.is_finite() && e_trial <= energy + rule.armijo_c * t * slope && e_trial < energy {
                return Ok(StepOutcome { field: trial, step: t, energy: e_trial });
            }
        }
        t *= rule.backtrack;
    }
    Err(Error::LineSearchExhausted(rule.max_backtracks))
}

/// Checks that `init` fits `spec`: same domain, Dirichlet values equal to the
/// data exactly, unit norm at free-sphere nodes.
pub fn check_feasible(spec: &ProblemSpec, init: &VectorField) -> Result<()> {
    let mesh = init.mesh();
    if mesh.domain() != &spec.domain {
        return Err(Error::InfeasibleInit("field lives on a mesh of another domain".into()));
    }
    if init.components() != spec.components {
        return Err(Error::InfeasibleInit(format!(
            "field has {} components, problem has {}",
            init.components(),
            spec.components
        )));
    }
    for (v, class) in mesh.node_class().iter().enumerate() {
        match class {
            NodeClass::Dirichlet => {
                let want = spec.data.eval(v, mesh.vertex(v), spec.components);
                if want.as_slice() != init.value(v) {
                    return Err(Error::InfeasibleInit(format!("Dirichlet value differs at node {v}")));
                }
            }
            NodeClass::FreeSphere => {
                let n = crate::vecops::norm(init.value(v));
                if (n - 1.0).abs() > 1e-12 {
                    return Err(Error::InfeasibleInit(format!("|u| = {n} at free node {v}")));
                }
            }
            NodeClass::Interior => {}
        }
    }
    Ok(())
}

/// Feasible starting field: the p = 2 extension of the Dirichlet data with
/// free and natural nodes left unconstrained, then retracted onto the sphere
/// at free nodes.
pub fn initial_guess(mesh: Arc<Mesh>, spec: &ProblemSpec) -> Result<VectorField> {
    spec.validate()?;
    let nc = spec.components;
    let dirichlet = mesh.nodes_of_class(NodeClass::Dirichlet);
    if dirichlet.is_empty() {
        return Err(Error::InfeasibleInit(
            "no Dirichlet nodes to extend; an explicit initial field is required".into(),
        ));
    }
    let mut base = vec![0.0; mesh.num_nodes() * nc];
    for &v in &dirichlet {
        let val = spec.data.eval(v, mesh.vertex(v), nc);
        base[v * nc..(v + 1) * nc].copy_from_slice(&val);
    }
    let u0 = VectorField::new(mesh.clone(), nc, base)?;
    let mut rhs = first_variation(&u0, 2.0, 0.0).into_values();
    project(&u0, &mut rhs, false);
    let k = SecondVariation::assemble(&u0, 2.0, 0.0, 0.0);
    let x = projected_cg(&k, &u0, &rhs, false, 1e-13, 20 * mesh.num_nodes() + 100);
    let mut vals = u0.values().to_vec();
    for (v, class) in mesh.node_class().iter().enumerate() {
        if *class != NodeClass::Dirichlet {
            for c in 0..nc {
                vals[v * nc + c] -= x[v * nc + c];
            }
        }
    }
    let mut u = u0.with_values(vals)?;
    retract_in_place(&mut u).map_err(|_| {
        Error::InfeasibleInit("extension vanishes at a free-boundary node".into())
    })?;
    Ok(u)
}

/// Minimizes the regularized p-energy from `init` with ε-continuation.
///
/// Returns the final iterate even when the iteration budget runs out; the
/// report then has `converged == false`.
pub fn solve(
    spec: &ProblemSpec,
    init: &VectorField,
    config: &SolverConfig,
) -> Result<(VectorField, SolveReport)> {
    spec.validate()?;
    config.validate()?;
    check_feasible(spec, init)?;
    let p = spec.p;
    let mesh = init.mesh().clone();
    let mean_g2 = p_energy(init, 2.0).total / mesh.total_volume();
    let eps_min = match config.eps.floor {
        EpsFloor::Absolute(f) => f,
        EpsFloor::RelativeToInitialGradient(f) => f * mean_g2,
    };
    // with p = 2 the weight is identically one and ε only shifts the energy
    let mut eps = if p == 2.0 { 0.0 } else { config.eps.initial.max(eps_min) };
    let eps_floor = if p == 2.0 { 0.0 } else { eps_min };

    let mut u = init.clone();
    let mut energy = regularized_energy_total(&u, p, eps);
    let mut residual = projected_residual(&u, p, eps).into_values();
    let mut rnorm = crate::vecops::norm(&residual);
    let mut trace = vec![TraceRecord { iter: 0, eps, energy, residual_norm: rnorm, step: 0.0 }];
    let mut iterations = 0;
    let mut converged = false;
    let mut stagnated = false;
    let stage_tol = config.stage_tol_factor * config.grad_tol;

    'stages: loop {
        let final_stage = eps <= eps_floor;
        let mut stage_iters = 0;
        let mut last_step = config.step.initial;
        loop {
            if rnorm == 0.0 || (final_stage && rnorm <= config.grad_tol) {
                converged = true;
                break 'stages;
            }
            if !final_stage && (rnorm <= stage_tol || stage_iters >= config.stage_max_iters) {
                break;
            }
            if iterations >= config.max_iters {
                break 'stages;
            }
            let trial = (2.0 * last_step).min(config.step.initial);
            match step_from(&u, p, eps, &config.step, trial, energy, &residual) {
                Ok(out) => {
                    u = out.field;
                    energy = out.energy;
                    last_step = out.step;
                    iterations += 1;
                    stage_iters += 1;
                    residual = projected_residual(&u, p, eps).into_values();
                    rnorm = crate::vecops::norm(&residual);
                    trace.push(TraceRecord { iter: iterations, eps, energy, residual_norm: rnorm, step: out.step });
                }
                Err(Error::LineSearchExhausted(_)) => {
                    if final_stage {
                        if rnorm < 10.0 * config.grad_tol {
                            converged = true;
                            stagnated = true;
                        }
                        break 'stages;
                    }
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        eps *= config.eps.decay;
        if eps <= eps_floor {
            eps = eps_floor;
        }
        energy = regularized_energy_total(&u, p, eps);
        residual = projected_residual(&u, p, eps).into_values();
        rnorm = crate::vecops::norm(&residual);
        trace.push(TraceRecord { iter: iterations, eps, energy, residual_norm: rnorm, step: 0.0 });
    }
    let final_p_energy = p_energy(&u, p).total;
    let report = SolveReport {
        iterations,
        energy_trace: trace,
        final_residual_norm: rnorm,
        eps_final: eps,
        converged,
        stagnated,
        final_p_energy,
    };
    Ok((u, report))
}
