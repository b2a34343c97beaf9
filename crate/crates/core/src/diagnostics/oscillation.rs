//! Mean oscillation, BMO, Hölder fits, distance to the sphere and the
//! maximum principle.

use serde::Serialize;

use super::{sphere_distance, BallFamily};
use crate::error::{Error, Result};
use crate::field::{mean_value, VectorField};
use crate::vecops::norm;

/// `|B|^{-1} ∫_B |u − (u)_B|` over `B(x0, r) ∩ D`, `None` for an empty ball.
/// Vector fields use the Euclidean norm of the deviation.
pub fn mean_oscillation(field: &VectorField, x0: &[f64], r: f64) -> Option<f64> {
    let mesh = field.mesh();
    let elems = mesh.ball_elements(x0, r);
    let mean = mean_value(field, &elems).ok()?;
    let nc = field.components();
    let mut ub = vec![0.0; nc];
    let (mut acc, mut vol) = (0.0, 0.0);
    for &e in elems.iter() {
        field.barycenter_value(e, &mut ub);
        let w = mesh.volume(e);
        let dev: f64 = ub.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        acc += w * dev;
        vol += w;
    }
    Some(acc / vol)
}

/// Largest mean oscillation over the family.
pub fn bmo_seminorm(field: &VectorField, family: &BallFamily) -> f64 {
    let mut best: f64 = 0.0;
    for c in family.centers() {
        for &r in family.radii() {
            if let Some(o) = mean_oscillation(field, c, r) {
                best = best.max(o);
            }
        }
    }
    best
}

/// Least-squares fit `log osc ≈ α log r + c` over `r = R·2^{-k}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoelderFit {
    /// Slope clamped to `[0, 1.5]`; `None` if the oscillation vanishes.
    pub alpha: Option<f64>,
    /// Unclamped slope.
    pub raw_slope: Option<f64>,
    /// Root-mean-square residual of the fit in log space.
    pub fit_residual: f64,
    pub radii: Vec<f64>,
    pub oscillations: Vec<f64>,
}

pub fn hoelder_exponent(field: &VectorField, x0: &[f64], r: f64, depth: usize) -> Result<HoelderFit> {
    if depth < 3 {
        return Err(Error::InvalidParameter(format!("dyadic depth {depth} must be >= 3")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("R = {r} must be > 0")));
    }
    let radii = BallFamily::dyadic_radii(r, depth);
    let oscillations: Vec<f64> = radii.iter().map(|&s| mean_oscillation(field, x0, s).unwrap_or(0.0)).collect();
    let pts: Vec<(f64, f64)> = radii
        .iter()
        .zip(&oscillations)
        .filter(|(_, &o)| o > 0.0)
        .map(|(&s, &o)| (s.ln(), o.ln()))
        .collect();
    if pts.len() < 2 {
        return Ok(HoelderFit { alpha: None, raw_slope: None, fit_residual: 0.0, radii, oscillations });
    }
    let m = pts.len() as f64;
    let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / m, pts.iter().map(|p| p.1).sum::<f64>() / m);
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let fit_residual = (pts.iter().map(|p| (p.1 - slope * p.0 - icpt).powi(2)).sum::<f64>() / m).sqrt();
    Ok(HoelderFit {
        alpha: Some(slope.clamp(0.0, 1.5)),
        raw_slope: Some(slope),
        fit_residual,
        radii,
        oscillations,
    })
}

/// `max | |u| − 1 |` over the given nodes.
pub fn dist_to_sphere_sup(field: &VectorField, nodes: &[usize]) -> Result<f64> {
    let n = field.mesh().num_nodes();
    if let Some(&bad) = nodes.iter().find(|&&v| v >= n) {
        return Err(Error::IndexOutOfRange { index: bad, len: n });
    }
    sphere_distance(field, nodes.iter().copied()).ok_or(Error::EmptySubset)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaxPrinciple {
    pub interior_sup: f64,
    pub boundary_sup: f64,
    pub pass: bool,
}

/// Compares `max |u|` over interior nodes with the maximum over all
/// boundary nodes; passes within `1e-8`.
pub fn max_principle_check(field: &VectorField) -> MaxPrinciple {
    let mesh = field.mesh();
    let (mut interior_sup, mut boundary_sup): (f64, f64) = (0.0, 0.0);
    for v in 0..mesh.num_nodes() {
        let a = norm(field.value(v));
        if mesh.is_boundary_node(v) {
            boundary_sup = boundary_sup.max(a);
        } else {
            interior_sup = interior_sup.max(a);
        }
    }
    MaxPrinciple { interior_sup, boundary_sup, pass: interior_sup <= boundary_sup + 1e-8 }
}
