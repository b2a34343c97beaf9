//! Regularity diagnostics: normalized energies over ball families, the
//! monotonicity identity, decay and growth ratios, oscillation estimates,
//! singular-set detection and the maximum principle.
//!
//! Balls are discretized by barycenter membership (see
//! [`Mesh::ball_elements`](crate::mesh::Mesh::ball_elements)), so every
//! integral below is over `B ∩ D`.

mod oscillation;
mod report;
mod singular;

pub use oscillation::{
    bmo_seminorm, dist_to_sphere_sup, hoelder_exponent, max_principle_check, mean_oscillation, HoelderFit,
    MaxPrinciple,
};
pub use report::{run_diagnostics, BallRow, DiagnosticsConfig, DiagnosticsReport};
pub use singular::{singular_set, CoveringCount, SingularSetReport};

use serde::Serialize;

use crate::energy::p_energy_on;
use crate::error::{Error, Result};
use crate::field::{mean_value, VectorField};
use crate::mesh::{Mesh, NodeClass};
use crate::vecops::{dist, norm};

/// Centers and strictly decreasing radii; every center is paired with every
/// radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallFamily {
    centers: Vec<Vec<f64>>,
    radii: Vec<f64>,
}

impl BallFamily {
    pub fn new(centers: Vec<Vec<f64>>, radii: Vec<f64>) -> Result<Self> {
        if centers.is_empty() || radii.is_empty() {
            return Err(Error::EmptySubset);
        }
        if radii.iter().any(|r| !(*r > 0.0)) || radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter("radii must be positive and strictly decreasing".into()));
        }
        let n = centers[0].len();
        if centers.iter().any(|c| c.len() != n) {
            return Err(Error::InvalidParameter("centers of mixed dimension".into()));
        }
        Ok(BallFamily { centers, radii })
    }

    /// Radii `r0 · 2^{-k}` for `k = 0..=depth`.
    pub fn dyadic_radii(r0: f64, depth: usize) -> Vec<f64> {
        (0..=depth).map(|k| r0 * 0.5f64.powi(k as i32)).collect()
    }

    /// All free-boundary nodes plus a lattice of spacing `r0` over the mesh
    /// bounding box, with radii `r0 · 2^{-k}`, `k ≤ depth`.
    pub fn default_for(mesh: &Mesh, r0: f64, depth: usize) -> Result<Self> {
        let mut centers: Vec<Vec<f64>> = mesh
            .nodes_of_class(NodeClass::FreeSphere)
            .into_iter()
            .map(|v| mesh.vertex(v).to_vec())
            .collect();
        let (lo, hi) = mesh.domain().bounding_box();
        let n = mesh.dim();
        let counts: Vec<usize> = (0..n).map(|d| ((hi[d] - lo[d]) / r0).floor() as usize).collect();
        let mut idx = vec![1usize; n];
        if counts.iter().all(|&c| c >= 2) {
            loop {
                let x: Vec<f64> = (0..n).map(|d| lo[d] + idx[d] as f64 * r0).collect();
                if mesh.domain().contains_ball(&x, 0.0) {
                    centers.push(x);
                }
                let mut d = 0;
                loop {
                    idx[d] += 1;
                    if idx[d] < counts[d] {
                        break;
                    }
                    idx[d] = 1;
                    d += 1;
                    if d == n {
                        break;
                    }
                }
                if d == n {
                    break;
                }
            }
        }
        BallFamily::new(centers, Self::dyadic_radii(r0, depth))
    }

    pub fn centers(&self) -> &[Vec<f64>] {
        &self.centers
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn len(&self) -> usize {
        self.centers.len() * self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `r^{p−n} ∫_{B(x0,r)∩D} |∇u|^p`.
pub fn normalized_energy(field: &VectorField, p: f64, x0: &[f64], r: f64) -> f64 {
    let mesh = field.mesh();
    let elems = mesh.ball_elements(x0, r);
    r.powf(p - mesh.dim() as f64) * p_energy_on(field, p, &elems).total
}

/// Maximum of [`normalized_energy`] over the family.
pub fn sup_normalized_energy(field: &VectorField, p: f64, family: &BallFamily) -> f64 {
    let mut best: f64 = 0.0;
    for c in family.centers() {
        for &r in family.radii() {
            best = best.max(normalized_energy(field, p, c, r));
        }
    }
    best
}

/// Both sides of the monotonicity identity between radii `rho < r`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub x0: Vec<f64>,
    pub rho: f64,
    pub r: f64,
    /// Normalized energy at `r`, for scale.
    pub normalized_energy: f64,
    /// `Θ(r) − Θ(ρ)`.
    pub lhs: f64,
    /// `p ∫_{ρ<|x−x0|<r} |x−x0|^{p−n} |∇u|^{p−2} |∂_ν u|²`, `ν` radial.
    pub rhs: f64,
    pub discrepancy: f64,
}

pub fn monotonicity_check(
    field: &VectorField,
    p: f64,
    x0: &[f64],
    rho: f64,
    r: f64,
) -> Result<MonotonicityReport> {
    if !(rho > 0.0 && rho < r) {
        return Err(Error::InvalidParameter(format!("need 0 < rho < r, got rho = {rho}, r = {r}")));
    }
    let mesh = field.mesh();
    let (n, nc) = (mesh.dim(), field.components());
    if x0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: x0.len() });
    }
    let outer = mesh.ball_elements(x0, r);
    let inner = mesh.ball_elements(x0, rho);
    let e_outer = r.powf(p - n as f64) * p_energy_on(field, p, &outer).total;
    let e_inner = rho.powf(p - n as f64) * p_energy_on(field, p, &inner).total;
    let mut g = vec![0.0; n * nc];
    let mut rhs = 0.0;
    for e in outer.difference(&inner).iter().copied() {
        let b = mesh.barycenter(e);
        let d = dist(&b[..n], x0);
        if d == 0.0 {
            continue;
        }
        field.element_gradient(e, &mut g);
        let g2: f64 = g.iter().map(|x| x * x).sum();
        let mut gnu2 = 0.0;
        for c in 0..nc {
            let s: f64 = (0..n).map(|k| g[c * n + k] * (b[k] - x0[k]) / d).sum();
            gnu2 += s * s;
        }
        rhs += mesh.volume(e) * d.powf(p - n as f64) * g2.powf(0.5 * (p - 2.0)) * gnu2;
    }
    rhs *= p;
    let lhs = e_outer - e_inner;
    Ok(MonotonicityReport {
        x0: x0.to_vec(),
        rho,
        r,
        normalized_energy: e_outer,
        lhs,
        rhs,
        discrepancy: (lhs - rhs).abs(),
    })
}

/// Number of dyadic radii used by [`decay_ratio`] below each scale.
pub const DECAY_DEPTH: usize = 5;

/// Sup of the normalized energy over concentric balls `B(x0, θR·2^{-k})`
/// divided by the same over `B(x0, R·2^{-k})`, `k ≤ DECAY_DEPTH`. `None`
/// when the denominator vanishes.
pub fn decay_ratio(field: &VectorField, p: f64, x0: &[f64], r: f64, theta: f64) -> Result<Option<f64>> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::InvalidParameter(format!("theta = {theta} must lie in (0, 1)")));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("R = {r} must be > 0")));
    }
    let sup = |scale: f64| {
        BallFamily::dyadic_radii(scale, DECAY_DEPTH)
            .into_iter()
            .map(|s| normalized_energy(field, p, x0, s))
            .fold(0.0, f64::max)
    };
    let den = sup(r);
    Ok(if den > 0.0 { Some(sup(theta * r) / den) } else { None })
}

/// Terms of the three growth inequalities on `B(y0, r)` inside `B(y0, 4r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthProbe {
    pub y0: Vec<f64>,
    pub r: f64,
    pub lambda: f64,
    pub mu: f64,
    /// `∫_{B(y0,r)∩D} |∇u|^p`.
    pub lhs: f64,
    /// `∫_{B(y0,4r)∩D} |∇u|^p`.
    pub energy_outer: f64,
    /// Energy on the annulus `B(y0,4r) \ B(y0,r)`.
    pub energy_annulus: f64,
    /// `∫_{B(y0,4r)∩D} |u − (u)_{B(y0,4r)}|^p`.
    pub oscillation: f64,
    /// `∫_{B(y0,4r)∩D} ||u|² − 1|^p`.
    pub sphere_defect: f64,
    /// `(λ + μ^{p−1}) E_outer + μ^{−1} E_annulus`.
    pub rhs_energy: f64,
    /// `λ E_outer + λ^{1−p} r^{−p} osc`.
    pub rhs_interior: f64,
    /// `rhs_interior + λ^{1−p} r^{−p} sphere_defect`.
    pub rhs_boundary: f64,
    pub constant_energy: Option<f64>,
    pub constant_interior: Option<f64>,
    pub constant_boundary: Option<f64>,
    /// Whether `B(y0, 2r)` leaves the domain, i.e. which of the last two
    /// inequalities is the relevant one.
    pub near_boundary: bool,
}

pub fn growth_probe(
    field: &VectorField,
    p: f64,
    y0: &[f64],
    r: f64,
    lambda: f64,
    mu: f64,
) -> Result<GrowthProbe> {
    if !(lambda > 0.0 && mu > 0.0 && r > 0.0) {
        return Err(Error::InvalidParameter("growth probe needs r, lambda, mu > 0".into()));
    }
    let mesh = field.mesh();
    let (n, nc) = (mesh.dim(), field.components());
    if y0.len() != n {
        return Err(Error::LengthMismatch { expected: n, got: y0.len() });
    }
    let (lo, hi) = mesh.domain().bounding_box();
    // B(y0, 4r) may stick out of D; all integrals are over B ∩ D
    if (0..n).any(|d| y0[d] < lo[d] || y0[d] > hi[d]) {
        return Err(Error::InvalidParameter("probe center outside the mesh bounding box".into()));
    }
    let inner = mesh.ball_elements(y0, r);
    if inner.is_empty() {
        return Err(Error::EmptySubset);
    }
    let outer = mesh.ball_elements(y0, 4.0 * r);
    let lhs = p_energy_on(field, p, &inner).total;
    let energy_outer = p_energy_on(field, p, &outer).total;
    let energy_annulus = p_energy_on(field, p, &outer.difference(&inner)).total;
    let mean = mean_value(field, &outer)?;
    let mut ub = vec![0.0; nc];
    let (mut oscillation, mut sphere_defect) = (0.0, 0.0);
    for &e in outer.iter() {
        field.barycenter_value(e, &mut ub);
        let vol = mesh.volume(e);
        let dev: f64 = ub.iter().zip(&mean).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        oscillation += vol * dev.powf(p);
        let n2: f64 = ub.iter().map(|a| a * a).sum();
        sphere_defect += vol * (n2 - 1.0).abs().powf(p);
    }
    let lower = lambda.powf(1.0 - p) * r.powf(-p);
    let rhs_energy = (lambda + mu.powf(p - 1.0)) * energy_outer + energy_annulus / mu;
    let rhs_interior = lambda * energy_outer + lower * oscillation;
    let rhs_boundary = rhs_interior + lower * sphere_defect;
    let ratio = |rhs: f64| if rhs > 0.0 { Some(lhs / rhs) } else { None };
    Ok(GrowthProbe {
        y0: y0.to_vec(),
        r,
        lambda,
        mu,
        lhs,
        energy_outer,
        energy_annulus,
        oscillation,
        sphere_defect,
        rhs_energy,
        rhs_interior,
        rhs_boundary,
        constant_energy: ratio(rhs_energy),
        constant_interior: ratio(rhs_interior),
        constant_boundary: ratio(rhs_boundary),
        near_boundary: !mesh.domain().contains_ball(y0, 2.0 * r),
    })
}

/// Helper shared by the oscillation diagnostics: `max | |u| − 1 |`.
fn sphere_distance(field: &VectorField, nodes: impl Iterator<Item = usize>) -> Option<f64> {
    nodes.map(|v| (norm(field.value(v)) - 1.0).abs()).reduce(f64::max)
}

#[cfg(test)]
mod tests;
