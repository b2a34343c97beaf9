//! All diagnostics of one field gathered in a serializable report.

use serde::Serialize;

use super::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsConfig {
    /// Base point for the single-ball diagnostics.
    pub x0: Vec<f64>,
    /// Outer radius `R`.
    pub radius: f64,
    /// Family radii are `R·2^{-k}`, `k ≤ depth`.
    pub depth: usize,
    pub eps_threshold: f64,
    pub theta: f64,
    pub lambda: f64,
    pub mu: f64,
    pub hoelder_depth: usize,
}

impl DiagnosticsConfig {
    /// Base point at the center of the flat bottom (or of the bounding box)
    /// and `R` a quarter of the smallest extent.
    pub fn for_mesh(mesh: &Mesh) -> Self {
        let (lo, hi) = mesh.domain().bounding_box();
        let n = mesh.dim();
        let mut x0: Vec<f64> = (0..n).map(|d| 0.5 * (lo[d] + hi[d])).collect();
        if mesh.domain().has_flat_bottom() {
            x0[n - 1] = 0.0;
        }
        let ext = (0..n).map(|d| hi[d] - lo[d]).fold(f64::INFINITY, f64::min);
        DiagnosticsConfig {
            x0,
            radius: 0.25 * ext,
            depth: 5,
            eps_threshold: 0.05,
            theta: 0.5,
            lambda: 1.0,
            mu: 1.0,
            hoelder_depth: 4,
        }
    }
}

/// One ball of the family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallRow {
    pub center: usize,
    pub r: f64,
    pub normalized_energy: f64,
    pub mean_oscillation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsReport {
    pub p: f64,
    pub h: f64,
    pub config: DiagnosticsConfig,
    pub family_centers: Vec<Vec<f64>>,
    pub balls: Vec<BallRow>,
    pub sup_normalized_energy: f64,
    pub bmo_seminorm: f64,
    pub monotonicity: Option<MonotonicityReport>,
    pub decay_ratio: Option<f64>,
    pub growth: Option<GrowthProbe>,
    /// `max ||u| − 1|` over nodes in `B(x0, R)`.
    pub dist_to_sphere: Option<f64>,
    pub singular_set: SingularSetReport,
    pub hoelder: HoelderFit,
    pub max_principle: MaxPrinciple,
}

pub fn run_diagnostics(field: &VectorField, p: f64, config: &DiagnosticsConfig) -> Result<DiagnosticsReport> {
    let mesh = field.mesh();
    if config.x0.len() != mesh.dim() {
        return Err(Error::LengthMismatch { expected: mesh.dim(), got: config.x0.len() });
    }
    let family = BallFamily::default_for(mesh, config.radius, config.depth)?;
    let mut balls = Vec::with_capacity(family.len());
    let mut sup: f64 = 0.0;
    let mut bmo: f64 = 0.0;
    for (i, c) in family.centers().iter().enumerate() {
        for &r in family.radii() {
            let ne = normalized_energy(field, p, c, r);
            let osc = mean_oscillation(field, c, r).unwrap_or(0.0);
            sup = sup.max(ne);
            bmo = bmo.max(osc);
            balls.push(BallRow { center: i, r, normalized_energy: ne, mean_oscillation: osc });
        }
    }
    let x0 = &config.x0;
    let r = config.radius;
    let near: Vec<usize> = mesh.ball_nodes(x0, r);
    Ok(DiagnosticsReport {
        p,
        h: mesh.h(),
        config: config.clone(),
        family_centers: family.centers().to_vec(),
        balls,
        sup_normalized_energy: sup,
        bmo_seminorm: bmo,
        monotonicity: monotonicity_check(field, p, x0, 0.5 * r, r).ok(),
        decay_ratio: decay_ratio(field, p, x0, r, config.theta)?,
        growth: growth_probe(field, p, x0, 0.25 * r, config.lambda, config.mu).ok(),
        dist_to_sphere: dist_to_sphere_sup(field, &near).ok(),
        singular_set: singular_set(field, p, config.eps_threshold, r, &family)?,
        hoelder: hoelder_exponent(field, x0, r, config.hoelder_depth)?,
        max_principle: max_principle_check(field),
    })
}
