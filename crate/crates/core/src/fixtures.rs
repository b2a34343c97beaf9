//! Analytic reference fields and quadrature oracles for their energies.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::mesh::Mesh;
use crate::quadrature::{composite, composite_box};
use crate::vecops::{dist, unit_ball_volume};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FixtureKind {
    Constant { value: Vec<f64> },
    /// `(x − c)/|x − c|`, so `N = n`.
    RadialProjection { center: Vec<f64> },
    /// Scalar `log log(2/|x − c|)`, defined for `|x − c| < 2`.
    LogLog { center: Vec<f64> },
    /// Scalar `sin log log(2/|x − c|)`.
    SinLogLog { center: Vec<f64> },
    /// `A x + b` with `A` row-major `N × n`.
    Linear { matrix: Vec<f64>, offset: Vec<f64> },
}

impl FixtureKind {
    pub fn name(&self) -> &'static str {
        match self {
            FixtureKind::Constant { .. } => "constant",
            FixtureKind::RadialProjection { .. } => "radial",
            FixtureKind::LogLog { .. } => "loglog",
            FixtureKind::SinLogLog { .. } => "sinloglog",
            FixtureKind::Linear { .. } => "linear",
        }
    }

    fn center(&self) -> Option<&[f64]> {
        match self {
            FixtureKind::RadialProjection { center }
            | FixtureKind::LogLog { center }
            | FixtureKind::SinLogLog { center } => Some(center),
            _ => None,
        }
    }

    fn components(&self, dim: usize) -> Result<usize> {
        match self {
            FixtureKind::Constant { value } if !value.is_empty() => Ok(value.len()),
            FixtureKind::RadialProjection { .. } => Ok(dim),
            FixtureKind::LogLog { .. } | FixtureKind::SinLogLog { .. } => Ok(1),
            FixtureKind::Linear { matrix, offset }
                if !offset.is_empty() && matrix.len() == offset.len() * dim =>
            {
                Ok(offset.len())
            }
            _ => Err(Error::IncompatibleFixture(format!("{} parameters do not fit n = {dim}", self.name()))),
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if let Some(c) = self.center() {
            if c.len() != dim {
                return Err(Error::IncompatibleFixture(format!(
                    "center has {} coordinates, mesh dimension is {dim}",
                    c.len()
                )));
            }
        }
        self.components(dim).map(|_| ())
    }

    /// Nodal value at `x`, or `None` at the singular point.
    fn eval(&self, x: &[f64], out: &mut [f64]) -> Option<()> {
        match self {
            FixtureKind::Constant { value } => out.copy_from_slice(value),
            FixtureKind::RadialProjection { center } => {
                let r = dist(x, center);
                if r == 0.0 {
                    return None;
                }
                for (o, (a, c)) in out.iter_mut().zip(x.iter().zip(center)) {
                    *o = (a - c) / r;
                }
            }
            FixtureKind::LogLog { center } | FixtureKind::SinLogLog { center } => {
                let r = dist(x, center);
                if r == 0.0 {
                    return None;
                }
                let f = (2.0 / r).ln().ln();
                out[0] = if matches!(self, FixtureKind::LogLog { .. }) { f } else { f.sin() };
            }
            FixtureKind::Linear { matrix, offset } => {
                let n = x.len();
                for (c, o) in out.iter_mut().enumerate() {
                    *o = offset[c] + (0..n).map(|d| matrix[c * n + d] * x[d]).sum::<f64>();
                }
            }
        }
        Some(())
    }

    /// `|∇u|` as a function of `r = |x − c|` for the radial kinds, given
    /// `log r` to stay accurate deep inside the singular point.
    fn radial_gradient_power(&self, p: f64, n: usize, log_r: f64) -> f64 {
        let nf = n as f64;
        match self {
            FixtureKind::RadialProjection { .. } => {
                // |∇u|^p r^n = (n − 1)^{p/2} r^{n−p}
                (nf - 1.0).powf(0.5 * p) * ((nf - p) * log_r).exp()
            }
            FixtureKind::LogLog { .. } | FixtureKind::SinLogLog { .. } => {
                // |∇u| = |f'(ℓ)| / (r ℓ) with ℓ = log(2/r)
                let ell = 2f64.ln() - log_r;
                let mut g = ell.powf(-p) * ((nf - p) * log_r).exp();
                if matches!(self, FixtureKind::SinLogLog { .. }) {
                    g *= ell.ln().cos().abs().powf(p);
                }
                g
            }
            _ => unreachable!(),
        }
    }

    /// `|∇u(x)|`, infinite at the singular point.
    fn gradient_norm(&self, x: &[f64]) -> f64 {
        match self {
            FixtureKind::Constant { .. } => 0.0,
            FixtureKind::Linear { matrix, .. } => frobenius(matrix),
            FixtureKind::RadialProjection { center } => {
                ((x.len() as f64) - 1.0).sqrt() / dist(x, center)
            }
            FixtureKind::LogLog { center } | FixtureKind::SinLogLog { center } => {
                let r = dist(x, center);
                let ell = (2.0 / r).ln();
                let g = 1.0 / (r * ell);
                if matches!(self, FixtureKind::SinLogLog { .. }) {
                    g * ell.ln().cos().abs()
                } else {
                    g
                }
            }
        }
    }
}

fn frobenius(m: &[f64]) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// A sampled fixture. `singular_nodes` lists nodes sitting on the singular
/// point, whose values were replaced by the average over their neighbours.
#[derive(Debug, Clone)]
pub struct FixtureField {
    pub field: VectorField,
    pub singular_nodes: Vec<usize>,
}

pub fn make_fixture(kind: &FixtureKind, mesh: Arc<Mesh>) -> Result<FixtureField> {
    let n = mesh.dim();
    kind.check_dim(n)?;
    let nc = kind.components(n)?;
    let mut values = vec![0.0; mesh.num_nodes() * nc];
    let mut singular = Vec::new();
    for v in 0..mesh.num_nodes() {
        let x = mesh.vertex(v);
        if let FixtureKind::LogLog { center } | FixtureKind::SinLogLog { center } = kind {
            if dist(x, center) >= 2.0 {
                return Err(Error::IncompatibleFixture(format!(
                    "{} is undefined at distance >= 2 from its center (node {v})",
                    kind.name()
                )));
            }
        }
        if kind.eval(x, &mut values[v * nc..(v + 1) * nc]).is_none() {
            singular.push(v);
        }
    }
    if !singular.is_empty() {
        let mut sum = vec![0.0; mesh.num_nodes() * nc];
        let mut count = vec![0usize; mesh.num_nodes()];
        let is_singular = |v: usize| singular.binary_search(&v).is_ok();
        for e in 0..mesh.num_elements() {
            let s = mesh.simplex(e);
            for &a in s.iter().filter(|&&a| is_singular(a)) {
                for &b in s.iter().filter(|&&b| b != a && !is_singular(b)) {
                    for c in 0..nc {
                        sum[a * nc + c] += values[b * nc + c];
                    }
                    count[a] += 1;
                }
            }
        }
        for &a in &singular {
            if count[a] == 0 {
                return Err(Error::IncompatibleFixture(format!("isolated singular node {a}")));
            }
            for c in 0..nc {
                values[a * nc + c] = sum[a * nc + c] / count[a] as f64;
            }
        }
    }
    Ok(FixtureField { field: VectorField::new(mesh, nc, values)?, singular_nodes: singular })
}

/// Integration region for [`fixture_energy_oracle`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QuadRegion {
    Ball { center: Vec<f64>, radius: f64 },
    /// `B(center, radius) ∩ {x_n ≥ center_n}`.
    HalfBall { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, inner: f64, outer: f64 },
    Box { lower: Vec<f64>, upper: Vec<f64> },
}

impl QuadRegion {
    fn dim(&self) -> usize {
        match self {
            QuadRegion::Ball { center, .. }
            | QuadRegion::HalfBall { center, .. }
            | QuadRegion::Annulus { center, .. } => center.len(),
            QuadRegion::Box { lower, .. } => lower.len(),
        }
    }

    pub fn volume(&self) -> f64 {
        let n = self.dim();
        let w = unit_ball_volume(n);
        match self {
            QuadRegion::Ball { radius, .. } => w * radius.powi(n as i32),
            QuadRegion::HalfBall { radius, .. } => 0.5 * w * radius.powi(n as i32),
            QuadRegion::Annulus { inner, outer, .. } => w * (outer.powi(n as i32) - inner.powi(n as i32)),
            QuadRegion::Box { lower, upper } => lower.iter().zip(upper).map(|(a, b)| b - a).product(),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            QuadRegion::Ball { radius, .. } | QuadRegion::HalfBall { radius, .. } => *radius > 0.0,
            QuadRegion::Annulus { inner, outer, .. } => *inner >= 0.0 && outer > inner,
            QuadRegion::Box { lower, upper } => {
                lower.len() == upper.len() && lower.iter().zip(upper).all(|(a, b)| b > a)
            }
        };
        let n = self.dim();
        if ok && (n == 2 || n == 3) {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bad quadrature region {self:?}")))
        }
    }
}

/// Quadrature value of `∫_region |∇u|^p` for the analytic fixture, computed
/// without reference to any mesh.
///
/// Radial kinds over balls, half balls and annuli around their own center
/// reduce to a one-dimensional integral; for balls the radius is mapped
/// through `r = 2R·exp(−e^s)`, which turns the `log`-type singularity at the
/// center into exponential decay in `s`. Other combinations use composite
/// tensor rules, which lose accuracy if the singular point is inside.
pub fn fixture_energy_oracle(kind: &FixtureKind, p: f64, region: &QuadRegion) -> Result<f64> {
    region.validate()?;
    let n = region.dim();
    kind.check_dim(n)?;
    if !(p >= 1.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be >= 1")));
    }
    match kind {
        FixtureKind::Constant { .. } => return Ok(0.0),
        FixtureKind::Linear { matrix, .. } => return Ok(frobenius(matrix).powf(p) * region.volume()),
        _ => {}
    }
    let nf = n as f64;
    let center = kind.center().expect("radial kinds have a center");
    let integrable = match kind {
        FixtureKind::RadialProjection { .. } => p < nf,
        _ => p <= nf,
    };
    let sphere = nf * unit_ball_volume(n);
    let centered = |c: &[f64]| c == center;
    match region {
        QuadRegion::Ball { center: c, radius } | QuadRegion::HalfBall { center: c, radius }
            if centered(c) =>
        {
            if !integrable {
                return Err(Error::InvalidParameter(format!(
                    "{} has infinite {p}-energy on balls around its center",
                    kind.name()
                )));
            }
            loglog_check(kind, *radius)?;
            let log_l = (2.0 * radius).ln();
            let s0 = 2f64.ln().ln();
            let f = |s: f64| {
                let es = s.exp();
                // ∫ F(r) dr with r = L exp(−e^s): dr = −r e^s ds
                kind.radial_gradient_power(p, n, log_l - es) * es
            };
            let half = if matches!(region, QuadRegion::HalfBall { .. }) { 0.5 } else { 1.0 };
            Ok(half * sphere * composite(f, s0, s0 + 48.0, 192, 10))
        }
        QuadRegion::Annulus { center: c, inner, outer } if centered(c) && *inner > 0.0 => {
            loglog_check(kind, *outer)?;
            let f = |r: f64| kind.radial_gradient_power(p, n, r.ln()) / r;
            Ok(sphere * composite(f, *inner, *outer, 64, 10))
        }
        QuadRegion::Box { lower, upper } => {
            let far = box_far_corner(center, lower, upper);
            loglog_check(kind, far)?;
            Ok(composite_box(&|x| kind.gradient_norm(x).powf(p), lower, upper, 16, 8))
        }
        _ => {
            let (c, r0, r1, half) = match region {
                QuadRegion::Ball { center, radius } => (center, 0.0, *radius, false),
                QuadRegion::HalfBall { center, radius } => (center, 0.0, *radius, true),
                QuadRegion::Annulus { center, inner, outer } => (center, *inner, *outer, false),
                QuadRegion::Box { .. } => unreachable!(),
            };
            loglog_check(kind, dist(c, center) + r1)?;
            Ok(spherical(&|x| kind.gradient_norm(x).powf(p), c, r0, r1, half))
        }
    }
}

fn loglog_check(kind: &FixtureKind, reach: f64) -> Result<()> {
    if matches!(kind, FixtureKind::LogLog { .. } | FixtureKind::SinLogLog { .. }) && reach >= 2.0 {
        return Err(Error::IncompatibleFixture(format!(
            "{} is undefined at distance >= 2 from its center",
            kind.name()
        )));
    }
    Ok(())
}

fn box_far_corner(c: &[f64], lower: &[f64], upper: &[f64]) -> f64 {
    c.iter()
        .zip(lower.iter().zip(upper))
        .map(|(x, (a, b))| (x - a).abs().max((b - x).abs()).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Composite rule in polar (n = 2) or spherical (n = 3) coordinates about
/// `c`, with the polar axis along `x_n` for half balls.
fn spherical(f: &dyn Fn(&[f64]) -> f64, c: &[f64], r0: f64, r1: f64, half: bool) -> f64 {
    let (panels, order) = (16, 8);
    let at = |d: &[f64]| {
        let x: Vec<f64> = c.iter().zip(d).map(|(a, b)| a + b).collect();
        f(&x)
    };
    if c.len() == 2 {
        let top = if half { PI } else { 2.0 * PI };
        let ring = |r: f64| r * composite(|t| at(&[r * t.cos(), r * t.sin()]), 0.0, top, panels, order);
        composite(ring, r0, r1, panels, order)
    } else {
        let top = if half { 0.5 * PI } else { PI };
        let shell = |r: f64| {
            let band = |th: f64| {
                let (st, ct) = th.sin_cos();
                let around = |ph: f64| at(&[r * st * ph.cos(), r * st * ph.sin(), r * ct]);
                st * composite(around, 0.0, 2.0 * PI, panels, order)
            };
            r * r * composite(band, 0.0, top, panels, order)
        };
        composite(shell, r0, r1, panels, order)
    }
}
