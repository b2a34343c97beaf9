//! Problem description: domain geometry, boundary portions and boundary data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::vecops::{norm, unit_ball_volume};

const GEOM_EPS: f64 = 1e-12;

/// Computational domain `D ⊂ ℝⁿ`, `n ∈ {2, 3}`.
///
/// The half domains have their flat free boundary on `{x_n = 0}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    /// Axis-aligned box `[lower, upper]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `[-w₁, w₁] × … × [-w_{n-1}, w_{n-1}] × [0, height]`.
    HalfBox { half_width: Vec<f64>, height: f64 },
    /// Ball of the given radius centred at the origin.
    Ball { dim: usize, radius: f64 },
    /// `{|x| < radius, x_n > 0}`.
    HalfBall { dim: usize, radius: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Box { lower, .. } => lower.len(),
            Domain::HalfBox { half_width, .. } => half_width.len() + 1,
            Domain::Ball { dim, .. } | Domain::HalfBall { dim, .. } => *dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.dim();
        if !(2..=3).contains(&n) {
            return Err(Error::DegenerateDomain(format!(
                "dimension {n} not supported (2 or 3)"
            )));
        }
        let ok = match self {
            Domain::Box { lower, upper } => {
                lower.len() == upper.len()
                    && lower
                        .iter()
                        .zip(upper)
                        .all(|(a, b)| a.is_finite() && b.is_finite() && b > a)
            }
            Domain::HalfBox { half_width, height } => {
                half_width.iter().all(|w| w.is_finite() && *w > 0.0)
                    && height.is_finite()
                    && *height > 0.0
            }
            Domain::Ball { radius, .. } | Domain::HalfBall { radius, .. } => {
                radius.is_finite() && *radius > 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::DegenerateDomain(format!("{self:?}")))
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Box { lower, upper } => (lower.clone(), upper.clone()),
            Domain::HalfBox { half_width, height } => {
                let mut lo: Vec<f64> = half_width.iter().map(|w| -w).collect();
                let mut hi = half_width.clone();
                lo.push(0.0);
                hi.push(*height);
                (lo, hi)
            }
            Domain::Ball { dim, radius } => (vec![-radius; *dim], vec![*radius; *dim]),
            Domain::HalfBall { dim, radius } => {
                let lo = (0..*dim)
                    .map(|i| if i + 1 == *dim { 0.0 } else { -radius })
                    .collect();
                (lo, vec![*radius; *dim])
            }
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            Domain::Box { .. } | Domain::HalfBox { .. } => {
                let (lo, hi) = self.bounding_box();
                lo.iter().zip(&hi).map(|(a, b)| b - a).product()
            }
            Domain::Ball { dim, radius } => unit_ball_volume(*dim) * radius.powi(*dim as i32),
            Domain::HalfBall { dim, radius } => {
                0.5 * unit_ball_volume(*dim) * radius.powi(*dim as i32)
            }
        }
    }

    /// Whether the domain has a flat boundary portion on `{x_n = 0}` with the
    /// domain lying in `{x_n ≥ 0}`.
    pub fn has_flat_bottom(&self) -> bool {
        match self {
            Domain::Box { lower, .. } => lower[lower.len() - 1] == 0.0,
            Domain::HalfBox { .. } | Domain::HalfBall { .. } => true,
            Domain::Ball { .. } => false,
        }
    }

    /// Whether the closed ball `B(center, r)` lies in the closure of the domain.
    pub fn contains_ball(&self, center: &[f64], r: f64) -> bool {
        let n = self.dim();
        match self {
            Domain::Box { .. } | Domain::HalfBox { .. } => {
                let (lo, hi) = self.bounding_box();
                (0..n).all(|i| center[i] - r >= lo[i] - GEOM_EPS && center[i] + r <= hi[i] + GEOM_EPS)
            }
            Domain::Ball { radius, .. } => norm(center) + r <= radius + GEOM_EPS,
            Domain::HalfBall { radius, .. } => {
                norm(center) + r <= radius + GEOM_EPS && center[n - 1] - r >= -GEOM_EPS
            }
        }
    }

    /// Whether `B(center, r) ∩ {x_n ≥ 0}` lies in the closure of the domain,
    /// for a center on the flat bottom `{x_n = 0}`.
    pub fn contains_half_ball(&self, center: &[f64], r: f64) -> bool {
        let n = self.dim();
        if !self.has_flat_bottom() || center[n - 1].abs() > GEOM_EPS {
            return false;
        }
        match self {
            Domain::Box { .. } | Domain::HalfBox { .. } => {
                let (lo, hi) = self.bounding_box();
                (0..n - 1).all(|i| center[i] - r >= lo[i] - GEOM_EPS && center[i] + r <= hi[i] + GEOM_EPS)
                    && r <= hi[n - 1] + GEOM_EPS
            }
            Domain::HalfBall { radius, .. } => norm(center) + r <= radius + GEOM_EPS,
            Domain::Ball { .. } => false,
        }
    }

    /// Every boundary portion of this domain.
    pub fn pieces(&self) -> Vec<BoundaryPiece> {
        let n = self.dim();
        match self {
            Domain::Box { .. } | Domain::HalfBox { .. } => (0..n)
                .flat_map(|axis| {
                    [false, true]
                        .into_iter()
                        .map(move |upper| BoundaryPiece::Side { axis, upper })
                })
                .collect(),
            Domain::Ball { .. } => vec![BoundaryPiece::Curved],
            Domain::HalfBall { .. } => vec![BoundaryPiece::bottom(n), BoundaryPiece::Curved],
        }
    }

    /// Whether point `x` lies on `piece` within `tol`.
    pub fn on_piece(&self, piece: BoundaryPiece, x: &[f64], tol: f64) -> bool {
        let n = self.dim();
        match (self, piece) {
            (Domain::Box { .. } | Domain::HalfBox { .. }, BoundaryPiece::Side { axis, upper }) => {
                if axis >= n {
                    return false;
                }
                let (lo, hi) = self.bounding_box();
                let bound = if upper { hi[axis] } else { lo[axis] };
                (x[axis] - bound).abs() <= tol
            }
            (Domain::HalfBall { .. }, BoundaryPiece::Side { axis, upper }) => {
                axis + 1 == n && !upper && x[n - 1].abs() <= tol
            }
            (Domain::Ball { radius, .. } | Domain::HalfBall { radius, .. }, BoundaryPiece::Curved) => {
                (norm(x) - radius).abs() <= tol
            }
            _ => false,
        }
    }
}

/// A named portion of `∂D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryPiece {
    /// Box face `x_axis = lower` (`upper == false`) or `x_axis = upper`.
    Side { axis: usize, upper: bool },
    /// Spherical part of a ball or half ball.
    Curved,
}

impl BoundaryPiece {
    /// The flat face `{x_n = min}`.
    pub fn bottom(dim: usize) -> Self {
        BoundaryPiece::Side { axis: dim - 1, upper: false }
    }

    pub fn top(dim: usize) -> Self {
        BoundaryPiece::Side { axis: dim - 1, upper: true }
    }

    /// All faces normal to the first `n - 1` axes.
    pub fn lateral(dim: usize) -> Vec<Self> {
        (0..dim - 1)
            .flat_map(|axis| [false, true].map(|upper| BoundaryPiece::Side { axis, upper }))
            .collect()
    }

    /// Parses a comma separated list of `bottom`, `top`, `sides`, `curved`,
    /// `all`, `none` or `x0-`, `x0+`, `x1-`, ...
    pub fn parse_list(text: &str, domain: &Domain) -> Result<Vec<Self>> {
        let n = domain.dim();
        let mut out = Vec::new();
        for word in text.split(',').map(str::trim).filter(|w| !w.is_empty()) {
            match word {
                "none" => {}
                "all" => out.extend(domain.pieces()),
                "bottom" => out.push(Self::bottom(n)),
                "top" => out.push(Self::top(n)),
                "sides" => out.extend(Self::lateral(n)),
                "curved" => out.push(BoundaryPiece::Curved),
                w if w.starts_with('x') && (w.ends_with('-') || w.ends_with('+')) => {
                    let axis: usize = w[1..w.len() - 1].parse().map_err(|_| {
                        Error::InvalidParameter(format!("unknown boundary piece {w:?}"))
                    })?;
                    if axis >= n {
                        return Err(Error::InvalidParameter(format!("axis {axis} >= {n}")));
                    }
                    out.push(BoundaryPiece::Side { axis, upper: w.ends_with('+') });
                }
                w => {
                    return Err(Error::InvalidParameter(format!("unknown boundary piece {w:?}")))
                }
            }
        }
        out.sort();
        out.dedup();
        Ok(out)
    }
}

/// Source of the Dirichlet values.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BoundaryData {
    Constant(Vec<f64>),
    /// `u(x) = A x + b` with `A` stored row-major as `N × n`.
    Affine { matrix: Vec<f64>, offset: Vec<f64> },
    /// Smooth sphere-valued data: with `θ = k x₁`, `φ = k x₂ / 2`,
    /// `(cos θ, sin θ)` for `N = 2` and `(cos θ cos φ, sin θ cos φ, sin φ, 0, …)`
    /// otherwise.
    SphereWave { wavenumber: f64 },
    /// Explicit nodal values (`nodes × N`, node-major).
    Nodal(Vec<f64>),
}

impl BoundaryData {
    /// Value at node `node` located at `x`.
    pub fn eval(&self, node: usize, x: &[f64], components: usize) -> Vec<f64> {
        match self {
            BoundaryData::Constant(c) => c.clone(),
            BoundaryData::Affine { matrix, offset } => {
                let n = x.len();
                (0..components)
                    .map(|c| offset[c] + (0..n).map(|d| matrix[c * n + d] * x[d]).sum::<f64>())
                    .collect()
            }
            BoundaryData::SphereWave { wavenumber } => {
                let theta = wavenumber * x[0];
                let phi = 0.5 * wavenumber * x[1];
                let mut v = vec![0.0; components];
                if components == 2 {
                    v[0] = theta.cos();
                    v[1] = theta.sin();
                } else {
                    v[0] = theta.cos() * phi.cos();
                    v[1] = theta.sin() * phi.cos();
                    v[2] = phi.sin();
                }
                v
            }
            BoundaryData::Nodal(values) => values[node * components..(node + 1) * components].to_vec(),
        }
    }

    fn check(&self, dim: usize, components: usize) -> Result<()> {
        let ok = match self {
            BoundaryData::Constant(c) => c.len() == components,
            BoundaryData::Affine { matrix, offset } => {
                matrix.len() == components * dim && offset.len() == components
            }
            BoundaryData::SphereWave { wavenumber } => wavenumber.is_finite(),
            BoundaryData::Nodal(values) => values.len() % components == 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(
                "boundary data does not match the problem dimensions".into(),
            ))
        }
    }
}

/// A free-boundary p-harmonic map problem: exponent, dimensions, domain and
/// boundary-condition assignment.
///
/// Boundary faces are assigned to the free (sphere-constrained), Dirichlet or
/// natural portion. Natural nodes carry no constraint at all.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSpec {
    pub p: f64,
    pub dim: usize,
    pub components: usize,
    pub domain: Domain,
    pub free: Vec<BoundaryPiece>,
    pub dirichlet: Vec<BoundaryPiece>,
    pub natural: Vec<BoundaryPiece>,
    pub data: BoundaryData,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 2.0) || !self.p.is_finite() {
            return Err(Error::InvalidParameter(format!("p = {} must be >= 2", self.p)));
        }
        self.domain.validate()?;
        if self.dim != self.domain.dim() {
            return Err(Error::InvalidParameter(format!(
                "dim {} does not match domain dimension {}",
                self.dim,
                self.domain.dim()
            )));
        }
        if self.components < 2 {
            return Err(Error::InvalidParameter("target dimension N must be >= 2".into()));
        }
        for piece in &self.free {
            if self.dirichlet.contains(piece) || self.natural.contains(piece) {
                return Err(Error::InvalidParameter(format!(
                    "{piece:?} assigned to more than one boundary portion"
                )));
            }
        }
        for piece in &self.dirichlet {
            if self.natural.contains(piece) {
                return Err(Error::InvalidParameter(format!(
                    "{piece:?} assigned to more than one boundary portion"
                )));
            }
        }
        self.data.check(self.dim, self.components)
    }
}
