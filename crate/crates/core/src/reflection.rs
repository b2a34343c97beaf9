//! Reflection of a half-domain field across the flat free boundary
//! `{x_n = 0}`: even reflection of the domain composed with the sphere
//! inversion `σ(q) = q/|q|²` in the target.

use std::sync::Arc;

use serde::Serialize;

use crate::energy::first_variation;
use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::mesh::Mesh;
use crate::problem::Domain;
use crate::vecops::norm;

/// `σ(q) = q / |q|²`.
pub fn inversion(q: &[f64]) -> Result<Vec<f64>> {
    let n2: f64 = q.iter().map(|x| x * x).sum();
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::ZeroVector);
    }
    Ok(q.iter().map(|x| x / n2).collect())
}

/// `Σ(q)_{ij} = ∂_i σ^j(q) = (δ_ij − 2 q^i q^j / |q|²) / |q|²`, row-major
/// `N × N`.
pub fn inversion_jacobian(q: &[f64]) -> Result<Vec<f64>> {
    let n2: f64 = q.iter().map(|x| x * x).sum();
    if !(n2 > 0.0) || !n2.is_finite() {
        return Err(Error::ZeroVector);
    }
    let n = q.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let d = if i == j { 1.0 } else { 0.0 };
            out[i * n + j] = (d - 2.0 * q[i] * q[j] / n2) / n2;
        }
    }
    Ok(out)
}

/// The half-domain mesh together with its mirror image across `{x_n = 0}`.
///
/// Nodes and elements of the original mesh keep their indices; mirror nodes
/// (images of nodes with `x_n > 0`) and mirror elements are appended.
#[derive(Debug, Clone)]
pub struct DoubledMesh {
    mesh: Arc<Mesh>,
    image: Vec<usize>,
    half_nodes: usize,
    half_elements: usize,
}

impl DoubledMesh {
    pub fn new(half: &Mesh) -> Result<Self> {
        let domain = doubled_domain(half.domain())?;
        let n = half.dim();
        let nv = n + 1;
        let scale = half.h();
        let mut vertices = half.vertices().to_vec();
        let mut image: Vec<usize> = (0..half.num_nodes()).collect();
        let mut mirror = vec![usize::MAX; half.num_nodes()];
        for v in 0..half.num_nodes() {
            let x = half.vertex(v);
            if x[n - 1] < -1e-12 * scale {
                return Err(Error::NonFlatBoundary);
            }
            if x[n - 1] > 1e-12 * scale {
                mirror[v] = image.len();
                image.push(v);
                vertices.extend_from_slice(&x[..n - 1]);
                vertices.push(-x[n - 1]);
            } else {
                mirror[v] = v;
                let last = v * n + n - 1;
                vertices[last] = 0.0;
            }
        }
        let mut simplices = half.simplices().to_vec();
        simplices.reserve(half.simplices().len());
        for e in 0..half.num_elements() {
            let s = half.simplex(e);
            let mut t: Vec<usize> = s.iter().map(|&v| mirror[v]).collect();
            // the reflection reverses orientation
            t.swap(0, 1);
            simplices.extend_from_slice(&t[..nv]);
        }
        let candidates: Vec<bool> = image.iter().map(|&v| half.is_boundary_node(v)).collect();
        let mesh = Mesh::from_parts(domain, vertices, simplices, Some(&candidates))?;
        Ok(DoubledMesh {
            mesh: Arc::new(mesh),
            image,
            half_nodes: half.num_nodes(),
            half_elements: half.num_elements(),
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    /// Node of the half mesh whose reflection is node `v`.
    pub fn image(&self, v: usize) -> usize {
        self.image[v]
    }

    /// Whether node `v` lies strictly below `{x_n = 0}`.
    pub fn is_mirror_node(&self, v: usize) -> bool {
        v >= self.half_nodes
    }

    pub fn is_lower_element(&self, e: usize) -> bool {
        e >= self.half_elements
    }

    pub fn num_half_nodes(&self) -> usize {
        self.half_nodes
    }

    pub fn num_half_elements(&self) -> usize {
        self.half_elements
    }

    fn lift(&self, field: &VectorField) -> VectorField {
        let nc = field.components();
        let values = self.image.iter().flat_map(|&v| field.value(v).iter().copied()).collect();
        VectorField::new(self.mesh.clone(), nc, values).expect("lifted values are finite")
    }
}

fn doubled_domain(domain: &Domain) -> Result<Domain> {
    match domain {
        Domain::HalfBox { half_width, height } => {
            let mut lower: Vec<f64> = half_width.iter().map(|w| -w).collect();
            let mut upper = half_width.clone();
            lower.push(-height);
            upper.push(*height);
            Ok(Domain::Box { lower, upper })
        }
        Domain::HalfBall { dim, radius } => Ok(Domain::Ball { dim: *dim, radius: *radius }),
        Domain::Box { lower, upper } if domain.has_flat_bottom() => {
            let mut lower = lower.clone();
            let n = lower.len();
            lower[n - 1] = -upper[n - 1];
            Ok(Domain::Box { lower, upper: upper.clone() })
        }
        _ => Err(Error::NonFlatBoundary),
    }
}

/// Even reflection `ũ(x', x_n) = u(x', |x_n|)` onto the doubled mesh.
pub fn even_reflect(field: &VectorField) -> Result<VectorField> {
    let doubled = DoubledMesh::new(field.mesh())?;
    Ok(doubled.lift(field))
}

/// `v = u` above the plane and `σ(ũ)` below, with weight
/// `m = |ũ|^{2(p-2)}` below and `1` above.
#[derive(Debug, Clone)]
pub struct ReflectedField {
    pub doubled: DoubledMesh,
    /// Even reflection of the original field.
    pub u_tilde: VectorField,
    pub v: VectorField,
    /// Nodal weight.
    pub m: Vec<f64>,
}

/// Builds `v` and `m`; requires every nodal `|u| > 1/2`.
pub fn reflect_field(field: &VectorField, p: f64) -> Result<ReflectedField> {
    if !(p >= 2.0) {
        return Err(Error::InvalidParameter(format!("p = {p} must be >= 2")));
    }
    for v in 0..field.mesh().num_nodes() {
        let nv = norm(field.value(v));
        if !(nv > 0.5) {
            return Err(Error::ReflectionUndefined { node: v, norm: nv });
        }
    }
    let doubled = DoubledMesh::new(field.mesh())?;
    let u_tilde = doubled.lift(field);
    let nc = field.components();
    let mut values = u_tilde.values().to_vec();
    let mut m = vec![1.0; doubled.mesh.num_nodes()];
    for v in doubled.half_nodes..doubled.mesh.num_nodes() {
        let q = u_tilde.value(v);
        let s = inversion(q)?;
        values[v * nc..(v + 1) * nc].copy_from_slice(&s);
        m[v] = norm(q).powf(2.0 * (p - 2.0));
    }
    let v = u_tilde.with_values(values)?;
    Ok(ReflectedField { doubled, u_tilde, v, m })
}

/// Largest relative deviation over lower-half elements between `|∇v|` and
/// `|∇ũ| / |ũ(b)|²`, `b` the barycenter. Elements where both sides vanish
/// count as zero deviation.
pub fn gradient_identity_check(reflected: &ReflectedField, _p: f64) -> f64 {
    let mesh = reflected.doubled.mesh();
    let (n, nc) = (mesh.dim(), reflected.v.components());
    let mut gv = vec![0.0; n * nc];
    let mut gu = vec![0.0; n * nc];
    let mut ub = vec![0.0; nc];
    let mut worst: f64 = 0.0;
    for e in reflected.doubled.half_elements..mesh.num_elements() {
        reflected.v.element_gradient(e, &mut gv);
        reflected.u_tilde.element_gradient(e, &mut gu);
        reflected.u_tilde.barycenter_value(e, &mut ub);
        let lhs = norm(&gv);
        let nb = norm(&ub);
        let rhs = norm(&gu) / (nb * nb);
        let dev = if rhs > 0.0 {
            (lhs - rhs).abs() / rhs
        } else if lhs > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(dev);
    }
    worst
}

/// Weak residual of `div(|∇v|^{p-2} ∇v)` at one node, relative to the local
/// energy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeRatio {
    pub node: usize,
    /// `x_n` of the node.
    pub height: f64,
    pub ratio: f64,
}

/// For every interior node `a` of the doubled mesh:
/// `|∫ |∇v|^{p-2} ∇v · ∇φ_a| / ∫_{supp φ_a} |∇v|^p`, reported as 0 when the
/// local energy vanishes.
pub fn reflected_residual_bound(reflected: &ReflectedField, p: f64) -> Vec<NodeRatio> {
    let v = &reflected.v;
    let mesh = v.mesh();
    let (n, nc) = (mesh.dim(), v.components());
    let residual = first_variation(v, p, 0.0);
    let mut local = vec![0.0; mesh.num_nodes()];
    let mut g = vec![0.0; n * nc];
    for e in 0..mesh.num_elements() {
        v.element_gradient(e, &mut g);
        let w = norm(&g).powf(p) * mesh.volume(e);
        for &a in mesh.simplex(e) {
            local[a] += w;
        }
    }
    (0..mesh.num_nodes())
        .filter(|&a| !mesh.is_boundary_node(a))
        .map(|a| {
            let r = norm(residual.value(a));
            let ratio = if local[a] > 0.0 { r / local[a] } else { 0.0 };
            NodeRatio { node: a, height: mesh.vertex(a)[n - 1], ratio }
        })
        .collect()
}
