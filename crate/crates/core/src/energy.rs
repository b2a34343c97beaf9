//! p-energy, its ε-regularization and the weak-form residuals built on it.
//!
//! `|∇u|` is always the Frobenius norm of the `N × n` gradient matrix.
//! Gradients are constant per element, so energies are integrated exactly.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::mesh::NodeClass;

/// Integrated energy with its per-element contributions.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyValue {
    pub total: f64,
    /// Aligned with the element list the energy was evaluated on.
    pub per_element: Vec<f64>,
}

impl EnergyValue {
    fn from_parts(per_element: Vec<f64>) -> Self {
        EnergyValue { total: per_element.iter().fold(0.0, |a, b| a + b), per_element }
    }
}

#[inline]
fn sq_norm(g: &[f64]) -> f64 {
    g.iter().map(|x| x * x).sum()
}

/// `∫_D |∇u|^p` over the whole mesh.
pub fn p_energy(field: &VectorField, p: f64) -> EnergyValue {
    regularized_energy(field, p, 0.0)
}

/// `∫ |∇u|^p` over the listed elements.
pub fn p_energy_on(field: &VectorField, p: f64, elements: &[usize]) -> EnergyValue {
    let mesh = field.mesh();
    let mut g = vec![0.0; mesh.dim() * field.components()];
    EnergyValue::from_parts(
        elements
            .iter()
            .map(|&e| {
                field.element_gradient(e, &mut g);
                sq_norm(&g).powf(0.5 * p) * mesh.volume(e)
            })
            .collect(),
    )
}

/// `∫_D (ε + |∇u|²)^{p/2}`. Equals [`p_energy`] at `eps = 0`.
pub fn regularized_energy(field: &VectorField, p: f64, eps: f64) -> EnergyValue {
    let mesh = field.mesh();
    let mut g = vec![0.0; mesh.dim() * field.components()];
    EnergyValue::from_parts(
        (0..mesh.num_elements())
            .map(|e| {
                field.element_gradient(e, &mut g);
                (eps + sq_norm(&g)).powf(0.5 * p) * mesh.volume(e)
            })
            .collect(),
    )
}

pub(crate) fn regularized_energy_total(field: &VectorField, p: f64, eps: f64) -> f64 {
    let mesh = field.mesh();
    let mut g = vec![0.0; mesh.dim() * field.components()];
    (0..mesh.num_elements())
        .map(|e| {
            field.element_gradient(e, &mut g);
            (eps + sq_norm(&g)).powf(0.5 * p) * mesh.volume(e)
        })
        .sum()
}

/// Nodal residual `r_a = ∫ (ε + |∇u|²)^{(p-2)/2} ∇u · ∇φ_a`, one `N`-vector per
/// node. This is `1/p` times the gradient of [`regularized_energy`] with
/// respect to the nodal values.
pub fn first_variation(field: &VectorField, p: f64, eps: f64) -> VectorField {
    let mesh = field.mesh();
    let (dim, nc) = (mesh.dim(), field.components());
    let mut out = vec![0.0; mesh.num_nodes() * nc];
    let mut g = vec![0.0; dim * nc];
    for e in 0..mesh.num_elements() {
        let geo = mesh.geometry(e);
        field.element_gradient(e, &mut g);
        let w = (eps + sq_norm(&g)).powf(0.5 * (p - 2.0)) * geo.volume;
        for (a, &v) in mesh.simplex(e).iter().enumerate() {
            for c in 0..nc {
                let s: f64 = (0..dim).map(|d| g[c * dim + d] * geo.grads[a][d]).sum();
                out[v * nc + c] += w * s;
            }
        }
    }
    VectorField::new(mesh.clone(), nc, out).expect("residual has field layout")
}

/// Inner-variation (domain-variation) pairing
/// `∫ |∇u|^{p-2} (|∇u|² δ_ij − p ∂_i u·∂_j u) ∂_i ξ^j`.
///
/// `xi` is an `n`-component field that must vanish on Dirichlet nodes and be
/// tangent to every free boundary face at free-sphere nodes.
pub fn inner_variation_residual(field: &VectorField, p: f64, xi: &VectorField) -> Result<f64> {
    let mesh = field.mesh();
    let dim = mesh.dim();
    if !field.same_mesh(xi) {
        return Err(Error::MeshMismatch);
    }
    if xi.components() != dim {
        return Err(Error::LengthMismatch { expected: dim, got: xi.components() });
    }
    check_domain_variation(xi)?;
    let nc = field.components();
    let mut g = vec![0.0; dim * nc];
    let mut gx = vec![0.0; dim * dim];
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        field.element_gradient(e, &mut g);
        xi.element_gradient(e, &mut gx);
        let g2 = sq_norm(&g);
        let w = g2.powf(0.5 * (p - 2.0));
        let mut acc = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let cross: f64 = (0..nc).map(|c| g[c * dim + i] * g[c * dim + j]).sum();
                let delta = if i == j { g2 } else { 0.0 };
                // ∂_i ξ^j is row j, column i of the ξ gradient
                acc += (delta - p * cross) * gx[j * dim + i];
            }
        }
        total += w * acc * mesh.volume(e);
    }
    Ok(total)
}

fn check_domain_variation(xi: &VectorField) -> Result<()> {
    let mesh = xi.mesh();
    let dim = mesh.dim();
    let classes = mesh.node_class();
    for (v, class) in classes.iter().enumerate() {
        if *class == NodeClass::Dirichlet && xi.value(v).iter().any(|x| x.abs() > 1e-12) {
            return Err(Error::TangencyViolated(v));
        }
    }
    for (face, class) in mesh.boundary_faces().iter().zip(mesh.face_class()) {
        if *class != crate::mesh::FaceClass::Free {
            continue;
        }
        for &v in &face.nodes[..dim] {
            if classes[v] != NodeClass::FreeSphere {
                continue;
            }
            let x = xi.value(v);
            let normal: f64 = (0..dim).map(|d| x[d] * face.normal[d]).sum();
            let scale = 1.0 + x.iter().map(|t| t * t).sum::<f64>().sqrt();
            if normal.abs() > 1e-10 * scale {
                return Err(Error::TangencyViolated(v));
            }
        }
    }
    Ok(())
}

/// `Ω_ij = u^i ∇u^j − u^j ∇u^i` per element, with `u` taken at the barycenter.
#[derive(Debug, Clone, PartialEq)]
pub struct OmegaField {
    dim: usize,
    components: usize,
    data: Vec<f64>,
}

impl OmegaField {
    /// The `n`-vector `Ω_ij` on element `e`.
    pub fn get(&self, e: usize, i: usize, j: usize) -> &[f64] {
        let nc = self.components;
        let k = ((e * nc + i) * nc + j) * self.dim;
        &self.data[k..k + self.dim]
    }
}

pub fn omega_field(field: &VectorField) -> OmegaField {
    let mesh = field.mesh();
    let (dim, nc) = (mesh.dim(), field.components());
    let mut data = Vec::with_capacity(mesh.num_elements() * nc * nc * dim);
    let mut g = vec![0.0; dim * nc];
    let mut ub = vec![0.0; nc];
    for e in 0..mesh.num_elements() {
        field.element_gradient(e, &mut g);
        field.barycenter_value(e, &mut ub);
        for i in 0..nc {
            for j in 0..nc {
                for d in 0..dim {
                    data.push(ub[i] * g[j * dim + d] - ub[j] * g[i * dim + d]);
                }
            }
        }
    }
    OmegaField { dim, components: nc, data }
}

/// Conservation-law pairing `∫ |∇u|^{p-2} Ω_ij · ∇φ` for a scalar test field
/// `phi` that need not vanish on the boundary.
pub fn conservation_residual(
    field: &VectorField,
    p: f64,
    phi: &VectorField,
    i: usize,
    j: usize,
) -> Result<f64> {
    let nc = field.components();
    for idx in [i, j] {
        if idx >= nc {
            return Err(Error::IndexOutOfRange { index: idx, len: nc });
        }
    }
    if !field.same_mesh(phi) {
        return Err(Error::MeshMismatch);
    }
    if phi.components() != 1 {
        return Err(Error::LengthMismatch { expected: 1, got: phi.components() });
    }
    let mesh = field.mesh();
    let dim = mesh.dim();
    let mut g = vec![0.0; dim * nc];
    let mut gp = vec![0.0; dim];
    let mut ub = vec![0.0; nc];
    let mut total = 0.0;
    for e in 0..mesh.num_elements() {
        field.element_gradient(e, &mut g);
        phi.element_gradient(e, &mut gp);
        field.barycenter_value(e, &mut ub);
        let w = sq_norm(&g).powf(0.5 * (p - 2.0));
        let pair: f64 = (0..dim)
            .map(|d| (ub[i] * g[j * dim + d] - ub[j] * g[i * dim + d]) * gp[d])
            .sum();
        total += w * pair * mesh.volume(e);
    }
    Ok(total)
}

/// `(I − q̂ ⊗ q̂) w` with `q̂ = q/|q|`: projection onto `T_{q̂} 𝕊^{N-1}`.
pub fn tangent_project(q: &[f64], w: &[f64]) -> Result<Vec<f64>> {
    let nq = crate::vecops::norm(q);
    if nq == 0.0 || !nq.is_finite() {
        return Err(Error::ZeroVector);
    }
    if q.len() != w.len() {
        return Err(Error::LengthMismatch { expected: q.len(), got: w.len() });
    }
    let mut out = w.to_vec();
    project_in_place(q, nq, &mut out);
    Ok(out)
}

#[inline]
pub(crate) fn project_in_place(q: &[f64], q_norm: f64, w: &mut [f64]) {
    let s: f64 = q.iter().zip(w.iter()).map(|(a, b)| a * b).sum::<f64>() / (q_norm * q_norm);
    for (x, a) in w.iter_mut().zip(q) {
        *x -= s * a;
    }
}
