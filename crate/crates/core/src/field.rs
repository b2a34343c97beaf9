//! Nodal vector fields on a mesh and their piecewise-affine kinematics.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::Mesh;

/// Piecewise-affine map `u: D → ℝᴺ` given by its nodal values.
#[derive(Debug, Clone)]
pub struct VectorField {
    mesh: Arc<Mesh>,
    components: usize,
    values: Vec<f64>,
}

impl PartialEq for VectorField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
            && self.components == other.components
            && self.values == other.values
    }
}

impl VectorField {
    /// `values` is node-major: `values[i * components + c]`.
    pub fn new(mesh: Arc<Mesh>, components: usize, values: Vec<f64>) -> Result<Self> {
        if components == 0 {
            return Err(Error::InvalidParameter("field needs at least one component".into()));
        }
        let expected = mesh.num_nodes() * components;
        if values.len() != expected {
            return Err(Error::LengthMismatch { expected, got: values.len() });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(k / components));
        }
        Ok(VectorField { mesh, components, values })
    }

    pub fn constant(mesh: Arc<Mesh>, c: &[f64]) -> Self {
        let values = c.iter().copied().cycle().take(c.len() * mesh.num_nodes()).collect();
        VectorField { mesh, components: c.len(), values }
    }

    /// Samples `f` at every node.
    pub fn from_fn(
        mesh: Arc<Mesh>,
        components: usize,
        mut f: impl FnMut(&[f64]) -> Vec<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(mesh.num_nodes() * components);
        for i in 0..mesh.num_nodes() {
            let v = f(mesh.vertex(i));
            if v.len() != components {
                return Err(Error::LengthMismatch { expected: components, got: v.len() });
            }
            values.extend(v);
        }
        Self::new(mesh, components, values)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, node: usize) -> &[f64] {
        &self.values[node * self.components..(node + 1) * self.components]
    }

    pub(crate) fn value_mut(&mut self, node: usize) -> &mut [f64] {
        &mut self.values[node * self.components..(node + 1) * self.components]
    }

    /// Same mesh, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.mesh.clone(), self.components, values)
    }

    pub fn same_mesh(&self, other: &VectorField) -> bool {
        Arc::ptr_eq(&self.mesh, &other.mesh)
    }

    /// Scalar field holding component `i`.
    pub fn component(&self, i: usize) -> Result<VectorField> {
        if i >= self.components {
            return Err(Error::IndexOutOfRange { index: i, len: self.components });
        }
        let values = self.values.iter().skip(i).step_by(self.components).copied().collect();
        Ok(VectorField { mesh: self.mesh.clone(), components: 1, values })
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: f64, other: &VectorField, beta: f64) -> Result<VectorField> {
        if !self.same_mesh(other) || self.components != other.components {
            return Err(Error::MeshMismatch);
        }
        let values = self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(VectorField { mesh: self.mesh.clone(), components: self.components, values })
    }

    /// Value of the interpolant at the barycenter of element `e`. Accumulated
    /// as offsets from the first vertex so constant fields come out exactly.
    pub fn barycenter_value(&self, e: usize, out: &mut [f64]) {
        let s = self.mesh.simplex(e);
        let base = self.value(s[0]);
        out.iter_mut().for_each(|x| *x = 0.0);
        for &v in &s[1..] {
            for ((o, x), b) in out.iter_mut().zip(self.value(v)).zip(base) {
                *o += x - b;
            }
        }
        let k = s.len() as f64;
        out.iter_mut().zip(base).for_each(|(x, b)| *x = b + *x / k);
    }

    /// Gradient matrix (`N × n`, row-major) of the interpolant on element `e`.
    pub fn element_gradient(&self, e: usize, out: &mut [f64]) {
        let dim = self.mesh.dim();
        let geo = self.mesh.geometry(e);
        out.iter_mut().for_each(|x| *x = 0.0);
        for (a, &v) in self.mesh.simplex(e).iter().enumerate() {
            let uv = self.value(v);
            for c in 0..self.components {
                for d in 0..dim {
                    out[c * dim + d] += uv[c] * geo.grads[a][d];
                }
            }
        }
    }

    /// Maximum nodal Euclidean norm.
    pub fn sup_norm(&self) -> f64 {
        self.values
            .chunks(self.components)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// Per-element constant gradients of a piecewise-affine field.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementGradient {
    dim: usize,
    components: usize,
    data: Vec<f64>,
}

impl ElementGradient {
    /// `N × n` gradient matrix of element `e`, row-major.
    pub fn matrix(&self, e: usize) -> &[f64] {
        let k = self.dim * self.components;
        &self.data[e * k..(e + 1) * k]
    }

    pub fn num_elements(&self) -> usize {
        self.data.len() / (self.dim * self.components)
    }

    /// Frobenius norm on element `e`.
    pub fn norm(&self, e: usize) -> f64 {
        self.matrix(e).iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// Exact gradient of the piecewise-affine interpolant on every simplex.
pub fn gradient(field: &VectorField) -> ElementGradient {
    let mesh = field.mesh();
    let k = mesh.dim() * field.components();
    let mut data = vec![0.0; mesh.num_elements() * k];
    for (e, chunk) in data.chunks_mut(k).enumerate() {
        field.element_gradient(e, chunk);
    }
    ElementGradient { dim: mesh.dim(), components: field.components(), data }
}

/// Volume-weighted mean of the barycenter values over `elements`, shifted by
/// the first barycenter value.
pub fn mean_value(field: &VectorField, elements: &[usize]) -> Result<Vec<f64>> {
    if elements.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mesh = field.mesh();
    let nc = field.components();
    let mut base = vec![0.0; nc];
    field.barycenter_value(elements[0], &mut base);
    let mut acc = vec![0.0; nc];
    let mut bary = vec![0.0; nc];
    let mut vol = 0.0;
    for &e in elements {
        field.barycenter_value(e, &mut bary);
        let w = mesh.volume(e);
        vol += w;
        for ((a, b), c) in acc.iter_mut().zip(&bary).zip(&base) {
            *a += w * (b - c);
        }
    }
    Ok(acc.iter().zip(&base).map(|(a, c)| c + a / vol).collect())
}

/// Area-weighted mean of the trace over the given boundary faces.
pub fn boundary_mean(field: &VectorField, faces: &[usize]) -> Result<Vec<f64>> {
    if faces.is_empty() {
        return Err(Error::EmptySubset);
    }
    let mesh = field.mesh();
    let dim = mesh.dim();
    let all = mesh.boundary_faces();
    let mut acc = vec![0.0; field.components()];
    let mut area = 0.0;
    for &f in faces {
        let face = all.get(f).ok_or(Error::IndexOutOfRange { index: f, len: all.len() })?;
        area += face.area;
        for &v in &face.nodes[..dim] {
            for (a, x) in acc.iter_mut().zip(field.value(v)) {
                *a += face.area * x / dim as f64;
            }
        }
    }
    acc.iter_mut().for_each(|a| *a /= area);
    Ok(acc)
}
