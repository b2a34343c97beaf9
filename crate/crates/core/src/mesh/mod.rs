//! Simplicial meshes of the computational domains.
//!
//! Meshes are immutable once built and are shared between fields through
//! `Arc<Mesh>`. Per-element basis gradients are recomputed on demand from the
//! vertex coordinates; only volumes are stored.

mod build;
mod classify;
mod index;

pub use build::{build_mesh, build_mesh_with_budget, DEFAULT_NODE_BUDGET};
pub use classify::{classify_boundary, Classification};

use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::problem::Domain;
use index::BarycenterIndex;

/// Role of a mesh node in the boundary-value problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeClass {
    /// Unconstrained node (interior, or on a natural boundary portion).
    Interior,
    /// Boundary node whose value is constrained to the unit sphere.
    FreeSphere,
    /// Node with prescribed value.
    Dirichlet,
}

/// Boundary-condition assignment of a boundary face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceClass {
    Free,
    Dirichlet,
    Natural,
}

/// A codimension-one face on `∂D`. Only the first `dim` node slots are used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub nodes: [usize; 3],
    pub element: usize,
    /// Outward unit normal (first `dim` entries).
    pub normal: [f64; 3],
    /// Length (n = 2) or area (n = 3).
    pub area: f64,
}

/// Volume and basis-function gradients of one simplex.
#[derive(Debug, Clone, Copy)]
pub struct ElementGeometry {
    pub volume: f64,
    /// `grads[a][d] = ∂_d φ_a` for local vertex `a`.
    pub grads: [[f64; 3]; 4],
}

/// Subset of mesh elements, sorted and without duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ElementSet(Vec<usize>);

impl ElementSet {
    pub fn from_sorted(mut ids: Vec<usize>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        ElementSet(ids)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset_of(&self, other: &ElementSet) -> bool {
        let mut it = other.0.iter().peekable();
        self.0.iter().all(|e| {
            while let Some(&&o) = it.peek() {
                if o < *e {
                    it.next();
                } else {
                    break;
                }
            }
            it.peek() == Some(&e)
        })
    }

    /// Elements of `self` not in `other`.
    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        ElementSet(
            self.0
                .iter()
                .copied()
                .filter(|e| other.0.binary_search(e).is_err())
                .collect(),
        )
    }
}

impl std::ops::Deref for ElementSet {
    type Target = [usize];
    fn deref(&self) -> &[usize] {
        &self.0
    }
}

/// Conforming simplicial mesh with boundary-face classification.
#[derive(Debug)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<f64>,
    simplices: Vec<usize>,
    volumes: Vec<f64>,
    boundary_faces: Vec<BoundaryFace>,
    on_boundary: Vec<bool>,
    node_class: Vec<NodeClass>,
    face_class: Vec<FaceClass>,
    h: f64,
    domain: Domain,
    index: OnceLock<BarycenterIndex>,
}

impl Mesh {
    /// Assembles a mesh from raw arrays.
    ///
    /// `hull_candidates` optionally marks nodes that may lie on `∂D`; faces
    /// with an unmarked node are skipped by the boundary search. Every
    /// boundary node starts out as `Dirichlet`.
    pub fn from_parts(
        domain: Domain,
        vertices: Vec<f64>,
        simplices: Vec<usize>,
        hull_candidates: Option<&[bool]>,
    ) -> Result<Mesh> {
        let dim = domain.dim();
        let nv = dim + 1;
        if vertices.len() % dim != 0 || simplices.len() % nv != 0 {
            return Err(Error::DegenerateDomain("ragged vertex or simplex array".into()));
        }
        let num_nodes = vertices.len() / dim;
        if simplices.iter().any(|&v| v >= num_nodes) {
            return Err(Error::DegenerateDomain("simplex references missing vertex".into()));
        }
        let mut mesh = Mesh {
            dim,
            vertices,
            simplices,
            volumes: Vec::new(),
            boundary_faces: Vec::new(),
            on_boundary: vec![false; num_nodes],
            node_class: Vec::new(),
            face_class: Vec::new(),
            h: 0.0,
            domain,
            index: OnceLock::new(),
        };
        let m = mesh.num_elements();
        let mut volumes = Vec::with_capacity(m);
        for e in 0..m {
            let vol = mesh.signed_volume(e);
            if !(vol > 0.0) {
                return Err(Error::InvertedSimplex(e));
            }
            volumes.push(vol);
        }
        mesh.volumes = volumes;
        mesh.h = mesh.max_edge_length();
        mesh.boundary_faces = mesh.find_boundary_faces(hull_candidates);
        for f in &mesh.boundary_faces {
            for &v in &f.nodes[..dim] {
                mesh.on_boundary[v] = true;
            }
        }
        mesh.node_class = mesh
            .on_boundary
            .iter()
            .map(|&b| if b { NodeClass::Dirichlet } else { NodeClass::Interior })
            .collect();
        mesh.face_class = vec![FaceClass::Dirichlet; mesh.boundary_faces.len()];
        Ok(mesh)
    }

    /// Replaces the boundary classification.
    pub fn with_classification(mut self, c: Classification) -> Result<Mesh> {
        if c.node_class.len() != self.num_nodes() {
            return Err(Error::LengthMismatch { expected: self.num_nodes(), got: c.node_class.len() });
        }
        if c.face_class.len() != self.boundary_faces.len() {
            return Err(Error::LengthMismatch {
                expected: self.boundary_faces.len(),
                got: c.face_class.len(),
            });
        }
        self.node_class = c.node_class;
        self.face_class = c.face_class;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn num_nodes(&self) -> usize {
        self.vertices.len() / self.dim
    }

    pub fn num_elements(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> &[f64] {
        &self.vertices
    }

    pub fn simplex(&self, e: usize) -> &[usize] {
        let nv = self.dim + 1;
        &self.simplices[e * nv..(e + 1) * nv]
    }

    pub fn simplices(&self) -> &[usize] {
        &self.simplices
    }

    pub fn volume(&self, e: usize) -> f64 {
        self.volumes[e]
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn boundary_faces(&self) -> &[BoundaryFace] {
        &self.boundary_faces
    }

    pub fn face_class(&self) -> &[FaceClass] {
        &self.face_class
    }

    pub fn node_class(&self) -> &[NodeClass] {
        &self.node_class
    }

    pub fn is_boundary_node(&self, i: usize) -> bool {
        self.on_boundary[i]
    }

    /// Maximum edge length.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes_of_class(&self, class: NodeClass) -> Vec<usize> {
        (0..self.num_nodes()).filter(|&i| self.node_class[i] == class).collect()
    }

    pub fn all_elements(&self) -> ElementSet {
        ElementSet((0..self.num_elements()).collect())
    }

    pub fn barycenter(&self, e: usize) -> [f64; 3] {
        let mut b = [0.0; 3];
        let s = self.simplex(e);
        for &v in s {
            for (d, x) in self.vertex(v).iter().enumerate() {
                b[d] += x;
            }
        }
        let k = s.len() as f64;
        b.iter_mut().for_each(|x| *x /= k);
        b
    }

    /// Volume and basis gradients of element `e`.
    pub fn geometry(&self, e: usize) -> ElementGeometry {
        let s = self.simplex(e);
        let mut grads = [[0.0; 3]; 4];
        let p0 = self.vertex(s[0]);
        if self.dim == 2 {
            let (p1, p2) = (self.vertex(s[1]), self.vertex(s[2]));
            let (ax, ay) = (p1[0] - p0[0], p1[1] - p0[1]);
            let (bx, by) = (p2[0] - p0[0], p2[1] - p0[1]);
            let det = ax * by - bx * ay;
            grads[1] = [by / det, -bx / det, 0.0];
            grads[2] = [-ay / det, ax / det, 0.0];
        } else {
            let e1 = sub3(self.vertex(s[1]), p0);
            let e2 = sub3(self.vertex(s[2]), p0);
            let e3 = sub3(self.vertex(s[3]), p0);
            let c23 = cross(&e2, &e3);
            let det = dot3(&e1, &c23);
            let c31 = cross(&e3, &e1);
            let c12 = cross(&e1, &e2);
            for d in 0..3 {
                grads[1][d] = c23[d] / det;
                grads[2][d] = c31[d] / det;
                grads[3][d] = c12[d] / det;
            }
        }
        for d in 0..self.dim {
            grads[0][d] = -(1..=self.dim).map(|a| grads[a][d]).sum::<f64>();
        }
        ElementGeometry { volume: self.volumes[e], grads }
    }

    /// Elements whose barycenter lies in the open ball `B(x0, r)`.
    pub fn ball_elements(&self, x0: &[f64], r: f64) -> ElementSet {
        if !(r > 0.0) {
            return ElementSet::default();
        }
        let index = self.index.get_or_init(|| BarycenterIndex::new(self));
        ElementSet(index.query_ball(x0, r))
    }

    /// Nodes in the open ball `B(x0, r)`.
    pub fn ball_nodes(&self, x0: &[f64], r: f64) -> Vec<usize> {
        (0..self.num_nodes())
            .filter(|&i| crate::vecops::dist(self.vertex(i), x0) < r)
            .collect()
    }

    /// Boundary faces whose barycenter lies in `B(x0, r)`.
    pub fn ball_faces(&self, x0: &[f64], r: f64) -> Vec<usize> {
        let dim = self.dim;
        (0..self.boundary_faces.len())
            .filter(|&f| {
                let face = &self.boundary_faces[f];
                let mut d2 = 0.0;
                for k in 0..dim {
                    let b = face.nodes[..dim].iter().map(|&v| self.vertex(v)[k]).sum::<f64>()
                        / dim as f64;
                    d2 += (b - x0[k]) * (b - x0[k]);
                }
                d2.sqrt() < r
            })
            .collect()
    }

    fn signed_volume(&self, e: usize) -> f64 {
        let s = self.simplex(e);
        let p0 = self.vertex(s[0]);
        if self.dim == 2 {
            let (p1, p2) = (self.vertex(s[1]), self.vertex(s[2]));
            0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
        } else {
            let e1 = sub3(self.vertex(s[1]), p0);
            let e2 = sub3(self.vertex(s[2]), p0);
            let e3 = sub3(self.vertex(s[3]), p0);
            dot3(&e1, &cross(&e2, &e3)) / 6.0
        }
    }

    fn max_edge_length(&self) -> f64 {
        let mut h: f64 = 0.0;
        for e in 0..self.num_elements() {
            let s = self.simplex(e);
            for a in 0..s.len() {
                for b in a + 1..s.len() {
                    h = h.max(crate::vecops::dist(self.vertex(s[a]), self.vertex(s[b])));
                }
            }
        }
        h
    }

    fn find_boundary_faces(&self, candidates: Option<&[bool]>) -> Vec<BoundaryFace> {
        let dim = self.dim;
        let mut keyed: Vec<([usize; 3], usize, usize)> = Vec::new();
        for e in 0..self.num_elements() {
            let s = self.simplex(e);
            for opp in 0..=dim {
                let mut key = [usize::MAX; 3];
                let mut k = 0;
                for (a, &v) in s.iter().enumerate() {
                    if a != opp {
                        key[k] = v;
                        k += 1;
                    }
                }
                if let Some(c) = candidates {
                    if key[..dim].iter().any(|&v| !c[v]) {
                        continue;
                    }
                }
                key[..dim].sort_unstable();
                keyed.push((key, e, opp));
            }
        }
        keyed.sort_unstable();
        let mut faces = Vec::new();
        let mut i = 0;
        while i < keyed.len() {
            let mut j = i + 1;
            while j < keyed.len() && keyed[j].0 == keyed[i].0 {
                j += 1;
            }
            if j - i == 1 {
                let (key, e, opp) = keyed[i];
                faces.push(self.make_face(key, e, self.simplex(e)[opp]));
            }
            i = j;
        }
        faces
    }

    fn make_face(&self, nodes: [usize; 3], element: usize, opposite: usize) -> BoundaryFace {
        let a = self.vertex(nodes[0]);
        let o = self.vertex(opposite);
        let (mut normal, area) = if self.dim == 2 {
            let b = self.vertex(nodes[1]);
            let t = [b[0] - a[0], b[1] - a[1]];
            let len = (t[0] * t[0] + t[1] * t[1]).sqrt();
            ([t[1] / len, -t[0] / len, 0.0], len)
        } else {
            let b = sub3(self.vertex(nodes[1]), a);
            let c = sub3(self.vertex(nodes[2]), a);
            let nrm = cross(&b, &c);
            let len = dot3(&nrm, &nrm).sqrt();
            ([nrm[0] / len, nrm[1] / len, nrm[2] / len], 0.5 * len)
        };
        let inward: f64 = (0..self.dim).map(|d| (o[d] - a[d]) * normal[d]).sum();
        if inward > 0.0 {
            normal.iter_mut().for_each(|x| *x = -*x);
        }
        BoundaryFace { nodes, element, normal, area }
    }
}

#[inline]
fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
fn cross(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[inline]
fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}
