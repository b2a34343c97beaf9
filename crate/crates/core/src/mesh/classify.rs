use super::{FaceClass, Mesh, NodeClass};
use crate::error::{Error, Result};
use crate::problem::{BoundaryPiece, ProblemSpec};

/// Node and boundary-face roles for one problem on one mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub node_class: Vec<NodeClass>,
    pub face_class: Vec<FaceClass>,
}

/// Assigns every boundary face to the free, Dirichlet or natural portion of
/// `spec` and derives node roles.
///
/// A face belongs to a portion when all its nodes lie on one of the portion's
/// pieces within `h/10`. Nodes touching a Dirichlet face are `Dirichlet`;
/// otherwise nodes touching a free face are `FreeSphere`; everything else is
/// `Interior`.
pub fn classify_boundary(mesh: &Mesh, spec: &ProblemSpec) -> Result<Classification> {
    spec.validate()?;
    if mesh.domain() != &spec.domain {
        return Err(Error::InvalidParameter("mesh was built for a different domain".into()));
    }
    let tol = mesh.h() / 10.0;
    let dim = mesh.dim();
    let domain = mesh.domain();
    let on_any = |pieces: &[BoundaryPiece], nodes: &[usize]| {
        pieces
            .iter()
            .any(|&pc| nodes.iter().all(|&v| domain.on_piece(pc, mesh.vertex(v), tol)))
    };
    let mut face_class = Vec::with_capacity(mesh.boundary_faces().len());
    for face in mesh.boundary_faces() {
        let nodes = &face.nodes[..dim];
        let class = if on_any(&spec.free, nodes) {
            FaceClass::Free
        } else if on_any(&spec.dirichlet, nodes) {
            FaceClass::Dirichlet
        } else if on_any(&spec.natural, nodes) {
            FaceClass::Natural
        } else {
            let node = nodes[0];
            return Err(Error::UnclassifiedBoundaryNode { node, point: mesh.vertex(node).to_vec() });
        };
        face_class.push(class);
    }
    let mut node_class = vec![NodeClass::Interior; mesh.num_nodes()];
    for (face, class) in mesh.boundary_faces().iter().zip(&face_class) {
        for &v in &face.nodes[..dim] {
            match (class, node_class[v]) {
                (FaceClass::Dirichlet, _) => node_class[v] = NodeClass::Dirichlet,
                (FaceClass::Free, NodeClass::Interior) => node_class[v] = NodeClass::FreeSphere,
                _ => {}
            }
        }
    }
    Ok(Classification { node_class, face_class })
}

impl Mesh {
    /// Builds the classification for `spec` and attaches it.
    pub fn classified(self, spec: &ProblemSpec) -> Result<Mesh> {
        let c = classify_boundary(&self, spec)?;
        self.with_classification(c)
    }
}
