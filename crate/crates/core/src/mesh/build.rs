use super::Mesh;
use crate::error::{Error, Result};
use crate::problem::Domain;

/// Node budget used by [`build_mesh`].
pub const DEFAULT_NODE_BUDGET: usize = 3_000_000;

/// Builds a conforming simplicial mesh with structured cells of side at most
/// `h`. See [`build_mesh_with_budget`].
pub fn build_mesh(domain: &Domain, h: f64) -> Result<Mesh> {
    build_mesh_with_budget(domain, h, DEFAULT_NODE_BUDGET)
}

/// Builds a mesh of `domain` with cell side at most `h`.
///
/// Boxes use a structured grid, two triangles per square (n = 2) or six Kuhn
/// tetrahedra per cube (n = 3). Balls and half balls are obtained from the
/// structured cube `[-R, R]ⁿ` (resp. `[-R, R]^{n-1} × [0, R]`) through the
/// radial map `x ↦ x ‖x‖_∞ / ‖x‖₂`, which sends cube faces onto the sphere and
/// keeps `{x_n = 0}` fixed.
pub fn build_mesh_with_budget(domain: &Domain, h: f64, max_nodes: usize) -> Result<Mesh> {
    domain.validate()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!("resolution h = {h} must be positive")));
    }
    let (lo, hi) = domain.bounding_box();
    let cells: Vec<usize> = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| (((b - a) / h) - 1e-9).ceil().max(1.0) as usize)
        .collect();
    let nodes: usize = cells.iter().map(|c| c + 1).product();
    if nodes > max_nodes {
        return Err(Error::NodeBudgetExceeded { nodes, budget: max_nodes });
    }
    let grid = StructuredGrid::new(&lo, &hi, &cells);
    let mut vertices = grid.vertices();
    if let Domain::Ball { radius, .. } | Domain::HalfBall { radius, .. } = domain {
        let dim = domain.dim();
        for x in vertices.chunks_mut(dim) {
            let inf = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let two = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if two > 0.0 {
                let s = inf / two;
                x.iter_mut().for_each(|v| *v *= s);
            }
            // snap the image of the cube surface exactly onto the sphere
            if (inf - radius).abs() <= 1e-12 * radius {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                x.iter_mut().for_each(|v| *v *= radius / r);
            }
        }
    }
    let simplices = grid.simplices();
    let hull = grid.hull_flags();
    Mesh::from_parts(domain.clone(), vertices, simplices, Some(&hull))
}

struct StructuredGrid {
    dim: usize,
    lower: Vec<f64>,
    step: Vec<f64>,
    cells: Vec<usize>,
}

impl StructuredGrid {
    fn new(lower: &[f64], upper: &[f64], cells: &[usize]) -> Self {
        let step = lower
            .iter()
            .zip(upper)
            .zip(cells)
            .map(|((a, b), c)| (b - a) / *c as f64)
            .collect();
        StructuredGrid { dim: lower.len(), lower: lower.to_vec(), step, cells: cells.to_vec() }
    }

    fn node_id(&self, idx: &[usize]) -> usize {
        let mut id = 0;
        for d in (0..self.dim).rev() {
            id = id * (self.cells[d] + 1) + idx[d];
        }
        id
    }

    fn for_each_index(&self, counts: &[usize], mut f: impl FnMut(&[usize])) {
        let mut idx = vec![0usize; self.dim];
        let total: usize = counts.iter().product();
        for _ in 0..total {
            f(&idx);
            for d in 0..self.dim {
                idx[d] += 1;
                if idx[d] < counts[d] {
                    break;
                }
                idx[d] = 0;
            }
        }
    }

    fn vertices(&self) -> Vec<f64> {
        let counts: Vec<usize> = self.cells.iter().map(|c| c + 1).collect();
        let mut out = Vec::with_capacity(counts.iter().product::<usize>() * self.dim);
        self.for_each_index(&counts, |idx| {
            for d in 0..self.dim {
                // exact end points avoid round-off on the boundary planes
                let x = if idx[d] == self.cells[d] {
                    self.lower[d] + self.step[d] * self.cells[d] as f64
                } else {
                    self.lower[d] + self.step[d] * idx[d] as f64
                };
                out.push(x);
            }
        });
        out
    }

    fn hull_flags(&self) -> Vec<bool> {
        let counts: Vec<usize> = self.cells.iter().map(|c| c + 1).collect();
        let mut out = Vec::new();
        self.for_each_index(&counts, |idx| {
            out.push((0..self.dim).any(|d| idx[d] == 0 || idx[d] == self.cells[d]));
        });
        out
    }

    fn simplices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if self.dim == 2 {
            self.for_each_index(&self.cells, |c| {
                let v00 = self.node_id(&[c[0], c[1]]);
                let v10 = self.node_id(&[c[0] + 1, c[1]]);
                let v11 = self.node_id(&[c[0] + 1, c[1] + 1]);
                let v01 = self.node_id(&[c[0], c[1] + 1]);
                out.extend_from_slice(&[v00, v10, v11, v00, v11, v01]);
            });
        } else {
            const PERMS: [([usize; 3], bool); 6] = [
                ([0, 1, 2], true),
                ([1, 2, 0], true),
                ([2, 0, 1], true),
                ([0, 2, 1], false),
                ([2, 1, 0], false),
                ([1, 0, 2], false),
            ];
            self.for_each_index(&self.cells, |c| {
                for (perm, even) in PERMS {
                    let mut idx = [c[0], c[1], c[2]];
                    let mut tet = [0usize; 4];
                    tet[0] = self.node_id(&idx);
                    for (k, &axis) in perm.iter().enumerate() {
                        idx[axis] += 1;
                        tet[k + 1] = self.node_id(&idx);
                    }
                    if !even {
                        tet.swap(2, 3);
                    }
                    out.extend_from_slice(&tet);
                }
            });
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vecops::dist;
    use std::f64::consts::PI;

    fn unit_square() -> Domain {
        Domain::Box { lower: vec![0.0, 0.0], upper: vec![1.0, 1.0] }
    }

    #[test]
    fn unit_square_counts() {
        let m = build_mesh(&unit_square(), 0.5).unwrap();
        assert_eq!((m.num_nodes(), m.num_elements()), (9, 8));
        let m = build_mesh(&unit_square(), 0.25).unwrap();
        assert_eq!((m.num_nodes(), m.num_elements()), (25, 32));
        assert!((m.total_volume() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn box_3d_volume_and_faces() {
        let d = Domain::Box { lower: vec![0.0; 3], upper: vec![1.0, 2.0, 1.0] };
        let m = build_mesh(&d, 0.5).unwrap();
        assert_eq!(m.num_elements(), 2 * 4 * 2 * 6);
        assert!((m.total_volume() - 2.0).abs() < 1e-13);
        let area: f64 = m.boundary_faces().iter().map(|f| f.area).sum();
        assert!((area - 10.0).abs() < 1e-12);
        // each boundary face belongs to exactly one simplex and points outward
        for f in m.boundary_faces() {
            let s = m.simplex(f.element);
            assert!(f.nodes.iter().take(3).all(|v| s.contains(v)));
            let b = m.barycenter(f.element);
            let a = m.vertex(f.nodes[0]);
            let out: f64 = (0..3).map(|k| (a[k] - b[k]) * f.normal[k]).sum();
            assert!(out > 0.0);
        }
    }

    #[test]
    fn half_ball_curved_length() {
        let d = Domain::HalfBall { dim: 2, radius: 1.0 };
        let m = build_mesh(&d, 0.1).unwrap();
        let curved: f64 = m
            .boundary_faces()
            .iter()
            .filter(|f| m.vertex(f.nodes[0])[1].abs() > 1e-12 || m.vertex(f.nodes[1])[1].abs() > 1e-12)
            .map(|f| f.area)
            .sum();
        // oracle: analytic semicircle length
        assert!((curved - PI).abs() / PI < 0.01, "curved length {curved}");
        // polygonal faces stay within h²/R of the sphere
        let h = m.h();
        for f in m.boundary_faces() {
            let a = m.vertex(f.nodes[0]);
            let b = m.vertex(f.nodes[1]);
            let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
            if mid[1] > 1e-12 {
                assert!((1.0 - dist(&mid, &[0.0, 0.0])).abs() <= h * h);
            }
        }
        // the flat part lies exactly on x_n = 0
        let flat: f64 = m
            .boundary_faces()
            .iter()
            .filter(|f| m.vertex(f.nodes[0])[1] == 0.0 && m.vertex(f.nodes[1])[1] == 0.0)
            .map(|f| f.area)
            .sum();
        assert!((flat - 2.0).abs() < 1e-12);
        assert!((m.total_volume() - PI / 2.0).abs() < 0.01);
    }

    #[test]
    fn half_ball_3d_is_valid() {
        let d = Domain::HalfBall { dim: 3, radius: 1.0 };
        let m = build_mesh(&d, 0.125).unwrap();
        let exact = 2.0 * PI / 3.0;
        assert!((m.total_volume() - exact).abs() / exact < 0.03);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            build_mesh(&Domain::Box { lower: vec![0.0, 0.0], upper: vec![0.0, 1.0] }, 0.1),
            Err(Error::DegenerateDomain(_))
        ));
        assert!(matches!(build_mesh(&unit_square(), 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            build_mesh_with_budget(&unit_square(), 0.01, 100),
            Err(Error::NodeBudgetExceeded { .. })
        ));
    }
}
