//! Second variation of the regularized energy and a projected
//! conjugate-gradient solve used to precondition descent directions.

use crate::field::VectorField;
use crate::mesh::NodeClass;

/// Second variation of `(1/p) ∫ (ε + |∇u|²)^{p/2}` at a fixed field:
///
/// `⟨H X, Y⟩ = ∫ w ∇X : ∇Y + (p − 2) w₂ (∇u : ∇X)(∇u : ∇Y)`
///
/// with `w = (ε + |∇u|²)^{(p-2)/2}` and `w₂ = (ε + |∇u|²)^{(p-4)/2}`. It is
/// positive definite for `p > 1` once `w` is floored at `1e-10` of its
/// maximum. `shift` adds `shift · diag(H)`.
pub(crate) struct SecondVariation {
    dim: usize,
    nc: usize,
    /// Per element: `vol · w`, `vol · (p − 2) w₂`.
    coef: Vec<[f64; 2]>,
    /// Per element basis gradients, `(dim + 1) × dim`.
    grads: Vec<f64>,
    /// Per element `∇u`, `N × dim`.
    gu: Vec<f64>,
    diag: Vec<f64>,
    shift: f64,
}

impl SecondVariation {
    pub(crate) fn assemble(field: &VectorField, p: f64, eps: f64, shift: f64) -> Self {
        let mesh = field.mesh();
        let (dim, nc) = (mesh.dim(), field.components());
        let nv = dim + 1;
        let m = mesh.num_elements();
        let mut gu = vec![0.0; m * nc * dim];
        let mut coef = Vec::with_capacity(m);
        for e in 0..m {
            let g = &mut gu[e * nc * dim..(e + 1) * nc * dim];
            field.element_gradient(e, g);
            let s2 = eps + g.iter().map(|x| x * x).sum::<f64>();
            let w = s2.powf(0.5 * (p - 2.0));
            let w2 = if p == 2.0 || s2 == 0.0 { 0.0 } else { (p - 2.0) * w / s2 };
            coef.push([w, w2]);
        }
        let wmax = coef.iter().map(|c| c[0]).fold(0.0, f64::max);
        let floor = if wmax > 0.0 { 1e-10 * wmax } else { 1.0 };
        let mut grads = vec![0.0; m * nv * dim];
        let mut diag = vec![0.0; mesh.num_nodes() * nc];
        for e in 0..m {
            let geo = mesh.geometry(e);
            let c = &mut coef[e];
            // a floored w scales both terms
            let wf = c[0].max(floor);
            c[1] *= geo.volume * wf / c[0].max(f64::MIN_POSITIVE);
            c[0] = wf * geo.volume;
            let g = &gu[e * nc * dim..(e + 1) * nc * dim];
            for (a, &v) in mesh.simplex(e).iter().enumerate() {
                let ga = &geo.grads[a][..dim];
                grads[(e * nv + a) * dim..(e * nv + a + 1) * dim].copy_from_slice(ga);
                let gg: f64 = ga.iter().map(|x| x * x).sum();
                for comp in 0..nc {
                    let t: f64 = (0..dim).map(|d| g[comp * dim + d] * ga[d]).sum();
                    diag[v * nc + comp] += c[0] * gg + c[1] * t * t;
                }
            }
        }
        diag.iter_mut().for_each(|d| *d *= 1.0 + shift);
        SecondVariation { dim, nc, coef, grads, gu, diag, shift }
    }

    /// `y = H x` plus the diagonal shift.
    fn apply(&self, field: &VectorField, x: &[f64], y: &mut [f64]) {
        let mesh = field.mesh();
        let (dim, nc) = (self.dim, self.nc);
        let nv = dim + 1;
        let mut dx = vec![0.0; nc * dim];
        y.iter_mut().for_each(|v| *v = 0.0);
        for e in 0..mesh.num_elements() {
            let s = mesh.simplex(e);
            let gr = &self.grads[e * nv * dim..(e + 1) * nv * dim];
            let g = &self.gu[e * nc * dim..(e + 1) * nc * dim];
            dx.iter_mut().for_each(|t| *t = 0.0);
            for (a, &v) in s.iter().enumerate() {
                for comp in 0..nc {
                    let xv = x[v * nc + comp];
                    for d in 0..dim {
                        dx[comp * dim + d] += xv * gr[a * dim + d];
                    }
                }
            }
            let [c0, c1] = self.coef[e];
            let gdx: f64 = if c1 != 0.0 { g.iter().zip(dx.iter()).map(|(a, b)| a * b).sum() } else { 0.0 };
            for (a, &v) in s.iter().enumerate() {
                let ga = &gr[a * dim..(a + 1) * dim];
                for comp in 0..nc {
                    let mut acc = 0.0;
                    for d in 0..dim {
                        acc += (c0 * dx[comp * dim + d] + c1 * gdx * g[comp * dim + d]) * ga[d];
                    }
                    y[v * nc + comp] += acc;
                }
            }
        }
        if self.shift != 0.0 {
            let scale = self.shift / (1.0 + self.shift);
            for (i, d) in self.diag.iter().enumerate() {
                y[i] += scale * d * x[i];
            }
        }
    }
}

/// Projection onto admissible variations at `u`: zero on Dirichlet nodes,
/// tangent to the sphere at free-sphere nodes (`tangent == true`), untouched
/// elsewhere.
pub(crate) fn project(u: &VectorField, x: &mut [f64], tangent: bool) {
    let mesh = u.mesh();
    let nc = u.components();
    for (v, class) in mesh.node_class().iter().enumerate() {
        let xv = &mut x[v * nc..(v + 1) * nc];
        match class {
            NodeClass::Dirichlet => xv.iter_mut().for_each(|t| *t = 0.0),
            NodeClass::FreeSphere if tangent => {
                let q = u.value(v);
                let nq = crate::vecops::norm(q);
                if nq > 0.0 {
                    crate::energy::project_in_place(q, nq, xv);
                }
            }
            _ => {}
        }
    }
}

/// Approximately solves `P H P x = b` for `b` in the range of `P` with
/// Jacobi-preconditioned CG started from zero. Every iterate satisfies
/// `b · x > 0` unless `b = 0`, so `-x` is a descent direction whenever `b` is
/// a gradient.
pub(crate) fn projected_cg(
    k: &SecondVariation,
    u: &VectorField,
    b: &[f64],
    tangent: bool,
    rel_tol: f64,
    max_iters: usize,
) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let bnorm = crate::vecops::norm(b);
    if bnorm == 0.0 {
        return x;
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for (i, zi) in z.iter_mut().enumerate() {
            *zi = r[i] / k.diag[i];
        }
        project(u, z, tangent);
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut dir = z.clone();
    let mut rz = crate::vecops::dot(&r, &z);
    let mut ad = vec![0.0; n];
    for _ in 0..max_iters {
        k.apply(u, &dir, &mut ad);
        project(u, &mut ad, tangent);
        let dad = crate::vecops::dot(&dir, &ad);
        if !(dad > 0.0) {
            break;
        }
        let alpha = rz / dad;
        for i in 0..n {
            x[i] += alpha * dir[i];
            r[i] -= alpha * ad[i];
        }
        if crate::vecops::norm(&r) <= rel_tol * bnorm {
            break;
        }
        precond(&r, &mut z);
        let rz_new = crate::vecops::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            dir[i] = z[i] + beta * dir[i];
        }
    }
    x
}
