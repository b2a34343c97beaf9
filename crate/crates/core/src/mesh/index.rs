use super::Mesh;

/// Uniform bucket grid over element barycenters.
#[derive(Debug)]
pub(super) struct BarycenterIndex {
    dim: usize,
    lower: [f64; 3],
    cell: [f64; 3],
    bins: [usize; 3],
    start: Vec<usize>,
    items: Vec<usize>,
    barycenters: Vec<f64>,
}

impl BarycenterIndex {
    pub(super) fn new(mesh: &Mesh) -> Self {
        let dim = mesh.dim();
        let m = mesh.num_elements();
        let mut barycenters = Vec::with_capacity(m * dim);
        let mut lower = [f64::INFINITY; 3];
        let mut upper = [f64::NEG_INFINITY; 3];
        for e in 0..m {
            let b = mesh.barycenter(e);
            for d in 0..dim {
                barycenters.push(b[d]);
                lower[d] = lower[d].min(b[d]);
                upper[d] = upper[d].max(b[d]);
            }
        }
        let per_axis = ((m as f64 / 4.0).powf(1.0 / dim as f64).ceil() as usize).max(1);
        let mut bins = [1usize; 3];
        let mut cell = [1.0; 3];
        for d in 0..dim {
            bins[d] = per_axis;
            let extent = (upper[d] - lower[d]).max(1e-300);
            cell[d] = extent / per_axis as f64;
        }
        let total: usize = bins.iter().product();
        let mut count = vec![0usize; total + 1];
        let mut owner = Vec::with_capacity(m);
        for e in 0..m {
            let b = &barycenters[e * dim..(e + 1) * dim];
            let mut flat = 0;
            for d in (0..dim).rev() {
                let k = (((b[d] - lower[d]) / cell[d]) as usize).min(bins[d] - 1);
                flat = flat * bins[d] + k;
            }
            owner.push(flat);
            count[flat + 1] += 1;
        }
        for i in 0..total {
            count[i + 1] += count[i];
        }
        let start = count.clone();
        let mut fill = count;
        let mut items = vec![0; m];
        for (e, &flat) in owner.iter().enumerate() {
            items[fill[flat]] = e;
            fill[flat] += 1;
        }
        BarycenterIndex { dim, lower, cell, bins, start, items, barycenters }
    }

    /// Sorted ids of elements with barycenter strictly inside `B(x0, r)`.
    pub(super) fn query_ball(&self, x0: &[f64], r: f64) -> Vec<usize> {
        let dim = self.dim;
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for d in 0..dim {
            let a = ((x0[d] - r - self.lower[d]) / self.cell[d]).floor();
            let b = ((x0[d] + r - self.lower[d]) / self.cell[d]).floor();
            if b < 0.0 || a > (self.bins[d] - 1) as f64 {
                return Vec::new();
            }
            lo[d] = a.max(0.0) as usize;
            hi[d] = (b as usize).min(self.bins[d] - 1);
        }
        let r2 = r * r;
        let mut out = Vec::new();
        let (k_lo, k_hi) = if dim == 3 { (lo[2], hi[2]) } else { (0, 0) };
        for k in k_lo..=k_hi {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let flat = i + self.bins[0] * (j + self.bins[1] * k);
                    for &e in &self.items[self.start[flat]..self.start[flat + 1]] {
                        let b = &self.barycenters[e * dim..(e + 1) * dim];
                        let d2: f64 = b.iter().zip(x0).map(|(p, q)| (p - q) * (p - q)).sum();
                        if d2 < r2 {
                            out.push(e);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}
