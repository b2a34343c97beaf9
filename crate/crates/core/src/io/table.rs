use std::io::{Read, Write};
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::mesh::Mesh;
use crate::solver::TraceRecord;

/// `node,x1..xn,u1..uN`, one row per node.
pub fn write_field_csv<W: Write>(w: W, field: &VectorField) -> Result<()> {
    let mesh = field.mesh();
    let (n, nc) = (mesh.dim(), field.components());
    let mut wtr = csv::Writer::from_writer(w);
    let mut head = vec!["node".to_string()];
    head.extend((1..=n).map(|d| format!("x{d}")));
    head.extend((1..=nc).map(|c| format!("u{c}")));
    wtr.write_record(&head)?;
    let mut row = Vec::with_capacity(1 + n + nc);
    for v in 0..mesh.num_nodes() {
        row.clear();
        row.push(v.to_string());
        row.extend(mesh.vertex(v).iter().map(|x| x.to_string()));
        row.extend(field.value(v).iter().map(|x| x.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Reads a field written by [`write_field_csv`]. Rows must list every node once,
/// in any order, at coordinates matching the mesh to `1e-9·h`.
pub fn read_field_csv<R: Read>(r: R, mesh: Arc<Mesh>) -> Result<VectorField> {
    let mut rdr = csv::Reader::from_reader(r);
    let head = rdr.headers()?.clone();
    let n = mesh.dim();
    if head.len() <= 1 + n || head.get(0) != Some("node") {
        return Err(Error::Parse(format!("field CSV header {:?} does not start with node,x1..x{n}", head)));
    }
    let nc = head.len() - 1 - n;
    let nn = mesh.num_nodes();
    let mut values = vec![f64::NAN; nn * nc];
    let mut seen = vec![false; nn];
    let tol = 1e-9 * mesh.h();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            let t = rec.get(i).unwrap_or("");
            t.trim().parse().map_err(|_| Error::Parse(format!("bad number {t:?} in field CSV")))
        };
        let node: usize = rec[0].trim().parse().map_err(|_| Error::Parse(format!("bad node index {:?}", &rec[0])))?;
        if node >= nn {
            return Err(Error::IndexOutOfRange { index: node, len: nn });
        }
        if std::mem::replace(&mut seen[node], true) {
            return Err(Error::Parse(format!("node {node} listed twice")));
        }
        for d in 0..n {
            if (parse(1 + d)? - mesh.vertex(node)[d]).abs() > tol {
                return Err(Error::MeshMismatch);
            }
        }
        for c in 0..nc {
            values[node * nc + c] = parse(1 + n + c)?;
        }
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(Error::Parse(format!("node {missing} missing from field CSV")));
    }
    VectorField::new(mesh, nc, values)
}

/// `iter,eps,energy,residual_norm,step`.
pub fn write_trace_csv<W: Write>(w: W, trace: &[TraceRecord]) -> Result<()> {
    write_records_csv(w, trace)
}

/// Any flat serializable records, one row each, header from the field names.
pub fn write_records_csv<W: Write, T: Serialize>(w: W, rows: &[T]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
