use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use crate::error::{Error, Result};
use crate::field::VectorField;
use crate::mesh::Mesh;

const VTK_VERTEX: u8 = 1;
const VTK_TRIANGLE: u8 = 5;
const VTK_TETRA: u8 = 10;

/// A named data array attached to points or cells.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkArray {
    pub components: usize,
    pub values: Vec<f64>,
}

/// Unstructured grid writer. Arrays with one component go out as `SCALARS`,
/// two or three as `VECTORS` (zero padded), wider ones as `FIELD` arrays.
pub struct VtkWriter<'a> {
    mesh: &'a Mesh,
    title: String,
    point_data: Vec<(String, VtkArray)>,
    cell_data: Vec<(String, VtkArray)>,
}

impl<'a> VtkWriter<'a> {
    pub fn new(mesh: &'a Mesh, title: &str) -> Self {
        VtkWriter { mesh, title: title.replace('\n', " "), point_data: Vec::new(), cell_data: Vec::new() }
    }

    pub fn point_field(self, name: &str, field: &VectorField) -> Result<Self> {
        if field.mesh().num_nodes() != self.mesh.num_nodes() {
            return Err(Error::MeshMismatch);
        }
        self.point_array(name, field.components(), field.values().to_vec())
    }

    pub fn point_array(mut self, name: &str, components: usize, values: Vec<f64>) -> Result<Self> {
        check_array(name, components, &values, self.mesh.num_nodes())?;
        self.point_data.push((name.to_string(), VtkArray { components, values }));
        Ok(self)
    }

    pub fn cell_array(mut self, name: &str, components: usize, values: Vec<f64>) -> Result<Self> {
        check_array(name, components, &values, self.mesh.num_elements())?;
        self.cell_data.push((name.to_string(), VtkArray { components, values }));
        Ok(self)
    }

    pub fn to_text(&self) -> String {
        let mesh = self.mesh;
        let n = mesh.dim();
        let mut s = String::new();
        header(&mut s, &self.title);
        points(&mut s, mesh.num_nodes(), |i| mesh.vertex(i));
        let ne = mesh.num_elements();
        let _ = writeln!(s, "CELLS {} {}", ne, ne * (n + 2));
        for e in 0..ne {
            let _ = write!(s, "{}", n + 1);
            for v in mesh.simplex(e) {
                let _ = write!(s, " {v}");
            }
            s.push('\n');
        }
        let kind = if n == 2 { VTK_TRIANGLE } else { VTK_TETRA };
        let _ = writeln!(s, "CELL_TYPES {ne}");
        for _ in 0..ne {
            let _ = writeln!(s, "{kind}");
        }
        data_section(&mut s, "POINT_DATA", mesh.num_nodes(), &self.point_data);
        data_section(&mut s, "CELL_DATA", ne, &self.cell_data);
        s
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }
}

/// A cloud of points as `VTK_VERTEX` cells, with optional per-point scalars.
pub fn write_point_set_vtk<W: Write>(
    mut w: W,
    title: &str,
    pts: &[Vec<f64>],
    scalars: Option<(&str, &[f64])>,
) -> Result<()> {
    let mut s = String::new();
    header(&mut s, title);
    points(&mut s, pts.len(), |i| &pts[i]);
    let _ = writeln!(s, "CELLS {} {}", pts.len(), 2 * pts.len());
    for i in 0..pts.len() {
        let _ = writeln!(s, "1 {i}");
    }
    let _ = writeln!(s, "CELL_TYPES {}", pts.len());
    for _ in 0..pts.len() {
        let _ = writeln!(s, "{VTK_VERTEX}");
    }
    if let Some((name, vals)) = scalars {
        check_array(name, 1, vals, pts.len())?;
        let arr = vec![(name.to_string(), VtkArray { components: 1, values: vals.to_vec() })];
        data_section(&mut s, "POINT_DATA", pts.len(), &arr);
    }
    w.write_all(s.as_bytes())?;
    Ok(())
}

fn check_array(name: &str, components: usize, values: &[f64], count: usize) -> Result<()> {
    if name.is_empty() || name.contains(char::is_whitespace) {
        return Err(Error::InvalidParameter(format!("VTK array name {name:?} must be a single word")));
    }
    if components == 0 {
        return Err(Error::InvalidParameter("VTK array needs at least one component".into()));
    }
    if values.len() != components * count {
        return Err(Error::LengthMismatch { expected: components * count, got: values.len() });
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i / components));
    }
    Ok(())
}

fn header(s: &mut String, title: &str) {
    s.push_str("# vtk DataFile Version 3.0\n");
    s.push_str(if title.is_empty() { "freeharm" } else { title });
    s.push_str("\nASCII\nDATASET UNSTRUCTURED_GRID\n");
}

fn points<'p>(s: &mut String, count: usize, coords: impl Fn(usize) -> &'p [f64]) {
    let _ = writeln!(s, "POINTS {count} double");
    for i in 0..count {
        let x = coords(i);
        for d in 0..3 {
            let _ = write!(s, "{}{}", if d > 0 { " " } else { "" }, x.get(d).copied().unwrap_or(0.0));
        }
        s.push('\n');
    }
}

fn data_section(s: &mut String, label: &str, count: usize, arrays: &[(String, VtkArray)]) {
    if arrays.is_empty() {
        return;
    }
    let _ = writeln!(s, "{label} {count}");
    let wide: Vec<&(String, VtkArray)> = arrays.iter().filter(|(_, a)| a.components > 3).collect();
    for (name, a) in arrays.iter().filter(|(_, a)| a.components <= 3) {
        if a.components == 1 {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for v in &a.values {
                let _ = writeln!(s, "{v}");
            }
        } else {
            let _ = writeln!(s, "VECTORS {name} double");
            for row in a.values.chunks(a.components) {
                for d in 0..3 {
                    let _ = write!(s, "{}{}", if d > 0 { " " } else { "" }, row.get(d).copied().unwrap_or(0.0));
                }
                s.push('\n');
            }
        }
    }
    if !wide.is_empty() {
        let _ = writeln!(s, "FIELD FieldData {}", wide.len());
        for (name, a) in wide {
            let _ = writeln!(s, "{name} {} {count} double", a.components);
            for row in a.values.chunks(a.components) {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                let _ = writeln!(s, "{}", line.join(" "));
            }
        }
    }
}

/// Parsed contents of an ASCII legacy VTK unstructured grid. Points keep all
/// three coordinates; `VECTORS` arrays keep their three padded components.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VtkData {
    pub title: String,
    pub points: Vec<[f64; 3]>,
    pub cells: Vec<Vec<usize>>,
    pub cell_types: Vec<u8>,
    pub point_data: BTreeMap<String, VtkArray>,
    pub cell_data: BTreeMap<String, VtkArray>,
}

/// Reads the subset of the legacy format produced by [`VtkWriter`].
pub fn read_vtk(text: &str) -> Result<VtkData> {
    let mut lines = text.lines();
    let bad = |m: &str| Error::Parse(format!("VTK: {m}"));
    if !lines.next().is_some_and(|l| l.starts_with("# vtk DataFile")) {
        return Err(bad("missing version line"));
    }
    let title = lines.next().ok_or_else(|| bad("missing title"))?.to_string();
    if lines.next().map(str::trim) != Some("ASCII") {
        return Err(bad("only ASCII files are supported"));
    }
    if lines.next().map(str::trim) != Some("DATASET UNSTRUCTURED_GRID") {
        return Err(bad("expected DATASET UNSTRUCTURED_GRID"));
    }
    let mut tok = lines.flat_map(str::split_whitespace);
    let mut next = || tok.next().ok_or_else(|| bad("unexpected end of file"));
    fn num<T: std::str::FromStr>(t: &str) -> Result<T> {
        t.parse().map_err(|_| Error::Parse(format!("VTK: bad number {t:?}")))
    }
    let mut out = VtkData { title, ..VtkData::default() };
    let mut section: Option<(bool, usize)> = None;
    loop {
        let key = match next() {
            Ok(k) => k,
            Err(_) => break,
        };
        match key {
            "POINTS" => {
                let count: usize = num(next()?)?;
                next()?;
                for _ in 0..count {
                    out.points.push([num(next()?)?, num(next()?)?, num(next()?)?]);
                }
            }
            "CELLS" => {
                let count: usize = num(next()?)?;
                next()?;
                for _ in 0..count {
                    let k: usize = num(next()?)?;
                    let cell = (0..k).map(|_| num(next()?)).collect::<Result<Vec<usize>>>()?;
                    out.cells.push(cell);
                }
            }
            "CELL_TYPES" => {
                let count: usize = num(next()?)?;
                for _ in 0..count {
                    out.cell_types.push(num(next()?)?);
                }
            }
            "POINT_DATA" | "CELL_DATA" => section = Some((key == "POINT_DATA", num(next()?)?)),
            "SCALARS" | "VECTORS" | "FIELD" => {
                let (is_point, count) = section.ok_or_else(|| bad("data array outside a data section"))?;
                let mut arrays = Vec::new();
                match key {
                    "SCALARS" => {
                        let name = next()?.to_string();
                        next()?;
                        let comps: usize = num(next()?)?;
                        if next()? != "LOOKUP_TABLE" {
                            return Err(bad("expected LOOKUP_TABLE"));
                        }
                        next()?;
                        arrays.push((name, comps));
                    }
                    "VECTORS" => {
                        let name = next()?.to_string();
                        next()?;
                        arrays.push((name, 3));
                    }
                    _ => {
                        next()?;
                        let k: usize = num(next()?)?;
                        for _ in 0..k {
                            let name = next()?.to_string();
                            let comps: usize = num(next()?)?;
                            let tuples: usize = num(next()?)?;
                            next()?;
                            if tuples != count {
                                return Err(bad("FIELD array length disagrees with section"));
                            }
                            let values = (0..comps * tuples).map(|_| num(next()?)).collect::<Result<Vec<f64>>>()?;
                            let dst = if is_point { &mut out.point_data } else { &mut out.cell_data };
                            dst.insert(name, VtkArray { components: comps, values });
                        }
                        continue;
                    }
                }
                for (name, comps) in arrays {
                    let values = (0..comps * count).map(|_| num(next()?)).collect::<Result<Vec<f64>>>()?;
                    let dst = if is_point { &mut out.point_data } else { &mut out.cell_data };
                    dst.insert(name, VtkArray { components: comps, values });
                }
            }
            other => return Err(bad(&format!("unknown keyword {other:?}"))),
        }
    }
    if out.cells.len() != out.cell_types.len() {
        return Err(bad("CELLS and CELL_TYPES counts differ"));
    }
    Ok(out)
}
