//! File formats: ASCII legacy VTK and CSV.

mod table;
mod vtk;

pub use table::{read_field_csv, write_field_csv, write_records_csv, write_trace_csv};
pub use vtk::{read_vtk, write_point_set_vtk, VtkArray, VtkData, VtkWriter};
