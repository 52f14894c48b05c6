//! Result files: JSON with round-trip float formatting and rectangular CSVs.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use pqlap_core::{HistoryRecord, Mesh, StateVector};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::error::CliError;

pub const RESULT_FILE: &str = "result.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const EIGENFUNCTION_FILE: &str = "eigenfunction.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const MESH_FILE: &str = "mesh.json";

/// 17 significant digits.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct RoundTrip<'a>(PrettyFormatter<'a>);

impl Formatter for RoundTrip<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTrip(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("serializing to memory");
    buf.push(b'\n');
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    fs::write(path, to_json_string(value)).map_err(|e| CliError::io(path, e))
}

/// Writes a header row and the records, checking every row has the header's width.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        assert_eq!(row.len(), header.len(), "CSV row width");
        w.write_record(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, io::Error::other(e))
}

pub fn write_history(path: &Path, history: &[HistoryRecord]) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = history
        .iter()
        .map(|h| vec![h.iteration.to_string(), format_float(h.value), format_float(h.residual)])
        .collect();
    write_csv(path, &["iter", "q_value", "residual"], &rows)
}

pub fn write_eigenfunction(path: &Path, mesh: &Mesh, z: &StateVector) -> Result<(), CliError> {
    let two_d = mesh.dim() == 2;
    let header: &[&str] = if two_d { &["vertex_index", "x", "y", "u", "v"] } else { &["vertex_index", "x", "u", "v"] };
    let rows: Vec<Vec<String>> = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let mut row = vec![i.to_string(), format_float(x[0])];
            if two_d {
                row.push(format_float(x[1]));
            }
            row.push(format_float(z.u[i]));
            row.push(format_float(z.v[i]));
            row
        })
        .collect();
    write_csv(path, header, &rows)
}

/// Debugging dump with fields `vertices`, `elements`, `boundary`.
pub fn mesh_json(mesh: &Mesh) -> Value {
    let vertices: Vec<Value> = mesh
        .vertices()
        .iter()
        .map(|x| if mesh.dim() == 2 { json!([x[0], x[1]]) } else { json!([x[0]]) })
        .collect();
    let elements: Vec<Vec<usize>> = mesh.elements().map(|e| e.to_vec()).collect();
    let boundary: Vec<usize> = (0..mesh.vertex_count()).filter(|&i| mesh.is_boundary(i)).collect();
    json!({ "vertices": vertices, "elements": elements, "boundary": boundary })
}

/// Seconds since the Unix epoch; the one field of `result.json` that varies
/// between identical runs.
pub fn timestamp() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
