//! VTU/PVD series and CSV iteration logs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::dkt::DeformationState;
use crate::energy::nodal_iso_violation;
use crate::error::{Error, Result};
use crate::flow::{FlowProblem, LogRow};
use crate::geom::V3;
use crate::mesh::TriMesh;
use crate::tangent_point::{assemble, TpRequest};

pub const CSV_HEADER: &str = "iter,E_h,E_bend,TP_h,delta_iso,dt_norm,wall_ms";

/// 17 significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_line(r: &LogRow) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        r.k,
        num(r.energy),
        num(r.bending),
        num(r.tp),
        num(r.delta_iso),
        num(r.dt_norm),
        num(r.wall_ms)
    )
}

pub fn write_csv(path: &Path, rows: &[LogRow]) -> Result<()> {
    let mut s = String::with_capacity(160 * (rows.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        s.push_str(&csv_line(r));
        s.push('\n');
    }
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

/// Parses a log written by [`write_csv`]; columns not stored in the file are left at zero.
pub fn read_csv(path: &Path) -> Result<Vec<LogRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |line: usize, msg: String| Error::Config { path: path.to_path_buf(), line, msg };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => return Err(bad(1, "missing CSV header".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 7 {
            return Err(bad(i + 1, format!("expected 7 columns, got {}", f.len())));
        }
        let p = |s: &str| s.parse::<f64>().map_err(|e| bad(i + 1, format!("{s}: {e}")));
        rows.push(LogRow {
            k: f[0].parse().map_err(|e| bad(i + 1, format!("{}: {e}", f[0])))?,
            energy: p(f[1])?,
            bending: p(f[2])?,
            tp: p(f[3])?,
            delta_iso: p(f[4])?,
            dt_norm: p(f[5])?,
            wall_ms: p(f[6])?,
            ..LogRow::default()
        });
    }
    Ok(rows)
}

/// Point data attached to every VTU frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameFields {
    pub tp_density: Vec<f64>,
    pub f_tp: Vec<V3<f64>>,
    pub iso_violation: Vec<f64>,
}

impl FrameFields {
    pub fn evaluate(problem: &FlowProblem<'_>, y: &DeformationState<f64>) -> Result<Self> {
        let n = y.n_nodes();
        let iso_violation = (0..n).map(|z| nodal_iso_violation(&y.coeffs, z)).collect();
        let mut fields = FrameFields { tp_density: vec![0.0; n], f_tp: vec![[0.0; 3]; n], iso_violation };
        if let Some(quad) = problem.quadrature(&y.coeffs)? {
            let req = TpRequest { gradient: false, density: true, force: true };
            match assemble(&quad, &y.coeffs, problem.tp.q, req) {
                Ok(a) => {
                    fields.tp_density = a.density;
                    fields.f_tp = a.force;
                }
                // coincident nodes: the fields are undefined, keep zeros
                Err(Error::Intersection(..)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(fields)
    }
}

fn data_array(out: &mut String, name: &str, comps: usize, values: impl Iterator<Item = f64>) {
    let _ = writeln!(out, "        <DataArray type=\"Float64\" Name=\"{name}\" NumberOfComponents=\"{comps}\" format=\"ascii\">");
    out.push_str("         ");
    for v in values {
        out.push(' ');
        out.push_str(&num(v));
    }
    out.push_str("\n        </DataArray>\n");
}

/// Deformed P1 surface as an ASCII unstructured grid.
pub fn vtu_string(mesh: &TriMesh<f64>, positions: &[V3<f64>], fields: &FrameFields) -> String {
    let (np, nc) = (positions.len(), mesh.n_triangles());
    let mut s = String::with_capacity(80 * np + 40 * nc);
    s.push_str("<?xml version=\"1.0\"?>\n<VTKFile type=\"UnstructuredGrid\" version=\"1.0\" byte_order=\"LittleEndian\">\n");
    s.push_str("  <UnstructuredGrid>\n");
    let _ = writeln!(s, "    <Piece NumberOfPoints=\"{np}\" NumberOfCells=\"{nc}\">");
    s.push_str("      <PointData Scalars=\"tp_density\" Vectors=\"f_tp\">\n");
    data_array(&mut s, "tp_density", 1, fields.tp_density.iter().copied());
    data_array(&mut s, "f_tp", 3, fields.f_tp.iter().flatten().copied());
    data_array(&mut s, "iso_violation", 1, fields.iso_violation.iter().copied());
    s.push_str("      </PointData>\n      <Points>\n");
    data_array(&mut s, "Points", 3, positions.iter().flatten().copied());
    s.push_str("      </Points>\n      <Cells>\n");
    s.push_str("        <DataArray type=\"Int64\" Name=\"connectivity\" format=\"ascii\">\n         ");
    for t in &mesh.triangles {
        let _ = write!(s, " {} {} {}", t[0], t[1], t[2]);
    }
    s.push_str("\n        </DataArray>\n        <DataArray type=\"Int64\" Name=\"offsets\" format=\"ascii\">\n         ");
    for i in 1..=nc {
        let _ = write!(s, " {}", 3 * i);
    }
    s.push_str("\n        </DataArray>\n        <DataArray type=\"UInt8\" Name=\"types\" format=\"ascii\">\n         ");
    for _ in 0..nc {
        s.push_str(" 5");
    }
    s.push_str("\n        </DataArray>\n      </Cells>\n    </Piece>\n  </UnstructuredGrid>\n</VTKFile>\n");
    s
}

pub fn write_vtu(path: &Path, mesh: &TriMesh<f64>, positions: &[V3<f64>], fields: &FrameFields) -> Result<()> {
    fs::write(path, vtu_string(mesh, positions, fields)).map_err(|e| Error::io(path, e))
}

/// Numbered VTU frames plus the `.pvd` collection indexing them by iteration.
#[derive(Debug, Clone)]
pub struct VtuSeries {
    pub dir: PathBuf,
    pub stem: String,
    pub frames: Vec<(usize, PathBuf)>,
}

impl VtuSeries {
    pub fn new(dir: &Path, stem: &str) -> Self {
        VtuSeries { dir: dir.to_path_buf(), stem: stem.to_string(), frames: Vec::new() }
    }

    pub fn push(&mut self, k: usize, mesh: &TriMesh<f64>, positions: &[V3<f64>], fields: &FrameFields) -> Result<PathBuf> {
        let path = self.dir.join(format!("{}_{k:07}.vtu", self.stem));
        write_vtu(&path, mesh, positions, fields)?;
        self.frames.push((k, path.clone()));
        Ok(path)
    }

    pub fn pvd_path(&self) -> PathBuf {
        self.dir.join(format!("{}.pvd", self.stem))
    }

    pub fn write_pvd(&self) -> Result<PathBuf> {
        let mut s = String::from("<?xml version=\"1.0\"?>\n<VTKFile type=\"Collection\" version=\"1.0\" byte_order=\"LittleEndian\">\n  <Collection>\n");
        for (k, p) in &self.frames {
            let file = p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
            let _ = writeln!(s, "    <DataSet timestep=\"{k}\" group=\"\" part=\"0\" file=\"{file}\"/>");
        }
        s.push_str("  </Collection>\n</VTKFile>\n");
        let path = self.pvd_path();
        fs::write(&path, s).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}
