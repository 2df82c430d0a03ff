//! CSV, JSON and legacy VTK writers.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::dgspace::DgFunction;
use crate::error::Result;
use crate::mesh::Mesh;
use crate::scalar::{f, Real};

use super::adapt::StationaryStep;
use super::RunLog;

/// Writes `slabs.csv` and `summary.json` into `dir`.
pub fn write_run(log: &RunLog, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("slabs.csv"))?;
    for r in &log.rows {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut summary = serde_json::to_value(log)?;
    if let Some(obj) = summary.as_object_mut() {
        obj.remove("rows");
        obj.insert("effectivity".into(), serde_json::to_value(log.effectivity())?);
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)?)?;
    Ok(())
}

/// Writes the iterations of a stationary run as `steps.csv` and `summary.json`.
pub fn write_stationary(steps: &[StationaryStep], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("steps.csv"))?;
    for s in steps {
        w.serialize(s)?;
    }
    w.flush()?;
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&steps.last())?)?;
    Ok(())
}

fn quads<T: Real, W: Write>(w: &mut W, mesh: &Mesh<T>, title: &str) -> Result<()> {
    let n = mesh.num_cells();
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "{title}")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", 4 * n)?;
    for cell in 0..n {
        for p in mesh.corners(cell) {
            writeln!(w, "{} {} 0", f(p[0]), f(p[1]))?;
        }
    }
    writeln!(w, "CELLS {} {}", n, 5 * n)?;
    for cell in 0..n {
        let b = 4 * cell;
        writeln!(w, "4 {} {} {} {}", b, b + 1, b + 2, b + 3)?;
    }
    writeln!(w, "CELL_TYPES {n}")?;
    for _ in 0..n {
        writeln!(w, "9")?;
    }
    writeln!(w, "CELL_DATA {n}")?;
    writeln!(w, "SCALARS level int 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for cell in 0..n {
        writeln!(w, "{}", mesh.key(cell).level)?;
    }
    Ok(())
}

/// Legacy ASCII VTK of the mesh with the refinement level as cell data.
pub fn write_mesh_vtk<T: Real>(mesh: &Mesh<T>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    quads(&mut w, mesh, "mesh")?;
    w.flush()?;
    Ok(())
}

/// Legacy ASCII VTK of `u` sampled at the corners of every cell.
pub fn write_solution_vtk<T: Real>(u: &DgFunction<T>, path: &Path) -> Result<()> {
    let mesh = u.mesh();
    let mut w = BufWriter::new(File::create(path)?);
    quads(&mut w, mesh, "solution")?;
    writeln!(w, "POINT_DATA {}", 4 * mesh.num_cells())?;
    writeln!(w, "SCALARS u double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for cell in 0..mesh.num_cells() {
        for p in mesh.corners(cell) {
            writeln!(w, "{}", f(u.eval(cell, p)))?;
        }
    }
    w.flush()?;
    Ok(())
}
