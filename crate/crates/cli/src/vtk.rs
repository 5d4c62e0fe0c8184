//! Legacy VTK STRUCTURED_POINTS writer (ASCII) for cell-centered fields.
//! Numbers are printed with 9 significant digits so repeated runs are
//! byte-identical.

use std::io::{BufWriter, Write};
use std::path::Path;

use porevox_core::geometry::VoxelGrid;

/// Optional per-voxel field blocks; arrays are x-fastest over all voxels.
#[derive(Debug, Default, Clone)]
pub struct VtkFields {
    pub pressure: Option<Vec<f64>>,
    pub velocity: Option<Vec<[f64; 3]>>,
    pub concentration: Option<Vec<f64>>,
    /// Adsorbed surface load per cell volume, Σ m̂·δx̂²/δx̂³.
    pub adsorbed: Option<Vec<f64>>,
    pub material: bool,
}

fn fmt9(v: f64) -> String {
    format!("{v:.8e}")
}

pub fn write_vtk(path: &Path, grid: &VoxelGrid, fields: &VtkFields) -> std::io::Result<()> {
    let [nx, ny, nz] = grid.dims();
    let n = nx * ny * nz;
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "porevox cell fields")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} {}", nx + 1, ny + 1, nz + 1)?;
    let s = fmt9(grid.voxel_size());
    writeln!(w, "SPACING {s} {s} {s}")?;
    writeln!(w, "ORIGIN 0 0 0")?;
    writeln!(w, "CELL_DATA {n}")?;
    if let Some(p) = &fields.pressure {
        assert_eq!(p.len(), n);
        writeln!(w, "SCALARS pressure double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in p {
            writeln!(w, "{}", fmt9(*v))?;
        }
    }
    if let Some(vel) = &fields.velocity {
        assert_eq!(vel.len(), n);
        writeln!(w, "VECTORS velocity double")?;
        for v in vel {
            writeln!(w, "{} {} {}", fmt9(v[0]), fmt9(v[1]), fmt9(v[2]))?;
        }
    }
    if let Some(c) = &fields.concentration {
        assert_eq!(c.len(), n);
        writeln!(w, "SCALARS concentration double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in c {
            writeln!(w, "{}", fmt9(*v))?;
        }
    }
    if fields.material {
        writeln!(w, "SCALARS material int 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in grid.labels() {
            writeln!(w, "{v}")?;
        }
    }
    if let Some(m) = &fields.adsorbed {
        assert_eq!(m.len(), n);
        writeln!(w, "SCALARS adsorbed double 1")?;
        writeln!(w, "LOOKUP_TABLE default")?;
        for v in m {
            writeln!(w, "{}", fmt9(*v))?;
        }
    }
    w.flush()
}
