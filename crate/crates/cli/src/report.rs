//! CSV and manifest writers. All output is plain ASCII with fixed float
//! formatting; two runs of the same configuration produce byte-identical
//! files.

use std::io::{BufWriter, Write};
use std::path::Path;

use porevox_core::dimensionless::{DimensionlessGroups, FieldKind};
use porevox_core::geometry::{FaceIndex, VoxelGrid};
use porevox_core::transport::BudgetRow;

use sha2::{Digest, Sha256};

fn fmt(v: f64) -> String {
    format!("{v:.12e}")
}

/// `step,t_hat,dissolved,adsorbed,influx,outflux` per transport step.
pub fn write_budget_csv(path: &Path, rows: &[BudgetRow]) -> std::io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "step,t_hat,dissolved,adsorbed,influx,outflux")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.step,
            fmt(r.t_hat),
            fmt(r.dissolved),
            fmt(r.adsorbed),
            fmt(r.influx),
            fmt(r.outflux)
        )?;
    }
    w.flush()
}

/// `step,residual` history of the steady-flow march.
pub fn write_residual_csv(path: &Path, history: &[f64]) -> std::io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "step,residual")?;
    for (i, r) in history.iter().enumerate() {
        writeln!(w, "{},{}", i + 1, fmt(*r))?;
    }
    w.flush()
}

/// One row per reactive face: face-center coordinates in meters, outward
/// normal, kinetics class, and the adsorbed concentration in both forms.
pub fn write_surface_csv(
    path: &Path,
    grid: &VoxelGrid,
    index: &FaceIndex,
    m_hat: &[f64],
    groups: &DimensionlessGroups,
) -> std::io::Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "x,y,z,normal,boundary_type,m_hat,m_dimensional")?;
    let h = grid.voxel_size();
    for (face, m) in index.faces().iter().zip(m_hat) {
        let p = grid.voxel_coords(index.voxel_of_cell(face.fluid_cell));
        let mut center = [0.0_f64; 3];
        for a in 0..3 {
            center[a] = (p[a] as f64 + 0.5) * h;
        }
        let off = face.direction.offset();
        for a in 0..3 {
            center[a] += 0.5 * h * off[a] as f64;
        }
        let m_dim = groups.redimensionalize(FieldKind::SurfaceConcentration, *m);
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt(center[0]),
            fmt(center[1]),
            fmt(center[2]),
            face.direction,
            face.boundary_type,
            fmt(*m),
            fmt(m_dim)
        )?;
    }
    w.flush()
}

/// Content hash of a file (sha256 over the raw bytes).
pub fn file_sha256(path: &Path) -> std::io::Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    Ok(out)
}

/// Sorted `key=value` manifest of everything the run resolved.
pub fn write_manifest(path: &Path, entries: &[(String, String)]) -> std::io::Result<()> {
    let mut sorted: Vec<&(String, String)> = entries.iter().collect();
    sorted.sort();
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    for (k, v) in sorted {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()
}
