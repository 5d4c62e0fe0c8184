//! Synthetic voxel geometries: channels, ducts, bead packs, and random
//! media for validation runs and benchmarks.

use crate::geometry::{Axis, MaterialMap, VoxelGrid};

/// Minimal deterministic generator for reproducible synthetic fixtures.
#[derive(Debug, Clone)]
pub struct Lcg(pub u64);

impl Lcg {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0
    }

    /// Uniform draw in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn below(&mut self, n: usize) -> usize {
        (self.next_u64() % n as u64) as usize
    }
}

/// Plane channel: solid plates normal to y, flow along z, `span` cells
/// across x (pair with free-slip external walls for a 2D problem).
pub fn channel_grid(span: usize, gap: usize, length: usize, voxel_size: f64) -> VoxelGrid {
    let dims = [span, gap + 2, length];
    let mut labels = vec![0u8; dims[0] * dims[1] * dims[2]];
    for z in 0..dims[2] {
        for x in 0..dims[0] {
            labels[x + dims[0] * (dims[1] * z)] = 1;
            labels[x + dims[0] * ((gap + 1) + dims[1] * z)] = 1;
        }
    }
    VoxelGrid::from_labels(dims, voxel_size, labels, Axis::Z, MaterialMap::uniform()).unwrap()
}

/// All-fluid box; with no-slip external walls this is a square duct of
/// side `n` cells.
pub fn duct_grid(n: usize, length: usize, voxel_size: f64) -> VoxelGrid {
    VoxelGrid::all_fluid([n, n, length], voxel_size, Axis::Z)
}

/// 1D column of fluid (1×1×n), flow along z.
pub fn column_grid(n: usize, voxel_size: f64) -> VoxelGrid {
    VoxelGrid::all_fluid([1, 1, n], voxel_size, Axis::Z)
}

/// Sealed box: fluid interior, solid slabs capping both ends of the flow
/// axis, so there is no inlet or outlet and no flow.
pub fn sealed_box(nx: usize, ny: usize, nz: usize, voxel_size: f64) -> VoxelGrid {
    let dims = [nx, ny, nz];
    let mut labels = vec![0u8; nx * ny * nz];
    for y in 0..ny {
        for x in 0..nx {
            labels[x + nx * y] = 1;
            labels[x + nx * (y + ny * (nz - 1))] = 1;
        }
    }
    VoxelGrid::from_labels(dims, voxel_size, labels, Axis::Z, MaterialMap::uniform()).unwrap()
}

/// Uncorrelated random solid labeling at the given solid fraction,
/// padded with fluid slabs at inlet and outlet.
pub fn random_grid(
    dims: [usize; 3],
    solid_fraction: f64,
    pad: usize,
    voxel_size: f64,
    seed: u64,
) -> VoxelGrid {
    let mut rng = Lcg(seed);
    let n = dims[0] * dims[1] * dims[2];
    let labels: Vec<u8> = (0..n)
        .map(|_| u8::from(rng.uniform() < solid_fraction))
        .collect();
    let grid =
        match VoxelGrid::from_labels(dims, voxel_size, labels, Axis::Z, MaterialMap::uniform()) {
            Ok(g) => g,
            Err(_) => VoxelGrid::all_fluid(dims, voxel_size, Axis::Z),
        };
    grid.pad_inlet_outlet(pad)
}

/// Bead pack: solid spheres on a jittered lattice inside an n³ box,
/// padded with fluid at inlet and outlet.
pub fn bead_pack(
    n: usize,
    beads_per_axis: usize,
    pad: usize,
    voxel_size: f64,
    seed: u64,
) -> VoxelGrid {
    let mut rng = Lcg(seed);
    let dims = [n, n, n];
    let mut labels = vec![0u8; n * n * n];
    let spacing = n as f64 / beads_per_axis as f64;
    let radius = spacing * 0.42;
    for bz in 0..beads_per_axis {
        for by in 0..beads_per_axis {
            for bx in 0..beads_per_axis {
                let cx = (bx as f64 + 0.5) * spacing + (rng.uniform() - 0.5) * spacing * 0.3;
                let cy = (by as f64 + 0.5) * spacing + (rng.uniform() - 0.5) * spacing * 0.3;
                let cz = (bz as f64 + 0.5) * spacing + (rng.uniform() - 0.5) * spacing * 0.3;
                let r2 = radius * radius;
                let lo = |c: f64| (c - radius).floor().max(0.0) as usize;
                let hi = |c: f64| ((c + radius).ceil() as usize).min(n - 1);
                for z in lo(cz)..=hi(cz) {
                    for y in lo(cy)..=hi(cy) {
                        for x in lo(cx)..=hi(cx) {
                            let d2 = (x as f64 + 0.5 - cx).powi(2)
                                + (y as f64 + 0.5 - cy).powi(2)
                                + (z as f64 + 0.5 - cz).powi(2);
                            if d2 < r2 {
                                labels[x + n * (y + n * z)] = 1;
                            }
                        }
                    }
                }
            }
        }
    }
    let grid = VoxelGrid::from_labels(dims, voxel_size, labels, Axis::Z, MaterialMap::uniform())
        .expect("bead pack keeps pore space");
    grid.pad_inlet_outlet(pad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builders_produce_expected_topology() {
        let ch = channel_grid(1, 4, 8, 1e-6);
        assert_eq!(ch.dims(), [1, 6, 8]);
        assert_eq!(ch.fluid_voxel_count(), 4 * 8);

        let sb = sealed_box(2, 2, 4, 1e-6);
        assert_eq!(sb.fluid_voxel_count(), 2 * 2 * 2);

        let bp = bead_pack(16, 2, 2, 1e-6, 11);
        assert_eq!(bp.dims(), [16, 16, 20]);
        let p = bp.porosity(true);
        assert!(p > 0.3 && p < 0.9, "porosity {p}");

        let rg = random_grid([6, 6, 6], 0.3, 1, 1e-6, 5);
        assert_eq!(rg.dims(), [6, 6, 8]);
    }

    #[test]
    fn lcg_is_reproducible() {
        let mut a = Lcg(9);
        let mut b = Lcg(9);
        for _ in 0..10 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }
}
