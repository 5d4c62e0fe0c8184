//! Voxelized porous geometry: loading, padding, and face classification.
//!
//! A geometry is a structured grid of cubic voxels, each either fluid
//! (material code 0) or solid (codes 1..=255). Flow enters through the
//! first slab of voxels along the flow axis and leaves through the last;
//! every fluid/solid interface face is a potential reaction site whose
//! kinetics class is looked up from the solid voxel's material code.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use thiserror::Error;

/// Material code of fluid voxels; everything else is solid.
pub const FLUID: u8 = 0;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("i/o error reading geometry: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad geometry header: {0}")]
    Header(String),
    #[error("truncated payload: expected {expected} voxel bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("geometry contains no fluid voxels")]
    NoFluid,
    #[error("voxel size must be positive, got {0}")]
    BadVoxelSize(f64),
    #[error("dimensions must be nonzero, got {0}x{1}x{2}")]
    BadDims(usize, usize, usize),
}

/// Coordinate axis of the structured grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    pub fn from_index(i: usize) -> Axis {
        Self::ALL[i]
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::X => write!(f, "x"),
            Axis::Y => write!(f, "y"),
            Axis::Z => write!(f, "z"),
        }
    }
}

/// Oriented voxel face direction (outward normal from the owning cell).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FaceDir {
    XNeg,
    XPos,
    YNeg,
    YPos,
    ZNeg,
    ZPos,
}

impl FaceDir {
    pub const ALL: [FaceDir; 6] = [
        FaceDir::XNeg,
        FaceDir::XPos,
        FaceDir::YNeg,
        FaceDir::YPos,
        FaceDir::ZNeg,
        FaceDir::ZPos,
    ];

    pub fn axis(self) -> Axis {
        match self {
            FaceDir::XNeg | FaceDir::XPos => Axis::X,
            FaceDir::YNeg | FaceDir::YPos => Axis::Y,
            FaceDir::ZNeg | FaceDir::ZPos => Axis::Z,
        }
    }

    pub fn is_positive(self) -> bool {
        matches!(self, FaceDir::XPos | FaceDir::YPos | FaceDir::ZPos)
    }

    /// Signed unit offset to the neighboring voxel.
    pub fn offset(self) -> [isize; 3] {
        match self {
            FaceDir::XNeg => [-1, 0, 0],
            FaceDir::XPos => [1, 0, 0],
            FaceDir::YNeg => [0, -1, 0],
            FaceDir::YPos => [0, 1, 0],
            FaceDir::ZNeg => [0, 0, -1],
            FaceDir::ZPos => [0, 0, 1],
        }
    }

    pub fn opposite(self) -> FaceDir {
        match self {
            FaceDir::XNeg => FaceDir::XPos,
            FaceDir::XPos => FaceDir::XNeg,
            FaceDir::YNeg => FaceDir::YPos,
            FaceDir::YPos => FaceDir::YNeg,
            FaceDir::ZNeg => FaceDir::ZPos,
            FaceDir::ZPos => FaceDir::ZNeg,
        }
    }

    pub fn from_axis_sign(axis: Axis, positive: bool) -> FaceDir {
        match (axis, positive) {
            (Axis::X, false) => FaceDir::XNeg,
            (Axis::X, true) => FaceDir::XPos,
            (Axis::Y, false) => FaceDir::YNeg,
            (Axis::Y, true) => FaceDir::YPos,
            (Axis::Z, false) => FaceDir::ZNeg,
            (Axis::Z, true) => FaceDir::ZPos,
        }
    }
}

impl fmt::Display for FaceDir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            FaceDir::XNeg => "-x",
            FaceDir::XPos => "+x",
            FaceDir::YNeg => "-y",
            FaceDir::YPos => "+y",
            FaceDir::ZNeg => "-z",
            FaceDir::ZPos => "+z",
        };
        write!(f, "{s}")
    }
}

/// Maps solid material codes to kinetics/boundary classes.
///
/// Class indices are dense (`0..n_classes`); codes not listed fall back to
/// `default_class`.
#[derive(Debug, Clone)]
pub struct MaterialMap {
    class_of: BTreeMap<u8, usize>,
    default_class: usize,
    n_classes: usize,
}

impl MaterialMap {
    pub fn new(class_of: BTreeMap<u8, usize>, default_class: usize, n_classes: usize) -> Self {
        assert!(n_classes > 0, "at least one boundary class required");
        assert!(default_class < n_classes);
        for &c in class_of.values() {
            assert!(c < n_classes);
        }
        MaterialMap {
            class_of,
            default_class,
            n_classes,
        }
    }

    /// Single class shared by every solid code.
    pub fn uniform() -> Self {
        MaterialMap {
            class_of: BTreeMap::new(),
            default_class: 0,
            n_classes: 1,
        }
    }

    pub fn class_of(&self, code: u8) -> usize {
        *self.class_of.get(&code).unwrap_or(&self.default_class)
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn default_class(&self) -> usize {
        self.default_class
    }

    pub fn entries(&self) -> impl Iterator<Item = (u8, usize)> + '_ {
        self.class_of.iter().map(|(&k, &v)| (k, v))
    }
}

impl Default for MaterialMap {
    fn default() -> Self {
        MaterialMap::uniform()
    }
}

/// Labeled voxel grid with padding metadata.
///
/// Voxels are stored x-fastest: `index = x + nx*(y + ny*z)`.
#[derive(Debug, Clone)]
pub struct VoxelGrid {
    dims: [usize; 3],
    voxel_size: f64,
    labels: Vec<u8>,
    /// (inlet_layers, outlet_layers) added along the flow axis.
    padding: (usize, usize),
    flow_axis: Axis,
    materials: MaterialMap,
}

impl VoxelGrid {
    pub fn from_labels(
        dims: [usize; 3],
        voxel_size: f64,
        labels: Vec<u8>,
        flow_axis: Axis,
        materials: MaterialMap,
    ) -> Result<Self, GeometryError> {
        let [nx, ny, nz] = dims;
        if nx == 0 || ny == 0 || nz == 0 {
            return Err(GeometryError::BadDims(nx, ny, nz));
        }
        if !(voxel_size > 0.0) {
            return Err(GeometryError::BadVoxelSize(voxel_size));
        }
        let expected = nx * ny * nz;
        if labels.len() != expected {
            return Err(GeometryError::Truncated {
                expected,
                found: labels.len(),
            });
        }
        if !labels.iter().any(|&m| m == FLUID) {
            return Err(GeometryError::NoFluid);
        }
        Ok(VoxelGrid {
            dims,
            voxel_size,
            labels,
            padding: (0, 0),
            flow_axis,
            materials,
        })
    }

    /// All-fluid grid, useful for synthetic domains.
    pub fn all_fluid(dims: [usize; 3], voxel_size: f64, flow_axis: Axis) -> Self {
        let n = dims[0] * dims[1] * dims[2];
        VoxelGrid::from_labels(dims, voxel_size, vec![FLUID; n], flow_axis, MaterialMap::uniform())
            .expect("all-fluid grid is always valid")
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn flow_axis(&self) -> Axis {
        self.flow_axis
    }

    pub fn padding(&self) -> (usize, usize) {
        self.padding
    }

    pub fn materials(&self) -> &MaterialMap {
        &self.materials
    }

    pub fn set_materials(&mut self, materials: MaterialMap) {
        self.materials = materials;
    }

    pub fn n_voxels(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn set_label(&mut self, p: [usize; 3], code: u8) {
        let i = self.voxel_index(p);
        self.labels[i] = code;
    }

    #[inline]
    pub fn voxel_index(&self, [x, y, z]: [usize; 3]) -> usize {
        debug_assert!(x < self.dims[0] && y < self.dims[1] && z < self.dims[2]);
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn voxel_coords(&self, index: usize) -> [usize; 3] {
        let nx = self.dims[0];
        let ny = self.dims[1];
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    #[inline]
    pub fn label(&self, p: [usize; 3]) -> u8 {
        self.labels[self.voxel_index(p)]
    }

    #[inline]
    pub fn is_fluid(&self, p: [usize; 3]) -> bool {
        self.label(p) == FLUID
    }

    /// Neighbor coordinates in `dir`, or `None` at the domain boundary.
    #[inline]
    pub fn neighbor(&self, p: [usize; 3], dir: FaceDir) -> Option<[usize; 3]> {
        let off = dir.offset();
        let mut q = [0usize; 3];
        for a in 0..3 {
            let c = p[a] as isize + off[a];
            if c < 0 || c >= self.dims[a] as isize {
                return None;
            }
            q[a] = c as usize;
        }
        Some(q)
    }

    pub fn fluid_voxel_count(&self) -> usize {
        self.labels.iter().filter(|&&m| m == FLUID).count()
    }

    /// Fluid fraction. With `exclude_padding`, the padded inlet/outlet
    /// slabs are left out of both counts.
    pub fn porosity(&self, exclude_padding: bool) -> f64 {
        let (lo, hi) = if exclude_padding { self.padding } else { (0, 0) };
        let a = self.flow_axis.index();
        let n_axis = self.dims[a];
        debug_assert!(lo + hi < n_axis || !exclude_padding || self.n_voxels() == 0);
        let mut fluid = 0usize;
        let mut total = 0usize;
        for (i, &m) in self.labels.iter().enumerate() {
            let c = self.voxel_coords(i)[a];
            if c < lo || c >= n_axis - hi {
                continue;
            }
            total += 1;
            if m == FLUID {
                fluid += 1;
            }
        }
        if total == 0 {
            0.0
        } else {
            fluid as f64 / total as f64
        }
    }

    /// Extends the grid by `layers` all-fluid slabs on both ends of the
    /// flow axis and records them in the padding metadata.
    pub fn pad_inlet_outlet(&self, layers: usize) -> VoxelGrid {
        if layers == 0 {
            return self.clone();
        }
        let a = self.flow_axis.index();
        let mut dims = self.dims;
        dims[a] += 2 * layers;
        let mut labels = vec![FLUID; dims[0] * dims[1] * dims[2]];
        let nx = dims[0];
        let ny = dims[1];
        for (i, &m) in self.labels.iter().enumerate() {
            let mut p = self.voxel_coords(i);
            p[a] += layers;
            labels[p[0] + nx * (p[1] + ny * p[2])] = m;
        }
        VoxelGrid {
            dims,
            voxel_size: self.voxel_size,
            labels,
            padding: (self.padding.0 + layers, self.padding.1 + layers),
            flow_axis: self.flow_axis,
            materials: self.materials.clone(),
        }
    }

    /// Relabels the grid with axes permuted: new axis `a` takes the role of
    /// old axis `perm[a]`.
    pub fn permuted(&self, perm: [usize; 3]) -> VoxelGrid {
        let mut seen = [false; 3];
        for &p in &perm {
            seen[p] = true;
        }
        assert!(seen.iter().all(|&s| s), "perm must be a permutation of 0..3");
        let dims = [
            self.dims[perm[0]],
            self.dims[perm[1]],
            self.dims[perm[2]],
        ];
        let mut labels = vec![0u8; self.n_voxels()];
        let nx = dims[0];
        let ny = dims[1];
        for (i, &m) in self.labels.iter().enumerate() {
            let old = self.voxel_coords(i);
            let new = [old[perm[0]], old[perm[1]], old[perm[2]]];
            labels[new[0] + nx * (new[1] + ny * new[2])] = m;
        }
        let old_axis = self.flow_axis.index();
        let new_axis = perm.iter().position(|&p| p == old_axis).unwrap();
        VoxelGrid {
            dims,
            voxel_size: self.voxel_size,
            labels,
            padding: self.padding,
            flow_axis: Axis::from_index(new_axis),
            materials: self.materials.clone(),
        }
    }
}

/// Reads a geometry file: ASCII header `POREVOX 1 <nx> <ny> <nz>\n`
/// followed by exactly nx*ny*nz raw voxel bytes, x-fastest.
pub fn load_geometry(
    path: &Path,
    voxel_size: f64,
    flow_axis: Axis,
    materials: MaterialMap,
) -> Result<VoxelGrid, GeometryError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut header = Vec::new();
    reader.read_until(b'\n', &mut header)?;
    let header = String::from_utf8(header)
        .map_err(|_| GeometryError::Header("header is not valid ASCII".into()))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 5 || fields[0] != "POREVOX" {
        return Err(GeometryError::Header(format!(
            "expected `POREVOX 1 <nx> <ny> <nz>`, got `{}`",
            header.trim_end()
        )));
    }
    if fields[1] != "1" {
        return Err(GeometryError::Header(format!(
            "unsupported format version {}",
            fields[1]
        )));
    }
    let mut dims = [0usize; 3];
    for (slot, field) in dims.iter_mut().zip(&fields[2..5]) {
        *slot = field
            .parse()
            .map_err(|_| GeometryError::Header(format!("bad dimension `{field}`")))?;
    }
    let expected = dims[0] * dims[1] * dims[2];
    let mut labels = Vec::with_capacity(expected);
    reader.read_to_end(&mut labels)?;
    if labels.len() != expected {
        return Err(GeometryError::Truncated {
            expected,
            found: labels.len(),
        });
    }
    VoxelGrid::from_labels(dims, voxel_size, labels, flow_axis, materials)
}

/// Writes the raw voxel format read by [`load_geometry`].
pub fn write_geometry(path: &Path, grid: &VoxelGrid) -> std::io::Result<()> {
    use std::io::Write;
    let mut f = std::io::BufWriter::new(File::create(path)?);
    let [nx, ny, nz] = grid.dims();
    writeln!(f, "POREVOX 1 {nx} {ny} {nz}")?;
    f.write_all(grid.labels())?;
    Ok(())
}

/// One fluid-side face of the fluid/solid interface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactiveFace {
    /// Compact fluid-cell index (see [`FaceIndex`]).
    pub fluid_cell: usize,
    /// Outward normal, pointing from the fluid cell into the solid.
    pub direction: FaceDir,
    /// Kinetics class of the solid neighbor's material code.
    pub boundary_type: usize,
    /// Face area in voxel units (1 per face). Multiply by the squared
    /// voxel size of the chosen scaling for a dimensional/dimensionless
    /// interfacial area.
    pub area: f64,
}

/// Classification of one face of a fluid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Interior face shared with another fluid cell (compact index).
    Fluid(usize),
    /// Fluid/solid interface; index into the reactive face list.
    Reactive(usize),
    /// Domain-boundary face on the first slab of the flow axis.
    Inlet,
    /// Domain-boundary face on the last slab of the flow axis.
    Outlet,
    /// Any other domain-boundary face.
    Wall,
}

/// Compact indexing of fluid cells and exhaustive classification of their
/// six faces. Solid voxels carry no unknowns anywhere in the solver, so
/// every field here is sized by the fluid cell count.
#[derive(Debug, Clone)]
pub struct FaceIndex {
    /// Per voxel: compact fluid index, or `u32::MAX` for solid.
    cell_of_voxel: Vec<u32>,
    /// Per fluid cell: owning voxel index.
    voxel_of_cell: Vec<usize>,
    /// Per fluid cell: classification of the six faces in `FaceDir::ALL` order.
    kinds: Vec<[FaceKind; 6]>,
    faces: Vec<ReactiveFace>,
}

const NO_CELL: u32 = u32::MAX;

impl FaceIndex {
    pub fn build(grid: &VoxelGrid) -> FaceIndex {
        let n = grid.n_voxels();
        let mut cell_of_voxel = vec![NO_CELL; n];
        let mut voxel_of_cell = Vec::new();
        for (i, &m) in grid.labels().iter().enumerate() {
            if m == FLUID {
                cell_of_voxel[i] = voxel_of_cell.len() as u32;
                voxel_of_cell.push(i);
            }
        }
        let unit_area = 1.0; // voxel units; scaled by callers
        let flow = grid.flow_axis();
        let mut kinds = Vec::with_capacity(voxel_of_cell.len());
        let mut faces = Vec::new();
        for (cell, &vox) in voxel_of_cell.iter().enumerate() {
            let p = grid.voxel_coords(vox);
            let mut cell_kinds = [FaceKind::Wall; 6];
            for (slot, dir) in cell_kinds.iter_mut().zip(FaceDir::ALL) {
                *slot = match grid.neighbor(p, dir) {
                    Some(q) => {
                        let label = grid.label(q);
                        if label == FLUID {
                            FaceKind::Fluid(cell_of_voxel[grid.voxel_index(q)] as usize)
                        } else {
                            faces.push(ReactiveFace {
                                fluid_cell: cell,
                                direction: dir,
                                boundary_type: grid.materials().class_of(label),
                                area: unit_area,
                            });
                            FaceKind::Reactive(faces.len() - 1)
                        }
                    }
                    None => {
                        if dir.axis() == flow {
                            if dir.is_positive() {
                                FaceKind::Outlet
                            } else {
                                FaceKind::Inlet
                            }
                        } else {
                            FaceKind::Wall
                        }
                    }
                };
            }
            kinds.push(cell_kinds);
        }
        FaceIndex {
            cell_of_voxel,
            voxel_of_cell,
            kinds,
            faces,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.voxel_of_cell.len()
    }

    pub fn voxel_of_cell(&self, cell: usize) -> usize {
        self.voxel_of_cell[cell]
    }

    pub fn cell_of_voxel(&self, voxel: usize) -> Option<usize> {
        let c = self.cell_of_voxel[voxel];
        (c != NO_CELL).then_some(c as usize)
    }

    pub fn kinds(&self, cell: usize) -> &[FaceKind; 6] {
        &self.kinds[cell]
    }

    pub fn faces(&self) -> &[ReactiveFace] {
        &self.faces
    }

    pub fn cells(&self) -> impl Iterator<Item = usize> {
        0..self.n_cells()
    }
}

/// Lists every fluid-cell face whose neighbor voxel is solid, with the
/// outward normal pointing into the solid.
pub fn enumerate_reactive_faces(grid: &VoxelGrid) -> Vec<ReactiveFace> {
    FaceIndex::build(grid).faces().to_vec()
}

/// Connectivity diagnostics: which fluid cells can be reached from the
/// inlet and outlet slabs through fluid.
#[derive(Debug, Clone)]
pub struct Connectivity {
    pub reaches_inlet: Vec<bool>,
    pub reaches_outlet: Vec<bool>,
    /// Fluid cells unreachable from both ends. Kept in the domain; they
    /// carry zero flow.
    pub isolated_cells: usize,
    /// True if at least one fluid path connects inlet to outlet.
    pub has_through_path: bool,
}

pub fn connectivity(grid: &VoxelGrid, index: &FaceIndex) -> Connectivity {
    let flood = |from_inlet: bool| -> Vec<bool> {
        let mut mark = vec![false; index.n_cells()];
        let mut stack = Vec::new();
        for c in index.cells() {
            let touches = index.kinds(c).iter().any(|k| {
                matches!(
                    (k, from_inlet),
                    (FaceKind::Inlet, true) | (FaceKind::Outlet, false)
                )
            });
            if touches {
                mark[c] = true;
                stack.push(c);
            }
        }
        while let Some(c) = stack.pop() {
            for k in index.kinds(c) {
                if let FaceKind::Fluid(nb) = k {
                    if !mark[*nb] {
                        mark[*nb] = true;
                        stack.push(*nb);
                    }
                }
            }
        }
        mark
    };
    let reaches_inlet = flood(true);
    let reaches_outlet = flood(false);
    let isolated_cells = (0..index.n_cells())
        .filter(|&c| !reaches_inlet[c] && !reaches_outlet[c])
        .count();
    let has_through_path = (0..index.n_cells()).any(|c| reaches_inlet[c] && reaches_outlet[c]);
    let _ = grid;
    Connectivity {
        reaches_inlet,
        reaches_outlet,
        isolated_cells,
        has_through_path,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_from(dims: [usize; 3], labels: &[u8]) -> VoxelGrid {
        VoxelGrid::from_labels(dims, 1e-6, labels.to_vec(), Axis::Z, MaterialMap::uniform())
            .unwrap()
    }

    #[test]
    fn porosity_trivial_cases() {
        let g = VoxelGrid::all_fluid([2, 2, 2], 1e-6, Axis::Z);
        assert_eq!(g.porosity(false), 1.0);
        assert_eq!(g.fluid_voxel_count(), 8);

        let g = grid_from([2, 1, 1], &[0, 7]);
        assert_eq!(g.porosity(false), 0.5);
    }

    #[test]
    fn all_solid_rejected() {
        let err = VoxelGrid::from_labels([2, 1, 1], 1e-6, vec![1, 1], Axis::Z, MaterialMap::uniform());
        assert!(matches!(err, Err(GeometryError::NoFluid)));
    }

    #[test]
    fn pad_zero_is_identity() {
        let g = grid_from([2, 2, 2], &[0, 1, 2, 0, 0, 1, 0, 0]);
        let p = g.pad_inlet_outlet(0);
        assert_eq!(p.dims(), g.dims());
        assert_eq!(p.labels(), g.labels());
        assert_eq!(p.padding(), (0, 0));
    }

    #[test]
    fn pad_adds_fluid_slabs() {
        // 4x4x4 with a solid core everywhere: padding must produce all-fluid
        // first and last z-slices.
        let mut labels = vec![1u8; 64];
        labels[0] = 0; // keep one fluid voxel so the grid is valid
        let g = grid_from([4, 4, 4], &labels);
        let p = g.pad_inlet_outlet(1);
        assert_eq!(p.dims(), [4, 4, 6]);
        assert_eq!(p.padding(), (1, 1));
        for y in 0..4 {
            for x in 0..4 {
                assert!(p.is_fluid([x, y, 0]));
                assert!(p.is_fluid([x, y, 5]));
            }
        }
        // interior labels preserved
        assert_eq!(p.label([1, 0, 1]), 1);
        assert_eq!(p.label([0, 0, 1]), 0);
    }

    #[test]
    fn pad_composes_additively() {
        let g = grid_from([3, 2, 2], &[0, 1, 0, 2, 0, 0, 1, 1, 0, 0, 3, 0]);
        let a = g.pad_inlet_outlet(2).pad_inlet_outlet(3);
        let b = g.pad_inlet_outlet(5);
        assert_eq!(a.dims(), b.dims());
        assert_eq!(a.labels(), b.labels());
        assert_eq!(a.padding(), b.padding());
    }

    #[test]
    fn membrane_padding_dims() {
        let g = VoxelGrid::all_fluid([100, 100, 100], 7.03e-8, Axis::Z);
        let p = g.pad_inlet_outlet(10);
        assert_eq!(p.dims(), [100, 100, 120]);
    }

    #[test]
    fn single_solid_voxel_has_six_faces() {
        let mut g = VoxelGrid::all_fluid([3, 3, 3], 1e-6, Axis::Z);
        g.set_label([1, 1, 1], 5);
        let faces = enumerate_reactive_faces(&g);
        assert_eq!(faces.len(), 6);
        let dirs: Vec<FaceDir> = faces.iter().map(|f| f.direction).collect();
        for d in FaceDir::ALL {
            assert_eq!(dirs.iter().filter(|&&x| x == d).count(), 1);
        }
    }

    #[test]
    fn two_voxel_domain_single_face() {
        let g = grid_from([2, 1, 1], &[0, 3]);
        let faces = enumerate_reactive_faces(&g);
        assert_eq!(faces.len(), 1);
        assert_eq!(faces[0].direction, FaceDir::XPos);
        let idx = FaceIndex::build(&g);
        assert_eq!(idx.voxel_of_cell(faces[0].fluid_cell), 0);
    }

    #[test]
    fn face_classification_is_exhaustive() {
        let g = grid_from(
            [3, 3, 2],
            &[
                0, 1, 0, 0, 0, 2, 1, 0, 0, //
                0, 0, 0, 1, 0, 0, 0, 0, 1,
            ],
        );
        let idx = FaceIndex::build(&g);
        assert_eq!(idx.n_cells(), g.fluid_voxel_count());
        // every fluid face classified exactly once, interior faces symmetric
        for c in idx.cells() {
            for (k, d) in idx.kinds(c).iter().zip(FaceDir::ALL) {
                if let FaceKind::Fluid(nb) = k {
                    let back = idx.kinds(*nb)[d.opposite() as usize];
                    assert_eq!(back, FaceKind::Fluid(c));
                }
            }
        }
    }

    #[test]
    fn boundary_types_follow_material_map() {
        let mut class_of = BTreeMap::new();
        class_of.insert(4u8, 1usize);
        let map = MaterialMap::new(class_of, 0, 2);
        let mut g = VoxelGrid::from_labels(
            [3, 1, 1],
            1e-6,
            vec![0, 4, 9], // 9 unknown -> default class 0
            Axis::X,
            map,
        )
        .unwrap();
        g.set_label([0, 0, 0], 0);
        let faces = enumerate_reactive_faces(&g);
        assert_eq!(faces.len(), 1);
        assert_eq!(faces[0].boundary_type, 1);
    }

    #[test]
    fn connectivity_flags_isolated_pore() {
        // z-column of fluid plus one sealed pore off to the side
        let mut g = VoxelGrid::all_fluid([3, 3, 3], 1e-6, Axis::Z);
        for z in 0..3 {
            for y in 0..3 {
                for x in 0..3 {
                    if !(x == 0 && y == 0) {
                        g.set_label([x, y, z], 1);
                    }
                }
            }
        }
        g.set_label([2, 2, 1], 0); // isolated single-voxel pore
        let idx = FaceIndex::build(&g);
        let conn = connectivity(&g, &idx);
        assert!(conn.has_through_path);
        assert_eq!(conn.isolated_cells, 1);
    }
}
