//! Pore-scale finite-volume simulation of reactive solute transport in
//! voxelized porous media.
//!
//! The library solves steady incompressible flow through a segmented 3D
//! geometry and then transient convection–diffusion of a dissolved
//! species with adsorption/desorption surface reactions (Henry, Langmuir
//! and Frumkin kinetics) at the fluid/solid interface. Everything is
//! computed in dimensionless variables; the [`dimensionless`] module maps
//! physical inputs to the governing groups and results back to
//! dimensional form.

pub mod dimensionless;
pub mod flow;
pub mod geometry;
pub mod kinetics;
pub mod sparse;
pub mod synthetic;
pub mod transport;

pub use dimensionless::{
    compute_groups, ClassRates, DimensionlessGroups, FieldKind, PhysicalParams, Scales,
};
pub use flow::{
    boundary_fluxes, chorin_step, max_divergence, solve_steady_flow, FlowField, FlowOptions,
    FlowReport, FlowSolver, StokesMode, WallBc,
};
pub use geometry::{
    connectivity, enumerate_reactive_faces, load_geometry, write_geometry, Axis, FaceDir,
    FaceIndex, FaceKind, MaterialMap, ReactiveFace, VoxelGrid,
};
pub use kinetics::{Isotherm, RobinFace};
pub use sparse::{bicgstab, CsrBuilder, CsrMatrix, SolveOptions, SolverReport, SparseSystem};
pub use transport::{
    run_transport, BudgetRow, MassBudget, TransportOptions, TransportRun, TransportSolver,
    TransportState,
};
