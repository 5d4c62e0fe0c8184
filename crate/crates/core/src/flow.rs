//! Steady incompressible flow on the voxel grid by pseudo-time marching
//! of the dimensionless momentum equations with a Chorin fractional-step
//! (projection) scheme.
//!
//! Variables live on a staggered (MAC) arrangement: each velocity
//! component on the faces orthogonal to its axis, pressure at cell
//! centers. Each pseudo-step applies an explicit predictor (upwind
//! advection unless Stokes mode drops it, plus diffusion), solves a
//! pressure Poisson equation with BiCGSTAB, and projects the face
//! velocities back onto the divergence-free space.
//!
//! Both target regimes have Re ≪ 1, so in Stokes mode the march runs in
//! the viscous pseudo-time τ = t̂/Re with unit viscosity; this leaves the
//! step count unchanged but keeps the marching numbers O(1). The physical
//! dimensionless pressure is recovered as p̂ = q/Re.
//!
//! Boundary conditions: unit normal inflow on inlet faces whose fluid
//! column reaches the outlet (blocked inlets act as walls), p̂ = 0 with
//! zero-gradient velocity at the outlet, no-penetration plus a Navier
//! slip tangential relation on fluid/solid faces, and no-slip (optionally
//! free-slip) external walls. Tangential wall conditions enter the
//! stencils through mirror ghosts at half-cell distance:
//! u_ghost = u·(2β̂ − δx̂)/(2β̂ + δx̂).

use crate::dimensionless::DimensionlessGroups;
use crate::geometry::{connectivity, FaceDir, FaceIndex, FaceKind, VoxelGrid};
use crate::sparse::{bicgstab, CsrBuilder, SolveError, SolveOptions, SparseSystem};

use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("pressure solve failed at step {step}: {source}")]
    PressureSolve {
        step: usize,
        #[source]
        source: SolveError,
    },
    #[error("pressure solve did not converge at step {step} (residual {residual:.3e})")]
    PressureStalled { step: usize, residual: f64 },
    #[error("non-finite velocity detected at step {step}")]
    NonFinite { step: usize },
    #[error("steady state not reached in {steps} steps (residual {residual:.3e})")]
    NotConverged { steps: usize, residual: f64 },
    #[error("reynolds number must be positive and finite, got {0}")]
    BadReynolds(f64),
}

/// External wall treatment for domain-boundary faces that are neither
/// inlet nor outlet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WallBc {
    #[default]
    NoSlip,
    FreeSlip,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StokesMode {
    /// Drop the advective term when Re < 1e-2.
    #[default]
    Auto,
    On,
    Off,
}

#[derive(Debug, Clone)]
pub struct FlowOptions {
    pub tol_steady: f64,
    pub div_tol: f64,
    pub max_steps: usize,
    pub linear: SolveOptions,
    pub stokes: StokesMode,
    pub wall_bc: WallBc,
    /// Inlet speed in units of V_in; the nondimensional boundary value.
    pub inlet_speed: f64,
    /// Fixed pseudo-timestep; `None` selects 0.5·min(δx̂/|v̂|, δx̂²/(6ν)).
    pub dt_override: Option<f64>,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions {
            tol_steady: 1e-6,
            div_tol: 1e-8,
            max_steps: 200_000,
            linear: SolveOptions::default(),
            stokes: StokesMode::Auto,
            wall_bc: WallBc::NoSlip,
            inlet_speed: 1.0,
            dt_override: None,
        }
    }
}

/// Staggered velocity/pressure field, dimensionless.
#[derive(Debug, Clone)]
pub struct FlowField {
    dims: [usize; 3],
    /// Face-normal velocity per axis; component `a` has dims+1 along `a`.
    pub vel: [Vec<f64>; 3],
    /// Cell-centered pressure over all voxels (zero in solid).
    pub p: Vec<f64>,
    /// Last ‖Δv̂‖∞/dt estimate of the marching residual.
    pub residual: f64,
}

#[inline]
fn face_dims(dims: [usize; 3], axis: usize) -> [usize; 3] {
    let mut fd = dims;
    fd[axis] += 1;
    fd
}

#[inline]
fn lin_index(d: [usize; 3], p: [usize; 3]) -> usize {
    p[0] + d[0] * (p[1] + d[1] * p[2])
}

impl FlowField {
    pub fn zeros(grid: &VoxelGrid) -> FlowField {
        let dims = grid.dims();
        let vel = [0, 1, 2].map(|a| {
            let fd = face_dims(dims, a);
            vec![0.0; fd[0] * fd[1] * fd[2]]
        });
        FlowField {
            dims,
            vel,
            p: vec![0.0; dims[0] * dims[1] * dims[2]],
            residual: f64::INFINITY,
        }
    }

    /// Uniform plug flow along the grid's flow axis; divergence-free on
    /// all-fluid synthetic domains.
    pub fn uniform(grid: &VoxelGrid, speed: f64) -> FlowField {
        let mut f = FlowField::zeros(grid);
        let a = grid.flow_axis().index();
        f.vel[a].iter_mut().for_each(|v| *v = speed);
        f.residual = 0.0;
        f
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    #[inline]
    pub fn face_value(&self, axis: usize, coords: [usize; 3]) -> f64 {
        self.vel[axis][lin_index(face_dims(self.dims, axis), coords)]
    }

    /// Outward-normal velocity component on the face of cell `p` in
    /// direction `dir`.
    #[inline]
    pub fn outward_velocity(&self, p: [usize; 3], dir: FaceDir) -> f64 {
        let a = dir.axis().index();
        if dir.is_positive() {
            let mut f = p;
            f[a] += 1;
            self.face_value(a, f)
        } else {
            -self.face_value(a, p)
        }
    }

    /// Cell-centered velocity vector (face averages).
    pub fn cell_velocity(&self, p: [usize; 3]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (a, o) in out.iter_mut().enumerate() {
            let fd = face_dims(self.dims, a);
            let lo = lin_index(fd, p);
            let mut hp = p;
            hp[a] += 1;
            *o = 0.5 * (self.vel[a][lo] + self.vel[a][lin_index(fd, hp)]);
        }
        out
    }
}

/// Maximum discrete divergence magnitude over fluid cells,
/// |Σ outward face velocities| / δx̂.
pub fn max_divergence(grid: &VoxelGrid, index: &FaceIndex, flow: &FlowField, dx_hat: f64) -> f64 {
    let mut worst = 0.0_f64;
    for c in index.cells() {
        let p = grid.voxel_coords(index.voxel_of_cell(c));
        let mut sum = 0.0;
        for dir in FaceDir::ALL {
            sum += flow.outward_velocity(p, dir);
        }
        worst = worst.max((sum / dx_hat).abs());
    }
    worst
}

/// Volumetric flux entering through the inlet and leaving through the
/// outlet, in units of δx̂² per face.
pub fn boundary_fluxes(
    grid: &VoxelGrid,
    index: &FaceIndex,
    flow: &FlowField,
    dx_hat: f64,
) -> (f64, f64) {
    let area = dx_hat * dx_hat;
    let mut inlet = 0.0;
    let mut outlet = 0.0;
    for c in index.cells() {
        let p = grid.voxel_coords(index.voxel_of_cell(c));
        for (kind, dir) in index.kinds(c).iter().zip(FaceDir::ALL) {
            match kind {
                FaceKind::Inlet => inlet += -flow.outward_velocity(p, dir) * area,
                FaceKind::Outlet => outlet += flow.outward_velocity(p, dir) * area,
                _ => {}
            }
        }
    }
    (inlet, outlet)
}

/// Mirror-ghost coefficient of the Navier slip relation for a wall plane
/// half a cell away: ghost = g·u with g = (2β̂ − δx̂)/(2β̂ + δx̂).
/// β̂ = 0 gives the no-slip mirror (−1); β̂ → ∞ gives free slip (+1).
pub fn slip_ghost_coefficient(beta_hat: f64, dx_hat: f64) -> f64 {
    if beta_hat.is_infinite() {
        1.0
    } else {
        (2.0 * beta_hat - dx_hat) / (2.0 * beta_hat + dx_hat)
    }
}

/// Stencil neighbor of an active face.
#[derive(Debug, Clone, Copy)]
enum Nb {
    /// Stored face value at spacing δx̂.
    Val(u32),
    /// Wall-plane mirror ghost: value = g · (center value).
    Ghost(f64),
}

struct ActiveFace {
    idx: u32,
    coords: [u16; 3],
    /// Compact indices of the two cells this face separates.
    cell_lo: u32,
    cell_hi: u32,
    /// Neighbors in `FaceDir::ALL` order.
    nbs: [Nb; 6],
}

struct OutletFace {
    idx: u32,
    cell: u32,
}

pub struct FlowReport {
    pub steps: usize,
    pub residual: f64,
    pub dt: f64,
    pub max_divergence: f64,
    pub converged: bool,
    /// ‖Δv̂‖∞/dt per step.
    pub residual_history: Vec<f64>,
}

/// One-step driver holding precomputed masks, the Poisson system, and the
/// warm-start state for the pressure solve.
pub struct FlowSolver<'a> {
    index: &'a FaceIndex,
    dims: [usize; 3],
    dx_hat: f64,
    flow_axis: usize,
    /// Marching viscosity: 1 in rescaled Stokes mode, 1/Re otherwise.
    nu: f64,
    advection: bool,
    /// Pressure output scale: q → p̂.
    p_scale: f64,
    opts: FlowOptions,
    active: [Vec<ActiveFace>; 3],
    outlets: Vec<OutletFace>,
    /// (face array index along the flow axis, fixed inflow value).
    inlets: Vec<(u32, f64)>,
    /// Per fluid cell: face-array indices of its six faces,
    /// [lo_x, hi_x, lo_y, hi_y, lo_z, hi_z].
    cell_faces: Vec<[u32; 6]>,
    poisson: SparseSystem,
    pinned: Vec<bool>,
    q: Vec<f64>,
    star: [Vec<f64>; 3],
}

impl<'a> FlowSolver<'a> {
    pub fn new(
        grid: &'a VoxelGrid,
        index: &'a FaceIndex,
        groups: &DimensionlessGroups,
        opts: FlowOptions,
    ) -> Result<Self, FlowError> {
        let re = groups.reynolds;
        if !(re > 0.0 && re.is_finite()) {
            return Err(FlowError::BadReynolds(re));
        }
        let stokes = match opts.stokes {
            StokesMode::On => true,
            StokesMode::Off => false,
            StokesMode::Auto => re < 1e-2,
        };
        let (nu, advection, p_scale) = if stokes {
            (1.0, false, 1.0 / re)
        } else {
            (1.0 / re, true, 1.0)
        };
        let dims = grid.dims();
        let dx_hat = groups.dx_hat(grid.voxel_size());
        let flow_axis = grid.flow_axis().index();
        let conn = connectivity(grid, index);

        let fluid = |p: [usize; 3]| grid.is_fluid(p);
        let cell_id = |p: [usize; 3]| -> u32 {
            index
                .cell_of_voxel(grid.voxel_index(p))
                .expect("fluid voxel has a compact cell") as u32
        };
        let open_inlet = |p: [usize; 3]| {
            grid.is_fluid(p)
                && index
                    .cell_of_voxel(grid.voxel_index(p))
                    .map(|c| conn.reaches_outlet[c])
                    .unwrap_or(false)
        };
        let slip_of_solid = |p: [usize; 3]| -> f64 {
            let class = grid.materials().class_of(grid.label(p));
            groups.slip_beta_hat.get(class).copied().unwrap_or(0.0)
        };
        let wall_ghost = match opts.wall_bc {
            WallBc::NoSlip => -1.0,
            WallBc::FreeSlip => 1.0,
        };

        // Classify faces per component and precompute stencil neighbors.
        let mut active: [Vec<ActiveFace>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut outlets = Vec::new();
        let mut inlets = Vec::new();
        for a in 0..3 {
            let fd = face_dims(dims, a);
            for z in 0..fd[2] {
                for y in 0..fd[1] {
                    for x in 0..fd[0] {
                        let f = [x, y, z];
                        let fi = lin_index(fd, f) as u32;
                        let fa = f[a];
                        if fa == 0 || fa == dims[a] {
                            if a == flow_axis {
                                if fa == 0 {
                                    if open_inlet(f) {
                                        inlets.push((fi, opts.inlet_speed));
                                    }
                                } else {
                                    let mut c = f;
                                    c[a] -= 1;
                                    if fluid(c) {
                                        outlets.push(OutletFace {
                                            idx: fi,
                                            cell: cell_id(c),
                                        });
                                    }
                                }
                            }
                            continue;
                        }
                        let mut cm = f;
                        cm[a] -= 1;
                        let cp = f;
                        if !(fluid(cm) && fluid(cp)) {
                            continue; // stays zero: solid-adjacent or interior-solid face
                        }
                        let mut nbs = [Nb::Ghost(0.0); 6];
                        for (slot, dir) in nbs.iter_mut().zip(FaceDir::ALL) {
                            let b = dir.axis().index();
                            let positive = dir.is_positive();
                            if b == a {
                                // normal direction: neighbor face always stored
                                let mut g = f;
                                if positive {
                                    g[a] += 1;
                                } else {
                                    g[a] -= 1;
                                }
                                *slot = Nb::Val(lin_index(fd, g) as u32);
                                continue;
                            }
                            let out_of_domain =
                                if positive { f[b] + 1 >= fd[b] } else { f[b] == 0 };
                            if out_of_domain {
                                let g = if b == flow_axis {
                                    // inlet plane pins the tangential velocity,
                                    // outlet plane has zero tangential gradient
                                    if positive {
                                        1.0
                                    } else {
                                        -1.0
                                    }
                                } else {
                                    wall_ghost
                                };
                                *slot = Nb::Ghost(g);
                                continue;
                            }
                            let mut g = f;
                            if positive {
                                g[b] += 1;
                            } else {
                                g[b] -= 1;
                            }
                            let mut gm = g;
                            gm[a] -= 1;
                            let gp = g;
                            let (fm, fp) = (fluid(gm), fluid(gp));
                            if !fm && !fp {
                                // clean wall plane between the face rows
                                let beta = slip_of_solid(gp);
                                *slot = Nb::Ghost(slip_ghost_coefficient(beta, dx_hat));
                            } else {
                                // fluid neighbor, or a staircase edge whose
                                // stored value is pinned at zero
                                *slot = Nb::Val(lin_index(fd, g) as u32);
                            }
                        }
                        active[a].push(ActiveFace {
                            idx: fi,
                            coords: [x as u16, y as u16, z as u16],
                            cell_lo: cell_id(cm),
                            cell_hi: cell_id(cp),
                            nbs,
                        });
                    }
                }
            }
        }

        let n = index.n_cells();
        let mut cell_faces = vec![[0u32; 6]; n];
        for c in 0..n {
            let p = grid.voxel_coords(index.voxel_of_cell(c));
            for a in 0..3 {
                let fd = face_dims(dims, a);
                let mut hp = p;
                hp[a] += 1;
                cell_faces[c][2 * a] = lin_index(fd, p) as u32;
                cell_faces[c][2 * a + 1] = lin_index(fd, hp) as u32;
            }
        }

        // Pressure Poisson matrix over compact fluid cells, scaled by -δx̂²
        // so the diagonal is positive: (n_nb + 2·n_out)·q_c − Σ q_nb.
        // Cells with neither fluid neighbors nor an outlet face would have
        // an all-zero row (sealed single-cell pores); pin those to q = 0.
        let mut builder = CsrBuilder::new(n);
        let mut pinned = vec![false; n];
        for c in 0..n {
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(7);
            let mut diag = 0.0;
            for kind in index.kinds(c) {
                match kind {
                    FaceKind::Fluid(nb) => {
                        entries.push((*nb, -1.0));
                        diag += 1.0;
                    }
                    FaceKind::Outlet => diag += 2.0,
                    _ => {}
                }
            }
            if diag == 0.0 {
                pinned[c] = true;
                entries.clear();
                diag = 1.0;
            }
            entries.push((c, diag));
            builder.push_row(&entries);
        }
        let poisson = SparseSystem::new(builder.finish(), vec![0.0; n]);

        let star = [0, 1, 2].map(|a| {
            let fd = face_dims(dims, a);
            vec![0.0; fd[0] * fd[1] * fd[2]]
        });

        Ok(FlowSolver {
            index,
            dims,
            dx_hat,
            flow_axis,
            nu,
            advection,
            p_scale,
            opts,
            active,
            outlets,
            inlets,
            cell_faces,
            poisson,
            pinned,
            q: vec![0.0; n],
            star,
        })
    }

    pub fn dx_hat(&self) -> f64 {
        self.dx_hat
    }

    pub fn stokes_mode(&self) -> bool {
        !self.advection
    }

    pub fn options(&self) -> &FlowOptions {
        &self.opts
    }

    /// Enforces the stored boundary values: inlet speed on open inlet
    /// faces, zero on every other non-active, non-outlet face. Slip
    /// lengths act through the stencil ghosts, so β̂ = 0 reduces exactly
    /// to no-slip walls.
    pub fn apply_slip_bc(&self, flow: &mut FlowField) {
        for a in 0..3 {
            let mut keep = vec![false; flow.vel[a].len()];
            for af in &self.active[a] {
                keep[af.idx as usize] = true;
            }
            if a == self.flow_axis {
                for of in &self.outlets {
                    keep[of.idx as usize] = true;
                }
                for &(fi, _) in &self.inlets {
                    keep[fi as usize] = true;
                }
            }
            for (i, v) in flow.vel[a].iter_mut().enumerate() {
                if !keep[i] {
                    *v = 0.0;
                }
            }
        }
        for &(fi, speed) in &self.inlets {
            flow.vel[self.flow_axis][fi as usize] = speed;
        }
    }

    /// Stability-limited pseudo-timestep 0.5·min(δx̂/|v̂|max, δx̂²/(6ν)).
    pub fn suggest_dt(&self, flow: &FlowField) -> f64 {
        let mut vmax = self.opts.inlet_speed.abs().max(1e-12);
        for a in 0..3 {
            for v in &flow.vel[a] {
                vmax = vmax.max(v.abs());
            }
        }
        let visc = self.dx_hat * self.dx_hat / (6.0 * self.nu);
        0.5 * (self.dx_hat / vmax).min(visc)
    }

    fn predictor(&mut self, flow: &FlowField, dt: f64) {
        let dx = self.dx_hat;
        let inv_dx2 = 1.0 / (dx * dx);
        let nu = self.nu;
        let advection = self.advection;
        let dims = self.dims;
        let fd_all: [[usize; 3]; 3] = [0, 1, 2].map(|b| face_dims(dims, b));
        for a in 0..3 {
            self.star[a].copy_from_slice(&flow.vel[a]);
            let vel_a = &flow.vel[a];
            let vel = &flow.vel;
            let update = |af: &ActiveFace| -> f64 {
                let c = vel_a[af.idx as usize];
                let nb_val = |nb: Nb| -> f64 {
                    match nb {
                        Nb::Val(j) => vel_a[j as usize],
                        Nb::Ghost(g) => g * c,
                    }
                };
                let mut lap = 0.0;
                for &nb in &af.nbs {
                    lap += nb_val(nb) - c;
                }
                lap *= inv_dx2;
                let mut adv = 0.0;
                if advection {
                    let coords = [
                        af.coords[0] as usize,
                        af.coords[1] as usize,
                        af.coords[2] as usize,
                    ];
                    for b in 0..3 {
                        let w = if b == a {
                            c
                        } else {
                            // average of the four transverse faces bounding
                            // the two cells this face separates
                            let mut cm = coords;
                            cm[a] -= 1;
                            let fb = fd_all[b];
                            let mut sum = 0.0;
                            for cell in [cm, coords] {
                                let lo = lin_index(fb, cell);
                                let mut hc = cell;
                                hc[b] += 1;
                                sum += vel[b][lo] + vel[b][lin_index(fb, hc)];
                            }
                            0.25 * sum
                        };
                        let grad = if w > 0.0 {
                            (c - nb_val(af.nbs[2 * b])) / dx
                        } else {
                            (nb_val(af.nbs[2 * b + 1]) - c) / dx
                        };
                        adv += w * grad;
                    }
                }
                c + dt * (nu * lap - adv)
            };
            const PAR_THRESHOLD: usize = 30_000;
            let faces = &self.active[a];
            let star_a = &mut self.star[a];
            if faces.len() >= PAR_THRESHOLD {
                let results: Vec<(u32, f64)> =
                    faces.par_iter().map(|af| (af.idx, update(af))).collect();
                for (i, v) in results {
                    star_a[i as usize] = v;
                }
            } else {
                for af in faces {
                    star_a[af.idx as usize] = update(af);
                }
            }
        }
        // zero-gradient outlet on the predicted field
        let a = self.flow_axis;
        let fd = face_dims(dims, a);
        let stride = [1, fd[0], fd[0] * fd[1]][a];
        for of in &self.outlets {
            let i = of.idx as usize;
            self.star[a][i] = self.star[a][i - stride];
        }
    }

    /// One fractional step. Returns the marching residual ‖Δv̂‖∞/dt.
    pub fn step(
        &mut self,
        flow: &mut FlowField,
        dt: f64,
        step_no: usize,
    ) -> Result<f64, FlowError> {
        let dx = self.dx_hat;
        self.predictor(flow, dt);

        // rhs = -δx̂²·div(v*)/dt with div = (Σ signed face values)/δx̂
        let scale = -dx / dt;
        for c in 0..self.index.n_cells() {
            self.poisson.rhs[c] = if self.pinned[c] {
                0.0
            } else {
                let f = &self.cell_faces[c];
                let flux = (self.star[0][f[1] as usize] - self.star[0][f[0] as usize])
                    + (self.star[1][f[3] as usize] - self.star[1][f[2] as usize])
                    + (self.star[2][f[5] as usize] - self.star[2][f[4] as usize]);
                scale * flux
            };
        }

        let (q, report) = bicgstab(&self.poisson, &self.q, &self.opts.linear).map_err(
            |source| FlowError::PressureSolve {
                step: step_no,
                source,
            },
        )?;
        if !report.converged {
            return Err(FlowError::PressureStalled {
                step: step_no,
                residual: report.residual,
            });
        }
        self.q = q;

        // corrector
        let mut residual = 0.0_f64;
        for a in 0..3 {
            let vel_a = &mut flow.vel[a];
            let star_a = &self.star[a];
            for af in &self.active[a] {
                let i = af.idx as usize;
                let dq = self.q[af.cell_hi as usize] - self.q[af.cell_lo as usize];
                let new = star_a[i] - dt * dq / dx;
                residual = residual.max((new - vel_a[i]).abs());
                vel_a[i] = new;
            }
        }
        {
            let a = self.flow_axis;
            let vel_a = &mut flow.vel[a];
            for of in &self.outlets {
                let i = of.idx as usize;
                // Dirichlet q = 0 at the outlet plane half a cell out
                let new = self.star[a][i] + 2.0 * dt * self.q[of.cell as usize] / dx;
                residual = residual.max((new - vel_a[i]).abs());
                vel_a[i] = new;
            }
        }
        residual /= dt;

        for (vox, pv) in flow.p.iter_mut().enumerate() {
            *pv = match self.index.cell_of_voxel(vox) {
                Some(c) => self.p_scale * self.q[c],
                None => 0.0,
            };
        }
        let finite = flow.vel.iter().all(|v| v.iter().all(|x| x.is_finite()));
        if !finite || !residual.is_finite() {
            return Err(FlowError::NonFinite { step: step_no });
        }
        flow.residual = residual;
        Ok(residual)
    }
}

/// Runs one fractional step on a copy of the field; intended for small
/// fixed-point and stepping tests.
pub fn chorin_step(
    flow: &FlowField,
    grid: &VoxelGrid,
    index: &FaceIndex,
    groups: &DimensionlessGroups,
    opts: FlowOptions,
    dt: f64,
) -> Result<FlowField, FlowError> {
    let mut solver = FlowSolver::new(grid, index, groups, opts)?;
    let mut out = flow.clone();
    solver.step(&mut out, dt, 0)?;
    Ok(out)
}

/// Marches from rest until ‖Δv̂‖∞/dt falls below the steady tolerance,
/// then checks the divergence criterion.
pub fn solve_steady_flow(
    grid: &VoxelGrid,
    index: &FaceIndex,
    groups: &DimensionlessGroups,
    opts: FlowOptions,
) -> Result<(FlowField, FlowReport), FlowError> {
    let tol = opts.tol_steady;
    let div_tol = opts.div_tol;
    let max_steps = opts.max_steps;
    let dt_override = opts.dt_override;
    let mut solver = FlowSolver::new(grid, index, groups, opts)?;
    let mut flow = FlowField::zeros(grid);
    solver.apply_slip_bc(&mut flow);
    let mut history = Vec::new();
    let mut dt = solver.suggest_dt(&flow);
    let mut residual = f64::INFINITY;
    let mut steps = 0;
    while steps < max_steps {
        if dt_override.is_none() && steps % 16 == 0 {
            dt = solver.suggest_dt(&flow);
        }
        let dt_step = dt_override.unwrap_or(dt);
        residual = solver.step(&mut flow, dt_step, steps)?;
        history.push(residual);
        steps += 1;
        if residual <= tol {
            break;
        }
    }
    if residual > tol {
        return Err(FlowError::NotConverged { steps, residual });
    }
    let dx = solver.dx_hat();
    let max_div = max_divergence(grid, index, &flow, dx);
    let report = FlowReport {
        steps,
        residual,
        dt: dt_override.unwrap_or(dt),
        max_divergence: max_div,
        converged: max_div <= div_tol,
        residual_history: history,
    };
    Ok((flow, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghost_coefficient_limits() {
        let dx = 0.1;
        assert_eq!(slip_ghost_coefficient(0.0, dx), -1.0);
        assert_eq!(slip_ghost_coefficient(f64::INFINITY, dx), 1.0);
        // finite slip: wall velocity equals slip length times shear rate
        for beta in [0.01, 0.1, 1.0] {
            let g = slip_ghost_coefficient(beta, dx);
            let u1 = 0.7;
            let wall = 0.5 * (u1 + g * u1);
            let shear = (u1 - g * u1) / dx;
            assert!((wall - beta * shear).abs() < 1e-14);
        }
    }
}
