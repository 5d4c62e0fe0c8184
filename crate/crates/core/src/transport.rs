//! Implicit cell-centered finite-volume transport of the dissolved
//! concentration with reactive Robin faces, advanced one step at a time
//! against a frozen steady flow field.
//!
//! Per fluid cell, implicit Euler in time with first-order upwind
//! (donor-cell) advective fluxes and central diffusive fluxes:
//!
//!   (δx̂³/Δt̂)(ĉ_c − ĉ_cᵏ) + Σ_faces F_adv + Σ_faces F_diff = 0
//!
//! Inlet faces carry the Dirichlet value ĉ = 1 through ghost-face fluxes
//! (half-cell diffusion plus the boundary donor), the outlet is
//! donor-cell advection with zero diffusive flux, walls are no-flux, and
//! reactive faces use the linearized Robin closure from the kinetics
//! module with the face unknown eliminated into the cell row. The
//! adsorbed concentration is advanced with the same flux coefficients, so
//! the per-step mass balance closes to solver precision by construction.

use crate::flow::{max_divergence, FlowField};
use crate::geometry::{FaceDir, FaceIndex, FaceKind, VoxelGrid};
use crate::kinetics::{Isotherm, RobinFace};
use crate::sparse::{bicgstab, CsrBuilder, CsrMatrix, SolveError, SolveOptions, SparseSystem};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("flow field is not divergence-free (max |div| = {0:.3e}); refusing to assemble")]
    NotDivergenceFree(f64),
    #[error("transport requires a finite Peclet number")]
    InfinitePeclet,
    #[error("timestep must be positive, got {0}")]
    BadTimestep(f64),
    #[error("linear solve failed at step {step}: {source}")]
    Solve {
        step: usize,
        #[source]
        source: SolveError,
    },
    #[error("linear solve stalled at step {step} (residual {residual:.3e})")]
    Stalled { step: usize, residual: f64 },
    #[error("concentration {value:.3e} below -1e-12 in cell {cell} at step {step}")]
    NegativeConcentration { cell: usize, value: f64, step: usize },
    #[error("isotherm class {0} out of range")]
    UnknownClass(usize),
}

/// Dissolved and adsorbed concentrations with the simulation clock.
#[derive(Debug, Clone)]
pub struct TransportState {
    /// ĉ per fluid cell (compact index).
    pub c_hat: Vec<f64>,
    /// m̂ per reactive face.
    pub m_hat: Vec<f64>,
    /// Lagged face concentration ĉ_f per reactive face.
    pub c_face: Vec<f64>,
    pub t_hat: f64,
    pub step: usize,
    /// Number of tiny negative concentrations clamped to zero so far.
    pub clamped: usize,
}

impl TransportState {
    pub fn uniform(index: &FaceIndex, c0: f64, m0: f64) -> TransportState {
        TransportState {
            c_hat: vec![c0; index.n_cells()],
            m_hat: vec![m0; index.faces().len()],
            c_face: vec![c0; index.faces().len()],
            t_hat: 0.0,
            step: 0,
            clamped: 0,
        }
    }
}

/// Running totals of the discrete mass budget, all in dimensionless
/// units. Influx and outflux are cumulative time integrals of the same
/// boundary fluxes the solver assembles.
#[derive(Debug, Clone, Copy, Default)]
pub struct MassBudget {
    /// Σ ĉ·δx̂³ over fluid cells.
    pub dissolved: f64,
    /// Σ m̂·δx̂² over reactive faces (the M̂ diagnostic).
    pub adsorbed: f64,
    pub influx: f64,
    pub outflux: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct BudgetRow {
    pub step: usize,
    pub t_hat: f64,
    pub dissolved: f64,
    pub adsorbed: f64,
    pub influx: f64,
    pub outflux: f64,
    /// |Δ(dissolved+adsorbed) − (influx−outflux)| for this step, relative
    /// to the larger of the totals.
    pub balance_error: f64,
}

#[derive(Debug, Clone)]
pub struct TransportOptions {
    pub dt_hat: f64,
    pub linear: SolveOptions,
    /// Acceptance threshold on the flow divergence before assembling.
    pub div_check_tol: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        TransportOptions {
            dt_hat: 1e-2,
            linear: SolveOptions::default(),
            div_check_tol: 1e-6,
        }
    }
}

struct BoundaryFace {
    cell: u32,
    /// Outward-normal velocity on the face (negative = inflow).
    v_out: f64,
}

/// Assembler/stepper for one geometry + flow + kinetics configuration.
pub struct TransportSolver<'a> {
    index: &'a FaceIndex,
    isotherms: Vec<Isotherm>,
    peclet: f64,
    dx_hat: f64,
    opts: TransportOptions,
    /// Constant part of the system matrix (time + advection + diffusion).
    base: CsrMatrix,
    /// Offset of each diagonal entry in the CSR value array.
    diag_pos: Vec<usize>,
    /// Constant boundary contributions to the right-hand side.
    rhs_const: Vec<f64>,
    inlet_faces: Vec<BoundaryFace>,
    outlet_faces: Vec<BoundaryFace>,
    time_coef: f64,
    budget: MassBudget,
}

impl<'a> TransportSolver<'a> {
    pub fn new(
        grid: &'a VoxelGrid,
        index: &'a FaceIndex,
        flow: &FlowField,
        peclet: f64,
        dx_hat: f64,
        isotherms: Vec<Isotherm>,
        opts: TransportOptions,
    ) -> Result<Self, TransportError> {
        if !peclet.is_finite() || peclet <= 0.0 {
            return Err(TransportError::InfinitePeclet);
        }
        if !(opts.dt_hat > 0.0) {
            return Err(TransportError::BadTimestep(opts.dt_hat));
        }
        let div = max_divergence(grid, index, flow, dx_hat);
        if div > opts.div_check_tol {
            return Err(TransportError::NotDivergenceFree(div));
        }
        for f in index.faces() {
            if f.boundary_type >= isotherms.len() {
                return Err(TransportError::UnknownClass(f.boundary_type));
            }
        }

        let n = index.n_cells();
        let area = dx_hat * dx_hat;
        let k_diff_cell = dx_hat / peclet; // δx̂²·(1/Pe)/δx̂, interior faces
        let k_diff_half = 2.0 * dx_hat / peclet; // half-cell boundary gradient
        let time_coef = dx_hat * dx_hat * dx_hat / opts.dt_hat;

        let mut builder = CsrBuilder::new(n);
        let mut rhs_const = vec![0.0; n];
        let mut inlet_faces = Vec::new();
        let mut outlet_faces = Vec::new();
        for c in 0..n {
            let p = grid.voxel_coords(index.voxel_of_cell(c));
            let mut entries: Vec<(usize, f64)> = Vec::with_capacity(7);
            let mut diag = time_coef;
            for (kind, dir) in index.kinds(c).iter().zip(FaceDir::ALL) {
                let v_out = flow.outward_velocity(p, dir);
                match kind {
                    FaceKind::Fluid(nb) => {
                        // upwind advection: donor cell takes the flux
                        if v_out >= 0.0 {
                            diag += area * v_out;
                        } else {
                            entries.push((*nb, area * v_out));
                        }
                        diag += k_diff_cell;
                        entries.push((*nb, -k_diff_cell));
                    }
                    FaceKind::Inlet => {
                        if v_out < 0.0 {
                            // inflow carries the boundary value ĉ = 1
                            rhs_const[c] += -area * v_out;
                        } else {
                            diag += area * v_out;
                        }
                        diag += k_diff_half;
                        rhs_const[c] += k_diff_half;
                        inlet_faces.push(BoundaryFace {
                            cell: c as u32,
                            v_out,
                        });
                    }
                    FaceKind::Outlet => {
                        // donor-cell outflow, zero diffusive flux
                        diag += area * v_out;
                        outlet_faces.push(BoundaryFace {
                            cell: c as u32,
                            v_out,
                        });
                    }
                    FaceKind::Wall => {}
                    FaceKind::Reactive(_) => {} // per-step Robin terms
                }
            }
            entries.push((c, diag));
            builder.push_row(&entries);
        }
        let base = builder.finish();
        let diag_pos = (0..n)
            .map(|c| {
                let (cols, _) = base.row(c);
                let k = cols.iter().position(|&j| j == c).expect("diagonal seeded");
                base.row_offset(c) + k
            })
            .collect();

        Ok(TransportSolver {
            index,
            isotherms,
            peclet,
            dx_hat,
            opts,
            base,
            diag_pos,
            rhs_const,
            inlet_faces,
            outlet_faces,
            time_coef,
            budget: MassBudget::default(),
        })
    }

    pub fn dt_hat(&self) -> f64 {
        self.opts.dt_hat
    }

    pub fn budget(&self) -> MassBudget {
        self.budget
    }

    pub fn set_budget(&mut self, budget: MassBudget) {
        self.budget = budget;
    }

    /// Totals of the current state.
    pub fn totals(&self, state: &TransportState) -> (f64, f64) {
        let vol = self.dx_hat * self.dx_hat * self.dx_hat;
        let area = self.dx_hat * self.dx_hat;
        let dissolved = state.c_hat.iter().sum::<f64>() * vol;
        let adsorbed = state.m_hat.iter().sum::<f64>() * area;
        (dissolved, adsorbed)
    }

    /// Assembles the implicit system for one step from the given state.
    /// Returns the system and the per-reactive-face Robin closures used.
    pub fn assemble(&self, state: &TransportState) -> (SparseSystem, Vec<RobinFace>) {
        let n = self.index.n_cells();
        let area = self.dx_hat * self.dx_hat;
        let dt = self.opts.dt_hat;
        let mut matrix = self.base.clone();
        let mut rhs = vec![0.0; n];
        for c in 0..n {
            rhs[c] = self.rhs_const[c] + self.time_coef * state.c_hat[c];
        }
        let mut robins = Vec::with_capacity(self.index.faces().len());
        for (fi, face) in self.index.faces().iter().enumerate() {
            let iso = &self.isotherms[face.boundary_type];
            let rf = iso.robin_face_coefficients(
                state.c_face[fi],
                state.m_hat[fi],
                dt,
                self.peclet,
                self.dx_hat,
            );
            let (diag_add, rhs_add) = rf.eliminate();
            matrix.values_mut()[self.diag_pos[face.fluid_cell]] += area * diag_add;
            rhs[face.fluid_cell] += area * rhs_add;
            robins.push(rf);
        }
        (SparseSystem::new(matrix, rhs), robins)
    }

    /// One implicit Euler step: solve for ĉ^{k+1}, advance m̂ per face with
    /// the same flux coefficients, update the clock and the mass budget.
    pub fn advance_step(&mut self, state: &mut TransportState) -> Result<BudgetRow, TransportError> {
        let (system, robins) = self.assemble(state);
        let (mut c_new, report) = bicgstab(&system, &state.c_hat, &self.opts.linear)
            .map_err(|source| TransportError::Solve {
                step: state.step,
                source,
            })?;
        if !report.converged {
            return Err(TransportError::Stalled {
                step: state.step,
                residual: report.residual,
            });
        }
        for (cell, c) in c_new.iter_mut().enumerate() {
            if *c < 0.0 {
                if *c < -1e-12 {
                    return Err(TransportError::NegativeConcentration {
                        cell,
                        value: *c,
                        step: state.step,
                    });
                }
                *c = 0.0;
                state.clamped += 1;
            }
        }

        let dt = self.opts.dt_hat;
        let area = self.dx_hat * self.dx_hat;
        let (dissolved_old, adsorbed_old) = self.totals(state);

        // advance the surface concentrations with the assembled closures
        for (fi, face) in self.index.faces().iter().enumerate() {
            let rf = &robins[fi];
            let cf = rf.face_value(c_new[face.fluid_cell]);
            state.m_hat[fi] = (state.m_hat[fi] + dt * rf.flux(cf)).max(0.0);
            state.c_face[fi] = cf.max(0.0);
        }

        // boundary fluxes at the new time level, matching the assembly
        let k_diff_half = 2.0 * self.dx_hat / self.peclet;
        let mut influx_rate = 0.0;
        for bf in &self.inlet_faces {
            let c = c_new[bf.cell as usize];
            let adv = if bf.v_out < 0.0 {
                area * bf.v_out * 1.0
            } else {
                area * bf.v_out * c
            };
            let diff = -k_diff_half * (1.0 - c);
            influx_rate += -(adv + diff);
        }
        let mut outflux_rate = 0.0;
        for bf in &self.outlet_faces {
            outflux_rate += area * bf.v_out * c_new[bf.cell as usize];
        }

        state.c_hat = c_new;
        state.step += 1;
        state.t_hat = state.step as f64 * dt;

        self.budget.influx += dt * influx_rate;
        self.budget.outflux += dt * outflux_rate;
        let (dissolved, adsorbed) = self.totals(state);
        self.budget.dissolved = dissolved;
        self.budget.adsorbed = adsorbed;

        let delta = (dissolved + adsorbed) - (dissolved_old + adsorbed_old);
        let expected = dt * (influx_rate - outflux_rate);
        let scale = dissolved
            .abs()
            .max(adsorbed.abs())
            .max(self.budget.influx.abs())
            .max(1e-30);
        let balance_error = (delta - expected).abs() / scale;

        Ok(BudgetRow {
            step: state.step,
            t_hat: state.t_hat,
            dissolved,
            adsorbed,
            influx: self.budget.influx,
            outflux: self.budget.outflux,
            balance_error,
        })
    }
}

/// Result of a transport run: states captured at save points plus the
/// full budget history (one row per step).
pub struct TransportRun {
    pub snapshots: Vec<TransportState>,
    pub budget: Vec<BudgetRow>,
    pub final_state: TransportState,
}

/// Advances from `state0` to `t_end_hat`, capturing snapshots at every
/// multiple of `save_every` (and at the end time). `save_every = 0`
/// captures only the final state; `t_end_hat = 0` returns the initial
/// state untouched.
pub fn run_transport(
    solver: &mut TransportSolver,
    state0: TransportState,
    t_end_hat: f64,
    save_every: f64,
) -> Result<TransportRun, TransportError> {
    let mut state = state0;
    let mut snapshots = Vec::new();
    let mut budget = Vec::new();
    if t_end_hat <= 0.0 {
        let final_state = state.clone();
        snapshots.push(state);
        return Ok(TransportRun {
            snapshots,
            budget,
            final_state,
        });
    }
    let dt = solver.dt_hat();
    let n_steps = (t_end_hat / dt).round().max(1.0) as usize;
    let save_stride = if save_every > 0.0 {
        (save_every / dt).round().max(1.0) as usize
    } else {
        n_steps
    };
    for k in 1..=n_steps {
        let row = solver.advance_step(&mut state)?;
        budget.push(row);
        if k % save_stride == 0 || k == n_steps {
            snapshots.push(state.clone());
        }
    }
    let final_state = state;
    Ok(TransportRun {
        snapshots,
        budget,
        final_state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Axis, VoxelGrid};

    #[test]
    fn rejects_divergent_flow() {
        let grid = VoxelGrid::all_fluid([2, 2, 4], 0.25, Axis::Z);
        let index = FaceIndex::build(&grid);
        let mut flow = FlowField::uniform(&grid, 1.0);
        // break mass conservation in one cell
        let fd2 = [2, 2, 5];
        flow.vel[2][fd2[0] * fd2[1] * 2] = 0.5;
        let err = TransportSolver::new(
            &grid,
            &index,
            &flow,
            10.0,
            0.25,
            vec![Isotherm::Inert],
            TransportOptions::default(),
        );
        assert!(matches!(err, Err(TransportError::NotDivergenceFree(_))));
    }

    #[test]
    fn rejects_infinite_peclet() {
        let grid = VoxelGrid::all_fluid([2, 2, 2], 0.5, Axis::Z);
        let index = FaceIndex::build(&grid);
        let flow = FlowField::uniform(&grid, 1.0);
        let err = TransportSolver::new(
            &grid,
            &index,
            &flow,
            f64::INFINITY,
            0.5,
            vec![Isotherm::Inert],
            TransportOptions::default(),
        );
        assert!(matches!(err, Err(TransportError::InfinitePeclet)));
    }

    #[test]
    fn zero_end_time_returns_initial_snapshot_only() {
        let grid = VoxelGrid::all_fluid([2, 2, 2], 0.5, Axis::Z);
        let index = FaceIndex::build(&grid);
        let flow = FlowField::uniform(&grid, 1.0);
        let mut solver = TransportSolver::new(
            &grid,
            &index,
            &flow,
            10.0,
            0.5,
            vec![Isotherm::Inert],
            TransportOptions::default(),
        )
        .unwrap();
        let state = TransportState::uniform(&index, 1.0, 0.0);
        let run = run_transport(&mut solver, state, 0.0, 0.1).unwrap();
        assert_eq!(run.snapshots.len(), 1);
        assert_eq!(run.budget.len(), 0);
        assert_eq!(run.snapshots[0].t_hat, 0.0);
    }

    #[test]
    fn snapshot_count_matches_step_count_when_saving_every_step() {
        let grid = VoxelGrid::all_fluid([2, 2, 3], 0.5, Axis::Z);
        let index = FaceIndex::build(&grid);
        let flow = FlowField::uniform(&grid, 1.0);
        let opts = TransportOptions {
            dt_hat: 0.05,
            ..Default::default()
        };
        let mut solver =
            TransportSolver::new(&grid, &index, &flow, 10.0, 0.5, vec![Isotherm::Inert], opts)
                .unwrap();
        let state = TransportState::uniform(&index, 1.0, 0.0);
        let run = run_transport(&mut solver, state, 0.5, 0.05).unwrap();
        assert_eq!(run.snapshots.len(), 10);
        assert_eq!(run.budget.len(), 10);
    }
}
