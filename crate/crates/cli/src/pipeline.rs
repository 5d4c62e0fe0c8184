//! End-to-end run pipeline: load and pad the geometry, compute the
//! dimensionless groups, solve steady flow, march the reactive transport
//! loop, and export visualization/diagnostic artifacts plus a manifest
//! of every resolved parameter.

use std::path::{Path, PathBuf};

use porevox_core::dimensionless::{compute_groups, DimensionlessGroups, FieldKind};
use porevox_core::flow::{solve_steady_flow, FlowField, FlowOptions, FlowReport};
use porevox_core::geometry::{load_geometry, FaceIndex, VoxelGrid};
use porevox_core::sparse::SolveOptions;
use porevox_core::transport::{
    run_transport, BudgetRow, TransportOptions, TransportSolver, TransportState,
};

use thiserror::Error;

use crate::config::SimulationConfig;
use crate::report::{
    file_sha256, write_budget_csv, write_manifest, write_residual_csv, write_surface_csv,
};
use crate::vtk::{write_vtk, VtkFields};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage_err<E: std::fmt::Display>(stage: &'static str) -> impl Fn(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        message: e.to_string(),
    }
}

pub struct RunSummary {
    pub groups: DimensionlessGroups,
    pub length_scale: f64,
    pub dx_hat: f64,
    pub flow_steps: usize,
    pub flow_residual: f64,
    pub max_divergence: f64,
    pub budget: Vec<BudgetRow>,
    pub final_state: Option<TransportState>,
    pub outputs: Vec<PathBuf>,
}

/// Loads the geometry, applies padding, and resolves the reference
/// length and dimensionless groups.
pub fn prepare(
    config: &SimulationConfig,
) -> Result<(VoxelGrid, FaceIndex, DimensionlessGroups, f64), PipelineError> {
    let grid = load_geometry(
        &config.geometry,
        config.voxel_size,
        config.flow_axis,
        config.material_map(),
    )
    .map_err(stage_err("load-geometry"))?;
    let grid = grid.pad_inlet_outlet(config.padding_layers);
    let length_scale = config
        .length_scale
        .unwrap_or_else(|| config.voxel_size * grid.dims()[config.flow_axis.index()] as f64);
    let groups =
        compute_groups(&config.physical_params(length_scale)).map_err(stage_err("groups"))?;
    let index = FaceIndex::build(&grid);
    Ok((grid, index, groups, length_scale))
}

fn flow_options(config: &SimulationConfig) -> FlowOptions {
    FlowOptions {
        tol_steady: config.tol_steady,
        div_tol: config.div_tol,
        max_steps: config.max_flow_steps,
        linear: SolveOptions {
            tol: config.linear_tol,
            max_iter: config.max_linear_iters,
            jacobi: true,
            deterministic: config.deterministic,
        },
        stokes: config.stokes_mode,
        wall_bc: config.wall_bc,
        inlet_speed: 1.0,
        dt_override: None,
    }
}

fn scatter_cells(index: &FaceIndex, values: &[f64], n_voxels: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_voxels];
    for c in index.cells() {
        out[index.voxel_of_cell(c)] = values[c];
    }
    out
}

fn velocity_per_voxel(grid: &VoxelGrid, flow: &FlowField, scale: f64) -> Vec<[f64; 3]> {
    let [nx, ny, nz] = grid.dims();
    let mut out = Vec::with_capacity(nx * ny * nz);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let v = flow.cell_velocity([x, y, z]);
                out.push([v[0] * scale, v[1] * scale, v[2] * scale]);
            }
        }
    }
    out
}

fn adsorbed_per_voxel(
    grid: &VoxelGrid,
    index: &FaceIndex,
    m_hat: &[f64],
    dx_hat: f64,
    scale: f64,
) -> Vec<f64> {
    let mut out = vec![0.0; grid.n_voxels()];
    for (face, m) in index.faces().iter().zip(m_hat) {
        out[index.voxel_of_cell(face.fluid_cell)] += scale * m / dx_hat;
    }
    out
}

/// Steady flow plus its exports. Returns the converged field, the step
/// report, and the artifact paths written.
pub fn run_flow_stage(
    config: &SimulationConfig,
    grid: &VoxelGrid,
    index: &FaceIndex,
    groups: &DimensionlessGroups,
    out_dir: &Path,
) -> Result<(FlowField, FlowReport, Vec<PathBuf>), PipelineError> {
    let (flow, report) = solve_steady_flow(grid, index, groups, flow_options(config))
        .map_err(stage_err("flow"))?;
    let mut outputs = Vec::new();

    let (vel_scale, p_field) = if config.dimensional_mode {
        let vel = groups.scales.v_in;
        let p: Vec<f64> = flow
            .p
            .iter()
            .map(|&q| groups.redimensionalize(FieldKind::Pressure, q))
            .collect();
        (vel, p)
    } else {
        (1.0, flow.p.clone())
    };
    let vtk_path = out_dir.join("flow.vtk");
    write_vtk(
        &vtk_path,
        grid,
        &VtkFields {
            pressure: Some(p_field),
            velocity: Some(velocity_per_voxel(grid, &flow, vel_scale)),
            concentration: None,
            adsorbed: None,
            material: true,
        },
    )
    .map_err(stage_err("flow-export"))?;
    outputs.push(vtk_path);

    let res_path = out_dir.join("residual.csv");
    write_residual_csv(&res_path, &report.residual_history).map_err(stage_err("flow-export"))?;
    outputs.push(res_path);
    Ok((flow, report, outputs))
}

/// Full pipeline. Writes all artifacts into the configured output
/// directory and finishes with a manifest; on a stage failure the
/// manifest still appears, carrying `status=failed:<stage>` and the list
/// of artifacts that did get written.
pub fn run_pipeline(config: &SimulationConfig) -> Result<RunSummary, PipelineError> {
    let out_dir = config.output_dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(stage_err("setup"))?;
    let mut manifest: Vec<(String, String)> = Vec::new();
    let mut outputs: Vec<PathBuf> = Vec::new();

    let result = run_pipeline_inner(config, &out_dir, &mut manifest, &mut outputs);
    let status = match &result {
        Ok(_) => "complete".to_string(),
        Err(PipelineError::Stage { stage, .. }) => format!("failed:{stage}"),
    };
    manifest.push(("status".into(), status));
    for (i, p) in outputs.iter().enumerate() {
        manifest.push((
            format!("output.{i}"),
            p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        ));
    }
    let manifest_path = out_dir.join("manifest.txt");
    write_manifest(&manifest_path, &manifest).map_err(stage_err("manifest"))?;
    result.map(|mut summary| {
        outputs.push(manifest_path);
        summary.outputs = outputs;
        summary
    })
}

fn push_config_entries(
    config: &SimulationConfig,
    length_scale: f64,
    manifest: &mut Vec<(String, String)>,
) {
    let mut add = |k: &str, v: String| manifest.push((k.to_string(), v));
    add("geometry", config.geometry.display().to_string());
    add("voxel_size", format!("{:e}", config.voxel_size));
    add("flow_axis", config.flow_axis.to_string());
    add("padding_layers", config.padding_layers.to_string());
    add("length_scale", format!("{length_scale:e}"));
    add("rho", format!("{:e}", config.rho));
    add("mu", format!("{:e}", config.mu));
    add("V_in", format!("{:e}", config.v_in));
    add("P_out", format!("{:e}", config.p_out));
    add("D", format!("{:e}", config.diffusivity));
    add("c_in", format!("{:e}", config.c_in));
    add("T", format!("{:e}", config.temperature));
    add("beta_frumkin", format!("{:e}", config.beta_frumkin));
    match config.dt {
        crate::config::TimeSpec::Hat(v) => add("dt_hat", format!("{v:e}")),
        crate::config::TimeSpec::Seconds(v) => add("dt", format!("{v:e}")),
    }
    add("t_end", format!("{:e}", config.t_end));
    add("save_every", format!("{:e}", config.save_every));
    add("c0_hat", format!("{:e}", config.c0_hat));
    add("m0_hat", format!("{:e}", config.m0_hat));
    add("tol_steady", format!("{:e}", config.tol_steady));
    add("div_tol", format!("{:e}", config.div_tol));
    add("linear_tol", format!("{:e}", config.linear_tol));
    add("max_linear_iters", config.max_linear_iters.to_string());
    add("max_flow_steps", config.max_flow_steps.to_string());
    add("stokes_mode", format!("{:?}", config.stokes_mode).to_lowercase());
    add(
        "wall_bc",
        match config.wall_bc {
            porevox_core::flow::WallBc::NoSlip => "noslip".into(),
            porevox_core::flow::WallBc::FreeSlip => "slip".into(),
        },
    );
    add("dimensional_mode", config.dimensional_mode.to_string());
    add("deterministic", config.deterministic.to_string());
    add("dump_system", config.dump_system.to_string());
    add("threads", config.threads.to_string());
    add("output_dir", config.output_dir.display().to_string());
    if let Some(code) = config.default_material {
        add("default_material", code.to_string());
    }
    for m in &config.materials {
        let p = format!("material.{}", m.code);
        add(&format!("{p}.isotherm"), m.isotherm.to_string());
        add(&format!("{p}.kappa_a"), format!("{:e}", m.kappa_a));
        add(&format!("{p}.kappa_d"), format!("{:e}", m.kappa_d));
        add(&format!("{p}.m_inf"), format!("{:e}", m.m_inf));
        add(&format!("{p}.slip_beta"), format!("{:e}", m.slip_beta));
    }
    for (k, v) in &config.defaults_applied {
        add(&format!("default.{k}"), v.clone());
    }
}

fn run_pipeline_inner(
    config: &SimulationConfig,
    out_dir: &Path,
    manifest: &mut Vec<(String, String)>,
    outputs: &mut Vec<PathBuf>,
) -> Result<RunSummary, PipelineError> {
    let (grid, index, groups, length_scale) = prepare(config)?;
    push_config_entries(config, length_scale, manifest);
    manifest.push((
        "geometry_sha256".into(),
        file_sha256(&config.geometry).map_err(stage_err("load-geometry"))?,
    ));
    let [nx, ny, nz] = grid.dims();
    manifest.push(("domain_dims".into(), format!("{nx}x{ny}x{nz}")));
    manifest.push((
        "porosity".into(),
        format!("{:.12e}", grid.porosity(false)),
    ));
    for line in groups.render().lines() {
        if let Some((k, v)) = line.split_once('=') {
            manifest.push((format!("groups.{k}"), v.to_string()));
        }
    }

    let (flow, report, flow_outputs) = run_flow_stage(config, &grid, &index, &groups, out_dir)?;
    outputs.extend(flow_outputs);
    manifest.push(("flow_steps".into(), report.steps.to_string()));
    manifest.push(("flow_residual".into(), format!("{:.6e}", report.residual)));
    manifest.push((
        "flow_max_divergence".into(),
        format!("{:.6e}", report.max_divergence),
    ));

    let dx_hat = groups.dx_hat(grid.voxel_size());
    let (dt_hat, t_end_hat, save_every_hat) = config.times_hat(groups.scales.v_in, length_scale);
    manifest.push(("dt_hat_resolved".into(), format!("{dt_hat:e}")));
    manifest.push(("t_end_hat_resolved".into(), format!("{t_end_hat:e}")));

    let isotherms = config.isotherms(&groups);
    let mut solver = TransportSolver::new(
        &grid,
        &index,
        &flow,
        groups.peclet,
        dx_hat,
        isotherms,
        TransportOptions {
            dt_hat,
            linear: SolveOptions {
                tol: config.linear_tol.min(1e-11),
                max_iter: config.max_linear_iters,
                jacobi: true,
                deterministic: config.deterministic,
            },
            div_check_tol: config.div_tol.max(1e-6),
        },
    )
    .map_err(stage_err("transport"))?;

    let state0 = TransportState::uniform(&index, config.c0_hat, config.m0_hat);
    if config.dump_system {
        let (system, _) = solver.assemble(&state0);
        let path = out_dir.join("system_step1.mtx");
        let mut f = std::fs::File::create(&path).map_err(stage_err("transport-export"))?;
        system
            .write_matrix_market(&mut f)
            .map_err(stage_err("transport-export"))?;
        outputs.push(path);
    }

    let run = run_transport(&mut solver, state0, t_end_hat, save_every_hat)
        .map_err(stage_err("transport"))?;

    let conc_scale = if config.dimensional_mode {
        groups.scales.c_in
    } else {
        1.0
    };
    for snap in &run.snapshots {
        let c = scatter_cells(&index, &snap.c_hat, grid.n_voxels());
        let c = if config.dimensional_mode {
            c.iter().map(|&v| v * conc_scale).collect()
        } else {
            c
        };
        let vtk_path = out_dir.join(format!("transport_{:06}.vtk", snap.step));
        write_vtk(
            &vtk_path,
            &grid,
            &VtkFields {
                pressure: None,
                velocity: None,
                concentration: Some(c),
                adsorbed: Some(adsorbed_per_voxel(
                    &grid, &index, &snap.m_hat, dx_hat, conc_scale,
                )),
                material: true,
            },
        )
        .map_err(stage_err("transport-export"))?;
        outputs.push(vtk_path);
        let csv_path = out_dir.join(format!("surface_{:06}.csv", snap.step));
        write_surface_csv(&csv_path, &grid, &index, &snap.m_hat, &groups)
            .map_err(stage_err("transport-export"))?;
        outputs.push(csv_path);
    }
    let budget_path = out_dir.join("budget.csv");
    write_budget_csv(&budget_path, &run.budget).map_err(stage_err("transport-export"))?;
    outputs.push(budget_path);

    manifest.push(("transport_steps".into(), run.budget.len().to_string()));
    manifest.push((
        "clamped_negatives".into(),
        run.final_state.clamped.to_string(),
    ));

    Ok(RunSummary {
        groups,
        length_scale,
        dx_hat,
        flow_steps: report.steps,
        flow_residual: report.residual,
        max_divergence: report.max_divergence,
        budget: run.budget,
        final_state: Some(run.final_state),
        outputs: Vec::new(),
    })
}

/// Flow-only pipeline (the `flow` subcommand): no transport loop.
pub fn run_flow_only(config: &SimulationConfig) -> Result<RunSummary, PipelineError> {
    let out_dir = config.output_dir.clone();
    std::fs::create_dir_all(&out_dir).map_err(stage_err("setup"))?;
    let mut manifest: Vec<(String, String)> = Vec::new();
    let (grid, index, groups, length_scale) = prepare(config)?;
    push_config_entries(config, length_scale, manifest.as_mut());
    manifest.push((
        "geometry_sha256".into(),
        file_sha256(&config.geometry).map_err(stage_err("load-geometry"))?,
    ));
    let result = run_flow_stage(config, &grid, &index, &groups, &out_dir);
    let status = match &result {
        Ok(_) => "complete".into(),
        Err(PipelineError::Stage { stage, .. }) => format!("failed:{stage}"),
    };
    manifest.push(("status".into(), status));
    let (flow, report, mut outputs) = result?;
    let _ = flow;
    manifest.push(("flow_steps".into(), report.steps.to_string()));
    manifest.push(("flow_residual".into(), format!("{:.6e}", report.residual)));
    for (i, p) in outputs.iter().enumerate() {
        manifest.push((
            format!("output.{i}"),
            p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
        ));
    }
    let manifest_path = out_dir.join("manifest.txt");
    write_manifest(&manifest_path, &manifest).map_err(stage_err("manifest"))?;
    outputs.push(manifest_path);
    Ok(RunSummary {
        groups,
        length_scale,
        dx_hat: 0.0,
        flow_steps: report.steps,
        flow_residual: report.residual,
        max_divergence: report.max_divergence,
        budget: Vec::new(),
        final_state: None,
        outputs,
    })
}
