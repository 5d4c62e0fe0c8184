use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use porevox_cli::config::{parse_config, SimulationConfig};
use porevox_cli::pipeline::{prepare, run_flow_only, run_pipeline};
use porevox_core::geometry::{connectivity, FaceKind};

#[derive(Parser)]
#[command(
    name = "porevox",
    about = "Pore-scale flow and reactive solute transport on voxel geometries",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Simulation config file (key = value lines with [material.N] sections)
    #[arg(long)]
    config: PathBuf,
    /// Override the configured output directory
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Override the snapshot interval (same time units as t_end)
    #[arg(long)]
    save_every: Option<f64>,
    /// Dump the first assembled transport system in Matrix Market format
    #[arg(long)]
    dump_system: bool,
    /// Worker threads for the data-parallel sweeps
    #[arg(long)]
    threads: Option<usize>,
    /// Force sequential reductions so outputs are bit-reproducible
    #[arg(long)]
    deterministic: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Print the dimensionless groups for a configuration
    Groups {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Print geometry statistics (porosity, interface faces, connectivity)
    Inspect {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Solve the steady flow field and export it
    Flow {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the full pipeline: flow, transport, exports
    Run {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn load(common: &CommonArgs) -> Result<SimulationConfig, String> {
    let mut config = parse_config(&common.config).map_err(|e| e.to_string())?;
    if let Some(dir) = &common.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(s) = common.save_every {
        config.save_every = s;
    }
    if common.dump_system {
        config.dump_system = true;
    }
    if let Some(t) = common.threads {
        config.threads = t.max(1);
    }
    if common.deterministic {
        config.deterministic = true;
    }
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build_global();
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Groups { common } => load(common).and_then(|config| {
            let (_, _, groups, _) = prepare(&config).map_err(|e| e.to_string())?;
            print!("{}", groups.render());
            Ok(())
        }),
        Command::Inspect { common } => load(common).and_then(|config| {
            let (grid, index, groups, length_scale) =
                prepare(&config).map_err(|e| e.to_string())?;
            let [nx, ny, nz] = grid.dims();
            println!("dims={nx}x{ny}x{nz}");
            println!("voxel_size={:e}", grid.voxel_size());
            println!("flow_axis={}", grid.flow_axis());
            println!("padding={},{}", grid.padding().0, grid.padding().1);
            println!("length_scale={length_scale:e}");
            println!("fluid_voxels={}", grid.fluid_voxel_count());
            println!("porosity={:.6}", grid.porosity(false));
            println!("porosity_excluding_padding={:.6}", grid.porosity(true));
            let mut counts = [0usize; 5];
            for c in index.cells() {
                for kind in index.kinds(c) {
                    let slot = match kind {
                        FaceKind::Fluid(_) => 0,
                        FaceKind::Reactive(_) => 1,
                        FaceKind::Inlet => 2,
                        FaceKind::Outlet => 3,
                        FaceKind::Wall => 4,
                    };
                    counts[slot] += 1;
                }
            }
            println!("faces_fluid={}", counts[0]);
            println!("faces_reactive={}", counts[1]);
            println!("faces_inlet={}", counts[2]);
            println!("faces_outlet={}", counts[3]);
            println!("faces_wall={}", counts[4]);
            let conn = connectivity(&grid, &index);
            println!("isolated_fluid_cells={}", conn.isolated_cells);
            println!("has_through_path={}", conn.has_through_path);
            println!("Re={:.6e}", groups.reynolds);
            println!("Pe={:.6e}", groups.peclet);
            Ok(())
        }),
        Command::Flow { common } => load(common).and_then(|config| {
            let summary = run_flow_only(&config).map_err(|e| e.to_string())?;
            eprintln!(
                "flow converged in {} steps (residual {:.3e}, max divergence {:.3e})",
                summary.flow_steps, summary.flow_residual, summary.max_divergence
            );
            Ok(())
        }),
        Command::Run { common } => load(common).and_then(|config| {
            let summary = run_pipeline(&config).map_err(|e| e.to_string())?;
            eprintln!(
                "flow: {} steps (residual {:.3e}); transport: {} steps",
                summary.flow_steps,
                summary.flow_residual,
                summary.budget.len()
            );
            if let Some(state) = &summary.final_state {
                eprintln!(
                    "final t_hat = {:.6e}, clamped negatives = {}",
                    state.t_hat, state.clamped
                );
            }
            Ok(())
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
