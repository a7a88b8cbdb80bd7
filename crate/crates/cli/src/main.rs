//! Command-line front end: world generation, planning, batch comparisons and
//! resolution sweeps. All file quantities are SI (m, W, J/m², s).

mod svg;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use uvplan::experiment::{compare_batch, room_obstacle_params, sweep_resolution, Contender, SweepAxis, SweepLevel};
use uvplan::lp::DEFAULT_T_MAX;
use uvplan::milp::MilpStatus;
use uvplan::planner::{
    evaluate_fluence, milp_on_scene, prepare_scene, static_on_scene, two_stage_on_scene, CoverageReport, MilpOptions, Plan,
    PlannerConfig, RoadmapKind,
};
use uvplan::radiometry::LightSource;
use uvplan::roadmap::Robot;
use uvplan::tour::TourMode;
use uvplan::worldgen::{generate_random_room_with, generate_room_in_range, load_world, save_world, ObstacleParams, Rect, WorldModel};

#[derive(Parser)]
#[command(name = "uvplan", version, about = "Dwell-time and tour planning for mobile UV disinfection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate random obstacle rooms as world JSON files.
    GenWorld(GenWorldArgs),
    /// Plan one world and write the plan, coverage report and a picture.
    Plan(PlanCmd),
    /// Run the two-stage planner and another method on a batch of worlds.
    Compare(CompareCmd),
    /// Re-plan a batch of worlds over a list of grid or patch resolutions.
    SweepResolution(SweepCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum Shapes {
    /// Generator defaults: circumradius 0.2-0.8 m, aspect 0.5-1.
    Default,
    /// Experiment rooms: circumradius 0.2-0.5 m, aspect 0.2-0.6.
    Experiment,
}

#[derive(Args)]
struct GenWorldArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Exact obstacle count. Without it the count is drawn from the range.
    #[arg(long)]
    obstacles: Option<usize>,
    #[arg(long, default_value_t = 7)]
    min_obstacles: usize,
    #[arg(long, default_value_t = 19)]
    max_obstacles: usize,
    /// Number of rooms; seeds run from `--seed` upwards.
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Room side length (m).
    #[arg(long, default_value_t = 4.0)]
    size: f64,
    #[arg(long, default_value_t = 2.0)]
    wall_height: f64,
    #[arg(long, default_value_t = 0.125)]
    patch_resolution: f64,
    #[arg(long, value_enum, default_value_t = Shapes::Experiment)]
    shapes: Shapes,
    /// Output file for one room, or directory for a batch.
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum RobotKind {
    /// Round base carrying the light at a fixed height.
    Disc,
    /// Zero-radius base.
    Point,
    /// Light anywhere in free space (meshes).
    Free,
}

#[derive(Args, Clone)]
struct PlanArgs {
    /// Vantage grid spacing (m).
    #[arg(long, default_value_t = 0.1)]
    grid: f64,
    /// Required fluence (J/m²).
    #[arg(long, default_value_t = 280.0)]
    mu_min: f64,
    /// Radiant flux of the point source (W).
    #[arg(long, default_value_t = 80.0)]
    power: f64,
    /// Transit speed (m/s).
    #[arg(long, default_value_t = 0.5)]
    v_max: f64,
    /// Dwell budget (s).
    #[arg(long, default_value_t = DEFAULT_T_MAX)]
    t_max: f64,
    #[arg(long, value_enum, default_value_t = RobotKind::Disc)]
    robot: RobotKind,
    #[arg(long, default_value_t = 0.1)]
    robot_radius: f64,
    #[arg(long, default_value_t = 1.0)]
    light_height: f64,
    /// Build a PRM with this seed instead of the grid roadmap.
    #[arg(long)]
    prm_seed: Option<u64>,
    /// Plan an open path instead of a closed tour.
    #[arg(long)]
    open: bool,
    /// Cube-face resolution for mesh irradiance.
    #[arg(long, default_value_t = 512)]
    raster_resolution: usize,
    /// Override the wall subdivision length stored in extruded world files (m).
    #[arg(long)]
    patch_resolution: Option<f64>,
}

impl PlanArgs {
    fn config(&self) -> PlannerConfig {
        let robot = match self.robot {
            RobotKind::Disc => Robot::Disc { radius: self.robot_radius, light_height: self.light_height },
            RobotKind::Point => Robot::point(self.light_height),
            RobotKind::Free => Robot::FreeFlying,
        };
        PlannerConfig {
            light: LightSource::point(self.power),
            robot,
            grid_spacing: self.grid,
            mu_min: self.mu_min,
            t_max: self.t_max,
            v_max: self.v_max,
            roadmap: self.prm_seed.map_or(RoadmapKind::Grid, |seed| RoadmapKind::Prm { seed }),
            tour_mode: TourMode::Auto,
            closed_tour: !self.open,
            raster_resolution: self.raster_resolution,
            ..PlannerConfig::default()
        }
    }

    fn apply(&self, mut world: WorldModel) -> WorldModel {
        if let (Some(r), WorldModel::Extruded(w)) = (self.patch_resolution, &mut world) {
            w.patch_resolution = r;
        }
        world
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    LpTsp,
    Milp,
    Static,
}

#[derive(Args)]
struct MilpArgs {
    /// Branch-and-bound time limit (s).
    #[arg(long, default_value_t = 600.0)]
    milp_time_limit: f64,
}

#[derive(Args)]
struct PlanCmd {
    #[arg(long)]
    world: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::LpTsp)]
    method: MethodArg,
    #[arg(long, short)]
    out_dir: PathBuf,
    #[command(flatten)]
    plan: PlanArgs,
    #[command(flatten)]
    milp: MilpArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum AgainstArg {
    LpTsp,
    Milp,
    Static,
}

#[derive(Args)]
struct CompareCmd {
    /// World files.
    #[arg(required = true)]
    worlds: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = AgainstArg::Milp)]
    against: AgainstArg,
    /// JSON report path.
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    plan: PlanArgs,
    #[command(flatten)]
    milp: MilpArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Grid,
    Patches,
}

#[derive(Args)]
struct SweepCmd {
    #[arg(required = true)]
    worlds: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = AxisArg::Grid)]
    axis: AxisArg,
    /// Comma-separated resolutions (m).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 0.25, 0.125])]
    values: Vec<f64>,
    #[arg(long, short)]
    out: PathBuf,
    #[command(flatten)]
    plan: PlanArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenWorld(a) => gen_world(&a),
        Command::Plan(a) => plan(&a),
        Command::Compare(a) => compare(&a),
        Command::SweepResolution(a) => sweep(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn gen_world(a: &GenWorldArgs) -> Result<()> {
    let params = match a.shapes {
        Shapes::Default => ObstacleParams::default(),
        Shapes::Experiment => room_obstacle_params(),
    };
    let bounds = Rect::new(0.0, 0.0, a.size, a.size);
    let make = |seed: u64| -> Result<WorldModel> {
        let mut w = match a.obstacles {
            Some(n) => generate_random_room_with(seed, bounds, n, a.wall_height, &params)?,
            None => generate_room_in_range(seed, bounds, a.min_obstacles, a.max_obstacles, a.wall_height, &params)?,
        };
        w.patch_resolution = a.patch_resolution;
        Ok(WorldModel::Extruded(w))
    };
    if a.count <= 1 {
        save_world(&make(a.seed)?, &a.out)?;
        println!("wrote {}", a.out.display());
        return Ok(());
    }
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    for i in 0..a.count as u64 {
        let seed = a.seed + i;
        let path = a.out.join(format!("room_{seed:03}.json"));
        save_world(&make(seed)?, &path)?;
    }
    println!("wrote {} rooms to {}", a.count, a.out.display());
    Ok(())
}

#[derive(Serialize)]
struct SceneSummary {
    n_vantages: usize,
    unreachable_vantages: usize,
    n_patches: usize,
    build_seconds: f64,
}

#[derive(Serialize)]
struct MilpSummary {
    status: MilpStatus,
    objective: f64,
    bound: f64,
    gap: f64,
    nodes: usize,
}

#[derive(Serialize)]
struct PlanReport<'a> {
    config: &'a PlannerConfig,
    scene: SceneSummary,
    plan: &'a Plan,
    coverage: &'a CoverageReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    milp: Option<MilpSummary>,
}

#[derive(Serialize)]
struct TriangleFluence {
    triangle: usize,
    area: f64,
    fluence: f64,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn plan(a: &PlanCmd) -> Result<()> {
    let world = a.plan.apply(load_world(&a.world)?);
    let cfg = a.plan.config();
    let scene = prepare_scene(&world, &cfg)?;
    let (plan, milp) = match a.method {
        MethodArg::LpTsp => (two_stage_on_scene(&scene, &cfg)?, None),
        MethodArg::Static => (static_on_scene(&scene, &cfg), None),
        MethodArg::Milp => {
            let two = two_stage_on_scene(&scene, &cfg)?;
            let opts = MilpOptions { time_limit_s: a.milp.milp_time_limit, ..MilpOptions::default() };
            let (p, sol) = milp_on_scene(&scene, &cfg, &two, &opts)?;
            let summary = MilpSummary { status: sol.status, objective: sol.objective, bound: sol.bound, gap: sol.gap, nodes: sol.node_count };
            (p, Some(summary))
        }
    };
    let coverage = evaluate_fluence(&plan, &scene.irradiance, &scene.areas(), cfg.mu_min);
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let report = PlanReport {
        config: &cfg,
        scene: SceneSummary {
            n_vantages: scene.vantages.len(),
            unreachable_vantages: scene.unreachable_vantages,
            n_patches: scene.patches.len(),
            build_seconds: scene.build_seconds,
        },
        plan: &plan,
        coverage: &coverage,
        milp,
    };
    write_json(&a.out_dir.join("plan.json"), &report)?;
    match &world {
        WorldModel::Extruded(w) => {
            let picture = svg::render_plan(w, &scene.patches, &plan.fluence, cfg.mu_min, &plan.path, &plan.positions);
            fs::write(a.out_dir.join("plan.svg"), picture).context("writing plan.svg")?;
        }
        WorldModel::Mesh(_) => {
            let rows: Vec<TriangleFluence> = scene
                .patches
                .iter()
                .zip(&plan.fluence)
                .map(|(p, &f)| TriangleFluence { triangle: p.id, area: p.area, fluence: f })
                .collect();
            write_json(&a.out_dir.join("fluence.json"), &rows)?;
        }
    }
    println!(
        "{:?}: {} vantages, total {:.1} min (dwell {:.1}, travel {:.1}), path {:.2} m, coverage {:.1}% ({:.1}% of visible)",
        plan.method,
        plan.tour.order.len(),
        plan.total_time / 60.0,
        plan.total_dwell / 60.0,
        plan.travel_time / 60.0,
        plan.path_length,
        100.0 * coverage.coverage_fraction,
        100.0 * coverage.visible_coverage_fraction
    );
    Ok(())
}

fn load_batch(paths: &[PathBuf], args: &PlanArgs) -> Result<Vec<(String, WorldModel)>> {
    paths
        .iter()
        .map(|p| {
            let name = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok((name, args.apply(load_world(p)?)))
        })
        .collect()
}

fn compare(a: &CompareCmd) -> Result<()> {
    let worlds = load_batch(&a.worlds, &a.plan)?;
    let cfg = a.plan.config();
    let contender = match a.against {
        AgainstArg::LpTsp => Contender::LpTsp,
        AgainstArg::Static => Contender::Static,
        AgainstArg::Milp => Contender::Milp(MilpOptions { time_limit_s: a.milp.milp_time_limit, ..MilpOptions::default() }),
    };
    let report = compare_batch(&worlds, &cfg, contender);
    write_json(&a.out, &report)?;
    println!("{:<16} {:>12} {:>12} {:>9} {:>9} {:>9}", "world", "lp-tsp [min]", "other [min]", "diff %", "lp [s]", "other [s]");
    for r in &report.rows {
        match (&r.two_stage, &r.contender, &r.error) {
            (Some(t), Some(o), None) => println!(
                "{:<16} {:>12.2} {:>12.2} {:>9.3} {:>9.3} {:>9.3}",
                r.name,
                t.total_time / 60.0,
                o.total_time / 60.0,
                r.pct_diff(|m| m.total_time).unwrap_or(f64::NAN),
                t.solve_seconds,
                o.solve_seconds
            ),
            (_, _, Some(e)) => println!("{:<16} failed: {e}", r.name),
            _ => println!("{:<16} incomplete", r.name),
        }
    }
    println!(
        "mean over {} worlds: total-time diff {:.3}%, dwell diff {:.3}%, path diff {:.3}%, time ratio {:.2}, dwell fraction {:.3} / {:.3}",
        report.n_ok,
        report.mean_pct_total_time,
        report.mean_pct_dwell,
        report.mean_pct_path_length,
        report.mean_time_ratio,
        report.mean_two_stage_dwell_fraction,
        report.mean_contender_dwell_fraction
    );
    if report.n_failed > 0 {
        bail!("{} of {} worlds failed; see {}", report.n_failed, report.rows.len(), a.out.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepWorld {
    name: String,
    levels: Vec<SweepLevel>,
    error: Option<String>,
}

#[derive(Serialize)]
struct SweepMean {
    value: f64,
    normalized_dwell: f64,
    normalized_path_length: f64,
    normalized_selected: f64,
}

#[derive(Serialize)]
struct SweepReport {
    axis: &'static str,
    values: Vec<f64>,
    worlds: Vec<SweepWorld>,
    mean: Vec<SweepMean>,
}

fn sweep(a: &SweepCmd) -> Result<()> {
    let worlds = load_batch(&a.worlds, &a.plan)?;
    let cfg = a.plan.config();
    let (axis, name) = match a.axis {
        AxisArg::Grid => (SweepAxis::VantageGrid, "grid"),
        AxisArg::Patches => (SweepAxis::PatchResolution, "patches"),
    };
    let rows: Vec<SweepWorld> = worlds
        .iter()
        .map(|(n, w)| match sweep_resolution(w, &cfg, axis, &a.values) {
            Ok(levels) => SweepWorld { name: n.clone(), levels, error: None },
            Err(e) => SweepWorld { name: n.clone(), levels: Vec::new(), error: Some(e.to_string()) },
        })
        .collect();
    let ok: Vec<&SweepWorld> = rows.iter().filter(|r| r.error.is_none()).collect();
    let mean: Vec<SweepMean> = (0..a.values.len())
        .map(|i| {
            let avg = |f: &dyn Fn(&SweepLevel) -> f64| ok.iter().map(|r| f(&r.levels[i])).sum::<f64>() / ok.len().max(1) as f64;
            SweepMean {
                value: a.values[i],
                normalized_dwell: avg(&|l| l.normalized_dwell),
                normalized_path_length: avg(&|l| l.normalized_path_length),
                normalized_selected: avg(&|l| l.normalized_selected),
            }
        })
        .collect();
    println!("{:>8} {:>10} {:>10} {:>10}", "res [m]", "dwell", "path", "selected");
    for m in &mean {
        println!("{:>8.4} {:>10.3} {:>10.3} {:>10.3}", m.value, m.normalized_dwell, m.normalized_path_length, m.normalized_selected);
    }
    let failed: Vec<String> = rows.iter().filter_map(|r| r.error.as_ref().map(|e| format!("{}: {e}", r.name))).collect();
    write_json(&a.out, &SweepReport { axis: name, values: a.values.clone(), worlds: rows, mean })?;
    if !failed.is_empty() {
        bail!("{} worlds failed: {}", failed.len(), failed.join("; "));
    }
    Ok(())
}
