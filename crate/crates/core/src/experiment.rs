//! Batch experiments: random obstacle rooms, per-world method comparisons
//! and vantage-grid / patch-resolution sweeps.

use serde::{Deserialize, Serialize};

use crate::geometry::P3;
use crate::milp::MilpStatus;
use crate::planner::{
    evaluate_fluence, milp_on_scene, prepare_scene, static_on_scene, two_stage_on_scene, Method, MilpOptions, Plan, PlanError,
    PlannerConfig, Scene,
};
use crate::roadmap::{centred_anchor, Workspace};
use crate::worldgen::{generate_room_in_range, ObstacleParams, Rect, World2p5D, WorldError, WorldModel};

/// Side of the square experiment rooms (m).
pub const ROOM_SIZE: f64 = 4.0;
pub const ROOM_WALL_HEIGHT: f64 = 2.0;
/// Inclusive obstacle-count range of the experiment rooms.
pub const ROOM_OBSTACLES: (usize, usize) = (7, 19);

/// Obstacle shapes used by the experiment rooms: smaller and flatter than
/// the generator defaults so most faces can be seen from open floor.
pub fn room_obstacle_params() -> ObstacleParams {
    ObstacleParams { radius: (0.2, 0.5), aspect: (0.2, 0.6), ..ObstacleParams::default() }
}

/// 4 m × 4 m room with 7 to 19 obstacles and 2 m walls.
pub fn experiment_room(seed: u64, patch_resolution: f64) -> Result<World2p5D, WorldError> {
    let mut w = generate_room_in_range(
        seed,
        Rect::new(0.0, 0.0, ROOM_SIZE, ROOM_SIZE),
        ROOM_OBSTACLES.0,
        ROOM_OBSTACLES.1,
        ROOM_WALL_HEIGHT,
        &room_obstacle_params(),
    )?;
    w.patch_resolution = patch_resolution;
    Ok(w)
}

/// Summary of one plan on one scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method: Method,
    pub total_time: f64,
    pub total_dwell: f64,
    pub travel_time: f64,
    pub dwell_fraction: f64,
    pub path_length: f64,
    pub open_path_length: f64,
    /// Vantages visited.
    pub n_selected: usize,
    pub solve_seconds: f64,
    pub coverage_fraction: f64,
    pub visible_coverage_fraction: f64,
    pub gap: Option<f64>,
    pub nodes: Option<usize>,
    pub milp_status: Option<MilpStatus>,
}

impl MethodResult {
    pub fn from_plan(plan: &Plan, scene: &Scene, cfg: &PlannerConfig) -> Self {
        let cov = evaluate_fluence(plan, &scene.irradiance, &scene.areas(), cfg.mu_min);
        MethodResult {
            method: plan.method,
            total_time: plan.total_time,
            total_dwell: plan.total_dwell,
            travel_time: plan.travel_time,
            dwell_fraction: plan.dwell_fraction(),
            path_length: plan.path_length,
            open_path_length: plan.open_path_length,
            n_selected: plan.tour.order.len(),
            solve_seconds: plan.solve_seconds,
            coverage_fraction: cov.coverage_fraction,
            visible_coverage_fraction: cov.visible_coverage_fraction,
            gap: plan.gap,
            nodes: plan.nodes,
            milp_status: None,
        }
    }
}

/// Method compared against the two-stage planner.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Contender {
    LpTsp,
    Milp(MilpOptions),
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldComparison {
    pub name: String,
    /// Vantages in the scene.
    pub n_vantages: usize,
    pub n_patches: usize,
    pub scene_seconds: f64,
    pub two_stage: Option<MethodResult>,
    pub contender: Option<MethodResult>,
    /// First stage failure, if any.
    pub error: Option<String>,
}

impl WorldComparison {
    /// `100 (two-stage − contender) / contender` for a chosen quantity.
    pub fn pct_diff(&self, f: impl Fn(&MethodResult) -> f64) -> Option<f64> {
        let (a, b) = (self.two_stage.as_ref()?, self.contender.as_ref()?);
        let (x, y) = (f(a), f(b));
        Some(if y != 0.0 { 100.0 * (x - y) / y } else if x == 0.0 { 0.0 } else { f64::INFINITY })
    }

    /// `contender / two-stage` total time.
    pub fn time_ratio(&self) -> Option<f64> {
        Some(self.contender.as_ref()?.total_time / self.two_stage.as_ref()?.total_time)
    }

    pub fn ok(&self) -> bool {
        self.error.is_none() && self.two_stage.is_some() && self.contender.is_some()
    }
}

/// Runs the two-stage planner and the contender on one world. Failures are
/// recorded rather than returned.
pub fn compare_world(name: &str, world: &WorldModel, cfg: &PlannerConfig, contender: Contender) -> WorldComparison {
    let mut row = WorldComparison {
        name: name.to_string(),
        n_vantages: 0,
        n_patches: 0,
        scene_seconds: 0.0,
        two_stage: None,
        contender: None,
        error: None,
    };
    let scene = match prepare_scene(world, cfg) {
        Ok(s) => s,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.n_vantages = scene.vantages.len();
    row.n_patches = scene.patches.len();
    row.scene_seconds = scene.build_seconds;
    let two = match two_stage_on_scene(&scene, cfg) {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    row.two_stage = Some(MethodResult::from_plan(&two, &scene, cfg));
    match contender {
        Contender::LpTsp => row.contender = row.two_stage.clone(),
        Contender::Static => row.contender = Some(MethodResult::from_plan(&static_on_scene(&scene, cfg), &scene, cfg)),
        Contender::Milp(opts) => match milp_on_scene(&scene, cfg, &two, &opts) {
            Ok((plan, sol)) => {
                let mut r = MethodResult::from_plan(&plan, &scene, cfg);
                r.milp_status = Some(sol.status);
                row.contender = Some(r);
            }
            Err(e) => row.error = Some(e.to_string()),
        },
    }
    row
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<WorldComparison>,
    pub n_ok: usize,
    pub n_failed: usize,
    /// Means over the worlds where both methods succeeded.
    pub mean_pct_total_time: f64,
    pub mean_pct_dwell: f64,
    pub mean_pct_path_length: f64,
    pub mean_time_ratio: f64,
    pub mean_two_stage_dwell_fraction: f64,
    pub mean_contender_dwell_fraction: f64,
    pub mean_two_stage_seconds: f64,
    pub mean_contender_seconds: f64,
}

impl ComparisonReport {
    pub fn from_rows(rows: Vec<WorldComparison>) -> Self {
        let ok: Vec<&WorldComparison> = rows.iter().filter(|r| r.ok()).collect();
        let mean = |f: &dyn Fn(&WorldComparison) -> f64| {
            if ok.is_empty() {
                f64::NAN
            } else {
                ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
            }
        };
        let two = |r: &WorldComparison| r.two_stage.clone().expect("ok row");
        let other = |r: &WorldComparison| r.contender.clone().expect("ok row");
        ComparisonReport {
            n_ok: ok.len(),
            n_failed: rows.len() - ok.len(),
            mean_pct_total_time: mean(&|r| r.pct_diff(|m| m.total_time).unwrap_or(f64::NAN)),
            mean_pct_dwell: mean(&|r| r.pct_diff(|m| m.total_dwell).unwrap_or(f64::NAN)),
            mean_pct_path_length: mean(&|r| r.pct_diff(|m| m.path_length).unwrap_or(f64::NAN)),
            mean_time_ratio: mean(&|r| r.time_ratio().unwrap_or(f64::NAN)),
            mean_two_stage_dwell_fraction: mean(&|r| two(r).dwell_fraction),
            mean_contender_dwell_fraction: mean(&|r| other(r).dwell_fraction),
            mean_two_stage_seconds: mean(&|r| two(r).solve_seconds),
            mean_contender_seconds: mean(&|r| other(r).solve_seconds),
            rows,
        }
    }
}

pub fn compare_batch(worlds: &[(String, WorldModel)], cfg: &PlannerConfig, contender: Contender) -> ComparisonReport {
    let rows = worlds.iter().map(|(name, w)| compare_world(name, w, cfg, contender)).collect();
    ComparisonReport::from_rows(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepAxis {
    /// Vantage-grid spacing, on grids sharing the coarsest level's anchor.
    VantageGrid,
    /// Wall subdivision length (extruded worlds only).
    PatchResolution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepLevel {
    pub value: f64,
    pub n_vantages: usize,
    pub n_patches: usize,
    pub total_dwell: f64,
    pub total_time: f64,
    pub path_length: f64,
    pub n_selected: usize,
    /// The three quantities above divided by those of the coarsest level.
    pub normalized_dwell: f64,
    pub normalized_path_length: f64,
    pub normalized_selected: f64,
    pub coverage_fraction: f64,
}

/// Two-stage plans over a list of resolutions, normalized by the coarsest
/// (largest) value in the list.
pub fn sweep_resolution(world: &WorldModel, cfg: &PlannerConfig, axis: SweepAxis, values: &[f64]) -> Result<Vec<SweepLevel>, PlanError> {
    let Some(coarsest) = values.iter().copied().reduce(f64::max) else { return Ok(Vec::new()) };
    let mut cfg = cfg.clone();
    if axis == SweepAxis::VantageGrid && cfg.grid_anchor.is_none() {
        let ws = Workspace::new(world, &cfg.robot)?;
        let (lo, hi) = ws.bounds();
        cfg.grid_anchor = Some(P3::new(
            centred_anchor(lo.x, hi.x, coarsest),
            centred_anchor(lo.y, hi.y, coarsest),
            if ws.is_planar() { lo.z } else { centred_anchor(lo.z, hi.z, coarsest) },
        ));
    }
    let mut levels = Vec::with_capacity(values.len());
    for &value in values {
        let (level_world, level_cfg) = match axis {
            SweepAxis::VantageGrid => (world.clone(), PlannerConfig { grid_spacing: value, ..cfg.clone() }),
            SweepAxis::PatchResolution => match world {
                WorldModel::Extruded(w) => (WorldModel::Extruded(World2p5D { patch_resolution: value, ..w.clone() }), cfg.clone()),
                WorldModel::Mesh(_) => {
                    return Err(PlanError::World(WorldError::Invalid("patch-resolution sweeps need an extruded world".into())))
                }
            },
        };
        let scene = prepare_scene(&level_world, &level_cfg)?;
        let plan = two_stage_on_scene(&scene, &level_cfg)?;
        let cov = evaluate_fluence(&plan, &scene.irradiance, &scene.areas(), level_cfg.mu_min);
        levels.push(SweepLevel {
            value,
            n_vantages: scene.vantages.len(),
            n_patches: scene.patches.len(),
            total_dwell: plan.total_dwell,
            total_time: plan.total_time,
            path_length: plan.path_length,
            n_selected: plan.tour.order.len(),
            normalized_dwell: 1.0,
            normalized_path_length: 1.0,
            normalized_selected: 1.0,
            coverage_fraction: cov.coverage_fraction,
        });
    }
    let base = levels.iter().position(|l| l.value == coarsest).expect("coarsest level present");
    let (d0, p0, s0) = (levels[base].total_dwell, levels[base].path_length, levels[base].n_selected as f64);
    let ratio = |x: f64, y: f64| if y != 0.0 { x / y } else if x == 0.0 { 1.0 } else { f64::INFINITY };
    for l in &mut levels {
        l.normalized_dwell = ratio(l.total_dwell, d0);
        l.normalized_path_length = ratio(l.path_length, p0);
        l.normalized_selected = ratio(l.n_selected as f64, s0);
    }
    Ok(levels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_room() -> WorldModel {
        let mut w = World2p5D::empty(Rect::new(0.0, 0.0, 2.0, 2.0), 1.0);
        w.patch_resolution = 0.5;
        WorldModel::Extruded(w)
    }

    fn cfg() -> PlannerConfig {
        PlannerConfig { grid_spacing: 0.5, ..Default::default() }
    }

    #[test]
    fn experiment_rooms_are_deterministic_and_in_range() {
        for seed in 1..6 {
            let a = experiment_room(seed, 0.25).unwrap();
            assert_eq!(a, experiment_room(seed, 0.25).unwrap());
            assert!((ROOM_OBSTACLES.0..=ROOM_OBSTACLES.1).contains(&a.obstacles.len()));
            assert_eq!(a.patch_resolution, 0.25);
        }
    }

    #[test]
    fn method_against_itself_has_zero_differences() {
        let r = compare_batch(&[("open".into(), open_room())], &cfg(), Contender::LpTsp);
        assert_eq!((r.n_ok, r.n_failed), (1, 0));
        assert_eq!(r.mean_pct_total_time, 0.0);
        assert_eq!(r.mean_pct_path_length, 0.0);
        assert_eq!(r.mean_time_ratio, 1.0);
    }

    #[test]
    fn failures_are_recorded_and_batch_continues() {
        let tiny = WorldModel::Extruded(World2p5D::empty(Rect::new(0.0, 0.0, 0.1, 0.1), 1.0));
        let worlds = vec![("tiny".to_string(), tiny), ("open".to_string(), open_room())];
        let r = compare_batch(&worlds, &cfg(), Contender::Static);
        assert_eq!((r.n_ok, r.n_failed), (1, 1));
        assert!(r.rows[0].error.as_deref().unwrap().contains("stage"));
    }

    #[test]
    fn single_level_sweep_is_normalized_to_one() {
        for axis in [SweepAxis::VantageGrid, SweepAxis::PatchResolution] {
            let levels = sweep_resolution(&open_room(), &cfg(), axis, &[0.5]).unwrap();
            assert_eq!(levels.len(), 1);
            assert_eq!(levels[0].normalized_dwell, 1.0);
            assert_eq!(levels[0].normalized_path_length, 1.0);
            assert_eq!(levels[0].normalized_selected, 1.0);
        }
    }

    #[test]
    fn grid_sweep_levels_nest() {
        let levels = sweep_resolution(&open_room(), &cfg(), SweepAxis::VantageGrid, &[0.5, 0.25]).unwrap();
        assert!(levels[1].n_vantages > levels[0].n_vantages);
        // the coarse grid's points are all on the fine grid, so the LP can only improve
        assert!(levels[1].total_dwell <= levels[0].total_dwell * (1.0 + 1e-6));
    }
}
