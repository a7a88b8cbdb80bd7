//! End-to-end planning: vantage sampling, roadmap, irradiance matrix,
//! dwell-time LP, tour and playback path. Also the single-point static
//! baseline, the exact MILP planner over LP-selected candidates, and
//! fluence/coverage accounting.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::P3;
use crate::lp::{solve_dwell_times, DosingProblem, DosingSolution, LpError, DEFAULT_T_MAX};
use crate::milp::{build_milp, build_milp_open, open_path_order, solve_milp, BigM, BnbOptions, MilpError, MilpSolution, MilpStatus};
use crate::radiometry::{build_irradiance_matrix_with, IrradianceMatrix, LightSource, PatchIntegration};
use crate::raster3d::{mesh_irradiance_matrix, DEFAULT_RESOLUTION};
use crate::roadmap::{
    build_grid_roadmap, build_prm, sample_vantage_grid, sample_vantage_grid_anchored, shortest_path_matrix, PrmParams, Roadmap,
    RoadmapError, Robot, ShortestPaths, VantageSet, Workspace,
};
use crate::tour::{solve_tsp, Tour, TourError, TourMode};
use crate::visibility::build_visibility_graph;
use crate::worldgen::{discretize_surfaces, SurfacePatch, WorldError, WorldModel};

/// Dwell below this is treated as "not selected" (s).
pub const DWELL_EPS: f64 = 1e-6;
/// Fluence slack when testing a patch against `μ_min` (J/m²).
pub const COVERAGE_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("surface stage: {0}")]
    World(#[from] WorldError),
    #[error("roadmap stage: {0}")]
    Roadmap(#[from] RoadmapError),
    #[error("dwell LP stage: {0}")]
    Lp(#[from] LpError),
    #[error("tour stage: {0}")]
    Tour(#[from] TourError),
    #[error("milp stage: {0}")]
    Milp(#[from] MilpError),
    #[error("milp stage: {0} candidates exceed the limit of {1}")]
    TooManyCandidates(usize, usize),
    #[error("milp stage: no solution ({0:?})")]
    MilpNoSolution(MilpStatus),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RoadmapKind {
    Grid,
    Prm { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub light: LightSource,
    pub robot: Robot,
    /// Vantage grid spacing (m).
    pub grid_spacing: f64,
    /// Anchor shared by nested grids; `None` centres the grid in the room.
    pub grid_anchor: Option<P3>,
    /// Required fluence (J/m²).
    pub mu_min: f64,
    /// Dwell budget (s).
    pub t_max: f64,
    /// Transit speed (m/s).
    pub v_max: f64,
    pub roadmap: RoadmapKind,
    pub tour_mode: TourMode,
    pub closed_tour: bool,
    pub integration: PatchIntegration,
    /// Cube-face resolution for meshes.
    pub raster_resolution: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            light: LightSource::point(80.0),
            robot: Robot::Disc { radius: 0.1, light_height: 1.0 },
            grid_spacing: 0.1,
            grid_anchor: None,
            mu_min: 280.0,
            t_max: DEFAULT_T_MAX,
            v_max: 0.5,
            roadmap: RoadmapKind::Grid,
            tour_mode: TourMode::Auto,
            closed_tour: true,
            integration: PatchIntegration::Adaptive,
            raster_resolution: DEFAULT_RESOLUTION,
        }
    }
}

/// Everything the planners share for one world and configuration.
#[derive(Debug, Clone)]
pub struct Scene {
    pub patches: Vec<SurfacePatch>,
    /// Vantages in the roadmap component holding the most of them.
    pub vantages: VantageSet,
    /// Roadmap milestone of each vantage.
    pub milestone: Vec<usize>,
    pub roadmap: Roadmap,
    pub irradiance: IrradianceMatrix,
    /// Grid points dropped because the roadmap could not reach them.
    pub unreachable_vantages: usize,
    pub build_seconds: f64,
}

impl Scene {
    pub fn areas(&self) -> Vec<f64> {
        self.patches.iter().map(|p| p.area).collect()
    }

    /// Patches with positive irradiance from at least one vantage.
    pub fn reachable(&self) -> Vec<bool> {
        (0..self.irradiance.n_patches).map(|i| self.irradiance.patch_reachable(i)).collect()
    }

    /// Roadmap shortest paths between the given vantages.
    pub fn paths(&self, vantages: &[usize]) -> ShortestPaths {
        let targets: Vec<usize> = vantages.iter().map(|&v| self.milestone[v]).collect();
        shortest_path_matrix(&self.roadmap, &targets)
    }
}

pub fn prepare_scene(world: &WorldModel, cfg: &PlannerConfig) -> Result<Scene, PlanError> {
    let start = Instant::now();
    let ws = Workspace::new(world, &cfg.robot)?;
    let all = match &cfg.grid_anchor {
        Some(a) => sample_vantage_grid_anchored(&ws, cfg.grid_spacing, &cfg.robot, a)?,
        None => sample_vantage_grid(&ws, cfg.grid_spacing, &cfg.robot)?,
    };
    let full_map = match cfg.roadmap {
        RoadmapKind::Grid => build_grid_roadmap(&all, &ws),
        RoadmapKind::Prm { seed } => build_prm(&all, &ws, &PrmParams::for_spacing(cfg.grid_spacing, seed))?,
    };
    let keep = full_map.largest_target_component();
    let vantages = all.subset(&keep);
    let patches = match world {
        WorldModel::Extruded(w) => discretize_surfaces(w, w.patch_resolution)?,
        WorldModel::Mesh(m) => m.patches(),
    };
    let irradiance = match world {
        WorldModel::Extruded(w) => {
            let vis = build_visibility_graph(&vantages.positions, &patches, w);
            build_irradiance_matrix_with(&cfg.light, &vantages.positions, &patches, &vis, cfg.integration)
        }
        WorldModel::Mesh(m) => mesh_irradiance_matrix(m, &cfg.light, &vantages.positions, cfg.raster_resolution),
    };
    Ok(Scene {
        patches,
        unreachable_vantages: all.len() - vantages.len(),
        vantages,
        milestone: keep,
        roadmap: full_map,
        irradiance,
        build_seconds: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    LpTsp,
    Milp,
    Static,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub method: Method,
    /// Visiting order as scene vantage indices.
    pub tour: Tour,
    pub positions: Vec<P3>,
    /// Dwell at each visited vantage, aligned with `tour.order` (s).
    pub dwell: Vec<f64>,
    /// Playback polyline along roadmap shortest paths (m).
    pub path: Vec<P3>,
    pub path_length: f64,
    /// Length of the same visiting order without the closing edge (m).
    pub open_path_length: f64,
    pub total_dwell: f64,
    pub travel_time: f64,
    pub total_time: f64,
    /// Per-patch fluence (J/m²).
    pub fluence: Vec<f64>,
    pub solve_seconds: f64,
    /// Relative optimality gap (MILP only).
    pub gap: Option<f64>,
    /// MILP branch-and-bound nodes (MILP only).
    pub nodes: Option<usize>,
}

impl Plan {
    /// Full dwell vector over all scene vantages.
    pub fn dwell_vector(&self, n_vantages: usize) -> Vec<f64> {
        let mut t = vec![0.0; n_vantages];
        for (&k, &d) in self.tour.order.iter().zip(&self.dwell) {
            t[k] = d;
        }
        t
    }

    pub fn dwell_fraction(&self) -> f64 {
        if self.total_time > 0.0 {
            self.total_dwell / self.total_time
        } else {
            1.0
        }
    }
}

fn assemble(
    scene: &Scene,
    cfg: &PlannerConfig,
    method: Method,
    order: Vec<usize>,
    dwell_full: &[f64],
    closed: bool,
    solve_seconds: f64,
) -> Result<Plan, PlanError> {
    let sp = scene.paths(&order);
    let m = order.len();
    let mut path: Vec<P3> = Vec::new();
    let mut open_len = 0.0;
    for i in 0..m.saturating_sub(1) {
        open_len += sp.dist.get(i, i + 1);
        append_leg(&mut path, &sp, i, i + 1, &order)?;
    }
    let mut length = open_len;
    if closed && m > 1 {
        length += sp.dist.get(m - 1, 0);
        append_leg(&mut path, &sp, m - 1, 0, &order)?;
    }
    if path.is_empty() {
        path.extend(order.iter().map(|&k| scene.vantages.positions[k]));
    }
    let dwell: Vec<f64> = order.iter().map(|&k| dwell_full[k]).collect();
    let total_dwell: f64 = dwell.iter().sum();
    let travel_time = length / cfg.v_max;
    Ok(Plan {
        method,
        positions: order.iter().map(|&k| scene.vantages.positions[k]).collect(),
        tour: Tour { order, length, closed },
        dwell,
        path,
        path_length: length,
        open_path_length: open_len,
        total_dwell,
        travel_time,
        total_time: total_dwell + travel_time,
        fluence: scene.irradiance.fluence(dwell_full),
        solve_seconds,
        gap: None,
        nodes: None,
    })
}

fn append_leg(path: &mut Vec<P3>, sp: &ShortestPaths, a: usize, b: usize, order: &[usize]) -> Result<(), PlanError> {
    let leg = sp.path(a, b).ok_or_else(|| TourError::Disconnected { unreachable: vec![order[b]] })?;
    let skip = usize::from(!path.is_empty());
    path.extend(leg.into_iter().skip(skip));
    Ok(())
}

/// Dwell LP over every scene vantage.
pub fn dosing_solution(scene: &Scene, cfg: &PlannerConfig) -> Result<DosingSolution, PlanError> {
    let problem = DosingProblem::new(scene.irradiance.clone(), cfg.mu_min).with_t_max(cfg.t_max);
    Ok(solve_dwell_times(&problem)?)
}

/// LP for dwell times, then a tour over the vantages with nonzero dwell.
pub fn two_stage_on_scene(scene: &Scene, cfg: &PlannerConfig) -> Result<Plan, PlanError> {
    let start = Instant::now();
    let sol = dosing_solution(scene, cfg)?;
    let selected = sol.selected(DWELL_EPS);
    let dwell: Vec<f64> = sol.dwell.iter().map(|&t| if t > DWELL_EPS { t } else { 0.0 }).collect();
    let sp = scene.paths(&selected);
    let local: Vec<usize> = (0..selected.len()).collect();
    let tour = solve_tsp(&local, &sp.dist, cfg.tour_mode, cfg.closed_tour).map_err(|e| match e {
        TourError::Disconnected { unreachable } => {
            TourError::Disconnected { unreachable: unreachable.into_iter().map(|i| selected[i]).collect() }
        }
        other => other,
    })?;
    let order: Vec<usize> = tour.order.iter().map(|&i| selected[i]).collect();
    let elapsed = start.elapsed().as_secs_f64();
    assemble(scene, cfg, Method::LpTsp, order, &dwell, cfg.closed_tour, elapsed)
}

pub fn plan_two_stage(world: &WorldModel, cfg: &PlannerConfig) -> Result<Plan, PlanError> {
    let scene = prepare_scene(world, cfg)?;
    two_stage_on_scene(&scene, cfg)
}

/// Vantage seeing the most patch area; ties go to the smallest maximum
/// distance to its visible patches.
pub fn static_vantage(scene: &Scene) -> usize {
    let areas = scene.areas();
    let mut best = (0usize, f64::NEG_INFINITY, f64::INFINITY);
    for k in 0..scene.irradiance.n_vantages {
        let pos = scene.vantages.positions[k];
        let (mut area, mut far) = (0.0, 0.0f64);
        for i in 0..scene.irradiance.n_patches {
            if scene.irradiance.get(i, k) > 0.0 {
                area += areas[i];
                far = far.max((scene.patches[i].centroid - pos).norm());
            }
        }
        let tol = 1e-9 * area.max(1.0);
        if area > best.1 + tol || (area >= best.1 - tol && far < best.2) {
            best = (k, area, far);
        }
    }
    best.0
}

/// Single stationary vantage irradiating until every patch it sees is dosed.
pub fn static_on_scene(scene: &Scene, cfg: &PlannerConfig) -> Plan {
    let start = Instant::now();
    let k = static_vantage(scene);
    let need = (0..scene.irradiance.n_patches)
        .filter_map(|i| {
            let e = scene.irradiance.get(i, k);
            (e > 0.0).then(|| cfg.mu_min / e)
        })
        .fold(0.0f64, f64::max);
    let mut dwell = vec![0.0; scene.irradiance.n_vantages];
    dwell[k] = need;
    let pos = scene.vantages.positions[k];
    Plan {
        method: Method::Static,
        tour: Tour { order: vec![k], length: 0.0, closed: true },
        positions: vec![pos],
        dwell: vec![need],
        path: vec![pos],
        path_length: 0.0,
        open_path_length: 0.0,
        total_dwell: need,
        travel_time: 0.0,
        total_time: need,
        fluence: scene.irradiance.fluence(&dwell),
        solve_seconds: start.elapsed().as_secs_f64(),
        gap: None,
        nodes: None,
    }
}

pub fn plan_static_baseline(world: &WorldModel, cfg: &PlannerConfig) -> Result<Plan, PlanError> {
    let scene = prepare_scene(world, cfg)?;
    Ok(static_on_scene(&scene, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MilpOptions {
    pub time_limit_s: f64,
    /// Largest candidate set accepted.
    pub max_candidates: usize,
    /// `None` uses a uniform `M` equal to the two-stage objective.
    pub big_m: Option<BigM>,
    pub rounding_heuristic: bool,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions { time_limit_s: 600.0, max_candidates: crate::milp::MAX_CANDIDATES, big_m: None, rounding_heuristic: true }
    }
}

/// Exact joint optimization over the vantages the dwell LP selected, with
/// the largest-dwell vantage as the loop's fixed vertex. Each patch must get
/// `min(μ_min, reference fluence)`, so the reference dwell stays feasible.
pub fn milp_on_scene(scene: &Scene, cfg: &PlannerConfig, reference: &Plan, opts: &MilpOptions) -> Result<(Plan, MilpSolution), PlanError> {
    let start = Instant::now();
    let mut cand: Vec<usize> = reference.tour.order.clone();
    if cand.len() > opts.max_candidates {
        return Err(PlanError::TooManyCandidates(cand.len(), opts.max_candidates));
    }
    let dwell_of = reference.dwell_vector(scene.irradiance.n_vantages);
    cand.sort_by(|&a, &b| dwell_of[b].total_cmp(&dwell_of[a]).then(a.cmp(&b)));
    let sub = scene.irradiance.select_vantages(&cand);
    // the dosing LP may leave near-grazing patches short (penalised slack);
    // ask the MILP for the same dose profile so both plans are comparable
    let target = |i: usize| cfg.mu_min.min(reference.fluence[i]);
    let rows: Vec<usize> = (0..sub.n_patches).filter(|&i| sub.patch_reachable(i) && target(i) > COVERAGE_TOL).collect();
    let irr = sub.select_patches(&rows);
    let mu: Vec<f64> = rows.iter().map(|&i| target(i)).collect();
    let sp = scene.paths(&cand);
    let big_m = opts.big_m.unwrap_or(BigM::Uniform(reference.total_time * (1.0 + 1e-9)));
    let model = if cfg.closed_tour {
        build_milp(&irr, &sp.dist, &mu, cfg.v_max, big_m)?
    } else {
        build_milp_open(&irr, &sp.dist, &mu, cfg.v_max, big_m)?
    };
    let (order, dwell_full, sol) = if cfg.closed_tour && cand.len() == 1 {
        // a one-vertex loop has no edges; the robot just stays put
        let t = mu.iter().zip(0..).map(|(m, i)| m / irr.get(i, 0)).fold(0.0f64, f64::max);
        let mut d = vec![0.0; scene.irradiance.n_vantages];
        d[cand[0]] = t;
        let sol = MilpSolution {
            status: MilpStatus::Optimal,
            t: vec![t],
            z: Vec::new(),
            g: Vec::new(),
            objective: t,
            bound: t,
            gap: 0.0,
            node_count: 0,
            tour: vec![0],
            elapsed_s: 0.0,
            worst_bound_drop: 0.0,
        };
        (vec![cand[0]], d, sol)
    } else {
        let bnb = BnbOptions {
            time_limit: Duration::from_secs_f64(opts.time_limit_s),
            rounding_heuristic: opts.rounding_heuristic,
            ..Default::default()
        };
        let sol = solve_milp(&model, &bnb);
        if matches!(sol.status, MilpStatus::Infeasible | MilpStatus::NoIncumbent) || sol.t.is_empty() {
            return Err(PlanError::MilpNoSolution(sol.status));
        }
        let (local_order, t_local): (Vec<usize>, Vec<f64>) = if cfg.closed_tour {
            (sol.tour.clone(), sol.t.clone())
        } else {
            (open_path_order(&sol), sol.t[1..].to_vec())
        };
        let mut d = vec![0.0; scene.irradiance.n_vantages];
        for (j, &c) in cand.iter().enumerate() {
            d[c] = t_local[j];
        }
        (local_order.iter().map(|&j| cand[j]).collect(), d, sol)
    };
    let mut plan = assemble(scene, cfg, Method::Milp, order, &dwell_full, cfg.closed_tour, start.elapsed().as_secs_f64())?;
    plan.gap = Some(sol.gap);
    plan.nodes = Some(sol.node_count);
    Ok((plan, sol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// Covered area over all patch area.
    pub coverage_fraction: f64,
    /// Covered area over the area reachable from some vantage.
    pub visible_coverage_fraction: f64,
    pub covered_area: f64,
    pub total_area: f64,
    pub visible_area: f64,
    pub n_patches: usize,
    pub n_covered: usize,
    pub fluence: Vec<f64>,
    pub min_fluence: f64,
    pub max_fluence: f64,
    /// Mean of fluence / μ_min over covered patches.
    pub mean_overexposure: f64,
}

/// Area-weighted coverage of the plan's dwell vector.
pub fn evaluate_fluence(plan: &Plan, irradiance: &IrradianceMatrix, areas: &[f64], mu_min: f64) -> CoverageReport {
    let fluence = irradiance.fluence(&plan.dwell_vector(irradiance.n_vantages));
    let reachable: Vec<bool> = (0..irradiance.n_patches).map(|i| irradiance.patch_reachable(i)).collect();
    coverage_of(&fluence, &reachable, areas, mu_min)
}

pub fn coverage_of(fluence: &[f64], reachable: &[bool], areas: &[f64], mu_min: f64) -> CoverageReport {
    let (mut covered, mut total, mut visible, mut n_cov, mut over) = (0.0, 0.0, 0.0, 0, 0.0);
    for i in 0..fluence.len() {
        total += areas[i];
        if reachable[i] {
            visible += areas[i];
        }
        if fluence[i] >= mu_min - COVERAGE_TOL {
            covered += areas[i];
            n_cov += 1;
            over += fluence[i] / mu_min;
        }
    }
    let frac = |a: f64, b: f64| if b > 0.0 { (a / b).min(1.0) } else { 1.0 };
    CoverageReport {
        coverage_fraction: frac(covered, total),
        visible_coverage_fraction: frac(covered, visible),
        covered_area: covered,
        total_area: total,
        visible_area: visible,
        n_patches: fluence.len(),
        n_covered: n_cov,
        min_fluence: fluence.iter().copied().fold(f64::INFINITY, f64::min),
        max_fluence: fluence.iter().copied().fold(0.0, f64::max),
        mean_overexposure: if n_cov > 0 { over / n_cov as f64 } else { 0.0 },
        fluence: fluence.to_vec(),
    }
}

/// Coverage of the patches the plan's own vantages can reach. For the
/// static baseline this is its visible set.
pub fn coverage_of_own_view(plan: &Plan, irradiance: &IrradianceMatrix, areas: &[f64], mu_min: f64) -> CoverageReport {
    let dwell = plan.dwell_vector(irradiance.n_vantages);
    let fluence = irradiance.fluence(&dwell);
    let seen: Vec<bool> =
        (0..irradiance.n_patches).map(|i| plan.tour.order.iter().any(|&k| irradiance.get(i, k) > 0.0)).collect();
    coverage_of(&fluence, &seen, areas, mu_min)
}
