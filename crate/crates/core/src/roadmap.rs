//! Vantage sampling, roadmaps between vantages, and shortest-path distances.
//!
//! For extruded worlds the light rides on a disc robot at a fixed height, so
//! a configuration is a point on that plane and the obstacles are dilated by
//! the disc radius plus [`DILATION`]. For mesh worlds the light flies freely
//! and must keep [`DILATION`] from every triangle.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{point_segment_distance, point_triangle_distance, segments_intersect, P2, P3, V3};
use crate::worldgen::{TriMeshWorld, World2p5D, WorldModel};

/// Safety margin added around every obstacle (m).
pub const DILATION: f64 = 0.05;
/// Interpolation step for edge checks against meshes (m).
pub const EDGE_STEP: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum RoadmapError {
    #[error("no feasible vantage position at spacing {spacing} m")]
    NoFeasibleVantage { spacing: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("robot {0} does not fit world kind")]
    RobotMismatch(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Robot {
    /// Mobile base of the given radius carrying the light at a fixed height.
    Disc { radius: f64, light_height: f64 },
    /// Light positioned anywhere in 3D.
    FreeFlying,
}

impl Robot {
    pub fn point(light_height: f64) -> Self {
        Robot::Disc { radius: 0.0, light_height }
    }

    pub fn clearance(&self) -> f64 {
        match self {
            Robot::Disc { radius, .. } => radius + DILATION,
            Robot::FreeFlying => DILATION,
        }
    }
}

/// Collision model for light positions.
#[derive(Debug, Clone, Copy)]
pub enum Workspace<'a> {
    Floor { world: &'a World2p5D, clearance: f64, height: f64 },
    Mesh { mesh: &'a TriMeshWorld, clearance: f64 },
}

fn segment_segment_distance(a: &P2, b: &P2, c: &P2, d: &P2) -> f64 {
    if segments_intersect(a, b, c, d) {
        return 0.0;
    }
    point_segment_distance(a, c, d)
        .min(point_segment_distance(b, c, d))
        .min(point_segment_distance(c, a, b))
        .min(point_segment_distance(d, a, b))
}

impl<'a> Workspace<'a> {
    pub fn new(world: &'a WorldModel, robot: &Robot) -> Result<Self, RoadmapError> {
        match (world, robot) {
            (WorldModel::Extruded(w), Robot::Disc { light_height, .. }) => {
                Ok(Workspace::Floor { world: w, clearance: robot.clearance(), height: *light_height })
            }
            (WorldModel::Mesh(m), Robot::FreeFlying) => Ok(Workspace::Mesh { mesh: m, clearance: robot.clearance() }),
            (WorldModel::Extruded(_), Robot::FreeFlying) => Err(RoadmapError::RobotMismatch("free-flying")),
            (WorldModel::Mesh(_), Robot::Disc { .. }) => Err(RoadmapError::RobotMismatch("disc")),
        }
    }

    pub fn floor(world: &'a World2p5D, robot: &Robot) -> Self {
        match robot {
            Robot::Disc { light_height, .. } => Workspace::Floor { world, clearance: robot.clearance(), height: *light_height },
            Robot::FreeFlying => panic!("floor workspace needs a disc robot"),
        }
    }

    /// Sampling box; degenerate in z for floorplans.
    pub fn bounds(&self) -> (P3, P3) {
        match self {
            Workspace::Floor { world, height, .. } => (
                P3::new(world.bounds.min.x, world.bounds.min.y, *height),
                P3::new(world.bounds.max.x, world.bounds.max.y, *height),
            ),
            Workspace::Mesh { mesh, .. } => mesh.bounding_box(),
        }
    }

    pub fn is_planar(&self) -> bool {
        matches!(self, Workspace::Floor { .. })
    }

    pub fn point_free(&self, p: &P3) -> bool {
        match self {
            Workspace::Floor { world, clearance, .. } => {
                let q = P2::new(p.x, p.y);
                let b = &world.bounds;
                let c = *clearance;
                if q.x - b.min.x < c || b.max.x - q.x < c || q.y - b.min.y < c || b.max.y - q.y < c {
                    return false;
                }
                world.obstacles.iter().all(|poly| {
                    !crate::geometry::point_in_polygon(&q, poly)
                        && (0..poly.len()).all(|i| point_segment_distance(&q, &poly[i], &poly[(i + 1) % poly.len()]) >= c)
                })
            }
            Workspace::Mesh { mesh, clearance } => {
                let (lo, hi) = mesh.bounding_box();
                if (0..3).any(|k| p[k] < lo[k] || p[k] > hi[k]) {
                    return false;
                }
                (0..mesh.triangles.len()).all(|t| {
                    let [a, b, c] = mesh.triangle(t);
                    point_triangle_distance(p, &a, &b, &c) >= *clearance
                })
            }
        }
    }

    /// Straight-line motion check. Floorplans are checked exactly against
    /// the dilated obstacles; meshes at [`EDGE_STEP`] intervals.
    pub fn segment_free(&self, a: &P3, b: &P3) -> bool {
        if !self.point_free(a) || !self.point_free(b) {
            return false;
        }
        match self {
            Workspace::Floor { world, clearance, .. } => {
                let (p, q) = (P2::new(a.x, a.y), P2::new(b.x, b.y));
                world.obstacles.iter().all(|poly| {
                    (0..poly.len()).all(|i| segment_segment_distance(&p, &q, &poly[i], &poly[(i + 1) % poly.len()]) >= *clearance)
                })
            }
            Workspace::Mesh { .. } => {
                let n = ((b - a).norm() / EDGE_STEP).ceil() as usize;
                (1..n).all(|s| self.point_free(&(a + (b - a) * (s as f64 / n as f64))))
            }
        }
    }
}

/// Feasible light positions on a regular grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VantageSet {
    pub positions: Vec<P3>,
    /// Integer grid coordinates of each position.
    pub grid: Vec<[i64; 3]>,
    pub spacing: f64,
    pub robot: Robot,
}

impl VantageSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn subset(&self, keep: &[usize]) -> VantageSet {
        VantageSet {
            positions: keep.iter().map(|&k| self.positions[k]).collect(),
            grid: keep.iter().map(|&k| self.grid[k]).collect(),
            spacing: self.spacing,
            robot: self.robot,
        }
    }
}

/// Grid anchor giving a centred grid of the given spacing over `[lo, hi]`.
pub fn centred_anchor(lo: f64, hi: f64, spacing: f64) -> f64 {
    let n = ((hi - lo) / spacing + 1e-9).floor().max(1.0);
    lo + 0.5 * (hi - lo - (n - 1.0) * spacing)
}

/// Grid centred in the workspace bounds (points at `min + s/2` when the
/// extent is a multiple of the spacing).
pub fn sample_vantage_grid(ws: &Workspace, spacing: f64, robot: &Robot) -> Result<VantageSet, RoadmapError> {
    let (lo, hi) = ws.bounds();
    let anchor = P3::new(
        centred_anchor(lo.x, hi.x, spacing),
        centred_anchor(lo.y, hi.y, spacing),
        if ws.is_planar() { lo.z } else { centred_anchor(lo.z, hi.z, spacing) },
    );
    sample_vantage_grid_anchored(ws, spacing, robot, &anchor)
}

/// All grid points `anchor + s * (i, j, k)` inside the bounds that are
/// collision-free. Grids sharing an anchor and dyadic spacings nest.
pub fn sample_vantage_grid_anchored(ws: &Workspace, spacing: f64, robot: &Robot, anchor: &P3) -> Result<VantageSet, RoadmapError> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(RoadmapError::InvalidParameter(format!("grid spacing {spacing}")));
    }
    let (lo, hi) = ws.bounds();
    let range = |k: usize| -> (i64, i64) {
        if ws.is_planar() && k == 2 {
            return (0, 0);
        }
        (((lo[k] - anchor[k]) / spacing - 1e-9).ceil() as i64, ((hi[k] - anchor[k]) / spacing + 1e-9).floor() as i64)
    };
    let (rx, ry, rz) = (range(0), range(1), range(2));
    let mut positions = Vec::new();
    let mut grid = Vec::new();
    for iz in rz.0..=rz.1 {
        for iy in ry.0..=ry.1 {
            for ix in rx.0..=rx.1 {
                let p = P3::new(
                    anchor.x + ix as f64 * spacing,
                    anchor.y + iy as f64 * spacing,
                    if ws.is_planar() { lo.z } else { anchor.z + iz as f64 * spacing },
                );
                if ws.point_free(&p) {
                    positions.push(p);
                    grid.push([ix, iy, iz]);
                }
            }
        }
    }
    if positions.is_empty() {
        return Err(RoadmapError::NoFeasibleVantage { spacing });
    }
    Ok(VantageSet { positions, grid, spacing, robot: *robot })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub length: f64,
}

/// Undirected graph of collision-free straight segments. The first
/// `n_targets` milestones are the vantage positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roadmap {
    pub milestones: Vec<P3>,
    pub edges: Vec<Edge>,
    pub n_targets: usize,
    /// Component label per milestone.
    pub components: Vec<usize>,
    #[serde(skip)]
    adjacency: Vec<Vec<(usize, f64)>>,
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new() -> Self {
        UnionFind { parent: Vec::new(), size: Vec::new() }
    }

    fn push(&mut self) -> usize {
        self.parent.push(self.parent.len());
        self.size.push(1);
        self.parent.len() - 1
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

impl Roadmap {
    fn with_targets(targets: &[P3]) -> Self {
        Roadmap {
            milestones: targets.to_vec(),
            edges: Vec::new(),
            n_targets: targets.len(),
            components: Vec::new(),
            adjacency: vec![Vec::new(); targets.len()],
        }
    }

    fn add_edge(&mut self, a: usize, b: usize) {
        let length = (self.milestones[a] - self.milestones[b]).norm();
        self.edges.push(Edge { a, b, length });
        self.adjacency[a].push((b, length));
        self.adjacency[b].push((a, length));
    }

    fn label_components(&mut self) {
        let mut uf = UnionFind::new();
        for _ in 0..self.milestones.len() {
            uf.push();
        }
        for e in &self.edges {
            uf.union(e.a, e.b);
        }
        let mut label = vec![usize::MAX; self.milestones.len()];
        let mut next = 0;
        self.components = (0..self.milestones.len())
            .map(|i| {
                let r = uf.find(i);
                if label[r] == usize::MAX {
                    label[r] = next;
                    next += 1;
                }
                label[r]
            })
            .collect();
    }

    /// Rebuild the adjacency lists after deserialization.
    pub fn rebuild_adjacency(&mut self) {
        self.adjacency = vec![Vec::new(); self.milestones.len()];
        for e in &self.edges {
            self.adjacency[e.a].push((e.b, e.length));
            self.adjacency[e.b].push((e.a, e.length));
        }
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    /// Targets in the component holding the most targets (ties: lowest
    /// label).
    pub fn largest_target_component(&self) -> Vec<usize> {
        let mut count = std::collections::BTreeMap::new();
        for t in 0..self.n_targets {
            *count.entry(self.components[t]).or_insert(0usize) += 1;
        }
        let Some((&best, _)) = count.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))) else {
            return Vec::new();
        };
        (0..self.n_targets).filter(|&t| self.components[t] == best).collect()
    }

    pub fn targets_connected(&self) -> bool {
        self.largest_target_component().len() == self.n_targets
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("roadmap serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        let mut r: Roadmap = serde_json::from_str(text)?;
        r.rebuild_adjacency();
        Ok(r)
    }
}

/// 8-connected (26-connected in 3D) lattice over the vantage grid.
pub fn build_grid_roadmap(vantages: &VantageSet, ws: &Workspace) -> Roadmap {
    let mut rm = Roadmap::with_targets(&vantages.positions);
    let index: std::collections::HashMap<[i64; 3], usize> = vantages.grid.iter().enumerate().map(|(i, g)| (*g, i)).collect();
    for (i, g) in vantages.grid.iter().enumerate() {
        for dz in -1..=1i64 {
            for dy in -1..=1i64 {
                for dx in -1..=1i64 {
                    let n = [g[0] + dx, g[1] + dy, g[2] + dz];
                    if let Some(&j) = index.get(&n) {
                        if j > i && ws.segment_free(&rm.milestones[i], &rm.milestones[j]) {
                            rm.add_edge(i, j);
                        }
                    }
                }
            }
        }
    }
    rm.label_components();
    rm
}

/// Sampling schedule for [`build_prm`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrmParams {
    pub seed: u64,
    pub batch: usize,
    pub uniform_fraction: f64,
    /// Radius of the neighbourhood sampled around a target (m).
    pub near_radius: f64,
    /// Stop adding increments once this fraction of targets shares a
    /// component.
    pub phi_threshold: f64,
    pub increment: usize,
    pub bridge_samples: usize,
    pub connect_radius: f64,
    pub max_neighbors: usize,
    /// Total number of random samples drawn across all phases.
    pub sample_budget: usize,
}

impl PrmParams {
    /// Connection radius of ten grid spacings.
    pub fn for_spacing(spacing: f64, seed: u64) -> Self {
        PrmParams {
            seed,
            batch: 4000,
            uniform_fraction: 0.3,
            near_radius: 0.5,
            phi_threshold: 0.8,
            increment: 200,
            bridge_samples: 10,
            connect_radius: 10.0 * spacing,
            max_neighbors: 30,
            sample_budget: 20_000,
        }
    }
}

struct PrmBuilder<'w, 'a> {
    ws: &'w Workspace<'a>,
    params: PrmParams,
    rm: Roadmap,
    uf: UnionFind,
    rng: ChaCha8Rng,
    drawn: usize,
    lo: P3,
    hi: P3,
}

impl PrmBuilder<'_, '_> {
    fn connect(&mut self, v: usize) {
        let p = self.rm.milestones[v];
        let r2 = self.params.connect_radius * self.params.connect_radius;
        let mut near: Vec<(f64, usize)> = (0..self.rm.milestones.len())
            .filter(|&u| u != v)
            .filter_map(|u| {
                let d2 = (self.rm.milestones[u] - p).norm_squared();
                (d2 <= r2).then_some((d2, u))
            })
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        near.truncate(self.params.max_neighbors);
        for (_, u) in near {
            if self.uf.find(u) == self.uf.find(v) && self.rm.adjacency[v].iter().any(|e| e.0 == u) {
                continue;
            }
            if self.ws.segment_free(&p, &self.rm.milestones[u]) {
                self.rm.add_edge(v, u);
                self.uf.union(v, u);
            }
        }
    }

    fn random_in_ball(&mut self, centre: &P3, radius: f64) -> P3 {
        loop {
            let mut d = V3::new(self.rng.random_range(-1.0..=1.0), self.rng.random_range(-1.0..=1.0), 0.0);
            if !self.ws.is_planar() {
                d.z = self.rng.random_range(-1.0..=1.0);
            }
            if d.norm_squared() <= 1.0 {
                return centre + d * radius;
            }
        }
    }

    fn uniform(&mut self) -> P3 {
        let mut p = P3::origin();
        for k in 0..3 {
            p[k] = if self.hi[k] > self.lo[k] { self.rng.random_range(self.lo[k]..self.hi[k]) } else { self.lo[k] };
        }
        p
    }

    /// Draw one sample (budget permitting) and keep it if collision-free.
    fn try_add(&mut self, p: P3) -> bool {
        if self.drawn >= self.params.sample_budget {
            return false;
        }
        self.drawn += 1;
        if !self.ws.point_free(&p) {
            return true;
        }
        self.rm.milestones.push(p);
        self.rm.adjacency.push(Vec::new());
        let v = self.uf.push();
        self.connect(v);
        true
    }

    fn mixed_samples(&mut self, count: usize) {
        for _ in 0..count {
            let p = if self.rng.random_bool(self.params.uniform_fraction) {
                self.uniform()
            } else {
                let t = self.rng.random_range(0..self.rm.n_targets);
                let c = self.rm.milestones[t];
                self.random_in_ball(&c, self.params.near_radius)
            };
            if !self.try_add(p) {
                return;
            }
        }
    }

    /// Targets in the component with most targets, and that component's
    /// root.
    fn majority(&mut self) -> (usize, usize) {
        let mut count = std::collections::HashMap::new();
        for t in 0..self.rm.n_targets {
            *count.entry(self.uf.find(t)).or_insert(0usize) += 1;
        }
        let (&root, &n) = count.iter().max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(a.0))).expect("at least one target");
        (root, n)
    }

    fn phi(&mut self) -> f64 {
        self.majority().1 as f64 / self.rm.n_targets as f64
    }
}

/// Probabilistic roadmap seeded with the vantage targets: direct
/// connections, a mixed uniform/near-target batch, increments while fewer
/// than `phi_threshold` of the targets share a component, then targeted
/// bridging between the closest milestones of disconnected components.
pub fn build_prm(targets: &VantageSet, ws: &Workspace, params: &PrmParams) -> Result<Roadmap, RoadmapError> {
    if targets.is_empty() {
        return Err(RoadmapError::InvalidParameter("no targets".into()));
    }
    if !(params.uniform_fraction >= 0.0 && params.uniform_fraction <= 1.0) {
        return Err(RoadmapError::InvalidParameter("uniform fraction outside [0, 1]".into()));
    }
    let (lo, hi) = ws.bounds();
    let mut b = PrmBuilder {
        ws,
        params: *params,
        rm: Roadmap::with_targets(&targets.positions),
        uf: UnionFind::new(),
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        drawn: 0,
        lo,
        hi,
    };
    for _ in 0..targets.len() {
        b.uf.push();
    }
    for v in 0..targets.len() {
        b.connect(v);
    }
    if !b.rm.targets_connected_uf(&mut b.uf) {
        b.mixed_samples(params.batch);
        while b.phi() < params.phi_threshold && b.drawn < params.sample_budget {
            b.mixed_samples(params.increment);
        }
        let mut focus_cursor = 0usize;
        while b.drawn < params.sample_budget {
            let (root, n) = b.majority();
            if n == b.rm.n_targets {
                break;
            }
            // rotate through unconnected targets so one hopeless target
            // does not starve the others
            let outside: Vec<usize> = (0..b.rm.n_targets).filter(|&t| b.uf.find(t) != root).collect();
            let focus = outside[focus_cursor % outside.len()];
            focus_cursor += 1;
            let froot = b.uf.find(focus);
            let (mut best, mut pair) = (f64::INFINITY, (focus, 0));
            let roots: Vec<usize> = (0..b.rm.milestones.len()).map(|v| b.uf.find(v)).collect();
            let mine: Vec<usize> = (0..roots.len()).filter(|&v| roots[v] == froot).collect();
            let major: Vec<usize> = (0..roots.len()).filter(|&v| roots[v] == root).collect();
            for &u in &mine {
                for &v in &major {
                    let d = (b.rm.milestones[u] - b.rm.milestones[v]).norm_squared();
                    if d < best {
                        best = d;
                        pair = (u, v);
                    }
                }
            }
            let radius = params.near_radius.min(best.sqrt().max(1e-3));
            for s in 0..params.bridge_samples {
                let c = b.rm.milestones[if s % 2 == 0 { pair.0 } else { pair.1 }];
                let p = b.random_in_ball(&c, radius);
                if !b.try_add(p) {
                    break;
                }
            }
        }
    }
    let mut rm = b.rm;
    rm.label_components();
    Ok(rm)
}

impl Roadmap {
    fn targets_connected_uf(&self, uf: &mut UnionFind) -> bool {
        let r = uf.find(0);
        (1..self.n_targets).all(|t| uf.find(t) == r)
    }
}

/// Symmetric `K x K` distances in meters; `f64::INFINITY` where
/// disconnected. Serialized with `null` for infinity.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    pub n: usize,
    pub d: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize) -> Self {
        let mut d = vec![f64::INFINITY; n * n];
        for i in 0..n {
            d[i * n + i] = 0.0;
        }
        DistanceMatrix { n, d }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        DistanceMatrix { n, d: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    /// Euclidean distances between points.
    pub fn euclidean(points: &[P3]) -> Self {
        let n = points.len();
        let mut m = Self::new(n);
        for i in 0..n {
            for j in 0..n {
                m.d[i * n + j] = (points[i] - points[j]).norm();
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.d[a * self.n + b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.d[a * self.n + b] = v;
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| {
            let (x, y) = (self.get(a, b), self.get(b, a));
            (x.is_infinite() && y.is_infinite()) || (x - y).abs() <= tol
        }))
    }

    pub fn zero_diagonal(&self) -> bool {
        (0..self.n).all(|a| self.get(a, a) == 0.0)
    }

    /// Restriction to the listed indices, in order.
    pub fn select(&self, idx: &[usize]) -> Self {
        let mut m = Self::new(idx.len());
        for (i, &a) in idx.iter().enumerate() {
            for (j, &b) in idx.iter().enumerate() {
                m.set(i, j, self.get(a, b));
            }
        }
        m
    }
}

impl Serialize for DistanceMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Option<f64>>> =
            (0..self.n).map(|a| (0..self.n).map(|b| Some(self.get(a, b)).filter(|v| v.is_finite())).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DistanceMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<Option<f64>>> = Vec::deserialize(d)?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(serde::de::Error::custom("distance matrix must be square"));
        }
        Ok(DistanceMatrix { n, d: rows.into_iter().flatten().map(|v| v.unwrap_or(f64::INFINITY)).collect() })
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `src`: distances and predecessors for every milestone.
pub fn dijkstra(rm: &Roadmap, src: usize) -> (Vec<f64>, Vec<usize>) {
    let n = rm.milestones.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(HeapItem(0.0, src));
    while let Some(HeapItem(d, v)) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(u, w) in rm.neighbors(v) {
            let nd = d + w;
            if nd < dist[u] {
                dist[u] = nd;
                pred[u] = v;
                heap.push(HeapItem(nd, u));
            }
        }
    }
    (dist, pred)
}

/// Distances between target milestones plus the predecessor trees needed
/// to replay the paths.
#[derive(Debug, Clone)]
pub struct ShortestPaths {
    pub targets: Vec<usize>,
    pub dist: DistanceMatrix,
    pred: Vec<Vec<usize>>,
    milestones: Vec<P3>,
}

impl ShortestPaths {
    /// Polyline from target `a` to target `b` (indices into `targets`), or
    /// `None` when disconnected.
    pub fn path(&self, a: usize, b: usize) -> Option<Vec<P3>> {
        if self.dist.get(a, b).is_infinite() {
            return None;
        }
        let (src, mut v) = (self.targets[a], self.targets[b]);
        let mut out = vec![self.milestones[v]];
        while v != src {
            v = self.pred[a][v];
            out.push(self.milestones[v]);
        }
        out.reverse();
        Some(out)
    }
}

/// Exact shortest-path lengths over roadmap edges between the given
/// milestones. The matrix is symmetrized by taking the smaller direction,
/// which only removes floating-point asymmetry.
pub fn shortest_path_matrix(rm: &Roadmap, targets: &[usize]) -> ShortestPaths {
    let k = targets.len();
    let mut dist = DistanceMatrix::new(k);
    let mut pred = Vec::with_capacity(k);
    for (a, &src) in targets.iter().enumerate() {
        let (d, p) = dijkstra(rm, src);
        for (b, &t) in targets.iter().enumerate() {
            dist.set(a, b, if a == b { 0.0 } else { d[t] });
        }
        pred.push(p);
    }
    for a in 0..k {
        for b in (a + 1)..k {
            let v = dist.get(a, b).min(dist.get(b, a));
            dist.set(a, b, v);
            dist.set(b, a, v);
        }
    }
    ShortestPaths { targets: targets.to_vec(), dist, pred, milestones: rm.milestones.clone() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldgen::Rect;
    use approx::assert_relative_eq;

    fn square(cx: f64, cy: f64, h: f64) -> Vec<P2> {
        vec![P2::new(cx - h, cy - h), P2::new(cx + h, cy - h), P2::new(cx + h, cy + h), P2::new(cx - h, cy + h)]
    }

    #[test]
    fn empty_room_grid_counts() {
        let w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 4.0), 2.0);
        let robot = Robot::point(1.0);
        let ws = Workspace::floor(&w, &robot);
        let v = sample_vantage_grid(&ws, 0.5, &robot).unwrap();
        assert_eq!(v.len(), 64);
        assert_relative_eq!(v.positions[0].x, 0.25);
        assert_eq!(v.positions[0].z, 1.0);
        let big = sample_vantage_grid(&ws, 10.0, &robot).unwrap();
        assert_eq!(big.len(), 1);
        assert_relative_eq!(big.positions[0].x, 2.0);
    }

    #[test]
    fn obstacle_removes_points_and_nothing_fits() {
        let mut w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 4.0), 2.0);
        w.obstacles.push(square(2.0, 2.0, 1.0));
        let robot = Robot::Disc { radius: 0.1, light_height: 1.0 };
        let ws = Workspace::floor(&w, &robot);
        let v = sample_vantage_grid(&ws, 0.5, &robot).unwrap();
        assert!(v.len() < 64);
        assert!(v.positions.iter().all(|p| !(p.x > 0.85 && p.x < 3.15 && p.y > 0.85 && p.y < 3.15)));
        let tiny = World2p5D::empty(Rect::new(0.0, 0.0, 0.2, 0.2), 2.0);
        let ws = Workspace::floor(&tiny, &robot);
        assert_eq!(sample_vantage_grid(&ws, 0.05, &robot), Err(RoadmapError::NoFeasibleVantage { spacing: 0.05 }));
    }

    #[test]
    fn sweeps_nest_with_shared_anchor() {
        let w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 4.0), 2.0);
        let robot = Robot::point(1.0);
        let ws = Workspace::floor(&w, &robot);
        let anchor = P3::new(0.25, 0.25, 1.0);
        let coarse = sample_vantage_grid_anchored(&ws, 0.5, &robot, &anchor).unwrap();
        let fine = sample_vantage_grid_anchored(&ws, 0.25, &robot, &anchor).unwrap();
        for p in &coarse.positions {
            assert!(fine.positions.iter().any(|q| (p - q).norm() < 1e-9));
        }
    }

    #[test]
    fn grid_roadmap_distances() {
        let w = World2p5D::empty(Rect::new(0.0, 0.0, 2.0, 2.0), 2.0);
        let robot = Robot::point(1.0);
        let ws = Workspace::floor(&w, &robot);
        let v = sample_vantage_grid(&ws, 0.5, &robot).unwrap();
        let rm = build_grid_roadmap(&v, &ws);
        assert!(rm.targets_connected());
        let sp = shortest_path_matrix(&rm, &(0..v.len()).collect::<Vec<_>>());
        assert!(sp.dist.is_symmetric(0.0) && sp.dist.zero_diagonal());
        // opposite corners of a 4x4 lattice: three diagonal steps
        assert_relative_eq!(sp.dist.get(0, 15), 3.0 * 0.5 * 2f64.sqrt(), epsilon = 1e-12);
        let path = sp.path(0, 15).unwrap();
        assert_eq!(path.len(), 4);
    }

    #[test]
    fn wall_forces_detour() {
        let mut w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 2.0), 2.0);
        w.obstacles.push(vec![P2::new(1.9, 0.0 + 1e-3), P2::new(2.1, 0.0 + 1e-3), P2::new(2.1, 1.5), P2::new(1.9, 1.5)]);
        let robot = Robot::point(1.0);
        let ws = Workspace::floor(&w, &robot);
        assert!(!ws.segment_free(&P3::new(1.0, 0.5, 1.0), &P3::new(3.0, 0.5, 1.0)));
        assert!(ws.segment_free(&P3::new(1.0, 1.8, 1.0), &P3::new(3.0, 1.8, 1.0)));
    }

    #[test]
    fn single_edge_distance() {
        let v = VantageSet {
            positions: vec![P3::new(0.5, 0.5, 1.0), P3::new(3.5, 0.5, 1.0)],
            grid: vec![[0, 0, 0], [1, 0, 0]],
            spacing: 3.0,
            robot: Robot::point(1.0),
        };
        let w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 1.0), 2.0);
        let ws = Workspace::floor(&w, &v.robot);
        let rm = build_grid_roadmap(&v, &ws);
        let sp = shortest_path_matrix(&rm, &[0, 1]);
        assert_eq!(sp.dist.get(0, 1), 3.0);
        assert_eq!(sp.dist.get(1, 1), 0.0);
    }

    #[test]
    fn prm_in_empty_room_connects_directly() {
        let w = World2p5D::empty(Rect::new(0.0, 0.0, 3.0, 3.0), 2.0);
        let robot = Robot::point(1.0);
        let ws = Workspace::floor(&w, &robot);
        let v = sample_vantage_grid(&ws, 0.5, &robot).unwrap();
        let rm = build_prm(&v, &ws, &PrmParams::for_spacing(0.5, 1)).unwrap();
        assert!(rm.targets_connected());
        assert_eq!(rm.milestones.len(), v.len());
    }

    #[test]
    fn prm_is_deterministic_and_discards_walled_off_target() {
        let mut w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 4.0), 2.0);
        // a closed ring of four walls around (3.25, 3.25)
        w.obstacles.push(vec![P2::new(2.7, 2.7), P2::new(3.8, 2.7), P2::new(3.8, 2.8), P2::new(2.7, 2.8)]);
        w.obstacles.push(vec![P2::new(2.7, 3.7), P2::new(3.8, 3.7), P2::new(3.8, 3.8), P2::new(2.7, 3.8)]);
        w.obstacles.push(vec![P2::new(2.7, 2.85), P2::new(2.8, 2.85), P2::new(2.8, 3.65), P2::new(2.7, 3.65)]);
        w.obstacles.push(vec![P2::new(3.7, 2.85), P2::new(3.8, 2.85), P2::new(3.8, 3.65), P2::new(3.7, 3.65)]);
        let robot = Robot::point(1.0);
        let ws = Workspace::floor(&w, &robot);
        let v = sample_vantage_grid(&ws, 0.5, &robot).unwrap();
        let inside = v.positions.iter().position(|p| (p - P3::new(3.25, 3.25, 1.0)).norm() < 1e-9).unwrap();
        let mut params = PrmParams::for_spacing(0.5, 3);
        params.batch = 300;
        params.sample_budget = 1500;
        let a = build_prm(&v, &ws, &params).unwrap();
        let b = build_prm(&v, &ws, &params).unwrap();
        assert_eq!(a, b);
        let keep = a.largest_target_component();
        assert_eq!(keep.len(), v.len() - 1);
        assert!(!keep.contains(&inside));
    }

    /// Floyd–Warshall over the roadmap edges.
    fn all_pairs(rm: &Roadmap) -> Vec<Vec<f64>> {
        let n = rm.milestones.len();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (i, row) in d.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        for e in &rm.edges {
            d[e.a][e.b] = d[e.a][e.b].min(e.length);
            d[e.b][e.a] = d[e.b][e.a].min(e.length);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn dijkstra_matches_floyd_warshall() {
        let mut w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 4.0), 2.0);
        w.obstacles.push(square(2.0, 2.0, 0.6));
        let robot = Robot::point(1.0);
        let ws = Workspace::floor(&w, &robot);
        let v = sample_vantage_grid(&ws, 0.5, &robot).unwrap();
        let mut params = PrmParams::for_spacing(0.5, 11);
        params.batch = 150;
        params.connect_radius = 1.0;
        let rm = build_prm(&v, &ws, &params).unwrap();
        let oracle = all_pairs(&rm);
        let targets: Vec<usize> = (0..10).map(|i| (i * 7) % rm.milestones.len()).collect();
        let sp = shortest_path_matrix(&rm, &targets);
        for (a, &ta) in targets.iter().enumerate() {
            for (b, &tb) in targets.iter().enumerate() {
                assert_relative_eq!(sp.dist.get(a, b), oracle[ta][tb], max_relative = 1e-12);
            }
        }
        // replayed paths stay collision-free
        for a in 0..targets.len() {
            for b in 0..targets.len() {
                if let Some(path) = sp.path(a, b) {
                    assert!(path.windows(2).all(|s| ws.segment_free(&s[0], &s[1])));
                }
            }
        }
    }

    #[test]
    fn roadmap_json_roundtrip() {
        let w = World2p5D::empty(Rect::new(0.0, 0.0, 2.0, 2.0), 2.0);
        let robot = Robot::point(1.0);
        let ws = Workspace::floor(&w, &robot);
        let v = sample_vantage_grid(&ws, 0.5, &robot).unwrap();
        let rm = build_grid_roadmap(&v, &ws);
        let back = Roadmap::from_json(&rm.to_json()).unwrap();
        assert_eq!(back, rm);
        assert_eq!(back.neighbors(0), rm.neighbors(0));
        let mut d = DistanceMatrix::new(2);
        d.set(0, 1, 1.5);
        let text = serde_json::to_string(&d).unwrap();
        assert_eq!(text, "[[0.0,1.5],[null,0.0]]");
        let back: DistanceMatrix = serde_json::from_str(&text).unwrap();
        assert_eq!(back.get(1, 0), f64::INFINITY);
    }

    #[test]
    fn mesh_workspace() {
        let mesh = TriMeshWorld::closed_box(P3::new(0.0, 0.0, 0.0), P3::new(2.0, 2.0, 2.0));
        let world = WorldModel::Mesh(mesh);
        let ws = Workspace::new(&world, &Robot::FreeFlying).unwrap();
        let v = sample_vantage_grid(&ws, 0.5, &Robot::FreeFlying).unwrap();
        assert_eq!(v.len(), 64);
        let rm = build_grid_roadmap(&v, &ws);
        assert!(rm.targets_connected());
        assert!(!ws.point_free(&P3::new(0.01, 1.0, 1.0)));
        assert!(Workspace::new(&world, &Robot::point(1.0)).is_err());
    }
}
