//! Environment representation: extruded-polygon ("2.5D") rooms, triangle
//! meshes, surface discretization into patches, random room generation and
//! the on-disk world formats.
//!
//! Random rooms are drawn with ChaCha8 (`rand_chacha::ChaCha8Rng`) seeded
//! from a `u64`, so a seed reproduces the same room on every platform.
//!
//! World JSON (version 1), lengths in meters:
//!
//! ```text
//! { "version": 1,
//!   "bounds": { "min": [x, y], "max": [x, y] },
//!   "wall_height": 2.0,
//!   "patch_resolution": 0.125,
//!   "obstacles": [ [[x, y], [x, y], ...], ... ] }
//! ```
//!
//! Meshes use the triangulated subset of Wavefront OBJ (`v` and `f` lines).

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{is_simple_polygon, polygon_area, P2, P3, V2, V3};

pub const WORLD_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("face not triangulated (line {line})")]
    NotTriangulated { line: usize },
    #[error("degenerate triangle (line {line})")]
    DegenerateTriangle { line: usize },
    #[error("vertex index {index} out of range (line {line})")]
    IndexOutOfRange { line: usize, index: i64 },
    #[error("unsupported world format version {0}")]
    Version(u32),
    #[error("invalid world: {0}")]
    Invalid(String),
    #[error("seed {seed}: could not place obstacle {obstacle} inside bounds after {attempts} attempts")]
    PlacementFailed { seed: u64, obstacle: usize, attempts: usize },
}

/// Axis-aligned rectangle in the floorplan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: P2,
    pub max: P2,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { min: P2::new(x0, y0), max: P2::new(x1, y1) }
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn center(&self) -> P2 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn contains_strict(&self, p: &P2) -> bool {
        p.x > self.min.x && p.x < self.max.x && p.y > self.min.y && p.y < self.max.y
    }

    /// Corners in counter-clockwise order starting at `min`.
    pub fn corners(&self) -> [P2; 4] {
        [
            self.min,
            P2::new(self.max.x, self.min.y),
            self.max,
            P2::new(self.min.x, self.max.y),
        ]
    }
}

/// A room: rectangular boundary walls plus full-height polygonal obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct World2p5D {
    pub bounds: Rect,
    pub wall_height: f64,
    /// Simple polygons, counter-clockwise.
    pub obstacles: Vec<Vec<P2>>,
    pub patch_resolution: f64,
}

/// Which wall a patch was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WallSource {
    Boundary { edge: usize },
    Obstacle { obstacle: usize, edge: usize },
}

/// One straight full-height wall of a 2.5D world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub a: P2,
    pub b: P2,
    /// Unit normal pointing into free space.
    pub normal: V2,
    pub source: WallSource,
}

impl World2p5D {
    pub fn empty(bounds: Rect, wall_height: f64) -> Self {
        World2p5D { bounds, wall_height, obstacles: Vec::new(), patch_resolution: 0.125 }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let b = &self.bounds;
        if !(b.width() > 0.0 && b.height() > 0.0) {
            return Err(WorldError::Invalid("degenerate bounds".into()));
        }
        if !(self.wall_height > 0.0) {
            return Err(WorldError::Invalid("wall_height must be positive".into()));
        }
        if !(self.patch_resolution > 0.0) {
            return Err(WorldError::Invalid("patch_resolution must be positive".into()));
        }
        for (i, poly) in self.obstacles.iter().enumerate() {
            if !is_simple_polygon(poly) {
                return Err(WorldError::Invalid(format!("obstacle {i} is not a simple polygon")));
            }
            if polygon_area(poly) <= 0.0 {
                return Err(WorldError::Invalid(format!("obstacle {i} is not counter-clockwise")));
            }
            if !poly.iter().all(|p| b.contains_strict(p)) {
                return Err(WorldError::Invalid(format!("obstacle {i} leaves the bounds")));
            }
        }
        Ok(())
    }

    /// Every wall: the four boundary walls first, then obstacle faces.
    pub fn walls(&self) -> Vec<Wall> {
        let mut walls = Vec::new();
        let c = self.bounds.corners();
        for e in 0..4 {
            let (a, b) = (c[e], c[(e + 1) % 4]);
            let d = (b - a).normalize();
            // boundary is traversed CCW, so the room interior is on the left
            walls.push(Wall { a, b, normal: V2::new(-d.y, d.x), source: WallSource::Boundary { edge: e } });
        }
        for (o, poly) in self.obstacles.iter().enumerate() {
            for e in 0..poly.len() {
                let (a, b) = (poly[e], poly[(e + 1) % poly.len()]);
                let d = (b - a).normalize();
                walls.push(Wall {
                    a,
                    b,
                    normal: V2::new(d.y, -d.x),
                    source: WallSource::Obstacle { obstacle: o, edge: e },
                });
            }
        }
        walls
    }

    pub fn total_wall_area(&self) -> f64 {
        self.walls().iter().map(|w| (w.b - w.a).norm()).sum::<f64>() * self.wall_height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PatchGeometry {
    /// Vertical rectangle over the floorplan segment [a, b], z in [z0, z1].
    Wall { a: P2, b: P2, z0: f64, z1: f64, source: WallSource },
    Triangle { vertices: [P3; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfacePatch {
    pub id: usize,
    pub geometry: PatchGeometry,
    pub area: f64,
    pub centroid: P3,
    pub normal: V3,
}

impl SurfacePatch {
    /// Floorplan projection of the patch midpoint (2.5D patches only).
    pub fn midpoint_2d(&self) -> P2 {
        P2::new(self.centroid.x, self.centroid.y)
    }

    pub fn wall_source(&self) -> Option<WallSource> {
        match self.geometry {
            PatchGeometry::Wall { source, .. } => Some(source),
            PatchGeometry::Triangle { .. } => None,
        }
    }
}

/// Split every wall into `ceil(len / resolution)` equal-width full-height
/// patches. Ids are dense and follow [`World2p5D::walls`] order.
pub fn discretize_surfaces(world: &World2p5D, resolution: f64) -> Result<Vec<SurfacePatch>, WorldError> {
    if !(resolution > 0.0) {
        return Err(WorldError::Invalid("patch resolution must be positive".into()));
    }
    let h = world.wall_height;
    let mut patches = Vec::new();
    for wall in world.walls() {
        let len = (wall.b - wall.a).norm();
        // tolerate round-off so that e.g. 4.0 / 0.5 gives 8, not 9
        let n = ((len / resolution) - 1e-9).ceil().max(1.0) as usize;
        let width = len / n as f64;
        for j in 0..n {
            let a = wall.a + (wall.b - wall.a) * (j as f64 / n as f64);
            let b = wall.a + (wall.b - wall.a) * ((j + 1) as f64 / n as f64);
            let mid = nalgebra::center(&a, &b);
            patches.push(SurfacePatch {
                id: patches.len(),
                geometry: PatchGeometry::Wall { a, b, z0: 0.0, z1: h, source: wall.source },
                area: width * h,
                centroid: P3::new(mid.x, mid.y, 0.5 * h),
                normal: V3::new(wall.normal.x, wall.normal.y, 0.0),
            });
        }
    }
    Ok(patches)
}

/// Triangle soup with per-triangle unit normals (from winding order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMeshWorld {
    pub vertices: Vec<P3>,
    pub triangles: Vec<[usize; 3]>,
    pub normals: Vec<V3>,
}

const DEGENERATE_AREA: f64 = 1e-14;

impl TriMeshWorld {
    pub fn new(vertices: Vec<P3>, triangles: Vec<[usize; 3]>) -> Result<Self, WorldError> {
        let mut normals = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= vertices.len()) {
                return Err(WorldError::IndexOutOfRange { line: t + 1, index: bad as i64 });
            }
            let n = (vertices[tri[1]] - vertices[tri[0]]).cross(&(vertices[tri[2]] - vertices[tri[0]]));
            if 0.5 * n.norm() <= DEGENERATE_AREA {
                return Err(WorldError::DegenerateTriangle { line: t + 1 });
            }
            normals.push(n.normalize());
        }
        Ok(TriMeshWorld { vertices, triangles, normals })
    }

    pub fn triangle(&self, i: usize) -> [P3; 3] {
        let t = self.triangles[i];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle(i);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Axis-aligned bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (P3, P3) {
        let mut lo = P3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = P3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for v in &self.vertices {
            for k in 0..3 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        (lo, hi)
    }

    /// One patch per triangle.
    pub fn patches(&self) -> Vec<SurfacePatch> {
        (0..self.triangles.len())
            .map(|i| {
                let vertices = self.triangle(i);
                let c = P3::from((vertices[0].coords + vertices[1].coords + vertices[2].coords) / 3.0);
                SurfacePatch {
                    id: i,
                    geometry: PatchGeometry::Triangle { vertices },
                    area: self.triangle_area(i),
                    centroid: c,
                    normal: self.normals[i],
                }
            })
            .collect()
    }

    /// Axis-aligned box made of 12 triangles whose normals face inward.
    pub fn closed_box(min: P3, max: P3) -> Self {
        let v = |x: bool, y: bool, z: bool| {
            P3::new(if x { max.x } else { min.x }, if y { max.y } else { min.y }, if z { max.z } else { min.z })
        };
        let vertices = vec![
            v(false, false, false),
            v(true, false, false),
            v(true, true, false),
            v(false, true, false),
            v(false, false, true),
            v(true, false, true),
            v(true, true, true),
            v(false, true, true),
        ];
        // quads wound so that normals point into the box
        let quads = [
            [0, 1, 2, 3], // floor, +z
            [4, 7, 6, 5], // ceiling, -z
            [0, 4, 5, 1], // y = min, +y
            [2, 6, 7, 3], // y = max, -y
            [0, 3, 7, 4], // x = min, +x
            [1, 5, 6, 2], // x = max, -x
        ];
        let mut triangles = Vec::new();
        for q in quads {
            triangles.push([q[0], q[1], q[2]]);
            triangles.push([q[0], q[2], q[3]]);
        }
        TriMeshWorld::new(vertices, triangles).expect("box is well formed")
    }
}

/// Shape ranges for random obstacles (regular polygons that are scaled,
/// sheared and displaced).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObstacleParams {
    /// Circumradius range of the base polygon (m).
    pub radius: (f64, f64),
    /// Scale applied along the local y axis before shearing.
    pub aspect: (f64, f64),
    /// Shear factor range (x += shear * y).
    pub shear: (f64, f64),
    /// Inclusive range of the polygon vertex count.
    pub sides: (usize, usize),
    /// Placement attempts per obstacle before giving up.
    pub max_attempts: usize,
}

impl Default for ObstacleParams {
    fn default() -> Self {
        ObstacleParams { radius: (0.2, 0.8), aspect: (0.5, 1.0), shear: (-0.5, 0.5), sides: (3, 8), max_attempts: 1000 }
    }
}

fn random_obstacle_shape(rng: &mut ChaCha8Rng, p: &ObstacleParams) -> Vec<P2> {
    let k = rng.random_range(p.sides.0..=p.sides.1);
    let r = rng.random_range(p.radius.0..=p.radius.1);
    let aspect = rng.random_range(p.aspect.0..=p.aspect.1);
    let shear = rng.random_range(p.shear.0..=p.shear.1);
    let rot = rng.random_range(0.0..std::f64::consts::TAU);
    (0..k)
        .map(|j| {
            let a = rot + std::f64::consts::TAU * j as f64 / k as f64;
            let (x, y) = (r * a.cos(), r * aspect * a.sin());
            P2::new(x + shear * y, y)
        })
        .collect()
}

/// Random room with exactly `n_obstacles` obstacles. Obstacles may overlap
/// each other; each one lies strictly inside `bounds`.
pub fn generate_random_room(seed: u64, bounds: Rect, n_obstacles: usize, wall_height: f64) -> Result<World2p5D, WorldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_with_rng(&mut rng, seed, bounds, n_obstacles, wall_height, &ObstacleParams::default())
}

pub fn generate_random_room_with(
    seed: u64,
    bounds: Rect,
    n_obstacles: usize,
    wall_height: f64,
    params: &ObstacleParams,
) -> Result<World2p5D, WorldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    generate_with_rng(&mut rng, seed, bounds, n_obstacles, wall_height, params)
}

/// Draws the obstacle count uniformly from `[min_obstacles, max_obstacles]`
/// and then builds the room from the same seeded stream.
pub fn generate_room_in_range(
    seed: u64,
    bounds: Rect,
    min_obstacles: usize,
    max_obstacles: usize,
    wall_height: f64,
    params: &ObstacleParams,
) -> Result<World2p5D, WorldError> {
    if min_obstacles > max_obstacles {
        return Err(WorldError::Invalid("min_obstacles > max_obstacles".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(min_obstacles..=max_obstacles);
    generate_with_rng(&mut rng, seed, bounds, n, wall_height, params)
}

fn generate_with_rng(
    rng: &mut ChaCha8Rng,
    seed: u64,
    bounds: Rect,
    n_obstacles: usize,
    wall_height: f64,
    params: &ObstacleParams,
) -> Result<World2p5D, WorldError> {
    let mut world = World2p5D::empty(bounds, wall_height);
    world.validate()?;
    for o in 0..n_obstacles {
        let shape = random_obstacle_shape(rng, params);
        let placed = (0..params.max_attempts).find_map(|_| {
            let cx = rng.random_range(bounds.min.x..bounds.max.x);
            let cy = rng.random_range(bounds.min.y..bounds.max.y);
            let poly: Vec<P2> = shape.iter().map(|p| P2::new(p.x + cx, p.y + cy)).collect();
            poly.iter().all(|p| bounds.contains_strict(p)).then_some(poly)
        });
        match placed {
            Some(poly) => world.obstacles.push(poly),
            None => return Err(WorldError::PlacementFailed { seed, obstacle: o, attempts: params.max_attempts }),
        }
    }
    Ok(world)
}

/// Either kind of environment a world file can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum WorldModel {
    Extruded(World2p5D),
    Mesh(TriMeshWorld),
}

#[derive(Serialize, Deserialize)]
struct WorldFile {
    version: u32,
    bounds: Rect,
    wall_height: f64,
    #[serde(default = "default_patch_resolution")]
    patch_resolution: f64,
    obstacles: Vec<Vec<P2>>,
}

fn default_patch_resolution() -> f64 {
    0.125
}

pub fn world_to_json(world: &World2p5D) -> String {
    let file = WorldFile {
        version: WORLD_FORMAT_VERSION,
        bounds: world.bounds,
        wall_height: world.wall_height,
        patch_resolution: world.patch_resolution,
        obstacles: world.obstacles.clone(),
    };
    serde_json::to_string_pretty(&file).expect("world serializes")
}

pub fn world_from_json(text: &str) -> Result<World2p5D, WorldError> {
    let file: WorldFile =
        serde_json::from_str(text).map_err(|e| WorldError::Parse { line: e.line(), message: e.to_string() })?;
    if file.version != WORLD_FORMAT_VERSION {
        return Err(WorldError::Version(file.version));
    }
    let world = World2p5D {
        bounds: file.bounds,
        wall_height: file.wall_height,
        obstacles: file.obstacles,
        patch_resolution: file.patch_resolution,
    };
    world.validate()?;
    Ok(world)
}

pub fn mesh_to_obj(mesh: &TriMeshWorld) -> String {
    let mut out = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

pub fn mesh_from_obj(text: &str) -> Result<TriMeshWorld, WorldError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut face_lines = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in c.iter_mut() {
                    let tok = it.next().ok_or_else(|| WorldError::Parse {
                        line: line_no,
                        message: "vertex needs three coordinates".into(),
                    })?;
                    *slot = tok.parse().map_err(|_| WorldError::Parse {
                        line: line_no,
                        message: format!("bad coordinate {tok:?}"),
                    })?;
                }
                vertices.push(P3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let toks: Vec<&str> = it.collect();
                if toks.len() != 3 {
                    return Err(WorldError::NotTriangulated { line: line_no });
                }
                let mut tri = [0usize; 3];
                for (slot, tok) in tri.iter_mut().zip(&toks) {
                    let idx_str = tok.split('/').next().unwrap_or("");
                    let idx: i64 = idx_str.parse().map_err(|_| WorldError::Parse {
                        line: line_no,
                        message: format!("bad face index {tok:?}"),
                    })?;
                    let resolved = if idx > 0 { idx - 1 } else { vertices.len() as i64 + idx };
                    if idx == 0 || resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(WorldError::IndexOutOfRange { line: line_no, index: idx });
                    }
                    *slot = resolved as usize;
                }
                triangles.push(tri);
                face_lines.push(line_no);
            }
            _ => {}
        }
    }
    TriMeshWorld::new(vertices, triangles).map_err(|e| match e {
        WorldError::DegenerateTriangle { line } => WorldError::DegenerateTriangle { line: face_lines[line - 1] },
        other => other,
    })
}

fn is_obj(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("obj"))
}

pub fn load_world(path: impl AsRef<Path>) -> Result<WorldModel, WorldError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    if is_obj(path) {
        Ok(WorldModel::Mesh(mesh_from_obj(&text)?))
    } else {
        Ok(WorldModel::Extruded(world_from_json(&text)?))
    }
}

pub fn save_world(world: &WorldModel, path: impl AsRef<Path>) -> Result<(), WorldError> {
    let text = match world {
        WorldModel::Extruded(w) => world_to_json(w),
        WorldModel::Mesh(m) => mesh_to_obj(m),
    };
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn room(w: f64, h: f64) -> World2p5D {
        World2p5D::empty(Rect::new(0.0, 0.0, w, h), 2.0)
    }

    #[test]
    fn exact_division() {
        let mut w = room(4.0, 4.0);
        w.wall_height = 2.0;
        let patches = discretize_surfaces(&w, 0.5).unwrap();
        let first_wall: Vec<_> = patches.iter().filter(|p| p.wall_source() == Some(WallSource::Boundary { edge: 0 })).collect();
        assert_eq!(first_wall.len(), 8);
        for p in &first_wall {
            assert!((p.area - 1.0).abs() < 1e-12);
        }
        let area: f64 = first_wall.iter().map(|p| p.area).sum();
        assert!((area - 8.0).abs() < 1e-12);
    }

    #[test]
    fn remainder_is_equalized() {
        let w = room(1.0, 1.0);
        let patches = discretize_surfaces(&w, 0.3).unwrap();
        let wall0: Vec<_> = patches.iter().filter(|p| p.wall_source() == Some(WallSource::Boundary { edge: 0 })).collect();
        assert_eq!(wall0.len(), 4);
        for p in wall0 {
            assert!((p.area - 0.25 * 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_five_meter_room() {
        // 4 walls * 5 m / 0.125 = 160 patches, 4 * 5 * 2 = 40 m^2
        let w = room(5.0, 5.0);
        let patches = discretize_surfaces(&w, 0.125).unwrap();
        assert_eq!(patches.len(), 160);
        let area: f64 = patches.iter().map(|p| p.area).sum();
        assert!((area - 40.0).abs() / 40.0 < 1e-9);
        assert!(patches.iter().enumerate().all(|(i, p)| p.id == i));
        assert!(patches.iter().all(|p| (p.normal.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn boundary_normals_point_inward() {
        let w = room(4.0, 4.0);
        let c = w.bounds.center();
        for wall in w.walls() {
            let mid = nalgebra::center(&wall.a, &wall.b);
            assert!((c - mid).dot(&wall.normal) > 0.0);
        }
    }

    #[test]
    fn generation_counts_and_containment() {
        let b = Rect::new(0.0, 0.0, 4.0, 4.0);
        let empty = generate_random_room(1, b, 0, 2.0).unwrap();
        assert!(empty.obstacles.is_empty());
        assert_eq!(empty.walls().len(), 4);
        let w = generate_random_room(7, b, 13, 2.0).unwrap();
        assert_eq!(w.obstacles.len(), 13);
        w.validate().unwrap();
        assert_eq!(w, generate_random_room(7, b, 13, 2.0).unwrap());
    }

    #[test]
    fn mean_obstacle_count_in_range() {
        let b = Rect::new(0.0, 0.0, 4.0, 4.0);
        let counts: Vec<usize> = (0..25)
            .map(|s| generate_room_in_range(s, b, 7, 19, 2.0, &ObstacleParams::default()).unwrap().obstacles.len())
            .collect();
        let mean = counts.iter().sum::<usize>() as f64 / 25.0;
        assert!((11.0..=16.0).contains(&mean), "mean {mean}");
        assert!(counts.iter().all(|&c| (7..=19).contains(&c)));
    }

    #[test]
    fn placement_failure_names_seed() {
        let b = Rect::new(0.0, 0.0, 0.5, 0.5);
        let params = ObstacleParams { radius: (1.0, 1.0), max_attempts: 5, ..Default::default() };
        let err = generate_random_room_with(99, b, 1, 2.0, &params).unwrap_err();
        assert!(err.to_string().contains("seed 99"), "{err}");
    }

    #[test]
    fn obj_quad_rejected() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let err = mesh_from_obj(text).unwrap_err();
        assert!(err.to_string().contains("face not triangulated"));
        assert!(matches!(err, WorldError::NotTriangulated { line: 5 }));
    }

    #[test]
    fn obj_errors_carry_line_numbers() {
        let err = mesh_from_obj("v 0 0 0\nv 1 x 0\n").unwrap_err();
        assert!(matches!(err, WorldError::Parse { line: 2, .. }));
        let err = mesh_from_obj("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n").unwrap_err();
        assert!(matches!(err, WorldError::DegenerateTriangle { line: 4 }));
        let err = mesh_from_obj("v 0 0 0\nf 1 2 3\n").unwrap_err();
        assert!(matches!(err, WorldError::IndexOutOfRange { line: 2, .. }));
    }

    #[test]
    fn obj_slash_and_negative_indices() {
        let m = mesh_from_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 -1\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2]]);
        assert!((m.normals[0] - V3::new(0.0, 0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn json_parse_error_reports_line() {
        let err = world_from_json("{\n \"version\": 1,\n \"bounds\": oops\n}").unwrap_err();
        assert!(matches!(err, WorldError::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn invalid_worlds_rejected() {
        let mut w = room(4.0, 4.0);
        w.obstacles.push(vec![P2::new(1.0, 1.0), P2::new(5.0, 1.0), P2::new(1.0, 2.0)]);
        assert!(w.validate().is_err());
        let mut w = room(4.0, 4.0);
        w.obstacles.push(vec![P2::new(1.0, 1.0), P2::new(1.0, 2.0), P2::new(2.0, 1.0)]);
        assert!(w.validate().is_err(), "clockwise polygon accepted");
    }
}
