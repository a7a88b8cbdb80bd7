//! Software cubemap rasterizer for triangle-mesh worlds.
//!
//! For a light at `center`, the six 90° faces of a cube are rendered with a
//! Z-buffer so every pixel knows the nearest triangle along its ray. Each
//! pixel carries the power the light emits through its solid angle; summing
//! that into the visible triangle and dividing by the triangle's area gives
//! the mean irradiance.
//!
//! Meshes are treated as two-sided. The mean is over the full triangle area
//! even when part of it is hidden, so coarse triangles straddling a shadow
//! boundary get a smeared value; refine such meshes.

use std::f64::consts::PI;

use crate::geometry::{P3, V3};
use crate::radiometry::{IrradianceMatrix, LightSource};
use crate::worldgen::TriMeshWorld;

pub const DEFAULT_RESOLUTION: usize = 512;
pub const VOID: u32 = u32::MAX;

const NEAR: f64 = 1e-9;
const FRUSTUM_MARGIN: f64 = 1e-6;
/// Edge-function slack in pixels, so shared edges never leave gaps.
const EDGE_SLACK: f64 = 1e-7;

/// Forward, right and up axes of the six faces (+X, -X, +Y, -Y, +Z, -Z).
const FACES: [[[f64; 3]; 3]; 6] = [
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    [[-1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]],
    [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
    [[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]],
    [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    [[0.0, 0.0, -1.0], [1.0, 0.0, 0.0], [0.0, -1.0, 0.0]],
];

fn face_axes(face: usize) -> (V3, V3, V3) {
    let [w, u, v] = FACES[face];
    (V3::from(w), V3::from(u), V3::from(v))
}

/// Face-plane coordinate of pixel centre `i` in `[-1, 1]`.
#[inline]
fn pixel_coord(i: usize, r: usize) -> f64 {
    -1.0 + (2 * i + 1) as f64 / r as f64
}

/// Unit-length ray direction through the centre of pixel `(i, j)` on `face`.
pub fn pixel_direction(face: usize, i: usize, j: usize, r: usize) -> V3 {
    let (w, u, v) = face_axes(face);
    (w + u * pixel_coord(i, r) + v * pixel_coord(j, r)).normalize()
}

/// Nearest-triangle and depth buffers for the six faces. Pixel `(i, j)` of
/// a face lives at `j * R + i`; depth is distance along the face axis.
#[derive(Debug, Clone)]
pub struct VisibilityCube {
    pub resolution: usize,
    pub triangle: [Vec<u32>; 6],
    pub depth: [Vec<f64>; 6],
}

impl VisibilityCube {
    fn new(r: usize) -> Self {
        VisibilityCube {
            resolution: r,
            triangle: std::array::from_fn(|_| vec![VOID; r * r]),
            depth: std::array::from_fn(|_| vec![f64::INFINITY; r * r]),
        }
    }

    pub fn pixel(&self, face: usize, i: usize, j: usize) -> Option<usize> {
        let t = self.triangle[face][j * self.resolution + i];
        (t != VOID).then_some(t as usize)
    }

    pub fn void_pixels(&self) -> usize {
        self.triangle.iter().map(|f| f.iter().filter(|&&t| t == VOID).count()).sum()
    }
}

/// Per-pixel emitted power, identical for all six faces.
#[derive(Debug, Clone)]
pub struct PowerEmissionTexture {
    pub resolution: usize,
    pub face: Vec<f64>,
}

impl PowerEmissionTexture {
    pub fn total(&self) -> f64 {
        6.0 * self.face.iter().sum::<f64>()
    }
}

/// Solid angle of the rectangle `[0,u] x [0,v]` on the plane at unit
/// distance, with one corner at the foot of the perpendicular.
#[inline]
fn corner_solid_angle(u: f64, v: f64) -> f64 {
    (u * v).atan2((u * u + v * v + 1.0).sqrt())
}

/// Exact solid angle of the face-plane rectangle `[a0,a1] x [b0,b1]`.
pub fn rect_solid_angle(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    corner_solid_angle(a1, b1) - corner_solid_angle(a0, b1) - corner_solid_angle(a1, b0) + corner_solid_angle(a0, b0)
}

/// `e(i, j) = P Ω(i, j) / 4π` for every pixel of a face.
pub fn precompute_emission(resolution: usize, power: f64) -> PowerEmissionTexture {
    assert!(resolution >= 8, "cube resolution must be at least 8");
    let r = resolution;
    let edge = |i: usize| -1.0 + 2.0 * i as f64 / r as f64;
    let mut face = vec![0.0; r * r];
    for j in 0..r {
        for i in 0..r {
            face[j * r + i] = power * rect_solid_angle(edge(i), edge(i + 1), edge(j), edge(j + 1)) / (4.0 * PI);
        }
    }
    PowerEmissionTexture { resolution: r, face }
}

/// Clip a camera-space polygon against `a*x + b*y + c*z + d >= 0`.
fn clip(poly: &[[f64; 3]], plane: [f64; 4]) -> Vec<[f64; 3]> {
    let side = |p: &[f64; 3]| plane[0] * p[0] + plane[1] * p[1] + plane[2] * p[2] + plane[3];
    let mut out = Vec::with_capacity(poly.len() + 2);
    for k in 0..poly.len() {
        let (p, q) = (poly[k], poly[(k + 1) % poly.len()]);
        let (sp, sq) = (side(&p), side(&q));
        if sp >= 0.0 {
            out.push(p);
        }
        if (sp >= 0.0) != (sq >= 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]), p[2] + t * (q[2] - p[2])]);
        }
    }
    out
}

/// Screen-space vertex: pixel coordinates (centres at integers) and 1/z.
#[derive(Clone, Copy)]
struct SVert {
    x: f64,
    y: f64,
    inv_z: f64,
}

fn raster_triangle(
    cube: &mut VisibilityCube,
    face: usize,
    tri: u32,
    mut v: [SVert; 3],
) {
    let r = cube.resolution;
    let e = |a: &SVert, b: &SVert, px: f64, py: f64| (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
    let mut area = e(&v[0], &v[1], v[2].x, v[2].y);
    if area.abs() < 1e-12 {
        return;
    }
    if area < 0.0 {
        v.swap(1, 2);
        area = -area;
    }
    let lens = [
        (v[1].x - v[0].x).hypot(v[1].y - v[0].y),
        (v[2].x - v[1].x).hypot(v[2].y - v[1].y),
        (v[0].x - v[2].x).hypot(v[0].y - v[2].y),
    ];
    let min_x = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
    let max_x = v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
    let min_y = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
    let max_y = v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
    let last = (r - 1) as f64;
    if max_x < 0.0 || max_y < 0.0 || min_x > last || min_y > last {
        return;
    }
    let (i0, i1) = (min_x.max(0.0).ceil() as usize, max_x.min(last).floor() as usize);
    let (j0, j1) = (min_y.max(0.0).ceil() as usize, max_y.min(last).floor() as usize);
    let tri_buf = &mut cube.triangle[face];
    let depth_buf = &mut cube.depth[face];
    for j in j0..=j1 {
        let py = j as f64;
        for i in i0..=i1 {
            let px = i as f64;
            let w0 = e(&v[1], &v[2], px, py);
            let w1 = e(&v[2], &v[0], px, py);
            let w2 = e(&v[0], &v[1], px, py);
            if w0 < -EDGE_SLACK * lens[1] || w1 < -EDGE_SLACK * lens[2] || w2 < -EDGE_SLACK * lens[0] {
                continue;
            }
            let inv_z = (w0 * v[0].inv_z + w1 * v[1].inv_z + w2 * v[2].inv_z) / area;
            if inv_z <= 0.0 {
                continue;
            }
            let z = 1.0 / inv_z;
            let k = j * r + i;
            if z < depth_buf[k] {
                depth_buf[k] = z;
                tri_buf[k] = tri;
            }
        }
    }
}

/// Render all mesh triangles into the six faces around `center`.
pub fn rasterize_cube(mesh: &TriMeshWorld, center: &P3, resolution: usize) -> VisibilityCube {
    let r = resolution;
    let mut cube = VisibilityCube::new(r);
    let m = 1.0 + FRUSTUM_MARGIN;
    let planes = [
        [0.0, 0.0, 1.0, -NEAR],
        [-1.0, 0.0, m, 0.0],
        [1.0, 0.0, m, 0.0],
        [0.0, -1.0, m, 0.0],
        [0.0, 1.0, m, 0.0],
    ];
    for face in 0..6 {
        let (w, u, v) = face_axes(face);
        for t in 0..mesh.triangles.len() {
            let mut poly: Vec<[f64; 3]> = mesh
                .triangle(t)
                .iter()
                .map(|p| {
                    let d = p - center;
                    [d.dot(&u), d.dot(&v), d.dot(&w)]
                })
                .collect();
            if poly.iter().all(|p| p[2] <= NEAR) {
                continue;
            }
            for plane in &planes {
                if poly.len() < 3 {
                    break;
                }
                poly = clip(&poly, *plane);
            }
            if poly.len() < 3 {
                continue;
            }
            let sv: Vec<SVert> = poly
                .iter()
                .map(|p| SVert {
                    x: (p[0] / p[2] + 1.0) * 0.5 * r as f64 - 0.5,
                    y: (p[1] / p[2] + 1.0) * 0.5 * r as f64 - 0.5,
                    inv_z: 1.0 / p[2],
                })
                .collect();
            for k in 1..sv.len() - 1 {
                raster_triangle(&mut cube, face, t as u32, [sv[0], sv[k], sv[k + 1]]);
            }
        }
    }
    cube
}

/// Radiant flux (W) landing on each triangle from a point source.
pub fn triangle_flux(mesh: &TriMeshWorld, center: &P3, emission: &PowerEmissionTexture) -> Vec<f64> {
    let cube = rasterize_cube(mesh, center, emission.resolution);
    let mut flux = vec![0.0; mesh.triangles.len()];
    for face in 0..6 {
        for (k, &t) in cube.triangle[face].iter().enumerate() {
            if t != VOID {
                flux[t as usize] += emission.face[k];
            }
        }
    }
    flux
}

/// Mean irradiance (W/m²) of every triangle, `F[i] / |s_i|`.
pub fn triangle_irradiance(mesh: &TriMeshWorld, center: &P3, resolution: usize, power: f64) -> Vec<f64> {
    let emission = precompute_emission(resolution, power);
    let flux = triangle_flux(mesh, center, &emission);
    flux.iter().enumerate().map(|(i, f)| f / mesh.triangle_area(i)).collect()
}

/// Irradiance matrix over mesh triangles. Extended sources are rendered
/// once per emitter sample and their flux summed before dividing by area.
pub fn mesh_irradiance_matrix(
    mesh: &TriMeshWorld,
    light: &LightSource,
    vantages: &[P3],
    resolution: usize,
) -> IrradianceMatrix {
    let n = mesh.triangles.len();
    let mut m = IrradianceMatrix::zeros(n, vantages.len());
    let areas: Vec<f64> = (0..n).map(|i| mesh.triangle_area(i)).collect();
    let mut cache: Option<(f64, PowerEmissionTexture)> = None;
    for (k, pos) in vantages.iter().enumerate() {
        let mut flux = vec![0.0; n];
        for (x, p) in light.emitters(pos) {
            let tex = match &cache {
                Some((cp, tex)) if *cp == p => tex,
                _ => &cache.insert((p, precompute_emission(resolution, p))).1,
            };
            for (f, add) in flux.iter_mut().zip(triangle_flux(mesh, &x, tex)) {
                *f += add;
            }
        }
        for i in 0..n {
            m.set(i, k, flux[i] / areas[i]);
        }
    }
    m
}
