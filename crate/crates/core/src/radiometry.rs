//! Irradiance of surface patches under inverse-square point emitters, and
//! assembly of the `N x K` irradiance matrix (patch `i`, vantage `k`) that
//! feeds the dwell-time optimization.
//!
//! Sign convention: for a patch point `s` with unit normal `n` and a light
//! at `x`, `cos θ = <x - s, n> / |x - s|`. A patch faces the light iff
//! `cos θ > 0`, i.e. the light is on the side the normal points to.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{P3, V3};
use crate::visibility::VisibilityGraph;
use crate::worldgen::{PatchGeometry, SurfacePatch};

/// Successive adaptive refinements must agree to this relative tolerance.
pub const PATCH_REL_TOL: f64 = 1e-4;
const MAX_DEPTH: u32 = 24;
const MIN_DISTANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RadiometryError {
    #[error("light and surface point coincide (r = {0:e} m)")]
    Coincident(f64),
    #[error("matrix file error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed matrix file: {0}")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LightKind {
    Point,
    /// Tube lamp approximated by `samples` evenly spaced point emitters on
    /// the axis segment, given as offsets from the light position.
    Cylinder { bottom: V3, top: V3, samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LightSource {
    /// Radiant flux P in W.
    pub power: f64,
    pub kind: LightKind,
}

impl LightSource {
    pub fn point(power: f64) -> Self {
        LightSource { power, kind: LightKind::Point }
    }

    /// Vertical tube of the given length centred on the light position.
    pub fn vertical_tube(power: f64, length: f64, samples: usize) -> Self {
        let h = V3::new(0.0, 0.0, 0.5 * length);
        LightSource { power, kind: LightKind::Cylinder { bottom: -h, top: h, samples: samples.max(1) } }
    }

    /// Point emitters `(position, power)` for a light placed at `pos`. Each
    /// cylinder sample carries `P / L`.
    pub fn emitters(&self, pos: &P3) -> Vec<(P3, f64)> {
        match self.kind {
            LightKind::Point => vec![(*pos, self.power)],
            LightKind::Cylinder { bottom, top, samples } => {
                let l = samples.max(1);
                (0..l)
                    .map(|j| {
                        let f = (j as f64 + 0.5) / l as f64;
                        (pos + bottom + (top - bottom) * f, self.power / l as f64)
                    })
                    .collect()
            }
        }
    }
}

#[inline]
fn density_unchecked(light: &P3, s: &P3, normal: &V3, power: f64) -> f64 {
    let d = light - s;
    let r2 = d.norm_squared();
    if r2 < MIN_DISTANCE * MIN_DISTANCE {
        return 0.0;
    }
    let cos_r = d.dot(normal); // r * cos θ
    if cos_r <= 0.0 {
        return 0.0;
    }
    power * cos_r / (4.0 * PI * r2 * r2.sqrt())
}

/// Irradiance density `P max(0, cos θ) / (4π r²)` in W/m². Occlusion is the
/// caller's business.
pub fn point_irradiance_density(light_pos: &P3, surface_pos: &P3, normal: &V3, power: f64) -> Result<f64, RadiometryError> {
    let r = (light_pos - surface_pos).norm();
    if r < MIN_DISTANCE {
        return Err(RadiometryError::Coincident(r));
    }
    Ok(density_unchecked(light_pos, surface_pos, normal, power))
}

/// How a patch's mean irradiance is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum PatchIntegration {
    /// Adaptive midpoint subdivision to [`PATCH_REL_TOL`].
    #[default]
    Adaptive,
    /// Density at the patch centroid only.
    Midpoint,
}

/// Parametrization of a patch as a map from the unit square (or unit
/// triangle) to 3D.
#[derive(Clone, Copy)]
enum Domain {
    Rect { origin: P3, du: V3, dv: V3 },
    Tri { a: P3, b: P3, c: P3 },
}

fn domain_of(patch: &SurfacePatch) -> Domain {
    match &patch.geometry {
        PatchGeometry::Wall { a, b, z0, z1, .. } => Domain::Rect {
            origin: P3::new(a.x, a.y, *z0),
            du: V3::new(b.x - a.x, b.y - a.y, 0.0),
            dv: V3::new(0.0, 0.0, z1 - z0),
        },
        PatchGeometry::Triangle { vertices } => Domain::Tri { a: vertices[0], b: vertices[1], c: vertices[2] },
    }
}

struct Integrand<'a> {
    emitters: &'a [(P3, f64)],
    normal: V3,
}

impl Integrand<'_> {
    #[inline]
    fn eval(&self, s: &P3) -> f64 {
        self.emitters.iter().map(|(x, p)| density_unchecked(x, s, &self.normal, *p)).sum()
    }
}

/// Integral of the density over a sub-rectangle `[u0,u1] x [v0,v1]` of the
/// unit parameter square, in units of (density x parameter area).
fn adapt_rect(f: &Integrand, origin: &P3, du: &V3, dv: &V3, u0: f64, u1: f64, v0: f64, v1: f64, coarse: f64, depth: u32) -> f64 {
    let (um, vm) = (0.5 * (u0 + u1), 0.5 * (v0 + v1));
    let quarter = 0.25 * (u1 - u0) * (v1 - v0);
    let at = |u: f64, v: f64| f.eval(&(origin + du * u + dv * v)) * quarter;
    let c = [
        at(0.5 * (u0 + um), 0.5 * (v0 + vm)),
        at(0.5 * (um + u1), 0.5 * (v0 + vm)),
        at(0.5 * (u0 + um), 0.5 * (vm + v1)),
        at(0.5 * (um + u1), 0.5 * (vm + v1)),
    ];
    let fine: f64 = c.iter().sum();
    if depth >= MAX_DEPTH || (fine - coarse).abs() <= PATCH_REL_TOL * fine.abs() {
        return fine;
    }
    adapt_rect(f, origin, du, dv, u0, um, v0, vm, c[0], depth + 1)
        + adapt_rect(f, origin, du, dv, um, u1, v0, vm, c[1], depth + 1)
        + adapt_rect(f, origin, du, dv, u0, um, vm, v1, c[2], depth + 1)
        + adapt_rect(f, origin, du, dv, um, u1, vm, v1, c[3], depth + 1)
}

/// Centroid-rule adaptive integration over a triangle, returning the mean
/// density times the fraction of the parent triangle's area.
fn adapt_tri(f: &Integrand, a: P3, b: P3, c: P3, weight: f64, coarse: f64, depth: u32) -> f64 {
    let (ab, bc, ca) = (nalgebra::center(&a, &b), nalgebra::center(&b, &c), nalgebra::center(&c, &a));
    let kids = [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)];
    let w = 0.25 * weight;
    let vals: Vec<f64> = kids
        .iter()
        .map(|(p, q, r)| f.eval(&P3::from((p.coords + q.coords + r.coords) / 3.0)) * w)
        .collect();
    let fine: f64 = vals.iter().sum();
    if depth >= MAX_DEPTH / 2 || (fine - coarse).abs() <= PATCH_REL_TOL * fine.abs() {
        return fine;
    }
    kids.iter().zip(&vals).map(|((p, q, r), &v)| adapt_tri(f, *p, *q, *r, w, v, depth + 1)).sum()
}

fn mean_density(f: &Integrand, patch: &SurfacePatch, mode: PatchIntegration) -> f64 {
    if mode == PatchIntegration::Midpoint {
        return f.eval(&patch.centroid);
    }
    match domain_of(patch) {
        Domain::Rect { origin, du, dv } => {
            // start from roughly square cells
            let (lu, lv) = (du.norm(), dv.norm());
            let (nu, nv) = if lu >= lv {
                (((lu / lv).round() as usize).clamp(1, 64), 1)
            } else {
                (1, ((lv / lu).round() as usize).clamp(1, 64))
            };
            let (nu, nv) = (nu * 2, nv * 2);
            let mut total = 0.0;
            for iu in 0..nu {
                for iv in 0..nv {
                    let (u0, u1) = (iu as f64 / nu as f64, (iu + 1) as f64 / nu as f64);
                    let (v0, v1) = (iv as f64 / nv as f64, (iv + 1) as f64 / nv as f64);
                    let cell = (u1 - u0) * (v1 - v0);
                    let coarse = f.eval(&(origin + du * (0.5 * (u0 + u1)) + dv * (0.5 * (v0 + v1)))) * cell;
                    total += adapt_rect(f, &origin, &du, &dv, u0, u1, v0, v1, coarse, 0);
                }
            }
            total
        }
        Domain::Tri { a, b, c } => {
            let coarse = f.eval(&patch.centroid);
            adapt_tri(f, a, b, c, 1.0, coarse, 0)
        }
    }
}

/// Mean irradiance (W/m²) over the patch from a light at `light_pos`;
/// zero when the patch is not visible.
pub fn patch_irradiance(light: &LightSource, light_pos: &P3, patch: &SurfacePatch, visible: bool) -> f64 {
    patch_irradiance_with(light, light_pos, patch, visible, PatchIntegration::Adaptive)
}

pub fn patch_irradiance_with(
    light: &LightSource,
    light_pos: &P3,
    patch: &SurfacePatch,
    visible: bool,
    mode: PatchIntegration,
) -> f64 {
    if !visible {
        return 0.0;
    }
    let emitters = light.emitters(light_pos);
    let f = Integrand { emitters: &emitters, normal: patch.normal };
    mean_density(&f, patch, mode)
}

/// Irradiance in W/m² for every (patch, vantage) pair, stored row-major
/// `N x K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrradianceMatrix {
    pub n_patches: usize,
    pub n_vantages: usize,
    pub values: Vec<f64>,
    pub patch_ids: Vec<usize>,
    pub vantage_ids: Vec<usize>,
}

impl IrradianceMatrix {
    pub fn zeros(n_patches: usize, n_vantages: usize) -> Self {
        IrradianceMatrix {
            n_patches,
            n_vantages,
            values: vec![0.0; n_patches * n_vantages],
            patch_ids: (0..n_patches).collect(),
            vantage_ids: (0..n_vantages).collect(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let k = rows.first().map_or(0, |r| r.len());
        let mut m = Self::zeros(n, k);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), k, "ragged irradiance rows");
            m.values[i * k..(i + 1) * k].copy_from_slice(r);
        }
        m
    }

    #[inline]
    pub fn get(&self, patch: usize, vantage: usize) -> f64 {
        self.values[patch * self.n_vantages + vantage]
    }

    #[inline]
    pub fn set(&mut self, patch: usize, vantage: usize, v: f64) {
        self.values[patch * self.n_vantages + vantage] = v;
    }

    pub fn row(&self, patch: usize) -> &[f64] {
        &self.values[patch * self.n_vantages..(patch + 1) * self.n_vantages]
    }

    pub fn column(&self, vantage: usize) -> Vec<f64> {
        (0..self.n_patches).map(|i| self.get(i, vantage)).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Keep only the listed vantage columns, in the given order.
    pub fn select_vantages(&self, cols: &[usize]) -> Self {
        let mut m = Self::zeros(self.n_patches, cols.len());
        m.patch_ids = self.patch_ids.clone();
        m.vantage_ids = cols.iter().map(|&c| self.vantage_ids[c]).collect();
        for i in 0..self.n_patches {
            for (j, &c) in cols.iter().enumerate() {
                m.set(i, j, self.get(i, c));
            }
        }
        m
    }

    /// Keep only the listed patch rows, in the given order.
    pub fn select_patches(&self, rows: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), self.n_vantages);
        m.vantage_ids = self.vantage_ids.clone();
        m.patch_ids = rows.iter().map(|&r| self.patch_ids[r]).collect();
        for (j, &r) in rows.iter().enumerate() {
            m.values[j * self.n_vantages..(j + 1) * self.n_vantages].copy_from_slice(self.row(r));
        }
        m
    }

    /// Fluence per patch `Σ_k I_ik t_k` (J/m²) for dwell times `t` (s).
    pub fn fluence(&self, dwell: &[f64]) -> Vec<f64> {
        assert_eq!(dwell.len(), self.n_vantages);
        (0..self.n_patches).map(|i| self.row(i).iter().zip(dwell).map(|(a, t)| a * t).sum()).collect()
    }

    /// Whether some vantage gives the patch positive irradiance.
    pub fn patch_reachable(&self, patch: usize) -> bool {
        self.row(patch).iter().any(|&v| v > 0.0)
    }

    const MAGIC: &'static [u8; 4] = b"UVIM";

    /// Binary layout: `b"UVIM"`, u32 LE header length, JSON header
    /// (`version`, `rows`, `cols`, `patch_ids`, `vantage_ids`, `units`),
    /// then `rows * cols` little-endian f64 values in row-major order.
    pub fn write_to(&self, mut w: impl Write) -> Result<(), RadiometryError> {
        let header = MatrixHeader {
            version: 1,
            rows: self.n_patches,
            cols: self.n_vantages,
            patch_ids: self.patch_ids.clone(),
            vantage_ids: self.vantage_ids.clone(),
            units: "W/m^2".into(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        w.write_all(Self::MAGIC)?;
        w.write_all(&(json.len() as u32).to_le_bytes())?;
        w.write_all(&json)?;
        let mut buf = Vec::with_capacity(self.values.len() * 8);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, RadiometryError> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(RadiometryError::Format("bad magic".into()));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut json)?;
        let header: MatrixHeader = serde_json::from_slice(&json).map_err(|e| RadiometryError::Format(e.to_string()))?;
        if header.version != 1 {
            return Err(RadiometryError::Format(format!("unsupported version {}", header.version)));
        }
        if header.patch_ids.len() != header.rows || header.vantage_ids.len() != header.cols {
            return Err(RadiometryError::Format("id lists do not match dimensions".into()));
        }
        let mut raw = vec![0u8; header.rows * header.cols * 8];
        r.read_exact(&mut raw)?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Ok(IrradianceMatrix {
            n_patches: header.rows,
            n_vantages: header.cols,
            values,
            patch_ids: header.patch_ids,
            vantage_ids: header.vantage_ids,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RadiometryError> {
        let f = std::fs::File::create(path)?;
        self.write_to(std::io::BufWriter::new(f))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, RadiometryError> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixHeader {
    version: u32,
    rows: usize,
    cols: usize,
    patch_ids: Vec<usize>,
    vantage_ids: Vec<usize>,
    units: String,
}

/// Column `k` holds [`patch_irradiance`] of every patch against vantage `k`.
pub fn build_irradiance_matrix(
    light: &LightSource,
    vantage_positions: &[P3],
    patches: &[SurfacePatch],
    vis: &VisibilityGraph,
) -> IrradianceMatrix {
    build_irradiance_matrix_with(light, vantage_positions, patches, vis, PatchIntegration::Adaptive)
}

pub fn build_irradiance_matrix_with(
    light: &LightSource,
    vantage_positions: &[P3],
    patches: &[SurfacePatch],
    vis: &VisibilityGraph,
    mode: PatchIntegration,
) -> IrradianceMatrix {
    assert_eq!(vis.n_lights(), vantage_positions.len(), "visibility graph / vantage count mismatch");
    assert_eq!(vis.n_patches(), patches.len(), "visibility graph / patch count mismatch");
    let mut m = IrradianceMatrix::zeros(patches.len(), vantage_positions.len());
    m.patch_ids = patches.iter().map(|p| p.id).collect();
    for (k, pos) in vantage_positions.iter().enumerate() {
        for i in vis.visible_patches(k) {
            m.set(i, k, patch_irradiance_with(light, pos, &patches[i], true, mode));
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::P2;
    use crate::visibility::build_visibility_graph;
    use crate::worldgen::{discretize_surfaces, Rect, WallSource, World2p5D};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn wall_patch(a: P2, b: P2, z0: f64, z1: f64) -> SurfacePatch {
        let d = (b - a).normalize();
        let mid = nalgebra::center(&a, &b);
        SurfacePatch {
            id: 0,
            geometry: PatchGeometry::Wall { a, b, z0, z1, source: WallSource::Boundary { edge: 0 } },
            area: (b - a).norm() * (z1 - z0),
            centroid: P3::new(mid.x, mid.y, 0.5 * (z0 + z1)),
            normal: V3::new(-d.y, d.x, 0.0),
        }
    }

    #[test]
    fn density_examples() {
        let n = V3::new(0.0, 0.0, 1.0);
        let s = P3::origin();
        let d1 = point_irradiance_density(&P3::new(0.0, 0.0, 1.0), &s, &n, 80.0).unwrap();
        assert_relative_eq!(d1, 80.0 / (4.0 * PI), max_relative = 1e-12);
        assert_relative_eq!(d1, 6.3662, epsilon = 1e-4);
        let d2 = point_irradiance_density(&P3::new(0.0, 0.0, 2.0), &s, &n, 80.0).unwrap();
        assert_relative_eq!(d2, 1.59155, epsilon = 1e-5);
        assert_relative_eq!(d2, d1 / 4.0, max_relative = 1e-12);
        let grazing = point_irradiance_density(&P3::new(1.0, 0.0, 0.0), &s, &n, 80.0).unwrap();
        assert_eq!(grazing, 0.0);
        let behind = point_irradiance_density(&P3::new(0.0, 0.0, -1.0), &s, &n, 80.0).unwrap();
        assert_eq!(behind, 0.0);
        assert!(matches!(point_irradiance_density(&s, &s, &n, 80.0), Err(RadiometryError::Coincident(_))));
    }

    #[test]
    fn invisible_patch_is_zero() {
        let p = wall_patch(P2::new(0.0, 0.0), P2::new(1.0, 0.0), 0.0, 2.0);
        assert_eq!(patch_irradiance(&LightSource::point(80.0), &P3::new(0.5, 1.0, 1.0), &p, false), 0.0);
    }

    #[test]
    fn tiny_patch_matches_midpoint_density() {
        let p = wall_patch(P2::new(0.0, 0.0), P2::new(1e-4, 0.0), 1.0, 1.0 + 1e-4);
        let light = P3::new(0.3, 0.8, 1.4);
        let mean = patch_irradiance(&LightSource::point(80.0), &light, &p, true);
        let mid = point_irradiance_density(&light, &p.centroid, &p.normal, 80.0).unwrap();
        assert_relative_eq!(mean, mid, max_relative = 1e-4);
    }

    /// Solid angle of triangle (a, b, c) seen from the origin
    /// (Van Oosterom & Strackee).
    fn triangle_solid_angle(a: V3, b: V3, c: V3) -> f64 {
        let (la, lb, lc) = (a.norm(), b.norm(), c.norm());
        let num = a.dot(&b.cross(&c)).abs();
        let den = la * lb * lc + a.dot(&b) * lc + a.dot(&c) * lb + b.dot(&c) * la;
        2.0 * num.atan2(den)
    }

    /// Exact mean irradiance of a fully visible, front-facing wall patch:
    /// the flux P Ω / 4π spread over its area.
    fn analytic_mean(light: &P3, p: &SurfacePatch, power: f64) -> f64 {
        let PatchGeometry::Wall { a, b, z0, z1, .. } = p.geometry else { unreachable!() };
        let q = [P3::new(a.x, a.y, z0), P3::new(b.x, b.y, z0), P3::new(b.x, b.y, z1), P3::new(a.x, a.y, z1)];
        let v: Vec<V3> = q.iter().map(|c| c - light).collect();
        let omega = triangle_solid_angle(v[0], v[1], v[2]) + triangle_solid_angle(v[0], v[2], v[3]);
        power * omega / (4.0 * PI * p.area)
    }

    /// Jittered-stratified Monte Carlo over the patch: `n x n` strata with
    /// one uniform sample each.
    fn monte_carlo_mean(light: &P3, p: &SurfacePatch, power: f64, n: usize, rng: &mut ChaCha8Rng) -> f64 {
        let PatchGeometry::Wall { a, b, z0, z1, .. } = p.geometry else { unreachable!() };
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                let u = (i as f64 + rng.random::<f64>()) / n as f64;
                let v = (j as f64 + rng.random::<f64>()) / n as f64;
                let xy = a + (b - a) * u;
                let s = P3::new(xy.x, xy.y, z0 + (z1 - z0) * v);
                acc += point_irradiance_density(light, &s, &p.normal, power).unwrap();
            }
        }
        acc / (n * n) as f64
    }

    #[test]
    fn on_axis_patch_matches_monte_carlo() {
        let p = wall_patch(P2::new(-0.25, 0.0), P2::new(0.25, 0.0), 0.0, 2.0);
        let light = P3::new(0.0, 1.0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mc = monte_carlo_mean(&light, &p, 80.0, 1000, &mut rng);
        let ad = patch_irradiance(&LightSource::point(80.0), &light, &p, true);
        assert_relative_eq!(ad, mc, max_relative = 1e-3);
        assert_relative_eq!(ad, analytic_mean(&light, &p, 80.0), max_relative = 2e-4);
    }

    #[test]
    fn random_pairs_match_solid_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..200 {
            let w = rng.random_range(0.05..1.0);
            let p = wall_patch(P2::new(0.0, 0.0), P2::new(w, 0.0), 0.0, rng.random_range(0.5..2.5));
            let light = P3::new(rng.random_range(-1.0..2.0), rng.random_range(0.15..3.0), rng.random_range(0.0..2.0));
            let ad = patch_irradiance(&LightSource::point(80.0), &light, &p, true);
            assert_relative_eq!(ad, analytic_mean(&light, &p, 80.0), max_relative = 5e-4);
        }
    }

    #[test]
    fn cylinder_with_one_sample_is_a_point() {
        let p = wall_patch(P2::new(0.0, 0.0), P2::new(0.5, 0.0), 0.0, 2.0);
        let pos = P3::new(0.2, 0.7, 1.0);
        let tube = LightSource::vertical_tube(80.0, 1.2, 1);
        let pt = LightSource::point(80.0);
        assert_eq!(patch_irradiance(&tube, &pos, &p, true), patch_irradiance(&pt, &pos, &p, true));
        let emitters = LightSource::vertical_tube(80.0, 1.2, 10).emitters(&pos);
        assert_eq!(emitters.len(), 10);
        assert_relative_eq!(emitters.iter().map(|e| e.1).sum::<f64>(), 80.0, max_relative = 1e-12);
    }

    #[test]
    fn ten_sample_tube_is_within_one_percent_of_fine_tube() {
        let p = wall_patch(P2::new(0.0, 0.0), P2::new(0.25, 0.0), 0.0, 2.0);
        let pos = P3::new(0.1, 0.5, 1.0);
        let coarse = patch_irradiance(&LightSource::vertical_tube(80.0, 1.2, 10), &pos, &p, true);
        let fine = patch_irradiance(&LightSource::vertical_tube(80.0, 1.2, 100), &pos, &p, true);
        assert_relative_eq!(coarse, fine, max_relative = 1e-2);
    }

    #[test]
    fn matrix_structure() {
        let w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 4.0), 2.0);
        let patches = discretize_surfaces(&w, 0.5).unwrap();
        let lights = vec![P3::new(1.0, 1.0, 1.0), P3::new(3.0, 2.0, 1.0)];
        let vis = build_visibility_graph(&lights, &patches, &w);
        let light = LightSource::point(80.0);
        let m = build_irradiance_matrix(&light, &lights, &patches, &vis);
        assert!(m.values.iter().all(|&v| v > 0.0));
        let doubled = build_irradiance_matrix(&LightSource::point(160.0), &lights, &patches, &vis);
        for (a, b) in m.values.iter().zip(&doubled.values) {
            assert_eq!(2.0 * a, *b);
        }
        let mut buf = Vec::new();
        m.write_to(&mut buf).unwrap();
        assert_eq!(IrradianceMatrix::read_from(buf.as_slice()).unwrap(), m);
    }

    #[test]
    fn single_entry_matrix() {
        let m = IrradianceMatrix::from_rows(&[vec![80.0 / (4.0 * PI)]]);
        assert_relative_eq!(m.get(0, 0), 6.3662, epsilon = 1e-4);
        assert_relative_eq!(m.fluence(&[10.0])[0], 10.0 * 80.0 / (4.0 * PI), max_relative = 1e-15);
    }
}
