//! Occlusion queries for extruded worlds.
//!
//! Walls and obstacles are full-height prisms and the light moves on a
//! horizontal plane, so a patch is visible exactly when the floorplan segment
//! from the light to the patch midpoint crosses no other wall. Grazing an
//! obstacle vertex counts as blocked.

use crate::geometry::{segments_intersect, P2, P3};
use crate::worldgen::{SurfacePatch, Wall, WallSource, World2p5D};

/// Precomputed wall list for repeated queries against one world.
#[derive(Debug, Clone)]
pub struct Occluders {
    walls: Vec<Wall>,
}

impl Occluders {
    pub fn new(world: &World2p5D) -> Self {
        Occluders { walls: world.walls() }
    }

    fn blocked(&self, from: &P2, to: &P2, skip: Option<WallSource>) -> bool {
        self.walls
            .iter()
            .filter(|w| Some(w.source) != skip)
            .any(|w| segments_intersect(from, to, &w.a, &w.b))
    }

    /// Patch visibility; see [`segment_visible`].
    pub fn patch_visible(&self, light: &P3, patch: &SurfacePatch) -> bool {
        let Some(source) = patch.wall_source() else {
            return false;
        };
        if (light - patch.centroid).dot(&patch.normal) <= 0.0 {
            return false;
        }
        let from = P2::new(light.x, light.y);
        !self.blocked(&from, &patch.midpoint_2d(), Some(source))
    }

    /// Unobstructed straight line between two floorplan points.
    pub fn points_visible(&self, a: &P2, b: &P2) -> bool {
        a == b || !self.blocked(a, b, None)
    }
}

/// True iff the patch faces the light and the floorplan segment from the
/// light to the patch midpoint touches no wall other than the patch's own.
///
/// Only wall patches of 2.5D worlds are handled; triangle patches always
/// return `false` (mesh visibility comes from the cube rasterizer).
pub fn segment_visible(light: &P3, patch: &SurfacePatch, world: &World2p5D) -> bool {
    Occluders::new(world).patch_visible(light, patch)
}

/// Node of a [`VisibilityGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Light(usize),
    Patch(usize),
}

/// Visibility between light positions and patch midpoints.
#[derive(Debug, Clone)]
pub struct VisibilityGraph {
    lights: Vec<P3>,
    midpoints: Vec<P2>,
    n_patches: usize,
    /// Row-major `K x N`: light k sees patch i (front-facing and unoccluded).
    light_patch: Vec<bool>,
    occluders: Occluders,
}

impl VisibilityGraph {
    pub fn n_lights(&self) -> usize {
        self.lights.len()
    }

    pub fn n_patches(&self) -> usize {
        self.n_patches
    }

    pub fn is_visible(&self, light: usize, patch: usize) -> bool {
        self.light_patch[light * self.n_patches + patch]
    }

    /// Patches seen from light `k`.
    pub fn visible_patches(&self, light: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_patches).filter(move |&i| self.is_visible(light, i))
    }

    fn position(&self, n: Node) -> P2 {
        match n {
            Node::Light(k) => P2::new(self.lights[k].x, self.lights[k].y),
            Node::Patch(i) => self.midpoints[i],
        }
    }

    /// Symmetric edge relation. Light/patch pairs use the patch rule
    /// (facing + occlusion); other pairs use plain line of sight with the
    /// endpoints' own walls ignored.
    pub fn edge(&self, a: Node, b: Node) -> bool {
        if a == b {
            return true;
        }
        match (a, b) {
            (Node::Light(k), Node::Patch(i)) | (Node::Patch(i), Node::Light(k)) => self.is_visible(k, i),
            (Node::Light(_), Node::Light(_)) => self.occluders.points_visible(&self.position(a), &self.position(b)),
            (Node::Patch(_), Node::Patch(_)) => {
                // both endpoints sit on walls; only interior crossings count
                let (pa, pb) = (self.position(a), self.position(b));
                let shrink = |p: P2, q: P2| p + (q - p) * 1e-9;
                self.occluders.points_visible(&shrink(pa, pb), &shrink(pb, pa))
            }
        }
    }
}

/// Entry `(k, i)` equals [`segment_visible`]`(lights[k], patches[i], world)`.
pub fn build_visibility_graph(lights: &[P3], patches: &[SurfacePatch], world: &World2p5D) -> VisibilityGraph {
    let occluders = Occluders::new(world);
    let mut light_patch = Vec::with_capacity(lights.len() * patches.len());
    for light in lights {
        light_patch.extend(patches.iter().map(|p| occluders.patch_visible(light, p)));
    }
    VisibilityGraph {
        lights: lights.to_vec(),
        midpoints: patches.iter().map(|p| p.midpoint_2d()).collect(),
        n_patches: patches.len(),
        light_patch,
        occluders,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::worldgen::{discretize_surfaces, generate_random_room, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square(cx: f64, cy: f64, h: f64) -> Vec<P2> {
        vec![P2::new(cx - h, cy - h), P2::new(cx + h, cy - h), P2::new(cx + h, cy + h), P2::new(cx - h, cy + h)]
    }

    #[test]
    fn empty_room_sees_everything_from_center() {
        let w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 4.0), 2.0);
        let patches = discretize_surfaces(&w, 0.5).unwrap();
        let light = P3::new(2.0, 2.0, 1.0);
        assert!(patches.iter().all(|p| segment_visible(&light, p, &w)));
        let g = build_visibility_graph(&[light], &patches, &w);
        assert!((0..patches.len()).all(|i| g.is_visible(0, i)));
    }

    #[test]
    fn obstacle_blocks_far_patch_and_back_faces() {
        let mut w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 4.0), 2.0);
        w.obstacles.push(square(2.0, 1.0, 0.3));
        let patches = discretize_surfaces(&w, 0.5).unwrap();
        let light = P3::new(2.0, 2.0, 1.0);
        // bottom boundary patch straight behind the square
        let behind = patches
            .iter()
            .find(|p| p.wall_source() == Some(WallSource::Boundary { edge: 0 }) && (p.centroid.x - 1.75).abs() < 0.3)
            .unwrap();
        assert!(!segment_visible(&P3::new(1.75, 2.0, 1.0), behind, &w));
        // bottom face of the square faces away from the light
        let back = patches
            .iter()
            .find(|p| p.wall_source() == Some(WallSource::Obstacle { obstacle: 0, edge: 0 }))
            .unwrap();
        assert!(!segment_visible(&light, back, &w));
        // top face is seen
        let front = patches
            .iter()
            .find(|p| p.wall_source() == Some(WallSource::Obstacle { obstacle: 0, edge: 2 }))
            .unwrap();
        assert!(segment_visible(&light, front, &w));
    }

    #[test]
    fn partition_wall_hides_other_side() {
        let mut w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 2.0), 2.0);
        w.obstacles.push(vec![P2::new(1.9, 1e-3), P2::new(2.1, 1e-3), P2::new(2.1, 2.0 - 1e-3), P2::new(1.9, 2.0 - 1e-3)]);
        let patches = discretize_surfaces(&w, 0.25).unwrap();
        let light = P3::new(1.0, 1.0, 1.0);
        let g = build_visibility_graph(&[light], &patches, &w);
        for p in &patches {
            if p.centroid.x > 2.1 + 1e-9 {
                assert!(!g.is_visible(0, p.id), "patch {} at {:?}", p.id, p.centroid);
            }
        }
    }

    #[test]
    fn grazing_a_vertex_blocks() {
        let mut w = World2p5D::empty(Rect::new(0.0, 0.0, 4.0, 4.0), 2.0);
        w.obstacles.push(vec![P2::new(2.0, 2.0), P2::new(2.5, 1.5), P2::new(2.5, 2.5)]);
        let occ = Occluders::new(&w);
        // the line y = 2 from x=1 to x=3.9 touches the vertex (2, 2)
        assert!(occ.points_visible(&P2::new(1.0, 2.0), &P2::new(1.9, 2.0)));
        assert!(!occ.points_visible(&P2::new(1.0, 2.0), &P2::new(3.9, 2.0)));
    }

    #[test]
    fn graph_symmetry_and_self_edges() {
        let w = generate_random_room(3, Rect::new(0.0, 0.0, 4.0, 4.0), 8, 2.0).unwrap();
        let patches = discretize_surfaces(&w, 0.5).unwrap();
        let lights: Vec<P3> = (0..6).map(|i| P3::new(0.3 + 0.6 * i as f64, 0.2, 1.0)).collect();
        let g = build_visibility_graph(&lights, &patches, &w);
        let nodes: Vec<Node> =
            (0..lights.len()).map(Node::Light).chain((0..patches.len()).step_by(7).map(Node::Patch)).collect();
        for &a in &nodes {
            assert!(g.edge(a, a));
            for &b in &nodes {
                assert_eq!(g.edge(a, b), g.edge(b, a));
            }
        }
    }

    #[test]
    fn removing_an_obstacle_never_hides() {
        let w = generate_random_room(11, Rect::new(0.0, 0.0, 4.0, 4.0), 10, 2.0).unwrap();
        let mut fewer = w.clone();
        fewer.obstacles.truncate(5);
        let patches = discretize_surfaces(&w, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let lights: Vec<P3> =
            (0..30).map(|_| P3::new(rng.random_range(0.1..3.9), rng.random_range(0.1..3.9), 1.0)).collect();
        let full = build_visibility_graph(&lights, &patches, &w);
        let reduced = build_visibility_graph(&lights, &patches, &fewer);
        for k in 0..lights.len() {
            for i in 0..patches.len() {
                if full.is_visible(k, i) {
                    assert!(reduced.is_visible(k, i));
                }
            }
        }
    }

    /// Length of the part of segment [p, q] strictly inside a convex CCW
    /// polygon, by parametric half-plane clipping.
    fn clipped_length(p: &P2, q: &P2, poly: &[P2]) -> f64 {
        let d = q - p;
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for i in 0..poly.len() {
            let a = poly[i];
            let b = poly[(i + 1) % poly.len()];
            let e = b - a;
            // inside when cross(e, x - a) >= 0
            let num = e.x * (p.y - a.y) - e.y * (p.x - a.x);
            let den = e.x * d.y - e.y * d.x;
            if den.abs() < 1e-15 {
                if num < 0.0 {
                    return 0.0;
                }
                continue;
            }
            let t = -num / den;
            if den > 0.0 {
                t0 = t0.max(t);
            } else {
                t1 = t1.min(t);
            }
        }
        ((t1 - t0).max(0.0)) * d.norm()
    }

    fn min_vertex_distance(p: &P2, q: &P2, w: &World2p5D) -> f64 {
        w.obstacles
            .iter()
            .flatten()
            .map(|v| crate::geometry::point_segment_distance(v, p, q))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn agrees_with_clipping_oracle() {
        let bounds = Rect::new(0.0, 0.0, 4.0, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut checked = 0;
        for seed in 0..10 {
            let w = generate_random_room(seed, bounds, 13, 2.0).unwrap();
            let occ = Occluders::new(&w);
            let patches = discretize_surfaces(&w, 0.25).unwrap();
            let mut done = 0;
            while done < 100 {
                let light = P3::new(rng.random_range(0.05..3.95), rng.random_range(0.05..3.95), 1.0);
                let l2 = P2::new(light.x, light.y);
                if w.obstacles.iter().any(|o| crate::geometry::point_in_polygon(&l2, o)) {
                    continue;
                }
                let patch = &patches[rng.random_range(0..patches.len())];
                let m = patch.midpoint_2d();
                if min_vertex_distance(&l2, &m, &w) < 1e-6 {
                    continue;
                }
                let facing = (light - patch.centroid).dot(&patch.normal) > 0.0;
                let lengths: Vec<f64> = w.obstacles.iter().map(|o| clipped_length(&l2, &m, o)).collect();
                if lengths.iter().any(|&l| l > 0.0 && l < 1e-6) {
                    continue;
                }
                let oracle = facing && lengths.iter().all(|&l| l == 0.0);
                assert_eq!(occ.patch_visible(&light, patch), oracle, "seed {seed} light {light:?} patch {}", patch.id);
                done += 1;
                checked += 1;
            }
        }
        assert_eq!(checked, 1000);
    }
}
