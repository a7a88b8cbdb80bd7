//! Floorplan rendering of a 2.5D plan: one polyline per wall patch coloured
//! by fluence and one path for the trajectory.

use std::fmt::Write;

use uvplan::geometry::P3;
use uvplan::worldgen::{PatchGeometry, SurfacePatch, World2p5D};

const PX_PER_M: f64 = 100.0;
const MARGIN_PX: f64 = 20.0;

/// Linear red to green over `[0, mu_min]`, clamped above.
pub fn fluence_color(fluence: f64, mu_min: f64) -> (u8, u8, u8) {
    let t = if mu_min > 0.0 { (fluence / mu_min).clamp(0.0, 1.0) } else { 1.0 };
    ((255.0 * (1.0 - t)).round() as u8, (255.0 * t).round() as u8, 0)
}

pub fn render_plan(world: &World2p5D, patches: &[SurfacePatch], fluence: &[f64], mu_min: f64, path: &[P3], stops: &[P3]) -> String {
    let b = &world.bounds;
    let (w, h) = (b.width() * PX_PER_M + 2.0 * MARGIN_PX, b.height() * PX_PER_M + 2.0 * MARGIN_PX);
    let px = |x: f64, y: f64| ((x - b.min.x) * PX_PER_M + MARGIN_PX, (b.max.y - y) * PX_PER_M + MARGIN_PX);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.1} {h:.1}">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{w:.1}" height="{h:.1}" fill="white"/>"#);
    let _ = writeln!(s, r#"<g id="patches" stroke-width="4" stroke-linecap="butt" fill="none">"#);
    for (p, &f) in patches.iter().zip(fluence) {
        let PatchGeometry::Wall { a, b: e, .. } = p.geometry else { continue };
        let (x0, y0) = px(a.x, a.y);
        let (x1, y1) = px(e.x, e.y);
        let (r, g, bl) = fluence_color(f, mu_min);
        let _ = writeln!(
            s,
            r#"<polyline points="{x0:.2},{y0:.2} {x1:.2},{y1:.2}" stroke="rgb({r},{g},{bl})"><title>patch {} fluence {f:.1} J/m2</title></polyline>"#,
            p.id
        );
    }
    let _ = writeln!(s, "</g>");
    let mut d = String::new();
    for (i, q) in path.iter().enumerate() {
        let (x, y) = px(q.x, q.y);
        let _ = write!(d, "{}{x:.2} {y:.2} ", if i == 0 { "M" } else { "L" });
    }
    let _ = writeln!(s, r#"<path id="trajectory" d="{}" fill="none" stroke="rgb(200,30,30)" stroke-width="2"/>"#, d.trim_end());
    let _ = writeln!(s, r#"<g id="vantages" fill="rgb(30,30,200)">"#);
    for q in stops {
        let (x, y) = px(q.x, q.y);
        let _ = writeln!(s, r#"<circle cx="{x:.2}" cy="{y:.2}" r="3"/>"#);
    }
    let _ = writeln!(s, "</g>\n</svg>");
    s
}
