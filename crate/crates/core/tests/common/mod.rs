//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use uvplan::geometry::P3;
use uvplan::lp::{LinearProgram, LpStatus, Sense};
use uvplan::milp::{build_milp, BigM, MilpModel};
use uvplan::radiometry::IrradianceMatrix;
use uvplan::roadmap::DistanceMatrix;

/// True when the selected arcs are exactly one directed cycle through vertex 0.
pub fn is_single_loop_through_first(k: usize, arcs: &[(usize, usize)]) -> bool {
    if arcs.len() < 2 {
        return false;
    }
    let mut out = vec![Vec::new(); k];
    let mut indeg = vec![0; k];
    for &(a, b) in arcs {
        out[a].push(b);
        indeg[b] += 1;
    }
    let touched: Vec<usize> = (0..k).filter(|&v| !out[v].is_empty() || indeg[v] > 0).collect();
    if touched.iter().any(|&v| out[v].len() != 1 || indeg[v] != 1) || out[0].len() != 1 {
        return false;
    }
    let mut steps = 1;
    let mut v = out[0][0];
    while v != 0 {
        v = out[v][0];
        steps += 1;
    }
    steps == arcs.len()
}

pub fn scf_model(k: usize) -> MilpModel {
    let pts: Vec<P3> = (0..k).map(|i| P3::new(i as f64, (i * i) as f64 * 0.1, 0.0)).collect();
    let irr = IrradianceMatrix::from_rows(&[vec![1.0; k]]);
    build_milp(&irr, &DistanceMatrix::euclidean(&pts), &[0.0], 1.0, BigM::Uniform(1e6)).unwrap()
}

pub fn enumerate_scf(k: usize) -> (usize, usize, usize) {
    let model = scf_model(k);
    let ne = model.edges.len();
    let z_only: Vec<usize> = (0..model.lp.rows.len())
        .filter(|&i| model.lp.rows[i].coeffs.iter().all(|&(j, _)| j >= model.k && j < model.k + ne))
        .collect();
    let (mut accepted, mut false_accept, mut false_reject) = (0, 0, 0);
    for mask in 0u64..(1 << ne) {
        let arcs: Vec<(usize, usize)> = (0..ne).filter(|&e| mask >> e & 1 == 1).map(|e| model.edges[e]).collect();
        let mut x = vec![0.0; model.lp.n_vars()];
        for e in 0..ne {
            x[model.z_var(e)] = (mask >> e & 1) as f64;
        }
        let z_ok = z_only.iter().all(|&i| {
            let r = &model.lp.rows[i];
            let a = model.lp.row_activity(i, &x);
            match r.sense {
                Sense::Ge => a >= r.rhs - 1e-9,
                Sense::Le => a <= r.rhs + 1e-9,
                Sense::Eq => (a - r.rhs).abs() <= 1e-9,
            }
        });
        let feasible = z_ok && {
            let mut lp = model.lp.clone();
            for e in 0..ne {
                let v = x[model.z_var(e)];
                lp.set_bounds(model.z_var(e), v, v);
            }
            lp.solve().unwrap().status == LpStatus::Optimal
        };
        let truth = is_single_loop_through_first(k, &arcs);
        accepted += feasible as usize;
        false_accept += (feasible && !truth) as usize;
        false_reject += (!feasible && truth) as usize;
    }
    (accepted, false_accept, false_reject)
}

/// Directed loops through vertex 0 on `k` labelled vertices: Σ_{m>=1} (k-1)!/(k-1-m)!.
pub fn loop_count(k: usize) -> usize {
    (1..k).map(|m| ((k - m)..k).product::<usize>()).sum()
}

pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

pub fn dwell_lp(irr: &[Vec<f64>], mu: &[f64], subset: &[usize]) -> Option<f64> {
    let mut lp = LinearProgram::new(vec![1.0; subset.len()]);
    for (i, row) in irr.iter().enumerate() {
        lp.add_row(subset.iter().enumerate().map(|(j, &v)| (j, row[v])).collect(), Sense::Ge, mu[i]);
    }
    let sol = lp.solve().unwrap();
    (sol.status == LpStatus::Optimal).then_some(sol.objective)
}

pub fn brute_force(irr: &[Vec<f64>], mu: &[f64], pts: &[P3], v: f64) -> f64 {
    let k = pts.len();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << (k - 1)) {
        let others: Vec<usize> = (1..k).filter(|&i| mask >> (i - 1) & 1 == 1).collect();
        if others.is_empty() {
            continue;
        }
        let mut subset = vec![0];
        subset.extend(&others);
        let Some(dwell) = dwell_lp(irr, mu, &subset) else { continue };
        let travel = permutations(&others)
            .into_iter()
            .map(|p| {
                let mut cyc = vec![0];
                cyc.extend(p);
                (0..cyc.len()).map(|i| (pts[cyc[i]] - pts[cyc[(i + 1) % cyc.len()]]).norm()).sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        best = best.min(dwell + travel / v);
    }
    best
}

/// Random instance with `k` vantages and `n` patches: points in a 4 m
/// square, about half the irradiance entries zero, every patch seen by
/// someone.
pub fn random_instance(rng: &mut ChaCha8Rng, k: usize, n: usize) -> (Vec<P3>, Vec<Vec<f64>>, Vec<f64>) {
    let pts: Vec<P3> = (0..k).map(|_| P3::new(rng.random_range(0.0..4.0), rng.random_range(0.0..4.0), 0.0)).collect();
    let mut irr: Vec<Vec<f64>> =
        (0..n).map(|_| (0..k).map(|_| if rng.random_bool(0.5) { rng.random_range(0.1..2.0) } else { 0.0 }).collect()).collect();
    for row in irr.iter_mut() {
        if row.iter().all(|&x| x == 0.0) {
            row[rng.random_range(0..k)] = 1.0;
        }
    }
    let mu: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
    (pts, irr, mu)
}
