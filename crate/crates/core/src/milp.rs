//! Joint dwell-time and tour optimization as a mixed-integer program,
//! solved by branch-and-bound over LP relaxations.
//!
//! Variables: dwell `t_k`, edge selections `z_kl ∈ {0,1}` and flows `g_kl`
//! for every ordered pair `k != l` with finite distance. Constraints:
//!
//! * fluence `Σ_k I_ik t_k >= μ_i` for every patch row;
//! * linking `t_k <= M_k Σ_l (z_kl + z_lk)`;
//! * in-degree `Σ_k z_kl <= 1` for `l >= 2` and `Σ_k z_k1 = 1`;
//! * balance `Σ_k z_kl = Σ_k z_lk`;
//! * single-commodity flow `Σ_k g_kl - Σ_k g_lk = Σ_k z_kl` for `l >= 2`,
//!   `g_kl <= K z_kl` and `g_kl <= Σ z_ab - 1`.
//!
//! The objective is `Σ t_k + Σ d_kl z_kl / v_max`. Vertex 1 (index 0 here)
//! is always on the loop.

use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{LinearProgram, LpError, LpStatus, Sense};
use crate::radiometry::IrradianceMatrix;
use crate::roadmap::DistanceMatrix;
use crate::tour::held_karp;

pub const INTEGRALITY_TOL: f64 = 1e-6;
/// Candidate count above which the exact method is refused by the CLI.
pub const MAX_CANDIDATES: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum MilpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Choice of the linking constants `M_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BigM {
    /// The same `M` for every vertex.
    Uniform(f64),
    /// `M_k = min(cap, max_i μ_i / I_ik)`: the longest dwell vertex `k`
    /// can usefully have, since beyond it every patch `k` reaches is
    /// already dosed by `k` alone.
    PerVertex { cap: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub lp: LinearProgram,
    pub k: usize,
    /// Ordered pairs `(k, l)` that have a `z` and a `g` variable.
    pub edges: Vec<(usize, usize)>,
    pub big_m: Vec<f64>,
    pub v_max: f64,
    pub n_fluence_rows: usize,
}

impl MilpModel {
    pub fn t_var(&self, k: usize) -> usize {
        k
    }

    pub fn z_var(&self, e: usize) -> usize {
        self.k + e
    }

    pub fn g_var(&self, e: usize) -> usize {
        self.k + self.edges.len() + e
    }

    pub fn n_binaries(&self) -> usize {
        self.edges.len()
    }

    pub fn n_continuous(&self) -> usize {
        self.k + self.edges.len()
    }

    pub fn binary_vars(&self) -> Vec<usize> {
        (0..self.edges.len()).map(|e| self.z_var(e)).collect()
    }

    pub fn var_names(&self) -> Vec<String> {
        let mut names: Vec<String> = (0..self.k).map(|k| format!("t_{}", k + 1)).collect();
        names.extend(self.edges.iter().map(|(a, b)| format!("z_{}_{}", a + 1, b + 1)));
        names.extend(self.edges.iter().map(|(a, b)| format!("g_{}_{}", a + 1, b + 1)));
        names
    }

    /// CPLEX LP text for cross-checking with an external solver.
    pub fn to_lp_format(&self) -> String {
        self.lp.to_lp_format(&self.var_names(), &self.binary_vars())
    }
}

/// Assemble the model over `K = irradiance.n_vantages` vertices. Edges with
/// infinite distance are left out.
pub fn build_milp(
    irradiance: &IrradianceMatrix,
    d: &DistanceMatrix,
    mu_min: &[f64],
    v_max: f64,
    big_m: BigM,
) -> Result<MilpModel, MilpError> {
    let k = irradiance.n_vantages;
    let n = irradiance.n_patches;
    if d.n != k {
        return Err(MilpError::Dimension(format!("{} vantages but {}x{} distances", k, d.n, d.n)));
    }
    if mu_min.len() != n {
        return Err(MilpError::Dimension(format!("{} patches but {} fluence targets", n, mu_min.len())));
    }
    if !(v_max > 0.0) {
        return Err(MilpError::Dimension("v_max must be positive".into()));
    }
    let edges: Vec<(usize, usize)> =
        (0..k).flat_map(|a| (0..k).map(move |b| (a, b))).filter(|&(a, b)| a != b && d.get(a, b).is_finite()).collect();
    let ne = edges.len();
    let mut c = vec![1.0; k];
    c.extend(edges.iter().map(|&(a, b)| d.get(a, b) / v_max));
    c.extend(std::iter::repeat_n(0.0, ne));
    let mut lp = LinearProgram::new(c);
    for e in 0..ne {
        lp.set_bounds(k + e, 0.0, 1.0);
    }
    let big: Vec<f64> = (0..k)
        .map(|col| match big_m {
            BigM::Uniform(m) => m,
            BigM::PerVertex { cap } => {
                let need = (0..n)
                    .filter(|&i| irradiance.get(i, col) > 0.0)
                    .map(|i| mu_min[i] / irradiance.get(i, col))
                    .fold(0.0f64, f64::max);
                need.min(cap)
            }
        })
        .collect();
    let model = MilpModel { lp, k, edges, big_m: big, v_max, n_fluence_rows: n };
    let mut lp = model.lp.clone();
    // fluence
    for i in 0..n {
        let coeffs: Vec<(usize, f64)> = (0..k).filter(|&j| irradiance.get(i, j) > 0.0).map(|j| (j, irradiance.get(i, j))).collect();
        lp.add_row(coeffs, Sense::Ge, mu_min[i]);
    }
    // linking
    for v in 0..k {
        let mut coeffs = vec![(model.t_var(v), 1.0)];
        for (e, &(a, b)) in model.edges.iter().enumerate() {
            if a == v || b == v {
                coeffs.push((model.z_var(e), -model.big_m[v]));
            }
        }
        lp.add_row(coeffs, Sense::Le, 0.0);
    }
    // in-degree
    for l in 0..k {
        let coeffs: Vec<(usize, f64)> =
            model.edges.iter().enumerate().filter(|(_, &(_, b))| b == l).map(|(e, _)| (model.z_var(e), 1.0)).collect();
        lp.add_row(coeffs, if l == 0 { Sense::Eq } else { Sense::Le }, 1.0);
    }
    // balance
    for l in 0..k {
        let mut coeffs = Vec::new();
        for (e, &(a, b)) in model.edges.iter().enumerate() {
            if b == l {
                coeffs.push((model.z_var(e), 1.0));
            }
            if a == l {
                coeffs.push((model.z_var(e), -1.0));
            }
        }
        lp.add_row(coeffs, Sense::Eq, 0.0);
    }
    // flow conservation
    for l in 1..k {
        let mut coeffs = Vec::new();
        for (e, &(a, b)) in model.edges.iter().enumerate() {
            if b == l {
                coeffs.push((model.g_var(e), 1.0));
                coeffs.push((model.z_var(e), -1.0));
            }
            if a == l {
                coeffs.push((model.g_var(e), -1.0));
            }
        }
        lp.add_row(coeffs, Sense::Eq, 0.0);
    }
    // flow capacity
    for e in 0..ne {
        lp.add_row(vec![(model.g_var(e), 1.0), (model.z_var(e), -(k as f64))], Sense::Le, 0.0);
    }
    for e in 0..ne {
        let mut coeffs = vec![(model.g_var(e), 1.0)];
        coeffs.extend((0..ne).map(|f| (model.z_var(f), -1.0)));
        lp.add_row(coeffs, Sense::Le, -1.0);
    }
    Ok(MilpModel { lp, ..model })
}

/// Open-path variant: vertex 0 of the returned model is a dummy with no
/// irradiance and zero distance to every vantage, so the loop through it is
/// an open path over the real vertices `1..=K`.
pub fn build_milp_open(
    irradiance: &IrradianceMatrix,
    d: &DistanceMatrix,
    mu_min: &[f64],
    v_max: f64,
    big_m: BigM,
) -> Result<MilpModel, MilpError> {
    let k = irradiance.n_vantages;
    if d.n != k {
        return Err(MilpError::Dimension(format!("{} vantages but {}x{} distances", k, d.n, d.n)));
    }
    let rows: Vec<Vec<f64>> = (0..irradiance.n_patches)
        .map(|i| std::iter::once(0.0).chain(irradiance.row(i).iter().copied()).collect())
        .collect();
    let mut ext = IrradianceMatrix::from_rows(&rows);
    if rows.is_empty() {
        ext = IrradianceMatrix::zeros(0, k + 1);
    }
    let mut de = DistanceMatrix::new(k + 1);
    for a in 0..=k {
        for b in 0..=k {
            let v = if a == 0 || b == 0 { 0.0 } else { d.get(a - 1, b - 1) };
            de.set(a, b, v);
        }
    }
    build_milp(&ext, &de, mu_min, v_max, big_m)
}

/// Visiting order of an open-path solution without the dummy, in
/// original vantage indices.
pub fn open_path_order(sol: &MilpSolution) -> Vec<usize> {
    sol.tour.iter().skip(1).map(|&v| v - 1).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MilpStatus {
    /// Proven optimal (gap 0 within tolerance).
    Optimal,
    /// Time limit hit with an incumbent; see `gap`.
    TimeLimit,
    /// Time limit hit before any integral solution was found.
    NoIncumbent,
    /// Search finished but some node LPs failed numerically; `bound` and
    /// `gap` include those nodes.
    Unproven,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpSolution {
    pub status: MilpStatus,
    pub t: Vec<f64>,
    /// Selected ordered pairs `(k, l)`.
    pub z: Vec<(usize, usize)>,
    pub g: Vec<f64>,
    pub objective: f64,
    /// Best proven lower bound.
    pub bound: f64,
    pub gap: f64,
    pub node_count: usize,
    /// Loop through vertex 0 in visiting order (vertex 0 first).
    pub tour: Vec<usize>,
    pub elapsed_s: f64,
    /// Largest amount by which a node relaxation fell below its parent's.
    pub worst_bound_drop: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BnbOptions {
    pub time_limit: Duration,
    /// Seed the search with the dwell-LP support toured by Held–Karp.
    pub rounding_heuristic: bool,
    pub rel_gap: f64,
}

impl Default for BnbOptions {
    fn default() -> Self {
        BnbOptions { time_limit: Duration::from_secs(600), rounding_heuristic: true, rel_gap: 1e-9 }
    }
}

/// Selected edges as successor lists. `None` unless they form exactly one
/// simple loop through vertex 0.
pub fn single_loop(k: usize, edges: &[(usize, usize)]) -> Option<Vec<usize>> {
    if edges.is_empty() {
        return None;
    }
    let mut succ = vec![usize::MAX; k];
    let mut indeg = vec![0usize; k];
    for &(a, b) in edges {
        if succ[a] != usize::MAX {
            return None;
        }
        succ[a] = b;
        indeg[b] += 1;
    }
    if indeg.iter().any(|&d| d > 1) || succ[0] == usize::MAX {
        return None;
    }
    let mut order = vec![0];
    let mut v = succ[0];
    while v != 0 {
        if v == usize::MAX || order.len() > k {
            return None;
        }
        order.push(v);
        v = succ[v];
    }
    (order.len() == edges.len()).then_some(order)
}

/// Vertex membership fixed by branching: `Some(true)` on the loop,
/// `Some(false)` off it.
#[derive(Clone)]
struct Node {
    bound: f64,
    depth: usize,
    state: Vec<Option<bool>>,
}

struct BestBound(Node);

impl PartialEq for BestBound {
    fn eq(&self, o: &Self) -> bool {
        self.0.bound == o.0.bound && self.0.depth == o.0.depth
    }
}
impl Eq for BestBound {}
impl PartialOrd for BestBound {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for BestBound {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        o.0.bound.total_cmp(&self.0.bound).then(self.0.depth.cmp(&o.0.depth))
    }
}

struct Incumbent {
    objective: f64,
    x: Vec<f64>,
}

fn integral(model: &MilpModel, x: &[f64]) -> bool {
    (0..model.edges.len()).all(|e| {
        let v = x[model.z_var(e)];
        v.min(1.0 - v).abs() <= INTEGRALITY_TOL
    })
}

/// Fix `z` to the given loop and solve the remaining LP for `t` and `g`.
fn complete_loop(model: &MilpModel, order: &[usize]) -> Option<Incumbent> {
    let mut lp = model.lp.clone();
    let chosen: std::collections::HashSet<(usize, usize)> =
        (0..order.len()).map(|i| (order[i], order[(i + 1) % order.len()])).collect();
    if order.len() < 2 || chosen.iter().any(|edge| !model.edges.contains(edge)) {
        return None;
    }
    for (e, edge) in model.edges.iter().enumerate() {
        let v = if chosen.contains(edge) { 1.0 } else { 0.0 };
        lp.set_bounds(model.z_var(e), v, v);
    }
    let sol = lp.solve().ok()?;
    (sol.status == LpStatus::Optimal).then(|| Incumbent { objective: sol.objective, x: sol.x })
}

/// Cheapest loop through exactly the given vertices (vertex 0 first),
/// then the LP for `t` and `g` on it. Dwell does not depend on the visiting
/// order, so this is the optimum over all solutions with that vertex set.
fn best_loop_through(model: &MilpModel, vertices: &[usize]) -> Option<Incumbent> {
    if vertices.len() < 2 || vertices.len() > 20 {
        return None;
    }
    let w: Vec<Vec<f64>> =
        vertices.iter().map(|&a| vertices.iter().map(|&b| if a == b { 0.0 } else { edge_cost(model, a, b) }).collect()).collect();
    let cyc = held_karp(&w);
    let len: f64 = (0..cyc.len()).map(|i| w[cyc[i]][cyc[(i + 1) % cyc.len()]]).sum();
    if !len.is_finite() {
        return None;
    }
    let order: Vec<usize> = cyc.iter().map(|&i| vertices[i]).collect();
    complete_loop(model, &order)
}

fn extract(model: &MilpModel, x: &[f64]) -> (Vec<f64>, Vec<(usize, usize)>, Vec<f64>) {
    let t = (0..model.k).map(|v| x[model.t_var(v)].max(0.0)).collect();
    let z = (0..model.edges.len()).filter(|&e| x[model.z_var(e)] > 0.5).map(|e| model.edges[e]).collect();
    let g = (0..model.edges.len()).map(|e| x[model.g_var(e)]).collect();
    (t, z, g)
}

/// Relaxation at a node: edges touching excluded vertices are fixed to 0,
/// included vertices get out-degree 1.
fn node_lp(model: &MilpModel, state: &[Option<bool>]) -> LinearProgram {
    let mut lp = model.lp.clone();
    for (e, &(a, b)) in model.edges.iter().enumerate() {
        if state[a] == Some(false) || state[b] == Some(false) {
            lp.set_bounds(model.z_var(e), 0.0, 0.0);
            lp.set_bounds(model.g_var(e), 0.0, 0.0);
        }
    }
    for v in 1..model.k {
        if state[v] == Some(true) {
            let coeffs =
                model.edges.iter().enumerate().filter(|(_, &(a, _))| a == v).map(|(e, _)| (model.z_var(e), 1.0)).collect();
            lp.add_row(coeffs, Sense::Eq, 1.0);
        }
    }
    lp
}

/// Branch-and-bound over LP relaxations. Branching is on vertex membership
/// `y_k = Σ_l z_kl` (most fractional first); once every vertex is decided
/// the node is solved exactly by [`best_loop_through`]. Depth-first until
/// the first incumbent, best-bound afterwards.
pub fn solve_milp(model: &MilpModel, options: &BnbOptions) -> MilpSolution {
    let start = Instant::now();
    let k = model.k;
    let mut nodes = 0usize;
    let mut incumbent: Option<Incumbent> = None;
    let finish = |status: MilpStatus, inc: Option<Incumbent>, bound: f64, nodes: usize, drop: f64| {
        let elapsed_s = start.elapsed().as_secs_f64();
        match inc {
            Some(inc) => {
                let (t, z, g) = extract(model, &inc.x);
                let tour = single_loop(model.k, &z).unwrap_or_default();
                let bound = bound.min(inc.objective);
                let gap = if status == MilpStatus::Optimal { 0.0 } else { (inc.objective - bound) / inc.objective.abs().max(1e-12) };
                MilpSolution { status, t, z, g, objective: inc.objective, bound, gap, node_count: nodes, tour, elapsed_s, worst_bound_drop: drop }
            }
            None => MilpSolution {
                status,
                t: Vec::new(),
                z: Vec::new(),
                g: Vec::new(),
                objective: f64::NAN,
                bound,
                gap: f64::INFINITY,
                node_count: nodes,
                tour: Vec::new(),
                elapsed_s,
                worst_bound_drop: drop,
            },
        }
    };
    let prune_tol = |obj: f64| options.rel_gap * obj.abs().max(1.0);
    let offer = |incumbent: &mut Option<Incumbent>, cand: Incumbent| {
        if incumbent.as_ref().is_none_or(|cur| cand.objective < cur.objective) {
            *incumbent = Some(cand);
        }
    };

    let mut root_state = vec![None; k];
    if k > 0 {
        root_state[0] = Some(true);
    }
    let mut dfs: Vec<Node> = vec![Node { bound: f64::NEG_INFINITY, depth: 0, state: root_state }];
    let mut heap: BinaryHeap<BestBound> = BinaryHeap::new();
    let mut root_done = false;
    let mut lost_bound = f64::INFINITY;
    let mut worst_drop = 0.0f64;
    loop {
        let node = if incumbent.is_none() {
            match dfs.pop() {
                Some(n) => n,
                None => break,
            }
        } else {
            for n in dfs.drain(..) {
                heap.push(BestBound(n));
            }
            match heap.pop() {
                Some(BestBound(n)) => n,
                None => break,
            }
        };
        if let Some(inc) = &incumbent {
            if node.bound >= inc.objective - prune_tol(inc.objective) {
                continue;
            }
        }
        if start.elapsed() > options.time_limit {
            let open_bound =
                heap.iter().map(|b| b.0.bound).chain(dfs.iter().map(|n| n.bound)).fold(node.bound.min(lost_bound), f64::min);
            let status = if incumbent.is_some() { MilpStatus::TimeLimit } else { MilpStatus::NoIncumbent };
            return finish(status, incumbent, open_bound, nodes, worst_drop);
        }
        nodes += 1;
        if node.state.iter().all(|s| s.is_some()) {
            let chosen: Vec<usize> = (0..k).filter(|&v| node.state[v] == Some(true)).collect();
            if let Some(inc) = best_loop_through(model, &chosen) {
                offer(&mut incumbent, inc);
            }
            continue;
        }
        let Ok(sol) = node_lp(model, &node.state).solve() else {
            lost_bound = lost_bound.min(node.bound);
            continue;
        };
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            _ => {
                lost_bound = lost_bound.min(node.bound);
                continue;
            }
        }
        worst_drop = worst_drop.max(node.bound - sol.objective);
        let bound = sol.objective.max(node.bound);
        let y: Vec<f64> = {
            let mut y = vec![0.0; k];
            for (e, &(a, _)) in model.edges.iter().enumerate() {
                y[a] += sol.x[model.z_var(e)];
            }
            y
        };
        if !root_done {
            root_done = true;
            if options.rounding_heuristic {
                let mut picked: Vec<usize> = (0..k).filter(|&v| v == 0 || sol.x[model.t_var(v)] > 1e-9).collect();
                if picked.len() == 1 && k > 1 {
                    // a loop needs two vertices; take the cheapest partner
                    let partner = (1..k).min_by(|&a, &b| {
                        (edge_cost(model, 0, a) + edge_cost(model, a, 0)).total_cmp(&(edge_cost(model, 0, b) + edge_cost(model, b, 0)))
                    });
                    picked.extend(partner);
                }
                if let Some(inc) = best_loop_through(model, &picked) {
                    offer(&mut incumbent, inc);
                }
            }
        }
        if let Some(inc) = &incumbent {
            if bound >= inc.objective - prune_tol(inc.objective) {
                continue;
            }
        }
        if integral(model, &sol.x) {
            // z within tolerance of 0/1 can still carry M·z of dwell, so
            // score the rounded loop exactly
            let z: Vec<(usize, usize)> = (0..model.edges.len()).filter(|&e| sol.x[model.z_var(e)] > 0.5).map(|e| model.edges[e]).collect();
            if let Some(inc) = single_loop(k, &z).and_then(|order| complete_loop(model, &order)) {
                let closes = inc.objective - bound <= prune_tol(bound);
                offer(&mut incumbent, inc);
                if closes {
                    continue;
                }
            }
        } else if y.iter().all(|&v| v.min(1.0 - v) <= INTEGRALITY_TOL) {
            let chosen: Vec<usize> = (0..k).filter(|&v| v == 0 || y[v] > 0.5).collect();
            if let Some(inc) = best_loop_through(model, &chosen) {
                offer(&mut incumbent, inc);
            }
        }
        let Some(v) = (1..k)
            .filter(|&v| node.state[v].is_none())
            .max_by(|&a, &b| (y[a].min(1.0 - y[a])).total_cmp(&y[b].min(1.0 - y[b])).then(b.cmp(&a)))
        else {
            continue;
        };
        let prefer_in = y[v] >= 0.5;
        // the preferred side is pushed last so the dive takes it first
        for side in [!prefer_in, prefer_in] {
            let mut state = node.state.clone();
            state[v] = Some(side);
            dfs.push(Node { bound, depth: node.depth + 1, state });
        }
    }
    match incumbent {
        Some(inc) if lost_bound < inc.objective - prune_tol(inc.objective) => finish(MilpStatus::Unproven, Some(inc), lost_bound, nodes, worst_drop),
        Some(inc) => {
            let obj = inc.objective;
            finish(MilpStatus::Optimal, Some(inc), obj, nodes, worst_drop)
        }
        None if lost_bound < f64::INFINITY => finish(MilpStatus::Unproven, None, lost_bound, nodes, worst_drop),
        None => finish(MilpStatus::Infeasible, None, f64::INFINITY, nodes, worst_drop),
    }
}

fn edge_index(model: &MilpModel, a: usize, b: usize) -> usize {
    model.edges.iter().position(|&e| e == (a, b)).expect("edge exists")
}

fn edge_cost(model: &MilpModel, a: usize, b: usize) -> f64 {
    match model.edges.iter().position(|&e| e == (a, b)) {
        Some(e) => model.lp.c[model.z_var(e)],
        None => f64::INFINITY,
    }
}

/// Check every constraint of the model at a solution.
pub fn max_violation(model: &MilpModel, sol: &MilpSolution) -> f64 {
    let mut x = vec![0.0; model.lp.n_vars()];
    x[..model.k].copy_from_slice(&sol.t);
    for &(a, b) in &sol.z {
        x[model.z_var(edge_index(model, a, b))] = 1.0;
    }
    for (e, &g) in sol.g.iter().enumerate() {
        x[model.g_var(e)] = g;
    }
    model.lp.max_violation(&x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn line_distances(k: usize) -> DistanceMatrix {
        let pts: Vec<crate::geometry::P3> = (0..k).map(|i| crate::geometry::P3::new(i as f64, 0.0, 0.0)).collect();
        DistanceMatrix::euclidean(&pts)
    }

    #[test]
    fn variable_counts() {
        for k in 2..6 {
            let m = IrradianceMatrix::from_rows(&[vec![1.0; k]]);
            let model = build_milp(&m, &line_distances(k), &[1.0], 0.5, BigM::Uniform(1e6)).unwrap();
            assert_eq!(model.n_binaries(), k * k - k);
            assert_eq!(model.n_continuous(), k + k * k - k);
            assert_eq!(model.lp.n_vars(), k * k - k + k + k * k - k);
        }
    }

    #[test]
    fn two_vertex_loop() {
        // patch only visible from vertex 2
        let m = IrradianceMatrix::from_rows(&[vec![0.0, 2.0]]);
        let model = build_milp(&m, &line_distances(2), &[10.0], 0.5, BigM::Uniform(1e6)).unwrap();
        let sol = solve_milp(&model, &BnbOptions::default());
        assert_eq!(sol.status, MilpStatus::Optimal);
        assert_eq!(sol.z.len(), 2);
        assert_eq!(sol.tour, vec![0, 1]);
        assert_relative_eq!(sol.objective, 5.0 + 2.0 / 0.5, epsilon = 1e-9);
        assert!(max_violation(&model, &sol) < 1e-6);
    }

    #[test]
    fn vertex_needed_only_through_linking() {
        let m = IrradianceMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
        for big_m in [BigM::Uniform(1e6), BigM::PerVertex { cap: 1e6 }] {
            let model = build_milp(&m, &line_distances(3), &[3.0, 4.0], 1.0, big_m).unwrap();
            let sol = solve_milp(&model, &BnbOptions { rounding_heuristic: false, ..Default::default() });
            assert_eq!(sol.status, MilpStatus::Optimal);
            assert!(sol.t[2] > 0.0);
            assert!(sol.z.iter().any(|&(a, b)| a == 2 || b == 2));
            assert_relative_eq!(sol.objective, 7.0 + 4.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn infeasible_when_patch_unreachable() {
        let m = IrradianceMatrix::from_rows(&[vec![0.0, 0.0]]);
        let model = build_milp(&m, &line_distances(2), &[1.0], 1.0, BigM::Uniform(1e6)).unwrap();
        assert_eq!(solve_milp(&model, &BnbOptions::default()).status, MilpStatus::Infeasible);
    }

    #[test]
    fn single_vantage_gives_zero_length_open_path() {
        let m = IrradianceMatrix::from_rows(&[vec![2.0], vec![4.0]]);
        let model = build_milp_open(&m, &DistanceMatrix::new(1), &[10.0, 10.0], 0.5, BigM::Uniform(1e6)).unwrap();
        let sol = solve_milp(&model, &BnbOptions::default());
        assert_eq!(sol.status, MilpStatus::Optimal);
        assert_eq!(open_path_order(&sol), vec![0]);
        assert_relative_eq!(sol.objective, 5.0, epsilon = 1e-9);
        assert_relative_eq!(sol.t[1], 5.0, epsilon = 1e-9);
    }

    #[test]
    fn open_path_skips_return_edge() {
        let m = IrradianceMatrix::from_rows(&[vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
        let open = build_milp_open(&m, &line_distances(3), &[1.0, 1.0], 1.0, BigM::Uniform(1e6)).unwrap();
        let sol = solve_milp(&open, &BnbOptions::default());
        assert_relative_eq!(sol.objective, 2.0 + 2.0, epsilon = 1e-9);
        let order = open_path_order(&sol);
        assert!(order == vec![0, 2] || order == vec![2, 0]);
        let closed = build_milp(&m, &line_distances(3), &[1.0, 1.0], 1.0, BigM::Uniform(1e6)).unwrap();
        assert_relative_eq!(solve_milp(&closed, &BnbOptions::default()).objective, 2.0 + 4.0, epsilon = 1e-9);
    }

    #[test]
    fn loop_detection() {
        assert_eq!(single_loop(4, &[(0, 2), (2, 0)]), Some(vec![0, 2]));
        assert_eq!(single_loop(4, &[(0, 1), (1, 0), (2, 3), (3, 2)]), None);
        assert_eq!(single_loop(4, &[(1, 2), (2, 1)]), None);
        assert_eq!(single_loop(4, &[(0, 1), (1, 2), (2, 0)]), Some(vec![0, 1, 2]));
    }

    #[test]
    fn lp_export_names_variables() {
        let m = IrradianceMatrix::from_rows(&[vec![1.0, 1.0]]);
        let model = build_milp(&m, &line_distances(2), &[1.0], 1.0, BigM::Uniform(100.0)).unwrap();
        let text = model.to_lp_format();
        assert!(text.contains("t_1") && text.contains("z_1_2") && text.contains("g_2_1"));
        assert!(text.contains("General\n z_1_2\n z_2_1\n"));
    }
}
