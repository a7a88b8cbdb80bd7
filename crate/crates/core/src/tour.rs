//! Shortest tour through the vantages that received dwell time.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roadmap::DistanceMatrix;

/// Largest selection solved by Held–Karp in [`TourMode::Auto`].
pub const EXACT_LIMIT: usize = 13;

#[derive(Debug, Error, PartialEq)]
pub enum TourError {
    #[error("selected vantages {unreachable:?} are unreachable from the rest")]
    Disconnected { unreachable: Vec<usize> },
    #[error("exact tour requested for {0} points (limit {EXACT_LIMIT})")]
    TooLarge(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TourMode {
    Exact,
    Heuristic,
    /// Exact up to [`EXACT_LIMIT`] points, heuristic beyond.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tour {
    /// Vantage indices in visiting order.
    pub order: Vec<usize>,
    /// Meters, including the return edge when closed.
    pub length: f64,
    pub closed: bool,
}

pub fn tour_length(order: &[usize], d: &DistanceMatrix, closed: bool) -> f64 {
    let mut len: f64 = order.windows(2).map(|w| d.get(w[0], w[1])).sum();
    if closed && order.len() > 1 {
        len += d.get(order[order.len() - 1], order[0]);
    }
    len
}

/// Local distance matrix over `m` nodes; node `m` is a zero-distance dummy
/// when `dummy` is set.
fn local(selected: &[usize], d: &DistanceMatrix, dummy: bool) -> Vec<Vec<f64>> {
    let m = selected.len();
    let size = m + usize::from(dummy);
    let mut out = vec![vec![0.0; size]; size];
    for i in 0..m {
        for j in 0..m {
            out[i][j] = d.get(selected[i], selected[j]);
        }
    }
    out
}

/// Held–Karp over a closed cycle starting at node 0.
pub fn held_karp(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let full = 1usize << (n - 1);
    let mut dp = vec![f64::INFINITY; full * (n - 1)];
    let mut parent = vec![u8::MAX; full * (n - 1)];
    // node j (1..n) is bit j-1
    for j in 1..n {
        dp[(1 << (j - 1)) * (n - 1) + (j - 1)] = w[0][j];
    }
    for mask in 1..full {
        for j in 1..n {
            let bit = 1 << (j - 1);
            if mask & bit == 0 {
                continue;
            }
            let cur = dp[mask * (n - 1) + (j - 1)];
            if cur.is_infinite() {
                continue;
            }
            for k in 1..n {
                let kb = 1 << (k - 1);
                if mask & kb != 0 {
                    continue;
                }
                let nm = mask | kb;
                let cand = cur + w[j][k];
                let slot = nm * (n - 1) + (k - 1);
                if cand < dp[slot] {
                    dp[slot] = cand;
                    parent[slot] = j as u8;
                }
            }
        }
    }
    let last_mask = full - 1;
    let (mut best, mut end) = (f64::INFINITY, 1);
    for j in 1..n {
        let v = dp[last_mask * (n - 1) + (j - 1)] + w[j][0];
        if v < best {
            best = v;
            end = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let (mut mask, mut j) = (last_mask, end);
    while j != 0 && j as u8 != u8::MAX {
        order.push(j);
        let p = parent[mask * (n - 1) + (j - 1)];
        mask &= !(1 << (j - 1));
        j = if p == u8::MAX { 0 } else { p as usize };
    }
    order.push(0);
    order.reverse();
    order
}

/// Greedy cycle from node 0.
pub fn nearest_neighbor(w: &[Vec<f64>]) -> Vec<usize> {
    let n = w.len();
    if n == 0 {
        return Vec::new();
    }
    let mut seen = vec![false; n];
    let mut order = vec![0];
    seen[0] = true;
    for _ in 1..n {
        let cur = *order.last().unwrap();
        let next = (0..n).filter(|&j| !seen[j]).min_by(|&a, &b| w[cur][a].total_cmp(&w[cur][b]).then(a.cmp(&b))).unwrap();
        seen[next] = true;
        order.push(next);
    }
    order
}

/// 2-opt segment reversals until no move shortens the cycle.
pub fn two_opt(mut cycle: Vec<usize>, w: &[Vec<f64>]) -> Vec<usize> {
    let n = cycle.len();
    if n < 4 {
        return cycle;
    }
    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n - 1 {
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (a, b) = (cycle[i], cycle[i + 1]);
                let (c, e) = (cycle[j], cycle[(j + 1) % n]);
                let delta = w[a][c] + w[b][e] - w[a][b] - w[c][e];
                if delta < -1e-12 {
                    cycle[i + 1..=j].reverse();
                    improved = true;
                }
            }
        }
    }
    cycle
}

/// Vantages not connected (finite distance) to the largest group.
fn unreachable(selected: &[usize], d: &DistanceMatrix) -> Vec<usize> {
    let m = selected.len();
    let mut label = vec![usize::MAX; m];
    let mut sizes = Vec::new();
    for s in 0..m {
        if label[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut stack = vec![s];
        label[s] = id;
        let mut size = 0;
        while let Some(v) = stack.pop() {
            size += 1;
            for u in 0..m {
                if label[u] == usize::MAX && d.get(selected[v], selected[u]).is_finite() {
                    label[u] = id;
                    stack.push(u);
                }
            }
        }
        sizes.push(size);
    }
    let best = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))).unwrap_or(0);
    (0..m).filter(|&i| label[i] != best).map(|i| selected[i]).collect()
}

/// Tour through `selected` (indices into `d`). Closed tours start at the
/// lowest selected index; open paths use a zero-distance dummy node, which
/// is then removed.
pub fn solve_tsp(selected: &[usize], d: &DistanceMatrix, mode: TourMode, closed: bool) -> Result<Tour, TourError> {
    let m = selected.len();
    if m == 0 {
        return Ok(Tour { order: Vec::new(), length: 0.0, closed });
    }
    let bad = unreachable(selected, d);
    if !bad.is_empty() {
        return Err(TourError::Disconnected { unreachable: bad });
    }
    let exact = match mode {
        TourMode::Exact if m > EXACT_LIMIT => return Err(TourError::TooLarge(m)),
        TourMode::Exact => true,
        TourMode::Heuristic => false,
        TourMode::Auto => m <= EXACT_LIMIT,
    };
    let w = local(selected, d, !closed);
    let cycle = if exact { held_karp(&w) } else { two_opt(nearest_neighbor(&w), &w) };
    let local_order: Vec<usize> = if closed {
        let start = (0..m).min_by_key(|&i| selected[i]).unwrap();
        let p = cycle.iter().position(|&v| v == start).unwrap();
        cycle[p..].iter().chain(&cycle[..p]).copied().collect()
    } else {
        let p = cycle.iter().position(|&v| v == m).unwrap();
        let mut path: Vec<usize> = cycle[p + 1..].iter().chain(&cycle[..p]).copied().collect();
        if path.len() > 1 && selected[path[0]] > selected[*path.last().unwrap()] {
            path.reverse();
        }
        path
    };
    let order: Vec<usize> = local_order.iter().map(|&i| selected[i]).collect();
    let length = tour_length(&order, d, closed);
    Ok(Tour { order, length, closed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::P3;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cycle_length(cycle: &[usize], w: &[Vec<f64>]) -> f64 {
        let n = cycle.len();
        (0..n).map(|i| w[cycle[i]][cycle[(i + 1) % n]]).sum()
    }

    fn permutations(items: &mut Vec<usize>, k: usize, out: &mut dyn FnMut(&[usize])) {
        if k == items.len() {
            out(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            permutations(items, k + 1, out);
            items.swap(k, i);
        }
    }

    fn brute_force(sel: &[usize], d: &DistanceMatrix, closed: bool) -> f64 {
        let mut best = f64::INFINITY;
        let mut items = sel.to_vec();
        permutations(&mut items, 0, &mut |p| best = best.min(tour_length(p, d, closed)));
        best
    }

    fn random_points(rng: &mut ChaCha8Rng, n: usize) -> DistanceMatrix {
        let pts: Vec<P3> = (0..n).map(|_| P3::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), 0.0)).collect();
        DistanceMatrix::euclidean(&pts)
    }

    #[test]
    fn unit_square_corners() {
        let pts = [P3::new(0.0, 0.0, 0.0), P3::new(1.0, 1.0, 0.0), P3::new(1.0, 0.0, 0.0), P3::new(0.0, 1.0, 0.0)];
        let d = DistanceMatrix::euclidean(&pts);
        let t = solve_tsp(&[0, 1, 2, 3], &d, TourMode::Exact, true).unwrap();
        assert_relative_eq!(t.length, 4.0, epsilon = 1e-12);
        assert_eq!(t.order[0], 0);
        let h = solve_tsp(&[0, 1, 2, 3], &d, TourMode::Heuristic, true).unwrap();
        assert_relative_eq!(h.length, 4.0, epsilon = 1e-12);
    }

    #[test]
    fn equilateral_triangle() {
        let d = DistanceMatrix::from_rows(&[vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]);
        assert_eq!(solve_tsp(&[0, 1, 2], &d, TourMode::Exact, true).unwrap().length, 3.0);
        assert_eq!(solve_tsp(&[2], &d, TourMode::Exact, true).unwrap().length, 0.0);
        assert_eq!(solve_tsp(&[0, 2], &d, TourMode::Exact, true).unwrap().length, 2.0);
        assert_eq!(solve_tsp(&[0, 2], &d, TourMode::Exact, false).unwrap().length, 1.0);
    }

    #[test]
    fn held_karp_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..100 {
            let m = rng.random_range(1..=8);
            let d = random_points(&mut rng, m + 2);
            let sel: Vec<usize> = (0..m).map(|i| i + 1).collect();
            for closed in [true, false] {
                let t = solve_tsp(&sel, &d, TourMode::Exact, closed).unwrap();
                assert_relative_eq!(t.length, brute_force(&sel, &d, closed), epsilon = 1e-9);
                let mut seen = t.order.clone();
                seen.sort();
                assert_eq!(seen, sel);
            }
        }
    }

    #[test]
    fn two_opt_never_worse_than_nearest_neighbor() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let n = rng.random_range(4..40);
            let d = random_points(&mut rng, n);
            let w = local(&(0..n).collect::<Vec<_>>(), &d, false);
            let nn = nearest_neighbor(&w);
            let opt = two_opt(nn.clone(), &w);
            assert!(cycle_length(&opt, &w) <= cycle_length(&nn, &w) + 1e-12);
        }
    }

    #[test]
    fn disconnected_selection_is_reported() {
        let mut d = DistanceMatrix::new(3);
        d.set(0, 1, 1.0);
        d.set(1, 0, 1.0);
        assert_eq!(solve_tsp(&[0, 1, 2], &d, TourMode::Auto, true), Err(TourError::Disconnected { unreachable: vec![2] }));
        assert_eq!(solve_tsp(&(0..3).collect::<Vec<_>>(), &DistanceMatrix::euclidean(&[P3::origin(); 3]), TourMode::Auto, true).unwrap().length, 0.0);
    }

    #[test]
    fn relabeling_keeps_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let pts: Vec<P3> = (0..7).map(|_| P3::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), 0.0)).collect();
        let mut shuffled = pts.clone();
        shuffled.reverse();
        let a = solve_tsp(&(0..7).collect::<Vec<_>>(), &DistanceMatrix::euclidean(&pts), TourMode::Exact, true).unwrap();
        let b = solve_tsp(&(0..7).collect::<Vec<_>>(), &DistanceMatrix::euclidean(&shuffled), TourMode::Exact, true).unwrap();
        assert_relative_eq!(a.length, b.length, epsilon = 1e-12);
    }
}
