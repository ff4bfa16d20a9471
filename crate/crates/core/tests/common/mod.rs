//! Brute-force reference implementations for the test suite.
//!
//! Nothing here calls into the extension, feasibility or flow code it is
//! used to check; the only library types touched are plain containers.
#![allow(dead_code)]

use gvflow::domain::DomainGraph;
use gvflow::field::{CellMask, HeadField};
use gvflow::gvf::LevelSample;

/// Largest search space `levels^vertices` the enumerator accepts.
pub const ENUMERATION_GUARD: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    TooLarge { levels: i64, vertices: usize },
}

fn adjacency(graph: &DomainGraph) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); graph.vertex_count()];
    for (a, b) in graph.edges() {
        adj[a].push(b);
        adj[b].push(a);
    }
    adj
}

/// Searches every level function `V -> {1..=levels}` that agrees with
/// `samples` and changes by at most one across each edge. Returns one such
/// function if any exists.
///
/// Backtracking over interval domains with arc-consistency propagation. The
/// pruning only removes values no solution can use, so the search is
/// exhaustive.
pub fn enumerate_gvf_interpolants(
    graph: &DomainGraph,
    samples: &[LevelSample],
    levels: i64,
) -> Result<Option<Vec<i64>>, OracleError> {
    let n = graph.vertex_count();
    if (levels as f64).powi(n as i32) > ENUMERATION_GUARD {
        return Err(OracleError::TooLarge { levels, vertices: n });
    }
    let adj = adjacency(graph);
    let mut domains: Vec<(i64, i64)> = vec![(1, levels); n];
    for s in samples {
        let (lo, hi) = domains[s.vertex];
        domains[s.vertex] = (lo.max(s.level), hi.min(s.level));
    }
    if !propagate(&adj, &mut domains, (0..n).collect()) {
        return Ok(None);
    }
    Ok(search(&adj, domains))
}

/// Narrows each domain to values with support in every neighbour's domain.
fn propagate(adj: &[Vec<usize>], domains: &mut [(i64, i64)], mut queue: Vec<usize>) -> bool {
    while let Some(u) = queue.pop() {
        let (lo, hi) = domains[u];
        if lo > hi {
            return false;
        }
        for &w in &adj[u] {
            let (wlo, whi) = domains[w];
            let narrowed = (wlo.max(lo - 1), whi.min(hi + 1));
            if narrowed != (wlo, whi) {
                if narrowed.0 > narrowed.1 {
                    return false;
                }
                domains[w] = narrowed;
                queue.push(w);
            }
        }
    }
    true
}

fn search(adj: &[Vec<usize>], domains: Vec<(i64, i64)>) -> Option<Vec<i64>> {
    let Some(v) = domains.iter().position(|&(lo, hi)| lo < hi) else {
        let assignment: Vec<i64> = domains.iter().map(|d| d.0).collect();
        // a fully narrowed, arc-consistent assignment must satisfy every edge
        debug_assert!(adj
            .iter()
            .enumerate()
            .all(|(u, ws)| ws.iter().all(|&w| assignment[u].abs_diff(assignment[w]) <= 1)));
        return Some(assignment);
    };
    let (lo, hi) = domains[v];
    for level in lo..=hi {
        let mut trial = domains.clone();
        trial[v] = (level, level);
        if propagate(adj, &mut trial, vec![v]) {
            if let Some(found) = search(adj, trial) {
                return Some(found);
            }
        }
    }
    None
}

/// All-pairs shortest path lengths by Floyd-Warshall; `usize::MAX` when unreachable.
pub fn floyd_warshall(graph: &DomainGraph) -> Vec<Vec<usize>> {
    let n = graph.vertex_count();
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (a, b) in graph.edges() {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    for row in &mut d {
        for x in row.iter_mut() {
            if *x >= inf {
                *x = usize::MAX;
            }
        }
    }
    d
}

/// Pairwise Lipschitz test on the oracle's own distance table.
pub fn pairwise_feasible(dist: &[Vec<usize>], samples: &[LevelSample]) -> bool {
    samples.iter().all(|a| samples.iter().all(|b| a.level.abs_diff(b.level) as usize <= dist[a.vertex][b.vertex]))
}

/// Solves `alpha * (sum of neighbours - 4 h) = g` on the free cells of `start`
/// by dense Gaussian elimination with partial pivoting. Fixed cells keep
/// their values from `start`.
pub fn dense_steady_solve(
    start: &HeadField,
    fixed: &CellMask,
    alpha: f64,
    g: impl Fn(usize, usize) -> f64,
) -> HeadField {
    let (rows, cols) = start.dims();
    assert!(rows <= 32 && cols <= 32, "oracle is for small grids");
    let mut index = vec![usize::MAX; rows * cols];
    let mut free = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if !fixed.get(i, j) {
                assert!(i > 0 && j > 0 && i + 1 < rows && j + 1 < cols, "boundary must be fixed");
                index[i * cols + j] = free.len();
                free.push((i, j));
            }
        }
    }
    let m = free.len();
    let mut a = vec![vec![0.0f64; m + 1]; m];
    for (row, &(i, j)) in free.iter().enumerate() {
        a[row][row] = -4.0 * alpha;
        let mut rhs = g(i, j);
        let neighbours = [(i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)];
        for (ni, nj) in neighbours {
            match index[ni * cols + nj] {
                usize::MAX => rhs -= alpha * start.get(ni, nj),
                k => a[row][k] += alpha,
            }
        }
        a[row][m] = rhs;
    }
    for col in 0..m {
        let pivot = (col..m).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
        assert!(a[pivot][col].abs() > 1e-300, "singular system");
        a.swap(col, pivot);
        for r in col + 1..m {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                let (upper, lower) = a.split_at_mut(r);
                for (x, &p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *x -= factor * p;
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let tail: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][m] - tail) / a[r][r];
    }
    let mut out = start.clone();
    for (k, &(i, j)) in free.iter().enumerate() {
        out.set(i, j, x[k]);
    }
    out
}

/// Flow residual at interior cells written out longhand over raw slices.
pub fn stencil_residual(prev: &[f64], curr: &[f64], rows: usize, cols: usize, alpha: f64, g: f64) -> Vec<f64> {
    let mut r = vec![0.0; rows * cols];
    for i in 1..rows.saturating_sub(1) {
        for j in 1..cols.saturating_sub(1) {
            let c = i * cols + j;
            let lap = curr[c - cols] + curr[c + cols] + curr[c - 1] + curr[c + 1] - 4.0 * curr[c];
            r[c] = curr[c] - prev[c] - alpha * lap + g;
        }
    }
    r
}
