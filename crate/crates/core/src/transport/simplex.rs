//! Exact transportation simplex (MODI / stepping-stone) on a dense cost matrix.
//!
//! The basis is a spanning tree over the `m + n` row and column nodes with
//! `m + n - 1` basic cells, seeded by the north-west corner rule. Entering
//! cells follow Bland's rule (first negative reduced cost in row-major order,
//! smallest-index leaving cell among ties), so degenerate pivots cannot cycle.

use std::collections::VecDeque;

use crate::error::{Error, Result};

pub(crate) struct Solution {
    pub flow: Vec<f64>,
    pub objective: f64,
}

/// Solves `min <P, cost>` over couplings of `p` (rows) and `q` (columns).
/// `cost` is row-major `m x n`. Inputs are assumed validated.
pub(crate) fn solve(cost: &[f64], p: &[f64], q: &[f64]) -> Result<Solution> {
    let m = p.len();
    let n = q.len();
    let max_cost = cost.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let tol = 1e-12 * max_cost.max(1.0);

    let mut flow = vec![0.0; m * n];
    let mut basic = vec![false; m * n];
    let mut basis: Vec<usize> = Vec::with_capacity(m + n - 1);

    // north-west corner: walks a staircase of exactly m + n - 1 cells
    {
        let (mut i, mut j) = (0, 0);
        let mut row_left = p[0];
        let mut col_left = q[0];
        loop {
            let x = row_left.min(col_left).max(0.0);
            flow[i * n + j] = x;
            basic[i * n + j] = true;
            basis.push(i * n + j);
            row_left -= x;
            col_left -= x;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if (row_left <= col_left && i < m - 1) || j == n - 1 {
                i += 1;
                row_left = p[i];
            } else {
                j += 1;
                col_left = q[j];
            }
        }
    }

    let nodes = m + n;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];
    let max_iter = 50 * (m * n) + 1000;
    for _ in 0..max_iter {
        // tree adjacency: node k < m is row k, node m + j is column j
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nodes];
        for &c in &basis {
            let (i, j) = (c / n, c % n);
            adj[i].push((m + j, c));
            adj[m + j].push((i, c));
        }

        // potentials u_i + v_j = c_ij on basic cells
        let mut seen = vec![false; nodes];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        u[0] = 0.0;
        while let Some(k) = queue.pop_front() {
            for &(other, c) in &adj[k] {
                if seen[other] {
                    continue;
                }
                seen[other] = true;
                if other >= m {
                    v[other - m] = cost[c] - u[k];
                } else {
                    u[other] = cost[c] - v[k - m];
                }
                queue.push_back(other);
            }
        }
        debug_assert!(seen.iter().all(|&s| s), "basis must span all nodes");

        let entering = (0..m * n).find(|&c| !basic[c] && cost[c] - u[c / n] - v[c % n] < -tol);
        let Some(enter) = entering else {
            let objective = flow.iter().zip(cost).map(|(f, c)| f * c).sum();
            return Ok(Solution { flow, objective });
        };

        // path in the tree from row i to column j; with the entering cell it closes a cycle
        let (ei, ej) = (enter / n, enter % n);
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; nodes];
        let mut seen = vec![false; nodes];
        seen[ei] = true;
        let mut queue = VecDeque::from([ei]);
        while let Some(k) = queue.pop_front() {
            if k == m + ej {
                break;
            }
            for &(other, c) in &adj[k] {
                if !seen[other] {
                    seen[other] = true;
                    parent[other] = Some((k, c));
                    queue.push_back(other);
                }
            }
        }
        let mut path = Vec::new();
        let mut k = m + ej;
        while k != ei {
            let (prev, c) = parent[k].expect("tree is connected");
            path.push(c);
            k = prev;
        }
        path.reverse();
        // path[0] shares row ei with the entering cell, so it loses flow; signs alternate
        let theta = path.iter().step_by(2).map(|&c| flow[c]).fold(f64::INFINITY, f64::min);
        let leave = *path
            .iter()
            .step_by(2)
            .filter(|&&c| flow[c] <= theta)
            .min()
            .expect("cycle has a decreasing cell");
        for (t, &c) in path.iter().enumerate() {
            if t % 2 == 0 {
                flow[c] = (flow[c] - theta).max(0.0);
            } else {
                flow[c] += theta;
            }
        }
        flow[enter] = theta;
        flow[leave] = 0.0;
        basic[enter] = true;
        basic[leave] = false;
        let pos = basis.iter().position(|&c| c == leave).expect("leaving cell is basic");
        basis[pos] = enter;
    }
    Err(Error::InvalidArgument(format!(
        "transportation simplex did not terminate within {max_iter} pivots"
    )))
}
