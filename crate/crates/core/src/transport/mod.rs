//! Optimal transport between discrete mass distributions.
//!
//! [`lp_ot_solve`] is an exact linear-programming solver used to check the
//! closed forms. [`wasserstein_discrete`] is the closed form under the 0/1
//! ground metric, one minus the shared mass, and [`wwl_distance`] averages it
//! over WL iterations.

mod assignment;
mod simplex;

pub use assignment::assignment_oracle;

use crate::error::{Error, Result};
use crate::wl::{common_labels, WlRefinement};

/// Mass totals must agree with 1 to this tolerance.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Largest `m * n` accepted by the exact solver.
pub const MAX_LP_CELLS: usize = 1_000_000;

/// Balanced transport problem between `p` (rows) and `q` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    rows: usize,
    cols: usize,
    cost: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
}

impl TransportProblem {
    /// `cost[i][j]` is the price of moving a unit from source `i` to sink `j`.
    pub fn new(cost: Vec<Vec<f64>>, p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let rows = p.len();
        let cols = q.len();
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument("transport problem needs mass on both sides".into()));
        }
        if rows * cols > MAX_LP_CELLS {
            return Err(Error::InvalidArgument(format!(
                "{rows}x{cols} exceeds the exact solver limit of {MAX_LP_CELLS} cells"
            )));
        }
        if cost.len() != rows || cost.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument(format!("cost matrix must be {rows}x{cols}")));
        }
        if p.iter().chain(&q).any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::InvalidArgument("masses must be finite and nonnegative".into()));
        }
        let cost: Vec<f64> = cost.into_iter().flatten().collect();
        if cost.iter().any(|&c| !c.is_finite() || c < 0.0) {
            return Err(Error::InvalidArgument("costs must be finite and nonnegative".into()));
        }
        let sp: f64 = p.iter().sum();
        let sq: f64 = q.iter().sum();
        if (sp - sq).abs() > MASS_TOLERANCE {
            return Err(Error::Infeasible {
                source_mass: sp,
                sink_mass: sq,
            });
        }
        if (sp - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::Unnormalized(sp));
        }
        Ok(TransportProblem { rows, cols, cost, p, q })
    }

    /// Uniform masses `1/m` and `1/n`.
    pub fn uniform(cost: Vec<Vec<f64>>) -> Result<Self> {
        let m = cost.len();
        let n = cost.first().map_or(0, Vec::len);
        Self::new(cost, vec![1.0 / m as f64; m], vec![1.0 / n.max(1) as f64; n])
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn cost(&self, i: usize, j: usize) -> f64 {
        self.cost[i * self.cols + j]
    }
}

/// Optimal coupling and its cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    rows: usize,
    cols: usize,
    plan: Vec<f64>,
    pub objective: f64,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.plan[i * self.cols + j]
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.plan.chunks(self.cols).map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).sum())
            .collect()
    }

    /// `sum P_ij * d_ij` under another cost matrix of the same shape.
    pub fn cost_under(&self, cost: &[Vec<f64>]) -> f64 {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| self.get(i, j) * cost[i][j])
            .sum()
    }
}

/// Exact optimal transport by the transportation simplex.
pub fn lp_ot_solve(tp: &TransportProblem) -> Result<TransportPlan> {
    let sol = simplex::solve(&tp.cost, &tp.p, &tp.q)?;
    Ok(TransportPlan {
        rows: tp.rows,
        cols: tp.cols,
        plan: sol.flow,
        objective: sol.objective,
    })
}

fn sorted_masses(mu: &[(u32, f64)]) -> Result<Vec<(u32, f64)>> {
    let mut v: Vec<(u32, f64)> = mu.to_vec();
    v.sort_by_key(|x| x.0);
    if v.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(Error::InvalidArgument("mass map lists a label twice".into()));
    }
    if v.iter().any(|&(_, m)| !m.is_finite() || m < 0.0) {
        return Err(Error::InvalidArgument("masses must be finite and nonnegative".into()));
    }
    let total: f64 = v.iter().map(|x| x.1).sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Unnormalized(total));
    }
    Ok(v)
}

/// Wasserstein distance under the discrete ground metric:
/// `1 - sum_v min(mu(v), nu(v))`.
pub fn wasserstein_discrete(mu: &[(u32, f64)], nu: &[(u32, f64)]) -> Result<f64> {
    let mu = sorted_masses(mu)?;
    let nu = sorted_masses(nu)?;
    let shared: f64 = common_labels(&mu, &nu).map(|(_, a, b)| a.min(b)).sum();
    Ok((1.0 - shared).max(0.0))
}

/// Shared mass of two graphs at iteration `h`: `sum_v min(mu(v), nu(v))`.
pub(crate) fn shared_mass(r: &WlRefinement, g1: usize, g2: usize, h: usize) -> Result<f64> {
    let a = r.histogram(g1)?;
    let b = r.histogram(g2)?;
    let (na, nb) = (a.n_nodes() as f64, b.n_nodes() as f64);
    Ok(common_labels(a.counts(h), b.counts(h))
        .map(|(_, ca, cb)| (ca as f64 / na).min(cb as f64 / nb))
        .sum())
}

/// WWL graph distance: mean over iterations `1..=H` of the discrete-metric
/// Wasserstein distance between the two graphs' label distributions.
pub fn wwl_distance(r: &WlRefinement, g1: usize, g2: usize) -> Result<f64> {
    let h_max = r.iterations();
    let mut total = 0.0;
    for h in 1..=h_max {
        total += 1.0 - shared_mass(r, g1, g2, h)?;
    }
    Ok((total / h_max as f64).max(0.0))
}

/// Ground metric between node embeddings of two graphs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundMetric {
    /// Normalized Hamming distance over iterations `1..=h`.
    Hamming(usize),
    /// 0/1 distance on the label at iteration `h`.
    Discrete(usize),
}

/// Dense `n1 x n2` ground-cost matrix between the node embeddings of two graphs.
pub fn ground_cost(r: &WlRefinement, g1: usize, g2: usize, metric: GroundMetric) -> Result<Vec<Vec<f64>>> {
    let a = r.embeddings(g1)?;
    let b = r.embeddings(g2)?;
    let h = match metric {
        GroundMetric::Hamming(h) | GroundMetric::Discrete(h) => h,
    };
    if h == 0 || h > r.iterations() {
        return Err(Error::InvalidArgument(format!(
            "iteration {h} outside 1..={}",
            r.iterations()
        )));
    }
    a.iter()
        .map(|x| {
            b.iter()
                .map(|y| match metric {
                    GroundMetric::Hamming(h) => crate::wl::hamming_distance(x, y, h),
                    GroundMetric::Discrete(h) => Ok(if x[h - 1] == y[h - 1] { 0.0 } else { 1.0 }),
                })
                .collect()
        })
        .collect()
}
