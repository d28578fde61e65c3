//! C-SVM on a precomputed kernel, solved in the dual by SMO with
//! second-order working-set selection.
//!
//! ```text
//! min_a  1/2 a^T Q a - e^T a    s.t.  0 <= a_i <= C,  y^T a = 0,   Q_ij = y_i y_j K_ij
//! ```
//!
//! The update rules, stopping criterion and bias follow LIBSVM without
//! shrinking, so results can be compared against its precomputed-kernel mode.

use log::{info, warn};
use wlot_core::kernels::SquareMatrix;
use wlot_core::{ClassLabel, Error, Result};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmOptions {
    /// Stop once the maximal KKT violation drops below this.
    pub eps: f64,
    /// Diagonal shift threshold: kernels with a smaller eigenvalue get jitter.
    pub psd_floor: f64,
    /// Run the eigenvalue check at all.
    pub psd_guard: bool,
}

impl Default for SvmOptions {
    fn default() -> Self {
        SvmOptions {
            eps: 1e-3,
            psd_floor: -1e-6,
            psd_guard: true,
        }
    }
}

/// Validated training kernel, reusable across several `C`.
#[derive(Debug, Clone)]
pub struct SvmProblem {
    k: SquareMatrix,
    y: Vec<f64>,
    /// Diagonal shift added by the indefiniteness guard.
    pub jitter: f64,
    eps: f64,
}

impl SvmProblem {
    pub fn new(k: &SquareMatrix, y: &[ClassLabel], opts: &SvmOptions) -> Result<Self> {
        let n = k.n();
        if y.len() != n {
            return Err(Error::InvalidArgument(format!("{} labels for a {n}x{n} kernel", y.len())));
        }
        if let Some(bad) = y.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidArgument(format!("class labels must be +1/-1, got {bad}")));
        }
        if !(y.contains(&1) && y.contains(&-1)) {
            return Err(Error::InvalidDataset("SVM training needs both classes".into()));
        }
        let asym = k.asymmetry();
        if asym > 1e-9 {
            return Err(Error::NotSymmetric(asym));
        }
        let mut k = k.clone();
        let mut jitter = 0.0;
        if opts.psd_guard {
            let lambda = k.min_eigenvalue();
            if lambda < opts.psd_floor {
                jitter = lambda.abs() + 1e-9;
                info!("kernel min eigenvalue {lambda:.3e}; adding {jitter:.3e} to the diagonal");
                k.add_to_diagonal(jitter);
            }
        }
        Ok(SvmProblem {
            k,
            y: y.iter().map(|&v| f64::from(v)).collect(),
            jitter,
            eps: opts.eps,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    /// Same problem restricted to the points `idx`.
    pub fn subset(&self, idx: &[usize]) -> Result<Self> {
        let y: Vec<f64> = idx.iter().map(|&i| self.y[i]).collect();
        if !(y.contains(&1.0) && y.contains(&-1.0)) {
            return Err(Error::InvalidDataset("SVM training needs both classes".into()));
        }
        Ok(SvmProblem {
            k: self.k.select(idx),
            y,
            jitter: self.jitter,
            eps: self.eps,
        })
    }

    fn q(&self, i: usize, j: usize) -> f64 {
        self.y[i] * self.y[j] * self.k.get(i, j)
    }

    /// Maximal violating pair by second-order gain, or `None` at optimality.
    fn select(&self, alpha: &[f64], g: &[f64], c: f64) -> (Option<(usize, usize)>, f64) {
        let n = self.n();
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            let score = if self.y[t] > 0.0 {
                (alpha[t] < c).then_some(-g[t])
            } else {
                (alpha[t] > 0.0).then_some(g[t])
            };
            if let Some(s) = score {
                if s >= gmax {
                    gmax = s;
                    i_sel = Some(t);
                }
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for j in 0..n {
            let (eligible, grad_diff, score) = if self.y[j] > 0.0 {
                (alpha[j] > 0.0, gmax + g[j], g[j])
            } else {
                (alpha[j] < c, gmax - g[j], -g[j])
            };
            if !eligible {
                continue;
            }
            gmax2 = gmax2.max(score);
            if let Some(i) = i_sel {
                if grad_diff > 0.0 {
                    let quad = self.k.get(i, i) + self.k.get(j, j) - 2.0 * self.k.get(i, j);
                    let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                    if obj <= best {
                        best = obj;
                        j_sel = Some(j);
                    }
                }
            }
        }
        let gap = gmax + gmax2;
        match (i_sel, j_sel) {
            (Some(i), Some(j)) if gap >= self.eps => (Some((i, j)), gap),
            _ => (None, gap),
        }
    }

    pub fn train(&self, c: f64) -> Result<SvmModel> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
        }
        let n = self.n();
        let mut alpha = vec![0.0; n];
        let mut g = vec![-1.0; n];
        let max_iter = (100 * n).max(10_000_000);
        let mut iterations = 0;
        let mut gap;
        loop {
            let (pair, current_gap) = self.select(&alpha, &g, c);
            gap = current_gap;
            let Some((i, j)) = pair else { break };
            if iterations >= max_iter {
                warn!("SMO reached {max_iter} iterations with KKT gap {gap:.3e}");
                break;
            }
            iterations += 1;
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let kii = self.k.get(i, i);
            let kjj = self.k.get(j, j);
            let qij = self.q(i, j);
            if self.y[i] != self.y[j] {
                let quad = kii + kjj + 2.0 * qij;
                let delta = (-g[i] - g[j]) / if quad > 0.0 { quad } else { TAU };
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let quad = kii + kjj - 2.0 * qij;
                let delta = (g[i] - g[j]) / if quad > 0.0 { quad } else { TAU };
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for (t, gt) in g.iter_mut().enumerate() {
                *gt += self.q(i, t) * di + self.q(j, t) * dj;
            }
        }

        // bias from free variables, else the midpoint of the feasible interval
        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut free_sum) = (0usize, 0.0);
        for t in 0..n {
            let yg = self.y[t] * g[t];
            let at_upper = alpha[t] >= c;
            let at_lower = alpha[t] <= 0.0;
            if at_upper {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if at_lower {
                if self.y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                free_sum += yg;
            }
        }
        let rho = if free > 0 { free_sum / free as f64 } else { (ub + lb) / 2.0 };
        let objective = alpha.iter().zip(&g).map(|(a, gt)| a * (gt - 1.0)).sum::<f64>() / 2.0;
        let coef: Vec<f64> = alpha.iter().zip(&self.y).map(|(a, y)| a * y).collect();
        Ok(SvmModel {
            support: (0..n).filter(|&t| alpha[t] > 0.0).collect(),
            alpha,
            coef,
            rho,
            c,
            objective,
            kkt_gap: gap,
            iterations,
        })
    }
}

/// Trained dual solution.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// `alpha_i`, one per training point.
    pub alpha: Vec<f64>,
    /// `alpha_i y_i`.
    pub coef: Vec<f64>,
    pub support: Vec<usize>,
    pub rho: f64,
    pub c: f64,
    /// Dual objective `1/2 a^T Q a - e^T a` at the solution.
    pub objective: f64,
    /// Maximal KKT violation at exit.
    pub kkt_gap: f64,
    pub iterations: usize,
}

impl SvmModel {
    /// `sum_i alpha_i y_i K(x_i, x) - rho` for a kernel row against the training set.
    pub fn decision(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.coef.len() {
            return Err(Error::InvalidArgument(format!(
                "kernel row has {} entries, model has {} training points",
                row.len(),
                self.coef.len()
            )));
        }
        Ok(self.support.iter().map(|&i| self.coef[i] * row[i]).sum::<f64>() - self.rho)
    }

    /// Labels and decision values; a decision of exactly 0 maps to +1.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Result<(Vec<ClassLabel>, Vec<f64>)> {
        let values = rows.iter().map(|r| self.decision(r)).collect::<Result<Vec<_>>>()?;
        let labels = values.iter().map(|&v| if v >= 0.0 { 1 } else { -1 }).collect();
        Ok((labels, values))
    }
}

/// Trains with default options (eps 1e-3, indefiniteness guard on).
pub fn svm_train(k: &SquareMatrix, y: &[ClassLabel], c: f64) -> Result<SvmModel> {
    SvmProblem::new(k, y, &SvmOptions::default())?.train(c)
}

pub fn svm_predict(model: &SvmModel, rows: &[Vec<f64>]) -> Result<(Vec<ClassLabel>, Vec<f64>)> {
    model.predict(rows)
}

/// Fraction of matching labels.
pub fn accuracy(predicted: &[ClassLabel], truth: &[ClassLabel]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = predicted.iter().zip(truth).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity(n: usize) -> SquareMatrix {
        SquareMatrix::from_rows((0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect())
            .unwrap()
    }

    #[test]
    fn two_points() {
        let m = svm_train(&identity(2), &[1, -1], 10.0).unwrap();
        assert_eq!(m.support, vec![0, 1]);
        let (labels, _) = m.predict(&identity(2).rows()).unwrap();
        assert_eq!(labels, vec![1, -1]);
        // closed form: alpha = 1 each, rho = 0
        assert!((m.alpha[0] - 1.0).abs() < 1e-12 && m.rho.abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(svm_train(&identity(2), &[1, 1], 1.0).is_err());
        let asym = SquareMatrix::from_rows(vec![vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(svm_train(&asym, &[1, -1], 1.0), Err(Error::NotSymmetric(_))));
        let m = svm_train(&identity(2), &[1, -1], 1.0).unwrap();
        assert!(m.decision(&[1.0]).is_err());
    }

    #[test]
    fn indefinite_kernel_is_shifted() {
        let k = SquareMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let p = SvmProblem::new(&k, &[1, -1], &SvmOptions::default()).unwrap();
        assert!((p.jitter - (1.0 + 1e-9)).abs() < 1e-9);
    }

    #[test]
    fn zero_decision_goes_positive() {
        let m = SvmModel {
            alpha: vec![0.0],
            coef: vec![0.0],
            support: vec![],
            rho: 0.0,
            c: 1.0,
            objective: 0.0,
            kkt_gap: 0.0,
            iterations: 0,
        };
        assert_eq!(m.predict(&[vec![1.0]]).unwrap().0, vec![1]);
    }
}
