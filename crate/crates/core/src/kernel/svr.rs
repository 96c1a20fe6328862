//! Epsilon-insensitive support vector regression with an RBF kernel.
//!
//! The dual is solved over `2n` box-constrained variables (`α` for the upper
//! side of the tube, `α*` for the lower) with sequential minimal optimization:
//! each iteration picks the maximal-violating variable and the partner with
//! the best second-order decrease, then solves the two-variable subproblem in
//! closed form. Iteration stops once the largest KKT gap falls below `tol` or
//! the budget of `max_passes · n²` pair updates runs out.
//!
//! The fitted function is `f(x) = Σ β_i K(x_i, x) + b` with `β = α − α*`.
//! Targets are standardized before solving, so `epsilon` is in target
//! standard deviations.

use ndarray::{ArrayView1, ArrayView2, Array2};
use serde::{Deserialize, Serialize};

use crate::data::TargetScaler;
use crate::error::{Error, Result};

/// Curvature floor for degenerate pairs.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    /// RBF bandwidth; `None` selects `1 / (d · Var(X))`.
    pub gamma: Option<f64>,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        SvrParams {
            c: 1.0,
            epsilon: 0.1,
            gamma: None,
            tol: 1e-3,
            max_passes: 10,
        }
    }
}

impl SvrParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::param(format!("C must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::param(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::param(format!("gamma must be positive, got {g}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::param("tol must be positive"));
        }
        Ok(())
    }
}

/// `1 / (d · Var(X))` over all entries; 1 when `X` is constant.
pub fn scale_gamma(x: ArrayView2<f64>) -> f64 {
    let n = x.len() as f64;
    let mean = x.sum() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        1.0 / (x.ncols() as f64 * var)
    } else {
        1.0
    }
}

fn rbf(u: ArrayView1<f64>, v: ArrayView1<f64>, gamma: f64) -> f64 {
    let d2: f64 = u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
    (-gamma * d2).exp()
}

fn kernel_matrix(x: ArrayView2<f64>, gamma: f64) -> Array2<f64> {
    let n = x.nrows();
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        k[[i, i]] = 1.0;
        for j in 0..i {
            let v = rbf(x.row(i), x.row(j), gamma);
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

/// Dual coefficients and offset for one training set.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub beta: Vec<f64>,
    pub b: f64,
    pub gamma: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DualSolution {
    /// Training-set decision values `Σ β_j K(x_i, x_j) + b`.
    pub fn decision_values(&self, x: ArrayView2<f64>) -> Vec<f64> {
        let k = kernel_matrix(x, self.gamma);
        k.rows()
            .into_iter()
            .map(|row| row.iter().zip(&self.beta).map(|(k, b)| k * b).sum::<f64>() + self.b)
            .collect()
    }

    /// Largest violation of the ε-tube optimality conditions on the training
    /// set, measured in target units.
    pub fn kkt_violation(&self, x: ArrayView2<f64>, z: &[f64], c: f64, epsilon: f64) -> f64 {
        let f = self.decision_values(x);
        let mut worst: f64 = 0.0;
        for ((&beta, fi), zi) in self.beta.iter().zip(&f).zip(z) {
            let r = zi - fi;
            let v = if beta == 0.0 {
                (r.abs() - epsilon).max(0.0)
            } else if beta >= c {
                (epsilon - r).max(0.0)
            } else if beta > 0.0 {
                (r - epsilon).abs()
            } else if beta <= -c {
                (r + epsilon).max(0.0)
            } else {
                (r + epsilon).abs()
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Dual objective `Σ z β − ε Σ |β| − ½ βᵀKβ` (to be maximized).
    pub fn dual_objective(&self, x: ArrayView2<f64>, z: &[f64], epsilon: f64) -> f64 {
        let k = kernel_matrix(x, self.gamma);
        let kb = k.dot(&ndarray::ArrayView1::from(&self.beta));
        self.beta
            .iter()
            .zip(z)
            .zip(&kb)
            .map(|((b, zi), kbi)| zi * b - epsilon * b.abs() - 0.5 * b * kbi)
            .sum()
    }
}

/// Solves the ε-SVR dual for inputs `x` and targets `z` as given (no scaling).
pub fn solve_dual(x: ArrayView2<f64>, z: &[f64], p: &SvrParams) -> Result<DualSolution> {
    p.validate()?;
    let n = x.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if z.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: z.len(),
        });
    }
    let gamma = p.gamma.unwrap_or_else(|| scale_gamma(x));
    let k = kernel_matrix(x, gamma);
    let c = p.c;
    let l = 2 * n;
    // variable t < n is α_t (sign +1), t >= n is α*_{t-n} (sign −1)
    let sign = |t: usize| if t < n { 1.0 } else { -1.0 };
    let point = |t: usize| if t < n { t } else { t - n };
    let mut alpha = vec![0.0; l];
    let mut grad: Vec<f64> = (0..l)
        .map(|t| {
            if t < n {
                p.epsilon - z[t]
            } else {
                p.epsilon + z[t - n]
            }
        })
        .collect();
    let max_iter = p.max_passes.saturating_mul(n).saturating_mul(n).max(1);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut sel_i = None;
        for t in 0..l {
            if t < n {
                if alpha[t] < c && -grad[t] >= gmax {
                    gmax = -grad[t];
                    sel_i = Some(t);
                }
            } else if alpha[t] > 0.0 && grad[t] >= gmax {
                gmax = grad[t];
                sel_i = Some(t);
            }
        }
        let Some(i) = sel_i else {
            converged = true;
            break;
        };
        let ki = k.row(point(i));
        let mut gmax2 = f64::NEG_INFINITY;
        let mut sel_j = None;
        let mut best_obj = f64::INFINITY;
        for t in 0..l {
            let in_low = if t < n { alpha[t] > 0.0 } else { alpha[t] < c };
            if !in_low {
                continue;
            }
            let v = -sign(t) * grad[t];
            gmax2 = gmax2.max(-v);
            let diff = gmax - v;
            if diff > 0.0 {
                let pt = point(t);
                let quad = k[[point(i), point(i)]] + k[[pt, pt]] - 2.0 * ki[pt];
                let obj = -(diff * diff) / if quad > 0.0 { quad } else { TAU };
                if obj <= best_obj {
                    best_obj = obj;
                    sel_j = Some(t);
                }
            }
        }
        if gmax + gmax2 < p.tol {
            converged = true;
            break;
        }
        let Some(j) = sel_j else {
            converged = true;
            break;
        };
        iterations += 1;

        let (yi, yj) = (sign(i), sign(j));
        let (pi, pj) = (point(i), point(j));
        let qij = yi * yj * k[[pi, pj]];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if yi != yj {
            let mut quad = k[[pi, pi]] + k[[pj, pj]] + 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
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
            let mut quad = k[[pi, pi]] + k[[pj, pj]] - 2.0 * qij;
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
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
        let (di, dj) = (yi * (alpha[i] - old_i), yj * (alpha[j] - old_j));
        let (kpi, kpj) = (k.row(pi), k.row(pj));
        for t in 0..n {
            let d = kpi[t] * di + kpj[t] * dj;
            grad[t] += d;
            grad[t + n] -= d;
        }
    }

    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut n_free, mut sum_free) = (0usize, 0.0);
    for t in 0..l {
        let y = sign(t);
        let yg = y * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if at_lower {
            if y > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 {
        sum_free / n_free as f64
    } else {
        0.5 * (ub + lb)
    };
    let beta = (0..n).map(|t| alpha[t] - alpha[t + n]).collect();
    Ok(DualSolution {
        beta,
        b: -rho,
        gamma,
        iterations,
        converged,
    })
}

/// Fitted ε-SVR keeping only the support rows (`β ≠ 0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub support: Array2<f64>,
    pub coef: Vec<f64>,
    pub b: f64,
    pub gamma: f64,
    pub target: TargetScaler,
    pub converged: bool,
}

impl SvrModel {
    /// `x` is expected to be standardized already; `y` is scaled here.
    pub fn fit(x: ArrayView2<f64>, y: &[f64], p: &SvrParams) -> Result<Self> {
        let target = TargetScaler::fit(y);
        let z: Vec<f64> = y.iter().map(|&v| target.forward(v)).collect();
        let sol = solve_dual(x, &z, p)?;
        let keep: Vec<usize> = (0..x.nrows()).filter(|&i| sol.beta[i] != 0.0).collect();
        Ok(SvrModel {
            support: x.select(ndarray::Axis(0), &keep),
            coef: keep.iter().map(|&i| sol.beta[i]).collect(),
            b: sol.b,
            gamma: sol.gamma,
            target,
            converged: sol.converged,
        })
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Vec<f64> {
        x.rows()
            .into_iter()
            .map(|r| {
                let f: f64 = self
                    .support
                    .rows()
                    .into_iter()
                    .zip(&self.coef)
                    .map(|(s, c)| c * rbf(s, r, self.gamma))
                    .sum();
                self.target.inverse(f + self.b)
            })
            .collect()
    }
}
