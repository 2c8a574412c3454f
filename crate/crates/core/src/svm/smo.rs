//! SMO for the C-SVC dual with per-sample box constraints.
//!
//! Solves
//!
//! ```text
//! min_a  1/2 a'Qa - e'a    s.t.  y'a = 0,  0 <= a_i <= C_i,   Q_ij = y_i y_j K_ij
//! ```
//!
//! picking the maximal violating pair at every step and stopping once the
//! KKT gap `m(a) - M(a)` is at most `tol`.

use crate::error::{Error, Result};
use crate::functions::Matrix;

const TAU: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Intercept of the decision function `sum_j alpha_j y_j K(x_j, x) + b`.
    pub b: f64,
    pub iterations: usize,
}

struct State<'a> {
    k: &'a Matrix,
    y: &'a [f64],
    c: &'a [f64],
    alpha: Vec<f64>,
    /// Gradient of the dual objective, `Qa - e`.
    grad: Vec<f64>,
}

impl State<'_> {
    fn is_upper(&self, t: usize) -> bool {
        self.alpha[t] >= self.c[t]
    }

    fn is_lower(&self, t: usize) -> bool {
        self.alpha[t] <= 0.0
    }

    fn in_up(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            !self.is_upper(t)
        } else {
            !self.is_lower(t)
        }
    }

    fn in_low(&self, t: usize) -> bool {
        if self.y[t] > 0.0 {
            !self.is_lower(t)
        } else {
            !self.is_upper(t)
        }
    }

    /// Maximal violating pair and the current KKT gap.
    fn select(&self) -> Option<(usize, usize, f64)> {
        let mut up = None;
        let mut m = f64::NEG_INFINITY;
        let mut low = None;
        let mut big_m = f64::INFINITY;
        for t in 0..self.alpha.len() {
            let v = -self.y[t] * self.grad[t];
            if self.in_up(t) && v > m {
                m = v;
                up = Some(t);
            }
            if self.in_low(t) && v < big_m {
                big_m = v;
                low = Some(t);
            }
        }
        Some((up?, low?, m - big_m))
    }

    fn update_pair(&mut self, i: usize, j: usize) {
        let (k, y, c) = (self.k, self.y, self.c);
        let (ci, cj) = (c[i], c[j]);
        let (old_i, old_j) = (self.alpha[i], self.alpha[j]);
        let mut quad = k[[i, i]] + k[[j, j]] - 2.0 * k[[i, j]];
        if quad <= 0.0 {
            quad = TAU;
        }
        let (mut ai, mut aj) = (old_i, old_j);

        if y[i] != y[j] {
            let delta = (-self.grad[i] - self.grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > ci - cj {
                if ai > ci {
                    ai = ci;
                    aj = ci - diff;
                }
            } else if aj > cj {
                aj = cj;
                ai = cj + diff;
            }
        } else {
            let delta = (self.grad[i] - self.grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > ci {
                if ai > ci {
                    ai = ci;
                    aj = sum - ci;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > cj {
                if aj > cj {
                    aj = cj;
                    ai = sum - cj;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }

        self.alpha[i] = ai;
        self.alpha[j] = aj;
        let (di, dj) = (ai - old_i, aj - old_j);
        let (ki, kj) = (k.row(i), k.row(j));
        for t in 0..self.grad.len() {
            self.grad[t] += y[t] * (y[i] * ki[t] * di + y[j] * kj[t] * dj);
        }
    }

    fn intercept(&self) -> f64 {
        let mut ub = f64::INFINITY;
        let mut lb = f64::NEG_INFINITY;
        let mut sum_free = 0.0;
        let mut n_free = 0usize;
        for t in 0..self.alpha.len() {
            let yg = self.y[t] * self.grad[t];
            if self.is_upper(t) {
                if self.y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if self.is_lower(t) {
                if self.y[t] > 0.0 {
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
            (ub + lb) / 2.0
        };
        -rho
    }
}

/// Solve the binary C-SVC dual for a precomputed symmetric kernel matrix.
///
/// `y` holds ±1 labels and `c` the per-sample upper bounds. Fails with
/// [`Error::DidNotConverge`] when `max_iter` pair updates leave the KKT gap
/// above `tol`.
pub fn binary_smo_solve(k: &Matrix, y: &[f64], c: &[f64], tol: f64, max_iter: usize) -> Result<SmoSolution> {
    let n = y.len();
    if k.dim() != (n, n) || c.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "kernel {:?}, {} labels, {} bounds",
            k.dim(),
            n,
            c.len()
        )));
    }
    if n == 0 {
        return Err(Error::Empty("no training samples".into()));
    }
    if y.iter().any(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::InvalidConfig("labels must be +1 or -1".into()));
    }
    if c.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidConfig("per-sample C must be positive".into()));
    }
    if !(tol > 0.0) || max_iter == 0 {
        return Err(Error::InvalidConfig("tol must be > 0 and max_iter >= 1".into()));
    }

    let mut state = State {
        k,
        y,
        c,
        alpha: vec![0.0; n],
        grad: vec![-1.0; n],
    };
    let mut iterations = 0;
    loop {
        let Some((i, j, gap)) = state.select() else {
            // one class only: nothing to move, the intercept alone decides
            break;
        };
        if gap <= tol {
            break;
        }
        if iterations >= max_iter {
            return Err(Error::DidNotConverge { iterations });
        }
        state.update_pair(i, j);
        iterations += 1;
    }

    let b = state.intercept();
    Ok(SmoSolution {
        alpha: state.alpha,
        b,
        iterations,
    })
}
