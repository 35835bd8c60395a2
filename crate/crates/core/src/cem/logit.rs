//! Weighted logistic regression by Newton/IRLS.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-9;
/// Unpenalized coefficients beyond this magnitude are taken as separation.
const DIVERGENCE: f64 = 30.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LogitError {
    #[error("information matrix is singular")]
    Singular,
    #[error("no convergence after {0} iterations")]
    NotConverged(usize),
    #[error("coefficients diverge (separation)")]
    Diverging,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogitFit {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub ridge: f64,
    pub log_likelihood: f64,
}

impl LogitFit {
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        row.iter().zip(&self.coefficients).map(|(x, b)| x * b).sum()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn log1pexp(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

struct Problem<'a> {
    x: &'a [f64],
    p: usize,
    y: &'a [f64],
    w: &'a [f64],
    ridge: f64,
}

impl Problem<'_> {
    fn rows(&self) -> impl Iterator<Item = (&[f64], f64, f64)> {
        self.x.chunks_exact(self.p).zip(self.y).zip(self.w).map(|((r, &y), &w)| (r, y, w))
    }

    fn penalty(&self, beta: &[f64]) -> f64 {
        0.5 * self.ridge * beta[1..].iter().map(|b| b * b).sum::<f64>()
    }

    fn log_likelihood(&self, beta: &[f64]) -> f64 {
        let ll: f64 = self
            .rows()
            .filter(|&(_, _, w)| w != 0.0)
            .map(|(r, y, w)| {
                let eta: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
                w * (y * eta - log1pexp(eta))
            })
            .sum();
        ll - self.penalty(beta)
    }

    /// Gradient and negative Hessian of the penalized log-likelihood.
    fn derivatives(&self, beta: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let p = self.p;
        let mut g = DVector::zeros(p);
        let mut h = DMatrix::zeros(p, p);
        for (r, y, w) in self.rows() {
            if w == 0.0 {
                continue;
            }
            let eta: f64 = r.iter().zip(beta).map(|(a, b)| a * b).sum();
            let mu = sigmoid(eta);
            let resid = w * (y - mu);
            let v = w * mu * (1.0 - mu);
            for j in 0..p {
                g[j] += resid * r[j];
                let vj = v * r[j];
                for k in 0..=j {
                    h[(j, k)] += vj * r[k];
                }
            }
        }
        for j in 0..p {
            for k in 0..j {
                h[(k, j)] = h[(j, k)];
            }
        }
        for j in 1..p {
            g[j] -= self.ridge * beta[j];
            h[(j, j)] += self.ridge;
        }
        (g, h)
    }
}

/// Fits `P(y = 1) = sigmoid(x . beta)` maximizing the weighted
/// log-likelihood minus `ridge / 2 * |beta[1..]|^2`.
///
/// `x` is row-major with `p` columns; column 0 is expected to be the
/// (unpenalized) intercept. `init` warm-starts the iteration.
pub fn fit_logit(
    x: &[f64],
    p: usize,
    y: &[f64],
    w: &[f64],
    ridge: f64,
    init: Option<&[f64]>,
) -> Result<LogitFit, LogitError> {
    if p == 0 || x.len() != p * y.len() || y.len() != w.len() {
        return Err(LogitError::InvalidInput(format!("{} values for {} rows of {p} columns", x.len(), y.len())));
    }
    if init.is_some_and(|b| b.len() != p) {
        return Err(LogitError::InvalidInput("initial coefficients have the wrong length".into()));
    }
    let prob = Problem { x, p, y, w, ridge };
    let mut beta: Vec<f64> = init.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; p]);
    let mut ll = prob.log_likelihood(&beta);
    for it in 1..=MAX_ITER {
        let (g, h) = prob.derivatives(&beta);
        let delta = h.cholesky().ok_or(LogitError::Singular)?.solve(&g);
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(LogitError::Singular);
        }
        let mut step = 1.0;
        let mut next: Vec<f64>;
        let mut next_ll;
        loop {
            next = beta.iter().zip(delta.iter()).map(|(b, d)| b + step * d).collect();
            next_ll = prob.log_likelihood(&next);
            if next_ll >= ll - 1e-12 * ll.abs().max(1.0) || step < 1e-10 {
                break;
            }
            step *= 0.5;
        }
        let change = delta.iter().map(|d| (step * d).abs()).fold(0.0, f64::max);
        beta = next;
        ll = next_ll;
        if ridge == 0.0 && beta.iter().any(|b| b.abs() > DIVERGENCE) {
            return Err(LogitError::Diverging);
        }
        if change < TOL * (1.0 + beta.iter().map(|b| b.abs()).fold(0.0, f64::max)) {
            return Ok(LogitFit { coefficients: beta, iterations: it, ridge, log_likelihood: ll });
        }
    }
    Err(LogitError::NotConverged(MAX_ITER))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn saturated_two_group_model() {
        // intercept + binary x: the MLE reproduces the group log-odds exactly
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (xv, pos, neg) in [(0.0, 1, 3), (1.0, 3, 1)] {
            for k in 0..pos + neg {
                x.extend([1.0, xv]);
                y.push(if k < pos { 1.0 } else { 0.0 });
            }
        }
        let w = vec![1.0; y.len()];
        let fit = fit_logit(&x, 2, &y, &w, 0.0, None).unwrap();
        let b0 = (1.0f64 / 3.0).ln();
        assert!((fit.coefficients[0] - b0).abs() < 1e-9);
        assert!((fit.coefficients[1] - (3f64.ln() - b0)).abs() < 1e-9);
    }

    #[test]
    fn weights_act_as_replication() {
        let x = [1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let y = [1.0, 0.0, 1.0, 0.0, 1.0];
        let dup_x: Vec<f64> = x.iter().chain(&x[..2]).copied().collect();
        let dup_y: Vec<f64> = y.iter().chain(&y[..1]).copied().collect();
        let a = fit_logit(&x, 2, &y, &[2.0, 1.0, 1.0, 1.0, 1.0], 0.0, None).unwrap();
        let b = fit_logit(&dup_x, 2, &dup_y, &[1.0; 6], 0.0, None).unwrap();
        for (p, q) in a.coefficients.iter().zip(&b.coefficients) {
            assert!((p - q).abs() < 1e-9);
        }
    }

    #[test]
    fn separation_is_detected_and_ridge_recovers() {
        let x = [1.0, 0.0, 1.0, 0.1, 1.0, 0.9, 1.0, 1.0];
        let y = [0.0, 0.0, 1.0, 1.0];
        let w = [1.0; 4];
        assert!(fit_logit(&x, 2, &y, &w, 0.0, None).is_err());
        let fit = fit_logit(&x, 2, &y, &w, 1e-4, None).unwrap();
        assert!(fit.coefficients[1] > 10.0);
    }

    #[test]
    fn sigmoid_is_stable() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0 && sigmoid(800.0) <= 1.0);
        assert!((log1pexp(800.0) - 800.0).abs() < 1e-12);
    }
}
