//! Closed-form baselines: the training-mean predictor, ordinary least
//! squares via normal equations with a ridge jitter (conjugate-gradient
//! fallback when the Gram matrix is numerically singular), and logistic
//! regression fitted by damped Newton steps.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by std inherent methods in test builds
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix};

/// Coefficients plus intercept; interpretation (score difference vs
/// log-odds) is up to the owning model kind.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl LinearParams {
    pub fn linear_predict(&self, x: &[f64]) -> f64 {
        linalg::dot(&self.coef, x) + self.intercept
    }

    pub fn logistic_predict(&self, x: &[f64]) -> f64 {
        sigmoid(self.linear_predict(x))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_training_set(x: &Matrix, y: &[f64]) -> Result<()> {
    if x.rows() == 0 || y.is_empty() {
        return Err(Error::Fit("empty training set".into()));
    }
    if x.rows() != y.len() {
        return Err(Error::Fit(format!(
            "{} rows but {} targets",
            x.rows(),
            y.len()
        )));
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite values in training set".into()));
    }
    Ok(())
}

/// The Dummy predictor: the mean of the training targets.
pub fn fit_dummy(y: &[f64]) -> Result<f64> {
    if y.is_empty() {
        return Err(Error::Fit("empty training set".into()));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("non-finite training targets".into()));
    }
    Ok(crate::stats::mean(y))
}

/// Least squares on (X | 1) via normal equations with `ridge` added to
/// the Gram diagonal. Falls back to conjugate gradient if the jittered
/// Gram matrix still fails to factor.
pub fn fit_linear(x: &Matrix, y: &[f64], ridge: f64) -> Result<LinearParams> {
    check_training_set(x, y)?;
    let xi = x.with_intercept();
    let mut a = xi.gram();
    for j in 0..a.cols() {
        let v = a.get(j, j);
        a.set(j, j, v + ridge);
    }
    let b = xi.xt_v(y);
    let beta = match linalg::cholesky_solve(&a, &b) {
        Some(beta) => beta,
        None => linalg::conjugate_gradient(&a, &b, 1e-10, 20 * a.cols().max(50)),
    };
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Fit("least-squares solution is non-finite".into()));
    }
    let (coef, intercept) = beta.split_at(x.cols());
    Ok(LinearParams { coef: coef.to_vec(), intercept: intercept[0] })
}

/// Ridge-penalized log-likelihood and its gradient for logistic
/// regression on (X | 1).
fn logistic_objective(xi: &Matrix, y: &[f64], beta: &[f64], ridge: f64) -> (f64, Vec<f64>) {
    let z = xi.mul_vec(beta);
    let mut loglik = 0.0;
    let mut resid = vec![0.0; y.len()];
    for i in 0..y.len() {
        let zi = z[i];
        // log(1 + e^-|z|) form keeps the tails finite
        let log1p_exp = if zi >= 0.0 {
            (1.0 + (-zi).exp()).ln()
        } else {
            -zi + (1.0 + zi.exp()).ln()
        };
        // y*z - log(1+e^z), with log(1+e^z) = z + log(1+e^-z)
        loglik += y[i] * zi - zi - log1p_exp;
        resid[i] = y[i] - sigmoid(zi);
    }
    let mut grad = xi.xt_v(&resid);
    for (g, b) in grad.iter_mut().zip(beta) {
        *g -= ridge * b;
    }
    let penalty = 0.5 * ridge * beta.iter().map(|b| b * b).sum::<f64>();
    (loglik - penalty, grad)
}

/// Logistic regression by damped Newton, iterated until the penalized
/// gradient's max norm drops below `tol`.
pub fn fit_logistic(x: &Matrix, y: &[f64], tol: f64, max_iter: usize) -> Result<LinearParams> {
    check_training_set(x, y)?;
    if y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::Fit("logistic targets must be 0/1".into()));
    }
    let positives = y.iter().filter(|&&v| v == 1.0).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::Fit("logistic training labels are single-class".into()));
    }

    let ridge = 1e-8;
    let xi = x.with_intercept();
    let d = xi.cols();
    let mut beta = vec![0.0; d];
    let (mut objective, mut grad) = logistic_objective(&xi, y, &beta, ridge);

    for _ in 0..max_iter {
        let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_norm < tol {
            let (coef, intercept) = beta.split_at(x.cols());
            return Ok(LinearParams { coef: coef.to_vec(), intercept: intercept[0] });
        }
        // Weighted Gram: H = X^T diag(p(1-p)) X + ridge I
        let z = xi.mul_vec(&beta);
        let mut weighted = Matrix::zeros(xi.rows(), d);
        for i in 0..xi.rows() {
            let p = sigmoid(z[i]);
            let w = (p * (1.0 - p)).max(1e-12).sqrt();
            for (dst, &v) in weighted.row_mut(i).iter_mut().zip(xi.row(i)) {
                *dst = w * v;
            }
        }
        let mut h = weighted.gram();
        for j in 0..d {
            let v = h.get(j, j);
            h.set(j, j, v + ridge);
        }
        let step = linalg::cholesky_solve(&h, &grad)
            .unwrap_or_else(|| linalg::conjugate_gradient(&h, &grad, 1e-10, 20 * d));

        // Backtrack until the penalized log-likelihood improves.
        let mut scale = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> =
                beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            let (trial_obj, trial_grad) = logistic_objective(&xi, y, &trial, ridge);
            if trial_obj.is_finite() && trial_obj > objective - 1e-12 {
                beta = trial;
                objective = trial_obj;
                grad = trial_grad;
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted {
            break;
        }
    }

    let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    if grad_norm < tol {
        let (coef, intercept) = beta.split_at(x.cols());
        Ok(LinearParams { coef: coef.to_vec(), intercept: intercept[0] })
    } else {
        Err(Error::Fit(format!(
            "logistic regression did not converge (gradient norm {grad_norm:.3e})"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rngx;
    use rand::Rng;

    #[test]
    fn dummy_predicts_training_mean() {
        assert_eq!(fit_dummy(&[1.0, 3.0]).unwrap(), 2.0);
        assert!(matches!(fit_dummy(&[]), Err(Error::Fit(_))));
    }

    #[test]
    fn linear_interpolates_exact_data() {
        // y = 2 x1 - x2
        let mut rng = rngx::rng_from_seed(1);
        let rows: Vec<Vec<f64>> =
            (0..40).map(|_| vec![rng.gen::<f64>() * 4.0, rng.gen::<f64>() * 4.0]).collect();
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] - r[1]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let fit = fit_linear(&x, &y, 1e-8).unwrap();
        assert!((fit.coef[0] - 2.0).abs() < 1e-6);
        assert!((fit.coef[1] + 1.0).abs() < 1e-6);
        assert!(fit.intercept.abs() < 1e-6);
    }

    // Normal-equations residual: ||X'X b - X'y||_inf stays tiny after the
    // ridge jitter.
    #[test]
    fn normal_equations_residual_is_small() {
        let mut rng = rngx::rng_from_seed(2);
        let rows: Vec<Vec<f64>> =
            (0..50).map(|_| (0..5).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect()).collect();
        let y: Vec<f64> = (0..50).map(|_| rng.gen::<f64>() * 6.0 - 3.0).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let fit = fit_linear(&x, &y, 1e-8).unwrap();
        let xi = x.with_intercept();
        let mut beta = fit.coef.clone();
        beta.push(fit.intercept);
        let lhs = xi.gram().mul_vec(&beta);
        let rhs = xi.xt_v(&y);
        let resid = lhs
            .iter()
            .zip(&rhs)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(resid < 1e-6, "residual {resid}");
    }

    #[test]
    fn duplicated_column_falls_back_gracefully() {
        let mut rng = rngx::rng_from_seed(3);
        let base: Vec<f64> = (0..30).map(|_| rng.gen::<f64>() * 2.0).collect();
        let rows: Vec<Vec<f64>> = base.iter().map(|&v| vec![v, v]).collect();
        let y: Vec<f64> = base.iter().map(|&v| 2.0 * v).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let fit = fit_linear(&x, &y, 1e-8).unwrap();
        // The split between the twin coefficients is arbitrary, but the
        // fitted function is not.
        assert!((fit.linear_predict(&[1.0, 1.0]) - 2.0).abs() < 1e-5);
        assert!((fit.linear_predict(&[0.5, 0.5]) - 1.0).abs() < 1e-5);
    }

    #[test]
    fn logistic_recovers_a_planted_separator() {
        let mut rng = rngx::rng_from_seed(4);
        let rows: Vec<Vec<f64>> = (0..4000)
            .map(|_| vec![rngx::std_normal(&mut rng), rngx::std_normal(&mut rng)])
            .collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| {
                let p = sigmoid(1.5 * r[0] - 0.5 * r[1]);
                f64::from(u8::from(rng.gen::<f64>() < p))
            })
            .collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let fit = fit_logistic(&x, &y, 1e-6, 100).unwrap();
        assert!((fit.coef[0] - 1.5).abs() < 0.2, "coef {:?}", fit.coef);
        assert!((fit.coef[1] + 0.5).abs() < 0.2, "coef {:?}", fit.coef);
    }

    #[test]
    fn logistic_rejects_single_class_labels() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let err = fit_logistic(&x, &[1.0, 1.0, 1.0], 1e-6, 50).unwrap_err();
        assert!(matches!(err, Error::Fit(_)));
    }
}
