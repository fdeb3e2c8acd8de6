//! Linear regression and damped Gauss–Newton least squares.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Covariance of `(slope, intercept)` from the residual variance.
    pub covariance: [[f64; 2]; 2],
}

/// Ordinary least-squares line `y = slope x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return Err(Error::IllConditioned("line fit needs at least two points".into()));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::IllConditioned("abscissae have no spread".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let r = b - slope * a - intercept;
            r * r
        })
        .sum();
    let r_squared = if syy > 0.0 { 1.0 - ssr / syy } else { 1.0 };
    let s2 = if n > 2 { ssr / (nf - 2.0) } else { 0.0 };
    let var_slope = s2 / sxx;
    let var_int = s2 * (1.0 / nf + mx * mx / sxx);
    let cov = -mx * s2 / sxx;
    Ok(LineFit {
        slope,
        intercept,
        r_squared,
        covariance: [[var_slope, cov], [cov, var_int]],
    })
}

#[derive(Debug, Clone)]
pub struct NlsOptions {
    pub max_iter: usize,
    /// Stop when the relative change in the cost falls below this.
    pub ftol: f64,
    /// Stop when every parameter step is below `xtol * (|p| + xtol)`.
    pub xtol: f64,
}

impl Default for NlsOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            ftol: 1e-15,
            xtol: 1e-13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NlsFit {
    pub params: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Euclidean norm of the (weighted) residual vector.
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Minimizes `sum_i (model(p, i) - y_i)^2` by Gauss–Newton with
/// Levenberg-style damping. `model` returns the value and the gradient with
/// respect to the parameters at sample `i`.
pub fn gauss_newton<M>(model: M, y: &[f64], p0: &[f64], opts: &NlsOptions) -> Result<NlsFit>
where
    M: Fn(&[f64], usize, &mut [f64]) -> f64,
{
    let n = y.len();
    let np = p0.len();
    if n < np {
        return Err(Error::IllConditioned(format!(
            "{n} samples cannot determine {np} parameters"
        )));
    }
    let eval = |p: &[f64]| -> Option<(DVector<f64>, DMatrix<f64>)> {
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, np);
        let mut g = vec![0.0; np];
        for i in 0..n {
            let f = model(p, i, &mut g);
            if !f.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return None;
            }
            r[i] = f - y[i];
            for k in 0..np {
                j[(i, k)] = g[k];
            }
        }
        Some((r, j))
    };

    let mut p = p0.to_vec();
    let (mut r, mut jac) = eval(&p).ok_or_else(|| {
        Error::Precondition("model is not finite at the initial parameters".into())
    })?;
    let mut cost = r.norm_squared();
    let mut lambda = 1e-6;
    let mut iterations = 0;
    for it in 0..opts.max_iter {
        iterations = it + 1;
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * &r;
        let mut accepted = false;
        for _ in 0..40 {
            let mut a = jtj.clone();
            for k in 0..np {
                a[(k, k)] += lambda * jtj[(k, k)].max(1e-300);
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&jtr));
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            if let Some((rt, jt)) = eval(&trial) {
                let ct = rt.norm_squared();
                if ct <= cost {
                    let small = step
                        .iter()
                        .zip(&trial)
                        .all(|(s, v)| s.abs() <= opts.xtol * (v.abs() + opts.xtol));
                    let rel = (cost - ct) / cost.max(f64::MIN_POSITIVE);
                    p = trial;
                    r = rt;
                    jac = jt;
                    cost = ct;
                    lambda = (lambda * 0.3).max(1e-12);
                    accepted = true;
                    if small || rel < opts.ftol || cost == 0.0 {
                        return finish(p, &jac, cost, n, np, iterations);
                    }
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !accepted {
            // No downhill step at any damping: a (local) minimum to precision.
            return finish(p, &jac, cost, n, np, iterations);
        }
    }
    finish(p, &jac, cost, n, np, iterations)
}

fn finish(p: Vec<f64>, jac: &DMatrix<f64>, cost: f64, n: usize, np: usize, iterations: usize) -> Result<NlsFit> {
    let jtj = jac.transpose() * jac;
    let inv = jtj
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::IllConditioned("normal matrix is singular".into()))?;
    let dof = (n - np).max(1) as f64;
    let s2 = cost / dof;
    let covariance = (0..np)
        .map(|a| (0..np).map(|b| s2 * inv[(a, b)]).collect())
        .collect();
    Ok(NlsFit {
        params: p,
        covariance,
        residual_norm: cost.sqrt(),
        iterations,
    })
}
