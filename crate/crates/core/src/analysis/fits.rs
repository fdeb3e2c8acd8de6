//! Asymptotic tail fits and exponential trend fits.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperradial::TailModel;
use crate::model::TWO_MU;
use crate::numerics::lsq::{fit_line, gauss_newton, NlsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailForm {
    SubcriticalLog,
    SupercriticalThreshold,
    FermionLog,
}

/// Fitted tail parameters with window and residual diagnostics.
///
/// Parameter names: `beta`, `delta` (subcritical-log); `E_th`, `alpha_eff2`
/// (supercritical-threshold); `alpha_eff2`, `gamma` (fermion-log).
/// `covariance` follows the order of `param_names`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub form: TailForm,
    pub params: BTreeMap<String, f64>,
    pub param_names: Vec<String>,
    pub covariance: Vec<Vec<f64>>,
    pub window: [f64; 2],
    pub n_points: usize,
    pub residual_norm: f64,
    pub r_squared: f64,
    pub r0: f64,
    pub source_hash: Option<String>,
}

impl TailFit {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    /// One-sigma uncertainty of a parameter.
    pub fn sigma(&self, name: &str) -> f64 {
        let i = self.param_names.iter().position(|n| n == name).expect("known parameter");
        self.covariance[i][i].max(0.0).sqrt()
    }

    pub fn tail_model(&self) -> TailModel {
        match self.form {
            TailForm::SubcriticalLog => TailModel::SubcriticalLog {
                beta: self.param("beta"),
                delta: self.param("delta"),
            },
            TailForm::SupercriticalThreshold => TailModel::SupercriticalThreshold {
                e_th: self.param("E_th"),
                alpha_eff2: self.param("alpha_eff2"),
            },
            TailForm::FermionLog => TailModel::FermionLog {
                alpha_eff2: self.param("alpha_eff2"),
                gamma: self.param("gamma"),
            },
        }
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

/// Default fit window: from `max(100 r0, first sample)` to the last sample.
pub fn default_window(r: &[f64], r0: f64) -> (f64, f64) {
    let lo = r.first().copied().unwrap_or(0.0).max(100.0 * r0);
    (lo, r.last().copied().unwrap_or(lo))
}

/// Samples inside `window`, after checking the window spans a decade.
fn select(r: &[f64], w: &[f64], window: (f64, f64)) -> Result<(Vec<f64>, Vec<f64>)> {
    if r.len() != w.len() {
        return Err(Error::InvalidConfig("R and W sample counts differ".into()));
    }
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidConfig(format!("fit window [{lo}, {hi}] is empty")));
    }
    let tol = 1e-12;
    let (rs, ws): (Vec<f64>, Vec<f64>) = r
        .iter()
        .zip(w)
        .filter(|(rv, _)| **rv >= lo * (1.0 - tol) && **rv <= hi * (1.0 + tol))
        .map(|(a, b)| (*a, *b))
        .unzip();
    if rs.len() < 3 {
        return Err(Error::IllConditioned(format!(
            "window [{lo:.3e}, {hi:.3e}] holds {} samples (need 3)",
            rs.len()
        )));
    }
    let spread = rs.last().unwrap() / rs[0];
    if spread < 10.0 * (1.0 - 1e-9) {
        return Err(Error::IllConditioned(format!(
            "window samples span {spread:.3} in R, less than one decade"
        )));
    }
    Ok((rs, ws))
}

fn r_squared(y: &[f64], fit: &[f64]) -> f64 {
    let n = y.len() as f64;
    let m = y.iter().sum::<f64>() / n;
    let sst: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
    let ssr: f64 = y.iter().zip(fit).map(|(a, b)| (a - b) * (a - b)).sum();
    if sst > 0.0 {
        1.0 - ssr / sst
    } else {
        1.0
    }
}

/// `W = -sqrt(beta ln(R/r0) + delta) / (2 mu R^2)` over `window`.
///
/// The linear regression of `(2 mu R^2 |W|)^2` on `ln(R/r0)` initializes a
/// damped Gauss–Newton fit of `2 mu R^2 |W| = sqrt(beta x + delta)`, which
/// weights every sample by its relative size. `r_squared` is that of the
/// linearized regression.
pub fn fit_subcritical_tail(r: &[f64], w: &[f64], window: (f64, f64), r0: f64) -> Result<TailFit> {
    let (rs, ws) = select(r, w, window)?;
    if let Some((rv, wv)) = rs.iter().zip(&ws).find(|(_, wv)| !(**wv < 0.0)) {
        return Err(Error::Precondition(format!(
            "W = {wv:.3e} at R = {rv:.3e} is not negative; the logarithmic tail form needs W < 0 across the window"
        )));
    }
    let x: Vec<f64> = rs.iter().map(|v| (v / r0).ln()).collect();
    let s: Vec<f64> = rs.iter().zip(&ws).map(|(rv, wv)| -TWO_MU * rv * rv * wv).collect();
    let s2: Vec<f64> = s.iter().map(|v| v * v).collect();
    let line = fit_line(&x, &s2)?;
    let model = |p: &[f64], i: usize, g: &mut [f64]| {
        let q = p[0] * x[i] + p[1];
        if q <= 0.0 {
            return f64::NAN;
        }
        let v = q.sqrt();
        g[0] = x[i] / (2.0 * v);
        g[1] = 1.0 / (2.0 * v);
        v
    };
    let mut p0 = vec![line.slope, line.intercept];
    if x.iter().any(|xv| p0[0] * xv + p0[1] <= 0.0) {
        // Shift the initializer so every radicand starts positive.
        let worst = x.iter().map(|xv| p0[0] * xv + p0[1]).fold(f64::INFINITY, f64::min);
        p0[1] += -worst + 1e-3 * s2.iter().cloned().fold(0.0, f64::max);
    }
    let nls = gauss_newton(model, &s, &p0, &NlsOptions::default())?;
    let (beta, delta) = (nls.params[0], nls.params[1]);
    if x.iter().any(|xv| beta * xv + delta <= 0.0) {
        return Err(Error::Convergence("fitted radicand is not positive across the window".into()));
    }
    Ok(TailFit {
        form: TailForm::SubcriticalLog,
        params: BTreeMap::from([("beta".into(), beta), ("delta".into(), delta)]),
        param_names: vec!["beta".into(), "delta".into()],
        covariance: nls.covariance,
        window: [rs[0], *rs.last().unwrap()],
        n_points: rs.len(),
        residual_norm: nls.residual_norm,
        r_squared: line.r_squared,
        r0,
        source_hash: None,
    })
}

/// `W = E_th - (alpha_eff2 + 1/4) / (2 mu R^2)` with `E_th` supplied.
pub fn fit_threshold_tail(r: &[f64], w: &[f64], e_th: Option<f64>, window: (f64, f64), r0: f64) -> Result<TailFit> {
    let e_th = match e_th {
        Some(e) if e < 0.0 => e,
        _ => {
            return Err(Error::Precondition(
                "no two-body threshold: the threshold tail needs a bound dimer".into(),
            ))
        }
    };
    let (rs, ws) = select(r, w, window)?;
    // The asymptotic approach is monotone from below; a decrease means the
    // window still contains the potential minimum.
    if let Some(p) = rs.windows(2).zip(ws.windows(2)).find(|(_, wp)| wp[1] < wp[0]) {
        return Err(Error::Precondition(format!(
            "W decreases between R = {:.3e} and {:.3e}: window overlaps the potential minimum",
            p.0[0], p.0[1]
        )));
    }
    let s: Vec<f64> = rs.iter().zip(&ws).map(|(rv, wv)| TWO_MU * rv * rv * (e_th - wv) - 0.25).collect();
    let n = s.len() as f64;
    let a = s.iter().sum::<f64>() / n;
    let var = s.iter().map(|v| (v - a) * (v - a)).sum::<f64>() / (n - 1.0);
    let fitted: Vec<f64> = rs.iter().map(|rv| e_th - (a + 0.25) / (TWO_MU * rv * rv)).collect();
    let resid = s.iter().map(|v| (v - a) * (v - a)).sum::<f64>().sqrt();
    Ok(TailFit {
        form: TailForm::SupercriticalThreshold,
        params: BTreeMap::from([("E_th".into(), e_th), ("alpha_eff2".into(), a)]),
        param_names: vec!["E_th".into(), "alpha_eff2".into()],
        covariance: vec![vec![0.0, 0.0], vec![0.0, var / n]],
        window: [rs[0], *rs.last().unwrap()],
        n_points: rs.len(),
        residual_norm: resid,
        r_squared: r_squared(&ws, &fitted),
        r0,
        source_hash: None,
    })
}

/// `W = -[(alpha_eff2 + 1/4) + gamma / ln(R/r0)] / (2 mu R^2)`.
pub fn fit_fermion_tail(r: &[f64], w: &[f64], window: (f64, f64), r0: f64) -> Result<TailFit> {
    let (rs, ws) = select(r, w, window)?;
    if rs.iter().zip(&ws).any(|(rv, wv)| !(*wv < 0.0) || *rv <= r0) {
        return Err(Error::Precondition("fermion tail needs W < 0 and R > r0 across the window".into()));
    }
    let z: Vec<f64> = rs.iter().map(|v| 1.0 / (v / r0).ln()).collect();
    let s: Vec<f64> = rs.iter().zip(&ws).map(|(rv, wv)| -TWO_MU * rv * rv * wv).collect();
    let line = fit_line(&z, &s)?;
    let model = |p: &[f64], i: usize, g: &mut [f64]| {
        g[0] = 1.0;
        g[1] = z[i];
        p[0] + 0.25 + p[1] * z[i]
    };
    let nls = gauss_newton(model, &s, &[line.intercept - 0.25, line.slope], &NlsOptions::default())?;
    Ok(TailFit {
        form: TailForm::FermionLog,
        params: BTreeMap::from([("alpha_eff2".into(), nls.params[0]), ("gamma".into(), nls.params[1])]),
        param_names: vec!["alpha_eff2".into(), "gamma".into()],
        covariance: nls.covariance,
        window: [rs[0], *rs.last().unwrap()],
        n_points: rs.len(),
        residual_norm: nls.residual_norm,
        r_squared: line.r_squared,
        r0,
        source_hash: None,
    })
}

/// `y = a exp(b alpha2) + c` with covariance of `(a, b, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpTrend {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub covariance: Vec<Vec<f64>>,
    pub residual_norm: f64,
}

impl ExpTrend {
    pub fn eval(&self, alpha2: f64) -> f64 {
        self.a * (self.b * alpha2).exp() + self.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub alpha2: f64,
    pub beta: f64,
    pub delta: f64,
    pub beta_sigma: f64,
    pub delta_sigma: f64,
}

impl TrendPoint {
    pub fn from_fit(alpha2: f64, fit: &TailFit) -> Self {
        Self {
            alpha2,
            beta: fit.param("beta"),
            delta: fit.param("delta"),
            beta_sigma: fit.sigma("beta"),
            delta_sigma: fit.sigma("delta"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendFit {
    pub beta_fit: ExpTrend,
    /// Fit of `-delta`.
    pub delta_fit: ExpTrend,
    /// `ln(-c/a) / b` for the beta trend; `None` when `a > 0, c < 0` fails.
    pub alpha_c2: Option<f64>,
    pub points: Vec<TrendPoint>,
}

impl TrendFit {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }
}

/// Three-parameter exponential fit. For a trial `b` the model is linear in
/// `(a, c)`; the best `b` on a log grid seeds Gauss–Newton.
pub fn fit_exponential(x: &[f64], y: &[f64]) -> Result<ExpTrend> {
    if x.len() < 3 || x.len() != y.len() {
        return Err(Error::IllConditioned("exponential trend needs at least three points".into()));
    }
    let span = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(span > 0.0) {
        return Err(Error::IllConditioned("trend abscissae have no spread".into()));
    }
    let linear_for = |b: f64| -> Option<(f64, f64, f64)> {
        let e: Vec<f64> = x.iter().map(|v| (b * v).exp()).collect();
        let l = fit_line(&e, y).ok()?;
        let ssr: f64 = e.iter().zip(y).map(|(ev, yv)| (l.slope * ev + l.intercept - yv).powi(2)).sum();
        Some((l.slope, l.intercept, ssr))
    };
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for k in -400i32..=400 {
        if k == 0 {
            continue;
        }
        // |b| span from 1e-2 to 1e2 units of 1/span.
        let mag = 10f64.powf(k.abs() as f64 / 100.0 - 2.0) / span;
        let b = mag * (k as f64).signum();
        if let Some((a, c, ssr)) = linear_for(b) {
            if best.is_none_or(|bb| ssr < bb.3) {
                best = Some((a, b, c, ssr));
            }
        }
    }
    let (a0, b0, c0, _) = best.ok_or_else(|| Error::IllConditioned("no exponential initializer found".into()))?;
    let model = |p: &[f64], i: usize, g: &mut [f64]| {
        let e = (p[1] * x[i]).exp();
        g[0] = e;
        g[1] = p[0] * x[i] * e;
        g[2] = 1.0;
        p[0] * e + p[2]
    };
    let nls = gauss_newton(model, y, &[a0, b0, c0], &NlsOptions::default()).or_else(|_| -> Result<_> {
        // Exactly determined fits can leave a singular covariance; report the
        // initializer with zero covariance.
        Ok(crate::numerics::lsq::NlsFit {
            params: vec![a0, b0, c0],
            covariance: vec![vec![0.0; 3]; 3],
            residual_norm: 0.0,
            iterations: 0,
        })
    })?;
    Ok(ExpTrend {
        a: nls.params[0],
        b: nls.params[1],
        c: nls.params[2],
        covariance: nls.covariance,
        residual_norm: nls.residual_norm,
    })
}

/// Independent exponential fits for `beta(alpha2)` and `-delta(alpha2)`, and
/// the strength where `beta` vanishes.
pub fn fit_parameter_trends(points: &[TrendPoint]) -> Result<TrendFit> {
    if points.len() < 4 {
        return Err(Error::IllConditioned(format!(
            "trend fit needs at least 4 points, got {}",
            points.len()
        )));
    }
    let x: Vec<f64> = points.iter().map(|p| p.alpha2).collect();
    let beta: Vec<f64> = points.iter().map(|p| p.beta).collect();
    let mdelta: Vec<f64> = points.iter().map(|p| -p.delta).collect();
    let beta_fit = fit_exponential(&x, &beta)?;
    let delta_fit = fit_exponential(&x, &mdelta)?;
    Ok(TrendFit {
        alpha_c2: critical_strength(&beta_fit),
        beta_fit,
        delta_fit,
        points: points.to_vec(),
    })
}

/// Root of `a e^{b x} + c`, defined for `a > 0`, `c < 0`, `b != 0`.
pub fn critical_strength(t: &ExpTrend) -> Option<f64> {
    (t.a > 0.0 && t.c < 0.0 && t.b != 0.0).then(|| (-t.c / t.a).ln() / t.b)
}
