//! Growth of the ground-channel strength at fixed R as the cutoff shrinks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperangular::{channel_table, TableOptions};
use crate::model::{ModelConfig, TWO_MU};
use crate::numerics::lsq::{fit_line, gauss_newton, NlsOptions};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FallToCenterRow {
    pub r0: f64,
    /// `-2 mu R^2 W_00 - 1/4`.
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FallToCenter {
    pub r_fixed: f64,
    pub config: ModelConfig,
    pub rows: Vec<FallToCenterRow>,
    /// `s` strictly increases as `r0` decreases.
    pub monotone: bool,
    /// Fit of `s = sqrt(beta ln(R/r0) + delta) - 1/4` (signed root).
    pub beta: f64,
    pub delta: f64,
    pub r_squared: f64,
    /// Linear regression `s = a sqrt(ln(R/r0)) + b`.
    pub sqrt_ln_slope: f64,
    pub sqrt_ln_intercept: f64,
    pub sqrt_ln_r_squared: f64,
}

fn signed_sqrt(q: f64) -> f64 {
    q.signum() * q.abs().sqrt()
}

/// Fits `s = sign(q) sqrt|q| - 1/4` with `q = beta x + delta`; returns
/// `(beta, delta, R^2)`.
pub fn fit_log_strength(x: &[f64], s: &[f64]) -> Result<(f64, f64, f64)> {
    if x.len() < 3 {
        return Err(Error::IllConditioned("strength fit needs at least three points".into()));
    }
    let q: Vec<f64> = s.iter().map(|v| (v + 0.25) * (v + 0.25).abs()).collect();
    let line = fit_line(x, &q)?;
    let model = |p: &[f64], i: usize, g: &mut [f64]| {
        let qv = p[0] * x[i] + p[1];
        let d = 0.5 / qv.abs().sqrt().max(1e-300);
        g[0] = x[i] * d;
        g[1] = d;
        signed_sqrt(qv) - 0.25
    };
    let fit = gauss_newton(model, s, &[line.slope, line.intercept], &NlsOptions::default())?;
    let (beta, delta) = (fit.params[0], fit.params[1]);
    let m = s.iter().sum::<f64>() / s.len() as f64;
    let sst: f64 = s.iter().map(|v| (v - m) * (v - m)).sum();
    let ssr: f64 = x
        .iter()
        .zip(s)
        .map(|(xv, sv)| (signed_sqrt(beta * xv + delta) - 0.25 - sv).powi(2))
        .sum();
    Ok((beta, delta, if sst > 0.0 { 1.0 - ssr / sst } else { 1.0 }))
}

/// Ground-channel strength at `r_fixed` for each cutoff length in `r0_list`.
pub fn fall_to_center_study(r_fixed: f64, r0_list: &[f64], cfg: &ModelConfig, opts: &TableOptions) -> Result<FallToCenter> {
    cfg.validate()?;
    if !(cfg.alpha2 > -0.25 && cfg.alpha2 <= 0.0) {
        return Err(Error::Precondition(format!(
            "fall-to-center study needs a subcritical attractive pair, got alpha2 = {}",
            cfg.alpha2
        )));
    }
    if let Some(r0) = r0_list.iter().find(|r0| !(**r0 > 0.0 && r_fixed >= 10.0 * **r0)) {
        return Err(Error::Precondition(format!("R = {r_fixed} is not well outside r0 = {r0}")));
    }
    let mut rows = Vec::with_capacity(r0_list.len());
    for &r0 in r0_list {
        let c = cfg.with_r0(r0);
        let t = channel_table(&c, &[r_fixed], opts)?;
        let w = t.samples[0].w[0];
        rows.push(FallToCenterRow {
            r0,
            s: -TWO_MU * r_fixed * r_fixed * w - 0.25,
        });
    }
    let mut sorted = rows.clone();
    sorted.sort_by(|a, b| b.r0.total_cmp(&a.r0));
    let monotone = sorted.windows(2).all(|p| p[1].s > p[0].s);
    let x: Vec<f64> = rows.iter().map(|r| (r_fixed / r.r0).ln()).collect();
    let s: Vec<f64> = rows.iter().map(|r| r.s).collect();
    let (beta, delta, r_squared) = fit_log_strength(&x, &s)?;
    let rx: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
    let lin = fit_line(&rx, &s)?;
    Ok(FallToCenter {
        r_fixed,
        config: *cfg,
        rows,
        monotone,
        beta,
        delta,
        r_squared,
        sqrt_ln_slope: lin.slope,
        sqrt_ln_intercept: lin.intercept,
        sqrt_ln_r_squared: lin.r_squared,
    })
}
