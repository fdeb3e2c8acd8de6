//! Radial two-body bound states of the regularized pair potential.
//!
//! The relative motion has reduced mass `m/2`, so the radial equation is
//! `-(hbar^2/m) u'' + [v(r) + l(l+1) hbar^2/(m r^2)] u = E u`. It is solved in
//! `x = ln(r/r0)` on the amplitude `w = r^{-1/2} u`, which keeps ladders that
//! span many decades well conditioned.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{reduced_pair_potential, ModelConfig, HBAR, MASS};
use crate::numerics::shooting::{LogEquation, ShootingOptions};

/// Radial interval in units of `r0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialDomain {
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for RadialDomain {
    fn default() -> Self {
        Self {
            r_min: 1e-6,
            r_max: 1e40,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyOptions {
    /// Relative energy tolerance per level.
    pub tol: f64,
    /// Step in `ln r`.
    pub step: f64,
}

impl Default for TwoBodyOptions {
    fn default() -> Self {
        Self { tol: 1e-9, step: 0.004 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyLevel {
    pub v: usize,
    #[serde(rename = "E")]
    pub e: f64,
    pub r_mean: f64,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoBodyLevels {
    pub cfg: ModelConfig,
    pub l: u32,
    pub levels: Vec<TwoBodyLevel>,
}

impl TwoBodyLevels {
    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.e).collect()
    }
}

/// `v(r) + l(l+1) hbar^2 / (m r^2)`.
pub fn radial_effective_potential(r: f64, cfg: &ModelConfig, l: u32) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::Singular(format!("radial potential needs r > 0, got {r}")));
    }
    let ll = (l * (l + 1)) as f64;
    Ok(crate::model::pair_potential(r, cfg)? + ll * HBAR * HBAR / (MASS * r * r))
}

/// Whether the pure inverse-square limit of the `l` channel binds at all.
pub fn channel_is_supercritical(cfg: &ModelConfig, l: u32) -> bool {
    let ll = (l * (l + 1)) as f64;
    ll - cfg.coupling() < -0.25
}

/// Lowest `n_levels` states of angular momentum `l`.
pub fn solve_two_body(
    cfg: &ModelConfig,
    l: u32,
    n_levels: usize,
    domain: RadialDomain,
    opts: &TwoBodyOptions,
) -> Result<TwoBodyLevels> {
    cfg.validate()?;
    if !cfg.cutoff.is_regularized() {
        return Err(Error::InvalidConfig(
            "the two-body solver needs a regularized cutoff".into(),
        ));
    }
    if n_levels == 0 {
        return Err(Error::InvalidConfig("n_levels must be at least 1".into()));
    }
    if !(domain.r_min > 0.0 && domain.r_max > domain.r_min) {
        return Err(Error::InvalidConfig(format!("invalid radial domain {domain:?}")));
    }
    let mut out = TwoBodyLevels {
        cfg: *cfg,
        l,
        levels: vec![],
    };
    if !channel_is_supercritical(cfg, l) {
        return Ok(out);
    }
    let ll = (l * (l + 1)) as f64;
    let c = *cfg;
    // Lengths in r0, energies in hbar^2/(m r0^2): u'' = [m v + l(l+1)/r^2 + m eps] u.
    let eq = LogEquation::new(
        move |x| {
            let y = x.exp();
            0.25 + ll + MASS * y * y * reduced_pair_potential(y, &c)
        },
        MASS,
        domain.r_min.ln(),
        domain.r_max.ln(),
        opts.step,
    )
    .with_regular_start();
    let sopts = ShootingOptions {
        rel_tol: opts.tol * 0.01,
        ..Default::default()
    };
    let ladder = eq.ladder(n_levels, &sopts)?;
    let r0 = cfg.r0;
    for lv in &ladder.levels {
        out.levels.push(TwoBodyLevel {
            v: lv.n,
            e: -lv.eps * HBAR * HBAR / (r0 * r0),
            r_mean: lv.mean_radius * r0,
            nodes: lv.nodes,
        });
    }
    if ladder.levels.len() < n_levels {
        let next = ladder
            .levels
            .last()
            .map(|l| l.x_outer.exp() * 3.0)
            .unwrap_or(domain.r_max);
        return Err(Error::DomainTooSmall {
            turning_point: next.max(domain.r_max) * r0,
            r_max: domain.r_max * r0,
        });
    }
    Ok(out)
}

/// The lowest s-wave dimer energy `E_00`, or `None` when no dimer exists.
pub fn lowest_threshold(cfg: &ModelConfig) -> Result<Option<f64>> {
    if !cfg.cutoff.is_regularized() || !channel_is_supercritical(cfg, 0) {
        return Ok(None);
    }
    let lv = solve_two_body(cfg, 0, 1, RadialDomain::default(), &TwoBodyOptions::default())?;
    Ok(lv.levels.first().map(|l| l.e))
}
