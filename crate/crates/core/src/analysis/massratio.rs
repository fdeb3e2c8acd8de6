//! Mass ratio of the zero-range heavy–heavy–light system with the same
//! inverse-square strength as the l = 1 fermionic channel.
//!
//! For two identical heavy fermions (mass `M`) and a light particle (mass
//! `m`) with resonant heavy–light contact interactions, the l = 1 hyperradial
//! exponent `s` solves
//!
//! ```text
//! F(s) = (s^2 - 1) sin(s pi/2)
//!        + (2 / sin 2g) [s cos(s(pi/2 - g)) - tan g sin(s(pi/2 - g))] = 0,
//! tan g = sqrt(2k + 1) / k,  k = M/m.
//! ```
//!
//! `s = 0` and `s = 1` are spurious roots for every `k`; `s1` is the lowest
//! root of `F(s) / (s (s - 1))`. It reaches zero at the critical ratio
//! `k_c ~ 13.607`, beyond which the exponent is imaginary. The identification
//! with the pair strength is `alpha2 = 2 - s1^2`.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::numerics::roots::brent;

fn angle(kappa: f64) -> f64 {
    ((2.0 * kappa + 1.0).sqrt() / kappa).atan()
}

/// The transcendental exponent function `F(s)` at mass ratio `kappa`.
pub fn exponent_function(s: f64, kappa: f64) -> f64 {
    let g = angle(kappa);
    let a = FRAC_PI_2 - g;
    (s * s - 1.0) * (s * FRAC_PI_2).sin() + 2.0 / (2.0 * g).sin() * (s * (s * a).cos() - g.tan() * (s * a).sin())
}

fn reduced(s: f64, kappa: f64) -> f64 {
    let s = if (s - 1.0).abs() < 1e-7 { 1.0 + 1e-7 } else { s };
    exponent_function(s, kappa) / (s * (s - 1.0))
}

/// `lim_{s->0} F(s)/s`; vanishes at the critical mass ratio.
fn slope_at_origin(kappa: f64) -> f64 {
    let g = angle(kappa);
    -FRAC_PI_2 + 2.0 / (2.0 * g).sin() * (1.0 - g.tan() * (FRAC_PI_2 - g))
}

/// Mass ratio at which the l = 1 exponent vanishes.
pub fn critical_mass_ratio() -> f64 {
    brent(slope_at_origin, 5.0, 30.0, 1e-13, 200).expect("critical mass ratio is bracketed")
}

/// Lowest real exponent `s1` in `[0, 2)`; `None` past the critical ratio.
pub fn s1_exponent(kappa: f64) -> Option<f64> {
    if !(kappa > 0.0) {
        return None;
    }
    let n = 4000;
    let (lo, hi) = (1e-7, 2.0 - 1e-9);
    let mut prev = (lo, reduced(lo, kappa));
    for i in 1..=n {
        let s = lo + (hi - lo) * i as f64 / n as f64;
        let v = reduced(s, kappa);
        if prev.1 == 0.0 {
            return Some(prev.0);
        }
        if prev.1 * v < 0.0 {
            return brent(|t| reduced(t, kappa), prev.0, s, 1e-14, 200).ok();
        }
        prev = (s, v);
    }
    None
}

/// `alpha2 = 2 - s1^2` for a given mass ratio.
pub fn alpha2_from_mass_ratio(kappa: f64) -> Result<f64> {
    let kc = critical_mass_ratio();
    if kappa > kc {
        return Err(Error::Precondition(format!(
            "mass ratio {kappa} exceeds the critical value {kc:.5}; s1 is imaginary"
        )));
    }
    let s = s1_exponent(kappa)
        .ok_or_else(|| Error::Precondition(format!("no l = 1 exponent below 2 at mass ratio {kappa}")))?;
    Ok(2.0 - s * s)
}

/// Heavy/light mass ratio whose l = 1 exponent gives pair strength `alpha2`.
pub fn mass_ratio_map(alpha2: f64) -> Result<f64> {
    if !(alpha2 > 0.0 && alpha2 <= 2.0) {
        return Err(Error::InvalidConfig(format!("alpha2 = {alpha2} outside (0, 2]")));
    }
    let kc = critical_mass_ratio();
    if alpha2 == 2.0 {
        return Ok(kc);
    }
    let target = 2.0 - alpha2;
    let f = |k: f64| s1_exponent(k).map(|s| s * s).unwrap_or(0.0) - target;
    brent(f, 1.0, kc, 1e-12, 300)
}
