//! Tail fits, trend fits, spectrum predictions and closed-form relations.

pub mod fall;
pub mod fits;
pub mod massratio;
pub mod spectrum;

pub use fall::{fall_to_center_study, FallToCenter, FallToCenterRow};
pub use fits::{
    critical_strength, default_window, fit_exponential, fit_fermion_tail, fit_parameter_trends, fit_subcritical_tail,
    fit_threshold_tail, ExpTrend, TailFit, TailForm, TrendFit, TrendPoint,
};
pub use massratio::{alpha2_from_mass_ratio, critical_mass_ratio, mass_ratio_map, s1_exponent};
pub use spectrum::{predict_spectrum, spectrum_recursion, SpectrumPrediction};

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Effective inverse-square strength of the atom–dimer channel with pair
/// angular momentum `l`: `(8/3) alpha2 + 5/12 - l(l+1)`.
pub fn alpha_eff2(alpha2: f64, l: u32) -> f64 {
    let ll = (l * (l + 1)) as f64;
    8.0 / 3.0 * alpha2 + 5.0 / 12.0 - ll
}

/// The pair strength at which `alpha_eff2(., l)` vanishes.
pub fn alpha_d2(l: u32) -> f64 {
    let ll = (l * (l + 1)) as f64;
    3.0 * ll / 8.0 - 5.0 / 32.0
}

/// Energy and radius ratios `(e^{-2 pi/a}, e^{pi/a})` of a geometric ladder.
pub fn geometric_ratios(alpha_eff: f64) -> Result<(f64, f64)> {
    if !(alpha_eff > 0.0) || !alpha_eff.is_finite() {
        return Err(Error::Precondition(format!("alpha_eff must be positive, got {alpha_eff}")));
    }
    Ok(((-2.0 * PI / alpha_eff).exp(), (PI / alpha_eff).exp()))
}
