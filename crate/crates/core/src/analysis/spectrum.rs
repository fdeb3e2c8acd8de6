//! Recursive prediction of a logarithmically modified ladder.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPrediction {
    pub beta: f64,
    /// Ground-state mean hyperradius in units of `r0`.
    pub r_mean0: f64,
    pub e0: f64,
    pub energies: Vec<f64>,
    /// `E_{n+1} / E_n`.
    pub ratios: Vec<f64>,
    /// The recursion stopped early on a nonpositive radicand.
    pub truncated: bool,
}

impl SpectrumPrediction {
    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }
}

/// `E_{n+1} = E_n exp(-2 pi / sqrt(s_n - 1/4))` where `s_n = strength(ln(E_n/E_0))`.
///
/// Returns the energies and whether the recursion hit an invalid radicand.
pub fn spectrum_recursion<F: Fn(f64) -> f64>(e0: f64, n_max: usize, strength: F) -> (Vec<f64>, bool) {
    let mut e = vec![e0];
    while e.len() < n_max {
        let en = *e.last().unwrap();
        let s = strength((en / e0).ln());
        let q = s - 0.25;
        if !(q > 0.0) || !q.is_finite() {
            return (e, true);
        }
        let next = en * (-2.0 * PI / q.sqrt()).exp();
        if !(next != 0.0 && next.is_finite()) {
            return (e, true);
        }
        e.push(next);
    }
    (e, false)
}

/// Levels of the form obtained by treating the tail as a slowly varying
/// inverse-square potential, seeded with the ground state `(E_0, <R>_0)`:
/// the strength at level `n` is `sqrt(beta ln(<R>_0/r0) - (beta/2) ln(E_n/E_0))`.
pub fn predict_spectrum(beta: f64, r_mean0: f64, e0: f64, n_max: usize) -> Result<SpectrumPrediction> {
    if n_max == 0 {
        return Err(Error::InvalidConfig("n_max must be at least 1".into()));
    }
    if !(e0 < 0.0) {
        return Err(Error::Precondition(format!("E0 must be negative, got {e0}")));
    }
    let b0 = beta * r_mean0.ln();
    if !(b0 > 1.0 / 16.0) {
        return Err(Error::Precondition(format!(
            "beta ln(<R>0/r0) = {b0:.4} must exceed 1/16"
        )));
    }
    let (energies, truncated) = spectrum_recursion(e0, n_max, |le| {
        let q = b0 - 0.5 * beta * le;
        if q > 0.0 {
            q.sqrt()
        } else {
            f64::NAN
        }
    });
    let ratios = energies.windows(2).map(|p| p[1] / p[0]).collect();
    Ok(SpectrumPrediction {
        beta,
        r_mean0,
        e0,
        energies,
        ratios,
        truncated,
    })
}
