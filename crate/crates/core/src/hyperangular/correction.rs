//! Diagonal correction `Q = (hbar^2 / 2 mu) <<dPhi/dR | dPhi/dR>>` by a central
//! difference of channel functions computed on one fixed mesh.

use super::mesh::AngularMesh;
use super::solver::{adiabatic_solve, AdiabaticSolution, FreeOperators, SolveOptions};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, HBAR2_OVER_2MU};
use crate::numerics::banded::SymBand;

/// Default half-step in `ln R` for the central difference.
pub const DEFAULT_DLNR: f64 = 0.01;

/// Below this overlap two channel functions are not considered the same channel.
pub const MIN_OVERLAP: f64 = 0.5;

/// Solves at `R e^{+-dlnr}` and returns `Q_nu` for the first `n` channels of `center`.
pub fn diagonal_correction(
    center: &AdiabaticSolution,
    dlnr: f64,
    cfg: &ModelConfig,
    mesh: &AngularMesh,
    free: &FreeOperators,
    n: usize,
) -> Result<Vec<f64>> {
    if !(dlnr > 0.0 && dlnr < 0.5) {
        return Err(Error::InvalidConfig(format!("dlnr = {dlnr} must be in (0, 0.5)")));
    }
    let n = n.min(center.channels());
    let r = center.r;
    let (rp, rm) = (r * dlnr.exp(), r * (-dlnr).exp());
    let hint = neighbour_shift(center, dlnr);
    // One spare channel so a neighbour that swaps order is still found.
    let want = (n + 1).min(center.channels().max(n + 1));
    let opts = SolveOptions {
        shift_hint: Some(hint),
        ..Default::default()
    };
    let plus = adiabatic_solve(rp, cfg, mesh, free, want, &opts)?;
    let minus = adiabatic_solve(rm, cfg, mesh, free, want, &opts)?;
    let m = &free.mass;
    let mut out = Vec::with_capacity(n);
    for nu in 0..n {
        let c = &center.vectors[nu];
        let fp = matched(c, &plus, m, r)?;
        let fm = matched(c, &minus, m, r)?;
        let mut diff2 = 0.0;
        let d: Vec<f64> = fp.iter().zip(&fm).map(|(a, b)| a - b).collect();
        diff2 += m.inner(&d, &d);
        let dr = rp - rm;
        out.push(HBAR2_OVER_2MU * diff2 / (dr * dr));
    }
    Ok(out)
}

/// A shift safely below the lowest eigenvalue at `R e^{+-dlnr}`.
pub(crate) fn neighbour_shift(center: &AdiabaticSolution, dlnr: f64) -> f64 {
    let l0 = center.lambda[0];
    let spread = if center.channels() > 1 {
        center.lambda[1] - l0
    } else {
        1.0 + l0.abs()
    };
    let scaled = l0 * (2.0 * dlnr).exp();
    l0.min(scaled).min(l0 * (-2.0 * dlnr).exp()) - 0.25 * spread.max(0.1)
}

/// The neighbour channel with the largest overlap with `c`, sign-aligned.
fn matched(c: &[f64], sol: &AdiabaticSolution, m: &SymBand, r: f64) -> Result<Vec<f64>> {
    let mut mc = vec![0.0; c.len()];
    m.matvec(c, &mut mc);
    let mut best = (0usize, 0.0f64);
    for (k, v) in sol.vectors.iter().enumerate() {
        let o: f64 = v.iter().zip(&mc).map(|(a, b)| a * b).sum();
        if o.abs() > best.1.abs() {
            best = (k, o);
        }
    }
    if best.1.abs() < MIN_OVERLAP {
        return Err(Error::Relabel {
            r,
            overlap: best.1.abs(),
        });
    }
    let s = best.1.signum();
    Ok(sol.vectors[best.0].iter().map(|v| s * v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperangular::mesh::MeshPolicy;
    use crate::model::CutoffForm;

    fn q_at(cfg: &ModelConfig, r: f64, dlnr: f64, n: usize) -> Vec<f64> {
        let mesh = AngularMesh::for_radius(r / cfg.length_unit(), cfg, &MeshPolicy::default()).unwrap();
        let free = FreeOperators::assemble(&mesh);
        let c = adiabatic_solve(r, cfg, &mesh, &free, n + 1, &SolveOptions::default()).unwrap();
        diagonal_correction(&c, dlnr, cfg, &mesh, &free, n).unwrap()
    }

    #[test]
    fn free_case_has_no_correction() {
        let cfg = ModelConfig::new(-0.25, CutoffForm::Sech2);
        for q in q_at(&cfg, 50.0, DEFAULT_DLNR, 2) {
            assert!(q.abs() < 1e-10, "{q}");
        }
    }

    #[test]
    fn bare_potential_channels_do_not_move() {
        let cfg = ModelConfig::new(-0.1, CutoffForm::None);
        let q = q_at(&cfg, 7.0, DEFAULT_DLNR, 1)[0];
        let scaled = q * 2.0 * crate::model::MU * 49.0;
        assert!(scaled.abs() < 1e-9, "{scaled}");
    }

    #[test]
    fn correction_is_positive_for_regularized() {
        let cfg = ModelConfig::new(0.0, CutoffForm::Sech2);
        let q = q_at(&cfg, 100.0, DEFAULT_DLNR, 1)[0];
        assert!(q > 0.0);
    }
}
