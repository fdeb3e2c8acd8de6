//! Units, pair potentials, symmetry sectors and the democratic hyperangular
//! parametrization shared by every solver.
//!
//! Natural units are used throughout: `hbar = m = 1`, lengths in units of the
//! regularization scale `r0` unless a caller picks another `r0`. The
//! three-body reduced mass is `mu = m / sqrt(3)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant.
pub const HBAR: f64 = 1.0;
/// Particle mass.
pub const MASS: f64 = 1.0;
/// Three-body reduced mass `m / sqrt(3)`.
pub const MU: f64 = 0.577_350_269_189_625_8;
/// `2 mu / hbar^2`, the factor turning `R^2 * energy` into a dimensionless strength.
pub const TWO_MU: f64 = 2.0 * MU;
/// `hbar^2 / (2 mu)`.
pub const HBAR2_OVER_2MU: f64 = 1.0 / TWO_MU;
/// `3^(-1/4)`, the pair-distance prefactor in democratic coordinates.
pub(crate) const PAIR_PREFACTOR: f64 = 0.759_835_685_651_592_6;

/// Short-range form replacing `sech^2(r/r0)` in the regularized denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffForm {
    Sech2,
    Gaussian,
    Constant,
    None,
}

impl CutoffForm {
    /// The dimensionless regulator `f(y)` with `D(r) = r0^2 f(r/r0) + r^2`.
    #[inline]
    pub fn regulator(self, y: f64) -> f64 {
        match self {
            CutoffForm::Sech2 => {
                let e = (-2.0 * y.abs()).exp();
                4.0 * e / ((1.0 + e) * (1.0 + e))
            }
            CutoffForm::Gaussian => (-y * y).exp(),
            CutoffForm::Constant => 1.0,
            CutoffForm::None => 0.0,
        }
    }

    pub fn is_regularized(self) -> bool {
        self != CutoffForm::None
    }

    pub fn name(self) -> &'static str {
        match self {
            CutoffForm::Sech2 => "sech2",
            CutoffForm::Gaussian => "gaussian",
            CutoffForm::Constant => "constant",
            CutoffForm::None => "none",
        }
    }
}

impl std::str::FromStr for CutoffForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sech2" => Ok(CutoffForm::Sech2),
            "gaussian" => Ok(CutoffForm::Gaussian),
            "constant" => Ok(CutoffForm::Constant),
            "none" => Ok(CutoffForm::None),
            other => Err(Error::InvalidConfig(format!("unknown cutoff form '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistics {
    Boson,
    Fermion,
}

/// Particle statistics plus total orbital angular momentum and parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymmetrySector {
    pub statistics: Statistics,
    #[serde(rename = "J")]
    pub j: u32,
    pub parity: i32,
}

impl SymmetrySector {
    /// Identical bosons, `J = 0`, positive parity: the sector the hyperangular solver handles.
    pub const BOSON_0_PLUS: SymmetrySector = SymmetrySector {
        statistics: Statistics::Boson,
        j: 0,
        parity: 1,
    };

    /// Spin-polarized fermions, `J = 1`, positive parity: analysis-only.
    pub const FERMION_1_PLUS: SymmetrySector = SymmetrySector {
        statistics: Statistics::Fermion,
        j: 1,
        parity: 1,
    };

    pub fn is_solver_supported(&self) -> bool {
        *self == Self::BOSON_0_PLUS
    }

    pub(crate) fn unsupported(&self, reason: &str) -> Error {
        Error::UnsupportedSector {
            statistics: match self.statistics {
                Statistics::Boson => "boson".into(),
                Statistics::Fermion => "fermion".into(),
            },
            j: self.j,
            parity: self.parity,
            reason: reason.into(),
        }
    }
}

impl Default for SymmetrySector {
    fn default() -> Self {
        Self::BOSON_0_PLUS
    }
}

/// Physical model: pair strength, regularization and symmetry sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub alpha2: f64,
    #[serde(default = "default_r0")]
    pub r0: f64,
    #[serde(default = "default_cutoff")]
    pub cutoff: CutoffForm,
    #[serde(default)]
    pub sector: SymmetrySector,
}

fn default_r0() -> f64 {
    1.0
}

fn default_cutoff() -> CutoffForm {
    CutoffForm::Sech2
}

impl ModelConfig {
    pub fn new(alpha2: f64, cutoff: CutoffForm) -> Self {
        Self {
            alpha2,
            r0: 1.0,
            cutoff,
            sector: SymmetrySector::BOSON_0_PLUS,
        }
    }

    pub fn with_r0(mut self, r0: f64) -> Self {
        self.r0 = r0;
        self
    }

    pub fn with_alpha2(mut self, alpha2: f64) -> Self {
        self.alpha2 = alpha2;
        self
    }

    pub fn with_sector(mut self, sector: SymmetrySector) -> Self {
        self.sector = sector;
        self
    }

    /// `alpha^2 + 1/4`, the coefficient of the inverse-square attraction.
    #[inline]
    pub fn coupling(&self) -> f64 {
        self.alpha2 + 0.25
    }

    pub fn validate(&self) -> Result<()> {
        if !self.alpha2.is_finite() || self.alpha2 < -0.25 {
            return Err(Error::InvalidConfig(format!(
                "alpha2 = {} must be >= -1/4",
                self.alpha2
            )));
        }
        if self.cutoff.is_regularized() && !(self.r0 > 0.0 && self.r0.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "r0 = {} must be positive for a regularized cutoff",
                self.r0
            )));
        }
        if self.sector.parity != 1 && self.sector.parity != -1 {
            return Err(Error::InvalidConfig(format!(
                "parity must be +1 or -1, got {}",
                self.sector.parity
            )));
        }
        Ok(())
    }

    /// Length used to make radii dimensionless. The pure form has no scale of its own.
    pub fn length_unit(&self) -> f64 {
        if self.cutoff.is_regularized() {
            self.r0
        } else {
            1.0
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("ModelConfig serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let cfg: ModelConfig = serde_json::from_str(s)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Pair potential `-(alpha^2 + 1/4) hbar^2 / (m D(r))`.
pub fn pair_potential(r: f64, cfg: &ModelConfig) -> Result<f64> {
    if r < 0.0 || !r.is_finite() {
        return Err(Error::Singular(format!("pair distance r = {r} must be >= 0")));
    }
    if !cfg.cutoff.is_regularized() {
        if r == 0.0 {
            return Err(Error::Singular(
                "pure inverse-square potential evaluated at r = 0".into(),
            ));
        }
        return Ok(-cfg.coupling() * HBAR * HBAR / (MASS * r * r));
    }
    let y = r / cfg.r0;
    Ok(reduced_pair_potential(y, cfg) / (cfg.r0 * cfg.r0))
}

/// Pair potential in units of `hbar^2 / (m r0^2)` at `y = r / r0`.
#[inline]
pub(crate) fn reduced_pair_potential(y: f64, cfg: &ModelConfig) -> f64 {
    -cfg.coupling() / (cfg.cutoff.regulator(y) + y * y)
}

/// A point of the reduced (J = 0) hyperangular space at hyperradius `r`.
///
/// `theta` lies in `[0, pi/2]` with `theta = 0` the equilateral configuration;
/// `phi` in `[0, 2 pi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperangularPoint {
    #[serde(rename = "R")]
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
}

impl HyperangularPoint {
    pub fn new(r: f64, theta: f64, phi: f64) -> Self {
        Self { r, theta, phi }
    }
}

/// Offsets `c_k` with `phi - 2 pi k/3 - pi = c_k - u`, `u = pi/3 - phi`, reduced to `(-pi, pi]`.
const PAIR_OFFSETS: [f64; 3] = [-2.0 * PI / 3.0, 2.0 * PI / 3.0, 0.0];

/// `1 + sin(theta) cos(phi - 2 pi k / 3)` for the three pairs, written in the
/// complementary angles `t = pi/2 - theta`, `u = pi/3 - phi` so the value near the
/// coincidence corner `t = u = 0` carries full relative precision.
#[inline]
pub(crate) fn pair_radicands(t: f64, u: f64) -> [f64; 3] {
    let st = (0.5 * t).sin();
    let a = 2.0 * st * st;
    let ct = t.cos();
    let mut out = [0.0; 3];
    for (k, c) in PAIR_OFFSETS.iter().enumerate() {
        let s = (0.5 * (c - u)).sin();
        out[k] = a + ct * 2.0 * s * s;
    }
    out
}

/// Pair distances `r_k = 3^(-1/4) R sqrt(1 + sin(theta) cos(phi - 2 pi k/3))`.
pub fn pair_distances(p: &HyperangularPoint) -> [f64; 3] {
    let rad = pair_radicands(FRAC_PI_2 - p.theta, FRAC_PI_3 - p.phi);
    rad.map(|q| PAIR_PREFACTOR * p.r * q.max(0.0).sqrt())
}

/// Pairwise-additive three-body potential at a hyperangular point.
pub fn total_potential(p: &HyperangularPoint, cfg: &ModelConfig) -> Result<f64> {
    let mut v = 0.0;
    for r in pair_distances(p) {
        v += pair_potential(r, cfg)?;
    }
    Ok(v)
}

/// `2 mu R^2 V / hbar^2` at complementary angles `(t, u)` and reduced hyperradius
/// `x = R / r0`. Depends on `R` and `r0` only through `x`.
#[inline]
pub(crate) fn scaled_total_potential(x: f64, t: f64, u: f64, cfg: &ModelConfig) -> f64 {
    let rad = pair_radicands(t, u);
    let mut v = 0.0;
    if cfg.cutoff.is_regularized() {
        for q in rad {
            // y^2 = (r/r0)^2
            let y2 = PAIR_PREFACTOR * PAIR_PREFACTOR * x * x * q;
            v -= x * x / (cfg.cutoff.regulator(y2.sqrt()) + y2);
        }
    } else {
        for q in rad {
            v -= 1.0 / (PAIR_PREFACTOR * PAIR_PREFACTOR * q);
        }
    }
    TWO_MU * cfg.coupling() * v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pure_form_at_unit_distance() {
        let cfg = ModelConfig::new(0.0, CutoffForm::None);
        assert!((pair_potential(1.0, &cfg).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn sech2_at_origin() {
        let cfg = ModelConfig::new(0.0, CutoffForm::Sech2);
        assert!((pair_potential(0.0, &cfg).unwrap() + 0.25).abs() < 1e-15);
    }

    #[test]
    fn sech2_matches_pure_far_out() {
        let reg = ModelConfig::new(0.0, CutoffForm::Sech2);
        let pure = ModelConfig::new(0.0, CutoffForm::None);
        let a = pair_potential(100.0, &reg).unwrap();
        let b = pair_potential(100.0, &pure).unwrap();
        assert!(((a - b) / b).abs() < 1e-80);
    }

    #[test]
    fn pure_form_rejects_origin() {
        let cfg = ModelConfig::new(0.0, CutoffForm::None);
        assert!(matches!(pair_potential(0.0, &cfg), Err(Error::Singular(_))));
        assert!(total_potential(&HyperangularPoint::new(1.0, FRAC_PI_2, PI), &cfg).is_err());
    }

    #[test]
    fn equilateral_distances() {
        let p = HyperangularPoint::new(10.0, 0.0, 1.234);
        for r in pair_distances(&p) {
            assert!((r - PAIR_PREFACTOR * 10.0).abs() < 1e-13);
        }
    }

    #[test]
    fn collinear_coincidence() {
        let p = HyperangularPoint::new(7.0, FRAC_PI_2, PI);
        assert!(pair_distances(&p)[0].abs() < 1e-12);
    }

    #[test]
    fn zero_coupling_gives_no_potential() {
        let cfg = ModelConfig::new(-0.25, CutoffForm::Sech2);
        let p = HyperangularPoint::new(3.0, 0.7, 0.3);
        assert_eq!(total_potential(&p, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn equilateral_total_potential() {
        let cfg = ModelConfig::new(0.0, CutoffForm::Sech2);
        let p = HyperangularPoint::new(10.0, 0.0, 0.0);
        let v = total_potential(&p, &cfg).unwrap();
        let single = pair_potential(PAIR_PREFACTOR * 10.0, &cfg).unwrap();
        assert!((v - 3.0 * single).abs() < 1e-14);
    }

    #[test]
    fn json_roundtrip_uses_documented_keys() {
        let cfg = ModelConfig::new(-0.002, CutoffForm::Gaussian).with_r0(2.0);
        let s = cfg.to_json();
        assert!(s.contains("\"alpha2\"") && s.contains("\"gaussian\"") && s.contains("\"J\":0"));
        assert_eq!(ModelConfig::from_json(&s).unwrap(), cfg);
    }

    #[test]
    fn validation() {
        assert!(ModelConfig::new(-0.3, CutoffForm::Sech2).validate().is_err());
        assert!(ModelConfig::new(0.0, CutoffForm::Sech2).with_r0(0.0).validate().is_err());
        assert!(ModelConfig::new(0.0, CutoffForm::None).with_r0(0.0).validate().is_ok());
        assert!(ModelConfig::new(-0.25, CutoffForm::Sech2).validate().is_ok());
    }

    #[test]
    fn scaled_potential_matches_direct_evaluation() {
        let cfg = ModelConfig::new(0.1, CutoffForm::Gaussian).with_r0(1.5);
        let (r, theta, phi) = (4.0, 1.1, 0.4);
        let direct = total_potential(&HyperangularPoint::new(r, theta, phi), &cfg).unwrap();
        let scaled = scaled_total_potential(r / cfg.r0, FRAC_PI_2 - theta, FRAC_PI_3 - phi, &cfg);
        assert!((scaled - TWO_MU * r * r * direct).abs() < 1e-12 * scaled.abs());
    }

    proptest! {
        #[test]
        fn distance_sum_rule(r in 0.01f64..1e6, theta in 0.0f64..FRAC_PI_2, phi in 0.0f64..(2.0 * PI)) {
            let d = pair_distances(&HyperangularPoint::new(r, theta, phi));
            let sum: f64 = d.iter().map(|x| x * x).sum();
            let target = 3f64.sqrt() * r * r;
            prop_assert!(((sum - target) / target).abs() < 1e-12);
        }

        #[test]
        fn permutation_symmetry(theta in 0.0f64..FRAC_PI_2, phi in 0.0f64..(2.0 * PI), a2 in -0.2f64..1.0) {
            let cfg = ModelConfig::new(a2, CutoffForm::Sech2);
            let v = |ph: f64| total_potential(&HyperangularPoint::new(3.0, theta, ph), &cfg).unwrap();
            let v0 = v(phi);
            prop_assert!((v0 - v(phi + 2.0 * PI / 3.0)).abs() <= 1e-14 * v0.abs().max(1.0));
            prop_assert!((v0 - v(-phi)).abs() <= 1e-14 * v0.abs().max(1.0));
        }

        #[test]
        fn r0_scaling(r in 0.0f64..50.0, s in 0.1f64..10.0, a2 in -0.2f64..2.0) {
            for cutoff in [CutoffForm::Sech2, CutoffForm::Gaussian, CutoffForm::Constant] {
                let base = ModelConfig::new(a2, cutoff);
                let scaled = base.with_r0(s);
                let lhs = pair_potential(r, &scaled).unwrap();
                let rhs = pair_potential(r / s, &base).unwrap() / (s * s);
                prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs.abs());
            }
        }

        #[test]
        fn subcritical_sign(r in 0.0f64..1e4, a2 in -0.2499f64..0.0) {
            let cfg = ModelConfig::new(a2, CutoffForm::Sech2);
            prop_assert!(pair_potential(r, &cfg).unwrap() < 0.0);
        }
    }
}
