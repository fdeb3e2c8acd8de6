//! Single-channel hyperradial bound states.
//!
//! With `F = R^{1/2} w` and `x = ln(R/r0)` the hyperradial equation becomes
//! `w'' = [1/4 + 2 mu R^2 (W - E_th) + 2 mu R^2 eps] w`, where `E = E_th - eps`.
//! Sources provide the reduced potential `y(x) = 2 mu R^2 (W - E_th)`, which
//! stays of order one across the whole range even when `W` spans dozens of
//! decades.

pub mod scan;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperangular::ChannelTable;
use crate::io::write_atomic;
use crate::model::TWO_MU;
use crate::numerics::pchip::Pchip;
use crate::numerics::shooting::{LogEquation, ShootingOptions};

pub use scan::{continuity_jumps, spectrum_scan, ScanOptions, ScanResult, ScanRow};

/// Analytic asymptotic forms of an effective potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum TailModel {
    /// `2 mu R^2 W = -sqrt(beta ln(R/r0) + delta)`; a negative radicand is
    /// continued as `+sqrt(|q|)` so the form stays defined (and repulsive)
    /// where the fit predicts no attraction.
    SubcriticalLog { beta: f64, delta: f64 },
    /// `2 mu R^2 W = -coefficient`.
    PureInverseSquare { coefficient: f64 },
    /// `2 mu R^2 (W - E_th) = -(alpha_eff2 + 1/4)`.
    SupercriticalThreshold { e_th: f64, alpha_eff2: f64 },
    /// `2 mu R^2 W = -[(alpha_eff2 + 1/4) + gamma / ln(R/r0)]`.
    FermionLog { alpha_eff2: f64, gamma: f64 },
}

impl TailModel {
    /// Energy the potential approaches as `R -> infinity`.
    pub fn threshold(&self) -> f64 {
        match *self {
            TailModel::SupercriticalThreshold { e_th, .. } => e_th,
            _ => 0.0,
        }
    }

    /// `2 mu R^2 (W - E_th)` at `x = ln(R/r0)`.
    pub fn reduced(&self, x: f64) -> Result<f64> {
        Ok(match *self {
            TailModel::SubcriticalLog { beta, delta } => {
                let q = beta * x + delta;
                -q.signum() * q.abs().sqrt()
            }
            TailModel::PureInverseSquare { coefficient } => -coefficient,
            TailModel::SupercriticalThreshold { alpha_eff2, .. } => -(alpha_eff2 + 0.25),
            TailModel::FermionLog { alpha_eff2, gamma } => {
                if !(x > 0.0) {
                    return Err(Error::OutOfRange {
                        r: x.exp(),
                        lo: 1.0,
                        hi: f64::INFINITY,
                    });
                }
                -(alpha_eff2 + 0.25 + gamma / x)
            }
        })
    }

    /// `W(R)` for regularization length `r0`.
    pub fn potential(&self, r: f64, r0: f64) -> Result<f64> {
        Ok(self.threshold() + self.reduced((r / r0).ln())? / (TWO_MU * r * r))
    }
}

/// Where a source's values come from, for output metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SourceDescriptor {
    Table {
        table_hash: String,
        channel: usize,
        r_lo: f64,
        r_hi: f64,
        /// Monotone cubic in `(ln R, 2 mu R^2 (W - E_th))`.
        interpolation: String,
        tail: Option<TailModel>,
        splice_radius: Option<f64>,
        /// `y` just inside minus `y` just outside the splice.
        splice_jump: Option<f64>,
    },
    Model { tail: TailModel },
}

#[derive(Debug, Clone)]
enum Kind {
    Table {
        interp: Pchip,
        tail: Option<(TailModel, f64)>,
    },
    Model(TailModel),
}

/// An effective potential `W(R)` with an optional hard wall.
#[derive(Debug, Clone)]
pub struct PotentialSource {
    r0: f64,
    threshold: f64,
    wall: Option<f64>,
    kind: Kind,
    descriptor: SourceDescriptor,
}

impl PotentialSource {
    /// An analytic tail on `R > wall`.
    pub fn model(tail: TailModel, r0: f64, wall: Option<f64>) -> Result<Self> {
        if !(r0 > 0.0) {
            return Err(Error::InvalidConfig(format!("r0 = {r0} must be positive")));
        }
        let src = Self {
            r0,
            threshold: tail.threshold(),
            wall,
            kind: Kind::Model(tail),
            descriptor: SourceDescriptor::Model { tail },
        };
        src.check_wall()?;
        Ok(src)
    }

    /// Channel `channel` of `table`, interpolated between samples. Beyond the
    /// last sample the source is undefined unless `tail` is attached; it then
    /// takes over at `splice_radius` (default: the last sample).
    pub fn from_table(
        table: &ChannelTable,
        channel: usize,
        wall: Option<f64>,
        tail: Option<TailModel>,
        splice_radius: Option<f64>,
    ) -> Result<Self> {
        let (r, w) = table.channel_w(channel)?;
        let r0 = table.config().length_unit();
        let threshold = table.meta.threshold.unwrap_or(0.0);
        if let Some(t) = tail {
            if (t.threshold() - threshold).abs() > 1e-9 * threshold.abs().max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidConfig(format!(
                    "tail threshold {} differs from the table threshold {threshold}",
                    t.threshold()
                )));
            }
        }
        let x: Vec<f64> = r.iter().map(|v| (v / r0).ln()).collect();
        let y: Vec<f64> = r.iter().zip(&w).map(|(rv, wv)| TWO_MU * rv * rv * (wv - threshold)).collect();
        let (r_lo, r_hi) = (r[0], *r.last().unwrap());
        let splice = match tail {
            Some(t) => {
                let rs = splice_radius.unwrap_or(r_hi);
                if !(rs > r_lo && rs <= r_hi) {
                    return Err(Error::InvalidConfig(format!(
                        "splice radius {rs} outside the table range [{r_lo}, {r_hi}]"
                    )));
                }
                Some((t, (rs / r0).ln()))
            }
            None => None,
        };
        let interp = Pchip::new(x, y)?;
        let jump = match splice {
            Some((t, xs)) => Some(interp.eval(xs).unwrap() - t.reduced(xs)?),
            None => None,
        };
        let src = Self {
            r0,
            threshold,
            wall,
            kind: Kind::Table { interp, tail: splice },
            descriptor: SourceDescriptor::Table {
                table_hash: table.meta.input_hash.clone(),
                channel,
                r_lo,
                r_hi,
                interpolation: "pchip(ln R, 2 mu R^2 (W - E_th))".into(),
                tail,
                splice_radius: splice.map(|(_, xs)| r0 * xs.exp()),
                splice_jump: jump,
            },
        };
        src.check_wall()?;
        Ok(src)
    }

    fn check_wall(&self) -> Result<()> {
        if let Some(w) = self.wall {
            let (lo, hi) = self.range();
            if !(w >= lo * (1.0 - 1e-12) && w < hi) {
                return Err(Error::OutOfRange { r: w, lo, hi });
            }
        }
        Ok(())
    }

    pub fn descriptor(&self) -> &SourceDescriptor {
        &self.descriptor
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn wall(&self) -> Option<f64> {
        self.wall
    }

    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Radii where the source is defined (before applying the wall).
    pub fn range(&self) -> (f64, f64) {
        match &self.kind {
            Kind::Model(TailModel::FermionLog { .. }) => (self.r0, f64::INFINITY),
            Kind::Model(_) => (0.0, f64::INFINITY),
            Kind::Table { interp, tail } => {
                let (a, b) = interp.range();
                let hi = if tail.is_some() { f64::INFINITY } else { self.r0 * b.exp() };
                (self.r0 * a.exp(), hi)
            }
        }
    }

    /// `2 mu R^2 (W - E_th)` at `x = ln(R/r0)`; errors outside the range.
    pub fn reduced(&self, x: f64) -> Result<f64> {
        match &self.kind {
            Kind::Model(t) => t.reduced(x),
            Kind::Table { interp, tail } => {
                if let Some((t, xs)) = tail {
                    if x > *xs {
                        return t.reduced(x);
                    }
                }
                interp.eval(x).ok_or_else(|| {
                    let (lo, hi) = self.range();
                    Error::OutOfRange {
                        r: self.r0 * x.exp(),
                        lo,
                        hi,
                    }
                })
            }
        }
    }

    /// `W(R)`.
    pub fn evaluate(&self, r: f64) -> Result<f64> {
        Ok(self.threshold + self.reduced((r / self.r0).ln())? / (TWO_MU * r * r))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundOptions {
    /// Relative tolerance on each binding energy.
    pub tol: f64,
    /// Grid step in `ln R`.
    pub step: f64,
    /// Outer end of the grid in `ln(R/r0)` when the source has no upper limit.
    pub x_max: f64,
}

impl Default for BoundOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            step: 0.004,
            x_max: 690.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundState {
    pub n: usize,
    #[serde(rename = "E")]
    pub e: f64,
    /// `E - E_th`; keeps full precision for shallow states below a threshold.
    #[serde(rename = "E_rel")]
    pub e_rel: f64,
    #[serde(rename = "R_mean")]
    pub r_mean: f64,
    pub nodes: usize,
    #[serde(rename = "Rin")]
    pub r_in: f64,
    #[serde(rename = "Rout")]
    pub r_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStateSet {
    pub source: SourceDescriptor,
    pub threshold: f64,
    pub wall: Option<f64>,
    pub options: BoundOptions,
    pub states: Vec<BoundState>,
    /// The grid ran out before `n_max` states were found.
    pub truncated: bool,
}

#[derive(Serialize)]
struct Row {
    n: usize,
    #[serde(rename = "E")]
    e: f64,
    #[serde(rename = "R_mean")]
    r_mean: f64,
    nodes: usize,
    #[serde(rename = "Rin")]
    r_in: f64,
    #[serde(rename = "Rout")]
    r_out: f64,
    truncated: bool,
    #[serde(rename = "E_rel")]
    e_rel: f64,
}

impl BoundStateSet {
    pub fn energies(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.e).collect()
    }

    /// `bound.csv`: `n,E,R_mean,nodes,Rin,Rout,truncated,E_rel`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &self.states {
            w.serialize(Row {
                n: s.n,
                e: s.e,
                r_mean: s.r_mean,
                nodes: s.nodes,
                r_in: s.r_in,
                r_out: s.r_out,
                truncated: self.truncated,
                e_rel: s.e_rel,
            })?;
        }
        if self.states.is_empty() {
            w.write_record(["n", "E", "R_mean", "nodes", "Rin", "Rout", "truncated", "E_rel"])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, &self.to_csv()?)
    }
}

/// Lowest `n_max` bound states of `src`.
pub fn solve_bound_states(src: &PotentialSource, n_max: usize, opts: &BoundOptions) -> Result<BoundStateSet> {
    if n_max == 0 {
        return Err(Error::InvalidConfig("n_max must be at least 1".into()));
    }
    if !(opts.tol > 0.0 && opts.step > 0.0) {
        return Err(Error::InvalidConfig("tolerance and step must be positive".into()));
    }
    let (lo, hi) = src.range();
    let r_in = match (src.wall, &src.kind) {
        (Some(w), _) => w,
        (None, Kind::Table { .. }) => lo,
        (None, Kind::Model(_)) => {
            return Err(Error::InvalidConfig(
                "an analytic tail needs a hard wall to fix its short-range behavior".into(),
            ))
        }
    };
    let r0 = src.r0;
    let x_lo = (r_in / r0).ln();
    let x_hi = if hi.is_finite() { (hi / r0).ln() } else { opts.x_max };
    if !(x_hi > x_lo + 10.0 * opts.step) {
        return Err(Error::InvalidConfig(format!(
            "hyperradial interval [{r_in}, {}] is empty",
            r0 * x_hi.exp()
        )));
    }
    let n = ((x_hi - x_lo) / opts.step).ceil() as usize + 1;
    let h = (x_hi - x_lo) / (n - 1) as f64;
    let a: Vec<f64> = (0..n)
        .map(|i| src.reduced((x_lo + i as f64 * h).min(x_hi)).map(|y| 0.25 + y))
        .collect::<Result<_>>()?;
    let eq = LogEquation::from_samples(a, TWO_MU * r0 * r0, x_lo, h);
    let ladder = eq.ladder(
        n_max,
        &ShootingOptions {
            rel_tol: opts.tol * 0.1,
            ..Default::default()
        },
    )?;
    let states = ladder
        .levels
        .iter()
        .map(|lv| BoundState {
            n: lv.n,
            e: src.threshold - lv.eps,
            e_rel: -lv.eps,
            r_mean: r0 * lv.mean_radius,
            nodes: lv.nodes,
            r_in: r0 * lv.x_inner.exp(),
            r_out: r0 * lv.x_outer.exp(),
        })
        .collect();
    Ok(BoundStateSet {
        source: src.descriptor.clone(),
        threshold: src.threshold,
        wall: src.wall,
        options: *opts,
        states,
        truncated: ladder.truncated,
    })
}
