//! Lowest hyperradial energies over a sweep of pair strengths.

use serde::{Deserialize, Serialize};

use super::{solve_bound_states, BoundOptions, PotentialSource, TailModel};
use crate::analysis::{alpha_eff2, fit_subcritical_tail, fit_threshold_tail};
use crate::error::{Error, Result};
use crate::hyperangular::{channel_table, channel_table_cached, log_grid, ChannelTable, TableOptions};
use crate::io::Cache;
use crate::model::{ModelConfig, TWO_MU};
use crate::twobody::{solve_two_body, RadialDomain, TwoBodyOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Outer table radius (in `r0`) without a dimer.
    pub r_max: f64,
    /// Smallest outer table radius (in `r0`) with a dimer.
    pub r_max_bound: f64,
    /// With a dimer the table ends at this multiple of its mean size: far
    /// enough for the atom–dimer tail, near enough that the angular solver's
    /// dimer energy error, amplified by `2 mu R^2 |E00| ~ (R/<r>)^2 / 2`,
    /// stays small next to `alpha_eff2 + 1/4`. That relative error is round-off
    /// from cancellation inside the dimer and grows with its size: about
    /// 1e-9 for `<r>` ~ 1e2 r0, 1e-5 for `<r>` ~ 3e8 r0.
    pub dimer_extent: f64,
    /// Largest table radius (in `r0`) the angular solver resolves in double
    /// precision; a dimer that needs more is reported as a failed sample.
    pub r_limit: f64,
    pub per_decade: usize,
    /// Decades at the table end used for the tail fit.
    pub tail_decades: f64,
    pub table: TableOptions,
    pub bound: BoundOptions,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self {
            r_max: 1e10,
            r_max_bound: 1e3,
            dimer_extent: 40.0,
            r_limit: 1e13,
            per_decade: 5,
            tail_decades: 1.0,
            table: TableOptions {
                n_channels: 1,
                convergence_check: false,
                ..Default::default()
            },
            bound: BoundOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha2: f64,
    /// Lowest two-body threshold from the radial solver.
    pub e00: Option<f64>,
    pub dimer_radius: Option<f64>,
    /// Threshold the channel table asymptotes to.
    pub table_threshold: Option<f64>,
    pub table_hash: Option<String>,
    pub r_max: f64,
    /// Channel-0 potential at the last table radius.
    pub w_far: Option<f64>,
    pub tail: Option<TailModel>,
    /// Why the fitted tail was replaced by a fallback.
    pub tail_note: Option<String>,
    pub energies: Vec<f64>,
    /// `E - E00` where a dimer exists.
    pub relative: Vec<f64>,
    pub truncated: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub template: ModelConfig,
    pub wall: f64,
    pub n_states: usize,
    pub options: ScanOptions,
    pub rows: Vec<ScanRow>,
}

#[derive(Serialize)]
struct CsvRow {
    alpha2: f64,
    n: usize,
    #[serde(rename = "E")]
    e: f64,
    #[serde(rename = "E_rel")]
    e_rel: Option<f64>,
    #[serde(rename = "E00")]
    e00: Option<f64>,
    truncated: bool,
}

impl ScanResult {
    /// Energy of state `n` at every sample (`None` where absent).
    pub fn state(&self, n: usize) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.energies.get(n).copied()).collect()
    }

    /// `scan.csv`: `alpha2,n,E,E_rel,E00,truncated`.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            for (n, e) in r.energies.iter().enumerate() {
                w.serialize(CsvRow {
                    alpha2: r.alpha2,
                    n,
                    e: *e,
                    e_rel: r.relative.get(n).copied(),
                    e00: r.e00,
                    truncated: r.truncated,
                })?;
            }
        }
        if self.rows.iter().all(|r| r.energies.is_empty()) {
            w.write_record(["alpha2", "n", "E", "E_rel", "E00", "truncated"])?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn to_json(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(self)?;
        v.push(b'\n');
        Ok(v)
    }
}

fn table_for(cfg: &ModelConfig, grid: &[f64], opts: &TableOptions, cache: Option<&Cache>) -> Result<ChannelTable> {
    match cache {
        Some(c) => channel_table_cached(cfg, grid, opts, c),
        None => channel_table(cfg, grid, opts),
    }
}

/// Tail attached beyond the table: the fitted logarithmic form without a
/// dimer, the fitted threshold form with one. Fallbacks keep the scan going
/// and are recorded.
fn tail_for(cfg: &ModelConfig, table: &ChannelTable, e00: Option<f64>, opts: &ScanOptions) -> Result<(TailModel, Option<String>)> {
    let (r, w) = table.channel_w(0)?;
    let r_hi = *r.last().unwrap();
    // Widen to the sample at or below the nominal edge so the window holds
    // the full span on a grid that does not land on it.
    let edge = r_hi / 10f64.powf(opts.tail_decades);
    let lo = r.iter().rev().find(|v| **v <= edge * (1.0 + 1e-12)).copied().unwrap_or(r[0]);
    let window = (lo, r_hi);
    let r0 = cfg.length_unit();
    match e00 {
        Some(e) => match fit_threshold_tail(&r, &w, Some(e), window, r0) {
            Ok(f) => Ok((f.tail_model(), None)),
            Err(err) => Ok((
                TailModel::SupercriticalThreshold {
                    e_th: e,
                    alpha_eff2: alpha_eff2(cfg.alpha2, 0),
                },
                Some(format!("threshold fit failed ({err}); using the closed-form strength")),
            )),
        },
        None => match fit_subcritical_tail(&r, &w, window, r0) {
            Ok(f) => Ok((f.tail_model(), None)),
            Err(err) => {
                let y = TWO_MU * r_hi * r_hi * w.last().unwrap();
                Ok((
                    TailModel::PureInverseSquare { coefficient: -y },
                    Some(format!("logarithmic fit failed ({err}); continuing the last sample as 1/R^2")),
                ))
            }
        },
    }
}

fn scan_one(template: &ModelConfig, alpha2: f64, wall: f64, n_states: usize, opts: &ScanOptions, cache: Option<&Cache>) -> ScanRow {
    let cfg = template.with_alpha2(alpha2);
    let mut row = ScanRow {
        alpha2,
        e00: None,
        dimer_radius: None,
        table_threshold: None,
        table_hash: None,
        r_max: opts.r_max,
        w_far: None,
        tail: None,
        tail_note: None,
        energies: vec![],
        relative: vec![],
        truncated: false,
        error: None,
    };
    let res: Result<()> = (|| {
        cfg.validate()?;
        let r0 = cfg.length_unit();
        if crate::twobody::channel_is_supercritical(&cfg, 0) {
            let lv = solve_two_body(&cfg, 0, 1, RadialDomain::default(), &TwoBodyOptions::default())?;
            let l0 = &lv.levels[0];
            row.e00 = Some(l0.e);
            row.dimer_radius = Some(l0.r_mean);
            row.r_max = (opts.r_max_bound * r0).max(opts.dimer_extent * l0.r_mean);
        } else {
            row.r_max = opts.r_max * r0;
        }
        if row.r_max > opts.r_limit * r0 {
            return Err(Error::Precondition(format!(
                "the dimer (<r> = {:.3e}) needs tables out to R = {:.3e}, beyond the reliable angular range {:.1e}",
                row.dimer_radius.unwrap_or(f64::NAN),
                row.r_max,
                opts.r_limit * r0
            )));
        }
        let grid = log_grid(wall, row.r_max, opts.per_decade)?;
        let table = table_for(&cfg, &grid, &opts.table, cache)?;
        row.table_threshold = table.meta.threshold;
        row.table_hash = Some(table.meta.input_hash.clone());
        row.w_far = table.samples.last().map(|s| s.w[0]);
        let (tail, note) = tail_for(&cfg, &table, table.meta.threshold, opts)?;
        row.tail = Some(tail);
        row.tail_note = note;
        let src = PotentialSource::from_table(&table, 0, Some(wall), Some(tail), None)?;
        let set = solve_bound_states(&src, n_states, &opts.bound)?;
        row.energies = set.energies();
        if let Some(e) = row.e00 {
            row.relative = set.states.iter().map(|s| s.e - e).collect();
        }
        row.truncated = set.truncated;
        Ok(())
    })();
    if let Err(e) = res {
        row.error = Some(e.to_string());
    }
    row
}

/// Lowest `n_states` energies in channel 0 with a hard wall at `wall` for
/// each pair strength in `alpha2`. Failures are recorded per sample.
pub fn spectrum_scan(
    template: &ModelConfig,
    alpha2: &[f64],
    wall: f64,
    n_states: usize,
    opts: &ScanOptions,
    cache: Option<&Cache>,
) -> Result<ScanResult> {
    if n_states == 0 {
        return Err(Error::InvalidConfig("n_states must be at least 1".into()));
    }
    if alpha2.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig("alpha2 list must be strictly ascending".into()));
    }
    if !(wall > 0.0) {
        return Err(Error::InvalidConfig(format!("wall {wall} must be positive")));
    }
    let rows = alpha2.iter().map(|&a| scan_one(template, a, wall, n_states, opts, cache)).collect();
    Ok(ScanResult {
        template: *template,
        wall,
        n_states,
        options: opts.clone(),
        rows,
    })
}

/// Largest adjacent change of each state across the scan, as the relative
/// change of `ln|E_n|` (the spectrum spans tens of decades). Pairs where the
/// state is missing on either side, or a sample failed, are skipped.
pub fn continuity_jumps(scan: &ScanResult) -> Vec<f64> {
    (0..scan.n_states)
        .map(|n| {
            let e = scan.state(n);
            e.windows(2)
                .zip(scan.rows.windows(2))
                .filter(|(_, r)| r[0].error.is_none() && r[1].error.is_none())
                .filter_map(|(w, _)| match (w[0], w[1]) {
                    (Some(a), Some(b)) => {
                        let (la, lb) = (a.abs().ln(), b.abs().ln());
                        Some((lb - la).abs() / la.abs().max(lb.abs()))
                    }
                    _ => None,
                })
                .fold(0.0, f64::max)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperangular::MeshPolicy;
    use crate::model::CutoffForm;

    #[test]
    fn free_endpoint_has_no_states() {
        let opts = ScanOptions {
            r_max: 1e4,
            per_decade: 2,
            table: TableOptions {
                n_channels: 1,
                convergence_check: false,
                dlnr: None,
                policy: MeshPolicy {
                    order: 4,
                    ..Default::default()
                },
                ..Default::default()
            },
            ..Default::default()
        };
        let s = spectrum_scan(&ModelConfig::new(0.0, CutoffForm::Sech2), &[-0.25], 100.0, 4, &opts, None).unwrap();
        assert!(s.rows[0].error.is_none(), "{:?}", s.rows[0].error);
        assert!(s.rows[0].energies.is_empty());
        assert_eq!(continuity_jumps(&s), vec![0.0; 4]);
    }

    #[test]
    fn rejects_unsorted_grid() {
        let c = ModelConfig::new(0.0, CutoffForm::Sech2);
        assert!(spectrum_scan(&c, &[0.1, 0.0], 100.0, 2, &ScanOptions::default(), None).is_err());
    }
}
