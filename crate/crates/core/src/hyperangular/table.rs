//! Channel tables `U_nu(R)`, `Q_nu(R)`, `W_nu(R)` on a hyperradial grid, with
//! channels followed by overlap from one radius to the next.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::correction::{diagonal_correction, DEFAULT_DLNR, MIN_OVERLAP};
use super::mesh::{AngularMesh, MeshDiagnostics, MeshPolicy};
use super::solver::{adiabatic_solve, AdiabaticSolution, FreeOperators, SolveOptions};
use crate::error::{Error, Result};
use crate::io::{content_hash, write_atomic, Cache};
use crate::model::{ModelConfig, TWO_MU};
use crate::twobody::lowest_threshold;

/// Bumped whenever the table contents for fixed inputs would change.
pub const TABLE_SCHEMA: u32 = 1;

pub const CSV_NAME: &str = "channels.csv";
pub const SIDECAR_NAME: &str = "channels.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableOptions {
    pub n_channels: usize,
    pub policy: MeshPolicy,
    /// Half-step in `ln R` for the correction; `None` records `Q = 0`.
    pub dlnr: Option<f64>,
    /// Re-solve on a mesh one spline order lower and record the change.
    pub convergence_check: bool,
    pub eig_tol: f64,
}

impl Default for TableOptions {
    fn default() -> Self {
        Self {
            n_channels: 3,
            policy: MeshPolicy::default(),
            dlnr: Some(DEFAULT_DLNR),
            convergence_check: true,
            eig_tol: 1e-11,
        }
    }
}

/// One hyperradius; vectors are indexed by channel label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSample {
    pub r: f64,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub w: Vec<f64>,
    /// `|U - U_coarse|` per channel, or NaN when not checked.
    pub conv_est: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub r: f64,
    pub mesh: MeshDiagnostics,
    /// Largest Lanczos error estimate over the returned pairs (in `2 mu R^2 U`).
    pub eig_error: f64,
    pub shift: f64,
    /// Smallest tracked overlap with the previous radius (1 at the first).
    pub min_overlap: f64,
    /// Solution index (energy order) carrying each label.
    pub order: Vec<usize>,
    /// Set when some label could not be followed and fell back to energy order.
    pub energy_order_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMeta {
    pub config: ModelConfig,
    pub options: TableOptions,
    pub r_grid: Vec<f64>,
    /// Lowest dimer energy used for shift hints, if bound.
    pub threshold: Option<f64>,
    pub includes_correction: bool,
    pub diagnostics: Vec<SampleDiagnostics>,
    pub input_hash: String,
    pub schema: u32,
    pub software: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTable {
    pub meta: TableMeta,
    pub samples: Vec<ChannelSample>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    #[serde(rename = "R")]
    r: f64,
    nu: usize,
    #[serde(rename = "U")]
    u: f64,
    #[serde(rename = "Q")]
    q: f64,
    #[serde(rename = "W")]
    w: f64,
    conv_est: f64,
}

/// `per_decade` points per decade from `r_min` through `r_max` (both included).
pub fn log_grid(r_min: f64, r_max: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(r_min > 0.0 && r_max >= r_min && per_decade > 0) {
        return Err(Error::InvalidConfig(format!(
            "log grid needs 0 < r_min <= r_max and per_decade > 0 (got {r_min}, {r_max}, {per_decade})"
        )));
    }
    let (a, b) = (r_min.log10(), r_max.log10());
    let n = ((b - a) * per_decade as f64).round() as usize;
    if n == 0 {
        return Ok(vec![r_min]);
    }
    Ok((0..=n)
        .map(|i| match i {
            0 => r_min,
            _ if i == n => r_max,
            _ => 10f64.powf(a + (b - a) * i as f64 / n as f64),
        })
        .collect())
}

/// Hash of everything that determines a table.
pub fn table_hash(cfg: &ModelConfig, r_grid: &[f64], opts: &TableOptions) -> String {
    content_hash(&(TABLE_SCHEMA, cfg, r_grid, opts))
}

impl ChannelTable {
    pub fn config(&self) -> &ModelConfig {
        &self.meta.config
    }

    pub fn n_channels(&self) -> usize {
        self.meta.options.n_channels
    }

    pub fn r_grid(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.r).collect()
    }

    /// Tabulated `[R_first, R_last]`.
    pub fn range(&self) -> (f64, f64) {
        (self.samples[0].r, self.samples.last().unwrap().r)
    }

    /// `(R, W_nu)` pairs for one channel.
    pub fn channel_w(&self, nu: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        if nu >= self.n_channels() {
            return Err(Error::InvalidConfig(format!(
                "channel {nu} not tabulated ({} channels)",
                self.n_channels()
            )));
        }
        Ok(self.samples.iter().map(|s| (s.r, s.w[nu])).unzip())
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for s in &self.samples {
            for nu in 0..s.u.len() {
                w.serialize(Row {
                    r: s.r,
                    nu,
                    u: s.u[nu],
                    q: s.q[nu],
                    w: s.w[nu],
                    conv_est: s.conv_est[nu],
                })?;
            }
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    pub fn sidecar(&self) -> Result<Vec<u8>> {
        let mut v = serde_json::to_vec_pretty(&self.meta)?;
        v.push(b'\n');
        Ok(v)
    }

    /// Writes `channels.csv` and `channels.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join(CSV_NAME), &self.to_csv()?)?;
        write_atomic(&dir.join(SIDECAR_NAME), &self.sidecar()?)
    }

    /// Reads a table written by [`ChannelTable::write`]; the sidecar is looked
    /// up next to the CSV.
    pub fn read(csv_path: &Path) -> Result<Self> {
        let side = csv_path.with_extension("json");
        let meta: TableMeta = serde_json::from_slice(&std::fs::read(&side)?)?;
        let mut rdr = csv::Reader::from_path(csv_path)?;
        let n = meta.options.n_channels;
        let mut samples: Vec<ChannelSample> = Vec::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            if row.nu == 0 {
                samples.push(ChannelSample {
                    r: row.r,
                    u: Vec::with_capacity(n),
                    q: Vec::with_capacity(n),
                    w: Vec::with_capacity(n),
                    conv_est: Vec::with_capacity(n),
                });
            }
            let s = samples
                .last_mut()
                .filter(|s| s.r == row.r && s.u.len() == row.nu)
                .ok_or_else(|| Error::InvalidConfig(format!("malformed channel table row at R={}", row.r)))?;
            s.u.push(row.u);
            s.q.push(row.q);
            s.w.push(row.w);
            s.conv_est.push(row.conv_est);
        }
        if samples.is_empty() || samples.iter().any(|s| s.u.len() != n) {
            return Err(Error::InvalidConfig(format!(
                "{} does not hold {n} channels per radius",
                csv_path.display()
            )));
        }
        Ok(Self { meta, samples })
    }
}

struct Solved {
    center: AdiabaticSolution,
    mesh: AngularMesh,
    q: Vec<f64>,
    coarse: Option<Vec<f64>>,
}

fn solve_one(r: f64, cfg: &ModelConfig, opts: &TableOptions, threshold: Option<f64>) -> Result<Solved> {
    let x = r / cfg.length_unit();
    let mesh = AngularMesh::for_radius(x, cfg, &opts.policy).map_err(|e| e.at_radius(r))?;
    let free = FreeOperators::assemble(&mesh);
    let want = (opts.n_channels + 1).min(mesh.dofs());
    // Deterministic hint that depends on R only: with a dimer the lowest
    // channel follows 2 mu R^2 E_00, far below the free-mesh estimate.
    let hint = threshold.map(|e| TWO_MU * r * r * e - 5.0 - 4.0 * cfg.alpha2.abs());
    let sopts = SolveOptions {
        shift_hint: hint,
        tol: opts.eig_tol,
    };
    let center = adiabatic_solve(r, cfg, &mesh, &free, want, &sopts)?;
    let q = match opts.dlnr {
        Some(d) => diagonal_correction(&center, d, cfg, &mesh, &free, want).map_err(|e| e.at_radius(r))?,
        None => vec![0.0; want],
    };
    let coarse = if opts.convergence_check && opts.policy.order > 3 {
        let policy = MeshPolicy {
            order: opts.policy.order - 1,
            ..opts.policy.clone()
        };
        let cm = AngularMesh::for_radius(x, cfg, &policy).map_err(|e| e.at_radius(r))?;
        let cf = FreeOperators::assemble(&cm);
        let sol = adiabatic_solve(r, cfg, &cm, &cf, want, &SolveOptions {
            shift_hint: Some(center.shift.min(hint.unwrap_or(f64::INFINITY))),
            tol: opts.eig_tol,
        })?;
        Some(sol.u)
    } else {
        None
    };
    Ok(Solved { center, mesh, q, coarse })
}

/// `<a_i | b_j>` for channel functions on two different meshes, integrated
/// with the quadrature of `dst` (the mesh of `b`).
pub(crate) fn cross_overlaps(src: &AngularMesh, a: &[Vec<f64>], dst: &AngularMesh, b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k_s = src.order();
    let k_d = dst.order();
    let (nu_s, nu_d) = (src.n_u(), dst.n_u());
    // u-direction nodes of dst with src basis values there.
    let mut unodes = Vec::new();
    for e in 0..dst.qu.points.len() {
        for (p, &u) in dst.qu.points[e].iter().enumerate() {
            let es = src.u.interval_of(u);
            let mut v = [0.0; 16];
            let mut d = [0.0; 16];
            src.u.eval_on(es, u, &mut v, &mut d);
            unodes.push((e, p, es, v, dst.qu.weights[e][p]));
        }
    }
    let mut o = vec![vec![0.0; b.len()]; a.len()];
    let mut ga = vec![vec![0.0; nu_s]; a.len()];
    let mut gb = vec![vec![0.0; nu_d]; b.len()];
    let mut va = vec![0.0; a.len()];
    for e in 0..dst.qt.points.len() {
        for (p, &t) in dst.qt.points[e].iter().enumerate() {
            let wt = dst.qt.weights[e][p] * (2.0 * t).sin();
            let es = src.t.interval_of(t);
            let mut bs = [0.0; 16];
            let mut d = [0.0; 16];
            src.t.eval_on(es, t, &mut bs, &mut d);
            let bd = &dst.qt.vals[e][p];
            for (c, g) in a.iter().zip(ga.iter_mut()) {
                g.iter_mut().for_each(|x| *x = 0.0);
                for (s, &bv) in bs.iter().enumerate().take(k_s) {
                    for (j, gj) in g.iter_mut().enumerate() {
                        *gj += c[src.index(es + s, j)] * bv;
                    }
                }
            }
            for (c, g) in b.iter().zip(gb.iter_mut()) {
                g.iter_mut().for_each(|x| *x = 0.0);
                for (s, &bv) in bd.iter().enumerate().take(k_d) {
                    for (j, gj) in g.iter_mut().enumerate() {
                        *gj += c[dst.index(e + s, j)] * bv;
                    }
                }
            }
            for &(eu, pu, esu, ref vs, wu) in &unodes {
                let vd = &dst.qu.vals[eu][pu];
                for (i, g) in ga.iter().enumerate() {
                    va[i] = (0..k_s).map(|s| g[esu + s] * vs[s]).sum();
                }
                let w = wt * wu;
                for (j, g) in gb.iter().enumerate() {
                    let vb: f64 = (0..k_d).map(|s| g[eu + s] * vd[s]).sum();
                    for i in 0..a.len() {
                        o[i][j] += w * va[i] * vb;
                    }
                }
            }
        }
    }
    o
}

/// Greedy maximum-overlap assignment of previous labels to new solutions.
/// Returns the solution index per label and whether any label fell back.
fn assign(o: &[Vec<f64>], prev_order: &[usize], n_new: usize) -> (Vec<usize>, f64, bool) {
    let labels = prev_order.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (l, &i) in prev_order.iter().enumerate() {
        for j in 0..n_new {
            pairs.push((o[i][j].abs(), l, j));
        }
    }
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut order = vec![usize::MAX; labels];
    let mut used = vec![false; n_new];
    let mut min_ov = 1.0f64;
    for (ov, l, j) in pairs {
        if ov < MIN_OVERLAP {
            break;
        }
        if order[l] == usize::MAX && !used[j] {
            order[l] = j;
            used[j] = true;
            min_ov = min_ov.min(ov);
        }
    }
    let mut fallback = false;
    for l in 0..labels {
        if order[l] == usize::MAX {
            fallback = true;
            let j = (0..n_new).find(|&j| !used[j]).expect("as many solutions as labels");
            order[l] = j;
            used[j] = true;
            min_ov = min_ov.min(o[prev_order[l]][j].abs());
        }
    }
    (order, min_ov, fallback)
}

/// Builds the table on `r_grid` (ascending). Radii are solved in parallel
/// batches; tracking then walks the batch in grid order, so the result does
/// not depend on the worker count.
pub fn channel_table(cfg: &ModelConfig, r_grid: &[f64], opts: &TableOptions) -> Result<ChannelTable> {
    cfg.validate()?;
    if !cfg.sector.is_solver_supported() {
        return Err(cfg
            .sector
            .unsupported("channel tables are only computed for identical bosons with J = 0, parity +1"));
    }
    if r_grid.is_empty() || r_grid.windows(2).any(|w| !(w[1] > w[0])) || !(r_grid[0] > 0.0) {
        return Err(Error::InvalidConfig("R grid must be positive and strictly ascending".into()));
    }
    if opts.n_channels == 0 {
        return Err(Error::InvalidConfig("n_channels must be at least 1".into()));
    }
    let threshold = lowest_threshold(cfg)?;
    let n = opts.n_channels;
    let batch = rayon::current_num_threads().max(1);
    let mut samples = Vec::with_capacity(r_grid.len());
    let mut diags = Vec::with_capacity(r_grid.len());
    let mut prev: Option<(AngularMesh, Vec<Vec<f64>>, Vec<usize>)> = None;

    for chunk in r_grid.chunks(batch) {
        let solved: Vec<Result<Solved>> = chunk.par_iter().map(|&r| solve_one(r, cfg, opts, threshold)).collect();
        for s in solved {
            let s = s?;
            let r = s.center.r;
            let m = s.center.channels();
            if m < n {
                return Err(Error::InvalidConfig(format!(
                    "mesh at R={r} has only {m} unknowns for {n} channels"
                )));
            }
            let (order, min_overlap, fallback) = match &prev {
                None => ((0..n).collect(), 1.0, false),
                Some((pm, pv, po)) => {
                    let o = cross_overlaps(pm, pv, &s.mesh, &s.center.vectors);
                    assign(&o, po, m)
                }
            };
            let scale = 1.0 / (TWO_MU * r * r);
            let pick = |v: &[f64]| order.iter().map(|&j| v[j]).collect::<Vec<_>>();
            let u = pick(&s.center.u);
            let q = pick(&s.q);
            let w = u.iter().zip(&q).map(|(a, b)| a + b).collect();
            let conv_est = match &s.coarse {
                Some(c) => order.iter().map(|&j| (c[j] - s.center.u[j]).abs()).collect(),
                None => vec![f64::NAN; n],
            };
            diags.push(SampleDiagnostics {
                r,
                mesh: s.center.diagnostics,
                eig_error: s.center.errors.iter().cloned().fold(0.0, f64::max),
                shift: s.center.shift * scale,
                min_overlap,
                order: order.clone(),
                energy_order_fallback: fallback,
            });
            samples.push(ChannelSample { r, u, q, w, conv_est });
            prev = Some((s.mesh, s.center.vectors, order));
        }
    }
    let meta = TableMeta {
        config: cfg.clone(),
        options: opts.clone(),
        r_grid: r_grid.to_vec(),
        threshold,
        includes_correction: opts.dlnr.is_some(),
        diagnostics: diags,
        input_hash: table_hash(cfg, r_grid, opts),
        schema: TABLE_SCHEMA,
        software: env!("CARGO_PKG_VERSION").to_string(),
    };
    Ok(ChannelTable { meta, samples })
}

/// Like [`channel_table`], but served from (and stored into) `cache`.
pub fn channel_table_cached(cfg: &ModelConfig, r_grid: &[f64], opts: &TableOptions, cache: &Cache) -> Result<ChannelTable> {
    let hash = table_hash(cfg, r_grid, opts);
    if let Some(p) = cache.lookup("channels", &hash, CSV_NAME) {
        if cache.lookup("channels", &hash, SIDECAR_NAME).is_some() {
            return ChannelTable::read(&p);
        }
    }
    let t = channel_table(cfg, r_grid, opts)?;
    // Sidecar last: its presence marks a complete entry.
    cache.store("channels", &hash, CSV_NAME, &t.to_csv()?)?;
    cache.store("channels", &hash, SIDECAR_NAME, &t.sidecar()?)?;
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CutoffForm;

    fn quick() -> TableOptions {
        TableOptions {
            n_channels: 2,
            policy: MeshPolicy {
                order: 4,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn log_grid_hits_decades() {
        let g = log_grid(10.0, 1e4, 4).unwrap();
        assert_eq!(g.len(), 13);
        assert_eq!(g[0], 10.0);
        assert_eq!(g[12], 1e4);
        assert!((g[4] - 100.0).abs() < 1e-12);
        assert!(log_grid(10.0, 1.0, 4).is_err());
    }

    #[test]
    fn free_table_is_flat_in_lambda() {
        let cfg = ModelConfig::new(-0.25, CutoffForm::Sech2);
        let g = log_grid(10.0, 100.0, 2).unwrap();
        let t = channel_table(&cfg, &g, &quick()).unwrap();
        for s in &t.samples {
            let lam = TWO_MU * s.r * s.r * s.u[0];
            assert!((lam - 3.75).abs() < 1e-8);
            assert!(s.q[0].abs() < 1e-10);
        }
        assert!(t.meta.diagnostics.iter().all(|d| !d.energy_order_fallback));
    }

    #[test]
    fn tracked_overlaps_are_large_on_a_fine_grid() {
        let cfg = ModelConfig::new(0.0, CutoffForm::Sech2);
        let g = log_grid(20.0, 40.0, 20).unwrap();
        let t = channel_table(&cfg, &g, &quick()).unwrap();
        for d in &t.meta.diagnostics {
            assert!(d.min_overlap > 0.9, "{d:?}");
        }
        for s in &t.samples {
            assert!(s.w[0] >= s.u[0]);
            assert!(s.conv_est[0] < 1e-3 * s.u[0].abs());
        }
    }

    #[test]
    fn self_overlap_is_identity() {
        let cfg = ModelConfig::new(0.0, CutoffForm::Sech2);
        let mesh = AngularMesh::for_radius(30.0, &cfg, &quick().policy).unwrap();
        let free = FreeOperators::assemble(&mesh);
        let sol = adiabatic_solve(30.0, &cfg, &mesh, &free, 3, &SolveOptions::default()).unwrap();
        let o = cross_overlaps(&mesh, &sol.vectors, &mesh, &sol.vectors);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((o[i][j].abs() - want).abs() < 1e-10, "{i}{j}: {}", o[i][j]);
            }
        }
    }

    #[test]
    fn csv_roundtrip_is_exact() {
        let cfg = ModelConfig::new(0.0, CutoffForm::Gaussian);
        let g = log_grid(10.0, 100.0, 1).unwrap();
        let t = channel_table(&cfg, &g, &quick()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        t.write(dir.path()).unwrap();
        let back = ChannelTable::read(&dir.path().join(CSV_NAME)).unwrap();
        assert_eq!(back.meta, t.meta);
        assert_eq!(back.samples.len(), t.samples.len());
        for (a, b) in back.samples.iter().zip(&t.samples) {
            assert_eq!(a.w, b.w);
            assert_eq!(a.u, b.u);
        }
        let cache = Cache::new(dir.path().join("cache"));
        let c1 = channel_table_cached(&cfg, &g, &quick(), &cache).unwrap();
        let c2 = channel_table_cached(&cfg, &g, &quick(), &cache).unwrap();
        assert_eq!(c1.to_csv().unwrap(), c2.to_csv().unwrap());
    }

    #[test]
    fn assignment_follows_overlap() {
        // Labels 0,1 swap character between samples.
        let o = vec![vec![0.1, 0.99, 0.0], vec![0.98, 0.1, 0.0], vec![0.0, 0.0, 1.0]];
        let (order, min_ov, fb) = assign(&o, &[0, 1], 3);
        assert_eq!(order, vec![1, 0]);
        assert!(!fb);
        assert!((min_ov - 0.98).abs() < 1e-15);
        let weak = vec![vec![0.3, 0.3], vec![0.3, 0.3]];
        let (order, _, fb) = assign(&weak, &[0, 1], 2);
        assert!(fb);
        assert_eq!(order, vec![0, 1]);
    }
}
