//! Subcommand implementations: resolve settings, compute (or fetch from the
//! cache), write products and a run manifest.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use trimerlab::analysis::{
    alpha2_from_mass_ratio, default_window, fit_fermion_tail, fit_parameter_trends, fit_subcritical_tail,
    fit_threshold_tail, mass_ratio_map, predict_spectrum, TailFit, TrendPoint,
};
use trimerlab::hyperangular::table::{table_hash, CSV_NAME, SIDECAR_NAME};
use trimerlab::hyperangular::{channel_table, log_grid, ChannelTable, MeshPolicy, TableOptions};
use trimerlab::hyperradial::{solve_bound_states, spectrum_scan, BoundOptions, PotentialSource, ScanOptions};
use trimerlab::io::{content_hash, write_atomic, Cache};
use trimerlab::model::{CutoffForm, ModelConfig, Statistics, SymmetrySector};
use trimerlab::twobody::{solve_two_body, RadialDomain, TwoBodyOptions};

use crate::settings::{config_error, parse_alpha2_list, ConfigError, Settings};
use crate::{Cli, Command, ModelArgs};

type Files = Vec<(String, Vec<u8>)>;

struct Ctx<'a> {
    cli: &'a Cli,
    settings: Settings,
    cache: Option<Cache>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    input_hash: &'a str,
    inputs: &'a Value,
    outputs: Vec<String>,
    cached: bool,
    wall_clock_s: f64,
    software: &'static str,
}

impl Ctx<'_> {
    /// Serves `names` from the cache entry `kind/hash`, or computes and stores
    /// them; then writes them and a manifest into the output directory.
    fn produce<F: FnOnce() -> Result<Files>>(&self, kind: &str, inputs: &Value, hash: Option<String>, names: &[&str], compute: F) -> Result<bool> {
        let start = Instant::now();
        let hash = hash.unwrap_or_else(|| content_hash(&(kind, inputs, env!("CARGO_PKG_VERSION"))));
        let hit = self.cache.as_ref().and_then(|c| {
            names
                .iter()
                .map(|n| c.lookup(kind, &hash, n).and_then(|p| std::fs::read(p).ok()).map(|b| (n.to_string(), b)))
                .collect::<Option<Files>>()
        });
        let cached = hit.is_some();
        let files = match hit {
            Some(f) => f,
            None => {
                let f = compute()?;
                if let Some(c) = &self.cache {
                    // Written in order; the last name marks a complete entry.
                    for (n, b) in &f {
                        c.store(kind, &hash, n, b)?;
                    }
                }
                f
            }
        };
        let out = &self.cli.out;
        let mut outputs = vec![];
        for (n, b) in &files {
            let p = out.join(n);
            write_atomic(&p, b).with_context(|| format!("writing {}", p.display()))?;
            outputs.push(p.display().to_string());
        }
        let m = Manifest {
            subcommand: self.cli.cmd.name(),
            input_hash: &hash,
            inputs,
            outputs,
            cached,
            wall_clock_s: start.elapsed().as_secs_f64(),
            software: env!("CARGO_PKG_VERSION"),
        };
        let mut mb = serde_json::to_vec_pretty(&m)?;
        mb.push(b'\n');
        write_atomic(&out.join(format!("{}.manifest.json", self.cli.cmd.name())), &mb)?;
        Ok(cached)
    }
}

fn model_config(s: &Settings, m: &ModelArgs) -> Result<ModelConfig> {
    let cutoff: String = s.get(m.cutoff.clone(), "cutoff", "sech2".into())?;
    let cutoff: CutoffForm = cutoff.parse().map_err(|e: trimerlab::Error| config_error(e.to_string()))?;
    let cfg = ModelConfig::new(s.get(m.alpha2, "alpha2", 0.0)?, cutoff).with_r0(s.get(m.r0, "r0", 1.0)?);
    cfg.validate().map_err(|e| config_error(e.to_string()))?;
    Ok(cfg)
}

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn read_fit(path: &Path) -> Result<TailFit> {
    TailFit::from_json(&read(path)?).map_err(|e| config_error(format!("{}: {e}", path.display())))
}

fn suffix(cached: bool) -> &'static str {
    if cached {
        " (cached)"
    } else {
        ""
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let ctx = Ctx {
        cli,
        settings: Settings::load(cli.config.as_deref())?,
        cache: (!cli.no_cache).then(|| cli.cache_dir.clone().map(Cache::new).unwrap_or_else(Cache::from_env)),
    };
    let s = &ctx.settings;
    match &cli.cmd {
        Command::Channels {
            model,
            rmin,
            rmax,
            per_decade,
            nchan,
            order,
            max_spacing,
            statistics,
            j,
            parity,
        } => {
            let stats: String = s.get(statistics.clone(), "statistics", "boson".into())?;
            let statistics = match stats.as_str() {
                "boson" => Statistics::Boson,
                "fermion" => Statistics::Fermion,
                o => bail!(ConfigError(format!("unknown statistics '{o}'"))),
            };
            let sector = SymmetrySector {
                statistics,
                j: s.get(*j, "J", 0)?,
                parity: s.get(*parity, "parity", 1)?,
            };
            let cfg = model_config(s, model)?.with_sector(sector);
            cfg.validate().map_err(|e| config_error(e.to_string()))?;
            let grid = log_grid(s.get(*rmin, "rmin", 10.0)?, s.get(*rmax, "rmax", 1e6)?, s.get(*per_decade, "per-decade", 10)?)
                .map_err(|e| config_error(e.to_string()))?;
            let d = MeshPolicy::default();
            let opts = TableOptions {
                n_channels: s.get(*nchan, "nchan", 3)?,
                policy: MeshPolicy {
                    order: s.get(*order, "order", d.order)?,
                    max_spacing: s.get(*max_spacing, "max-spacing", d.max_spacing)?,
                    ..d
                },
                ..Default::default()
            };
            let inputs = json!({"config": cfg, "grid": grid, "options": opts});
            let hash = table_hash(&cfg, &grid, &opts);
            let mut npts = grid.len();
            let cached = ctx.produce("channels", &inputs, Some(hash), &[CSV_NAME, SIDECAR_NAME], || {
                let t = channel_table(&cfg, &grid, &opts)?;
                npts = t.samples.len();
                Ok(vec![(CSV_NAME.into(), t.to_csv()?), (SIDECAR_NAME.into(), t.sidecar()?)])
            })?;
            println!(
                "channels: {npts} radii x {} channels -> {}{}",
                opts.n_channels,
                cli.out.join(CSV_NAME).display(),
                suffix(cached)
            );
        }
        Command::Twobody { model, l, nlevels, rmax } => {
            let cfg = model_config(s, model)?;
            let l = s.get(*l, "l", 0)?;
            let n = s.get(*nlevels, "nlevels", 1)?;
            let domain = RadialDomain {
                r_max: s.get(*rmax, "rmax", RadialDomain::default().r_max)?,
                ..Default::default()
            };
            let inputs = json!({"config": cfg, "l": l, "nlevels": n, "r_max": domain.r_max});
            let mut summary = String::new();
            let cached = ctx.produce("twobody", &inputs, None, &["twobody.csv"], || {
                let lv = solve_two_body(&cfg, l, n, domain, &TwoBodyOptions::default())?;
                let mut w = csv::Writer::from_writer(vec![]);
                w.write_record(["v", "E", "R_mean", "nodes"])?;
                for x in &lv.levels {
                    w.serialize((x.v, x.e, x.r_mean, x.nodes))?;
                }
                Ok(vec![("twobody.csv".into(), w.into_inner()?)])
            })?;
            if let Ok(text) = std::fs::read_to_string(cli.out.join("twobody.csv")) {
                let levels = text.lines().count().saturating_sub(1);
                let first = text.lines().nth(1).and_then(|r| r.split(',').nth(1)).unwrap_or("none");
                summary = format!("{levels} levels, E0 = {first}");
            }
            println!("twobody: {summary} -> {}{}", cli.out.join("twobody.csv").display(), suffix(cached));
        }
        Command::Bound {
            from,
            channel,
            wall,
            splice_tail,
            splice_radius,
            nmax,
            tol,
        } => {
            let from: Option<std::path::PathBuf> = s.opt(from.clone(), "from")?;
            let tail_path: Option<std::path::PathBuf> = s.opt(splice_tail.clone(), "splice-tail")?;
            let channel = s.get(*channel, "channel", 0)?;
            let wall: f64 = s.get(*wall, "wall", 100.0)?;
            let splice_radius: Option<f64> = s.opt(*splice_radius, "splice-radius")?;
            let nmax = s.get(*nmax, "nmax", 10)?;
            let opts = BoundOptions {
                tol: s.get(*tol, "tol", BoundOptions::default().tol)?,
                ..Default::default()
            };
            let from_bytes = from.as_deref().map(read).transpose()?;
            let tail = tail_path.as_deref().map(read_fit).transpose()?;
            let inputs = json!({
                "from_hash": from_bytes.as_ref().map(|b| content_hash(b)),
                "tail": tail,
                "channel": channel, "wall": wall, "splice_radius": splice_radius,
                "nmax": nmax, "options": opts,
            });
            let mut count = 0;
            let cached = ctx.produce("bound", &inputs, None, &["bound.csv", "bound.json"], || {
                let src = match (&from, &tail) {
                    (Some(p), t) => {
                        let table = ChannelTable::read(p)?;
                        PotentialSource::from_table(&table, channel, Some(wall), t.as_ref().map(|f| f.tail_model()), splice_radius)?
                    }
                    (None, Some(t)) => PotentialSource::model(t.tail_model(), t.r0, Some(wall))?,
                    (None, None) => bail!(ConfigError("bound needs --from and/or --splice-tail".into())),
                };
                let set = solve_bound_states(&src, nmax, &opts)?;
                count = set.states.len();
                let mut j = serde_json::to_vec_pretty(&set)?;
                j.push(b'\n');
                Ok(vec![("bound.csv".into(), set.to_csv()?), ("bound.json".into(), j)])
            })?;
            if cached {
                count = std::fs::read_to_string(cli.out.join("bound.csv"))?.lines().count().saturating_sub(1);
            }
            println!("bound: {count} states -> {}{}", cli.out.join("bound.csv").display(), suffix(cached));
        }
        Command::Fit {
            from,
            channel,
            form,
            rlo,
            rhi,
            points,
        } => {
            let form: String = s.get(form.clone(), "form", "subcritical-log".into())?;
            if form == "trend" {
                let p: std::path::PathBuf = s.require(points.clone(), "points")?;
                let bytes = read(&p)?;
                let inputs = json!({"form": form, "points_hash": content_hash(&bytes)});
                let mut root = None;
                let cached = ctx.produce("trend", &inputs, None, &["trend.json"], || {
                    let pts = read_points(&bytes)?;
                    let t = fit_parameter_trends(&pts)?;
                    root = Some(t.alpha_c2);
                    Ok(vec![("trend.json".into(), t.to_json()?)])
                })?;
                let root = match root {
                    Some(r) => r,
                    None => serde_json::from_slice::<Value>(&read(&cli.out.join("trend.json"))?)?["alpha_c2"].as_f64(),
                };
                match root {
                    Some(r) => println!("fit: alpha_c2 = {r:.6e} -> {}{}", cli.out.join("trend.json").display(), suffix(cached)),
                    None => println!("fit: alpha_c2 undefined (sign conditions fail) -> {}", cli.out.join("trend.json").display()),
                }
                return Ok(());
            }
            let p: std::path::PathBuf = s.require(from.clone(), "from")?;
            let channel = s.get(*channel, "channel", 0)?;
            let rlo: Option<f64> = s.opt(*rlo, "rlo")?;
            let rhi: Option<f64> = s.opt(*rhi, "rhi")?;
            let bytes = read(&p)?;
            let inputs = json!({"form": form, "from_hash": content_hash(&bytes), "channel": channel, "rlo": rlo, "rhi": rhi});
            let mut shown = String::new();
            let cached = ctx.produce("fit", &inputs, None, &["fit.json"], || {
                let table = ChannelTable::read(&p)?;
                let (r, w) = table.channel_w(channel)?;
                let r0 = table.config().length_unit();
                let (dlo, dhi) = default_window(&r, r0);
                let window = (rlo.unwrap_or(dlo), rhi.unwrap_or(dhi));
                let mut fit = match form.as_str() {
                    "subcritical-log" => fit_subcritical_tail(&r, &w, window, r0)?,
                    "supercritical-threshold" => fit_threshold_tail(&r, &w, table.meta.threshold, window, r0)?,
                    "fermion-log" => fit_fermion_tail(&r, &w, window, r0)?,
                    o => bail!(ConfigError(format!("unknown fit form '{o}'"))),
                };
                fit.source_hash = Some(table.meta.input_hash.clone());
                shown = fit.params.iter().map(|(k, v)| format!("{k} = {v:.6e}")).collect::<Vec<_>>().join(", ");
                Ok(vec![("fit.json".into(), fit.to_json()?)])
            })?;
            if cached {
                let f = read_fit(&cli.out.join("fit.json"))?;
                shown = f.params.iter().map(|(k, v)| format!("{k} = {v:.6e}")).collect::<Vec<_>>().join(", ");
            }
            println!("fit: {shown} -> {}{}", cli.out.join("fit.json").display(), suffix(cached));
        }
        Command::Scan {
            model,
            alpha2_list,
            wall,
            nstates,
            per_decade,
            rmax,
        } => {
            let cfg = model_config(s, model)?;
            let list: String = s.get(alpha2_list.clone(), "alpha2-list", "-0.05:0.2:0.01".into())?;
            let a2 = parse_alpha2_list(&list)?;
            let wall = s.get(*wall, "wall", 100.0)?;
            let n = s.get(*nstates, "nstates", 4)?;
            let d = ScanOptions::default();
            let opts = ScanOptions {
                per_decade: s.get(*per_decade, "per-decade", d.per_decade)?,
                r_max: s.get(*rmax, "rmax", d.r_max)?,
                ..d
            };
            let inputs = json!({"template": cfg, "alpha2": a2, "wall": wall, "nstates": n, "options": opts});
            let mut failures = 0;
            let cached = ctx.produce("scan", &inputs, None, &["scan.csv", "scan.json"], || {
                let r = spectrum_scan(&cfg, &a2, wall, n, &opts, ctx.cache.as_ref())?;
                failures = r.rows.iter().filter(|r| r.error.is_some()).count();
                Ok(vec![("scan.csv".into(), r.to_csv()?), ("scan.json".into(), r.to_json()?)])
            })?;
            println!(
                "scan: {} strengths, {failures} failed -> {}{}",
                a2.len(),
                cli.out.join("scan.csv").display(),
                suffix(cached)
            );
        }
        Command::Predict {
            beta,
            rmean0,
            e0,
            nmax,
            fit,
            bound,
        } => {
            let fit_path: Option<std::path::PathBuf> = s.opt(fit.clone(), "fit")?;
            let bound_path: Option<std::path::PathBuf> = s.opt(bound.clone(), "bound")?;
            let fitted = fit_path.as_deref().map(read_fit).transpose()?;
            let r0 = fitted.as_ref().map(|f| f.r0).unwrap_or(1.0);
            let beta = match s.opt(*beta, "beta")? {
                Some(b) => b,
                None => fitted
                    .as_ref()
                    .and_then(|f| f.params.get("beta").copied())
                    .ok_or_else(|| config_error("--beta or a subcritical --fit is required"))?,
            };
            let first = bound_path.as_deref().map(first_state).transpose()?;
            let e0 = match s.opt(*e0, "e0")? {
                Some(e) => e,
                None => first.map(|f| f.0).ok_or_else(|| config_error("--e0 or --bound is required"))?,
            };
            let rmean0 = match s.opt(*rmean0, "rmean0")? {
                Some(r) => r,
                None => first.map(|f| f.1 / r0).ok_or_else(|| config_error("--rmean0 or --bound is required"))?,
            };
            let nmax = s.get(*nmax, "nmax", 20)?;
            let inputs = json!({"beta": beta, "rmean0": rmean0, "e0": e0, "nmax": nmax});
            let cached = ctx.produce("predict", &inputs, None, &["prediction.json"], || {
                Ok(vec![("prediction.json".into(), predict_spectrum(beta, rmean0, e0, nmax)?.to_json()?)])
            })?;
            println!("predict: {nmax} levels -> {}{}", cli.out.join("prediction.json").display(), suffix(cached));
        }
        Command::Massratio { alpha2, ratio } => {
            let alpha2: Option<f64> = s.opt(*alpha2, "alpha2")?;
            let ratio: Option<f64> = s.opt(*ratio, "ratio")?;
            match (alpha2, ratio) {
                (Some(a), None) => println!("m_H/m_L = {:.5} (alpha2 = {a})", mass_ratio_map(a)?),
                (None, Some(k)) => println!("alpha2 = {:.6} (m_H/m_L = {k})", alpha2_from_mass_ratio(k)?),
                _ => bail!(ConfigError("give exactly one of --alpha2 and --ratio".into())),
            }
        }
    }
    Ok(())
}

fn read_points(bytes: &[u8]) -> Result<Vec<TrendPoint>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let mut pts = vec![];
    for rec in rd.records() {
        let rec = rec.map_err(|e| config_error(format!("points: {e}")))?;
        let f = |i: usize| -> Result<f64> {
            match rec.get(i) {
                Some(v) if !v.trim().is_empty() => v.trim().parse().map_err(|_| config_error(format!("points: bad number '{v}'"))),
                _ => Ok(0.0),
            }
        };
        if rec.len() < 3 {
            bail!(ConfigError("points rows need alpha2,beta,delta".into()));
        }
        pts.push(TrendPoint {
            alpha2: f(0)?,
            beta: f(1)?,
            delta: f(2)?,
            beta_sigma: f(3)?,
            delta_sigma: f(4)?,
        });
    }
    Ok(pts)
}

/// `(E, R_mean)` of the first row of a bound.csv.
fn first_state(path: &Path) -> Result<(f64, f64)> {
    let bytes = read(path)?;
    let mut rd = csv::Reader::from_reader(bytes.as_slice());
    let h = rd.headers()?.clone();
    let col = |name: &str| h.iter().position(|c| c == name).ok_or_else(|| config_error(format!("{}: no column {name}", path.display())));
    let (ie, ir) = (col("E")?, col("R_mean")?);
    let rec = rd
        .records()
        .next()
        .ok_or_else(|| config_error(format!("{}: no states", path.display())))??;
    let num = |i: usize| rec[i].parse::<f64>().map_err(|_| config_error(format!("{}: bad number", path.display())));
    Ok((num(ie)?, num(ir)?))
}
