//! Bound states of `w''(x) = [a(x) + c eps e^{2x}] w(x)` on a uniform grid in
//! `x = ln r`, with a Dirichlet condition at the start of the grid (or, for
//! a grid that merely truncates a smooth core, the local regular solution).
//!
//! This is the log-domain form of a radial equation `-u'' + (...) u = E u`
//! after `u = r^{1/2} w`: `a` carries the energy-independent part and `eps > 0`
//! is the binding energy in units fixed by `c`. Working in `ln eps` lets a
//! single ladder cover dozens of decades.

use crate::error::{Error, Result};

use super::roots::brent;

const RESCALE: f64 = 1e150;

/// Tabulated `a(x)` on a uniform grid.
#[derive(Debug, Clone)]
pub struct LogEquation {
    x0: f64,
    h: f64,
    a: Vec<f64>,
    c: f64,
    regular: bool,
}

#[derive(Debug, Clone)]
pub struct ShootingOptions {
    /// Absolute tolerance on `ln eps` (i.e. relative tolerance on the energy).
    pub rel_tol: f64,
    /// Required decay depth `int kappa dx` beyond the outer turning point.
    pub depth: f64,
    /// Minimum distance in `x` between the outer turning point and the outer boundary.
    pub margin: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-11,
            depth: 20.0,
            margin: 3f64.ln(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogLevel {
    pub n: usize,
    /// Binding `eps > 0`.
    pub eps: f64,
    /// `<e^x>` in the normalized state (the mean radius).
    pub mean_radius: f64,
    pub nodes: usize,
    pub x_inner: f64,
    pub x_outer: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ladder {
    pub levels: Vec<LogLevel>,
    /// The grid ended before the next level could be bracketed.
    pub truncated: bool,
}

enum Count {
    Nodes(usize),
    Exhausted,
}

/// Domain indices for one energy: outer turning point and outer boundary.
#[derive(Debug, Clone, Copy)]
struct Domain {
    turning: Option<usize>,
    inner: Option<usize>,
    end: usize,
}

impl LogEquation {
    /// Samples `a` on `[x_start, x_end]` with step close to `h`.
    pub fn new<F: Fn(f64) -> f64>(a: F, c: f64, x_start: f64, x_end: f64, h: f64) -> Self {
        assert!(x_end > x_start && h > 0.0 && c > 0.0);
        let n = ((x_end - x_start) / h).ceil() as usize + 1;
        let h = (x_end - x_start) / (n - 1) as f64;
        let a = (0..n).map(|i| a(x_start + i as f64 * h)).collect();
        Self {
            x0: x_start,
            h,
            a,
            c,
            regular: false,
        }
    }

    /// `a` already sampled at `x_start + i h`.
    pub fn from_samples(a: Vec<f64>, c: f64, x_start: f64, h: f64) -> Self {
        assert!(a.len() >= 3 && h > 0.0 && c > 0.0);
        Self {
            x0: x_start,
            h,
            a,
            c,
            regular: false,
        }
    }

    /// Starts from the local regular solution `w ~ e^{kappa x}` instead of
    /// `w(x_start) = 0`; appropriate when `x_start` only truncates a smooth
    /// small-`r` region rather than marking a hard wall.
    pub fn with_regular_start(mut self) -> Self {
        self.regular = true;
        self
    }

    pub fn x_start(&self) -> f64 {
        self.x0
    }

    pub fn x_end(&self) -> f64 {
        self.x(self.a.len() - 1)
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    #[inline]
    fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.h
    }

    /// `a + c eps e^{2x}` at `ln eps = y`, formed in the log domain so that
    /// grids reaching `x ~ 700` do not overflow.
    #[inline]
    fn g(&self, i: usize, y: f64) -> f64 {
        self.a[i] + self.c * (y + 2.0 * self.x(i)).exp()
    }

    /// Log of the largest binding any state can have, `max(-a e^{-2x}) / c`;
    /// `None` if `a >= 0` everywhere.
    pub fn max_log_binding(&self) -> Option<f64> {
        let mut m: Option<f64> = None;
        for i in 0..self.a.len() {
            if self.a[i] < 0.0 {
                let v = (-self.a[i]).ln() - 2.0 * self.x(i);
                m = Some(m.map_or(v, |w: f64| w.max(v)));
            }
        }
        m.map(|v| v - self.c.ln())
    }

    fn domain(&self, y: f64, opts: &ShootingOptions) -> Option<Domain> {
        let n = self.a.len();
        let mut turning = None;
        let mut inner = None;
        let mut i = 0;
        let mut settled = false;
        while i < n {
            let g = self.g(i, y);
            if g < 0.0 {
                turning = Some(i);
                if inner.is_none() {
                    inner = Some(i);
                }
            }
            let grow = self.c * (y + 2.0 * self.x(i)).exp();
            if turning.is_some() && grow > 4.0 * self.a[i].abs().max(1.0) {
                settled = true;
                break;
            }
            i += 1;
        }
        let Some(t) = turning else {
            return Some(Domain {
                turning: None,
                inner: None,
                end: n - 1,
            });
        };
        if !settled {
            return None;
        }
        let mut acc = 0.0;
        let mut j = t;
        while j + 1 < n {
            j += 1;
            acc += self.g(j, y).max(0.0).sqrt() * self.h;
            if acc >= opts.depth && self.x(j) - self.x(t) >= opts.margin {
                return Some(Domain {
                    turning: Some(t),
                    inner,
                    end: j,
                });
            }
        }
        None
    }

    /// Outward Numerov pass over `[0, end]`; returns node count, the final
    /// value normalized by the local amplitude at `mid`, and optionally the
    /// stored solution.
    fn outward(&self, y: f64, end: usize, mid: usize, store: Option<&mut Vec<f64>>) -> (usize, f64) {
        let h2 = self.h * self.h / 12.0;
        let f = |i: usize| 1.0 - h2 * self.g(i, y);
        let mut store = store;
        let (mut w_prev, mut w) = match self.regular {
            true => (1e-10, 1e-10 * (self.g(0, y).max(0.0).sqrt() * self.h).exp()),
            false => (0.0, 1e-10),
        };
        let mut f_prev = f(0);
        let mut f_cur = f(1);
        let mut nodes = 0;
        let mut log_after = 0.0;
        let mut amp = 1.0;
        if let Some(s) = store.as_deref_mut() {
            s.clear();
            s.push(w_prev);
            s.push(w);
        }
        for i in 1..end {
            let f_next = f(i + 1);
            let mut w_next = ((12.0 - 10.0 * f_cur) * w - f_prev * w_prev) / f_next;
            if w_next.abs() > RESCALE {
                w_next /= RESCALE;
                w /= RESCALE;
                if i > mid {
                    log_after += RESCALE.ln();
                } else {
                    amp /= RESCALE;
                }
                if let Some(s) = store.as_deref_mut() {
                    s.iter_mut().for_each(|v| *v /= RESCALE);
                }
            }
            if w_next * w < 0.0 || (w == 0.0 && w_prev * w_next < 0.0) {
                nodes += 1;
            }
            if i + 1 == mid + 1 {
                amp = (w * w + w_next * w_next).sqrt();
            }
            if let Some(s) = store.as_deref_mut() {
                s.push(w_next);
            }
            w_prev = w;
            w = w_next;
            f_prev = f_cur;
            f_cur = f_next;
        }
        // Node at the boundary itself is not interior.
        if w == 0.0 && nodes > 0 {
            nodes -= 1;
        }
        let val = (w / amp) * log_after.exp();
        (nodes, val)
    }

    fn count(&self, y: f64, opts: &ShootingOptions) -> Count {
        match self.domain(y, opts) {
            None => Count::Exhausted,
            Some(Domain { turning: None, .. }) => Count::Nodes(0),
            Some(d) => {
                let (nodes, _) = self.outward(y, d.end, d.turning.unwrap(), None);
                Count::Nodes(nodes)
            }
        }
    }

    /// The lowest `n_max` levels (or fewer if the grid is exhausted first).
    pub fn ladder(&self, n_max: usize, opts: &ShootingOptions) -> Result<Ladder> {
        let Some(y_max) = self.max_log_binding().filter(|_| n_max > 0) else {
            return Ok(Ladder {
                levels: vec![],
                truncated: false,
            });
        };
        // (y, count) samples; count(y) = number of levels deeper than e^y.
        let mut samples: Vec<(f64, usize)> = vec![(y_max + 1e-4, 0)];
        let mut levels = Vec::new();
        for n in 0..n_max {
            let Some((y_lo, y_hi)) = self.bracket(n, &mut samples, opts)? else {
                return Ok(Ladder {
                    levels,
                    truncated: true,
                });
            };
            let level = self.refine(n, y_lo, y_hi, opts)?;
            levels.push(level);
        }
        Ok(Ladder {
            levels,
            truncated: false,
        })
    }

    /// Narrow bracket `(y_lo, y_hi)` with count `n + 1` at `y_lo` and `n` at `y_hi`.
    fn bracket(&self, n: usize, samples: &mut Vec<(f64, usize)>, opts: &ShootingOptions) -> Result<Option<(f64, f64)>> {
        let tight = |s: &[(f64, usize)]| {
            let hi = s.iter().filter(|p| p.1 <= n).map(|p| p.0).fold(f64::INFINITY, f64::min);
            let lo = s.iter().filter(|p| p.1 > n).map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
            (lo, hi)
        };
        let (lo, hi) = tight(samples);
        if lo == f64::NEG_INFINITY {
            let mut step = 1.0;
            let mut y = hi;
            loop {
                y -= step;
                match self.count(y, opts) {
                    Count::Exhausted => return Ok(None),
                    Count::Nodes(c) => {
                        samples.push((y, c));
                        if c > n {
                            break;
                        }
                    }
                }
                step = (step * 1.5).min(8.0);
            }
        }
        let (mut lo, mut hi) = tight(samples);
        let count_at = |y: f64, s: &[(f64, usize)]| s.iter().find(|p| p.0 == y).map(|p| p.1);
        for _ in 0..200 {
            let c_lo = count_at(lo, samples).unwrap();
            let c_hi = count_at(hi, samples).unwrap();
            if c_lo == n + 1 && c_hi == n && hi - lo <= 0.05 {
                return Ok(Some((lo, hi)));
            }
            let mid = 0.5 * (lo + hi);
            match self.count(mid, opts) {
                Count::Exhausted => return Ok(None),
                Count::Nodes(c) => {
                    samples.push((mid, c));
                    if c > n {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
            }
            if hi - lo < 1e-14 * hi.abs().max(1.0) {
                break;
            }
        }
        Err(Error::Convergence(format!(
            "could not isolate level {n}: bracket [{lo}, {hi}] in ln(binding)"
        )))
    }

    fn refine(&self, n: usize, y_lo: f64, y_hi: f64, opts: &ShootingOptions) -> Result<LogLevel> {
        let dom = self
            .domain(y_lo, opts)
            .ok_or_else(|| Error::Convergence(format!("level {n}: domain exhausted during refinement")))?;
        let mid = dom.turning.unwrap_or(dom.end / 2);
        let f = |y: f64| self.outward(y, dom.end, mid, None).1;
        let (f_lo, f_hi) = (f(y_lo), f(y_hi));
        let y = if f_lo * f_hi < 0.0 {
            brent(f, y_lo, y_hi, opts.rel_tol, 200)?
        } else {
            // Fall back to the node count alone.
            let (mut lo, mut hi) = (y_lo, y_hi);
            while hi - lo > opts.rel_tol {
                let m = 0.5 * (lo + hi);
                match self.count(m, opts) {
                    Count::Nodes(c) if c > n => lo = m,
                    Count::Nodes(_) => hi = m,
                    Count::Exhausted => break,
                }
            }
            0.5 * (lo + hi)
        };
        self.level_at(n, y, opts)
    }

    /// Builds the spliced (outward/inward) state at `ln eps = y`.
    fn level_at(&self, n: usize, y: f64, opts: &ShootingOptions) -> Result<LogLevel> {
        let eps = y.exp();
        let dom = self
            .domain(y, opts)
            .ok_or_else(|| Error::Convergence(format!("level {n}: domain exhausted")))?;
        let t = dom
            .turning
            .ok_or_else(|| Error::Convergence(format!("level {n}: no classically allowed region")))?;
        let mut out = Vec::new();
        self.outward(y, t.min(dom.end - 2) + 1, t, Some(&mut out));
        // Matching point: the largest |w| in a short window below the turning point.
        let lo = t.saturating_sub(40).max(1);
        let m = (lo..=t.min(out.len() - 1))
            .max_by(|&a, &b| out[a].abs().partial_cmp(&out[b].abs()).unwrap())
            .unwrap();
        // Inward pass from the Dirichlet outer boundary down to m.
        let h2 = self.h * self.h / 12.0;
        let f = |i: usize| 1.0 - h2 * self.g(i, y);
        let end = dom.end;
        let mut inw = vec![0.0; end + 1];
        inw[end] = 0.0;
        inw[end - 1] = 1e-10;
        let mut i = end - 1;
        while i > m {
            let next = ((12.0 - 10.0 * f(i)) * inw[i] - f(i + 1) * inw[i + 1]) / f(i - 1);
            inw[i - 1] = next;
            if next.abs() > RESCALE {
                for v in inw[i - 1..=end].iter_mut() {
                    *v /= RESCALE;
                }
            }
            i -= 1;
        }
        let scale = out[m] / inw[m];
        let mut w = Vec::with_capacity(end + 1);
        w.extend_from_slice(&out[..=m]);
        w.extend(inw[m + 1..=end].iter().map(|v| v * scale));

        let xt = self.x(t);
        let (mut s2, mut s3) = (0.0, 0.0);
        for (k, v) in w.iter().enumerate() {
            let dx = self.x(k) - xt;
            let wt = if k == 0 || k == end { 0.5 } else { 1.0 };
            let p = wt * v * v * (2.0 * dx).exp();
            s2 += p;
            s3 += p * dx.exp();
        }
        let nodes = w
            .windows(2)
            .skip(1)
            .take(end.saturating_sub(2))
            .filter(|p| p[0] * p[1] < 0.0)
            .count();
        if nodes != n {
            return Err(Error::Convergence(format!(
                "level {n}: converged state has {nodes} nodes (binding {eps:.6e})"
            )));
        }
        Ok(LogLevel {
            n,
            eps,
            mean_radius: xt.exp() * s3 / s2,
            nodes,
            x_inner: self.x(dom.inner.unwrap_or(t)),
            x_outer: xt,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Pure inverse-square well of strength s^2 + 1/4 behind a wall at x = 0:
    /// `w'' = (-s^2 + eps e^{2x}) w`. Levels satisfy `K_{i s}(sqrt(eps)) = 0`,
    /// so successive bindings approach the ratio `e^{-2 pi / s}`.
    #[test]
    fn inverse_square_geometric_ladder() {
        let s: f64 = 1.0;
        let eq = LogEquation::new(|_| -s * s, 1.0, 0.0, 60.0, 0.004);
        let ladder = eq.ladder(6, &ShootingOptions::default()).unwrap();
        assert_eq!(ladder.levels.len(), 6);
        let target = (-2.0 * std::f64::consts::PI / s).exp();
        for p in ladder.levels.windows(2).skip(2) {
            let r = p[1].eps / p[0].eps;
            assert!((r / target - 1.0).abs() < 1e-4, "{r} vs {target}");
            let rr = p[1].mean_radius / p[0].mean_radius;
            assert!((rr / (std::f64::consts::PI / s).exp() - 1.0).abs() < 1e-3);
        }
        for (k, l) in ladder.levels.iter().enumerate() {
            assert_eq!(l.nodes, k);
        }
    }

    /// Repulsive everywhere: no levels.
    #[test]
    fn repulsive_has_no_levels() {
        let eq = LogEquation::new(|_| 1.0, 1.0, 0.0, 10.0, 0.01);
        let ladder = eq.ladder(3, &ShootingOptions::default()).unwrap();
        assert!(ladder.levels.is_empty() && !ladder.truncated);
    }

    /// A grid too short for the requested ladder is reported as truncated.
    #[test]
    fn short_grid_truncates() {
        let eq = LogEquation::new(|_| -1.0, 1.0, 0.0, 12.0, 0.005);
        let ladder = eq.ladder(10, &ShootingOptions::default()).unwrap();
        assert!(ladder.truncated);
        assert!(!ladder.levels.is_empty() && ladder.levels.len() < 10);
    }
}
