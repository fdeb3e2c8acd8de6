//! Monotone piecewise-cubic Hermite interpolation (Fritsch–Carlson slopes).

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Pchip {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl Pchip {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(Error::InvalidConfig("interpolation needs at least two samples".into()));
        }
        if !x.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidConfig("interpolation abscissae must increase".into()));
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let s: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut d = vec![0.0; n];
        if n == 2 {
            d[0] = s[0];
            d[1] = s[0];
        } else {
            for i in 1..n - 1 {
                if s[i - 1] * s[i] <= 0.0 {
                    d[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    d[i] = (w1 + w2) / (w1 / s[i - 1] + w2 / s[i]);
                }
            }
            d[0] = end_slope(h[0], h[1], s[0], s[1]);
            d[n - 1] = end_slope(h[n - 2], h[n - 3], s[n - 2], s[n - 3]);
        }
        Ok(Self { x, y, d })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.x[0], *self.x.last().unwrap())
    }

    /// Value at `t`; `None` outside the sampled range.
    pub fn eval(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.range();
        if !(t >= lo && t <= hi) {
            return None;
        }
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => i.min(self.x.len() - 2),
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let u = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        Some(h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1])
    }
}

fn end_slope(h0: f64, h1: f64, s0: f64, s1: f64) -> f64 {
    let d = ((2.0 * h0 + h1) * s0 - h0 * s1) / (h0 + h1);
    if d.signum() != s0.signum() {
        0.0
    } else if s0.signum() != s1.signum() && d.abs() > 3.0 * s0.abs() {
        3.0 * s0
    } else {
        d
    }
}
