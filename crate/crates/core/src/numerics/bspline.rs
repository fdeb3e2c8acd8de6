//! Clamped B-spline bases on arbitrary breakpoint sequences.

use serde::{Deserialize, Serialize};

/// A clamped B-spline basis of order `k` (degree `k - 1`) over strictly
/// increasing breakpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSplineBasis {
    order: usize,
    breaks: Vec<f64>,
    knots: Vec<f64>,
}

impl BSplineBasis {
    pub fn new(order: usize, breaks: Vec<f64>) -> Self {
        assert!(order >= 2, "order must be at least 2");
        assert!(breaks.len() >= 2);
        assert!(breaks.windows(2).all(|w| w[1] > w[0]), "breakpoints must increase");
        let mut knots = Vec::with_capacity(breaks.len() + 2 * (order - 1));
        knots.extend(std::iter::repeat_n(breaks[0], order - 1));
        knots.extend_from_slice(&breaks);
        knots.extend(std::iter::repeat_n(*breaks.last().unwrap(), order - 1));
        Self { order, breaks, knots }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn n_intervals(&self) -> usize {
        self.breaks.len() - 1
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.breaks.len() + self.order - 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the first basis function supported on interval `e`.
    #[inline]
    pub fn first_on_interval(&self, e: usize) -> usize {
        e
    }

    /// Interval containing `x` (clamped to the domain).
    pub fn interval_of(&self, x: f64) -> usize {
        let n = self.n_intervals();
        if x <= self.breaks[0] {
            return 0;
        }
        if x >= self.breaks[n] {
            return n - 1;
        }
        match self.breaks.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 1),
            Err(i) => i - 1,
        }
    }

    /// Values and first derivatives of the `k` basis functions nonzero on
    /// interval `e`, evaluated at `x`. Entry `a` belongs to basis `e + a`.
    pub fn eval_on(&self, e: usize, x: f64, vals: &mut [f64], ders: &mut [f64]) {
        let k = self.order;
        let span = e + k - 1;
        let t = &self.knots;
        // Cox–de Boor triangle for order k-1, then derivative from it.
        let mut n = [0.0f64; 16];
        let mut left = [0.0f64; 16];
        let mut right = [0.0f64; 16];
        assert!(k <= 15);
        n[0] = 1.0;
        let mut lower = [0.0f64; 16];
        for j in 1..k {
            left[j] = x - t[span + 1 - j];
            right[j] = t[span + j] - x;
            let mut saved = 0.0;
            for r in 0..j {
                let denom = right[r + 1] + left[j - r];
                let temp = if denom != 0.0 { n[r] / denom } else { 0.0 };
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
            if j == k - 2 {
                lower[..k - 1].copy_from_slice(&n[..k - 1]);
            }
        }
        if k == 2 {
            lower[0] = 1.0;
        }
        vals[..k].copy_from_slice(&n[..k]);
        // d/dx B_{i,k} = (k-1) [B_{i,k-1}/(t_{i+k-1}-t_i) - B_{i+1,k-1}/(t_{i+k}-t_{i+1})]
        let p = (k - 1) as f64;
        for a in 0..k {
            let i = span + 1 - k + a;
            let mut d = 0.0;
            if a >= 1 {
                let denom = t[i + k - 1] - t[i];
                if denom != 0.0 {
                    d += lower[a - 1] / denom;
                }
            }
            if a < k - 1 {
                let denom = t[i + k] - t[i + 1];
                if denom != 0.0 {
                    d -= lower[a] / denom;
                }
            }
            ders[a] = p * d;
        }
    }

    /// Evaluates a spline with coefficients `c` at `x`.
    pub fn evaluate(&self, c: &[f64], x: f64) -> f64 {
        let e = self.interval_of(x);
        let k = self.order;
        let mut v = [0.0; 16];
        let mut d = [0.0; 16];
        self.eval_on(e, x, &mut v, &mut d);
        (0..k).map(|a| c[e + a] * v[a]).sum()
    }
}
