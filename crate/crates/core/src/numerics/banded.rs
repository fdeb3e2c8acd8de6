//! Symmetric banded matrices and their `L D L^T` factorization.
//!
//! Storage is column-major lower band: column `j` holds `A[j..=j+b][j]`
//! contiguously, so both the factorization update and the solves walk
//! contiguous memory.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i - j <= self.bw);
        j * (self.bw + 1) + (i - j)
    }

    /// Entry `(i, j)`; zero outside the band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to `(i, j)` (and implicitly `(j, i)`). Panics outside the band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i},{j}) outside bandwidth {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// `self + s * other`, same shape.
    pub fn axpy(&mut self, s: f64, other: &SymBand) {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bw, other.bw);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> SymBand {
        SymBand {
            n: self.n,
            bw: self.bw,
            data: self.data.iter().map(|x| s * x).collect(),
        }
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        y.iter_mut().for_each(|v| *v = 0.0);
        let w = self.bw + 1;
        for j in 0..self.n {
            let col = &self.data[j * w..(j + 1) * w];
            let xj = x[j];
            y[j] += col[0] * xj;
            let top = (self.n - 1 - j).min(self.bw);
            let mut acc = 0.0;
            for d in 1..=top {
                let a = col[d];
                y[j + d] += a * xj;
                acc += a * x[j + d];
            }
            y[j] += acc;
        }
    }

    /// `x^T A y`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut tmp = vec![0.0; self.n];
        self.matvec(y, &mut tmp);
        x.iter().zip(&tmp).map(|(a, b)| a * b).sum()
    }

    /// Unpivoted `L D L^T` factorization. Succeeds for indefinite matrices as
    /// long as no pivot vanishes; the count of negative pivots is the number
    /// of negative eigenvalues (Sylvester inertia).
    pub fn ldlt(&self) -> Result<Ldlt> {
        let n = self.n;
        let bw = self.bw;
        let w = bw + 1;
        let mut a = self.data.clone();
        let mut negatives = 0;
        let mut tmp = vec![0.0; w];
        for j in 0..n {
            let d = a[j * w];
            if d == 0.0 || !d.is_finite() {
                return Err(Error::Singular(format!(
                    "zero pivot at row {j} in banded LDL^T"
                )));
            }
            if d < 0.0 {
                negatives += 1;
            }
            let top = (n - 1 - j).min(bw);
            // tmp[d] = A[j+d][j] (unscaled), then L[j+d][j] = tmp/d.
            tmp[..=top].copy_from_slice(&a[j * w..j * w + top + 1]);
            let inv = 1.0 / d;
            for dd in 1..=top {
                a[j * w + dd] = tmp[dd] * inv;
            }
            // Trailing update A[j+p][j+q] -= tmp[p] * tmp[q] / d for 1 <= q <= p <= top.
            for q in 1..=top {
                let lq = tmp[q] * inv;
                if lq == 0.0 {
                    continue;
                }
                let col = (j + q) * w;
                let dst = &mut a[col..col + (top - q) + 1];
                for (p, x) in dst.iter_mut().enumerate() {
                    *x -= lq * tmp[q + p];
                }
            }
        }
        Ok(Ldlt {
            n,
            bw,
            data: a,
            negatives,
        })
    }
}

/// Packed `L D L^T` factors: column `j` stores `D[j]` then the subdiagonal of `L`.
#[derive(Debug, Clone)]
pub struct Ldlt {
    n: usize,
    bw: usize,
    data: Vec<f64>,
    negatives: usize,
}

impl Ldlt {
    /// Number of negative pivots (eigenvalues of the factored matrix below zero).
    pub fn negative_pivots(&self) -> usize {
        self.negatives
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let n = self.n;
        let w = self.bw + 1;
        // L y = b
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                let top = (n - 1 - j).min(self.bw);
                let col = &self.data[j * w..j * w + top + 1];
                for d in 1..=top {
                    x[j + d] -= col[d] * xj;
                }
            }
        }
        // D z = y
        for j in 0..n {
            x[j] /= self.data[j * w];
        }
        // L^T x = z
        for j in (0..n).rev() {
            let top = (n - 1 - j).min(self.bw);
            let col = &self.data[j * w..j * w + top + 1];
            let mut acc = 0.0;
            for d in 1..=top {
                acc += col[d] * x[j + d];
            }
            x[j] -= acc;
        }
    }
}
