//! Lowest eigenpairs of a sparse symmetric-definite pencil `H x = lambda M x`
//! by shift-invert Lanczos with full reorthogonalization.
//!
//! The shift is always placed below the lowest wanted eigenvalue and verified
//! by the inertia of `H - sigma M`, so the factorization that drives the
//! iteration is positive definite. Converged pairs are locked and the shift
//! moves up past them, so near-degenerate clusters resolve one at a time.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::banded::{Ldlt, SymBand};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// A value believed to lie below the lowest eigenvalue.
    pub shift_hint: f64,
    /// Relative eigenvalue tolerance (absolute below magnitude 1).
    pub tol: f64,
    /// Krylov dimension per restart.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            shift_hint: 0.0,
            tol: 1e-11,
            krylov_dim: 48,
            max_restarts: 12,
            seed: 0x7a1e_5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    /// `M`-orthonormal eigenvectors.
    pub vectors: Vec<Vec<f64>>,
    /// Estimated absolute eigenvalue error per pair.
    pub errors: Vec<f64>,
    pub shift: f64,
    pub factorizations: usize,
}

struct Shifted {
    sigma: f64,
    fact: Ldlt,
}

/// Factors `H - sigma M`, lowering `sigma` until exactly `below` eigenvalues
/// lie under it.
fn factor_at(h: &SymBand, m: &SymBand, mut sigma: f64, below: usize, floor: f64, count: &mut usize) -> Result<Shifted> {
    let mut step = sigma.abs().max(1.0) * 0.25;
    for _ in 0..200 {
        let mut a = h.clone();
        a.axpy(-sigma, m);
        *count += 1;
        match a.ldlt() {
            Ok(fact) if fact.negative_pivots() == below => return Ok(Shifted { sigma, fact }),
            Ok(fact) if fact.negative_pivots() < below => break,
            _ => {}
        }
        if below > 0 {
            // Never step over the locked eigenvalues: bisect toward the floor.
            sigma = 0.5 * (sigma + floor);
        } else {
            sigma -= step;
            step *= 2.0;
        }
    }
    Err(Error::Convergence(format!(
        "could not place a shift with {below} eigenvalues below it"
    )))
}

fn factor_below(h: &SymBand, m: &SymBand, sigma: f64, count: &mut usize) -> Result<Shifted> {
    factor_at(h, m, sigma, 0, f64::NEG_INFINITY, count)
}

/// Lowest `nev` eigenpairs of `(h, m)`.
///
/// Converged pairs at the bottom are locked and deflated; the shift then
/// moves up between the locked values and the rest, which keeps clusters
/// far above an isolated ground state well separated.
pub fn lowest_eigenpairs(h: &SymBand, m: &SymBand, nev: usize, opts: &EigenOptions) -> Result<EigenPairs> {
    let n = h.dim();
    assert_eq!(m.dim(), n);
    assert!(nev >= 1 && nev <= n);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut nfact = 0;
    let mut shifted = factor_below(h, m, opts.shift_hint, &mut nfact)?;
    let kdim = opts.krylov_dim.max(2 * nev + 8).min(n);

    let mut locked = Locked::default();
    let mut start: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut last = (vec![], vec![]);

    for restart in 0..=opts.max_restarts {
        let need = nev - locked.vals.len();
        let (vals, vecs, errs) = lanczos_pass(&shifted, m, &start, kdim.min(n - locked.vals.len()), need, &mut rng, &locked);
        let ok = |i: usize| errs[i] <= opts.tol * vals[i].abs().max(1.0);
        let mut c = 0;
        while c < need && ok(c) {
            c += 1;
        }
        for i in 0..c {
            locked.push(vals[i], vecs[i].clone(), errs[i], m);
        }
        if locked.vals.len() == nev {
            return Ok(EigenPairs {
                values: locked.vals,
                vectors: locked.vecs,
                errors: locked.errs,
                shift: shifted.sigma,
                factorizations: nfact,
            });
        }
        last = (vals.clone(), errs.clone());
        if restart == opts.max_restarts {
            break;
        }
        let (vals, vecs, errs) = (&vals[c..], &vecs[c..], &errs[c..]);
        let spread = (vals[vals.len() - 1] - vals[0]).abs().max(1e-3 * vals[0].abs().max(1.0));
        let mut target = vals[0] - 0.25 * spread - 10.0 * errs[0];
        if let Some(&top) = locked.vals.last() {
            if target <= top {
                target = 0.5 * (top + vals[0]);
            }
        }
        if target > shifted.sigma + 1e-3 * (vals[0] - shifted.sigma) {
            let floor = locked.vals.last().copied().unwrap_or(f64::NEG_INFINITY);
            if let Ok(s) = factor_at(h, m, target, locked.vals.len(), floor, &mut nfact) {
                shifted = s;
            }
        }
        start = vec![0.0; n];
        for v in vecs {
            for (s, x) in start.iter_mut().zip(v) {
                *s += x;
            }
        }
        for s in start.iter_mut() {
            *s += 1e-3 * (rng.random::<f64>() - 0.5);
        }
    }
    Err(Error::Convergence(format!(
        "Lanczos did not converge: locked {:?}, estimates {:?}, errors {:?}",
        locked.vals, last.0, last.1
    )))
}

#[derive(Default)]
struct Locked {
    vals: Vec<f64>,
    vecs: Vec<Vec<f64>>,
    mvecs: Vec<Vec<f64>>,
    errs: Vec<f64>,
}

impl Locked {
    fn push(&mut self, val: f64, vec: Vec<f64>, err: f64, m: &SymBand) {
        let mut mv = vec![0.0; vec.len()];
        m.matvec(&vec, &mut mv);
        self.vals.push(val);
        self.vecs.push(vec);
        self.mvecs.push(mv);
        self.errs.push(err);
    }

    /// Removes the locked components of `w` (M-orthogonal projection).
    fn deflate(&self, w: &mut [f64]) {
        for (b, mb) in self.vecs.iter().zip(&self.mvecs) {
            let c = dot(w, mb);
            axpy(-c, b, w);
        }
    }
}

#[allow(clippy::type_complexity)]
fn lanczos_pass(
    shifted: &Shifted,
    m: &SymBand,
    start: &[f64],
    kdim: usize,
    nev: usize,
    rng: &mut ChaCha8Rng,
    locked: &Locked,
) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let n = start.len();
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(kdim);
    let mut mbasis: Vec<Vec<f64>> = Vec::with_capacity(kdim);
    let mut alpha = Vec::with_capacity(kdim);
    let mut beta: Vec<f64> = Vec::with_capacity(kdim);

    let mut v = start.to_vec();
    locked.deflate(&mut v);
    let mut mv = vec![0.0; n];
    m.matvec(&v, &mut mv);
    let nrm = dot(&v, &mv).sqrt();
    v.iter_mut().for_each(|x| *x /= nrm);
    mv.iter_mut().for_each(|x| *x /= nrm);

    let reorth = |w: &mut Vec<f64>, basis: &[Vec<f64>], mbasis: &[Vec<f64>]| {
        for _ in 0..2 {
            locked.deflate(w);
            for (b, mb) in basis.iter().zip(mbasis) {
                let c = dot(w, mb);
                axpy(-c, b, w);
            }
        }
    };

    let mut last_beta = 0.0;
    for j in 0..kdim {
        basis.push(v.clone());
        mbasis.push(mv.clone());
        // w = (H - sigma M)^{-1} M v
        let mut w = mv.clone();
        shifted.fact.solve_in_place(&mut w);
        let a = dot(&w, &mbasis[j]);
        alpha.push(a);
        reorth(&mut w, &basis, &mbasis);
        let mut mw = vec![0.0; n];
        m.matvec(&w, &mut mw);
        let bnorm = dot(&w, &mw).max(0.0).sqrt();
        if j + 1 == kdim {
            last_beta = bnorm;
            break;
        }
        if bnorm <= 1e-12 * a.abs().max(f64::MIN_POSITIVE) {
            // Invariant subspace: continue from a fresh direction.
            w = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            reorth(&mut w, &basis, &mbasis);
            m.matvec(&w, &mut mw);
            let nr = dot(&w, &mw).sqrt();
            w.iter_mut().for_each(|x| *x /= nr);
            mw.iter_mut().for_each(|x| *x /= nr);
            beta.push(0.0);
        } else {
            w.iter_mut().for_each(|x| *x /= bnorm);
            mw.iter_mut().for_each(|x| *x /= bnorm);
            beta.push(bnorm);
        }
        v = w;
        mv = mw;
    }

    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut order: Vec<usize> = (0..k).collect();
    // Largest theta <-> lowest lambda above the shift.
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

    let mut vals = Vec::with_capacity(nev);
    let mut vecs = Vec::with_capacity(nev);
    let mut errs = Vec::with_capacity(nev);
    for &idx in order.iter().take(nev) {
        let theta = eig.eigenvalues[idx];
        let s = eig.eigenvectors.column(idx);
        let lam = shifted.sigma + 1.0 / theta;
        let resid = (last_beta * s[k - 1]).abs();
        let err = resid / (theta * theta);
        let mut x = vec![0.0; n];
        for (c, b) in s.iter().zip(&basis) {
            axpy(*c, b, &mut x);
        }
        let mut mx = vec![0.0; n];
        m.matvec(&x, &mut mx);
        let nr = dot(&x, &mx).sqrt();
        x.iter_mut().for_each(|v| *v /= nr);
        vals.push(lam);
        vecs.push(x);
        errs.push(if theta > 0.0 { err } else { f64::INFINITY });
    }
    (vals, vecs, errs)
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn axpy(s: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += s * xi;
    }
}
