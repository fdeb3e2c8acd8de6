//! Tensor B-spline meshes on the reduced hyperangular domain, graded toward
//! the two-body coincidence corner.
//!
//! Coordinates are the complementary angles `t = pi/2 - theta` in `[0, pi/2]`
//! and `u = pi/3 - phi` in `[0, pi/3]`; the coincidence corner is `t = u = 0`.
//! Close to it the pair distance is `3^(-1/4) R sqrt((t^2 + u^2) / 2)`, so the
//! region where the regulator acts has angular width about `1.861 r0 / R`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelConfig, PAIR_PREFACTOR};
use crate::numerics::bspline::BSplineBasis;
use crate::numerics::gauss::{gauss_legendre, gauss_on};

/// How a mesh is built for a given hyperradius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshPolicy {
    /// B-spline order (degree + 1).
    pub order: usize,
    /// Uniform intervals across one feature width at the corner.
    pub core_intervals: usize,
    /// Geometric growth of interval lengths away from the core.
    pub growth: f64,
    /// Largest interval length (radians).
    pub max_spacing: f64,
    /// Gauss points per interval and direction.
    pub quad_points: usize,
    /// Corner scale used when the potential has no regulator (radians).
    pub bare_width: f64,
}

impl Default for MeshPolicy {
    fn default() -> Self {
        Self {
            order: 6,
            core_intervals: 8,
            growth: 1.25,
            max_spacing: 0.1,
            quad_points: 9,
            bare_width: 1e-4,
        }
    }
}

/// Minimum node spacings across the coincidence feature.
pub const MIN_NODES_PER_FEATURE: usize = 8;

/// Angular width of the regularized region at reduced hyperradius `x = R / r0`.
pub fn feature_width(x: f64) -> f64 {
    std::f64::consts::SQRT_2 / PAIR_PREFACTOR / x
}

/// Per-direction quadrature with basis values cached at every node.
#[derive(Debug, Clone)]
pub(crate) struct Quad1d {
    /// Per interval: (points, weights, values[p][a], derivatives[p][a]).
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<Vec<f64>>,
    pub vals: Vec<Vec<[f64; 16]>>,
    pub ders: Vec<Vec<[f64; 16]>>,
}

impl Quad1d {
    fn new(b: &BSplineBasis, nq: usize) -> Self {
        let (gx, gw) = gauss_legendre(nq);
        let br = b.breaks();
        let mut q = Quad1d {
            points: vec![],
            weights: vec![],
            vals: vec![],
            ders: vec![],
        };
        for e in 0..b.n_intervals() {
            let mut p = vec![];
            let mut w = vec![];
            let mut v = vec![];
            let mut d = vec![];
            for (x, wt) in gauss_on(br[e], br[e + 1], &gx, &gw) {
                let mut vv = [0.0; 16];
                let mut dd = [0.0; 16];
                b.eval_on(e, x, &mut vv, &mut dd);
                p.push(x);
                w.push(wt);
                v.push(vv);
                d.push(dd);
            }
            q.points.push(p);
            q.weights.push(w);
            q.vals.push(v);
            q.ders.push(d);
        }
        q
    }
}

/// A graded tensor-product mesh with its R-independent matrices.
#[derive(Debug, Clone)]
pub struct AngularMesh {
    pub(crate) t: BSplineBasis,
    pub(crate) u: BSplineBasis,
    pub(crate) qt: Quad1d,
    pub(crate) qu: Quad1d,
    feature: f64,
    policy: MeshPolicy,
}

/// Resolution summary recorded with every solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshDiagnostics {
    pub feature_width: f64,
    pub nodes_across_feature: usize,
    pub t_intervals: usize,
    pub u_intervals: usize,
    pub dofs: usize,
}

/// Breakpoints on `[0, len]`: uniform core of width `w`, geometric growth, then uniform.
pub(crate) fn graded_breaks(len: f64, w: f64, policy: &MeshPolicy) -> Vec<f64> {
    let h_core = w / policy.core_intervals.max(1) as f64;
    if h_core >= policy.max_spacing || w >= len {
        let n = ((len / policy.max_spacing.min(h_core)).ceil() as usize).max(1);
        return (0..=n).map(|i| len * i as f64 / n as f64).collect();
    }
    let mut b = vec![0.0];
    for i in 1..=policy.core_intervals {
        b.push(h_core * i as f64);
    }
    let mut h = h_core;
    let mut x = w;
    loop {
        h = (h * policy.growth).min(policy.max_spacing);
        if x + h >= len - 0.5 * h {
            break;
        }
        x += h;
        b.push(x);
        if h >= policy.max_spacing {
            break;
        }
    }
    // Uniform remainder.
    let rest = len - x;
    let n = ((rest / policy.max_spacing).round() as usize).max(1);
    for i in 1..=n {
        b.push(x + rest * i as f64 / n as f64);
    }
    *b.last_mut().unwrap() = len;
    b
}

impl AngularMesh {
    /// Mesh for reduced hyperradius `x = R / r0` (pure potentials ignore `x`).
    pub fn for_radius(x: f64, cfg: &ModelConfig, policy: &MeshPolicy) -> Result<Self> {
        if policy.order < 2 || policy.order > 12 {
            return Err(Error::InvalidConfig(format!("spline order {} not in 2..=12", policy.order)));
        }
        if !(policy.growth >= 1.0) || !(policy.max_spacing > 0.0) {
            return Err(Error::InvalidConfig("mesh growth must be >= 1 and spacing > 0".into()));
        }
        let w = if cfg.cutoff.is_regularized() {
            feature_width(x)
        } else {
            policy.bare_width
        };
        let t = BSplineBasis::new(policy.order, graded_breaks(FRAC_PI_2, w, policy));
        let u = BSplineBasis::new(policy.order, graded_breaks(FRAC_PI_3, w, policy));
        let mesh = Self {
            qt: Quad1d::new(&t, policy.quad_points),
            qu: Quad1d::new(&u, policy.quad_points),
            t,
            u,
            feature: w,
            policy: policy.clone(),
        };
        let d = mesh.diagnostics();
        if d.nodes_across_feature < MIN_NODES_PER_FEATURE {
            return Err(Error::MeshResolution {
                r: x * cfg.length_unit(),
                width: w,
                nodes: d.nodes_across_feature,
                required: MIN_NODES_PER_FEATURE,
            });
        }
        Ok(mesh)
    }

    pub fn policy(&self) -> &MeshPolicy {
        &self.policy
    }

    pub fn order(&self) -> usize {
        self.t.order()
    }

    pub fn n_t(&self) -> usize {
        self.t.len()
    }

    pub fn n_u(&self) -> usize {
        self.u.len()
    }

    /// Unknowns: all tensor functions except the last `t` row, which collapses
    /// into a single `phi`-independent function at the equilateral pole.
    pub fn dofs(&self) -> usize {
        (self.n_t() - 1) * self.n_u() + 1
    }

    pub fn bandwidth(&self) -> usize {
        let k = self.order() - 1;
        k * self.n_u() + k
    }

    #[inline]
    pub(crate) fn index(&self, i: usize, j: usize) -> usize {
        if i + 1 == self.n_t() {
            self.dofs() - 1
        } else {
            i * self.n_u() + j
        }
    }

    pub fn diagnostics(&self) -> MeshDiagnostics {
        let spacings = |b: &BSplineBasis| b.breaks().iter().filter(|&&v| v > 0.0 && v <= self.feature * (1.0 + 1e-12)).count();
        MeshDiagnostics {
            feature_width: self.feature,
            nodes_across_feature: spacings(&self.t).min(spacings(&self.u)),
            t_intervals: self.t.n_intervals(),
            u_intervals: self.u.n_intervals(),
            dofs: self.dofs(),
        }
    }

    /// 1D Gram-type matrix `int w(x) D^a B_i D^b B_j` on one direction.
    pub(crate) fn gram(q: &Quad1d, n: usize, k: usize, weight: impl Fn(f64) -> f64, da: bool, db: bool) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        for e in 0..q.points.len() {
            for (p, &x) in q.points[e].iter().enumerate() {
                let wt = q.weights[e][p] * weight(x);
                let fa = if da { &q.ders[e][p] } else { &q.vals[e][p] };
                let fb = if db { &q.ders[e][p] } else { &q.vals[e][p] };
                for a in 0..k {
                    for b in 0..k {
                        m[(e + a, e + b)] += wt * fa[a] * fb[b];
                    }
                }
            }
        }
        m
    }

    /// Values of the global basis function coefficients at a point `(t, u)`:
    /// returns `sum_ij c[index(i,j)] B_i(t) C_j(u)`.
    pub fn evaluate(&self, c: &[f64], t: f64, u: f64) -> f64 {
        let k = self.order();
        let (et, eu) = (self.t.interval_of(t), self.u.interval_of(u));
        let mut bt = [0.0; 16];
        let mut bu = [0.0; 16];
        let mut d = [0.0; 16];
        self.t.eval_on(et, t, &mut bt, &mut d);
        self.u.eval_on(eu, u, &mut bu, &mut d);
        let mut s = 0.0;
        for a in 0..k {
            for b in 0..k {
                s += c[self.index(et + a, eu + b)] * bt[a] * bu[b];
            }
        }
        s
    }
}
