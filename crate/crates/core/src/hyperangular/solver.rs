//! Fixed-R adiabatic eigenproblem for the bosonic `0+` sector.
//!
//! In units of `hbar^2 / (2 mu R^2)` the adiabatic Hamiltonian is
//! `Lambda^2 + 15/4 + 2 mu R^2 V`, with the grand-angular operator
//! `-(4/sin 2theta) d_theta sin 2theta d_theta - (4/sin^2 theta) d_phi^2`.
//! The Galerkin weak form uses the measure `sin 2theta dtheta dphi`:
//! stiffness `4 sin 2t f_t g_t + 8 tan t f_u g_u` in the complementary angles.

use std::f64::consts::FRAC_PI_3;

use nalgebra::DMatrix;

use super::mesh::{AngularMesh, MeshDiagnostics};
use crate::error::{Error, Result};
use crate::model::{scaled_total_potential, ModelConfig, TWO_MU};
use crate::numerics::banded::SymBand;
use crate::numerics::lanczos::{lowest_eigenpairs, EigenOptions};

/// The `15/4` from the `R^(5/2)` rescaling of the wavefunction.
pub const CENTRIFUGAL_CONSTANT: f64 = 3.75;

/// R-independent matrices of a mesh: `Lambda^2` stiffness and mass.
#[derive(Debug, Clone)]
pub struct FreeOperators {
    pub stiffness: SymBand,
    pub mass: SymBand,
}

/// Eigenpairs at one hyperradius. `lambda = 2 mu R^2 U / hbar^2`.
#[derive(Debug, Clone)]
pub struct AdiabaticSolution {
    pub r: f64,
    pub lambda: Vec<f64>,
    /// Channel potentials `U_nu(R)` in energy units.
    pub u: Vec<f64>,
    /// Coefficients of the channel functions, orthonormal in the mass matrix.
    pub vectors: Vec<Vec<f64>>,
    /// Estimated absolute error of each `lambda`.
    pub errors: Vec<f64>,
    pub shift: f64,
    pub diagnostics: MeshDiagnostics,
}

impl AdiabaticSolution {
    pub fn channels(&self) -> usize {
        self.lambda.len()
    }
}

/// Adds `val` for every ordered pair of local functions to the lower band.
#[inline]
fn add_sym(m: &mut SymBand, a: usize, b: usize, val: f64) {
    if a >= b {
        m.add(a, b, val);
    }
}

impl FreeOperators {
    pub fn assemble(mesh: &AngularMesh) -> Self {
        let k = mesh.order();
        let (nt, nu) = (mesh.n_t(), mesh.n_u());
        let st = AngularMesh::gram(&mesh.qt, nt, k, |t| (2.0 * t).sin(), true, true);
        let mt = AngularMesh::gram(&mesh.qt, nt, k, |t| (2.0 * t).sin(), false, false);
        let tt = AngularMesh::gram(&mesh.qt, nt, k, |t| t.tan(), false, false);
        let su = AngularMesh::gram(&mesh.qu, nu, k, |_| 1.0, true, true);
        let mu = AngularMesh::gram(&mesh.qu, nu, k, |_| 1.0, false, false);
        let n = mesh.dofs();
        let bw = mesh.bandwidth();
        let mut kk = SymBand::zeros(n, bw);
        let mut mm = SymBand::zeros(n, bw);
        let last = nt - 1;
        for i in 0..nt {
            for ip in i.saturating_sub(k - 1)..(i + k).min(nt) {
                let pole_pair = i == last || ip == last;
                for j in 0..nu {
                    for jp in j.saturating_sub(k - 1)..(j + k).min(nu) {
                        let (a, b) = (mesh.index(i, j), mesh.index(ip, jp));
                        if a < b {
                            continue;
                        }
                        let mut kv = 4.0 * st[(i, ip)] * mu[(j, jp)];
                        if !pole_pair {
                            kv += 8.0 * tt[(i, ip)] * su[(j, jp)];
                        }
                        add_sym(&mut kk, a, b, kv);
                        add_sym(&mut mm, a, b, mt[(i, ip)] * mu[(j, jp)]);
                    }
                }
            }
        }
        Self {
            stiffness: kk,
            mass: mm,
        }
    }
}

/// `int sin 2t * 2 mu R^2 V * f g` over the mesh, at reduced hyperradius `x`.
pub fn potential_matrix(mesh: &AngularMesh, x: f64, cfg: &ModelConfig) -> SymBand {
    let k = mesh.order();
    let mut v = SymBand::zeros(mesh.dofs(), mesh.bandwidth());
    if cfg.coupling() == 0.0 {
        return v;
    }
    let qt = &mesh.qt;
    let qu = &mesh.qu;
    let nq_t = qt.points[0].len();
    let nq_u = qu.points[0].len();
    // g[p][b][b'] for the current (et, eu).
    let mut g = vec![0.0; nq_t * k * k];
    let mut local = vec![0.0; k * k * k * k];
    let mut fvals = vec![0.0; nq_u];
    for et in 0..qt.points.len() {
        for eu in 0..qu.points.len() {
            g.iter_mut().for_each(|v| *v = 0.0);
            for p in 0..nq_t {
                let t = qt.points[et][p];
                let s2 = (2.0 * t).sin();
                for (q, fv) in fvals.iter_mut().enumerate() {
                    let u = qu.points[eu][q];
                    *fv = qu.weights[eu][q] * s2 * scaled_total_potential(x, t, u, cfg);
                }
                let gp = &mut g[p * k * k..(p + 1) * k * k];
                for (q, &fv) in fvals.iter().enumerate() {
                    let c = &qu.vals[eu][q];
                    for b in 0..k {
                        let cb = fv * c[b];
                        for bp in 0..=b {
                            gp[b * k + bp] += cb * c[bp];
                        }
                    }
                }
            }
            local.iter_mut().for_each(|v| *v = 0.0);
            for p in 0..nq_t {
                let w = qt.weights[et][p];
                let bt = &qt.vals[et][p];
                let gp = &g[p * k * k..(p + 1) * k * k];
                for a in 0..k {
                    for ap in 0..=a {
                        let s = w * bt[a] * bt[ap];
                        let blk = &mut local[(a * k + ap) * k * k..(a * k + ap + 1) * k * k];
                        for (x, y) in blk.iter_mut().zip(gp) {
                            *x += s * y;
                        }
                    }
                }
            }
            // Scatter every ordered pair, using the symmetry of the local blocks.
            for a in 0..k {
                for ap in 0..k {
                    let (hi, lo) = if a >= ap { (a, ap) } else { (ap, a) };
                    let blk = &local[(hi * k + lo) * k * k..(hi * k + lo + 1) * k * k];
                    for b in 0..k {
                        for bp in 0..k {
                            let val = if b >= bp { blk[b * k + bp] } else { blk[bp * k + b] };
                            let r = mesh.index(et + a, eu + b);
                            let c = mesh.index(et + ap, eu + bp);
                            add_sym(&mut v, r, c, val);
                        }
                    }
                }
            }
        }
    }
    v
}

/// Options for one adiabatic solve.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Value believed to lie below the lowest `lambda`; `None` picks one.
    pub shift_hint: Option<f64>,
    pub tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            shift_hint: None,
            tol: 1e-11,
        }
    }
}

/// Lowest `n_channels` eigenpairs at hyperradius `r`.
pub fn adiabatic_solve(
    r: f64,
    cfg: &ModelConfig,
    mesh: &AngularMesh,
    free: &FreeOperators,
    n_channels: usize,
    opts: &SolveOptions,
) -> Result<AdiabaticSolution> {
    if !cfg.sector.is_solver_supported() {
        return Err(cfg.sector.unsupported(
            "the hyperangular solver handles only identical bosons with J = 0, parity +1",
        ));
    }
    cfg.validate()?;
    if n_channels == 0 {
        return Err(Error::InvalidConfig("n_channels must be at least 1".into()));
    }
    if !(r > 0.0) {
        return Err(Error::InvalidConfig(format!("hyperradius {r} must be positive")));
    }
    let x = r / cfg.length_unit();
    let mut h = potential_matrix(mesh, x, cfg);
    h.axpy(1.0, &free.stiffness);
    h.axpy(CENTRIFUGAL_CONSTANT, &free.mass);
    let hint = opts.shift_hint.unwrap_or_else(|| default_shift(&h, &free.mass, x));
    let nev = n_channels.min(mesh.dofs());
    let eig = lowest_eigenpairs(
        &h,
        &free.mass,
        nev,
        &EigenOptions {
            shift_hint: hint,
            tol: opts.tol,
            krylov_dim: (3 * nev + 24).max(48),
            ..Default::default()
        },
    )
    .map_err(|e| e.at_radius(r))?;
    let scale = 1.0 / (TWO_MU * r * r);
    Ok(AdiabaticSolution {
        r,
        u: eig.values.iter().map(|l| l * scale).collect(),
        lambda: eig.values,
        vectors: eig.vectors,
        errors: eig.errors,
        shift: eig.shift,
        diagnostics: mesh.diagnostics(),
    })
}

/// A shift below the ground state from the Rayleigh quotient of the constant
/// function, lowered by a margin that grows slowly with `R`.
fn default_shift(h: &SymBand, m: &SymBand, x: f64) -> f64 {
    let ones = vec![1.0; h.dim()];
    let q = h.inner(&ones, &ones) / m.inner(&ones, &ones);
    q.min(0.0) - 4.0 - 2.0 * x.max(1.0).ln()
}

/// Dense generalized solve used by small tests and as a cross-check.
pub fn dense_spectrum(h: &SymBand, m: &SymBand) -> Vec<f64> {
    let n = h.dim();
    let hd = DMatrix::from_fn(n, n, |i, j| h.get(i, j));
    let md = DMatrix::from_fn(n, n, |i, j| m.get(i, j));
    let l = md.cholesky().expect("mass matrix is positive definite");
    let linv = l.l().try_inverse().unwrap();
    let c = &linv * hd * linv.transpose();
    let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Area of the reduced domain in the `sin 2theta` measure.
pub const DOMAIN_MEASURE: f64 = FRAC_PI_3;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperangular::mesh::MeshPolicy;
    use crate::model::CutoffForm;

    fn free_case(r: f64) -> AdiabaticSolution {
        let cfg = ModelConfig::new(-0.25, CutoffForm::Sech2);
        let mesh = AngularMesh::for_radius(r, &cfg, &MeshPolicy::default()).unwrap();
        let free = FreeOperators::assemble(&mesh);
        adiabatic_solve(r, &cfg, &mesh, &free, 3, &SolveOptions::default()).unwrap()
    }

    #[test]
    fn free_anchors() {
        for r in [1.0, 100.0] {
            let s = free_case(r);
            assert!((s.lambda[0] - 3.75).abs() < 1e-9, "{:?}", s.lambda);
            assert!((s.lambda[1] - 35.75).abs() < 35.75e-7, "{:?}", s.lambda);
        }
    }

    #[test]
    fn mass_matrix_integrates_measure() {
        let cfg = ModelConfig::new(0.0, CutoffForm::Sech2);
        let mesh = AngularMesh::for_radius(10.0, &cfg, &MeshPolicy::default()).unwrap();
        let free = FreeOperators::assemble(&mesh);
        let ones = vec![1.0; mesh.dofs()];
        // int_0^{pi/2} sin 2t dt * pi/3 = pi/3.
        assert!((free.mass.inner(&ones, &ones) - DOMAIN_MEASURE).abs() < 1e-13);
        let k1 = free.stiffness.inner(&ones, &ones);
        assert!(k1.abs() < 1e-10, "{k1}");
    }

    #[test]
    fn rejects_fermion_sector() {
        let cfg = ModelConfig::new(0.0, CutoffForm::Sech2).with_sector(crate::model::SymmetrySector::FERMION_1_PLUS);
        let mesh = AngularMesh::for_radius(10.0, &cfg, &MeshPolicy::default()).unwrap();
        let free = FreeOperators::assemble(&mesh);
        let e = adiabatic_solve(10.0, &cfg, &mesh, &free, 1, &SolveOptions::default()).unwrap_err();
        assert!(matches!(e, Error::UnsupportedSector { .. }));
    }

    #[test]
    fn lanczos_matches_dense_on_small_mesh() {
        let cfg = ModelConfig::new(0.0, CutoffForm::Sech2);
        let policy = MeshPolicy {
            order: 4,
            max_spacing: 0.3,
            growth: 1.6,
            ..Default::default()
        };
        let r = 5.0;
        let mesh = AngularMesh::for_radius(r, &cfg, &policy).unwrap();
        let free = FreeOperators::assemble(&mesh);
        let s = adiabatic_solve(r, &cfg, &mesh, &free, 3, &SolveOptions::default()).unwrap();
        let mut h = potential_matrix(&mesh, r, &cfg);
        h.axpy(1.0, &free.stiffness);
        h.axpy(CENTRIFUGAL_CONSTANT, &free.mass);
        let ev = dense_spectrum(&h, &free.mass);
        for k in 0..3 {
            assert!((s.lambda[k] - ev[k]).abs() < 1e-8 * ev[k].abs().max(1.0), "{} vs {}", s.lambda[k], ev[k]);
        }
    }
}
