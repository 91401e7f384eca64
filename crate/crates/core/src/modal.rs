//! Exact sphere engine: ball eigenvalues, the per-order dispersion function
//! of the transmission problem, exterior DtN eigenvalues, the Fabry-Perot
//! shift and resonance refinement.
//!
//! Everything is zonal (azimuthal order 0). On the unit sphere the
//! transmission problem decouples by angular degree `n`, and the resonances
//! of degree `n` are the zeros of
//!
//! `d_n(z) = x j_n'(x) h_n(y) / (rho1 tau) - y j_n(x) h_n'(y) / rho0`,
//! with `x = z / c1`, `y = z / c0`.
//!
//! `d_n` has a pole at the origin, which hides one of the two Minnaert
//! zeros from an argument-principle count. Counting and Newton therefore
//! work with `f_n = rho1 tau d_n / h_n(y)`, which has the same zeros and
//! is analytic near the origin.

use crate::error::{domain, FprError, Result};
use crate::medium::{ball_geometry, minnaert_pair_asymptotic, Medium};
use crate::rootfind::{central_difference, contour_count, ContourSpec};
use crate::specfun::{cdiv, gauss_legendre, sph_h1, sph_j};
use num_complex::Complex64;
use rayon::prelude::*;

/// Neumann eigenpair data of the unit ball for degree `n`, radial index `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeumannMode {
    pub n: usize,
    pub k: usize,
    /// Root of `j_n'`.
    pub mu: f64,
    /// `c1 * mu`.
    pub z0: f64,
    pub degeneracy: usize,
    /// Boundary trace `|gamma e|^2` of the normalised zonal eigenfunction.
    pub gamma_norm_sq: f64,
}

impl NeumannMode {
    fn new(n: usize, k: usize, mu: f64, c1: f64) -> Self {
        let gamma_norm_sq = if mu == 0.0 { 3.0 } else { 2.0 / (1.0 - (n * (n + 1)) as f64 / (mu * mu)) };
        NeumannMode { n, k, mu, z0: c1 * mu, degeneracy: 2 * n + 1, gamma_norm_sq }
    }

    pub fn is_trivial(&self) -> bool {
        self.mu == 0.0
    }

    /// The normalisation of the zonal eigenfunction `N j_n(mu r) P_n`
    /// that makes it unit in `L^2` of the ball (with `Y_n^0`).
    pub fn amplitude(&self) -> f64 {
        if self.is_trivial() {
            return (3.0f64).sqrt();
        }
        let j = sph_j(self.n, Complex64::new(self.mu, 0.0)).unwrap().0.re;
        self.gamma_norm_sq.sqrt() / j.abs()
    }
}

/// First-order Fabry-Perot data for one Neumann mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FPShift {
    pub mode: NeumannMode,
    pub lambda_m: Complex64,
    pub z_predicted: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResonanceKind {
    /// The shifted trivial eigenvalue; `branch` is +1 or -1.
    Minnaert { branch: i8 },
    FabryPerot(NeumannMode),
}

/// A refined zero of the dispersion function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub n: usize,
    pub value: Complex64,
    pub kind: ResonanceKind,
    /// `relative_residual` at `value`.
    pub residual: f64,
    pub seed: Complex64,
    pub predicted: Complex64,
    pub iterations: usize,
}

fn real_j(n: usize, x: f64) -> (f64, f64) {
    let (j, jp) = sph_j(n, Complex64::new(x, 0.0)).unwrap();
    (j.re, jp.re)
}

/// Increasing positive roots of `g` located by a sign-change scan and bisection.
fn bracketed_roots(count: usize, start: f64, g: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let mut roots = Vec::with_capacity(count);
    let step = 0.05;
    let mut a = start;
    let mut ga = g(a);
    while roots.len() < count {
        let b = a + step;
        let gb = g(b);
        if ga == 0.0 {
            roots.push(a);
        } else if ga * gb < 0.0 {
            let (mut lo, mut hi, mut glo) = (a, b, ga);
            let mut it = 0;
            while hi - lo > 4.0 * f64::EPSILON * hi {
                it += 1;
                if it > 200 {
                    return Err(FprError::Convergence { iterations: 200, residual: hi - lo });
                }
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if glo * gm < 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    glo = gm;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        ga = gb;
    }
    Ok(roots)
}

fn check_orders(n_max: usize, k_max: usize) -> Result<()> {
    if n_max > 50 || k_max > 50 {
        return domain(format!("nMax = {n_max}, kMax = {k_max}: both must be at most 50"));
    }
    Ok(())
}

/// The first `k_max` positive roots of `j_n'`.
pub fn neumann_roots_of_order(n: usize, k_max: usize) -> Result<Vec<f64>> {
    let roots = bracketed_roots(k_max, 0.01, |x| real_j(n, x).1)?;
    // one Newton polish with j'' = -2 j'/x - (1 - n(n+1)/x^2) j
    Ok(roots
        .into_iter()
        .map(|x| {
            let (j, jp) = real_j(n, x);
            let jpp = -2.0 * jp / x - (1.0 - (n * (n + 1)) as f64 / (x * x)) * j;
            let dx = jp / jpp;
            if dx.abs() < 1e-12 * x { x - dx } else { x }
        })
        .collect())
}

/// Ball Neumann modes for degrees `0..=n_max`, radial indices `1..=k_max`,
/// plus the trivial mode (0, 0). `c1` sets `z0 = c1 * mu`.
pub fn ball_neumann_roots(n_max: usize, k_max: usize, c1: f64) -> Result<Vec<NeumannMode>> {
    check_orders(n_max, k_max)?;
    let mut out = vec![NeumannMode::new(0, 0, 0.0, c1)];
    for n in 0..=n_max {
        for (i, mu) in neumann_roots_of_order(n, k_max)?.into_iter().enumerate() {
            out.push(NeumannMode::new(n, i + 1, mu, c1));
        }
    }
    Ok(out)
}

/// Roots of `j_n` (interior Dirichlet eigenvalues), indexed `[n][k - 1]`.
pub fn ball_dirichlet_roots(n_max: usize, k_max: usize) -> Result<Vec<Vec<f64>>> {
    check_orders(n_max, k_max)?;
    (0..=n_max)
        .map(|n| {
            let r = bracketed_roots(k_max, 0.01, |x| real_j(n, x).0)?;
            Ok(r.into_iter()
                .map(|x| {
                    let (j, jp) = real_j(n, x);
                    if (j / jp).abs() < 1e-12 * x { x - j / jp } else { x }
                })
                .collect())
        })
        .collect()
}

/// Exterior DtN eigenvalue `kappa h_n'(kappa) / h_n(kappa)` on the unit sphere.
pub fn dtn_eig(n: usize, kappa: Complex64) -> Result<Complex64> {
    if kappa.im == 0.0 && kappa.re != 0.0 {
        // Real argument: write Im via the Wronskian so it survives |h| >> 1.
        let k = kappa.re;
        let p = crate::specfun::sph_jy(n, kappa)?;
        let (j, jp, y, yp) = (p.j.re, p.jp.re, p.y.re, p.yp.re);
        let den = j * j + y * y;
        if den == 0.0 || !den.is_finite() {
            return domain(format!("h_{n}({k}) is not representable"));
        }
        return Ok(Complex64::new(k * (j * jp + y * yp) / den, 1.0 / (k * den)));
    }
    let (h, hp) = sph_h1(n, kappa)?;
    if h.norm() == 0.0 || !h.norm().is_finite() {
        return domain(format!("h_{n}({kappa}) is not representable"));
    }
    Ok(kappa * cdiv(hp, h))
}

fn dispersion_terms(n: usize, z: Complex64, m: &Medium) -> Result<(Complex64, Complex64)> {
    if z.norm() == 0.0 {
        return domain("the dispersion function is singular at z = 0");
    }
    let x = z / m.c1();
    let y = z / m.c0();
    let (j, jp) = sph_j(n, x)?;
    let (h, hp) = sph_h1(n, y)?;
    Ok((x * jp * h / (m.rho1 * m.tau), y * j * hp / m.rho0))
}

/// `d_n(z)`, the sphere transmission determinant for degree `n`.
pub fn dispersion(n: usize, z: Complex64, m: &Medium) -> Result<Complex64> {
    let (a, b) = dispersion_terms(n, z, m)?;
    Ok(a - b)
}

/// `f_n(z) = x j_n'(x) - tau (rho1/rho0) j_n(x) y h_n'(y) / h_n(y)`: the
/// dispersion function divided by `h_n(y) / (rho1 tau)`. Same zeros as
/// `d_n`, no pole at the origin.
pub fn dispersion_regularized(n: usize, z: Complex64, m: &Medium) -> Result<Complex64> {
    if z.norm() == 0.0 {
        return domain("evaluate the regularised dispersion away from z = 0");
    }
    let x = z / m.c1();
    let (j, jp) = sph_j(n, x)?;
    Ok(x * jp - m.coupling() * j * dtn_eig(n, z / m.c0())?)
}

/// `|d_n(z)|` relative to the rounding scale of its terms. Near a
/// Fabry-Perot root `j_n'` is itself O(tau) and comes out of cancellation
/// between O(1) values, so the first term is measured with `|j_n| + |j_n'|`.
pub fn relative_residual(n: usize, z: Complex64, m: &Medium) -> Result<f64> {
    if z.norm() == 0.0 {
        return domain("the dispersion function is singular at z = 0");
    }
    let x = z / m.c1();
    let y = z / m.c0();
    let (j, jp) = sph_j(n, x)?;
    let (h, hp) = sph_h1(n, y)?;
    let a = x * jp * h / (m.rho1 * m.tau);
    let b = y * j * hp / m.rho0;
    let scale = x.norm() * (j.norm() + jp.norm()) * h.norm() / (m.rho1 * m.tau) + b.norm();
    Ok((a - b).norm() / scale)
}

/// First-order Fabry-Perot shift of a nonzero Neumann eigenvalue.
pub fn fp_shift(mode: &NeumannMode, m: &Medium) -> Result<FPShift> {
    if mode.is_trivial() {
        return domain("the trivial mode has no Fabry-Perot shift; use the Minnaert pair");
    }
    let c1 = m.c1();
    let mode = NeumannMode::new(mode.n, mode.k, mode.mu, c1);
    let lambda_m = -mode.gamma_norm_sq * dtn_eig(mode.n, Complex64::new(mode.z0 / m.c0(), 0.0))?;
    let z_predicted = mode.z0 + m.tau * c1 * c1 / (2.0 * mode.z0) * (m.rho1 / m.rho0) * lambda_m;
    Ok(FPShift { mode, lambda_m, z_predicted })
}

#[derive(Debug, Clone, Copy)]
struct Seed {
    value: Complex64,
    kind: ResonanceKind,
}

/// Asymptotic seeds of degree `n` with `|Re| <= reach`.
fn seeds_for_order(n: usize, m: &Medium, reach: f64) -> Result<Vec<Seed>> {
    let mut seeds = Vec::new();
    if n == 0 {
        let (c, v) = ball_geometry(1.0);
        let d = minnaert_pair_asymptotic(m, c, v)?;
        seeds.push(Seed { value: d.z_plus, kind: ResonanceKind::Minnaert { branch: 1 } });
        seeds.push(Seed { value: d.z_minus, kind: ResonanceKind::Minnaert { branch: -1 } });
    }
    let c1 = m.c1();
    let mut k_max = 2;
    loop {
        let roots = neumann_roots_of_order(n, k_max)?;
        if c1 * roots[k_max - 1] > reach || k_max >= 50 {
            for (i, mu) in roots.into_iter().enumerate() {
                let s = fp_shift(&NeumannMode::new(n, i + 1, mu, c1), m)?;
                seeds.push(Seed { value: s.z_predicted, kind: ResonanceKind::FabryPerot(s.mode) });
                // mirror resonance -conj(z)
                seeds.push(Seed { value: -s.z_predicted.conj(), kind: ResonanceKind::FabryPerot(s.mode) });
            }
            return Ok(seeds);
        }
        k_max *= 2;
    }
}

/// Newton refinement of a zero of `d_n` near `seed`.
///
/// The iterate must stay within half the distance from the seed to the
/// nearest other asymptotic seed of the same degree.
pub fn refine_resonance(n: usize, seed: Complex64, m: &Medium, tol: f64) -> Result<Resonance> {
    m.validate()?;
    if tol < 1e-13 {
        return domain(format!("tolerance {tol} below 1e-13"));
    }
    let seeds = seeds_for_order(n, m, 2.0 * seed.norm() + 4.0 * m.c1())?;
    let (own_idx, _) = seeds
        .iter()
        .enumerate()
        .map(|(i, s)| (i, (s.value - seed).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let radius = 0.5
        * seeds
            .iter()
            .enumerate()
            .filter(|(i, s)| *i != own_idx && (s.value - seeds[own_idx].value).norm() > 0.0)
            .map(|(_, s)| (s.value - seed).norm())
            .fold(f64::INFINITY, f64::min);
    let own = seeds[own_idx];
    let f = |z: Complex64| dispersion_regularized(n, z, m).unwrap_or(Complex64::new(f64::NAN, f64::NAN));
    let mut z = seed;
    let mut residual = f64::INFINITY;
    for it in 0..=100 {
        residual = relative_residual(n, z, m)?;
        if residual <= tol {
            let value = z;
            dirichlet_guard(n, value, m)?;
            return Ok(Resonance { n, value, kind: own.kind, residual, seed, predicted: own.value, iterations: it });
        }
        if it == 100 {
            break;
        }
        let h = 1e-6 * z.norm().max(1.0);
        let d = central_difference(&f, z, h);
        let fz = f(z);
        if !(d.norm() > 0.0) || !fz.norm().is_finite() {
            break;
        }
        z -= cdiv(fz, d);
        let dist = (z - seed).norm();
        if !(dist <= radius) {
            return Err(FprError::EscapedRegion { distance: dist, radius });
        }
    }
    Err(FprError::Convergence { iterations: 100, residual })
}

fn dirichlet_guard(n: usize, z: Complex64, m: &Medium) -> Result<()> {
    let x = z.re.abs() / m.c1();
    let k = ((x / std::f64::consts::PI).ceil() as usize + 2).min(50);
    for mu in &ball_dirichlet_roots(n, k)?[n] {
        let d = (z - m.c1() * mu).norm().min((z + m.c1() * mu).norm());
        if d < 1e-3 {
            return Err(FprError::SpuriousFrequency { z, eigenvalue: m.c1() * mu, distance: d });
        }
    }
    Ok(())
}

/// Coarse `|f_n|` minimum on a 40 x 20 grid over a rectangle.
pub fn grid_scan_seed(n: usize, m: &Medium, center: Complex64, half_width: f64, half_height: f64) -> Complex64 {
    let mut best = (f64::INFINITY, center);
    for i in 0..40 {
        for j in 0..20 {
            let z = center
                + Complex64::new(
                    half_width * (2.0 * (i as f64 + 0.5) / 40.0 - 1.0),
                    half_height * (2.0 * (j as f64 + 0.5) / 20.0 - 1.0),
                );
            if let Ok(v) = dispersion_regularized(n, z, m) {
                if v.norm() < best.0 {
                    best = (v.norm(), z);
                }
            }
        }
    }
    best.1
}

/// One row of a resonance table.
#[derive(Debug, Clone, PartialEq)]
pub struct TableEntry {
    pub mode: NeumannMode,
    pub lambda_m: Option<Complex64>,
    pub outcome: std::result::Result<Resonance, FprError>,
    /// Argument-principle count of zeros in the validation disk.
    pub contour_count: Option<i64>,
}

impl TableEntry {
    pub fn sort_key(&self) -> f64 {
        match &self.outcome {
            Ok(r) => r.value.re,
            Err(_) => self.mode.z0,
        }
    }
}

/// Refined resonances for every Neumann mode with `n <= n_max`, `k <= k_max`.
///
/// The trivial mode contributes the Minnaert resonance with positive real
/// part. Each entry is cross-checked by counting zeros in a small disk.
pub fn resonance_table(n_max: usize, k_max: usize, m: &Medium, tol: f64) -> Result<Vec<TableEntry>> {
    m.validate()?;
    let modes = ball_neumann_roots(n_max, k_max, m.c1())?;
    let z0s: Vec<f64> = modes.iter().map(|md| md.z0).collect();
    let mut entries: Vec<TableEntry> = modes
        .par_iter()
        .map(|mode| table_entry(mode, &z0s, m, tol))
        .collect();
    entries.sort_by(|a, b| a.sort_key().total_cmp(&b.sort_key()));
    Ok(entries)
}

fn table_entry(mode: &NeumannMode, z0s: &[f64], m: &Medium, tol: f64) -> TableEntry {
    let n = mode.n;
    if mode.is_trivial() {
        let (c, v) = ball_geometry(1.0);
        let outcome = minnaert_pair_asymptotic(m, c, v).and_then(|d| {
            refine_resonance(0, d.z_plus, m, tol).or_else(|_| {
                let w = d.omega_m;
                let s = grid_scan_seed(0, m, Complex64::new(w, -0.5 * w), 0.5 * w, 0.5 * w);
                refine_resonance(0, s, m, tol)
            })
        });
        let count = outcome.as_ref().ok().and_then(|r| {
            let disk = ContourSpec::circle(r.value, 0.5 * r.value.re);
            contour_count(|z| dispersion_regularized(0, z, m).unwrap(), &disk).ok()
        });
        return TableEntry { mode: *mode, lambda_m: None, outcome, contour_count: count };
    }
    let shift = match fp_shift(mode, m) {
        Ok(s) => s,
        Err(e) => return TableEntry { mode: *mode, lambda_m: None, outcome: Err(e), contour_count: None },
    };
    let outcome = refine_resonance(n, shift.z_predicted, m, tol).or_else(|_| {
        let s = grid_scan_seed(n, m, Complex64::new(mode.z0, -0.1 * mode.z0), 0.2 * mode.z0, 0.1 * mode.z0);
        refine_resonance(n, s, m, tol)
    });
    let gap = z0s
        .iter()
        .map(|&o| (o - mode.z0).abs())
        .filter(|&d| d > 1e-9 * mode.z0)
        .fold(f64::INFINITY, f64::min);
    let factor = if gap < 0.05 * mode.z0 { 0.25 } else { 0.3 };
    let radius = (factor * gap).min(10.0 * (shift.z_predicted - mode.z0).norm());
    let count = outcome.as_ref().ok().and_then(|r| {
        let disk = ContourSpec::circle(r.value, radius);
        contour_count(|z| dispersion_regularized(n, z, m).unwrap(), &disk).ok()
    });
    TableEntry { mode: shift.mode, lambda_m: Some(shift.lambda_m), outcome, contour_count: count }
}

/// Radial quadrature of `j_n(mu)^2 / \int_0^1 j_n(mu r)^2 r^2 dr`.
pub fn gamma_norm_sq_quadrature(mode: &NeumannMode) -> f64 {
    if mode.is_trivial() {
        return 3.0;
    }
    let g = gauss_legendre(64).unwrap();
    let (r, w) = g.mapped(0.0, 1.0);
    let denom: f64 = r.iter().zip(&w).map(|(&r, &w)| w * real_j(mode.n, mode.mu * r).0.powi(2) * r * r).sum();
    real_j(mode.n, mode.mu).0.powi(2) / denom
}
