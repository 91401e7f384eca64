//! Time-harmonic fields of the spherical resonator: modal scattering
//! solves, far fields, the resonance-dominated predictions near a
//! Fabry-Perot frequency (bulk and microresonator scalings), and the radial
//! resolvent with its enhancement scan.
//!
//! Incidence is along `+z`, so every field is zonal: `sum_n f_n(r) P_n(cos theta)`.

use crate::error::{domain, FprError, Result};
use crate::medium::Medium;
use crate::modal::{fp_shift, NeumannMode};
use crate::specfun::{cdiv, gauss_legendre, legendre_seq, sph_h1_seq, sph_j_seq, seq_derivative};
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

type V3 = [f64; 3];

fn i_pow(n: usize) -> Complex64 {
    [Complex64::new(1.0, 0.0), I, Complex64::new(-1.0, 0.0), -I][n % 4]
}

/// `j_n, j_n'` for `n = 0..=nmax`, including `z = 0`.
fn j_table(nmax: usize, z: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if z.norm() == 0.0 {
        let j = (0..=nmax).map(|n| if n == 0 { Complex64::new(1.0, 0.0) } else { ZERO }).collect();
        let jp = (0..=nmax).map(|n| if n == 1 { Complex64::new(1.0 / 3.0, 0.0) } else { ZERO }).collect();
        return Ok((j, jp));
    }
    let mut j = sph_j_seq(nmax + 1, z)?;
    let jp = seq_derivative(&j, z);
    j.pop();
    Ok((j, jp))
}

fn h_table(nmax: usize, z: Complex64) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    if z.norm() == 0.0 {
        return domain("h_n is singular at the origin");
    }
    let mut h = sph_h1_seq(nmax + 1, z)?;
    let hp = seq_derivative(&h, z);
    h.pop();
    Ok((h, hp))
}

fn spherical(x: &V3) -> (f64, f64) {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let ct = if r > 0.0 { (x[2] / r).clamp(-1.0, 1.0) } else { 1.0 };
    (r, ct)
}

/// Smallest order past which `|a_n j_n(2 kappa / c0)|` stays below 1e-14 of
/// its maximum, plus 4.
pub fn auto_n_max(kappa: f64, m: &Medium) -> Result<usize> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return domain(format!("frequency {kappa} must be positive"));
    }
    let x = Complex64::new(2.0 * kappa / m.c0(), 0.0);
    let nlim = 190;
    let j = sph_j_seq(nlim, x)?;
    let mags: Vec<f64> = j.iter().enumerate().map(|(n, v)| (2 * n + 1) as f64 * v.norm()).collect();
    let peak = mags.iter().cloned().fold(0.0, f64::max);
    for n in 0..nlim {
        if mags[n..].iter().all(|&v| v < 1e-14 * peak) {
            return Ok(n + 4);
        }
    }
    domain(format!("frequency {kappa} needs more than {nlim} modes"))
}

/// Zonal plane-wave coefficients `a_n = i^n (2n + 1)`.
pub fn plane_wave_coeffs(n_max: usize) -> Vec<Complex64> {
    (0..=n_max).map(|n| i_pow(n) * (2 * n + 1) as f64).collect()
}

/// Outgoing zonal expansion `sum_n coeffs[n] h_n(k0 r) P_n(cos theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExteriorWave {
    pub k0: Complex64,
    pub coeffs: Vec<Complex64>,
}

impl ExteriorWave {
    pub fn eval_polar(&self, r: f64, ct: f64) -> Result<Complex64> {
        let nmax = self.coeffs.len() - 1;
        let h = sph_h1_seq(nmax, self.k0 * r)?;
        let p = legendre_seq(nmax, ct)?;
        Ok((0..=nmax).map(|n| self.coeffs[n] * h[n] * p[n]).sum())
    }

    pub fn eval(&self, x: &V3) -> Result<Complex64> {
        let (r, ct) = spherical(x);
        self.eval_polar(r, ct)
    }

    /// Far-field amplitude at polar angle `theta`.
    pub fn far_field_at(&self, theta: f64) -> Result<Complex64> {
        let nmax = self.coeffs.len() - 1;
        let p = legendre_seq(nmax, theta.cos())?;
        let s: Complex64 = (0..=nmax).map(|n| self.coeffs[n] * i_pow(3 * (n + 1)) * p[n]).sum();
        Ok(s * 4.0 * PI / self.k0)
    }

    pub fn far_field(&self, thetas: &[f64]) -> Result<FarFieldPattern> {
        let values = thetas.iter().map(|&t| self.far_field_at(t)).collect::<Result<_>>()?;
        Ok(FarFieldPattern { theta: thetas.to_vec(), values })
    }
}

/// Far-field amplitudes on polar angles, normalised so that
/// `u_sc ~ e^{i k0 r} / (4 pi r) * value`.
#[derive(Debug, Clone, PartialEq)]
pub struct FarFieldPattern {
    pub theta: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl FarFieldPattern {
    /// `max |value| / min |value|` over the grid.
    pub fn anisotropy(&self) -> f64 {
        let a: Vec<f64> = self.values.iter().map(|v| v.norm()).collect();
        a.iter().cloned().fold(0.0, f64::max) / a.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// `n + 1` polar angles evenly spaced on `[0, pi]`.
pub fn polar_grid(n: usize) -> Vec<f64> {
    (0..=n).map(|i| PI * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModalScatterSolution {
    pub kappa: f64,
    pub n_max: usize,
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
    pub c: Vec<Complex64>,
    pub medium: Medium,
}

impl ModalScatterSolution {
    pub fn k0(&self) -> f64 {
        self.kappa / self.medium.c0()
    }

    pub fn k1(&self) -> f64 {
        self.kappa / self.medium.c1()
    }

    pub fn scattered(&self) -> ExteriorWave {
        ExteriorWave { k0: Complex64::new(self.k0(), 0.0), coeffs: self.c.clone() }
    }

    /// Relative residuals of continuity and flux at `r = 1`, per degree.
    pub fn interface_residuals(&self) -> Result<Vec<(f64, f64)>> {
        let m = &self.medium;
        let (k0, k1) = (Complex64::new(self.k0(), 0.0), Complex64::new(self.k1(), 0.0));
        let (j0, j0p) = j_table(self.n_max, k0)?;
        let (h0, h0p) = h_table(self.n_max, k0)?;
        let (j1, j1p) = j_table(self.n_max, k1)?;
        Ok((0..=self.n_max)
            .map(|n| {
                let (a, b, c) = (self.a[n], self.b[n], self.c[n]);
                let cont = (a * j0[n] + c * h0[n] - b * j1[n]).norm() / (a.norm() + b.norm() + c.norm());
                let out = k0 / m.rho0 * (a * j0p[n] + c * h0p[n]);
                let inn = k1 / (m.rho1 * m.tau) * b * j1p[n];
                let scale = (k0 / m.rho0).norm() * (a.norm() + c.norm()) + (k1 / (m.rho1 * m.tau)).norm() * b.norm();
                (cont, (out - inn).norm() / scale)
            })
            .collect())
    }

    /// `(4 pi / k0^2) sum |c_n|^2 / (2n + 1)`.
    pub fn scattering_cross_section(&self) -> f64 {
        let k0 = self.k0();
        4.0 * PI / (k0 * k0) * self.c.iter().enumerate().map(|(n, c)| c.norm_sqr() / (2 * n + 1) as f64).sum::<f64>()
    }

    /// Total field: interior series inside, plane wave plus scattered series outside.
    pub fn eval_field(&self, points: &[V3]) -> Result<Vec<Complex64>> {
        let k1 = Complex64::new(self.k1(), 0.0);
        let sc = self.scattered();
        points
            .iter()
            .map(|x| {
                let (r, ct) = spherical(x);
                if (r - 1.0).abs() <= 1e-9 {
                    return Err(FprError::OnBoundary);
                }
                if r < 1.0 {
                    let (j, _) = j_table(self.n_max, k1 * r)?;
                    let p = legendre_seq(self.n_max, ct)?;
                    Ok((0..=self.n_max).map(|n| self.b[n] * j[n] * p[n]).sum())
                } else {
                    Ok((I * self.k0() * x[2]).exp() + sc.eval_polar(r, ct)?)
                }
            })
            .collect()
    }
}

/// Per-degree 2x2 transmission solves for a unit plane wave along `+z`.
pub fn solve_scattering(m: &Medium, kappa: f64, n_max: Option<usize>) -> Result<ModalScatterSolution> {
    m.validate()?;
    let n_max = match n_max {
        Some(n) => n,
        None => auto_n_max(kappa, m)?,
    };
    if !(kappa > 0.0) {
        return domain(format!("frequency {kappa} must be positive"));
    }
    let a = plane_wave_coeffs(n_max);
    let (k0, k1) = (Complex64::new(kappa / m.c0(), 0.0), Complex64::new(kappa / m.c1(), 0.0));
    let (j0, j0p) = j_table(n_max, k0)?;
    let (h0, h0p) = h_table(n_max, k0)?;
    let (j1, j1p) = j_table(n_max, k1)?;
    let (w0, w1) = (k0 / m.rho0, k1 / (m.rho1 * m.tau));
    let mut b = Vec::with_capacity(n_max + 1);
    let mut c = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        // -b j1 + c h0 = -a j0 ;  -w1 b j1' + w0 c h0' = -w0 a j0'
        let t1 = w1 * j1p[n] * h0[n];
        let t2 = w0 * j1[n] * h0p[n];
        let det = t1 - t2;
        if det.norm() < 1e-14 * (t1.norm() + t2.norm()) {
            return Err(FprError::NearSingular { kappa: k0 * m.c0(), resonance: k0 * m.c0(), distance: det.norm() });
        }
        b.push(cdiv(a[n] * w0 * (h0[n] * j0p[n] - j0[n] * h0p[n]), det));
        c.push(cdiv(a[n] * (w0 * j1[n] * j0p[n] - w1 * j1p[n] * j0[n]), det));
    }
    Ok(ModalScatterSolution { kappa, n_max, a, b, c, medium: *m })
}

pub fn far_field(sol: &ModalScatterSolution, thetas: &[f64]) -> Result<FarFieldPattern> {
    sol.scattered().far_field(thetas)
}

/// Outgoing solution with Dirichlet data `sum psi_n P_n` on the unit sphere.
pub fn exterior_dirichlet_wave(psi: &[Complex64], kappa: f64, c0: f64) -> Result<ExteriorWave> {
    if !(kappa > 0.0) || psi.is_empty() {
        return domain("exterior Dirichlet data needs kappa > 0 and at least one coefficient");
    }
    let k0 = Complex64::new(kappa / c0, 0.0);
    let (h, _) = h_table(psi.len() - 1, k0)?;
    Ok(ExteriorWave { k0, coeffs: psi.iter().zip(&h).map(|(p, h)| cdiv(*p, *h)).collect() })
}

/// Far field of [`exterior_dirichlet_wave`].
pub fn exterior_dirichlet_farfield(psi: &[Complex64], kappa: f64, c0: f64, thetas: &[f64]) -> Result<FarFieldPattern> {
    exterior_dirichlet_wave(psi, kappa, c0)?.far_field(thetas)
}

/// Discrete L2 norm on the shell `1.1 < r < 2` (32 x 32 Gauss-Legendre
/// tensor grid in `r` and `cos theta`, axisymmetric).
pub fn annulus_norm(f: impl Fn(f64, f64) -> Result<Complex64>) -> Result<f64> {
    let rule = gauss_legendre(32)?;
    let (rs, wr) = rule.mapped(1.1, 2.0);
    let mut s = 0.0;
    for (r, w) in rs.iter().zip(&wr) {
        for (ct, wc) in rule.nodes.iter().zip(&rule.weights) {
            s += f(*r, *ct)?.norm_sqr() * r * r * w * wc;
        }
    }
    Ok((2.0 * PI * s).sqrt())
}

/// Resonance-dominated scattering near one Fabry-Perot mode.
#[derive(Debug, Clone, PartialEq)]
pub struct FPScatterPrediction {
    /// Amplitude of the normalised eigenfunction in the interior field.
    pub e_tot_coeff: Complex64,
    /// Driving inner product `-(rho1 tau / rho0) <d_nu u_in - D_N u_in, e>`.
    pub b_tot: Complex64,
    /// `2 (kappa - z0) z0 / c1^2 - tau (rho1/rho0) lambda_M`.
    pub denominator: Complex64,
    pub lambda_m: Complex64,
    /// Predicted boundary data of the scattered field on `P_m`.
    pub boundary: Vec<Complex64>,
    pub predicted: ExteriorWave,
}

/// Boundary data, amplitudes and denominator of the resonant prediction
/// with the resonance evaluated at exterior wavenumber `k0`.
fn resonant_boundary(
    m: &Medium,
    kappa: f64,
    mode: &NeumannMode,
    k0: f64,
    n_max: usize,
) -> Result<(Vec<Complex64>, Complex64, Complex64, Complex64, Complex64)> {
    let shift = fp_shift(mode, m)?;
    let mode = shift.mode;
    let n = mode.n;
    let n_max = n_max.max(n + 2);
    let a = plane_wave_coeffs(n_max);
    let kc = Complex64::new(k0, 0.0);
    let (j, _) = j_table(n_max, kc)?;
    let (h, _) = h_table(n_max, kc)?;
    let c1 = m.c1();
    let den = 2.0 * (kappa - mode.z0) * mode.z0 / (c1 * c1) - m.coupling() * shift.lambda_m;
    let g = mode.gamma_norm_sq;
    let trace = m.coupling() * I * a[n] * g / (k0 * h[n] * den);
    let mut psi: Vec<Complex64> = (0..=n_max).map(|k| -a[k] * j[k]).collect();
    psi[n] += trace;
    // b_tot with e = A j_n(mu r) Y_n^0, |gamma e|^2 = g
    let amp_trace = g.sqrt() * crate::specfun::sph_j(n, Complex64::new(mode.mu, 0.0))?.0.re.signum();
    let y_to_p = (4.0 * PI / (2 * n + 1) as f64).sqrt();
    let b_tot = m.coupling() * I * a[n] / (k0 * h[n]) * y_to_p * amp_trace;
    Ok((psi, b_tot / den, b_tot, den, shift.lambda_m))
}

pub fn fp_scatter_prediction(m: &Medium, kappa: f64, mode: &NeumannMode) -> Result<FPScatterPrediction> {
    m.validate()?;
    if mode.is_trivial() {
        return Err(FprError::OutOfWindow("the trivial mode has no Fabry-Perot prediction".into()));
    }
    let z0 = m.c1() * mode.mu;
    if !((kappa - z0).abs() <= 0.1 * z0) {
        return Err(FprError::OutOfWindow(format!("kappa = {kappa} is outside |kappa - z0| <= 0.1 z0 (z0 = {z0})")));
    }
    let n_max = auto_n_max(kappa, m)?;
    let (psi, e_tot_coeff, b_tot, denominator, lambda_m) = resonant_boundary(m, kappa, mode, kappa / m.c0(), n_max)?;
    let predicted = exterior_dirichlet_wave(&psi, kappa, m.c0())?;
    Ok(FPScatterPrediction { e_tot_coeff, b_tot, denominator, lambda_m, boundary: psi, predicted })
}

/// Leading term of the field scattered by a resonator of radius `epsilon`
/// centred at `y0`, driven at frequency `omega` close to `z0 / epsilon`.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroPrediction {
    pub values: Vec<Complex64>,
    /// Exponent with `|epsilon omega - z0| = epsilon^alpha`.
    pub alpha: f64,
    /// Far-field factor `S^{inf,D}(gamma e_tot - gamma u_in)` at the resonance.
    pub far_field: ExteriorWave,
}

pub fn micro_scatter_prediction(
    m: &Medium,
    epsilon: f64,
    omega: f64,
    mode: &NeumannMode,
    y0: V3,
    xs: &[V3],
) -> Result<MicroPrediction> {
    m.validate()?;
    if !(epsilon > 0.0 && epsilon <= 0.1) {
        return Err(FprError::OutOfWindow(format!("epsilon = {epsilon} must lie in (0, 0.1]")));
    }
    if mode.is_trivial() {
        return Err(FprError::OutOfWindow("the trivial mode has no Fabry-Perot prediction".into()));
    }
    let z0 = m.c1() * mode.mu;
    let kappa = epsilon * omega;
    let gap = (kappa - z0).abs();
    if !(gap < 1.0) || gap == 0.0 {
        return Err(FprError::OutOfWindow(format!("|epsilon omega - z0| = {gap} gives no positive alpha")));
    }
    let alpha = gap.ln() / epsilon.ln();
    let k0 = z0 / m.c0();
    let n_max = auto_n_max(z0, m)?;
    let (psi, ..) = resonant_boundary(m, kappa, mode, k0, n_max)?;
    let far = exterior_dirichlet_wave(&psi, z0, m.c0())?;
    let incident = (I * (z0 / epsilon) * y0[2] / m.c0()).exp();
    let values = xs
        .iter()
        .map(|x| {
            let d = [x[0] - y0[0], x[1] - y0[1], x[2] - y0[2]];
            let (r, ct) = spherical(&d);
            if r <= epsilon {
                return Err(FprError::OutOfWindow("evaluation point inside the resonator".into()));
            }
            Ok(epsilon * (I * z0 * r / (epsilon * m.c0())).exp() / (4.0 * PI * r) * incident * far.far_field_at(ct.acos())?)
        })
        .collect::<Result<_>>()?;
    Ok(MicroPrediction { values, alpha, far_field: far })
}

/// Exact scattered field of the radius-`epsilon` resonator at `y0`, from the
/// unit-sphere solve at `epsilon omega` (the sphere problem is scale covariant).
pub fn micro_exact(m: &Medium, epsilon: f64, omega: f64, y0: V3, xs: &[V3]) -> Result<Vec<Complex64>> {
    let sol = solve_scattering(m, epsilon * omega, None)?;
    let sc = sol.scattered();
    let incident = (I * omega * y0[2] / m.c0()).exp();
    xs.iter()
        .map(|x| {
            let d = [(x[0] - y0[0]) / epsilon, (x[1] - y0[1]) / epsilon, (x[2] - y0[2]) / epsilon];
            let (r, _) = spherical(&d);
            if r <= 1.0 {
                return Err(FprError::OutOfWindow("evaluation point inside the resonator".into()));
            }
            Ok(incident * sc.eval(&d)?)
        })
        .collect()
}

/// Source `g(r) P_n(cos theta)` with `g` piecewise constant on shells.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSource {
    pub n: usize,
    /// `(r_inner, r_outer, value)`.
    pub shells: Vec<(f64, f64, Complex64)>,
}

impl RadialSource {
    pub fn shell(n: usize, r_inner: f64, r_outer: f64, value: Complex64) -> Result<Self> {
        if !(r_inner >= 0.0 && r_outer > r_inner && r_outer.is_finite()) {
            return domain(format!("shell ({r_inner}, {r_outer}) is not a valid radial interval"));
        }
        Ok(RadialSource { n, shells: vec![(r_inner, r_outer, value)] })
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        RadialSource { n: self.n, shells: self.shells.iter().map(|&(a, b, v)| (a, b, v * s)).collect() }
    }

    pub fn profile(&self, r: f64) -> Complex64 {
        self.shells.iter().filter(|(a, b, _)| r > *a && r < *b).map(|s| s.2).sum()
    }
}

/// Radial solution of `(H - kappa^2) u = f` for one zonal degree.
#[derive(Debug, Clone)]
pub struct ResolventSolution {
    pub kappa: Complex64,
    pub medium: Medium,
    pub source: RadialSource,
    /// Homogeneous amplitudes on `j_n(k1 r)` inside and `h_n(k0 r)` outside.
    pub interior: Complex64,
    pub exterior: Complex64,
}

/// `\int_a^b f(k s) g s^2 ds` over the source restricted to `[lo, hi]`.
fn shell_integral(
    src: &RadialSource,
    lo: f64,
    hi: f64,
    k: Complex64,
    c2: f64,
    f: &dyn Fn(Complex64) -> Result<Complex64>,
) -> Result<Complex64> {
    let rule = gauss_legendre(24)?;
    let mut total = ZERO;
    for &(a, b, v) in &src.shells {
        let (a, b) = (a.max(lo), b.min(hi));
        if b <= a {
            continue;
        }
        let pieces = 4;
        for p in 0..pieces {
            let (pa, pb) = (a + (b - a) * p as f64 / pieces as f64, a + (b - a) * (p + 1) as f64 / pieces as f64);
            let (xs, ws) = rule.mapped(pa, pb);
            for (s, w) in xs.iter().zip(&ws) {
                total += f(k * *s)? * (v / c2) * s * s * *w;
            }
        }
    }
    Ok(total)
}

fn jn(n: usize) -> impl Fn(Complex64) -> Result<Complex64> {
    move |z| {
        if n == 0 && z.norm() > 1e-3 {
            return Ok(z.sin() / z);
        }
        Ok(j_table(n, z)?.0[n])
    }
}

fn hn(n: usize) -> impl Fn(Complex64) -> Result<Complex64> {
    move |z| {
        if n == 0 && z.norm() > 0.0 {
            return Ok(-I * (I * z).exp() / z);
        }
        Ok(h_table(n, z)?.0[n])
    }
}

impl ResolventSolution {
    fn k0(&self) -> Complex64 {
        self.kappa / self.medium.c0()
    }

    fn k1(&self) -> Complex64 {
        self.kappa / self.medium.c1()
    }

    /// Regional particular solution (free-space Green's function of the
    /// region's wavenumber applied to the part of the source inside it).
    fn particular(&self, r: f64) -> Result<Complex64> {
        let n = self.source.n;
        let (k, lo, hi, c) = if r < 1.0 {
            (self.k1(), 0.0, 1.0, self.medium.c1())
        } else {
            (self.k0(), 1.0, f64::INFINITY, self.medium.c0())
        };
        let c2 = c * c;
        let lower = shell_integral(&self.source, lo, r, k, c2, &jn(n))?;
        let upper = shell_integral(&self.source, r, hi, k, c2, &hn(n))?;
        let j = if lower.norm() > 0.0 || upper.norm() > 0.0 { jn(n)(k * r)? } else { ZERO };
        let h = if lower.norm() > 0.0 { hn(n)(k * r)? } else { ZERO };
        Ok(I * k * (h * lower + j * upper))
    }

    /// `U(r)` with `u = U(r) P_n(cos theta)`.
    pub fn radial(&self, r: f64) -> Result<Complex64> {
        if (r - 1.0).abs() <= 1e-12 {
            return Err(FprError::OnBoundary);
        }
        let n = self.source.n;
        let hom = if r < 1.0 { self.interior * jn(n)(self.k1() * r)? } else { self.exterior * hn(n)(self.k0() * r)? };
        Ok(self.particular(r)? + hom)
    }

    pub fn eval(&self, points: &[V3]) -> Result<Vec<Complex64>> {
        points
            .iter()
            .map(|x| {
                let (r, ct) = spherical(x);
                Ok(self.radial(r)? * legendre_seq(self.source.n, ct)?[self.source.n])
            })
            .collect()
    }

    /// [`annulus_norm`] of the field, using that it separates in `r` and `theta`.
    pub fn annulus_norm(&self) -> Result<f64> {
        let n = self.source.n;
        let rule = gauss_legendre(32)?;
        let (rs, wr) = rule.mapped(1.1, 2.0);
        let mut radial = 0.0;
        for (r, w) in rs.iter().zip(&wr) {
            radial += self.radial(*r)?.norm_sqr() * r * r * w;
        }
        let mut angular = 0.0;
        for (ct, w) in rule.nodes.iter().zip(&rule.weights) {
            angular += legendre_seq(n, *ct)?[n].powi(2) * w;
        }
        Ok((2.0 * PI * radial * angular).sqrt())
    }
}

/// Solves `(H - kappa^2) u = g(r) P_n` with `H = -k(x) div(rho(x)^{-1} grad)`,
/// outgoing at infinity. `kappa` may be complex (off the resonances).
pub fn resolvent_radial(m: &Medium, kappa: Complex64, src: &RadialSource) -> Result<ResolventSolution> {
    m.validate()?;
    if kappa.norm() == 0.0 || !kappa.re.is_finite() || !kappa.im.is_finite() {
        return domain(format!("frequency {kappa} must be finite and nonzero"));
    }
    let n = src.n;
    let mut sol = ResolventSolution { kappa, medium: *m, source: src.clone(), interior: ZERO, exterior: ZERO };
    let (k0, k1) = (sol.k0(), sol.k1());
    let (c0, c1) = (m.c0(), m.c1());
    let (j1, j1p) = j_table(n, k1)?;
    let (j0, j0p) = j_table(n, k0)?;
    let (h0, h0p) = h_table(n, k0)?;
    let (h1, h1p) = h_table(n, k1)?;
    let iin = shell_integral(src, 0.0, 1.0, k1, c1 * c1, &jn(n))?;
    let iex = shell_integral(src, 1.0, f64::INFINITY, k0, c0 * c0, &hn(n))?;
    let (uin, uin_p) = (I * k1 * h1[n] * iin, I * k1 * k1 * h1p[n] * iin);
    let (uex, uex_p) = (I * k0 * j0[n] * iex, I * k0 * k0 * j0p[n] * iex);
    let (w0, w1) = (1.0 / m.rho0, 1.0 / (m.rho1 * m.tau));
    // B j1 - C h0 = uex - uin ;  w1 B k1 j1' - w0 C k0 h0' = w0 uex' - w1 uin'
    let r1 = uex - uin;
    let r2 = w0 * uex_p - w1 * uin_p;
    let t1 = w1 * k1 * j1p[n] * h0[n];
    let t2 = w0 * k0 * h0p[n] * j1[n];
    let det = t1 - t2;
    if det.norm() < 1e-14 * (t1.norm() + t2.norm()) {
        return Err(FprError::NearSingular { kappa, resonance: kappa, distance: det.norm() });
    }
    sol.interior = cdiv(h0[n] * r2 - w0 * k0 * h0p[n] * r1, det);
    sol.exterior = cdiv(j1[n] * r2 - w1 * k1 * j1p[n] * r1, det);
    Ok(sol)
}

/// [`resolvent_radial`] evaluated at points.
pub fn resolvent_modal_apply(m: &Medium, kappa: Complex64, src: &RadialSource, points: &[V3]) -> Result<Vec<Complex64>> {
    resolvent_radial(m, kappa, src)?.eval(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhancementRow {
    pub tau: f64,
    pub peak_kappa: f64,
    pub peak_norm: f64,
}

/// Discrete argmax of `f` on `grid`.
fn argmax(grid: &[f64], f: impl Fn(f64) -> Result<f64> + Sync) -> Result<(f64, f64)> {
    let vals: Vec<f64> = grid.par_iter().map(|&k| f(k)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v > vals[best] {
            best = i;
        }
    }
    Ok((grid[best], vals[best]))
}

/// For each contrast, the peak over real frequencies of the annulus norm
/// of the resolvent applied to `src`: discrete argmax on `kappa_grid`, then
/// on a 201-point grid spanning the neighbouring coarse cells.
pub fn enhancement_scan(m: &Medium, taus: &[f64], src: &RadialSource, kappa_grid: &[f64]) -> Result<Vec<EnhancementRow>> {
    if kappa_grid.len() < 3 || kappa_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return domain("frequency grid needs at least three increasing points");
    }
    taus.iter()
        .map(|&tau| {
            let mt = m.with_tau(tau)?;
            let norm_at = |k: f64| resolvent_radial(&mt, Complex64::new(k, 0.0), src)?.annulus_norm();
            let (k, _) = argmax(kappa_grid, norm_at)?;
            let i = kappa_grid.iter().position(|&g| g == k).unwrap();
            let lo = kappa_grid[i.saturating_sub(1)];
            let hi = kappa_grid[(i + 1).min(kappa_grid.len() - 1)];
            let fine: Vec<f64> = (0..=200).map(|t| lo + (hi - lo) * t as f64 / 200.0).collect();
            let (peak_kappa, peak_norm) = argmax(&fine, norm_at)?;
            Ok(EnhancementRow { tau, peak_kappa, peak_norm })
        })
        .collect()
}
