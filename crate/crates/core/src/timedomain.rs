//! Time-domain waves radiated by a pulsed shell source around a radius-`eps`
//! resonator: inverse Fourier-Laplace synthesis along `Im lambda = sigma`
//! and the two-pole Minnaert approximation valid after the pulse.
//!
//! The resonator problem at frequency `lambda` is the unit-sphere problem at
//! `eps lambda` with the source shrunk by `eps` and scaled by `eps^2`.

use crate::error::{FprError, Result};
use crate::fields::{resolvent_radial, RadialSource};
use crate::medium::{ball_geometry, minnaert_pair_asymptotic, Medium};
use crate::modal::refine_resonance;
use crate::specfun::gauss_legendre;
use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// `F(x, t) = amplitude * 1{inner < |x| < outer} * g(t)` with
/// `g(t) = t^p (T - t)^p` on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSource {
    pub duration: f64,
    pub p: u32,
    pub shell_inner: f64,
    pub shell_outer: f64,
    pub amplitude: f64,
}

impl PulseSource {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration > 0.0) || self.p == 0 {
            return Err(FprError::Domain("pulse needs T > 0 and p >= 1".into()));
        }
        if !(self.shell_inner > 0.0 && self.shell_outer > self.shell_inner) || !self.amplitude.is_finite() {
            return Err(FprError::Domain("source shell needs 0 < inner < outer".into()));
        }
        Ok(())
    }

    pub fn g(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.duration {
            return 0.0;
        }
        (t * (self.duration - t)).powi(self.p as i32)
    }
}

/// `\int_0^T e^{-s t} t^p (T - t)^p dt` in closed form: the Taylor series
/// in `s` with Beta-function moments for `|s| T < 2p`, otherwise the finite
/// integration-by-parts sum `sum_k (g^(k)(0) - e^{-sT} g^(k)(T)) / s^{k+1}`.
pub fn pulse_laplace(src: &PulseSource, s: Complex64) -> Complex64 {
    if s.norm() * src.duration < (2 * src.p) as f64 {
        laplace_taylor(src, s)
    } else {
        laplace_by_parts(src, s)
    }
}

fn laplace_taylor(src: &PulseSource, s: Complex64) -> Complex64 {
    let (t, p) = (src.duration, src.p as usize);
    {
        // m_k = \int t^{p+k} (T-t)^p = T^{2p+k+1} B(p+k+1, p+1)
        let mut m0 = t.powi(2 * p as i32 + 1);
        for j in 1..=p {
            m0 *= j as f64 / (p + j) as f64;
        }
        m0 /= (2 * p + 1) as f64;
        let mut term = Complex64::new(m0, 0.0);
        let mut sum = term;
        for k in 0..200 {
            term *= -s * t * (p + k + 1) as f64 / ((k + 1) as f64 * (2 * p + k + 2) as f64);
            sum += term;
            if term.norm() < 1e-18 * sum.norm() && k > 4 {
                break;
            }
        }
        sum
    }
}

fn laplace_by_parts(src: &PulseSource, s: Complex64) -> Complex64 {
    let (t, p) = (src.duration, src.p as usize);
    // polynomial coefficients of g in t, ascending
    let mut c = vec![0.0; 2 * p + 1];
    let mut binom = 1.0;
    for m in 0..=p {
        c[p + m] = binom * t.powi((p - m) as i32) * if m % 2 == 0 { 1.0 } else { -1.0 };
        binom = binom * (p - m) as f64 / (m + 1) as f64;
    }
    let e = (-s * t).exp();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut sk = s;
    for _ in 0..=2 * p {
        let at0 = c[0];
        let at_t: f64 = c.iter().rev().fold(0.0, |acc, v| acc * t + v);
        sum += (at0 - e * at_t) / sk;
        sk *= s;
        c = c.iter().enumerate().skip(1).map(|(i, v)| i as f64 * v).collect();
        if c.is_empty() {
            break;
        }
    }
    sum
}

/// Refined Minnaert root `z_+` of the unit ball and its resonator frequency.
pub fn minnaert_root(m: &Medium) -> Result<Complex64> {
    let (c, v) = ball_geometry(1.0);
    Ok(refine_resonance(0, minnaert_pair_asymptotic(m, c, v)?.z_plus, m, 1e-13)?.value)
}

/// Contour and quadrature of the inverse transform.
#[derive(Debug, Clone, PartialEq)]
pub struct ContourSynthesisSpec {
    pub sigma: f64,
    /// Frequencies are sampled on `[0, xi]` (and mirrored).
    pub xi: f64,
    /// Trapezoid step.
    pub step: f64,
    pub times: Vec<f64>,
    pub obs_radii: Vec<f64>,
    /// Requested truncation tolerance `(1 + xi)^{1-p}`.
    pub tolerance: f64,
}

impl ContourSynthesisSpec {
    /// `t_max = min(1/eps, 0.5/|Im omega_M|)`, `sigma = 1/t_max`,
    /// `xi` from the tail bound and `step = min(0.02, (sigma + |Im omega_M|)/10)`.
    pub fn auto(m: &Medium, eps: f64, src: &PulseSource, times: Vec<f64>, obs_radii: Vec<f64>, tolerance: f64) -> Result<Self> {
        src.validate()?;
        let w = minnaert_root(m)? / eps;
        let t_max = (1.0 / eps).min(0.5 / w.im.abs());
        let sigma = 1.0 / t_max;
        let xi = if src.p > 1 { tolerance.powf(-1.0 / (src.p as f64 - 1.0)) - 1.0 } else { f64::INFINITY };
        let step = 0.02f64.min((sigma + w.im.abs()) / 10.0);
        Ok(ContourSynthesisSpec { sigma, xi, step, times, obs_radii, tolerance })
    }

    pub fn tail_estimate(&self, p: u32) -> f64 {
        (1.0 + self.xi).powf(1.0 - p as f64)
    }

    pub fn quad_points(&self) -> usize {
        (self.xi / self.step).ceil() as usize + 1
    }
}

/// Traces `u(r, t)`, one row per observation radius.
#[derive(Debug, Clone, PartialEq)]
pub struct Traces {
    pub times: Vec<f64>,
    pub obs_radii: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    /// Imaginary part of the quadrature sum over `[-xi, xi]`.
    pub imag: Vec<Vec<f64>>,
}

/// Latest admissible time: `min(1/eps, 0.5/|Im omega_M|)`.
pub fn time_window_end(m: &Medium, eps: f64) -> Result<f64> {
    let w = minnaert_root(m)? / eps;
    Ok((1.0 / eps).min(0.5 / w.im.abs()))
}

/// `u_hat(r, lambda)` for the shell source.
fn transformed_field(m: &Medium, eps: f64, src: &PulseSource, lambda: Complex64, obs: &[f64]) -> Result<Vec<Complex64>> {
    let fhat = pulse_laplace(src, -I * lambda);
    let shell = RadialSource::shell(
        0,
        src.shell_inner / eps,
        src.shell_outer / eps,
        m.k0 * src.amplitude * fhat * eps * eps,
    )?;
    let sol = resolvent_radial(m, eps * lambda, &shell)?;
    obs.iter().map(|r| sol.radial(r / eps)).collect()
}

fn check_setup(m: &Medium, eps: f64, src: &PulseSource, obs: &[f64]) -> Result<()> {
    m.validate()?;
    src.validate()?;
    if !(eps > 0.0 && eps <= 0.1) {
        return Err(FprError::Domain(format!("epsilon = {eps} must lie in (0, 0.1]")));
    }
    if src.shell_inner <= eps {
        return Err(FprError::Domain("the source shell must lie outside the resonator".into()));
    }
    for &r in obs {
        let inside_gap = r > eps && r < src.shell_inner;
        if !(inside_gap || r > src.shell_outer) {
            return Err(FprError::Domain(format!("observation radius {r} must avoid the resonator and the source shell")));
        }
    }
    Ok(())
}

/// `u(r, t) = (e^{sigma t} / 2 pi) \int e^{-i xi t} u_hat(r, xi + i sigma) d xi`,
/// trapezoid rule on `[-xi, xi]`.
pub fn contour_synthesize(m: &Medium, eps: f64, src: &PulseSource, spec: &ContourSynthesisSpec) -> Result<Traces> {
    check_setup(m, eps, src, &spec.obs_radii)?;
    if !(spec.sigma > 0.0 && spec.step > 0.0 && spec.xi > 0.0) {
        return Err(FprError::Domain("contour needs sigma, xi and step > 0".into()));
    }
    let tail = spec.tail_estimate(src.p);
    if !(tail <= spec.tolerance * (1.0 + 1e-9)) {
        return Err(FprError::TruncationTooCoarse { tail, tolerance: spec.tolerance });
    }
    let t_max = spec.times.iter().cloned().fold(0.0, f64::max);
    if spec.sigma * t_max > 30.0 {
        return Err(FprError::Domain(format!("sigma t_max = {} exceeds 30", spec.sigma * t_max)));
    }
    let n = spec.quad_points();
    // u_hat(-xi + i sigma) = conj(u_hat(xi + i sigma)) for a real source;
    // the mirror half is evaluated directly on every 64th sample and
    // conjugated elsewhere, so `imag` reports the symmetry defect.
    let samples: Vec<(f64, Vec<Complex64>, Vec<Complex64>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = i as f64 * spec.step;
            let plus = transformed_field(m, eps, src, Complex64::new(x, spec.sigma), &spec.obs_radii)?;
            let minus = if i % 64 == 0 && i > 0 {
                transformed_field(m, eps, src, Complex64::new(-x, spec.sigma), &spec.obs_radii)?
            } else {
                plus.iter().map(|v| v.conj()).collect()
            };
            Ok((x, plus, minus))
        })
        .collect::<Result<_>>()?;
    let mut values = vec![vec![0.0; spec.times.len()]; spec.obs_radii.len()];
    let mut imag = values.clone();
    for (k, &t) in spec.times.iter().enumerate() {
        for o in 0..spec.obs_radii.len() {
            let mut s = Complex64::new(0.0, 0.0);
            for (x, plus, minus) in &samples {
                if *x == 0.0 {
                    s += plus[o];
                } else {
                    s += (-I * x * t).exp() * plus[o] + (I * x * t).exp() * minus[o];
                }
            }
            let u = s * spec.step * (spec.sigma * t).exp() / (2.0 * PI);
            values[o][k] = u.re;
            imag[o][k] = u.im;
        }
    }
    Ok(Traces { times: spec.times.clone(), obs_radii: spec.obs_radii.clone(), values, imag })
}

/// Two-pole approximation after the pulse: the residues at
/// `omega_+- = z_+-(tau) / eps` with rank-one (monopole) projection.
pub fn minnaert_pole_approx(m: &Medium, eps: f64, src: &PulseSource, times: &[f64], obs_radii: &[f64]) -> Result<Traces> {
    check_setup(m, eps, src, obs_radii)?;
    if times.iter().any(|&t| t <= src.duration) {
        return Err(FprError::Precondition("the pole approximation needs t > T".into()));
    }
    let zp = minnaert_root(m)?;
    let (c, v) = ball_geometry(1.0);
    let c0 = m.c0();
    let rule = gauss_legendre(64)?;
    let (ss, ws) = rule.mapped(src.shell_inner, src.shell_outer);
    let poles = [zp / eps, -zp.conj() / eps];
    let weights: Vec<Complex64> = poles
        .iter()
        .map(|&w| {
            // \int e^{i w |y| / c0} / (4 pi |y|) F_hat(y) dy over the shell
            let radial: Complex64 = ss.iter().zip(&ws).map(|(s, q)| (I * w * s / c0).exp() * s * q).sum();
            let fhat = pulse_laplace(src, -I * w) * src.amplitude;
            -(m.tau / eps) * (c * c * m.k1 / v) * radial * fhat * (-I / (2.0 * w))
        })
        .collect();
    let mut values = vec![vec![0.0; times.len()]; obs_radii.len()];
    let mut imag = values.clone();
    for (o, &r) in obs_radii.iter().enumerate() {
        for (k, &t) in times.iter().enumerate() {
            let u: Complex64 = poles
                .iter()
                .zip(&weights)
                .map(|(&w, a)| a * (-I * w * t).exp() * (I * w * r / c0).exp() / (4.0 * PI * r))
                .sum();
            values[o][k] = u.re;
            imag[o][k] = u.im;
        }
    }
    Ok(Traces { times: times.to_vec(), obs_radii: obs_radii.to_vec(), values, imag })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargeTimeReport {
    pub obs_radii: Vec<f64>,
    /// Relative L2-in-time error of the pole approximation per radius.
    pub errors: Vec<f64>,
    pub synthesized: Traces,
    pub approximation: Traces,
}

/// Synthesis against the two-pole approximation on `spec.times`.
pub fn large_time_compare(m: &Medium, eps: f64, src: &PulseSource, spec: &ContourSynthesisSpec) -> Result<LargeTimeReport> {
    let t_end = time_window_end(m, eps)?;
    if spec.times.is_empty() || spec.times.iter().any(|&t| t <= src.duration || t > t_end * (1.0 + 1e-12)) {
        return Err(FprError::Precondition(format!(
            "times must lie in (T, t_max] = ({}, {t_end}]",
            src.duration
        )));
    }
    let synthesized = contour_synthesize(m, eps, src, spec)?;
    let approximation = minnaert_pole_approx(m, eps, src, &spec.times, &spec.obs_radii)?;
    let errors = synthesized
        .values
        .iter()
        .zip(&approximation.values)
        .map(|(u, a)| {
            let num: f64 = u.iter().zip(a).map(|(x, y)| (x - y).powi(2)).sum();
            let den: f64 = u.iter().map(|x| x * x).sum();
            (num / den).sqrt()
        })
        .collect();
    Ok(LargeTimeReport { obs_radii: spec.obs_radii.clone(), errors, synthesized, approximation })
}

/// `n` evenly spaced times on `[a, b]`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pulse(p: u32, t: f64) -> PulseSource {
        PulseSource { duration: t, p, shell_inner: 0.02, shell_outer: 0.04, amplitude: 1.0 }
    }

    #[test]
    fn laplace_at_zero_is_a_beta_integral() {
        assert!((pulse_laplace(&pulse(3, 1.0), Complex64::new(0.0, 0.0)).re - 1.0 / 140.0).abs() < 1e-16);
        // T^{2p+1} B(p+1, p+1) with p = 2, T = 2: 32 / 30
        assert!((pulse_laplace(&pulse(2, 2.0), Complex64::new(0.0, 0.0)).re - 32.0 / 30.0).abs() < 1e-14);
    }

    #[test]
    fn branches_agree_at_the_switch() {
        let src = pulse(3, 1.0);
        for arg in [0.3, 1.4, 2.9] {
            let s = Complex64::from_polar(6.0, arg);
            let (a, b) = (laplace_taylor(&src, s), laplace_by_parts(&src, s));
            assert!((a - b).norm() < 1e-9 * a.norm(), "{a} {b}");
        }
    }

    #[test]
    fn pulse_profile_is_causal() {
        let src = pulse(3, 0.2);
        assert_eq!(src.g(-0.1), 0.0);
        assert_eq!(src.g(0.0), 0.0);
        assert_eq!(src.g(0.3), 0.0);
        assert!(src.g(0.1) > 0.0);
    }
}
