//! Spherical Bessel and Hankel functions of complex argument, Legendre
//! polynomials and Gauss-Legendre rules.
//!
//! `j_n` comes from Miller's downward recurrence (or its power series for
//! tiny arguments), `h_n` from upward recurrence out of its closed forms,
//! and `y_n = -i (h_n - j_n)`. Derivatives use `f_n' = f_{n-1} - (n+1) f_n / z`.

use crate::error::{domain, Result};
use num_complex::Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);
const MAX_ORDER: usize = 200;

/// Values and argument-derivatives of `j_n` and `y_n` at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BesselPair {
    pub j: Complex64,
    pub jp: Complex64,
    pub y: Complex64,
    pub yp: Complex64,
}

impl BesselPair {
    /// First-kind Hankel value and derivative built from the pair. Loses all
    /// accuracy for large `Im z > 0`, where `h` is exponentially small; use
    /// [`sph_h1`] there.
    pub fn h1(&self) -> (Complex64, Complex64) {
        (self.j + I * self.y, self.jp + I * self.yp)
    }
}

/// Nodes and weights of a rule on (-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        let x = self.nodes.iter().map(|t| mid + half * t).collect();
        let w = self.weights.iter().map(|w| half * w).collect();
        (x, w)
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Complex division without forming `|b|^2` (Smith's algorithm).
pub fn cdiv(a: Complex64, b: Complex64) -> Complex64 {
    if b.re.abs() >= b.im.abs() {
        let r = b.im / b.re;
        let d = b.re + b.im * r;
        Complex64::new((a.re + a.im * r) / d, (a.im - a.re * r) / d)
    } else {
        let r = b.re / b.im;
        let d = b.re * r + b.im;
        Complex64::new((a.re * r + a.im) / d, (a.im * r - a.re) / d)
    }
}

fn check_arg(n: usize, z: Complex64) -> Result<()> {
    if n > MAX_ORDER {
        return domain(format!("order {n} exceeds {MAX_ORDER}"));
    }
    if z == Complex64::new(0.0, 0.0) {
        return domain("spherical Bessel functions of the second kind are singular at z = 0");
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return domain(format!("non-finite argument {z}"));
    }
    Ok(())
}

fn double_factorial_odd(n: usize) -> f64 {
    (1..=n).map(|k| (2 * k + 1) as f64).product()
}

/// Power series of `j_n`, accurate for |z| well below `sqrt(n + 1)`.
fn j_series(n: usize, z: Complex64) -> Complex64 {
    let w = -0.5 * z * z;
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..60 {
        term *= w / ((k as f64) * (2 * n + 2 * k + 1) as f64);
        sum += term;
        if term.norm() < 1e-18 * sum.norm() {
            break;
        }
    }
    z.powu(n as u32) / double_factorial_odd(n) * sum
}

fn j0_closed(z: Complex64) -> Complex64 {
    z.sin() / z
}

fn j1_closed(z: Complex64) -> Complex64 {
    if z.norm() < 0.1 {
        return j_series(1, z);
    }
    z.sin() / (z * z) - z.cos() / z
}

/// `j_0 .. j_{nmax}` at `z`.
pub fn sph_j_seq(nmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    check_arg(nmax.min(MAX_ORDER), z)?;
    let zn = z.norm();
    let mut out = vec![Complex64::new(0.0, 0.0); nmax + 1];
    if zn < 1e-3 {
        for (n, v) in out.iter_mut().enumerate() {
            *v = j_series(n, z);
        }
        return Ok(out);
    }
    let start = nmax + 20 + zn.ceil() as usize;
    let mut v = vec![Complex64::new(0.0, 0.0); start + 2];
    v[start] = Complex64::new(1.0, 0.0);
    for k in (1..=start).rev() {
        v[k - 1] = (2 * k + 1) as f64 / z * v[k] - v[k + 1];
        // keep |v|^2 representable so the final complex division is safe
        if v[k - 1].norm() > 1e100 {
            for x in v[k - 1..].iter_mut() {
                *x *= 1e-100;
            }
        }
    }
    let j0 = j0_closed(z);
    let j1 = j1_closed(z);
    let scale = if j0.norm() >= j1.norm() { cdiv(j0, v[0]) } else { cdiv(j1, v[1]) };
    for (n, o) in out.iter_mut().enumerate() {
        *o = if zn < 1e-3 * (n + 1) as f64 { j_series(n, z) } else { v[n] * scale };
    }
    Ok(out)
}

/// `y_0 .. y_{nmax}` at `z`.
///
/// In the upper half plane `y = -i (h - j)` with `h` from its (stable)
/// upward recurrence; the lower half plane follows by conjugation. Upward
/// recurrence on `y` itself would lose the small outgoing component that the
/// Wronskian depends on when `|Im z|` is large.
pub fn sph_y_seq(nmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    check_arg(nmax.min(MAX_ORDER), z)?;
    if z.im < 0.0 {
        return Ok(sph_y_seq(nmax, z.conj())?.into_iter().map(|v| v.conj()).collect());
    }
    let h = h1_upward(nmax, z);
    if z.im == 0.0 {
        return Ok(h.iter().map(|v| Complex64::new(v.im, 0.0)).collect());
    }
    let j = sph_j_seq(nmax, z)?;
    Ok(h.iter().zip(&j).map(|(h, j)| -I * (h - j)).collect())
}

/// `h_0 .. h_{nmax}` (first kind) at `z`.
///
/// Upward recurrence is stable on and above the real axis. Below it the
/// incoming solution overtakes `h_n` as `n` grows, so there `h = j + i y`
/// with `y` taken from the mirrored upper half plane.
pub fn sph_h1_seq(nmax: usize, z: Complex64) -> Result<Vec<Complex64>> {
    check_arg(nmax.min(MAX_ORDER), z)?;
    if z.im < 0.0 {
        let j = sph_j_seq(nmax, z)?;
        let y = sph_y_seq(nmax, z)?;
        return Ok(j.iter().zip(&y).map(|(j, y)| j + I * y).collect());
    }
    Ok(h1_upward(nmax, z))
}

fn h1_upward(nmax: usize, z: Complex64) -> Vec<Complex64> {
    let e = (I * z).exp();
    let mut out = Vec::with_capacity(nmax + 1);
    out.push(-I * e / z);
    if nmax >= 1 {
        out.push(-e * (z + I) / (z * z));
    }
    for n in 1..nmax {
        let next = (2 * n + 1) as f64 / z * out[n] - out[n - 1];
        out.push(next);
    }
    out
}

/// Derivatives from a sequence holding orders `0 ..= nmax + 1`.
pub fn seq_derivative(seq: &[Complex64], z: Complex64) -> Vec<Complex64> {
    let nmax = seq.len() - 2;
    (0..=nmax)
        .map(|n| {
            if n == 0 {
                -seq[1]
            } else {
                seq[n - 1] - (n + 1) as f64 / z * seq[n]
            }
        })
        .collect()
}

/// `j_n, j_n', y_n, y_n'` at `z`.
pub fn sph_jy(n: usize, z: Complex64) -> Result<BesselPair> {
    check_arg(n, z)?;
    let j = sph_j_seq(n + 1, z)?;
    let y = sph_y_seq(n + 1, z)?;
    let jp = seq_derivative(&j, z);
    let yp = seq_derivative(&y, z);
    Ok(BesselPair { j: j[n], jp: jp[n], y: y[n], yp: yp[n] })
}

/// Only `j_n` and `j_n'`; unlike [`sph_jy`] this is defined at `z = 0`.
pub fn sph_j(n: usize, z: Complex64) -> Result<(Complex64, Complex64)> {
    if n > MAX_ORDER {
        return domain(format!("order {n} exceeds {MAX_ORDER}"));
    }
    if z.norm() == 0.0 {
        let j = if n == 0 { 1.0 } else { 0.0 };
        let jp = if n == 1 { 1.0 / 3.0 } else { 0.0 };
        return Ok((Complex64::new(j, 0.0), Complex64::new(jp, 0.0)));
    }
    let j = sph_j_seq(n + 1, z)?;
    let jp = seq_derivative(&j, z);
    Ok((j[n], jp[n]))
}

/// First-kind spherical Hankel function `h_n` and its derivative.
pub fn sph_h1(n: usize, z: Complex64) -> Result<(Complex64, Complex64)> {
    check_arg(n, z)?;
    let h = sph_h1_seq(n + 1, z)?;
    let hp = seq_derivative(&h, z);
    Ok((h[n], hp[n]))
}

/// Legendre polynomial `P_n(x)` by the three-term recurrence.
pub fn legendre_p(n: usize, x: f64) -> Result<f64> {
    Ok(*legendre_seq(n, x)?.last().unwrap())
}

/// `P_0(x) .. P_nmax(x)`.
pub fn legendre_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x.abs() <= 1.0) {
        return domain(format!("Legendre argument {x} outside [-1, 1]"));
    }
    let mut p = Vec::with_capacity(nmax + 1);
    p.push(1.0);
    if nmax >= 1 {
        p.push(x);
    }
    for n in 1..nmax {
        let next = ((2 * n + 1) as f64 * x * p[n] - n as f64 * p[n - 1]) / (n + 1) as f64;
        p.push(next);
    }
    Ok(p)
}

/// `(P_k(x), P_k'(x))` for the Newton iteration, valid for |x| < 1.
fn legendre_with_derivative(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for n in 1..k {
        let p2 = ((2 * n + 1) as f64 * x * p1 - n as f64 * p0) / (n + 1) as f64;
        p0 = p1;
        p1 = p2;
    }
    if k == 0 {
        return (1.0, 0.0);
    }
    let dp = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// k-point Gauss-Legendre rule; nodes ascending.
pub fn gauss_legendre(k: usize) -> Result<QuadratureRule> {
    if k == 0 || k > 10_000 {
        return domain(format!("Gauss-Legendre order {k} outside 1..=10000"));
    }
    let mut nodes = vec![0.0; k];
    let mut weights = vec![0.0; k];
    let half = k.div_ceil(2);
    for i in 0..half {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(k, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                let (_, d) = legendre_with_derivative(k, x);
                dp = d;
                break;
            }
        }
        if k % 2 == 1 && i == half - 1 {
            x = 0.0;
            dp = legendre_with_derivative(k, 0.0).1;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[k - 1 - i] = x;
        weights[i] = w;
        weights[k - 1 - i] = w;
    }
    Ok(QuadratureRule { nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn j0_closed_form() {
        let p = sph_jy(0, c(1.0, 0.0)).unwrap();
        assert!((p.j.re - 1f64.sin()).abs() < 1e-15);
        assert!(p.j.im.abs() < 1e-16);
    }

    #[test]
    fn wronskian_at_two() {
        let p = sph_jy(1, c(2.0, 0.0)).unwrap();
        assert!(rel(p.j * p.yp - p.jp * p.y, c(0.25, 0.0)) < 1e-14);
        let (h, hp) = sph_h1(1, c(2.0, 0.0)).unwrap();
        assert!(rel(p.j * hp - p.jp * h, c(0.0, 0.25)) < 1e-14);
    }

    #[test]
    fn small_argument_leading_term() {
        let p = sph_jy(5, c(0.01, 0.0)).unwrap();
        let lead = 1e-10 / 10395.0;
        // next term is -z^2/(2(2n+3)) relative
        assert!((p.j.re / lead - 1.0).abs() < 1e-5);
        assert!((p.j.re / (lead * (1.0 - 1e-4 / 26.0)) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn h0_closed_forms() {
        let (h, _) = sph_h1(0, c(std::f64::consts::PI, 0.0)).unwrap();
        assert!((h - c(0.0, 1.0 / std::f64::consts::PI)).norm() < 1e-15);
        let z = c(1.0, 1.0);
        let (h, _) = sph_h1(0, z).unwrap();
        assert!(rel(h, -I * (I * z).exp() / z) < 1e-15);
    }

    // Values from mpmath at 30 digits.
    #[test]
    fn frozen_reference_values() {
        let cases: [(usize, Complex64, Complex64, Complex64); 6] = [
            (3, c(2.5, 0.0), c(0.10392046970240394, 0.0), c(-0.79660312325324946, 0.0)),
            (10, c(1.0, 0.0), c(7.116552640047313e-11, 0.0), c(-672215008.25620844, 0.0)),
            (
                2,
                c(3.0, -4.0),
                c(3.0807118389498889, -1.1891405055872036),
                c(-1.1933339951976165, -3.0847350638458599),
            ),
            (
                7,
                c(0.5, 20.0),
                c(-1435230.9794015175, -2562975.407767379),
                c(2562975.4077673786, -1435230.9794015177),
            ),
            (
                0,
                c(40.0, 0.3),
                c(0.019433213449905968, -0.0052231534570096764),
                c(0.017470962457628296, 0.0055415197385802666),
            ),
            (
                15,
                c(0.2, 0.1),
                c(7.1269690918178385e-28, 5.657083072099984e-28),
                c(-6.7004227492579283e25, 1.436995614430258e26),
            ),
        ];
        for (n, z, j, y) in cases {
            let p = sph_jy(n, z).unwrap();
            assert!(rel(p.j, j) < 1e-12, "j_{n}({z}) = {} vs {}", p.j, j);
            assert!(rel(p.y, y) < 1e-10, "y_{n}({z}) = {} vs {}", p.y, y);
        }
    }

    #[test]
    fn zero_argument_rejected() {
        assert!(sph_jy(0, c(0.0, 0.0)).is_err());
        assert!(sph_h1(3, c(0.0, 0.0)).is_err());
        assert_eq!(sph_j(0, c(0.0, 0.0)).unwrap().0, c(1.0, 0.0));
    }

    #[test]
    fn legendre_examples() {
        assert!((legendre_p(2, 0.5).unwrap() + 0.125).abs() < 1e-15);
        assert_eq!(legendre_p(7, 1.0).unwrap(), 1.0);
        assert_eq!(legendre_p(3, -1.0).unwrap(), -1.0);
        assert!(legendre_p(2, 1.5).is_err());
    }

    #[test]
    fn gauss_legendre_examples() {
        let g1 = gauss_legendre(1).unwrap();
        assert_eq!(g1.nodes, vec![0.0]);
        assert!((g1.weights[0] - 2.0).abs() < 1e-15);
        let g2 = gauss_legendre(2).unwrap();
        assert!((g2.nodes[1] - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!((g2.nodes[0] + 1.0 / 3f64.sqrt()).abs() < 1e-15);
        let g4 = gauss_legendre(4).unwrap();
        assert!((g4.integrate(|x| x.powi(6)) - 2.0 / 7.0).abs() < 1e-14);
        assert!(gauss_legendre(0).is_err());
    }

    #[test]
    fn gauss_legendre_large_order() {
        let g = gauss_legendre(10_000).unwrap();
        let s: f64 = g.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(g.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn quadrature_orthogonality() {
        let g = gauss_legendre(32).unwrap();
        for m in 0..=15 {
            for n in 0..=15 {
                let v = g.integrate(|x| legendre_p(m, x).unwrap() * legendre_p(n, x).unwrap());
                if m == n {
                    assert!((v - 2.0 / (2 * n + 1) as f64).abs() < 1e-13);
                } else {
                    assert!(v.abs() < 1e-12, "P{m} P{n}: {v}");
                }
            }
        }
    }

    fn grid() -> Vec<Complex64> {
        let mut zs = Vec::new();
        for i in 0..25 {
            let r = 0.1 * (500f64).powf(i as f64 / 24.0);
            for a in [0.0, 0.25, -0.25, 0.5, -0.5] {
                zs.push(Complex64::from_polar(r, a * std::f64::consts::PI));
            }
        }
        zs
    }

    #[test]
    fn wronskian_grid() {
        for z in grid() {
            let w = 1.0 / (z * z);
            for n in 0..=20 {
                let p = sph_jy(n, z).unwrap();
                // j y' - j' y loses digits when both products are exponentially
                // large; allow rounding relative to the size of the products.
                let scale = w.norm() + (p.j * p.yp).norm() + (p.jp * p.y).norm();
                let raw = p.j * p.yp - p.jp * p.y - w;
                assert!(raw.norm() < 1e-10 * w.norm() + 1e-13 * scale, "raw n={n} z={z} err={} w={} scale={scale}", raw.norm(), w.norm());
                if z.im >= 0.0 {
                    let (h, hp) = sph_h1(n, z).unwrap();
                    let wh = p.j * hp - p.jp * h;
                    assert!(rel(wh, I * w) < 1e-10, "hankel n={n} z={z}: {wh} vs {}", I * w);
                    let hv = p.j + I * p.y;
                    assert!((hv - h).norm() < 1e-10 * h.norm() + 1e-13 * (p.j.norm() + p.y.norm()));
                }
            }
        }
    }

    #[test]
    fn conjugation_symmetry() {
        for z in grid() {
            for n in [0, 3, 11, 20] {
                let a = sph_jy(n, z).unwrap();
                let b = sph_jy(n, z.conj()).unwrap();
                assert!(rel(b.j, a.j.conj()) < 1e-13);
                assert!(rel(b.y, a.y.conj()) < 1e-13);
            }
        }
    }

    #[test]
    fn recurrence_consistency() {
        for z in grid() {
            let j = sph_j_seq(21, z).unwrap();
            let y = sph_y_seq(21, z).unwrap();
            let h = sph_h1_seq(21, z).unwrap();
            for n in 1..=20 {
                let k = (2 * n + 1) as f64 / z;
                for f in [&j, &y, &h] {
                    let lhs = k * f[n];
                    let rhs = f[n - 1] + f[n + 1];
                    let size = f[n - 1].norm() + f[n + 1].norm();
                    if f[n].norm() > 1e-3 * size {
                        assert!((lhs - rhs).norm() < 1e-9 * size, "n={n} z={z}");
                    }
                }
            }
        }
    }
}
