//! Complex root finding: Newton with a finite-difference derivative,
//! argument-principle counting, and Beyn's contour method for holomorphic
//! matrix families.

use crate::error::{precondition, FprError, Result};
use crate::specfun::gauss_legendre;
use faer::linalg::solvers::Solve;
use faer::{c64, Mat};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

const PROBE_SEED: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContourShape {
    Circle { radius: f64 },
    Rectangle { half_width: f64, half_height: f64 },
}

/// A closed, positively oriented contour and its quadrature resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContourSpec {
    pub shape: ContourShape,
    pub center: Complex64,
    pub quad_points: usize,
}

impl ContourSpec {
    pub fn circle(center: Complex64, radius: f64) -> Self {
        ContourSpec { shape: ContourShape::Circle { radius }, center, quad_points: 256 }
    }

    pub fn rectangle(center: Complex64, half_width: f64, half_height: f64) -> Self {
        ContourSpec { shape: ContourShape::Rectangle { half_width, half_height }, center, quad_points: 256 }
    }

    pub fn with_points(mut self, quad_points: usize) -> Self {
        self.quad_points = quad_points;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.quad_points < 16 {
            return precondition(format!("contour needs at least 16 nodes, got {}", self.quad_points));
        }
        let ok = match self.shape {
            ContourShape::Circle { radius } => radius > 0.0,
            ContourShape::Rectangle { half_width, half_height } => half_width > 0.0 && half_height > 0.0,
        };
        if !ok {
            return precondition("contour dimensions must be positive");
        }
        Ok(())
    }

    /// Smallest linear dimension, used to scale finite-difference steps.
    pub fn size(&self) -> f64 {
        match self.shape {
            ContourShape::Circle { radius } => radius,
            ContourShape::Rectangle { half_width, half_height } => half_width.min(half_height),
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        let d = z - self.center;
        match self.shape {
            ContourShape::Circle { radius } => d.norm() < radius,
            ContourShape::Rectangle { half_width, half_height } => {
                d.re.abs() < half_width && d.im.abs() < half_height
            }
        }
    }

    /// Nodes `z_j` and weights `w_j` with `sum w_j g(z_j) ~ integral of g dz`.
    ///
    /// Circles use the trapezoid rule. Rectangles use Gauss-Legendre on each
    /// side, since the corners spoil the trapezoid rule's geometric
    /// convergence.
    pub fn nodes(&self) -> Vec<(Complex64, Complex64)> {
        let n = self.quad_points;
        match self.shape {
            ContourShape::Circle { radius } => (0..n)
                .map(|j| {
                    let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / n as f64);
                    let z = self.center + radius * e;
                    let w = Complex64::i() * radius * e * (2.0 * PI / n as f64);
                    (z, w)
                })
                .collect(),
            ContourShape::Rectangle { half_width: a, half_height: b } => {
                let c = self.center;
                let corners = [
                    c + Complex64::new(-a, -b),
                    c + Complex64::new(a, -b),
                    c + Complex64::new(a, b),
                    c + Complex64::new(-a, b),
                ];
                let per = |len: f64| ((n as f64 * len / (4.0 * (a + b))).round() as usize).max(4);
                let mut out = Vec::with_capacity(n + 8);
                for s in 0..4 {
                    let (p, q) = (corners[s], corners[(s + 1) % 4]);
                    let m = per((q - p).norm());
                    let rule = gauss_legendre(m).expect("side rule order is small");
                    for (t, w) in rule.nodes.iter().zip(&rule.weights) {
                        let z = 0.5 * (p + q) + 0.5 * t * (q - p);
                        out.push((z, 0.5 * w * (q - p)));
                    }
                }
                out
            }
        }
    }
}

/// Central difference `(f(z+h) - f(z-h)) / 2h`.
pub fn central_difference(f: &impl Fn(Complex64) -> Complex64, z: Complex64, h: f64) -> Complex64 {
    (f(z + h) - f(z - h)) / (2.0 * h)
}

/// Newton iteration until `|f(z)| <= tol`.
pub fn newton_complex(
    f: impl Fn(Complex64) -> Complex64,
    seed: Complex64,
    tol: f64,
    max_iter: usize,
) -> Result<Complex64> {
    let mut z = seed;
    let mut fz = f(z);
    for _ in 0..max_iter {
        if fz.norm() <= tol {
            return Ok(z);
        }
        let d = central_difference(&f, z, 1e-6 * z.norm().max(1.0));
        if d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite() {
            break;
        }
        z -= fz / d;
        fz = f(z);
        if !fz.re.is_finite() || !fz.im.is_finite() {
            break;
        }
    }
    if fz.norm() <= tol {
        return Ok(z);
    }
    Err(FprError::Convergence { iterations: max_iter, residual: fz.norm() })
}

/// Zeros minus poles of `f` inside `c`, from `(1/2 pi i) \oint f'/f dz`.
pub fn contour_count(f: impl Fn(Complex64) -> Complex64, c: &ContourSpec) -> Result<i64> {
    c.validate()?;
    let h = 1e-5 * c.size();
    let nodes = c.nodes();
    let mut sum = Complex64::new(0.0, 0.0);
    let mut fmin = f64::INFINITY;
    let mut fmax: f64 = 0.0;
    for (z, w) in &nodes {
        let fz = f(*z);
        let a = fz.norm();
        if !a.is_finite() || a == 0.0 {
            return Err(FprError::ContourTooClose { value: f64::NAN });
        }
        fmin = fmin.min(a);
        fmax = fmax.max(a);
        sum += w * central_difference(&f, *z, h) / fz;
    }
    let value = sum / (2.0 * PI * Complex64::i());
    let rounded = value.re.round();
    if (value - rounded).norm() > 0.1 || fmin < 1e-12 * fmax {
        return Err(FprError::ContourTooClose { value: value.re });
    }
    Ok(rounded as i64)
}

fn probe_block(m: usize, l: usize) -> Mat<c64> {
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    Mat::from_fn(m, l, |_, _| c64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

fn frobenius(a: &Mat<c64>) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            s += a[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// Smallest singular value of a square matrix.
pub fn smallest_singular_value(a: &Mat<c64>) -> Result<f64> {
    let s = a
        .singular_values()
        .map_err(|e| FprError::SingularSystem(format!("SVD failed: {e:?}")))?;
    Ok(s.last().copied().unwrap_or(0.0))
}

/// Eigenvalues of the holomorphic family `t` inside `c` (Beyn's method).
///
/// The moments `A_k = (1/2 pi i) \oint z^k T(z)^{-1} V dz` are taken against a
/// fixed pseudo-random probe `V` with `probe_rank` columns. The numerical
/// rank of `A_0` (singular values above `tol * sigma_max`) is the number of
/// eigenvalues; each candidate is accepted only if `T` is numerically
/// singular there.
pub fn beyn_roots(
    t: impl Fn(Complex64) -> Result<Mat<c64>> + Sync,
    c: &ContourSpec,
    probe_rank: usize,
    tol: f64,
) -> Result<Vec<Complex64>> {
    c.validate()?;
    if probe_rank == 0 {
        return precondition("probe rank must be positive");
    }
    let nodes = c.nodes();
    let first = t(nodes[0].0)?;
    let m = first.nrows();
    if first.ncols() != m {
        return precondition("Beyn family must be square");
    }
    let l = probe_rank.min(m);
    let v = probe_block(m, l);
    let mut a0 = Mat::<c64>::zeros(m, l);
    let mut a1 = Mat::<c64>::zeros(m, l);
    let mut scale: f64 = 0.0;
    let two_pi_i = 2.0 * PI * Complex64::i();
    for (idx, (z, w)) in nodes.iter().enumerate() {
        let tz = if idx == 0 { first.clone() } else { t(*z)? };
        scale = scale.max(frobenius(&tz));
        let x = tz.partial_piv_lu().solve(&v);
        let w0 = w / two_pi_i;
        let w1 = w0 * z;
        for j in 0..l {
            for i in 0..m {
                a0[(i, j)] += w0 * x[(i, j)];
                a1[(i, j)] += w1 * x[(i, j)];
            }
        }
    }
    let svd = a0
        .thin_svd()
        .map_err(|e| FprError::SingularSystem(format!("SVD of the zeroth moment failed: {e:?}")))?;
    let sigma: Vec<f64> = (0..l).map(|i| svd.S().column_vector()[i].re).collect();
    let smax = sigma[0];
    if smax == 0.0 || !smax.is_finite() {
        return Ok(Vec::new());
    }
    let k = sigma.iter().filter(|&&s| s > tol * smax).count();
    if k == 0 {
        return Ok(Vec::new());
    }
    if k < l && sigma[k - 1] < 10.0 * sigma[k] {
        return Err(FprError::RankDeficientProbe {
            probe_rank: l,
            detail: format!("singular value gap {:.2} below 10 at the cutoff", sigma[k - 1] / sigma[k]),
        });
    }
    if k == l && l < m {
        return Err(FprError::RankDeficientProbe {
            probe_rank: l,
            detail: "every probe direction is active; more eigenvalues may be enclosed".into(),
        });
    }
    let u = svd.U();
    let vv = svd.V();
    let mut b = Mat::<c64>::zeros(k, k);
    // B = U_k^H A1 V_k S_k^{-1}
    let a1v = &a1 * vv.subcols(0, k);
    let uh = u.subcols(0, k).adjoint().to_owned();
    let core = &uh * &a1v;
    for j in 0..k {
        for i in 0..k {
            b[(i, j)] = core[(i, j)] / sigma[j];
        }
    }
    let eig = b
        .eigenvalues()
        .map_err(|e| FprError::SingularSystem(format!("reduced eigenproblem failed: {e:?}")))?;
    let mut out = Vec::new();
    for lam in eig {
        if !c.contains(lam) {
            continue;
        }
        let smin = smallest_singular_value(&t(lam)?)?;
        if smin <= 10.0 * tol * scale {
            out.push(lam);
        }
    }
    out.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn newton_examples() {
        let r = newton_complex(|z| z * z + 1.0, c(0.5, 0.8), 1e-14, 50).unwrap();
        assert!((r - c(0.0, 1.0)).norm() < 1e-12);
        let r = newton_complex(|z| z.exp() - 1.0, c(0.1, 0.0), 1e-14, 50).unwrap();
        assert!(r.norm() < 1e-12);
        let e = newton_complex(|_| c(1.0, 0.0), c(0.0, 0.0), 1e-12, 50);
        assert!(matches!(e, Err(FprError::Convergence { .. })));
    }

    #[test]
    fn counting_examples() {
        let sq = ContourSpec::rectangle(c(0.0, 0.0), 2.0, 2.0);
        assert_eq!(contour_count(|z| z * z * z - 1.0, &sq).unwrap(), 3);
        let disk = ContourSpec::circle(c(0.0, 0.0), 1.0);
        assert_eq!(contour_count(|z| 1.0 / z, &disk).unwrap(), -1);
        assert_eq!(contour_count(|z| (z - 0.3).powu(2) * (z + c(0.0, 2.0)), &disk).unwrap(), 2);
    }

    #[test]
    fn counting_rejects_zero_on_contour() {
        let disk = ContourSpec::circle(c(0.0, 0.0), 1.0).with_points(64);
        let r = contour_count(|z| z - 1.0, &disk);
        assert!(matches!(r, Err(FprError::ContourTooClose { .. })));
        assert!(contour_count(|z| z, &ContourSpec::circle(c(0.0, 0.0), 1.0).with_points(8)).is_err());
    }

    fn diag(a: Complex64, b: Complex64) -> Mat<c64> {
        let mut m = Mat::<c64>::zeros(2, 2);
        m[(0, 0)] = a;
        m[(1, 1)] = b;
        m
    }

    #[test]
    fn beyn_diagonal_families() {
        let r = beyn_roots(|z| Ok(diag(z - 1.0, z - c(0.0, 2.0))), &ContourSpec::circle(c(1.0, 0.0), 0.5), 2, 1e-10)
            .unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 1.0).norm() < 1e-10);
        let r = beyn_roots(|z| Ok(diag(z - 1.0, z - 1.2)), &ContourSpec::circle(c(1.1, 0.0), 0.5), 2, 1e-10).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[0] - 1.0).norm() < 1e-10 && (r[1] - 1.2).norm() < 1e-10);
    }

    #[test]
    fn beyn_detects_saturated_probe() {
        let t = |z: Complex64| {
            let mut m = Mat::<c64>::zeros(3, 3);
            m[(0, 0)] = z - 1.0;
            m[(1, 1)] = z - 1.1;
            m[(2, 2)] = z + 5.0;
            Ok(m)
        };
        let r = beyn_roots(t, &ContourSpec::circle(c(1.05, 0.0), 0.3), 1, 1e-10);
        assert!(matches!(r, Err(FprError::RankDeficientProbe { .. })));
    }

    #[test]
    fn beyn_coupled_family() {
        // T(z) = A - z I with a non-normal A; eigenvalues 0.5 and 2 (outside).
        let t = |z: Complex64| {
            let mut m = Mat::<c64>::zeros(2, 2);
            m[(0, 0)] = c(0.5, 0.0) - z;
            m[(0, 1)] = c(3.0, 0.0);
            m[(1, 1)] = c(2.0, 0.0) - z;
            Ok(m)
        };
        let r = beyn_roots(t, &ContourSpec::circle(c(0.4, 0.0), 0.5).with_points(64), 2, 1e-10).unwrap();
        assert_eq!(r.len(), 1);
        assert!((r[0] - 0.5).norm() < 1e-10);
    }
}
