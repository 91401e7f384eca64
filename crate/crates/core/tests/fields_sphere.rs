//! Scattering, far-field, prediction and resolvent checks on the sphere.

use fpr_core::fields::*;
use fpr_core::medium::{ball_geometry, make_medium, minnaert_pair_asymptotic, Medium};
use fpr_core::modal::{ball_neumann_roots, fp_shift, refine_resonance, NeumannMode};
use fpr_core::specfun::{gauss_legendre, legendre_p, sph_h1};
use num_complex::Complex64;
use std::f64::consts::PI;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn mode_11(m: &Medium) -> NeumannMode {
    ball_neumann_roots(1, 1, m.c1()).unwrap().into_iter().find(|r| r.n == 1 && r.k == 1).unwrap()
}

fn contrast_medium(tau: f64) -> Medium {
    // c0 = 2, c1 = 1, rho1 / rho0 = 2
    make_medium(1.0, 4.0, 2.0, 2.0, tau).unwrap()
}

#[test]
fn interface_and_flux_residuals() {
    for m in [Medium::unit(1e-3).unwrap(), Medium::unit(1.0).unwrap(), contrast_medium(1e-4)] {
        for kappa in [0.05, 0.7, 2.08, 5.3] {
            let sol = solve_scattering(&m, kappa, None).unwrap();
            for (n, (c, f)) in sol.interface_residuals().unwrap().into_iter().enumerate() {
                assert!(c <= 1e-10 && f <= 1e-10, "n = {n}, kappa = {kappa}: {c:e} {f:e}");
            }
        }
    }
}

#[test]
fn optical_theorem() {
    for m in [Medium::unit(1e-5).unwrap(), Medium::unit(1e-3).unwrap(), contrast_medium(0.3)] {
        for kappa in [0.01, 0.3, 2.0826, 4.0] {
            let sol = solve_scattering(&m, kappa, None).unwrap();
            let forward = far_field(&sol, &[0.0]).unwrap().values[0];
            let sigma = sol.scattering_cross_section();
            let rhs = forward.im / sol.k0();
            assert!((sigma - rhs).abs() <= 1e-6 * sigma.abs(), "{sigma} vs {rhs}");
        }
    }
}

#[test]
fn interior_coefficient_peaks_at_the_fabry_perot_frequency() {
    let m = Medium::unit(1e-3).unwrap();
    let mode = mode_11(&m);
    let res = refine_resonance(1, fp_shift(&mode, &m).unwrap().z_predicted, &m, 1e-12).unwrap();
    let on = solve_scattering(&m, res.value.re, None).unwrap().b[1].norm();
    let off = solve_scattering(&m, mode.z0 + 0.1, None).unwrap().b[1].norm();
    assert!(on >= 10.0 * off, "{on} vs {off}");
}

#[test]
fn conjugate_convention_gives_conjugate_solution() {
    // With e^{+i omega t} the outgoing function is conj(h_n) and the plane
    // wave has coefficients conj(a_n); the 2x2 solve then returns conj(b, c).
    let m = contrast_medium(1e-2);
    let kappa = 1.9;
    let sol = solve_scattering(&m, kappa, Some(8)).unwrap();
    let (k0, k1) = (kappa / m.c0(), kappa / m.c1());
    for n in 0..=8 {
        let re = |z: f64| fpr_core::specfun::sph_jy(n, Complex64::new(z, 0.0)).unwrap();
        let (p0, p1) = (re(k0), re(k1));
        let (h, hp) = p0.h1();
        let (h, hp) = (h.conj(), hp.conj());
        let a = sol.a[n].conj();
        let (w0, w1) = (k0 / m.rho0, k1 / (m.rho1 * m.tau));
        let det = w1 * p1.jp * h - w0 * p1.j * hp;
        let b = a * w0 * (h * p0.jp - p0.j * hp) / det;
        let c = a * (w0 * p1.j * p0.jp - w1 * p1.jp * p0.j) / det;
        assert!((b - sol.b[n].conj()).norm() <= 1e-12 * b.norm().max(1e-300));
        assert!((c - sol.c[n].conj()).norm() <= 1e-12 * c.norm().max(1e-300));
    }
}

#[test]
fn total_field_is_continuous_across_the_interface() {
    let m = contrast_medium(1e-3);
    let sol = solve_scattering(&m, 1.4, None).unwrap();
    for theta in [0.2f64, 1.1, 2.5] {
        let at = |r: f64| sol.eval_field(&[[r * theta.sin(), 0.0, r * theta.cos()]]).unwrap()[0];
        let d = 1e-4;
        // quadratic extrapolation to r = 1 from each side
        let outside = 3.0 * at(1.0 + d) - 3.0 * at(1.0 + 2.0 * d) + at(1.0 + 3.0 * d);
        let inside = 3.0 * at(1.0 - d) - 3.0 * at(1.0 - 2.0 * d) + at(1.0 - 3.0 * d);
        assert!((outside - inside).norm() <= 1e-8 * outside.norm().max(1.0), "{outside} {inside}");
    }
}

#[test]
fn single_mode_field_is_a_monopole() {
    let wave = ExteriorWave { k0: Complex64::new(0.8, 0.0), coeffs: vec![Complex64::new(0.5, -1.0)] };
    let h0 = sph_h1(0, Complex64::new(1.6, 0.0)).unwrap().0;
    for theta in [0.0f64, 1.0, 3.0] {
        let v = wave.eval_polar(2.0, theta.cos()).unwrap();
        assert!((v - Complex64::new(0.5, -1.0) * h0).norm() < 1e-14);
    }
    let ff = wave.far_field(&polar_grid(10)).unwrap();
    assert!(ff.values.iter().all(|v| (v - ff.values[0]).norm() < 1e-14));
    assert!((ff.values[0] - 4.0 * PI * Complex64::new(0.5, -1.0) * (-I) / 0.8).norm() < 1e-13);
}

fn annulus_error(m: &Medium, kappa: f64, mode: &NeumannMode) -> f64 {
    let sol = solve_scattering(m, kappa, None).unwrap();
    let exact = sol.scattered();
    let pred = fp_scatter_prediction(m, kappa, mode).unwrap().predicted;
    let num = annulus_norm(|r, ct| Ok(pred.eval_polar(r, ct)? - exact.eval_polar(r, ct)?)).unwrap();
    num / annulus_norm(|r, ct| exact.eval_polar(r, ct)).unwrap()
}

#[test]
fn fp_prediction_error_halves_with_tau() {
    for base in [Medium::unit(1.0).unwrap(), contrast_medium(1.0)] {
        let mode = mode_11(&base);
        let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
            .iter()
            .map(|&tau| annulus_error(&base.with_tau(tau).unwrap(), mode.z0 + 10.0 * tau, &mode))
            .collect();
        for w in errs.windows(2) {
            let ratio = w[1] / w[0];
            assert!((0.4..=0.6).contains(&ratio), "errors {errs:?}");
        }
    }
}

#[test]
fn fp_denominator_lower_bound() {
    let m = contrast_medium(1e-3);
    let mode = mode_11(&m);
    let shift = fp_shift(&mode, &m).unwrap();
    let bound = m.coupling() * shift.lambda_m.im.abs();
    let mut closest = f64::INFINITY;
    for i in 0..=400 {
        let kappa = mode.z0 - 0.01 + 0.02 * i as f64 / 400.0;
        let p = fp_scatter_prediction(&m, kappa, &mode).unwrap();
        assert!(p.denominator.norm() >= bound * (1.0 - 1e-12));
        closest = closest.min(p.denominator.norm());
    }
    let at_shift = fp_scatter_prediction(&m, shift.z_predicted.re, &mode).unwrap();
    assert!((at_shift.denominator.norm() - bound).abs() < 1e-12 * bound);
    assert!(closest >= bound);
}

#[test]
fn resonant_amplitude_has_a_finite_small_tau_limit() {
    let base = Medium::unit(1.0).unwrap();
    let mode = mode_11(&base);
    // exact interior amplitude on the normalised eigenfunction at kappa = z0
    let exact = |tau: f64| {
        let sol = solve_scattering(&base.with_tau(tau).unwrap(), mode.z0, None).unwrap();
        let a = mode.amplitude() * (3.0 / (4.0 * PI)).sqrt();
        let sign = fpr_core::specfun::sph_j(1, Complex64::new(mode.mu, 0.0)).unwrap().0.re.signum();
        sol.b[1] / (a * sign)
    };
    let (e3, e4) = (exact(1e-3), exact(1e-4));
    assert!(e3.norm() > 1.0);
    assert!((e3 - e4).norm() <= 0.05 * e4.norm(), "{e3} {e4}");
    for tau in [1e-3, 1e-4] {
        let p = fp_scatter_prediction(&base.with_tau(tau).unwrap(), mode.z0, &mode).unwrap();
        assert!((p.e_tot_coeff - e4).norm() <= 0.05 * e4.norm());
        assert!((p.b_tot / tau).norm() > 0.0);
    }
}

#[test]
fn fp_prediction_window() {
    let m = Medium::unit(1e-3).unwrap();
    let mode = mode_11(&m);
    assert!(fp_scatter_prediction(&m, mode.z0 * 1.2, &mode).is_err());
    let trivial = ball_neumann_roots(0, 1, 1.0).unwrap()[0];
    assert!(trivial.is_trivial());
    assert!(fp_scatter_prediction(&m, 0.5, &trivial).is_err());
}

fn micro_points() -> Vec<[f64; 3]> {
    [0.3, 1.0, 2.0, 2.8].iter().map(|t: &f64| [t.sin(), 0.0, t.cos()]).collect()
}

fn micro_error(eps: f64) -> f64 {
    let m = Medium::unit(eps * eps).unwrap();
    let mode = mode_11(&m);
    let omega = (mode.z0 + eps * eps) / eps;
    let xs = micro_points();
    let pred = micro_scatter_prediction(&m, eps, omega, &mode, [0.0; 3], &xs).unwrap();
    assert!((pred.alpha - 2.0).abs() < 1e-9);
    let exact = micro_exact(&m, eps, omega, [0.0; 3], &xs).unwrap();
    pred.values.iter().zip(&exact).map(|(p, e)| (p - e).norm() / e.norm()).fold(0.0, f64::max)
}

#[test]
fn micro_prediction_error_decreases_with_epsilon() {
    let errs: Vec<f64> = [0.05, 0.025, 0.0125, 0.00625].iter().map(|&e| micro_error(e)).collect();
    for w in errs.windows(2) {
        assert!(w[1] / w[0] <= 0.6, "errors {errs:?}");
    }
}

#[test]
fn micro_amplitude_is_linear_in_epsilon_at_fixed_scaled_frequency() {
    let m = Medium::unit(2.5e-3).unwrap();
    let mode = mode_11(&m);
    let kappa = mode.z0 + 2.5e-3;
    let xs = micro_points();
    let a = micro_scatter_prediction(&m, 0.05, kappa / 0.05, &mode, [0.0; 3], &xs).unwrap();
    let b = micro_scatter_prediction(&m, 0.025, kappa / 0.025, &mode, [0.0; 3], &xs).unwrap();
    for (u, v) in a.values.iter().zip(&b.values) {
        assert!((u.norm() / v.norm() - 2.0).abs() < 1e-12);
    }
}

#[test]
fn microresonator_is_anisotropic_but_minnaert_is_not() {
    let eps = 0.05;
    let m = Medium::unit(eps * eps).unwrap();
    let mode = mode_11(&m);
    let pred = micro_scatter_prediction(&m, eps, (mode.z0 + eps * eps) / eps, &mode, [0.0; 3], &micro_points()).unwrap();
    let aniso = pred.far_field.far_field(&polar_grid(180)).unwrap().anisotropy();
    assert!(aniso >= 1.5, "{aniso}");

    let (c, v) = ball_geometry(1.0);
    let zm = refine_resonance(0, minnaert_pair_asymptotic(&m, c, v).unwrap().z_plus, &m, 1e-12).unwrap().value;
    let sol = solve_scattering(&m, zm.re, None).unwrap();
    let iso = far_field(&sol, &polar_grid(180)).unwrap().anisotropy();
    assert!(iso <= 1.01, "{iso}");
}

#[test]
fn micro_translation_phase() {
    let m = Medium::unit(1e-4).unwrap();
    let mode = mode_11(&m);
    let (eps, omega) = (0.01, (mode.z0 + 1e-4) / 0.01);
    let xs = [[0.0, 0.0, 2.0], [1.5, 0.5, -1.0]];
    let y0 = [0.0, 0.0, 0.3];
    let p = micro_scatter_prediction(&m, eps, omega, &mode, y0, &xs).unwrap();
    let e = micro_exact(&m, eps, omega, y0, &xs).unwrap();
    for (a, b) in p.values.iter().zip(&e) {
        assert!((a - b).norm() <= 0.05 * b.norm(), "{a} {b}");
    }
}

/// `(1/c0^2) int G(x - y) f(y) dy` by tensor Gauss-Legendre in spherical
/// coordinates of `y`.
fn brute_convolution(k: f64, c0: f64, src: &RadialSource, x: [f64; 3]) -> Complex64 {
    let (gr, gt, gp) = (gauss_legendre(16).unwrap(), gauss_legendre(48).unwrap(), gauss_legendre(64).unwrap());
    let mut total = Complex64::new(0.0, 0.0);
    for &(a, b, val) in &src.shells {
        let (rs, wr) = gr.mapped(a, b);
        let (ps, wp) = gp.mapped(0.0, 2.0 * PI);
        for (r, w1) in rs.iter().zip(&wr) {
            for (ct, w2) in gt.nodes.iter().zip(&gt.weights) {
                let st = (1.0 - ct * ct).sqrt();
                let p = legendre_p(src.n, *ct).unwrap();
                for (phi, w3) in ps.iter().zip(&wp) {
                    let y = [r * st * phi.cos(), r * st * phi.sin(), r * ct];
                    let d = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2)).sqrt();
                    total += (I * k * d).exp() / (4.0 * PI * d) * val * p * r * r * w1 * w2 * w3;
                }
            }
        }
    }
    total / (c0 * c0)
}

#[test]
fn free_space_resolvent_matches_direct_convolution() {
    let m = make_medium(1.0, 4.0, 1.0, 4.0, 1.0).unwrap();
    for n in [0usize, 1] {
        let src = RadialSource::shell(n, 1.5, 2.0, Complex64::new(1.0, 0.5)).unwrap();
        let kappa = 1.7;
        let xs = [[0.0, 0.0, 0.3], [0.5, 0.1, 0.6], [0.9, 0.0, 0.9], [2.5, 0.3, 0.0], [0.0, -3.0, 1.0]];
        let u = resolvent_modal_apply(&m, Complex64::new(kappa, 0.0), &src, &xs).unwrap();
        for (x, v) in xs.iter().zip(&u) {
            let want = brute_convolution(kappa / m.c0(), m.c0(), &src, *x);
            assert!((v - want).norm() <= 1e-6 * want.norm().max(1e-3), "n = {n}, x = {x:?}: {v} vs {want}");
        }
    }
}

fn fd_residual(m: &Medium, kappa: Complex64, src: &RadialSource, r: f64) -> (f64, f64) {
    let sol = resolvent_radial(m, kappa, src).unwrap();
    let h = 1e-3;
    let u = |s: f64| sol.radial(s).unwrap();
    let (um, u0, up) = (u(r - h), u(r), u(r + h));
    let d1 = (up - um) / (2.0 * h);
    let d2 = (up - 2.0 * u0 + um) / (h * h);
    let c = if r < 1.0 { m.c1() } else { m.c0() };
    let nn = (src.n * (src.n + 1)) as f64;
    let lap = d2 + 2.0 * d1 / r - nn * u0 / (r * r);
    let res = c * c * lap + kappa * kappa * u0 + src.profile(r);
    let scale = (c * c * d2).norm() + (kappa * kappa * u0).norm() + src.profile(r).norm();
    (res.norm(), scale)
}

#[test]
fn resolvent_satisfies_the_radial_equation() {
    let m = Medium::unit(1e-3).unwrap();
    let kappa = Complex64::new(2.05, 0.0);
    for src in [
        RadialSource::shell(1, 0.2, 0.8, Complex64::new(1.0, 0.0)).unwrap(),
        RadialSource::shell(0, 1.3, 1.8, Complex64::new(0.0, 2.0)).unwrap(),
        RadialSource::shell(2, 0.5, 1.5, Complex64::new(1.0, 1.0)).unwrap(),
    ] {
        for r in [0.1, 0.35, 0.6, 0.9, 1.2, 1.45, 1.65, 2.2, 3.0] {
            if src.shells.iter().any(|&(a, b, _)| (r - a).abs() < 0.01 || (r - b).abs() < 0.01) {
                continue;
            }
            let (res, scale) = fd_residual(&m, kappa, &src, r);
            assert!(res <= 1e-4 * scale, "n = {}, r = {r}: {res:e} vs {scale:e}", src.n);
        }
    }
}

#[test]
fn resolvent_flux_and_continuity_at_the_interface() {
    let m = contrast_medium(1e-3);
    let src = RadialSource::shell(1, 0.3, 0.9, Complex64::new(1.0, 0.0)).unwrap();
    let sol = resolvent_radial(&m, Complex64::new(2.0, 0.1), &src).unwrap();
    let u = |r: f64| sol.radial(r).unwrap();
    let d = 1e-4;
    let inside = 3.0 * u(1.0 - d) - 3.0 * u(1.0 - 2.0 * d) + u(1.0 - 3.0 * d);
    let outside = 3.0 * u(1.0 + d) - 3.0 * u(1.0 + 2.0 * d) + u(1.0 + 3.0 * d);
    assert!((inside - outside).norm() <= 1e-8 * outside.norm(), "{inside} {outside}");
    // one-sided derivatives at r = 1 from the quadratic through d, 2d, 3d
    let din = (5.0 * u(1.0 - d) - 8.0 * u(1.0 - 2.0 * d) + 3.0 * u(1.0 - 3.0 * d)) / (2.0 * d);
    let dout = (-5.0 * u(1.0 + d) + 8.0 * u(1.0 + 2.0 * d) - 3.0 * u(1.0 + 3.0 * d)) / (2.0 * d);
    let (fi, fo) = (din / (m.rho1 * m.tau), dout / m.rho0);
    assert!((fi - fo).norm() <= 1e-4 * fo.norm(), "{fi} {fo}");
}

fn scan_grid(z0: f64) -> Vec<f64> {
    (0..=40).map(|i| z0 - 0.01 + 0.0005 * i as f64).collect()
}

#[test]
fn enhancement_grows_like_inverse_tau_for_a_matched_source() {
    let m = Medium::unit(1e-3).unwrap();
    let mode = mode_11(&m);
    let src = RadialSource::shell(1, 0.2, 0.8, Complex64::new(1.0, 0.0)).unwrap();
    let taus = [1e-3, 5e-4, 2.5e-4];
    let rows = enhancement_scan(&m, &taus, &src, &scan_grid(mode.z0)).unwrap();
    for w in rows.windows(2) {
        let ratio = w[1].peak_norm / w[0].peak_norm;
        assert!((1.8..=2.2).contains(&ratio), "{rows:?}");
    }
    for row in &rows {
        let shift = fp_shift(&mode, &m.with_tau(row.tau).unwrap()).unwrap().z_predicted.re - mode.z0;
        let seen = row.peak_kappa - mode.z0;
        assert!((seen - shift).abs() <= 0.2 * shift.abs(), "tau {}: {seen} vs {shift}", row.tau);
    }
    // linearity: the argmax does not move when the source is rescaled
    let scaled = enhancement_scan(&m, &taus[..1], &src.scaled(Complex64::new(-3.0, 7.0)), &scan_grid(mode.z0)).unwrap();
    assert_eq!(scaled[0].peak_kappa, rows[0].peak_kappa);
}

#[test]
fn off_mode_source_is_not_enhanced() {
    let m = Medium::unit(1e-3).unwrap();
    let mode = mode_11(&m);
    let src = RadialSource::shell(2, 0.2, 0.8, Complex64::new(1.0, 0.0)).unwrap();
    let rows = enhancement_scan(&m, &[1e-3, 5e-4, 2.5e-4], &src, &scan_grid(mode.z0)).unwrap();
    for w in rows.windows(2) {
        assert!(w[1].peak_norm / w[0].peak_norm <= 1.2, "{rows:?}");
    }
}
