//! Subcommand implementations.

use crate::config::{self, AsymptoticsConfig, Geometry, Scenario};
use crate::output::{fmt17, report, write_report, Check, Table};
use crate::{numerical, CliError};
use fpr_core::bem::{build_sphere_mesh, build_spheroid_mesh, capacitance, read_off, SurfaceMesh};
use fpr_core::fields::{
    annulus_norm, enhancement_scan, far_field, fp_scatter_prediction, micro_exact, micro_scatter_prediction, polar_grid,
    solve_scattering, RadialSource,
};
use fpr_core::medium::{ball_geometry, minnaert_pair_asymptotic, Medium};
use fpr_core::modal::{ball_neumann_roots, dispersion_regularized, fp_shift, refine_resonance, resonance_table, NeumannMode};
use fpr_core::rootfind::{contour_count, ContourSpec};
use fpr_core::timedomain::{
    contour_synthesize, linspace, minnaert_pole_approx, time_window_end, ContourSynthesisSpec, PulseSource, Traces,
};
use num_complex::Complex64;
use std::path::{Path, PathBuf};

/// Options shared by all subcommands.
pub struct Context {
    pub out: PathBuf,
    pub tol: Option<f64>,
    pub mesh: Option<PathBuf>,
}

impl Context {
    fn path(&self, name: &Option<String>, default: &str) -> PathBuf {
        self.out.join(name.as_deref().unwrap_or(default))
    }
}

fn unit_sphere_only(s: &Scenario, command: &str) -> Result<(), CliError> {
    match &s.config.geometry {
        None => Ok(()),
        Some(Geometry::Sphere { radius, .. }) if *radius == 1.0 => Ok(()),
        _ => Err(CliError::Validation(format!("{command} works on the unit sphere only"))),
    }
}

fn mode_from(n: usize, k: usize, c1: f64) -> Result<NeumannMode, CliError> {
    if k == 0 {
        return Err(CliError::Validation("mode.k must be at least 1".into()));
    }
    let modes = numerical("ball_neumann_roots", ball_neumann_roots(n, k, c1))?;
    modes
        .into_iter()
        .filter(|m| m.n == n && !m.is_trivial())
        .nth(k - 1)
        .ok_or_else(|| CliError::Validation(format!("no Neumann mode ({n}, {k})")))
}

fn opt_cell(x: Option<f64>) -> String {
    x.map(fmt17).unwrap_or_default()
}

pub fn resonances(s: &Scenario, ctx: &Context) -> Result<(), CliError> {
    unit_sphere_only(s, "resonances")?;
    let modes = config::require(&s.config.modes, "modes")?;
    let tol = ctx.tol.unwrap_or(1e-12);
    let m = &s.medium;
    let table = numerical("resonance_table", resonance_table(modes.n_max, modes.k_max, m, tol))?;
    let mut t = Table::new(["n", "k", "mu", "z0", "re_z", "im_z", "residual", "re_lambdaM", "im_lambdaM", "tau"]);
    for e in &table {
        let (z, res) = match &e.outcome {
            Ok(r) => (r.value, r.residual),
            Err(err) => {
                eprintln!("refine_resonance failed for mode ({}, {}): {err}", e.mode.n, e.mode.k);
                (Complex64::new(f64::NAN, f64::NAN), f64::NAN)
            }
        };
        t.push(vec![
            e.mode.n.to_string(),
            e.mode.k.to_string(),
            fmt17(e.mode.mu),
            fmt17(e.mode.z0),
            fmt17(z.re),
            fmt17(z.im),
            fmt17(res),
            opt_cell(e.lambda_m.map(|l| l.re)),
            opt_cell(e.lambda_m.map(|l| l.im)),
            fmt17(m.tau),
        ]);
    }
    t.write(&ctx.path(&s.config.outputs.csv, "resonances.csv"))
}

/// Minnaert remainder, Fabry-Perot first-order law, sign of `Im lambda_M`
/// and argument-principle counts, with the medium's material constants.
pub fn verify_asymptotics(s: &Scenario, ctx: &Context) -> Result<(), CliError> {
    unit_sphere_only(s, "verify-asymptotics")?;
    let cfg = s.config.asymptotics.clone().unwrap_or_default();
    let modes = s.config.modes.unwrap_or(config::Modes { n_max: 1, k_max: 1 });
    let tol = ctx.tol.unwrap_or(1e-13);
    let checks = asymptotic_checks(&s.medium, &cfg, modes.n_max, modes.k_max, tol)?;
    write_report(&report(checks), &ctx.path(&s.config.outputs.report, "asymptotics.json"))
}

fn with_tau(m: &Medium, tau: f64) -> Result<Medium, CliError> {
    m.with_tau(tau).map_err(|e| CliError::Validation(format!("tau = {tau}: {e}")))
}

fn asymptotic_checks(base: &Medium, cfg: &AsymptoticsConfig, n_max: usize, k_max: usize, tol: f64) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let (cap, vol) = ball_geometry(1.0);

    let mut ks = Vec::new();
    for &tau in &cfg.minnaert_taus {
        let m = with_tau(base, tau)?;
        let d = numerical("minnaert_pair_asymptotic", minnaert_pair_asymptotic(&m, cap, vol))?;
        let r = numerical("refine_resonance", refine_resonance(0, d.z_plus, &m, tol))?;
        ks.push((r.value - d.z_plus).norm() / tau.powf(1.5));
        if tau <= 1e-4 {
            checks.push(Check::at_most(format!("minnaert_re_rel_error_tau_{tau:e}"), (r.value.re / d.omega_m - 1.0).abs(), 5e-3));
            checks.push(Check::at_most(format!("minnaert_im_rel_error_tau_{tau:e}"), (r.value.im / d.z_plus.im - 1.0).abs(), 0.05));
        }
    }
    if ks.len() >= 2 {
        let (lo, hi) = ks.iter().fold((f64::INFINITY, 0.0f64), |a, &k| (a.0.min(k), a.1.max(k)));
        checks.push(Check::within("minnaert_remainder_constant_spread", hi / lo, None, Some(2.0)));
    }

    let c1 = base.c1();
    let modes: Vec<NeumannMode> = numerical("ball_neumann_roots", ball_neumann_roots(n_max, k_max, c1))?
        .into_iter()
        .filter(|m| !m.is_trivial())
        .collect();
    let mut taus = cfg.fp_taus.clone();
    taus.sort_by(|a, b| b.total_cmp(a));
    for md in &modes {
        let mut errs = Vec::new();
        for &tau in &taus {
            let m = with_tau(base, tau)?;
            let shift = numerical("fp_shift", fp_shift(md, &m))?;
            let r = numerical("refine_resonance", refine_resonance(md.n, shift.z_predicted, &m, tol))?;
            errs.push((r.value - shift.z_predicted).norm());
        }
        for (i, w) in errs.windows(2).enumerate() {
            checks.push(Check::at_most(format!("fp_first_order_ratio_n{}_k{}_{i}", md.n, md.k), w[1] / w[0], 0.3));
        }
    }

    let m = with_tau(base, cfg.count_tau)?;
    let sweep = numerical("ball_neumann_roots", ball_neumann_roots(10, 5, c1))?;
    let mut bad = 0;
    for md in sweep.iter().filter(|m| !m.is_trivial()) {
        if numerical("fp_shift", fp_shift(md, &m))?.lambda_m.im >= 0.0 {
            bad += 1;
        }
    }
    checks.push(Check::equals("lambda_m_nonnegative_imaginary_count", bad as f64, 0.0));

    let disk = ContourSpec::circle(Complex64::new(0.0, 0.0), 0.05);
    let n0 = numerical("contour_count", count_zeros(0, &m, &disk))?;
    checks.push(Check::equals("minnaert_disk_count", n0 as f64, 2.0));
    for md in &modes {
        let rect = ContourSpec::rectangle(Complex64::new(md.z0, 0.0), 0.2 * md.z0, 0.1 * md.z0);
        let n = numerical("contour_count", count_zeros(md.n, &m, &rect))?;
        checks.push(Check::equals(format!("rectangle_count_n{}_k{}", md.n, md.k), n as f64, 1.0));
    }
    for n in 0..=n_max {
        let roots = numerical("neumann_roots_of_order", fpr_core::modal::neumann_roots_of_order(n, 2))?;
        let (a, b) = (c1 * roots[0], c1 * roots[1]);
        let strip = ContourSpec::rectangle(Complex64::new(0.5 * (a + b), 0.0), 0.3 * (b - a), 0.05 * (b - a));
        let count = numerical("contour_count", count_zeros(n, &m, &strip))?;
        checks.push(Check::equals(format!("mid_gap_strip_count_n{n}"), count as f64, 0.0));
    }
    Ok(checks)
}

fn count_zeros(n: usize, m: &Medium, c: &ContourSpec) -> fpr_core::Result<i64> {
    // probe once so evaluation failures surface as errors instead of panics
    dispersion_regularized(n, c.center + Complex64::new(c.size(), 0.0), m)?;
    contour_count(|z| dispersion_regularized(n, z, m).unwrap_or(Complex64::new(f64::NAN, f64::NAN)), c)
}

pub fn scan_resolvent(s: &Scenario, ctx: &Context) -> Result<(), CliError> {
    unit_sphere_only(s, "scan-resolvent")?;
    let taus = config::require(&s.config.tau_list, "tauList")?;
    let grid = config::require(&s.config.kappa_grid, "kappaGrid")?.points();
    let src = config::require(&s.config.source, "source")?;
    let shell = RadialSource::shell(src.n, src.inner, src.outer, Complex64::new(src.amplitude, 0.0))
        .map_err(|e| CliError::Validation(format!("source: {e}")))?;
    for &tau in taus {
        with_tau(&s.medium, tau)?;
    }
    let rows = numerical("enhancement_scan", enhancement_scan(&s.medium, taus, &shell, &grid))?;
    let mut t = Table::new(["tau", "peak_kappa", "peak_norm"]);
    for r in &rows {
        t.push_numbers(&[r.tau, r.peak_kappa, r.peak_norm]);
    }
    t.write(&ctx.path(&s.config.outputs.csv, "scan.csv"))?;
    let mut checks = Vec::new();
    for (i, w) in rows.windows(2).enumerate() {
        if (w[1].tau / w[0].tau - 0.5).abs() < 1e-12 {
            checks.push(Check::within(format!("enhancement_ratio_{i}"), w[1].peak_norm / w[0].peak_norm, Some(1.8), Some(2.2)));
        }
    }
    write_report(&report(checks), &ctx.path(&s.config.outputs.report, "scan.json"))
}

pub fn scatter(s: &Scenario, ctx: &Context) -> Result<(), CliError> {
    unit_sphere_only(s, "scatter")?;
    let kappa = *config::require(&s.config.kappa, "kappa")?;
    let m = &s.medium;
    let sol = numerical("solve_scattering", solve_scattering(m, kappa, None))?;
    let mut t = Table::new(["n", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c"]);
    for n in 0..=sol.n_max {
        let mut row = vec![n.to_string()];
        for v in [sol.a[n], sol.b[n], sol.c[n]] {
            row.push(fmt17(v.re));
            row.push(fmt17(v.im));
        }
        t.push(row);
    }
    t.write(&ctx.path(&s.config.outputs.csv, "scatter.csv"))?;

    let res = numerical("interface_residuals", sol.interface_residuals())?;
    let worst = res.iter().fold(0.0f64, |a, (j, f)| a.max(*j).max(*f));
    let sigma = sol.scattering_cross_section();
    let forward = numerical("far_field", far_field(&sol, &[0.0]))?.values[0];
    let mut checks = vec![
        Check::at_most("interface_residual", worst, 1e-10),
        Check::at_most("optical_theorem_rel_error", (sigma - forward.im / sol.k0()).abs() / sigma.abs(), 1e-6),
    ];
    if let Some(mr) = s.config.mode {
        let md = mode_from(mr.n, mr.k, m.c1())?;
        let pred = numerical("fp_scatter_prediction", fp_scatter_prediction(m, kappa, &md))?;
        let sc = sol.scattered();
        let diff = numerical("annulus_norm", annulus_norm(|r, ct| Ok(sc.eval_polar(r, ct)? - pred.predicted.eval_polar(r, ct)?)))?;
        let full = numerical("annulus_norm", annulus_norm(|r, ct| sc.eval_polar(r, ct)))?;
        checks.push(Check::within("fp_prediction_rel_error", diff / full, None, None));
    }
    write_report(&report(checks), &ctx.path(&s.config.outputs.report, "scatter.json"))
}

pub fn farfield(s: &Scenario, ctx: &Context) -> Result<(), CliError> {
    unit_sphere_only(s, "farfield")?;
    let kappa = *config::require(&s.config.kappa, "kappa")?;
    let count = s.config.far_field.map(|f| f.count).unwrap_or(181);
    if count < 2 {
        return Err(CliError::Validation("farField.count must be at least 2".into()));
    }
    let sol = numerical("solve_scattering", solve_scattering(&s.medium, kappa, None))?;
    let pat = numerical("far_field", far_field(&sol, &polar_grid(count - 1)))?;
    let mut t = Table::new(["theta", "re_f", "im_f", "abs_f"]);
    for (th, v) in pat.theta.iter().zip(&pat.values) {
        t.push_numbers(&[*th, v.re, v.im, v.norm()]);
    }
    t.write(&ctx.path(&s.config.outputs.csv, "farfield.csv"))
}

pub fn micro(s: &Scenario, ctx: &Context) -> Result<(), CliError> {
    unit_sphere_only(s, "micro")?;
    let mc = config::require(&s.config.micro, "micro")?;
    let mr = config::require(&s.config.mode, "mode")?;
    let m = &s.medium;
    let md = mode_from(mr.n, mr.k, m.c1())?;
    let omega = match (mc.omega, mc.alpha) {
        (Some(w), None) => w,
        (None, Some(a)) => (md.z0 + mc.epsilon.powf(a)) / mc.epsilon,
        _ => return Err(CliError::Validation("micro needs exactly one of `omega` and `alpha`".into())),
    };
    let pred = numerical("micro_scatter_prediction", micro_scatter_prediction(m, mc.epsilon, omega, &md, mc.y0, &mc.points))?;
    let exact = numerical("micro_exact", micro_exact(m, mc.epsilon, omega, mc.y0, &mc.points))?;
    let mut t = Table::new(["x", "y", "z", "re_pred", "im_pred", "re_exact", "im_exact"]);
    for ((x, p), e) in mc.points.iter().zip(&pred.values).zip(&exact) {
        t.push_numbers(&[x[0], x[1], x[2], p.re, p.im, e.re, e.im]);
    }
    t.write(&ctx.path(&s.config.outputs.csv, "micro.csv"))?;
    let pat = numerical("far_field", pred.far_field.far_field(&polar_grid(mc.far_field_count.max(2) - 1)))?;
    let mut f = Table::new(["theta", "re_f", "im_f", "abs_f"]);
    for (th, v) in pat.theta.iter().zip(&pat.values) {
        f.push_numbers(&[*th, v.re, v.im, v.norm()]);
    }
    f.write(&ctx.out.join("micro_farfield.csv"))?;
    let err = pred.values.iter().zip(&exact).fold(0.0f64, |a, (p, e)| a.max((p - e).norm() / e.norm()));
    let checks = vec![
        Check::within("alpha", pred.alpha, None, None),
        Check::within("far_field_anisotropy", pat.anisotropy(), None, None),
        Check::within("max_pointwise_rel_error", err, None, None),
    ];
    write_report(&report(checks), &ctx.path(&s.config.outputs.report, "micro.json"))
}

fn traces_table(tr: &Traces) -> Table {
    let mut header = vec!["t".to_string()];
    for r in &tr.obs_radii {
        header.push(format!("re_u_r{r}"));
        header.push(format!("im_u_r{r}"));
    }
    let mut t = Table::new(header);
    for (k, &time) in tr.times.iter().enumerate() {
        let mut row = vec![time];
        for o in 0..tr.obs_radii.len() {
            row.push(tr.values[o][k]);
            row.push(tr.imag[o][k]);
        }
        t.push_numbers(&row);
    }
    t
}

pub fn timedomain(s: &Scenario, ctx: &Context) -> Result<(), CliError> {
    unit_sphere_only(s, "timedomain")?;
    let pc = config::require(&s.config.pulse, "pulse")?;
    let cc = config::require(&s.config.contour, "contour")?;
    let m = &s.medium;
    let src = PulseSource {
        duration: pc.duration,
        p: pc.p,
        shell_inner: pc.shell_inner,
        shell_outer: pc.shell_outer,
        amplitude: pc.amplitude,
    };
    src.validate().map_err(|e| CliError::Validation(format!("pulse: {e}")))?;
    if cc.samples < 2 {
        return Err(CliError::Validation("contour.samples must be at least 2".into()));
    }
    let eps = cc.epsilon;
    let t_window = numerical("time_window_end", time_window_end(m, eps))?;
    let t_end = cc.t_end.unwrap_or(t_window);
    let tol = ctx.tol.or(cc.tolerance).unwrap_or(1e-6);
    let times = linspace(cc.t_start, t_end, cc.samples);
    let spec = numerical(
        "ContourSynthesisSpec::auto",
        ContourSynthesisSpec::auto(m, eps, &src, times.clone(), cc.obs_radii.clone(), tol),
    )?;
    let synth = numerical("contour_synthesize", contour_synthesize(m, eps, &src, &spec))?;
    traces_table(&synth).write(&ctx.path(&s.config.outputs.csv, "timedomain.csv"))?;

    let mut checks = Vec::new();
    for (o, r) in cc.obs_radii.iter().enumerate() {
        let peak = synth.values[o].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let imag = synth.imag[o].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        checks.push(Check::at_most(format!("realness_r{r}"), if peak > 0.0 { imag / peak } else { imag }, 1e-8));
    }
    // the large-time comparison on the samples inside (2T, t_max]
    let late: Vec<usize> = (0..times.len()).filter(|&k| times[k] > 2.0 * src.duration && times[k] <= t_window).collect();
    if late.len() >= 10 {
        let lt: Vec<f64> = late.iter().map(|&k| times[k]).collect();
        let pole = numerical("minnaert_pole_approx", minnaert_pole_approx(m, eps, &src, &lt, &cc.obs_radii))?;
        traces_table(&pole).write(&ctx.out.join("timedomain_pole.csv"))?;
        for (o, r) in cc.obs_radii.iter().enumerate() {
            let (mut num, mut den) = (0.0, 0.0);
            for (i, &k) in late.iter().enumerate() {
                num += (synth.values[o][k] - pole.values[o][i]).powi(2);
                den += synth.values[o][k].powi(2);
            }
            checks.push(Check::at_most(format!("large_time_rel_error_r{r}"), (num / den).sqrt(), 0.1));
        }
    }
    write_report(&report(checks), &ctx.path(&s.config.outputs.report, "timedomain.json"))
}

fn mesh_for(s: Option<&Scenario>, ctx: &Context) -> Result<SurfaceMesh, CliError> {
    let invalid = |e: fpr_core::FprError| CliError::Validation(format!("mesh: {e}"));
    if let Some(p) = &ctx.mesh {
        return read_mesh(p);
    }
    let Some(s) = s else {
        return Err(CliError::Validation("capacitance needs --mesh or a config with `geometry`".into()));
    };
    match config::require(&s.config.geometry, "geometry")? {
        Geometry::Sphere { radius, refinement } => build_sphere_mesh(*refinement).and_then(|m| m.scaled(*radius)).map_err(invalid),
        Geometry::Spheroid { a, b, refinement } => build_spheroid_mesh(*refinement, *a, *b).map_err(invalid),
        Geometry::Mesh(_) => read_mesh(s.mesh_path.as_ref().unwrap()),
    }
}

fn read_mesh(p: &Path) -> Result<SurfaceMesh, CliError> {
    if !p.is_file() {
        return Err(CliError::Validation(format!("mesh {} does not exist", p.display())));
    }
    read_off(p).map_err(|e| CliError::Validation(format!("mesh {}: {e}", p.display())))
}

pub fn capacitance_cmd(s: Option<&Scenario>, ctx: &Context) -> Result<(), CliError> {
    let mesh = mesh_for(s, ctx)?;
    let c = numerical("capacitance", capacitance(&mesh))?;
    println!("{}", fmt17(c));
    Ok(())
}
