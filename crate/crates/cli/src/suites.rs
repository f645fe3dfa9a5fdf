//! One driver per command. Each writes its tables, verdicts and plots into
//! the output directory and reports whether every verdict held.

use std::f64::consts::PI;
use std::path::PathBuf;

use rayon::prelude::*;
use renorm_lab::covkernel::{asymmetric_bl_check, covariance_direct, random_family, KernelMeasure};
use renorm_lab::cramer::{clt_error_curve, coarse_grained_hamiltonian, cramer_profile, direct_hbar2};
use renorm_lab::ensemble::{
    be_hs_lower_bound, hierarchy_suite, macro_gradient_identity, marginal_check, CanonicalEnsemble, FieldFunction, HierarchyGrids,
    FIELD_FAMILY,
};
use renorm_lab::potential::validate_splitting;
use renorm_lab::renorm::{convexity_report, iterate, knot_quad_config, renormalize, Parent};
use renorm_lab::spectral::{default_nodes, default_spacings, lsi_upper_bound, sg_constant};
use renorm_lab::{catalog, Interval, PotentialSpec, SingleSite};
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::error::CliError;
use crate::output::{provenance, read_verdicts, write_csv, Cell, Verdicts};
use crate::plot::{emit_plot, PlotSpec, Series, Style};

pub struct Outcome {
    pub ok: bool,
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

fn potential(cfg: &RunConfig) -> Result<PotentialSpec, CliError> {
    Ok(catalog(&cfg.potential, &cfg.params)?)
}

fn write_svg(cfg: &RunConfig, name: &str, series: &[Series], spec: PlotSpec<'_>) -> Result<PathBuf, CliError> {
    let prov = provenance(cfg);
    let spec = PlotSpec {
        provenance: &prov,
        ..spec
    };
    let path = cfg.output_dir.join(name);
    std::fs::write(&path, emit_plot(series, &spec)?)?;
    Ok(path)
}

fn write_json(cfg: &RunConfig, name: &str, value: &impl Serialize) -> Result<PathBuf, CliError> {
    #[derive(Serialize)]
    struct Wrapped<'a, T: Serialize> {
        provenance: String,
        result: &'a T,
    }
    let path = cfg.output_dir.join(name);
    let text = serde_json::to_string_pretty(&Wrapped {
        provenance: provenance(cfg),
        result: value,
    })
    .expect("serializable");
    std::fs::write(&path, text + "\n")?;
    Ok(path)
}

fn finish(v: Verdicts<'_>, mut files: Vec<PathBuf>, mut summary: Vec<String>) -> Result<Outcome, CliError> {
    files.push(v.write()?);
    let failed = v.records().iter().filter(|r| !r.holds).count();
    summary.push(format!("{} verdicts, {} failed", v.records().len(), failed));
    for r in v.records().iter().filter(|r| !r.holds) {
        summary.push(format!("FAILED {}: lhs {:e} > rhs {:e}", r.case_id, r.lhs, r.rhs));
    }
    Ok(Outcome {
        ok: v.all_hold(),
        files,
        summary,
    })
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(&cfg.output_dir)?;
    match cfg.command {
        Command::Validate => validate(cfg),
        Command::Renorm => renorm(cfg),
        Command::Cramer => cramer(cfg),
        Command::Clt => clt(cfg),
        Command::Kernel => kernel(cfg),
        Command::Bl => bl(cfg),
        Command::Hierarchy => hierarchy(cfg),
        Command::Spectrum => spectrum(cfg),
        Command::BwScaling => bw_scaling(cfg),
        Command::Report => report(cfg),
    }
}

/// Reports the observed splitting constants; never fails a verdict.
fn validate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = potential(cfg)?;
    let window = Interval::symmetric(cfg.window("validate"))
        .intersect(&p.support().shrink(1e-6))
        .ok_or_else(|| CliError::Config("validation window misses the support".into()))?;
    let r = validate_splitting(&p, window, cfg.grid("validate_points") as usize)?;
    let rows = vec![vec![
        Cell::from(p.label()),
        r.c0_observed.into(),
        r.b0_observed.into(),
        r.b1_observed.into(),
        r.osc_delta.into(),
        window.lo.into(),
        window.hi.into(),
        r.admissible.into(),
    ]];
    let csv = write_csv(
        cfg,
        "validate.csv",
        &["potential", "c0", "b0", "b1", "osc_delta", "window_lo", "window_hi", "admissible"],
        &rows,
    )?;
    let json = write_json(cfg, "validate.json", &r)?;
    Ok(Outcome {
        ok: true,
        files: vec![csv, json],
        summary: vec![format!(
            "{}: c0={:.6} b0={:.6} b1={:.6} osc={:.6} admissible={}",
            p.label(),
            r.c0_observed,
            r.b0_observed,
            r.b1_observed,
            r.osc_delta,
            r.admissible
        )],
    })
}

fn renorm(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = potential(cfg)?;
    let gens = iterate(
        &p,
        cfg.generations,
        Interval::symmetric(cfg.window("renorm")),
        cfg.grid("knots") as usize,
    )?;
    let mut v = Verdicts::new(cfg);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut summary = Vec::new();
    let plot_window = Interval::symmetric(cfg.window("convexity"));
    let qcfg = knot_quad_config();
    for (k, t) in gens.iter().enumerate() {
        let parent: Parent<'_> = if k == 0 { (&p).into() } else { (&gens[k - 1]).into() };
        let fidelity = t.fidelity_residual(parent, 32, cfg.seed.wrapping_add(k as u64), &qcfg)?;
        v.check(format!("M={} fidelity", k + 1), fidelity, cfg.tol("fidelity"));
        v.check(format!("M={} d2-crosscheck", k + 1), t.d2_crosscheck(), cfg.tol("crosscheck"));
        let conv = convexity_report(t, plot_window)?;
        summary.push(format!(
            "M={}: window [{:.3}, {:.3}], min d2 on {} = {:.6} at {:.4}",
            k + 1,
            t.window().lo,
            t.window().hi,
            plot_window,
            conv.min_d2,
            conv.argmin
        ));
        let mut pts = Vec::new();
        for y in t.window().linspace(401) {
            let (val, d1, d2) = t.eval(y)?;
            rows.push(vec![Cell::from(k + 1), y.into(), val.into(), d1.into(), d2.into()]);
            if plot_window.contains(y) {
                pts.push((y, d2));
            }
        }
        series.push(Series::new(format!("M={}", k + 1), pts));
    }
    let mut files = vec![write_csv(cfg, "renorm.csv", &["generation", "y", "value", "d1", "d2"], &rows)?];
    files.push(write_svg(
        cfg,
        "renorm_d2.svg",
        &series,
        PlotSpec {
            title: &format!("(R^M psi)'' for {}", p.label()),
            x_label: "m",
            y_label: "second derivative",
            style: Style::Linear,
            guide_slope: None,
            provenance: "",
        },
    )?);
    finish(v, files, summary)
}

fn cramer(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = potential(cfg)?;
    let prof = cramer_profile(&p, &cfg.m_grid)?;
    let mut v = Verdicts::new(cfg);
    let hbar: Vec<(f64, f64)> = prof
        .points
        .par_iter()
        .map(|pt| Ok((coarse_grained_hamiltonian(&p, pt.m, 2)?.0, direct_hbar2(&p, pt.m)?)))
        .collect::<Result<_, renorm_lab::Error>>()?;
    let mut rows = Vec::new();
    for (pt, (h, d)) in prof.points.iter().zip(&hbar) {
        v.check(format!("m={} phi''s^2=1", pt.m), (pt.phi_dd * pt.s * pt.s - 1.0).abs(), cfg.tol("phi_identity"));
        v.check(format!("m={} Hbar2 two routes", pt.m), (h - d).abs(), cfg.tol("hbar2"));
        rows.push(vec![
            Cell::from(pt.m),
            pt.sigma.into(),
            pt.phi.into(),
            pt.phi_dd.into(),
            pt.s.into(),
            pt.s_dm.into(),
            pt.s_dmm.into(),
            (*h).into(),
            (*d).into(),
        ]);
    }
    let files = vec![write_csv(
        cfg,
        "cramer.csv",
        &["m", "sigma", "phi", "phi_dd", "s", "s_dm", "s_dmm", "hbar2_cramer", "hbar2_direct"],
        &rows,
    )?];
    finish(v, files, vec![format!("{} profile points for {}", prof.points.len(), p.label())])
}

fn clt(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = potential(cfg)?;
    let curve = clt_error_curve(&p, cfg.sigma, &cfg.ks)?;
    let mut v = Verdicts::new(cfg);
    let first = &curve.results[0];
    let bound = cfg.tol("clt_scaled_factor") * first.error * (first.k as f64).sqrt();
    let mut rows = Vec::new();
    for (i, r) in curve.results.iter().enumerate() {
        let scaled = r.error * (r.k as f64).sqrt();
        if i > 0 {
            let prev = &curve.results[i - 1];
            // strict decrease, so equality fails
            let holds = r.error < prev.error;
            v.check(
                format!("K={} error below K={}", r.k, prev.k),
                if holds { r.error } else { f64::INFINITY },
                prev.error,
            );
        }
        v.check(format!("K={} error*sqrt(K)", r.k), scaled, bound);
        rows.push(vec![Cell::from(r.k), r.sigma.into(), r.g0.into(), r.error.into(), scaled.into(), r.xi_budget.into()]);
    }
    let mut files = vec![write_csv(cfg, "clt.csv", &["K", "sigma", "g0", "error", "error_sqrt_k", "xi_panels"], &rows)?];
    let pts: Vec<(f64, f64)> = curve.results.iter().map(|r| (r.k as f64, r.error)).collect();
    files.push(write_svg(
        cfg,
        "clt_error.svg",
        &[Series::new("e_K", pts)],
        PlotSpec {
            title: &format!("local CLT error, {} sigma={}", p.label(), cfg.sigma),
            x_label: "K",
            y_label: "e_K",
            style: Style::LogLog,
            guide_slope: Some(-0.5),
            provenance: "",
        },
    )?);
    finish(v, files, vec![format!("e_K over K={:?}", cfg.ks)])
}

fn kernel(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = potential(cfg)?;
    let mut v = Verdicts::new(cfg);
    let sigmas = [0.0, cfg.sigma, -cfg.sigma];
    let mut rows = Vec::new();
    let measures = sigmas
        .iter()
        .map(|&s| KernelMeasure::tilted(&p, s))
        .collect::<Result<Vec<_>, _>>()?;
    for (s, km) in sigmas.iter().zip(&measures) {
        v.check(format!("sigma={s} kernel identity"), km.kernel_identity_residual()?, cfg.tol("kernel_identity"));
    }
    for (i, (f, g)) in random_family(cfg.seed, cfg.cases).iter().enumerate() {
        let j = i % measures.len();
        let k = measures[j].covariance_kernel(f, g)?;
        let d = covariance_direct(measures[j].measure(), f, g)?;
        let rel = (k - d).abs() / d.abs().max(1e-14);
        v.check(format!("case {i} sigma={}", sigmas[j]), rel, cfg.tol("covariance"));
        rows.push(vec![
            Cell::from(i),
            sigmas[j].into(),
            f.label.clone().into(),
            g.label.clone().into(),
            k.into(),
            d.into(),
            rel.into(),
        ]);
    }
    let files = vec![write_csv(
        cfg,
        "kernel.csv",
        &["case", "sigma", "f", "g", "kernel_cov", "direct_cov", "relative_gap"],
        &rows,
    )?];
    finish(v, files, vec![format!("{} covariance cases on {}", cfg.cases, p.label())])
}

fn bl(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = potential(cfg)?;
    let family = random_family(cfg.seed, cfg.cases);
    let results = family
        .par_iter()
        .enumerate()
        .map(|(i, (f, g))| {
            // tilts spread over [−1.5, 1.5] deterministically per case
            let sigma = -1.5 + 3.0 * ((i as f64 * 0.618_033_988_749_895) % 1.0);
            Ok((i, sigma, asymmetric_bl_check(&p, sigma, f, g)?))
        })
        .collect::<Result<Vec<_>, renorm_lab::Error>>()?;
    let mut v = Verdicts::new(cfg);
    let mut rows = Vec::new();
    for (i, sigma, r) in results {
        v.check(format!("case {i} {}", r.case), r.lhs, r.rhs);
        rows.push(vec![Cell::from(i), sigma.into(), r.case.into(), r.lhs.into(), r.rhs.into(), r.ratio.into(), r.holds.into()]);
    }
    let files = vec![write_csv(cfg, "bl.csv", &["case", "sigma", "functions", "lhs", "rhs", "ratio", "holds"], &rows)?];
    finish(v, files, vec![format!("{} asymmetric Brascamp-Lieb cases on {}", cfg.cases, p.label())])
}

fn hierarchy(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = potential(cfg)?;
    let mut v = Verdicts::new(cfg);
    let grids = HierarchyGrids {
        seed: cfg.seed,
        ..HierarchyGrids::default()
    };
    let mut rows = Vec::new();
    let table = renormalize(&p, Interval::symmetric(cfg.window("renorm")), cfg.grid("knots") as usize)?;
    for &m in &cfg.m_grid {
        for name in FIELD_FAMILY {
            let f = FieldFunction::by_name(name)?;
            let r = hierarchy_suite(&p, m, &f, &grids)?;
            let mac = macro_gradient_identity(&p, [m + 0.4, m - 0.4], &f)?;
            v.check(format!("m={m} {name} entropy additivity"), r.entropy_residual, cfg.tol("entropy"));
            v.check(format!("m={m} {name} product structure"), r.product_residual, cfg.tol("product"));
            v.check(format!("m={m} {name} gradient split"), r.pythagoras_residual, cfg.tol("pythagoras"));
            v.check(format!("m={m} {name} macro gradient"), mac, cfg.tol("macro_gradient"));
            rows.push(vec![
                Cell::from(m),
                name.into(),
                r.entropy_total.into(),
                r.entropy_residual.into(),
                r.product_residual.into(),
                r.pythagoras_residual.into(),
                mac.into(),
            ]);
        }
        v.check(format!("m={m} marginal"), marginal_check(&p, m, &table)?, cfg.tol("marginal"));
    }
    let files = vec![write_csv(
        cfg,
        "hierarchy.csv",
        &["m", "function", "entropy", "entropy_residual", "product_residual", "pythagoras_residual", "macro_gradient_residual"],
        &rows,
    )?];
    finish(v, files, vec![format!("N=4 identities for {} at m={:?}", p.label(), cfg.m_grid)])
}

const SPECTRUM_COLUMNS: [&str; 7] = ["N", "m", "h", "rho1", "rho1_extrap", "rho1_times_m2", "rho_ub"];

struct SweepPoint {
    n: usize,
    m: f64,
    spacings: Vec<f64>,
    rho1: Vec<f64>,
    best: f64,
    extrap: Option<f64>,
    rho_ub: f64,
}

fn sweep(cfg: &RunConfig, p: &PotentialSpec) -> Result<Vec<SweepPoint>, CliError> {
    let mut out = Vec::new();
    for &n in &cfg.ns {
        for &m in &cfg.m_grid {
            let e = CanonicalEnsemble::build(p, n, m, default_nodes(n))?;
            let s = sg_constant(&e, &default_spacings(n))?;
            out.push(SweepPoint {
                n,
                m,
                spacings: s.grid_spacing.clone(),
                rho1: s.rho1.clone(),
                best: s.best(),
                extrap: s.richardson_rho1,
                rho_ub: lsi_upper_bound(&e)?.rho_upper,
            });
        }
    }
    Ok(out)
}

fn sweep_rows(points: &[SweepPoint]) -> Vec<Vec<Cell>> {
    let mut rows = Vec::new();
    for pt in points {
        for (h, r) in pt.spacings.iter().zip(&pt.rho1) {
            rows.push(vec![
                Cell::from(pt.n),
                pt.m.into(),
                (*h).into(),
                (*r).into(),
                pt.extrap.unwrap_or(f64::NAN).into(),
                (pt.best * pt.m * pt.m).into(),
                pt.rho_ub.into(),
            ]);
        }
    }
    rows
}

fn spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = potential(cfg)?;
    let points = sweep(cfg, &p)?;
    let mut v = Verdicts::new(cfg);
    let admissible = p.require_admissible().is_ok();
    for pt in &points {
        let finest = *pt.rho1.last().unwrap();
        v.check(
            format!("N={} m={} spacing agreement", pt.n, pt.m),
            (finest / pt.best - 1.0).abs(),
            cfg.tol("richardson"),
        );
        if admissible {
            let lb = be_hs_lower_bound(&p, pt.n)?;
            v.check(format!("N={} m={} rho1 above BE/HS floor", pt.n, pt.m), lb, pt.best);
        }
    }
    let max = points.iter().map(|p| p.best).fold(f64::NEG_INFINITY, f64::max);
    let min = points.iter().map(|p| p.best).fold(f64::INFINITY, f64::min);
    let files = vec![write_csv(cfg, "spectrum.csv", &SPECTRUM_COLUMNS, &sweep_rows(&points))?];
    finish(
        v,
        files,
        vec![format!("{}: rho1 in [{min:.6}, {max:.6}], max/min ratio {:.4}", p.label(), max / min)],
    )
}

fn bw_scaling(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = potential(cfg)?;
    if let Some(m) = cfg.m_grid.iter().find(|m| **m <= 0.0) {
        return Err(CliError::Config(format!("bw-scaling needs m > 0, got {m}")));
    }
    let points = sweep(cfg, &p)?;
    let mut v = Verdicts::new(cfg);
    let target = PI * PI / 8.0;
    let mut series = Vec::new();
    for &n in &cfg.ns {
        let pts: Vec<(f64, f64)> = points.iter().filter(|pt| pt.n == n).map(|pt| (pt.m, pt.best * pt.m * pt.m)).collect();
        if n == 2 {
            for &(m, scaled) in &pts {
                v.check(format!("N=2 m={m} rho1*m^2 vs pi^2/8"), (scaled / target - 1.0).abs(), cfg.tol("bw_relative"));
            }
        }
        series.push(Series::new(format!("N={n}"), pts));
    }
    let mut files = vec![write_csv(cfg, "bw_scaling.csv", &SPECTRUM_COLUMNS, &sweep_rows(&points))?];
    files.push(write_svg(
        cfg,
        "bw_scaling.svg",
        &series,
        PlotSpec {
            title: &format!("rho1 * m^2 for {}", p.label()),
            x_label: "m",
            y_label: "rho1 m^2",
            style: Style::Linear,
            guide_slope: None,
            provenance: "",
        },
    )?);
    finish(v, files, vec![format!("pi^2/8 = {target:.6}")])
}

#[derive(Serialize)]
struct SuiteSummary {
    suite: String,
    verdicts: usize,
    failed: usize,
    failed_cases: Vec<String>,
}

/// Aggregates every `*.verdicts.ndjson` in the output directory.
fn report(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&cfg.output_dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(".verdicts.ndjson"))
        .collect();
    paths.sort();
    let mut suites = Vec::new();
    for path in &paths {
        let records = read_verdicts(path)?;
        let suite = records
            .first()
            .map(|r| r.suite.clone())
            .unwrap_or_else(|| path.file_name().unwrap().to_string_lossy().into_owned());
        let failed_cases: Vec<String> = records.iter().filter(|r| !r.holds).map(|r| r.case_id.clone()).collect();
        suites.push(SuiteSummary {
            suite,
            verdicts: records.len(),
            failed: failed_cases.len(),
            failed_cases,
        });
    }
    let ok = suites.iter().all(|s| s.failed == 0);
    let summary = suites
        .iter()
        .map(|s| format!("{}: {}/{} hold", s.suite, s.verdicts - s.failed, s.verdicts))
        .collect();
    let file = write_json(cfg, "report.json", &suites)?;
    Ok(Outcome {
        ok,
        files: vec![file],
        summary,
    })
}
