//! Invariant suite behind `freeclt verify`.

use freeclt_core::flow::Flow;
use freeclt_core::functionals::{free_entropy, report_from_densities};
use freeclt_core::pipeline::{
    clt_density, compare_tables, flow_range, subordination_omega, support_check_for, tail_bound_check, CltDensity,
    Path, CROSS_CHECK_MARGIN,
};
use freeclt_core::transforms::{companion_with, reciprocal_cauchy};
use freeclt_core::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::commands::Setup;
use crate::error::CliResult;

/// Largest accepted interior discrepancy between the two routes.
pub const AGREEMENT: f64 = 5e-4;
/// Slack on `|G| <= 1/sqrt(t)` along the flow.
pub const CAUCHY_SLACK: f64 = 1e-10;
pub const RESIDUAL: f64 = 1e-12;
pub const DILATION: f64 = 1e-4;
const TAIL_EPS: f64 = 0.05;
const ETAS: [f64; 2] = [0.1, 0.3];

#[derive(Debug, Clone, Serialize)]
pub struct Property {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn prop(name: &'static str, pass: bool, detail: String) -> Property {
    Property { name, pass, detail }
}

fn moments(all: &[CltDensity], s: &Setup) -> Property {
    let tol = s.cfg.tolerances;
    let mut worst = [0.0_f64; 3];
    let mut bad = Vec::new();
    for d in all {
        let m = d.moments;
        let dev = [(m.mass - 1.0).abs(), m.mean.abs(), (m.variance - 1.0).abs()];
        for k in 0..3 {
            worst[k] = worst[k].max(dev[k]);
        }
        if !(dev[0] <= tol.mass && dev[1] <= tol.moment && dev[2] <= 10.0 * tol.moment) {
            bad.push(format!("n={} {:?}", d.n, d.path));
        }
    }
    prop(
        "moments",
        bad.is_empty(),
        format!(
            "max |mass-1| {:.2e}, |mean| {:.2e}, |var-1| {:.2e}{}",
            worst[0],
            worst[1],
            worst[2],
            if bad.is_empty() { String::new() } else { format!("; failing {}", bad.join(", ")) }
        ),
    )
}

fn cross_path(biane: &[CltDensity], sub: &[CltDensity]) -> CliResult<Property> {
    let mut worst: f64 = 0.0;
    for (b, q) in biane.iter().zip(sub) {
        worst = worst.max(compare_tables(b, q, CROSS_CHECK_MARGIN)?);
    }
    Ok(prop("cross-path agreement", worst < AGREEMENT, format!("max discrepancy {worst:.3e}")))
}

fn cauchy_bound(s: &Setup) -> CliResult<Property> {
    let nu = companion_with(&s.measure, &s.cfg.tolerances)?;
    let nodes = s.cfg.grid.nodes();
    let mut worst = f64::NEG_INFINITY;
    for &n in &s.cfg.n_list {
        let nf = n as f64;
        let nu_n = nu.dilate(1.0 / nf.sqrt())?;
        let t = (nf - 1.0) / nf;
        let flow = Flow::with_tolerance(&nu_n, t, s.cfg.tolerances.v)?;
        let excess = nodes
            .par_iter()
            .map(|&x| flow.cauchy(x).map(|g| g.norm() - 1.0 / t.sqrt()))
            .collect::<Result<Vec<f64>, _>>()?
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(excess);
    }
    Ok(prop("flow cauchy bound", worst <= CAUCHY_SLACK, format!("max |G| - 1/sqrt(t) = {worst:.3e}")))
}

fn range(s: &Setup) -> CliResult<Property> {
    let mut bad = Vec::new();
    let mut margin = f64::INFINITY;
    for &n in &s.cfg.n_list {
        for eta in ETAS {
            let (lo, hi) = flow_range(&s.measure, n, eta, &s.cfg.tolerances)?;
            let m = (lo - (-2.0 + eta)).min((2.0 - eta) - hi);
            margin = margin.min(m);
            if m < 0.0 {
                bad.push(format!("n={n} eta={eta}"));
            }
        }
    }
    Ok(prop(
        "range containment",
        bad.is_empty(),
        format!("smallest margin {margin:.3e}{}", if bad.is_empty() { String::new() } else { format!("; failing {}", bad.join(", ")) }),
    ))
}

fn tail(s: &Setup) -> CliResult<Option<Property>> {
    let ns: Vec<usize> = s.cfg.n_list.iter().copied().filter(|n| *n >= 3).collect();
    if ns.is_empty() {
        return Ok(None);
    }
    let mut pass = true;
    let mut ratio: f64 = 0.0;
    let mut checked = 0;
    for n in ns {
        let r = tail_bound_check(&s.measure, n, TAIL_EPS, &s.cfg)?;
        pass &= r.pass;
        ratio = ratio.max(r.max_ratio);
        checked += r.checked;
    }
    Ok(Some(prop("tail bound", pass, format!("{checked} points, max ratio {ratio:.3}"))))
}

fn support(s: &Setup, biane: &[CltDensity]) -> CliResult<Property> {
    let mut worst: f64 = 0.0;
    let mut pass = true;
    let mut notice = None;
    for d in biane {
        let r = support_check_for(&s.measure, d, &s.cfg.tolerances)?;
        pass &= r.pass;
        worst = worst.max(r.mass_outside.unwrap_or(0.0) + 0.0);
        notice = notice.or(r.notice);
    }
    let detail = notice.unwrap_or_else(|| format!("max mass outside {worst:.3e}"));
    Ok(prop("support containment", pass, detail))
}

fn residual(s: &Setup) -> CliResult<Property> {
    let zs: Vec<Complex64> = [-2.5, -1.0, -0.2, 0.4, 1.5, 3.0]
        .iter()
        .flat_map(|x| [1e-3, 0.1, 2.0].map(|y| Complex64::new(*x, y)))
        .collect();
    let mut worst: f64 = 0.0;
    for &n in &s.cfg.n_list {
        let nf = n as f64;
        for &z in &zs {
            let r = subordination_omega(&s.measure, n, z, s.cfg.tolerances.fixed_point, s.cfg.max_iterations)?;
            let map = z / nf + reciprocal_cauchy(&s.measure, r.omega)? * ((nf - 1.0) / nf);
            worst = worst.max((map - r.omega).norm());
        }
    }
    Ok(prop("subordination residual", worst <= RESIDUAL, format!("max |T(w) - w| = {worst:.3e}")))
}

fn dilation(s: &Setup, biane: &[CltDensity]) -> CliResult<Option<Property>> {
    let Some(d) = biane.iter().rev().find(|d| d.atoms.is_empty()) else {
        return Ok(None);
    };
    let table = d.adapted_table(s.cfg.adapted_points)?;
    let chi = free_entropy(&table)?;
    if !chi.is_finite() {
        return Ok(None);
    }
    let mut worst: f64 = 0.0;
    for a in [0.5, 2.0] {
        let da = free_entropy(&table.dilate(a)?)?.value;
        worst = worst.max((da - chi.value - a.ln()).abs());
    }
    Ok(Some(prop("entropy dilation law", worst <= DILATION, format!("n={}: max error {worst:.3e}", d.n))))
}

pub fn run(s: &Setup) -> CliResult<Vec<Property>> {
    let jobs: Vec<(usize, Path)> = s
        .cfg
        .n_list
        .iter()
        .flat_map(|n| [(*n, Path::Biane), (*n, Path::Subordination)])
        .collect();
    let all: Vec<CltDensity> = jobs
        .par_iter()
        .map(|(n, p)| clt_density(&s.measure, *n, *p, &s.cfg))
        .collect::<Result<_, _>>()?;
    let biane: Vec<CltDensity> = all.iter().filter(|d| d.path == Path::Biane).cloned().collect();
    let sub: Vec<CltDensity> = all.iter().filter(|d| d.path == Path::Subordination).cloned().collect();

    let mut props = vec![moments(&all, s), cross_path(&biane, &sub)?, cauchy_bound(s)?];

    let report = report_from_densities(&biane, &[1.0], &s.cfg)?;
    let finite: Vec<f64> = report.rows.iter().filter(|r| r.phi.is_finite()).map(|r| r.gap.value).collect();
    if !finite.is_empty() {
        let min = finite.iter().copied().fold(f64::INFINITY, f64::min);
        props.push(prop("log-Sobolev gap", min >= -s.cfg.tolerances.gap, format!("min gap {min:.3e}")));
    }
    if report.rows.len() > 1 {
        let chi: Vec<String> = report.rows.iter().map(|r| format!("{:.6}", r.chi.value)).collect();
        props.push(prop("entropy monotone", report.chi_monotone, format!("chi [{}]", chi.join(", "))));
    }

    props.push(range(s)?);
    props.extend(tail(s)?);
    props.push(support(s, &biane)?);
    props.push(residual(s)?);
    props.extend(dilation(s, &biane)?);
    Ok(props)
}
