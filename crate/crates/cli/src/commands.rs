use std::fs;
use std::path::{Path as FsPath, PathBuf};

use freeclt_core::functionals::{report_from_densities, ConvergenceReport};
use freeclt_core::measures::{make_measure_with, MeasureSpec};
use freeclt_core::pipeline::{clt_density, cross_check, CltConfig, CltDensity, Path};
use freeclt_core::{Measure, Tolerances};
use rayon::prelude::*;
use serde_json::Value;

use crate::args::{Common, CompareArgs, DensityArgs, FunctionalsArgs, SweepArgs};
use crate::error::{CliError, CliResult};
use crate::output;

fn read(path: &FsPath) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn apply_overrides(tol: Tolerances, overrides: &[(String, f64)]) -> CliResult<Tolerances> {
    if overrides.is_empty() {
        return Ok(tol);
    }
    let mut value = serde_json::to_value(tol).expect("tolerances serialize");
    let map = value.as_object_mut().expect("tolerances are an object");
    for (k, v) in overrides {
        if !map.contains_key(k) {
            let keys: Vec<&String> = map.keys().collect();
            return Err(CliError::Invalid(format!("unknown tolerance `{k}`; expected one of {keys:?}")));
        }
        if !(v.is_finite() && *v > 0.0) {
            return Err(CliError::Invalid(format!("tolerance `{k}` must be positive, got {v}")));
        }
        map.insert(k.clone(), Value::from(*v));
    }
    serde_json::from_value(value).map_err(|e| CliError::Invalid(e.to_string()))
}

/// Measure and configuration after flags, config file and defaults are merged.
pub struct Setup {
    pub measure: Measure,
    pub cfg: CltConfig,
}

pub fn setup(common: &Common, n_list: &[usize]) -> CliResult<Setup> {
    let mut cfg = match &common.config {
        Some(p) => serde_json::from_str(&read(p)?)
            .map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?,
        None => CltConfig::default(),
    };
    if let Some(g) = common.grid {
        cfg.grid = g;
    }
    cfg.tolerances = apply_overrides(cfg.tolerances, &common.tol)?;
    if n_list.is_empty() {
        return Err(CliError::Invalid("at least one n is required".into()));
    }
    cfg.n_list = n_list.to_vec();
    cfg.validate()?;

    let spec = MeasureSpec::from_json(&read(&common.measure)?)?;
    let measure = make_measure_with(&spec, &cfg.tolerances)?;
    if !measure.is_standardized(cfg.tolerances.moment)? {
        return Err(CliError::Invalid(format!(
            "{}: measure must have mean 0 and variance 1 (set \"standardize\": true to rescale it)",
            common.measure.display()
        )));
    }
    Ok(Setup { measure, cfg })
}

fn densities(s: &Setup, paths: &[Path]) -> CliResult<Vec<CltDensity>> {
    let jobs: Vec<(usize, Path)> = s
        .cfg
        .n_list
        .iter()
        .flat_map(|n| paths.iter().map(move |p| (*n, *p)))
        .collect();
    Ok(jobs
        .par_iter()
        .map(|(n, p)| clt_density(&s.measure, *n, *p, &s.cfg))
        .collect::<Result<_, _>>()?)
}

fn note_flags(d: &CltDensity) {
    if !d.atoms.is_empty() {
        let atoms: Vec<String> = d
            .atoms
            .iter()
            .map(|a| format!("{} (mass {})", output::num(a.location), output::num(a.weight)))
            .collect();
        eprintln!("note: n = {}: atoms of mu_n not in the table: {}", d.n, atoms.join(", "));
    }
    for f in &d.flags {
        eprintln!("note: n = {}: {f}", d.n);
    }
}

pub fn density(args: &DensityArgs) -> CliResult<()> {
    let s = setup(&args.common, &[args.n])?;
    let d = clt_density(&s.measure, args.n, args.method.into(), &s.cfg)?;
    note_flags(&d);
    output::emit(args.out.as_deref(), &output::density_csv(&d.table))
}

fn path_name(p: Path) -> &'static str {
    match p {
        Path::Biane => "biane",
        Path::Subordination => "subordination",
    }
}

pub fn density_file_name(n: usize, p: Path) -> String {
    format!("density_n{n}_{}.csv", path_name(p))
}

pub fn sweep(args: &SweepArgs) -> CliResult<()> {
    let s = setup(&args.common, &args.n)?;
    let method: freeclt_core::pipeline::Method = args.method.into();
    let paths = method.paths();
    let all = densities(&s, paths)?;
    let dir: PathBuf = match &args.density_dir {
        Some(d) => d.clone(),
        None => args.out.parent().map(FsPath::to_path_buf).unwrap_or_default(),
    };
    for d in &all {
        note_flags(d);
        output::emit(Some(&dir.join(density_file_name(d.n, d.path))), &output::density_csv(&d.table))?;
    }
    let primary: Vec<CltDensity> = all.into_iter().filter(|d| d.path == paths[0]).collect();
    let report = report_from_densities(&primary, &args.p, &s.cfg)?;
    output::emit(Some(&args.out), &output::json(&report))
}

fn first_infinite(report: &ConvergenceReport) -> Option<String> {
    report.rows.iter().find_map(|r| {
        let lp = r.lp.iter().find(|(_, v)| !v.is_finite()).map(|(k, _)| format!("L^{k} distance"));
        let name = if !r.chi.is_finite() {
            Some("chi".to_string())
        } else if !r.phi.is_finite() {
            Some("phi".to_string())
        } else if !r.gap.is_finite() {
            Some("log-Sobolev gap".to_string())
        } else {
            lp
        };
        name.map(|f| format!("n = {}: {f} is infinite", r.n))
    })
}

pub fn functionals(args: &FunctionalsArgs) -> CliResult<()> {
    let s = setup(&args.common, &args.n)?;
    let all = densities(&s, &[args.method.into()])?;
    let report = report_from_densities(&all, &args.p, &s.cfg)?;
    output::emit(args.out.as_deref(), &output::json(&report))?;
    match first_infinite(&report) {
        Some(msg) if args.require_finite => Err(CliError::Divergent(msg)),
        _ => Ok(()),
    }
}

pub fn compare(args: &CompareArgs) -> CliResult<()> {
    let s = setup(&args.common, &args.n)?;
    let rows: Vec<(usize, f64)> = s
        .cfg
        .n_list
        .par_iter()
        .map(|&n| cross_check(&s.measure, n, &s.cfg).map(|d| (n, d)))
        .collect::<Result<_, _>>()?;
    output::emit(args.out.as_deref(), &output::discrepancy_csv(&rows))
}
