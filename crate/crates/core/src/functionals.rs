//! Distances to the semicircle, free entropy, free Fisher information and
//! the free log-Sobolev gap of tabulated densities.
//!
//! A table is read as a piecewise-linear density on each run of positive
//! samples. Where a run meets a zero sample or the support window, the
//! first cell is replaced by a power law `C (x - e)^alpha` whose exponent is
//! fitted to the ten samples closest to the edge `e`.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::measures::Measure;
use crate::pipeline::{clt_density_biane, CltConfig, CltDensity};
use crate::quadrature::Quadrature;
use crate::table::DensityTable;

/// `(1/2) log(2 pi e)`, the free entropy of the standard semicircle.
pub const SEMICIRCLE_ENTROPY: f64 = 1.418_938_533_204_672_7;

const FIT_POINTS: usize = 10;

/// A real number or a signed infinity. Infinite values serialize as the
/// strings `"inf"` and `"-inf"`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedReal {
    pub value: f64,
    /// Endpoint exponent responsible for a divergence, when one was fitted.
    pub exponent: Option<f64>,
}

impl ExtendedReal {
    pub fn finite(value: f64) -> Self {
        Self { value, exponent: None }
    }

    pub fn infinite(positive: bool, exponent: Option<f64>) -> Self {
        Self {
            value: if positive { f64::INFINITY } else { f64::NEG_INFINITY },
            exponent,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        extended(&self.value, s)
    }
}

fn extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else if v.is_nan() {
        s.serialize_str("nan")
    } else if *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_str("-inf")
    }
}

fn extended_map<S: Serializer>(m: &BTreeMap<String, f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut out = s.serialize_map(Some(m.len()))?;
    for (k, v) in m {
        out.serialize_entry(k, &ExtendedReal::finite(*v))?;
    }
    out.end()
}

pub fn semicircle_density(x: f64) -> f64 {
    if x.abs() >= 2.0 {
        0.0
    } else {
        (4.0 - x * x).sqrt() / (2.0 * PI)
    }
}

#[derive(Debug, Clone, Copy)]
struct Cap {
    edge: f64,
    /// Sample next to the edge.
    node: f64,
    value: f64,
    alpha: f64,
    /// Fewer than three samples were available for the fit.
    guessed: bool,
}

impl Cap {
    fn len(&self) -> f64 {
        (self.node - self.edge).abs()
    }

    fn eval(&self, x: f64) -> f64 {
        self.value * ((x - self.edge).abs() / self.len()).powf(self.alpha)
    }

    /// Value at the edge of the linear cell with the same mass.
    fn linear_edge_value(&self) -> f64 {
        (self.value * (1.0 - self.alpha) / (1.0 + self.alpha)).max(0.0)
    }
}

#[derive(Debug, Clone)]
struct Run {
    xs: Vec<f64>,
    ps: Vec<f64>,
    left: Option<Cap>,
    right: Option<Cap>,
}

/// Piecewise model of a table: linear runs with power-law edge caps.
#[derive(Debug, Clone)]
struct Profile {
    runs: Vec<Run>,
}

fn fit_cap(edge: f64, xs: &[f64], ps: &[f64]) -> Cap {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ps)
        .take(FIT_POINTS)
        .filter(|(x, p)| **p > 0.0 && (**x - edge).abs() > 0.0)
        .map(|(x, p)| ((x - edge).abs().ln(), p.ln()))
        .collect();
    let (alpha, guessed) = if pts.len() >= 3 {
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        (sxy / sxx, false)
    } else {
        (1.0, true)
    };
    Cap {
        edge,
        node: xs[0],
        value: ps[0],
        alpha,
        guessed,
    }
}

impl Profile {
    fn new(table: &DensityTable) -> Self {
        let (a, b) = table.support();
        let samples: Vec<(f64, f64)> = table
            .grid()
            .iter()
            .zip(table.values())
            .filter(|(x, _)| **x >= a && **x <= b)
            .map(|(x, p)| (*x, *p))
            .collect();
        let mut runs = Vec::new();
        let mut i = 0;
        while i < samples.len() {
            if samples[i].1 <= 0.0 {
                i += 1;
                continue;
            }
            let start = i;
            while i + 1 < samples.len() && samples[i + 1].1 > 0.0 {
                i += 1;
            }
            let end = i;
            let xs: Vec<f64> = samples[start..=end].iter().map(|s| s.0).collect();
            let ps: Vec<f64> = samples[start..=end].iter().map(|s| s.1).collect();
            let left_edge = if start > 0 {
                Some(samples[start - 1].0)
            } else {
                (xs[0] > a).then_some(a)
            };
            let right_edge = if end + 1 < samples.len() {
                Some(samples[end + 1].0)
            } else {
                (xs[xs.len() - 1] < b).then_some(b)
            };
            let left = left_edge.map(|e| fit_cap(e, &xs, &ps));
            let rx: Vec<f64> = xs.iter().rev().copied().collect();
            let rp: Vec<f64> = ps.iter().rev().copied().collect();
            let right = right_edge.map(|e| fit_cap(e, &rx, &rp));
            runs.push(Run { xs, ps, left, right });
            i += 1;
        }
        Self { runs }
    }

    fn caps(&self) -> impl Iterator<Item = &Cap> {
        self.runs.iter().flat_map(|r| r.left.iter().chain(r.right.iter()))
    }

    /// Most negative fitted edge exponent.
    fn min_exponent(&self) -> Option<f64> {
        self.caps().map(|c| c.alpha).reduce(f64::min)
    }

    fn eval(&self, x: f64) -> f64 {
        for run in &self.runs {
            let (lo, hi) = (run.xs[0], run.xs[run.xs.len() - 1]);
            if let Some(c) = &run.left {
                if x >= c.edge && x < lo {
                    return c.eval(x);
                }
            }
            if let Some(c) = &run.right {
                if x > hi && x <= c.edge {
                    return c.eval(x);
                }
            }
            if x >= lo && x <= hi {
                if run.xs.len() == 1 {
                    return run.ps[0];
                }
                let j = run.xs.partition_point(|g| *g <= x).clamp(1, run.xs.len() - 1) - 1;
                let s = (x - run.xs[j]) / (run.xs[j + 1] - run.xs[j]);
                return run.ps[j] * (1.0 - s) + run.ps[j + 1] * s;
            }
        }
        0.0
    }

    /// Every node and cap edge, for use as quadrature breakpoints.
    fn knots(&self) -> Vec<f64> {
        let mut k: Vec<f64> = self
            .runs
            .iter()
            .flat_map(|r| r.xs.iter().copied().chain(r.left.map(|c| c.edge)).chain(r.right.map(|c| c.edge)))
            .collect();
        k.sort_by(f64::total_cmp);
        k.dedup();
        k
    }

    fn extent(&self) -> Option<(f64, f64)> {
        let k = self.knots();
        Some((*k.first()?, *k.last()?))
    }

    /// Linear cells `(x0, p0, x1, p1)` with each cap replaced by the linear
    /// cell of equal mass.
    fn linear_cells(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut cells = Vec::new();
        for run in &self.runs {
            if let Some(c) = &run.left {
                cells.push((c.edge, c.linear_edge_value(), c.node, c.value));
            }
            for j in 0..run.xs.len().saturating_sub(1) {
                cells.push((run.xs[j], run.ps[j], run.xs[j + 1], run.ps[j + 1]));
            }
            if let Some(c) = &run.right {
                cells.push((c.node, c.value, c.edge, c.linear_edge_value()));
            }
        }
        cells
    }

    fn mass(&self) -> f64 {
        let mut m = 0.0;
        for run in &self.runs {
            for c in run.left.iter().chain(run.right.iter()) {
                m += c.value * c.len() / (1.0 + c.alpha);
            }
            for j in 0..run.xs.len().saturating_sub(1) {
                m += 0.5 * (run.xs[j + 1] - run.xs[j]) * (run.ps[j] + run.ps[j + 1]);
            }
        }
        m
    }
}

/// Mass of the table under the profile model (linear runs, power-law caps).
pub fn profile_mass(table: &DensityTable) -> f64 {
    Profile::new(table).mass()
}

/// Fitted exponents at the edges of the positive runs, left to right.
pub fn edge_exponents(table: &DensityTable) -> Vec<f64> {
    Profile::new(table).caps().map(|c| c.alpha).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupDistance {
    pub value: f64,
    /// The density appears unbounded at an edge, so the value depends on
    /// how close the grid gets to it.
    pub grid_dependent: bool,
}

/// Exponents below this count as an unbounded endpoint.
const UNBOUNDED_EXPONENT: f64 = -0.05;

/// `max |p - p_gamma|` over the table grid and a uniform grid on `[-2, 2]`.
pub fn sup_distance(table: &DensityTable) -> SupDistance {
    let prof = Profile::new(table);
    let semi = (0..=2000).map(|i| -2.0 + 4.0 * i as f64 / 2000.0);
    let value = table
        .grid()
        .iter()
        .copied()
        .chain(semi)
        .map(|x| (prof.eval(x) - semicircle_density(x)).abs())
        .fold(0.0, f64::max);
    SupDistance {
        value,
        grid_dependent: prof.min_exponent().is_some_and(|a| a < UNBOUNDED_EXPONENT),
    }
}

/// `(int |p - p_gamma|^q)^{1/q}` for `q > 1/2`; a quasi-norm when `q < 1`.
/// Infinite when an edge exponent has `alpha q <= -1`; fitted exponents
/// within `0.02` of that line are counted as divergent.
pub fn lp_distance(table: &DensityTable, q: f64) -> Result<f64> {
    if !(q > 0.5 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("L^p distance needs p > 1/2, got {q}")));
    }
    let prof = Profile::new(table);
    if prof.caps().any(|c| c.alpha * q <= -0.98) {
        return Ok(f64::INFINITY);
    }
    let f = |x: f64| (prof.eval(x) - semicircle_density(x)).abs().powf(q);
    let quad = Quadrature {
        abs_tol: 1e-11,
        rel_tol: 1e-10,
        max_intervals: 400_000,
    };
    let (lo, hi) = match prof.extent() {
        Some((a, b)) => (a.min(-2.0), b.max(2.0)),
        None => (-2.0, 2.0),
    };
    let mut caps: Vec<(f64, f64)> = prof.caps().map(|c| (c.edge.min(c.node), c.edge.max(c.node))).collect();
    caps.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut knots = prof.knots();
    knots.extend([-2.0, 2.0]);

    let mut total = 0.0;
    let mut cursor = lo;
    for &(a, b) in &caps {
        if a > cursor {
            total += quad.integrate(f, cursor, a, &knots)?.value;
        }
        cursor = cursor.max(b);
    }
    if hi > cursor {
        total += quad.integrate(f, cursor, hi, &knots)?.value;
    }
    // x = e + (node - e) s^2 smooths the edge behaviour of each cap
    for c in prof.caps() {
        let d = c.node - c.edge;
        let g = |s: f64| {
            let p = c.value * s.powf(2.0 * c.alpha);
            (p - semicircle_density(c.edge + d * s * s)).abs().powf(q) * 2.0 * d.abs() * s
        };
        let inner = (2.0 - c.edge) / d;
        let outer = (-2.0 - c.edge) / d;
        let breaks: Vec<f64> = [inner, outer]
            .into_iter()
            .filter(|r| *r > 0.0 && *r < 1.0)
            .map(f64::sqrt)
            .collect();
        total += quad.integrate(g, 0.0, 1.0, &breaks)?.value;
    }
    Ok(total.max(0.0).powf(1.0 / q))
}

/// `Phi = (4 pi^2 / 3) int p^3`; `+inf` when an edge exponent has
/// `3 alpha <= -1`. The profile is normalized to unit mass first.
pub fn free_fisher(table: &DensityTable) -> Result<ExtendedReal> {
    let prof = Profile::new(table);
    let mass = prof.mass();
    if !(mass > 0.0) {
        return Err(Error::Degenerate("table has no positive samples".into()));
    }
    let mut integral = 0.0;
    for run in &prof.runs {
        for c in run.left.iter().chain(run.right.iter()) {
            let k = 1.0 + 3.0 * c.alpha;
            if k.abs() < 0.1 || (c.guessed && c.value > 0.0 && k <= 0.1) {
                return Err(Error::AmbiguousEndpoint(format!(
                    "edge exponent {:.3} at {} is too close to -1/3 to decide integrability of p^3; refine the grid near the edge",
                    c.alpha, c.edge
                )));
            }
            if k < 0.0 {
                return Ok(ExtendedReal::infinite(true, Some(c.alpha)));
            }
            integral += c.value.powi(3) * c.len() / k;
        }
        for j in 0..run.xs.len().saturating_sub(1) {
            let (p0, p1) = (run.ps[j], run.ps[j + 1]);
            let h = run.xs[j + 1] - run.xs[j];
            integral += 0.25 * h * (p0 * p0 * p0 + p0 * p0 * p1 + p0 * p1 * p1 + p1 * p1 * p1);
        }
    }
    Ok(ExtendedReal::finite(4.0 * PI * PI / 3.0 * integral / mass.powi(3)))
}

/// `s log|s| - s` and `s^2/2 log|s| - s^2/4`, antiderivatives of `log|s|`
/// and `s log|s|`, both zero at `s = 0`.
fn log_antiderivatives(s: f64) -> (f64, f64) {
    if s == 0.0 {
        return (0.0, 0.0);
    }
    let l = s.abs().ln();
    (s * l - s, 0.5 * s * s * l - 0.25 * s * s)
}

const GAUSS6: [(f64, f64); 6] = [
    (-0.932_469_514_203_152, 0.171_324_492_379_170),
    (-0.661_209_386_466_265, 0.360_761_573_048_139),
    (-0.238_619_186_083_197, 0.467_913_934_572_691),
    (0.238_619_186_083_197, 0.467_913_934_572_691),
    (0.661_209_386_466_265, 0.360_761_573_048_139),
    (0.932_469_514_203_152, 0.171_324_492_379_170),
];

/// `chi = int int log|x - y| p(x) p(y) dx dy + 3/4 + (1/2) log 2 pi`.
///
/// The logarithmic potential of the piecewise-linear density is exact cell
/// by cell, so the diagonal singularity never meets a quadrature node; the
/// outer integral uses six Gauss points per cell. The profile is
/// normalized to unit mass first.
pub fn free_entropy(table: &DensityTable) -> Result<ExtendedReal> {
    let prof = Profile::new(table);
    let mass = prof.mass();
    let cells = prof.linear_cells();
    if cells.is_empty() || !(mass > 0.0) {
        return Err(Error::Degenerate("table has no positive samples".into()));
    }
    let potential = |x: f64| -> f64 {
        let mut u = 0.0;
        for &(y0, p0, y1, p1) in &cells {
            let slope = (p1 - p0) / (y1 - y0);
            let c0 = p0 + slope * (x - y0);
            let (a0, b0) = log_antiderivatives(y0 - x);
            let (a1, b1) = log_antiderivatives(y1 - x);
            u += c0 * (a1 - a0) + slope * (b1 - b0);
        }
        u
    };
    let parts: Vec<f64> = cells
        .par_iter()
        .map(|&(x0, p0, x1, p1)| {
            let (c, h) = (0.5 * (x0 + x1), 0.5 * (x1 - x0));
            GAUSS6
                .iter()
                .map(|(node, w)| {
                    let x = c + h * node;
                    let p = p0 + (p1 - p0) * (0.5 + 0.5 * node);
                    w * h * p * potential(x)
                })
                .sum()
        })
        .collect();
    let energy: f64 = parts.iter().sum::<f64>() / (mass * mass);
    if !energy.is_finite() {
        return Err(Error::QuadratureFailure { residual: f64::INFINITY });
    }
    Ok(ExtendedReal::finite(energy + 0.75 + 0.5 * (2.0 * PI).ln()))
}

/// `chi - (1/2) log(2 pi e / Phi)`; `+inf` when `Phi` is infinite.
pub fn gap_from(chi: ExtendedReal, phi: ExtendedReal) -> ExtendedReal {
    if !phi.is_finite() {
        return ExtendedReal::infinite(true, phi.exponent);
    }
    if !chi.is_finite() {
        return chi;
    }
    ExtendedReal::finite(chi.value - 0.5 * (2.0 * PI * E / phi.value).ln())
}

pub fn log_sobolev_gap(table: &DensityTable) -> Result<ExtendedReal> {
    Ok(gap_from(free_entropy(table)?, free_fisher(table)?))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub n: usize,
    #[serde(serialize_with = "extended")]
    pub sup_dist: f64,
    /// Keyed by the exponent as written, e.g. `"0.6"`.
    #[serde(serialize_with = "extended_map")]
    pub lp: BTreeMap<String, f64>,
    pub chi: ExtendedReal,
    pub phi: ExtendedReal,
    pub gap: ExtendedReal,
    pub flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ReportRow>,
    /// `chi` is non-decreasing in `n` (up to `1e-3 tol_chi`).
    pub chi_monotone: bool,
    pub flags: Vec<String>,
}

impl ConvergenceReport {
    pub fn row(&self, n: usize) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.n == n)
    }
}

pub fn p_key(p: f64) -> String {
    format!("{p}")
}

/// Diagnostics of a density table; `atoms` marks a law with atoms, for
/// which `chi = -inf` and `Phi = +inf`.
pub fn report_row(n: usize, table: &DensityTable, atoms: bool, p_list: &[f64], tol: &Tolerances) -> Result<ReportRow> {
    let mut flags = Vec::new();
    let sup = sup_distance(table);
    if sup.grid_dependent {
        flags.push("sup distance is grid dependent: density unbounded at an edge".into());
    }
    let mut lp = BTreeMap::new();
    for &q in p_list {
        lp.insert(p_key(q), lp_distance(table, q)?);
    }
    let (chi, phi) = if atoms {
        flags.push("law has atoms: chi = -inf, phi = +inf".into());
        (ExtendedReal::infinite(false, None), ExtendedReal::infinite(true, None))
    } else {
        (free_entropy(table)?, free_fisher(table)?)
    };
    if !phi.is_finite() && !atoms {
        flags.push(format!(
            "phi diverges: edge exponent {:.3}",
            phi.exponent.unwrap_or(f64::NAN)
        ));
    }
    let gap = gap_from(chi, phi);
    if chi.value > SEMICIRCLE_ENTROPY + tol.chi {
        flags.push(format!("chi {} exceeds the semicircle entropy", chi.value));
    }
    if gap.value < -tol.gap {
        flags.push(format!("log-Sobolev gap {} is negative", gap.value));
    }
    Ok(ReportRow {
        n,
        sup_dist: sup.value,
        lp,
        chi,
        phi,
        gap,
        flags,
    })
}

/// Per-`n` diagnostics of the Biane-route densities, computed on tables
/// clustered at the support edges.
pub fn convergence_report(mu: &Measure, n_list: &[usize], p_list: &[f64], cfg: &CltConfig) -> Result<ConvergenceReport> {
    if let Some(n) = n_list.iter().find(|n| **n < 2) {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    check_exponents(p_list)?;
    cfg.validate()?;
    let densities: Vec<CltDensity> = n_list
        .par_iter()
        .map(|&n| clt_density_biane(mu, n, cfg))
        .collect::<Result<_>>()?;
    report_from_densities(&densities, p_list, cfg)
}

fn check_exponents(p_list: &[f64]) -> Result<()> {
    match p_list.iter().find(|q| !(**q > 0.5)) {
        Some(q) => Err(Error::InvalidArgument(format!("L^p distance needs p > 1/2, got {q}"))),
        None => Ok(()),
    }
}

/// Report over already computed densities, one row per entry, sorted by `n`.
pub fn report_from_densities(densities: &[CltDensity], p_list: &[f64], cfg: &CltConfig) -> Result<ConvergenceReport> {
    check_exponents(p_list)?;
    let mut rows: Vec<ReportRow> = densities
        .par_iter()
        .map(|d| {
            let table = d.adapted_table(cfg.adapted_points)?;
            let mut row = report_row(d.n, &table, !d.atoms.is_empty(), p_list, &cfg.tolerances)?;
            row.flags.extend(d.flags.iter().cloned());
            Ok(row)
        })
        .collect::<Result<_>>()?;
    rows.sort_by_key(|r| r.n);
    let slack = 1e-3 * cfg.tolerances.chi;
    let chi_monotone = rows.windows(2).all(|w| w[1].chi.value >= w[0].chi.value - slack);
    let mut flags = Vec::new();
    if !chi_monotone {
        flags.push("chi is not monotone in n".into());
    }
    Ok(ConvergenceReport {
        rows,
        chi_monotone,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    /// Chebyshev nodes on `[a, b]` plus zero rows at the edges.
    fn clustered<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, m: usize) -> DensityTable {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        let mut xs = vec![a];
        let mut ps = vec![0.0];
        for j in 0..m {
            let x = c - h * (PI * (j as f64 + 0.5) / m as f64).cos();
            xs.push(x);
            ps.push(f(x));
        }
        xs.push(b);
        ps.push(0.0);
        DensityTable::new(xs, ps, (a, b)).unwrap()
    }

    fn semicircle_table() -> DensityTable {
        clustered(semicircle_density, -2.0, 2.0, 1200)
    }

    fn arcsine_table() -> DensityTable {
        let r = 2.0_f64.sqrt();
        clustered(|x| 1.0 / (PI * (2.0 - x * x).sqrt()), -r, r, 1200)
    }

    #[test]
    fn semicircle_values() {
        let t = semicircle_table();
        assert_abs_diff_eq!(profile_mass(&t), 1.0, epsilon = 5e-6);
        for a in edge_exponents(&t) {
            assert_abs_diff_eq!(a, 0.5, epsilon = 1e-3);
        }
        assert_abs_diff_eq!(free_entropy(&t).unwrap().value, SEMICIRCLE_ENTROPY, epsilon = 1e-4);
        assert_abs_diff_eq!(free_fisher(&t).unwrap().value, 1.0, epsilon = 1e-4);
        assert_abs_diff_eq!(log_sobolev_gap(&t).unwrap().value, 0.0, epsilon = 2e-4);
        let s = sup_distance(&t);
        assert!(s.value < 1e-4 && !s.grid_dependent);
        assert!(lp_distance(&t, 1.0).unwrap() < 1e-5);
    }

    #[test]
    fn uniform_grid_semicircle() {
        let grid: Vec<f64> = (0..1201).map(|i| -3.0 + 0.005 * i as f64).collect();
        let vals = grid.iter().map(|x| semicircle_density(*x)).collect();
        let t = DensityTable::new(grid, vals, (-2.0, 2.0)).unwrap();
        assert_abs_diff_eq!(free_entropy(&t).unwrap().value, SEMICIRCLE_ENTROPY, epsilon = 1e-4);
        assert_abs_diff_eq!(free_fisher(&t).unwrap().value, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn arcsine_diagnostics() {
        let t = arcsine_table();
        let e = edge_exponents(&t);
        assert!(e.iter().all(|a| (a + 0.5).abs() < 0.02), "{e:?}");
        assert!(sup_distance(&t).grid_dependent);
        let phi = free_fisher(&t).unwrap();
        assert!(!phi.is_finite() && phi.value > 0.0);
        assert!(!log_sobolev_gap(&t).unwrap().is_finite());
        assert!(lp_distance(&t, 0.6).unwrap().is_finite());
        assert!(lp_distance(&t, 2.0).unwrap().is_infinite());
        // log energy of the arcsine law on [-r, r] is log(r / 2)
        let chi = free_entropy(&t).unwrap().value;
        let expected = (2.0_f64.sqrt() / 2.0).ln() + 0.75 + 0.5 * (2.0 * PI).ln();
        assert_abs_diff_eq!(chi, expected, epsilon = 2e-3);
    }

    #[test]
    fn dilation_law() {
        let t = semicircle_table();
        let chi = free_entropy(&t).unwrap().value;
        for a in [0.5, 2.0] {
            let d = free_entropy(&t.dilate(a).unwrap()).unwrap().value;
            assert_abs_diff_eq!(d - chi, f64::ln(a), epsilon = 1e-10);
        }
    }

    #[test]
    fn uniform_law() {
        let r = 3.0_f64.sqrt();
        let grid: Vec<f64> = (0..=2000).map(|i| -r + 2.0 * r * i as f64 / 2000.0).collect();
        let vals = vec![0.5 / r; grid.len()];
        let t = DensityTable::new(grid, vals, (-r, r)).unwrap();
        // log energy of the uniform law on [-r, r] is log(2r) - 3/2
        let expected = (2.0 * r).ln() - 1.5 + 0.75 + 0.5 * (2.0 * PI).ln();
        assert_abs_diff_eq!(free_entropy(&t).unwrap().value, expected, epsilon = 1e-6);
        let phi = free_fisher(&t).unwrap().value;
        assert_abs_diff_eq!(phi, 4.0 * PI * PI / 3.0 * 2.0 * r * (0.5 / r).powi(3), epsilon = 1e-9);
        assert!(log_sobolev_gap(&t).unwrap().value >= -1e-6);
    }

    #[test]
    fn lp_argument_checks() {
        let t = semicircle_table();
        assert!(matches!(lp_distance(&t, 0.5), Err(Error::InvalidArgument(_))));
        assert!(lp_distance(&t, 0.51).is_ok());
    }

    #[test]
    fn report_rejects_small_n() {
        let err = convergence_report(&Measure::bernoulli(), &[1, 4], &[1.0], &CltConfig::default());
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn extended_real_serialization() {
        let v = serde_json::to_string(&[ExtendedReal::finite(1.5), ExtendedReal::infinite(true, Some(-0.5))]).unwrap();
        assert_eq!(v, r#"[1.5,"inf"]"#);
    }
}
