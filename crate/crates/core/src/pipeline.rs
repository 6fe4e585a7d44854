//! Densities of `mu_n = D_{1/sqrt n} mu^{⊞n}` along two independent routes.
//!
//! The Biane route writes `F_{mu_m}(z) = z - G_{nu_m ⊞ gamma_t}(z)` with
//! `nu` the companion of `mu`, `nu_m = D_{1/sqrt m} nu` and `t = (m-1)/m`,
//! and reads the boundary values off the semicircular flow. The
//! subordination route solves `omega = z/n + ((n-1)/n) F_mu(omega)` and
//! inverts `G_{mu_n}` near the real axis.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::flow::Flow;
use crate::measures::{Atom, Measure};
use crate::quadrature::Quadrature;
use crate::roots;
use crate::table::DensityTable;
use crate::transforms::{self, cauchy, cauchy_derivative, reciprocal_cauchy, InversionSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    Biane,
    Subordination,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Biane,
    Subordination,
    Both,
}

impl Method {
    pub fn paths(self) -> &'static [Path] {
        match self {
            Method::Biane => &[Path::Biane],
            Method::Subordination => &[Path::Subordination],
            Method::Both => &[Path::Biane, Path::Subordination],
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "biane" => Ok(Method::Biane),
            "subordination" => Ok(Method::Subordination),
            "both" => Ok(Method::Both),
            _ => Err(Error::InvalidArgument(format!("unknown method {s:?}"))),
        }
    }
}

/// Uniform evaluation grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo: -3.0,
            hi: 3.0,
            points: 1201,
        }
    }
}

impl GridSpec {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let g = Self { lo, hi, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi && self.points >= 2) {
            return Err(Error::InvalidArgument(format!(
                "grid [{}, {}] with {} points is not usable",
                self.lo, self.hi, self.points
            )));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        let step = (self.hi - self.lo) / (self.points - 1) as f64;
        (0..self.points).map(|i| self.lo + step * i as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CltConfig {
    pub n_list: Vec<usize>,
    pub grid: GridSpec,
    pub method: Method,
    pub tolerances: Tolerances,
    /// Top of the boundary ladder `eps, eps/2, eps/4`.
    pub eps_boundary: f64,
    pub max_iterations: usize,
    /// Picard damping `lambda` in `omega <- (1 - lambda) omega + lambda T(omega)`.
    pub damping: f64,
    /// Nodes of the edge-clustered tables handed to the functionals.
    pub adapted_points: usize,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self {
            n_list: Vec::new(),
            grid: GridSpec::default(),
            method: Method::Both,
            tolerances: Tolerances::default(),
            eps_boundary: 1e-6,
            max_iterations: 10_000,
            damping: 0.8,
            adapted_points: 1200,
        }
    }
}

impl CltConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if let Some(n) = self.n_list.iter().find(|n| **n < 2) {
            return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
        }
        if !(1e-9..=1e-3).contains(&self.eps_boundary) {
            return Err(Error::InvalidArgument(format!(
                "eps_boundary {} outside [1e-9, 1e-3]",
                self.eps_boundary
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping {} outside (0, 1]", self.damping)));
        }
        if self.adapted_points < 16 {
            return Err(Error::InvalidArgument("adapted_points must be at least 16".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubordinationResult {
    pub omega: Complex64,
    pub iterations: usize,
    /// `|T(omega) - omega|` at the returned point.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mass: f64,
    pub mean: f64,
    pub variance: f64,
}

#[derive(Debug, Clone)]
enum Model {
    Biane {
        nu_m: Measure,
        t: f64,
        tol_v: f64,
    },
    Subordination {
        solver: Subordinator,
        heights: Vec<f64>,
        tol_density: f64,
    },
}

/// Density of `mu_n` computed along one route.
#[derive(Debug, Clone, Serialize)]
pub struct CltDensity {
    pub n: usize,
    pub path: Path,
    /// Flow time `(n-1)/n` on the Biane route.
    pub t: Option<f64>,
    pub table: DensityTable,
    /// Atoms of `mu_n`; the table carries the absolutely continuous part.
    pub atoms: Vec<Atom>,
    /// Components of the support of the absolutely continuous part.
    pub support: Vec<(f64, f64)>,
    pub moments: Moments,
    pub flags: Vec<String>,
    #[serde(skip)]
    model: Model,
    #[serde(skip)]
    atoms_all: Vec<Atom>,
}

impl CltDensity {
    /// Density of the absolutely continuous part at `x`.
    pub fn density_at(&self, x: f64) -> Result<f64> {
        match &self.model {
            Model::Biane { nu_m, t, tol_v } => {
                let gc = Flow::with_tolerance(nu_m, *t, *tol_v)?.cauchy(x)?;
                Ok(quotient_density(x, gc))
            }
            Model::Subordination {
                solver,
                heights,
                tol_density,
            } => {
                let eval = |z: Complex64| -> Result<Complex64> {
                    let mut g = solver.cauchy(z)?;
                    for a in &self.atoms_all {
                        g -= a.weight / (z - a.location);
                    }
                    Ok(g)
                };
                // The edge regime where extrapolation breaks down scales with
                // the heights, so failing points are retried on lower ladders.
                let mut scale = 1.0;
                loop {
                    let ladder: Vec<f64> = heights.iter().map(|h| h * scale).collect();
                    let lowest = ladder[ladder.len() - 1];
                    match transforms::invert_point(&eval, x, &ladder, ladder.len() - 1, *tol_density) {
                        Err(Error::InversionFailure { .. }) if lowest * 0.1 >= InversionSchedule::MIN_HEIGHT => {
                            scale *= 0.1;
                        }
                        // next to an unbounded edge no ladder extrapolates;
                        // keep the raw value at the lowest height
                        Err(Error::InversionFailure { .. }) => {
                            return transforms::invert_point(&eval, x, &[lowest], 0, *tol_density)
                        }
                        other => return other,
                    }
                }
            }
        }
    }

    /// Absolutely continuous mass outside `[lo, hi]` plus atoms there.
    pub fn mass_outside(&self, lo: f64, hi: f64) -> Result<f64> {
        let mut pieces = Vec::new();
        for &(a, b) in &self.support {
            if a < lo {
                pieces.push((a, b.min(lo)));
            }
            if b > hi {
                pieces.push((a.max(hi), b));
            }
        }
        let mut mass: f64 = self
            .atoms
            .iter()
            .filter(|a| a.location < lo || a.location > hi)
            .map(|a| a.weight)
            .sum();
        for (a, b) in pieces {
            if b > a {
                mass += integrate_density(|x| self.density_at(x), a, b)?[0];
            }
        }
        Ok(mass)
    }

    /// Table on Chebyshev nodes of each support component, with zero rows
    /// at the exact component edges. About `points` nodes in total.
    pub fn adapted_table(&self, points: usize) -> Result<DensityTable> {
        let total: f64 = self.support.iter().map(|(a, b)| b - a).sum();
        if self.support.is_empty() || !(total > 0.0) {
            return Err(Error::Degenerate("absolutely continuous part is empty".into()));
        }
        let mut nodes: Vec<(f64, bool)> = Vec::with_capacity(points + 2 * self.support.len());
        for &(a, b) in &self.support {
            let m = ((points as f64) * (b - a) / total).round().max(8.0) as usize;
            let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
            nodes.push((a, false));
            for j in 0..m {
                let theta = PI * (j as f64 + 0.5) / m as f64;
                nodes.push((c - h * theta.cos(), true));
            }
            nodes.push((b, false));
        }
        nodes.dedup_by(|x, y| x.0 == y.0);
        let values: Vec<f64> = nodes
            .par_iter()
            .map(|(x, inside)| if *inside { self.density_at(*x) } else { Ok(0.0) })
            .collect::<Result<_>>()?;
        let lo = self.support[0].0;
        let hi = self.support[self.support.len() - 1].1;
        DensityTable::new(nodes.into_iter().map(|n| n.0).collect(), values, (lo, hi))
    }
}

/// `-Im G_{mu_m}(x) / pi` from `G_c = G_{nu_m ⊞ gamma_t}(x)` and
/// `F_{mu_m}(x) = x - G_c`.
fn quotient_density(x: f64, gc: Complex64) -> f64 {
    if !(gc.im < 0.0) {
        return 0.0;
    }
    let f = Complex64::new(x, 0.0) - gc;
    -gc.im / (PI * f.norm_sqr())
}

/// `[int p, int x p, int x^2 p]` over `[a, b]` with `x = c - h cos(theta)`,
/// which tames square-root and inverse-square-root edges.
fn integrate_density<D>(density: D, a: f64, b: f64) -> Result<[f64; 3]>
where
    D: Fn(f64) -> Result<f64>,
{
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let quad = Quadrature {
        abs_tol: 1e-11,
        rel_tol: 1e-13,
        max_intervals: 20_000,
    };
    let out = quad.integrate(
        |theta: f64| {
            let (s, co) = theta.sin_cos();
            let x = c - h * co;
            match density(x) {
                Ok(p) => {
                    let w = p * h * s;
                    [w, w * x, w * x * x]
                }
                Err(e) => {
                    failure.borrow_mut().get_or_insert(e);
                    [f64::NAN; 3]
                }
            }
        },
        0.0,
        PI,
        &[],
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(out?.value)
}

fn moments_of<D>(density: D, support: &[(f64, f64)], atoms: &[Atom]) -> Result<Moments>
where
    D: Fn(f64) -> Result<f64>,
{
    // second moment about zero, then centred
    let mut acc = [0.0; 3];
    for &(a, b) in support {
        let part = integrate_density(&density, a, b)?;
        for k in 0..3 {
            acc[k] += part[k];
        }
    }
    for atom in atoms {
        acc[0] += atom.weight;
        acc[1] += atom.weight * atom.location;
        acc[2] += atom.weight * atom.location * atom.location;
    }
    let mean = acc[1] / acc[0];
    Ok(Moments {
        mass: acc[0],
        mean,
        variance: acc[2] / acc[0] - mean * mean,
    })
}

fn moment_flags(m: &Moments, tol: &Tolerances) -> Vec<String> {
    let mut flags = Vec::new();
    if (m.mass - 1.0).abs() > tol.mass {
        flags.push(format!("mass {} deviates from 1", m.mass));
    }
    if m.mean.abs() > tol.moment {
        flags.push(format!("mean {} deviates from 0", m.mean));
    }
    if (m.variance - 1.0).abs() > 10.0 * tol.moment {
        flags.push(format!("variance {} deviates from 1", m.variance));
    }
    flags
}

/// Atoms of `mu_n`: an atom of weight `w` at `x` in `mu` leaves an atom of
/// weight `n w - n + 1` at `sqrt(n) x` when that number is positive.
pub fn atom_masses(mu: &Measure, n: usize) -> Vec<Atom> {
    let nf = n as f64;
    mu.atoms()
        .iter()
        .filter_map(|a| {
            let w = nf * a.weight - nf + 1.0;
            (w > 0.0).then(|| Atom::new(nf.sqrt() * a.location, w))
        })
        .collect()
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n must be at least 2, got {n}")));
    }
    Ok(())
}

fn table_on_grid<D>(density: D, grid: &GridSpec, support: &[(f64, f64)]) -> Result<DensityTable>
where
    D: Fn(f64) -> Result<f64> + Sync,
{
    let nodes = grid.nodes();
    let values: Vec<f64> = nodes.par_iter().map(|x| density(*x)).collect::<Result<_>>()?;
    let window = match (support.first(), support.last()) {
        (Some(f), Some(l)) if l.1 > f.0 => (f.0, l.1),
        _ => (grid.lo, grid.hi),
    };
    DensityTable::new(nodes, values, window)
}

fn support_flags(support: &[(f64, f64)], grid: &GridSpec) -> Vec<String> {
    match (support.first(), support.last()) {
        (Some(f), Some(l)) if f.0 < grid.lo || l.1 > grid.hi => vec![format!(
            "support [{}, {}] extends beyond the grid [{}, {}]",
            f.0, l.1, grid.lo, grid.hi
        )],
        _ => Vec::new(),
    }
}

/// Companion `nu_m = D_{1/sqrt m} nu` and the flow time `(m-1)/m`.
fn biane_setup(mu: &Measure, m: usize, tol: &Tolerances) -> Result<(Measure, f64)> {
    check_n(m)?;
    let nu = transforms::companion_with(mu, tol)?;
    let mf = m as f64;
    Ok((nu.dilate(1.0 / mf.sqrt())?, (mf - 1.0) / mf))
}

/// Density of `mu_m` along the Biane route.
pub fn clt_density_biane(mu: &Measure, m: usize, cfg: &CltConfig) -> Result<CltDensity> {
    cfg.validate()?;
    let tol = cfg.tolerances;
    let (nu_m, t) = biane_setup(mu, m, &tol)?;
    let flow = Flow::with_tolerance(&nu_m, t, tol.v)?;
    let support: Vec<(f64, f64)> = flow
        .support()?
        .into_iter()
        .map(|(l, r)| Ok((flow.psi(l)?, flow.psi(r)?)))
        .collect::<Result<_>>()?;
    let density = |x: f64| flow.cauchy(x).map(|g| quotient_density(x, g));
    let table = table_on_grid(density, &cfg.grid, &support)?;
    let atoms = atom_masses(mu, m);
    let moments = moments_of(density, &support, &atoms)?;
    let mut flags = moment_flags(&moments, &tol);
    flags.extend(support_flags(&support, &cfg.grid));
    Ok(CltDensity {
        n: m,
        path: Path::Biane,
        t: Some(t),
        table,
        atoms: atoms.clone(),
        support,
        moments,
        flags,
        model: Model::Biane {
            nu_m,
            t,
            tol_v: tol.v,
        },
        atoms_all: atoms,
    })
}

/// Fixed point of `omega -> z/n + ((n-1)/n) F_mu(omega)`.
#[derive(Debug, Clone)]
pub struct Subordinator {
    mu: Measure,
    n: usize,
    tol: f64,
    max_iter: usize,
    damping: f64,
}

impl Subordinator {
    pub fn new(mu: &Measure, n: usize, tol: f64, max_iter: usize, damping: f64) -> Result<Self> {
        check_n(n)?;
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::InvalidArgument(format!("damping {damping} outside (0, 1]")));
        }
        Ok(Self {
            mu: mu.clone(),
            n,
            tol,
            max_iter,
            damping,
        })
    }

    pub fn from_config(mu: &Measure, n: usize, cfg: &CltConfig) -> Result<Self> {
        Self::new(mu, n, cfg.tolerances.fixed_point, cfg.max_iterations, cfg.damping)
    }

    fn map(&self, z: Complex64, omega: Complex64) -> Result<Complex64> {
        let nf = self.n as f64;
        Ok(z / nf + reciprocal_cauchy(&self.mu, omega)? * ((nf - 1.0) / nf))
    }

    fn converged(&self, residual: f64, omega: Complex64) -> bool {
        residual <= self.tol * omega.norm().max(1.0)
    }

    /// Damped Picard iteration from `omega = z`; once the residual is small
    /// or progress stalls, Newton steps on `omega - T(omega)` finish the
    /// solve, each step halved until it stays in `C+` and lowers the residual.
    pub fn omega(&self, z: Complex64) -> Result<SubordinationResult> {
        if !(z.im > 0.0) {
            return Err(Error::Domain(format!("{z}")));
        }
        let nf = self.n as f64;
        let a = (nf - 1.0) / nf;
        let mut omega = z;
        let mut tw = self.map(z, omega)?;
        let mut residual = (tw - omega).norm();
        let mut newton = false;
        let mut best = residual;
        let mut since_best = 0;
        for k in 0..self.max_iter {
            if self.converged(residual, omega) {
                return self.finish(z, omega, k, residual);
            }
            if !newton {
                omega = omega + (tw - omega) * self.damping;
                tw = self.map(z, omega)?;
                residual = (tw - omega).norm();
                if residual < best * 0.999 {
                    best = residual;
                    since_best = 0;
                } else {
                    since_best += 1;
                }
                if residual < 1e-6 * omega.norm().max(1.0) || since_best > 20 || k > 200 {
                    newton = true;
                }
                continue;
            }
            let g = cauchy(&self.mu, omega)?;
            let dg = cauchy_derivative(&self.mu, omega)?;
            let dphi = 1.0 + a * dg / (g * g);
            let step = (omega - tw) / dphi;
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial = omega - step * lambda;
                if trial.im > 0.0 && trial.re.is_finite() && trial.im.is_finite() {
                    if let Ok(tt) = self.map(z, trial) {
                        let r = (tt - trial).norm();
                        if r < residual {
                            omega = trial;
                            tw = tt;
                            residual = r;
                            accepted = true;
                            break;
                        }
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                if self.converged(residual * 1e-2, omega) {
                    // at the rounding floor
                    return self.finish(z, omega, k, residual);
                }
                omega = omega + (tw - omega) * self.damping;
                tw = self.map(z, omega)?;
                residual = (tw - omega).norm();
            }
        }
        if self.converged(residual, omega) {
            return self.finish(z, omega, self.max_iter, residual);
        }
        Err(Error::FixedPointFailure {
            iterations: self.max_iter,
            residual,
        })
    }

    fn finish(&self, z: Complex64, omega: Complex64, iterations: usize, residual: f64) -> Result<SubordinationResult> {
        if omega.im < z.im * (1.0 - 1e-9) {
            return Err(Error::InternalConsistency(format!(
                "subordination point {omega} lies below Im z = {}",
                z.im
            )));
        }
        Ok(SubordinationResult {
            omega,
            iterations,
            residual,
        })
    }

    /// `G_{mu_n}(z) = sqrt(n) / F_mu(omega_n(sqrt(n) z))`.
    pub fn cauchy(&self, z: Complex64) -> Result<Complex64> {
        let s = (self.n as f64).sqrt();
        let res = self.omega(z * s)?;
        Ok(s / reciprocal_cauchy(&self.mu, res.omega)?)
    }
}

pub fn subordination_omega(
    mu: &Measure,
    n: usize,
    z: Complex64,
    tol_fp: f64,
    max_iter: usize,
) -> Result<SubordinationResult> {
    Subordinator::new(mu, n, tol_fp, max_iter, CltConfig::default().damping)?.omega(z)
}

pub fn clt_cauchy_subordination(mu: &Measure, n: usize, z: Complex64) -> Result<Complex64> {
    Subordinator::from_config(mu, n, &CltConfig::default())?.cauchy(z)
}

const EDGE_HEIGHT: f64 = 1e-14;

/// Density of `mu_n` along the subordination route.
pub fn clt_density_subordination(mu: &Measure, n: usize, cfg: &CltConfig) -> Result<CltDensity> {
    cfg.validate()?;
    let tol = cfg.tolerances;
    let solver = Subordinator::from_config(mu, n, cfg)?;
    let heights = transforms::geometric_heights(cfg.eps_boundary, 3);
    let atoms = atom_masses(mu, n);
    let mut cd = CltDensity {
        n,
        path: Path::Subordination,
        t: None,
        table: DensityTable::from_samples(vec![cfg.grid.lo, cfg.grid.hi], vec![0.0, 0.0])?,
        atoms: atoms.clone(),
        support: Vec::new(),
        moments: Moments {
            mass: f64::NAN,
            mean: f64::NAN,
            variance: f64::NAN,
        },
        flags: Vec::new(),
        model: Model::Subordination {
            solver,
            heights,
            tol_density: tol.density,
        },
        atoms_all: atoms,
    };
    let nodes = cfg.grid.nodes();
    let values: Vec<f64> = nodes.par_iter().map(|x| cd.density_at(*x)).collect::<Result<_>>()?;

    // Components of {p > 0} seen on the grid. Edges are refined by bisection
    // on -Im G(x + i eta) / pi at a tiny height: inside an edge it grows like
    // the square root of the distance, outside it is of order eta / sqrt.
    let threshold = 1e-9;
    let positive = |x: f64| {
        let Model::Subordination { solver, .. } = &cd.model else {
            unreachable!()
        };
        let z = Complex64::new(x, EDGE_HEIGHT);
        let atoms: f64 = cd
            .atoms
            .iter()
            .map(|a| a.weight * EDGE_HEIGHT / ((x - a.location).powi(2) + EDGE_HEIGHT * EDGE_HEIGHT))
            .sum();
        solver
            .cauchy(z)
            .map(|g| -g.im / PI - atoms / PI > threshold)
            .unwrap_or(true)
    };
    let span = nodes[nodes.len() - 1] - nodes[0];
    let xtol = 1e-14 * (1.0 + span);
    let mut support = Vec::new();
    let mut i = 0;
    while i < nodes.len() {
        if values[i] <= threshold {
            i += 1;
            continue;
        }
        let start = i;
        while i + 1 < nodes.len() && values[i + 1] > threshold {
            i += 1;
        }
        let left = if start == 0 {
            nodes[0]
        } else {
            roots::bisect_predicate(positive, nodes[start - 1], nodes[start], xtol, 200).1
        };
        let right = if i + 1 == nodes.len() {
            nodes[i]
        } else {
            roots::bisect_predicate(|x| !positive(x), nodes[i], nodes[i + 1], xtol, 200).0
        };
        support.push((left, right));
        i += 1;
    }
    let mut flags = Vec::new();
    if let (Some(f), Some(l)) = (support.first(), support.last()) {
        if f.0 <= cfg.grid.lo || l.1 >= cfg.grid.hi {
            flags.push("density is positive at a grid end; support may extend beyond the grid".into());
        }
    }
    let moments = moments_of(|x| cd.density_at(x), &support, &cd.atoms)?;
    flags.extend(moment_flags(&moments, &tol));
    let window = match (support.first(), support.last()) {
        (Some(f), Some(l)) if l.1 > f.0 => (f.0, l.1),
        _ => (cfg.grid.lo, cfg.grid.hi),
    };
    cd.table = DensityTable::new(nodes, values, window)?;
    cd.support = support;
    cd.moments = moments;
    cd.flags = flags;
    Ok(cd)
}

pub fn clt_density(mu: &Measure, n: usize, path: Path, cfg: &CltConfig) -> Result<CltDensity> {
    match path {
        Path::Biane => clt_density_biane(mu, n, cfg),
        Path::Subordination => clt_density_subordination(mu, n, cfg),
    }
}

/// Default interior margin for comparing the two routes.
pub const CROSS_CHECK_MARGIN: f64 = 0.02;

/// `max |p_a - p_b|` over common grid points at least `margin` inside a
/// support component of `a`.
pub fn compare_tables(a: &CltDensity, b: &CltDensity, margin: f64) -> Result<f64> {
    if a.table.grid() != b.table.grid() {
        return Err(Error::InvalidArgument("densities are tabulated on different grids".into()));
    }
    let inside = |x: f64| a.support.iter().any(|(l, r)| x >= l + margin && x <= r - margin);
    Ok(a.table
        .grid()
        .iter()
        .zip(a.table.values().iter().zip(b.table.values()))
        .filter(|(x, _)| inside(**x))
        .map(|(_, (p, q))| (p - q).abs())
        .fold(0.0, f64::max))
}

/// Largest interior discrepancy between the two routes at `n`.
pub fn cross_check(mu: &Measure, n: usize, cfg: &CltConfig) -> Result<f64> {
    let (b, s) = rayon::join(|| clt_density_biane(mu, n, cfg), || clt_density_subordination(mu, n, cfg));
    compare_tables(&b?, &s?, CROSS_CHECK_MARGIN)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub x: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub n: usize,
    pub eps: f64,
    pub checked: usize,
    pub failures: Vec<TailPoint>,
    /// Largest `lhs / rhs` over points with `rhs > 0`.
    pub max_ratio: f64,
    pub pass: bool,
}

/// Checks `|Im G_{n+1}(x)| <= 72 v_t(u) / (|x| + 1)^2` at the grid points
/// with `|x| > 2 - 2 eps`, where `x = psi_t(u)` for the flow of `nu_n`.
pub fn tail_bound_check(mu: &Measure, n: usize, eps: f64, cfg: &CltConfig) -> Result<TailReport> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("the tail bound needs n >= 3, got {n}")));
    }
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::InvalidArgument(format!("eps must lie in (0, 0.1), got {eps}")));
    }
    cfg.grid.validate()?;
    let (nu_m, t) = biane_setup(mu, n + 1, &cfg.tolerances)?;
    let flow = Flow::with_tolerance(&nu_m, t, cfg.tolerances.v)?;
    let xs: Vec<f64> = cfg.grid.nodes().into_iter().filter(|x| x.abs() > 2.0 - 2.0 * eps).collect();
    let points: Vec<TailPoint> = xs
        .par_iter()
        .map(|&x| {
            let (u, v) = flow.invert(x)?;
            let gc = Complex64::new(x - u, -v) / t;
            Ok(TailPoint {
                x,
                lhs: PI * quotient_density(x, gc),
                rhs: 72.0 * v / (x.abs() + 1.0).powi(2),
            })
        })
        .collect::<Result<_>>()?;
    let failures: Vec<TailPoint> = points
        .iter()
        .filter(|p| p.lhs > p.rhs * (1.0 + 1e-12) + 1e-15)
        .cloned()
        .collect();
    let max_ratio = points
        .iter()
        .filter(|p| p.rhs > 0.0)
        .map(|p| p.lhs / p.rhs)
        .fold(0.0, f64::max);
    Ok(TailReport {
        n,
        eps,
        checked: points.len(),
        pass: failures.is_empty(),
        failures,
        max_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    pub n: usize,
    pub interval: Option<(f64, f64)>,
    pub mass_outside: Option<f64>,
    pub pass: bool,
    pub notice: Option<String>,
}

/// Mass of `mu_n` outside `[-2 - L/sqrt n, 2 + L/sqrt n]`, `L` the support
/// radius of `mu`. Skipped for measures without a bounded support.
pub fn support_check_for(mu: &Measure, density: &CltDensity, tol: &Tolerances) -> Result<SupportReport> {
    let n = density.n;
    let Some(l) = mu.support_radius() else {
        return Ok(SupportReport {
            n,
            interval: None,
            mass_outside: None,
            pass: true,
            notice: Some("measure has no bounded support; check skipped".into()),
        });
    };
    let r = 2.0 + l / (n as f64).sqrt();
    let mass = density.mass_outside(-r, r)?;
    Ok(SupportReport {
        n,
        interval: Some((-r, r)),
        mass_outside: Some(mass),
        pass: mass < tol.support,
        notice: None,
    })
}

pub fn support_check(mu: &Measure, n: usize, cfg: &CltConfig) -> Result<SupportReport> {
    if mu.support_radius().is_none() {
        return support_check_for(mu, &placeholder(n), &cfg.tolerances);
    }
    let d = clt_density_biane(mu, n, cfg)?;
    support_check_for(mu, &d, &cfg.tolerances)
}

fn placeholder(n: usize) -> CltDensity {
    CltDensity {
        n,
        path: Path::Biane,
        t: None,
        table: DensityTable::from_samples(vec![0.0, 1.0], vec![0.0, 0.0]).expect("static table"),
        atoms: Vec::new(),
        support: Vec::new(),
        moments: Moments {
            mass: f64::NAN,
            mean: f64::NAN,
            variance: f64::NAN,
        },
        flags: Vec::new(),
        model: Model::Biane {
            nu_m: Measure::dirac(0.0),
            t: 1.0,
            tol_v: 1e-12,
        },
        atoms_all: Vec::new(),
    }
}

/// `psi_t([-1 + eta, 1 - eta])` for the flow of `nu_n` with
/// `t = n/(n+1)`; `psi_t` is increasing, so the image is spanned by the
/// images of the endpoints.
pub fn flow_range(mu: &Measure, n: usize, eta: f64, tol: &Tolerances) -> Result<(f64, f64)> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!("eta must lie in (0, 1), got {eta}")));
    }
    let (nu_m, t) = biane_setup(mu, n + 1, tol)?;
    let flow = Flow::with_tolerance(&nu_m, t, tol.v)?;
    Ok((flow.psi(-1.0 + eta)?, flow.psi(1.0 - eta)?))
}
