//! Cauchy transforms, their reciprocals, Stieltjes inversion and the
//! companion measure `nu` with `F_mu(z) = z - G_nu(z)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::measures::{AcPart, Atom, Measure, Shape};
use crate::roots;
use crate::table::DensityTable;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn check_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("{z}")));
    }
    Ok(())
}

/// Standard semicircle (variance one) on `C+ ∪ R`; values below the axis
/// are the reflection of the upper ones.
fn g_semicircle(w: Complex64) -> Complex64 {
    if w.im == 0.0 {
        let x = w.re;
        if x.abs() <= 2.0 {
            c(0.5 * x, -0.5 * (4.0 - x * x).sqrt())
        } else {
            // (x - sign(x) sqrt(x^2 - 4)) / 2 without cancellation
            c(2.0 / (x + x.signum() * (x * x - 4.0).sqrt()), 0.0)
        }
    } else if w.im > 0.0 {
        // sqrt(w - 2) sqrt(w + 2) is the branch of sqrt(w^2 - 4) behaving like w.
        let root = (w - 2.0).sqrt() * (w + 2.0).sqrt();
        2.0 / (w + root)
    } else {
        g_semicircle(w.conj()).conj()
    }
}

fn g_arcsine(w: Complex64) -> Complex64 {
    if w.im == 0.0 {
        let x = w.re;
        if x.abs() < 1.0 {
            c(0.0, -1.0 / (1.0 - x * x).sqrt())
        } else {
            c(x.signum() / (x * x - 1.0).sqrt(), 0.0)
        }
    } else if w.im > 0.0 {
        1.0 / ((w - 1.0).sqrt() * (w + 1.0).sqrt())
    } else {
        g_arcsine(w.conj()).conj()
    }
}

fn g_uniform(w: Complex64) -> Complex64 {
    if w.im == 0.0 {
        let x = w.re;
        let re = 0.5 * ((x + 1.0) / (x - 1.0)).abs().ln();
        if x.abs() < 1.0 {
            c(re, -0.5 * PI)
        } else {
            c(re, 0.0)
        }
    } else if w.im > 0.0 {
        0.5 * ((w + 1.0) / (w - 1.0)).ln()
    } else {
        g_uniform(w.conj()).conj()
    }
}

/// Cauchy transform of the semicircle law of variance `t`, on `C+ ∪ R`.
///
/// For real `x` the boundary values are `(x - i sqrt(4t - x^2)) / 2t` on the
/// support and `(x - sign(x) sqrt(x^2 - 4t)) / 2t` outside it.
pub fn semicircle_cauchy(t: f64, z: Complex64) -> Result<Complex64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "semicircle variance must be positive, got {t}"
        )));
    }
    let s = t.sqrt();
    Ok(g_semicircle(z / s) / s)
}

/// `G_mu(z) = int dmu(x) / (z - x)` for `Im z > 0`.
pub fn cauchy(m: &Measure, z: Complex64) -> Result<Complex64> {
    check_upper(z)?;
    if let Some((g, _)) = closed_cauchy(m, z) {
        return Ok(g);
    }
    m.integrate(|x| 1.0 / (z - x), &[z.re])
}

/// `G_mu'(z) = -int dmu(x) / (z - x)^2` for `Im z > 0`.
pub fn cauchy_derivative(m: &Measure, z: Complex64) -> Result<Complex64> {
    check_upper(z)?;
    if let Some((_, dg)) = closed_cauchy(m, z) {
        return Ok(dg);
    }
    m.integrate(
        |x| {
            let d = z - x;
            -1.0 / (d * d)
        },
        &[z.re],
    )
}

/// `(G, G')` in closed form when the absolutely continuous part is a named
/// family or a companion of one.
fn closed_cauchy(m: &Measure, z: Complex64) -> Option<(Complex64, Complex64)> {
    let mut g = c(0.0, 0.0);
    let mut dg = c(0.0, 0.0);
    for a in m.atoms() {
        let d = z - a.location;
        g += a.weight / d;
        dg -= a.weight / (d * d);
    }
    if let Some(ac) = m.ac() {
        let (ga, dga) = closed_cauchy_ac(ac, z)?;
        g += ga;
        dg += dga;
    }
    Some((g, dg))
}

fn closed_cauchy_ac(ac: &AcPart, z: Complex64) -> Option<(Complex64, Complex64)> {
    let w = (z - ac.loc()) / ac.scale();
    let (g, dg) = match ac.shape() {
        Shape::Semicircle => {
            let g = g_semicircle(w);
            (g, g / (2.0 * g - w))
        }
        Shape::Arcsine => {
            let g = g_arcsine(w);
            (g, -w * g * g * g)
        }
        Shape::Uniform => (g_uniform(w), -1.0 / (w * w - 1.0)),
        Shape::Table(_) => return None,
        Shape::Companion { base, atoms } => {
            let (gb, dgb) = closed_cauchy(base, w)?;
            let mut g = w - 1.0 / gb;
            let mut dg = 1.0 + dgb / (gb * gb);
            for a in atoms {
                let d = w - a.location;
                g -= a.weight / d;
                dg += a.weight / (d * d);
            }
            (g, dg)
        }
    };
    let s = ac.scale();
    Some((g * (ac.weight() / s), dg * (ac.weight() / (s * s))))
}

/// `F_mu = 1 / G_mu`; checks the self-map property `Im F(z) >= Im z`.
pub fn reciprocal_cauchy(m: &Measure, z: Complex64) -> Result<Complex64> {
    let f = 1.0 / cauchy(m, z)?;
    if f.im < z.im - 1e-9 * (1.0 + f.norm()) {
        return Err(Error::InternalConsistency(format!(
            "Im F({z}) = {} is below Im z",
            f.im
        )));
    }
    Ok(f)
}

/// Boundary value `G_mu(x + i0)`.
///
/// Named families use their closed forms, tabulated densities are
/// extrapolated from the upper half-plane. Evaluating at an atom is a
/// divergence.
pub fn boundary_cauchy(m: &Measure, x: f64) -> Result<Complex64> {
    let mut g = c(0.0, 0.0);
    for a in m.atoms() {
        if a.location == x {
            return Err(Error::Divergence(format!("G has a pole at the atom {x}")));
        }
        g += a.weight / (x - a.location);
    }
    if let Some(ac) = m.ac() {
        g += boundary_cauchy_ac(ac, x)?;
    }
    Ok(g)
}

fn boundary_cauchy_ac(ac: &AcPart, x: f64) -> Result<Complex64> {
    let y = (x - ac.loc()) / ac.scale();
    let factor = ac.weight() / ac.scale();
    let raw = match ac.shape() {
        Shape::Semicircle => g_semicircle(c(y, 0.0)),
        Shape::Arcsine => g_arcsine(c(y, 0.0)),
        Shape::Uniform => g_uniform(c(y, 0.0)),
        Shape::Table(_) => {
            let part = Measure::from_parts(Vec::new(), Some(ac.clone()));
            let heights = geometric_heights(1e-2, 6);
            let mut re = Vec::with_capacity(heights.len());
            let mut im = Vec::with_capacity(heights.len());
            for h in &heights {
                let g = cauchy(&part, c(x, *h))?;
                re.push(g.re);
                im.push(g.im);
            }
            let r = extrapolate(&heights, &re, heights.len() - 1, f64::INFINITY)
                .map_err(|reason| Error::InversionFailure { x, reason })?;
            let i = extrapolate(&heights, &im, heights.len() - 1, f64::INFINITY)
                .map_err(|reason| Error::InversionFailure { x, reason })?;
            return Ok(c(r.0, i.0));
        }
        Shape::Companion { base, atoms } => {
            let gb = boundary_cauchy(base, y)?;
            let mut g = c(y, 0.0) - 1.0 / gb;
            for a in atoms {
                g -= a.weight / (y - a.location);
            }
            g
        }
    };
    Ok(raw * factor)
}

/// `eps_0 * 2^-k` for `k = 0..levels`.
pub fn geometric_heights(eps0: f64, levels: usize) -> Vec<f64> {
    (0..levels).map(|k| eps0 * 0.5_f64.powi(k as i32)).collect()
}

/// Grid and height ladder for Stieltjes inversion.
#[derive(Debug, Clone, PartialEq)]
pub struct InversionSchedule {
    grid: Vec<f64>,
    heights: Vec<f64>,
    order: usize,
}

impl InversionSchedule {
    pub const MIN_HEIGHT: f64 = 1e-9;

    pub fn new(grid: Vec<f64>, heights: Vec<f64>, order: usize) -> Result<Self> {
        if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument(
                "inversion grid must be nonempty and strictly increasing".into(),
            ));
        }
        if heights.is_empty()
            || heights.windows(2).any(|w| !(w[0] > w[1]))
            || heights.iter().any(|h| !(*h >= Self::MIN_HEIGHT) || !h.is_finite())
        {
            return Err(Error::InvalidArgument(format!(
                "inversion heights must decrease strictly and stay above {:e}",
                Self::MIN_HEIGHT
            )));
        }
        let order = order.min(heights.len() - 1);
        Ok(Self {
            grid,
            heights,
            order,
        })
    }

    /// Geometric ladder `eps_0 2^-k`, `k < levels`, with full extrapolation order.
    pub fn geometric(grid: Vec<f64>, eps0: f64, levels: usize) -> Result<Self> {
        Self::new(grid, geometric_heights(eps0, levels), levels.saturating_sub(1))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// Polynomial (Neville) extrapolation of `values` sampled at `heights` to
/// height zero. Returns the estimate with the smallest successive
/// difference and that difference. Fails when the differences grow at
/// every step and the last one exceeds `floor`.
pub fn extrapolate(
    heights: &[f64],
    values: &[f64],
    order: usize,
    floor: f64,
) -> std::result::Result<(f64, f64), String> {
    let n = heights.len();
    if n == 1 {
        return Ok((values[0], f64::INFINITY));
    }
    let mut prev: Vec<f64> = Vec::new();
    let mut diag = Vec::with_capacity(n);
    for k in 0..n {
        let mut row = vec![values[k]];
        for j in 1..=k.min(order) {
            let ratio = heights[k - j] / heights[k];
            let v = row[j - 1] + (row[j - 1] - prev[j - 1]) / (ratio - 1.0);
            row.push(v);
        }
        diag.push(*row.last().unwrap());
        prev = row;
    }
    let diffs: Vec<f64> = diag.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let growing = diffs.len() >= 2 && diffs.windows(2).all(|w| w[1] > w[0]);
    let last = *diffs.last().unwrap();
    if growing && last > floor {
        return Err(format!(
            "extrapolation differences grow from {:e} to {last:e}",
            diffs[0]
        ));
    }
    let (best, err) = diffs
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, d)| if *d <= acc.1 { (i, *d) } else { acc });
    Ok((diag[best + 1], err))
}

/// Density at a single point by extrapolating `-Im G(x + i eps) / pi`.
///
/// The raw samples are nonnegative, so a negative extrapolate no larger
/// than their spread is extrapolation error (typical within `eps` of a
/// square-root edge) and is clamped to zero; anything more negative than
/// that spread plus `tol_density` is reported.
pub fn invert_point<E>(evaluator: &E, x: f64, heights: &[f64], order: usize, tol_density: f64) -> Result<f64>
where
    E: Fn(Complex64) -> Result<Complex64>,
{
    let mut ims = Vec::with_capacity(heights.len());
    for h in heights {
        ims.push(evaluator(c(x, *h))?.im);
    }
    // differences are compared in density units
    let (im0, _) = extrapolate(heights, &ims, order, PI * 1e-6)
        .map_err(|reason| Error::InversionFailure { x, reason })?;
    let p = -im0 / PI;
    let spread = ims.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / PI;
    if p < -(tol_density + spread) {
        return Err(Error::InversionFailure {
            x,
            reason: format!("negative density {p:e}"),
        });
    }
    Ok(p.max(0.0))
}

/// Stieltjes inversion over a schedule; the table's support window is the
/// schedule's grid range.
pub fn stieltjes_invert<E>(evaluator: E, schedule: &InversionSchedule, tol_density: f64) -> Result<DensityTable>
where
    E: Fn(Complex64) -> Result<Complex64> + Sync,
{
    let values: Vec<f64> = schedule
        .grid
        .par_iter()
        .map(|x| invert_point(&evaluator, *x, &schedule.heights, schedule.order, tol_density))
        .collect::<Result<_>>()?;
    let grid = schedule.grid.clone();
    let (a, b) = (grid[0], grid[grid.len() - 1]);
    if a < b {
        DensityTable::new(grid, values, (a, b))
    } else {
        DensityTable::new(vec![a, a + 1e-12], vec![values[0], values[0]], (a, a + 1e-12))
    }
}

/// Maassen's companion: the probability measure `nu` with
/// `F_mu(z) = z - G_nu(z)` for standardized `mu`.
///
/// Atoms of `nu` are the real zeros of `G_mu` off the support of `mu`; there
/// is at most one in each gap, since `G_mu` decreases strictly there. Their
/// weights are the residues `1 / |G_mu'|`. The absolutely continuous part
/// has density `Im F_mu(x + i0) / pi` on the absolutely continuous support
/// of `mu`.
pub fn companion(mu: &Measure) -> Result<Measure> {
    companion_with(mu, &Tolerances::default())
}

pub fn companion_with(mu: &Measure, tol: &Tolerances) -> Result<Measure> {
    if !mu.is_standardized(1e-6)? {
        return Err(Error::InvalidArgument(
            "the companion measure requires a standardized measure (mean 0, variance 1)".into(),
        ));
    }
    let ac_support = mu.ac().map(AcPart::support);
    let mut blocks: Vec<(f64, f64)> = mu
        .atoms()
        .iter()
        .map(|a| a.location)
        .filter(|x| !matches!(ac_support, Some((l, r)) if *x >= l && *x <= r))
        .map(|x| (x, x))
        .collect();
    if let Some(s) = ac_support {
        blocks.push(s);
    }
    blocks.sort_by(|a, b| a.0.total_cmp(&b.0));

    let g_real = |x: f64| boundary_cauchy(mu, x).map(|g| g.re);
    let mut atoms = Vec::new();
    for w in blocks.windows(2) {
        let (l, r) = (w[0].1, w[1].0);
        if !(r > l) {
            continue;
        }
        let delta = 1e-9 * (r - l);
        let (a, b) = (l + delta, r - delta);
        let (ga, gb) = (g_real(a)?, g_real(b)?);
        if !(ga > 0.0 && gb < 0.0) {
            continue;
        }
        let zeta = roots::brent(|x| g_real(x).unwrap_or(f64::NAN), a, b, ga, gb, 1e-15, 200)
            .ok_or(Error::CompanionRecovery { mass: f64::NAN })?;
        let slope: f64 = mu.integrate(|x| 1.0 / ((zeta - x) * (zeta - x)), &[])?;
        atoms.push(Atom::new(zeta, 1.0 / slope));
    }

    let ac = match mu.ac() {
        Some(_) => Some(AcPart::new(
            Shape::Companion {
                base: Box::new(mu.clone()),
                atoms: atoms.clone(),
            },
            0.0,
            1.0,
            1.0,
        )?),
        None => None,
    };
    let nu = Measure::from_parts(atoms, ac);
    let mass = nu.total_mass()?;
    if (mass - 1.0).abs() > tol.mass {
        return Err(Error::CompanionRecovery { mass });
    }
    Ok(nu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    fn two_atom() -> Measure {
        Measure::new(
            vec![Atom::new(-2.0_f64.sqrt(), 1.0 / 3.0), Atom::new(0.5_f64.sqrt(), 2.0 / 3.0)],
            None,
            &Tolerances::default(),
        )
        .unwrap()
    }

    #[test]
    fn cauchy_examples() {
        let i = c(0.0, 1.0);
        assert!(close(cauchy(&Measure::dirac(0.0), i).unwrap(), c(0.0, -1.0), 1e-15));
        let z = c(0.0, 2.0);
        let direct = z / (z * z - 1.0);
        assert!(close(direct, c(0.0, -0.4), 1e-15));
        assert!(close(cauchy(&Measure::bernoulli(), z).unwrap(), direct, 1e-15));
        let g = cauchy(&Measure::semicircle(1.0).unwrap(), i).unwrap();
        let expected = (i - i * 5.0_f64.sqrt()) / 2.0;
        assert!(close(g, expected, 1e-10), "{g} vs {expected}");
        assert!(matches!(cauchy(&Measure::bernoulli(), c(1.0, 0.0)), Err(Error::Domain(_))));
        assert!(cauchy(&Measure::bernoulli(), c(1.0, -1.0)).is_err());
    }

    #[test]
    fn reciprocal_examples() {
        let z = c(0.3, 0.7);
        assert!(close(reciprocal_cauchy(&Measure::dirac(0.0), z).unwrap(), z, 1e-14));
        let f = reciprocal_cauchy(&Measure::bernoulli(), c(0.0, 2.0)).unwrap();
        assert!(close(f, c(0.0, 2.5), 1e-14));
        let g = Measure::semicircle(1.0).unwrap();
        for z in [c(0.5, 0.2), c(-1.5, 1.0), c(3.0, 0.01)] {
            let f = reciprocal_cauchy(&g, z).unwrap();
            let gz = semicircle_cauchy(1.0, z).unwrap();
            assert!(close(f, z - gz, 1e-9));
        }
    }

    #[test]
    fn semicircle_boundary_values() {
        assert!(close(semicircle_cauchy(1.0, c(0.0, 0.0)).unwrap(), c(0.0, -1.0), 1e-15));
        let g3 = semicircle_cauchy(1.0, c(3.0, 0.0)).unwrap();
        assert_abs_diff_eq!(g3.re, (3.0 - 5.0_f64.sqrt()) / 2.0, epsilon = 1e-15);
        assert_eq!(g3.im, 0.0);
        // scaling identity oracle: t^{-1/2} G(t^{-1/2} z) with t = 4, x = 0
        let g = semicircle_cauchy(4.0, c(0.0, 0.0)).unwrap();
        assert!(close(g, c(0.0, -0.5), 1e-15));
        assert!(semicircle_cauchy(0.0, c(0.0, 1.0)).is_err());
        // continuity across the support edge
        let a = semicircle_cauchy(1.0, c(2.0 - 1e-12, 0.0)).unwrap();
        let b = semicircle_cauchy(1.0, c(2.0 + 1e-12, 0.0)).unwrap();
        assert!(close(a, b, 1e-5));
        // continuity from the upper half-plane
        let up = semicircle_cauchy(2.0, c(0.7, 1e-10)).unwrap();
        let bd = semicircle_cauchy(2.0, c(0.7, 0.0)).unwrap();
        assert!(close(up, bd, 1e-9));
    }

    #[test]
    fn functional_equation_of_semicircle() {
        for re in [-3.0, -1.9, -0.4, 0.0, 0.8, 1.99, 2.5] {
            for im in [0.0, 1e-3, 0.5, 4.0] {
                let z = c(re, im);
                let g = semicircle_cauchy(1.0, z).unwrap();
                assert!(close(g + 1.0 / g, z, 1e-12), "z = {z}");
            }
        }
    }

    #[test]
    fn closed_form_boundaries_match_upper_limit() {
        let arc = Measure::arcsine(-1.5, 2.0).unwrap();
        let uni = Measure::uniform(-1.0, 3.0).unwrap();
        for m in [arc, uni] {
            for x in [-3.0, -0.9, 0.2, 1.4, 4.0] {
                let b = boundary_cauchy(&m, x).unwrap();
                let up = cauchy(&m, c(x, 1e-7)).unwrap();
                assert!(close(b, up, 1e-3), "x = {x}: {b} vs {up}");
            }
        }
    }

    #[test]
    fn inversion_examples() {
        let g = |z: Complex64| semicircle_cauchy(1.0, z);
        let s = InversionSchedule::geometric(vec![0.0], 1e-2, 6).unwrap();
        let t = stieltjes_invert(g, &s, 1e-8).unwrap();
        assert_abs_diff_eq!(t.values()[0], 1.0 / PI, epsilon = 1e-10);

        let dirac = Measure::dirac(0.0);
        let s1 = InversionSchedule::geometric(vec![1.0], 1e-2, 6).unwrap();
        let t = stieltjes_invert(|z| cauchy(&dirac, z), &s1, 1e-8).unwrap();
        assert!(t.values()[0].abs() < 1e-12);

        let b = Measure::bernoulli();
        let s2 = InversionSchedule::geometric(vec![0.5], 1e-2, 6).unwrap();
        let t = stieltjes_invert(|z| cauchy(&b, z), &s2, 1e-8).unwrap();
        assert!(t.values()[0].abs() < 1e-12);
    }

    #[test]
    fn schedule_validation() {
        assert!(InversionSchedule::new(vec![0.0, 1.0], vec![1e-2, 1e-2], 1).is_err());
        assert!(InversionSchedule::new(vec![0.0, 1.0], vec![1e-2, 1e-10], 1).is_err());
        assert!(InversionSchedule::new(vec![1.0, 0.0], vec![1e-2], 0).is_err());
    }

    #[test]
    fn round_trip_inversion() {
        let grid: Vec<f64> = (0..=20).map(|i| -0.9 + 0.09 * i as f64).collect();
        for m in [
            Measure::semicircle(1.0).unwrap(),
            Measure::semicircle(0.5).unwrap(),
            Measure::uniform(-1.2, 1.5).unwrap(),
        ] {
            let s = InversionSchedule::geometric(grid.clone(), 1e-2, 6).unwrap();
            let t = stieltjes_invert(|z| cauchy(&m, z), &s, 1e-8).unwrap();
            let ac = m.ac().unwrap();
            for (x, p) in t.grid().iter().zip(t.values()) {
                assert!((p - ac.density(*x)).abs() < 1e-6, "x = {x}: {p} vs {}", ac.density(*x));
            }
        }
    }

    #[test]
    fn companion_examples() {
        let nu = companion(&Measure::bernoulli()).unwrap();
        assert_eq!(nu.atoms().len(), 1);
        assert_abs_diff_eq!(nu.atoms()[0].location, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(nu.atoms()[0].weight, 1.0, epsilon = 1e-12);
        assert!(nu.ac().is_none());

        // G_mu = (z + 1/sqrt2) / ((z + sqrt2)(z - 1/sqrt2)), so z - F_mu = 1/(z + 1/sqrt2).
        let nu = companion(&two_atom()).unwrap();
        assert_eq!(nu.atoms().len(), 1);
        assert_abs_diff_eq!(nu.atoms()[0].location, -0.5_f64.sqrt(), epsilon = 1e-13);
        assert_abs_diff_eq!(nu.atoms()[0].weight, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(nu.mean().unwrap(), -0.5_f64.sqrt(), epsilon = 1e-12);

        let g = Measure::semicircle(1.0).unwrap();
        let nu = companion(&g).unwrap();
        assert!(nu.atoms().is_empty());
        for x in [-1.9, -0.5, 0.0, 1.2] {
            assert_abs_diff_eq!(nu.ac().unwrap().density(x), g.ac().unwrap().density(x), epsilon = 1e-13);
        }
        assert!(companion(&Measure::bernoulli().dilate(2.0).unwrap()).is_err());
    }

    #[test]
    fn companion_consistency_on_grid() {
        let uniform = Measure::uniform(-3.0_f64.sqrt(), 3.0_f64.sqrt()).unwrap();
        let mixed = Measure::new(
            vec![Atom::new(-1.5, 0.25)],
            Some(AcPart::new(Shape::Semicircle, 0.5, 0.5_f64.sqrt(), 0.75).unwrap()),
            &Tolerances::default(),
        )
        .unwrap()
        .standardize()
        .unwrap();
        for mu in [Measure::semicircle(1.0).unwrap(), uniform, two_atom(), mixed] {
            let nu = companion(&mu).unwrap();
            for z in [c(0.3, 0.5), c(-1.0, 1.0), c(2.5, 0.2), c(0.0, 3.0)] {
                let lhs = cauchy(&nu, z).unwrap();
                let rhs = z - reciprocal_cauchy(&mu, z).unwrap();
                assert!(close(lhs, rhs, 1e-10), "z = {z}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn herglotz_and_decay() {
        let m = two_atom();
        let mut last = f64::INFINITY;
        for y in [1e2, 1e3, 1e4] {
            let z = c(0.0, y);
            let r = (z * cauchy(&m, z).unwrap() - 1.0).norm();
            assert!(r < last);
            last = r;
        }
        let g = Measure::semicircle(1.0).unwrap();
        for re in [-3.0, -1.0, 0.0, 1.5] {
            for im in [1e-3, 0.1, 10.0] {
                assert!(cauchy(&g, c(re, im)).unwrap().im < 0.0);
            }
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let uni = Measure::uniform(-3.0_f64.sqrt(), 3.0_f64.sqrt()).unwrap();
        let measures = [
            Measure::semicircle(0.7).unwrap(),
            Measure::arcsine(-1.5, 0.5).unwrap(),
            uni.clone(),
            companion(&uni).unwrap(),
            companion(&Measure::semicircle(1.0).unwrap()).unwrap(),
        ];
        for m in &measures {
            for z in [c(0.3, 0.2), c(-2.5, 0.05), c(4.0, 1.0), c(0.0, 3.0)] {
                let (g, dg) = closed_cauchy(m, z).unwrap();
                let gq: Complex64 = m.integrate(|x| 1.0 / (z - x), &[z.re]).unwrap();
                let dq: Complex64 = m.integrate(|x| -1.0 / ((z - x) * (z - x)), &[z.re]).unwrap();
                assert!(close(g, gq, 1e-9), "{z}: {g} vs {gq}");
                assert!(close(dg, dq, 1e-8), "{z}: {dg} vs {dq}");
            }
        }
    }
}
