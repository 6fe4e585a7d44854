//! Probability measures on the real line: finitely many atoms plus at most
//! one absolutely continuous component.
//!
//! The absolutely continuous component is stored as a reference shape
//! pushed through an affine map, `p(x) = weight * q((x - loc) / scale) / scale`,
//! so that translation and dilation never resample anything. Integrals
//! against the component are computed in the angle variable of
//! `y = c - h cos(theta)`, which removes square-root and inverse
//! square-root behaviour at the support edges.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::quadrature::{QuadValue, Quadrature};
use crate::table::DensityTable;
use crate::transforms;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub location: f64,
    pub weight: f64,
}

impl Atom {
    pub fn new(location: f64, weight: f64) -> Self {
        Self { location, weight }
    }
}

/// Reference density `q` of an absolutely continuous component.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `sqrt(4 - y^2) / (2 pi)` on `[-2, 2]` (variance one).
    Semicircle,
    /// `1 / (pi sqrt(1 - y^2))` on `[-1, 1]`.
    Arcsine,
    /// `1/2` on `[-1, 1]`.
    Uniform,
    /// Tabulated density, locally cubic between samples.
    Table(DensityTable),
    /// Absolutely continuous part of the measure `nu` defined by
    /// `G_nu(z) = z - F_base(z)`; `atoms` are the atoms of `nu`.
    Companion { base: Box<Measure>, atoms: Vec<Atom> },
}

impl Shape {
    fn support(&self) -> (f64, f64) {
        match self {
            Shape::Semicircle => (-2.0, 2.0),
            Shape::Arcsine | Shape::Uniform => (-1.0, 1.0),
            Shape::Table(t) => t.support(),
            Shape::Companion { base, .. } => base
                .ac()
                .map(AcPart::support)
                .unwrap_or((0.0, 0.0)),
        }
    }

    /// Edge behaviour of the reference density near its support endpoints,
    /// when known in closed form: `q ~ dist^exponent`.
    pub fn edge_exponent(&self) -> Option<f64> {
        match self {
            Shape::Semicircle => Some(0.5),
            Shape::Arcsine => Some(-0.5),
            Shape::Uniform => Some(0.0),
            _ => None,
        }
    }
}

/// Absolutely continuous component `weight * q((x - loc)/scale) / scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcPart {
    shape: Shape,
    loc: f64,
    scale: f64,
    weight: f64,
}

impl AcPart {
    pub fn new(shape: Shape, loc: f64, scale: f64, weight: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) || !loc.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "absolutely continuous part needs finite location and positive scale (loc {loc}, scale {scale})"
            )));
        }
        if !(weight > 0.0 && weight <= 1.0 + 1e-12) {
            return Err(Error::InvalidSpec(format!(
                "absolutely continuous weight must lie in (0, 1], got {weight}"
            )));
        }
        Ok(Self {
            shape,
            loc,
            scale,
            weight,
        })
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn loc(&self) -> f64 {
        self.loc
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn support(&self) -> (f64, f64) {
        let (a, b) = self.shape.support();
        (self.loc + self.scale * a, self.loc + self.scale * b)
    }

    fn raw_density(&self, y: f64) -> f64 {
        match &self.shape {
            Shape::Semicircle => {
                if y.abs() >= 2.0 {
                    0.0
                } else {
                    (4.0 - y * y).sqrt() / (2.0 * PI)
                }
            }
            Shape::Arcsine => {
                if y.abs() >= 1.0 {
                    0.0
                } else {
                    1.0 / (PI * (1.0 - y * y).sqrt())
                }
            }
            Shape::Uniform => {
                if y.abs() > 1.0 {
                    0.0
                } else {
                    0.5
                }
            }
            Shape::Table(t) => t.cubic(y),
            Shape::Companion { base, .. } => companion_density(base, y),
        }
    }

    /// Density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        self.weight * self.raw_density((x - self.loc) / self.scale) / self.scale
    }

    /// `q(y(theta)) * dy/dtheta` for `y = c - h cos(theta)`, together with `y`.
    fn weighted(&self, theta: f64, c: f64, h: f64) -> (f64, f64) {
        let (s, co) = theta.sin_cos();
        let y = c - h * co;
        let w = match &self.shape {
            Shape::Semicircle => 2.0 * s * s / PI,
            Shape::Arcsine => 1.0 / PI,
            Shape::Uniform => 0.5 * s,
            _ => self.raw_density(y) * h * s,
        };
        (y, w)
    }

    /// `int kernel(x) p(x) dx`; `singular` lists points (in x) where the
    /// kernel may be singular or sharply peaked.
    pub fn integrate<T, K>(&self, kernel: K, singular: &[f64], quad: &Quadrature) -> Result<T>
    where
        T: QuadValue,
        K: Fn(f64) -> T,
    {
        let (ya, yb) = self.shape.support();
        let c = 0.5 * (ya + yb);
        let h = 0.5 * (yb - ya);
        let breaks: Vec<f64> = singular
            .iter()
            .map(|s| (s - self.loc) / self.scale)
            .filter(|y| *y > ya && *y < yb)
            .map(|y| ((c - y) / h).clamp(-1.0, 1.0).acos())
            .collect();
        let out = quad.integrate(
            |theta| {
                let (y, w) = self.weighted(theta, c, h);
                if w == 0.0 {
                    T::zero()
                } else {
                    kernel(self.loc + self.scale * y).scale(w)
                }
            },
            0.0,
            PI,
            &breaks,
        )?;
        Ok(out.value.scale(self.weight))
    }

    fn mapped(&self, loc: f64, scale: f64) -> AcPart {
        AcPart {
            shape: self.shape.clone(),
            loc,
            scale,
            weight: self.weight,
        }
    }
}

/// `Im F_base(y + i0) / pi`, the absolutely continuous density of the
/// companion of `base`.
fn companion_density(base: &Measure, y: f64) -> f64 {
    match transforms::boundary_cauchy(base, y) {
        Ok(g) => {
            let n2 = g.norm_sqr();
            if !n2.is_finite() || n2 == 0.0 {
                0.0
            } else {
                (-g.im / (PI * n2)).max(0.0)
            }
        }
        Err(_) => 0.0,
    }
}

/// A probability measure: sorted, distinct atoms plus an optional
/// absolutely continuous part.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    atoms: Vec<Atom>,
    ac: Option<AcPart>,
}

fn same_location(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

impl Measure {
    /// Builds a measure and validates atoms and total mass against `tol.mass`.
    pub fn new(mut atoms: Vec<Atom>, ac: Option<AcPart>, tol: &Tolerances) -> Result<Self> {
        for a in &atoms {
            if !a.location.is_finite() {
                return Err(Error::InvalidSpec(format!("atom location {} is not finite", a.location)));
            }
            if !(a.weight > 0.0 && a.weight <= 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "atom weight {} at {} is outside (0, 1]",
                    a.weight, a.location
                )));
            }
        }
        atoms.sort_by(|a, b| a.location.total_cmp(&b.location));
        if let Some(w) = atoms.windows(2).find(|w| same_location(w[0].location, w[1].location)) {
            return Err(Error::InvalidSpec(format!(
                "duplicate atom location {}",
                w[0].location
            )));
        }
        let m = Self { atoms, ac };
        let mass = m.total_mass()?;
        if (mass - 1.0).abs() > tol.mass {
            return Err(Error::InvalidSpec(format!(
                "total mass {mass} deviates from 1 by more than {:e}",
                tol.mass
            )));
        }
        Ok(m)
    }

    /// Unvalidated constructor for measures assembled by the pipeline
    /// itself (atoms already sorted and distinct).
    pub(crate) fn from_parts(atoms: Vec<Atom>, ac: Option<AcPart>) -> Self {
        Self { atoms, ac }
    }

    pub fn dirac(x: f64) -> Self {
        Self::from_parts(vec![Atom::new(x, 1.0)], None)
    }

    /// Symmetric Bernoulli measure `(delta_{-1} + delta_{1}) / 2`.
    pub fn bernoulli() -> Self {
        Self::from_parts(vec![Atom::new(-1.0, 0.5), Atom::new(1.0, 0.5)], None)
    }

    /// Centered semicircle law of variance `t`.
    pub fn semicircle(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("semicircle variance must be positive, got {t}")));
        }
        Ok(Self::from_parts(
            vec![],
            Some(AcPart::new(Shape::Semicircle, 0.0, t.sqrt(), 1.0)?),
        ))
    }

    /// Arcsine law on `[a, b]`.
    pub fn arcsine(a: f64, b: f64) -> Result<Self> {
        interval_check(a, b)?;
        Ok(Self::from_parts(
            vec![],
            Some(AcPart::new(Shape::Arcsine, 0.5 * (a + b), 0.5 * (b - a), 1.0)?),
        ))
    }

    /// Uniform law on `[a, b]`.
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        interval_check(a, b)?;
        Ok(Self::from_parts(
            vec![],
            Some(AcPart::new(Shape::Uniform, 0.5 * (a + b), 0.5 * (b - a), 1.0)?),
        ))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn ac(&self) -> Option<&AcPart> {
        self.ac.as_ref()
    }

    pub fn is_atomic(&self) -> bool {
        self.ac.is_none()
    }

    /// Smallest interval containing the support.
    pub fn hull(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for a in &self.atoms {
            lo = lo.min(a.location);
            hi = hi.max(a.location);
        }
        if let Some(ac) = &self.ac {
            let (a, b) = ac.support();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }

    /// `sup |x|` over the support, or `None` when the measure is a
    /// tabulation whose end samples are nonzero (a truncated tail).
    pub fn support_radius(&self) -> Option<f64> {
        if let Some(ac) = &self.ac {
            if let Shape::Table(t) = ac.shape() {
                let v = t.values();
                if v[0] > 0.0 || v[v.len() - 1] > 0.0 {
                    return None;
                }
            }
        }
        let (lo, hi) = self.hull();
        Some(lo.abs().max(hi.abs()))
    }

    /// Integral of `kernel` against the measure with the default engine.
    pub fn integrate<T, K>(&self, kernel: K, singular: &[f64]) -> Result<T>
    where
        T: QuadValue,
        K: Fn(f64) -> T,
    {
        self.integrate_with(kernel, singular, &Quadrature::default())
    }

    /// Atom contributions are summed exactly in ascending location order;
    /// the absolutely continuous part is integrated adaptively.
    pub fn integrate_with<T, K>(&self, kernel: K, singular: &[f64], quad: &Quadrature) -> Result<T>
    where
        T: QuadValue,
        K: Fn(f64) -> T,
    {
        let mut acc = T::zero();
        for a in &self.atoms {
            let v = kernel(a.location);
            if !v.is_finite() {
                return Err(Error::Divergence(format!(
                    "kernel is not finite at the atom {}",
                    a.location
                )));
            }
            acc = acc.add(v.scale(a.weight));
        }
        if let Some(ac) = &self.ac {
            acc = acc.add(ac.integrate(kernel, singular, quad)?);
        }
        Ok(acc)
    }

    pub fn total_mass(&self) -> Result<f64> {
        self.integrate(|_| 1.0, &[])
    }

    pub fn mean(&self) -> Result<f64> {
        self.moment(1)
    }

    pub fn variance(&self) -> Result<f64> {
        self.moment(2)
    }

    /// Mean (`k = 1`) or centered second moment (`k = 2`).
    pub fn moment(&self, k: u32) -> Result<f64> {
        let [mass, first] = self.integrate(|x| [1.0, x], &[])?;
        let mean = first / mass;
        let value = match k {
            1 => mean,
            2 => self.integrate(|x| (x - mean) * (x - mean), &[])? / mass,
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "moment order must be 1 or 2, got {k}"
                )))
            }
        };
        if !value.is_finite() {
            return Err(Error::Divergence(format!("moment of order {k} is not finite")));
        }
        Ok(value)
    }

    /// Pushforward under `x -> x + c`.
    pub fn translate(&self, c: f64) -> Measure {
        Measure {
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom::new(a.location + c, a.weight))
                .collect(),
            ac: self.ac.as_ref().map(|ac| ac.mapped(ac.loc + c, ac.scale)),
        }
    }

    /// Dilation `D_a`: pushforward under `x -> a x`.
    pub fn dilate(&self, a: f64) -> Result<Measure> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dilation factor must be positive, got {a}"
            )));
        }
        Ok(Measure {
            atoms: self
                .atoms
                .iter()
                .map(|at| Atom::new(a * at.location, at.weight))
                .collect(),
            ac: self.ac.as_ref().map(|ac| ac.mapped(a * ac.loc, a * ac.scale)),
        })
    }

    /// Translate to mean zero, then dilate to variance one.
    pub fn standardize(&self) -> Result<Measure> {
        if self.ac.is_none() && self.atoms.len() == 1 {
            return Err(Error::Degenerate(format!(
                "point mass at {} has zero variance",
                self.atoms[0].location
            )));
        }
        let mean = self.mean()?;
        let var = self.variance()?;
        if !(var > 0.0) || var <= 1e-300 {
            return Err(Error::Degenerate(format!("variance {var} is not positive")));
        }
        self.translate(-mean).dilate(1.0 / var.sqrt())
    }

    pub fn is_standardized(&self, tol: f64) -> Result<bool> {
        Ok(self.mean()?.abs() <= tol && (self.variance()? - 1.0).abs() <= tol)
    }
}

fn interval_check(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::InvalidArgument(format!("[{a}, {b}] is not an interval")));
    }
    Ok(())
}

/// JSON measure description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atoms: Vec<AtomSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensitySpec>,
    #[serde(default)]
    pub standardize: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub x: f64,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DensitySpec {
    Family(FamilySpec),
    Table(TableSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub family: Family,
    #[serde(default)]
    pub params: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub table: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Semicircle,
    Arcsine,
    Uniform,
}

impl MeasureSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))
    }
}

fn param(params: &Map<String, Value>, allowed: &[&str], key: &str, default: f64) -> Result<f64> {
    if let Some(bad) = params.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(Error::InvalidSpec(format!("unknown density parameter `{bad}`")));
    }
    match params.get(key) {
        None => Ok(default),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| Error::InvalidSpec(format!("density parameter `{key}` must be a number"))),
    }
}

fn family_part(spec: &FamilySpec) -> Result<AcPart> {
    let p = &spec.params;
    match spec.family {
        Family::Semicircle => {
            let allowed = ["variance", "center", "weight"];
            let t = param(p, &allowed, "variance", 1.0)?;
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::InvalidSpec(format!("semicircle variance must be positive, got {t}")));
            }
            AcPart::new(
                Shape::Semicircle,
                param(p, &allowed, "center", 0.0)?,
                t.sqrt(),
                param(p, &allowed, "weight", 1.0)?,
            )
        }
        Family::Arcsine | Family::Uniform => {
            let allowed = ["a", "b", "weight"];
            let a = param(p, &allowed, "a", -1.0)?;
            let b = param(p, &allowed, "b", 1.0)?;
            if !(a < b) {
                return Err(Error::InvalidSpec(format!("[{a}, {b}] is not an interval")));
            }
            let shape = if spec.family == Family::Arcsine {
                Shape::Arcsine
            } else {
                Shape::Uniform
            };
            AcPart::new(shape, 0.5 * (a + b), 0.5 * (b - a), param(p, &allowed, "weight", 1.0)?)
        }
    }
}

/// Validated measure from a spec; mass is checked, never renormalized.
pub fn make_measure(spec: &MeasureSpec) -> Result<Measure> {
    make_measure_with(spec, &Tolerances::default())
}

pub fn make_measure_with(spec: &MeasureSpec, tol: &Tolerances) -> Result<Measure> {
    let atoms = spec.atoms.iter().map(|a| Atom::new(a.x, a.w)).collect();
    let ac = match &spec.density {
        None => None,
        Some(DensitySpec::Family(f)) => Some(family_part(f)?),
        Some(DensitySpec::Table(t)) => Some(AcPart::new(
            Shape::Table(DensityTable::from_pairs(&t.table)?),
            0.0,
            1.0,
            1.0,
        )?),
    };
    let m = Measure::new(atoms, ac, tol)?;
    if spec.standardize {
        m.standardize()
    } else {
        Ok(m)
    }
}
