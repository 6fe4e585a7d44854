//! Biane's parametrization of `nu ⊞ gamma_t`.
//!
//! `v_t(u)` is the smallest `v >= 0` with `I(u, v) = int dnu(x) / ((u-x)^2 + v^2) <= 1/t`,
//! `psi_t(u) = u + t int (u-x) / ((u-x)^2 + v_t(u)^2) dnu(x)` is an increasing
//! homeomorphism of the line, and at `x = psi_t(u)` the boundary value of
//! the Cauchy transform is `(x - u - i v_t(u)) / t`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{AcPart, Measure};
use crate::roots;
use crate::table::DensityTable;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub u: f64,
    pub v: f64,
    pub psi: f64,
    /// Density of `nu ⊞ gamma_t` at `psi`, equal to `v / (pi t)`.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowCurve {
    pub points: Vec<FlowPoint>,
    pub t: f64,
}

/// Flow of a fixed measure `nu` at time `t`.
#[derive(Debug, Clone, Copy)]
pub struct Flow<'a> {
    nu: &'a Measure,
    t: f64,
    tol_v: f64,
    ac_support: Option<(f64, f64)>,
}

impl<'a> Flow<'a> {
    pub const DEFAULT_TOL_V: f64 = 1e-12;

    pub fn new(nu: &'a Measure, t: f64) -> Result<Self> {
        Self::with_tolerance(nu, t, Self::DEFAULT_TOL_V)
    }

    pub fn with_tolerance(nu: &'a Measure, t: f64, tol_v: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("flow time must be positive, got {t}")));
        }
        Ok(Self {
            nu,
            t,
            tol_v,
            ac_support: nu.ac().map(AcPart::support),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn measure(&self) -> &Measure {
        self.nu
    }

    /// `u` sits on an atom or in the closed absolutely continuous support,
    /// where `I(u, 0+)` diverges.
    fn singular_at(&self, u: f64) -> bool {
        self.nu.atoms().iter().any(|a| a.location == u)
            || matches!(self.ac_support, Some((a, b)) if u >= a && u <= b)
    }

    /// `[I, I2, J]` with `I = int 1/r`, `I2 = int 1/r^2`, `J = int (u-x)/r`
    /// and `r = (u-x)^2 + v^2`.
    pub fn integrals(&self, u: f64, v: f64) -> Result<[f64; 3]> {
        let v2 = v * v;
        self.nu.integrate(
            |x| {
                let d = u - x;
                let r = d * d + v2;
                [1.0 / r, 1.0 / (r * r), d / r]
            },
            &[u],
        )
    }

    /// `I(u, v)`.
    pub fn threshold_integral(&self, u: f64, v: f64) -> Result<f64> {
        if v == 0.0 && self.singular_at(u) {
            return Ok(f64::INFINITY);
        }
        Ok(self.integrals(u, v)?[0])
    }

    /// `v_t(u)` together with `J(u, v_t(u))`.
    fn solve(&self, u: f64) -> Result<(f64, f64)> {
        let t = self.t;
        if !self.singular_at(u) {
            // A quadrature failure at v = 0 means u sits on an edge where
            // I(u, 0) diverges; fall through to the v > 0 branch.
            match self.integrals(u, 0.0) {
                Ok([i0, _, j0]) if i0 <= 1.0 / t => return Ok((0.0, j0)),
                Ok(_) | Err(Error::QuadratureFailure { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        // Root of h(s) = 1/I(u, sqrt s) - t on s = v^2 in (0, t]; I <= 1/v^2
        // makes h(t) >= 0.
        let eval = |s: f64| -> Result<(f64, f64, f64)> {
            let [i, i2, j] = self.integrals(u, s.sqrt())?;
            Ok((1.0 / i - t, i2 / (i * i), j))
        };
        let (h_hi, dh_hi, j_hi) = eval(t)?;
        if h_hi < -1e-12 * t {
            return Err(Error::InternalConsistency(format!(
                "bracket violated at u = {u}: I(u, sqrt t) exceeds 1/t"
            )));
        }
        if h_hi <= 0.0 {
            return Ok((t.sqrt(), j_hi));
        }
        let (mut lo, mut hi) = (0.0_f64, t);
        let (mut s, mut h, mut dh) = (t, h_hi, dh_hi);
        for _ in 0..300 {
            let newton = s - h / dh;
            let next = if newton.is_finite() && newton > lo && newton < hi {
                newton
            } else if lo > 0.0 {
                (lo * hi).sqrt()
            } else {
                0.0625 * hi
            };
            let (h_n, dh_n, j_n) = eval(next)?;
            if h_n > 0.0 {
                hi = next;
            } else {
                lo = next;
            }
            let step = (next.sqrt() - s.sqrt()).abs();
            s = next;
            h = h_n;
            dh = dh_n;
            if h == 0.0 || step <= 0.25 * self.tol_v || hi.sqrt() - lo.sqrt() <= self.tol_v {
                return Ok((s.sqrt(), j_n));
            }
        }
        Err(Error::InternalConsistency(format!(
            "v_t root search did not settle at u = {u}"
        )))
    }

    pub fn v(&self, u: f64) -> Result<f64> {
        Ok(self.solve(u)?.0)
    }

    pub fn psi(&self, u: f64) -> Result<f64> {
        let (_, j) = self.solve(u)?;
        Ok(u + self.t * j)
    }

    pub fn point(&self, u: f64) -> Result<FlowPoint> {
        let (v, j) = self.solve(u)?;
        Ok(FlowPoint {
            u,
            v,
            psi: u + self.t * j,
            density: v / (PI * self.t),
        })
    }

    fn positive(&self, u: f64) -> bool {
        self.singular_at(u)
            || self
                .threshold_integral(u, 0.0)
                .map(|i| i > 1.0 / self.t)
                .unwrap_or(true)
    }

    /// Maximal intervals of `u` on which `v_t(u) > 0`.
    ///
    /// Every atom and the absolutely continuous support lie inside the set.
    /// Between two such blocks `I(u, 0)` is convex, so the set misses at most
    /// one interval of each gap; on the outer rays it is monotone.
    pub fn support(&self) -> Result<Vec<(f64, f64)>> {
        let mut blocks: Vec<(f64, f64)> = self
            .nu
            .atoms()
            .iter()
            .map(|a| a.location)
            .filter(|x| !matches!(self.ac_support, Some((l, r)) if *x >= l && *x <= r))
            .map(|x| (x, x))
            .collect();
        if let Some(s) = self.ac_support {
            blocks.push(s);
        }
        blocks.sort_by(|a, b| a.0.total_cmp(&b.0));
        if blocks.is_empty() {
            return Ok(Vec::new());
        }
        let reach = self.t.sqrt();
        let scale = 1.0 + blocks[0].0.abs().max(blocks[blocks.len() - 1].1.abs());
        let xtol = 1e-15 * scale;
        let inv_t = 1.0 / self.t;
        let i0 = |u: f64| self.threshold_integral(u, 0.0).unwrap_or(f64::INFINITY);

        let first = blocks[0].0;
        let (_, left) = roots::bisect_predicate(|u| self.positive(u), first - reach - 1e-9, first, xtol, 200);
        let last = blocks[blocks.len() - 1].1;
        let (right, _) = roots::bisect_predicate(|u| !self.positive(u), last, last + reach + 1e-9, xtol, 200);

        let mut out = Vec::new();
        let mut start = left;
        for w in blocks.windows(2) {
            let (l, r) = (w[0].1, w[1].0);
            if !(r > l) {
                continue;
            }
            // golden-section search for the minimum of the convex I(u, 0)
            let g = 0.5 * (5.0_f64.sqrt() - 1.0);
            let (mut a, mut b) = (l, r);
            let mut c1 = b - g * (b - a);
            let mut c2 = a + g * (b - a);
            let (mut f1, mut f2) = (i0(c1), i0(c2));
            for _ in 0..200 {
                if b - a <= xtol {
                    break;
                }
                if f1 <= f2 {
                    b = c2;
                    c2 = c1;
                    f2 = f1;
                    c1 = b - g * (b - a);
                    f1 = i0(c1);
                } else {
                    a = c1;
                    c1 = c2;
                    f1 = f2;
                    c2 = a + g * (b - a);
                    f2 = i0(c2);
                }
                if f1.min(f2) <= inv_t {
                    break;
                }
            }
            let (umin, fmin) = if f1 <= f2 { (c1, f1) } else { (c2, f2) };
            if fmin > inv_t {
                continue;
            }
            let (_, gap_lo) = roots::bisect_predicate(|u| !self.positive(u), l, umin, xtol, 200);
            let (gap_hi, _) = roots::bisect_predicate(|u| self.positive(u), umin, r, xtol, 200);
            out.push((start, gap_lo));
            start = gap_hi;
        }
        out.push((start, right));
        Ok(out)
    }

    /// Boundary value of `G_{nu ⊞ gamma_t}` at real `x`.
    pub fn cauchy(&self, x: f64) -> Result<Complex64> {
        let (u, v) = self.invert(x)?;
        Ok(Complex64::new(x - u, -v) / self.t)
    }

    /// `(u, v_t(u))` with `psi_t(u) = x`. Since `|psi_t(u) - u| <= sqrt t`,
    /// the root lies in `[x - sqrt t, x + sqrt t]`.
    pub fn invert(&self, x: f64) -> Result<(f64, f64)> {
        let reach = self.t.sqrt() * (1.0 + 1e-9) + 1e-12;
        let (a, b) = (x - reach, x + reach);
        let g = |u: f64| self.psi(u).map(|p| p - x).unwrap_or(f64::NAN);
        let (ga, gb) = (g(a), g(b));
        if !(ga <= 0.0 && gb >= 0.0) {
            return Err(Error::FlowInversion { x });
        }
        let xtol = 1e-15 * (1.0 + x.abs());
        let u = roots::brent(g, a, b, ga, gb, xtol, 300).ok_or(Error::FlowInversion { x })?;
        Ok((u, self.v(u)?))
    }

    /// Initial parameter grid: the hull of `nu` widened by `2 sqrt t + 1`,
    /// plus midpoints wherever `psi` moves faster than twice its average.
    pub fn default_u_grid(&self, points: usize) -> Result<Vec<f64>> {
        let points = points.max(8);
        let (lo, hi) = self.nu.hull();
        let pad = 2.0 * self.t.sqrt() + 1.0;
        let (a, b) = (lo - pad, hi + pad);
        let mut grid: Vec<f64> = (0..points)
            .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
            .collect();
        for (l, r) in self.support()? {
            grid.push(l);
            grid.push(r);
        }
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let psi: Vec<f64> = grid.par_iter().map(|u| self.psi(*u)).collect::<Result<_>>()?;
        let mean_slope = (psi[psi.len() - 1] - psi[0]) / (b - a);
        let mut refined = Vec::with_capacity(2 * grid.len());
        for i in 0..grid.len() - 1 {
            refined.push(grid[i]);
            let slope = (psi[i + 1] - psi[i]) / (grid[i + 1] - grid[i]);
            if slope > 2.0 * mean_slope {
                refined.push(0.5 * (grid[i] + grid[i + 1]));
            }
        }
        refined.push(grid[grid.len() - 1]);
        Ok(refined)
    }

    /// Flow samples over `u_grid` and the density of `nu ⊞ gamma_t` on the
    /// image grid `psi_t(u_grid)`.
    pub fn density(&self, u_grid: &[f64]) -> Result<(FlowCurve, DensityTable)> {
        if u_grid.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidArgument("u grid must be strictly increasing".into()));
        }
        let points: Vec<FlowPoint> = u_grid.par_iter().map(|u| self.point(*u)).collect::<Result<_>>()?;
        if points.windows(2).any(|w| !(w[0].psi < w[1].psi)) {
            return Err(Error::InternalConsistency("psi_t is not strictly increasing on the grid".into()));
        }
        let support = self.support()?;
        let window = match (support.first(), support.last()) {
            (Some(f), Some(l)) => (self.psi(f.0)?, self.psi(l.1)?),
            _ => (points[0].psi, points[points.len() - 1].psi),
        };
        let table = DensityTable::new(
            points.iter().map(|p| p.psi).collect(),
            points.iter().map(|p| p.density).collect(),
            window,
        )?;
        Ok((FlowCurve { points, t: self.t }, table))
    }
}

pub fn flow_v(nu: &Measure, t: f64, u: f64) -> Result<f64> {
    Flow::new(nu, t)?.v(u)
}

pub fn flow_psi(nu: &Measure, t: f64, u: f64) -> Result<f64> {
    Flow::new(nu, t)?.psi(u)
}

pub fn flow_density(nu: &Measure, t: f64, u_grid: &[f64]) -> Result<(FlowCurve, DensityTable)> {
    Flow::new(nu, t)?.density(u_grid)
}

pub fn flow_cauchy(nu: &Measure, t: f64, x: f64) -> Result<Complex64> {
    Flow::new(nu, t)?.cauchy(x)
}
