//! Characteristic roots, real-axis scans and complex stability domains.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::design::{StabilityPair, TwoStepMethod};
use crate::error::{Error, Result};

/// Tolerance on `|zeta| - 1` under which a point counts as stable.
pub const INSIDE_TOL: f64 = 1e-9;

/// Anything that can produce `(R1(mu), R0(mu))` at complex `mu`.
pub trait CharPoly {
    fn eval_pair(&self, mu: Complex64) -> (Complex64, Complex64);
}

impl CharPoly for StabilityPair {
    fn eval_pair(&self, mu: Complex64) -> (Complex64, Complex64) {
        self.eval_complex(mu)
    }
}

impl CharPoly for TwoStepMethod {
    fn eval_pair(&self, mu: Complex64) -> (Complex64, Complex64) {
        self.eval_complex(mu)
    }
}

impl<T: CharPoly + ?Sized> CharPoly for &T {
    fn eval_pair(&self, mu: Complex64) -> (Complex64, Complex64) {
        (**self).eval_pair(mu)
    }
}

/// Roots of `zeta^2 - R1(mu) zeta - R0(mu) = 0`, larger magnitude first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CharRoots {
    pub zeta1: Complex64,
    pub zeta2: Complex64,
    pub mu: Complex64,
}

impl CharRoots {
    pub fn max_abs(&self) -> f64 {
        self.zeta1.norm().max(self.zeta2.norm())
    }

    pub fn is_stable(&self) -> bool {
        self.max_abs() <= 1.0 + INSIDE_TOL
    }
}

/// Solves the characteristic quadratic for given `R1`, `R0`.
///
/// The larger root comes from the cancellation-free sign choice; the
/// smaller one from the product `zeta1 zeta2 = -R0`.
pub fn quadratic_roots(r1: Complex64, r0: Complex64) -> (Complex64, Complex64) {
    let sq = (r1 * r1 + 4.0 * r0).sqrt();
    let q = if (r1.conj() * sq).re >= 0.0 { (r1 + sq) / 2.0 } else { (r1 - sq) / 2.0 };
    if q == Complex64::new(0.0, 0.0) {
        return (q, q);
    }
    (q, -r0 / q)
}

pub fn char_roots<P: CharPoly + ?Sized>(poly: &P, mu: Complex64) -> CharRoots {
    let (r1, r0) = poly.eval_pair(mu);
    let (zeta1, zeta2) = quadratic_roots(r1, r0);
    CharRoots { zeta1, zeta2, mu }
}

/// Largest root magnitude at a real `mu`.
pub fn max_abs_root<P: CharPoly + ?Sized>(poly: &P, mu: f64) -> f64 {
    char_roots(poly, Complex64::new(mu, 0.0)).max_abs()
}

/// Result of a uniform scan of `[mu_min, 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RealScan {
    /// `(mu, max |zeta|)` from `mu = 0` down to `mu_min`.
    pub points: Vec<(f64, f64)>,
    /// `|mu|` at the end of the contiguous stable run starting at 0.
    pub stable_length: f64,
    /// Grid spacing.
    pub cell: f64,
}

impl RealScan {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "mu,max_abs_root")?;
        for (mu, r) in &self.points {
            writeln!(w, "{mu},{r}")?;
        }
        Ok(())
    }
}

/// Closed-unit-disk test for real `mu` via the Schur-Cohn conditions
/// `|R0| <= 1`, `|R1| <= 1 - R0`.
///
/// Equivalent to `max |zeta| <= 1`, but free of the square root that costs
/// about `sqrt(eps)` of accuracy wherever the two roots coincide (for
/// example where an undamped pair touches `zeta = 1`).
pub fn stable_on_real_axis<P: CharPoly + ?Sized>(poly: &P, mu: f64) -> bool {
    let (r1, r0) = poly.eval_pair(Complex64::new(mu, 0.0));
    let (r1, r0) = (r1.re, r0.re);
    r0.abs() <= 1.0 + INSIDE_TOL && r1.abs() <= 1.0 - r0 + INSIDE_TOL
}

pub fn real_axis_scan<P: CharPoly + ?Sized>(poly: &P, mu_min: f64, samples: usize) -> Result<RealScan> {
    if !(mu_min < 0.0 && mu_min.is_finite()) {
        return Err(Error::Parameter(format!("scan end must be negative, got {mu_min}")));
    }
    if samples < 2 {
        return Err(Error::Parameter(format!("need at least 2 samples, got {samples}")));
    }
    let last = (samples - 1) as f64;
    let mut points = Vec::with_capacity(samples);
    let mut prefix: Option<f64> = None;
    let mut broken = false;
    for k in 0..samples {
        let mu = mu_min * k as f64 / last;
        let r = max_abs_root(poly, mu);
        if !broken {
            if stable_on_real_axis(poly, mu) {
                prefix = Some(-mu);
            } else {
                broken = true;
            }
        }
        points.push((mu, r));
    }
    Ok(RealScan { points, stable_length: prefix.unwrap_or(0.0), cell: -mu_min / last })
}

/// `1 - max |zeta|` over `samples` points of `[-0.95 l, -0.05 l]`.
///
/// Positive means the roots are strictly damped inside the interval.
pub fn interior_damping<P: CharPoly + ?Sized>(poly: &P, l: f64, samples: usize) -> f64 {
    let n = samples.max(2);
    let worst = (0..n)
        .map(|k| {
            let frac = 0.05 + 0.9 * k as f64 / (n - 1) as f64;
            max_abs_root(poly, -frac * l)
        })
        .fold(0.0, f64::max);
    1.0 - worst
}

/// Rectangle in the `mu` plane, `resolution` points per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainGrid {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
    pub resolution: usize,
}

impl DomainGrid {
    /// Grid over `[re_min, 0.04 |re_min|] x [-im_max, im_max]`.
    pub fn new(re_min: f64, im_max: f64, resolution: usize) -> Self {
        DomainGrid { re_min, re_max: 0.04 * re_min.abs(), im_max, resolution }
    }

    fn validate(&self) -> Result<()> {
        if !(self.re_min < 0.0 && self.re_min.is_finite()) {
            return Err(Error::Parameter(format!("re_min must be negative, got {}", self.re_min)));
        }
        if !(self.re_max > self.re_min && self.re_max.is_finite()) {
            return Err(Error::Parameter(format!("re_max {} must exceed re_min", self.re_max)));
        }
        if !(self.im_max > 0.0 && self.im_max.is_finite()) {
            return Err(Error::Parameter(format!("im_max must be positive, got {}", self.im_max)));
        }
        if self.resolution < 16 {
            return Err(Error::Parameter(format!("resolution must be >= 16, got {}", self.resolution)));
        }
        Ok(())
    }

    pub fn re_values(&self) -> Vec<f64> {
        let last = (self.resolution - 1) as f64;
        (0..self.resolution)
            .map(|k| self.re_min + (self.re_max - self.re_min) * k as f64 / last)
            .collect()
    }

    /// Exactly symmetric about zero.
    pub fn im_values(&self) -> Vec<f64> {
        let last = (self.resolution - 1) as f64;
        (0..self.resolution)
            .map(|k| self.im_max * (2.0 * k as f64 - last) / last)
            .collect()
    }
}

/// Stability mask on a [`DomainGrid`], stored row by row in `im`.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainSample {
    pub grid: DomainGrid,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub mask: Vec<bool>,
}

impl DomainSample {
    pub fn inside(&self, i_im: usize, i_re: usize) -> bool {
        self.mask[i_im * self.re.len() + i_re]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "mu_re,mu_im,inside")?;
        for (i, y) in self.im.iter().enumerate() {
            for (j, x) in self.re.iter().enumerate() {
                writeln!(w, "{x},{y},{}", self.inside(i, j))?;
            }
        }
        Ok(())
    }
}

pub fn domain_sample<P: CharPoly + ?Sized>(
    poly: &P,
    re_min: f64,
    im_max: f64,
    resolution: usize,
) -> Result<DomainSample> {
    domain_sample_grid(poly, DomainGrid::new(re_min, im_max, resolution))
}

/// Evaluates the mask; the lower half plane is mirrored from the upper one
/// so conjugate points agree exactly.
pub fn domain_sample_grid<P: CharPoly + ?Sized>(poly: &P, grid: DomainGrid) -> Result<DomainSample> {
    grid.validate()?;
    let re = grid.re_values();
    let im = grid.im_values();
    let n = grid.resolution;
    let mut mask = vec![false; n * n];
    for i in (0..n).rev() {
        let mirror = n - 1 - i;
        if mirror > i {
            let (lo, hi) = mask.split_at_mut(mirror * n);
            lo[i * n..(i + 1) * n].copy_from_slice(&hi[..n]);
            continue;
        }
        let y = im[i].abs();
        for (j, x) in re.iter().enumerate() {
            mask[i * n + j] = char_roots(poly, Complex64::new(*x, y)).is_stable();
        }
    }
    Ok(DomainSample { grid, re, im, mask })
}
