use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{IvpProblem, OdeSystem, ReferencePolicy};
use crate::error::{Error, Result};

/// `u_t = u_xx` on `(0, 1)`, zero Dirichlet data, `n` interior points.
struct Heat {
    n: usize,
    inv_dx2: f64,
}

impl OdeSystem for Heat {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&self, _t: f64, u: &[f64], du: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            du[i] = (left - 2.0 * u[i] + right) * self.inv_dx2;
        }
    }

    fn jacobian(&self, _t: f64, _u: &[f64], jac: &mut DMatrix<f64>) -> bool {
        jac.fill(0.0);
        for i in 0..self.n {
            jac[(i, i)] = -2.0 * self.inv_dx2;
            if i > 0 {
                jac[(i, i - 1)] = self.inv_dx2;
            }
            if i + 1 < self.n {
                jac[(i, i + 1)] = self.inv_dx2;
            }
        }
        true
    }

    fn rho_bound(&self, _t: f64, _u: &[f64]) -> Option<f64> {
        Some(heat1d_spectral_radius(self.n))
    }
}

/// Largest magnitude eigenvalue `4 sin^2(n pi / (2(n+1))) / dx^2` of the
/// discrete Laplacian.
pub fn heat1d_spectral_radius(n: usize) -> f64 {
    heat_eigenvalue(n, n).abs()
}

fn heat_eigenvalue(n: usize, k: usize) -> f64 {
    let m = (n + 1) as f64;
    let s = (k as f64 * PI / (2.0 * m)).sin();
    -4.0 * s * s * m * m
}

fn check_heat_grid(n: usize) -> Result<()> {
    if n < 4 {
        return Err(Error::Parameter(format!("heat1d needs at least 4 interior points, got {n}")));
    }
    Ok(())
}

/// Heat equation with `u(x, 0) = sin(pi x)` on `[0, 0.1]`.
pub fn heat1d(n: usize) -> Result<IvpProblem> {
    heat1d_from(n, 0.1)
}

/// Heat equation with `u(x, 0) = sin(pi x)` on `[0, t_out]`.
///
/// The initial grid function is the first eigenvector of the discrete
/// Laplacian, so the reference `exp(lambda_1 t) sin(pi x_i)` is the exact
/// solution of the ODE system.
pub fn heat1d_from(n: usize, t_out: f64) -> Result<IvpProblem> {
    check_heat_grid(n)?;
    let dx = 1.0 / (n + 1) as f64;
    let shape: Vec<f64> = (1..=n).map(|i| (PI * i as f64 * dx).sin()).collect();
    let lambda = heat_eigenvalue(n, 1);
    let exact = {
        let shape = shape.clone();
        move |t: f64| shape.iter().map(|v| (lambda * t).exp() * v).collect()
    };
    Ok(IvpProblem::new("heat1d", Heat { n, inv_dx2: 1.0 / (dx * dx) }, 0.0, shape, t_out)
        .with_reference(ReferencePolicy::Exact(Arc::new(exact))))
}

/// Heat equation with an arbitrary initial grid function; the reference is
/// the exact ODE solution through the discrete sine transform.
pub fn heat1d_with_initial(u0: Vec<f64>, t_out: f64) -> Result<IvpProblem> {
    let n = u0.len();
    check_heat_grid(n)?;
    let m = (n + 1) as f64;
    let basis = move |k: usize, i: usize| (PI * (k * i) as f64 / m).sin();
    let coeffs: Vec<f64> = (1..=n)
        .map(|k| 2.0 / m * (1..=n).map(|i| u0[i - 1] * basis(k, i)).sum::<f64>())
        .collect();
    let exact = move |t: f64| {
        (1..=n)
            .map(|i| {
                (1..=n)
                    .map(|k| coeffs[k - 1] * (heat_eigenvalue(n, k) * t).exp() * basis(k, i))
                    .sum()
            })
            .collect()
    };
    Ok(IvpProblem::new("heat1d", Heat { n, inv_dx2: m * m }, 0.0, u0, t_out)
        .with_reference(ReferencePolicy::Exact(Arc::new(exact))))
}

/// Initial profile for the Burgers problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BurgersProfile {
    /// `1.5 x (1 - x)^2`
    Polynomial,
    /// `sin(3 pi x)^3 (1 - x)^(3/2)`
    SinCubed,
}

impl BurgersProfile {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            BurgersProfile::Polynomial => 1.5 * x * (1.0 - x) * (1.0 - x),
            BurgersProfile::SinCubed => (3.0 * PI * x).sin().powi(3) * (1.0 - x).powf(1.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BurgersOptions {
    /// Interior grid points.
    pub n: usize,
    /// Viscosity.
    pub mu: f64,
    pub profile: BurgersProfile,
    /// Advection as `(u^2/2)_x` rather than `u u_x`.
    pub conservative: bool,
    pub t_out: f64,
    /// Trapezoidal steps for the endpoint reference.
    pub reference_steps: usize,
}

impl Default for BurgersOptions {
    fn default() -> Self {
        BurgersOptions {
            n: 100,
            mu: 0.005,
            profile: BurgersProfile::Polynomial,
            conservative: true,
            t_out: 2.5,
            reference_steps: 4000,
        }
    }
}

struct Burgers {
    n: usize,
    mu: f64,
    dx: f64,
    conservative: bool,
}

impl OdeSystem for Burgers {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&self, _t: f64, u: &[f64], du: &mut [f64]) {
        let n = self.n;
        let diff = self.mu / (self.dx * self.dx);
        for i in 0..n {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            let adv = if self.conservative {
                (right * right - left * left) / (4.0 * self.dx)
            } else {
                u[i] * (right - left) / (2.0 * self.dx)
            };
            du[i] = diff * (left - 2.0 * u[i] + right) - adv;
        }
    }

    fn jacobian(&self, _t: f64, u: &[f64], jac: &mut DMatrix<f64>) -> bool {
        let n = self.n;
        let diff = self.mu / (self.dx * self.dx);
        let k = 1.0 / (2.0 * self.dx);
        jac.fill(0.0);
        for i in 0..n {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            let (dl, dc, dr) = if self.conservative {
                (diff + k * left, -2.0 * diff, diff - k * right)
            } else {
                (diff + k * u[i], -2.0 * diff - k * (right - left), diff - k * u[i])
            };
            jac[(i, i)] = dc;
            if i > 0 {
                jac[(i, i - 1)] = dl;
            }
            if i + 1 < n {
                jac[(i, i + 1)] = dr;
            }
        }
        true
    }

    fn rho_bound(&self, _t: f64, u: &[f64]) -> Option<f64> {
        let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Some(4.0 * self.mu / (self.dx * self.dx) + umax / self.dx)
    }
}

/// Viscous Burgers equation with the default options and `n` interior points.
pub fn burgers(n: usize) -> Result<IvpProblem> {
    burgers_with(&BurgersOptions { n, ..Default::default() })
}

pub fn burgers_with(opts: &BurgersOptions) -> Result<IvpProblem> {
    if opts.n < 10 {
        return Err(Error::Parameter(format!("burgers needs at least 10 interior points, got {}", opts.n)));
    }
    if !(opts.mu > 0.0 && opts.t_out > 0.0) {
        return Err(Error::Parameter("burgers viscosity and end time must be positive".into()));
    }
    let dx = 1.0 / (opts.n + 1) as f64;
    let u0 = (1..=opts.n).map(|i| opts.profile.eval(i as f64 * dx)).collect();
    let sys = Burgers { n: opts.n, mu: opts.mu, dx, conservative: opts.conservative };
    Ok(IvpProblem::new("burgers", sys, 0.0, u0, opts.t_out)
        .with_reference(ReferencePolicy::Solver { steps: opts.reference_steps }))
}
