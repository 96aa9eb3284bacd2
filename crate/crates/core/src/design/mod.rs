//! Synthesis of damped second-order two-step methods.
//!
//! The damped stability pair is
//!
//! ```text
//! R1(mu) = alpha * (1 + T_s(omega + beta*mu/s^2))
//! R0(mu) = -eta^2 * T_s(omega + beta*mu/s^2)
//! ```
//!
//! with `(alpha, omega, beta)` fixed by preconsistency and the two
//! second-order conditions. [`solve_damping`] finds the triple,
//! [`StabilityPair`] evaluates the pair, and [`build_method`] turns it into
//! the three-term stage recurrence actually run by the integrator.

mod method;
mod pair;

pub use method::{build_method, rebuild_pair_from_method, TwoStepMethod};
pub use pair::{build_damped_pair, build_undamped_pair, error_constant, PairSource, PolyJet, StabilityPair};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::chebyshev::{acosh_near_one, cheb_t_shifted};
use crate::error::{Error, Result};

/// Damping used for the published tables and figures.
pub const DEFAULT_EPS: f64 = 0.05;

/// Residual target for the damping system (infinity norm).
pub const DESIGN_TOLERANCE: f64 = 1e-12;

/// Newton iteration cap for [`solve_damping`].
pub const MAX_NEWTON_ITERATIONS: usize = 100;

/// Stage count and damping of a method to be designed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignInput {
    pub s: usize,
    pub eps: f64,
    pub eta: f64,
}

impl DesignInput {
    pub fn new(s: usize, eps: f64) -> Result<Self> {
        if s < 2 {
            return Err(Error::Parameter(format!("stage count must be >= 2, got {s}")));
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Parameter(format!("damping eps must lie in (0, 1), got {eps}")));
        }
        Ok(Self { s, eps, eta: 1.0 - eps })
    }

    fn s2(&self) -> f64 {
        (self.s * self.s) as f64
    }
}

/// Solution `(alpha, omega, beta)` of the damping system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingSolution {
    pub alpha: f64,
    pub omega: f64,
    pub beta: f64,
    /// `omega - 1`, carried separately because `omega` sits within a few
    /// ulps of 1 for large `s`.
    pub omega_minus_one: f64,
    pub input: DesignInput,
    /// Newton iterations used.
    pub iterations: usize,
    /// Final residual infinity norm (third equation scaled by `1/s^2`).
    pub residual: f64,
}

/// Residuals of the damping system at `(alpha, 1 + omega_minus_one, beta)`.
///
/// The first two rows are preconsistency and the first order condition.
/// The third is the second order condition with `T''` eliminated through
/// the Chebyshev differential equation, divided by `s^2`.
pub fn damping_residual(input: &DesignInput, alpha: f64, omega_minus_one: f64, beta: f64) -> Result<[f64; 3]> {
    let (f, _) = residual_and_jacobian(input, alpha, omega_minus_one, beta)?;
    Ok([f[0], f[1], f[2]])
}

fn residual_and_jacobian(
    input: &DesignInput,
    alpha: f64,
    delta: f64,
    beta: f64,
) -> Result<(Vector3<f64>, Matrix3<f64>)> {
    if delta.abs() < 1e-13 {
        return Err(Error::Design {
            reason: format!("omega - 1 = {delta:e} too close to 0"),
            iterations: 0,
            residual: f64::NAN,
        });
    }
    let s2 = input.s2();
    let eta2 = input.eta * input.eta;
    let ch = cheb_t_shifted(input.s, delta)?;
    let omega = 1.0 + delta;
    let (t, t1, t2) = (ch.value, ch.first_derivative, ch.second_derivative);
    let q = alpha - eta2;
    // 1 - omega^2 with the cancellation-free factorisation
    let u = -delta * (2.0 + delta);
    let (b, w) = (beta, omega);

    let f1 = alpha + q * t - 1.0;
    let f2 = alpha + alpha * t + b * q / s2 * t1 - 2.0;
    let g3 = s2 * (alpha - 4.0)
        + (s2 * alpha - b * b * q / u) * t
        + b * (2.0 * alpha + w * b * q / (s2 * u)) * t1;

    let j11 = 1.0 + t;
    let j12 = q * t1;
    let j13 = 0.0;

    let j21 = 1.0 + t + b * t1 / s2;
    let j22 = alpha * t1 + b * q / s2 * t2;
    let j23 = q * t1 / s2;

    let g_alpha = s2 + (s2 - b * b / u) * t + (2.0 * b + w * b * b / (s2 * u)) * t1;
    let g_omega = (s2 * alpha - b * b * q / u) * t1 - 2.0 * w * b * b * q / (u * u) * t
        + b * b * q * (1.0 + w * w) / (s2 * u * u) * t1
        + b * (2.0 * alpha + w * b * q / (s2 * u)) * t2;
    let g_beta = -2.0 * b * q / u * t + (2.0 * alpha + 2.0 * w * b * q / (s2 * u)) * t1;

    let f = Vector3::new(f1, f2, g3 / s2);
    let jac = Matrix3::new(
        j11,
        j12,
        j13,
        j21,
        j22,
        j23,
        g_alpha / s2,
        g_omega / s2,
        g_beta / s2,
    );
    Ok((f, jac))
}

/// Solves the damping system by Newton's method with an analytic Jacobian,
/// starting from `(eta, 1 + eps/s^2, 1 + eps)`.
pub fn solve_damping(input: &DesignInput) -> Result<DampingSolution> {
    let input = DesignInput::new(input.s, input.eps)?;
    // unknowns (alpha, omega - 1, beta)
    let mut x = Vector3::new(input.eta, input.eps / input.s2(), 1.0 + input.eps);
    let mut residual = f64::INFINITY;
    for iter in 0..=MAX_NEWTON_ITERATIONS {
        let (f, jac) = residual_and_jacobian(&input, x[0], x[1], x[2]).map_err(|e| match e {
            Error::Design { reason, .. } => Error::Design { reason, iterations: iter, residual },
            other => other,
        })?;
        residual = f.amax();
        if !residual.is_finite() {
            break;
        }
        if residual < DESIGN_TOLERANCE {
            let sol = DampingSolution {
                alpha: x[0],
                omega: 1.0 + x[1],
                beta: x[2],
                omega_minus_one: x[1],
                input,
                iterations: iter,
                residual,
            };
            check_solution(&sol)?;
            return Ok(sol);
        }
        if iter == MAX_NEWTON_ITERATIONS {
            break;
        }
        let step = jac.lu().solve(&(-f)).ok_or_else(|| Error::Design {
            reason: "singular Jacobian".into(),
            iterations: iter,
            residual,
        })?;
        x += step;
    }
    Err(Error::Design {
        reason: format!("Newton did not converge (s = {}, eps = {})", input.s, input.eps),
        iterations: MAX_NEWTON_ITERATIONS,
        residual,
    })
}

fn check_solution(sol: &DampingSolution) -> Result<()> {
    let ok = sol.omega_minus_one > 0.0 && sol.beta > 1.0 && sol.alpha > 0.0 && sol.alpha < 1.0;
    let q = sol.alpha - sol.input.eta * sol.input.eta;
    if !ok || q == 0.0 {
        return Err(Error::Design {
            reason: format!(
                "solution outside the admissible region: alpha = {}, omega = {}, beta = {}",
                sol.alpha, sol.omega, sol.beta
            ),
            iterations: sol.iterations,
            residual: sol.residual,
        });
    }
    Ok(())
}

/// Length `l_s` of the real stability interval `[-l_s, 0]` of the damped pair.
pub fn stability_length(sol: &DampingSolution) -> Result<f64> {
    let eta2 = sol.input.eta * sol.input.eta;
    let z = (1.0 + sol.alpha) / (sol.alpha + eta2);
    let theta = acosh_near_one(z).map_err(|_| Error::Design {
        reason: format!("arccosh argument (1 + alpha)/(alpha + eta^2) = {z} < 1"),
        iterations: sol.iterations,
        residual: sol.residual,
    })?;
    let s = sol.input.s as f64;
    Ok(s * s * (sol.omega + (theta / s).cosh()) / sol.beta)
}

/// Left end of the real stability interval.
///
/// For odd `s` this is [`stability_length`]. For even `s`, `T_s` is even, so
/// at `mu = -2 omega s^2/beta` the pair takes its `mu = 0` values and the
/// principal root is back on the unit circle; the closed form lies slightly
/// beyond that point, and the smaller of the two is returned.
pub fn exact_stability_length(sol: &DampingSolution) -> Result<f64> {
    let l = stability_length(sol)?;
    if sol.input.s % 2 == 1 {
        return Ok(l);
    }
    let s = sol.input.s as f64;
    Ok(l.min(2.0 * sol.omega * s * s / sol.beta))
}

/// Designs the method with `s` stages and damping `eps` in one call.
pub fn design_method(s: usize, eps: f64) -> Result<TwoStepMethod> {
    let sol = solve_damping(&DesignInput::new(s, eps)?)?;
    build_method(&sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::cheb_t_cosh;

    fn solve(s: usize) -> DampingSolution {
        solve_damping(&DesignInput::new(s, DEFAULT_EPS).unwrap()).unwrap()
    }

    #[test]
    fn input_validation() {
        assert!(matches!(DesignInput::new(1, 0.05), Err(Error::Parameter(_))));
        assert!(matches!(DesignInput::new(5, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(DesignInput::new(5, 1.0), Err(Error::Parameter(_))));
        assert!(matches!(DesignInput::new(5, f64::NAN), Err(Error::Parameter(_))));
        let d = DesignInput::new(5, 0.05).unwrap();
        assert_eq!(d.eta, 1.0 - 0.05);
    }

    #[test]
    fn s5_reference_triple() {
        let sol = solve(5);
        assert!((sol.alpha - 0.950022296412323).abs() < 1e-10);
        assert!((sol.omega - 1.0020498847775692).abs() < 1e-10);
        assert!((sol.beta - 1.053083013172171).abs() < 1e-10);
        assert!(sol.residual < DESIGN_TOLERANCE);
    }

    #[test]
    fn s2_interval_length() {
        let l = stability_length(&solve(2)).unwrap();
        assert!((l - 7.6531).abs() < 5e-4, "{l}");
    }

    /// Independent re-evaluation through the cosh form of `T_s` with its
    /// analytic derivatives in `theta = arccosh(x)`; the second order
    /// condition is taken directly, without eliminating `T''`.
    #[test]
    fn s10_residual_via_cosh_form() {
        let sol = solve(10);
        let (s, eta2) = (10.0f64, 0.95f64 * 0.95);
        let (a, w, b) = (sol.alpha, sol.omega, sol.beta);
        let s2 = s * s;
        let th = w.acosh();
        let t0 = cheb_t_cosh(10, w).unwrap();
        let t1 = s * (s * th).sinh() / th.sinh();
        let t2 = s * (s * (s * th).cosh() * th.sinh() - (s * th).sinh() * th.cosh()) / th.sinh().powi(3);
        let q = a - eta2;
        let r10 = a * (1.0 + t0);
        let e1 = r10 - eta2 * t0 - 1.0;
        let e2 = r10 + b / s2 * q * t1 - 2.0;
        let e3 = r10 / 2.0 + b / s2 * a * t1 + (b / s2).powi(2) * q * t2 / 2.0 - 2.0;
        assert!(e1.abs() < 1e-12, "{e1}");
        assert!(e2.abs() < 1e-12, "{e2}");
        assert!(e3.abs() < 1e-12, "{e3}");
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let input = DesignInput::new(7, 0.05).unwrap();
        let p = [0.93, 0.0012, 1.04];
        let (_, jac) = residual_and_jacobian(&input, p[0], p[1], p[2]).unwrap();
        for col in 0..3 {
            let h = 1e-7 * p[col];
            let mut up = p;
            let mut dn = p;
            up[col] += h;
            dn[col] -= h;
            let fu = damping_residual(&input, up[0], up[1], up[2]).unwrap();
            let fd = damping_residual(&input, dn[0], dn[1], dn[2]).unwrap();
            for row in 0..3 {
                let fdv = (fu[row] - fd[row]) / (2.0 * h);
                let an = jac[(row, col)];
                assert!((fdv - an).abs() < 1e-5 * an.abs().max(1.0), "({row},{col}) {fdv} vs {an}");
            }
        }
    }

    #[test]
    fn omega_guard() {
        let input = DesignInput::new(5, 0.05).unwrap();
        assert!(matches!(damping_residual(&input, 0.95, 0.0, 1.05), Err(Error::Design { .. })));
    }

    #[test]
    fn newton_converges_quickly_and_lengths_grow() {
        let mut prev = 0.0;
        for s in 2..=1000 {
            let sol = solve(s);
            assert!(sol.iterations <= 20, "s={s}: {} iterations", sol.iterations);
            assert!(sol.omega_minus_one > 0.0 && sol.beta > 1.0 && sol.alpha > 0.0 && sol.alpha < 1.0);
            let l = stability_length(&sol).unwrap();
            assert!(l > prev, "s={s}");
            let ratio = l / (s * s) as f64;
            assert!((1.9011..=1.9133).contains(&ratio), "s={s}: {ratio}");
            prev = l;
        }
    }

    #[test]
    fn table_lengths() {
        for &(s, l) in &[(5usize, 47.5779), (20, 760.5155)] {
            let got = stability_length(&solve(s)).unwrap();
            assert!((got - l).abs() < 1e-2, "s={s}: {got}");
        }
        let l1000 = stability_length(&solve(1000)).unwrap() / 1e6;
        assert!((l1000 - 1.901167).abs() < 1e-6, "{l1000}");
    }

    #[test]
    fn other_damping_values() {
        for &eps in &[0.01, 0.1, 0.2, 0.5] {
            for &s in &[2usize, 5, 20, 100] {
                let sol = solve_damping(&DesignInput::new(s, eps).unwrap()).unwrap();
                assert!(stability_length(&sol).unwrap() > 0.0);
            }
        }
    }
}
