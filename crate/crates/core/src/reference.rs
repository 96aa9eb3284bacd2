//! Implicit trapezoidal reference solver.
//!
//! Constant sub-steps, Newton on
//! `G(y) = y - y_n - h/2 (f(t_n, y_n) + f(t_n + h, y))` with a dense LU of
//! `I - h/2 J`. The factorisation is kept across steps until Newton slows
//! down; a step whose iteration still fails is split in two, up to
//! [`MAX_HALVINGS`] levels deep.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Error, Result};
use crate::problems::{IvpProblem, OdeSystem};

/// Newton residual target, relative to `max(1, |y|_inf)`.
pub const NEWTON_TOL: f64 = 1e-12;
pub const MAX_NEWTON_ITERS: usize = 25;
pub const MAX_HALVINGS: u32 = 10;

/// Iterations after which a stale Jacobian is refreshed.
const REFRESH_AFTER: usize = 5;

/// Newton statistics accumulated over a reference run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ImplicitSolveReport {
    pub converged: bool,
    pub newton_iters: usize,
    /// Largest accepted residual, scaled as in [`NEWTON_TOL`].
    pub final_residual: f64,
    pub jacobian_evals: usize,
    pub halvings: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub y: Vec<f64>,
    pub report: ImplicitSolveReport,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Forward-difference Jacobian, perturbation `sqrt(eps) max(|y_i|, 1)`.
pub fn fd_jacobian(sys: &dyn OdeSystem, t: f64, y: &[f64], f0: &[f64], jac: &mut DMatrix<f64>) {
    let n = y.len();
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let root_eps = f64::EPSILON.sqrt();
    for j in 0..n {
        let d = root_eps * y[j].abs().max(1.0);
        yp[j] = y[j] + d;
        let d = yp[j] - y[j];
        sys.rhs(t, &yp, &mut fp);
        for i in 0..n {
            jac[(i, j)] = (fp[i] - f0[i]) / d;
        }
        yp[j] = y[j];
    }
}

struct Trapezoid<'a> {
    sys: &'a dyn OdeSystem,
    n: usize,
    jac: DMatrix<f64>,
    lu: Option<(LU<f64, nalgebra::Dyn, nalgebra::Dyn>, f64)>,
    fresh: bool,
    report: ImplicitSolveReport,
}

enum StepOutcome {
    Done(Vec<f64>, Vec<f64>),
    Failed { residual: f64 },
}

impl<'a> Trapezoid<'a> {
    fn new(sys: &'a dyn OdeSystem) -> Self {
        let n = sys.dim();
        Trapezoid {
            sys,
            n,
            jac: DMatrix::zeros(n, n),
            lu: None,
            fresh: false,
            report: ImplicitSolveReport { converged: true, ..Default::default() },
        }
    }

    fn refresh(&mut self, t: f64, y: &[f64], h: f64) {
        if !self.sys.jacobian(t, y, &mut self.jac) {
            let mut f = vec![0.0; self.n];
            self.sys.rhs(t, y, &mut f);
            fd_jacobian(self.sys, t, y, &f, &mut self.jac);
        }
        self.report.jacobian_evals += 1;
        self.factor(h);
        self.fresh = true;
    }

    fn factor(&mut self, h: f64) {
        let m = DMatrix::identity(self.n, self.n) - &self.jac * (0.5 * h);
        self.lu = Some((m.lu(), h));
    }

    /// One trapezoidal step from `(t, y)` with known `f(t, y)`.
    fn try_step(&mut self, t: f64, y: &[f64], fy: &[f64], h: f64) -> StepOutcome {
        let n = self.n;
        let t1 = t + h;
        match &self.lu {
            None => self.refresh(t, y, h),
            Some((_, hh)) if *hh != h => self.factor(h),
            _ => {}
        }
        // explicit Euler predictor
        let mut z: Vec<f64> = (0..n).map(|i| y[i] + h * fy[i]).collect();
        if z.iter().any(|v| !v.is_finite()) {
            z.copy_from_slice(y);
        }
        let mut fz = vec![0.0; n];
        let mut g = DVector::zeros(n);
        let mut last = f64::INFINITY;
        let mut since_refresh = 0;
        for _ in 0..MAX_NEWTON_ITERS {
            self.sys.rhs(t1, &z, &mut fz);
            for i in 0..n {
                g[i] = z[i] - y[i] - 0.5 * h * (fy[i] + fz[i]);
            }
            let res = inf_norm(g.as_slice()) / inf_norm(&z).max(1.0);
            self.report.newton_iters += 1;
            if !res.is_finite() {
                return StepOutcome::Failed { residual: res };
            }
            if res <= NEWTON_TOL {
                self.report.final_residual = self.report.final_residual.max(res);
                self.fresh = false;
                return StepOutcome::Done(z, fz);
            }
            since_refresh += 1;
            if (res > 0.5 * last || since_refresh > REFRESH_AFTER) && !self.fresh {
                self.refresh(t1, &z, h);
                since_refresh = 0;
            }
            last = res;
            let (lu, _) = self.lu.as_ref().expect("factorised");
            match lu.solve(&g) {
                Some(dz) => {
                    for i in 0..n {
                        z[i] -= dz[i];
                    }
                }
                None => return StepOutcome::Failed { residual: res },
            }
        }
        StepOutcome::Failed { residual: last }
    }

    /// Advances by `h`, splitting the step when Newton fails.
    fn advance(&mut self, t: f64, y: &[f64], fy: &[f64], h: f64, depth: u32) -> Result<(Vec<f64>, Vec<f64>)> {
        match self.try_step(t, y, fy, h) {
            StepOutcome::Done(z, fz) => Ok((z, fz)),
            StepOutcome::Failed { residual } => {
                if depth >= MAX_HALVINGS {
                    self.report.converged = false;
                    self.report.final_residual = residual;
                    return Err(Error::Reference {
                        t,
                        newton_iters: self.report.newton_iters,
                        residual,
                    });
                }
                self.report.halvings += 1;
                self.lu = None;
                let half = 0.5 * h;
                let (ym, fm) = self.advance(t, y, fy, half, depth + 1)?;
                self.advance(t + half, &ym, &fm, half, depth + 1)
            }
        }
    }
}

/// Integrates `sys` from `(t_from, y_from)` to `t_to` in `steps` equal
/// trapezoidal steps.
pub fn trapezoid_integrate(
    sys: &dyn OdeSystem,
    t_from: f64,
    y_from: &[f64],
    t_to: f64,
    steps: usize,
) -> Result<ReferenceSolution> {
    if steps < 1 {
        return Err(Error::Parameter("reference solver needs at least one step".into()));
    }
    if t_to.is_nan() || t_from.is_nan() || t_to <= t_from {
        return Err(Error::Parameter(format!("empty interval [{t_from}, {t_to}]")));
    }
    if y_from.len() != sys.dim() {
        return Err(Error::Parameter(format!(
            "state has dimension {}, system expects {}",
            y_from.len(),
            sys.dim()
        )));
    }
    let mut tr = Trapezoid::new(sys);
    let h = (t_to - t_from) / steps as f64;
    let mut y = y_from.to_vec();
    let mut fy = vec![0.0; y.len()];
    sys.rhs(t_from, &y, &mut fy);
    for k in 0..steps {
        let t = t_from + k as f64 * h;
        let (z, fz) = tr.advance(t, &y, &fy, h, 0)?;
        y = z;
        fy = fz;
    }
    Ok(ReferenceSolution { y, report: tr.report })
}

/// Runs consecutive segments `(t_end, steps)` starting from `(t0, y0)`;
/// used to resolve initial layers before a long smooth stretch.
pub fn graded_integrate(sys: &dyn OdeSystem, t0: f64, y0: &[f64], segments: &[(f64, usize)]) -> Result<ReferenceSolution> {
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut total = ImplicitSolveReport { converged: true, ..Default::default() };
    for &(t_end, steps) in segments {
        let part = trapezoid_integrate(sys, t, &y, t_end, steps)?;
        total.newton_iters += part.report.newton_iters;
        total.jacobian_evals += part.report.jacobian_evals;
        total.halvings += part.report.halvings;
        total.final_residual = total.final_residual.max(part.report.final_residual);
        y = part.y;
        t = t_end;
    }
    Ok(ReferenceSolution { y, report: total })
}

/// Trapezoidal solution of `problem` from `t_from` to `t_to`.
///
/// `t_from` must be the problem's start time, where its state is known.
pub fn reference_integrate(problem: &IvpProblem, t_from: f64, t_to: f64, steps: usize) -> Result<Vec<f64>> {
    if t_from != problem.t0 {
        return Err(Error::Parameter(format!(
            "state of {} is known at t = {}, not at {t_from}",
            problem.name, problem.t0
        )));
    }
    Ok(trapezoid_integrate(problem.system(), t_from, &problem.y0, t_to, steps)?.y)
}

/// Order-2 Richardson estimate `|y_2N - y_N|_inf / 3` of the error of the
/// `2 steps` solution.
pub fn richardson_validate(problem: &IvpProblem, t_from: f64, t_to: f64, steps: usize) -> Result<f64> {
    if steps < 2 {
        return Err(Error::Parameter(format!("Richardson check needs steps >= 2, got {steps}")));
    }
    let coarse = reference_integrate(problem, t_from, t_to, steps)?;
    let fine = reference_integrate(problem, t_from, t_to, 2 * steps)?;
    Ok(max_diff(&coarse, &fine) / 3.0)
}

pub(crate) fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{FnSystem, IvpProblem};

    fn decay() -> IvpProblem {
        IvpProblem::new("decay", FnSystem::new(1, |_, y, dy| dy[0] = -y[0]), 0.0, vec![1.0], 1.0)
    }

    fn prothero_robinson(lambda: f64) -> FnSystem {
        FnSystem::new(1, move |t, y, dy| dy[0] = lambda * (y[0] - t.sin()) + t.cos())
    }

    #[test]
    fn exponential_decay() {
        let y = reference_integrate(&decay(), 0.0, 1.0, 10_000).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-8);
    }

    #[test]
    fn prothero_robinson_tracks_sine() {
        let sys = prothero_robinson(-1e4);
        let r = trapezoid_integrate(&sys, 0.0, &[0.0], 1.0, 1000).unwrap();
        assert!((r.y[0] - 1.0f64.sin()).abs() < 1e-6);
        assert!(r.report.converged && r.report.final_residual <= NEWTON_TOL);
    }

    #[test]
    fn prothero_robinson_order_two() {
        let sys = prothero_robinson(-10.0);
        let err = |n| (trapezoid_integrate(&sys, 0.0, &[0.0], 2.0, n).unwrap().y[0] - 2.0f64.sin()).abs();
        for n in [50usize, 100, 200] {
            let p = (err(n) / err(2 * n)).log2();
            assert!((1.9..=2.1).contains(&p), "n={n} p={p}");
        }
    }

    #[test]
    fn richardson_shrinks_by_four() {
        let p = decay();
        let a = richardson_validate(&p, 0.0, 1.0, 40).unwrap();
        let b = richardson_validate(&p, 0.0, 1.0, 80).unwrap();
        assert!((a / b - 4.0).abs() < 0.05, "{}", a / b);
        assert!(matches!(richardson_validate(&p, 0.0, 1.0, 1), Err(Error::Parameter(_))));
    }

    #[test]
    fn analytic_and_fd_jacobians_agree() {
        let sys = FnSystem::new(2, |_, y, dy| {
            dy[0] = y[0] * y[1];
            dy[1] = y[0].sin() - 3.0 * y[1];
        });
        let y = [0.7, -1.3];
        let mut f = [0.0; 2];
        sys.rhs(0.0, &y, &mut f);
        let mut j = DMatrix::zeros(2, 2);
        fd_jacobian(&sys, 0.0, &y, &f, &mut j);
        let want = [[-1.3, 0.7], [0.7f64.cos(), -3.0]];
        for i in 0..2 {
            for k in 0..2 {
                assert!((j[(i, k)] - want[i][k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn bad_arguments() {
        let p = decay();
        assert!(reference_integrate(&p, 0.0, 1.0, 0).is_err());
        assert!(reference_integrate(&p, 0.0, -1.0, 5).is_err());
        assert!(reference_integrate(&p, 0.5, 1.0, 5).is_err());
    }
}
