//! Constant-step driver for the two-step stage recurrence.

use crate::design::{exact_stability_length, solve_damping, DesignInput, TwoStepMethod};
use crate::error::{Error, Result};
use crate::problems::{IvpProblem, OdeSystem};
use crate::reference::trapezoid_integrate;

/// Any component beyond this magnitude counts as a blow-up.
pub const BLOWUP_NORM: f64 = 1e15;

/// Largest stage count [`select_stages`] will return.
pub const MAX_STAGES: usize = 2048;

/// Asymptotic `l_s / s^2` at `eps = 0.05`, used to seed [`select_stages`].
const LENGTH_RATIO: f64 = 1.901167;

/// Safety factor applied to power-iteration estimates.
pub const RHO_SAFETY: f64 = 1.05;

/// `(t_n, y_{n-1}, y_n, h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepState {
    pub t_n: f64,
    pub y_prev: Vec<f64>,
    pub y_curr: Vec<f64>,
    pub h: f64,
}

/// Stage storage for one system size: two rotating stage vectors plus the
/// slope buffer.
#[derive(Debug, Clone)]
pub struct Stepper {
    older: Vec<f64>,
    newer: Vec<f64>,
    slope: Vec<f64>,
}

fn blown(v: &[f64]) -> bool {
    v.iter().any(|x| x.is_nan() || x.abs() > BLOWUP_NORM)
}

impl Stepper {
    pub fn new(dim: usize) -> Self {
        Stepper { older: vec![0.0; dim], newer: vec![0.0; dim], slope: vec![0.0; dim] }
    }

    /// Writes `y_{n+1}` into `out`; evaluates `f` exactly `s` times.
    #[allow(clippy::too_many_arguments)]
    pub fn step_into(
        &mut self,
        method: &TwoStepMethod,
        sys: &dyn OdeSystem,
        t_n: f64,
        h: f64,
        y_prev: &[f64],
        y_curr: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        let n = y_curr.len();
        let at = method.a_tilde;
        // newer = v_0
        for i in 0..n {
            self.newer[i] = at * y_curr[i] + (1.0 - at) * y_prev[i];
        }
        sys.rhs(t_n + method.c[0] * h, &self.newer, &mut self.slope);
        let hm = h * method.m_tilde_at(1);
        // older = v_0, newer = v_1
        for i in 0..n {
            self.older[i] = self.newer[i];
            self.newer[i] += hm * self.slope[i];
        }
        if blown(&self.newer) {
            return Err(Error::BlowUp { t: t_n, stage: 1 });
        }
        for j in 2..=method.s {
            sys.rhs(t_n + method.c[j - 1] * h, &self.newer, &mut self.slope);
            let (mj, hm) = (method.m_at(j), h * method.m_tilde_at(j));
            for i in 0..n {
                self.older[i] = mj * self.newer[i] + (1.0 - mj) * self.older[i] + hm * self.slope[i];
            }
            std::mem::swap(&mut self.older, &mut self.newer);
            if blown(&self.newer) {
                return Err(Error::BlowUp { t: t_n, stage: j });
            }
        }
        for i in 0..n {
            out[i] = method.a * y_curr[i] + method.b * self.newer[i];
        }
        if blown(out) {
            return Err(Error::BlowUp { t: t_n + h, stage: method.s });
        }
        Ok(())
    }
}

/// One step of the method from `state`; returns `y_{n+1}`.
pub fn step(method: &TwoStepMethod, sys: &dyn OdeSystem, state: &StepState) -> Result<Vec<f64>> {
    let n = state.y_curr.len();
    if state.y_prev.len() != n || sys.dim() != n {
        return Err(Error::Parameter("state dimensions do not match the system".into()));
    }
    let mut out = vec![0.0; n];
    Stepper::new(n).step_into(method, sys, state.t_n, state.h, &state.y_prev, &state.y_curr, &mut out)?;
    Ok(out)
}

/// How `y_1` is obtained before the two-step recurrence can start.
#[derive(Debug, Clone, PartialEq)]
pub enum StarterPolicy {
    /// Trapezoidal reference over the first step in this many sub-steps.
    Reference { substeps: usize },
    /// Caller-provided `y_1`.
    Given(Vec<f64>),
}

impl Default for StarterPolicy {
    fn default() -> Self {
        StarterPolicy::Reference { substeps: DEFAULT_STARTER_SUBSTEPS }
    }
}

pub const DEFAULT_STARTER_SUBSTEPS: usize = 64;

/// `y(t0 + h)` from the reference solver in `substeps` implicit steps.
pub fn starter_y1(problem: &IvpProblem, h: f64, substeps: usize) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("step size must be positive, got {h}")));
    }
    if substeps < 1 {
        return Err(Error::Parameter("starter needs at least one sub-step".into()));
    }
    Ok(trapezoid_integrate(problem.system(), problem.t0, &problem.y0, problem.t0 + h, substeps)?.y)
}

/// Outcome of [`integrate`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub y_end: Vec<f64>,
    /// Two-step steps, excluding the starter.
    pub steps_taken: usize,
    /// `f` evaluations by the two-step scheme, `steps_taken * s`.
    pub stage_evals: usize,
    pub endpoint_error: Option<f64>,
    pub method_s: usize,
    pub h: f64,
}

/// Number of steps `(t_out - t0)/h`, which must be a whole number.
pub fn step_count(t0: f64, t_out: f64, h: f64) -> Result<usize> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Parameter(format!("step size must be positive, got {h}")));
    }
    let ratio = (t_out - t0) / h;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-9 * n.max(1.0) {
        return Err(Error::Parameter(format!(
            "window [{t0}, {t_out}] is not a whole number of steps of size {h}"
        )));
    }
    Ok(n as usize)
}

/// Integrates `problem` over its window with constant step `h`.
pub fn integrate(method: &TwoStepMethod, problem: &IvpProblem, h: f64, y1_policy: &StarterPolicy) -> Result<RunResult> {
    let total = step_count(problem.t0, problem.t_out, h)?;
    let dim = problem.dim();
    let y1 = match y1_policy {
        StarterPolicy::Reference { substeps } => starter_y1(problem, h, *substeps)?,
        StarterPolicy::Given(y) => {
            if y.len() != dim {
                return Err(Error::Parameter("starting value has the wrong dimension".into()));
            }
            y.clone()
        }
    };
    let sys = problem.system();
    let mut prev = problem.y0.clone();
    let mut curr = y1;
    let mut next = vec![0.0; dim];
    let mut stepper = Stepper::new(dim);
    for n in 1..total {
        let t_n = problem.t0 + n as f64 * h;
        stepper.step_into(method, sys, t_n, h, &prev, &curr, &mut next)?;
        std::mem::swap(&mut prev, &mut curr);
        std::mem::swap(&mut curr, &mut next);
    }
    let endpoint_error = problem
        .reference_endpoint()?
        .map(|r| r.iter().zip(&curr).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())));
    Ok(RunResult {
        y_end: curr,
        steps_taken: total - 1,
        stage_evals: (total - 1) * method.s,
        endpoint_error,
        method_s: method.s,
        h,
    })
}

/// Smallest `s >= 2` whose stability interval covers `h rho`.
pub fn select_stages(rho: f64, h: f64, eps: f64) -> Result<usize> {
    if !(rho >= 0.0 && h > 0.0) {
        return Err(Error::Parameter(format!("need rho >= 0 and h > 0, got rho = {rho}, h = {h}")));
    }
    let target = h * rho;
    let length = |s: usize| -> Result<f64> { exact_stability_length(&solve_damping(&DesignInput::new(s, eps)?)?) };
    let mut s = ((target / LENGTH_RATIO).sqrt().ceil() as usize).clamp(2, MAX_STAGES);
    while length(s)? < target {
        s += 1;
        if s > MAX_STAGES {
            return Err(Error::Capacity(format!(
                "h*rho = {target} needs more than {MAX_STAGES} stages"
            )));
        }
    }
    while s > 2 && length(s - 1)? >= target {
        s -= 1;
    }
    Ok(s)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Spectral radius of `df/dy` at `(t, y)`.
///
/// Uses the system's analytic bound when it has one; otherwise 50 sweeps of
/// power iteration on difference quotients, times [`RHO_SAFETY`].
pub fn estimate_spectral_radius(sys: &dyn OdeSystem, y: &[f64], t: f64) -> f64 {
    if let Some(rho) = sys.rho_bound(t, y) {
        return rho;
    }
    let n = y.len();
    let mut f0 = vec![0.0; n];
    sys.rhs(t, y, &mut f0);
    // deterministic, non-degenerate start direction (golden-ratio Weyl sequence)
    let mut v: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * 0.618_033_988_749_895).fract() - 0.5).collect();
    if norm2(&v) == 0.0 {
        v[0] = 1.0;
    }
    let ynorm = norm2(y);
    let mut fp = vec![0.0; n];
    let mut yp = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..50 {
        let vnorm = norm2(&v);
        let scale = f64::EPSILON.sqrt() * ynorm.max(1.0) / vnorm;
        for i in 0..n {
            yp[i] = y[i] + scale * v[i];
        }
        sys.rhs(t, &yp, &mut fp);
        for i in 0..n {
            v[i] = (fp[i] - f0[i]) / scale;
        }
        let next = norm2(&v) / vnorm;
        if next == 0.0 {
            return 0.0;
        }
        let settled = (next - est).abs() <= 1e-4 * next;
        est = next;
        if settled {
            break;
        }
    }
    RHO_SAFETY * est
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{design_method, rebuild_pair_from_method, stability_length};
    use crate::problems::{heat1d, heat1d_spectral_radius, FnSystem};
    use rand::{Rng, SeedableRng};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn linear(lambda: f64) -> FnSystem {
        FnSystem::new(1, move |_, y, dy| dy[0] = lambda * y[0])
    }

    #[test]
    fn scalar_step_matches_pair() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for s in [2usize, 5, 17] {
            let m = design_method(s, 0.05).unwrap();
            for _ in 0..20 {
                let h = rng.gen_range(0.01..1.0);
                let lambda = -rng.gen::<f64>() * m.l_s / h;
                let state = StepState { t_n: 0.3, y_prev: vec![0.8], y_curr: vec![1.1], h };
                let y = step(&m, &linear(lambda), &state).unwrap()[0];
                let (r1, r0) = rebuild_pair_from_method(&m, h * lambda);
                let want = r1 * 1.1 + r0 * 0.8;
                assert!((y - want).abs() <= 1e-13 * want.abs().max(1.0), "{y} vs {want}");
            }
        }
    }

    #[test]
    fn constants_are_preserved() {
        let m = design_method(6, 0.05).unwrap();
        let zero = FnSystem::new(2, |_, _, dy| dy.fill(0.0));
        let st = StepState { t_n: 0.0, y_prev: vec![1.5, -2.0], y_curr: vec![1.5, -2.0], h: 0.4 };
        let y = step(&m, &zero, &st).unwrap();
        assert!((y[0] - 1.5).abs() < 1e-13 && (y[1] + 2.0).abs() < 1e-13);
    }

    #[test]
    fn companion_matrix_two_steps() {
        let m = design_method(5, 0.05).unwrap();
        let sys = linear(-1.0);
        let (y0, y1) = (1.0, (-1.0f64).exp());
        let y2 = step(&m, &sys, &StepState { t_n: 1.0, y_prev: vec![y0], y_curr: vec![y1], h: 1.0 }).unwrap()[0];
        let y3 = step(&m, &sys, &StepState { t_n: 2.0, y_prev: vec![y1], y_curr: vec![y2], h: 1.0 }).unwrap()[0];
        let (r1, r0) = rebuild_pair_from_method(&m, -1.0);
        // [y3, y2] = C^2 [y1, y0], C = [[r1, r0], [1, 0]]
        let c2 = [[r1 * r1 + r0, r1 * r0], [r1, r0]];
        let want = c2[0][0] * y1 + c2[0][1] * y0;
        assert!((y3 - want).abs() < 1e-14);
        assert!((y2 - (c2[1][0] * y1 + c2[1][1] * y0)).abs() < 1e-14);
    }

    struct Counting {
        inner: FnSystem,
        calls: Arc<AtomicUsize>,
    }

    impl OdeSystem for Counting {
        fn dim(&self) -> usize {
            self.inner.dim()
        }
        fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
            self.calls.fetch_add(1, Ordering::Relaxed);
            self.inner.rhs(t, y, dy)
        }
    }

    #[test]
    fn s_evaluations_per_step() {
        let calls = Arc::new(AtomicUsize::new(0));
        let sys = Counting { inner: linear(-3.0), calls: calls.clone() };
        let p = IvpProblem::new("count", sys, 0.0, vec![1.0], 1.0);
        let m = design_method(7, 0.05).unwrap();
        let r = integrate(&m, &p, 0.1, &StarterPolicy::Given(vec![(-0.3f64).exp()])).unwrap();
        assert_eq!(r.steps_taken, 9);
        assert_eq!(calls.load(Ordering::Relaxed), 9 * 7);
        assert_eq!(r.stage_evals, 63);
    }

    #[test]
    fn blow_up_beyond_interval() {
        let m = design_method(5, 0.05).unwrap();
        let p = IvpProblem::new("lin", linear(-(m.l_s + 2.0)), 0.0, vec![1.0], 200.0);
        let err = integrate(&m, &p, 1.0, &StarterPolicy::Given(vec![1.0])).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }), "{err}");
    }

    #[test]
    fn step_count_rules() {
        assert_eq!(step_count(0.1, 0.6, 0.05).unwrap(), 10);
        assert_eq!(step_count(0.0, 2.5, 0.078125).unwrap(), 32);
        assert!(step_count(0.0, 1.0, 0.3).is_err());
        assert!(step_count(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn starter_matches_exponential() {
        let p = IvpProblem::new("decay", linear(-1.0), 0.0, vec![1.0], 1.0);
        let y1 = starter_y1(&p, 0.1, 1024).unwrap();
        assert!((y1[0] - (-0.1f64).exp()).abs() < 1e-6);
        assert!(starter_y1(&p, 0.0, 4).is_err());
    }

    #[test]
    fn stage_selection() {
        assert_eq!(select_stages(47.0, 1.0, 0.05).unwrap(), 5);
        let l4 = stability_length(&solve_damping(&DesignInput::new(4, 0.05).unwrap()).unwrap()).unwrap();
        assert!(l4 < 47.0);
        assert_eq!(select_stages(7.6, 1.0, 0.05).unwrap(), 2);
        assert_eq!(select_stages(0.0, 1.0, 0.05).unwrap(), 2);
        assert_eq!(select_stages(1e-9, 1e-3, 0.05).unwrap(), 2);
        assert!(matches!(select_stages(1e12, 1.0, 0.05), Err(Error::Capacity(_))));
    }

    #[test]
    fn spectral_radius_estimates() {
        let r = estimate_spectral_radius(&linear(-100.0), &[0.3], 0.0);
        assert!((r - 105.0).abs() < 1e-3, "{r}");
        let constant = FnSystem::new(3, |_, _, dy| dy.fill(2.0));
        assert_eq!(estimate_spectral_radius(&constant, &[1.0, 2.0, 3.0], 0.0), 0.0);
        let p = heat1d(50).unwrap();
        assert_eq!(estimate_spectral_radius(p.system(), &p.y0, 0.0), heat1d_spectral_radius(50));
    }
}
