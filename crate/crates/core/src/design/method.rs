use std::io::{Read, Write};
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{build_damped_pair, error_constant, stability_length, DampingSolution};
use crate::chebyshev::cheb_t_table_shifted;
use crate::error::{Error, Result};

/// Coefficients of a recurrence-form two-step method:
///
/// ```text
/// v_0 = a~ y_n + (1 - a~) y_{n-1}
/// v_1 = v_0 + h m~_1 f(t_n + c_0 h, v_0)
/// v_j = m_j v_{j-1} + (1 - m_j) v_{j-2} + h m~_j f(t_n + c_{j-1} h, v_{j-1}),  j = 2..s
/// y_{n+1} = a y_n + b v_s
/// ```
///
/// `m` holds `m_2..m_s`, `m_tilde` holds `m~_1..m~_s` and `c` holds `c_0..c_{s-1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStepMethod {
    pub s: usize,
    pub eps: f64,
    pub a: f64,
    pub a_tilde: f64,
    pub b: f64,
    pub m: Vec<f64>,
    pub m_tilde: Vec<f64>,
    pub c: Vec<f64>,
    pub l_s: f64,
    pub err_const: f64,
    #[serde(default = "two")]
    pub order: u32,
    #[serde(default = "two")]
    pub steps: u32,
}

fn two() -> u32 {
    2
}

/// Builds the recurrence-form method for a damping solution.
pub fn build_method(sol: &DampingSolution) -> Result<TwoStepMethod> {
    let s = sol.input.s;
    if s < 2 {
        return Err(Error::Parameter(format!("stage count must be >= 2, got {s}")));
    }
    let (alpha, omega, beta) = (sol.alpha, sol.omega, sol.beta);
    let eta2 = sol.input.eta * sol.input.eta;
    let s2 = (s * s) as f64;
    let t = cheb_t_table_shifted(s, sol.omega_minus_one)?;
    if let Some(j) = t.iter().position(|v| *v == 0.0 || !v.is_finite()) {
        return Err(Error::Internal(format!("T_{j}(omega) = {} for omega = {omega}", t[j])));
    }

    let q = alpha - eta2;
    let a_tilde = alpha / q;
    let mut m_tilde = Vec::with_capacity(s);
    let mut m = Vec::with_capacity(s - 1);
    m_tilde.push(beta / (omega * s2));
    for j in 2..=s {
        let ratio = t[j - 1] / t[j];
        m.push(2.0 * omega * ratio);
        m_tilde.push(2.0 * beta / s2 * ratio);
    }

    let mut c = Vec::with_capacity(s);
    c.push(a_tilde - 1.0);
    c.push(a_tilde - 1.0 + m_tilde[0]);
    for j in 2..s {
        let mj = m[j - 2];
        c.push(mj * c[j - 1] + (1.0 - mj) * c[j - 2] + m_tilde[j - 1]);
    }

    Ok(TwoStepMethod {
        s,
        eps: sol.input.eps,
        a: alpha,
        a_tilde,
        b: q * t[s],
        m,
        m_tilde,
        c,
        l_s: stability_length(sol)?,
        err_const: error_constant(&build_damped_pair(sol))?,
        order: 2,
        steps: 2,
    })
}

impl TwoStepMethod {
    /// `m_j` for `j = 2..=s`.
    #[inline]
    pub fn m_at(&self, j: usize) -> f64 {
        self.m[j - 2]
    }

    /// `m~_j` for `j = 1..=s`.
    #[inline]
    pub fn m_tilde_at(&self, j: usize) -> f64 {
        self.m_tilde[j - 1]
    }

    /// Checks lengths and finiteness, e.g. after reading a file.
    pub fn validate(&self) -> Result<()> {
        let s = self.s;
        if s < 2 {
            return Err(Error::Parameter(format!("stage count must be >= 2, got {s}")));
        }
        if self.m.len() != s - 1 || self.m_tilde.len() != s || self.c.len() != s {
            return Err(Error::Parameter(format!(
                "coefficient lengths (m: {}, m_tilde: {}, c: {}) do not match s = {s}",
                self.m.len(),
                self.m_tilde.len(),
                self.c.len()
            )));
        }
        if self.order != 2 || self.steps != 2 {
            return Err(Error::Parameter(format!(
                "expected order 2, 2 steps; got order {}, {} steps",
                self.order, self.steps
            )));
        }
        let scalars = [self.eps, self.a, self.a_tilde, self.b, self.l_s, self.err_const];
        let all = scalars.iter().chain(&self.m).chain(&self.m_tilde).chain(&self.c);
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("non-finite coefficient".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("method serialises")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::Parameter(format!("method file: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(self.to_json().as_bytes())?;
        w.write_all(b"\n")
    }

    pub fn read_json<R: Read>(mut r: R) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)
            .map_err(|e| Error::Parameter(format!("method file: {e}")))?;
        Self::from_json(&text)
    }

    /// `(R1(mu), R0(mu))` from the stage recurrence.
    pub fn eval(&self, mu: f64) -> (f64, f64) {
        rebuild_pair_from_method(self, mu)
    }

    pub fn eval_complex(&self, mu: Complex64) -> (Complex64, Complex64) {
        rebuild_pair_from_method(self, mu)
    }
}

/// Evaluates the method's stability pair by running the scalar stage
/// recurrence, `R~_j = (m_j + m~_j mu) R~_{j-1} + (1 - m_j) R~_{j-2}`, and
/// returns `(a + b R~1_s, b R~0_s)`.
pub fn rebuild_pair_from_method<T>(method: &TwoStepMethod, mu: T) -> (T, T)
where
    T: Copy + From<f64> + Add<Output = T> + Sub<Output = T> + Mul<Output = T>,
{
    let one = T::from(1.0);
    let seeds = [T::from(method.a_tilde), T::from(1.0 - method.a_tilde)];
    let mut out = [T::from(0.0); 2];
    for (slot, seed) in out.iter_mut().zip(seeds) {
        let mut prev = seed;
        let mut curr = seed * (one + T::from(method.m_tilde_at(1)) * mu);
        for j in 2..=method.s {
            let mj = method.m_at(j);
            let next = (T::from(mj) + T::from(method.m_tilde_at(j)) * mu) * curr + T::from(1.0 - mj) * prev;
            prev = curr;
            curr = next;
        }
        *slot = curr;
    }
    let b = T::from(method.b);
    (T::from(method.a) + b * out[0], b * out[1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{design_method, solve_damping, DesignInput};
    use rand::{Rng, SeedableRng};

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn s5_coefficients() {
        let m = design_method(5, 0.05).unwrap();
        assert!(close(m.a_tilde, 19.991085619464535, 1e-9));
        assert!(close(m.a, 0.950022296412323, 1e-9));
        assert!(close(m.b, 0.04997770358767691, 1e-9));
        let m_ref = [1.9918588786954916, 1.9838492426656018, 1.9760315849167438, 1.9684604922450784];
        let mt_ref = [
            0.04203714921461939,
            0.08373206889818684,
            0.08339536663324355,
            0.08306673458794599,
            0.08274846743558949,
        ];
        let c_ref = [
            18.991085619464535,
            19.033122768679153,
            19.158549757260907,
            19.365346371620134,
            19.65025313347653,
        ];
        for (got, want) in m.m.iter().zip(m_ref) {
            assert!(close(*got, want, 1e-9), "{got} vs {want}");
        }
        for (got, want) in m.m_tilde.iter().zip(mt_ref) {
            assert!(close(*got, want, 1e-9), "{got} vs {want}");
        }
        for (got, want) in m.c.iter().zip(c_ref) {
            assert!(close(*got, want, 1e-9), "{got} vs {want}");
        }
    }

    #[test]
    fn identities_with_solution() {
        for &s in &[2usize, 5, 17, 100] {
            let sol = solve_damping(&DesignInput::new(s, 0.05).unwrap()).unwrap();
            let m = build_method(&sol).unwrap();
            let eta2 = 0.95f64 * 0.95;
            let ts = crate::chebyshev::cheb_t(s, sol.omega).unwrap().value;
            assert_eq!(m.a, sol.alpha);
            assert!(close(m.b, (sol.alpha - eta2) * ts, 1e-12 * m.b.abs()));
            assert!(close(m.a_tilde, sol.alpha / (sol.alpha - eta2), 1e-12 * m.a_tilde));
            assert_eq!((m.m.len(), m.m_tilde.len(), m.c.len()), (s - 1, s, s));
            // c as stored satisfies its recurrence
            assert_eq!(m.c[0], m.a_tilde - 1.0);
            assert_eq!(m.c[1], m.a_tilde - 1.0 + m.m_tilde[0]);
            for j in 2..s {
                let mj = m.m_at(j);
                assert_eq!(m.c[j], mj * m.c[j - 1] + (1.0 - mj) * m.c[j - 2] + m.m_tilde_at(j));
            }
        }
    }

    /// `c_j` equals the derivative at `mu = 0` of the stage polynomial of
    /// `v_j` divided by its value: `v_j = R~1_j y_n + R~0_j y_{n-1}`, and for
    /// `y(t) = t` the stage reproduces `t_n + c_j h`.
    #[test]
    fn abscissae_from_linear_solution() {
        let m = design_method(5, 0.05).unwrap();
        let h = 1e-3;
        // y' = 1 with y_n = 0, y_{n-1} = -h: stage v_j must equal c_j h
        let mut prev = m.a_tilde * 0.0 + (1.0 - m.a_tilde) * (-h);
        let mut curr = prev + h * m.m_tilde_at(1);
        assert!(close(prev, m.c[0] * h, 1e-15));
        assert!(close(curr, m.c[1] * h, 1e-15));
        for j in 2..m.s {
            let mj = m.m_at(j);
            let next = mj * curr + (1.0 - mj) * prev + h * m.m_tilde_at(j);
            prev = curr;
            curr = next;
            assert!(close(curr, m.c[j] * h, 1e-14), "j={j}");
        }
    }

    #[test]
    fn preconsistency_at_zero() {
        for &s in &[2usize, 5, 50] {
            let m = design_method(s, 0.05).unwrap();
            let (r1, r0) = rebuild_pair_from_method(&m, 0.0);
            assert!(close(r1 + r0, 1.0, 1e-12));
        }
    }

    #[test]
    fn rebuild_matches_closed_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for &s in &[2usize, 5, 10, 50] {
            let sol = solve_damping(&DesignInput::new(s, 0.05).unwrap()).unwrap();
            let m = build_method(&sol).unwrap();
            let pair = build_damped_pair(&sol);
            let check = |mu: f64| {
                let (a1, a0) = rebuild_pair_from_method(&m, mu);
                let (b1, b0) = pair.eval(mu).unwrap();
                assert!(close(a1, b1, 1e-9 * b1.abs()), "s={s} mu={mu}: {a1} vs {b1}");
                assert!(close(a0, b0, 1e-9 * b0.abs()), "s={s} mu={mu}: {a0} vs {b0}");
            };
            for _ in 0..50 {
                check(-rng.gen::<f64>() * m.l_s);
            }
            if s == 5 {
                check(-10.0);
            }
        }
    }

    #[test]
    fn roots_bounded_at_exact_interval_end() {
        for s in [2usize, 3, 4, 5, 8] {
            let sol = solve_damping(&DesignInput::new(s, 0.05).unwrap()).unwrap();
            let m = build_method(&sol).unwrap();
            let end = crate::design::exact_stability_length(&sol).unwrap();
            let (r1, r0) = rebuild_pair_from_method(&m, -end);
            // zeta^2 - r1 zeta - r0 = 0
            let disc = Complex64::new(r1 * r1 + 4.0 * r0, 0.0).sqrt();
            for root in [(r1 + disc) / 2.0, (r1 - disc) / 2.0] {
                assert!(root.norm() - 1.0 <= 1e-9, "s={s} {root}");
            }
        }
    }

    #[test]
    fn closed_form_length_overshoots_for_even_s() {
        let m = design_method(2, 0.05).unwrap();
        let (r1, r0) = rebuild_pair_from_method(&m, -m.l_s);
        let disc = Complex64::new(r1 * r1 + 4.0 * r0, 0.0).sqrt();
        let big = ((r1 + disc) / 2.0).norm().max(((r1 - disc) / 2.0).norm());
        assert!(big > 1.0 + 1e-4, "{big}");
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = design_method(13, 0.07).unwrap();
        let back = TwoStepMethod::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        for key in ["s", "eps", "a", "a_tilde", "b", "m", "m_tilde", "c", "l_s", "err_const", "order", "steps"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn json_rejects_bad_lengths() {
        let mut m = design_method(4, 0.05).unwrap();
        m.c.pop();
        assert!(TwoStepMethod::from_json(&m.to_json()).is_err());
        assert!(TwoStepMethod::from_json("{not json").is_err());
    }
}
