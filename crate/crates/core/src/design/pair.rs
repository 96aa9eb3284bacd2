use num_complex::Complex64;

use super::DampingSolution;
use crate::chebyshev::cheb_t_shifted;
use crate::error::Result;

/// Where a [`StabilityPair`] came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairSource {
    Damped(DampingSolution),
    /// `R1 = 1 + T_s(1 + mu/s^2)`, `R0 = -T_s(1 + mu/s^2)`.
    Undamped,
}

/// Value and first three derivatives of a polynomial at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PolyJet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

impl PolyJet {
    pub fn derivative(&self, k: usize) -> f64 {
        [self.value, self.d1, self.d2, self.d3][k]
    }
}

/// Stability polynomials of the form
/// `R1(mu) = c1 + k1 T_s(omega + scale*mu)`, `R0(mu) = k0 T_s(omega + scale*mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityPair {
    s: usize,
    /// `omega - 1`
    shift: f64,
    scale: f64,
    r1_const: f64,
    r1_mult: f64,
    r0_mult: f64,
    source: PairSource,
}

/// Largest degree for which [`StabilityPair::monomial_coefficients`] is produced.
pub const MAX_MONOMIAL_DEGREE: usize = 30;

/// The damped pair `R1 = alpha (1 + T_s(omega + beta mu/s^2))`,
/// `R0 = -eta^2 T_s(omega + beta mu/s^2)`.
pub fn build_damped_pair(sol: &DampingSolution) -> StabilityPair {
    let s = sol.input.s;
    StabilityPair {
        s,
        shift: sol.omega_minus_one,
        scale: sol.beta / (s * s) as f64,
        r1_const: sol.alpha,
        r1_mult: sol.alpha,
        r0_mult: -sol.input.eta * sol.input.eta,
        source: PairSource::Damped(*sol),
    }
}

/// The undamped pair built on `T_s(1 + mu/s^2)`.
pub fn build_undamped_pair(s: usize) -> StabilityPair {
    assert!(s >= 1, "stage count must be >= 1");
    StabilityPair {
        s,
        shift: 0.0,
        scale: 1.0 / (s * s) as f64,
        r1_const: 1.0,
        r1_mult: 1.0,
        r0_mult: -1.0,
        source: PairSource::Undamped,
    }
}

impl StabilityPair {
    pub fn stage_count(&self) -> usize {
        self.s
    }

    pub fn source(&self) -> &PairSource {
        &self.source
    }

    /// `(R1(mu), R0(mu))` with derivatives up to third order.
    pub fn jet(&self, mu: f64) -> Result<(PolyJet, PolyJet)> {
        let ch = cheb_t_shifted(self.s, self.shift + self.scale * mu)?;
        let mut r1 = PolyJet::default();
        let mut r0 = PolyJet::default();
        let mut factor = 1.0;
        for k in 0..4 {
            let d = factor * ch.derivative(k);
            let (a, b) = (self.r1_mult * d, self.r0_mult * d);
            match k {
                0 => {
                    r1.value = self.r1_const + a;
                    r0.value = b;
                }
                1 => {
                    r1.d1 = a;
                    r0.d1 = b;
                }
                2 => {
                    r1.d2 = a;
                    r0.d2 = b;
                }
                _ => {
                    r1.d3 = a;
                    r0.d3 = b;
                }
            }
            factor *= self.scale;
        }
        Ok((r1, r0))
    }

    /// `(R1(mu), R0(mu))`.
    pub fn eval(&self, mu: f64) -> Result<(f64, f64)> {
        let (r1, r0) = self.jet(mu)?;
        Ok((r1.value, r0.value))
    }

    /// `(R1(mu), R0(mu))` at complex `mu`, through the polynomial recurrence.
    pub fn eval_complex(&self, mu: Complex64) -> (Complex64, Complex64) {
        let t = cheb_complex_shifted(self.s, self.shift + self.scale * mu);
        (self.r1_const + self.r1_mult * t, self.r0_mult * t)
    }

    /// Monomial coefficients `(r1_j, r0_j)` for `j <= 3`, from derivatives at zero.
    pub fn coefficient(&self, j: usize) -> Result<(f64, f64)> {
        assert!(j <= 3, "only coefficients up to j = 3 are tracked");
        let (r1, r0) = self.jet(0.0)?;
        let fact = [1.0, 1.0, 2.0, 6.0][j];
        Ok((r1.derivative(j) / fact, r0.derivative(j) / fact))
    }

    /// Full monomial coefficient vectors `(r1_0..r1_s, r0_0..r0_s)`, only
    /// produced for `s <= 30`.
    pub fn monomial_coefficients(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        if self.s > MAX_MONOMIAL_DEGREE {
            return None;
        }
        let taylor = shifted_taylor(self.s, self.shift);
        let mut r1 = Vec::with_capacity(self.s + 1);
        let mut r0 = Vec::with_capacity(self.s + 1);
        let mut factor = 1.0;
        for (j, c) in taylor.iter().enumerate() {
            let t = c * factor;
            r1.push(self.r1_mult * t + if j == 0 { self.r1_const } else { 0.0 });
            r0.push(self.r0_mult * t);
            factor *= self.scale;
        }
        Some((r1, r0))
    }
}

/// Taylor coefficients of `T_s(1 + d + z)` in `z`.
///
/// Runs the difference form of the recurrence on polynomials in `z`; for
/// `d >= 0` every term is nonnegative, so nothing cancels.
fn shifted_taylor(s: usize, d: f64) -> Vec<f64> {
    let omega = 1.0 + d;
    let mut curr = vec![0.0; s + 1];
    let mut diff = vec![0.0; s + 1];
    curr[0] = 1.0;
    if s == 0 {
        return curr;
    }
    // T_1 = omega + z, T_1 - T_0 = d + z
    curr[0] = omega;
    curr[1] = 1.0;
    diff[0] = d;
    diff[1] = 1.0;
    for k in 1..s {
        // diff += 2 (d + z) curr
        for j in (0..=k + 1).rev() {
            let shifted = if j > 0 { curr[j - 1] } else { 0.0 };
            diff[j] += 2.0 * (d * curr[j] + shifted);
        }
        for j in 0..=k + 1 {
            curr[j] += diff[j];
        }
    }
    curr
}

/// `T_s(1 + d)` for complex `d`; difference form on the half plane
/// `Re(1 + d) >= 0` with parity for the other half.
pub(crate) fn cheb_complex_shifted(s: usize, d: Complex64) -> Complex64 {
    if s == 0 {
        return Complex64::new(1.0, 0.0);
    }
    let z = 1.0 + d;
    let (w, d, flip) = if z.re < 0.0 { (-z, -2.0 - d, s % 2 == 1) } else { (z, d, false) };
    let mut curr = w;
    let mut diff = d;
    for _ in 1..s {
        diff += 2.0 * d * curr;
        curr += diff;
    }
    if flip {
        -curr
    } else {
        curr
    }
}

/// Leading error constant `C = 8/6 - (r1_0/6 + r1_1/2 + r1_2 + r1_3 + r0_3)`.
pub fn error_constant(pair: &StabilityPair) -> Result<f64> {
    let (a, _) = pair.coefficient(0)?;
    let (r11, _) = pair.coefficient(1)?;
    let (r12, _) = pair.coefficient(2)?;
    let (r13, r03) = pair.coefficient(3)?;
    Ok(8.0 / 6.0 - (a / 6.0 + r11 / 2.0 + r12 + r13 + r03))
}
