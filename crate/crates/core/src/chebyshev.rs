//! Chebyshev polynomials of the first kind with derivatives.
//!
//! Values and derivatives come from the three-term recurrence
//! `T_{k+1} = 2x T_k - T_{k-1}`, differentiated term by term:
//!
//! ```text
//! T^(m)_{k+1} = 2m T^(m-1)_k + 2x T^(m)_k - T^(m)_{k-1}
//! ```
//!
//! Close to `x = ±1` the plain recurrence loses digits (the two fundamental
//! solutions coalesce), so for `|x| >= 0.5` the difference form
//! `D_{k+1} = 2(x - 1) T_k + D_k`, `T_{k+1} = T_k + D_{k+1}` is used on `|x|`
//! and the parity `T_s(-x) = (-1)^s T_s(x)` restores the sign.

use crate::error::{Error, Result};

/// `T_s` and its first three derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChebEval {
    pub value: f64,
    pub first_derivative: f64,
    pub second_derivative: f64,
    pub third_derivative: f64,
}

impl ChebEval {
    /// Derivative of order `k` (0..=3).
    pub fn derivative(&self, k: usize) -> f64 {
        match k {
            0 => self.value,
            1 => self.first_derivative,
            2 => self.second_derivative,
            3 => self.third_derivative,
            _ => panic!("derivative order {k} not tracked"),
        }
    }
}

const ORDERS: usize = 4;

/// Evaluates `T_s(x)` together with its first three derivatives.
pub fn cheb_t(s: usize, x: f64) -> Result<ChebEval> {
    check_finite(x)?;
    Ok(eval_jet(s, x, None))
}

/// Evaluates `T_s(1 + d)` and its derivatives, treating `d` as exact.
///
/// Use this when the argument is naturally known as an offset from 1: the
/// offset then keeps its full relative precision instead of being rounded
/// to the spacing of doubles near 1.
pub fn cheb_t_shifted(s: usize, d: f64) -> Result<ChebEval> {
    check_finite(d)?;
    Ok(eval_jet(s, 1.0 + d, Some(d)))
}

fn check_finite(x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("Chebyshev argument must be finite, got {x}")))
    }
}

fn eval_jet(s: usize, x: f64, shift: Option<f64>) -> ChebEval {
    let jet = if x >= 0.5 {
        jet_difference_form(s, x, shift.unwrap_or(x - 1.0))
    } else if x <= -0.5 {
        let mut jet = jet_difference_form(s, -x, -x - 1.0);
        for (m, d) in jet.iter_mut().enumerate() {
            if (s + m) % 2 == 1 {
                *d = -*d;
            }
        }
        jet
    } else {
        jet_plain(s, x)
    };
    ChebEval {
        value: jet[0],
        first_derivative: jet[1],
        second_derivative: jet[2],
        third_derivative: jet[3],
    }
}

fn jet_plain(s: usize, x: f64) -> [f64; ORDERS] {
    let mut prev = [1.0, 0.0, 0.0, 0.0];
    if s == 0 {
        return prev;
    }
    let mut curr = [x, 1.0, 0.0, 0.0];
    for _ in 1..s {
        let mut next = [0.0; ORDERS];
        for m in 0..ORDERS {
            let lower = if m == 0 { 0.0 } else { 2.0 * m as f64 * curr[m - 1] };
            next[m] = lower + 2.0 * x * curr[m] - prev[m];
        }
        prev = curr;
        curr = next;
    }
    curr
}

/// Difference form for `x = 1 + d`, `d >= -0.5`.
fn jet_difference_form(s: usize, x: f64, d: f64) -> [f64; ORDERS] {
    if s == 0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let mut curr = [x, 1.0, 0.0, 0.0];
    // diff[m] = T^(m)_k - T^(m)_{k-1}
    let mut diff = [d, 1.0, 0.0, 0.0];
    for _ in 1..s {
        let mut next = [0.0; ORDERS];
        for m in 0..ORDERS {
            let lower = if m == 0 { 0.0 } else { 2.0 * m as f64 * curr[m - 1] };
            diff[m] += 2.0 * d * curr[m] + lower;
            next[m] = curr[m] + diff[m];
        }
        curr = next;
    }
    curr
}

/// `T_j(x)` for every `j = 0..=s`.
pub fn cheb_t_table(s: usize, x: f64) -> Result<Vec<f64>> {
    check_finite(x)?;
    Ok(table(s, x, None))
}

/// `T_j(1 + d)` for every `j = 0..=s`, treating `d` as exact.
pub fn cheb_t_table_shifted(s: usize, d: f64) -> Result<Vec<f64>> {
    check_finite(d)?;
    Ok(table(s, 1.0 + d, Some(d)))
}

fn table(s: usize, x: f64, shift: Option<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(s + 1);
    out.push(1.0);
    if s == 0 {
        return out;
    }
    out.push(x);
    if x.abs() >= 0.5 {
        let (sign, ax, d) = if x < 0.0 {
            (-1.0, -x, -x - 1.0)
        } else {
            (1.0, x, shift.unwrap_or(x - 1.0))
        };
        let mut curr = ax;
        let mut diff = d;
        for k in 1..s {
            diff += 2.0 * d * curr;
            curr += diff;
            let parity = if (k + 1) % 2 == 1 { sign } else { 1.0 };
            out.push(parity * curr);
        }
    } else {
        let (mut prev, mut curr) = (1.0, x);
        for _ in 1..s {
            let next = 2.0 * x * curr - prev;
            prev = curr;
            curr = next;
            out.push(curr);
        }
    }
    out
}

/// `arccosh(x)` for `x >= 1`, accurate when `x` is close to 1.
pub fn acosh_near_one(x: f64) -> Result<f64> {
    if x.is_nan() || x < 1.0 {
        return Err(Error::Domain(format!("arccosh needs x >= 1, got {x}")));
    }
    let d = x - 1.0;
    Ok((d + (d * (x + 1.0)).sqrt()).ln_1p())
}

/// `cosh(s · arccosh(x))`, i.e. `T_s(x)` for `x >= 1`.
pub fn cheb_t_cosh(s: usize, x: f64) -> Result<f64> {
    if x.is_infinite() {
        return Err(Error::Domain(format!("Chebyshev argument must be finite, got {x}")));
    }
    Ok((s as f64 * acosh_near_one(x)?).cosh())
}
