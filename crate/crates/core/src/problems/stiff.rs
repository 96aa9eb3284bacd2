use std::sync::Arc;

use nalgebra::DMatrix;

use super::{window_start, IvpProblem, OdeSystem, ReferencePolicy};
use crate::error::{Error, Result};
use crate::reference::{graded_integrate, max_diff};

/// Van der Pol stiffness parameter.
pub const VDPOL_EPS: f64 = 1e-6;

/// Reference segments `(t_end, steps)` from `t = 0` to each window start.
/// The short leading segments resolve the initial layers.
pub const VDPOL_SEGMENTS: [(f64, usize); 3] = [(1e-5, 2000), (1e-3, 2000), (0.1, 20_000)];
pub const ROBER_SEGMENTS: [(f64, usize); 3] = [(1e-3, 4000), (1.0, 8000), (1000.0, 80_000)];
pub const HIRES_SEGMENTS: [(f64, usize); 1] = [(20.0, 40_000)];

const VDPOL_WINDOW_STEPS: usize = 200_000;
const ROBER_WINDOW_STEPS: usize = 40_000;
const HIRES_WINDOW_STEPS: usize = 200_000;

struct Vdpol;

impl OdeSystem for Vdpol {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        dy[0] = y[1];
        dy[1] = ((1.0 - y[0] * y[0]) * y[1] - y[0]) / VDPOL_EPS;
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut DMatrix<f64>) -> bool {
        jac[(0, 0)] = 0.0;
        jac[(0, 1)] = 1.0;
        jac[(1, 0)] = (-2.0 * y[0] * y[1] - 1.0) / VDPOL_EPS;
        jac[(1, 1)] = (1.0 - y[0] * y[0]) / VDPOL_EPS;
        true
    }
}

struct Rober;

impl OdeSystem for Rober {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let slow = 0.04 * y[0];
        let mid = 1e4 * y[1] * y[2];
        let fast = 3e7 * y[1] * y[1];
        dy[0] = -slow + mid;
        dy[1] = slow - mid - fast;
        dy[2] = fast;
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut DMatrix<f64>) -> bool {
        let (a, b, c) = (1e4 * y[2], 1e4 * y[1], 6e7 * y[1]);
        jac[(0, 0)] = -0.04;
        jac[(0, 1)] = a;
        jac[(0, 2)] = b;
        jac[(1, 0)] = 0.04;
        jac[(1, 1)] = -a - c;
        jac[(1, 2)] = -b;
        jac[(2, 0)] = 0.0;
        jac[(2, 1)] = c;
        jac[(2, 2)] = 0.0;
        true
    }
}

struct Hires;

impl OdeSystem for Hires {
    fn dim(&self) -> usize {
        8
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) {
        let r = 280.0 * y[5] * y[7];
        dy[0] = -1.71 * y[0] + 0.43 * y[1] + 8.32 * y[2] + 0.0007;
        dy[1] = 1.71 * y[0] - 8.75 * y[1];
        dy[2] = -10.03 * y[2] + 0.43 * y[3] + 0.035 * y[4];
        dy[3] = 8.32 * y[1] + 1.71 * y[2] - 1.12 * y[3];
        dy[4] = -1.745 * y[4] + 0.43 * y[5] + 0.43 * y[6];
        dy[5] = -r + 0.69 * y[3] + 1.71 * y[4] - 0.43 * y[5] + 0.69 * y[6];
        dy[6] = r - 1.81 * y[6];
        dy[7] = -r + 1.81 * y[6];
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut DMatrix<f64>) -> bool {
        jac.fill(0.0);
        let entries: [(usize, usize, f64); 22] = [
            (0, 0, -1.71),
            (0, 1, 0.43),
            (0, 2, 8.32),
            (1, 0, 1.71),
            (1, 1, -8.75),
            (2, 2, -10.03),
            (2, 3, 0.43),
            (2, 4, 0.035),
            (3, 1, 8.32),
            (3, 2, 1.71),
            (3, 3, -1.12),
            (4, 4, -1.745),
            (4, 5, 0.43),
            (4, 6, 0.43),
            (5, 3, 0.69),
            (5, 4, 1.71),
            (5, 5, -0.43 - 280.0 * y[7]),
            (5, 6, 0.69),
            (5, 7, -280.0 * y[5]),
            (6, 5, 280.0 * y[7]),
            (6, 6, -1.81),
            (6, 7, 280.0 * y[5]),
        ];
        for (i, j, v) in entries {
            jac[(i, j)] = v;
        }
        jac[(7, 5)] = -280.0 * y[7];
        jac[(7, 6)] = 1.81;
        jac[(7, 7)] = -280.0 * y[5];
        true
    }
}

struct Benchmark {
    name: &'static str,
    system: Arc<dyn OdeSystem>,
    y_initial: Vec<f64>,
    segments: &'static [(f64, usize)],
    t_out: f64,
    window_steps: usize,
}

fn benchmark(name: &str) -> Result<Benchmark> {
    Ok(match name {
        "vdpol" => Benchmark {
            name: "vdpol",
            system: Arc::new(Vdpol),
            y_initial: vec![2.0, 0.0],
            segments: &VDPOL_SEGMENTS,
            t_out: 0.6,
            window_steps: VDPOL_WINDOW_STEPS,
        },
        "rober" => Benchmark {
            name: "rober",
            system: Arc::new(Rober),
            y_initial: vec![1.0, 0.0, 0.0],
            segments: &ROBER_SEGMENTS,
            t_out: 2000.0,
            window_steps: ROBER_WINDOW_STEPS,
        },
        "hires" => Benchmark {
            name: "hires",
            system: Arc::new(Hires),
            y_initial: vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0057],
            segments: &HIRES_SEGMENTS,
            t_out: 270.0,
            window_steps: HIRES_WINDOW_STEPS,
        },
        _ => return Err(Error::Parameter(format!("no stiff benchmark named '{name}'"))),
    })
}

fn build(name: &str) -> Result<IvpProblem> {
    let bench = benchmark(name)?;
    let y0 = window_start(bench.name, &*bench.system, 0.0, &bench.y_initial, bench.segments)?;
    let t0 = bench.segments.last().expect("segments").0;
    Ok(IvpProblem::from_arc(bench.name, bench.system, t0, y0, bench.t_out)
        .with_reference(ReferencePolicy::Solver { steps: bench.window_steps }))
}

/// Stiff Van der Pol (`eps = 1e-6`, `y(0) = (2, 0)`) on `[0.1, 0.6]`.
pub fn vdpol() -> Result<IvpProblem> {
    build("vdpol")
}

/// Robertson kinetics, `y(0) = (1, 0, 0)`, on `[1000, 2000]`.
pub fn rober() -> Result<IvpProblem> {
    build("rober")
}

/// The 8-component HIRES system on `[20, 270]`.
pub fn hires() -> Result<IvpProblem> {
    build("hires")
}

/// Largest difference between window-start states computed with the
/// standard segment step counts and with all counts doubled.
pub fn window_start_consistency(name: &str) -> Result<f64> {
    let bench = benchmark(name)?;
    let doubled: Vec<(f64, usize)> = bench.segments.iter().map(|&(t, n)| (t, 2 * n)).collect();
    let a = window_start(bench.name, &*bench.system, 0.0, &bench.y_initial, bench.segments)?;
    let b = graded_integrate(&*bench.system, 0.0, &bench.y_initial, &doubled)?.y;
    Ok(max_diff(&a, &b))
}
