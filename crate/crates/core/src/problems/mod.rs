//! Test problems: the stiff benchmarks, two method-of-lines PDEs and the
//! plumbing shared by integrator and reference solver.

mod cache;
mod pde;
mod stiff;

use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::reference::{max_diff, trapezoid_integrate};

pub use cache::{window_start, CACHE_DIR_ENV};
pub use pde::{burgers, burgers_with, heat1d, heat1d_from, heat1d_with_initial, heat1d_spectral_radius, BurgersOptions, BurgersProfile};
pub use stiff::{hires, rober, vdpol, window_start_consistency, HIRES_SEGMENTS, ROBER_SEGMENTS, VDPOL_SEGMENTS};

/// Right-hand side `y' = f(t, y)`.
pub trait OdeSystem: Send + Sync {
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);

    /// Writes the Jacobian and returns `true`, or returns `false` to ask
    /// for finite differences.
    fn jacobian(&self, _t: f64, _y: &[f64], _jac: &mut DMatrix<f64>) -> bool {
        false
    }

    /// Analytic bound on the spectral radius of the Jacobian, if known.
    fn rho_bound(&self, _t: f64, _y: &[f64]) -> Option<f64> {
        None
    }
}

type RhsFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;

/// An [`OdeSystem`] made from a closure.
pub struct FnSystem {
    dim: usize,
    f: Box<RhsFn>,
    rho: Option<f64>,
}

impl FnSystem {
    pub fn new(dim: usize, f: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        FnSystem { dim, f: Box::new(f), rho: None }
    }

    /// Attaches a constant spectral-radius bound.
    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = Some(rho);
        self
    }
}

impl OdeSystem for FnSystem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        (self.f)(t, y, dy)
    }

    fn rho_bound(&self, _t: f64, _y: &[f64]) -> Option<f64> {
        self.rho
    }
}

type ExactFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// How the endpoint reference of a problem is produced.
#[derive(Clone)]
pub enum ReferencePolicy {
    /// Trapezoidal reference with this many steps over the window.
    Solver { steps: usize },
    /// Closed-form solution of the ODE system.
    Exact(Arc<ExactFn>),
    None,
}

impl fmt::Debug for ReferencePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferencePolicy::Solver { steps } => write!(f, "Solver {{ steps: {steps} }}"),
            ReferencePolicy::Exact(_) => f.write_str("Exact"),
            ReferencePolicy::None => f.write_str("None"),
        }
    }
}

/// Initial value problem on the window `[t0, t_out]`.
#[derive(Clone)]
pub struct IvpProblem {
    pub name: String,
    pub t0: f64,
    pub y0: Vec<f64>,
    pub t_out: f64,
    pub reference: ReferencePolicy,
    system: Arc<dyn OdeSystem>,
    endpoint: Arc<OnceLock<Result<Vec<f64>>>>,
}

impl fmt::Debug for IvpProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("IvpProblem")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("t0", &self.t0)
            .field("t_out", &self.t_out)
            .field("reference", &self.reference)
            .finish()
    }
}

impl IvpProblem {
    pub fn new(name: &str, system: impl OdeSystem + 'static, t0: f64, y0: Vec<f64>, t_out: f64) -> Self {
        Self::from_arc(name, Arc::new(system), t0, y0, t_out)
    }

    pub fn from_arc(name: &str, system: Arc<dyn OdeSystem>, t0: f64, y0: Vec<f64>, t_out: f64) -> Self {
        assert_eq!(y0.len(), system.dim(), "initial state does not match system dimension");
        assert!(y0.iter().all(|v| v.is_finite()), "initial state must be finite");
        assert!(t_out > t0, "empty window");
        IvpProblem {
            name: name.to_string(),
            t0,
            y0,
            t_out,
            reference: ReferencePolicy::None,
            system,
            endpoint: Arc::new(OnceLock::new()),
        }
    }

    pub fn with_reference(mut self, reference: ReferencePolicy) -> Self {
        self.reference = reference;
        self.endpoint = Arc::new(OnceLock::new());
        self
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn system(&self) -> &dyn OdeSystem {
        &*self.system
    }

    pub fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        self.system.rhs(t, y, dy)
    }

    pub fn rho_hint(&self, t: f64, y: &[f64]) -> Option<f64> {
        self.system.rho_bound(t, y)
    }

    /// Reference state at `t_out`, computed once per problem instance.
    pub fn reference_endpoint(&self) -> Result<Option<Vec<f64>>> {
        match &self.reference {
            ReferencePolicy::None => Ok(None),
            ReferencePolicy::Exact(f) => Ok(Some(f(self.t_out))),
            ReferencePolicy::Solver { steps } => self
                .endpoint
                .get_or_init(|| Ok(trapezoid_integrate(self.system(), self.t0, &self.y0, self.t_out, *steps)?.y))
                .clone()
                .map(Some),
        }
    }

    /// Richardson estimate of the reference endpoint error (zero for closed
    /// forms). Runs one extra solve at twice the step count.
    pub fn reference_error_estimate(&self) -> Result<f64> {
        match &self.reference {
            ReferencePolicy::Solver { steps } => {
                let coarse = self.reference_endpoint()?.expect("solver reference");
                let fine = trapezoid_integrate(self.system(), self.t0, &self.y0, self.t_out, 2 * steps)?.y;
                Ok(max_diff(&coarse, &fine) / 3.0)
            }
            ReferencePolicy::Exact(_) => Ok(0.0),
            ReferencePolicy::None => Err(Error::Parameter(format!("{} has no reference", self.name))),
        }
    }

    /// Fails unless the reference is at least 100 times more accurate than
    /// `smallest_error`.
    pub fn certify_reference(&self, smallest_error: f64) -> Result<f64> {
        let estimate = self.reference_error_estimate()?;
        let required = smallest_error / 100.0;
        if estimate > required {
            return Err(Error::Certification { problem: self.name.clone(), estimate, required });
        }
        Ok(estimate)
    }
}

/// Names accepted by [`by_name`].
pub const REGISTRY: [&str; 5] = ["vdpol", "rober", "hires", "burgers", "heat1d"];

/// Knobs for the grid-based problems; ignored by the others.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemOptions {
    pub grid: Option<usize>,
    pub burgers: BurgersOptions,
    pub heat_t_out: f64,
}

impl Default for ProblemOptions {
    fn default() -> Self {
        ProblemOptions { grid: None, burgers: BurgersOptions::default(), heat_t_out: 0.1 }
    }
}

pub fn by_name(name: &str, opts: &ProblemOptions) -> Result<IvpProblem> {
    match name {
        "vdpol" => vdpol(),
        "rober" => rober(),
        "hires" => hires(),
        "burgers" => {
            let mut b = opts.burgers.clone();
            if let Some(n) = opts.grid {
                b.n = n;
            }
            burgers_with(&b)
        }
        "heat1d" => heat1d_from(opts.grid.unwrap_or(50), opts.heat_t_out),
        _ => Err(Error::Parameter(format!(
            "unknown problem '{name}'; known problems: {}",
            REGISTRY.join(", ")
        ))),
    }
}
