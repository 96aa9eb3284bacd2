use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use tsrk_core::design::{
    build_damped_pair, build_method, build_undamped_pair, error_constant, solve_damping, stability_length,
    DesignInput, TwoStepMethod,
};
use tsrk_core::integrator::{estimate_spectral_radius, integrate, select_stages, StarterPolicy, DEFAULT_STARTER_SUBSTEPS};
use tsrk_core::problems::{by_name, ProblemOptions};
use tsrk_core::stability::{domain_sample_grid, real_axis_scan, CharPoly, DomainGrid};
use tsrk_core::{Error, Result};

use crate::config::{halving_steps, ExperimentConfig, ExperimentFile, StageChoice};
use crate::{Advection, Mode, RunArgs, StabilityArgs};

fn io_err(path: Option<&Path>, e: io::Error) -> Error {
    match path {
        Some(p) => Error::Parameter(format!("{}: {e}", p.display())),
        None => Error::Parameter(format!("stdout: {e}")),
    }
}

/// Buffers output for `path`, or stdout when `None`.
fn with_output(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
    let result = match path {
        Some(p) => {
            let file = File::create(p).map_err(|e| io_err(path, e))?;
            let mut w = BufWriter::new(file);
            body(&mut w).and_then(|_| w.flush())
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w).and_then(|_| w.flush())
        }
    };
    result.map_err(|e| io_err(path, e))
}

/// Human-readable notes go to stdout when data goes to a file, else stderr.
fn note(to_file: bool, line: &str) {
    if to_file {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
}

pub fn genmethod(s: usize, eps: f64, out: Option<&Path>) -> Result<()> {
    let sol = solve_damping(&DesignInput::new(s, eps)?)?;
    let method = build_method(&sol)?;
    with_output(out, |w| method.write_json(w))?;
    note(
        out.is_some(),
        &format!(
            "s = {s}, eps = {eps}: alpha = {}, omega = {}, beta = {}, l_s = {:.4}, C_s = {:.6}",
            sol.alpha, sol.omega, sol.beta, method.l_s, method.err_const
        ),
    );
    Ok(())
}

pub fn table(eps: f64, s_list: &[usize], out: Option<&Path>) -> Result<()> {
    let rows: Vec<String> = s_list
        .iter()
        .map(|&s| {
            let row = DesignInput::new(s, eps).and_then(|input| {
                let sol = solve_damping(&input)?;
                Ok((error_constant(&build_damped_pair(&sol))?, stability_length(&sol)?))
            });
            match row {
                Ok((c, l)) => format!("{s},{c},{l},{},", l / (s * s) as f64),
                Err(e) => format!("{s},,,,\"{}\"", e.to_string().replace('"', "'")),
            }
        })
        .collect();
    with_output(out, |w| {
        writeln!(w, "s,C_s,l_s,l_s_over_s2,error")?;
        for r in &rows {
            writeln!(w, "{r}")?;
        }
        Ok(())
    })
}

pub fn stability(args: &StabilityArgs) -> Result<()> {
    let (poly, length): (Box<dyn CharPoly>, f64) = if let Some(path) = &args.method {
        let file = File::open(path).map_err(|e| io_err(Some(path), e))?;
        let m = TwoStepMethod::read_json(file)?;
        let l = m.l_s;
        (Box::new(m), l)
    } else {
        let s = args
            .s
            .ok_or_else(|| Error::Parameter("give either --method or --s".into()))?;
        if args.undamped {
            if s < 1 {
                return Err(Error::Parameter("stage count must be >= 1".into()));
            }
            (Box::new(build_undamped_pair(s)), 2.0 * (s * s) as f64)
        } else {
            let sol = solve_damping(&DesignInput::new(s, args.eps)?)?;
            (Box::new(build_damped_pair(&sol)), stability_length(&sol)?)
        }
    };
    let out = args.out.as_deref();
    match args.mode {
        Mode::RealScan => {
            let mu_min = args.mu_min.unwrap_or(-1.05 * length);
            let scan = real_axis_scan(&*poly, mu_min, args.samples)?;
            with_output(out, |w| scan.write_csv(w))?;
            note(
                out.is_some(),
                &format!("stable length {:.4} (grid cell {:.2e}); closed form {:.4}", scan.stable_length, scan.cell, length),
            );
        }
        Mode::Domain => {
            let re_min = args.re_min.unwrap_or(-1.05 * length);
            let mut grid = DomainGrid::new(re_min, args.im_max.unwrap_or(0.25 * re_min.abs()), args.resolution);
            if let Some(re_max) = args.re_max {
                grid.re_max = re_max;
            }
            let sample = domain_sample_grid(&*poly, grid)?;
            with_output(out, |w| sample.write_csv(w))?;
            let inside = sample.mask.iter().filter(|b| **b).count();
            note(out.is_some(), &format!("{inside} of {} grid points stable", sample.mask.len()));
        }
    }
    Ok(())
}

fn resolve(args: &RunArgs, min_halvings: usize) -> Result<ExperimentConfig> {
    let file = match &args.config {
        Some(p) => ExperimentFile::load(p)?,
        None => ExperimentFile::default(),
    };
    let problem = args
        .problem
        .clone()
        .or(file.problem)
        .ok_or_else(|| Error::Parameter("no problem given (use --problem)".into()))?;
    let default_halvings = if min_halvings > 0 { 3 } else { 0 };
    let halvings = args.halvings.or(file.halvings).unwrap_or(default_halvings);
    let h = if let Some(h) = &args.h {
        h.clone()
    } else if let Some(h0) = args.h0 {
        halving_steps(h0, halvings)
    } else if let Some(h) = file.h {
        h
    } else if let Some(h0) = file.h0 {
        halving_steps(h0, halvings)
    } else {
        Vec::new()
    };
    let conservative = match args.advection {
        Some(a) => a == Advection::Conservative,
        None => file.conservative.unwrap_or(true),
    };
    let cfg = ExperimentConfig {
        problem,
        h,
        s: args.s.or(file.s).unwrap_or(StageChoice::Auto),
        eps: args.eps.or(file.eps).unwrap_or(tsrk_core::design::DEFAULT_EPS),
        out: args.out.clone().or(file.out),
        substeps: args.substeps.or(file.substeps).unwrap_or(DEFAULT_STARTER_SUBSTEPS),
        grid: args.grid.or(file.grid),
        profile: args.profile.map(Into::into).or(file.profile).unwrap_or(tsrk_core::problems::BurgersProfile::Polynomial),
        conservative,
        certify: !args.no_certify && file.certify.unwrap_or(true),
    };
    cfg.validate(min_halvings)?;
    Ok(cfg)
}

struct Row {
    h: f64,
    s: usize,
    outcome: Option<(f64, usize, usize)>,
}

pub fn run(args: &RunArgs, min_halvings: usize) -> Result<()> {
    let cfg = resolve(args, min_halvings)?;
    let mut opts = ProblemOptions { grid: cfg.grid, ..Default::default() };
    opts.burgers.profile = cfg.profile;
    opts.burgers.conservative = cfg.conservative;
    let problem = by_name(&cfg.problem, &opts)?;

    let rho = match cfg.s {
        StageChoice::Fixed(_) => 0.0,
        StageChoice::Auto => {
            let sys = problem.system();
            let start = estimate_spectral_radius(sys, &problem.y0, problem.t0);
            match problem.reference_endpoint()? {
                Some(end) => start.max(estimate_spectral_radius(sys, &end, problem.t_out)),
                None => start,
            }
        }
    };

    let mut methods: BTreeMap<usize, TwoStepMethod> = BTreeMap::new();
    let mut rows = Vec::with_capacity(cfg.h.len());
    let starter = StarterPolicy::Reference { substeps: cfg.substeps };
    for &h in &cfg.h {
        let s = match cfg.s {
            StageChoice::Fixed(s) => s,
            StageChoice::Auto => select_stages(rho, h, cfg.eps)?,
        };
        if let std::collections::btree_map::Entry::Vacant(slot) = methods.entry(s) {
            slot.insert(build_method(&solve_damping(&DesignInput::new(s, cfg.eps)?)?)?);
        }
        let outcome = match integrate(&methods[&s], &problem, h, &starter) {
            Ok(r) => Some((r.endpoint_error.unwrap_or(f64::NAN), r.steps_taken, r.stage_evals)),
            Err(Error::BlowUp { .. }) => None,
            Err(e) => return Err(e),
        };
        rows.push(Row { h, s, outcome });
    }

    if cfg.certify {
        let smallest = rows
            .iter()
            .filter_map(|r| r.outcome.map(|o| o.0))
            .filter(|e| e.is_finite() && *e > 0.0)
            .fold(f64::INFINITY, f64::min);
        if smallest.is_finite() {
            let estimate = problem.certify_reference(smallest)?;
            note(
                cfg.out.is_some(),
                &format!("reference error estimate {estimate:.2e} (smallest run error {smallest:.2e})"),
            );
        }
    }

    let with_ratio = min_halvings > 0;
    with_output(cfg.out.as_deref(), |w| {
        write!(w, "h,s_used,endpoint_error,steps,fevals")?;
        writeln!(w, "{}", if with_ratio { ",ratio" } else { "" })?;
        let mut prev: Option<f64> = None;
        for r in &rows {
            match r.outcome {
                Some((err, steps, fevals)) => {
                    write!(w, "{},{},{err},{steps},{fevals}", r.h, r.s)?;
                    if with_ratio {
                        match prev {
                            Some(p) if err > 0.0 => write!(w, ",{}", p / err)?,
                            _ => write!(w, ",")?,
                        }
                    }
                    prev = Some(err);
                }
                None => {
                    write!(w, "{},{},unstable,,", r.h, r.s)?;
                    if with_ratio {
                        write!(w, ",")?;
                    }
                    prev = None;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    })
}
