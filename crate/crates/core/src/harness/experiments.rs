use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::harness::metrics::{fit_slope, ErrorSeries, LineFit, SlopeFit};
use crate::harness::reference::{reference_run, step_count, ErrorTracker, ReferenceSpec};
use crate::harness::twist::TwistTracker;
use crate::integrators::{evolve, EvolveOptions, Problem, Scheme};
use crate::spectral::{Axis, Grid, SpectralField};

fn non_empty<T>(list: &[T], what: &str) -> Result<()> {
    if list.is_empty() {
        return Err(Error::InvalidParameter(format!("{what} list is empty")));
    }
    Ok(())
}

/// Final time `t / eps^power`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Horizon {
    pub t: f64,
    pub power: i32,
}

impl Horizon {
    pub fn new(t: f64, power: i32) -> Self {
        Self { t, power }
    }

    pub fn final_time(&self, eps: f64) -> f64 {
        self.t / eps.powi(self.power)
    }
}

/// Runs `problem` for `t_end` and compares with `reference` every `sample_every`.
pub fn tracked_run(
    problem: &Problem,
    scheme: &Scheme,
    tau: f64,
    t_end: f64,
    sample_every: f64,
    reference: &ReferenceSpec,
) -> Result<ErrorSeries> {
    let n_steps = step_count(t_end, tau)?;
    let stride = step_count(sample_every, tau)?.max(1);
    let n_samples = n_steps / stride;
    let times: Vec<f64> = (0..=n_samples).map(|k| (k * stride) as f64 * tau).collect();
    let sol = reference_run(problem, reference, &times)?;
    let mut tracker = ErrorTracker::new(&sol);
    let mut rec = |_: usize, t: f64, f: &SpectralField| tracker.record(t, f);
    let opts = EvolveOptions { fuse: true, stride };
    evolve(problem, scheme, tau, n_steps, opts, Some(&mut rec))?;
    tracker.finish()
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRun {
    pub tau: f64,
    pub series: ErrorSeries,
    /// Straight-line fit of `e_L2,max` against `t`.
    pub fit: LineFit,
}

/// Long-time error histories for each step in `taus`.
pub fn experiment_error_growth(
    problem: &Problem,
    scheme: &Scheme,
    taus: &[f64],
    t_end: f64,
    sample_every: f64,
    reference: &ReferenceSpec,
) -> Result<Vec<GrowthRun>> {
    non_empty(taus, "step")?;
    taus.par_iter()
        .map(|&tau| {
            let series = tracked_run(problem, scheme, tau, t_end, sample_every, reference)?;
            let fit = series.l2_max_growth()?;
            Ok(GrowthRun { tau, series, fit })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    /// Vary the points per axis at a fixed step.
    Space { points: Vec<usize>, tau: f64 },
    /// Vary the step on the problem grid.
    Time { taus: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub param: f64,
    pub e_l2: f64,
    pub e_h1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub rows: Vec<ConvergenceRow>,
    /// Log-log fit of `e_H1` against the swept parameter, when three or
    /// more positive errors are available.
    pub fit: Option<SlopeFit>,
    /// Space sweeps only: the first `N` after which the error no longer
    /// halves with the next refinement.
    pub stagnation: Option<f64>,
}

fn uniform_refinement(grid: &Grid, n: usize) -> Result<Grid> {
    Grid::new(grid.axes().iter().map(|ax| Axis::new(ax.a, ax.b, n)).collect())
}

/// Errors at `t_eval` over a sweep in `N` or `tau`.
pub fn experiment_convergence(
    problem: &Problem,
    scheme: &Scheme,
    sweep: &Sweep,
    t_eval: f64,
    reference: &ReferenceSpec,
) -> Result<ConvergenceResult> {
    let sol = reference_run(problem, reference, &[t_eval])?;
    let one = |p: &Problem, tau: f64, param: f64| -> Result<ConvergenceRow> {
        let n = step_count(t_eval, tau)?;
        let out = evolve(p, scheme, tau, n, EvolveOptions::default(), None)?;
        let (e_l2, e_h1) = sol.errors(n as f64 * tau, &out)?;
        Ok(ConvergenceRow { param, e_l2, e_h1 })
    };
    let (rows, space) = match sweep {
        Sweep::Space { points, tau } => {
            non_empty(points, "grid size")?;
            let rows = points
                .par_iter()
                .map(|&n| one(&problem.with_grid(uniform_refinement(&problem.grid, n)?), *tau, n as f64))
                .collect::<Result<Vec<_>>>()?;
            (rows, true)
        }
        Sweep::Time { taus } => {
            non_empty(taus, "step")?;
            let rows = taus
                .par_iter()
                .map(|&tau| one(problem, tau, tau))
                .collect::<Result<Vec<_>>>()?;
            (rows, false)
        }
    };
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.param, r.e_h1)).collect();
    let fit = if pts.len() >= 3 { fit_slope(&pts).ok() } else { None };
    let stagnation = if space {
        rows.windows(2)
            .find(|w| w[1].e_h1 >= 0.5 * w[0].e_h1)
            .map(|w| w[0].param)
    } else {
        None
    };
    Ok(ConvergenceResult {
        rows,
        fit,
        stagnation,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsRow {
    pub eps: f64,
    pub t_final: f64,
    pub e_h1: f64,
    /// Error of the previous row divided by this row's.
    pub ratio: Option<f64>,
}

/// Final-time H¹ errors at `horizon.final_time(eps)` for each `eps`.
pub fn experiment_eps_scaling(
    problem: &Problem,
    scheme: &Scheme,
    tau: f64,
    eps_list: &[f64],
    horizon: Horizon,
    reference: &ReferenceSpec,
) -> Result<Vec<EpsRow>> {
    non_empty(eps_list, "eps")?;
    let errs = eps_list
        .par_iter()
        .map(|&eps| {
            let p = problem.with_eps(eps)?;
            let t_final = horizon.final_time(eps);
            let n = step_count(t_final, tau)?;
            let sol = reference_run(&p, reference, &[t_final])?;
            let out = evolve(&p, scheme, tau, n, EvolveOptions::default(), None)?;
            Ok((t_final, sol.errors(t_final, &out)?.1))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(eps_list
        .iter()
        .zip(&errs)
        .enumerate()
        .map(|(i, (&eps, &(t_final, e_h1)))| EpsRow {
            eps,
            t_final,
            e_h1,
            ratio: (i > 0).then(|| errs[i - 1].1 / e_h1),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwistRow {
    pub eps: f64,
    pub diagnostic: f64,
}

/// Twisted-variable diagnostic over `[0, horizon.final_time(eps)]` for each `eps`.
pub fn experiment_twist(
    problem: &Problem,
    scheme: &Scheme,
    tau: f64,
    eps_list: &[f64],
    horizon: Horizon,
) -> Result<Vec<TwistRow>> {
    non_empty(eps_list, "eps")?;
    eps_list
        .par_iter()
        .map(|&eps| {
            let p = problem.with_eps(eps)?;
            let n = step_count(horizon.final_time(eps), tau)?;
            let mut tracker = TwistTracker::default();
            let mut rec = |_: usize, t: f64, f: &SpectralField| tracker.record(t, f);
            evolve(&p, scheme, tau, n, EvolveOptions::default(), Some(&mut rec))?;
            Ok(TwistRow {
                eps,
                diagnostic: tracker.value(),
            })
        })
        .collect()
}
