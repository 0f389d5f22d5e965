use crate::error::{Error, Result};
use crate::harness::metrics::ErrorSeries;
use crate::flows::{dense_hamiltonian, DenseEvolution};
use crate::integrators::{evolve, Equation, EvolveOptions, Problem, Scheme};
use crate::spectral::{coeff_sobolev_norm, extend, Axis, Grid, SobolevIndex, SpectralField};

const ALIGN_TOL: f64 = 1e-12;

/// Number of steps of size `tau` that land exactly on `t`.
pub fn step_count(t: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && tau.is_finite()) || !(t >= 0.0 && t.is_finite()) {
        return Err(Error::TimeAlignment { time: t, step: tau });
    }
    let k = (t / tau).round();
    if (k * tau - t).abs() > ALIGN_TOL * t.max(tau) {
        return Err(Error::TimeAlignment { time: t, step: tau });
    }
    Ok(k as usize)
}

/// How reference snapshots are produced on the fine grid.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceMethod {
    /// Many small steps of a splitting scheme.
    Splitting { tau: f64, scheme: Scheme },
    /// Dense matrix exponential of the collocation Hamiltonian (linear 1D
    /// problems with at most [`crate::flows::ORACLE_MAX_N`] points).
    Exact,
}

/// Fine-grid resolution and method of a reference computation.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSpec {
    /// Points per axis of the fine grid.
    pub points: Vec<usize>,
    pub method: ReferenceMethod,
}

impl ReferenceSpec {
    pub fn new(points: Vec<usize>, tau: f64, scheme: Scheme) -> Self {
        Self {
            points,
            method: ReferenceMethod::Splitting { tau, scheme },
        }
    }

    pub fn exact(points: Vec<usize>) -> Self {
        Self {
            points,
            method: ReferenceMethod::Exact,
        }
    }

    /// The fine grid over the domain of `grid`.
    pub fn grid_for(&self, grid: &Grid) -> Result<Grid> {
        if self.points.len() != grid.dim() {
            return Err(Error::GridIncompatible(format!(
                "reference has {} axes, problem has {}",
                self.points.len(),
                grid.dim()
            )));
        }
        let axes = grid
            .axes()
            .iter()
            .zip(&self.points)
            .map(|(ax, &n)| Axis::new(ax.a, ax.b, n))
            .collect();
        Grid::new(axes)
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= ALIGN_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Fine-grid snapshots at a fixed set of times.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    grid: Grid,
    tau: Option<f64>,
    method: String,
    provenance: String,
    snapshots: Vec<(f64, SpectralField)>,
}

impl ReferenceSolution {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Step of a splitting reference; `None` for the exact one.
    pub fn tau(&self) -> Option<f64> {
        self.tau
    }

    /// Scheme name, or `"exact"`.
    pub fn method_name(&self) -> &str {
        &self.method
    }

    /// Canonical problem description the snapshots were computed from.
    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|(t, _)| *t).collect()
    }

    pub fn snapshots(&self) -> impl Iterator<Item = (f64, &SpectralField)> {
        self.snapshots.iter().map(|(t, f)| (*t, f))
    }

    pub fn snapshot_at(&self, t: f64) -> Result<&SpectralField> {
        let i = self.snapshots.partition_point(|(s, _)| *s < t && !same_time(*s, t));
        match self.snapshots.get(i) {
            Some((s, f)) if same_time(*s, t) => Ok(f),
            _ => Err(Error::TimeMismatch { time: t }),
        }
    }

    /// `(e_L2, e_H1)` of `field` against the snapshot at `t`, after zero-padding
    /// `field` onto the reference grid.
    pub fn errors(&self, t: f64, field: &SpectralField) -> Result<(f64, f64)> {
        let reference = self.snapshot_at(t)?;
        let fine = extend(field, &self.grid)?;
        let diff: Vec<_> = reference
            .coeffs()
            .iter()
            .zip(fine.coeffs())
            .map(|(a, b)| a - b)
            .collect();
        Ok((
            coeff_sobolev_norm(&self.grid, &diff, SobolevIndex::L2),
            coeff_sobolev_norm(&self.grid, &diff, SobolevIndex::H1),
        ))
    }
}

/// Computes `problem` on the fine grid of `spec` at `times`.
pub fn reference_run(problem: &Problem, spec: &ReferenceSpec, times: &[f64]) -> Result<ReferenceSolution> {
    let fine = problem.with_grid(spec.grid_for(&problem.grid)?);
    match &spec.method {
        ReferenceMethod::Splitting { tau, scheme } => splitting_reference(problem, &fine, *tau, scheme, times),
        ReferenceMethod::Exact => exact_reference(problem, &fine, times),
    }
}

fn splitting_reference(
    problem: &Problem,
    fine: &Problem,
    tau: f64,
    scheme: &Scheme,
    times: &[f64],
) -> Result<ReferenceSolution> {
    let mut steps = times
        .iter()
        .map(|&t| step_count(t, tau))
        .collect::<Result<Vec<_>>>()?;
    steps.sort_unstable();
    steps.dedup();
    let mut snapshots = Vec::with_capacity(steps.len());
    let mut next = 0;
    let mut rec = |n: usize, _t: f64, f: &SpectralField| {
        if next < steps.len() && steps[next] == n {
            snapshots.push((n as f64 * tau, f.clone()));
            next += 1;
        }
    };
    evolve(
        fine,
        scheme,
        tau,
        steps.last().copied().unwrap_or(0),
        EvolveOptions::default(),
        Some(&mut rec),
    )?;
    Ok(ReferenceSolution {
        grid: fine.grid.clone(),
        tau: Some(tau),
        method: scheme.name().to_string(),
        provenance: problem.describe(),
        snapshots,
    })
}

fn exact_reference(problem: &Problem, fine: &Problem, times: &[f64]) -> Result<ReferenceSolution> {
    let Equation::Linear { potential } = &fine.equation else {
        return Err(Error::InvalidParameter("exact references need a linear problem".into()));
    };
    if fine.grid.dim() != 1 {
        return Err(Error::InvalidParameter("exact references are one-dimensional".into()));
    }
    let mut times: Vec<f64> = times.to_vec();
    if let Some(bad) = times.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
        return Err(Error::InvalidParameter(format!("invalid snapshot time {bad}")));
    }
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| same_time(*a, *b));
    let h = dense_hamiltonian(&fine.grid, potential, fine.eps)?;
    let exp = DenseEvolution::new(&h)?;
    let u0 = fine.initial_field();
    let snapshots = times
        .iter()
        .map(|&t| Ok((t, exp.evolve(&u0, t)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReferenceSolution {
        grid: fine.grid.clone(),
        tau: None,
        method: "exact".into(),
        provenance: problem.describe(),
        snapshots,
    })
}

/// Accumulates an [`ErrorSeries`] one snapshot at a time, suitable for use
/// inside an evolve recorder.
pub struct ErrorTracker<'a> {
    reference: &'a ReferenceSolution,
    series: ErrorSeries,
    failure: Option<Error>,
}

impl<'a> ErrorTracker<'a> {
    pub fn new(reference: &'a ReferenceSolution) -> Self {
        Self {
            reference,
            series: ErrorSeries::default(),
            failure: None,
        }
    }

    pub fn record(&mut self, t: f64, field: &SpectralField) {
        if self.failure.is_some() {
            return;
        }
        match self.reference.errors(t, field) {
            Ok((l2, h1)) => self.series.push(t, l2, h1),
            Err(e) => self.failure = Some(e),
        }
    }

    pub fn finish(self) -> Result<ErrorSeries> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self.series),
        }
    }
}

/// Errors of recorded `(t, field)` pairs against `reference`.
pub fn error_series<'f>(
    run: impl IntoIterator<Item = (f64, &'f SpectralField)>,
    reference: &ReferenceSolution,
) -> Result<ErrorSeries> {
    let mut tracker = ErrorTracker::new(reference);
    for (t, f) in run {
        tracker.record(t, f);
    }
    tracker.finish()
}
