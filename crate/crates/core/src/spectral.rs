//! Periodic grids, the normalized discrete Fourier transform, and discrete
//! Sobolev norms.
//!
//! Coefficients are stored in FFT order: position `k` holds frequency index
//! `l = k` for `k < N/2` and `l = k - N` otherwise, so the stored set is
//! exactly `T_N = {-N/2, ..., N/2 - 1}`. The forward transform carries the
//! `1/N` factor (per axis); the inverse is the plain trigonometric sum.
//! Two-dimensional data is row-major with the first axis varying slowest.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlannerScalar};

use crate::error::{Error, Result};

/// One periodic axis `[a, b)` sampled at `n` equispaced nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        Self { a, b, n }
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    /// Mesh size `h = (b - a) / N`.
    pub fn h(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Fundamental frequency `mu_1 = 2 pi / (b - a)`.
    pub fn fundamental(&self) -> f64 {
        2.0 * PI / self.length()
    }

    pub fn frequency(&self, l: i64) -> f64 {
        self.fundamental() * l as f64
    }

    /// Frequency index stored at FFT position `k`.
    pub fn index_at(&self, k: usize) -> i64 {
        if k < self.n / 2 {
            k as i64
        } else {
            k as i64 - self.n as i64
        }
    }

    /// FFT position of frequency index `l`, if `l` lies in `T_N`.
    pub fn position_of(&self, l: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if l < -half || l >= half {
            None
        } else if l >= 0 {
            Some(l as usize)
        } else {
            Some((l + self.n as i64) as usize)
        }
    }

    fn validate(&self, axis: usize) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite()) || self.b <= self.a {
            return Err(Error::DegenerateInterval {
                axis,
                a: self.a,
                b: self.b,
            });
        }
        if !self.n.is_multiple_of(2) {
            return Err(Error::OddPointCount { axis, n: self.n });
        }
        if self.n < 4 {
            return Err(Error::TooFewPoints { axis, n: self.n });
        }
        Ok(())
    }
}

struct AxisPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

struct GridInner {
    axes: Vec<Axis>,
    plans: Vec<AxisPlan>,
    // |mu|^2 at every stored coefficient position
    squared_frequencies: Vec<f64>,
}

/// A tensor-product periodic grid in one or two dimensions.
///
/// Cloning is cheap; transform plans are built once and shared.
#[derive(Clone)]
pub struct Grid {
    inner: Arc<GridInner>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid").field("axes", &self.inner.axes).finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.inner.axes == other.inner.axes
    }
}

/// Builds a grid from `(a, b, N)` triples, one per axis.
pub fn make_grid(axes: &[(f64, f64, usize)]) -> Result<Grid> {
    Grid::new(axes.iter().map(|&(a, b, n)| Axis::new(a, b, n)).collect())
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::UnsupportedDimension(axes.len()));
        }
        for (i, axis) in axes.iter().enumerate() {
            axis.validate(i)?;
        }
        let mut planner = FftPlannerScalar::new();
        let plans = axes
            .iter()
            .map(|ax| AxisPlan {
                forward: planner.plan_fft_forward(ax.n),
                inverse: planner.plan_fft_inverse(ax.n),
            })
            .collect();
        let squared_frequencies = tensor_map(&axes, |ls| {
            ls.iter()
                .zip(&axes)
                .map(|(&l, ax)| ax.frequency(l).powi(2))
                .sum()
        });
        Ok(Self {
            inner: Arc::new(GridInner {
                axes,
                plans,
                squared_frequencies,
            }),
        })
    }

    pub fn uniform_1d(a: f64, b: f64, n: usize) -> Result<Self> {
        Self::new(vec![Axis::new(a, b, n)])
    }

    pub fn axes(&self) -> &[Axis] {
        &self.inner.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.inner.axes[i]
    }

    /// Largest per-axis fundamental frequency: `mu_1` in 1D, and the
    /// conservative choice for step-size rules in 2D.
    pub fn rule_frequency(&self) -> f64 {
        self.axes().iter().map(Axis::fundamental).fold(0.0, f64::max)
    }

    pub fn dim(&self) -> usize {
        self.inner.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.inner.axes.iter().map(|ax| ax.n).collect()
    }

    /// Total number of stored nodes (equivalently, coefficients).
    pub fn len(&self) -> usize {
        self.inner.axes.iter().map(|ax| ax.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Product of the per-axis mesh sizes.
    pub fn cell_volume(&self) -> f64 {
        self.inner.axes.iter().map(Axis::h).product()
    }

    /// Lebesgue measure of the domain.
    pub fn measure(&self) -> f64 {
        self.inner.axes.iter().map(Axis::length).product()
    }

    /// `|mu|^2` at each coefficient position, FFT order.
    pub fn squared_frequencies(&self) -> &[f64] {
        &self.inner.squared_frequencies
    }

    /// Coordinates of every node, in storage order.
    pub fn node_coordinates(&self) -> Vec<Vec<f64>> {
        let axes = &self.inner.axes;
        let mut out = Vec::with_capacity(self.len());
        match axes.len() {
            1 => out.extend(axes[0].nodes().into_iter().map(|x| vec![x])),
            _ => {
                for i in 0..axes[0].n {
                    for j in 0..axes[1].n {
                        out.push(vec![axes[0].node(i), axes[1].node(j)]);
                    }
                }
            }
        }
        out
    }

    /// Frequency indices `(l_1, ..., l_d)` at each coefficient position.
    pub fn frequency_indices(&self) -> Vec<Vec<i64>> {
        tensor_map(&self.inner.axes, |ls| ls.to_vec())
    }

    /// True when both grids cover the same domain in the same dimension.
    pub fn same_domain(&self, other: &Grid) -> bool {
        self.dim() == other.dim()
            && self
                .axes()
                .iter()
                .zip(other.axes())
                .all(|(p, q)| p.a == q.a && p.b == q.b)
    }

    pub(crate) fn check_len(&self, found: usize) -> Result<()> {
        let expected = self.len();
        if found != expected {
            return Err(Error::ShapeMismatch { expected, found });
        }
        Ok(())
    }

    /// Forward transform with the `1/N` normalization, in place.
    pub(crate) fn forward_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.len() as f64;
        for c in data.iter_mut() {
            *c *= scale;
        }
    }

    /// Trigonometric sum at the nodes, in place.
    pub(crate) fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    fn transform(&self, data: &mut [Complex64], forward: bool) {
        let pick = |p: &AxisPlan| {
            if forward {
                Arc::clone(&p.forward)
            } else {
                Arc::clone(&p.inverse)
            }
        };
        let plans = &self.inner.plans;
        match self.dim() {
            1 => pick(&plans[0]).process(data),
            _ => {
                let (n0, n1) = (self.inner.axes[0].n, self.inner.axes[1].n);
                // rows are contiguous
                pick(&plans[1]).process(data);
                let fft0 = pick(&plans[0]);
                let mut column = vec![Complex64::new(0.0, 0.0); n0];
                for j in 0..n1 {
                    for i in 0..n0 {
                        column[i] = data[i * n1 + j];
                    }
                    fft0.process(&mut column);
                    for i in 0..n0 {
                        data[i * n1 + j] = column[i];
                    }
                }
            }
        }
    }
}

/// Evaluates `f` on the frequency-index tuple of every coefficient position.
fn tensor_map<T>(axes: &[Axis], mut f: impl FnMut(&[i64]) -> T) -> Vec<T> {
    match axes.len() {
        1 => (0..axes[0].n).map(|k| f(&[axes[0].index_at(k)])).collect(),
        _ => {
            let mut out = Vec::with_capacity(axes[0].n * axes[1].n);
            for k0 in 0..axes[0].n {
                for k1 in 0..axes[1].n {
                    out.push(f(&[axes[0].index_at(k0), axes[1].index_at(k1)]));
                }
            }
            out
        }
    }
}

/// Normalized forward DFT: `c_l = (1/N) sum_j u_j exp(-i mu_l (x_j - a))`.
pub fn dft_forward(grid: &Grid, values: &[Complex64]) -> Result<Vec<Complex64>> {
    grid.check_len(values.len())?;
    let mut buf = values.to_vec();
    grid.forward_in_place(&mut buf);
    Ok(buf)
}

/// Evaluates the trigonometric interpolant with the given coefficients at the nodes.
pub fn dft_inverse(grid: &Grid, coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    grid.check_len(coeffs.len())?;
    let mut buf = coeffs.to_vec();
    grid.inverse_in_place(&mut buf);
    Ok(buf)
}

/// A complex wave function on a grid, held as nodal values, Fourier
/// coefficients, or both.
///
/// A missing representation is computed on first access and cached. Any
/// mutable access drops the other representation.
#[derive(Clone)]
pub struct SpectralField {
    grid: Grid,
    values: OnceLock<Vec<Complex64>>,
    coeffs: OnceLock<Vec<Complex64>>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("has_values", &self.has_values())
            .field("has_coeffs", &self.has_coeffs())
            .finish()
    }
}

impl SpectralField {
    pub fn from_values(grid: &Grid, values: Vec<Complex64>) -> Result<Self> {
        grid.check_len(values.len())?;
        Ok(Self {
            grid: grid.clone(),
            values: OnceLock::from(values),
            coeffs: OnceLock::new(),
        })
    }

    pub fn from_coeffs(grid: &Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        grid.check_len(coeffs.len())?;
        Ok(Self {
            grid: grid.clone(),
            values: OnceLock::new(),
            coeffs: OnceLock::from(coeffs),
        })
    }

    /// Samples `f` at every node (interpolation, not projection).
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let values: Vec<Complex64> = grid.node_coordinates().iter().map(|x| f(x)).collect();
        Self {
            grid: grid.clone(),
            values: OnceLock::from(values),
            coeffs: OnceLock::new(),
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self {
            grid: grid.clone(),
            values: OnceLock::from(vec![Complex64::new(0.0, 0.0); grid.len()]),
            coeffs: OnceLock::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn has_values(&self) -> bool {
        self.values.get().is_some()
    }

    pub fn has_coeffs(&self) -> bool {
        self.coeffs.get().is_some()
    }

    pub fn values(&self) -> &[Complex64] {
        self.values.get_or_init(|| {
            let mut buf = self.coeffs.get().expect("field has no representation").clone();
            self.grid.inverse_in_place(&mut buf);
            buf
        })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        self.coeffs.get_or_init(|| {
            let mut buf = self.values.get().expect("field has no representation").clone();
            self.grid.forward_in_place(&mut buf);
            buf
        })
    }

    /// Nodal values for in-place modification; invalidates the coefficients.
    pub fn values_mut(&mut self) -> &mut [Complex64] {
        if self.values.get().is_none() {
            let mut buf = self.coeffs.take().expect("field has no representation");
            self.grid.inverse_in_place(&mut buf);
            let _ = self.values.set(buf);
        } else {
            self.coeffs.take();
        }
        self.values.get_mut().expect("values present")
    }

    /// Coefficients for in-place modification; invalidates the nodal values.
    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        if self.coeffs.get().is_none() {
            let mut buf = self.values.take().expect("field has no representation");
            self.grid.forward_in_place(&mut buf);
            let _ = self.coeffs.set(buf);
        } else {
            self.values.take();
        }
        self.coeffs.get_mut().expect("coefficients present")
    }

    pub fn into_values(mut self) -> Vec<Complex64> {
        self.values_mut();
        self.values.take().expect("values present")
    }

    pub fn into_coeffs(mut self) -> Vec<Complex64> {
        self.coeffs_mut();
        self.coeffs.take().expect("coefficients present")
    }

    /// Node index of the first non-finite value, if any. Scans whichever
    /// representation is cached and only transforms when something is wrong.
    pub fn first_non_finite(&self) -> Option<usize> {
        let bad = |v: &[Complex64]| v.iter().position(|z| !(z.re.is_finite() && z.im.is_finite()));
        if let Some(v) = self.values.get() {
            return bad(v);
        }
        bad(self.coeffs.get()?)?;
        Some(bad(self.values()).unwrap_or(0))
    }
}

/// Sobolev exponent `s >= 0`; `s = 0` is L², `s = 1` is H¹.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SobolevIndex(f64);

impl SobolevIndex {
    pub const L2: SobolevIndex = SobolevIndex(0.0);
    pub const H1: SobolevIndex = SobolevIndex(1.0);

    pub fn new(s: f64) -> Result<Self> {
        if !(s.is_finite() && s >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "Sobolev exponent must be finite and nonnegative, got {s}"
            )));
        }
        Ok(Self(s))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    fn weight(self, squared_frequency: f64) -> f64 {
        let base = 1.0 + squared_frequency;
        if self.0 == 0.0 {
            1.0
        } else if self.0 == 1.0 {
            base
        } else {
            base.powf(self.0)
        }
    }
}

/// `(|Omega| sum_l (1 + |mu_l|^2)^s |c_l|^2)^{1/2}` over the stored modes.
pub fn sobolev_norm(field: &SpectralField, s: SobolevIndex) -> f64 {
    coeff_sobolev_norm(field.grid(), field.coeffs(), s)
}

pub(crate) fn coeff_sobolev_norm(grid: &Grid, coeffs: &[Complex64], s: SobolevIndex) -> f64 {
    let sum: f64 = coeffs
        .iter()
        .zip(grid.squared_frequencies())
        .map(|(c, &m2)| s.weight(m2) * c.norm_sqr())
        .sum();
    (grid.measure() * sum).sqrt()
}

/// `(h sum_j |u_j|^2)^{1/2}`, with `h` the product of mesh sizes in 2D.
pub fn l2_discrete_norm(field: &SpectralField) -> f64 {
    let sum: f64 = field.values().iter().map(|z| z.norm_sqr()).sum();
    (field.grid().cell_volume() * sum).sqrt()
}

/// Zeroes every coefficient whose index leaves `T_{n0}` on some axis.
pub fn project(field: &SpectralField, n0: usize) -> Result<SpectralField> {
    if !n0.is_multiple_of(2) {
        return Err(Error::OddPointCount { axis: 0, n: n0 });
    }
    let grid = field.grid();
    let half = (n0 / 2) as i64;
    let keep = |l: i64| l >= -half && l < half;
    let coeffs = field
        .coeffs()
        .iter()
        .zip(grid.frequency_indices())
        .map(|(&c, ls)| {
            if ls.iter().all(|&l| keep(l)) {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    SpectralField::from_coeffs(grid, coeffs)
}

/// Zero-pads the coefficients of `field` onto the finer grid `fine`.
///
/// The trigonometric interpolant is unchanged, so every Sobolev norm is too.
pub fn extend(field: &SpectralField, fine: &Grid) -> Result<SpectralField> {
    let coarse = field.grid();
    if !coarse.same_domain(fine) {
        return Err(Error::GridIncompatible(
            "extension requires identical domains".into(),
        ));
    }
    if coarse.axes().iter().zip(fine.axes()).any(|(c, f)| f.n < c.n) {
        return Err(Error::GridIncompatible(
            "target grid is coarser than the source".into(),
        ));
    }
    if coarse == fine {
        return Ok(field.clone());
    }
    let mut out = vec![Complex64::new(0.0, 0.0); fine.len()];
    let src = field.coeffs();
    let fine_axes = fine.axes();
    for (k, ls) in coarse.frequency_indices().into_iter().enumerate() {
        let mut pos = 0;
        for (ax, &l) in fine_axes.iter().zip(&ls) {
            pos = pos * ax.n + ax.position_of(l).expect("coarse index fits fine grid");
        }
        out[pos] = src[k];
    }
    SpectralField::from_coeffs(fine, out)
}
