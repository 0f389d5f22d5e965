//! Splitting compositions (Lie, Strang, triple-jump) and the time-marching
//! driver.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flows::{NonlinearitySpec, PotentialSpec};
use crate::spectral::{Grid, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageKind {
    /// Free Schrödinger flow.
    Kinetic,
    /// Potential or nonlinear phase, depending on the equation.
    Phase,
}

/// One sub-flow of a composition, run for `coeff * tau`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stage {
    pub kind: StageKind,
    pub coeff: f64,
}

impl Stage {
    pub fn kinetic(coeff: f64) -> Self {
        Self {
            kind: StageKind::Kinetic,
            coeff,
        }
    }

    pub fn phase(coeff: f64) -> Self {
        Self {
            kind: StageKind::Phase,
            coeff,
        }
    }
}

/// Weights `(w1, w0)` of the fourth-order triple jump: `w1 = 1/(2 - 2^{1/3})`, `w0 = 1 - 2 w1`.
pub fn triple_jump_weights() -> (f64, f64) {
    let w1 = 1.0 / (2.0 - 2f64.cbrt());
    (w1, 1.0 - 2.0 * w1)
}

/// An ordered splitting composition.
#[derive(Debug, Clone, PartialEq)]
pub struct Scheme {
    name: String,
    order: u8,
    stages: Vec<Stage>,
}

impl Scheme {
    /// Kinetic then phase, each over the full step.
    pub fn lie() -> Self {
        Self {
            name: "lie".into(),
            order: 1,
            stages: vec![Stage::kinetic(1.0), Stage::phase(1.0)],
        }
    }

    pub fn strang() -> Self {
        Self {
            name: "strang".into(),
            order: 2,
            stages: strang_stages(1.0),
        }
    }

    /// Three Strang steps of lengths `w1 tau, w0 tau, w1 tau`.
    pub fn triple_jump() -> Self {
        let (w1, w0) = triple_jump_weights();
        let stages = [w1, w0, w1].iter().flat_map(|&w| strang_stages(w)).collect();
        Self {
            name: "triple-jump".into(),
            order: 4,
            stages,
        }
    }

    pub fn from_order(order: u8) -> Result<Self> {
        match order {
            1 => Ok(Self::lie()),
            2 => Ok(Self::strang()),
            4 => Ok(Self::triple_jump()),
            _ => Err(Error::InvalidParameter(format!(
                "splitting order must be 1, 2 or 4, got {order}"
            ))),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn order(&self) -> u8 {
        self.order
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    /// The same stages in reverse order. Stepping the adjoint with `-tau`
    /// undoes a step of `tau`.
    pub fn adjoint(&self) -> Self {
        let mut stages = self.stages.clone();
        stages.reverse();
        let name = match self.name.strip_suffix("-adjoint") {
            Some(base) => base.to_string(),
            None => format!("{}-adjoint", self.name),
        };
        Self {
            name,
            order: self.order,
            stages,
        }
    }

    /// Stages with neighbouring kinetic flows merged into one.
    pub fn fused_stages(&self) -> Vec<Stage> {
        let mut out: Vec<Stage> = Vec::with_capacity(self.stages.len());
        for &s in &self.stages {
            match out.last_mut() {
                Some(prev) if prev.kind == StageKind::Kinetic && s.kind == StageKind::Kinetic => {
                    prev.coeff += s.coeff
                }
                _ => out.push(s),
            }
        }
        out
    }

    /// Sums of the kinetic and phase coefficients (both 1 for a consistent scheme).
    pub fn coefficient_sums(&self) -> (f64, f64) {
        self.stages.iter().fold((0.0, 0.0), |(k, p), s| match s.kind {
            StageKind::Kinetic => (k + s.coeff, p),
            StageKind::Phase => (k, p + s.coeff),
        })
    }
}

fn strang_stages(w: f64) -> Vec<Stage> {
    vec![
        Stage::kinetic(0.5 * w),
        Stage::phase(w),
        Stage::kinetic(0.5 * w),
    ]
}

/// Nodal initial datum `psi_0(x)`.
type Sampler = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub struct InitialData {
    label: String,
    sampler: Sampler,
}

impl fmt::Debug for InitialData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "InitialData({})", self.label)
    }
}

impl InitialData {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            sampler: Arc::new(f),
        }
    }

    /// `amplitude * x^2 (1 - x)^2`, an H²-periodic bump on `[0, 1]`.
    pub fn quartic_bump(amplitude: f64) -> Self {
        Self::new(format!("{amplitude:e}*x^2*(1-x)^2"), move |x| {
            let x = x[0];
            Complex64::new(amplitude * x * x * (1.0 - x) * (1.0 - x), 0.0)
        })
    }

    /// `shift / (shift + sin^2 x)`, analytic and `2 pi`-periodic.
    pub fn rational_sine(shift: f64) -> Self {
        Self::new(format!("{shift:e}/({shift:e}+sin(x)^2)"), move |x| {
            Complex64::new(shift / (shift + x[0].sin().powi(2)), 0.0)
        })
    }

    /// `1/(1 + sin^2(2x)) + sin(2 pi y)` on `(0, pi) x (0, 1)`.
    pub fn rational_sine_2d() -> Self {
        Self::new("1/(1+sin(2x)^2)+sin(2*pi*y)", |x| {
            let y = x.get(1).copied().unwrap_or(0.0);
            Complex64::new(
                1.0 / (1.0 + (2.0 * x[0]).sin().powi(2)) + (2.0 * std::f64::consts::PI * y).sin(),
                0.0,
            )
        })
    }

    /// `exp(i mu_l (x - a))` for the axis `[a, b)`.
    pub fn plane_wave(a: f64, b: f64, l: i64) -> Self {
        let mu = 2.0 * std::f64::consts::PI * l as f64 / (b - a);
        Self::new(format!("exp(i*{mu:e}*(x-{a:e}))"), move |x| {
            Complex64::cis(mu * (x[0] - a))
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        (self.sampler)(x)
    }

    pub fn sample(&self, grid: &Grid) -> SpectralField {
        SpectralField::from_fn(grid, |x| (self.sampler)(x))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Equation {
    /// `i psi_t = -Delta psi + eps V psi`
    Linear { potential: PotentialSpec },
    /// `i psi_t = -Delta psi +/- eps^2 |psi|^2 psi`
    CubicNlse { nonlinearity: NonlinearitySpec },
}

/// Equation, small parameter, grid and initial datum.
#[derive(Debug, Clone)]
pub struct Problem {
    pub equation: Equation,
    pub eps: f64,
    pub grid: Grid,
    pub initial: InitialData,
}

impl Problem {
    pub fn new(equation: Equation, eps: f64, grid: Grid, initial: InitialData) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self {
            equation,
            eps,
            grid,
            initial,
        })
    }

    pub fn linear(grid: Grid, potential: PotentialSpec, eps: f64, initial: InitialData) -> Result<Self> {
        Self::new(Equation::Linear { potential }, eps, grid, initial)
    }

    pub fn nlse(
        grid: Grid,
        nonlinearity: NonlinearitySpec,
        eps: f64,
        initial: InitialData,
    ) -> Result<Self> {
        Self::new(Equation::CubicNlse { nonlinearity }, eps, grid, initial)
    }

    pub fn with_grid(&self, grid: Grid) -> Self {
        Self {
            grid,
            ..self.clone()
        }
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        check_eps(eps)?;
        Ok(Self {
            eps,
            ..self.clone()
        })
    }

    pub fn is_linear(&self) -> bool {
        matches!(self.equation, Equation::Linear { .. })
    }

    /// `psi^0_j = psi_0(x_j)`.
    pub fn initial_field(&self) -> SpectralField {
        self.initial.sample(&self.grid)
    }

    /// Canonical description of everything that determines a run except the
    /// grid resolution and step.
    pub fn describe(&self) -> String {
        let eq = match &self.equation {
            Equation::Linear { potential } => format!("linear V={}", potential.describe()),
            Equation::CubicNlse { nonlinearity } => format!(
                "nlse sign={} strength={:e}",
                nonlinearity.sign.value(),
                nonlinearity.strength
            ),
        };
        let domain: Vec<String> = self
            .grid
            .axes()
            .iter()
            .map(|ax| format!("[{:e},{:e})", ax.a, ax.b))
            .collect();
        format!(
            "{eq}; eps={:e}; domain={}; psi0={}",
            self.eps,
            domain.join("x"),
            self.initial.label()
        )
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must lie in (0, 1], got {eps}"
        )));
    }
    Ok(())
}

enum StageOp {
    Kinetic(Vec<Complex64>),
    Potential(Vec<Complex64>),
    Nonlinear(f64),
}

/// A scheme bound to a problem and step size, with every multiplier
/// precomputed.
pub struct Stepper {
    grid: Grid,
    ops: Vec<StageOp>,
}

impl Stepper {
    pub fn new(problem: &Problem, scheme: &Scheme, tau: f64, fuse: bool) -> Result<Self> {
        if !tau.is_finite() {
            return Err(Error::InvalidParameter(format!("step must be finite, got {tau}")));
        }
        let grid = problem.grid.clone();
        let stages = if fuse {
            scheme.fused_stages()
        } else {
            scheme.stages().to_vec()
        };
        let potential = match &problem.equation {
            Equation::Linear { potential } => Some(potential.sample(&grid)?),
            Equation::CubicNlse { .. } => None,
        };
        let ops = stages
            .iter()
            .map(|s| {
                let dt = s.coeff * tau;
                match (s.kind, &problem.equation, &potential) {
                    (StageKind::Kinetic, _, _) => StageOp::Kinetic(
                        grid.squared_frequencies()
                            .iter()
                            .map(|&m2| phase_increment(-dt * m2))
                            .collect(),
                    ),
                    (StageKind::Phase, Equation::Linear { .. }, Some(v)) => StageOp::Potential(
                        v.iter().map(|&vj| phase_increment(-problem.eps * dt * vj)).collect(),
                    ),
                    (StageKind::Phase, Equation::CubicNlse { nonlinearity }, _) => {
                        StageOp::Nonlinear(
                            nonlinearity.sign.value()
                                * nonlinearity.strength
                                * problem.eps
                                * problem.eps
                                * dt,
                        )
                    }
                    (StageKind::Phase, Equation::Linear { .. }, None) => {
                        unreachable!("linear problems always sample their potential")
                    }
                }
            })
            .collect();
        Ok(Self { grid, ops })
    }

    /// Advances `field` by one step in place.
    pub fn step(&self, field: &mut SpectralField) -> Result<()> {
        if field.grid() != &self.grid {
            return Err(Error::GridIncompatible(
                "field and stepper live on different grids".into(),
            ));
        }
        for op in &self.ops {
            match op {
                StageOp::Kinetic(m) => {
                    for (c, d) in field.coeffs_mut().iter_mut().zip(m) {
                        *c += *c * d;
                    }
                }
                StageOp::Potential(m) => {
                    for (z, d) in field.values_mut().iter_mut().zip(m) {
                        *z += *z * d;
                    }
                }
                StageOp::Nonlinear(scale) => {
                    for z in field.values_mut() {
                        *z *= Complex64::cis(-scale * z.norm_sqr());
                    }
                }
            }
        }
        Ok(())
    }
}

/// `exp(i theta) - 1`, with the real part free of cancellation. Applying a
/// phase as `z + z * d` keeps `|z|` far closer to invariant than `z * exp(i theta)`.
fn phase_increment(theta: f64) -> Complex64 {
    let h = (0.5 * theta).sin();
    Complex64::new(-2.0 * h * h, theta.sin())
}

/// One Strang step: half kinetic, full phase, half kinetic.
pub fn strang_step(field: &SpectralField, problem: &Problem, tau: f64) -> Result<SpectralField> {
    one_step(field, problem, &Scheme::strang(), tau)
}

/// One Lie step: full kinetic, then full phase.
pub fn lie_step(field: &SpectralField, problem: &Problem, tau: f64) -> Result<SpectralField> {
    one_step(field, problem, &Scheme::lie(), tau)
}

/// Phase first, then kinetic; `lie_adjoint_step(lie_step(u, tau), -tau) = u`.
pub fn lie_adjoint_step(field: &SpectralField, problem: &Problem, tau: f64) -> Result<SpectralField> {
    one_step(field, problem, &Scheme::lie().adjoint(), tau)
}

/// One fourth-order triple-jump step.
pub fn order4_step(field: &SpectralField, problem: &Problem, tau: f64) -> Result<SpectralField> {
    one_step(field, problem, &Scheme::triple_jump(), tau)
}

fn one_step(field: &SpectralField, problem: &Problem, scheme: &Scheme, tau: f64) -> Result<SpectralField> {
    let mut out = field.clone();
    Stepper::new(problem, scheme, tau, true)?.step(&mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvolveOptions {
    /// Merge neighbouring kinetic stages within a step.
    pub fuse: bool,
    /// The recorder sees steps `0, stride, 2 stride, ...`.
    pub stride: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            fuse: true,
            stride: 1,
        }
    }
}

/// Per-step observer: `(n, t_n, psi^n)`.
pub type Recorder<'a> = &'a mut dyn FnMut(usize, f64, &SpectralField);

/// Marches `n_steps` steps from the sampled initial datum.
///
/// The recorder is called for step 0 and then for every `stride`-th step.
/// The run aborts on the first non-finite value.
pub fn evolve(
    problem: &Problem,
    scheme: &Scheme,
    tau: f64,
    n_steps: usize,
    options: EvolveOptions,
    recorder: Option<Recorder<'_>>,
) -> Result<SpectralField> {
    evolve_from(problem.initial_field(), problem, scheme, tau, n_steps, options, recorder)
}

/// Like [`evolve`], starting from an arbitrary field on the problem grid.
pub fn evolve_from(
    mut field: SpectralField,
    problem: &Problem,
    scheme: &Scheme,
    tau: f64,
    n_steps: usize,
    options: EvolveOptions,
    mut recorder: Option<Recorder<'_>>,
) -> Result<SpectralField> {
    let stride = options.stride.max(1);
    let stepper = Stepper::new(problem, scheme, tau, options.fuse)?;
    if let Some(node) = field.first_non_finite() {
        return Err(Error::NonFiniteField { step: 0, node });
    }
    if let Some(rec) = recorder.as_mut() {
        rec(0, 0.0, &field);
    }
    for n in 1..=n_steps {
        stepper.step(&mut field)?;
        if let Some(node) = field.first_non_finite() {
            return Err(Error::NonFiniteField { step: n, node });
        }
        if n % stride == 0 {
            if let Some(rec) = recorder.as_mut() {
                rec(n, n as f64 * tau, &field);
            }
        }
    }
    Ok(field)
}
