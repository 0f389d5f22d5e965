//! Exact sub-flows of the split equations and a dense-matrix reference
//! evolution for the linear problem.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

/// Largest grid the dense oracle accepts.
pub const ORACLE_MAX_N: usize = 64;

/// An external real potential, either closed-form in the first coordinate
/// or tabulated at the nodes.
#[derive(Clone, PartialEq)]
pub enum PotentialSpec {
    Zero,
    /// `amplitude * cos(wavenumber * x)`
    Cosine { amplitude: f64, wavenumber: f64 },
    /// `amplitude * sin(wavenumber * x)`
    Sine { amplitude: f64, wavenumber: f64 },
    /// Real nodal values in grid storage order.
    Tabulated(Vec<f64>),
}

impl fmt::Debug for PotentialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

impl PotentialSpec {
    pub fn cosine(amplitude: f64, wavenumber: f64) -> Self {
        Self::Cosine {
            amplitude,
            wavenumber,
        }
    }

    pub fn sine(amplitude: f64, wavenumber: f64) -> Self {
        Self::Sine {
            amplitude,
            wavenumber,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Self::Zero => true,
            Self::Cosine { amplitude, .. } | Self::Sine { amplitude, .. } => *amplitude == 0.0,
            Self::Tabulated(v) => v.iter().all(|&x| x == 0.0),
        }
    }

    /// Canonical text form, used for provenance hashes.
    pub fn describe(&self) -> String {
        match self {
            Self::Zero => "zero".to_string(),
            Self::Cosine {
                amplitude,
                wavenumber,
            } => format!("{amplitude:e}*cos({wavenumber:e}*x)"),
            Self::Sine {
                amplitude,
                wavenumber,
            } => format!("{amplitude:e}*sin({wavenumber:e}*x)"),
            Self::Tabulated(v) => {
                let bits = v.iter().fold(0u64, |h, x| {
                    h.rotate_left(5) ^ x.to_bits().wrapping_mul(0x9E37_79B9_7F4A_7C15)
                });
                format!("table[{}]#{bits:016x}", v.len())
            }
        }
    }

    /// Potential values at the grid nodes.
    pub fn sample(&self, grid: &Grid) -> Result<Vec<f64>> {
        let at = |f: &dyn Fn(f64) -> f64| -> Vec<f64> {
            grid.node_coordinates().iter().map(|x| f(x[0])).collect()
        };
        match self {
            Self::Zero => Ok(vec![0.0; grid.len()]),
            Self::Cosine {
                amplitude,
                wavenumber,
            } => Ok(at(&|x| amplitude * (wavenumber * x).cos())),
            Self::Sine {
                amplitude,
                wavenumber,
            } => Ok(at(&|x| amplitude * (wavenumber * x).sin())),
            Self::Tabulated(v) => {
                grid.check_len(v.len())?;
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidParameter(
                        "tabulated potential has non-finite values".into(),
                    ));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    /// `+|psi|^2 psi`
    Defocusing,
    /// `-|psi|^2 psi`
    Focusing,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Defocusing => 1.0,
            Sign::Focusing => -1.0,
        }
    }

    pub fn from_value(v: i64) -> Result<Self> {
        match v {
            1 => Ok(Sign::Defocusing),
            -1 => Ok(Sign::Focusing),
            _ => Err(Error::InvalidParameter(format!(
                "nonlinearity sign must be +1 or -1, got {v}"
            ))),
        }
    }
}

/// Cubic nonlinearity `sign * strength * eps^2 |psi|^2 psi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearitySpec {
    pub sign: Sign,
    pub strength: f64,
}

impl Default for NonlinearitySpec {
    fn default() -> Self {
        Self {
            sign: Sign::Defocusing,
            strength: 1.0,
        }
    }
}

impl NonlinearitySpec {
    pub fn new(sign: Sign, strength: f64) -> Result<Self> {
        if !(strength.is_finite() && strength > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "nonlinearity strength must be positive, got {strength}"
            )));
        }
        Ok(Self { sign, strength })
    }
}

/// Free Schrödinger flow `exp(i t Delta)`: coefficient `l` picks up `exp(-i t |mu_l|^2)`.
pub fn free_flow(field: &mut SpectralField, t: f64) {
    let grid = field.grid().clone();
    for (c, &m2) in field.coeffs_mut().iter_mut().zip(grid.squared_frequencies()) {
        *c *= unit_phase(-t * m2);
    }
}

/// Potential phase `exp(-i eps tau V(x_j))` applied at the nodes.
pub fn potential_flow(
    field: &mut SpectralField,
    potential: &PotentialSpec,
    eps: f64,
    tau: f64,
) -> Result<()> {
    let v = potential.sample(field.grid())?;
    apply_potential_phase(field, &v, eps * tau);
    Ok(())
}

pub(crate) fn apply_potential_phase(field: &mut SpectralField, v: &[f64], scale: f64) {
    for (z, &vj) in field.values_mut().iter_mut().zip(v) {
        *z *= unit_phase(-scale * vj);
    }
}

/// `exp(i theta)` nudged by at most one ulp per component towards unit modulus.
pub(crate) fn unit_phase(theta: f64) -> Complex64 {
    let (sin, cos) = theta.sin_cos();
    if !(sin.is_finite() && cos.is_finite()) {
        return Complex64::new(cos, sin);
    }
    let defect = |re: f64, im: f64| {
        let (big, small) = if re.abs() >= im.abs() { (re, im) } else { (im, re) };
        small.mul_add(small, big.mul_add(big, -1.0)).abs()
    };
    let mut best = (defect(cos, sin), cos, sin);
    for re in [cos.next_down(), cos, cos.next_up()] {
        for im in [sin.next_down(), sin, sin.next_up()] {
            let d = defect(re, im);
            if d < best.0 {
                best = (d, re, im);
            }
        }
    }
    Complex64::new(best.1, best.2)
}

/// Nonlinear phase `exp(-/+ i eps^2 tau strength |psi_j|^2)`; exact because
/// `|psi_j|` is invariant along this sub-flow.
pub fn nonlinear_flow(field: &mut SpectralField, eps: f64, tau: f64, nl: &NonlinearitySpec) {
    let scale = nl.sign.value() * nl.strength * eps * eps * tau;
    for z in field.values_mut() {
        *z *= Complex64::cis(-scale * z.norm_sqr());
    }
}

fn check_oracle_grid(grid: &Grid) -> Result<usize> {
    if grid.dim() != 1 {
        return Err(Error::UnsupportedDimension(grid.dim()));
    }
    let n = grid.axis(0).n;
    if n > ORACLE_MAX_N {
        return Err(Error::OracleScaleExceeded {
            n,
            max: ORACLE_MAX_N,
        });
    }
    Ok(n)
}

/// `H = -Delta + eps V` in the Fourier basis of the grid (FFT order).
///
/// The potential enters as the circulant matrix of its nodal DFT,
/// `H[k, k'] = |mu_k|^2 delta + eps V~_{(l - l') mod N}`, which is the exact
/// generator of the collocation scheme: its flow and the split step see the
/// same operator.
pub fn dense_hamiltonian(
    grid: &Grid,
    potential: &PotentialSpec,
    eps: f64,
) -> Result<DMatrix<Complex64>> {
    let n = check_oracle_grid(grid)?;
    let v: Vec<Complex64> = potential
        .sample(grid)?
        .into_iter()
        .map(|x| Complex64::new(x, 0.0))
        .collect();
    let vhat = crate::spectral::dft_forward(grid, &v)?;
    let m2 = grid.squared_frequencies();
    Ok(DMatrix::from_fn(n, n, |k, kp| {
        let conv = vhat[(k + n - kp) % n] * eps;
        if k == kp {
            conv + m2[k]
        } else {
            conv
        }
    }))
}

/// Eigendecomposition of a Hermitian generator, reusable across times.
#[derive(Debug, Clone)]
pub struct DenseEvolution {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<Complex64>,
}

impl DenseEvolution {
    pub fn new(h: &DMatrix<Complex64>) -> Result<Self> {
        let eig = h
            .clone()
            .try_symmetric_eigen(1e-15, 10_000)
            .ok_or(Error::EigendecompositionFailure)?;
        if eig.eigenvalues.iter().any(|x| !x.is_finite()) {
            return Err(Error::EigendecompositionFailure);
        }
        Ok(Self {
            eigenvalues: eig.eigenvalues,
            eigenvectors: eig.eigenvectors,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Applies `exp(-i t H)` to the coefficient vector of `field`.
    pub fn evolve(&self, field: &SpectralField, t: f64) -> Result<SpectralField> {
        let grid = field.grid();
        grid.check_len(self.dim())?;
        let c = DVector::from_column_slice(field.coeffs());
        let mut w = self.eigenvectors.adjoint() * c;
        for (wi, &lam) in w.iter_mut().zip(self.eigenvalues.iter()) {
            *wi *= Complex64::cis(-t * lam);
        }
        let out = &self.eigenvectors * w;
        SpectralField::from_coeffs(grid, out.as_slice().to_vec())
    }
}

/// `exp(-i t H) u` via a Hermitian eigendecomposition of `h`.
pub fn exact_linear_evolve(
    h: &DMatrix<Complex64>,
    field: &SpectralField,
    t: f64,
) -> Result<SpectralField> {
    DenseEvolution::new(h)?.evolve(field, t)
}
