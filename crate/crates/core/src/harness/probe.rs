use std::num::NonZeroUsize;

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::flows::{dense_hamiltonian, free_flow, DenseEvolution, PotentialSpec};
use crate::integrators::{strang_step, Equation, Problem};
use crate::spectral::{sobolev_norm, SobolevIndex, SpectralField};

/// Quadrature nodes used for the integral in [`midpoint_defect`].
pub const QUADRATURE_POINTS: usize = 32;

/// `f(s) = exp(i(tau - s) Delta) [V exp(is Delta) u]`, with `V` applied nodewise.
fn interaction(u: &SpectralField, v: &[f64], tau: f64, s: f64) -> SpectralField {
    let mut w = u.clone();
    free_flow(&mut w, s);
    for (z, &vj) in w.values_mut().iter_mut().zip(v) {
        *z *= vj;
    }
    free_flow(&mut w, tau - s);
    w
}

/// The leading local-error term of one Strang step:
/// `-i eps tau f(tau/2) + i eps int_0^tau f(s) ds`, the integral by Gauss-Legendre.
pub fn midpoint_defect(
    u: &SpectralField,
    potential: &PotentialSpec,
    eps: f64,
    tau: f64,
) -> Result<SpectralField> {
    let grid = u.grid();
    let v = potential.sample(grid)?;
    let rule = GaussLegendre::new(NonZeroUsize::new(QUADRATURE_POINTS).expect("non-zero"));
    let mut integral = vec![Complex64::new(0.0, 0.0); grid.len()];
    for &(x, w) in rule.as_node_weight_pairs() {
        let s = 0.5 * tau * (x + 1.0);
        let f = interaction(u, &v, tau, s);
        for (acc, c) in integral.iter_mut().zip(f.coeffs()) {
            *acc += 0.5 * tau * w * c;
        }
    }
    let mid = interaction(u, &v, tau, 0.5 * tau);
    let i = Complex64::i();
    let coeffs = mid
        .coeffs()
        .iter()
        .zip(&integral)
        .map(|(m, q)| i * eps * (q - tau * m))
        .collect();
    SpectralField::from_coeffs(grid, coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeRow {
    pub tau: f64,
    /// `||strang_step(u, tau) - exp(-i tau H) u||_{H1}`.
    pub onestep_err: f64,
    /// `||F||_{H1}` of [`midpoint_defect`].
    pub f_norm: f64,
    /// One-step error of the previous row divided by this row's.
    pub ratio: Option<f64>,
}

impl ProbeRow {
    /// `||F||_{H1} / (eps tau^3)`.
    pub fn defect_constant(&self, eps: f64) -> f64 {
        self.f_norm / (eps * self.tau.powi(3))
    }
}

/// One Strang step from the initial datum of a linear 1D problem, compared
/// with the dense exponential of the collocation Hamiltonian.
pub fn local_error_probe(problem: &Problem, taus: &[f64]) -> Result<Vec<ProbeRow>> {
    let Equation::Linear { potential } = &problem.equation else {
        return Err(Error::InvalidParameter(
            "the local-error probe needs a linear problem".into(),
        ));
    };
    if taus.is_empty() {
        return Err(Error::InvalidParameter("step list is empty".into()));
    }
    let h = dense_hamiltonian(&problem.grid, potential, problem.eps)?;
    let exact = DenseEvolution::new(&h)?;
    let u = problem.initial_field();
    let mut rows: Vec<ProbeRow> = Vec::with_capacity(taus.len());
    for &tau in taus {
        let split = strang_step(&u, problem, tau)?;
        let reference = exact.evolve(&u, tau)?;
        let diff: Vec<_> = split.coeffs().iter().zip(reference.coeffs()).map(|(a, b)| a - b).collect();
        let onestep_err = sobolev_norm(&SpectralField::from_coeffs(&problem.grid, diff)?, SobolevIndex::H1);
        let f_norm = sobolev_norm(&midpoint_defect(&u, potential, problem.eps, tau)?, SobolevIndex::H1);
        let ratio = rows.last().map(|r| r.onestep_err / onestep_err);
        rows.push(ProbeRow {
            tau,
            onestep_err,
            f_norm,
            ratio,
        });
    }
    Ok(rows)
}
