//! Time-splitting Fourier pseudospectral solvers for weakly perturbed
//! Schrödinger equations on periodic boxes, with step-size admissibility
//! checks and a convergence harness.

pub mod error;
pub mod flows;
pub mod harness;
pub mod integrators;
pub mod spectral;
pub mod stepsize;

pub use error::{Error, Result};
pub use flows::{
    dense_hamiltonian, exact_linear_evolve, free_flow, nonlinear_flow, potential_flow, DenseEvolution,
    NonlinearitySpec, PotentialSpec, Sign, ORACLE_MAX_N,
};
pub use integrators::{
    evolve, evolve_from, lie_adjoint_step, lie_step, order4_step, strang_step, triple_jump_weights,
    Equation, EvolveOptions, InitialData, Problem, Recorder, Scheme, Stage, StageKind, Stepper,
};
pub use spectral::{
    dft_forward, dft_inverse, extend, l2_discrete_norm, make_grid, project, sobolev_norm, Axis, Grid,
    SobolevIndex, SpectralField,
};
pub use stepsize::{
    check_diophantine, check_small_step, excluded_intervals, k_max, lambda_const, min_gap, riemann_zeta,
    small_step_bound, suggest_step, Certificate, EquationKind, RuleVariant, StepRule,
};
