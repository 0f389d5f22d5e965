//! Reference solutions, error metrics and the convergence experiments.

pub mod experiments;
pub mod metrics;
pub mod probe;
pub mod reference;
pub mod twist;

pub use experiments::{
    experiment_convergence, experiment_eps_scaling, experiment_error_growth, experiment_twist, tracked_run,
    ConvergenceResult, ConvergenceRow, EpsRow, GrowthRun, Horizon, Sweep, TwistRow,
};
pub use metrics::{fit_slope, line_fit, local_slopes, ErrorSeries, LineFit, SlopeFit};
pub use probe::{local_error_probe, midpoint_defect, ProbeRow, QUADRATURE_POINTS};
pub use reference::{error_series, reference_run, step_count, ErrorTracker, ReferenceMethod, ReferenceSolution, ReferenceSpec};
pub use twist::{twist_diagnostic, TwistTracker};
