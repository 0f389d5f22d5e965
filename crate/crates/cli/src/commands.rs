use std::path::Path;
use std::time::Instant;

use clap::ValueEnum;
use serde::Serialize;
use splitwave::error::Error as CoreError;
use splitwave::harness::{
    experiment_convergence, experiment_eps_scaling, experiment_error_growth, experiment_twist, local_error_probe,
    reference_run, step_count, Horizon, ReferenceSpec, Sweep,
};
use splitwave::{
    check_diophantine, check_small_step, evolve, min_gap, suggest_step, EquationKind, EvolveOptions, Problem,
    RuleVariant, Scheme, SpectralField, StepRule,
};

use crate::config::{ReferenceKind, RunConfig};
use crate::error::{CliError, CliResult};
use crate::output::{self, OutputFile, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ErrGrowth,
    ConvergeSpace,
    ConvergeTime,
    EpsScaling,
    LocalProbe,
    Twist,
}

impl ExperimentKind {
    pub fn file_name(self) -> &'static str {
        match self {
            Self::ErrGrowth => "err-growth.csv",
            Self::ConvergeSpace => "converge-space.csv",
            Self::ConvergeTime => "converge-time.csv",
            Self::EpsScaling => "eps-scaling.csv",
            Self::LocalProbe => "local-probe.csv",
            Self::Twist => "twist.csv",
        }
    }

    pub fn header(self) -> &'static [&'static str] {
        match self {
            Self::ErrGrowth => &["tau", "t", "eL2", "eH1", "eL2max", "eH1max"],
            Self::ConvergeSpace | Self::ConvergeTime => &["param", "eL2", "eH1"],
            Self::EpsScaling => &["eps", "t_final", "eH1", "ratio"],
            Self::LocalProbe => &["tau", "onestep_err", "F_norm", "ratio"],
            Self::Twist => &["eps", "diagnostic"],
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Verdict {
    pub tau: f64,
    pub small_step: bool,
    pub diophantine: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Derived {
    pub h: Vec<f64>,
    pub mu1: f64,
    pub k_max: u64,
    pub verdicts: Vec<Verdict>,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub version: &'static str,
    pub command: String,
    pub config: &'a RunConfig,
    pub problem: String,
    pub problem_hash: String,
    pub scheme: String,
    pub derived: Derived,
    pub outputs: Vec<OutputFile>,
    pub elapsed_seconds: f64,
}

fn derived(cfg: &RunConfig, problem: &Problem, taus: &[f64]) -> CliResult<Derived> {
    let mu1 = problem.grid.rule_frequency();
    let small = cfg.step_rule(Some(RuleVariant::SmallStep))?;
    let dio = cfg.step_rule(Some(RuleVariant::Diophantine))?;
    let mut seen: Vec<f64> = Vec::new();
    for &t in taus {
        if !seen.contains(&t) {
            seen.push(t);
        }
    }
    Ok(Derived {
        h: problem.grid.axes().iter().map(|ax| ax.h()).collect(),
        mu1,
        k_max: small.k_max(),
        verdicts: seen
            .into_iter()
            .map(|tau| Verdict {
                tau,
                small_step: small.is_admissible(tau, mu1),
                diophantine: dio.is_admissible(tau, mu1),
            })
            .collect(),
    })
}

/// The step to run with: the bare `stepping.tau`, or the rule's step after
/// it has been checked (or nudged when `suggest` is set).
pub fn resolve_tau(cfg: &RunConfig, problem: &Problem) -> CliResult<f64> {
    if let Some(tau) = cfg.stepping.tau {
        return Ok(tau);
    }
    let Some(r) = &cfg.stepping.rule else {
        return Err(CliError::config("stepping.tau or stepping.rule is required"));
    };
    let rule = cfg.step_rule(None)?;
    let mu1 = problem.grid.rule_frequency();
    if r.suggest {
        let radius = r.radius.unwrap_or(0.1 * r.tau);
        return suggest_step(r.tau, &rule, mu1, radius).map_err(|e| match e {
            CoreError::NoAdmissibleStepInRadius { .. } => CliError::Inadmissible(e.to_string()),
            other => other.into(),
        });
    }
    ensure_admissible(cfg, problem, &[r.tau])?;
    Ok(r.tau)
}

/// Every step in `taus` must pass the configured rule, when there is one.
fn ensure_admissible(cfg: &RunConfig, problem: &Problem, taus: &[f64]) -> CliResult<()> {
    if cfg.stepping.rule.is_none() {
        return Ok(());
    }
    let rule = cfg.step_rule(None)?;
    let mu1 = problem.grid.rule_frequency();
    match taus.iter().find(|&&t| !rule.is_admissible(t, mu1)) {
        Some(t) => Err(CliError::Inadmissible(format!(
            "tau = {t} fails the {:?} rule at mu1 = {mu1}",
            rule.variant
        ))),
        None => Ok(()),
    }
}

fn reference_spec(cfg: &RunConfig) -> CliResult<ReferenceSpec> {
    let r = cfg
        .reference
        .as_ref()
        .ok_or_else(|| CliError::config("this command needs a [reference] section"))?;
    Ok(match r.method {
        ReferenceKind::Exact => ReferenceSpec::exact(r.points.clone()),
        ReferenceKind::Splitting => {
            let tau = r.tau.ok_or_else(|| CliError::config("reference.tau is required for splitting"))?;
            ReferenceSpec::new(r.points.clone(), tau, Scheme::from_order(r.order)?)
        }
    })
}

fn required<T: Clone>(v: &Option<T>, name: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::config(format!("experiment.{name} is required")))
}

#[allow(clippy::too_many_arguments)]
fn finish(
    cfg: &RunConfig,
    dir: &Path,
    command: String,
    problem: &Problem,
    scheme: &Scheme,
    taus: &[f64],
    outputs: Vec<OutputFile>,
    start: Instant,
) -> CliResult<()> {
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
        problem: problem.describe(),
        problem_hash: output::problem_hash(problem),
        scheme: scheme.name().to_string(),
        derived: derived(cfg, problem, taus)?,
        outputs,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    };
    output::write_manifest(dir, &manifest)?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let start = Instant::now();
    let problem = cfg.build_problem()?;
    let scheme = cfg.scheme()?;
    let tau = resolve_tau(cfg, &problem)?;
    let t_end = cfg
        .stepping
        .t_end
        .ok_or_else(|| CliError::config("stepping.t_end is required for simulate"))?;
    let n = step_count(t_end, tau)?;
    let mut wanted = cfg
        .output
        .snapshot_times
        .iter()
        .map(|&t| step_count(t, tau))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(late) = wanted.iter().find(|&&k| k > n) {
        return Err(CliError::config(format!("snapshot at step {late} lies beyond t_end")));
    }
    wanted.push(n);
    if let Some(stride) = cfg.output.stride {
        wanted.extend((0..=n).step_by(stride));
    }
    wanted.sort_unstable();
    wanted.dedup();

    let mut snaps: Vec<(usize, SpectralField)> = Vec::with_capacity(wanted.len());
    let mut rec = |k: usize, _t: f64, f: &SpectralField| {
        if wanted.binary_search(&k).is_ok() {
            snaps.push((k, f.clone()));
        }
    };
    let opts = EvolveOptions {
        fuse: cfg.scheme.fuse,
        ..EvolveOptions::default()
    };
    evolve(&problem, &scheme, tau, n, opts, Some(&mut rec))?;

    output::ensure_dir(dir)?;
    let hash = output::problem_hash(&problem);
    let outputs = snaps
        .iter()
        .enumerate()
        .map(|(i, (k, f))| output::write_snapshot(dir, &format!("snapshot_{i:04}.bin"), f, *k as f64 * tau, &hash))
        .collect::<CliResult<Vec<_>>>()?;
    finish(cfg, dir, "simulate".into(), &problem, &scheme, &[tau], outputs, start)
}

pub fn reference(cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let start = Instant::now();
    let problem = cfg.build_problem()?;
    let spec = reference_spec(cfg)?;
    let mut times = cfg.output.snapshot_times.clone();
    times.extend(cfg.stepping.t_end);
    if times.is_empty() {
        return Err(CliError::config("reference needs output.snapshot_times or stepping.t_end"));
    }
    let sol = reference_run(&problem, &spec, &times)?;
    output::ensure_dir(dir)?;
    let hash = output::problem_hash(&problem.with_grid(sol.grid().clone()));
    let outputs = sol
        .snapshots()
        .enumerate()
        .map(|(i, (t, f))| output::write_snapshot(dir, &format!("reference_{i:04}.bin"), f, t, &hash))
        .collect::<CliResult<Vec<_>>>()?;
    let taus: Vec<f64> = sol.tau().into_iter().collect();
    let scheme = match &spec.method {
        splitwave::harness::ReferenceMethod::Splitting { scheme, .. } => scheme.clone(),
        splitwave::harness::ReferenceMethod::Exact => cfg.scheme()?,
    };
    finish(
        cfg,
        dir,
        format!("reference ({})", sol.method_name()),
        &problem,
        &scheme,
        &taus,
        outputs,
        start,
    )
}

pub fn experiment(kind: ExperimentKind, cfg: &RunConfig, dir: &Path) -> CliResult<()> {
    let start = Instant::now();
    let problem = cfg.build_problem()?;
    let scheme = cfg.scheme()?;
    let ex = &cfg.experiment;
    let horizon = || -> CliResult<Horizon> {
        Ok(Horizon::new(required(&ex.horizon_t, "horizon_t")?, required(&ex.horizon_power, "horizon_power")?))
    };
    let mut table = Table::new(kind.header());
    let taus: Vec<f64> = match kind {
        ExperimentKind::ErrGrowth => {
            let taus = required(&ex.taus, "taus")?;
            ensure_admissible(cfg, &problem, &taus)?;
            let runs = experiment_error_growth(
                &problem,
                &scheme,
                &taus,
                required(&ex.t_end, "t_end")?,
                required(&ex.sample_every, "sample_every")?,
                &reference_spec(cfg)?,
            )?;
            for run in &runs {
                let s = &run.series;
                for i in 0..s.len() {
                    table.push(
                        [run.tau, s.times[i], s.e_l2[i], s.e_h1[i], s.e_l2_max[i], s.e_h1_max[i]]
                            .map(Some)
                            .to_vec(),
                    );
                }
            }
            taus
        }
        ExperimentKind::ConvergeSpace | ExperimentKind::ConvergeTime => {
            let (sweep, taus) = if kind == ExperimentKind::ConvergeSpace {
                let tau = resolve_tau(cfg, &problem)?;
                (
                    Sweep::Space {
                        points: required(&ex.points, "points")?,
                        tau,
                    },
                    vec![tau],
                )
            } else {
                let taus = required(&ex.taus, "taus")?;
                ensure_admissible(cfg, &problem, &taus)?;
                (Sweep::Time { taus: taus.clone() }, taus)
            };
            let res = experiment_convergence(&problem, &scheme, &sweep, required(&ex.t_eval, "t_eval")?, &reference_spec(cfg)?)?;
            for r in &res.rows {
                table.push(vec![Some(r.param), Some(r.e_l2), Some(r.e_h1)]);
            }
            taus
        }
        ExperimentKind::EpsScaling => {
            let tau = resolve_tau(cfg, &problem)?;
            let rows = experiment_eps_scaling(
                &problem,
                &scheme,
                tau,
                &required(&ex.eps, "eps")?,
                horizon()?,
                &reference_spec(cfg)?,
            )?;
            for r in &rows {
                table.push(vec![Some(r.eps), Some(r.t_final), Some(r.e_h1), r.ratio]);
            }
            vec![tau]
        }
        ExperimentKind::LocalProbe => {
            let taus = required(&ex.taus, "taus")?;
            ensure_admissible(cfg, &problem, &taus)?;
            for r in local_error_probe(&problem, &taus)? {
                table.push(vec![Some(r.tau), Some(r.onestep_err), Some(r.f_norm), r.ratio]);
            }
            taus
        }
        ExperimentKind::Twist => {
            let tau = resolve_tau(cfg, &problem)?;
            for r in experiment_twist(&problem, &scheme, tau, &required(&ex.eps, "eps")?, horizon()?)? {
                table.push(vec![Some(r.eps), Some(r.diagnostic)]);
            }
            vec![tau]
        }
    };
    output::ensure_dir(dir)?;
    let out = output::write_table(dir, kind.file_name(), &table)?;
    let name = kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    finish(cfg, dir, format!("experiment {name}"), &problem, &scheme, &taus, vec![out], start)
}

/// Parameters of `check-step`.
#[derive(Debug, Clone)]
pub struct CheckStep {
    pub tau: f64,
    pub alpha: f64,
    pub tau0: f64,
    pub nu3: f64,
    pub mu1: f64,
    pub equation: EquationKind,
    pub suggest: bool,
    pub radius: Option<f64>,
}

/// Report lines and the exit status: 0 when `tau` passes either rule, else 1.
pub fn check_step(args: &CheckStep) -> CliResult<(Vec<String>, i32)> {
    if !(args.tau > 0.0 && args.tau.is_finite()) {
        return Err(CliError::config(format!("tau must be positive, got {}", args.tau)));
    }
    if !(args.mu1 > 0.0 && args.mu1.is_finite()) {
        return Err(CliError::config(format!("mu1 must be positive, got {}", args.mu1)));
    }
    let small = StepRule::new(RuleVariant::SmallStep, args.alpha, args.tau0, args.nu3, args.equation)?;
    let dio = StepRule::new(RuleVariant::Diophantine, args.alpha, args.tau0, args.nu3, args.equation)?;
    let (tau, mu1) = (args.tau, args.mu1);
    let ok_small = check_small_step(tau, args.alpha, args.tau0, mu1, args.equation);
    let ok_dio = check_diophantine(tau, &dio, mu1);
    let (gap, k) = min_gap(tau, small.k_max(), mu1);
    let verdict = |b: bool| if b { "admissible" } else { "inadmissible" };
    let mut lines = vec![
        format!("tau = {tau:e}, mu1 = {mu1:e}, equation = {:?}", args.equation),
        format!("K_max = {}", small.k_max()),
        format!("small-step: {} (bound {:e})", verdict(ok_small), small.small_step_bound(mu1)),
        format!("diophantine: {} (lambda = {:e})", verdict(ok_dio), dio.lambda(mu1)),
        format!("min_gap = {gap:e} at K = {k}"),
    ];
    for (name, ok, rule) in [("small-step", ok_small, &small), ("diophantine", ok_dio, &dio)] {
        if ok {
            let c = rule.certificate(mu1);
            lines.push(format!(
                "{name} certificate: C0 = {:e}, nu1 = {}, nu2 = {} (holds: {})",
                c.c0,
                c.nu1,
                c.nu2,
                c.holds(tau, mu1, rule.k_max())
            ));
        }
    }
    if args.suggest {
        let radius = args.radius.unwrap_or(0.1 * tau);
        match suggest_step(tau, &dio, mu1, radius) {
            Ok(s) => lines.push(format!("suggested tau = {s:.17e}")),
            Err(e) => lines.push(format!("no suggestion: {e}")),
        }
    }
    Ok((lines, if ok_small || ok_dio { 0 } else { 1 }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn args(tau: f64) -> CheckStep {
        CheckStep {
            tau,
            alpha: 0.5,
            tau0: 0.5,
            nu3: 1.0,
            mu1: 1.0,
            equation: EquationKind::Linear,
            suggest: false,
            radius: None,
        }
    }

    #[test]
    fn small_steps_pass() {
        let (lines, code) = check_step(&args(0.1)).unwrap();
        assert_eq!(code, 0);
        assert!(lines.iter().any(|l| l.starts_with("small-step: admissible")));
        assert!(lines.iter().any(|l| l.starts_with("small-step certificate") && l.ends_with("(holds: true)")));
    }

    #[test]
    fn resonant_step_fails_and_can_be_nudged() {
        let (lines, code) = check_step(&args(2.0 * PI)).unwrap();
        assert_eq!(code, 1);
        assert!(lines.iter().any(|l| l.starts_with("diophantine: inadmissible")));
        let (lines, _) = check_step(&CheckStep { suggest: true, ..args(2.0 * PI) }).unwrap();
        let s: f64 = lines
            .iter()
            .find_map(|l| l.strip_prefix("suggested tau = "))
            .unwrap()
            .parse()
            .unwrap();
        let rule = StepRule::with_defaults(RuleVariant::Diophantine, EquationKind::Linear);
        assert!(check_diophantine(s, &rule, 1.0));
        assert!((s - 2.0 * PI).abs() <= 0.2 * PI);
    }

    #[test]
    fn bad_inputs_are_config_errors() {
        assert_eq!(check_step(&args(-1.0)).unwrap_err().exit_code(), 2);
        assert_eq!(check_step(&CheckStep { alpha: 1.5, ..args(0.1) }).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn headers_match_the_documented_schemas() {
        assert_eq!(ExperimentKind::ErrGrowth.header().join(","), "tau,t,eL2,eH1,eL2max,eH1max");
        assert_eq!(ExperimentKind::ConvergeTime.header().join(","), "param,eL2,eH1");
        assert_eq!(ExperimentKind::EpsScaling.header().join(","), "eps,t_final,eH1,ratio");
        assert_eq!(ExperimentKind::LocalProbe.header().join(","), "tau,onestep_err,F_norm,ratio");
        assert_eq!(ExperimentKind::Twist.header().join(","), "eps,diagnostic");
    }
}
