use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use splitwave::{
    Axis, Equation, EquationKind, Grid, NonlinearitySpec, Problem, RuleVariant, Scheme, Sign, StepRule,
};

use crate::error::{CliError, CliResult};
use crate::registry;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    #[serde(default)]
    pub scheme: SchemeSection,
    #[serde(default)]
    pub stepping: SteppingSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    pub reference: Option<ReferenceSection>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Linear,
    Nlse,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Named {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySection {
    #[serde(default = "defocusing")]
    pub sign: String,
    #[serde(default = "one")]
    pub strength: f64,
}

fn defocusing() -> String {
    "defocusing".into()
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    #[serde(default = "one")]
    pub eps: f64,
    /// `[a, b]` per axis.
    pub domain: Vec<[f64; 2]>,
    /// Points per axis.
    pub points: Vec<usize>,
    pub potential: Option<Named>,
    pub nonlinearity: Option<NonlinearitySection>,
    pub initial: Named,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    #[serde(default = "two")]
    pub order: u8,
    /// Merge adjacent kinetic stages; `simulate` honours `false` for testing.
    #[serde(default = "yes")]
    pub fuse: bool,
}

fn yes() -> bool {
    true
}

fn two() -> u8 {
    2
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self { order: 2, fuse: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VariantName {
    SmallStep,
    Diophantine,
}

impl From<VariantName> for RuleVariant {
    fn from(v: VariantName) -> Self {
        match v {
            VariantName::SmallStep => RuleVariant::SmallStep,
            VariantName::Diophantine => RuleVariant::Diophantine,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleSection {
    pub variant: VariantName,
    /// Requested step; checked against the rule, or nudged when `suggest` is set.
    pub tau: f64,
    #[serde(default = "half")]
    pub alpha: f64,
    #[serde(default = "half")]
    pub tau0: f64,
    #[serde(default = "one")]
    pub nu3: f64,
    #[serde(default)]
    pub suggest: bool,
    /// Search radius for `suggest`; defaults to a tenth of `tau`.
    pub radius: Option<f64>,
}

fn half() -> f64 {
    0.5
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteppingSection {
    pub tau: Option<f64>,
    pub rule: Option<RuleSection>,
    /// Final time of `simulate`.
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: Option<PathBuf>,
    /// `simulate` also writes a snapshot every `stride` steps.
    pub stride: Option<usize>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}


#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub taus: Option<Vec<f64>>,
    pub points: Option<Vec<usize>>,
    pub eps: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub sample_every: Option<f64>,
    pub t_eval: Option<f64>,
    pub horizon_t: Option<f64>,
    pub horizon_power: Option<i32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceKind {
    Splitting,
    Exact,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSection {
    pub method: ReferenceKind,
    pub points: Vec<usize>,
    pub tau: Option<f64>,
    #[serde(default = "four")]
    pub order: u8,
}

fn four() -> u8 {
    4
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(CliError::io(format!("reading {}", path.display())))?;
        Self::parse(&text)
    }

    fn validate(&self) -> CliResult<()> {
        let p = &self.problem;
        if p.domain.len() != p.points.len() {
            return Err(CliError::config("problem.domain and problem.points need one entry per axis"));
        }
        match (p.kind, &p.potential, &p.nonlinearity) {
            (ProblemKind::Linear, _, Some(_)) => {
                return Err(CliError::config("a linear problem takes a potential, not a nonlinearity"))
            }
            (ProblemKind::Nlse, Some(_), _) => {
                return Err(CliError::config("an nlse problem takes a nonlinearity, not a potential"))
            }
            _ => {}
        }
        let s = &self.stepping;
        if s.tau.is_some() && s.rule.is_some() {
            return Err(CliError::config("give either stepping.tau or stepping.rule, not both"));
        }
        let ex = &self.experiment;
        let mut numbers: Vec<f64> = vec![p.eps];
        numbers.extend(p.domain.iter().flatten());
        numbers.extend(s.tau.iter().chain(&s.t_end));
        numbers.extend(s.rule.iter().flat_map(|r| [r.tau, r.alpha, r.tau0, r.nu3]));
        numbers.extend(&self.output.snapshot_times);
        numbers.extend(ex.taus.iter().flatten().chain(ex.eps.iter().flatten()));
        numbers.extend(ex.t_end.iter().chain(&ex.sample_every).chain(&ex.t_eval).chain(&ex.horizon_t));
        numbers.extend(self.reference.iter().flat_map(|r| r.tau));
        if numbers.into_iter().any(|x| !x.is_finite()) {
            return Err(CliError::config("all numeric fields must be finite"));
        }
        if self.output.stride == Some(0) {
            return Err(CliError::config("output.stride must be at least 1"));
        }
        Ok(())
    }

    pub fn equation_kind(&self) -> EquationKind {
        match self.problem.kind {
            ProblemKind::Linear => EquationKind::Linear,
            ProblemKind::Nlse => EquationKind::Nlse,
        }
    }

    pub fn grid(&self) -> CliResult<Grid> {
        let axes = self
            .problem
            .domain
            .iter()
            .zip(&self.problem.points)
            .map(|(&[a, b], &n)| Axis::new(a, b, n))
            .collect();
        Ok(Grid::new(axes)?)
    }

    pub fn build_problem(&self) -> CliResult<Problem> {
        let p = &self.problem;
        let equation = match p.kind {
            ProblemKind::Linear => {
                let pot = match &p.potential {
                    Some(n) => registry::potential(&n.name, &n.params)?,
                    None => registry::potential("zero", &BTreeMap::new())?,
                };
                Equation::Linear { potential: pot }
            }
            ProblemKind::Nlse => {
                let nl = p.nonlinearity.clone().unwrap_or(NonlinearitySection {
                    sign: defocusing(),
                    strength: 1.0,
                });
                let sign = match nl.sign.as_str() {
                    "defocusing" => Sign::Defocusing,
                    "focusing" => Sign::Focusing,
                    other => {
                        return Err(CliError::config(format!(
                            "nonlinearity sign must be 'defocusing' or 'focusing', got '{other}'"
                        )))
                    }
                };
                Equation::CubicNlse {
                    nonlinearity: NonlinearitySpec::new(sign, nl.strength)?,
                }
            }
        };
        let initial = registry::initial_data(&p.initial.name, &p.initial.params, &p.domain)?;
        Ok(Problem::new(equation, p.eps, self.grid()?, initial)?)
    }

    pub fn scheme(&self) -> CliResult<Scheme> {
        Ok(Scheme::from_order(self.scheme.order)?)
    }

    /// The configured rule, or the default small-step rule when only a bare
    /// step was given (used for manifest verdicts).
    pub fn step_rule(&self, variant: Option<RuleVariant>) -> CliResult<StepRule> {
        let kind = self.equation_kind();
        Ok(match &self.stepping.rule {
            Some(r) => StepRule::new(variant.unwrap_or(r.variant.into()), r.alpha, r.tau0, r.nu3, kind)?,
            None => StepRule::with_defaults(variant.unwrap_or(RuleVariant::SmallStep), kind),
        })
    }

    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.output.directory.clone())
            .unwrap_or_else(|| PathBuf::from("out"))
    }
}
