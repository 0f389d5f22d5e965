use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

const ZETA_TERMS: u32 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleVariant {
    /// `tau` below an explicit small-step bound.
    SmallStep,
    /// `tau` kept away from every resonance `2 l pi / (mu1^2 K)`.
    Diophantine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationKind {
    Linear,
    Nlse,
}

/// A step-size admissibility rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRule {
    pub variant: RuleVariant,
    pub alpha: f64,
    pub tau0: f64,
    pub nu3: f64,
    pub equation: EquationKind,
    zeta: f64,
}

impl StepRule {
    pub const DEFAULT_ALPHA: f64 = 0.5;
    pub const DEFAULT_TAU0: f64 = 0.5;
    pub const DEFAULT_NU3: f64 = 1.0;

    pub fn new(
        variant: RuleVariant,
        alpha: f64,
        tau0: f64,
        nu3: f64,
        equation: EquationKind,
    ) -> Result<Self> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {v}")))
            }
        };
        unit("alpha", alpha)?;
        unit("tau0", tau0)?;
        let zeta = riemann_zeta(1.0 + nu3).map_err(|_| Error::NonconvergentSeries { nu3 })?;
        Ok(Self {
            variant,
            alpha,
            tau0,
            nu3,
            equation,
            zeta,
        })
    }

    /// Default parameters `alpha = tau0 = 1/2`, `nu3 = 1`.
    pub fn with_defaults(variant: RuleVariant, equation: EquationKind) -> Self {
        Self::new(
            variant,
            Self::DEFAULT_ALPHA,
            Self::DEFAULT_TAU0,
            Self::DEFAULT_NU3,
            equation,
        )
        .expect("default rule parameters are valid")
    }

    /// Largest interaction index: `ceil(1/tau0)^2`, doubled for the cubic equation.
    pub fn k_max(&self) -> u64 {
        k_max(self.tau0, self.equation)
    }

    /// `alpha pi mu1^(2 + 2 nu3) / (4 zeta(1 + nu3))`.
    pub fn lambda(&self, mu1: f64) -> f64 {
        self.alpha * PI * mu1.powf(2.0 + 2.0 * self.nu3) / (4.0 * self.zeta)
    }

    /// Supremum of the small-step interval.
    pub fn small_step_bound(&self, mu1: f64) -> f64 {
        small_step_bound(self.alpha, self.tau0, mu1, self.equation)
    }

    /// Membership under this rule's own variant.
    pub fn is_admissible(&self, tau: f64, mu1: f64) -> bool {
        match self.variant {
            RuleVariant::SmallStep => {
                check_small_step(tau, self.alpha, self.tau0, mu1, self.equation)
            }
            RuleVariant::Diophantine => check_diophantine(tau, self, mu1),
        }
    }

    /// The lower bound on `|1 - exp(i tau mu1^2 K)|` that admissible steps
    /// are guaranteed to satisfy.
    pub fn certificate(&self, mu1: f64) -> Certificate {
        match self.variant {
            RuleVariant::SmallStep => Certificate {
                c0: (self.alpha * PI).sin() / (self.alpha * PI),
                nu1: 1.0,
                nu2: -1.0,
            },
            RuleVariant::Diophantine => Certificate {
                c0: 2.0 / PI * self.lambda(mu1),
                nu1: 0.0,
                nu2: 1.0 + self.nu3,
            },
        }
    }
}

/// Constants `(C0, nu1, nu2)` of the gap bound `C0 tau^nu1 / (mu1^2 K)^nu2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Certificate {
    pub c0: f64,
    pub nu1: f64,
    pub nu2: f64,
}

impl Certificate {
    pub fn bound(&self, tau: f64, mu1: f64, k: u64) -> f64 {
        self.c0 * tau.powf(self.nu1) / (mu1 * mu1 * k as f64).powf(self.nu2)
    }

    /// Whether every `K` in `1..=k_max` satisfies the bound at `tau`.
    pub fn holds(&self, tau: f64, mu1: f64, k_max: u64) -> bool {
        (1..=k_max).all(|k| gap(tau, mu1, k) >= self.bound(tau, mu1, k))
    }
}

pub fn k_max(tau0: f64, equation: EquationKind) -> u64 {
    let c = (1.0 / tau0).ceil() as u64;
    match equation {
        EquationKind::Linear => c * c,
        EquationKind::Nlse => 2 * c * c,
    }
}

/// `zeta(p) = sum_{k >= 1} k^-p` for `p > 1`, accurate to about 1e-13.
///
/// The first million terms are summed from the smallest upwards with
/// compensation; the remainder uses the Euler-Maclaurin tail.
pub fn riemann_zeta(p: f64) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<u64, f64>>> = OnceLock::new();
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::NonconvergentSeries { nu3: p - 1.0 });
    }
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&z) = cache.lock().unwrap_or_else(|e| e.into_inner()).get(&p.to_bits()) {
        return Ok(z);
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for k in (1..=ZETA_TERMS).rev() {
        let y = (k as f64).powf(-p) - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    let m = ZETA_TERMS as f64;
    let tail = m.powf(1.0 - p) / (p - 1.0) - 0.5 * m.powf(-p) + p * m.powf(-p - 1.0) / 12.0;
    let z = sum + tail;
    cache.lock().unwrap_or_else(|e| e.into_inner()).insert(p.to_bits(), z);
    Ok(z)
}

/// `alpha pi mu1^(2 + 2 nu3) / (4 zeta(1 + nu3))`.
pub fn lambda_const(alpha: f64, nu3: f64, mu1: f64) -> Result<f64> {
    if nu3.is_nan() || nu3 <= 0.0 {
        return Err(Error::NonconvergentSeries { nu3 });
    }
    let zeta = riemann_zeta(1.0 + nu3)?;
    Ok(alpha * PI * mu1.powf(2.0 + 2.0 * nu3) / (4.0 * zeta))
}

/// `alpha c pi tau0^2 / (mu1^2 (1 + tau0)^2)` with `c = 2` (linear) or `c = 1` (cubic).
pub fn small_step_bound(alpha: f64, tau0: f64, mu1: f64, equation: EquationKind) -> f64 {
    let c = match equation {
        EquationKind::Linear => 2.0,
        EquationKind::Nlse => 1.0,
    };
    alpha * c * PI * tau0 * tau0 / (mu1 * mu1 * (1.0 + tau0) * (1.0 + tau0))
}

pub fn check_small_step(tau: f64, alpha: f64, tau0: f64, mu1: f64, equation: EquationKind) -> bool {
    tau > 0.0 && tau < small_step_bound(alpha, tau0, mu1, equation)
}

/// Whether `|tau - 2 l pi/(mu1^2 K)| >= lambda/(mu1^2 K)^(2 + nu3)` for all
/// `1 <= K <= K_max` and `l >= 0`.
pub fn check_diophantine(tau: f64, rule: &StepRule, mu1: f64) -> bool {
    if tau.is_nan() || tau <= 0.0 {
        return false;
    }
    let lambda = rule.lambda(mu1);
    let m2 = mu1 * mu1;
    (1..=rule.k_max()).all(|k| {
        let mk = m2 * k as f64;
        let width = lambda / mk.powf(2.0 + rule.nu3);
        let x = tau * mk / (2.0 * PI);
        [x.floor(), x.ceil()]
            .iter()
            .filter(|&&l| l >= 0.0)
            .all(|&l| (tau - 2.0 * l * PI / mk).abs() >= width)
    })
}

fn gap(tau: f64, mu1: f64, k: u64) -> f64 {
    (2.0 * (0.5 * tau * mu1 * mu1 * k as f64).sin()).abs()
}

/// `min_{0 < |K| <= K_max} |1 - exp(i tau mu1^2 K)|` and the smallest
/// positive minimising `K`.
pub fn min_gap(tau: f64, k_max: u64, mu1: f64) -> (f64, u64) {
    (1..=k_max.max(1))
        .map(|k| (gap(tau, mu1, k), k))
        .fold((f64::INFINITY, 0), |best, cur| if cur.0 < best.0 { cur } else { best })
}

/// Open excluded intervals of the diophantine rule that meet `[lo, hi]`,
/// merged and sorted.
pub fn excluded_intervals(rule: &StepRule, mu1: f64, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let lambda = rule.lambda(mu1);
    let m2 = mu1 * mu1;
    let mut raw = Vec::new();
    for k in 1..=rule.k_max() {
        let mk = m2 * k as f64;
        let width = lambda / mk.powf(2.0 + rule.nu3);
        let spacing = 2.0 * PI / mk;
        let first = ((lo - width) / spacing).floor().max(0.0) as u64;
        let last = ((hi + width) / spacing).ceil().max(0.0) as u64;
        for l in first..=last {
            let c = l as f64 * spacing;
            if c + width > lo && c - width < hi {
                raw.push((c - width, c + width));
            }
        }
    }
    raw.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
    for (a, b) in raw {
        match merged.last_mut() {
            Some(last) if a < last.1 => last.1 = last.1.max(b),
            _ => merged.push((a, b)),
        }
    }
    merged
}

/// The admissible step nearest `target` within `radius`; `target` itself if
/// it already passes.
pub fn suggest_step(target: f64, rule: &StepRule, mu1: f64, radius: f64) -> Result<f64> {
    if !(target > 0.0 && target.is_finite()) {
        return Err(Error::InvalidParameter(format!("target step must be positive, got {target}")));
    }
    if rule.is_admissible(target, mu1) {
        return Ok(target);
    }
    let none = Error::NoAdmissibleStepInRadius { target, radius };
    let candidate = match rule.variant {
        RuleVariant::SmallStep => {
            let c = rule.small_step_bound(mu1).next_down();
            (c > 0.0 && rule.is_admissible(c, mu1)).then_some(c)
        }
        RuleVariant::Diophantine => {
            let blocks = excluded_intervals(rule, mu1, target, target);
            let (a, b) = *blocks.iter().find(|(a, b)| *a < target && target < *b).ok_or(none.clone())?;
            let below = nudge(a, rule, mu1, f64::next_down).filter(|&t| t > 0.0);
            let above = nudge(b, rule, mu1, f64::next_up);
            match (below, above) {
                (Some(lo), Some(hi)) => Some(if target - lo <= hi - target { lo } else { hi }),
                (lo, hi) => lo.or(hi),
            }
        }
    };
    candidate.filter(|&c| (c - target).abs() <= radius).ok_or(none)
}

fn nudge(mut t: f64, rule: &StepRule, mu1: f64, step: fn(f64) -> f64) -> Option<f64> {
    for _ in 0..64 {
        if t > 0.0 && check_diophantine(t, rule, mu1) {
            return Some(t);
        }
        t = step(t);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dio(eq: EquationKind) -> StepRule {
        StepRule::with_defaults(RuleVariant::Diophantine, eq)
    }

    #[test]
    fn zeta_matches_closed_forms() {
        assert!((riemann_zeta(2.0).unwrap() - PI * PI / 6.0).abs() < 1e-12);
        assert!((riemann_zeta(4.0).unwrap() - PI.powi(4) / 90.0).abs() < 1e-12);
        assert!((riemann_zeta(1.5).unwrap() - 2.612_375_348_685_488).abs() < 1e-12);
        assert!(riemann_zeta(1.0).is_err());
    }

    #[test]
    fn lambda_examples() {
        let l = lambda_const(0.5, 1.0, 1.0).unwrap();
        assert!((l - 3.0 / (4.0 * PI)).abs() < 1e-12);
        let l2 = lambda_const(0.5, 1.0, 2.0).unwrap();
        assert!((l2 / l - 16.0).abs() < 1e-12);
        assert!(lambda_const(1e-9, 1.0, 1.0).unwrap() < 1e-9);
        assert_eq!(lambda_const(0.5, 0.0, 1.0), Err(Error::NonconvergentSeries { nu3: 0.0 }));
        assert!(matches!(
            StepRule::new(RuleVariant::Diophantine, 0.5, 0.5, -1.0, EquationKind::Linear),
            Err(Error::NonconvergentSeries { .. })
        ));
        assert!((dio(EquationKind::Linear).lambda(1.0) - l).abs() < 1e-15);
    }

    #[test]
    fn k_max_values() {
        assert_eq!(k_max(0.5, EquationKind::Linear), 4);
        assert_eq!(k_max(0.5, EquationKind::Nlse), 8);
        assert_eq!(k_max(0.3, EquationKind::Linear), 16);
    }

    #[test]
    fn small_step_examples() {
        let lin = small_step_bound(0.5, 0.5, 1.0, EquationKind::Linear);
        assert!((lin - PI / 9.0).abs() < 1e-15);
        assert!(check_small_step(0.1, 0.5, 0.5, 1.0, EquationKind::Linear));
        assert!(check_small_step(0.2, 0.5, 0.5, 1.0, EquationKind::Linear));
        assert!(!check_small_step(0.35, 0.5, 0.5, 1.0, EquationKind::Linear));
        let nl = small_step_bound(0.5, 0.5, 1.0, EquationKind::Nlse);
        assert_eq!(nl, lin / 2.0);
        assert!(check_small_step(0.1, 0.5, 0.5, 1.0, EquationKind::Nlse));
        assert!(!check_small_step(0.2, 0.5, 0.5, 1.0, EquationKind::Nlse));
        assert!(!check_small_step(0.0, 0.5, 0.5, 1.0, EquationKind::Linear));
        assert!(!check_small_step(lin, 0.5, 0.5, 1.0, EquationKind::Linear));
    }

    #[test]
    fn diophantine_examples() {
        let r = dio(EquationKind::Linear);
        assert!(!check_diophantine(2.0 * PI, &r, 1.0));
        assert!(!check_diophantine(1e-3, &r, 1.0));
        assert!(check_diophantine(1.0, &r, 1.0));
        // the K = 1 exclusion around 2 pi has half-width lambda
        let lambda = r.lambda(1.0);
        assert!(!check_diophantine(2.0 * PI + 0.99 * lambda, &r, 1.0));
        assert!(check_diophantine(2.0 * PI + 1.01 * lambda, &r, 1.0));
    }

    #[test]
    fn min_gap_examples() {
        let (g, k) = min_gap(2.0 * PI, 4, 1.0);
        assert!(g < 1e-15);
        assert_eq!(k, 1);
        let (g, k) = min_gap(PI, 4, 1.0);
        assert!(g < 1e-15 && k == 2);
    }

    #[test]
    fn suggest_examples() {
        let r = dio(EquationKind::Linear);
        assert_eq!(suggest_step(1.0, &r, 1.0, 0.1).unwrap(), 1.0);
        let lambda = r.lambda(1.0);
        let s = suggest_step(2.0 * PI, &r, 1.0, 1.0).unwrap();
        assert!(check_diophantine(s, &r, 1.0));
        assert!((s - 2.0 * PI).abs() >= lambda);
        assert!((s - 2.0 * PI).abs() < lambda * (1.0 + 1e-12));
        assert!(matches!(
            suggest_step(2.0 * PI, &r, 1.0, 0.5 * lambda),
            Err(Error::NoAdmissibleStepInRadius { .. })
        ));
        let ss = StepRule::with_defaults(RuleVariant::SmallStep, EquationKind::Linear);
        let s = suggest_step(0.4, &ss, 1.0, 0.1).unwrap();
        assert!(ss.is_admissible(s, 1.0) && s > 0.34);
        assert!(suggest_step(1.0, &ss, 1.0, 0.1).is_err());
    }

    #[test]
    fn excluded_intervals_cover_exactly_the_rejected_steps() {
        let r = dio(EquationKind::Linear);
        let iv = excluded_intervals(&r, 1.0, 0.0, 2.0 * PI);
        for w in iv.windows(2) {
            assert!(w[0].1 <= w[1].0);
        }
        for i in 1..20_000 {
            let tau = i as f64 * 2.0 * PI / 20_000.0;
            let inside = iv.iter().any(|&(a, b)| a < tau && tau < b);
            assert_eq!(inside, !check_diophantine(tau, &r, 1.0), "tau = {tau}");
        }
    }

    #[test]
    fn excluded_measure_is_bounded() {
        let r = dio(EquationKind::Linear);
        let top = 2.0 * PI;
        let measure: f64 = excluded_intervals(&r, 1.0, 0.0, top)
            .iter()
            .map(|&(a, b)| b.min(top) - a.max(0.0))
            .sum();
        assert!(measure <= 0.5 * PI / 2.0 * 1.05, "{measure}");
        assert!(top - measure > 1.5 * PI);
    }

    #[test]
    fn small_step_monotone_in_parameters() {
        let b = |a, t0| small_step_bound(a, t0, 1.0, EquationKind::Linear);
        assert!(b(0.6, 0.5) > b(0.5, 0.5));
        assert!(b(0.5, 0.4) < b(0.5, 0.5));
    }

    proptest! {
        #[test]
        fn small_step_certifies_gap(frac in 0.0f64..1.0, alpha in 0.05f64..0.95, tau0 in 0.05f64..0.95,
                                    mu1 in 0.5f64..4.0, nl in any::<bool>()) {
            let eq = if nl { EquationKind::Nlse } else { EquationKind::Linear };
            let rule = StepRule::new(RuleVariant::SmallStep, alpha, tau0, 1.0, eq).unwrap();
            let tau = frac * rule.small_step_bound(mu1);
            prop_assume!(rule.is_admissible(tau, mu1));
            let cert = rule.certificate(mu1);
            for k in 1..=rule.k_max() {
                prop_assert!(gap(tau, mu1, k) >= cert.bound(tau, mu1, k) * (1.0 - 1e-12));
            }
        }

        #[test]
        fn diophantine_certifies_gap(tau in 1e-3f64..20.0, nu3 in 0.5f64..2.0, mu1 in 0.5f64..2.0) {
            let rule = StepRule::new(RuleVariant::Diophantine, 0.5, 0.5, nu3, EquationKind::Linear).unwrap();
            prop_assume!(check_diophantine(tau, &rule, mu1));
            let cert = rule.certificate(mu1);
            for k in 1..=rule.k_max() {
                prop_assert!(gap(tau, mu1, k) >= cert.bound(tau, mu1, k) * (1.0 - 1e-9));
            }
        }

        #[test]
        fn translation_preserves_admissibility(tau in 1e-3f64..6.0, mu1 in 0.5f64..2.0, shift in 1u32..4) {
            let rule = dio(EquationKind::Nlse);
            let period = 2.0 * PI / (mu1 * mu1);
            let moved = tau + shift as f64 * period;
            if check_diophantine(tau, &rule, mu1) {
                prop_assert!(check_diophantine(moved, &rule, mu1));
            }
        }

        #[test]
        fn suggestions_are_admissible(tau in 0.01f64..12.0) {
            let rule = dio(EquationKind::Linear);
            let s = suggest_step(tau, &rule, 1.0, 1.0).unwrap();
            prop_assert!(check_diophantine(s, &rule, 1.0));
            prop_assert!((s - tau).abs() <= rule.lambda(1.0) + 1e-12);
        }

        #[test]
        fn min_gap_is_bounded(tau in 0.0f64..100.0, k in 1u64..40) {
            let (g, arg) = min_gap(tau, k, 1.3);
            prop_assert!((0.0..=2.0).contains(&g));
            prop_assert!(arg >= 1 && arg <= k);
        }
    }
}
