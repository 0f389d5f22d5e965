//! Named potentials and initial data that configs can refer to.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use splitwave::{InitialData, PotentialSpec};

use crate::error::{CliError, CliResult};

/// Looks up `key` in `params`, falling back to `default`, and rejects any
/// parameter the entry does not know about.
fn take(
    kind: &str,
    name: &str,
    params: &BTreeMap<String, f64>,
    known: &[(&str, f64)],
) -> CliResult<Vec<f64>> {
    if let Some(extra) = params.keys().find(|k| !known.iter().any(|(n, _)| n == *k)) {
        return Err(CliError::config(format!("{kind} '{name}' has no parameter '{extra}'")));
    }
    known
        .iter()
        .map(|(key, default)| {
            let v = params.get(*key).copied().unwrap_or(*default);
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::config(format!("{kind} '{name}': {key} must be finite")))
            }
        })
        .collect()
}

pub const POTENTIALS: &[&str] = &["zero", "cos2pi", "sine", "cosine"];
pub const INITIAL_DATA: &[&str] = &["quartic", "rational-sine", "rational-sine-2d", "plane-wave"];

pub fn potential(name: &str, params: &BTreeMap<String, f64>) -> CliResult<PotentialSpec> {
    let p = |known| take("potential", name, params, known);
    Ok(match name {
        "zero" => {
            p(&[])?;
            PotentialSpec::Zero
        }
        "cos2pi" => {
            let v = p(&[("amplitude", 5.0)])?;
            PotentialSpec::cosine(v[0], 2.0 * PI)
        }
        "sine" => {
            let v = p(&[("amplitude", 1.0), ("wavenumber", 1.0)])?;
            PotentialSpec::sine(v[0], v[1])
        }
        "cosine" => {
            let v = p(&[("amplitude", 1.0), ("wavenumber", 1.0)])?;
            PotentialSpec::cosine(v[0], v[1])
        }
        other => {
            return Err(CliError::config(format!(
                "unknown potential '{other}' (known: {})",
                POTENTIALS.join(", ")
            )))
        }
    })
}

pub fn initial_data(name: &str, params: &BTreeMap<String, f64>, domain: &[[f64; 2]]) -> CliResult<InitialData> {
    let p = |known| take("initial data", name, params, known);
    Ok(match name {
        "quartic" => InitialData::quartic_bump(p(&[("amplitude", 5.0)])?[0]),
        "rational-sine" => InitialData::rational_sine(p(&[("shift", 2.0)])?[0]),
        "rational-sine-2d" => {
            p(&[])?;
            InitialData::rational_sine_2d()
        }
        "plane-wave" => {
            let l = p(&[("index", 1.0)])?[0];
            if l.fract() != 0.0 {
                return Err(CliError::config("plane-wave index must be an integer"));
            }
            let [a, b] = domain[0];
            InitialData::plane_wave(a, b, l as i64)
        }
        other => {
            return Err(CliError::config(format!(
                "unknown initial data '{other}' (known: {})",
                INITIAL_DATA.join(", ")
            )))
        }
    })
}
