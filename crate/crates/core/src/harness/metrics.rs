use crate::error::{Error, Result};

/// Error time series against a reference, with running maxima.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorSeries {
    pub times: Vec<f64>,
    pub e_l2: Vec<f64>,
    pub e_h1: Vec<f64>,
    pub e_l2_max: Vec<f64>,
    pub e_h1_max: Vec<f64>,
}

impl ErrorSeries {
    pub fn push(&mut self, t: f64, e_l2: f64, e_h1: f64) {
        let m_l2 = self.e_l2_max.last().copied().unwrap_or(0.0).max(e_l2);
        let m_h1 = self.e_h1_max.last().copied().unwrap_or(0.0).max(e_h1);
        self.times.push(t);
        self.e_l2.push(e_l2);
        self.e_h1.push(e_h1);
        self.e_l2_max.push(m_l2);
        self.e_h1_max.push(m_h1);
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// The last recorded `(t, e_L2, e_H1)`.
    pub fn last(&self) -> Option<(f64, f64, f64)> {
        let i = self.len().checked_sub(1)?;
        Some((self.times[i], self.e_l2[i], self.e_h1[i]))
    }

    /// Slope, intercept and r² of a straight line through `e_L2,max(t)`.
    pub fn l2_max_growth(&self) -> Result<LineFit> {
        line_fit(&self.times, &self.e_l2_max)
    }
}

/// Ordinary least squares `y ~ slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::DegenerateFit(format!(
            "{} abscissae but {} ordinates",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateFit("need at least two points".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-finite sample".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("abscissae have zero variance".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0)
    };
    Ok(LineFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

/// A power law fitted on log-log axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    /// `(ln x, ln y)` pairs used in the fit.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least squares of `ln y` on `ln x`; needs three or more positive pairs.
pub fn fit_slope(points: &[(f64, f64)]) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "need at least three points, got {}",
            points.len()
        )));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::DegenerateFit(format!("non-positive point {p:?}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let (lx, ly): (Vec<f64>, Vec<f64>) = logs.iter().copied().unzip();
    let fit = line_fit(&lx, &ly)?;
    Ok(SlopeFit {
        points: logs,
        slope: fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
    })
}

/// `ln(e_i / e_{i+1}) / ln(p_i / p_{i+1})` for consecutive pairs.
pub fn local_slopes(points: &[(f64, f64)]) -> Vec<f64> {
    points
        .windows(2)
        .map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln())
        .collect()
}
