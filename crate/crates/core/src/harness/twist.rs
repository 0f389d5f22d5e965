//! Slow-variable diagnostic: undo the free flow, `phi(t) = exp(-it Delta) psi(t)`,
//! and measure how fast `phi` moves between consecutive snapshots.

use num_complex::Complex64;

use crate::spectral::{coeff_sobolev_norm, SobolevIndex, SpectralField};

/// Streaming maximum of `||phi(t_{n+1}) - phi(t_n)||_{H1} / (t_{n+1} - t_n)`.
#[derive(Debug, Clone, Default)]
pub struct TwistTracker {
    prev: Option<(f64, Vec<Complex64>)>,
    max: f64,
    samples: usize,
}

impl TwistTracker {
    pub fn record(&mut self, t: f64, psi: &SpectralField) {
        let phi: Vec<Complex64> = psi
            .coeffs()
            .iter()
            .zip(psi.grid().squared_frequencies())
            .map(|(&c, &m2)| c * Complex64::cis(t * m2))
            .collect();
        if let Some((t0, prev)) = &self.prev {
            let dt = t - t0;
            if dt > 0.0 {
                let diff: Vec<Complex64> = phi.iter().zip(prev).map(|(a, b)| a - b).collect();
                let rate = coeff_sobolev_norm(psi.grid(), &diff, SobolevIndex::H1) / dt;
                self.max = self.max.max(rate);
            }
        }
        self.prev = Some((t, phi));
        self.samples += 1;
    }

    /// Largest rate seen so far (0 with fewer than two samples).
    pub fn value(&self) -> f64 {
        self.max
    }

    pub fn samples(&self) -> usize {
        self.samples
    }
}

/// [`TwistTracker`] over a recorded sequence of `(t, psi)` pairs.
pub fn twist_diagnostic<'f>(run: impl IntoIterator<Item = (f64, &'f SpectralField)>) -> f64 {
    let mut tracker = TwistTracker::default();
    for (t, f) in run {
        tracker.record(t, f);
    }
    tracker.value()
}
