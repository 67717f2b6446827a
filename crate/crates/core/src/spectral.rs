//! Forward/inverse DFT and the sigma-approximation low-pass filter.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{BfcrError, Result};

/// Relative conjugate asymmetry above which a spectrum is not a real signal.
pub const ASYMMETRY_TOLERANCE: f64 = 1e-6;

/// DFT coefficients in standard order: bin 0 is the mean term, bins `k` and
/// `M - k` are conjugate pairs for real input.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub coefficients: Vec<Complex64>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// `max_k |X[k] - conj(X[M-k])|` relative to `max_k |X[k]|` (0 for an all-zero spectrum).
    pub fn conjugate_asymmetry(&self) -> f64 {
        let m = self.coefficients.len();
        let scale = self
            .coefficients
            .iter()
            .fold(0.0f64, |acc, c| acc.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let worst = (0..m)
            .map(|k| (self.coefficients[k] - self.coefficients[(m - k) % m].conj()).norm())
            .fold(0.0, f64::max);
        worst / scale
    }
}

thread_local! {
    // the planner caches plans, so repeated lengths skip the setup
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// `X[k] = sum_j x[j] exp(-2 pi i jk / M)`.
pub fn dft(values: &[f64]) -> Spectrum {
    let mut buffer: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    if !buffer.is_empty() {
        let fft = plan(buffer.len(), FftDirection::Forward);
        fft.process(&mut buffer);
    }
    Spectrum {
        coefficients: buffer,
    }
}

/// Inverse of [`dft`] with `1/M` normalization, keeping the real part.
pub fn idft(spectrum: &Spectrum) -> Result<Vec<f64>> {
    let asymmetry = spectrum.conjugate_asymmetry();
    if asymmetry > ASYMMETRY_TOLERANCE {
        return Err(BfcrError::NonRealSignal { asymmetry });
    }
    let m = spectrum.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut buffer = spectrum.coefficients.clone();
    let fft = plan(m, FftDirection::Inverse);
    fft.process(&mut buffer);
    let scale = 1.0 / m as f64;
    Ok(buffer.into_iter().map(|c| c.re * scale).collect())
}

/// Sigma-approximation filter settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    /// Cutoff as a fraction of the Nyquist bin, in `(0, 1]`.
    pub cutoff_fraction: f64,
    /// Exponent applied to each Lanczos factor.
    pub power: u32,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            cutoff_fraction: 0.2,
            power: 4,
        }
    }
}

impl FilterSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_fraction > 0.0 && self.cutoff_fraction <= 1.0) {
            return Err(BfcrError::InvalidParams(format!(
                "cutoff_fraction must lie in (0, 1] (got {})",
                self.cutoff_fraction
            )));
        }
        if self.power == 0 {
            return Err(BfcrError::InvalidParams("power must be positive".into()));
        }
        Ok(())
    }

    /// First zeroed bin: `max(2, ceil(cutoff_fraction * floor(M/2)))`.
    pub fn cutoff_bin(&self, m_total: usize) -> usize {
        let nyquist = (m_total / 2) as f64;
        ((self.cutoff_fraction * nyquist).ceil() as usize).max(2)
    }
}

/// Per-bin weights `sinc(k/M)^power` for `k < M`, zero from the cutoff `M`
/// upward, mirrored onto the conjugate bins.
pub fn sigma_weights(m_total: usize, spec: &FilterSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    if m_total < 2 {
        return Err(BfcrError::InvalidParams(format!(
            "filter length must be >= 2 (got {m_total})"
        )));
    }
    let cutoff = spec.cutoff_bin(m_total);
    let mut weights = vec![0.0; m_total];
    weights[0] = 1.0;
    for k in 1..=(m_total / 2).min(cutoff - 1) {
        let x = PI * k as f64 / cutoff as f64;
        let w = (x.sin() / x).powi(spec.power as i32);
        weights[k] = w;
        weights[m_total - k] = w;
    }
    Ok(weights)
}

/// Multiplies each bin by its weight.
pub fn lowpass(spectrum: &Spectrum, weights: &[f64]) -> Result<Spectrum> {
    if weights.len() != spectrum.len() {
        return Err(BfcrError::ShapeError {
            expected: spectrum.len(),
            got: weights.len(),
        });
    }
    Ok(Spectrum {
        coefficients: spectrum
            .coefficients
            .iter()
            .zip(weights)
            .map(|(c, &w)| c * w)
            .collect(),
    })
}
