//! The BFCR trend pipeline.

use crate::bracing::{BraceKind, BraceShape, BracingSet, FcParams};
use crate::error::{BfcrError, Result};
use crate::series::Series;
use crate::spectral::{dft, idft, lowpass, sigma_weights, FilterSpec};

/// Smallest series a trend can be computed for (the endpoint windows need four samples).
pub const MIN_TREND_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TrendConfig {
    pub fc: FcParams,
    pub filter: FilterSpec,
    pub brace: BraceKind,
}

impl TrendConfig {
    pub fn validate(&self) -> Result<()> {
        self.fc.validate()?;
        self.filter.validate()
    }
}

/// Trend values aligned 1:1 with the input samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendLine {
    values: Vec<f64>,
}

impl TrendLine {
    /// Wraps precomputed trend values (e.g. from another smoother) for use
    /// with the statistics helpers.
    pub fn from_values(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// Computes the trend of `series`.
///
/// 1. brace-extend the series to a periodic sequence,
/// 2. remove its mean,
/// 3. transform,
/// 4. weight the bins with sigma factors and transform back,
/// 5. keep the samples lying over the original data,
/// 6. restore the mean,
/// 7. subtract the mean offset between reconstruction and data.
pub fn bfcr_trend(
    series: &Series,
    config: &TrendConfig,
    bracing: &BracingSet,
) -> Result<TrendLine> {
    let n = series.len();
    if n < MIN_TREND_POINTS {
        return Err(BfcrError::TooFewPoints {
            needed: MIN_TREND_POINTS,
            got: n,
        });
    }
    if bracing.params() != &config.fc {
        return Err(BfcrError::InvalidParams(format!(
            "bracing set was built for {:?}, configuration asks for {:?}",
            bracing.params(),
            config.fc
        )));
    }

    let extended = bracing.extend(series)?;
    let offset = extended.original_offset();
    let mut values = extended.into_values();

    let mu = values.iter().sum::<f64>() / values.len() as f64;
    values.iter_mut().for_each(|v| *v -= mu);

    let weights = sigma_weights(values.len(), &config.filter)?;
    let smoothed = idft(&lowpass(&dft(&values), &weights)?)?;

    let mut trend: Vec<f64> = smoothed[offset..offset + n]
        .iter()
        .map(|v| v + mu)
        .collect();
    let shift = trend
        .iter()
        .zip(series.values())
        .map(|(t, x)| t - x)
        .sum::<f64>()
        / n as f64;
    trend.iter_mut().for_each(|t| *t -= shift);

    if trend.iter().any(|t| !t.is_finite()) {
        return Err(BfcrError::NumericalFailure(
            "trend has non-finite values".into(),
        ));
    }
    Ok(TrendLine { values: trend })
}

/// A trend configuration together with its precomputed bracing set.
#[derive(Debug, Clone)]
pub struct Bfcr {
    config: TrendConfig,
    bracing: BracingSet,
}

impl Bfcr {
    /// Builds the bracing set for `config`.
    pub fn new(config: TrendConfig) -> Result<Self> {
        config.validate()?;
        let shape = BraceShape::new(config.brace, config.fc.d)?;
        let bracing = BracingSet::build(config.fc, Some(shape))?;
        Ok(Self { config, bracing })
    }

    pub fn with_defaults() -> Result<Self> {
        Self::new(TrendConfig::default())
    }

    /// Pairs a configuration with an existing (e.g. loaded) bracing set.
    pub fn with_bracing(config: TrendConfig, bracing: BracingSet) -> Result<Self> {
        config.validate()?;
        if bracing.params() != &config.fc {
            return Err(BfcrError::InvalidParams(
                "bracing set parameters do not match the configuration".into(),
            ));
        }
        Ok(Self { config, bracing })
    }

    pub fn config(&self) -> &TrendConfig {
        &self.config
    }

    pub fn bracing(&self) -> &BracingSet {
        &self.bracing
    }

    pub fn trend(&self, series: &Series) -> Result<TrendLine> {
        bfcr_trend(series, &self.config, &self.bracing)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Bfcr {
        Bfcr::with_defaults().unwrap()
    }

    #[test]
    fn too_few_points() {
        let s = Series::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            model().trend(&s),
            Err(BfcrError::TooFewPoints { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn length_and_mean_preserved() {
        let m = model();
        for n in [4usize, 5, 9, 33, 128] {
            let x: Vec<f64> = (0..n)
                .map(|i| ((i * 31 + 7) % 17) as f64 - 0.3 * i as f64)
                .collect();
            let s = Series::new(x).unwrap();
            let t = m.trend(&s).unwrap();
            assert_eq!(t.len(), n);
            let mean_t = t.values().iter().sum::<f64>() / n as f64;
            assert!((mean_t - s.mean()).abs() <= 1e-9 * (1.0 + s.mean().abs()));
        }
    }

    #[test]
    fn constant_input_gives_constant_trend() {
        let s = Series::new(vec![7.25; 5]).unwrap();
        let t = model().trend(&s).unwrap();
        for v in t.values() {
            assert!((v - 7.25).abs() < 1e-6);
        }
    }

    #[test]
    fn mismatched_bracing_rejected() {
        let bracing = BracingSet::with_defaults().unwrap();
        let config = TrendConfig {
            fc: FcParams {
                d: 8,
                ..FcParams::default()
            },
            ..TrendConfig::default()
        };
        let s = Series::new(vec![1.0; 10]).unwrap();
        assert!(matches!(
            bfcr_trend(&s, &config, &bracing),
            Err(BfcrError::InvalidParams(_))
        ));
    }

    #[test]
    fn smoothing_does_not_roughen() {
        let m = model();
        let x: Vec<f64> = (0..90)
            .map(|i| (i as f64 / 9.0).sin() * 3.0 + ((i * 7919) % 13) as f64 / 6.0)
            .collect();
        let s = Series::new(x).unwrap();
        let t1 = m.trend(&s).unwrap();
        let t2 = m
            .trend(&Series::new(t1.values().to_vec()).unwrap())
            .unwrap();
        let rms = |a: &[f64], b: &[f64]| {
            (a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>() / a.len() as f64).sqrt()
        };
        assert!(rms(t2.values(), t1.values()) <= rms(t1.values(), s.values()));
    }
}
