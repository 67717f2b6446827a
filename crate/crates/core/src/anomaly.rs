//! Trend-based anomaly detection.
//!
//! Every detector compares one sample (a single point's absolute deviation
//! from a trend) against population statistics of the other deviations under
//! a normal `k * sigma` rule. Internal points use one trend over the whole
//! series. The last point uses a leave-one-out population from the trend of
//! the first `N - 1` points and a sample from the full-series trend; the first
//! point is handled by reversing the series.
//!
//! Three optional mitigations compose with the detectors:
//! volatility-regime truncation ([`truncate_volatility`]), screening of
//! internal outliers out of the edge population, and low-noise guards
//! ([`low_noise_guards`]) that skip edge checks on locally deterministic data.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{BfcrError, Result};
use crate::series::Series;
use crate::trend::{Bfcr, TrendLine};

/// Recommended minimum series length for detection.
pub const DEFAULT_MIN_POINTS: usize = 6;

/// Shortest series [`truncate_volatility`] accepts (two points per half, per side).
pub const MIN_VOLATILITY_POINTS: usize = 8;

/// Mean and population standard deviation of absolute deviations from a trend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationStats {
    pub mu: f64,
    pub sigma: f64,
    pub n: usize,
}

impl PopulationStats {
    pub fn from_deviations<'a>(deviations: impl IntoIterator<Item = &'a f64>) -> Result<Self> {
        let devs: Vec<f64> = deviations.into_iter().copied().collect();
        if devs.is_empty() {
            return Err(BfcrError::NoData);
        }
        let n = devs.len();
        let mu = devs.iter().sum::<f64>() / n as f64;
        let var = devs.iter().map(|d| (d - mu).powi(2)).sum::<f64>() / n as f64;
        Ok(Self {
            mu,
            sigma: var.sqrt(),
            n,
        })
    }

    pub fn score(&self, deviation: f64) -> f64 {
        (deviation - self.mu) / self.sigma
    }
}

/// `|x_i - y_i|` for every sample.
pub fn abs_deviations(series: &[f64], trend: &[f64]) -> Result<Vec<f64>> {
    if series.len() != trend.len() {
        return Err(BfcrError::ShapeError {
            expected: series.len(),
            got: trend.len(),
        });
    }
    Ok(series
        .iter()
        .zip(trend)
        .map(|(x, y)| (x - y).abs())
        .collect())
}

/// Population statistics over the non-excluded indices.
pub fn population_stats(
    series: &Series,
    trend: &TrendLine,
    exclude: &BTreeSet<usize>,
) -> Result<PopulationStats> {
    let devs = abs_deviations(series.values(), trend.values())?;
    PopulationStats::from_deviations(
        devs.iter()
            .enumerate()
            .filter(|(i, _)| !exclude.contains(i))
            .map(|(_, d)| d),
    )
}

/// Which side of the mean deviation counts as outlying.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sidedness {
    /// `|d - mu| > k sigma`
    TwoSided,
    /// `d - mu > k sigma`
    Above,
}

impl Sidedness {
    fn exceeds(self, deviation: f64, stats: &PopulationStats, k_sigma: f64) -> bool {
        let diff = deviation - stats.mu;
        let excess = match self {
            Sidedness::TwoSided => diff.abs(),
            Sidedness::Above => diff,
        };
        excess > k_sigma * stats.sigma
    }
}

impl std::str::FromStr for Sidedness {
    type Err = BfcrError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two-sided" | "two_sided" => Ok(Sidedness::TwoSided),
            "above" | "one-sided-above" => Ok(Sidedness::Above),
            other => Err(BfcrError::InvalidParams(format!(
                "unknown sidedness {other:?}"
            ))),
        }
    }
}

/// Thresholds of the low-noise edge guards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardParams {
    /// Minimum relative change between the last two samples.
    pub min_pct_change: f64,
    /// Number of trailing samples whose differences enter the CoV test.
    pub cov_window: usize,
    /// Minimum coefficient of variation of those differences.
    pub cov_threshold: f64,
}

impl Default for GuardParams {
    fn default() -> Self {
        Self {
            min_pct_change: 0.10,
            cov_window: 4,
            cov_threshold: 0.2,
        }
    }
}

impl GuardParams {
    pub fn validate(&self) -> Result<()> {
        if !positive(self.min_pct_change) || !positive(self.cov_threshold) {
            return Err(BfcrError::InvalidParams(
                "guard thresholds must be positive".into(),
            ));
        }
        if self.cov_window < 3 {
            return Err(BfcrError::InvalidParams(
                "guard cov_window must be >= 3".into(),
            ));
        }
        Ok(())
    }
}

/// Volatility-regime truncation settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolParams {
    pub ratio_low: f64,
    pub ratio_high: f64,
    /// Fraction of the current series dropped from the front per iteration.
    pub trim_fraction: f64,
    /// Truncation never keeps fewer than this fraction of the original series.
    pub min_remaining_fraction: f64,
}

impl Default for VolParams {
    fn default() -> Self {
        Self {
            ratio_low: 0.75,
            ratio_high: 1.25,
            trim_fraction: 0.20,
            min_remaining_fraction: 0.50,
        }
    }
}

impl VolParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ratio_low > 0.0
            && self.ratio_low <= 1.0
            && self.ratio_high >= 1.0
            && self.trim_fraction > 0.0
            && self.trim_fraction < 1.0
            && self.min_remaining_fraction > 0.0
            && self.min_remaining_fraction < 1.0;
        if ok {
            Ok(())
        } else {
            Err(BfcrError::InvalidParams(format!(
                "invalid volatility parameters {self:?}"
            )))
        }
    }

    /// Closed-form upper bound on the number of trims.
    pub fn max_iterations(&self) -> usize {
        (self.min_remaining_fraction.ln() / (1.0 - self.trim_fraction).ln()).ceil() as usize + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectionConfig {
    pub k_sigma: f64,
    pub internal_sided: Sidedness,
    pub edge_sided: Sidedness,
    pub min_points: usize,
    /// Drop internal outliers from the edge population before judging the edge.
    pub screen_internal: bool,
    /// Low-noise guards for edge detection; `None` disables them.
    pub guards: Option<GuardParams>,
    /// Volatility truncation before detection; `None` disables it.
    pub volatility: Option<VolParams>,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            k_sigma: 2.0,
            internal_sided: Sidedness::TwoSided,
            edge_sided: Sidedness::Above,
            min_points: DEFAULT_MIN_POINTS,
            screen_internal: true,
            guards: None,
            volatility: None,
        }
    }
}

impl DetectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !positive(self.k_sigma) || !self.k_sigma.is_finite() {
            return Err(BfcrError::InvalidParams("k_sigma must be positive".into()));
        }
        if self.min_points < 5 {
            // the leave-one-out trend needs four points
            return Err(BfcrError::InvalidParams("min_points must be >= 5".into()));
        }
        if let Some(g) = &self.guards {
            g.validate()?;
        }
        if let Some(v) = &self.volatility {
            v.validate()?;
        }
        Ok(())
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n < self.min_points {
            return Err(BfcrError::TooFewPoints {
                needed: self.min_points,
                got: n,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Flag {
    pub index: usize,
    pub deviation: f64,
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SkipReason {
    BelowPercentChange { change: f64 },
    LocallyDeterministic { cov: f64 },
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::BelowPercentChange { .. } => f.write_str("below percent-change threshold"),
            SkipReason::LocallyDeterministic { .. } => f.write_str("edge locally deterministic"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GuardVerdict {
    Run,
    Skip(SkipReason),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EdgeVerdict {
    Anomalous,
    Normal,
    Skipped(SkipReason),
}

impl EdgeVerdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeVerdict::Anomalous => "anomalous",
            EdgeVerdict::Normal => "normal",
            EdgeVerdict::Skipped(_) => "skipped",
        }
    }
}

/// Summary of a volatility truncation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationInfo {
    pub iterations: usize,
    pub final_ratio: f64,
    /// Index (in the input series) of the first kept sample.
    pub kept_from: usize,
    pub in_band: bool,
}

/// Internal outliers removed from an edge population.
#[derive(Debug, Clone, PartialEq)]
pub struct Screening {
    pub excluded: Vec<usize>,
    pub before: PopulationStats,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Mitigations {
    pub volatility: Option<TruncationInfo>,
    pub screening: Option<Screening>,
    pub guards: Option<GuardVerdict>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnomalyReport {
    /// Flagged samples, indexed into the caller's series.
    pub flagged: Vec<Flag>,
    /// `None` only when an edge check was skipped.
    pub stats: Option<PopulationStats>,
    /// Edge checks only: the edge's deviation from the full-series trend.
    pub edge_sample: Option<f64>,
    pub edge_index: Option<usize>,
    pub verdict: Option<EdgeVerdict>,
    pub mitigations: Mitigations,
}

impl AnomalyReport {
    pub fn flagged_indices(&self) -> Vec<usize> {
        self.flagged.iter().map(|f| f.index).collect()
    }
}

/// Internal indices (first and last excluded) whose deviation exceeds the threshold.
fn internal_outliers(
    deviations: &[f64],
    stats: &PopulationStats,
    k_sigma: f64,
    sided: Sidedness,
) -> Vec<Flag> {
    let n = deviations.len();
    if stats.sigma == 0.0 || n < 3 {
        return Vec::new();
    }
    (1..n - 1)
        .filter(|&i| sided.exceeds(deviations[i], stats, k_sigma))
        .map(|i| Flag {
            index: i,
            deviation: deviations[i],
            score: stats.score(deviations[i]),
        })
        .collect()
}

/// Flags internal samples of `series` against its own trend.
pub fn detect_internal(
    series: &Series,
    config: &DetectionConfig,
    model: &Bfcr,
) -> Result<AnomalyReport> {
    config.validate()?;
    config.check_len(series.len())?;

    let (working, truncation) = match &config.volatility {
        Some(vol) => {
            let t = truncate_volatility(series, vol, model)?;
            (t.series, Some(t.info))
        }
        None => (series.clone(), None),
    };
    config.check_len(working.len())?;
    let shift = truncation.map_or(0, |t| t.kept_from);

    let trend = model.trend(&working)?;
    let deviations = abs_deviations(working.values(), trend.values())?;
    let stats = PopulationStats::from_deviations(&deviations)?;
    let mut flagged = internal_outliers(&deviations, &stats, config.k_sigma, config.internal_sided);
    flagged.iter_mut().for_each(|f| f.index += shift);

    Ok(AnomalyReport {
        flagged,
        stats: Some(stats),
        edge_sample: None,
        edge_index: None,
        verdict: None,
        mitigations: Mitigations {
            volatility: truncation,
            ..Mitigations::default()
        },
    })
}

/// Judges whether the last sample of `series` is anomalous.
pub fn detect_edge_last(
    series: &Series,
    config: &DetectionConfig,
    model: &Bfcr,
) -> Result<AnomalyReport> {
    config.validate()?;
    let n_input = series.len();
    config.check_len(n_input)?;

    let mut mitigations = Mitigations::default();
    if let Some(guards) = &config.guards {
        let verdict = low_noise_guards(series, guards)?;
        mitigations.guards = Some(verdict);
        if let GuardVerdict::Skip(reason) = verdict {
            return Ok(AnomalyReport {
                flagged: Vec::new(),
                stats: None,
                edge_sample: None,
                edge_index: Some(n_input - 1),
                verdict: Some(EdgeVerdict::Skipped(reason)),
                mitigations,
            });
        }
    }

    let (working, shift) = match &config.volatility {
        Some(vol) => {
            let t = truncate_volatility(series, vol, model)?;
            mitigations.volatility = Some(t.info);
            (t.series, t.info.kept_from)
        }
        None => (series.clone(), 0),
    };
    config.check_len(working.len())?;
    let n = working.len();
    let x = working.values();

    let head = working.without_last().expect("n >= min_points");
    let y1 = model.trend(&head)?;
    let y2 = model.trend(&working)?;

    let head_devs = abs_deviations(head.values(), y1.values())?;
    let mut stats = PopulationStats::from_deviations(&head_devs)?;

    if config.screen_internal {
        let outliers = internal_outliers(&head_devs, &stats, config.k_sigma, config.internal_sided);
        if !outliers.is_empty() {
            let excluded: BTreeSet<usize> = outliers.iter().map(|f| f.index).collect();
            let kept = head_devs
                .iter()
                .enumerate()
                .filter(|(i, _)| !excluded.contains(i))
                .map(|(_, d)| d);
            if let Ok(screened) = PopulationStats::from_deviations(kept) {
                mitigations.screening = Some(Screening {
                    excluded: excluded.into_iter().map(|i| i + shift).collect(),
                    before: stats,
                });
                stats = screened;
            }
        }
    }

    let s = (y2.values()[n - 1] - x[n - 1]).abs();
    let anomalous = if stats.sigma == 0.0 {
        s > stats.mu
    } else {
        config.edge_sided.exceeds(s, &stats, config.k_sigma)
    };
    let edge_index = shift + n - 1;
    let flagged = if anomalous {
        vec![Flag {
            index: edge_index,
            deviation: s,
            score: if stats.sigma == 0.0 {
                f64::INFINITY
            } else {
                stats.score(s)
            },
        }]
    } else {
        Vec::new()
    };

    Ok(AnomalyReport {
        flagged,
        stats: Some(stats),
        edge_sample: Some(s),
        edge_index: Some(edge_index),
        verdict: Some(if anomalous {
            EdgeVerdict::Anomalous
        } else {
            EdgeVerdict::Normal
        }),
        mitigations,
    })
}

/// Judges whether the first sample is anomalous: [`detect_edge_last`] on the
/// reversed series, with indices mapped back.
pub fn detect_edge_first(
    series: &Series,
    config: &DetectionConfig,
    model: &Bfcr,
) -> Result<AnomalyReport> {
    let n = series.len();
    let mut report = detect_edge_last(&series.reverse(), config, model)?;
    let remap = |i: usize| n - 1 - i;
    report
        .flagged
        .iter_mut()
        .for_each(|f| f.index = remap(f.index));
    report.edge_index = report.edge_index.map(remap);
    if let Some(screening) = report.mitigations.screening.as_mut() {
        screening.excluded = screening.excluded.iter().rev().map(|&i| remap(i)).collect();
    }
    // for the first point the kept span is a prefix; report where it ends instead
    if let Some(vol) = report.mitigations.volatility.as_mut() {
        vol.kept_from = remap(vol.kept_from);
    }
    Ok(report)
}

/// Output of [`truncate_volatility`].
#[derive(Debug, Clone, PartialEq)]
pub struct VolatilityTruncation {
    pub series: Series,
    pub info: TruncationInfo,
}

/// Ratio of the deviation spreads of the two halves (first half takes the odd sample).
pub fn volatility_ratio(series: &Series, model: &Bfcr) -> Result<f64> {
    let trend = model.trend(series)?;
    let devs = abs_deviations(series.values(), trend.values())?;
    let half = devs.len().div_ceil(2);
    let s1 = PopulationStats::from_deviations(&devs[..half])?.sigma;
    let s2 = PopulationStats::from_deviations(&devs[half..])?.sigma;
    // spreads at rounding level count as zero
    let scale = series.values().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let tiny = 1e-12 * scale;
    let (s1, s2) = (
        if s1 <= tiny { 0.0 } else { s1 },
        if s2 <= tiny { 0.0 } else { s2 },
    );
    Ok(if s2 == 0.0 {
        if s1 == 0.0 {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        s1 / s2
    })
}

/// Drops leading samples until both halves of the series have similar
/// deviation spread, or until another trim would leave fewer than
/// `min_remaining_fraction` of the input.
pub fn truncate_volatility(
    series: &Series,
    params: &VolParams,
    model: &Bfcr,
) -> Result<VolatilityTruncation> {
    params.validate()?;
    let n0 = series.len();
    if n0 < MIN_VOLATILITY_POINTS {
        return Err(BfcrError::TooFewPoints {
            needed: MIN_VOLATILITY_POINTS,
            got: n0,
        });
    }
    let floor =
        ((params.min_remaining_fraction * n0 as f64).ceil() as usize).max(MIN_VOLATILITY_POINTS);

    let mut kept_from = 0;
    let mut iterations = 0;
    loop {
        let current = series.suffix(kept_from).expect("kept span is non-empty");
        let ratio = volatility_ratio(&current, model)?;
        let in_band = ratio >= params.ratio_low && ratio <= params.ratio_high;
        let len = current.len();
        let trim = (params.trim_fraction * len as f64).ceil() as usize;
        if in_band || len - trim.min(len) < floor {
            return Ok(VolatilityTruncation {
                series: current,
                info: TruncationInfo {
                    iterations,
                    final_ratio: ratio,
                    kept_from,
                    in_band,
                },
            });
        }
        kept_from += trim;
        iterations += 1;
    }
}

/// Decides whether an edge check on the last sample is worth running.
pub fn low_noise_guards(series: &Series, params: &GuardParams) -> Result<GuardVerdict> {
    params.validate()?;
    let x = series.values();
    let n = x.len();
    let m = params.cov_window;
    if n < m {
        return Err(BfcrError::TooFewPoints { needed: m, got: n });
    }

    let change = (x[n - 1] - x[n - 2]).abs() / x[n - 2].abs().max(1e-300);
    if change < params.min_pct_change {
        return Ok(GuardVerdict::Skip(SkipReason::BelowPercentChange {
            change,
        }));
    }

    let diffs: Vec<f64> = x[n - m..].windows(2).map(|w| w[1] - w[0]).collect();
    let stats = PopulationStats::from_deviations(&diffs)?;
    let cov = if stats.mu == 0.0 {
        f64::INFINITY
    } else {
        stats.sigma / stats.mu.abs()
    };
    if cov < params.cov_threshold {
        return Ok(GuardVerdict::Skip(SkipReason::LocallyDeterministic { cov }));
    }
    Ok(GuardVerdict::Run)
}

fn positive(v: f64) -> bool {
    v > 0.0
}
