//! Braced Fourier continuation.
//!
//! Instead of continuing the raw data (whose noisy endpoints can make a
//! periodic continuation blow up), a fixed pair of unit braces is continued
//! once and cached in a [`BracingSet`]. Per series, the braces are only
//! rescaled by the left and right scaling points, which are one-step linear
//! projections past each end of the data.

mod continuation;
mod io;

pub use continuation::{continuation_response, ContinuationOperator, SVD_RELATIVE_CUTOFF};

use std::f64::consts::PI;

use crate::error::{BfcrError, Result};
use crate::series::Series;

/// Bound on `max |response|` a continuation must respect to be accepted.
pub const CONTINUATION_BOUND: f64 = 10.0;

/// Hyperparameters of the continuation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FcParams {
    /// Brace length in samples.
    pub d: usize,
    /// Continuation (bridge) length in samples.
    pub c_fc: usize,
    /// Padding beyond each brace block on the fitting circle.
    pub z: usize,
    /// Extra padding on the fitting circle.
    pub e: usize,
    /// Oversampling factor of the fitting abscissae.
    pub n_over: usize,
}

impl Default for FcParams {
    fn default() -> Self {
        Self {
            d: 12,
            c_fc: 27,
            z: 12,
            e: 0,
            n_over: 20,
        }
    }
}

impl FcParams {
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(BfcrError::InvalidParams(format!(
                "d must be >= 2 (got {})",
                self.d
            )));
        }
        if self.c_fc < 1 {
            return Err(BfcrError::InvalidParams("c_fc must be >= 1".into()));
        }
        if self.n_over < 1 {
            return Err(BfcrError::InvalidParams("n_over must be >= 1".into()));
        }
        Ok(())
    }

    /// Number of synthetic points added around a series: two braces plus the bridge.
    pub fn added_points(&self) -> usize {
        2 * self.d + self.c_fc
    }
}

/// A straight line `slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
}

impl LineFit {
    pub fn at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// Least-squares line through `(0, y0), (1, y1), (2, y2)`.
pub fn fit_line3(y0: f64, y1: f64, y2: f64) -> LineFit {
    let slope = (y2 - y0) / 2.0;
    LineFit {
        slope,
        intercept: (y0 + y1 + y2) / 3.0 - slope,
    }
}

/// Projection one step past `(0,a), (1,b), (2,c), (3,d)`.
///
/// Averages the line through the last three points evaluated one step ahead
/// and the line through the first three evaluated two steps ahead.
pub fn right_scaling_point(last4: [f64; 4]) -> f64 {
    let [x0, x1, x2, x3] = last4;
    // fitted on abscissae 1..=3, so abscissa 4 is local 3
    let r1 = fit_line3(x1, x2, x3).at(3.0);
    let r2 = fit_line3(x0, x1, x2).at(4.0);
    (r1 + r2) / 2.0
}

/// Projection one step before `first4`, i.e. the right scaling point of the
/// reversed window.
pub fn left_scaling_point(first4: [f64; 4]) -> f64 {
    let [x1, x2, x3, x4] = first4;
    right_scaling_point([x4, x3, x2, x1])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoints {
    pub lsp: f64,
    pub rsp: f64,
}

impl ScalingPoints {
    pub fn of(series: &Series) -> Result<Self> {
        let v = series.values();
        let n = v.len();
        if n < 4 {
            return Err(BfcrError::TooFewPoints { needed: 4, got: n });
        }
        Ok(Self {
            lsp: left_scaling_point([v[0], v[1], v[2], v[3]]),
            rsp: right_scaling_point([v[n - 4], v[n - 3], v[n - 2], v[n - 1]]),
        })
    }
}

/// Built-in brace shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BraceKind {
    /// Constant braces. Constant series extend to constant sequences, which
    /// keeps the trend exactly affine-equivariant.
    #[default]
    Flat,
    /// Raised-cosine ramps falling to zero away from the data.
    Hann,
}

impl std::str::FromStr for BraceKind {
    type Err = BfcrError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "flat" => Ok(BraceKind::Flat),
            "hann" => Ok(BraceKind::Hann),
            other => Err(BfcrError::InvalidParams(format!(
                "unknown brace shape {other:?}"
            ))),
        }
    }
}

/// Unit brace pair. `left` ends at its anchor (last sample), `right` starts at
/// its anchor (first sample).
#[derive(Debug, Clone, PartialEq)]
pub struct BraceShape {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl BraceShape {
    pub fn new(kind: BraceKind, d: usize) -> Result<Self> {
        match kind {
            BraceKind::Flat => Self::flat(d),
            BraceKind::Hann => Self::hann(d),
        }
    }

    pub fn flat(d: usize) -> Result<Self> {
        check_brace_len(d)?;
        Ok(Self {
            left: vec![1.0; d],
            right: vec![1.0; d],
        })
    }

    /// `left[j] = (1 - cos(pi j/(d-1)))/2`, `right[j] = (1 + cos(pi j/(d-1)))/2`.
    pub fn hann(d: usize) -> Result<Self> {
        check_brace_len(d)?;
        let step = PI / (d - 1) as f64;
        let mut left: Vec<f64> = (0..d)
            .map(|j| 0.5 * (1.0 - (step * j as f64).cos()))
            .collect();
        let mut right: Vec<f64> = (0..d)
            .map(|j| 0.5 * (1.0 + (step * j as f64).cos()))
            .collect();
        // pin the anchors and the far ends exactly
        left[0] = 0.0;
        left[d - 1] = 1.0;
        right[0] = 1.0;
        right[d - 1] = 0.0;
        Ok(Self { left, right })
    }

    /// Rescales each brace so its anchor is exactly 1.
    fn anchor_normalized(mut self) -> Result<Self> {
        let d = self.left.len();
        if self.right.len() != d {
            return Err(BfcrError::ShapeError {
                expected: d,
                got: self.right.len(),
            });
        }
        if self.left.iter().chain(&self.right).any(|v| !v.is_finite()) {
            return Err(BfcrError::NonFiniteValue {
                location: "brace shape".into(),
            });
        }
        let left_anchor = self.left[d - 1];
        let right_anchor = self.right[0];
        if left_anchor == 0.0 || right_anchor == 0.0 {
            return Err(BfcrError::ZeroAnchor);
        }
        self.left.iter_mut().for_each(|v| *v /= left_anchor);
        self.right.iter_mut().for_each(|v| *v /= right_anchor);
        self.left[d - 1] = 1.0;
        self.right[0] = 1.0;
        Ok(self)
    }
}

fn check_brace_len(d: usize) -> Result<()> {
    if d < 2 {
        return Err(BfcrError::InvalidParams(format!(
            "d must be >= 2 (got {d})"
        )));
    }
    Ok(())
}

/// Precomputed unit braces and their continuation responses.
#[derive(Debug, Clone, PartialEq)]
pub struct BracingSet {
    params: FcParams,
    left_unit: Vec<f64>,
    right_unit: Vec<f64>,
    cont_from_left: Vec<f64>,
    cont_from_right: Vec<f64>,
}

impl BracingSet {
    /// Runs the continuation solve on the unit braces. `shape = None` uses
    /// the flat default.
    pub fn build(params: FcParams, shape: Option<BraceShape>) -> Result<Self> {
        params.validate()?;
        let shape = match shape {
            Some(s) => s,
            None => BraceShape::flat(params.d)?,
        };
        if shape.left.len() != params.d {
            return Err(BfcrError::ShapeError {
                expected: params.d,
                got: shape.left.len(),
            });
        }
        let shape = shape.anchor_normalized()?;

        let op = ContinuationOperator::new(&params)?;
        let zeros = vec![0.0; params.d];
        let cont_from_right = op.apply(&shape.right, &zeros)?;
        let cont_from_left = op.apply(&zeros, &shape.left)?;

        let set = Self {
            params,
            left_unit: shape.left,
            right_unit: shape.right,
            cont_from_left,
            cont_from_right,
        };
        set.check_bounded()?;
        Ok(set)
    }

    pub fn with_defaults() -> Result<Self> {
        Self::build(FcParams::default(), None)
    }

    pub fn params(&self) -> &FcParams {
        &self.params
    }

    pub fn left_unit(&self) -> &[f64] {
        &self.left_unit
    }

    pub fn right_unit(&self) -> &[f64] {
        &self.right_unit
    }

    pub fn cont_from_left(&self) -> &[f64] {
        &self.cont_from_left
    }

    pub fn cont_from_right(&self) -> &[f64] {
        &self.cont_from_right
    }

    pub fn max_response(&self) -> f64 {
        self.cont_from_left
            .iter()
            .chain(&self.cont_from_right)
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    fn check_bounded(&self) -> Result<()> {
        let all = self.cont_from_left.iter().chain(&self.cont_from_right);
        if all.clone().any(|v| !v.is_finite()) {
            return Err(BfcrError::ContinuationUnbounded {
                max_abs: f64::INFINITY,
            });
        }
        let max_abs = self.max_response();
        if max_abs > CONTINUATION_BOUND {
            return Err(BfcrError::ContinuationUnbounded { max_abs });
        }
        Ok(())
    }

    /// The bridge for braces scaled by `(lambda_left, lambda_right)`.
    pub fn scaled_continuation(&self, lambda_left: f64, lambda_right: f64) -> Vec<f64> {
        self.cont_from_left
            .iter()
            .zip(&self.cont_from_right)
            .map(|(l, r)| lambda_left * l + lambda_right * r)
            .collect()
    }

    /// `[S1 | X | S2 | continuation]` with the braces scaled so their anchors
    /// meet the left and right scaling points.
    pub fn extend(&self, series: &Series) -> Result<ExtendedSeries> {
        let n = series.len();
        let sp = ScalingPoints::of(series)?;
        let (lambda_l, lambda_r) = (sp.lsp, sp.rsp);
        let d = self.params.d;
        let c_fc = self.params.c_fc;

        let mut values = Vec::with_capacity(n + 2 * d + c_fc);
        values.extend(self.left_unit.iter().map(|v| lambda_l * v));
        values.extend_from_slice(series.values());
        values.extend(self.right_unit.iter().map(|v| lambda_r * v));
        values.extend(self.scaled_continuation(lambda_l, lambda_r));

        Ok(ExtendedSeries {
            values,
            n_original: n,
            d,
            c_fc,
            scaling: sp,
        })
    }
}

/// `brace_extend` as a free function.
pub fn brace_extend(series: &Series, bracing: &BracingSet) -> Result<ExtendedSeries> {
    bracing.extend(series)
}

/// A series wrapped in scaled braces and the periodic bridge.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedSeries {
    values: Vec<f64>,
    n_original: usize,
    d: usize,
    c_fc: usize,
    scaling: ScalingPoints,
}

impl ExtendedSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn n_original(&self) -> usize {
        self.n_original
    }

    pub fn scaling(&self) -> ScalingPoints {
        self.scaling
    }

    pub fn left_brace(&self) -> &[f64] {
        &self.values[..self.d]
    }

    pub fn original(&self) -> &[f64] {
        &self.values[self.d..self.d + self.n_original]
    }

    pub fn right_brace(&self) -> &[f64] {
        let start = self.d + self.n_original;
        &self.values[start..start + self.d]
    }

    pub fn continuation(&self) -> &[f64] {
        &self.values[2 * self.d + self.n_original..]
    }

    /// Index of the first original sample within [`values`](Self::values).
    pub fn original_offset(&self) -> usize {
        self.d
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn c_fc(&self) -> usize {
        self.c_fc
    }
}
