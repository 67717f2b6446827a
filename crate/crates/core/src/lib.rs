//! Braced Fourier continuation and regression (BFCR).
//!
//! A one-dimensional series is extended with precomputed, scaled "braces" and a
//! smooth periodic continuation, low-pass filtered in the Fourier domain with
//! Lanczos sigma factors, and cut back to its original span to give a trend
//! line. The [`anomaly`] module builds internal and edge outlier detection on
//! top of those trend lines.
//!
//! ```
//! use bfcr::{Bfcr, Series};
//!
//! let model = Bfcr::with_defaults().unwrap();
//! let series = Series::new(vec![1.0, 2.5, 2.0, 3.5, 3.0, 4.5, 4.0, 5.5]).unwrap();
//! let trend = model.trend(&series).unwrap();
//! assert_eq!(trend.len(), series.len());
//! ```

pub mod anomaly;
pub mod bracing;
pub mod cli;
mod error;
pub mod series;
pub mod spectral;
pub mod trend;

pub use anomaly::{
    AnomalyReport, DetectionConfig, EdgeVerdict, GuardParams, GuardVerdict, PopulationStats,
    Sidedness, VolParams,
};
pub use bracing::{BraceShape, BracingSet, ExtendedSeries, FcParams, LineFit, ScalingPoints};
pub use error::{BfcrError, Result};
pub use series::Series;
pub use spectral::{FilterSpec, Spectrum};
pub use trend::{Bfcr, TrendConfig, TrendLine};
