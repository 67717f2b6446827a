//! One-dimensional input series and CSV ingestion/emission.
//!
//! Samples are assumed uniformly spaced; any index column in an input file is
//! read past and ignored.

use std::fmt::Write as _;

use crate::error::{BfcrError, Result};

/// Ordered, uniformly spaced, finite samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    values: Vec<f64>,
}

impl Series {
    /// Builds a series, rejecting empty input and non-finite samples.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(BfcrError::EmptyInput);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(BfcrError::NonFiniteValue {
                location: format!("index {i}"),
            });
        }
        Ok(Self { values })
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

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Order reversal: `out[i] = in[N-1-i]`.
    pub fn reverse(&self) -> Series {
        let mut values = self.values.clone();
        values.reverse();
        Series { values }
    }

    /// Drops the final sample. Returns `None` for a single-sample series.
    pub fn without_last(&self) -> Option<Series> {
        if self.values.len() < 2 {
            return None;
        }
        Some(Series {
            values: self.values[..self.values.len() - 1].to_vec(),
        })
    }

    /// The samples from `start` onwards. Returns `None` if nothing would remain.
    pub fn suffix(&self, start: usize) -> Option<Series> {
        if start >= self.values.len() {
            return None;
        }
        Some(Series {
            values: self.values[start..].to_vec(),
        })
    }

    /// Parses line-delimited CSV text.
    ///
    /// With `column = None`, single-field rows use field 0 and rows with two or
    /// more fields use field 1 (the `index,value` layout). A first line whose
    /// selected field is not numeric is treated as a header and skipped.
    pub fn parse_csv(text: &str, column: Option<usize>) -> Result<Series> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| BfcrError::Parse {
                line: e.position().map_or(0, |p| p.line()),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(row as u64 + 1, |p| p.line());
            if record.iter().all(str::is_empty) {
                continue;
            }
            let col = column.unwrap_or(if record.len() >= 2 { 1 } else { 0 });
            let cell = record.get(col).ok_or_else(|| BfcrError::Parse {
                line,
                message: format!("missing column {col}"),
            })?;
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => values.push(v),
                Ok(_) => {
                    return Err(BfcrError::NonFiniteValue {
                        location: format!("line {line}"),
                    })
                }
                Err(_) if row == 0 => continue,
                Err(_) => {
                    return Err(BfcrError::Parse {
                        line,
                        message: format!("cannot parse {cell:?} as a number"),
                    })
                }
            }
        }
        Series::new(values)
    }

    /// One value per line, formatted so that parsing it back is exact.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 24);
        for v in &self.values {
            let _ = writeln!(out, "{v:.16e}");
        }
        out
    }
}

impl TryFrom<Vec<f64>> for Series {
    type Error = BfcrError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Series::new(values)
    }
}
