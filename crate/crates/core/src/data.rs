//! Loss samples, text parsing and the bundled external-fraud dataset.

use serde::{Deserialize, Serialize};

use crate::error::{domain, FtgError, Result};
use crate::sample::RngStream;

/// The bundled external-fraud losses as shipped, one value per line.
pub const EXTERNAL_FRAUD_TEXT: &str = include_str!("../data/external_fraud.txt");

/// Where a sample's values came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Raw,
    /// Divided by `factor`, the mean of the parent sample.
    Standardized { factor: f64 },
    /// Drawn with replacement from a parent sample.
    Bootstrap { seed: u64, stream_id: u64 },
    /// `target_mean · (x − u) / (x̄ − u)`.
    Rescaled { threshold: f64, target_mean: f64 },
    Simulated { seed: u64, stream_id: u64 },
}

/// A nonempty collection of nonnegative, finite observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    values: Vec<f64>,
    provenance: Provenance,
}

impl Sample {
    pub fn new(values: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if values.is_empty() {
            return Err(FtgError::DegenerateSample("sample is empty".into()));
        }
        if let Some((i, x)) = values.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
            return Err(domain(format!("observation {i} is {x}; values must be finite and nonnegative")));
        }
        Ok(Self { values, provenance })
    }

    pub fn raw(values: Vec<f64>) -> Result<Self> {
        Self::new(values, Provenance::Raw)
    }

    /// The forty external-fraud exceedances (threshold zero, mean 100).
    pub fn external_fraud() -> Self {
        let values = parse_values(EXTERNAL_FRAUD_TEXT).expect("bundled dataset parses");
        Self::raw(values).expect("bundled dataset is valid")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `{x / x̄}` with its factor `x̄`.
    pub fn standardized(&self) -> Result<(Sample, f64)> {
        let m = self.mean();
        if !(m > 0.0) {
            return Err(FtgError::DegenerateSample("sample mean is zero".into()));
        }
        let values = self.values.iter().map(|x| x / m).collect();
        Ok((Sample::new(values, Provenance::Standardized { factor: m })?, m))
    }

    /// `{c · x}`, keeping the provenance.
    pub fn scaled(&self, c: f64) -> Result<Sample> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(domain(format!("scale factor must be positive, got {c}")));
        }
        Sample::new(self.values.iter().map(|x| c * x).collect(), self.provenance.clone())
    }

    /// Same-size resample with replacement.
    pub fn bootstrap(&self, rng: &mut RngStream) -> Sample {
        let n = self.values.len();
        let values = (0..n)
            .map(|_| self.values[((rng.uniform() * n as f64) as usize).min(n - 1)])
            .collect();
        Sample {
            values,
            provenance: Provenance::Bootstrap {
                seed: rng.seed(),
                stream_id: rng.stream_id(),
            },
        }
    }

    /// Number of distinct strictly positive values.
    pub fn distinct_positive(&self) -> usize {
        let mut v: Vec<f64> = self.values.iter().copied().filter(|x| *x > 0.0).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v.len()
    }
}

/// `y = target_mean · (x − u) / (x̄ − u)`, which has mean exactly `target_mean`.
pub fn rescale_to_threshold(raw: &[f64], threshold: f64, target_mean: f64) -> Result<Sample> {
    if raw.is_empty() {
        return Err(FtgError::DegenerateSample("sample is empty".into()));
    }
    if !(target_mean > 0.0 && target_mean.is_finite()) {
        return Err(domain(format!("target mean must be positive, got {target_mean}")));
    }
    if let Some(x) = raw.iter().find(|x| !(**x > threshold)) {
        return Err(domain(format!("value {x} does not exceed the threshold {threshold}")));
    }
    let excess_mean = raw.iter().map(|x| x - threshold).sum::<f64>() / raw.len() as f64;
    let values = raw
        .iter()
        .map(|x| target_mean * ((x - threshold) / excess_mean))
        .collect();
    Sample::new(
        values,
        Provenance::Rescaled {
            threshold,
            target_mean,
        },
    )
}

/// Parses newline-delimited numbers or a single-column CSV with an optional
/// header line. Blank lines and `#` comments are skipped.
pub fn parse_values(text: &str) -> Result<Vec<f64>> {
    parse_column(text, None)
}

/// Like [`parse_values`], picking one column of a comma-separated file by
/// zero-based index or header name.
pub fn parse_column(text: &str, column: Option<&str>) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut index: Option<usize> = column.and_then(|c| c.parse().ok());
    let mut seen_content = false;
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content.split(',').map(str::trim).collect();
        let first_content = !seen_content;
        seen_content = true;
        if first_content && fields.iter().any(|f| f.parse::<f64>().is_err()) {
            // header line
            if let Some(name) = column.filter(|_| index.is_none()) {
                index = Some(fields.iter().position(|f| *f == name).ok_or_else(|| FtgError::Parse {
                    line: line_no,
                    message: format!("no column named {name:?}"),
                })?);
            }
            continue;
        }
        let col = match (index, fields.len()) {
            (Some(c), _) => c,
            (None, 1) => 0,
            (None, k) => {
                return Err(FtgError::Parse {
                    line: line_no,
                    message: format!("{k} columns found; choose one"),
                })
            }
        };
        let field = fields.get(col).ok_or_else(|| FtgError::Parse {
            line: line_no,
            message: format!("missing column {col}"),
        })?;
        let x: f64 = field.parse().map_err(|_| FtgError::Parse {
            line: line_no,
            message: format!("cannot parse {field:?} as a number"),
        })?;
        if !x.is_finite() || x < 0.0 {
            return Err(FtgError::Parse {
                line: line_no,
                message: format!("{x} is not a finite nonnegative value"),
            });
        }
        values.push(x);
    }
    if values.is_empty() {
        return Err(FtgError::DegenerateSample("no values found in the input".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_dataset() {
        let s = Sample::external_fraud();
        assert_eq!(s.len(), 40);
        assert_eq!(s.values()[39], 891.62);
        assert!((s.mean() - 100.0).abs() < 0.01);
    }

    #[test]
    fn parses_plain_and_csv() {
        assert_eq!(parse_values("1\n2.5\n\n# note\n3e1\n").unwrap(), vec![1.0, 2.5, 30.0]);
        assert_eq!(parse_values("loss\n4\n5\n").unwrap(), vec![4.0, 5.0]);
        let csv = "id,loss\n1,4.5\n2,0.25\n";
        assert_eq!(parse_column(csv, Some("loss")).unwrap(), vec![4.5, 0.25]);
        assert_eq!(parse_column(csv, Some("1")).unwrap(), vec![4.5, 0.25]);
        assert!(parse_values(csv).is_err());
    }

    #[test]
    fn reports_line_numbers() {
        match parse_values("1\n2\nabc\n") {
            Err(FtgError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        match parse_values("1\n-2\n") {
            Err(FtgError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_values("1\nNaN\n"), Err(FtgError::Parse { line: 2, .. })));
        assert!(matches!(parse_values("# only a comment\n"), Err(FtgError::DegenerateSample(_))));
    }
}
