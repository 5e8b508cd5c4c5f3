//! Serializable provenance records: one sample of one experiment, with
//! enough metadata to reproduce it.

use crate::params::SpectralParams;
use serde::{Deserialize, Serialize};

/// What kind of sample a record holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordKind {
    RateSample,
    DosSample,
    ToySample,
    NormReport,
}

/// A real or complex measured value. Complex values serialize as
/// `{ "re": ..., "im": ... }`, reals as a bare number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Value {
    Real(f64),
    Complex { re: f64, im: f64 },
}

impl Value {
    pub fn complex(re: f64, im: f64) -> Self {
        Value::Complex { re, im }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Value::Real(v) => Some(*v),
            Value::Complex { .. } => None,
        }
    }
}

/// Grid metadata carried by every record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub panels: usize,
    pub order: usize,
    pub grading: f64,
    pub nodes: usize,
}

/// One `(abscissa, value)` sample with full provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub kind: RecordKind,
    pub params: SpectralParams,
    pub grid: Option<GridMeta>,
    pub kmax: Option<usize>,
    pub seed: Option<u64>,
    /// Averaging horizon or energy level, depending on `kind`.
    pub abscissa: f64,
    pub value: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_value: Option<Value>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_lossless() {
        let rec = ExperimentRecord {
            kind: RecordKind::DosSample,
            params: SpectralParams::new(0.75, 0.0, 1.0).unwrap(),
            grid: Some(GridMeta {
                panels: 128,
                order: 2,
                grading: 3.0,
                nodes: 256,
            }),
            kmax: Some(32),
            seed: Some(7),
            abscissa: 0.1 + 0.2, // deliberately not exactly representable as text
            value: Value::complex(std::f64::consts::PI, -1.0 / 3.0),
            oracle_value: Some(Value::Real(2.0f64.sqrt())),
        };
        let text = serde_json::to_string(&rec).unwrap();
        let back: ExperimentRecord = serde_json::from_str(&text).unwrap();
        assert_eq!(back.kind, rec.kind);
        assert_eq!(back.abscissa.to_bits(), rec.abscissa.to_bits());
        match (back.value, rec.value) {
            (Value::Complex { re: a, im: b }, Value::Complex { re: c, im: d }) => {
                assert_eq!(a.to_bits(), c.to_bits());
                assert_eq!(b.to_bits(), d.to_bits());
            }
            _ => panic!("value variant changed in round trip"),
        }
        assert_eq!(
            back.oracle_value.unwrap().as_real().unwrap().to_bits(),
            2.0f64.sqrt().to_bits()
        );
    }
}
