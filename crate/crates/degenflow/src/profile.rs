//! Speed profiles of the periodic flow: the degeneracy data of the generator.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The speed function of the flow along each fiber.
///
/// The degenerate profile is a power law `c * m^alpha` on `[0, m0)`, optionally
/// continued by a tabulated positive function on `[m0, 1]`. A purely tabulated
/// profile (positive on its whole interval) is also supported; it models
/// non-degenerate flows, which are useful as band-structure references.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowProfile {
    kind: ProfileKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum ProfileKind {
    PowerLaw {
        alpha: f64,
        c: f64,
        m0: f64,
        /// Piecewise-linear extension on [m0, 1]; present only when m0 < 1.
        extension: Option<Table>,
    },
    Tabulated(Table),
}

/// Strictly increasing sample points with positive values, interpolated
/// linearly between neighbours.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct Table {
    points: Vec<f64>,
    values: Vec<f64>,
}

impl Table {
    fn new(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() || points.len() < 2 {
            return Err(Error::Parameter(
                "profile table needs at least two (m, value) pairs".into(),
            ));
        }
        if !points.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Parameter(
                "profile table points must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Parameter(
                "profile table values must be positive".into(),
            ));
        }
        Ok(Table { points, values })
    }

    fn eval(&self, m: f64) -> f64 {
        let pts = &self.points;
        if m <= pts[0] {
            return self.values[0];
        }
        if m >= pts[pts.len() - 1] {
            return self.values[pts.len() - 1];
        }
        let i = pts.partition_point(|&p| p <= m) - 1;
        let t = (m - pts[i]) / (pts[i + 1] - pts[i]);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    fn min(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    fn max(&self) -> f64 {
        self.values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl FlowProfile {
    /// Pure power law `m -> c * m^alpha` on all of `[0, 1]`.
    pub fn power_law(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!(
                "degeneracy exponent must be positive, got {alpha}"
            )));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Parameter(format!(
                "speed scale must be positive, got {c}"
            )));
        }
        Ok(FlowProfile {
            kind: ProfileKind::PowerLaw {
                alpha,
                c,
                m0: 1.0,
                extension: None,
            },
        })
    }

    /// Power law on `[0, m0)` continued by the tabulated values on `[m0, 1]`.
    /// The first table point must be `m0` and the table must match the power
    /// law there (continuity).
    pub fn power_law_with_extension(
        alpha: f64,
        c: f64,
        m0: f64,
        points: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if !(m0 > 0.0 && m0 < 1.0) {
            return Err(Error::Parameter(format!(
                "cutoff must lie in (0, 1) for an extension, got {m0}"
            )));
        }
        let base = Self::power_law(alpha, c)?;
        let table = Table::new(points, values)?;
        if (table.points[0] - m0).abs() > 1e-14 {
            return Err(Error::Parameter(
                "extension table must start at the cutoff".into(),
            ));
        }
        let join = c * m0.powf(alpha);
        if (table.values[0] - join).abs() > 1e-10 * (1.0 + join) {
            return Err(Error::Parameter(format!(
                "extension is discontinuous at the cutoff: table {} vs power law {join}",
                table.values[0]
            )));
        }
        let ProfileKind::PowerLaw { alpha, c, .. } = base.kind else {
            unreachable!()
        };
        Ok(FlowProfile {
            kind: ProfileKind::PowerLaw {
                alpha,
                c,
                m0,
                extension: Some(table),
            },
        })
    }

    /// Positive tabulated profile on `[points[0], 1]` with linear
    /// interpolation. Models non-degenerate flows.
    pub fn tabulated(points: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let table = Table::new(points, values)?;
        Ok(FlowProfile {
            kind: ProfileKind::Tabulated(table),
        })
    }

    /// Constant profile `m -> v` on `[0, 1]`.
    pub fn constant(v: f64) -> Result<Self> {
        Self::tabulated(vec![0.0, 1.0], vec![v, v])
    }

    /// Lower end of the profile's domain (0 for degenerate profiles).
    pub fn domain_start(&self) -> f64 {
        match &self.kind {
            ProfileKind::PowerLaw { .. } => 0.0,
            ProfileKind::Tabulated(t) => t.points[0],
        }
    }

    /// Speed at `m`. Exact power law below the cutoff.
    pub fn speed(&self, m: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&m) {
            return Err(Error::Domain(format!("m = {m} outside [0, 1]")));
        }
        match &self.kind {
            ProfileKind::PowerLaw {
                alpha,
                c,
                m0,
                extension,
            } => {
                if m < *m0 || extension.is_none() {
                    Ok(if m == 0.0 { 0.0 } else { c * m.powf(*alpha) })
                } else {
                    Ok(extension.as_ref().unwrap().eval(m))
                }
            }
            ProfileKind::Tabulated(t) => {
                if m < t.points[0] {
                    return Err(Error::Domain(format!(
                        "m = {m} below the profile domain start {}",
                        t.points[0]
                    )));
                }
                Ok(t.eval(m))
            }
        }
    }

    /// Minimum speed over the profile domain.
    pub fn min_speed(&self) -> f64 {
        match &self.kind {
            ProfileKind::PowerLaw { .. } => 0.0,
            ProfileKind::Tabulated(t) => t.min(),
        }
    }

    /// Maximum speed over the profile domain. Linear interpolation attains
    /// extrema at table points, so a table scan suffices.
    pub fn max_speed(&self) -> f64 {
        match &self.kind {
            ProfileKind::PowerLaw {
                alpha,
                c,
                m0,
                extension,
            } => {
                let power_part = if extension.is_some() {
                    c * m0.powf(*alpha)
                } else {
                    *c
                };
                match extension {
                    Some(t) => power_part.max(t.max()),
                    None => power_part,
                }
            }
            ProfileKind::Tabulated(t) => t.max(),
        }
    }

    /// True when the flow degenerates (the speed vanishes somewhere).
    pub fn is_degenerate(&self) -> bool {
        self.min_speed() == 0.0
    }

    /// Degeneracy exponent for power-law profiles.
    pub fn alpha(&self) -> Option<f64> {
        match &self.kind {
            ProfileKind::PowerLaw { alpha, .. } => Some(*alpha),
            ProfileKind::Tabulated(_) => None,
        }
    }

    /// Speed scale for power-law profiles.
    pub fn scale(&self) -> Option<f64> {
        match &self.kind {
            ProfileKind::PowerLaw { c, .. } => Some(*c),
            ProfileKind::Tabulated(_) => None,
        }
    }

    /// True when the profile is `c * m^alpha` on all of `[0, 1]`.
    pub fn is_pure_power_law(&self) -> bool {
        matches!(
            &self.kind,
            ProfileKind::PowerLaw {
                extension: None,
                ..
            }
        )
    }

    /// Inverse of the speed on the power-law region: the `m` with
    /// `c * m^alpha = y`. `None` if `y` falls outside that region.
    pub fn power_law_preimage(&self, y: f64) -> Option<f64> {
        match &self.kind {
            ProfileKind::PowerLaw { alpha, c, m0, .. } => {
                if y < 0.0 {
                    return None;
                }
                let m = (y / c).powf(1.0 / alpha);
                if m <= *m0 || (*m0 == 1.0 && m <= 1.0) {
                    Some(m)
                } else {
                    None
                }
            }
            ProfileKind::Tabulated(_) => None,
        }
    }
}
