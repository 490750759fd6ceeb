//! Min-max normalization and the four heuristics combining `s_R` and `s_U`.

use std::fmt;
use std::str::FromStr;

use crate::error::{ensure, Result, RuberError};

const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl ScoreSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        ScoreSeries {
            name: name.into(),
            values,
        }
    }
}

/// A normalized series together with the population min/max that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub series: ScoreSeries,
    pub min: f64,
    pub max: f64,
}

/// Maps `series` onto `[0, 1]` using its own min and max. A constant series
/// maps to 0.5 everywhere.
pub fn normalize(series: &ScoreSeries) -> Result<Normalized> {
    ensure!(!series.values.is_empty(), "cannot normalize empty series `{}`", series.name);
    ensure!(
        series.values.iter().all(|v| v.is_finite()),
        "series `{}` contains non-finite values",
        series.name
    );
    let min = series.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = series.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = max - min;
    let values = if range == 0.0 {
        vec![0.5; series.values.len()]
    } else {
        series.values.iter().map(|v| (v - min) / range).collect()
    };
    Ok(Normalized {
        series: ScoreSeries::new(series.name.clone(), values),
        min,
        max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlendStrategy {
    Min,
    Max,
    GeometricMean,
    ArithmeticMean,
}

impl BlendStrategy {
    pub const ALL: [BlendStrategy; 4] = [
        BlendStrategy::Min,
        BlendStrategy::Max,
        BlendStrategy::GeometricMean,
        BlendStrategy::ArithmeticMean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlendStrategy::Min => "min",
            BlendStrategy::Max => "max",
            BlendStrategy::GeometricMean => "geometric",
            BlendStrategy::ArithmeticMean => "arithmetic",
        }
    }
}

impl fmt::Display for BlendStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl serde::Serialize for BlendStrategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl FromStr for BlendStrategy {
    type Err = RuberError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "min" => Ok(BlendStrategy::Min),
            "max" => Ok(BlendStrategy::Max),
            "geometric" | "geometric_mean" | "geometric-mean" => Ok(BlendStrategy::GeometricMean),
            "arithmetic" | "arithmetic_mean" | "arithmetic-mean" => {
                Ok(BlendStrategy::ArithmeticMean)
            }
            other => Err(RuberError::Config(format!(
                "unknown blend strategy `{other}` (expected min, max, geometric, arithmetic)"
            ))),
        }
    }
}

/// Combines normalized referenced and unreferenced scores.
pub fn blend(referenced: f64, unreferenced: f64, strategy: BlendStrategy) -> Result<f64> {
    for (name, v) in [("referenced", referenced), ("unreferenced", unreferenced)] {
        ensure!(
            (-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&v),
            "{name} score {v} outside [0, 1]"
        );
    }
    let x = referenced.clamp(0.0, 1.0);
    let y = unreferenced.clamp(0.0, 1.0);
    Ok(match strategy {
        BlendStrategy::Min => x.min(y),
        BlendStrategy::Max => x.max(y),
        BlendStrategy::GeometricMean => (x * y).sqrt(),
        BlendStrategy::ArithmeticMean => (x + y) / 2.0,
    })
}
