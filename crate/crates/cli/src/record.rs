use std::collections::BTreeMap;

use rwo_core::env::DeskScaleParams;
use rwo_core::stats::mean_se;
use serde::Serialize;

use crate::config::ExperimentConfig;

/// One numeric cell: finite, signed infinity, or not available.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Value {
    Num(f64),
    Na,
}

impl Value {
    /// NaN becomes NA; infinities are kept.
    pub fn of(x: f64) -> Value {
        if x.is_nan() {
            Value::Na
        } else {
            Value::Num(x)
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Value::Num(x) if x.is_finite() => Some(x),
            _ => None,
        }
    }

    pub fn render(self) -> String {
        match self {
            Value::Num(x) if x == f64::INFINITY => "inf".into(),
            Value::Num(x) if x == f64::NEG_INFINITY => "-inf".into(),
            Value::Num(x) => format!("{x:?}"),
            Value::Na => "NA".into(),
        }
    }

    pub fn parse(cell: &str) -> Option<Value> {
        match cell {
            "inf" => Some(Value::Num(f64::INFINITY)),
            "-inf" => Some(Value::Num(f64::NEG_INFINITY)),
            "NA" => Some(Value::Na),
            s => s.parse::<f64>().ok().filter(|x| x.is_finite()).map(Value::Num),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Value {
        Value::of(x)
    }
}

impl From<Option<f64>> for Value {
    fn from(x: Option<f64>) -> Value {
        x.map_or(Value::Na, Value::of)
    }
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Value::Num(x) if x.is_finite() => s.serialize_f64(*x),
            other => s.serialize_str(&other.render()),
        }
    }
}

/// One long-format row.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub replicate: usize,
    pub point: String,
    pub metric: String,
    pub value: Value,
    /// Empty unless the measurement failed.
    pub error_kind: String,
}

pub const CSV_HEADER: [&str; 6] = ["experiment", "replicate", "point", "metric", "value", "error_kind"];

#[derive(Clone, Debug, Default, Serialize)]
pub struct MetricSummary {
    pub count: usize,
    pub finite: usize,
    pub infinite: usize,
    pub missing: usize,
    pub mean: Option<f64>,
    pub std_error: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

impl MetricSummary {
    pub fn of(values: &[Value]) -> Self {
        let xs: Vec<f64> = values.iter().filter_map(|v| v.finite()).collect();
        let ms = mean_se(&xs);
        MetricSummary {
            count: values.len(),
            finite: xs.len(),
            infinite: values.iter().filter(|v| matches!(v, Value::Num(x) if x.is_infinite())).count(),
            missing: values.iter().filter(|v| **v == Value::Na).count(),
            mean: ms.map(|m| m.0).or_else(|| (xs.len() == 1).then(|| xs[0])),
            std_error: ms.map(|m| m.1),
            min: xs.iter().copied().reduce(f64::min),
            max: xs.iter().copied().reduce(f64::max),
        }
    }
}

/// Result of one experiment run.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config: ExperimentConfig,
    pub version: String,
    pub wall_time_s: f64,
    /// Resolved scale parameters at each n of the ladder.
    pub desk: Vec<(f64, DeskScaleParams)>,
    pub points: Vec<String>,
    pub metrics: Vec<String>,
    pub rows: Vec<Row>,
    /// Replicates with at least one failed measurement.
    pub failed_replicates: usize,
    /// Per point, per metric.
    pub summary: BTreeMap<String, BTreeMap<String, MetricSummary>>,
    /// Experiment-specific derived quantities (fits, trend checks).
    pub derived: BTreeMap<String, Value>,
}

impl RunRecord {
    /// Values of one (point, metric) column across replicates, in replicate order.
    pub fn column(&self, point: &str, metric: &str) -> Vec<Value> {
        self.rows.iter().filter(|r| r.point == point && r.metric == metric).map(|r| r.value).collect()
    }

    pub fn finite_column(&self, point: &str, metric: &str) -> Vec<f64> {
        self.column(point, metric).into_iter().filter_map(Value::finite).collect()
    }

    /// Mean of the finite values of a column.
    pub fn mean(&self, point: &str, metric: &str) -> Option<f64> {
        self.summary.get(point).and_then(|m| m.get(metric)).and_then(|s| s.mean)
    }

    pub fn derived(&self, name: &str) -> Value {
        self.derived.get(name).copied().unwrap_or(Value::Na)
    }

    pub(crate) fn summarize(&mut self) {
        let mut summary = BTreeMap::new();
        for p in &self.points {
            let mut per = BTreeMap::new();
            for m in &self.metrics {
                per.insert(m.clone(), MetricSummary::of(&self.column(p, m)));
            }
            summary.insert(p.clone(), per);
        }
        self.summary = summary;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn specials_render_and_parse() {
        for (v, s) in [(Value::Num(f64::INFINITY), "inf"), (Value::Num(f64::NEG_INFINITY), "-inf"), (Value::Na, "NA")] {
            assert_eq!(v.render(), s);
            assert_eq!(Value::parse(s), Some(v));
        }
        assert_eq!(Value::of(f64::NAN), Value::Na);
        assert_eq!(Value::parse("NaN"), None);
        assert_eq!(Value::parse(""), None);
    }

    #[test]
    fn summary_counts_kinds() {
        let s = MetricSummary::of(&[Value::Num(1.0), Value::Num(3.0), Value::Num(f64::INFINITY), Value::Na]);
        assert_eq!((s.count, s.finite, s.infinite, s.missing), (4, 2, 1, 1));
        assert_eq!(s.mean, Some(2.0));
        assert_eq!((s.min, s.max), (Some(1.0), Some(3.0)));
        let one = MetricSummary::of(&[Value::Num(0.5)]);
        assert_eq!((one.mean, one.std_error), (Some(0.5), None));
    }

    proptest! {
        #[test]
        fn finite_values_round_trip_exactly(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let v = Value::Num(x);
            prop_assert_eq!(Value::parse(&v.render()), Some(v));
        }
    }
}
