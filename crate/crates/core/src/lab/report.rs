use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use super::config::{ExperimentConfig, Pipeline};
use super::LabError;

pub const REPORT_SCHEMA: &str = "jnp-lab/experiment-report";
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// One (domain, J, function, p) cell of an experiment.
#[derive(Clone, Debug, Serialize)]
pub struct ReportItem {
    pub domain: String,
    pub john: bool,
    #[serde(rename = "J")]
    pub resolution: i32,
    pub function: Option<String>,
    pub p: Option<f64>,
    pub numerator: Option<f64>,
    pub denominator: Option<f64>,
    /// `None` when the ratio is infinite or the pipeline has none.
    pub ratio: Option<f64>,
    pub infinite: bool,
    pub residual: Option<f64>,
    pub tau: Option<u32>,
    pub sigma: Option<f64>,
    /// Failure of the underlying computation, if any.
    pub error: Option<String>,
    /// Pipeline specific results.
    pub detail: Value,
}

impl ReportItem {
    pub(crate) fn new(domain: String, john: bool, resolution: i32) -> Self {
        Self {
            domain,
            john,
            resolution,
            function: None,
            p: None,
            numerator: None,
            denominator: None,
            ratio: None,
            infinite: false,
            residual: None,
            tau: None,
            sigma: None,
            error: None,
            detail: Value::Null,
        }
    }

    pub(crate) fn set_ratio(&mut self, numerator: f64, denominator: f64, ratio: f64, infinite: bool) {
        self.numerator = Some(numerator);
        self.denominator = Some(denominator);
        self.ratio = (!infinite).then_some(ratio);
        self.infinite = infinite;
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResolutionAggregate {
    #[serde(rename = "J")]
    pub resolution: i32,
    pub max_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Aggregate {
    pub items: usize,
    pub finite_ratios: usize,
    pub infinite_ratios: usize,
    pub errors: usize,
    pub max_ratio: Option<f64>,
    pub median_ratio: Option<f64>,
    pub by_resolution: Vec<ResolutionAggregate>,
}

fn max_median(mut v: Vec<f64>) -> (Option<f64>, Option<f64>) {
    if v.is_empty() {
        return (None, None);
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    (Some(v[n - 1]), Some(median))
}

impl Aggregate {
    pub(crate) fn of(items: &[ReportItem]) -> Self {
        let ratios = |pred: &dyn Fn(&ReportItem) -> bool| -> Vec<f64> {
            items.iter().filter(|i| pred(i)).filter_map(|i| i.ratio).collect()
        };
        let (max_ratio, median_ratio) = max_median(ratios(&|_| true));
        let mut levels: Vec<i32> = items.iter().map(|i| i.resolution).collect();
        levels.sort_unstable();
        levels.dedup();
        let by_resolution = levels
            .into_iter()
            .map(|j| {
                let (max_ratio, median_ratio) = max_median(ratios(&|i| i.resolution == j));
                ResolutionAggregate {
                    resolution: j,
                    max_ratio,
                    median_ratio,
                }
            })
            .collect();
        Self {
            items: items.len(),
            finite_ratios: items.iter().filter(|i| i.ratio.is_some()).count(),
            infinite_ratios: items.iter().filter(|i| i.infinite).count(),
            errors: items.iter().filter(|i| i.error.is_some()).count(),
            max_ratio,
            median_ratio,
            by_resolution,
        }
    }
}

/// A failed invariant with the data that shows it.
#[derive(Clone, Debug, Serialize)]
pub struct InvariantFailure {
    pub check: String,
    /// Indices into the report's items.
    pub items: Vec<usize>,
    pub witness: Value,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub schema: &'static str,
    pub schema_version: u32,
    pub toolkit_version: &'static str,
    pub pipeline: Pipeline,
    pub seed: u64,
    pub params: ExperimentConfig,
    pub items: Vec<ReportItem>,
    pub aggregate: Aggregate,
    pub invariant_failures: Vec<InvariantFailure>,
    /// Only present when timing was requested, so that reports stay
    /// reproducible byte for byte by default.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_clock_seconds: Option<f64>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    domain: &'a str,
    #[serde(rename = "J")]
    resolution: i32,
    function: Option<&'a str>,
    p: Option<f64>,
    numerator: Option<f64>,
    denominator: Option<f64>,
    ratio: Option<f64>,
    residual: Option<f64>,
    tau: Option<u32>,
    sigma: Option<f64>,
}

impl ExperimentReport {
    pub fn passes(&self) -> bool {
        self.invariant_failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per item. Infinite ratios are written as `inf`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), LabError> {
        let mut w = csv::Writer::from_writer(out);
        for item in &self.items {
            let ratio = if item.infinite { Some(f64::INFINITY) } else { item.ratio };
            w.serialize(CsvRow {
                domain: &item.domain,
                resolution: item.resolution,
                function: item.function.as_deref(),
                p: item.p,
                numerator: item.numerator,
                denominator: item.denominator,
                ratio,
                residual: item.residual,
                tau: item.tau,
                sigma: item.sigma,
            })
            .map_err(|e| LabError::Output(e.to_string()))?;
        }
        w.flush().map_err(|e| LabError::Output(e.to_string()))
    }
}

/// Structural check of a serialized report: required keys with the right
/// JSON types, and a matching schema name and version.
pub fn validate_report_json(v: &Value) -> Result<(), String> {
    let obj = v.as_object().ok_or("report is not an object")?;
    let need = |key: &str, ok: fn(&Value) -> bool| -> Result<(), String> {
        match obj.get(key) {
            Some(x) if ok(x) => Ok(()),
            Some(_) => Err(format!("field {key:?} has the wrong type")),
            None => Err(format!("missing field {key:?}")),
        }
    };
    need("schema", |x| x.as_str() == Some(REPORT_SCHEMA))?;
    need("schema_version", |x| x.as_u64() == Some(REPORT_SCHEMA_VERSION as u64))?;
    need("toolkit_version", Value::is_string)?;
    need("pipeline", Value::is_string)?;
    need("seed", Value::is_u64)?;
    need("params", Value::is_object)?;
    need("items", Value::is_array)?;
    need("aggregate", Value::is_object)?;
    need("invariant_failures", Value::is_array)?;
    let num_or_null = |x: Option<&Value>| matches!(x, Some(Value::Null) | Some(Value::Number(_)));
    for (i, item) in obj["items"].as_array().expect("checked").iter().enumerate() {
        let item = item.as_object().ok_or(format!("items[{i}] is not an object"))?;
        if !item.get("domain").is_some_and(Value::is_string) || !item.get("J").is_some_and(Value::is_i64) {
            return Err(format!("items[{i}] lacks domain or J"));
        }
        for key in ["numerator", "denominator", "ratio", "residual", "tau", "sigma"] {
            if !num_or_null(item.get(key)) {
                return Err(format!("items[{i}].{key} must be a number or null"));
            }
        }
        if !item.get("infinite").is_some_and(Value::is_boolean) {
            return Err(format!("items[{i}].infinite must be a boolean"));
        }
    }
    let agg = obj["aggregate"].as_object().expect("checked");
    for key in ["max_ratio", "median_ratio"] {
        if !num_or_null(agg.get(key)) {
            return Err(format!("aggregate.{key} must be a number or null"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_and_median() {
        assert_eq!(max_median(vec![]), (None, None));
        assert_eq!(max_median(vec![3.0, 1.0, 2.0]), (Some(3.0), Some(2.0)));
        assert_eq!(max_median(vec![4.0, 1.0, 2.0, 3.0]), (Some(4.0), Some(2.5)));
    }

    #[test]
    fn infinite_ratio_is_null_and_counted() {
        let mut a = ReportItem::new("square".into(), true, 4);
        a.set_ratio(1.0, 0.0, f64::INFINITY, true);
        let mut b = ReportItem::new("square".into(), true, 5);
        b.set_ratio(1.0, 2.0, 0.5, false);
        let agg = Aggregate::of(&[a.clone(), b]);
        assert_eq!((agg.finite_ratios, agg.infinite_ratios), (1, 1));
        assert_eq!(agg.max_ratio, Some(0.5));
        assert_eq!(agg.by_resolution[0].max_ratio, None);
        let v = serde_json::to_value(&a).unwrap();
        assert!(v["ratio"].is_null());
    }
}
