use serde::{Deserialize, Serialize};

use super::EvalError;

/// `(Σx)² / (n·Σx²)`.
pub fn jain_index(throughputs: &[f64]) -> Result<f64, EvalError> {
    if throughputs.is_empty() {
        return Err(EvalError::NoFlows);
    }
    if let Some(&x) = throughputs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(EvalError::NegativeThroughput(x));
    }
    let sum: f64 = throughputs.iter().sum();
    let sq: f64 = throughputs.iter().map(|x| x * x).sum();
    if sq == 0.0 {
        return Err(EvalError::AllZero);
    }
    Ok((sum * sum / (throughputs.len() as f64 * sq)).min(1.0))
}

/// Per-scenario results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub scenario: String,
    pub capacity_bps: f64,
    pub pairs: usize,
    pub seed: u64,
    pub utilization: f64,
    /// Seconds; empty when nothing was acknowledged after warm-up.
    pub mean_rtt_s: Option<f64>,
    pub loss_count: u64,
    /// Empty when no flow delivered anything.
    pub jain: Option<f64>,
    pub min_action: f64,
    pub max_action: f64,
    pub conservation_violations: u64,
}

/// Min-max normalized summary of one metric across a result table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricAggregate {
    pub metric: String,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub normalized_mean: f64,
    pub normalized_std: f64,
    pub samples: usize,
}

pub const AGGREGATION_FORMULA: &str = "per metric: v' = (v - min) / (max - min) over all rows \
     (0 when max == min); report mean and population std of v' plus raw min, max, mean";

type Metric = (&'static str, fn(&MetricsRow) -> Option<f64>);

/// Min-max normalizes each metric over `rows` and reports mean and spread.
pub fn aggregate(rows: &[MetricsRow]) -> Vec<MetricAggregate> {
    let metrics: [Metric; 4] = [
        ("utilization", |r| Some(r.utilization)),
        ("mean_rtt_s", |r| r.mean_rtt_s),
        ("loss_count", |r| Some(r.loss_count as f64)),
        ("jain", |r| r.jain),
    ];
    metrics
        .iter()
        .map(|(name, get)| {
            let v: Vec<f64> = rows.iter().filter_map(get).collect();
            summarize(name, &v)
        })
        .collect()
}

fn summarize(name: &str, v: &[f64]) -> MetricAggregate {
    if v.is_empty() {
        return MetricAggregate {
            metric: name.into(),
            min: f64::NAN,
            max: f64::NAN,
            mean: f64::NAN,
            normalized_mean: f64::NAN,
            normalized_std: f64::NAN,
            samples: 0,
        };
    }
    let n = v.len() as f64;
    let min = v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = max - min;
    let norm: Vec<f64> = v
        .iter()
        .map(|x| if span > 0.0 { (x - min) / span } else { 0.0 })
        .collect();
    let nmean = norm.iter().sum::<f64>() / n;
    let nvar = norm.iter().map(|x| (x - nmean) * (x - nmean)).sum::<f64>() / n;
    MetricAggregate {
        metric: name.into(),
        min,
        max,
        mean: v.iter().sum::<f64>() / n,
        normalized_mean: nmean,
        normalized_std: nvar.sqrt(),
        samples: v.len(),
    }
}
