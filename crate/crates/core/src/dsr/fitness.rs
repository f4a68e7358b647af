use serde::{Deserialize, Serialize};

use super::DsrError;
use crate::env::{ExperienceDataset, Units};
use crate::expr::{ExprTree, VAR_COUNT};
use crate::policy::ActionMapping;

/// What the expression output is compared with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetMode {
    /// Raw expression values against the labels.
    Raw,
    /// Expression values pushed through the action mapping, as when the
    /// expression drives a sender.
    #[default]
    Action,
}

/// Inputs and labels of a regression problem, ready for batch evaluation.
#[derive(Clone, Debug)]
pub struct FitnessData {
    columns: [Vec<f64>; VAR_COUNT],
    labels: Vec<f64>,
    label_std: f64,
    mode: TargetMode,
    mapping: ActionMapping,
}

impl FitnessData {
    pub fn new(
        columns: [Vec<f64>; VAR_COUNT],
        labels: Vec<f64>,
        mode: TargetMode,
    ) -> Result<Self, DsrError> {
        if labels.is_empty() {
            return Err(DsrError::EmptyDataset);
        }
        if columns.iter().any(|c| c.len() != labels.len()) {
            return Err(DsrError::Shape);
        }
        let std = population_std(&labels);
        if std.is_nan() || std <= 0.0 {
            return Err(DsrError::DegenerateDataset);
        }
        Ok(Self {
            columns,
            labels,
            label_std: std,
            mode,
            mapping: ActionMapping::default(),
        })
    }

    pub fn from_dataset(
        ds: &ExperienceDataset,
        units: Units,
        mode: TargetMode,
    ) -> Result<Self, DsrError> {
        Self::new(ds.features(units), ds.labels(), mode)
    }

    /// Rows generated by `target` at the given points.
    pub fn planted(target: &ExprTree, points: &[[f64; VAR_COUNT]]) -> Result<Self, DsrError> {
        let mut columns: [Vec<f64>; VAR_COUNT] = Default::default();
        for p in points {
            for (c, &v) in columns.iter_mut().zip(p) {
                c.push(v);
            }
        }
        let labels = points.iter().map(|p| target.evaluate(p)).collect();
        Self::new(columns, labels, TargetMode::Raw)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn mode(&self) -> TargetMode {
        self.mode
    }

    pub fn label_std(&self) -> f64 {
        self.label_std
    }

    /// Predictions in label space; `None` when any row is numerically degenerate.
    pub fn predict(&self, tree: &ExprTree) -> Option<Vec<f64>> {
        let out = tree.evaluate_columns(&self.columns);
        if out.is_degenerate() {
            return None;
        }
        let mut v = out.values;
        if self.mode == TargetMode::Action {
            for y in &mut v {
                *y = self.mapping.map_raw(*y);
            }
        }
        Some(v)
    }

    /// RMSE over the label standard deviation.
    pub fn nrmse(&self, tree: &ExprTree) -> Option<f64> {
        let pred = self.predict(tree)?;
        let sse: f64 = pred
            .iter()
            .zip(&self.labels)
            .map(|(p, y)| (p - y) * (p - y))
            .sum();
        Some((sse / self.len() as f64).sqrt() / self.label_std)
    }

    /// `1 / (1 + NRMSE)`, or 0 for degenerate expressions.
    pub fn fitness(&self, tree: &ExprTree) -> f64 {
        self.nrmse(tree).map_or(0.0, fitness_from_nrmse)
    }
}

pub fn fitness_from_nrmse(nrmse: f64) -> f64 {
    1.0 / (1.0 + nrmse)
}

fn population_std(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt()
}
