use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ActionValue, EnvError, Observation, RewardSpec, Units};
use crate::netsim::Scenario;

/// One behavioural-cloning example: a visited state and the expert's label.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperienceRow {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
    pub action: ActionValue,
}

impl ExperienceRow {
    pub fn new(obs: Observation, action: ActionValue) -> Self {
        Self {
            x1: obs.x1,
            x2: obs.x2,
            x3: obs.x3,
            x4: obs.x4,
            action,
        }
    }

    pub fn observation(&self) -> Observation {
        Observation {
            x1: self.x1,
            x2: self.x2,
            x3: self.x3,
            x4: self.x4,
        }
    }
}

/// Where a block of rows came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub scenario: Scenario,
    pub seed: u64,
    pub epsilon: f64,
    pub expert: String,
    pub reward_bounds: RewardSpec,
    pub rows: usize,
}

/// Rows plus the provenance of every collection run merged into them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperienceDataset {
    pub rows: Vec<ExperienceRow>,
    pub provenance: Vec<Provenance>,
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    rows: usize,
    provenance: Vec<Provenance>,
}

impl ExperienceDataset {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Concatenates `other` after `self`.
    pub fn merge(mut self, other: ExperienceDataset) -> Self {
        self.rows.extend(other.rows);
        self.provenance.extend(other.provenance);
        self
    }

    pub fn union<I: IntoIterator<Item = ExperienceDataset>>(parts: I) -> Self {
        parts
            .into_iter()
            .fold(ExperienceDataset::default(), ExperienceDataset::merge)
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        for row in &self.rows {
            row.observation().validate()?;
            ActionValue::new(row.action.get())?;
        }
        Ok(())
    }

    /// Column-major expression inputs with times in `units`.
    pub fn features(&self, units: Units) -> [Vec<f64>; 4] {
        let mut cols: [Vec<f64>; 4] = Default::default();
        for c in cols.iter_mut() {
            c.reserve(self.rows.len());
        }
        for row in &self.rows {
            for (c, v) in cols.iter_mut().zip(row.observation().to_vars(units)) {
                c.push(v);
            }
        }
        cols
    }

    pub fn labels(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.action.get()).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), EnvError> {
        let mut out = csv::Writer::from_writer(w);
        for row in &self.rows {
            out.serialize(row)?;
        }
        // header-only output for empty datasets
        if self.rows.is_empty() {
            out.write_record(["x1", "x2", "x3", "x4", "action"])?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, EnvError> {
        let mut input = csv::Reader::from_reader(r);
        let headers = input.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x1", "x2", "x3", "x4", "action"] {
            return Err(EnvError::Dataset(format!(
                "expected header x1,x2,x3,x4,action, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut rows = Vec::new();
        for (i, rec) in input.deserialize::<ExperienceRow>().enumerate() {
            let row = rec.map_err(|e| EnvError::Dataset(format!("row {}: {e}", i + 1)))?;
            row.observation()
                .validate()
                .map_err(|e| EnvError::Dataset(format!("row {}: {e}", i + 1)))?;
            rows.push(row);
        }
        Ok(Self {
            rows,
            provenance: Vec::new(),
        })
    }

    /// Path of the JSON provenance file stored next to `csv_path`.
    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    /// Writes the CSV and its provenance sidecar.
    pub fn save(&self, csv_path: &Path) -> Result<(), EnvError> {
        self.write_csv(BufWriter::new(File::create(csv_path)?))?;
        let sidecar = Sidecar {
            rows: self.rows.len(),
            provenance: self.provenance.clone(),
        };
        let mut f = BufWriter::new(File::create(Self::sidecar_path(csv_path))?);
        serde_json::to_writer_pretty(&mut f, &sidecar)?;
        f.write_all(b"\n")?;
        f.flush()?;
        Ok(())
    }

    /// Reads a CSV and, when present, its sidecar.
    pub fn load(csv_path: &Path) -> Result<Self, EnvError> {
        let mut ds = Self::read_csv(BufReader::new(File::open(csv_path)?))?;
        let side = Self::sidecar_path(csv_path);
        if side.exists() {
            let sidecar: Sidecar = serde_json::from_reader(BufReader::new(File::open(side)?))?;
            if sidecar.rows != ds.rows.len() {
                return Err(EnvError::Dataset(format!(
                    "sidecar lists {} rows, csv has {}",
                    sidecar.rows,
                    ds.rows.len()
                )));
            }
            ds.provenance = sidecar.provenance;
        }
        Ok(ds)
    }
}
