//! Replicated experimental designs and their CSV form.
//!
//! The CSV layout is one row per replication with header `x1,...,xk,y`
//! (or `y1,...,ym` for vector outputs). Rows that share identical inputs are
//! grouped back into one design point when reading.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    pub simulator: Option<String>,
    pub seed: Option<u64>,
}

/// `N` design points, each with `R_i ≥ 1` replicated outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub design_points: Vec<Vec<f64>>,
    pub replications: Vec<Vec<Vec<f64>>>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn new(design_points: Vec<Vec<f64>>, replications: Vec<Vec<Vec<f64>>>, provenance: Provenance) -> Result<Self> {
        let ds = Self { design_points, replications, provenance };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        if self.design_points.is_empty() {
            return Err(Error::EmptySample);
        }
        check_dim(self.design_points.len(), self.replications.len())?;
        let in_dim = self.design_points[0].len();
        let out_dim = self.replications[0].first().map_or(0, Vec::len);
        if in_dim == 0 || out_dim == 0 {
            return Err(Error::ConfigInvalid("dataset needs at least one input and one output column".into()));
        }
        for (x, reps) in self.design_points.iter().zip(&self.replications) {
            check_dim(in_dim, x.len())?;
            if reps.is_empty() {
                return Err(Error::ConfigInvalid("every design point needs at least one replication".into()));
            }
            for y in reps {
                check_dim(out_dim, y.len())?;
            }
            if x.iter().chain(reps.iter().flatten()).any(|v| !v.is_finite()) {
                return Err(Error::NumericalBlowup("non-finite dataset value".into()));
            }
        }
        Ok(())
    }

    /// Groups flat `(x, y)` rows by identical `x`, keeping first-seen order.
    pub fn from_rows(rows: Vec<(Vec<f64>, Vec<f64>)>, provenance: Provenance) -> Result<Self> {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut design_points = Vec::new();
        let mut replications: Vec<Vec<Vec<f64>>> = Vec::new();
        for (x, y) in rows {
            let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
            let slot = *index.entry(key).or_insert_with(|| {
                design_points.push(x.clone());
                replications.push(Vec::new());
                design_points.len() - 1
            });
            replications[slot].push(y);
        }
        Self::new(design_points, replications, provenance)
    }

    pub fn input_dim(&self) -> usize {
        self.design_points[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.replications[0][0].len()
    }

    pub fn n_points(&self) -> usize {
        self.design_points.len()
    }

    pub fn n_rows(&self) -> usize {
        self.replications.iter().map(Vec::len).sum()
    }

    /// Flattened rows, point-major.
    pub fn rows(&self) -> impl Iterator<Item = (&[f64], &[f64])> + '_ {
        self.design_points
            .iter()
            .zip(&self.replications)
            .flat_map(|(x, reps)| reps.iter().map(move |y| (x.as_slice(), y.as_slice())))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (1..=self.input_dim())
            .map(|i| format!("x{i}"))
            .chain(output_header(self.output_dim()))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for (x, y) in self.rows() {
            let cells: Vec<String> = x.iter().chain(y).map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str, provenance: Provenance) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| Error::Parse("empty dataset file".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let in_dim = cols.iter().take_while(|c| c.starts_with('x')).count();
        let out_dim = cols.len() - in_dim;
        let expected: Vec<String> = (1..=in_dim).map(|i| format!("x{i}")).chain(output_header(out_dim)).collect();
        if in_dim == 0 || out_dim == 0 || cols != expected {
            return Err(Error::Parse(format!("unexpected dataset header '{header}'")));
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let vals = parse_row(line, cols.len()).map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 2)))?;
            rows.push((vals[..in_dim].to_vec(), vals[in_dim..].to_vec()));
        }
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        Self::from_rows(rows, provenance)
    }
}

fn output_header(out_dim: usize) -> Vec<String> {
    if out_dim == 1 {
        vec!["y".to_string()]
    } else {
        (1..=out_dim).map(|i| format!("y{i}")).collect()
    }
}

pub(crate) fn parse_row(line: &str, expected: usize) -> std::result::Result<Vec<f64>, String> {
    let vals: std::result::Result<Vec<f64>, _> = line.split(',').map(|c| c.trim().parse::<f64>()).collect();
    let vals = vals.map_err(|e| e.to_string())?;
    if vals.len() != expected {
        return Err(format!("expected {expected} columns, found {}", vals.len()));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err("non-finite value".into());
    }
    Ok(vals)
}
