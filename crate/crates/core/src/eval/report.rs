use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::io_util::write_atomic;

/// Provenance stamped on every report row.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ReportMeta {
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub budget: usize,
    pub method: String,
    /// Mean normalized FL evaluation over `trials` selections.
    pub value: f64,
    pub std: f64,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub budget: usize,
    pub method: String,
    /// Mean test accuracy over `trials` selections.
    pub accuracy: f64,
    pub std: f64,
    pub trials: usize,
    /// Mean number of items actually selected.
    pub selected: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransferReport {
    pub meta: ReportMeta,
    pub rows: Vec<TransferRow>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProbeReport {
    pub meta: ReportMeta,
    /// `offline` or `online`.
    pub setting: String,
    pub rows: Vec<ProbeRow>,
}

pub const LONG_HEADER: &str = "figure,seed,config_hash,budget,method,metric,value";

impl TransferReport {
    pub fn get(&self, budget: usize, method: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.budget == budget && r.method == method)
            .map(|r| r.value)
    }

    /// Mean over budgets for one method.
    pub fn mean(&self, method: &str) -> Option<f64> {
        let v: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| r.value)
            .collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("budget,method,normalized_fl,std,trials,seed,config_hash\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.budget, r.method, r.value, r.std, r.trials, self.meta.seed, self.meta.config_hash
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn to_long_csv(&self) -> String {
        let mut out = String::from(LONG_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "transfer,{},{},{},{},normalized_fl,{}",
                self.meta.seed, self.meta.config_hash, r.budget, r.method, r.value
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn save(&self, csv: &Path, long_csv: Option<&Path>) -> Result<()> {
        write_atomic(csv, self.to_csv().as_bytes())?;
        if let Some(p) = long_csv {
            write_atomic(p, self.to_long_csv().as_bytes())?;
        }
        Ok(())
    }
}

impl ProbeReport {
    pub fn get(&self, budget: usize, method: &str) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.budget == budget && r.method == method)
            .map(|r| r.accuracy)
    }

    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("setting,budget,method,accuracy,std,trials,selected,seed,config_hash\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                self.setting,
                r.budget,
                r.method,
                r.accuracy,
                r.std,
                r.trials,
                r.selected,
                self.meta.seed,
                self.meta.config_hash
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn to_long_csv(&self) -> String {
        let mut out = String::from(LONG_HEADER);
        out.push('\n');
        for r in &self.rows {
            writeln!(
                out,
                "{}-design,{},{},{},{},accuracy,{}",
                self.setting, self.meta.seed, self.meta.config_hash, r.budget, r.method, r.accuracy
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn save(&self, csv: &Path, long_csv: Option<&Path>) -> Result<()> {
        write_atomic(csv, self.to_csv().as_bytes())?;
        if let Some(p) = long_csv {
            write_atomic(p, self.to_long_csv().as_bytes())?;
        }
        Ok(())
    }
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
