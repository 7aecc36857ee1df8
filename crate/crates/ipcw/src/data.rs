//! Core record types, outcome definitions, stratification, and the dataset
//! container shared by the estimation modules.
//!
//! A subject is observed as `(exit_time, exit_type, covariates, stratum)`
//! where `exit_time` is the earlier of the event and censoring times and
//! `exit_type = 0` marks censoring. Outcomes are functions of the exit pair
//! evaluated at a fixed horizon `t` and are well defined exactly when the
//! subject is either still at risk at `t` or exits with an event before `t`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};

/// One subject: observed exit time, exit type (0 = censored), design vector,
/// and stratum label used for censoring estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservedRecord {
    pub exit_time: f64,
    pub exit_type: u32,
    pub covariates: Vec<f64>,
    pub stratum: usize,
}

impl ObservedRecord {
    pub fn new(exit_time: f64, exit_type: u32, covariates: Vec<f64>, stratum: usize) -> Result<Self> {
        if !(exit_time.is_finite() && exit_time > 0.0) {
            return Err(Error::InvalidInput(format!(
                "exit_time must be positive and finite, got {exit_time}"
            )));
        }
        if covariates.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("covariates must be finite".into()));
        }
        Ok(Self {
            exit_time,
            exit_type,
            covariates,
            stratum,
        })
    }

    /// True when the record carries an event (as opposed to a censoring).
    pub fn is_event(&self) -> bool {
        self.exit_type != 0
    }
}

/// The supported outcome functions of `(T ∧ t, D·1{T ≤ t})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutcomeKind {
    /// 1 if the event time exceeds the horizon.
    SurvivalIndicator,
    /// 1 if an event of the given cause occurs at or before the horizon.
    CauseFailureIndicator(u32),
    /// Event time truncated at the horizon.
    RestrictedTime,
    /// Time lost to the given cause before the horizon: `(t - T ∧ t)·1{D = j}`.
    TimeLostToCause(u32),
}

/// An outcome kind together with its evaluation horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSpec {
    pub kind: OutcomeKind,
    pub horizon: f64,
}

impl OutcomeSpec {
    pub fn new(kind: OutcomeKind, horizon: f64) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        match kind {
            OutcomeKind::CauseFailureIndicator(j) | OutcomeKind::TimeLostToCause(j) if j == 0 => {
                return Err(Error::InvalidInput(
                    "cause index must be at least 1 (0 denotes censoring)".into(),
                ));
            }
            _ => {}
        }
        Ok(Self { kind, horizon })
    }

    /// Whether the outcome is determined by the observed exit: either the
    /// subject is still under observation at the horizon, or it exits with an
    /// event strictly before it. A tie `exit_time = horizon` counts as
    /// observed through the `1{T̃ ≥ t}` part of the weight numerator.
    pub fn is_observed(&self, exit_time: f64, exit_type: u32) -> bool {
        exit_time >= self.horizon || exit_type != 0
    }

    /// Evaluate the outcome for an observed exit.
    ///
    /// Internally works on the pair `(s, d) = (T̃ ∧ t, D̃·1{T̃ ≤ t})`, which
    /// determines all four outcome kinds. Errors with
    /// [`Error::OutcomeUnobserved`] when the record is censored before the
    /// horizon.
    pub fn evaluate(&self, exit_time: f64, exit_type: u32) -> Result<f64> {
        if !self.is_observed(exit_time, exit_type) {
            return Err(Error::OutcomeUnobserved {
                exit_time,
                horizon: self.horizon,
            });
        }
        let t = self.horizon;
        let s = exit_time.min(t);
        let d = if exit_time <= t { exit_type } else { 0 };
        Ok(match self.kind {
            OutcomeKind::SurvivalIndicator => {
                if s == t && d == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            OutcomeKind::CauseFailureIndicator(j) => {
                if d == j {
                    1.0
                } else {
                    0.0
                }
            }
            OutcomeKind::RestrictedTime => s,
            OutcomeKind::TimeLostToCause(j) => {
                if d == j {
                    t - s
                } else {
                    0.0
                }
            }
        })
    }
}

/// Deterministic rule assigning a stratum label from the covariate vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stratifier {
    /// Everyone in one stratum.
    Single,
    /// Bin a unit-interval covariate: label `j` when `j/k < x ≤ (j+1)/k`.
    /// Values outside `(0, 1]` fall into the nearest end bin.
    UnitIntervalBins { covariate: usize, bins: usize },
    /// Binary code over a subset of 0/1 factor covariates.
    FactorSubset { covariates: Vec<usize> },
}

impl Stratifier {
    pub fn stratum_count(&self) -> usize {
        match self {
            Stratifier::Single => 1,
            Stratifier::UnitIntervalBins { bins, .. } => *bins,
            Stratifier::FactorSubset { covariates } => 1 << covariates.len(),
        }
    }

    pub fn assign(&self, covariates: &[f64]) -> usize {
        match self {
            Stratifier::Single => 0,
            Stratifier::UnitIntervalBins { covariate, bins } => {
                let x = covariates[*covariate];
                let k = *bins as f64;
                let j = (x * k).ceil() - 1.0;
                (j.max(0.0) as usize).min(bins - 1)
            }
            Stratifier::FactorSubset { covariates: idx } => idx
                .iter()
                .enumerate()
                .map(|(bit, &c)| usize::from(covariates[c] != 0.0) << bit)
                .sum(),
        }
    }
}

/// An immutable collection of records with a common outcome definition.
///
/// Construction validates that covariate vectors share one length, stratum
/// labels are dense in `0..stratum_count`, and no stratum is empty.
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<ObservedRecord>,
    outcome: OutcomeSpec,
    stratum_count: usize,
}

impl Dataset {
    pub fn new(
        records: Vec<ObservedRecord>,
        outcome: OutcomeSpec,
        stratum_count: usize,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InvalidInput("dataset must contain records".into()));
        }
        if stratum_count == 0 {
            return Err(Error::InvalidInput("stratum_count must be at least 1".into()));
        }
        let dim = records[0].covariates.len();
        let mut seen = vec![false; stratum_count];
        for r in &records {
            if r.covariates.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "covariate length {} differs from {}",
                    r.covariates.len(),
                    dim
                )));
            }
            if r.stratum >= stratum_count {
                return Err(Error::InvalidInput(format!(
                    "stratum label {} outside 0..{}",
                    r.stratum, stratum_count
                )));
            }
            seen[r.stratum] = true;
        }
        if let Some(z) = seen.iter().position(|&s| !s) {
            return Err(Error::StratumEmpty { stratum: z });
        }
        Ok(Self {
            records,
            outcome,
            stratum_count,
        })
    }

    /// Build with `stratum_count` inferred as the largest label plus one.
    pub fn from_records(records: Vec<ObservedRecord>, outcome: OutcomeSpec) -> Result<Self> {
        let k = records.iter().map(|r| r.stratum).max().map_or(1, |m| m + 1);
        Self::new(records, outcome, k)
    }

    pub fn records(&self) -> &[ObservedRecord] {
        &self.records
    }

    pub fn outcome(&self) -> OutcomeSpec {
        self.outcome
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn stratum_count(&self) -> usize {
        self.stratum_count
    }

    pub fn covariate_dim(&self) -> usize {
        self.records[0].covariates.len()
    }

    /// Evaluate the outcome for every record; fails on the first record
    /// censored before the horizon.
    pub fn observed_outcomes(&self) -> Result<Vec<f64>> {
        self.records
            .iter()
            .map(|r| self.outcome.evaluate(r.exit_time, r.exit_type))
            .collect()
    }

    /// Replace the outcome definition, keeping records and strata.
    pub fn with_outcome(&self, outcome: OutcomeSpec) -> Self {
        Self {
            records: self.records.clone(),
            outcome,
            stratum_count: self.stratum_count,
        }
    }
}

/// Where stratum labels come from when reading a CSV dataset.
#[derive(Debug, Clone)]
pub enum StrataSource {
    /// Single stratum for everyone.
    None,
    /// Use a dense integer column from the file (conventionally `z`).
    Column(String),
    /// Derive labels from covariates with a [`Stratifier`].
    Rule(Stratifier),
}

/// Parsed CSV content: the dataset plus the original header and rows so
/// writers can append columns without disturbing the input layout.
#[derive(Debug)]
pub struct CsvDataset {
    pub dataset: Dataset,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Read a dataset from CSV with required `time` and `status` columns, an
/// optional stratum column (`z` by convention, always excluded from the
/// covariates), and every remaining column treated as a covariate in file
/// order. Decimal point `.`, UTF-8, header required.
pub fn read_csv_dataset<R: Read>(
    reader: R,
    outcome: OutcomeSpec,
    strata: StrataSource,
) -> Result<CsvDataset> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: Vec<String> = csv_reader
        .headers()
        .map_err(|e| Error::Csv {
            row: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_string)
        .collect();

    let time_col = find_column(&header, "time")?;
    let status_col = find_column(&header, "status")?;
    let z_col = match &strata {
        StrataSource::Column(name) => Some(find_column(&header, name)?),
        _ => header.iter().position(|h| h == "z"),
    };
    let covariate_cols: Vec<usize> = (0..header.len())
        .filter(|&i| {
            i != time_col && i != status_col && Some(i) != z_col && header[i] != "z"
        })
        .collect();

    let mut records = Vec::new();
    let mut rows = Vec::new();
    for (idx, row) in csv_reader.records().enumerate() {
        let row_no = idx + 1;
        let row = row.map_err(|e| Error::Csv {
            row: row_no,
            message: e.to_string(),
        })?;
        let parse_f64 = |col: usize, name: &str| -> Result<f64> {
            row.get(col)
                .ok_or_else(|| Error::Csv {
                    row: row_no,
                    message: format!("missing column `{name}`"),
                })?
                .parse::<f64>()
                .map_err(|_| Error::Csv {
                    row: row_no,
                    message: format!("non-numeric `{name}`: {:?}", row.get(col).unwrap_or("")),
                })
        };
        let time = parse_f64(time_col, "time")?;
        let status: u32 = row
            .get(status_col)
            .unwrap_or("")
            .parse()
            .map_err(|_| Error::Csv {
                row: row_no,
                message: format!(
                    "non-integer `status`: {:?}",
                    row.get(status_col).unwrap_or("")
                ),
            })?;
        let covariates: Vec<f64> = covariate_cols
            .iter()
            .map(|&c| parse_f64(c, &header[c]))
            .collect::<Result<_>>()?;

        let stratum = match &strata {
            StrataSource::Column(name) => {
                let col = z_col.expect("column resolved above");
                row.get(col)
                    .unwrap_or("")
                    .parse::<usize>()
                    .map_err(|_| Error::Csv {
                        row: row_no,
                        message: format!("non-integer `{name}`: {:?}", row.get(col).unwrap_or("")),
                    })?
            }
            StrataSource::Rule(rule) => rule.assign(&covariates),
            StrataSource::None => 0,
        };

        records.push(
            ObservedRecord::new(time, status, covariates, stratum).map_err(|e| Error::Csv {
                row: row_no,
                message: e.to_string(),
            })?,
        );
        rows.push(row.iter().map(str::to_string).collect());
    }

    let stratum_count = match &strata {
        StrataSource::None => 1,
        StrataSource::Rule(rule) => rule.stratum_count(),
        StrataSource::Column(_) => {
            records.iter().map(|r| r.stratum).max().map_or(1, |m| m + 1)
        }
    };
    let dataset = Dataset::new(records, outcome, stratum_count)?;
    Ok(CsvDataset {
        dataset,
        header,
        rows,
    })
}

fn find_column(header: &[String], name: &str) -> Result<usize> {
    header.iter().position(|h| h == name).ok_or_else(|| Error::Csv {
        row: 0,
        message: format!("missing required column `{name}`"),
    })
}

/// Format a float with 17 significant digits so values round-trip exactly.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Write the original rows with one extra column appended.
pub fn write_csv_with_column<W: Write>(
    writer: W,
    parsed: &CsvDataset,
    column_name: &str,
    values: &[f64],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(writer);
    let mut header = parsed.header.clone();
    header.push(column_name.to_string());
    out.write_record(&header).map_err(csv_io_error)?;
    for (row, value) in parsed.rows.iter().zip(values) {
        let mut row = row.clone();
        row.push(format_float(*value));
        out.write_record(&row).map_err(csv_io_error)?;
    }
    out.flush()?;
    Ok(())
}

fn csv_io_error(e: csv::Error) -> Error {
    Error::Csv {
        row: 0,
        message: e.to_string(),
    }
}
