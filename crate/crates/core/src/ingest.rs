//! Day-level step data: the wide-CSV interchange format and the validated
//! in-memory matrices built from it.
//!
//! One row per day:
//!
//! ```text
//! day_id,subject_id,t0001,t0002,...,t1440
//! d1,s1,0,0,...,12
//! ```
//!
//! Epoch columns are 1-based and zero-padded to at least four digits. The
//! subject cell may be empty. Blank count cells are rejected rather than
//! imputed.

use std::collections::HashSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of one-minute epochs in a day.
pub const MINUTES_PER_DAY: usize = 1440;

/// One day of integer step counts on a regular epoch grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepDay {
    pub day_id: String,
    pub subject_id: Option<String>,
    pub counts: Vec<u32>,
    pub epoch_minutes: u32,
}

impl StepDay {
    pub fn new(day_id: impl Into<String>, counts: Vec<u32>) -> Self {
        Self {
            day_id: day_id.into(),
            subject_id: None,
            counts,
            epoch_minutes: 1,
        }
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subject_id = Some(subject.into());
        self
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Counts as reals, for feature construction.
    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }
}

/// A validated, ordered collection of days sharing one grid length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayMatrix {
    days: Vec<StepDay>,
    grid_len: usize,
}

impl DayMatrix {
    /// Checks that the collection is non-empty, day ids are unique and every
    /// day has the same length.
    pub fn new(days: Vec<StepDay>) -> Result<Self> {
        let grid_len = check_rows(days.iter().map(|d| (d.day_id.as_str(), d.counts.len())))?;
        if let Some(d) = days.iter().find(|d| d.epoch_minutes == 0) {
            return Err(Error::Dataset(format!(
                "day {} has a zero epoch length",
                d.day_id
            )));
        }
        Ok(Self { days, grid_len })
    }

    pub fn days(&self) -> &[StepDay] {
        &self.days
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    pub fn into_days(self) -> Vec<StepDay> {
        self.days
    }

    /// Real-valued view used by the feature and clustering stages.
    pub fn to_curves(&self) -> CurveMatrix {
        CurveMatrix {
            ids: self.days.iter().map(|d| d.day_id.clone()).collect(),
            subjects: self.days.iter().map(|d| d.subject_id.clone()).collect(),
            values: self.days.iter().map(StepDay::values).collect(),
            grid_len: self.grid_len,
        }
    }
}

/// Real-valued curves on a shared grid. Step data enter the pipeline through
/// [`DayMatrix::to_curves`]; the continuous simulation families are generated
/// directly in this form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveMatrix {
    ids: Vec<String>,
    subjects: Vec<Option<String>>,
    values: Vec<Vec<f64>>,
    grid_len: usize,
}

impl CurveMatrix {
    pub fn new(
        ids: Vec<String>,
        subjects: Vec<Option<String>>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if ids.len() != values.len() || subjects.len() != values.len() {
            return Err(Error::Dataset(format!(
                "{} ids, {} subjects and {} curves",
                ids.len(),
                subjects.len(),
                values.len()
            )));
        }
        let grid_len = check_rows(ids.iter().map(String::as_str).zip(values.iter().map(Vec::len)))?;
        for (id, row) in ids.iter().zip(&values) {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Dataset(format!("curve {id} has a non-finite value")));
            }
        }
        Ok(Self {
            ids,
            subjects,
            values,
            grid_len,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn subjects(&self) -> &[Option<String>] {
        &self.subjects
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn grid_len(&self) -> usize {
        self.grid_len
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_rows<'a>(rows: impl Iterator<Item = (&'a str, usize)>) -> Result<usize> {
    let mut seen = HashSet::new();
    let mut grid_len = None;
    for (id, len) in rows {
        if !seen.insert(id) {
            return Err(Error::Dataset(format!("duplicate day_id {id:?}")));
        }
        match grid_len {
            None if len == 0 => return Err(Error::Dataset(format!("day {id:?} is empty"))),
            None => grid_len = Some(len),
            Some(t) if t != len => {
                return Err(Error::Dataset(format!(
                    "day {id:?} has {len} epochs, expected {t}"
                )))
            }
            Some(_) => {}
        }
    }
    grid_len.ok_or_else(|| Error::Dataset("no days".into()))
}

/// Guards the block division of the mean score curve: the grid length must
/// split into `q2` equal blocks.
pub fn validate_grid(grid_len: usize, q2: usize) -> Result<()> {
    if q2 == 0 {
        return Err(Error::Config("q2 must be positive".into()));
    }
    if !grid_len.is_multiple_of(q2) {
        return Err(Error::Config(format!(
            "T={grid_len} is not divisible by q2={q2}"
        )));
    }
    Ok(())
}

/// Name of the 1-based epoch column `t`.
pub fn epoch_column(t: usize) -> String {
    format!("t{t:04}")
}

fn header_row(grid_len: usize) -> Vec<String> {
    let mut header = vec!["day_id".to_string(), "subject_id".to_string()];
    header.extend((1..=grid_len).map(epoch_column));
    header
}

struct RawRow {
    line: usize,
    day_id: String,
    subject_id: Option<String>,
    cells: Vec<String>,
}

fn read_rows<R: Read>(reader: R) -> Result<(usize, Vec<RawRow>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();

    let header = match records.next() {
        Some(rec) => rec?,
        None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
    };
    if header.len() < 3 || &header[0] != "day_id" || &header[1] != "subject_id" {
        return Err(Error::Parse {
            line: 1,
            message: "header must start with day_id,subject_id followed by epoch columns".into(),
        });
    }
    let grid_len = header.len() - 2;
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != epoch_column(i + 1) {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected column {}, found {name:?}", epoch_column(i + 1)),
            });
        }
    }

    let mut rows = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} columns, found {}", header.len(), rec.len()),
            });
        }
        let subject = &rec[1];
        rows.push(RawRow {
            line,
            day_id: rec[0].to_string(),
            subject_id: (!subject.is_empty()).then(|| subject.to_string()),
            cells: rec.iter().skip(2).map(str::to_string).collect(),
        });
    }
    Ok((grid_len, rows))
}

fn parse_count(row: &RawRow, col: usize) -> Result<u32> {
    let cell = row.cells[col].trim();
    let fail = |message: String| Error::Validation {
        line: row.line,
        column: col + 3,
        message,
    };
    if cell.is_empty() {
        return Err(fail("blank count cell".into()));
    }
    if cell.starts_with('-') {
        return Err(fail(format!("negative count {cell:?}")));
    }
    cell.parse::<u32>()
        .map_err(|_| fail(format!("{cell:?} is not a non-negative integer count")))
}

fn parse_real(row: &RawRow, col: usize) -> Result<f64> {
    let cell = row.cells[col].trim();
    let fail = |message: String| Error::Validation {
        line: row.line,
        column: col + 3,
        message,
    };
    if cell.is_empty() {
        return Err(fail("blank cell".into()));
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(fail(format!("{cell:?} is not a finite number"))),
    }
}

fn reject_duplicates(rows: &[RawRow]) -> Result<()> {
    let mut seen = HashSet::new();
    for row in rows {
        if !seen.insert(row.day_id.as_str()) {
            return Err(Error::Validation {
                line: row.line,
                column: 1,
                message: format!("duplicate day_id {:?}", row.day_id),
            });
        }
    }
    Ok(())
}

/// Parses wide-CSV step counts from any reader.
pub fn parse_day_matrix<R: Read>(reader: R) -> Result<DayMatrix> {
    let (_, rows) = read_rows(reader)?;
    reject_duplicates(&rows)?;
    let mut days = Vec::with_capacity(rows.len());
    for row in &rows {
        let counts = (0..row.cells.len())
            .map(|c| parse_count(row, c))
            .collect::<Result<Vec<_>>>()?;
        days.push(StepDay {
            day_id: row.day_id.clone(),
            subject_id: row.subject_id.clone(),
            counts,
            epoch_minutes: 1,
        });
    }
    DayMatrix::new(days)
}

pub fn read_day_matrix(path: impl AsRef<Path>) -> Result<DayMatrix> {
    parse_day_matrix(std::fs::File::open(path)?)
}

/// Same layout as [`parse_day_matrix`] but accepts any finite real cell.
pub fn parse_curve_matrix<R: Read>(reader: R) -> Result<CurveMatrix> {
    let (_, rows) = read_rows(reader)?;
    reject_duplicates(&rows)?;
    let mut ids = Vec::with_capacity(rows.len());
    let mut subjects = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for row in &rows {
        values.push(
            (0..row.cells.len())
                .map(|c| parse_real(row, c))
                .collect::<Result<Vec<_>>>()?,
        );
        ids.push(row.day_id.clone());
        subjects.push(row.subject_id.clone());
    }
    CurveMatrix::new(ids, subjects, values)
}

pub fn read_curve_matrix(path: impl AsRef<Path>) -> Result<CurveMatrix> {
    parse_curve_matrix(std::fs::File::open(path)?)
}

pub fn write_day_matrix_to<W: Write>(dm: &DayMatrix, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(header_row(dm.grid_len()))?;
    for day in dm.days() {
        let mut rec = Vec::with_capacity(day.counts.len() + 2);
        rec.push(day.day_id.clone());
        rec.push(day.subject_id.clone().unwrap_or_default());
        rec.extend(day.counts.iter().map(u32::to_string));
        wtr.write_record(rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_day_matrix(dm: &DayMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_day_matrix_to(dm, std::fs::File::create(path)?)
}

pub fn write_curve_matrix_to<W: Write>(cm: &CurveMatrix, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(header_row(cm.grid_len()))?;
    for i in 0..cm.len() {
        let mut rec = Vec::with_capacity(cm.grid_len() + 2);
        rec.push(cm.ids[i].clone());
        rec.push(cm.subjects[i].clone().unwrap_or_default());
        rec.extend(cm.values[i].iter().map(f64::to_string));
        wtr.write_record(rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_curve_matrix(cm: &CurveMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_curve_matrix_to(cm, std::fs::File::create(path)?)
}
