//! Rate-matrix ingestion: dates × maturities grids of rates in percent.
//!
//! The CSV layout is a header `Date,<label>,...` followed by one row per
//! observation date. Dates are accepted as `DD.MM.YYYY` or `YYYY-MM-DD`;
//! rates are decimal percent and are never rescaled.

use std::io::{Read, Write};
use std::path::Path;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense grid of observed rates, one row per date and one column per maturity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateMatrix {
    dates: Vec<NaiveDate>,
    maturities: Vec<String>,
    values: Vec<Vec<f64>>,
}

/// Observed rates for a single maturity, in date order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSeries {
    pub maturity: String,
    pub observations: Vec<(NaiveDate, f64)>,
}

/// Money-market (day-count labels such as `30/360A`) versus term (`1Y`..`50Y`) maturities.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub money_market: Vec<String>,
    pub term: Vec<String>,
}

/// Which half of a [`DatasetSplit`] a label belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaturityClass {
    MoneyMarket,
    Term,
}

impl RateMatrix {
    /// Builds a matrix, checking strict date order, unique labels and density.
    pub fn new(dates: Vec<NaiveDate>, maturities: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::Load {
                row: values.len().min(dates.len()) + 2,
                column: 1,
                message: format!("{} dates but {} value rows", dates.len(), values.len()),
            });
        }
        for (i, w) in dates.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(Error::Load {
                    row: i + 3,
                    column: 1,
                    message: format!("date {} is not after {}", w[1], w[0]),
                });
            }
        }
        for (j, label) in maturities.iter().enumerate() {
            if maturities[..j].contains(label) {
                return Err(Error::Load {
                    row: 1,
                    column: j + 2,
                    message: format!("duplicate maturity label {label:?}"),
                });
            }
        }
        for (i, row) in values.iter().enumerate() {
            if row.len() != maturities.len() {
                return Err(Error::Load {
                    row: i + 2,
                    column: row.len().min(maturities.len()) + 2,
                    message: format!("expected {} values, found {}", maturities.len(), row.len()),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::Load {
                    row: i + 2,
                    column: j + 2,
                    message: "non-finite rate".into(),
                });
            }
        }
        Ok(Self {
            dates,
            maturities,
            values,
        })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn maturities(&self) -> &[String] {
        &self.maturities
    }

    /// Row-major values, `values()[row][maturity]`.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn n_dates(&self) -> usize {
        self.dates.len()
    }

    pub fn index_of(&self, maturity: &str) -> Option<usize> {
        self.maturities.iter().position(|m| m == maturity)
    }

    /// Extracts one maturity column in date order.
    pub fn series_for(&self, maturity: &str) -> Result<RateSeries> {
        let j = self
            .index_of(maturity)
            .ok_or_else(|| Error::UnknownMaturity(maturity.to_string()))?;
        Ok(RateSeries {
            maturity: maturity.to_string(),
            observations: self
                .dates
                .iter()
                .zip(&self.values)
                .map(|(d, row)| (*d, row[j]))
                .collect(),
        })
    }

    /// Assembles a matrix from equally dated series.
    pub fn from_series(series: &[RateSeries]) -> Result<Self> {
        let first = series
            .first()
            .ok_or_else(|| Error::Usage("no series supplied".into()))?;
        let dates: Vec<NaiveDate> = first.observations.iter().map(|(d, _)| *d).collect();
        let mut values = vec![Vec::with_capacity(series.len()); dates.len()];
        for s in series {
            if s.observations.len() != dates.len()
                || s.observations.iter().zip(&dates).any(|((d, _), e)| d != e)
            {
                return Err(Error::Usage(format!(
                    "series {:?} is not aligned with {:?}",
                    s.maturity, first.maturity
                )));
            }
            for (row, (_, v)) in values.iter_mut().zip(&s.observations) {
                row.push(*v);
            }
        }
        Self::new(dates, series.iter().map(|s| s.maturity.clone()).collect(), values)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut records = rdr.records();

        let header = match records.next() {
            Some(rec) => rec.map_err(|e| load_err(1, 1, e.to_string()))?,
            None => return Err(load_err(1, 1, "empty file")),
        };
        if header.len() < 2 {
            return Err(load_err(1, 2, "header has no maturity columns"));
        }
        let maturities: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        if let Some(j) = maturities.iter().position(|m| m.is_empty()) {
            return Err(load_err(1, j + 2, "empty maturity label"));
        }

        let mut dates = Vec::new();
        let mut values = Vec::new();
        for (i, rec) in records.enumerate() {
            let row_no = i + 2;
            let rec = rec.map_err(|e| load_err(row_no, 1, e.to_string()))?;
            if rec.len() == 1 && rec[0].is_empty() {
                continue;
            }
            let date = parse_date(&rec[0]).ok_or_else(|| {
                load_err(row_no, 1, format!("unparseable date {:?}", &rec[0]))
            })?;
            if rec.len() != maturities.len() + 1 {
                return Err(load_err(
                    row_no,
                    rec.len().min(maturities.len() + 1) + 1,
                    format!("expected {} cells, found {}", maturities.len() + 1, rec.len()),
                ));
            }
            let mut row = Vec::with_capacity(maturities.len());
            for (j, cell) in rec.iter().enumerate().skip(1) {
                if cell.is_empty() {
                    return Err(load_err(row_no, j + 1, "missing value"));
                }
                let v: f64 = cell
                    .parse()
                    .map_err(|_| load_err(row_no, j + 1, format!("unparseable rate {cell:?}")))?;
                row.push(v);
            }
            dates.push(date);
            values.push(row);
        }
        if dates.is_empty() {
            return Err(load_err(2, 1, "no data rows"));
        }
        Self::new(dates, maturities, values)
    }

    /// Writes the matrix in the ingestion format with ISO dates. Values use
    /// the shortest representation that parses back to the same `f64`.
    pub fn to_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["Date".to_string()];
        header.extend(self.maturities.iter().cloned());
        w.write_record(&header)?;
        for (d, row) in self.dates.iter().zip(&self.values) {
            let mut rec = vec![d.format("%Y-%m-%d").to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.to_writer(std::io::BufWriter::new(file))
    }
}

/// Loads a rate matrix from a CSV file.
pub fn load_rate_matrix(path: impl AsRef<Path>) -> Result<RateMatrix> {
    let file = std::fs::File::open(path)?;
    RateMatrix::from_reader(std::io::BufReader::new(file))
}

fn load_err(row: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Load {
        row,
        column,
        message: message.into(),
    }
}

fn parse_date(s: &str) -> Option<NaiveDate> {
    NaiveDate::parse_from_str(s, "%d.%m.%Y")
        .or_else(|_| NaiveDate::parse_from_str(s, "%Y-%m-%d"))
        .ok()
}

/// Classifies a maturity label: `"…/…"` is money market, `"<n>Y"` is term.
pub fn classify_maturity(label: &str) -> Result<MaturityClass> {
    if label.contains('/') {
        Ok(MaturityClass::MoneyMarket)
    } else if label.len() > 1 && label.ends_with('Y') {
        Ok(MaturityClass::Term)
    } else {
        Err(Error::Classification(label.to_string()))
    }
}

/// Splits the matrix's maturities into the money-market and term datasets,
/// preserving column order within each.
pub fn split_datasets(matrix: &RateMatrix) -> Result<DatasetSplit> {
    split_labels(matrix.maturities())
}

pub fn split_labels<S: AsRef<str>>(labels: &[S]) -> Result<DatasetSplit> {
    let mut split = DatasetSplit {
        money_market: Vec::new(),
        term: Vec::new(),
    };
    for label in labels {
        let label = label.as_ref();
        match classify_maturity(label)? {
            MaturityClass::MoneyMarket => split.money_market.push(label.to_string()),
            MaturityClass::Term => split.term.push(label.to_string()),
        }
    }
    Ok(split)
}

impl RateSeries {
    /// Series with weekly dates starting at `start`.
    pub fn weekly(maturity: impl Into<String>, start: NaiveDate, rates: &[f64]) -> Self {
        Self {
            maturity: maturity.into(),
            observations: rates
                .iter()
                .enumerate()
                .map(|(i, r)| (start + Duration::weeks(i as i64), *r))
                .collect(),
        }
    }

    /// Weekly series starting 2010-12-31, handy for synthetic data.
    pub fn from_rates(maturity: impl Into<String>, rates: &[f64]) -> Self {
        Self::weekly(maturity, default_start_date(), rates)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.observations.iter().map(|(_, r)| *r).collect()
    }

    pub fn dates(&self) -> Vec<NaiveDate> {
        self.observations.iter().map(|(d, _)| *d).collect()
    }
}

pub(crate) fn default_start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2010, 12, 31).expect("valid date")
}
