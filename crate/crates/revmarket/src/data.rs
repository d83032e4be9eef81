//! CSV price loading.

use std::path::Path;

use chrono::NaiveDate;
use revmarket_core::market::PricePoint;
use revmarket_core::PriceSeries;

use crate::error::DataError;

/// Reads a `date,close` CSV (header required, other columns ignored, column
/// names matched case-insensitively). Dates are `YYYY-MM-DD`.
pub fn load_prices(path: &Path, close_column: &str) -> Result<PriceSeries, DataError> {
    let row_err = |line: u64, message: String| DataError::Row {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => DataError::Io {
                path: path.to_path_buf(),
                source,
            },
            other => row_err(1, format!("{other:?}")),
        })?;
    let headers = reader
        .headers()
        .map_err(|e| row_err(1, e.to_string()))?
        .clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| DataError::MissingColumn {
                path: path.to_path_buf(),
                column: name.to_string(),
            })
    };
    let date_col = column("date")?;
    let close_col = column(close_column)?;

    let mut points = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            row_err(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        let date_text = row.get(date_col).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_text, "%Y-%m-%d")
            .map_err(|e| row_err(line, format!("bad date {date_text:?}: {e}")))?;
        let close_text = row.get(close_col).unwrap_or("");
        let close: f64 = close_text
            .parse()
            .map_err(|_| row_err(line, format!("bad price {close_text:?}")))?;
        if !close.is_finite() || close <= 0.0 {
            return Err(row_err(line, format!("non-positive price {close}")));
        }
        points.push(PricePoint { date, close });
    }
    PriceSeries::new(points).map_err(|source| DataError::Series {
        path: path.to_path_buf(),
        source,
    })
}
