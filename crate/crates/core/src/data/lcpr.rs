//! Schema validation for the LCPR substation consumption table.
//!
//! The bundled schema (`lcpr_schema_v1.json`) records, per column, the
//! kind of value and the observed bounds of the published table. Observed
//! bounds are not physical constraints — the source data famously holds
//! an in-range-yet-impossible energy reading — so the validator accepts a
//! second, user-supplied layer of plausibility caps and reports breaches
//! of those separately as warnings.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Offending-row lists are capped at this many entries per column.
pub const MAX_REPORTED_ROWS: usize = 20;

const BUNDLED_SCHEMA: &str = include_str!("lcpr_schema_v1.json");

/// Value kind and declared bounds of one column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    /// Cell must be one of the listed strings.
    Categorical { values: Vec<String> },
    /// `YYYY-MM-DD hh:mm:ss` local time.
    Timestamp,
    /// `YYYY-MM-DD` within an inclusive range.
    Date { min: String, max: String },
    /// Integer within an inclusive range.
    IntRange { min: i64, max: i64 },
    /// Real number within an inclusive range.
    RealRange { min: f64, max: f64 },
    /// Binary flag, literally `0` or `1`.
    Flag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ColumnKind,
}

/// The full column schema, versioned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcprSchema {
    pub version: String,
    #[serde(default)]
    pub description: String,
    pub columns: Vec<ColumnSpec>,
}

impl LcprSchema {
    /// The schema shipped with the crate.
    pub fn bundled() -> Self {
        serde_json::from_str(BUNDLED_SCHEMA).expect("bundled schema parses")
    }

    pub fn from_json(reader: impl io::Read) -> Result<Self> {
        Ok(serde_json::from_reader(reader)?)
    }

    pub fn column(&self, name: &str) -> Option<&ColumnSpec> {
        self.columns.iter().find(|c| c.name == name)
    }
}

/// Violations (or plausibility breaches) recorded for one column.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ColumnFindings {
    pub column: String,
    pub count: usize,
    /// 0-based data-row indices, capped at [`MAX_REPORTED_ROWS`].
    pub rows: Vec<usize>,
    pub rows_truncated: bool,
}

impl ColumnFindings {
    fn new(column: &str) -> Self {
        Self {
            column: column.to_owned(),
            count: 0,
            rows: Vec::new(),
            rows_truncated: false,
        }
    }

    fn record(&mut self, row: usize) {
        self.count += 1;
        if self.rows.len() < MAX_REPORTED_ROWS {
            self.rows.push(row);
        } else {
            self.rows_truncated = true;
        }
    }
}

/// Outcome of a validation run: schema violations per column plus
/// separate plausibility warnings for user-capped columns.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub schema_version: String,
    pub rows_checked: usize,
    pub total_violations: usize,
    pub violations: Vec<ColumnFindings>,
    pub plausibility_warnings: Vec<ColumnFindings>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.total_violations == 0
    }
}

fn cell_conforms(cell: &str, kind: &ColumnKind) -> bool {
    let cell = cell.trim();
    match kind {
        ColumnKind::Categorical { values } => values.iter().any(|v| v == cell),
        ColumnKind::Timestamp => {
            NaiveDateTime::parse_from_str(cell, "%Y-%m-%d %H:%M:%S").is_ok()
        }
        ColumnKind::Date { min, max } => {
            let parse = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").ok();
            match (parse(cell), parse(min), parse(max)) {
                (Some(d), Some(lo), Some(hi)) => lo <= d && d <= hi,
                _ => false,
            }
        }
        ColumnKind::IntRange { min, max } => match cell.parse::<i64>() {
            Ok(v) => *min <= v && v <= *max,
            Err(_) => false,
        },
        ColumnKind::RealRange { min, max } => match cell.parse::<f64>() {
            Ok(v) => v.is_finite() && *min <= v && v <= *max,
            Err(_) => false,
        },
        ColumnKind::Flag => cell == "0" || cell == "1",
    }
}

/// Validates a CSV file against the schema.
///
/// Every schema column must be present in the header (extra columns are
/// ignored). Each cell is checked against its column kind; a missing cell
/// in a ragged row counts as a violation of that column. `plausibility_caps`
/// maps column names to upper bounds checked on top of the schema ranges.
pub fn validate_lcpr(
    path: impl AsRef<Path>,
    schema: &LcprSchema,
    plausibility_caps: Option<&BTreeMap<String, f64>>,
) -> Result<ValidationReport> {
    let file = std::fs::File::open(path)?;
    validate_lcpr_from(file, schema, plausibility_caps)
}

/// [`validate_lcpr`] over any reader.
pub fn validate_lcpr_from(
    reader: impl io::Read,
    schema: &LcprSchema,
    plausibility_caps: Option<&BTreeMap<String, f64>>,
) -> Result<ValidationReport> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let col_index: BTreeMap<&str, usize> = header
        .iter()
        .enumerate()
        .map(|(i, name)| (name.trim(), i))
        .collect();

    let missing: Vec<String> = schema
        .columns
        .iter()
        .filter(|c| !col_index.contains_key(c.name.as_str()))
        .map(|c| c.name.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingColumns(missing));
    }

    let caps: Vec<(usize, f64, &str)> = plausibility_caps
        .map(|caps| {
            caps.iter()
                .filter_map(|(name, &cap)| {
                    col_index.get(name.as_str()).map(|&i| (i, cap, name.as_str()))
                })
                .collect()
        })
        .unwrap_or_default();

    let mut violations: Vec<ColumnFindings> = schema
        .columns
        .iter()
        .map(|c| ColumnFindings::new(&c.name))
        .collect();
    let mut warnings: Vec<ColumnFindings> =
        caps.iter().map(|(_, _, name)| ColumnFindings::new(name)).collect();

    let mut rows = 0usize;
    for record in rdr.records() {
        let record = record?;
        for (ci, spec) in schema.columns.iter().enumerate() {
            let idx = col_index[spec.name.as_str()];
            match record.get(idx) {
                Some(cell) if cell_conforms(cell, &spec.kind) => {}
                _ => violations[ci].record(rows),
            }
        }
        for (wi, &(idx, cap, _)) in caps.iter().enumerate() {
            if let Some(v) = record.get(idx).and_then(|c| c.trim().parse::<f64>().ok()) {
                if v > cap {
                    warnings[wi].record(rows);
                }
            }
        }
        rows += 1;
    }

    let total = violations.iter().map(|v| v.count).sum();
    Ok(ValidationReport {
        schema_version: schema.version.clone(),
        rows_checked: rows,
        total_violations: total,
        violations,
        plausibility_warnings: warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One row holding each column's lower Table-1 bound.
    pub(crate) fn boundary_row_low() -> Vec<(&'static str, String)> {
        vec![
            ("substation", "A".into()),
            ("timestamp_local", "2022-01-01 00:00:00".into()),
            ("connected_clients", "9".into()),
            ("connected_smart_tstats", "59".into()),
            ("average_inside_temperature", "16.21".into()),
            ("average_temperature_setpoint", "9.31".into()),
            ("average_outside_temperature", "-32.0".into()),
            ("average_solar_radiance", "0".into()),
            ("average_relative_humidity", "0".into()),
            ("average_snow_precipitation", "0.0".into()),
            ("average_wind_speed", "0".into()),
            ("date", "2022-01-01".into()),
            ("month", "1".into()),
            ("day", "1".into()),
            ("day_of_week", "1".into()),
            ("hour", "0".into()),
            ("challenge_type", "None".into()),
            ("challenge_flag", "0".into()),
            ("pre_post_challenge_flag", "0".into()),
            ("is_weekend", "0".into()),
            ("is_holiday", "0".into()),
            ("weekend_holiday", "0".into()),
            ("total_energy_consumed", "7.45".into()),
        ]
    }

    /// One row holding each column's upper Table-1 bound.
    pub(crate) fn boundary_row_high() -> Vec<(&'static str, String)> {
        vec![
            ("substation", "C".into()),
            ("timestamp_local", "2024-06-30 23:59:59".into()),
            ("connected_clients", "104".into()),
            ("connected_smart_tstats", "1278".into()),
            ("average_inside_temperature", "27.08".into()),
            ("average_temperature_setpoint", "21.03".into()),
            ("average_outside_temperature", "35.2".into()),
            ("average_solar_radiance", "961".into()),
            ("average_relative_humidity", "100".into()),
            ("average_snow_precipitation", "306.0".into()),
            ("average_wind_speed", "15.68".into()),
            ("date", "2024-06-30".into()),
            ("month", "12".into()),
            ("day", "31".into()),
            ("day_of_week", "7".into()),
            ("hour", "23".into()),
            ("challenge_type", "LCPR".into()),
            ("challenge_flag", "1".into()),
            ("pre_post_challenge_flag", "1".into()),
            ("is_weekend", "1".into()),
            ("is_holiday", "1".into()),
            ("weekend_holiday", "1".into()),
            ("total_energy_consumed", "32240.17".into()),
        ]
    }

    pub(crate) fn csv_from_rows(rows: &[Vec<(&'static str, String)>]) -> String {
        let header: Vec<&str> = rows[0].iter().map(|(n, _)| *n).collect();
        let mut s = header.join(",");
        s.push('\n');
        for row in rows {
            let cells: Vec<&str> = row.iter().map(|(_, v)| v.as_str()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    fn validate_str(csv: &str, caps: Option<&BTreeMap<String, f64>>) -> ValidationReport {
        validate_lcpr_from(csv.as_bytes(), &LcprSchema::bundled(), caps).unwrap()
    }

    #[test]
    fn bundled_schema_matches_table_layout() {
        let schema = LcprSchema::bundled();
        assert_eq!(schema.version, "1");
        assert_eq!(schema.columns.len(), 23);
        assert!(matches!(
            &schema.column("substation").unwrap().kind,
            ColumnKind::Categorical { values } if values == &["A", "B", "C"]
        ));
        assert!(matches!(
            schema.column("total_energy_consumed").unwrap().kind,
            ColumnKind::RealRange { min, max } if min == 7.45 && max == 32240.17
        ));
    }

    #[test]
    fn boundary_rows_are_clean() {
        let csv = csv_from_rows(&[boundary_row_low(), boundary_row_high()]);
        let report = validate_str(&csv, None);
        assert!(report.is_clean(), "{report:?}");
        assert_eq!(report.rows_checked, 2);
    }

    #[test]
    fn unknown_substation_is_one_violation() {
        let mut row = boundary_row_low();
        row[0].1 = "D".into();
        let report = validate_str(&csv_from_rows(&[row]), None);
        assert_eq!(report.total_violations, 1);
        let v = report.violations.iter().find(|v| v.column == "substation").unwrap();
        assert_eq!(v.count, 1);
        assert_eq!(v.rows, vec![0]);
    }

    #[test]
    fn inclusive_bounds_accept_the_boundary_value() {
        let report = validate_str(&csv_from_rows(&[boundary_row_low()]), None);
        let v = report
            .violations
            .iter()
            .find(|v| v.column == "total_energy_consumed")
            .unwrap();
        assert_eq!(v.count, 0);
    }

    #[test]
    fn humidity_above_hundred_is_one_violation() {
        let mut row = boundary_row_low();
        row[8].1 = "101".into();
        let report = validate_str(&csv_from_rows(&[row]), None);
        assert_eq!(report.total_violations, 1);
        assert_eq!(
            report
                .violations
                .iter()
                .find(|v| v.column == "average_relative_humidity")
                .unwrap()
                .count,
            1
        );
    }

    #[test]
    fn malformed_timestamp_is_a_violation() {
        let mut row = boundary_row_low();
        row[1].1 = "01/01/2022 00:00".into();
        let report = validate_str(&csv_from_rows(&[row]), None);
        assert_eq!(report.total_violations, 1);
    }

    #[test]
    fn missing_column_errors_with_names() {
        let csv = "substation,hour\nA,0\n";
        let err = validate_lcpr_from(csv.as_bytes(), &LcprSchema::bundled(), None).unwrap_err();
        match err {
            Error::MissingColumns(names) => {
                assert_eq!(names.len(), 21);
                assert!(names.contains(&"date".to_string()));
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn plausibility_cap_warns_without_violating() {
        let mut row = boundary_row_low();
        row[22].1 = "25000.0".into(); // in range, above the cap
        let caps = BTreeMap::from([("total_energy_consumed".to_string(), 20000.0)]);
        let report = validate_str(&csv_from_rows(&[row]), Some(&caps));
        assert!(report.is_clean());
        assert_eq!(report.plausibility_warnings.len(), 1);
        assert_eq!(report.plausibility_warnings[0].count, 1);
    }

    #[test]
    fn ragged_row_counts_missing_cells_as_violations() {
        let full = csv_from_rows(&[boundary_row_low()]);
        let mut lines: Vec<&str> = full.lines().collect();
        let shortened: String = lines[1].rsplitn(3, ',').last().unwrap().to_string();
        lines[1] = &shortened;
        let csv = format!("{}\n{}\n", lines[0], lines[1]);
        let report = validate_str(&csv, None);
        assert_eq!(report.total_violations, 2);
    }

    #[test]
    fn schema_round_trips_through_json() {
        let schema = LcprSchema::bundled();
        let json = serde_json::to_string(&schema).unwrap();
        let back = LcprSchema::from_json(json.as_bytes()).unwrap();
        assert_eq!(schema, back);
    }
}
