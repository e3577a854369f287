//! Site-data CSV: `date,clicks,sales,conversion,language,country`.
//!
//! Dates are `YYYY-MM-DD`, strictly increasing. Counts are non-negative
//! integers, conversion is a decimal percent that must agree with
//! `100 * sales / clicks` to within half a percentage point (and be exactly
//! zero on days without clicks).

use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use sparsecast_core::{Error as CoreError, SiteRecord};

use crate::{CliError, CsvError};

pub const HEADER: &str = "date,clicks,sales,conversion,language,country";

fn bad(line: u64, reason: impl Into<String>) -> CsvError {
    CsvError::BadRow {
        line,
        reason: reason.into(),
    }
}

fn parse_date(field: &str, line: u64) -> Result<NaiveDate, CsvError> {
    let well_formed = field.len() == 10
        && field.bytes().enumerate().all(|(i, b)| {
            if i == 4 || i == 7 {
                b == b'-'
            } else {
                b.is_ascii_digit()
            }
        });
    if !well_formed {
        return Err(bad(line, format!("date `{field}` is not YYYY-MM-DD")));
    }
    NaiveDate::parse_from_str(field, "%Y-%m-%d")
        .map_err(|e| bad(line, format!("date `{field}`: {e}")))
}

fn parse_count(field: &str, name: &str, line: u64) -> Result<u64, CsvError> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad(
            line,
            format!("{name} `{field}` is not a non-negative integer"),
        ));
    }
    field
        .parse()
        .map_err(|e| bad(line, format!("{name} `{field}`: {e}")))
}

fn parse_conversion(field: &str, line: u64) -> Result<f64, CsvError> {
    let plain = !field.is_empty()
        && field.bytes().all(|b| {
            b.is_ascii_digit() || b == b'.' || b == b'-' || b == b'+' || b == b'e' || b == b'E'
        });
    let value: f64 = if plain { field.parse().ok() } else { None }.ok_or_else(|| {
        bad(
            line,
            format!("conversion `{field}` is not a decimal number"),
        )
    })?;
    if !(0.0..=100.0).contains(&value) {
        return Err(bad(line, format!("conversion {value} is outside [0, 100]")));
    }
    Ok(value)
}

fn parse_code(field: &str, name: &str, line: u64) -> Result<String, CsvError> {
    if field.is_empty() || field.chars().any(|c| c.is_whitespace() || c.is_control()) {
        return Err(bad(line, format!("{name} `{field}` is not a code")));
    }
    Ok(field.to_owned())
}

/// Parses and validates site records from any reader.
pub fn parse_records(mut input: impl Read) -> Result<Vec<SiteRecord>, CsvError> {
    let mut text = String::new();
    input
        .read_to_string(&mut text)
        .map_err(|e| bad(1, format!("not valid UTF-8 text: {e}")))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(&text);
    let first = text.lines().next().unwrap_or("");
    if first.trim_end_matches('\r') != HEADER {
        return Err(CsvError::MalformedHeader {
            expected: HEADER,
            found: first.to_owned(),
        });
    }

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes());
    let mut records: Vec<SiteRecord> = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            bad(line, e.to_string())
        })?;
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != 6 {
            return Err(bad(line, format!("expected 6 fields, found {}", row.len())));
        }
        let record = SiteRecord {
            date: parse_date(&row[0], line)?,
            clicks: parse_count(&row[1], "clicks", line)?,
            sales: parse_count(&row[2], "sales", line)?,
            conversion: parse_conversion(&row[3], line)?,
            language: parse_code(&row[4], "language", line)?,
            country: parse_code(&row[5], "country", line)?,
        };
        if let Some(prev) = records.last() {
            if record.date <= prev.date {
                return Err(CsvError::NonMonotonicDates { line });
            }
        }
        record.validate().map_err(|e| match e {
            CoreError::SalesExceedClicks { .. } | CoreError::ConversionMismatch { .. } => {
                CsvError::ConsistencyViolation {
                    line,
                    reason: e.to_string(),
                }
            }
            other => bad(line, other.to_string()),
        })?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(CsvError::Empty);
    }
    Ok(records)
}

/// Reads and validates a site-data file.
pub fn parse_csv(path: &Path) -> Result<Vec<SiteRecord>, CliError> {
    let file = std::fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_records(std::io::BufReader::new(file)).map_err(|source| CliError::Csv {
        path: path.to_owned(),
        source,
    })
}

/// Writes records in the site-data schema. Conversions use the shortest
/// representation that parses back to the same value.
pub fn write_records(records: &[SiteRecord], out: impl Write) -> std::io::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    writer.write_record(HEADER.split(','))?;
    for r in records {
        writer.write_record([
            r.date.format("%Y-%m-%d").to_string(),
            r.clicks.to_string(),
            r.sales.to_string(),
            r.conversion.to_string(),
            r.language.clone(),
            r.country.clone(),
        ])?;
    }
    writer.flush()
}

pub fn write_csv(records: &[SiteRecord], path: &Path) -> Result<(), CliError> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    write_records(records, std::io::BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(body: &str) -> Result<Vec<SiteRecord>, CsvError> {
        parse_records(format!("{HEADER}\n{body}").as_bytes())
    }

    #[test]
    fn hundred_visitors_two_buyers() {
        let r = parse("2023-01-02,100,2,2.0,en,US\n").unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].conversion, 2.0);
        assert_eq!((r[0].clicks, r[0].sales), (100, 2));
        assert_eq!(r[0].date, NaiveDate::from_ymd_opt(2023, 1, 2).unwrap());
    }

    #[test]
    fn zero_click_day() {
        assert!(parse("2023-01-02,0,0,0,en,US\n").is_ok());
        assert!(matches!(
            parse("2023-01-02,0,0,1.0,en,US\n"),
            Err(CsvError::ConsistencyViolation { line: 2, .. })
        ));
    }

    #[test]
    fn sales_above_clicks() {
        let err = parse("2023-01-01,10,1,10,en,US\n2023-01-02,3,5,100,en,US\n").unwrap_err();
        assert!(
            matches!(err, CsvError::ConsistencyViolation { line: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn conversion_tolerance() {
        assert!(parse("2023-01-01,3,1,33.3,en,US\n").is_ok());
        assert!(parse("2023-01-01,3,1,34,en,US\n").is_err());
    }

    #[test]
    fn header_must_match() {
        let err =
            parse_records("date,clicks,sales,rate,language,country\n".as_bytes()).unwrap_err();
        assert!(matches!(err, CsvError::MalformedHeader { .. }));
        assert_eq!(err.line(), Some(1));
    }

    #[test]
    fn dates_must_increase() {
        let err = parse("2023-01-02,1,0,0,en,US\n2023-01-02,1,0,0,en,US\n").unwrap_err();
        assert!(matches!(err, CsvError::NonMonotonicDates { line: 3 }));
        let err = parse("2023-01-02,1,0,0,en,US\n2023-01-01,1,0,0,en,US\n").unwrap_err();
        assert!(matches!(err, CsvError::NonMonotonicDates { line: 3 }));
    }

    #[test]
    fn bad_rows_carry_line_numbers() {
        for (row, fragment) in [
            ("2023/01/02,1,0,0,en,US", "date"),
            ("2023-01-02,-1,0,0,en,US", "clicks"),
            ("2023-01-02,1,x,0,en,US", "sales"),
            ("2023-01-02,1,0,1.000,5,en,US", "fields"),
            ("2023-01-02,1,0,NaN,en,US", "conversion"),
            ("2023-01-02,1,0,0,,US", "language"),
        ] {
            let err = parse(&format!("2023-01-01,1,0,0,en,US\n{row}\n")).unwrap_err();
            assert_eq!(err.line(), Some(3), "{row}: {err}");
            assert!(err.to_string().contains(fragment), "{row}: {err}");
        }
        assert!(matches!(parse(""), Err(CsvError::Empty)));
    }

    #[test]
    fn write_then_parse() {
        let records =
            parse("2023-01-01,3,1,33.333333333333336,uk,UA\n2023-01-03,0,0,0,en,US\n").unwrap();
        let mut buf = Vec::new();
        write_records(&records, &mut buf).unwrap();
        assert_eq!(parse_records(buf.as_slice()).unwrap(), records);
    }
}
