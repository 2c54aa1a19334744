//! Small text-format helpers shared by the CSV emitters and loaders.

use std::io::{BufRead, BufReader, Read};

/// Formats an f64 with 17 significant digits, enough for an exact
/// decimal→binary round trip.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn parse_f64(field: &str, line_no: usize) -> Result<f64, String> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|_| format!("line {line_no}: not a number: {field:?}"))
}

pub fn parse_usize(field: &str, line_no: usize) -> Result<usize, String> {
    field
        .trim()
        .parse::<usize>()
        .map_err(|_| format!("line {line_no}: not an index: {field:?}"))
}

/// Reads a CSV file into (header fields, data rows split on commas).
pub fn read_csv_lines(reader: impl Read) -> std::io::Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => return Ok((Vec::new(), Vec::new())),
    };
    let header: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        rows.push(line.split(',').map(|s| s.to_string()).collect());
    }
    Ok((header, rows))
}
