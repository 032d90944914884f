//! Frequency lists: CSV with one frequency per row and `d` real columns.
//! A non-numeric first row is taken as a header.

use std::io::Read;

use crate::error::{Error, Result};
use crate::measurement::FrequencyGrid;

pub fn read_frequency_list<R: Read>(source: R, d: usize) -> Result<FrequencyGrid> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(source);
    let mut freqs = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        let row = match parsed {
            Ok(row) => row,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::Input(format!("frequency row {}: {e}", i + 1))),
        };
        if row.len() != d {
            return Err(Error::Input(format!("frequency row {} has {} columns, expected {d}", i + 1, row.len())));
        }
        freqs.push(row);
    }
    if freqs.is_empty() {
        return Err(Error::Input("frequency list is empty".into()));
    }
    FrequencyGrid::explicit(d, freqs).map_err(|e| Error::Input(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let g = read_frequency_list("zeta1,zeta2\n0.1,0.2\n-1.5, 3\n".as_bytes(), 2).unwrap();
        assert_eq!(g.count(), 2);
        assert_eq!(g.frequency(1), vec![-1.5, 3.0]);
        assert_eq!(read_frequency_list("0.5\n1\n".as_bytes(), 1).unwrap().count(), 2);
    }

    #[test]
    fn rejects_malformed() {
        assert!(read_frequency_list("0.5,1\n".as_bytes(), 1).is_err());
        assert!(read_frequency_list("0.5\nabc\n".as_bytes(), 1).is_err());
        assert!(read_frequency_list("".as_bytes(), 1).is_err());
    }
}
