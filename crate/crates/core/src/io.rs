//! CSV in and out.
//!
//! Numbers are written with 17 significant digits so a round trip through
//! a file is lossless. Input may carry a header row; output always does.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::mcval::QqRow;
use crate::scenarios::SweepRow;

/// Lossless decimal form of an f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Reads one or two numeric columns. A first row that does not parse as
/// numbers is taken as a header.
pub fn read_channels<R: Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::invalid(format!("line {}: {e}", i + 1))),
        };
        if cols.is_empty() {
            if !(1..=2).contains(&values.len()) {
                return Err(Error::invalid(format!("expected 1 or 2 columns, found {}", values.len())));
            }
            cols = vec![Vec::new(); values.len()];
        } else if values.len() != cols.len() {
            return Err(Error::invalid(format!(
                "line {}: {} fields where earlier rows have {}",
                i + 1,
                values.len(),
                cols.len()
            )));
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("line {}: non-finite value {bad}", i + 1)));
        }
        for (c, v) in cols.iter_mut().zip(values) {
            c.push(v);
        }
    }
    if cols.is_empty() {
        return Err(Error::invalid("no numeric rows"));
    }
    Ok(cols)
}

pub fn read_channels_path(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    read_channels(std::fs::File::open(path)?)
}

/// Single column with a header.
pub fn write_column<W: Write>(writer: W, header: &str, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([header])?;
    for v in values {
        w.write_record([fmt_f64(*v)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep<W: Write>(writer: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["kind", "strength", "bins", "seed", "mi", "p_value", "critical_99"])?;
    for r in rows {
        w.write_record([
            r.kind.name().to_string(),
            fmt_f64(r.strength),
            r.bins.to_string(),
            r.seed.to_string(),
            fmt_f64(r.mi),
            fmt_f64(r.p_value),
            fmt_f64(r.critical_99),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_qq<W: Write>(writer: W, rows: &[QqRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["quantile", "empirical", "theoretical"])?;
    for r in rows {
        w.write_record([fmt_f64(r.quantile), fmt_f64(r.empirical), fmt_f64(r.theoretical)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::ScenarioKind;

    #[test]
    fn round_trip_is_lossless() {
        let vals = [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0];
        let mut buf = Vec::new();
        write_column(&mut buf, "x", &vals).unwrap();
        let back = read_channels(&buf[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0], vals);
    }

    #[test]
    fn header_is_optional() {
        let with = read_channels("a,b\n1,2\n3,4\n".as_bytes()).unwrap();
        let without = read_channels("1,2\n3,4\n".as_bytes()).unwrap();
        assert_eq!(with, without);
        assert_eq!(with, vec![vec![1.0, 3.0], vec![2.0, 4.0]]);
    }

    #[test]
    fn odd_shapes_are_rejected() {
        assert!(read_channels("1,2,3\n".as_bytes()).is_err());
        assert!(read_channels("1,2\n3\n".as_bytes()).is_err());
        assert!(read_channels("x\n1\nfoo\n".as_bytes()).is_err());
        assert!(read_channels("x\n".as_bytes()).is_err());
        assert!(read_channels("".as_bytes()).is_err());
        assert!(read_channels("1\nNaN\n".as_bytes()).is_err());
    }

    #[test]
    fn sweep_header_and_row() {
        let row = SweepRow {
            kind: ScenarioKind::Hfo,
            strength: 1.5,
            bins: 18,
            seed: 3,
            mi: 0.25,
            p_value: 0.5,
            critical_99: 0.125,
        };
        let mut buf = Vec::new();
        write_sweep(&mut buf, &[row]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "kind,strength,bins,seed,mi,p_value,critical_99");
        let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(fields[0], "hfo");
        assert_eq!(fields[2], "18");
        assert_eq!(fields[4].parse::<f64>().unwrap(), 0.25);
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = fmt_f64(std::f64::consts::PI);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
    }
}
