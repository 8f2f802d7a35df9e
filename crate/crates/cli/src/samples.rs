//! Complex sample files: CSV `re,im` rows or raw little-endian `f64` pairs.

use std::path::Path;

use mcsense::Complex64;

use crate::CliError;

/// Reads a sample file, choosing the format from the extension: `.csv` is
/// text, anything else is interleaved little-endian `f64` I/Q.
pub fn read_samples(path: &Path) -> Result<Vec<Complex64>, CliError> {
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let bytes = std::fs::read(path)?;
    if is_csv {
        parse_csv(&bytes)
    } else {
        parse_binary(&bytes)
    }
}

pub fn parse_binary(bytes: &[u8]) -> Result<Vec<Complex64>, CliError> {
    if !bytes.len().is_multiple_of(16) {
        return Err(CliError::Input(format!(
            "binary sample file has {} bytes, not a multiple of 16 (one f64 I/Q pair)",
            bytes.len()
        )));
    }
    let samples: Vec<Complex64> = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
            Complex64::new(re, im)
        })
        .collect();
    check_finite(&samples)?;
    Ok(samples)
}

pub fn write_binary(samples: &[Complex64]) -> Vec<u8> {
    samples
        .iter()
        .flat_map(|z| z.re.to_le_bytes().into_iter().chain(z.im.to_le_bytes()))
        .collect()
}

/// Parses `re,im` rows. A non-numeric first row is taken as a header and
/// lines starting with `#` are ignored.
pub fn parse_csv(bytes: &[u8]) -> Result<Vec<Complex64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Input(format!("malformed CSV: {e}")))?;
        if record.len() != 2 {
            return Err(CliError::Input(format!(
                "CSV row {} has {} fields, expected re,im",
                i + 1,
                record.len()
            )));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(re), Ok(im)) => samples.push(Complex64::new(re, im)),
            _ if i == 0 => continue,
            _ => {
                return Err(CliError::Input(format!(
                    "CSV row {} is not a pair of numbers: {:?}",
                    i + 1,
                    record
                )))
            }
        }
    }
    check_finite(&samples)?;
    Ok(samples)
}

fn check_finite(samples: &[Complex64]) -> Result<(), CliError> {
    match samples
        .iter()
        .position(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        Some(i) => Err(CliError::Input(format!("sample {i} is not finite"))),
        None => Ok(()),
    }
}
