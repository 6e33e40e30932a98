use std::io::{Read, Write};
use std::path::Path;

use super::{
    BinaryLabel, FeatureVector17, LabeledSample, Quaternary, FEATURE_COUNT, FEATURE_NAMES,
};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; FEATURE_COUNT + 2] = [
    "h0",
    "h1",
    "h2",
    "h3",
    "h4",
    "h5",
    "h6",
    "h7",
    "h8",
    "h9",
    "correlation",
    "x",
    "y",
    "w",
    "h",
    "config_index",
    "mismatch_density",
    "binary_label",
    "quaternary_label",
];

fn parse_binary(s: &str) -> Result<Option<BinaryLabel>> {
    match s.trim() {
        "" => Ok(None),
        "incompatibility" | "1" | "p" => Ok(Some(BinaryLabel::Incompatibility)),
        "false_positive" | "0" | "n" => Ok(Some(BinaryLabel::FalsePositive)),
        other => Err(Error::Format(format!("unknown binary label {other:?}"))),
    }
}

fn parse_quaternary(s: &str) -> Result<Option<Quaternary>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    let digit = s.strip_prefix('C').unwrap_or(s);
    let c: u8 = digit
        .parse()
        .map_err(|_| Error::Format(format!("unknown quaternary label {s:?}")))?;
    Quaternary::from_class(c).map(Some)
}

/// Reads labelled samples. The header row must match [`CSV_HEADER`].
pub fn read_samples_from<R: Read>(reader: R) -> Result<Vec<LabeledSample>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let found: Vec<&str> = header.iter().map(str::trim).collect();
    if found != CSV_HEADER {
        return Err(Error::Format(format!(
            "bad header: expected {}, found {}",
            CSV_HEADER.join(","),
            found.join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let mut values = [0.0; FEATURE_COUNT];
        for (i, v) in values.iter_mut().enumerate() {
            *v = rec[i].trim().parse().map_err(|_| {
                Error::Format(format!(
                    "row {}: bad {} value {:?}",
                    line + 2,
                    FEATURE_NAMES[i],
                    &rec[i]
                ))
            })?;
        }
        let features = FeatureVector17::new(values)
            .map_err(|e| Error::Format(format!("row {}: {e}", line + 2)))?;
        let binary_label = parse_binary(&rec[FEATURE_COUNT])?;
        let quaternary_label = parse_quaternary(&rec[FEATURE_COUNT + 1])?;
        if binary_label.is_none() && quaternary_label.is_none() {
            return Err(Error::Format(format!("row {}: no label", line + 2)));
        }
        out.push(LabeledSample {
            features,
            binary_label,
            quaternary_label,
        });
    }
    Ok(out)
}

pub fn read_samples(path: &Path) -> Result<Vec<LabeledSample>> {
    read_samples_from(std::fs::File::open(path)?)
}

pub fn write_samples_to<W: Write>(writer: W, samples: &[LabeledSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for s in samples {
        let mut rec: Vec<String> = s.features.values.iter().map(|v| v.to_string()).collect();
        rec.push(
            s.binary_label
                .map(|b| b.as_str().to_string())
                .unwrap_or_default(),
        );
        rec.push(
            s.quaternary_label
                .map(|q| format!("C{}", q.class()))
                .unwrap_or_default(),
        );
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_samples(path: &Path, samples: &[LabeledSample]) -> Result<()> {
    write_samples_to(std::fs::File::create(path)?, samples)
}
