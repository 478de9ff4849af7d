//! Trial-log records and persistence.
//!
//! Text format: CSV with header `trial,first,second,a1,a2,accepted`,
//! preceded by comment lines (`# ` prefix) embedding the full config.
//! Binary format: the same comment-free config block, then fixed 16-byte
//! little-endian records.

use std::io::{BufRead, BufReader, Read, Write};

use super::{ExperimentConfig, ProtocolError};

/// The ordered contexts of the extended inequality.
pub fn forward_contexts() -> [(u8, u8); 5] {
    [(1, 2), (3, 2), (3, 4), (5, 4), (5, 1)]
}

/// The same contexts with the measurement order reversed.
pub fn reversed_contexts() -> [(u8, u8); 5] {
    forward_contexts().map(|(i, j)| (j, i))
}

/// One sequential pair measurement. A trial index may appear on several
/// rows: initialization attempts rejected by post-selection are logged
/// with `accepted = false` and retried under the same index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialRecord {
    pub trial: u64,
    /// Label of the first measurement.
    pub first: u8,
    /// Label of the second measurement.
    pub second: u8,
    pub a1: i8,
    pub a2: i8,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct TrialLog {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
}

const CSV_MAGIC: &str = "# kcbs-trial-log v1";
const BIN_MAGIC: &[u8; 8] = b"KCBSLG01";
const RECORD_BYTES: usize = 16;

impl TrialLog {
    pub fn accepted_records(&self) -> impl Iterator<Item = &TrialRecord> {
        self.records.iter().filter(|r| r.accepted)
    }

    pub fn rejected_count(&self) -> u64 {
        self.records.iter().filter(|r| !r.accepted).count() as u64
    }

    /// Fraction of initialization attempts rejected by post-selection.
    pub fn rejection_fraction(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.rejected_count() as f64 / self.records.len() as f64
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{CSV_MAGIC}")?;
        for line in self.config.to_toml_string().lines() {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "trial,first,second,a1,a2,accepted")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{}",
                r.trial, r.first, r.second, r.a1, r.a2, r.accepted as u8
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, ProtocolError> {
        let reader = BufReader::new(r);
        let mut config_text = String::new();
        let mut records = Vec::new();
        let mut seen_header = false;
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| ProtocolError::Io {
                path: "<log>".into(),
                source: e,
            })?;
            let line = line.trim_end();
            if line.is_empty() || line == CSV_MAGIC {
                continue;
            }
            if let Some(rest) = line.strip_prefix("# ") {
                config_text.push_str(rest);
                config_text.push('\n');
                continue;
            }
            if line == "#" {
                config_text.push('\n');
                continue;
            }
            if line == "trial,first,second,a1,a2,accepted" {
                seen_header = true;
                continue;
            }
            if !seen_header {
                return Err(ProtocolError::MalformedRow {
                    line: line_no,
                    message: "data before column header".into(),
                });
            }
            records.push(parse_csv_row(line, line_no)?);
        }
        let config = ExperimentConfig::from_toml_str(&config_text)
            .map_err(|e| ProtocolError::Config(format!("embedded config: {e}")))?;
        Ok(Self { config, records })
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let config_bytes = self.config.to_toml_string().into_bytes();
        w.write_all(BIN_MAGIC)?;
        w.write_all(&(config_bytes.len() as u32).to_le_bytes())?;
        w.write_all(&config_bytes)?;
        w.write_all(&(self.records.len() as u64).to_le_bytes())?;
        for r in &self.records {
            let mut buf = [0u8; RECORD_BYTES];
            buf[..8].copy_from_slice(&r.trial.to_le_bytes());
            buf[8] = r.first;
            buf[9] = r.second;
            buf[10] = r.a1 as u8;
            buf[11] = r.a2 as u8;
            buf[12] = r.accepted as u8;
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, ProtocolError> {
        let io_err = |e: std::io::Error| ProtocolError::Io {
            path: "<log>".into(),
            source: e,
        };
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io_err)?;
        if &magic != BIN_MAGIC {
            return Err(ProtocolError::MalformedRow {
                line: 0,
                message: "bad magic; not a binary trial log".into(),
            });
        }
        let mut len4 = [0u8; 4];
        r.read_exact(&mut len4).map_err(io_err)?;
        let mut config_bytes = vec![0u8; u32::from_le_bytes(len4) as usize];
        r.read_exact(&mut config_bytes).map_err(io_err)?;
        let config_text = String::from_utf8(config_bytes).map_err(|e| {
            ProtocolError::Config(format!("embedded config is not UTF-8: {e}"))
        })?;
        let config = ExperimentConfig::from_toml_str(&config_text)?;
        let mut len8 = [0u8; 8];
        r.read_exact(&mut len8).map_err(io_err)?;
        let count = u64::from_le_bytes(len8);
        let mut records = Vec::with_capacity(count.min(1 << 24) as usize);
        for row in 0..count {
            let mut buf = [0u8; RECORD_BYTES];
            r.read_exact(&mut buf).map_err(io_err)?;
            let record = TrialRecord {
                trial: u64::from_le_bytes(buf[..8].try_into().expect("8 bytes")),
                first: buf[8],
                second: buf[9],
                a1: buf[10] as i8,
                a2: buf[11] as i8,
                accepted: buf[12] != 0,
            };
            validate_record(&record, row as usize + 1)?;
            records.push(record);
        }
        Ok(Self { config, records })
    }
}

fn validate_record(r: &TrialRecord, line: usize) -> Result<(), ProtocolError> {
    let malformed = |message: String| ProtocolError::MalformedRow { line, message };
    if !(1..=5).contains(&r.first) || !(1..=5).contains(&r.second) {
        return Err(malformed(format!(
            "labels ({}, {}) outside 1..=5",
            r.first, r.second
        )));
    }
    let pair = (r.first, r.second);
    if !forward_contexts().contains(&pair) && !reversed_contexts().contains(&pair) {
        return Err(malformed(format!("({}, {}) is not an ordered context", r.first, r.second)));
    }
    if ![-1, 1].contains(&r.a1) || ![-1, 1].contains(&r.a2) {
        return Err(malformed(format!("outcomes ({}, {}) not in {{-1, 1}}", r.a1, r.a2)));
    }
    Ok(())
}

fn parse_csv_row(line: &str, line_no: usize) -> Result<TrialRecord, ProtocolError> {
    let malformed = |message: String| ProtocolError::MalformedRow {
        line: line_no,
        message,
    };
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 6 {
        return Err(malformed(format!("expected 6 fields, got {}", fields.len())));
    }
    let record = TrialRecord {
        trial: fields[0]
            .parse()
            .map_err(|e| malformed(format!("trial: {e}")))?,
        first: fields[1]
            .parse()
            .map_err(|e| malformed(format!("first: {e}")))?,
        second: fields[2]
            .parse()
            .map_err(|e| malformed(format!("second: {e}")))?,
        a1: fields[3]
            .parse()
            .map_err(|e| malformed(format!("a1: {e}")))?,
        a2: fields[4]
            .parse()
            .map_err(|e| malformed(format!("a2: {e}")))?,
        accepted: match fields[5] {
            "0" => false,
            "1" => true,
            other => return Err(malformed(format!("accepted: expected 0 or 1, got {other}"))),
        },
    };
    validate_record(&record, line_no)?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_log() -> TrialLog {
        TrialLog {
            config: ExperimentConfig::noiseless(2, 7),
            records: vec![
                TrialRecord {
                    trial: 0,
                    first: 1,
                    second: 2,
                    a1: 1,
                    a2: -1,
                    accepted: true,
                },
                TrialRecord {
                    trial: 1,
                    first: 3,
                    second: 2,
                    a1: -1,
                    a2: -1,
                    accepted: false,
                },
                TrialRecord {
                    trial: 1,
                    first: 3,
                    second: 2,
                    a1: -1,
                    a2: 1,
                    accepted: true,
                },
            ],
        }
    }

    #[test]
    fn csv_round_trip() {
        let log = sample_log();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let back = TrialLog::read_csv(&buf[..]).unwrap();
        assert_eq!(back.records, log.records);
        assert_eq!(back.config.seed, 7);
    }

    #[test]
    fn binary_round_trip() {
        let log = sample_log();
        let mut buf = Vec::new();
        log.write_binary(&mut buf).unwrap();
        let back = TrialLog::read_binary(&buf[..]).unwrap();
        assert_eq!(back.records, log.records);
        assert_eq!(back.config.trials, 2);
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let log = sample_log();
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let mut text = String::from_utf8(buf).unwrap();
        text.push_str("5,1,2,7,-1,1\n");
        let err = TrialLog::read_csv(text.as_bytes()).unwrap_err();
        match err {
            ProtocolError::MalformedRow { line, message } => {
                assert!(message.contains("outcomes"), "{message}");
                assert!(line > 0);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn invalid_context_rejected() {
        let line = "0,1,3,1,-1,1";
        assert!(parse_csv_row(line, 1).is_err());
    }

    #[test]
    fn rejection_fraction_counts_unaccepted_rows() {
        let log = sample_log();
        assert_eq!(log.rejected_count(), 1);
        assert!((log.rejection_fraction() - 1.0 / 3.0).abs() < 1e-12);
    }
}
