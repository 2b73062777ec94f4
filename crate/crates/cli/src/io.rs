//! Artifact I/O: atomic file writes, 17-significant-digit float formatting,
//! and trajectory CSV encoding/decoding.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use dpgossip::simulator::Record;

use crate::commands::CliError;

/// Formats a float with 17 significant digits, enough to round-trip any
/// f64 bit pattern.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `contents` to `path` atomically: a temp file in the same
/// directory, flushed, then renamed over the target.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| CliError::io(&tmp, e))?;
        f.write_all(contents).map_err(|e| CliError::io(&tmp, e))?;
        f.sync_all().map_err(|e| CliError::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))?;
    Ok(())
}

pub const TRAJECTORY_HEADER: &str = "k,mean_gap,max_node_gap,consensus_err,eps_k,cum_eps,samples";

/// Serializes a trajectory to the documented CSV schema.
pub fn trajectory_csv(records: &[Record]) -> String {
    let mut out = String::with_capacity(records.len() * 96);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.k,
            fmt_f64(r.mean_gap),
            fmt_f64(r.max_node_gap),
            fmt_f64(r.consensus_err),
            fmt_f64(r.eps_k),
            fmt_f64(r.cum_eps),
            r.samples,
        ));
    }
    out
}

/// Parses a trajectory CSV back into records, validating the header.
pub fn read_trajectory(path: &Path) -> Result<Vec<Record>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| CliError::csv(path, e))?.clone();
    let expected: Vec<&str> = TRAJECTORY_HEADER.split(',').collect();
    let got: Vec<&str> = headers.iter().collect();
    if got != expected {
        return Err(CliError::Format {
            path: path.display().to_string(),
            reason: format!("unexpected CSV header {got:?}"),
        });
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row.map_err(|e| CliError::csv(path, e))?;
        let field = |i: usize| -> Result<&str, CliError> {
            row.get(i).ok_or_else(|| CliError::Format {
                path: path.display().to_string(),
                reason: format!("row {} too short", records.len() + 1),
            })
        };
        let parse_f = |i: usize| -> Result<f64, CliError> {
            field(i)?.parse().map_err(|_| CliError::Format {
                path: path.display().to_string(),
                reason: format!("bad float in column {i}"),
            })
        };
        records.push(Record {
            k: field(0)?.parse().map_err(|_| CliError::Format {
                path: path.display().to_string(),
                reason: "bad iteration index".into(),
            })?,
            mean_gap: parse_f(1)?,
            max_node_gap: parse_f(2)?,
            consensus_err: parse_f(3)?,
            eps_k: parse_f(4)?,
            cum_eps: parse_f(5)?,
            samples: field(6)?.parse().map_err(|_| CliError::Format {
                path: path.display().to_string(),
                reason: "bad sample count".into(),
            })?,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips_bit_exactly() {
        for v in [0.1, -3.5e-17, 1.0 / 3.0, 2e300, f64::MIN_POSITIVE, 0.0] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), v.to_bits(), "{s}");
        }
    }

    #[test]
    fn trajectory_round_trips_through_csv() {
        let records = vec![
            Record {
                k: 0,
                mean_gap: 1.25,
                max_node_gap: 2.5,
                consensus_err: 0.125,
                eps_k: 1e-3,
                cum_eps: 1e-3,
                samples: 250,
            },
            Record {
                k: 1,
                mean_gap: 1.0 / 3.0,
                max_node_gap: 0.7,
                consensus_err: 0.1,
                eps_k: 2e-3,
                cum_eps: 3e-3,
                samples: 500,
            },
        ];
        let csv_text = trajectory_csv(&records);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, &csv_text).unwrap();
        let back = read_trajectory(&path).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in records.iter().zip(&back) {
            assert_eq!(a.k, b.k);
            assert_eq!(a.mean_gap.to_bits(), b.mean_gap.to_bits());
            assert_eq!(a.cum_eps.to_bits(), b.cum_eps.to_bits());
            assert_eq!(a.samples, b.samples);
        }
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "two");
        // no stray temp files left behind
        let stray: Vec<_> = std::fs::read_dir(dir.path())
            .unwrap()
            .filter_map(|e| e.ok())
            .filter(|e| e.path() != path)
            .collect();
        assert!(stray.is_empty(), "{stray:?}");
    }

    #[test]
    fn bad_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "k,gap\n0,1.0\n").unwrap();
        assert!(matches!(read_trajectory(&path), Err(CliError::Format { .. })));
    }
}
