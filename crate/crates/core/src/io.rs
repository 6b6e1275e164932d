//! Field files and tabular emission.
//!
//! The binary field format "BFLD" is: ASCII magic `BFLD1\n`, one ASCII header
//! line `dim n_per_axis length\n`, then the row-major samples as little-endian
//! 64-bit floats. Parse errors carry the byte offset of the defect.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::field::{FieldError, PhysicalField};
use crate::grid::{GridError, PeriodicGrid};
use crate::solver::TrajectoryRecord;

pub const BFLD_MAGIC: &[u8] = b"BFLD1\n";

#[derive(Debug, Error)]
pub enum BfldError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed field file at byte {offset}: {what}")]
    Malformed {
        path: String,
        offset: usize,
        what: String,
    },
}

fn malformed(path: &Path, offset: usize, what: impl Into<String>) -> BfldError {
    BfldError::Malformed {
        path: path.display().to_string(),
        offset,
        what: what.into(),
    }
}

fn io_error(path: &Path, source: std::io::Error) -> BfldError {
    BfldError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Serializes one field; `length` uses the shortest round-trip decimal form.
pub fn write_bfld(path: &Path, field: &PhysicalField) -> Result<(), BfldError> {
    let grid = field.grid();
    let mut buf = Vec::with_capacity(32 + 8 * field.samples().len());
    buf.extend_from_slice(BFLD_MAGIC);
    buf.extend_from_slice(
        format!("{} {} {}\n", grid.dim(), grid.n_per_axis(), grid.length()).as_bytes(),
    );
    for s in field.samples() {
        buf.extend_from_slice(&s.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(|e| io_error(path, e))?;
    file.write_all(&buf).map_err(|e| io_error(path, e))
}

pub fn read_bfld(path: &Path) -> Result<PhysicalField, BfldError> {
    let bytes = fs::read(path).map_err(|e| io_error(path, e))?;
    if bytes.len() < BFLD_MAGIC.len() || &bytes[..BFLD_MAGIC.len()] != BFLD_MAGIC {
        return Err(malformed(path, 0, "missing BFLD1 magic"));
    }
    let header_start = BFLD_MAGIC.len();
    let newline = bytes[header_start..]
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| malformed(path, bytes.len(), "unterminated header line"))?;
    let header_end = header_start + newline;
    let header = std::str::from_utf8(&bytes[header_start..header_end])
        .map_err(|e| malformed(path, header_start + e.valid_up_to(), "header is not ASCII"))?;
    let mut parts = header.split_whitespace();
    let mut next_field = |what: &str| {
        parts
            .next()
            .ok_or_else(|| malformed(path, header_end, format!("header missing {what}")))
    };
    let dim: usize = next_field("dim")?
        .parse()
        .map_err(|e| malformed(path, header_start, format!("bad dim: {e}")))?;
    let n: usize = next_field("n_per_axis")?
        .parse()
        .map_err(|e| malformed(path, header_start, format!("bad n_per_axis: {e}")))?;
    let length: f64 = next_field("length")?
        .parse()
        .map_err(|e| malformed(path, header_start, format!("bad length: {e}")))?;
    if parts.next().is_some() {
        return Err(malformed(path, header_start, "trailing tokens in header"));
    }
    let grid = PeriodicGrid::new(dim, n, length)
        .map_err(|e: GridError| malformed(path, header_start, e.to_string()))?;

    let payload = &bytes[header_end + 1..];
    let expected = grid.num_points() * 8;
    if payload.len() != expected {
        return Err(malformed(
            path,
            header_end + 1 + payload.len().min(expected),
            format!("payload has {} bytes, expected {expected}", payload.len()),
        ));
    }
    let mut samples = Vec::with_capacity(grid.num_points());
    for (i, chunk) in payload.chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().expect("chunk of 8"));
        if !v.is_finite() {
            return Err(malformed(
                path,
                header_end + 1 + 8 * i,
                "non-finite sample",
            ));
        }
        samples.push(v);
    }
    PhysicalField::new(grid, samples)
        .map_err(|e: FieldError| malformed(path, header_end + 1, e.to_string()))
}

/// Shortest round-trip decimal for table output.
pub fn fmt_value(v: f64) -> String {
    format!("{v}")
}

/// Writes a CSV with a header row; every row must match the header width.
pub fn write_csv(
    path: &Path,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<(), BfldError> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_error(path, e))
}

/// Schema version stamped on every JSON-lines record.
pub const JSONL_SCHEMA: &str = "v1";

#[derive(serde::Serialize)]
struct JsonlRow<'a> {
    v: &'static str,
    time: f64,
    values: &'a std::collections::BTreeMap<String, f64>,
}

/// Trajectory CSV: `time` followed by the observer columns in emission order.
pub fn trajectory_csv(record: &TrajectoryRecord) -> String {
    let mut out = String::from("time");
    for c in &record.columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for sample in &record.samples {
        out.push_str(&fmt_value(sample.time));
        for c in &record.columns {
            out.push(',');
            out.push_str(&fmt_value(sample.values[c]));
        }
        out.push('\n');
    }
    out
}

/// Trajectory JSON-lines: one record per sample with the schema-version field.
pub fn trajectory_jsonl(record: &TrajectoryRecord) -> String {
    let mut out = String::new();
    for sample in &record.samples {
        let row = JsonlRow {
            v: JSONL_SCHEMA,
            time: sample.time,
            values: &sample.values,
        };
        out.push_str(&serde_json::to_string(&row).expect("serializable row"));
        out.push('\n');
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> Result<(), BfldError> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::random_field;

    #[test]
    fn bfld_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.bfld");
        let grid = PeriodicGrid::standard(2, 16).unwrap();
        let f = random_field(grid, 5);
        write_bfld(&path, &f).unwrap();
        let g = read_bfld(&path).unwrap();
        assert_eq!(f.grid(), g.grid());
        assert_eq!(f.samples(), g.samples());
        // Non-default length round-trips through the decimal header.
        let grid2 = PeriodicGrid::new(3, 8, 3.5).unwrap();
        let f2 = random_field(grid2, 6);
        let path2 = dir.path().join("g.bfld");
        write_bfld(&path2, &f2).unwrap();
        let g2 = read_bfld(&path2).unwrap();
        assert_eq!(g2.grid().length(), 3.5);
        assert_eq!(f2.samples(), g2.samples());
    }

    #[test]
    fn malformed_files_report_byte_offsets() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bfld");

        std::fs::write(&path, b"BFLX1\nrest").unwrap();
        match read_bfld(&path) {
            Err(BfldError::Malformed { offset: 0, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }

        std::fs::write(&path, b"BFLD1\n2 banana 6.28\n").unwrap();
        match read_bfld(&path) {
            Err(BfldError::Malformed { offset, what, .. }) => {
                assert_eq!(offset, 6);
                assert!(what.contains("n_per_axis"), "{what}");
            }
            other => panic!("unexpected {other:?}"),
        }

        // Truncated payload: offset points at the end of the valid prefix.
        let grid = PeriodicGrid::standard(2, 8).unwrap();
        let f = PhysicalField::zero(grid);
        write_bfld(&path, &f).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 4);
        std::fs::write(&path, &bytes).unwrap();
        match read_bfld(&path) {
            Err(BfldError::Malformed { what, .. }) => assert!(what.contains("payload")),
            other => panic!("unexpected {other:?}"),
        }

        // Non-finite sample.
        write_bfld(&path, &f).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let header_len = BFLD_MAGIC.len() + b"2 8 6.283185307179586\n".len();
        bytes[header_len..header_len + 8].copy_from_slice(&f64::NAN.to_le_bytes());
        std::fs::write(&path, &bytes).unwrap();
        match read_bfld(&path) {
            Err(BfldError::Malformed { offset, what, .. }) => {
                assert_eq!(offset, header_len);
                assert!(what.contains("non-finite"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_and_jsonl_emission() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(
            &path,
            &["a", "b"],
            vec![vec!["1".to_string(), "2".to_string()]],
        )
        .unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        assert_eq!(fmt_value(0.5), "0.5");
        // Display is shortest round-trip decimal, never scientific.
        assert_eq!(fmt_value(1e-7), "0.0000001");
        assert_eq!(fmt_value(1e-7).parse::<f64>().unwrap(), 1e-7);
    }
}
