//! Per-trial CSV output.
//!
//! Lines starting with `#` carry the run parameters before the table and the
//! per-point statistics and fits after it. Readers that honour `#` comments
//! see a plain table.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::analysis::SweepResult;
use crate::error::{Error, Result};
use crate::sensing::OperatorKind;

use super::{ExperimentConfig, ExperimentKind, TrialRecord};

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "matrix",
    "model",
    "n",
    "k_or_r",
    "m",
    "delta",
    "dither",
    "trial",
    "seed",
    "error",
];

/// Renders the full CSV document. With `timestamp` off the output depends
/// only on the inputs.
pub fn render_csv(
    config: &ExperimentConfig,
    records: &[TrialRecord],
    sweep: &SweepResult,
    timestamp: bool,
) -> Result<Vec<u8>> {
    let mut head = String::new();
    for line in config.to_text().lines() {
        let _ = writeln!(head, "# {line}");
    }
    if timestamp {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(head, "# generated_unix = {secs}");
    }
    let _ = writeln!(head, "# stddev: sample (n-1)");

    let mut w = csv::Writer::from_writer(head.into_bytes());
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record([
            r.experiment.name().to_string(),
            r.matrix.name().to_string(),
            r.model.clone(),
            r.n.to_string(),
            r.k_or_r.to_string(),
            r.m.to_string(),
            r.delta.to_string(),
            u8::from(r.dither).to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            r.error.to_string(),
        ])?;
    }
    let mut out = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;

    let mut tail = String::new();
    for p in &sweep.points {
        let _ = writeln!(
            tail,
            "# point m={} delta={} dither={} mean={} median={} stddev={} count={}",
            p.m,
            p.delta,
            u8::from(p.dither),
            p.mean,
            p.median,
            p.stddev,
            p.count
        );
    }
    for f in &sweep.fits {
        let series = match (f.delta, f.m) {
            (Some(d), _) => format!("delta={d}"),
            (_, Some(m)) => format!("m={m}"),
            _ => String::from("all"),
        };
        match f.fit {
            Some(fit) => {
                let _ = writeln!(
                    tail,
                    "# fit {series} dither={} points={} exponent={} intercept={} residual={}",
                    u8::from(f.dither),
                    f.points_used,
                    fit.exponent,
                    fit.intercept,
                    fit.residual
                );
            }
            None => {
                let _ = writeln!(
                    tail,
                    "# fit {series} dither={} points={} none",
                    u8::from(f.dither),
                    f.points_used
                );
            }
        }
    }
    out.extend_from_slice(tail.as_bytes());
    Ok(out)
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_csv(
    path: &Path,
    config: &ExperimentConfig,
    records: &[TrialRecord],
    sweep: &SweepResult,
    timestamp: bool,
) -> Result<()> {
    write_atomic(path, &render_csv(config, records, sweep, timestamp)?)
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, row: usize) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse().map_err(|_| {
        Error::Config(format!(
            "row {row}: cannot parse '{raw}' in column '{}'",
            CSV_HEADER[i]
        ))
    })
}

/// Reads the trial rows of a CSV written by [`write_csv`].
pub fn read_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)?;
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(Error::Config(format!(
            "{}: expected header '{}'",
            path.display(),
            CSV_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let experiment: ExperimentKind = field(&rec, 0, row)?;
        let matrix_name = rec.get(1).unwrap_or("");
        let matrix = OperatorKind::from_name(matrix_name)
            .ok_or_else(|| Error::Config(format!("row {row}: unknown matrix '{matrix_name}'")))?;
        let dither = match rec.get(7) {
            Some("0") => false,
            Some("1") => true,
            other => {
                return Err(Error::Config(format!(
                    "row {row}: dither must be 0 or 1, got '{}'",
                    other.unwrap_or("")
                )))
            }
        };
        out.push(TrialRecord {
            experiment,
            matrix,
            model: rec.get(2).unwrap_or("").to_string(),
            n: field(&rec, 3, row)?,
            k_or_r: field(&rec, 4, row)?,
            m: field(&rec, 5, row)?,
            delta: field(&rec, 6, row)?,
            dither,
            trial: field(&rec, 8, row)?,
            seed: field(&rec, 9, row)?,
            error: field(&rec, 10, row)?,
        });
    }
    Ok(out)
}
