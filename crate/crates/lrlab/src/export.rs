//! CSV and JSON exports of result sets, and re-import of exported records.

use std::fs::File;
use std::path::{Path, PathBuf};

use lrlab_core::metrics::{RecordKind, ScanRecord};
use lrlab_core::proofcheck::ProofCheckReport;
use lrlab_core::SiteInterval;
use serde::{Deserialize, Serialize};

use crate::config::{Format, ScenarioConfig};
use crate::error::{HarnessError, Result};
use crate::results::{FitEntry, MarginEntry, Provenance, ResultSet, TOOL_VERSION};

pub const RECORD_COLUMNS: [&str; 12] = [
    "scenario_id",
    "kind",
    "realization",
    "d",
    "t",
    "value",
    "stderr_placeholder",
    "A_support_lo",
    "A_support_hi",
    "B_support_lo",
    "B_support_hi",
    "config_hash",
];

pub const FIT_COLUMNS: [&str; 7] = ["scenario_id", "K", "xi", "beta", "rms_log_residual", "n_points", "config_hash"];

pub const RECORDS_FILE: &str = "records.csv";
pub const FITS_FILE: &str = "fits.csv";
pub const SUMMARY_FILE: &str = "summary.json";

/// Seventeen significant digits, enough to round-trip any f64.
fn float(v: f64) -> String {
    format!("{v:.16e}")
}

/// summary.json: everything in a result set except the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub tool_version: String,
    pub config_hash: String,
    pub all_passed: bool,
    pub config: ScenarioConfig,
    pub proof_checks: Vec<ProofCheckReport>,
    pub margins: Vec<MarginEntry>,
    pub fits: Vec<FitEntry>,
    pub provenance: Provenance,
    pub skipped: Vec<String>,
    pub wall_time_s: f64,
}

impl Summary {
    pub fn of(rs: &ResultSet) -> Self {
        Self {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: rs.config_hash().to_string(),
            all_passed: rs.all_passed(),
            config: rs.config.clone(),
            proof_checks: rs.proof_checks.clone(),
            margins: rs.margins.clone(),
            fits: rs.fits.clone(),
            provenance: rs.provenance.clone(),
            skipped: rs.skipped.clone(),
            wall_time_s: rs.wall_time_s,
        }
    }

    pub fn into_result_set(self, records: Vec<ScanRecord>) -> ResultSet {
        ResultSet {
            config: self.config,
            records,
            fits: self.fits,
            proof_checks: self.proof_checks,
            margins: self.margins,
            provenance: self.provenance,
            skipped: self.skipped,
            wall_time_s: self.wall_time_s,
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    let file = File::create(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv { path: path.to_path_buf(), source }
}

pub fn write_records(path: &Path, records: &[ScanRecord], config_hash: &str) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(RECORD_COLUMNS).map_err(csv_err(path))?;
    for r in records {
        w.write_record([
            r.scenario_id.clone(),
            r.kind.as_str().to_string(),
            r.realization.map(|x| x.to_string()).unwrap_or_default(),
            r.d.to_string(),
            float(r.t),
            float(r.value),
            r.stderr.map(float).unwrap_or_default(),
            r.a_support.lo.to_string(),
            r.a_support.hi.to_string(),
            r.b_support.lo.to_string(),
            r.b_support.hi.to_string(),
            config_hash.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

pub fn write_fits(path: &Path, fits: &[FitEntry], config_hash: &str) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(FIT_COLUMNS).map_err(csv_err(path))?;
    for f in fits {
        w.write_record([
            f.scenario_id.clone(),
            float(f.fit.k),
            float(f.fit.xi),
            float(f.fit.beta),
            float(f.fit.rms_log_residual),
            f.fit.n_points.to_string(),
            config_hash.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

pub fn write_summary(path: &Path, rs: &ResultSet) -> Result<()> {
    let mut text = serde_json::to_string_pretty(&Summary::of(rs))
        .map_err(|source| HarnessError::Json { path: path.to_path_buf(), source })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

/// Writes the formats selected in the config into `dir`, replacing earlier
/// exports. Returns the files written.
pub fn export(rs: &ResultSet, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    let hash = rs.config_hash();
    let mut written = Vec::new();
    if rs.config.output.formats.contains(&Format::Csv) {
        let (records, fits) = (dir.join(RECORDS_FILE), dir.join(FITS_FILE));
        write_records(&records, &rs.records, hash)?;
        write_fits(&fits, &rs.fits, hash)?;
        written.extend([records, fits]);
    }
    if rs.config.output.formats.contains(&Format::Json) {
        let summary = dir.join(SUMMARY_FILE);
        write_summary(&summary, rs)?;
        written.push(summary);
    }
    Ok(written)
}

/// One subdirectory per sweep point, named by its index.
pub fn export_sweep(sets: &[ResultSet], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })?;
    let mut written = Vec::new();
    for (i, rs) in sets.iter().enumerate() {
        let index = rs.provenance.sweep.as_ref().map_or(i, |p| p.index);
        written.extend(export(rs, &dir.join(format!("point-{index:03}")))?);
    }
    Ok(written)
}

/// Reads records.csv, checking every row. When `expected_hash` is given all
/// rows must carry it; otherwise they must agree with each other.
pub fn import_records(path: &Path, expected_hash: Option<&str>) -> Result<Vec<ScanRecord>> {
    let file = File::open(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(RECORD_COLUMNS) {
        return Err(HarnessError::Import {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected columns {}", RECORD_COLUMNS.join(",")),
        });
    }
    let mut hash = expected_hash.map(str::to_string);
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err(path))?;
        let line = row.position().map_or(0, |p| p.line());
        let fail = |message: String| HarnessError::Import { path: path.to_path_buf(), line, message };
        let int = |i: usize| row[i].parse::<usize>().map_err(|e| fail(format!("{}: {e}", RECORD_COLUMNS[i])));
        let real = |i: usize| -> Result<f64> {
            let v = row[i].parse::<f64>().map_err(|e| fail(format!("{}: {e}", RECORD_COLUMNS[i])))?;
            if !v.is_finite() {
                return Err(fail(format!("{} is not finite", RECORD_COLUMNS[i])));
            }
            Ok(v)
        };
        let kind = RecordKind::parse(&row[1]).ok_or_else(|| fail(format!("unknown kind `{}`", &row[1])))?;
        let realization = match &row[2] {
            "" => None,
            s => Some(s.parse::<u64>().map_err(|e| fail(format!("realization: {e}")))?),
        };
        let stderr = match &row[6] {
            "" => None,
            _ => Some(real(6)?),
        };
        let (value, t) = (real(5)?, real(4)?);
        if value < 0.0 || stderr.is_some_and(|s| s < 0.0) {
            return Err(fail("value and stderr must be non-negative".to_string()));
        }
        let support = |lo: usize, hi: usize| -> Result<SiteInterval> {
            SiteInterval::new(int(lo)?, int(hi)?).map_err(|e| fail(e.to_string()))
        };
        let (a_support, b_support) = (support(7, 8)?, support(9, 10)?);
        let d = int(3)?;
        if kind == RecordKind::Commutator && d != a_support.distance(&b_support) {
            return Err(fail(format!("d = {d} but the supports are {} apart", a_support.distance(&b_support))));
        }
        match &hash {
            Some(h) if h != &row[11] => return Err(fail(format!("config hash {} does not match {h}", &row[11]))),
            Some(_) => {}
            None => hash = Some(row[11].to_string()),
        }
        out.push(ScanRecord { scenario_id: row[0].to_string(), kind, realization, d, t, value, stderr, a_support, b_support });
    }
    Ok(out)
}

/// Rebuilds a result set from an export directory holding summary.json and
/// records.csv. The summary's hash must match both its config and the records.
pub fn import(dir: &Path) -> Result<ResultSet> {
    let summary_path = dir.join(SUMMARY_FILE);
    let text = std::fs::read_to_string(&summary_path)
        .map_err(|source| HarnessError::Io { path: summary_path.clone(), source })?;
    let summary: Summary =
        serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: summary_path.clone(), source })?;
    let recomputed = summary.config.hash();
    if recomputed != summary.config_hash {
        return Err(HarnessError::Import {
            path: summary_path,
            line: 0,
            message: format!("config hashes to {recomputed} but the summary records {}", summary.config_hash),
        });
    }
    let records = import_records(&dir.join(RECORDS_FILE), Some(&summary.config_hash))?;
    Ok(summary.into_result_set(records))
}
