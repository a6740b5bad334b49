//! Artifacts: versioned CSV tables, state sidecars and the run manifest.
//!
//! Every CSV starts with one line `# schema=<name>/v<k> config_hash=<hex>` followed by the
//! column header. Bodies depend only on the config, so reruns are byte-identical; wall-clock
//! time appears in the manifest alone.

use crate::dynamics::Trajectory;
use crate::error::{Error, Result};
use crate::spectrum::SpectralState;
use crate::statistics::{ModeRow, TestReport};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const STATE_SCHEMA: &str = "skdv.state/v1";
pub const TRAJECTORY_SCHEMA: &str = "skdv.trajectory/v1";
pub const MODE_TABLE_SCHEMA: &str = "skdv.mode_moments/v1";
pub const SAMPLES_SCHEMA: &str = "skdv.samples/v1";
pub const NORMS_SCHEMA: &str = "skdv.norms/v1";

/// Columns of each schema, in file order.
pub fn columns(schema: &str) -> Option<&'static [&'static str]> {
    Some(match schema {
        STATE_SCHEMA => &["n", "re", "im"],
        TRAJECTORY_SCHEMA => &["t", "n", "re", "im"],
        MODE_TABLE_SCHEMA => &[
            "t",
            "n",
            "part",
            "count",
            "mean",
            "mean_se",
            "variance",
            "variance_se",
            "excess_kurtosis",
            "kurtosis_se",
        ],
        SAMPLES_SCHEMA => &["quantity", "t", "realization", "value"],
        NORMS_SCHEMA => &["norm_name", "value", "window", "grid"],
        _ => return None,
    })
}

fn schema_line(schema: &str, hash: &str) -> String {
    format!("# schema={schema} config_hash={hash}\n")
}

/// Parses the first line of a CSV artifact into `(schema, config_hash)`.
pub fn parse_schema_line(line: &str) -> Result<(String, String)> {
    let rest = line
        .trim_end()
        .strip_prefix("# ")
        .ok_or_else(|| Error::Config(format!("missing schema line, found `{line}`")))?;
    let mut schema = None;
    let mut hash = None;
    for field in rest.split_whitespace() {
        if let Some(v) = field.strip_prefix("schema=") {
            schema = Some(v.to_string());
        } else if let Some(v) = field.strip_prefix("config_hash=") {
            hash = Some(v.to_string());
        }
    }
    match (schema, hash) {
        (Some(s), Some(h)) => Ok((s, h)),
        _ => Err(Error::Config(format!("malformed schema line `{line}`"))),
    }
}

/// A CSV file with the schema line and header already written.
pub struct CsvSink {
    path: PathBuf,
    rows: usize,
    writer: csv::Writer<BufWriter<File>>,
}

impl CsvSink {
    pub fn create(path: impl AsRef<Path>, schema: &str, hash: &str) -> Result<Self> {
        let cols = columns(schema).ok_or_else(|| Error::Config(format!("unknown schema {schema}")))?;
        let path = path.as_ref().to_path_buf();
        let mut file = BufWriter::new(File::create(&path)?);
        file.write_all(schema_line(schema, hash).as_bytes())?;
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(cols)?;
        Ok(Self { path, rows: 0, writer })
    }

    pub fn row<I, T>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = T>,
        T: AsRef<[u8]>,
    {
        self.writer.write_record(fields)?;
        self.rows += 1;
        Ok(())
    }

    /// Flushes and returns the file description for the manifest.
    pub fn finish(mut self, schema: &str) -> Result<FileEntry> {
        self.writer.flush()?;
        Ok(FileEntry {
            path: self.path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
            schema: schema.to_string(),
            rows: self.rows,
        })
    }
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub schema: String,
    pub rows: usize,
}

/// Sidecar of a state file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateMeta {
    pub n_max: usize,
    pub alpha: f64,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_hash: Option<String>,
}

/// Writes `<stem>.csv` with `(n, re, im)` for `n = 1..=n_max` and `<stem>.json` with the
/// sidecar.
pub fn write_state(dir: &Path, stem: &str, state: &SpectralState, meta: &StateMeta) -> Result<FileEntry> {
    let hash = meta.config_hash.clone().unwrap_or_else(|| "none".into());
    let mut sink = CsvSink::create(dir.join(format!("{stem}.csv")), STATE_SCHEMA, &hash)?;
    for (k, c) in state.coeffs().iter().enumerate() {
        sink.row([(k + 1).to_string(), num(c.re), num(c.im)])?;
    }
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(meta)?)?;
    sink.finish(STATE_SCHEMA)
}

fn open_checked(path: &Path, schema: &str) -> Result<csv::Reader<BufReader<File>>> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let (found, _) = parse_schema_line(&first)?;
    if found != schema {
        return Err(Error::Config(format!("{}: schema {found}, expected {schema}", path.display())));
    }
    Ok(csv::Reader::from_reader(reader))
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, path: &Path) -> Result<T> {
    rec.get(i)
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Config(format!("{}: bad field {i} in {:?}", path.display(), rec)))
}

/// Reads a state file and its sidecar.
pub fn read_state(csv_path: &Path) -> Result<(SpectralState, StateMeta)> {
    let meta: StateMeta = serde_json::from_str(&std::fs::read_to_string(csv_path.with_extension("json"))?)?;
    let mut coeffs = vec![Complex64::default(); meta.n_max];
    let mut seen = vec![false; meta.n_max];
    for rec in open_checked(csv_path, STATE_SCHEMA)?.records() {
        let rec = rec?;
        let n: usize = field(&rec, 0, csv_path)?;
        if n == 0 || n > meta.n_max {
            return Err(Error::Dimension(format!("mode {n} outside 1..={}", meta.n_max)));
        }
        coeffs[n - 1] = Complex64::new(field(&rec, 1, csv_path)?, field(&rec, 2, csv_path)?);
        seen[n - 1] = true;
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::Dimension("state file misses modes".into()));
    }
    Ok((SpectralState::from_coeffs(coeffs)?, meta))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory, hash: &str) -> Result<FileEntry> {
    let mut sink = CsvSink::create(path, TRAJECTORY_SCHEMA, hash)?;
    for (t, s) in traj.times().zip(traj.states()) {
        for (k, c) in s.coeffs().iter().enumerate() {
            sink.row([num(t), (k + 1).to_string(), num(c.re), num(c.im)])?;
        }
    }
    sink.finish(TRAJECTORY_SCHEMA)
}

/// Reads a trajectory written by [`write_trajectory`]; times must form a uniform grid.
pub fn read_trajectory(path: &Path) -> Result<Trajectory> {
    let mut times: Vec<f64> = Vec::new();
    let mut states: Vec<Vec<Complex64>> = Vec::new();
    for rec in open_checked(path, TRAJECTORY_SCHEMA)?.records() {
        let rec = rec?;
        let t: f64 = field(&rec, 0, path)?;
        let n: usize = field(&rec, 1, path)?;
        let z = Complex64::new(field(&rec, 2, path)?, field(&rec, 3, path)?);
        if times.last() != Some(&t) {
            times.push(t);
            states.push(Vec::new());
        }
        let s = states.last_mut().expect("pushed");
        if n != s.len() + 1 {
            return Err(Error::Config(format!("{}: modes out of order at t = {t}", path.display())));
        }
        s.push(z);
    }
    if times.is_empty() {
        return Err(Error::Config(format!("{}: empty trajectory", path.display())));
    }
    let dt_out = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
    for (k, t) in times.iter().enumerate() {
        if (times[0] + k as f64 * dt_out - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(Error::Config(format!("{}: output times are not uniform", path.display())));
        }
    }
    let states = states.into_iter().map(SpectralState::from_coeffs).collect::<Result<Vec<_>>>()?;
    Trajectory::new(times[0], dt_out, states)
}

pub fn write_mode_table(path: &Path, rows: &[ModeRow], hash: &str) -> Result<FileEntry> {
    let mut sink = CsvSink::create(path, MODE_TABLE_SCHEMA, hash)?;
    for r in rows {
        let m = &r.moments;
        sink.row([
            num(r.t),
            r.n.to_string(),
            r.part.to_string(),
            m.count.to_string(),
            num(m.mean),
            num(m.mean_se),
            num(m.variance),
            num(m.variance_se),
            num(m.excess_kurtosis),
            num(m.kurtosis_se),
        ])?;
    }
    sink.finish(MODE_TABLE_SCHEMA)
}

/// Raw samples `(quantity, t, realization, value)`.
pub fn write_samples<'a, I>(path: &Path, hash: &str, groups: I) -> Result<FileEntry>
where
    I: IntoIterator<Item = (&'a str, f64, &'a [f64])>,
{
    let mut sink = CsvSink::create(path, SAMPLES_SCHEMA, hash)?;
    for (name, t, values) in groups {
        for (r, v) in values.iter().enumerate() {
            sink.row([name.to_string(), num(t), r.to_string(), num(*v)])?;
        }
    }
    sink.finish(SAMPLES_SCHEMA)
}

/// Run manifest, written last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub config_hash: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub config: serde_json::Value,
    /// Subcommand arguments that are not part of the config.
    #[serde(default)]
    pub parameters: serde_json::Value,
    pub files: Vec<FileEntry>,
    pub reports: Vec<TestReport>,
    pub pass: bool,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub fn unix_now() -> f64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<PathBuf> {
    let path = dir.join("manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(manifest)?)?;
    Ok(path)
}

pub fn write_reports(dir: &Path, reports: &[TestReport]) -> Result<PathBuf> {
    let path = dir.join("reports.json");
    std::fs::write(&path, serde_json::to_string_pretty(reports)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::spectrum::{sample_white_noise, WhiteNoiseSpec};

    fn state(seed: u64) -> SpectralState {
        sample_white_noise(&WhiteNoiseSpec { alpha: 1.0, n_max: 6 }, &RngStream::new(seed), 0).unwrap()
    }

    #[test]
    fn state_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let s = state(1);
        let meta = StateMeta {
            n_max: 6,
            alpha: 1.0,
            seed: 1,
            config_hash: Some("ab".into()),
        };
        let entry = write_state(dir.path(), "u0", &s, &meta).unwrap();
        assert_eq!(entry.rows, 6);
        let (back, m) = read_state(&dir.path().join("u0.csv")).unwrap();
        assert_eq!(back, s);
        assert_eq!(m, meta);
        let text = std::fs::read_to_string(dir.path().join("u0.csv")).unwrap();
        assert!(text.starts_with("# schema=skdv.state/v1 config_hash=ab\nn,re,im\n"));
    }

    #[test]
    fn trajectory_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let traj = Trajectory::new(0.0, 0.25, vec![state(1), state(2), state(3)]).unwrap();
        let p = dir.path().join("traj.csv");
        write_trajectory(&p, &traj, "h").unwrap();
        let back = read_trajectory(&p).unwrap();
        assert_eq!(back, traj);
        // wrong schema is refused
        assert!(read_state(&p).is_err());
    }

    #[test]
    fn schema_line_parsing() {
        assert_eq!(
            parse_schema_line("# schema=skdv.state/v1 config_hash=00ff\n").unwrap(),
            ("skdv.state/v1".to_string(), "00ff".to_string())
        );
        assert!(parse_schema_line("n,re,im").is_err());
        assert!(parse_schema_line("# schema=x").is_err());
    }

    #[test]
    fn numbers_round_trip() {
        for x in [0.1, -1e-300, 1.0 / 3.0, 12345.678] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }
}
