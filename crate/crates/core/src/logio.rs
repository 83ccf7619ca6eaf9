//! Event log files.
//!
//! A log is stored as two files. The CSV has header
//! `time,index,pre_state_0,...,pre_state_{N-1}` with one row per spike and a
//! 0-based neuron index. The sidecar (same path with `.meta` appended) holds
//! `key = value` lines:
//!
//! ```text
//! schema-version = 1
//! n_neurons = 5
//! lambda = 1
//! m = 1
//! k_max = 2
//! rate = linear(1)
//! horizon = 100
//! seed = 42
//! stream = 0
//! candidates = 5123
//! words = 20492
//! jumps = 411
//! x0 = 1 1 1 1 1
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Floats are written in
//! shortest round-trip form, so reading a log back gives identical values.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulator::{EventLog, SeedRecord};

pub const SCHEMA_VERSION: u32 = 1;

/// Path of the metadata file that accompanies `csv`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    let mut s = csv.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn write_csv<W: Write>(log: &EventLog, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let n = log.n_neurons();
    let mut header = vec!["time".to_string(), "index".to_string()];
    header.extend((0..n).map(|i| format!("pre_state_{i}")));
    w.write_record(&header)?;
    let mut row: Vec<String> = Vec::with_capacity(n + 2);
    for jump in log.iter() {
        row.clear();
        row.push(jump.time.to_string());
        row.push(jump.index.to_string());
        row.extend(jump.pre_state.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_meta<W: Write>(log: &EventLog, mut out: W) -> Result<()> {
    let p = log.params();
    let s = log.seed();
    let x0: Vec<String> = log.x0().iter().map(f64::to_string).collect();
    writeln!(out, "schema-version = {SCHEMA_VERSION}")?;
    writeln!(out, "n_neurons = {}", p.n_neurons())?;
    writeln!(out, "lambda = {}", p.lambda())?;
    writeln!(out, "m = {}", p.m())?;
    writeln!(out, "k_max = {}", p.k_max())?;
    writeln!(out, "rate = {}", log.rate_id())?;
    writeln!(out, "horizon = {}", log.horizon())?;
    writeln!(out, "seed = {}", s.seed)?;
    writeln!(out, "stream = {}", s.stream)?;
    writeln!(out, "candidates = {}", s.candidates)?;
    writeln!(out, "words = {}", s.words)?;
    writeln!(out, "jumps = {}", log.len())?;
    writeln!(out, "x0 = {}", x0.join(" "))?;
    out.flush()?;
    Ok(())
}

/// Writes `csv` and its sidecar.
pub fn write_log(log: &EventLog, csv: &Path) -> Result<()> {
    write_csv(log, BufWriter::new(File::create(csv)?))?;
    write_meta(log, BufWriter::new(File::create(sidecar_path(csv))?))
}

pub fn read_log(csv: &Path) -> Result<EventLog> {
    let meta = File::open(sidecar_path(csv))?;
    read_log_from(File::open(csv)?, meta)
}

struct Meta(HashMap<String, String>);

impl Meta {
    fn parse<R: Read>(input: R) -> Result<Self> {
        let mut map = HashMap::new();
        for (no, line) in BufReader::new(input).lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Format(format!("metadata line {}: expected `key = value`", no + 1)))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.0.get(key).map(String::as_str).ok_or_else(|| Error::Format(format!("metadata missing `{key}`")))
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse().map_err(|_| Error::Format(format!("metadata `{key}`: cannot parse `{v}`")))
    }
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Format(format!("{what}: cannot parse `{s}`")))
}

pub fn read_log_from<R1: Read, R2: Read>(csv_in: R1, meta_in: R2) -> Result<EventLog> {
    let meta = Meta::parse(meta_in)?;
    let version: u32 = meta.get("schema-version")?;
    if version != SCHEMA_VERSION {
        return Err(Error::Format(format!("unsupported schema-version {version}")));
    }
    let params = ModelParams::new(meta.get("n_neurons")?, meta.get("lambda")?, meta.get("m")?, meta.get("k_max")?)?;
    let n = params.n_neurons();
    let x0 = meta.raw("x0")?.split_whitespace().map(|s| parse_f64(s, "x0")).collect::<Result<Vec<_>>>()?;
    let seed =
        SeedRecord { seed: meta.get("seed")?, stream: meta.get("stream")?, candidates: meta.get("candidates")?, words: meta.get("words")? };

    let mut reader = csv::Reader::from_reader(csv_in);
    let width = reader.headers()?.len();
    if width != n + 2 {
        return Err(Error::Format(format!("CSV has {width} columns, expected {} for N = {n}", n + 2)));
    }
    let mut jumps = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let time = parse_f64(&rec[0], "time")?;
        let index: usize = rec[1].trim().parse().map_err(|_| Error::Format(format!("row {k}: bad index `{}`", &rec[1])))?;
        let z = (2..n + 2).map(|c| parse_f64(&rec[c], "pre_state")).collect::<Result<Vec<_>>>()?;
        jumps.push((time, index, z));
    }
    let expected: usize = meta.get("jumps")?;
    if jumps.len() != expected {
        return Err(Error::Format(format!("CSV has {} jumps, metadata says {expected}", jumps.len())));
    }
    EventLog::from_parts(params, meta.raw("rate")?.to_string(), x0, meta.get("horizon")?, jumps, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RateFunction;
    use crate::simulator::{simulate, SimConfig};

    #[test]
    fn round_trip_is_exact() {
        let p = ModelParams::new(4, 1.3, 0.9, 2.0).unwrap();
        let f = RateFunction::identity(2.0).unwrap();
        let log = simulate(&p, &f, &SimConfig::new(12.0, 5).with_stream(2)).unwrap();
        let (mut csv_buf, mut meta_buf) = (Vec::new(), Vec::new());
        write_csv(&log, &mut csv_buf).unwrap();
        write_meta(&log, &mut meta_buf).unwrap();
        let back = read_log_from(&csv_buf[..], &meta_buf[..]).unwrap();
        assert_eq!(back, log);
        let header = String::from_utf8(csv_buf).unwrap();
        assert!(header.starts_with("time,index,pre_state_0,pre_state_1,pre_state_2,pre_state_3\n"));
    }

    #[test]
    fn files_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.csv");
        let p = ModelParams::new(2, 1.0, 1.0, 2.0).unwrap();
        let f = RateFunction::identity(2.0).unwrap();
        let log = simulate(&p, &f, &SimConfig::new(5.0, 1)).unwrap();
        write_log(&log, &path).unwrap();
        assert!(sidecar_path(&path).ends_with("run.csv.meta"));
        assert_eq!(read_log(&path).unwrap(), log);
    }

    #[test]
    fn mismatches_are_reported() {
        let meta = "schema-version = 1\nn_neurons = 2\nlambda = 1\nm = 1\nk_max = 2\nrate = x\nhorizon = 1\nseed = 0\nstream = 0\ncandidates = 0\nwords = 0\njumps = 1\nx0 = 1 1\n";
        let good = "time,index,pre_state_0,pre_state_1\n0.5,0,1,1\n";
        assert!(read_log_from(good.as_bytes(), meta.as_bytes()).is_ok());
        let narrow = "time,index,pre_state_0\n0.5,0,1\n";
        assert!(read_log_from(narrow.as_bytes(), meta.as_bytes()).is_err());
        let extra = "time,index,pre_state_0,pre_state_1\n0.5,0,1,1\n0.7,1,0.1,1\n";
        assert!(read_log_from(extra.as_bytes(), meta.as_bytes()).is_err());
        let v2 = meta.replace("schema-version = 1", "schema-version = 2");
        assert!(read_log_from(good.as_bytes(), v2.as_bytes()).is_err());
        let missing = meta.replace("seed = 0\n", "");
        assert!(read_log_from(good.as_bytes(), missing.as_bytes()).is_err());
    }
}
