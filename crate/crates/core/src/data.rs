//! Hourly market/wind data: CSV ingestion and a synthetic generator.
//!
//! prices.csv: `timestamp,da_price,rt_price` (ISO-8601 hour, currency/MWh).
//! wind.csv:   `timestamp,wind_speed` (m/s).
//! Rows with empty fields are dropped and counted; malformed values abort with
//! the offending line. Only complete 24-record days survive grouping.

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Weibull};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file}:{line}: {detail}")]
    Schema { file: String, line: u64, detail: String },
    #[error("io error reading {file}: {source}")]
    Io { file: String, source: std::io::Error },
    #[error("no complete days in data set")]
    Empty,
}

/// One aligned day of hourly records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DayRecord {
    pub date: NaiveDate,
    pub da_price: Vec<f64>,
    pub rt_price: Vec<f64>,
    pub wind_speed: Vec<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DataSet {
    pub days: Vec<DayRecord>,
    /// Rows dropped for empty fields or missing counterparts in the other file.
    pub dropped_rows: usize,
    /// Incomplete days dropped during grouping.
    pub dropped_days: usize,
}

impl DataSet {
    pub fn n_days(&self) -> usize {
        self.days.len()
    }

    /// All RT prices in chronological order (ARMA fitting input).
    pub fn rt_price_series(&self) -> Vec<f64> {
        self.days.iter().flat_map(|d| d.rt_price.iter().copied()).collect()
    }

    pub fn wind_speed_series(&self) -> Vec<f64> {
        self.days.iter().flat_map(|d| d.wind_speed.iter().copied()).collect()
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"] {
        if let Ok(ts) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(ts);
        }
    }
    None
}

struct CsvTable {
    /// timestamp -> numeric fields, insertion checked strictly increasing.
    rows: BTreeMap<NaiveDateTime, Vec<f64>>,
    dropped: usize,
}

/// Reads a CSV with a timestamp column followed by `columns` named numeric
/// fields. A leading header row is skipped.
fn read_table(path: &Path, columns: &[&str]) -> Result<CsvTable, DataError> {
    let file = path.display().to_string();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => {
                DataError::Io { file: file.clone(), source: std::io::Error::other(e.to_string()) }
            }
            _ => DataError::Schema { file: file.clone(), line: 0, detail: e.to_string() },
        })?;

    let mut rows = BTreeMap::new();
    let mut dropped = 0usize;
    let mut last_ts: Option<NaiveDateTime> = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| DataError::Schema {
            file: file.clone(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            detail: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(idx as u64 + 1);
        if record.iter().all(|f| f.is_empty()) {
            continue;
        }
        if idx == 0 && record.get(0) == Some("timestamp") {
            continue;
        }
        if record.len() != columns.len() + 1 {
            return Err(DataError::Schema {
                file,
                line,
                detail: format!("expected {} fields, got {}", columns.len() + 1, record.len()),
            });
        }
        if record.iter().any(|f| f.is_empty()) {
            dropped += 1;
            continue;
        }
        let ts_text = record.get(0).unwrap();
        let ts = parse_timestamp(ts_text).ok_or_else(|| DataError::Schema {
            file: file.clone(),
            line,
            detail: format!("column timestamp: cannot parse {ts_text:?}"),
        })?;
        if let Some(prev) = last_ts {
            if ts <= prev {
                return Err(DataError::Schema {
                    file,
                    line,
                    detail: format!("timestamps not strictly increasing at {ts}"),
                });
            }
        }
        last_ts = Some(ts);
        let mut values = Vec::with_capacity(columns.len());
        for (col, name) in columns.iter().enumerate() {
            let text = record.get(col + 1).unwrap();
            let v: f64 = text.parse().map_err(|_| DataError::Schema {
                file: file.clone(),
                line,
                detail: format!("column {name}: cannot parse {text:?}"),
            })?;
            values.push(v);
        }
        rows.insert(ts, values);
    }
    Ok(CsvTable { rows, dropped })
}

/// Loads and aligns the price and wind files into complete days.
pub fn ingest(prices_csv: &Path, wind_csv: &Path) -> Result<DataSet, DataError> {
    let prices = read_table(prices_csv, &["da_price", "rt_price"])?;
    let wind = read_table(wind_csv, &["wind_speed"])?;
    let mut dropped_rows = prices.dropped + wind.dropped;

    // Join on timestamp; unmatched rows count as dropped.
    let mut hours: BTreeMap<NaiveDateTime, (f64, f64, f64)> = BTreeMap::new();
    for (ts, p) in &prices.rows {
        match wind.rows.get(ts) {
            Some(w) => {
                hours.insert(*ts, (p[0], p[1], w[0]));
            }
            None => dropped_rows += 1,
        }
    }
    dropped_rows += wind.rows.iter().filter(|(ts, _)| !prices.rows.contains_key(*ts)).count();

    // Group into complete days.
    let mut by_day: BTreeMap<NaiveDate, Vec<(u32, f64, f64, f64)>> = BTreeMap::new();
    for (ts, (da, rt, ws)) in hours {
        by_day.entry(ts.date()).or_default().push((ts.hour(), da, rt, ws));
    }
    let mut days = Vec::new();
    let mut dropped_days = 0usize;
    for (date, mut recs) in by_day {
        recs.sort_by_key(|r| r.0);
        let complete = recs.len() == 24 && recs.iter().enumerate().all(|(h, r)| r.0 == h as u32);
        if !complete {
            dropped_days += 1;
            log::warn!("dropping incomplete day {date} ({} records)", recs.len());
            continue;
        }
        days.push(DayRecord {
            date,
            da_price: recs.iter().map(|r| r.1).collect(),
            rt_price: recs.iter().map(|r| r.2).collect(),
            wind_speed: recs.iter().map(|r| r.3).collect(),
        });
    }
    if days.is_empty() {
        return Err(DataError::Empty);
    }
    Ok(DataSet { days, dropped_rows, dropped_days })
}

/// Synthetic stand-in data: diurnal sinusoidal prices with an AR(1) daily
/// level, RT prices tracking DA with noise, Weibull wind with a diurnal swell.
/// Deterministic per seed.
pub fn synth_data(n_days: usize, seed: u64) -> DataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let price_noise = Normal::new(0.0, 3.0).unwrap();
    let rt_noise = Normal::new(0.0, 2.5).unwrap();
    let level_noise = Normal::new(0.0, 4.0).unwrap();
    let speed_noise = Normal::new(0.0, 0.7).unwrap();
    let weibull = Weibull::new(8.5, 2.2).unwrap();
    let start = NaiveDate::from_ymd_opt(2023, 1, 1).unwrap();

    let mut days = Vec::with_capacity(n_days);
    let mut level = 0.0f64;
    for d in 0..n_days {
        level = 0.8 * level + level_noise.sample(&mut rng);
        let base_speed: f64 = Distribution::<f64>::sample(&weibull, &mut rng).clamp(0.5, 30.0);
        let mut da_price = Vec::with_capacity(24);
        let mut rt_price = Vec::with_capacity(24);
        let mut wind_speed = Vec::with_capacity(24);
        for h in 0..24 {
            let phase = 2.0 * std::f64::consts::PI * (h as f64 - 9.0) / 24.0;
            let da = (45.0 + 18.0 * phase.sin() + level + price_noise.sample(&mut rng)).max(10.0);
            // Keep RT near or above DA so the derived under-production
            // penalty dominates the DA price in expectation even for low
            // 10-scenario noise draws (otherwise the full program is a ray).
            let rt = (da * rng.gen_range(0.95..1.25) + rt_noise.sample(&mut rng)).max(5.0);
            let swell = 1.0 + 0.25 * (2.0 * std::f64::consts::PI * (h as f64 - 15.0) / 24.0).sin();
            let ws = (base_speed * swell + speed_noise.sample(&mut rng)).max(0.0);
            da_price.push(da);
            rt_price.push(rt);
            wind_speed.push(ws);
        }
        days.push(DayRecord {
            date: start + chrono::Days::new(d as u64),
            da_price,
            rt_price,
            wind_speed,
        });
    }
    DataSet { days, dropped_rows: 0, dropped_days: 0 }
}

/// Writes a data set back out in the ingestion schema (used to round-trip
/// synthetic data through the CSV pipeline).
pub fn write_csv_files(
    data: &DataSet,
    prices_csv: &Path,
    wind_csv: &Path,
) -> Result<(), std::io::Error> {
    use std::fmt::Write as _;
    let mut prices = String::from("timestamp,da_price,rt_price\n");
    let mut wind = String::from("timestamp,wind_speed\n");
    for day in &data.days {
        for h in 0..24 {
            let ts = format!("{}T{:02}:00:00", day.date.format("%Y-%m-%d"), h);
            let _ = writeln!(prices, "{ts},{},{}", day.da_price[h], day.rt_price[h]);
            let _ = writeln!(wind, "{ts},{}", day.wind_speed[h]);
        }
    }
    std::fs::write(prices_csv, prices)?;
    std::fs::write(wind_csv, wind)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fmt::Write as _;

    fn write_files(n_rows: usize, dir: &Path) -> (std::path::PathBuf, std::path::PathBuf) {
        let mut prices = String::from("timestamp,da_price,rt_price\n");
        let mut wind = String::from("timestamp,wind_speed\n");
        for i in 0..n_rows {
            let day = 1 + i / 24;
            let hour = i % 24;
            let ts = format!("2023-01-{day:02}T{hour:02}:00:00");
            let _ = writeln!(prices, "{ts},{},{}", 40 + hour, 35 + hour);
            let _ = writeln!(wind, "{ts},{}", 5.0 + 0.1 * i as f64);
        }
        let p = dir.join("prices.csv");
        let w = dir.join("wind.csv");
        std::fs::write(&p, prices).unwrap();
        std::fs::write(&w, wind).unwrap();
        (p, w)
    }

    #[test]
    fn forty_eight_rows_make_two_days() {
        let dir = tempfile::tempdir().unwrap();
        let (p, w) = write_files(48, dir.path());
        let data = ingest(&p, &w).unwrap();
        assert_eq!(data.n_days(), 2);
        assert_eq!(data.dropped_rows, 0);
        assert_eq!(data.dropped_days, 0);
        assert_eq!(data.days[0].da_price[5], 45.0);
        assert_eq!(data.days[1].wind_speed.len(), 24);
    }

    #[test]
    fn partial_day_is_dropped_with_count() {
        let dir = tempfile::tempdir().unwrap();
        let (p, w) = write_files(47, dir.path());
        let data = ingest(&p, &w).unwrap();
        assert_eq!(data.n_days(), 1);
        assert_eq!(data.dropped_days, 1);
    }

    #[test]
    fn malformed_price_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let (p, w) = write_files(48, dir.path());
        let mut text = std::fs::read_to_string(&p).unwrap();
        text = text.replace("2023-01-01T03:00:00,43,38", "2023-01-01T03:00:00,forty,38");
        std::fs::write(&p, text).unwrap();
        match ingest(&p, &w) {
            Err(DataError::Schema { line, detail, .. }) => {
                assert_eq!(line, 5); // header + 4 rows
                assert!(detail.contains("da_price"), "{detail}");
            }
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn empty_field_rows_are_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let (p, w) = write_files(48, dir.path());
        let mut text = std::fs::read_to_string(&p).unwrap();
        text = text.replace("2023-01-01T03:00:00,43,38", "2023-01-01T03:00:00,,38");
        std::fs::write(&p, text).unwrap();
        let data = ingest(&p, &w).unwrap();
        // The dropped hour breaks day 1, leaving only day 2.
        assert_eq!(data.n_days(), 1);
        assert!(data.dropped_rows >= 1);
        assert_eq!(data.dropped_days, 1);
    }

    #[test]
    fn non_increasing_timestamps_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let (p, w) = write_files(48, dir.path());
        let mut text = std::fs::read_to_string(&p).unwrap();
        text.push_str("2023-01-01T00:00:00,40,35\n");
        std::fs::write(&p, text).unwrap();
        assert!(matches!(ingest(&p, &w), Err(DataError::Schema { .. })));
    }

    #[test]
    fn synth_row_count_and_determinism() {
        let a = synth_data(10, 77);
        assert_eq!(a.n_days(), 10);
        assert_eq!(a.rt_price_series().len(), 240);
        let b = synth_data(10, 77);
        for (da, db) in a.days.iter().zip(&b.days) {
            assert_eq!(da.da_price, db.da_price);
            assert_eq!(da.wind_speed, db.wind_speed);
        }
        let c = synth_data(10, 78);
        assert_ne!(a.days[0].da_price, c.days[0].da_price);
    }

    #[test]
    fn synth_values_are_sane() {
        let data = synth_data(30, 5);
        for day in &data.days {
            for h in 0..24 {
                assert!(day.da_price[h].is_finite() && day.da_price[h] >= 10.0);
                assert!(day.rt_price[h].is_finite() && day.rt_price[h] >= 5.0);
                assert!(day.wind_speed[h].is_finite() && day.wind_speed[h] >= 0.0);
            }
        }
    }

    #[test]
    fn synth_csv_roundtrip_through_ingest() {
        let dir = tempfile::tempdir().unwrap();
        let data = synth_data(3, 9);
        let p = dir.path().join("prices.csv");
        let w = dir.path().join("wind.csv");
        write_csv_files(&data, &p, &w).unwrap();
        let back = ingest(&p, &w).unwrap();
        assert_eq!(back.n_days(), 3);
        for (a, b) in data.days.iter().zip(&back.days) {
            assert_eq!(a.da_price, b.da_price);
            assert_eq!(a.rt_price, b.rt_price);
            assert_eq!(a.wind_speed, b.wind_speed);
        }
    }
}
