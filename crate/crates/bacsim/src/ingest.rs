//! Charging-session CSV ingestion: parse, validate, clean, group.
//!
//! Two dataset flavors are supported. The domestic export has a fixed
//! header (`EventID, CPID, StartDate, StartTime, EndDate, EndTime, Energy,
//! PluginDuration`) with durations in hours. The local-authority export has
//! the same logical fields behind configurable column names, durations in
//! hours or minutes, and optionally a connector-count column used to drop
//! multi-connector charge points.
//!
//! Parsing streams row by row in bounded memory; malformed rows are counted
//! and skipped, never fatal. The cleaning stages then remove overlapping
//! sessions within each charge point and drop charge points whose inferred
//! maximum speed falls outside the configured band. Every row is accounted
//! for in the [`IngestReport`].

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::model::{ChargePointProfile, ChargingSession, ModelError};
use crate::time::Timestamp;

/// Plugin durations at or below this (hours) are rejected before any speed
/// division happens. One microhour is far below the dataset's resolution.
pub const MIN_PLUGIN_DURATION_H: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("failed to read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("failed to read dataset header: {0}")]
    Header(csv::Error),
    #[error("dataset is missing column {0:?}")]
    MissingColumn(String),
    #[error("profile cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFlavor {
    Domestic,
    LocalAuthority,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DurationUnit {
    #[default]
    Hours,
    Minutes,
}

impl DurationUnit {
    fn to_hours(self, value: f64) -> f64 {
        match self {
            DurationUnit::Hours => value,
            DurationUnit::Minutes => value / 60.0,
        }
    }
}

/// Logical field → CSV column name mapping. An optional column mapped to
/// the empty string is treated as absent from the file (TOML has no null,
/// so `end_date = ""` is how a config drops a column).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub event_id: String,
    pub cp_id: String,
    pub start_date: String,
    pub start_time: String,
    pub end_date: Option<String>,
    pub end_time: Option<String>,
    pub energy: String,
    pub plugin_duration: String,
    /// When set, rows whose connector count parses to more than 1 are
    /// dropped; an empty value is taken to mean a single connector.
    pub connector_count: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            event_id: "EventID".into(),
            cp_id: "CPID".into(),
            start_date: "StartDate".into(),
            start_time: "StartTime".into(),
            end_date: Some("EndDate".into()),
            end_time: Some("EndTime".into()),
            energy: "Energy".into(),
            plugin_duration: "PluginDuration".into(),
            connector_count: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    pub flavor: DatasetFlavor,
    pub columns: ColumnMap,
    pub duration_unit: DurationUnit,
    /// Charge points with inferred max speed outside `[min, max)` kW are
    /// dropped entirely.
    pub speed_band: (f64, f64),
}

impl IngestOptions {
    pub fn domestic() -> Self {
        IngestOptions {
            flavor: DatasetFlavor::Domestic,
            columns: ColumnMap::default(),
            duration_unit: DurationUnit::Hours,
            speed_band: (3.0, 22.0),
        }
    }

    pub fn local_authority() -> Self {
        IngestOptions {
            flavor: DatasetFlavor::LocalAuthority,
            columns: ColumnMap::default(),
            duration_unit: DurationUnit::Hours,
            speed_band: (3.0, 100.0),
        }
    }
}

/// One validated dataset row.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSessionRecord {
    pub event_id: String,
    pub cp_id: String,
    pub start: Timestamp,
    pub energy_kwh: f64,
    pub plugin_duration_h: f64,
}

impl RawSessionRecord {
    pub fn speed_kw(&self) -> f64 {
        self.energy_kwh / self.plugin_duration_h
    }

    fn end_hours(&self) -> f64 {
        self.start.as_hours() + self.plugin_duration_h
    }
}

/// Row- and charge-point-level accounting for one ingest run.
/// `rows_read = sessions_retained + rejected_total + overlapping_removed`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: u64,
    pub rejected_unparseable: u64,
    pub rejected_nonpositive_duration: u64,
    pub rejected_negative_energy: u64,
    pub rejected_multi_connector: u64,
    pub overlapping_removed: u64,
    pub sessions_retained: u64,
    /// Sessions belonging to charge points that survived the speed filter.
    pub sessions_in_band: u64,
    pub cps_seen: u64,
    pub cps_filtered_by_speed: u64,
    pub cps_retained: u64,
}

impl IngestReport {
    pub fn rejected_total(&self) -> u64 {
        self.rejected_unparseable
            + self.rejected_nonpositive_duration
            + self.rejected_negative_energy
            + self.rejected_multi_connector
    }

    /// The session-level accounting identity; holds on every run.
    pub fn balanced(&self) -> bool {
        self.rows_read == self.sessions_retained + self.rejected_total() + self.overlapping_removed
    }
}

/// Sessions of one charge point, in first-appearance file order until
/// [`remove_overlaps`] sorts them.
#[derive(Debug, Clone, PartialEq)]
pub struct CpGroup {
    pub cp_id: String,
    pub sessions: Vec<RawSessionRecord>,
}

struct ColumnIndexes {
    event_id: usize,
    cp_id: usize,
    start_date: usize,
    start_time: usize,
    end_date: Option<usize>,
    end_time: Option<usize>,
    energy: usize,
    plugin_duration: usize,
    connector_count: Option<usize>,
}

fn resolve_columns(
    headers: &csv::StringRecord,
    map: &ColumnMap,
) -> Result<ColumnIndexes, IngestError> {
    let find = |name: &str| -> Result<usize, IngestError> {
        headers
            .iter()
            .position(|h| h.trim_start_matches('\u{feff}').trim() == name)
            .ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let find_opt = |name: &Option<String>| -> Result<Option<usize>, IngestError> {
        name.as_deref()
            .filter(|n| !n.is_empty())
            .map(find)
            .transpose()
    };
    Ok(ColumnIndexes {
        event_id: find(&map.event_id)?,
        cp_id: find(&map.cp_id)?,
        start_date: find(&map.start_date)?,
        start_time: find(&map.start_time)?,
        end_date: find_opt(&map.end_date)?,
        end_time: find_opt(&map.end_time)?,
        energy: find(&map.energy)?,
        plugin_duration: find(&map.plugin_duration)?,
        connector_count: find_opt(&map.connector_count)?,
    })
}

enum RowVerdict {
    Keep(RawSessionRecord),
    Unparseable,
    NonPositiveDuration,
    NegativeEnergy,
    MultiConnector,
}

fn parse_row(record: &csv::StringRecord, cols: &ColumnIndexes, unit: DurationUnit) -> RowVerdict {
    let field = |i: usize| record.get(i).map(str::trim);

    if let Some(ci) = cols.connector_count {
        match field(ci) {
            // Unspecified counts mean a single-connector charge point.
            Some("") | None => {}
            Some(v) => match v.parse::<u32>() {
                Ok(n) if n > 1 => return RowVerdict::MultiConnector,
                Ok(_) => {}
                Err(_) => return RowVerdict::Unparseable,
            },
        }
    }

    let (Some(event_id), Some(cp_id), Some(date), Some(time), Some(energy), Some(duration)) = (
        field(cols.event_id),
        field(cols.cp_id),
        field(cols.start_date),
        field(cols.start_time),
        field(cols.energy),
        field(cols.plugin_duration),
    ) else {
        return RowVerdict::Unparseable;
    };
    if event_id.is_empty() || cp_id.is_empty() {
        return RowVerdict::Unparseable;
    }

    let Ok(start) = Timestamp::parse(date, time) else {
        return RowVerdict::Unparseable;
    };
    // End fields are validated when present but are not authoritative:
    // the session extent comes from the plugin duration.
    if let Some(idx) = cols.end_date {
        match field(idx) {
            Some(v) if Timestamp::parse(v, "00:00:00").is_ok() => {}
            _ => return RowVerdict::Unparseable,
        }
    }
    if let Some(idx) = cols.end_time {
        match field(idx) {
            Some(v) if Timestamp::parse("01/01/2000", v).is_ok() => {}
            _ => return RowVerdict::Unparseable,
        }
    }

    let Ok(energy_kwh) = energy.parse::<f64>() else {
        return RowVerdict::Unparseable;
    };
    let Ok(duration_raw) = duration.parse::<f64>() else {
        return RowVerdict::Unparseable;
    };
    if !energy_kwh.is_finite() || !duration_raw.is_finite() {
        return RowVerdict::Unparseable;
    }
    if energy_kwh < 0.0 {
        return RowVerdict::NegativeEnergy;
    }
    let plugin_duration_h = unit.to_hours(duration_raw);
    if plugin_duration_h <= MIN_PLUGIN_DURATION_H {
        return RowVerdict::NonPositiveDuration;
    }

    RowVerdict::Keep(RawSessionRecord {
        event_id: event_id.to_string(),
        cp_id: cp_id.to_string(),
        start,
        energy_kwh,
        plugin_duration_h,
    })
}

/// Streaming parse of a session CSV. Each data row becomes a record or a
/// categorized rejection in the report; only an unreadable stream or a
/// missing column is fatal.
pub fn parse_csv<R: Read>(
    reader: R,
    options: &IngestOptions,
) -> Result<(Vec<RawSessionRecord>, IngestReport), IngestError> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = csv_reader.headers().map_err(IngestError::Header)?.clone();
    let cols = resolve_columns(&headers, &options.columns)?;

    let mut report = IngestReport::default();
    let mut records = Vec::new();
    for row in csv_reader.records() {
        report.rows_read += 1;
        let row = match row {
            Ok(row) => row,
            // A failing underlying stream is fatal; a malformed row is a
            // categorized rejection.
            Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => {
                return Err(match e.into_kind() {
                    csv::ErrorKind::Io(io) => IngestError::Io(io),
                    _ => unreachable!(),
                });
            }
            Err(_) => {
                report.rejected_unparseable += 1;
                continue;
            }
        };
        match parse_row(&row, &cols, options.duration_unit) {
            RowVerdict::Keep(rec) => records.push(rec),
            RowVerdict::Unparseable => report.rejected_unparseable += 1,
            RowVerdict::NonPositiveDuration => report.rejected_nonpositive_duration += 1,
            RowVerdict::NegativeEnergy => report.rejected_negative_energy += 1,
            RowVerdict::MultiConnector => report.rejected_multi_connector += 1,
        }
    }
    Ok((records, report))
}

/// Groups records by charge point, preserving first-appearance order so the
/// whole pipeline stays deterministic.
pub fn group_by_cp(records: Vec<RawSessionRecord>) -> Vec<CpGroup> {
    let mut index: std::collections::HashMap<String, usize> = std::collections::HashMap::new();
    let mut groups: Vec<CpGroup> = Vec::new();
    for rec in records {
        let slot = *index.entry(rec.cp_id.clone()).or_insert_with(|| {
            groups.push(CpGroup {
                cp_id: rec.cp_id.clone(),
                sessions: Vec::new(),
            });
            groups.len() - 1
        });
        groups[slot].sessions.push(rec);
    }
    groups
}

/// Removes overlapping sessions within each charge point.
///
/// Sessions are sorted by start time (ties broken by event id), the first is
/// kept, and any session starting before the last kept session's end is
/// dropped. Returns the number of sessions removed. Idempotent.
pub fn remove_overlaps(groups: &mut [CpGroup]) -> u64 {
    let mut removed = 0;
    for group in groups.iter_mut() {
        group.sessions.sort_by(|a, b| {
            a.start
                .cmp(&b.start)
                .then_with(|| a.event_id.cmp(&b.event_id))
        });
        let before = group.sessions.len();
        let mut last_end = f64::NEG_INFINITY;
        group.sessions.retain(|s| {
            if s.start.as_hours() < last_end {
                false
            } else {
                last_end = s.end_hours();
                true
            }
        });
        removed += (before - group.sessions.len()) as u64;
    }
    removed
}

/// Builds profiles from cleaned groups, dropping charge points whose
/// inferred max speed falls outside `[band.0, band.1)` kW. Returns the
/// retained profiles and the number of charge points filtered out.
pub fn infer_profiles(
    groups: Vec<CpGroup>,
    band: (f64, f64),
) -> Result<(Vec<ChargePointProfile>, u64), IngestError> {
    let mut profiles = Vec::new();
    let mut filtered = 0;
    for group in groups {
        let ev_max = group
            .sessions
            .iter()
            .map(RawSessionRecord::speed_kw)
            .fold(0.0, f64::max);
        if ev_max < band.0 || ev_max >= band.1 {
            filtered += 1;
            continue;
        }
        let sessions = group
            .sessions
            .into_iter()
            .map(|r| ChargingSession::new(r.event_id, r.start, r.plugin_duration_h, r.energy_kwh))
            .collect::<Result<Vec<_>, _>>()?;
        profiles.push(ChargePointProfile::new(group.cp_id, sessions)?);
    }
    Ok((profiles, filtered))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeedStatistic {
    Max,
    Median,
}

/// Histogram of charge points by max (or median) session speed.
///
/// `band_edges` must be strictly increasing; band `i` covers
/// `[edges[i], edges[i+1])` and the final band is open-ended.
pub fn speed_distribution(
    groups: &[CpGroup],
    statistic: SpeedStatistic,
    band_edges: &[f64],
) -> Vec<u64> {
    assert!(
        band_edges.windows(2).all(|w| w[0] < w[1]),
        "band edges must be strictly increasing"
    );
    let mut counts = vec![0u64; band_edges.len()];
    for group in groups {
        if group.sessions.is_empty() {
            continue;
        }
        let value = match statistic {
            SpeedStatistic::Max => group
                .sessions
                .iter()
                .map(RawSessionRecord::speed_kw)
                .fold(0.0, f64::max),
            SpeedStatistic::Median => {
                let mut speeds: Vec<f64> = group
                    .sessions
                    .iter()
                    .map(RawSessionRecord::speed_kw)
                    .collect();
                speeds.sort_by(|a, b| a.partial_cmp(b).unwrap());
                let n = speeds.len();
                if n % 2 == 1 {
                    speeds[n / 2]
                } else {
                    0.5 * (speeds[n / 2 - 1] + speeds[n / 2])
                }
            }
        };
        if let Some(bin) = band_index(band_edges, value) {
            counts[bin] += 1;
        }
    }
    counts
}

/// Index of the band containing `value`, or `None` below the first edge.
pub fn band_index(band_edges: &[f64], value: f64) -> Option<usize> {
    if band_edges.is_empty() || value < band_edges[0] {
        return None;
    }
    Some(band_edges.iter().rposition(|&e| value >= e).unwrap())
}

/// Parse, group, and de-overlap, stopping short of the speed filter. The
/// returned groups are what speed-distribution tables run over, so that
/// out-of-band charge points still show up there.
pub fn clean_groups<R: Read>(
    reader: R,
    options: &IngestOptions,
) -> Result<(Vec<CpGroup>, IngestReport), IngestError> {
    let (records, mut report) = parse_csv(reader, options)?;
    let mut groups = group_by_cp(records);
    report.cps_seen = groups.len() as u64;
    report.overlapping_removed = remove_overlaps(&mut groups);
    report.sessions_retained = groups.iter().map(|g| g.sessions.len() as u64).sum();
    Ok((groups, report))
}

/// Applies the speed-band filter to cleaned groups and completes the
/// report's charge-point accounting.
pub fn finish_ingest(
    groups: Vec<CpGroup>,
    mut report: IngestReport,
    speed_band: (f64, f64),
) -> Result<(Vec<ChargePointProfile>, IngestReport), IngestError> {
    let (profiles, filtered) = infer_profiles(groups, speed_band)?;
    report.cps_filtered_by_speed = filtered;
    report.cps_retained = profiles.len() as u64;
    report.sessions_in_band = profiles.iter().map(|p| p.session_count() as u64).sum();
    debug_assert!(report.balanced());
    Ok((profiles, report))
}

/// One-call pipeline: parse, group, de-overlap, speed-filter. The report
/// carries the complete accounting.
pub fn ingest<R: Read>(
    reader: R,
    options: &IngestOptions,
) -> Result<(Vec<ChargePointProfile>, IngestReport), IngestError> {
    let (groups, report) = clean_groups(reader, options)?;
    finish_ingest(groups, report, options.speed_band)
}

const CACHE_HEADER: &str = "cp_id,event_id,start_unix_s,plugin_duration_h,energy_kwh";

/// Writes cleaned profiles as a line-delimited cache so a dataset can be
/// re-simulated without re-parsing. Floats are written in shortest
/// round-trip form, so a reload is bit-exact.
pub fn save_profiles<W: Write>(
    mut writer: W,
    profiles: &[ChargePointProfile],
) -> Result<(), IngestError> {
    writeln!(writer, "{CACHE_HEADER}")?;
    for profile in profiles {
        for s in profile.sessions() {
            writeln!(
                writer,
                "{},{},{},{},{}",
                profile.cp_id(),
                s.event_id,
                s.start.unix_seconds(),
                s.plugin_duration_h,
                s.raw_energy_kwh
            )?;
        }
    }
    Ok(())
}

/// Reloads a profile cache written by [`save_profiles`].
pub fn load_profiles<R: Read>(reader: R) -> Result<Vec<ChargePointProfile>, IngestError> {
    let mut lines = std::io::BufRead::lines(std::io::BufReader::new(reader));
    match lines.next() {
        Some(Ok(h)) if h == CACHE_HEADER => {}
        Some(Ok(h)) => return Err(IngestError::Cache(format!("unexpected header {h:?}"))),
        Some(Err(e)) => return Err(IngestError::Io(e)),
        None => return Err(IngestError::Cache("empty file".into())),
    }
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let bad = || IngestError::Cache(format!("malformed line {}", i + 2));
        let mut parts = line.splitn(5, ',');
        let cp_id = parts.next().ok_or_else(bad)?;
        let event_id = parts.next().ok_or_else(bad)?;
        let start: i64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let plugin: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let energy: f64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        records.push(RawSessionRecord {
            event_id: event_id.to_string(),
            cp_id: cp_id.to_string(),
            start: Timestamp::from_unix_seconds(start),
            energy_kwh: energy,
            plugin_duration_h: plugin,
        });
    }
    let groups = group_by_cp(records);
    let mut profiles = Vec::new();
    for group in groups {
        let sessions = group
            .sessions
            .into_iter()
            .map(|r| ChargingSession::new(r.event_id, r.start, r.plugin_duration_h, r.energy_kwh))
            .collect::<Result<Vec<_>, _>>()?;
        profiles.push(ChargePointProfile::new(group.cp_id, sessions)?);
    }
    Ok(profiles)
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_group() -> impl Strategy<Value = Vec<RawSessionRecord>> {
        prop::collection::vec((0i64..250_000, 360i64..30_000, 0.0f64..20.0), 0..12).prop_map(
            |rows| {
                rows.into_iter()
                    .enumerate()
                    .map(|(i, (start_s, dur_s, energy))| RawSessionRecord {
                        event_id: format!("e{i}"),
                        cp_id: "cp".into(),
                        start: Timestamp::from_unix_seconds(start_s),
                        energy_kwh: energy,
                        plugin_duration_h: dur_s as f64 / 3600.0,
                    })
                    .collect()
            },
        )
    }

    proptest! {
        /// After overlap removal no pair intersects (checked all-pairs),
        /// the accounting adds up, and a second pass removes nothing.
        #[test]
        fn overlap_removal_is_sound(sessions in arb_group()) {
            let n = sessions.len();
            let mut groups = vec![CpGroup { cp_id: "cp".into(), sessions }];
            let removed = remove_overlaps(&mut groups);
            let kept = &groups[0].sessions;
            prop_assert_eq!(kept.len() + removed as usize, n);
            for i in 0..kept.len() {
                for j in (i + 1)..kept.len() {
                    let (a, b) = (&kept[i], &kept[j]);
                    let disjoint = a.end_hours() <= b.start.as_hours()
                        || b.end_hours() <= a.start.as_hours();
                    prop_assert!(disjoint, "{} and {} overlap", a.event_id, b.event_id);
                }
            }
            prop_assert_eq!(remove_overlaps(&mut groups), 0);
        }
    }
}
