//! Scenario orchestration: ingest (or generate) a dataset, run the sweep,
//! write every report file into the output directory.
//!
//! Progress goes to standard error; nothing is written to standard output,
//! keeping it clean for scripting. Report files are the machine interface.
//! Identical config + dataset produce byte-identical outputs: grouping is
//! first-appearance ordered, parallel partials are reduced in a fixed order,
//! and floats are formatted in shortest round-trip form. On failure every
//! file created so far is removed.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{resolve_path, ScenarioConfig};
use crate::ingest::{self, IngestReport, SpeedStatistic};
use crate::model::ChargePointProfile;
use crate::report::{
    energy_by_speed, session_histograms, sweep_detailed, EnergyBand, SweepCellResult,
};
use crate::synth;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] crate::config::ConfigError),
    #[error("dataset error: {0}")]
    Dataset(#[from] ingest::IngestError),
    #[error("synthetic generation error: {0}")]
    Synth(#[from] synth::SynthError),
    #[error("simulation error: {0}")]
    Simulation(#[from] crate::report::SweepError),
    #[error("output error on {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl RunError {
    /// Process exit code. Config problems, input problems, and simulation
    /// problems are distinguishable for scripting.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Dataset(_) | RunError::Synth(_) | RunError::Output { .. } => 3,
            RunError::Simulation(_) => 4,
        }
    }
}

/// What a completed run produced, for callers that want to post-process.
#[derive(Debug)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub report: IngestReport,
    pub profiles: usize,
    pub cells: usize,
    pub files: Vec<PathBuf>,
}

/// Charging-speed histogram band edges, aligned with the UK charger-class
/// breakpoints (3-pin socket, slow, fast, rapid); reused for both speed
/// statistics.
pub const SPEED_BAND_EDGES: [f64; 7] = [0.0, 1.0, 2.3, 3.0, 7.0, 22.0, 100.0];
/// Energy-by-speed band edges, domestic and local-authority layouts.
pub const ENERGY_BAND_EDGES_DOMESTIC: [f64; 5] = [0.0, 3.0, 7.0, 11.0, 22.0];
pub const ENERGY_BAND_EDGES_LOCAL_AUTHORITY: [f64; 4] = [0.0, 11.0, 22.0, 50.0];

struct OutputTracker {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl OutputTracker {
    fn new(dir: PathBuf) -> Result<Self, RunError> {
        fs::create_dir_all(&dir).map_err(|e| RunError::Output {
            path: dir.clone(),
            source: e,
        })?;
        Ok(OutputTracker {
            dir,
            files: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, contents: &[u8]) -> Result<PathBuf, RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| RunError::Output {
            path: path.clone(),
            source: e,
        })?;
        self.files.push(path.clone());
        Ok(path)
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, RunError> {
        let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Remove everything written so far; called when a run fails partway.
    fn discard(&self) {
        for file in &self.files {
            let _ = fs::remove_file(file);
        }
    }
}

/// Charge-point counts per speed band, max-rate and median-rate statistics,
/// computed over cleaned groups before the band filter drops anything.
#[derive(Debug, Serialize)]
struct SpeedDistribution {
    band_edges: Vec<f64>,
    cps_max_rate: Vec<u64>,
    cps_median_rate: Vec<u64>,
}

fn load_input(
    config: &ScenarioConfig,
    base_dir: &Path,
    seed_override: Option<u64>,
    out: &mut OutputTracker,
) -> Result<(Vec<ChargePointProfile>, IngestReport, SpeedDistribution), RunError> {
    let options = config.ingest_options();
    let (groups, report) = if let Some(ds) = &config.dataset {
        let path = resolve_path(base_dir, &ds.path);
        eprintln!("reading dataset {}", path.display());
        let file = fs::File::open(&path).map_err(ingest::IngestError::Io)?;
        let reader = std::io::BufReader::with_capacity(1 << 20, file);
        ingest::clean_groups(reader, &options)?
    } else {
        let mut spec = config.synth.clone().expect("validated: synth present");
        if let Some(seed) = seed_override {
            spec.seed = seed;
        }
        eprintln!(
            "generating synthetic dataset: {} charge points x {} sessions, seed {}",
            spec.cp_count, spec.sessions_per_cp, spec.seed
        );
        let csv = synth::generate_to_vec(&spec)?;
        out.write("synth_dataset.csv", &csv)?;
        ingest::clean_groups(csv.as_slice(), &options)?
    };

    let distribution = SpeedDistribution {
        band_edges: SPEED_BAND_EDGES.to_vec(),
        cps_max_rate: ingest::speed_distribution(&groups, SpeedStatistic::Max, &SPEED_BAND_EDGES),
        cps_median_rate: ingest::speed_distribution(
            &groups,
            SpeedStatistic::Median,
            &SPEED_BAND_EDGES,
        ),
    };
    let (profiles, report) = ingest::finish_ingest(groups, report, options.speed_band)?;
    Ok((profiles, report, distribution))
}

fn speed_distribution_csv(max_counts: &[u64], median_counts: &[u64]) -> String {
    let mut text = String::from("band_min_kw,band_max_kw,cps_max_rate,cps_median_rate\n");
    for (i, (&max_n, &med_n)) in max_counts.iter().zip(median_counts).enumerate() {
        let hi = SPEED_BAND_EDGES
            .get(i + 1)
            .map(|e| e.to_string())
            .unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{}\n",
            SPEED_BAND_EDGES[i], hi, max_n, med_n
        ));
    }
    text
}

fn energy_by_speed_csv(bands: &[EnergyBand]) -> String {
    let mut text = String::from("band_min_kw,band_max_kw,sessions,median_kwh,mean_kwh\n");
    for b in bands {
        let hi = b.max_kw.map(|e| e.to_string()).unwrap_or_default();
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            b.min_kw, hi, b.sessions, b.median_kwh, b.mean_kwh
        ));
    }
    text
}

fn sweep_csv(cells: &[SweepCellResult]) -> String {
    let mut text = String::from(
        "grid_kw,pack_count,sessions,mean_delivered_kwh,delivered_pct,\
         delivered_pct_session_mean,mean_effective_duration_h,mean_effective_duration_ev_h,\
         parity_pct,depleted_pct,cycles_min,cycles_mean,cycles_max,cycles_mean_throughput\n",
    );
    for r in cells {
        let c = &r.cell;
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            c.grid_kw,
            c.pack_count,
            c.sessions,
            c.mean_delivered_kwh,
            c.delivered_pct,
            c.delivered_pct_session_mean,
            c.mean_effective_duration_h,
            c.mean_effective_duration_ev_h,
            c.parity_pct,
            c.depleted_pct,
            r.cycles.min,
            r.cycles.mean,
            r.cycles.max,
            r.cycles.mean_throughput,
        ));
    }
    text
}

fn hourly_csv<F: Fn(usize) -> String>(header: &str, value: F) -> String {
    let mut text = format!("hour,{header}\n");
    for hour in 0..24 {
        text.push_str(&format!("{hour},{}\n", value(hour)));
    }
    text
}

#[derive(Serialize)]
struct SweepJsonCell<'a> {
    #[serde(flatten)]
    cell: &'a crate::report::SweepCell,
    cycles: &'a crate::report::CycleStats,
}

/// Executes a validated scenario. `base_dir` anchors relative paths in the
/// config (normally the config file's directory).
pub fn run(
    config: &ScenarioConfig,
    base_dir: &Path,
    out_override: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<RunSummary, RunError> {
    let issues = config.validate(base_dir);
    if !issues.is_empty() {
        return Err(RunError::Config(crate::config::ConfigError::Invalid(
            issues,
        )));
    }

    let out_dir = out_override
        .map(Path::to_path_buf)
        .unwrap_or_else(|| resolve_path(base_dir, &config.run.output_dir));
    let mut out = OutputTracker::new(out_dir.clone())?;

    let result = run_inner(config, base_dir, seed_override, &mut out);
    if result.is_err() {
        out.discard();
    }
    result
}

fn run_inner(
    config: &ScenarioConfig,
    base_dir: &Path,
    seed_override: Option<u64>,
    out: &mut OutputTracker,
) -> Result<RunSummary, RunError> {
    let (profiles, report, speed_dist) = load_input(config, base_dir, seed_override, out)?;
    eprintln!(
        "ingest: {} rows, {} charge points retained ({} sessions), {} rejected, {} overlapping removed",
        report.rows_read,
        report.cps_retained,
        report.sessions_in_band,
        report.rejected_total(),
        report.overlapping_removed,
    );

    out.write_json("ingest_report.json", &report)?;

    let mut cache = Vec::new();
    ingest::save_profiles(&mut cache, &profiles).map_err(|e| match e {
        ingest::IngestError::Io(io) => RunError::Output {
            path: out.dir.join("profiles.csv"),
            source: io,
        },
        other => RunError::Dataset(other),
    })?;
    out.write("profiles.csv", &cache)?;

    out.write(
        "speed_distribution.csv",
        speed_distribution_csv(&speed_dist.cps_max_rate, &speed_dist.cps_median_rate).as_bytes(),
    )?;
    out.write_json("speed_distribution.json", &speed_dist)?;

    let energy_edges: &[f64] = match config.dataset.as_ref().map(|d| d.flavor) {
        Some(ingest::DatasetFlavor::LocalAuthority) => &ENERGY_BAND_EDGES_LOCAL_AUTHORITY,
        _ => &ENERGY_BAND_EDGES_DOMESTIC,
    };
    let energy_bands = energy_by_speed(&profiles, energy_edges);
    out.write(
        "energy_by_speed.csv",
        energy_by_speed_csv(&energy_bands).as_bytes(),
    )?;
    out.write_json("energy_by_speed.json", &energy_bands)?;

    let diurnal = session_histograms(&profiles);
    out.write(
        "histogram_session_starts.csv",
        hourly_csv("sessions", |h| diurnal.session_starts[h].to_string()).as_bytes(),
    )?;
    out.write(
        "histogram_occupancy.csv",
        hourly_csv("occupied_hours", |h| diurnal.occupancy_h[h].to_string()).as_bytes(),
    )?;
    out.write(
        "histogram_dispensed_energy.csv",
        hourly_csv("dispensed_kwh", |h| diurnal.dispensed_kwh[h].to_string()).as_bytes(),
    )?;

    // The sweep itself.
    let params = config.sweep_params();
    let workers = config.run.workers;
    eprintln!(
        "sweep: {} grid feeds x {} pack counts over {} charge points ({} workers)",
        config.sweep.grid_kw.len(),
        config.sweep.pack_counts.len(),
        profiles.len(),
        if workers == 0 {
            "all".to_string()
        } else {
            workers.to_string()
        },
    );
    let cells = run_in_pool(workers, || {
        sweep_detailed(
            &profiles,
            &config.sweep.grid_kw,
            &config.sweep.pack_counts,
            &params,
        )
    })?;

    out.write("sweep.csv", sweep_csv(&cells).as_bytes())?;
    let json_cells: Vec<SweepJsonCell> = cells
        .iter()
        .map(|r| SweepJsonCell {
            cell: &r.cell,
            cycles: &r.cycles,
        })
        .collect();
    out.write_json("sweep.json", &json_cells)?;

    for r in &cells {
        let name = format!(
            "histogram_battery_end_g{}_p{}.csv",
            r.cell.grid_kw, r.cell.pack_count
        );
        let csv = hourly_csv("mean_battery_kwh", |h| {
            r.battery_end_by_hour
                .mean(h)
                .map(|m| m.to_string())
                .unwrap_or_default()
        });
        out.write(&name, csv.as_bytes())?;
    }

    for r in &cells {
        eprintln!(
            "  grid {:>5} kW, {:>2} packs: delivered {:6.2}%  parity {:6.2}%  eff {:5.3} h  cycles mean {:.1}",
            r.cell.grid_kw,
            r.cell.pack_count,
            r.cell.delivered_pct,
            r.cell.parity_pct,
            r.cell.mean_effective_duration_h,
            r.cycles.mean,
        );
    }
    eprintln!("wrote {} files to {}", out.files.len(), out.dir.display());
    let _ = std::io::stderr().flush();

    Ok(RunSummary {
        output_dir: out.dir.clone(),
        report,
        profiles: profiles.len(),
        cells: cells.len(),
        files: out.files.clone(),
    })
}

/// Runs `f` inside a rayon pool of `workers` threads (0 = default). Results
/// do not depend on the worker count; the pool only bounds parallelism.
fn run_in_pool<T: Send>(
    workers: usize,
    f: impl FnOnce() -> Result<T, crate::report::SweepError> + Send,
) -> Result<T, RunError> {
    if workers == 0 {
        return f().map_err(RunError::from);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("worker pool");
    pool.install(f).map_err(RunError::from)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ScenarioConfig;

    fn synth_config(out: &Path) -> ScenarioConfig {
        let text = format!(
            r#"
            [synth]
            cp_count = 8
            sessions_per_cp = 6
            seed = 42
            start_hour_weights = [1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1,1]
            plugin_duration = {{ mu = 2.2, sigma = 0.6 }}
            raw_energy = {{ mu = 2.1, sigma = 0.5 }}
            ev_max_bands = [{{ min_kw = 3.0, max_kw = 7.0, weight = 1.0 }}]

            [sweep]
            grid_kw = [3.0]
            pack_counts = [0, 1]

            [run]
            output_dir = "{}"
            "#,
            out.display()
        );
        ScenarioConfig::from_toml_str(&text, Path::new("inline.toml")).unwrap()
    }

    #[test]
    fn synth_run_writes_expected_files() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let config = synth_config(&out);
        let summary = run(&config, dir.path(), None, None).unwrap();
        assert_eq!(summary.cells, 2);
        for name in [
            "synth_dataset.csv",
            "ingest_report.json",
            "profiles.csv",
            "speed_distribution.csv",
            "speed_distribution.json",
            "energy_by_speed.csv",
            "energy_by_speed.json",
            "sweep.csv",
            "sweep.json",
            "histogram_session_starts.csv",
            "histogram_occupancy.csv",
            "histogram_dispensed_energy.csv",
            "histogram_battery_end_g3_p0.csv",
            "histogram_battery_end_g3_p1.csv",
        ] {
            assert!(out.join(name).is_file(), "missing {name}");
        }
    }

    #[test]
    fn identical_runs_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let out_a = dir.path().join("a");
        let out_b = dir.path().join("b");
        let config = synth_config(Path::new("ignored"));
        let sa = run(&config, dir.path(), Some(&out_a), None).unwrap();
        let sb = run(&config, dir.path(), Some(&out_b), None).unwrap();
        assert_eq!(sa.files.len(), sb.files.len());
        for (fa, fb) in sa.files.iter().zip(&sb.files) {
            let ba = std::fs::read(fa).unwrap();
            let bb = std::fs::read(fb).unwrap();
            assert_eq!(ba, bb, "{} differs", fa.display());
        }
    }

    #[test]
    fn seed_override_changes_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let config = synth_config(Path::new("ignored"));
        let a = run(&config, dir.path(), Some(&dir.path().join("a")), Some(1)).unwrap();
        let b = run(&config, dir.path(), Some(&dir.path().join("b")), Some(2)).unwrap();
        let csv_a = std::fs::read(&a.files[0]).unwrap();
        let csv_b = std::fs::read(&b.files[0]).unwrap();
        assert_ne!(csv_a, csv_b);
    }

    #[test]
    fn invalid_config_fails_with_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = synth_config(dir.path());
        config.sweep.grid_kw.clear();
        let err = run(&config, dir.path(), None, None).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = synth_config(Path::new("ignored"));
        config.run.workers = 1;
        let a = run(&config, dir.path(), Some(&dir.path().join("a")), None).unwrap();
        config.run.workers = 4;
        let b = run(&config, dir.path(), Some(&dir.path().join("b")), None).unwrap();
        let sweep_a = std::fs::read(a.output_dir.join("sweep.csv")).unwrap();
        let sweep_b = std::fs::read(b.output_dir.join("sweep.csv")).unwrap();
        assert_eq!(sweep_a, sweep_b);
    }
}
