//! Seeded synthetic session datasets in the domestic CSV schema.
//!
//! Generated data exists so sweeps, properties, and throughput runs work at
//! desk scale without the real exports: the distributions are qualitative
//! stand-ins (weighted start hours, log-normal durations and energies, a
//! per-charge-point vehicle speed drawn from weighted bands), not fits.
//! Output goes through the exact domestic schema so it flows through
//! [`crate::ingest`] unchanged, and a given seed is byte-reproducible.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::time::Timestamp;

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("infeasible synthetic spec: {0}")]
    Infeasible(String),
    #[error("failed to write dataset: {0}")]
    Io(#[from] std::io::Error),
}

/// Log-normal parameters in ln-space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalSpec {
    pub mu: f64,
    pub sigma: f64,
}

/// A candidate vehicle speed band with a selection weight; the speed is
/// drawn uniformly from a 2% inset of the band so rounding in the CSV can
/// never push a charge point across a band edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvMaxBand {
    pub min_kw: f64,
    pub max_kw: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub cp_count: u32,
    pub sessions_per_cp: u32,
    /// Relative weights for session start hours 0..24.
    pub start_hour_weights: [f64; 24],
    pub plugin_duration: LogNormalSpec,
    pub raw_energy: LogNormalSpec,
    pub ev_max_bands: Vec<EvMaxBand>,
    pub seed: u64,
    /// Duration clamp in hours; guards the log-normal tail.
    #[serde(default = "default_min_plugin_h")]
    pub min_plugin_h: f64,
    #[serde(default = "default_max_plugin_h")]
    pub max_plugin_h: f64,
}

fn default_min_plugin_h() -> f64 {
    0.05
}

fn default_max_plugin_h() -> f64 {
    48.0
}

impl SynthSpec {
    /// Evening-peaked demo spec, shaped like a domestic year in miniature.
    pub fn demo(cp_count: u32, sessions_per_cp: u32, seed: u64) -> Self {
        let mut weights = [1.0; 24];
        weights[13..22].fill(6.0);
        weights[1..6].fill(0.2);
        SynthSpec {
            cp_count,
            sessions_per_cp,
            start_hour_weights: weights,
            // Median ~9 h plugged in, median ~8 kWh demanded.
            plugin_duration: LogNormalSpec {
                mu: 2.2,
                sigma: 0.6,
            },
            raw_energy: LogNormalSpec {
                mu: 2.1,
                sigma: 0.5,
            },
            ev_max_bands: vec![
                EvMaxBand {
                    min_kw: 3.0,
                    max_kw: 7.0,
                    weight: 0.7,
                },
                EvMaxBand {
                    min_kw: 7.0,
                    max_kw: 22.0,
                    weight: 0.3,
                },
            ],
            seed,
            min_plugin_h: 0.05,
            max_plugin_h: 48.0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let total_rows = u64::from(self.cp_count) * u64::from(self.sessions_per_cp);
        if total_rows > 50_000_000 {
            return Err(SynthError::Infeasible(format!(
                "{total_rows} rows requested, cap is 50M"
            )));
        }
        if self
            .start_hour_weights
            .iter()
            .any(|w| !w.is_finite() || *w < 0.0)
        {
            return Err(SynthError::Infeasible(
                "start hour weights must be finite and >= 0".into(),
            ));
        }
        if self.start_hour_weights.iter().sum::<f64>() <= 0.0 {
            return Err(SynthError::Infeasible(
                "at least one start hour weight must be positive".into(),
            ));
        }
        for (name, ln) in [
            ("plugin duration", self.plugin_duration),
            ("raw energy", self.raw_energy),
        ] {
            if !ln.mu.is_finite() || !ln.sigma.is_finite() || ln.sigma < 0.0 {
                return Err(SynthError::Infeasible(format!(
                    "{name} log-normal parameters invalid"
                )));
            }
        }
        if self.ev_max_bands.is_empty() {
            return Err(SynthError::Infeasible(
                "at least one ev_max band required".into(),
            ));
        }
        for band in &self.ev_max_bands {
            if !band.min_kw.is_finite()
                || !band.max_kw.is_finite()
                || band.min_kw <= 0.0
                || band.max_kw <= band.min_kw
                || band.weight < 0.0
                || !band.weight.is_finite()
            {
                return Err(SynthError::Infeasible(format!(
                    "ev_max band [{}, {}) weight {} invalid",
                    band.min_kw, band.max_kw, band.weight
                )));
            }
        }
        if self.ev_max_bands.iter().map(|b| b.weight).sum::<f64>() <= 0.0 {
            return Err(SynthError::Infeasible(
                "ev_max band weights are all zero".into(),
            ));
        }
        if !self.min_plugin_h.is_finite()
            || !self.max_plugin_h.is_finite()
            || self.min_plugin_h <= MIN_SESSION_GAP_S as f64 / 3600.0
            || self.max_plugin_h < self.min_plugin_h
        {
            return Err(SynthError::Infeasible(format!(
                "plugin clamp [{}, {}] invalid",
                self.min_plugin_h, self.max_plugin_h
            )));
        }
        Ok(())
    }
}

/// Timeline origin for generated data.
const START_DATE: (i64, u32, u32) = (2021, 1, 1);
/// Minimum gap between a session's end and the next start, seconds.
const MIN_SESSION_GAP_S: i64 = 60;

fn weighted_choice(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut pick = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        pick -= w;
        if pick < 0.0 {
            return i;
        }
    }
    weights.len() - 1
}

struct CpPlan {
    cp_id: String,
    ev_max_kw: f64,
}

/// Writes a synthetic dataset in the exact domestic schema:
/// `EventID,CPID,StartDate,StartTime,EndDate,EndTime,Energy,PluginDuration`.
///
/// Sessions within a charge point are placed sequentially with gaps, so they
/// are non-overlapping by construction. The first session of each charge
/// point pins the vehicle's max speed exactly (energy = speed x duration);
/// every other session's energy is clamped below that line.
pub fn generate<W: Write>(spec: &SynthSpec, writer: W) -> Result<(), SynthError> {
    spec.validate()?;
    let mut w = std::io::BufWriter::new(writer);
    writeln!(
        w,
        "EventID,CPID,StartDate,StartTime,EndDate,EndTime,Energy,PluginDuration"
    )?;

    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    let plugin_dist = LogNormal::new(spec.plugin_duration.mu, spec.plugin_duration.sigma)
        .map_err(|e| SynthError::Infeasible(format!("plugin duration distribution: {e}")))?;
    let energy_dist = LogNormal::new(spec.raw_energy.mu, spec.raw_energy.sigma)
        .map_err(|e| SynthError::Infeasible(format!("raw energy distribution: {e}")))?;
    let band_weights: Vec<f64> = spec.ev_max_bands.iter().map(|b| b.weight).collect();

    let origin = Timestamp::from_civil(START_DATE.0, START_DATE.1, START_DATE.2, 0, 0, 0);
    let mut event_id: u64 = 0;

    for cp_index in 0..spec.cp_count {
        // Every charge point gets its own stream so layouts stay stable if
        // generation is ever chunked.
        let mut rng = ChaCha8Rng::seed_from_u64(master.gen());
        let band = spec.ev_max_bands[weighted_choice(&mut rng, &band_weights)];
        let span = band.max_kw - band.min_kw;
        let ev_max_kw = band.min_kw + span * (0.02 + 0.96 * rng.gen::<f64>());
        let plan = CpPlan {
            cp_id: format!("SYN{:06}", cp_index + 1),
            ev_max_kw,
        };

        let mut cursor_s = origin.unix_seconds() + i64::from(rng.gen_range(0u32..86_400));
        for session_index in 0..spec.sessions_per_cp {
            // Start at the next instant past the cursor whose time of day
            // matches the drawn hour.
            let hour = weighted_choice(&mut rng, &spec.start_hour_weights) as i64;
            let second = i64::from(rng.gen_range(0u32..3_600));
            let target_tod = hour * 3_600 + second;
            let cursor_tod = cursor_s.rem_euclid(86_400);
            let wait = (target_tod - cursor_tod).rem_euclid(86_400);
            let start_s = cursor_s + wait;

            let plugin_h = plugin_dist
                .sample(&mut rng)
                .clamp(spec.min_plugin_h, spec.max_plugin_h);
            // Whole-second duration so the CSV fields stay consistent.
            let plugin_secs = (plugin_h * 3600.0)
                .round()
                .max(MIN_SESSION_GAP_S as f64 + 1.0) as i64;
            let plugin_h = plugin_secs as f64 / 3600.0;

            let max_energy = plan.ev_max_kw * plugin_h;
            let energy_kwh = if session_index == 0 {
                max_energy
            } else {
                energy_dist.sample(&mut rng).min(max_energy)
            };
            // 3 decimals keeps the written speed within 1e-4 of the target,
            // far inside the 2% band inset.
            let energy_kwh = (energy_kwh * 1000.0).round() / 1000.0;

            event_id += 1;
            let start = Timestamp::from_unix_seconds(start_s);
            let end = Timestamp::from_unix_seconds(start_s + plugin_secs);
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                event_id,
                plan.cp_id,
                start.format_date(),
                start.format_time(),
                end.format_date(),
                end.format_time(),
                energy_kwh,
                plugin_h
            )?;

            cursor_s = start_s + plugin_secs + MIN_SESSION_GAP_S;
        }
    }
    w.flush()?;
    Ok(())
}

/// Convenience: generate straight into a byte buffer.
pub fn generate_to_vec(spec: &SynthSpec) -> Result<Vec<u8>, SynthError> {
    let mut buf = Vec::new();
    generate(spec, &mut buf)?;
    Ok(buf)
}
