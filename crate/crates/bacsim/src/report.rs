//! Aggregation of simulation outcomes into the headline metrics and tables:
//! delivered energy (kWh and % of raw), effective charging duration, session
//! parity, battery cycle statistics, energy-by-speed tables, and 24-hour
//! diurnal histograms.
//!
//! All table means are session-weighted across every session of every charge
//! point (sums over sessions divided by the total session count), and the
//! delivered percentage is the ratio of sums. A mean-of-per-session-ratios
//! column is emitted alongside it for comparison since the two weightings
//! differ on skewed data.

use serde::Serialize;

use crate::model::{
    simulate_chargepoint, BankSpec, ChargePointProfile, ChargingSession, GridFeed, ModelError,
    SessionOutcome,
};

/// A session is at parity when it received its full raw energy, to within
/// this default slack.
pub const DEFAULT_PARITY_EPSILON_KWH: f64 = 1e-9;

/// Delivered energy divided by a charging speed: the time the session would
/// have taken at that speed.
///
/// Callers pick the denominator. The vehicle's inferred maximum gives the
/// raw-charging baseline; `min(ev_max, grid + bank power)` gives the speed
/// the battery-assisted charge point actually offers, which is what the
/// sweep tables report (a bigger bank shortens the effective duration).
pub fn effective_duration(outcome: &SessionOutcome, speed_kw: f64) -> f64 {
    if outcome.delivered_kwh <= 0.0 {
        0.0
    } else {
        outcome.delivered_kwh / speed_kw
    }
}

/// True when the simulated session delivered the same energy as raw charging.
pub fn parity(outcome: &SessionOutcome, session: &ChargingSession, epsilon_kwh: f64) -> bool {
    outcome.delivered_kwh >= session.raw_energy_kwh - epsilon_kwh
}

/// Per-charge-point aggregate over one simulated replay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChargePointReport {
    pub cp_id: String,
    pub session_count: u64,
    pub mean_delivered_kwh: f64,
    /// `sum(delivered) / sum(raw)`; 1.0 for a charge point with no demand.
    pub delivered_fraction: f64,
    pub mean_effective_duration_h: f64,
    pub parity_count: u64,
    /// Total energy discharged from the bank across the replay.
    pub battery_drawn_kwh: f64,
    /// `battery_drawn / bank capacity`; 0 for a bankless charge point.
    pub battery_cycles: f64,
    /// Diagnostic only: `(drawn + recharged) / 2 / capacity`, counting
    /// intra-window recharge that the discharge-based figure ignores.
    pub throughput_cycles: f64,
}

/// Folds one replay's outcomes into a [`ChargePointReport`].
///
/// `supply_kw` is the charge point's combined grid + bank power; effective
/// durations are measured against `min(ev_max, supply)`.
pub fn chargepoint_report(
    profile: &ChargePointProfile,
    outcomes: &[SessionOutcome],
    idle_recharged_kwh: f64,
    bank_capacity_kwh: f64,
    supply_kw: f64,
    parity_epsilon_kwh: f64,
) -> ChargePointReport {
    assert_eq!(profile.session_count(), outcomes.len());
    let speed_kw = profile.ev_max_kw().min(supply_kw);
    let n = outcomes.len() as f64;
    let mut sum_delivered = 0.0;
    let mut sum_raw = 0.0;
    let mut sum_eff = 0.0;
    let mut parity_count = 0u64;
    let mut drawn = 0.0;
    let mut recharged = idle_recharged_kwh;
    for (out, session) in outcomes.iter().zip(profile.sessions()) {
        sum_delivered += out.delivered_kwh;
        sum_raw += session.raw_energy_kwh;
        sum_eff += effective_duration(out, speed_kw);
        if parity(out, session, parity_epsilon_kwh) {
            parity_count += 1;
        }
        drawn += out.battery_drawn_kwh;
        recharged += out.battery_recharged_kwh;
    }
    let cycles = if bank_capacity_kwh > 0.0 {
        drawn / bank_capacity_kwh
    } else {
        0.0
    };
    let throughput = if bank_capacity_kwh > 0.0 {
        (drawn + recharged) / 2.0 / bank_capacity_kwh
    } else {
        0.0
    };
    let report = ChargePointReport {
        cp_id: profile.cp_id().to_string(),
        session_count: outcomes.len() as u64,
        mean_delivered_kwh: if n > 0.0 { sum_delivered / n } else { 0.0 },
        delivered_fraction: if sum_raw > 0.0 {
            sum_delivered / sum_raw
        } else {
            1.0
        },
        mean_effective_duration_h: if n > 0.0 { sum_eff / n } else { 0.0 },
        parity_count,
        battery_drawn_kwh: drawn,
        battery_cycles: cycles,
        throughput_cycles: throughput,
    };
    debug_assert!((0.0..=1.0).contains(&report.delivered_fraction));
    debug_assert!(report.parity_count <= report.session_count);
    debug_assert!(report.battery_cycles >= 0.0);
    report
}

/// Distribution summary of battery cycles across charge points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
    /// Mean of the throughput-based diagnostic variant.
    pub mean_throughput: f64,
}

pub fn cycle_stats(reports: &[ChargePointReport]) -> CycleStats {
    if reports.is_empty() {
        return CycleStats {
            min: 0.0,
            mean: 0.0,
            max: 0.0,
            mean_throughput: 0.0,
        };
    }
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut sum = 0.0;
    let mut sum_tp = 0.0;
    for r in reports {
        min = min.min(r.battery_cycles);
        max = max.max(r.battery_cycles);
        sum += r.battery_cycles;
        sum_tp += r.throughput_cycles;
    }
    let n = reports.len() as f64;
    CycleStats {
        min,
        mean: sum / n,
        max,
        mean_throughput: sum_tp / n,
    }
}

/// How full the bank starts a replay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialState {
    Full,
    Empty,
    Fraction(f64),
}

impl InitialState {
    pub fn stored_kwh(self, spec: BankSpec) -> f64 {
        match self {
            InitialState::Full => spec.capacity_kwh(),
            InitialState::Empty => 0.0,
            InitialState::Fraction(f) => spec.capacity_kwh() * f,
        }
    }
}

/// Bank unit spec plus run policy shared by every sweep cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepParams {
    pub pack_capacity_kwh: f64,
    pub pack_power_kw: f64,
    pub initial_state: InitialState,
    pub parity_epsilon_kwh: f64,
}

impl Default for SweepParams {
    fn default() -> Self {
        SweepParams {
            pack_capacity_kwh: 13.5,
            pack_power_kw: 5.0,
            initial_state: InitialState::Full,
            parity_epsilon_kwh: DEFAULT_PARITY_EPSILON_KWH,
        }
    }
}

/// One `(grid feed, pack count)` cell of a sweep, session-weighted across
/// all charge points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub pack_count: u32,
    pub grid_kw: f64,
    pub sessions: u64,
    pub mean_delivered_kwh: f64,
    /// Ratio of sums: `100 * sum(delivered) / sum(raw)`.
    pub delivered_pct: f64,
    /// Labelled alternative weighting: mean over sessions of the
    /// per-session delivered/raw ratio (empty sessions count as 1).
    pub delivered_pct_session_mean: f64,
    /// Mean of delivered / min(ev_max, grid + bank power): the duration at
    /// the speed this cell's charge point can offer. Shrinks as packs are
    /// added.
    pub mean_effective_duration_h: f64,
    /// Mean of delivered / ev_max: the raw-charging baseline denominator,
    /// independent of the cell's bank.
    pub mean_effective_duration_ev_h: f64,
    pub parity_pct: f64,
    /// Share of sessions that ran the bank empty while demand was unmet.
    pub depleted_pct: f64,
}

/// Sweep cell plus its per-charge-point reports and battery histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCellResult {
    pub cell: SweepCell,
    pub cycles: CycleStats,
    pub reports: Vec<ChargePointReport>,
    /// Mean bank level at session end, by hour of day of the session end.
    pub battery_end_by_hour: HourlyMeans,
}

/// A simulation failure tagged with the sweep cell it happened in.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("sweep cell (grid {grid_kw} kW, {pack_count} packs): {source}")]
pub struct SweepError {
    pub grid_kw: f64,
    pub pack_count: u32,
    #[source]
    pub source: ModelError,
}

/// Per-charge-point partial aggregate; combined in fixed profile order so
/// results are identical for any worker count.
struct CpPartial {
    sessions: u64,
    sum_delivered: f64,
    sum_raw: f64,
    sum_ratio: f64,
    sum_eff: f64,
    sum_eff_ev: f64,
    parity: u64,
    depleted: u64,
    battery_end: HourlyMeans,
    report: ChargePointReport,
}

fn simulate_cell_cp(
    profile: &ChargePointProfile,
    grid: GridFeed,
    spec: BankSpec,
    params: &SweepParams,
) -> Result<CpPartial, ModelError> {
    let run = simulate_chargepoint(profile, grid, spec, params.initial_state.stored_kwh(spec))?;
    let supply_kw = grid.power_kw() + spec.power_kw();
    let offered_kw = profile.ev_max_kw().min(supply_kw);
    let mut p = CpPartial {
        sessions: run.outcomes.len() as u64,
        sum_delivered: 0.0,
        sum_raw: 0.0,
        sum_ratio: 0.0,
        sum_eff: 0.0,
        sum_eff_ev: 0.0,
        parity: 0,
        depleted: 0,
        battery_end: HourlyMeans::default(),
        report: chargepoint_report(
            profile,
            &run.outcomes,
            run.idle_recharged_kwh,
            spec.capacity_kwh(),
            supply_kw,
            params.parity_epsilon_kwh,
        ),
    };
    for (out, session) in run.outcomes.iter().zip(profile.sessions()) {
        p.sum_delivered += out.delivered_kwh;
        p.sum_raw += session.raw_energy_kwh;
        p.sum_ratio += if session.raw_energy_kwh > 0.0 {
            out.delivered_kwh / session.raw_energy_kwh
        } else {
            1.0
        };
        p.sum_eff += effective_duration(out, offered_kw);
        p.sum_eff_ev += effective_duration(out, profile.ev_max_kw());
        if parity(out, session, params.parity_epsilon_kwh) {
            p.parity += 1;
        }
        if out.depleted {
            p.depleted += 1;
        }
        p.battery_end
            .add(session.end().hour_of_day(), out.battery_at_end_kwh);
    }
    Ok(p)
}

/// Runs every `(grid, packs)` cell over all profiles. Charge points within a
/// cell are simulated in parallel; partials are reduced in profile order so
/// the output is deterministic. Cells come back in `grid_kw_list` x
/// `pack_count_list` row-major order.
pub fn sweep_detailed(
    profiles: &[ChargePointProfile],
    grid_kw_list: &[f64],
    pack_count_list: &[u32],
    params: &SweepParams,
) -> Result<Vec<SweepCellResult>, SweepError> {
    use rayon::prelude::*;

    let mut cells = Vec::with_capacity(grid_kw_list.len() * pack_count_list.len());
    for &grid_kw in grid_kw_list {
        for &packs in pack_count_list {
            let in_cell = |source: ModelError| SweepError {
                grid_kw,
                pack_count: packs,
                source,
            };
            let grid = GridFeed::new(grid_kw).map_err(in_cell)?;
            let spec = BankSpec::new(packs, params.pack_capacity_kwh, params.pack_power_kw)
                .map_err(in_cell)?;
            let partials: Vec<CpPartial> = profiles
                .par_iter()
                .map(|p| simulate_cell_cp(p, grid, spec, params))
                .collect::<Result<_, _>>()
                .map_err(in_cell)?;

            let mut sessions = 0u64;
            let mut sum_delivered = 0.0;
            let mut sum_raw = 0.0;
            let mut sum_ratio = 0.0;
            let mut sum_eff = 0.0;
            let mut sum_eff_ev = 0.0;
            let mut parity_n = 0u64;
            let mut depleted_n = 0u64;
            let mut battery_end = HourlyMeans::default();
            let mut reports = Vec::with_capacity(partials.len());
            for p in partials {
                sessions += p.sessions;
                sum_delivered += p.sum_delivered;
                sum_raw += p.sum_raw;
                sum_ratio += p.sum_ratio;
                sum_eff += p.sum_eff;
                sum_eff_ev += p.sum_eff_ev;
                parity_n += p.parity;
                depleted_n += p.depleted;
                battery_end.merge(&p.battery_end);
                reports.push(p.report);
            }
            let n = sessions as f64;
            let cell = SweepCell {
                pack_count: packs,
                grid_kw,
                sessions,
                mean_delivered_kwh: if n > 0.0 { sum_delivered / n } else { 0.0 },
                delivered_pct: if sum_raw > 0.0 {
                    100.0 * sum_delivered / sum_raw
                } else {
                    100.0
                },
                delivered_pct_session_mean: if n > 0.0 {
                    100.0 * sum_ratio / n
                } else {
                    100.0
                },
                mean_effective_duration_h: if n > 0.0 { sum_eff / n } else { 0.0 },
                mean_effective_duration_ev_h: if n > 0.0 { sum_eff_ev / n } else { 0.0 },
                parity_pct: if n > 0.0 {
                    100.0 * parity_n as f64 / n
                } else {
                    100.0
                },
                depleted_pct: if n > 0.0 {
                    100.0 * depleted_n as f64 / n
                } else {
                    0.0
                },
            };
            let cycles = cycle_stats(&reports);
            cells.push(SweepCellResult {
                cell,
                cycles,
                reports,
                battery_end_by_hour: battery_end,
            });
        }
    }
    Ok(cells)
}

/// [`sweep_detailed`] reduced to the table cells.
pub fn sweep(
    profiles: &[ChargePointProfile],
    grid_kw_list: &[f64],
    pack_count_list: &[u32],
    params: &SweepParams,
) -> Result<Vec<SweepCell>, SweepError> {
    Ok(
        sweep_detailed(profiles, grid_kw_list, pack_count_list, params)?
            .into_iter()
            .map(|c| c.cell)
            .collect(),
    )
}

/// Median and mean of raw session energy, bucketed by the charge point's
/// inferred max speed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyBand {
    pub min_kw: f64,
    /// `None` for the open-ended final band.
    pub max_kw: Option<f64>,
    pub sessions: u64,
    pub median_kwh: f64,
    pub mean_kwh: f64,
}

/// Builds the dispensed-energy-by-speed table. Band `i` covers
/// `[edges[i], edges[i+1])`; the final band is open-ended.
pub fn energy_by_speed(profiles: &[ChargePointProfile], band_edges: &[f64]) -> Vec<EnergyBand> {
    assert!(
        band_edges.windows(2).all(|w| w[0] < w[1]),
        "band edges must be strictly increasing"
    );
    let mut per_band: Vec<Vec<f64>> = vec![Vec::new(); band_edges.len()];
    for profile in profiles {
        let Some(bin) = crate::ingest::band_index(band_edges, profile.ev_max_kw()) else {
            continue;
        };
        for s in profile.sessions() {
            per_band[bin].push(s.raw_energy_kwh);
        }
    }
    per_band
        .into_iter()
        .enumerate()
        .map(|(i, mut energies)| {
            energies.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = energies.len();
            let median = match n {
                0 => 0.0,
                n if n % 2 == 1 => energies[n / 2],
                n => 0.5 * (energies[n / 2 - 1] + energies[n / 2]),
            };
            let mean = if n > 0 {
                energies.iter().sum::<f64>() / n as f64
            } else {
                0.0
            };
            EnergyBand {
                min_kw: band_edges[i],
                max_kw: band_edges.get(i + 1).copied(),
                sessions: n as u64,
                median_kwh: median,
                mean_kwh: mean,
            }
        })
        .collect()
}

/// Mean-per-hour accumulator for the battery-level histogram.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct HourlyMeans {
    pub sum: [f64; 24],
    pub count: [u64; 24],
}

impl HourlyMeans {
    pub fn add(&mut self, hour: usize, value: f64) {
        self.sum[hour] += value;
        self.count[hour] += 1;
    }

    fn merge(&mut self, other: &HourlyMeans) {
        for h in 0..24 {
            self.sum[h] += other.sum[h];
            self.count[h] += other.count[h];
        }
    }

    pub fn mean(&self, hour: usize) -> Option<f64> {
        (self.count[hour] > 0).then(|| self.sum[hour] / self.count[hour] as f64)
    }
}

/// Dataset-level 24-hour activity profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiurnalHistograms {
    /// Sessions starting in each hour of day.
    pub session_starts: [u64; 24],
    /// Plugged-in hours attributed fractionally to the hours each plugin
    /// interval spans; sessions crossing midnight wrap around.
    pub occupancy_h: [f64; 24],
    /// Raw energy attributed to the session's start hour.
    pub dispensed_kwh: [f64; 24],
}

impl Default for DiurnalHistograms {
    fn default() -> Self {
        DiurnalHistograms {
            session_starts: [0; 24],
            occupancy_h: [0.0; 24],
            dispensed_kwh: [0.0; 24],
        }
    }
}

/// Spreads `duration_h` of occupancy starting at time-of-day
/// `start_tod_h` across hourly bins, wrapping at midnight.
fn spread_occupancy(bins: &mut [f64; 24], start_tod_h: f64, duration_h: f64) {
    // Whole 24 h cycles cover every bin once.
    let full_days = (duration_h / 24.0).floor();
    if full_days > 0.0 {
        for b in bins.iter_mut() {
            *b += full_days;
        }
    }
    let mut remaining = duration_h - full_days * 24.0;
    let mut tod = start_tod_h;
    while remaining > 1e-12 {
        let hour = (tod.floor() as usize).min(23);
        let in_hour = ((hour + 1) as f64 - tod).min(remaining);
        bins[hour] += in_hour;
        remaining -= in_hour;
        tod += in_hour;
        if tod >= 24.0 {
            tod -= 24.0;
        }
    }
}

pub fn session_histograms(profiles: &[ChargePointProfile]) -> DiurnalHistograms {
    let mut h = DiurnalHistograms::default();
    for profile in profiles {
        for s in profile.sessions() {
            let start_hour = s.start.hour_of_day();
            h.session_starts[start_hour] += 1;
            h.dispensed_kwh[start_hour] += s.raw_energy_kwh;
            spread_occupancy(
                &mut h.occupancy_h,
                s.start.time_of_day_hours(),
                s.plugin_duration_h,
            );
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::Timestamp;

    fn session(id: &str, start_s: i64, plugin_h: f64, raw: f64) -> ChargingSession {
        ChargingSession::new(id, Timestamp::from_unix_seconds(start_s), plugin_h, raw).unwrap()
    }

    fn outcome(delivered: f64) -> SessionOutcome {
        SessionOutcome {
            event_id: "e".into(),
            delivered_kwh: delivered,
            active_charge_time_h: 0.0,
            battery_drawn_kwh: 0.0,
            battery_recharged_kwh: 0.0,
            grid_to_ev_kwh: delivered,
            battery_at_start_kwh: 0.0,
            battery_at_end_kwh: 0.0,
            depleted: false,
        }
    }

    #[test]
    fn effective_duration_is_delivered_over_speed() {
        assert!((effective_duration(&outcome(10.0), 7.0) - 10.0 / 7.0).abs() < 1e-12);
        assert_eq!(effective_duration(&outcome(0.0), 7.0), 0.0);
    }

    #[test]
    fn parity_compares_against_raw() {
        let s = session("e", 0, 2.0, 10.0);
        assert!(parity(&outcome(10.0), &s, DEFAULT_PARITY_EPSILON_KWH));
        assert!(parity(
            &outcome(10.0 - 1e-12),
            &s,
            DEFAULT_PARITY_EPSILON_KWH
        ));
        assert!(!parity(&outcome(4.0), &s, DEFAULT_PARITY_EPSILON_KWH));
    }

    #[test]
    fn cycles_are_drawn_over_capacity() {
        let profile = ChargePointProfile::new("cp", vec![session("a", 0, 2.0, 10.0)]).unwrap();
        let mut out = outcome(10.0);
        out.battery_drawn_kwh = 27.0;
        let report = chargepoint_report(&profile, &[out], 0.0, 13.5, 8.0, 1e-9);
        assert!((report.battery_cycles - 2.0).abs() < 1e-12);
        // Identity: cycles * capacity == drawn, exactly as stored.
        assert_eq!(report.battery_cycles * 13.5, report.battery_drawn_kwh);
    }

    #[test]
    fn zero_pack_reports_zero_cycles() {
        let profile = ChargePointProfile::new("cp", vec![session("a", 0, 2.0, 10.0)]).unwrap();
        let report = chargepoint_report(&profile, &[outcome(10.0)], 0.0, 0.0, 3.0, 1e-9);
        assert_eq!(report.battery_cycles, 0.0);
    }

    #[test]
    fn cycle_stats_summarize_reports() {
        let profile = ChargePointProfile::new("cp", vec![session("a", 0, 2.0, 10.0)]).unwrap();
        let reports: Vec<ChargePointReport> = [0.0, 27.0, 54.0]
            .iter()
            .map(|&drawn| {
                let mut out = outcome(10.0);
                out.battery_drawn_kwh = drawn;
                chargepoint_report(&profile, &[out], 0.0, 13.5, 8.0, 1e-9)
            })
            .collect();
        let stats = cycle_stats(&reports);
        assert_eq!(stats.min, 0.0);
        assert!((stats.mean - 2.0).abs() < 1e-12);
        assert!((stats.max - 4.0).abs() < 1e-12);
    }

    #[test]
    fn occupancy_splits_intervals_across_hours() {
        let mut bins = [0.0; 24];
        spread_occupancy(&mut bins, 10.5, 2.0);
        assert!((bins[10] - 0.5).abs() < 1e-12);
        assert!((bins[11] - 1.0).abs() < 1e-12);
        assert!((bins[12] - 0.5).abs() < 1e-12);
        assert_eq!(bins.iter().skip(13).sum::<f64>(), 0.0);
    }

    #[test]
    fn occupancy_wraps_midnight_and_long_sessions() {
        let mut bins = [0.0; 24];
        spread_occupancy(&mut bins, 23.0, 2.0);
        assert!((bins[23] - 1.0).abs() < 1e-12);
        assert!((bins[0] - 1.0).abs() < 1e-12);

        let mut bins = [0.0; 24];
        spread_occupancy(&mut bins, 6.0, 50.0); // two full days + 2 h
        assert!((bins.iter().sum::<f64>() - 50.0).abs() < 1e-9);
        assert!((bins[6] - 3.0).abs() < 1e-12);
        assert!((bins[8] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn histogram_mass_equals_total_plugin_time() {
        let profile = ChargePointProfile::new(
            "cp",
            vec![
                session("a", 8 * 3600, 12.44, 8.0),
                session("b", 100 * 3600, 3.25, 5.0),
            ],
        )
        .unwrap();
        let h = session_histograms(&[profile]);
        assert!((h.occupancy_h.iter().sum::<f64>() - (12.44 + 3.25)).abs() < 1e-9);
        assert_eq!(h.session_starts.iter().sum::<u64>(), 2);
        assert!((h.dispensed_kwh.iter().sum::<f64>() - 13.0).abs() < 1e-12);
    }

    #[test]
    fn empty_profiles_give_empty_histograms() {
        let h = session_histograms(&[]);
        assert_eq!(h.session_starts, [0; 24]);
        assert_eq!(h.occupancy_h, [0.0; 24]);
    }

    #[test]
    fn battery_end_mean_lands_in_end_hour() {
        // Session ends 14:05 with 9.5 kWh in the bank: bin 14 mean is 9.5.
        let mut hm = HourlyMeans::default();
        let end = Timestamp::parse("01/01/2017", "14:05:00").unwrap();
        hm.add(end.hour_of_day(), 9.5);
        assert_eq!(hm.mean(14), Some(9.5));
        assert_eq!(hm.mean(13), None);
    }

    #[test]
    fn energy_by_speed_buckets_by_cp_max() {
        let p1 = ChargePointProfile::new(
            "cp1", // speed 5 kW
            vec![session("a", 0, 1.0, 5.0), session("b", 7200, 1.0, 3.0)],
        )
        .unwrap();
        let p2 = ChargePointProfile::new("cp2", vec![session("c", 0, 1.0, 9.0)]).unwrap();
        let bands = energy_by_speed(&[p1, p2], &[0.0, 3.0, 7.0, 11.0, 22.0]);
        assert_eq!(bands.len(), 5);
        // cp1 ev_max = 5 -> band [3,7): two sessions, median 4, mean 4.
        assert_eq!(bands[1].sessions, 2);
        assert!((bands[1].median_kwh - 4.0).abs() < 1e-12);
        assert!((bands[1].mean_kwh - 4.0).abs() < 1e-12);
        // cp2 ev_max = 9 -> band [7,11): one session of 9 kWh.
        assert_eq!(bands[2].sessions, 1);
        assert!((bands[2].median_kwh - 9.0).abs() < 1e-12);
        assert_eq!(bands[4].max_kw, None);
    }

    #[test]
    fn degenerate_sweep_is_pack_independent() {
        let profile = ChargePointProfile::new(
            "cp",
            vec![
                session("a", 0, 3.0, 12.0),
                session("b", 24 * 3600, 2.0, 8.0),
            ],
        )
        .unwrap();
        // ev_max = 4 kW and the grid feed is 7 kW: packs are irrelevant.
        let cells = sweep(&[profile], &[7.0], &[0, 1, 5], &SweepParams::default()).unwrap();
        assert_eq!(cells.len(), 3);
        for c in &cells {
            assert_eq!(c.parity_pct, 100.0);
            assert_eq!(c.delivered_pct, 100.0);
        }
        assert_eq!(
            cells[0].mean_delivered_kwh.to_bits(),
            cells[1].mean_delivered_kwh.to_bits()
        );
        assert_eq!(
            cells[1].mean_effective_duration_h.to_bits(),
            cells[2].mean_effective_duration_h.to_bits()
        );
        assert_eq!(
            cells[1].mean_effective_duration_ev_h.to_bits(),
            cells[2].mean_effective_duration_ev_h.to_bits()
        );
    }

    #[test]
    fn offered_speed_shortens_effective_duration_with_packs() {
        // A 7 kW vehicle on a 3 kW feed: with no packs the offered speed is
        // 3 kW, with one pack it is 7 (vehicle-capped), so the table
        // duration shrinks while the vehicle-baseline column stays put.
        let profile = ChargePointProfile::new(
            "cp",
            vec![session("a", 0, 4.0, 7.0), session("b", 24 * 3600, 1.0, 7.0)],
        )
        .unwrap();
        let cells = sweep(&[profile], &[3.0], &[0, 1], &SweepParams::default()).unwrap();
        assert!(cells[0].mean_effective_duration_h > cells[1].mean_effective_duration_h);
        // Zero packs: every session's offered speed is the 3 kW feed.
        assert!(
            (cells[0].mean_effective_duration_h - cells[0].mean_delivered_kwh / 3.0).abs() < 1e-9
        );
        // The vehicle-baseline denominator stays at 7 kW in both cells.
        assert!(
            (cells[1].mean_effective_duration_ev_h - cells[1].mean_delivered_kwh / 7.0).abs()
                < 1e-9
        );
    }

    #[test]
    fn sweep_means_are_session_weighted() {
        // Two charge points with different session counts: the cell mean
        // must equal sum over all sessions / total count, not the mean of
        // per-CP means.
        let p1 = ChargePointProfile::new(
            "cp1",
            vec![
                session("a", 0, 1.0, 6.0),
                session("b", 7200, 1.0, 6.0),
                session("c", 14400, 1.0, 6.0),
            ],
        )
        .unwrap();
        let p2 = ChargePointProfile::new("cp2", vec![session("d", 0, 2.0, 8.0)]).unwrap();
        let profiles = [p1, p2];
        let cells = sweep(&profiles, &[7.0], &[0], &SweepParams::default()).unwrap();
        let cell = &cells[0];
        assert_eq!(cell.sessions, 4);
        assert!((cell.mean_delivered_kwh - (6.0 * 3.0 + 8.0) / 4.0).abs() < 1e-12);
    }
}
