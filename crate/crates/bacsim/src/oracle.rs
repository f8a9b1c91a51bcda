//! Fine-timestep reference simulator.
//!
//! Walks the same battery/grid/EV dynamics as [`crate::model`] in explicit
//! discrete slots of `timestep_s` seconds: per slot the EV takes the minimum
//! of remaining demand, stored-plus-grid energy, combined power cap, and the
//! vehicle cap, then the bank ledger is updated and clamped to its capacity.
//! Deliberately brute force — every slot does the same naive update — so it
//! stays an independent cross-check on the event-driven implementation, which
//! it converges to as the timestep shrinks.

use crate::model::{
    BankSpec, BatteryBank, ChargePointProfile, GridFeed, ModelError, SessionOutcome,
};

pub const DEFAULT_TIMESTEP_S: f64 = 1.0;

/// Mirror of [`crate::model::ChargePointRun`] produced by slot stepping.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub outcomes: Vec<SessionOutcome>,
    pub initial_stored_kwh: f64,
    pub final_stored_kwh: f64,
    pub idle_recharged_kwh: f64,
}

struct SlotState {
    b: f64,
    cap: f64,
    p_batt: f64,
    p_grid: f64,
}

impl SlotState {
    /// One idle slot of `tau` hours; returns energy gained.
    fn idle_slot(&mut self, tau: f64) -> f64 {
        let gain = (self.p_grid * tau)
            .min(self.p_batt * tau)
            .min(self.cap - self.b);
        self.b = (self.b + gain).min(self.cap);
        gain
    }
}

/// Steps a whole idle window. Skips ahead once the bank is full, which is
/// exact: a full bank makes every remaining slot a no-op.
fn step_idle(state: &mut SlotState, window_h: f64, tau_full: f64) -> f64 {
    let mut gained = 0.0;
    let mut left = window_h;
    while left > 0.0 && state.b < state.cap {
        let tau = tau_full.min(left);
        gained += state.idle_slot(tau);
        left -= tau;
    }
    gained
}

/// Direct slot-by-slot simulation of one charge point.
///
/// `timestep_s` is the slot length in seconds; 1 s is the conventional
/// reference resolution.
pub fn oracle_simulate(
    profile: &ChargePointProfile,
    grid: GridFeed,
    spec: BankSpec,
    initial_stored_kwh: f64,
    timestep_s: f64,
) -> Result<OracleRun, ModelError> {
    assert!(timestep_s > 0.0, "timestep must be positive");
    let bank = BatteryBank::new(spec, initial_stored_kwh).map_err(|e| ModelError::ChargePoint {
        cp_id: profile.cp_id().to_string(),
        source: Box::new(e),
    })?;

    let tau_full = timestep_s / 3600.0;
    let ev_max = profile.ev_max_kw();
    let mut state = SlotState {
        b: bank.stored_kwh(),
        cap: spec.capacity_kwh(),
        p_batt: spec.power_kw(),
        p_grid: grid.power_kw(),
    };

    let mut outcomes = Vec::with_capacity(profile.session_count());
    let mut idle_recharged = 0.0;
    let mut cursor_h = profile.sessions().first().map(|s| s.start.as_hours());

    for session in profile.sessions() {
        if session.plugin_duration_h <= 0.0 || session.raw_energy_kwh < 0.0 {
            return Err(ModelError::InvalidSession {
                event_id: session.event_id.clone(),
                reason: "oracle requires cleaned sessions".to_string(),
            });
        }

        let gap = (session.start.as_hours() - cursor_h.unwrap()).max(0.0);
        idle_recharged += step_idle(&mut state, gap, tau_full);

        let battery_at_start = state.b;
        let mut remaining = session.raw_energy_kwh;
        let mut delivered = 0.0;
        let mut drawn = 0.0;
        let mut recharged = 0.0;
        let mut grid_to_ev = 0.0;
        let mut active_t = 0.0;
        let mut depleted = false;

        let mut left = session.plugin_duration_h;
        while left > 0.0 {
            if remaining <= 1e-12 {
                // Demand met: the rest of the window is idle time.
                if state.b >= state.cap {
                    break;
                }
                let tau = tau_full.min(left);
                recharged += state.idle_slot(tau);
                left -= tau;
                continue;
            }
            let tau = tau_full.min(left);

            if state.b <= 1e-12 && state.p_batt > 0.0 && ev_max > state.p_grid {
                depleted = true;
            }

            let grid_energy = state.p_grid * tau;
            let ev = remaining
                .min(state.b + grid_energy)
                .min((state.p_grid + state.p_batt) * tau)
                .min(ev_max * tau);
            let to_ev_from_grid = ev.min(grid_energy);
            let slot_drawn = ev - to_ev_from_grid;
            let surplus = grid_energy - to_ev_from_grid;
            let slot_recharge = surplus
                .min(state.p_batt * tau)
                .min(state.cap - (state.b - slot_drawn));

            state.b = (state.b - slot_drawn + slot_recharge).clamp(0.0, state.cap);
            delivered += ev;
            remaining -= ev;
            grid_to_ev += to_ev_from_grid;
            drawn += slot_drawn;
            recharged += slot_recharge;
            active_t += tau;
            left -= tau;
        }

        outcomes.push(SessionOutcome {
            event_id: session.event_id.clone(),
            delivered_kwh: delivered.min(session.raw_energy_kwh),
            active_charge_time_h: active_t.min(session.plugin_duration_h),
            battery_drawn_kwh: drawn,
            battery_recharged_kwh: recharged,
            grid_to_ev_kwh: grid_to_ev,
            battery_at_start_kwh: battery_at_start,
            battery_at_end_kwh: state.b,
            depleted,
        });
        cursor_h = Some(session.end_hours());
    }

    Ok(OracleRun {
        outcomes,
        initial_stored_kwh,
        final_stored_kwh: state.b,
        idle_recharged_kwh: idle_recharged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{simulate_chargepoint, ChargingSession};
    use crate::time::Timestamp;

    fn profile(sessions: Vec<(i64, f64, f64)>) -> ChargePointProfile {
        let sessions = sessions
            .into_iter()
            .enumerate()
            .map(|(i, (start_h, plugin, raw))| {
                ChargingSession::new(
                    format!("e{i}"),
                    Timestamp::from_unix_seconds(start_h * 3600),
                    plugin,
                    raw,
                )
                .unwrap()
            })
            .collect();
        ChargePointProfile::new("cp", sessions).unwrap()
    }

    #[test]
    fn grid_only_delivery_is_exact() {
        let p = profile(vec![(0, 5.0, 10.0)]);
        let spec = BankSpec::new(0, 13.5, 5.0).unwrap();
        let run = oracle_simulate(&p, GridFeed::new(3.0).unwrap(), spec, 0.0, 1.0).unwrap();
        assert!((run.outcomes[0].delivered_kwh - 10.0).abs() < 1e-9);
    }

    #[test]
    fn matches_event_driven_on_boosted_session() {
        // Same scenario as the closed-form model test: raw 10, 2 h window,
        // one full pack, 3 kW grid. ev_max inferred as 5 kW from the data.
        let p = profile(vec![(0, 2.0, 10.0)]);
        let spec = BankSpec::new(1, 13.5, 5.0).unwrap();
        let grid = GridFeed::new(3.0).unwrap();
        let oracle = oracle_simulate(&p, grid, spec, 13.5, 1.0).unwrap();
        let event = simulate_chargepoint(&p, grid, spec, 13.5).unwrap();
        let (o, e) = (&oracle.outcomes[0], &event.outcomes[0]);
        assert!((o.delivered_kwh - e.delivered_kwh).abs() < 1e-6);
        assert!((o.battery_at_end_kwh - e.battery_at_end_kwh).abs() < 1e-4);
        assert!((o.battery_at_end_kwh - 9.5).abs() < 1e-4);
    }

    #[test]
    fn timestep_halving_converges() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for _ in 0..50 {
            let packs = rng.gen_range(0..=10u32);
            let spec = BankSpec::new(packs, 13.5, 5.0).unwrap();
            let grid = GridFeed::new(if rng.gen_bool(0.5) { 3.0 } else { 7.0 }).unwrap();
            let d0: f64 = rng.gen_range(0.05..4.0);
            let d1: f64 = rng.gen_range(0.05..4.0);
            let p = profile(vec![
                (0, d0, rng.gen_range(0.0..30.0)),
                (10, d1, rng.gen_range(0.0..30.0)),
            ]);
            let initial = spec.capacity_kwh() * rng.gen::<f64>();
            let coarse = oracle_simulate(&p, grid, spec, initial, 2.0).unwrap();
            let fine = oracle_simulate(&p, grid, spec, initial, 1.0).unwrap();
            for (c, f) in coarse.outcomes.iter().zip(&fine.outcomes) {
                assert!((c.delivered_kwh - f.delivered_kwh).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn partial_final_slot_covers_window_exactly() {
        // 0.001 h window = 3.6 s: three full slots and a 0.6 s remainder.
        let p = profile(vec![(0, 0.001, 1.0)]);
        let spec = BankSpec::new(1, 13.5, 5.0).unwrap();
        let grid = GridFeed::new(3.0).unwrap();
        let run = oracle_simulate(&p, grid, spec, 13.5, 1.0).unwrap();
        let out = &run.outcomes[0];
        // Data speed 1000 kW clamps at grid + pack = 8 kW for the window.
        assert!((out.active_charge_time_h - 0.001).abs() < 1e-12);
        assert!((out.delivered_kwh - 0.008).abs() < 1e-9);
    }
}
