//! Battery/grid/EV charging state machine for a single charge point.
//!
//! A charge point draws a constant grid feed and owns a bank of identical
//! battery packs wired in parallel. While a vehicle is plugged in and still
//! has unmet demand, it charges at
//!
//! ```text
//! rate = min(ev_max, grid + bank_power)     while the bank holds energy
//! rate = min(ev_max, grid)                  once the bank is empty
//! ```
//!
//! with the bank discharging at `rate - grid` whenever the EV draws above the
//! grid feed, and recharging from grid surplus (capped at the bank's power
//! rating) whenever it draws below it or sits idle.
//!
//! Sessions are simulated as exact piecewise-constant-power phases: within a
//! phase every rate is constant, and a phase ends when the bank hits empty or
//! full, the session's demand is met, or the plugin window closes. This gives
//! closed-form results for an entire session in a handful of arithmetic
//! steps, which is what makes multi-million-session replays cheap. The
//! fine-timestep reference in [`crate::oracle`] implements the same dynamics
//! slot by slot and is used by the test suite to cross-check this module.

use crate::time::Timestamp;

/// Demand below this is considered met; battery levels closer than this to
/// empty/full are snapped to the boundary. Keeps phase iteration from
/// producing zero-length phases out of float dust. Well below every
/// externally asserted tolerance.
const SNAP_KWH: f64 = 1e-12;

/// Hard cap on phases per session; the state machine provably needs at most
/// a handful (empty/full can each fire once, demand/window are terminal).
const MAX_PHASES: u32 = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("invalid battery bank: {0}")]
    InvalidBank(String),
    #[error("invalid grid feed: {0}")]
    InvalidGrid(String),
    #[error("session {event_id}: {reason}")]
    InvalidSession { event_id: String, reason: String },
    #[error("charge point {cp_id}: session {event_id} overlaps or precedes its predecessor")]
    SessionOverlap { cp_id: String, event_id: String },
    #[error("charge point {cp_id}: {source}")]
    ChargePoint {
        cp_id: String,
        #[source]
        source: Box<ModelError>,
    },
}

/// Constant-power electrical supply to the charge point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridFeed {
    power_kw: f64,
}

impl GridFeed {
    pub fn new(power_kw: f64) -> Result<Self, ModelError> {
        if !power_kw.is_finite() || power_kw <= 0.0 {
            return Err(ModelError::InvalidGrid(format!(
                "power must be positive, got {power_kw}"
            )));
        }
        Ok(GridFeed { power_kw })
    }

    pub fn power_kw(self) -> f64 {
        self.power_kw
    }
}

/// Unit specification of the battery packs installed at a charge point.
/// `pack_count` may be zero (plain grid-only charger).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BankSpec {
    pub pack_count: u32,
    pub pack_capacity_kwh: f64,
    pub pack_power_kw: f64,
}

impl BankSpec {
    pub fn new(
        pack_count: u32,
        pack_capacity_kwh: f64,
        pack_power_kw: f64,
    ) -> Result<Self, ModelError> {
        if !pack_capacity_kwh.is_finite() || pack_capacity_kwh <= 0.0 {
            return Err(ModelError::InvalidBank(format!(
                "pack capacity must be positive, got {pack_capacity_kwh}"
            )));
        }
        if !pack_power_kw.is_finite() || pack_power_kw <= 0.0 {
            return Err(ModelError::InvalidBank(format!(
                "pack power must be positive, got {pack_power_kw}"
            )));
        }
        Ok(BankSpec {
            pack_count,
            pack_capacity_kwh,
            pack_power_kw,
        })
    }

    /// Total usable capacity; packs in parallel add up.
    pub fn capacity_kwh(self) -> f64 {
        f64::from(self.pack_count) * self.pack_capacity_kwh
    }

    /// Total sustained output (and intake) power; packs in parallel add up.
    pub fn power_kw(self) -> f64 {
        f64::from(self.pack_count) * self.pack_power_kw
    }
}

/// A battery bank plus its current stored energy.
///
/// Invariant: `0 <= stored_kwh <= spec.capacity_kwh()` after every operation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryBank {
    spec: BankSpec,
    stored_kwh: f64,
}

impl BatteryBank {
    pub fn new(spec: BankSpec, stored_kwh: f64) -> Result<Self, ModelError> {
        if !stored_kwh.is_finite() || stored_kwh < 0.0 || stored_kwh > spec.capacity_kwh() {
            return Err(ModelError::InvalidBank(format!(
                "stored energy {stored_kwh} outside [0, {}]",
                spec.capacity_kwh()
            )));
        }
        Ok(BatteryBank { spec, stored_kwh })
    }

    pub fn full(spec: BankSpec) -> Self {
        BatteryBank {
            spec,
            stored_kwh: spec.capacity_kwh(),
        }
    }

    pub fn empty(spec: BankSpec) -> Self {
        BatteryBank {
            spec,
            stored_kwh: 0.0,
        }
    }

    pub fn spec(self) -> BankSpec {
        self.spec
    }

    pub fn stored_kwh(self) -> f64 {
        self.stored_kwh
    }

    pub fn capacity_kwh(self) -> f64 {
        self.spec.capacity_kwh()
    }

    pub fn power_kw(self) -> f64 {
        self.spec.power_kw()
    }
}

/// One plug-in event from the dataset: when the vehicle arrived, how long it
/// stayed connected, and how much energy the unconstrained charger dispensed
/// (treated as the vehicle's demand).
#[derive(Debug, Clone, PartialEq)]
pub struct ChargingSession {
    pub event_id: String,
    pub start: Timestamp,
    pub plugin_duration_h: f64,
    pub raw_energy_kwh: f64,
}

impl ChargingSession {
    pub fn new(
        event_id: impl Into<String>,
        start: Timestamp,
        plugin_duration_h: f64,
        raw_energy_kwh: f64,
    ) -> Result<Self, ModelError> {
        let event_id = event_id.into();
        if !plugin_duration_h.is_finite() || plugin_duration_h <= 0.0 {
            return Err(ModelError::InvalidSession {
                event_id,
                reason: format!("plugin duration must be positive, got {plugin_duration_h}"),
            });
        }
        if !raw_energy_kwh.is_finite() || raw_energy_kwh < 0.0 {
            return Err(ModelError::InvalidSession {
                event_id,
                reason: format!("raw energy must be non-negative, got {raw_energy_kwh}"),
            });
        }
        Ok(ChargingSession {
            event_id,
            start,
            plugin_duration_h,
            raw_energy_kwh,
        })
    }

    /// Mean charging speed over the plugin window, kW.
    pub fn speed_kw(&self) -> f64 {
        self.raw_energy_kwh / self.plugin_duration_h
    }

    pub fn end_hours(&self) -> f64 {
        self.start.as_hours() + self.plugin_duration_h
    }

    /// Timestamp of plugin end, rounded down to whole seconds.
    pub fn end(&self) -> Timestamp {
        Timestamp::from_unix_seconds(
            self.start.unix_seconds() + (self.plugin_duration_h * 3600.0) as i64,
        )
    }
}

/// A charge point's full-year session history plus the vehicle-side maximum
/// charging power inferred as the highest observed session speed.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargePointProfile {
    cp_id: String,
    sessions: Vec<ChargingSession>,
    ev_max_kw: f64,
}

impl ChargePointProfile {
    /// Builds a profile, enforcing that sessions are strictly ordered by
    /// start and non-overlapping (`start + duration <= next start`).
    pub fn new(
        cp_id: impl Into<String>,
        sessions: Vec<ChargingSession>,
    ) -> Result<Self, ModelError> {
        let cp_id = cp_id.into();
        let mut ev_max_kw: f64 = 0.0;
        for pair in sessions.windows(2) {
            let end = pair[0].end_hours();
            if pair[1].start.as_hours() < end || pair[1].start <= pair[0].start {
                return Err(ModelError::SessionOverlap {
                    cp_id,
                    event_id: pair[1].event_id.clone(),
                });
            }
        }
        for s in &sessions {
            ev_max_kw = ev_max_kw.max(s.speed_kw());
        }
        Ok(ChargePointProfile {
            cp_id,
            sessions,
            ev_max_kw,
        })
    }

    pub fn cp_id(&self) -> &str {
        &self.cp_id
    }

    pub fn sessions(&self) -> &[ChargingSession] {
        &self.sessions
    }

    pub fn ev_max_kw(&self) -> f64 {
        self.ev_max_kw
    }

    pub fn session_count(&self) -> usize {
        self.sessions.len()
    }
}

/// Per-session simulation result. Energy flows are accumulated independently
/// while integrating, so `delivered = grid_to_ev + battery_drawn` and the
/// battery ledger are genuine cross-checks rather than definitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub event_id: String,
    pub delivered_kwh: f64,
    /// Time from plugin start until demand was met, or the full plugin
    /// duration if it never was.
    pub active_charge_time_h: f64,
    pub battery_drawn_kwh: f64,
    /// Energy returned into the bank within the plugin window (grid surplus
    /// while charging slowly, plus idle recharge after demand was met).
    pub battery_recharged_kwh: f64,
    pub grid_to_ev_kwh: f64,
    pub battery_at_start_kwh: f64,
    pub battery_at_end_kwh: f64,
    /// The bank stood empty at some point while demand was still unmet and
    /// the vehicle could have drawn more than the grid feed.
    pub depleted: bool,
}

/// Maximum power the charge point can push into the vehicle right now.
///
/// The bank contributes its full rated power while it holds any energy and
/// nothing once empty; the vehicle clamps the result at `ev_max_kw`.
pub fn max_deliverable_power(bank: &BatteryBank, grid: GridFeed, ev_max_kw: f64) -> f64 {
    let boost = if bank.stored_kwh > 0.0 {
        bank.power_kw()
    } else {
        0.0
    };
    ev_max_kw.min(grid.power_kw + boost)
}

/// Lets the bank soak up grid power for `duration_h` hours with no vehicle
/// present. Recharge rate is `min(grid, bank power)`, clamped at capacity.
pub fn simulate_idle(bank: BatteryBank, grid: GridFeed, duration_h: f64) -> BatteryBank {
    debug_assert!(duration_h >= 0.0);
    let rate = grid.power_kw.min(bank.power_kw());
    let stored = (bank.stored_kwh + rate * duration_h).min(bank.capacity_kwh());
    BatteryBank {
        spec: bank.spec,
        stored_kwh: stored,
    }
}

/// Simulates one plugin window, returning the session outcome and the bank
/// state at plugin end.
///
/// The window is integrated as piecewise-constant-power phases; phase
/// boundaries are the bank hitting empty or full, cumulative delivery
/// reaching the session's raw energy, and the window closing. Once demand is
/// met the remaining window behaves as idle time.
pub fn simulate_session(
    bank: BatteryBank,
    grid: GridFeed,
    session: &ChargingSession,
    ev_max_kw: f64,
) -> Result<(SessionOutcome, BatteryBank), ModelError> {
    if !session.plugin_duration_h.is_finite() || session.plugin_duration_h <= 0.0 {
        return Err(ModelError::InvalidSession {
            event_id: session.event_id.clone(),
            reason: format!(
                "plugin duration must be positive, got {}",
                session.plugin_duration_h
            ),
        });
    }
    if !session.raw_energy_kwh.is_finite() || session.raw_energy_kwh < 0.0 {
        return Err(ModelError::InvalidSession {
            event_id: session.event_id.clone(),
            reason: format!(
                "raw energy must be non-negative, got {}",
                session.raw_energy_kwh
            ),
        });
    }

    let cap = bank.capacity_kwh();
    let p_batt = bank.power_kw();
    let p_grid = grid.power_kw;
    let battery_at_start = bank.stored_kwh;

    let mut b = bank.stored_kwh;
    let mut remaining = session.raw_energy_kwh;
    let mut t_left = session.plugin_duration_h;

    let mut delivered = 0.0;
    let mut active_t = 0.0;
    let mut drawn = 0.0;
    let mut recharged = 0.0;
    let mut grid_to_ev = 0.0;
    let mut depleted = false;

    let mut phases = 0u32;
    while remaining > SNAP_KWH && t_left > 0.0 {
        phases += 1;
        debug_assert!(phases <= MAX_PHASES, "phase loop failed to make progress");
        if phases > MAX_PHASES {
            break;
        }

        let bank_live = b > 0.0;
        if !bank_live && p_batt > 0.0 && ev_max_kw > p_grid {
            // Demand outruns the grid feed and the bank has nothing left.
            depleted = true;
        }
        let rate = ev_max_kw.min(p_grid + if bank_live { p_batt } else { 0.0 });
        if rate <= 0.0 {
            // ev_max of zero with positive demand: no progress is possible.
            active_t += t_left;
            t_left = 0.0;
            break;
        }

        let discharge = (rate - p_grid).max(0.0);
        let recharge = if discharge > 0.0 || b >= cap {
            0.0
        } else {
            (p_grid - rate).min(p_batt)
        };

        // Phase length: nearest of demand met, window end, bank empty, bank full.
        let mut dt = t_left.min(remaining / rate);
        if discharge > 0.0 {
            dt = dt.min(b / discharge);
        }
        if recharge > 0.0 {
            dt = dt.min((cap - b) / recharge);
        }
        debug_assert!(dt > 0.0);

        let energy = rate * dt;
        delivered += energy;
        remaining -= energy;
        grid_to_ev += p_grid.min(rate) * dt;
        drawn += discharge * dt;
        recharged += recharge * dt;
        b = (b - discharge * dt + recharge * dt).clamp(0.0, cap);
        active_t += dt;
        t_left -= dt;

        // Snap boundary values so the next phase sees clean state.
        if discharge > 0.0 && b < SNAP_KWH {
            b = 0.0;
        }
        if recharge > 0.0 && cap - b < SNAP_KWH {
            b = cap;
        }
        if remaining < SNAP_KWH {
            remaining = 0.0;
        }
        t_left = t_left.max(0.0);
    }

    // Demand met (or zero to begin with): the rest of the window is idle.
    if t_left > 0.0 {
        let rate = p_grid.min(p_batt);
        let gain = (rate * t_left).min(cap - b);
        recharged += gain;
        b = (b + gain).min(cap);
    }

    let outcome = SessionOutcome {
        event_id: session.event_id.clone(),
        delivered_kwh: delivered.min(session.raw_energy_kwh),
        active_charge_time_h: active_t.min(session.plugin_duration_h),
        battery_drawn_kwh: drawn,
        battery_recharged_kwh: recharged,
        grid_to_ev_kwh: grid_to_ev,
        battery_at_start_kwh: battery_at_start,
        battery_at_end_kwh: b,
        depleted,
    };
    Ok((
        outcome,
        BatteryBank {
            spec: bank.spec,
            stored_kwh: b,
        },
    ))
}

/// Full replay of one charge point: idle recharge across inter-session gaps,
/// one [`simulate_session`] per session, battery state threaded throughout.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargePointRun {
    pub outcomes: Vec<SessionOutcome>,
    pub initial_stored_kwh: f64,
    pub final_stored_kwh: f64,
    /// Recharge accumulated outside plugin windows.
    pub idle_recharged_kwh: f64,
}

impl ChargePointRun {
    /// Total energy discharged from the bank over the whole replay.
    pub fn battery_drawn_kwh(&self) -> f64 {
        self.outcomes.iter().map(|o| o.battery_drawn_kwh).sum()
    }
}

/// The clock starts at the first session's start; the bank begins at
/// `initial_stored_kwh`.
pub fn simulate_chargepoint(
    profile: &ChargePointProfile,
    grid: GridFeed,
    spec: BankSpec,
    initial_stored_kwh: f64,
) -> Result<ChargePointRun, ModelError> {
    let wrap = |e: ModelError| ModelError::ChargePoint {
        cp_id: profile.cp_id.clone(),
        source: Box::new(e),
    };
    let mut bank = BatteryBank::new(spec, initial_stored_kwh).map_err(wrap)?;
    let mut outcomes = Vec::with_capacity(profile.sessions.len());
    let mut idle_recharged = 0.0;
    let mut cursor_h = profile.sessions.first().map(|s| s.start.as_hours());

    for session in &profile.sessions {
        let gap = (session.start.as_hours() - cursor_h.unwrap()).max(0.0);
        if gap > 0.0 {
            let before = bank.stored_kwh;
            bank = simulate_idle(bank, grid, gap);
            idle_recharged += bank.stored_kwh - before;
        }
        let (outcome, next_bank) = simulate_session(bank, grid, session, profile.ev_max_kw)
            .map_err(|e| ModelError::ChargePoint {
                cp_id: profile.cp_id.clone(),
                source: Box::new(e),
            })?;
        bank = next_bank;
        outcomes.push(outcome);
        cursor_h = Some(session.end_hours());
    }

    Ok(ChargePointRun {
        outcomes,
        initial_stored_kwh,
        final_stored_kwh: bank.stored_kwh,
        idle_recharged_kwh: idle_recharged,
    })
}
