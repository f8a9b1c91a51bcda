//! Data-driven simulation of battery-assisted EV charge points.
//!
//! A charge point on a modest grid feed (3-7 kW) is paired with a bank of
//! stationary battery packs that soak up energy between charging sessions
//! and boost the vehicle-side charging rate above what the grid alone could
//! sustain. This crate replays real or synthetic charging-session logs
//! through that model and reports how close the constrained charge point
//! comes to unconstrained "raw" charging: delivered energy, effective
//! charging duration, session parity, and battery utilisation, swept across
//! grid feeds and pack counts.
//!
//! The pieces, in pipeline order:
//!
//! - [`ingest`]: streaming CSV parsing, row validation, overlap removal,
//!   charge-point grouping and speed-band filtering.
//! - [`model`]: the continuous-time battery/grid/EV state machine, exact
//!   piecewise-constant-power phases per session.
//! - [`oracle`]: a deliberately naive fine-timestep reference used to
//!   cross-check the event-driven model.
//! - [`report`]: session-weighted sweep tables, energy-by-speed tables,
//!   cycle statistics, diurnal histograms.
//! - [`synth`]: seeded synthetic datasets in the same CSV schema.
//! - [`config`] / [`runner`]: declarative scenario files and the
//!   orchestration behind the `bacsim` binary.
//!
//! Start with the `quickstart` example; each major capability has a runnable
//! example of its own.

pub mod config;
pub mod ingest;
pub mod model;
pub mod oracle;
pub mod report;
pub mod runner;
pub mod synth;
pub mod time;

pub use config::ScenarioConfig;
pub use ingest::{IngestOptions, IngestReport};
pub use model::{
    max_deliverable_power, simulate_chargepoint, simulate_idle, simulate_session, BankSpec,
    BatteryBank, ChargePointProfile, ChargePointRun, ChargingSession, GridFeed, ModelError,
    SessionOutcome,
};
pub use oracle::oracle_simulate;
pub use report::{
    cycle_stats, effective_duration, energy_by_speed, parity, sweep, sweep_detailed, SweepCell,
    SweepError, SweepParams,
};
pub use synth::SynthSpec;
pub use time::Timestamp;
