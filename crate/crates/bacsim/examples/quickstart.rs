//! Simulate one battery-assisted charge point, session by session.
//!
//! A single 13.5 kWh / 5 kW pack on a 3 kW grid feed serves a 7 kW
//! vehicle. Run with `cargo run --example quickstart`.

use bacsim::{
    simulate_chargepoint, BankSpec, ChargePointProfile, ChargingSession, GridFeed, Timestamp,
};

fn main() {
    let day = |d: i64, h: u32| Timestamp::from_civil(2021, 3, d as u32, h, 30, 0);

    // A week of charging: overnight stays, one quick one-hour top-up (which
    // pins the vehicle's 7 kW capability), and one long-range day that
    // drains the pack dry.
    let sessions = vec![
        ChargingSession::new("mon", day(1, 18), 13.0, 9.5).unwrap(),
        ChargingSession::new("tue", day(2, 19), 1.0, 7.0).unwrap(),
        ChargingSession::new("wed", day(3, 17), 14.0, 21.0).unwrap(),
        ChargingSession::new("thu", day(4, 21), 9.0, 26.0).unwrap(),
    ];
    // The vehicle's own limit is inferred from its fastest observed session.
    let profile = ChargePointProfile::new("home-charger", sessions).unwrap();
    println!("inferred vehicle max speed: {:.2} kW", profile.ev_max_kw());

    let grid = GridFeed::new(3.0).unwrap();
    let bank = BankSpec::new(1, 13.5, 5.0).unwrap();
    let run = simulate_chargepoint(&profile, grid, bank, bank.capacity_kwh()).unwrap();

    println!(
        "\n{:<5} {:>10} {:>10} {:>10} {:>12} {:>10}",
        "id", "raw kWh", "got kWh", "active h", "bank kWh", "depleted"
    );
    for (outcome, session) in run.outcomes.iter().zip(profile.sessions()) {
        println!(
            "{:<5} {:>10.2} {:>10.2} {:>10.2} {:>6.1}->{:>4.1} {:>10}",
            outcome.event_id,
            session.raw_energy_kwh,
            outcome.delivered_kwh,
            outcome.active_charge_time_h,
            outcome.battery_at_start_kwh,
            outcome.battery_at_end_kwh,
            outcome.depleted,
        );
    }
    println!(
        "\nbank: started {:.1} kWh, ended {:.1} kWh, {:.1} kWh discharged over the week",
        run.initial_stored_kwh,
        run.final_stored_kwh,
        run.battery_drawn_kwh()
    );
}
