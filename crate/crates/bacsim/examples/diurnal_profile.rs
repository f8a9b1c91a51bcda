//! Time-of-day activity histograms: session starts, charger occupancy,
//! dispensed energy, and mean bank level at session end.
//!
//! Run with `cargo run --example diurnal_profile`.

use bacsim::ingest::{ingest, IngestOptions};
use bacsim::report::{session_histograms, sweep_detailed, SweepParams};
use bacsim::synth::{generate_to_vec, SynthSpec};

fn bar(value: f64, max: f64) -> String {
    let width = if max > 0.0 {
        (40.0 * value / max).round() as usize
    } else {
        0
    };
    "#".repeat(width)
}

fn main() {
    let csv = generate_to_vec(&SynthSpec::demo(120, 40, 2024)).expect("generate");
    let (profiles, _) = ingest(csv.as_slice(), &IngestOptions::domestic()).expect("ingest");

    let h = session_histograms(&profiles);
    let max_starts = h.session_starts.iter().copied().max().unwrap_or(0) as f64;

    println!(
        "{:>4} {:>8} {:<42} {:>10}",
        "hour", "starts", "", "occupied h"
    );
    for hour in 0..24 {
        println!(
            "{hour:>4} {:>8} {:<42} {:>10.1}",
            h.session_starts[hour],
            bar(h.session_starts[hour] as f64, max_starts),
            h.occupancy_h[hour],
        );
    }
    let total_occupancy: f64 = h.occupancy_h.iter().sum();
    println!(
        "total occupancy {total_occupancy:.1} h across {} sessions",
        h.session_starts.iter().sum::<u64>()
    );

    // Mean bank level by session end hour, one pack on a 3 kW feed.
    let cells = sweep_detailed(&profiles, &[3.0], &[1], &SweepParams::default()).expect("sweep");
    let levels = &cells[0].battery_end_by_hour;
    println!("\nmean bank level at session end (1 pack, 3 kW feed):");
    for hour in 0..24 {
        match levels.mean(hour) {
            Some(mean) => println!("{hour:>4} {:>8.2} kWh {}", mean, bar(mean, 13.5)),
            None => println!("{hour:>4} {:>8}", "-"),
        }
    }
}
