//! Full grid-feed x pack-count performance sweep on synthetic data.
//!
//! Generates a seeded dataset, runs it through ingest, and prints the
//! delivered-energy / effective-duration / parity table for 3 kW and 7 kW
//! feeds with 0..=4 packs. Run with `cargo run --example synth_sweep`.

use bacsim::ingest::{ingest, IngestOptions};
use bacsim::report::{sweep_detailed, SweepParams};
use bacsim::synth::{generate_to_vec, SynthSpec};

fn main() {
    let spec = SynthSpec::demo(150, 40, 4242);
    let csv = generate_to_vec(&spec).expect("generate");
    let (profiles, report) = ingest(csv.as_slice(), &IngestOptions::domestic()).expect("ingest");
    println!(
        "{} charge points, {} sessions (seed {})",
        report.cps_retained, report.sessions_in_band, spec.seed
    );

    let packs: Vec<u32> = (0..=4).collect();
    let cells =
        sweep_detailed(&profiles, &[3.0, 7.0], &packs, &SweepParams::default()).expect("sweep");

    println!(
        "\n{:>7} {:>6} {:>14} {:>12} {:>10} {:>9} {:>12}",
        "grid kW", "packs", "delivered kWh", "delivered %", "effect. h", "parity %", "cycles mean"
    );
    for r in &cells {
        let c = &r.cell;
        println!(
            "{:>7} {:>6} {:>14.2} {:>12.2} {:>10.3} {:>9.2} {:>12.1}",
            c.grid_kw,
            c.pack_count,
            c.mean_delivered_kwh,
            c.delivered_pct,
            c.mean_effective_duration_h,
            c.parity_pct,
            r.cycles.mean,
        );
    }
}
