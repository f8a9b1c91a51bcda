//! Clean a dataset once, cache the profiles, and re-simulate from the cache.
//!
//! The cache is a small line-delimited file with shortest-round-trip floats,
//! so a reload reproduces the cleaned dataset bit for bit.
//! Run with `cargo run --example profile_cache`.

use bacsim::ingest::{ingest, load_profiles, save_profiles, IngestOptions};
use bacsim::report::{sweep, SweepParams};
use bacsim::synth::{generate_to_vec, SynthSpec};

fn main() {
    let csv = generate_to_vec(&SynthSpec::demo(40, 30, 55)).expect("generate");
    let (profiles, report) = ingest(csv.as_slice(), &IngestOptions::domestic()).expect("ingest");
    println!(
        "cleaned {} sessions from {} rows",
        report.sessions_in_band, report.rows_read
    );

    let mut cache = Vec::new();
    save_profiles(&mut cache, &profiles).expect("save");
    println!("cache size {} bytes", cache.len());

    let reloaded = load_profiles(cache.as_slice()).expect("load");
    assert_eq!(profiles, reloaded, "cache round-trip must be exact");

    let fresh = sweep(&profiles, &[3.0], &[1], &SweepParams::default()).expect("sweep");
    let cached = sweep(&reloaded, &[3.0], &[1], &SweepParams::default()).expect("sweep");
    assert_eq!(fresh, cached);
    println!(
        "re-simulated from cache: delivered {:.2}%, parity {:.2}% (identical to fresh run)",
        cached[0].delivered_pct, cached[0].parity_pct
    );
}
