//! CSV ingest pipeline: parse, clean, filter, and summarize a dataset.
//!
//! Pass a dataset path (`cargo run --example ingest_pipeline -- data.csv`)
//! or run without arguments to process a generated demo file. Prints the
//! ingest accounting and the charge-point speed distribution.

use bacsim::ingest::{ingest, IngestOptions, SpeedStatistic};
use bacsim::synth::{generate_to_vec, SynthSpec};

fn main() {
    let options = IngestOptions::domestic();
    let (profiles, report) = match std::env::args().nth(1) {
        Some(path) => {
            println!("reading {path}");
            let file = std::fs::File::open(&path).expect("dataset readable");
            ingest(std::io::BufReader::new(file), &options).expect("ingest")
        }
        None => {
            println!("no dataset argument; using a generated demo dataset");
            let csv = generate_to_vec(&SynthSpec::demo(60, 25, 7)).expect("generate");
            ingest(csv.as_slice(), &options).expect("ingest")
        }
    };

    println!("\nrows read              {}", report.rows_read);
    println!("  unparseable          {}", report.rejected_unparseable);
    println!(
        "  non-positive duration {}",
        report.rejected_nonpositive_duration
    );
    println!("  negative energy      {}", report.rejected_negative_energy);
    println!("  multi-connector      {}", report.rejected_multi_connector);
    println!("  overlapping removed  {}", report.overlapping_removed);
    println!("sessions retained      {}", report.sessions_retained);
    println!("charge points seen     {}", report.cps_seen);
    println!("  outside speed band   {}", report.cps_filtered_by_speed);
    println!("  retained             {}", report.cps_retained);
    assert!(report.balanced(), "accounting identity must hold");

    // Speed distribution over the retained charge points.
    let groups: Vec<_> = profiles
        .iter()
        .map(|p| bacsim::ingest::CpGroup {
            cp_id: p.cp_id().to_string(),
            sessions: p
                .sessions()
                .iter()
                .map(|s| bacsim::ingest::RawSessionRecord {
                    event_id: s.event_id.clone(),
                    cp_id: p.cp_id().to_string(),
                    start: s.start,
                    energy_kwh: s.raw_energy_kwh,
                    plugin_duration_h: s.plugin_duration_h,
                })
                .collect(),
        })
        .collect();
    let edges = [0.0, 1.0, 2.3, 3.0, 7.0, 22.0, 100.0];
    let max_counts = bacsim::ingest::speed_distribution(&groups, SpeedStatistic::Max, &edges);
    let median_counts = bacsim::ingest::speed_distribution(&groups, SpeedStatistic::Median, &edges);

    println!(
        "\n{:>16} {:>10} {:>12}",
        "speed band kW", "max rate", "median rate"
    );
    for i in 0..edges.len() {
        let label = match edges.get(i + 1) {
            Some(hi) => format!("{} <= E < {}", edges[i], hi),
            None => format!("{} <= E", edges[i]),
        };
        println!("{label:>16} {:>10} {:>12}", max_counts[i], median_counts[i]);
    }
}
