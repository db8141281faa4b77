//! Writes a short run to disk, reads the files back and converts the
//! binary record file to CSV.
//!
//! cargo run --release --example record_files -- [out_dir]

use std::io::BufWriter;
use std::path::PathBuf;

use handheld_qkd::receiver::{load_records, write_records_csv};
use handheld_qkd::scenario::{simulate, ScenarioConfig, PATTERN_FILE, RECORDS_FILE};
use handheld_qkd::source::PatternBuffer;

fn main() {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("hhqkd-records"));
    let cfg = ScenarioConfig::from_toml_str("duration = 0.01\nseed = 3\n").expect("config");
    let out = simulate(&cfg).expect("simulation");
    out.write_to_dir(&dir).expect("write run");

    let records = load_records(dir.join(RECORDS_FILE)).expect("records");
    let pattern = PatternBuffer::load(dir.join(PATTERN_FILE)).expect("pattern");
    assert_eq!(records, out.records);
    assert_eq!(pattern, out.pattern);
    println!("{} records and {} pattern symbols in {}", records.len(), pattern.len(), dir.display());

    println!("first records:");
    for r in records.iter().take(5) {
        println!("  {:>12} ps  {}", r.timestamp_ps, r.channel.name());
    }

    let csv = dir.join("records.csv");
    let file = std::fs::File::create(&csv).expect("create csv");
    write_records_csv(BufWriter::new(file), &records).expect("write csv");
    println!("wrote {}", csv.display());
}
