#![no_main]

use libfuzzer_sys::fuzz_target;
use lhfi::model::MetricGrouping;
use lhfi_cli::ingest::parse_counts;

fuzz_target!(|data: &[u8]| {
    let grouping = MetricGrouping::default();
    if let Ok(rows) = parse_counts("counts.csv", data, &grouping) {
        for row in &rows {
            assert!(row.validate(&grouping).is_ok());
        }
    }
});
