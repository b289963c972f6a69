#![no_main]

use libfuzzer_sys::fuzz_target;
use lhfi_cli::ingest::parse_covariates;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_covariates("covariates.csv", data) {
        for (_, values) in &rows.columns {
            assert_eq!(values.len(), rows.site_ids.len());
            assert!(values.iter().all(|v| v.is_finite()));
        }
    }
});
