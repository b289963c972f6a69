#![no_main]

use libfuzzer_sys::fuzz_target;
use lhfi::covariates::compute_dd;
use lhfi_cli::ingest::parse_geometry;

fuzz_target!(|data: &[u8]| {
    let Ok(sites) = parse_geometry("geometry.csv", data) else { return };
    if let (Some(first), Some(last)) = (sites.first(), sites.last()) {
        if let Ok(dd) = compute_dd(&sites, first.site_id, last.site_id) {
            assert_eq!(dd.len(), sites.len());
        }
    }
});
