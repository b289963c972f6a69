#![no_main]

use libfuzzer_sys::fuzz_target;
use lhfi::synth::{generate, SynthDesign};

// Keeps generation cheap enough for the fuzzer's per-input time budget.
const MAX_ROWS: usize = 2_000;

fuzz_target!(|data: &[u8]| {
    let Ok(design) = serde_json::from_slice::<SynthDesign>(data) else { return };
    if design.validate().is_err() || design.n_sites.saturating_mul(design.replicates) > MAX_ROWS {
        return;
    }
    if let Ok(synth) = generate(&design) {
        assert_eq!(synth.observations.len(), design.n_sites * design.replicates);
    }
});
