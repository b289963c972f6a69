#![no_main]

use libfuzzer_sys::fuzz_target;
use lhfi_cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(config) = RunConfig::parse(text) {
        if config.validate().is_ok() {
            let _ = config.model_spec();
            let _ = config.sampler_config();
        }
    }
});
