#![no_main]

use libfuzzer_sys::fuzz_target;
use sho_rake::config::{parse_entries, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_entries(text);
    if let Ok(cfg) = RunConfig::parse(text) {
        // a config that parses must also yield profiles or a typed error
        let _ = cfg.raw_profiles();
        let _ = cfg.jittered_profiles();
    }
});
