#![no_main]

use libfuzzer_sys::fuzz_target;
use sho_rake::config::{parse_f64_list, parse_pair_list};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(values) = parse_f64_list(text) {
        assert!(!values.is_empty() && values.iter().all(|v| v.is_finite()));
    }
    if let Ok(pairs) = parse_pair_list(text) {
        assert!(pairs.iter().all(|(x, y)| x.is_finite() && y.is_finite()));
    }
});
