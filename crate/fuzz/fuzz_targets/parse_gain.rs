#![no_main]

use libfuzzer_sys::fuzz_target;
use stochassign_cli::parse_gain;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(gain) = parse_gain(text) {
            assert!(!gain.is_empty());
            assert!(gain.iter().all(|v| v.is_finite()));
        }
    }
});
