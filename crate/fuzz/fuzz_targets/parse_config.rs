#![no_main]

use libfuzzer_sys::fuzz_target;
use stochassign_cli::parse_config;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_config(text) {
            // accepted configs must survive a serialize/parse round trip
            let again = parse_config(&cfg.to_json()).expect("re-parse");
            assert_eq!(again, cfg);
        }
    }
});
