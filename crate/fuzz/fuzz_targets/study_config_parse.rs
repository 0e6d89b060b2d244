#![no_main]

use libfuzzer_sys::fuzz_target;
use ssalt::studyfile::parse_study_config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    // Parsing plus validation must be total: any input either yields a
    // config that passes validation or a structured error, never a panic.
    if let Ok(config) = parse_study_config(text) {
        assert!(config.validate().is_ok());
    }
});
