#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    // Parsing and validating arbitrary config text must never panic.
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = lienard::config::parse_config(text);
    }
});
