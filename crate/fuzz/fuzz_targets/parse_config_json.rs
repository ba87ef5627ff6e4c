#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Exercise the JSON branch even when the mutator drops the brace.
        let braced = format!("{{{text}");
        let _ = lienard::config::parse_config(text);
        let _ = lienard::config::parse_config(&braced);
    }
});
