#![no_main]
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(manifest) = lienard::config::Manifest::parse(text) {
            // A parsed manifest must validate or error cleanly, never panic.
            let _ = manifest.config.validate();
        }
    }
});
