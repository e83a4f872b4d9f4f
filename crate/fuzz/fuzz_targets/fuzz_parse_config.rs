#![no_main]
use libfuzzer_sys::fuzz_target;
use regimelab::io::{emit_config, parse_config};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(config) = parse_config(text) else { return };
    // Canonical text must parse back to the same configuration.
    let canonical = emit_config(&config);
    let again = parse_config(&canonical).expect("canonical config parses");
    assert_eq!(emit_config(&again), canonical);
});
