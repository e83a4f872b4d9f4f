#![no_main]
use libfuzzer_sys::fuzz_target;
use regimelab::io::read_bifurcation_csv;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = read_bifurcation_csv(text);
    }
});
