#![no_main]

use libfuzzer_sys::fuzz_target;
use mvk_core::report::parse_experiment_spec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_experiment_spec(text) {
        spec.validate().expect("parsed spec stays valid");
    }
});
