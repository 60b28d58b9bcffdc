#![no_main]

use libfuzzer_sys::fuzz_target;
use mvk_core::knapsack::Scheme;
use mvk_core::report::parse_scheme;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(scheme) = parse_scheme(text) {
        let again: Scheme = scheme.to_string().parse().expect("displayed scheme parses");
        assert_eq!(again, scheme);
        let _ = scheme.profile(5);
    }
});
