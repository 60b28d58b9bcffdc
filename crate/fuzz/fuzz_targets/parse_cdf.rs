#![no_main]

use libfuzzer_sys::fuzz_target;
use mvk_core::theory::CdfSpec;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cdf) = text.parse::<CdfSpec>() {
        for y in [0.0, 0.25, 0.5, 0.75, 1.0] {
            let f = cdf.eval(y).expect("parsed CDF evaluates");
            assert!((0.0..=1.0).contains(&f));
        }
        assert_eq!(cdf.eval(1.0).unwrap(), 1.0);
    }
});
