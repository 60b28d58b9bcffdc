#![no_main]

use libfuzzer_sys::fuzz_target;
use mvk_core::report::{parse_pool, pool_to_json};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(pool) = parse_pool(text) {
        let again = parse_pool(&pool_to_json(&pool)).expect("emitted pool parses");
        assert_eq!(again, pool);
    }
});
