#![no_main]
use libfuzzer_sys::fuzz_target;

use elsim::formats::ScenarioConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = ScenarioConfig::from_json(text) {
            assert_eq!(ScenarioConfig::from_json(&cfg.to_json()).as_ref(), Ok(&cfg));
        }
    }
});
