#![no_main]

use libfuzzer_sys::fuzz_target;
use wqed::experiment::Config;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = Config::from_json(text) {
        // Anything accepted must survive a serialize/parse round trip.
        let again = Config::from_json(&cfg.to_json()).expect("resolved config re-parses");
        assert_eq!(again.hash(), cfg.hash());
    }
});
