#![no_main]

use libfuzzer_sys::fuzz_target;
use porcrs::harness::HarnessConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = text.parse::<HarnessConfig>() {
        let _ = cfg.to_text().parse::<HarnessConfig>();
    }
});
