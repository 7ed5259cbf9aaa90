#![no_main]

use libfuzzer_sys::fuzz_target;
use porcrs::store::{decode_meta, encode_meta};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(meta) = decode_meta(text) {
        let again = decode_meta(&encode_meta(&meta)).expect("re-encoded metadata must decode");
        assert_eq!(again, meta);
    }
});
