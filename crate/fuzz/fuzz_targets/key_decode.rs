#![no_main]

use libfuzzer_sys::fuzz_target;
use porcrs::field::FieldSpec;
use porcrs::store::{decode_key, encode_key};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    for field in [FieldSpec::default_prime(), FieldSpec::binary(8).unwrap(), FieldSpec::binary(16).unwrap()] {
        if let Ok(sk) = decode_key(text, field) {
            let again = decode_key(&encode_key(&sk, field), field).unwrap();
            assert_eq!(again.alpha(), sk.alpha());
            assert_eq!(again.kprf(), sk.kprf());
        }
    }
});
