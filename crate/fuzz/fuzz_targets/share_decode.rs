#![no_main]

use libfuzzer_sys::fuzz_target;
use porcrs::auth::Fid;
use porcrs::store::{decode_share, encode_share};

fuzz_target!(|data: &[u8]| {
    let fid = Fid(0x0707_0707_0707_0707_0707_0707_0707_0707);
    if let Ok(state) = decode_share(data, fid) {
        let again = decode_share(&encode_share(&state), fid).expect("re-encoded share must decode");
        assert_eq!(again, state);
    }
});
