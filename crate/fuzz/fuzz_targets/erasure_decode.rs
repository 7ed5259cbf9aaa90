#![no_main]

use libfuzzer_sys::fuzz_target;
use porcrs::crs::DistributionMatrix;
use porcrs::field::FieldSpec;

// byte 0: k, byte 1: parity count, byte 2..4: erasure mask, rest: message
fuzz_target!(|data: &[u8]| {
    if data.len() < 4 {
        return;
    }
    let k = 1 + data[0] as usize % 8;
    let s = data[1] as usize % 8;
    let mask = u16::from_le_bytes([data[2], data[3]]);
    let field = FieldSpec::binary(8).unwrap();
    let Ok(code) = DistributionMatrix::canonical(k + s, k, field) else { return };
    let message: Vec<u64> = (0..k).map(|i| data.get(4 + i).copied().unwrap_or(0) as u64).collect();
    let word = code.encode(&message).unwrap();
    let received: Vec<Option<u64>> =
        word.iter().enumerate().map(|(i, &v)| (mask >> i & 1 == 0).then_some(v)).collect();
    let erased = received.iter().filter(|v| v.is_none()).count();
    match code.decode_erasures(&received) {
        Ok(decoded) => assert_eq!(decoded, message),
        Err(_) => assert!(erased > s),
    }
});
