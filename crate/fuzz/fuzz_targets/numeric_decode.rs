#![no_main]

use dtdb::encoding::{decode_numeric, encode_numeric};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(values) = decode_numeric(data) {
        let mut out = Vec::new();
        encode_numeric(&values, &mut out);
        assert_eq!(out, data);
    }
});
