#![no_main]

use dtdb::encoding::{decode_sparse, encode_sparse};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(atoms) = decode_sparse(data) {
        // Accepted input is canonical, so it re-encodes byte for byte.
        assert_eq!(encode_sparse(&atoms).unwrap().bytes, data);
    }
});
