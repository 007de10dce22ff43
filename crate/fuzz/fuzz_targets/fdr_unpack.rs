#![no_main]

use dtdb::encoding::FdrLayout;
use libfuzzer_sys::fuzz_target;

// Byte 0 picks the word size, then a count and that many domain sizes;
// the rest is read as little-endian words.
fuzz_target!(|data: &[u8]| {
    let Some((&w, rest)) = data.split_first() else { return };
    let word_bits = if w & 1 == 0 { 32 } else { 64 };
    let Some((&n, rest)) = rest.split_first() else { return };
    let n = (n as usize % 16).min(rest.len());
    let domains: Vec<u64> = rest[..n].iter().map(|&d| d as u64 + 1).collect();
    let Ok(layout) = FdrLayout::sequential(&domains, word_bits) else { return };
    let words: Vec<u64> = rest[n..]
        .chunks(8)
        .map(|c| {
            let mut b = [0u8; 8];
            b[..c.len()].copy_from_slice(c);
            u64::from_le_bytes(b)
        })
        .collect();
    if let Ok(values) = layout.unpack(&words) {
        assert_eq!(layout.pack(&values).unwrap(), words);
    }
});
