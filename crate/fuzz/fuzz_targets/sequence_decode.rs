#![no_main]

use dtdb::encoding::{SequenceCodec, StateCodec};
use dtdb::flat_table::TableConfig;
use dtdb::task::generate_task;
use dtdb::treedb::NumericLeafStore;
use libfuzzer_sys::fuzz_target;

// Arbitrary sequences against a fixed task with numeric state.
fuzz_target!(|data: &[u8]| {
    let Some((&mode, rest)) = data.split_first() else { return };
    let codec_kind = if mode & 1 == 0 { SequenceCodec::FdrWords } else { SequenceCodec::SparseAtoms };
    let task = generate_task("numeric-counter:3".parse().unwrap());
    let codec = StateCodec::with_input_order(&task, 32).unwrap();
    let mut store = NumericLeafStore::new(TableConfig::default());
    for v in [0.0, 1.0, 2.5, -1.0] {
        store.intern(v).unwrap();
    }
    let seq: Vec<u64> = rest
        .chunks(2)
        .map(|c| if c.len() == 2 { u16::from_le_bytes([c[0], c[1]]) as u64 } else { c[0] as u64 })
        .collect();
    if let Ok(state) = codec.sequence_to_state(&seq, codec_kind, &store) {
        let back = codec.state_to_sequence(&state, codec_kind, &mut store).unwrap();
        let again = codec.sequence_to_state(&back, codec_kind, &store).unwrap();
        assert_eq!(again, state);
    }
});
