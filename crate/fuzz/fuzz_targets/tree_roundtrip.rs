#![no_main]

use std::collections::HashMap;

use dtdb::treedb::{StateIndex, TreeConfig, TreeDatabase, Variant};
use libfuzzer_sys::fuzz_target;

// Sequences are separated by 0xff; each other byte is one element.
fuzz_target!(|data: &[u8]| {
    let mut dbs = [
        TreeDatabase::new(Variant::Stable, TreeConfig::default()),
        TreeDatabase::new(Variant::HashId, TreeConfig::default()),
    ];
    let mut seen: HashMap<Vec<u64>, u32> = HashMap::new();
    for chunk in data.split(|&b| b == 0xff) {
        let seq: Vec<u64> = chunk.iter().map(|&b| b as u64).collect();
        let next = seen.len() as u32;
        let want = *seen.entry(seq.clone()).or_insert(next);
        for db in dbs.iter_mut() {
            let (i, new) = db.insert(&seq).unwrap();
            assert_eq!((i.0, new), (want, want == next));
        }
    }
    for (seq, &i) in &seen {
        for db in &dbs {
            assert_eq!(&db.lookup(StateIndex(i)).unwrap(), seq);
        }
    }
    let _ = dbs[0].lookup(StateIndex(seen.len() as u32));
});
