use std::collections::HashMap;
use std::sync::Arc;

use dtdb::encoding::{make_backend, BackendConfig, BackendKind, SequenceCodec, StateCodec};
use dtdb::flat_table::TableConfig;
use dtdb::ordering::greedy_pack;
use dtdb::task::{
    parse_task, Action, Assignment, Comparison, GroundedTask, Literal, NumericCondition, NumericEffect,
    NumericVar, State,
};
use dtdb::treedb::{NumericLeafStore, StateIndex, TreeConfig, TreeDatabase, Variant};
use proptest::prelude::*;

fn decimal() -> impl Strategy<Value = f64> {
    prop_oneof![
        (-1000i32..1000).prop_map(|x| x as f64 / 8.0),
        any::<f64>().prop_filter("finite", |x| x.is_finite()),
    ]
}

/// Random valid tasks: disjoint mutex groups, mutex-respecting init.
fn task() -> impl Strategy<Value = GroundedTask> {
    (1usize..10, 0usize..3, 0usize..6)
        .prop_flat_map(|(atoms, numvars, actions)| {
            let group_of = proptest::collection::vec(0usize..4, atoms);
            let inits = proptest::collection::vec(any::<bool>(), atoms);
            let nums = proptest::collection::vec(decimal(), numvars);
            let acts = proptest::collection::vec(
                (
                    0u64..5,
                    proptest::collection::vec((0..atoms, any::<bool>()), 0..4),
                    proptest::collection::vec((0..atoms, any::<bool>()), 0..4),
                    proptest::collection::vec((0..numvars.max(1), 0usize..5, decimal()), 0..3),
                    proptest::collection::vec((0..numvars.max(1), 0usize..3, decimal()), 0..3),
                ),
                actions,
            );
            (Just(atoms), Just(numvars), group_of, inits, nums, acts)
        })
        .prop_map(|(atoms, numvars, group_of, inits, nums, acts)| {
            let mut t = GroundedTask {
                atoms: (0..atoms).map(|i| format!("atom-{i}")).collect(),
                ..Default::default()
            };
            // Group 0 means ungrouped.
            for g in 1..4 {
                let members: Vec<u32> = (0..atoms).filter(|&a| group_of[a] == g).map(|a| a as u32).collect();
                if !members.is_empty() {
                    t.mutex_groups.push(members);
                }
            }
            let mut held = [false; 4];
            for a in 0..atoms {
                let g = group_of[a];
                if inits[a] && (g == 0 || !held[g]) {
                    held[g] = true;
                    t.init.push(a as u32);
                }
            }
            t.numeric_vars = nums
                .iter()
                .enumerate()
                .map(|(i, &v)| NumericVar { name: format!("n{i}"), init: v })
                .collect();
            let cmps = [Comparison::Lt, Comparison::Le, Comparison::Eq, Comparison::Ge, Comparison::Gt];
            let ops = [Assignment::Assign, Assignment::Increase, Assignment::Decrease];
            for (i, (cost, pre, eff, npre, neff)) in acts.into_iter().enumerate() {
                let mut a = Action::new(format!("act{i}"), cost);
                a.pre = pre.iter().map(|&(x, positive)| Literal { atom: x as u32, positive }).collect();
                for (x, add) in eff {
                    let x = x as u32;
                    if add && !a.del.contains(&x) {
                        a.add.push(x);
                    } else if !add && !a.add.contains(&x) {
                        a.del.push(x);
                    }
                }
                if numvars > 0 {
                    a.num_pre = npre
                        .iter()
                        .map(|&(var, c, value)| NumericCondition { var, cmp: cmps[c], value })
                        .collect();
                    a.num_eff = neff
                        .iter()
                        .map(|&(var, o, value)| NumericEffect { var, op: ops[o], value })
                        .collect();
                }
                t.actions.push(a);
            }
            t.goal.atoms = t.init.iter().map(|&a| Literal { atom: a, positive: true }).collect();
            t
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gtf_round_trip(t in task()) {
        let text = t.to_gtf();
        let back = parse_task(&text).unwrap();
        prop_assert_eq!(&back, &t);
        prop_assert_eq!(back.to_gtf(), text);
    }

    #[test]
    fn tree_round_trip(seqs in proptest::collection::vec(proptest::collection::vec(0u64..64, 0..40), 1..60)) {
        let mut dbs = [
            TreeDatabase::new(Variant::Stable, TreeConfig::default()),
            TreeDatabase::new(Variant::HashId, TreeConfig::default()),
        ];
        let mut oracle: HashMap<Vec<u64>, u32> = HashMap::new();
        for s in &seqs {
            let next = oracle.len() as u32;
            let want = *oracle.entry(s.clone()).or_insert(next);
            for db in dbs.iter_mut() {
                let (i, new) = db.insert(s).unwrap();
                prop_assert_eq!((i.0, new), (want, want == next));
            }
        }
        for (s, &i) in &oracle {
            for db in &dbs {
                prop_assert_eq!(&db.lookup(StateIndex(i)).unwrap(), s);
            }
        }
    }

    #[test]
    fn sequences_round_trip(values in proptest::collection::vec(0u64..4, 9), nums in proptest::collection::vec(decimal(), 2)) {
        let t = parse_task(
            "gtf 1\natom a0\natom a1\natom a2\natom b0\natom b1\natom b2\natom c0\natom c1\natom c2\n\
             atom d0\natom d1\natom d2\natom e\natom f\natom g\natom h\natom i\n\
             mutex a0 a1 a2\nmutex b0 b1 b2\nmutex c0 c1 c2\nmutex d0 d1 d2\nnumvar x 0\nnumvar y 0\n",
        ).unwrap();
        let codec = StateCodec::new(&t, greedy_pack(&t, 32).unwrap().layout(&t.fdr(), 32).unwrap()).unwrap();
        let fdr = t.fdr();
        let clipped: Vec<u64> = values.iter().take(fdr.var_count()).enumerate()
            .map(|(v, &x)| x.min(fdr.none_value(v))).collect();
        let mut padded = clipped.clone();
        padded.resize(fdr.var_count(), 1);
        let s = codec.state_from_values(&padded, nums).unwrap();
        let mut store = NumericLeafStore::new(TableConfig::default());
        for c in [SequenceCodec::FdrWords, SequenceCodec::SparseAtoms] {
            let seq = codec.state_to_sequence(&s, c, &mut store).unwrap();
            prop_assert_eq!(codec.sequence_to_state(&seq, c, &store).unwrap(), s.clone());
        }
    }
}

#[test]
fn relocation_peak_exceeds_settled_size() {
    let mut db = TreeDatabase::new(Variant::HashId, TreeConfig::default());
    for i in 0..5000u64 {
        db.insert(&[i, i + 1, i + 2, i + 3, i * 7]).unwrap();
    }
    assert!(db.relocations() > 0);
    assert!(db.peak_bytes() > db.allocated_bytes());
    let mut s = TreeDatabase::new(Variant::Stable, TreeConfig::default());
    for i in 0..5000u64 {
        s.insert(&[i, i + 1, i + 2, i + 3, i * 7]).unwrap();
    }
    assert_eq!(s.relocations(), 0);
}

#[test]
fn sixty_four_bit_words_across_backends() {
    let t = dtdb::task::generate_task("gripper:3".parse().unwrap());
    let codec = Arc::new(StateCodec::with_input_order(&t, 64).unwrap());
    let config =
        BackendConfig { tree: TreeConfig::new(64, 4, 1).unwrap(), sequence: SequenceCodec::FdrWords };
    let mut results = Vec::new();
    for kind in BackendKind::ALL {
        let mut b = make_backend(kind, codec.clone(), config).unwrap();
        let r = dtdb::search::ucs(&t, b.as_mut(), Default::default()).unwrap();
        results.push(r);
    }
    assert!(results.windows(2).all(|w| w[0] == w[1]));
    let narrow = Arc::new(StateCodec::with_input_order(&t, 32).unwrap());
    let mut b = make_backend(BackendKind::DtdbS, narrow, BackendConfig::default()).unwrap();
    let r = dtdb::search::ucs(&t, b.as_mut(), Default::default()).unwrap();
    assert_eq!(results[0], r);
}

#[test]
fn states_compare_numerics_bitwise() {
    assert_ne!(State::new(vec![], vec![0.0]), State::new(vec![], vec![-0.0]));
    assert_eq!(State::new(vec![3, 1], vec![f64::NAN]), State::new(vec![1, 3], vec![f64::NAN]));
}
