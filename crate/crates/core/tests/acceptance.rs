//! Acceptance criteria, one line of output per criterion.
//!
//! Runs without the libtest harness so the summary lines are always printed.
//! Exits nonzero if any hard criterion fails; the timing criterion only
//! reports.

// NaN-safe checks: a failed comparison must count as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::{HashMap, HashSet, VecDeque};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::Instant;

use dtdb::encoding::{
    encode_numeric, encode_sparse, make_backend, BackendConfig, BackendKind, FdrLayout, StateCodec,
};
use dtdb::flat_table::{FlatTable, TableConfig};
use dtdb::metrics::{compression_ratio, memory_score, DEFAULT_LIMIT, GIB, MIB};
use dtdb::ordering::{greedy_pack, input_order, objective, VariableOrdering};
use dtdb::search::{ucs, SearchLimits, SearchResult, SearchStatus};
use dtdb::task::{generate_task, parse_task, GeneratorKind, GeneratorSpec, GroundedTask, State};
use dtdb::treedb::{Node, StateIndex, TreeConfig, TreeDatabase, Variant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, bool, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "tree round-trip on both variants", true, round_trip),
        (2, "DTDB-S / DTDB-H trace equivalence across relocations", true, variant_equivalence),
        (3, "fresh-tree and one-change node counts", true, structural_counts),
        (4, "packed, sparse and dense bit counts", true, bit_counts),
        (5, "shared leaf and inline element of the two-sequence example", true, sharing_example),
        (6, "search optimality and backend agreement", true, search_correctness),
        (7, "compression direction on chain and counter", true, compression_direction),
        (8, "affinity ordering on the adversarial task", true, ordering_effectiveness),
        (9, "flat table load and membership", true, flat_table_invariants),
        (10, "memory score spot values and monotonicity", true, memory_scores),
        (11, "per-element insert time across lengths (soft)", false, insert_timing),
    ];
    let mut failed = 0;
    for (id, name, hard, run) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|p| Err(format!("panicked: {}", panic_message(&p))));
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) if hard => {
                failed += 1;
                ("FAIL", d.as_str())
            }
            Err(d) => ("SOFT-FAIL", d.as_str()),
        };
        println!("criterion {id:>2} [{tag}] {name} ({secs:.2}s): {detail}");
    }
    if failed > 0 {
        println!("{failed} hard criteria failed");
        std::process::exit(1);
    }
}

fn panic_message(p: &Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_default()
}

fn random_seq(rng: &mut ChaCha8Rng, len: usize) -> Vec<u64> {
    // Mix small alphabets (lots of sharing and duplicates) with full words.
    let bound = match rng.gen_range(0..3) {
        0 => 2,
        1 => 16,
        _ => 1 << 32,
    };
    (0..len).map(|_| rng.gen_range(0..bound)).collect()
}

fn round_trip() -> Outcome {
    let lens = [0usize, 1, 2, 3, 5, 6, 7, 8, 64, 513, 1024];
    let mut total = 0;
    for variant in [Variant::Stable, Variant::HashId] {
        for &len in &lens {
            let mut db = TreeDatabase::new(variant, TreeConfig::default());
            let mut rng = ChaCha8Rng::seed_from_u64(len as u64);
            let mut seen: HashMap<Vec<u64>, u32> = HashMap::new();
            let mut order: Vec<u32> = Vec::with_capacity(10_000);
            for _ in 0..10_000 {
                let seq = random_seq(&mut rng, len);
                let (idx, new) = db.insert(&seq).map_err(|e| e.to_string())?;
                let next = seen.len() as u32;
                let expect = *seen.entry(seq.clone()).or_insert(next);
                ensure!(idx.0 == expect && new == (expect == next), "{variant:?} len {len}: wrong index");
                ensure!(db.lookup(idx).map_err(|e| e.to_string())? == seq, "{variant:?} len {len}: lookup");
                order.push(idx.0);
            }
            // Every stored sequence still decodes after all later inserts.
            let mut rng = ChaCha8Rng::seed_from_u64(len as u64);
            for &idx in &order {
                let seq = random_seq(&mut rng, len);
                ensure!(db.lookup(StateIndex(idx)).unwrap() == seq, "{variant:?} len {len}: late lookup");
            }
            total += order.len();
        }
    }
    Ok(format!("{total} sequences over {} lengths, exact", lens.len()))
}

fn variant_equivalence() -> Outcome {
    let mut s = TreeDatabase::new(Variant::Stable, TreeConfig::default());
    let mut h = TreeDatabase::new(Variant::HashId, TreeConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut stored: Vec<Vec<u64>> = Vec::new();
    for op in 0..100_000 {
        let roll = rng.gen_range(0..10);
        if roll < 3 && !stored.is_empty() {
            let i = StateIndex(rng.gen_range(0..stored.len() as u32));
            let (a, b) = (s.lookup(i).unwrap(), h.lookup(i).unwrap());
            ensure!(a == b && a == stored[i.get()], "op {op}: lookups differ");
        } else {
            let seq = if roll < 5 && !stored.is_empty() {
                stored[rng.gen_range(0..stored.len())].clone()
            } else {
                let len = rng.gen_range(0..48);
                random_seq(&mut rng, len)
            };
            let (a, b) = (s.insert(&seq).unwrap(), h.insert(&seq).unwrap());
            ensure!(a == b, "op {op}: inserts differ {a:?} vs {b:?}");
            if a.1 {
                stored.push(seq);
            }
        }
    }
    ensure!(h.relocations() >= 3, "only {} relocations", h.relocations());
    Ok(format!(
        "100000 ops, {} states, {} nodes, {} relocations",
        stored.len(),
        h.node_count(),
        h.relocations()
    ))
}

/// Counts distinct nodes by interning (left, right) pairs bottom-up.
struct NodeOracle {
    ids: HashMap<(u64, u64), u64>,
}

impl NodeOracle {
    fn intern(&mut self, l: u64, r: u64) -> u64 {
        let n = self.ids.len() as u64;
        *self.ids.entry((l, r)).or_insert(n)
    }

    /// Left subtrees hold the largest power of two strictly below the leaf count.
    fn build(&mut self, seq: &[u64]) -> u64 {
        let leaves = seq.len().div_ceil(2);
        if leaves == 1 {
            return if seq.len() == 2 { self.intern(seq[0], seq[1]) } else { seq[0] };
        }
        let left_leaves = 1usize << (usize::BITS - 1 - (leaves - 1).leading_zeros());
        let (l, r) = seq.split_at(2 * left_leaves);
        let (l, r) = (self.build(l), self.build(r));
        self.intern(l, r)
    }
}

fn structural_counts() -> Outcome {
    for k in 2..=64u64 {
        for variant in [Variant::Stable, Variant::HashId] {
            let mut db = TreeDatabase::new(variant, TreeConfig::default());
            // Elements far above any node id, so no node can coincide with a
            // leaf pair by accident.
            let seq: Vec<u64> = (0..k).map(|x| (1 << 24) + x).collect();
            db.insert(&seq).unwrap();
            let mut oracle = NodeOracle { ids: HashMap::new() };
            oracle.build(&seq);
            ensure!(
                db.node_count() as u64 == k - 1 && oracle.ids.len() as u64 == k - 1,
                "k={k}: {} nodes, oracle {}",
                db.node_count(),
                oracle.ids.len()
            );
        }
    }
    let mut worst = 0;
    for k in (2..=64u64).step_by(2) {
        let bound = (k / 2).next_power_of_two().trailing_zeros() as usize + 1;
        let mut db = TreeDatabase::new(Variant::Stable, TreeConfig::default());
        let base: Vec<u64> = (0..k).collect();
        db.insert(&base).unwrap();
        for i in 0..k as usize {
            let mut next = base.clone();
            next[i] = 1000 + i as u64;
            let before = db.node_count();
            db.insert(&next).unwrap();
            let added = db.node_count() - before;
            ensure!(added <= bound, "k={k} change at {i}: {added} nodes > {bound}");
            worst = worst.max(added);
        }
    }
    Ok(format!("k-1 nodes for k in 2..=64; one-change inserts add at most {worst} nodes"))
}

fn bit_counts() -> Outcome {
    let task = parse_task(
        "gtf 1\natom p0\natom p1\natom p2\natom p3\natom p4\natom p5\n\
         mutex p0 p1 p2\nmutex p3 p4\nmutex p5\nnumvar x 0.8\nnumvar y 5.7\ninit p1 p5\n",
    )
    .unwrap();
    let fdr = task.fdr();
    ensure!(fdr.domains() == vec![4, 3, 2], "domains {:?}", fdr.domains());
    let layout = FdrLayout::sequential(&fdr.domains(), 32).unwrap();
    let s = State::new(vec![1], vec![]);
    layout.pack(&fdr.values(&s).unwrap()).unwrap();
    let packed = layout.value_bits();
    let sparse = encode_sparse(&[1, 5]).unwrap().bit_len;
    let mut dense = Vec::new();
    encode_numeric(task.initial_state().numeric(), &mut dense);
    let dense = dense.len() * 8;
    ensure!((packed, sparse, dense) == (5, 17, 128), "got {packed}, {sparse}, {dense} bits");
    Ok("5, 17 and 128 bits".into())
}

fn sharing_example() -> Outcome {
    let mut db = TreeDatabase::new(Variant::Stable, TreeConfig::default());
    let z0 = [0, 1, 2, 3, 4, 5];
    let z1 = [1, 2, 4, 5, 6];
    let (i0, _) = db.insert(&z0).unwrap();
    let (i1, _) = db.insert(&z1).unwrap();
    let nodes = db.nodes();
    let leaf45: Vec<u64> = nodes.iter().filter(|(_, n)| *n == Node::new(4, 5)).map(|(id, _)| *id).collect();
    ensure!(leaf45.len() == 1, "leaf (4,5) stored {} times", leaf45.len());
    let leaf45 = leaf45[0];
    let r0 = db.node(db.root_entry(i0).unwrap().root).unwrap();
    let r1 = db.node(db.root_entry(i1).unwrap().root).unwrap();
    ensure!(r0.right == leaf45, "z0 does not reach (4,5) from its root");
    ensure!(db.node(r1.left).unwrap().right == leaf45, "z1 does not reach (4,5)");
    ensure!(r1.right == 6, "element 6 not inline in z1's root");
    ensure!(db.lookup(i0).unwrap() == z0 && db.lookup(i1).unwrap() == z1, "decode mismatch");
    ensure!(nodes.len() == 7, "{} nodes", nodes.len());
    Ok("leaf (4,5) shared, 6 inline, 7 nodes in total".into())
}

fn bfs_cost(task: &GroundedTask) -> (Option<u64>, usize) {
    let s0 = task.initial_state();
    let mut dist = HashMap::from([(s0.clone(), 0u64)]);
    let mut queue = VecDeque::from([s0]);
    let mut goal = None;
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        if goal.is_none() && task.is_goal(&s) {
            goal = Some(d);
        }
        for a in task.applicable(&s) {
            let n = task.successor(&s, a);
            if !dist.contains_key(&n) {
                dist.insert(n.clone(), d + 1);
                queue.push_back(n);
            }
        }
    }
    (goal, dist.len())
}

fn run_search(
    task: &GroundedTask,
    kind: BackendKind,
    order: Option<&VariableOrdering>,
) -> (SearchResult, Box<dyn dtdb::encoding::StateSet>) {
    let codec = match order {
        Some(o) => StateCodec::new(task, o.layout(&task.fdr(), 32).unwrap()).unwrap(),
        None => StateCodec::with_input_order(task, 32).unwrap(),
    };
    let mut states = make_backend(kind, Arc::new(codec), BackendConfig::default()).unwrap();
    let r = ucs(task, states.as_mut(), SearchLimits::default()).unwrap();
    (r, states)
}

fn search_correctness() -> Outcome {
    let instances: &[(GeneratorKind, &[u32])] = &[
        (GeneratorKind::Chain, &[1, 2, 5, 64, 1024]),
        (GeneratorKind::Counter, &[1, 3, 8, 12, 16]),
        (GeneratorKind::Gripper, &[1, 2, 3, 4]),
        (GeneratorKind::NumericCounter, &[1, 4, 10, 14]),
    ];
    let mut runs = 0;
    for &(kind, sizes) in instances {
        for &n in sizes {
            let spec = GeneratorSpec::new(kind, n).unwrap();
            let task = generate_task(spec);
            let (cost, reachable) = bfs_cost(&task);
            ensure!(reachable <= 100_000, "{spec} has {reachable} states");
            let mut first: Option<SearchResult> = None;
            for backend in BackendKind::ALL {
                let (r, _) = run_search(&task, backend, None);
                ensure!(r.status == SearchStatus::Solved, "{spec} {backend}: {}", r.status);
                ensure!(r.plan_cost == cost, "{spec} {backend}: cost {:?} vs {cost:?}", r.plan_cost);
                match &first {
                    None => first = Some(r),
                    Some(f) => ensure!(*f == r, "{spec}: {backend} differs from hashset-unpacked"),
                }
                runs += 1;
            }
        }
    }
    Ok(format!("{runs} runs match the BFS oracle and agree across backends"))
}

/// Measured with w = 32, δ = 2 and the default seed; sizes are capacity-based
/// and therefore deterministic.
const PINNED_CHAIN: [(u32, u64, u64); 3] = [(64, 17024, 2512), (256, 264704, 14032), (1024, 4204544, 55504)];
const PINNED_COUNTER16: (u64, u64) = (4849664, 1180064);

fn compression_direction() -> Outcome {
    let mut ratios = Vec::new();
    let mut measured = Vec::new();
    for (l, _, _) in PINNED_CHAIN {
        let task = generate_task(GeneratorSpec::new(GeneratorKind::Chain, l).unwrap());
        let (rb, base) = run_search(&task, BackendKind::HashsetUnpacked, None);
        let (rt, tree) = run_search(&task, BackendKind::DtdbS, None);
        ensure!(rb.unique_states == l as u64 && rt.unique_states == l as u64, "chain {l} not fully explored");
        measured.push((l, base.rep_bytes(), tree.rep_bytes()));
        ratios.push(compression_ratio(base.rep_bytes(), tree.rep_bytes()));
    }
    ensure!(ratios[2] > 1.0, "ratio {:.3} at L=1024", ratios[2]);
    ensure!(ratios.windows(2).all(|w| w[0] < w[1]), "ratios not increasing: {ratios:?}");
    let task = generate_task(GeneratorSpec::new(GeneratorKind::Counter, 16).unwrap());
    let (_, base) = run_search(&task, BackendKind::HashsetUnpacked, None);
    let (_, tree) = run_search(&task, BackendKind::DtdbS, None);
    let counter = (base.rep_bytes(), tree.rep_bytes());
    ensure!(counter.1 < counter.0, "counter:16 dtdb-s {} >= unpacked {}", counter.1, counter.0);
    ensure!(measured == PINNED_CHAIN, "chain sizes moved: {measured:?}");
    ensure!(counter == PINNED_COUNTER16, "counter:16 sizes moved: {counter:?}");
    Ok(format!(
        "chain ratios {:.2} / {:.2} / {:.2}; counter:16 {} vs {} bytes",
        ratios[0], ratios[1], ratios[2], counter.0, counter.1
    ))
}

/// Eight atoms whose actions always change x_i and x_{i+4} together, so
/// packing in input order splits every pair across words.
fn adversarial_task() -> GroundedTask {
    let mut text = String::from("gtf 1\n");
    for i in 0..8 {
        text += &format!("atom x{i}\n");
    }
    text += "goal +x0 -x0\n";
    for i in 0..4 {
        let j = i + 4;
        text += &format!("action a{i}\npre -x{i} -x{j}\nadd x{i} x{j}\nend\n");
        text += &format!("action b{i}\npre +x{i} +x{j}\ndel x{i} x{j}\nend\n");
        text += &format!("action c{i}\npre +x{i} +x{j}\ndel x{i}\nend\n");
    }
    parse_task(&text).unwrap()
}

fn ordering_effectiveness() -> Outcome {
    let task = adversarial_task();
    let fdr = task.fdr();
    let input = input_order(&task, 2).unwrap();
    let affinity = greedy_pack(&task, 2).unwrap();
    let (oi, oa) =
        (objective(&input.positions(), &task, &fdr), objective(&affinity.positions(), &task, &fdr));
    ensure!(oa <= oi, "objective {oa} > {oi}");
    let (ri, si) = run_search(&task, BackendKind::DtdbS, Some(&input));
    let (ra, sa) = run_search(&task, BackendKind::DtdbS, Some(&affinity));
    ensure!(ri.status == SearchStatus::Exhausted && ra.status == SearchStatus::Exhausted, "not exhausted");
    ensure!(ri.unique_states == ra.unique_states, "state counts differ");
    let (ni, na) = (si.node_count(), sa.node_count());
    ensure!(na <= ni, "affinity order uses {na} nodes, input order {ni}");
    Ok(format!("objective {oa} vs {oi}; {} states in {na} vs {ni} nodes", ri.unique_states))
}

fn flat_table_invariants() -> Outcome {
    let mut t: FlatTable<u64> = FlatTable::new(TableConfig::default());
    let mut oracle = HashSet::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst: f64 = 0.0;
    for _ in 0..1_000_000 {
        let k: u64 = rng.gen_range(0..4_000_000);
        let (_, new) = t.insert(k).unwrap();
        ensure!(new == oracle.insert(k), "new flag wrong for {k}");
        worst = worst.max(t.load_factor());
        ensure!(t.load_factor() <= 0.875, "load {} at len {}", t.load_factor(), t.len());
    }
    ensure!(t.len() == oracle.len(), "len {} vs {}", t.len(), oracle.len());
    ensure!(t.growths() >= 6, "{} growths", t.growths());
    for k in 0..4_000_000u64 {
        ensure!(t.contains(&k) == oracle.contains(&k), "membership of {k}");
    }
    Ok(format!("{} keys, {} growths, max load {worst:.4}", t.len(), t.growths()))
}

fn memory_scores() -> Outcome {
    let spots = [
        memory_score(2 * MIB, DEFAULT_LIMIT),
        memory_score(DEFAULT_LIMIT, DEFAULT_LIMIT),
        memory_score(128 * MIB, DEFAULT_LIMIT),
    ];
    for (got, want) in spots.iter().zip([1.0, 0.0, 0.5]) {
        ensure!((got - want).abs() <= 1e-12, "score {got} vs {want}");
    }
    let mut prev = f64::INFINITY;
    for i in 0..1000u64 {
        let m = MIB + i * (9 * GIB / 999);
        let s = memory_score(m, DEFAULT_LIMIT);
        ensure!((0.0..=1.0).contains(&s) && s <= prev, "not monotone at {m}");
        prev = s;
    }
    Ok("1.0, 0.0, 0.5 and nonincreasing on 1000 points".into())
}

fn insert_timing() -> Outcome {
    let mut per_element = Vec::new();
    for k in [8usize, 64, 512] {
        let mut db = TreeDatabase::new(Variant::Stable, TreeConfig::default());
        let mut rng = ChaCha8Rng::seed_from_u64(k as u64);
        let n = 400_000 / k;
        let seqs: Vec<Vec<u64>> =
            (0..n).map(|_| (0..k).map(|_| rng.gen_range(0..1u64 << 32)).collect()).collect();
        let start = Instant::now();
        for s in &seqs {
            db.insert(s).unwrap();
        }
        per_element.push(start.elapsed().as_secs_f64() * 1e9 / (n * k) as f64);
    }
    let (lo, hi) = per_element.iter().fold((f64::MAX, 0f64), |(a, b), &x| (a.min(x), b.max(x)));
    let detail = format!(
        "{:.1} / {:.1} / {:.1} ns per element, spread {:.2}x",
        per_element[0],
        per_element[1],
        per_element[2],
        hi / lo
    );
    if hi / lo < 3.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}
