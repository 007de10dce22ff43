//! Tree databases over w-bit word sequences.
//!
//! A sequence `z` of length `k >= 2` is stored as a perfectly balanced
//! binary tree with `⌊(k+1)/2⌋` leaves, leaf `i` holding `(z[2i], z[2i+1])`.
//! A left subtree always has a power-of-two leaf count, see [`shape_split`].
//! When `k` is odd the final element has no partner and sits directly in the
//! right field of its parent. Sequences of length 0 and 1 need no nodes.
//!
//! Nodes are plain word pairs, hash-consed in a single store regardless of
//! whether they act as a leaf or as an inner node. Whether a field is a child
//! id or an element follows from the shape alone, so decoding never inspects
//! values. Each stored sequence is identified by its `(root, k)` entry in a
//! stable root store; that entry's index is the state index.

use crate::flat_table::FlatKey;
use crate::flat_table::{HashIdSet, StableIndexedSet, TableConfig, WordHasher};
use crate::{Error, Result};

/// Splits a leaf count into left and right leaf counts.
///
/// The left side gets `2^⌊log2(λ−1)⌋` leaves.
///
/// # Panics
///
/// If `leaves < 2`.
#[inline]
pub fn shape_split(leaves: u64) -> (u64, u64) {
    assert!(leaves >= 2, "shape_split needs at least two leaves, got {leaves}");
    let left = 1u64 << (63 - (leaves - 1).leading_zeros());
    (left, leaves - left)
}

/// Leaf count of the tree for a sequence of length `len`.
#[inline]
pub fn root_leaves(len: u64) -> u64 {
    len.div_ceil(2)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Node {
    pub left: u64,
    pub right: u64,
}

impl Node {
    pub fn new(left: u64, right: u64) -> Self {
        Self { left, right }
    }
}

impl FlatKey for Node {
    #[inline]
    fn hash_with(&self, hasher: &WordHasher) -> u64 {
        hasher.hash_pair(self.left, self.right)
    }
}

/// A stored sequence: its root reference and length.
///
/// `root` is a node id for `len >= 2`, the single element for `len == 1`
/// and 0 for the empty sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct RootEntry {
    pub root: u64,
    pub len: u64,
}

impl FlatKey for RootEntry {
    #[inline]
    fn hash_with(&self, hasher: &WordHasher) -> u64 {
        hasher.hash_pair(self.root, self.len)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateIndex(pub u32);

impl StateIndex {
    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for StateIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Node ids are positions in an append-only array.
    Stable,
    /// Node ids are hash-table slots and change on relocation.
    HashId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeConfig {
    pub word_bits: u32,
    pub growth: u32,
    pub seed: u64,
}

impl TreeConfig {
    pub fn new(word_bits: u32, growth: u32, seed: u64) -> Result<Self> {
        if word_bits != 32 && word_bits != 64 {
            return Err(Error::Validation(format!("word size must be 32 or 64, got {word_bits}")));
        }
        TableConfig::new(seed, growth, word_bits)?;
        Ok(Self { word_bits, growth, seed })
    }

    fn table(&self) -> TableConfig {
        TableConfig { seed: self.seed, growth: self.growth, index_bits: self.word_bits }
    }

    pub fn word_bytes(&self) -> u64 {
        self.word_bits as u64 / 8
    }

    #[inline]
    fn fits(&self, value: u64) -> bool {
        self.word_bits == 64 || value >> self.word_bits == 0
    }
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self { word_bits: 32, growth: 2, seed: crate::flat_table::DEFAULT_SEED }
    }
}

/// Interned binary64 values, compared by bit pattern.
///
/// Accepts finite values and the canonical quiet NaN only.
#[derive(Clone, Debug)]
pub struct NumericLeafStore {
    set: StableIndexedSet<u64>,
}

pub const CANONICAL_NAN: u64 = 0x7ff8_0000_0000_0000;

/// Checks that a value may be stored as a numeric leaf.
pub fn check_numeric(value: f64) -> Result<u64> {
    let bits = value.to_bits();
    if value.is_finite() || bits == CANONICAL_NAN {
        Ok(bits)
    } else {
        Err(Error::InvalidNumeric(bits))
    }
}

impl NumericLeafStore {
    pub fn new(config: TableConfig) -> Self {
        Self { set: StableIndexedSet::new(config) }
    }

    pub fn intern(&mut self, value: f64) -> Result<u64> {
        let bits = check_numeric(value)?;
        self.set.insert(bits).map(|(id, _)| id as u64)
    }

    pub fn find(&self, value: f64) -> Option<u64> {
        self.set.find(&value.to_bits()).map(u64::from)
    }

    pub fn value_of(&self, id: u64) -> Result<f64> {
        u32::try_from(id)
            .ok()
            .and_then(|i| self.set.key_of(i))
            .map(|&bits| f64::from_bits(bits))
            .ok_or_else(|| Error::Corrupt(format!("unknown numeric leaf id {id}")))
    }

    pub fn len(&self) -> usize {
        self.set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.set.is_empty()
    }

    pub fn accounted_bytes(&self, word_bytes: u64) -> u64 {
        self.set.accounted_bytes(8, word_bytes)
    }
}

#[derive(Clone, Debug)]
enum NodeStore {
    Stable(StableIndexedSet<Node>),
    HashId(HashIdSet<Node>),
}

/// Size accounting for a [`TreeDatabase`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TreeStats {
    pub node_count: usize,
    pub node_capacity: usize,
    pub root_count: usize,
    pub numeric_count: usize,
    /// Capacity of every internal array times its entry width.
    pub allocated_bytes: u64,
    /// Entry width times entry count, without slack.
    pub payload_bytes: u64,
}

/// Forest of perfectly balanced trees with hash-consed nodes.
#[derive(Clone, Debug)]
pub struct TreeDatabase {
    variant: Variant,
    nodes: NodeStore,
    roots: StableIndexedSet<RootEntry>,
    numeric: NumericLeafStore,
    config: TreeConfig,
    peak_bytes: u64,
    relocations: usize,
}

/// Node store ran out of room mid-insert (hash-id variant only).
struct NeedsRelocation;

impl TreeDatabase {
    pub fn new(variant: Variant, config: TreeConfig) -> Self {
        let table = config.table();
        let nodes = match variant {
            Variant::Stable => NodeStore::Stable(StableIndexedSet::new(table)),
            Variant::HashId => NodeStore::HashId(HashIdSet::new(table)),
        };
        let mut db = Self {
            variant,
            nodes,
            roots: StableIndexedSet::new(table),
            numeric: NumericLeafStore::new(table),
            config,
            peak_bytes: 0,
            relocations: 0,
        };
        db.peak_bytes = db.allocated_bytes();
        db
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn config(&self) -> TreeConfig {
        self.config
    }

    /// Number of stored sequences.
    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    pub fn relocations(&self) -> usize {
        self.relocations
    }

    pub fn numeric(&self) -> &NumericLeafStore {
        &self.numeric
    }

    pub fn numeric_mut(&mut self) -> &mut NumericLeafStore {
        &mut self.numeric
    }

    /// Stores a sequence, returning its state index and whether it was new.
    pub fn insert(&mut self, seq: &[u64]) -> Result<(StateIndex, bool)> {
        if let Some(&value) = seq.iter().find(|&&v| !self.config.fits(v)) {
            return Err(Error::ElementTooWide { value, bits: self.config.word_bits });
        }
        let len = seq.len() as u64;
        if !self.config.fits(len) {
            return Err(Error::ElementTooWide { value: len, bits: self.config.word_bits });
        }
        let root = match seq.len() {
            0 => 0,
            1 => seq[0],
            _ => loop {
                match self.build(seq, 0, root_leaves(len))? {
                    Ok(root) => break root,
                    // Partially built nodes are unreachable from any root and
                    // are dropped by the relocation.
                    Err(NeedsRelocation) => self.relocate()?,
                }
            },
        };
        let (index, fresh) = self.roots.insert(RootEntry { root, len })?;
        self.note_peak(self.allocated_bytes());
        Ok((StateIndex(index), fresh))
    }

    /// Reconstructs the sequence stored under `index`.
    pub fn lookup(&self, index: StateIndex) -> Result<Vec<u64>> {
        let mut out = Vec::new();
        self.lookup_into(index, &mut out)?;
        Ok(out)
    }

    pub fn lookup_into(&self, index: StateIndex, out: &mut Vec<u64>) -> Result<()> {
        let entry = *self
            .roots
            .key_of(index.0)
            .ok_or(Error::IndexOutOfRange { index: index.0 as u64, len: self.roots.len() as u64 })?;
        out.clear();
        match entry.len {
            0 => {}
            1 => out.push(entry.root),
            len => {
                out.reserve(len as usize);
                self.decode(entry.root, 0, root_leaves(len), len, out)?;
            }
        }
        Ok(())
    }

    /// Root entry of a stored sequence.
    pub fn root_entry(&self, index: StateIndex) -> Option<RootEntry> {
        self.roots.key_of(index.0).copied()
    }

    pub fn node(&self, id: u64) -> Result<Node> {
        match &self.nodes {
            NodeStore::Stable(set) => u32::try_from(id)
                .ok()
                .and_then(|i| set.key_of(i))
                .copied()
                .ok_or(Error::IndexOutOfRange { index: id, len: set.len() as u64 }),
            NodeStore::HashId(set) => set.key_of(id),
        }
    }

    pub fn node_count(&self) -> usize {
        match &self.nodes {
            NodeStore::Stable(s) => s.len(),
            NodeStore::HashId(s) => s.len(),
        }
    }

    /// Every stored node with its id, in id order.
    pub fn nodes(&self) -> Vec<(u64, Node)> {
        match &self.nodes {
            NodeStore::Stable(s) => s.keys().iter().enumerate().map(|(i, n)| (i as u64, *n)).collect(),
            NodeStore::HashId(s) => s.iter().collect(),
        }
    }

    pub fn intern_numeric(&mut self, value: f64) -> Result<u64> {
        self.numeric.intern(value)
    }

    pub fn allocated_bytes(&self) -> u64 {
        let wb = self.config.word_bytes();
        let nodes = match &self.nodes {
            NodeStore::Stable(s) => s.accounted_bytes(2 * wb, wb),
            NodeStore::HashId(s) => s.accounted_bytes(2 * wb),
        };
        nodes + self.roots.accounted_bytes(2 * wb, wb) + self.numeric.accounted_bytes(wb)
    }

    /// Highest [`allocated_bytes`](Self::allocated_bytes) observed, including
    /// the moment during relocation when old and new node tables coexist.
    pub fn peak_bytes(&self) -> u64 {
        self.peak_bytes
    }

    pub fn stats(&self) -> TreeStats {
        let wb = self.config.word_bytes();
        let node_capacity = match &self.nodes {
            NodeStore::Stable(s) => s.key_capacity(),
            NodeStore::HashId(s) => s.capacity(),
        };
        let node_count = self.node_count();
        TreeStats {
            node_count,
            node_capacity,
            root_count: self.roots.len(),
            numeric_count: self.numeric.len(),
            allocated_bytes: self.allocated_bytes(),
            payload_bytes: (node_count + self.roots.len()) as u64 * 2 * wb + self.numeric.len() as u64 * 8,
        }
    }

    fn note_peak(&mut self, bytes: u64) {
        self.peak_bytes = self.peak_bytes.max(bytes);
    }

    #[inline]
    fn insert_node(&mut self, node: Node) -> Result<Result<u64, NeedsRelocation>> {
        match &mut self.nodes {
            NodeStore::Stable(set) => Ok(Ok(set.insert(node)?.0 as u64)),
            NodeStore::HashId(set) => Ok(set.try_insert(node).map(|r| r.0).ok_or(NeedsRelocation)),
        }
    }

    /// Builds the subtree covering `leaves` leaves starting at leaf `first`,
    /// children before parents and left before right.
    fn build(&mut self, seq: &[u64], first: u64, leaves: u64) -> Result<Result<u64, NeedsRelocation>> {
        if leaves == 1 {
            let i = 2 * first as usize;
            return if i + 1 < seq.len() {
                self.insert_node(Node::new(seq[i], seq[i + 1]))
            } else {
                Ok(Ok(seq[i]))
            };
        }
        let (l, r) = shape_split(leaves);
        let left = match self.build(seq, first, l)? {
            Ok(id) => id,
            Err(e) => return Ok(Err(e)),
        };
        let right = match self.build(seq, first + l, r)? {
            Ok(id) => id,
            Err(e) => return Ok(Err(e)),
        };
        self.insert_node(Node::new(left, right))
    }

    fn decode(&self, id: u64, first: u64, leaves: u64, len: u64, out: &mut Vec<u64>) -> Result<()> {
        if leaves == 1 {
            if 2 * first + 1 < len {
                let n = self.node(id)?;
                out.push(n.left);
                out.push(n.right);
            } else {
                out.push(id);
            }
            return Ok(());
        }
        let (l, r) = shape_split(leaves);
        let n = self.node(id)?;
        self.decode(n.left, first, l, len, out)?;
        self.decode(n.right, first + l, r, len, out)
    }

    /// Rebuilds every tree of a hash-id database into a larger table.
    ///
    /// Roots are visited in state-index order and each tree is copied depth
    /// first, so only nodes reachable from a root survive. Root references
    /// are rewritten in place and state indices do not change.
    pub fn relocate(&mut self) -> Result<()> {
        let NodeStore::HashId(old) = &self.nodes else {
            return Err(Error::Validation("only hash-id databases relocate".into()));
        };
        let wb = self.config.word_bytes();
        let mut capacity = old.grown_capacity()?;
        let (new_table, new_roots) = loop {
            let mut fresh = HashIdSet::with_capacity(old.config(), capacity);
            let transient = self.allocated_bytes() + fresh.accounted_bytes(2 * wb);
            self.peak_bytes = self.peak_bytes.max(transient);
            match self.copy_trees(old, &mut fresh) {
                Ok(roots) => break (fresh, roots),
                // Sharing can drop during a rebuild, so the copy may not fit.
                Err(NeedsRelocation) => capacity = old.config().grown(capacity)?,
            }
        };
        self.nodes = NodeStore::HashId(new_table);
        self.roots.rewrite_keys(|i, e| e.root = new_roots[i as usize])?;
        self.relocations += 1;
        self.note_peak(self.allocated_bytes());
        Ok(())
    }

    fn copy_trees(
        &self,
        old: &HashIdSet<Node>,
        fresh: &mut HashIdSet<Node>,
    ) -> Result<Vec<u64>, NeedsRelocation> {
        self.roots
            .keys()
            .iter()
            .map(|e| match e.len {
                0 | 1 => Ok(e.root),
                len => copy_subtree(old, fresh, e.root, 0, root_leaves(len), len),
            })
            .collect()
    }
}

fn copy_subtree(
    old: &HashIdSet<Node>,
    fresh: &mut HashIdSet<Node>,
    id: u64,
    first: u64,
    leaves: u64,
    len: u64,
) -> Result<u64, NeedsRelocation> {
    if leaves == 1 && 2 * first + 1 >= len {
        return Ok(id);
    }
    // Ids reachable from a root always name occupied slots.
    let node = old.key_of(id).expect("dangling node id in hash-id tree");
    if leaves == 1 {
        return fresh.try_insert(node).map(|r| r.0).ok_or(NeedsRelocation);
    }
    let (l, r) = shape_split(leaves);
    let left = copy_subtree(old, fresh, node.left, first, l, len)?;
    let right = copy_subtree(old, fresh, node.right, first + l, r, len)?;
    fresh.try_insert(Node::new(left, right)).map(|r| r.0).ok_or(NeedsRelocation)
}
