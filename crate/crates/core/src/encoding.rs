//! State encodings and the state-set backends built on them.
//!
//! Three payload formats are supported: packed FDR words, the sparse list of
//! true atoms, and dense binary64 numerics. Tree backends instead turn a
//! state into a word sequence and store it in a [`TreeDatabase`].

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::flat_table::{Probe, RawTable, TableConfig, WordHasher, INITIAL_CAPACITY};
use crate::task::{AtomId, FdrCompilation, GroundedTask, State};
use crate::treedb::{check_numeric, NumericLeafStore, StateIndex, TreeConfig, TreeDatabase, Variant};
use crate::{Error, Result};

/// Number of bits in the binary representation of `x` (0 for 0).
#[inline]
pub fn bit_length(x: u64) -> u32 {
    64 - x.leading_zeros()
}

/// Bits needed to store values `0..m`.
#[inline]
pub fn bitwidth(m: u64) -> u32 {
    if m <= 1 {
        0
    } else {
        bit_length(m - 1)
    }
}

#[inline]
fn low_mask(bits: u32) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

fn check_word_bits(bits: u32) -> Result<()> {
    if bits == 32 || bits == 64 {
        Ok(())
    } else {
        Err(Error::Validation(format!("word size must be 32 or 64 bits, got {bits}")))
    }
}

// ---------------------------------------------------------------------------
// Packed FDR

/// Position of one variable inside the packed words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub word: u32,
    pub offset: u32,
    pub width: u32,
}

/// Assignment of FDR variables to bit ranges of `w`-bit words.
///
/// Each word holds one bin; variables are laid out LSB first in bin order,
/// and no variable straddles two words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FdrLayout {
    word_bits: u32,
    domains: Vec<u64>,
    slots: Vec<Slot>,
    bins: Vec<Vec<usize>>,
}

impl FdrLayout {
    pub fn from_bins(domains: &[u64], bins: &[Vec<usize>], word_bits: u32) -> Result<Self> {
        check_word_bits(word_bits)?;
        if bins.iter().any(|b| b.is_empty()) {
            return Err(Error::Validation("empty bin in layout".into()));
        }
        let mut slots = vec![None; domains.len()];
        for (w, bin) in bins.iter().enumerate() {
            let mut offset = 0;
            for &v in bin {
                let Some(slot) = slots.get_mut(v) else {
                    return Err(Error::Validation(format!("bin {w} names unknown variable {v}")));
                };
                if slot.is_some() {
                    return Err(Error::Validation(format!("variable {v} packed twice")));
                }
                let width = bitwidth(domains[v]);
                if offset + width > word_bits {
                    return Err(Error::Validation(format!("bin {w} needs more than {word_bits} bits")));
                }
                *slot = Some(Slot { word: w as u32, offset, width });
                offset += width;
            }
        }
        let slots = slots
            .into_iter()
            .enumerate()
            .map(|(v, s)| s.ok_or_else(|| Error::Validation(format!("variable {v} not packed"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { word_bits, domains: domains.to_vec(), slots, bins: bins.to_vec() })
    }

    /// Variables in index order, starting a new word whenever the next one
    /// does not fit.
    pub fn sequential(domains: &[u64], word_bits: u32) -> Result<Self> {
        Self::from_bins(domains, &next_fit(domains, word_bits), word_bits)
    }

    pub fn word_bits(&self) -> u32 {
        self.word_bits
    }

    pub fn var_count(&self) -> usize {
        self.domains.len()
    }

    pub fn word_count(&self) -> usize {
        self.bins.len()
    }

    pub fn domains(&self) -> &[u64] {
        &self.domains
    }

    pub fn slot(&self, var: usize) -> Slot {
        self.slots[var]
    }

    pub fn bins(&self) -> &[Vec<usize>] {
        &self.bins
    }

    /// Sum of variable widths, excluding padding.
    pub fn value_bits(&self) -> u64 {
        self.slots.iter().map(|s| s.width as u64).sum()
    }

    /// Word count times `w`.
    pub fn padded_bits(&self) -> u64 {
        self.word_count() as u64 * self.word_bits as u64
    }

    pub fn pack(&self, values: &[u64]) -> Result<Vec<u64>> {
        let mut words = vec![0; self.word_count()];
        self.pack_into(values, &mut words)?;
        Ok(words)
    }

    pub fn pack_into(&self, values: &[u64], words: &mut [u64]) -> Result<()> {
        if values.len() != self.var_count() || words.len() != self.word_count() {
            return Err(Error::Validation(format!(
                "expected {} values into {} words, got {} into {}",
                self.var_count(),
                self.word_count(),
                values.len(),
                words.len()
            )));
        }
        words.fill(0);
        for (v, (&x, s)) in values.iter().zip(&self.slots).enumerate() {
            if x >= self.domains[v] {
                return Err(Error::Validation(format!(
                    "value {x} outside domain of size {} of variable {v}",
                    self.domains[v]
                )));
            }
            // Single-value variables take no bits and may sit at offset w.
            if s.width > 0 {
                words[s.word as usize] |= x << s.offset;
            }
        }
        Ok(())
    }

    pub fn unpack(&self, words: &[u64]) -> Result<Vec<u64>> {
        if words.len() != self.word_count() {
            return Err(Error::Corrupt(format!(
                "expected {} packed words, got {}",
                self.word_count(),
                words.len()
            )));
        }
        let mut used = vec![0u64; words.len()];
        let mut values = Vec::with_capacity(self.var_count());
        for (v, s) in self.slots.iter().enumerate() {
            if s.width == 0 {
                values.push(0);
                continue;
            }
            let mask = low_mask(s.width) << s.offset;
            used[s.word as usize] |= mask;
            let x = (words[s.word as usize] & mask) >> s.offset;
            if x >= self.domains[v] {
                return Err(Error::Corrupt(format!("variable {v} decodes to {x}, outside its domain")));
            }
            values.push(x);
        }
        if words.iter().zip(&used).any(|(w, u)| w & !u != 0) {
            return Err(Error::Corrupt("nonzero padding bits".into()));
        }
        Ok(values)
    }
}

fn next_fit(domains: &[u64], word_bits: u32) -> Vec<Vec<usize>> {
    let mut bins: Vec<Vec<usize>> = Vec::new();
    let mut used = word_bits;
    for (v, &m) in domains.iter().enumerate() {
        let width = bitwidth(m);
        if bins.is_empty() || used + width > word_bits {
            bins.push(Vec::new());
            used = 0;
        }
        bins.last_mut().unwrap().push(v);
        used += width;
    }
    bins
}

// ---------------------------------------------------------------------------
// Sparse propositional

struct BitWriter {
    bytes: Vec<u8>,
    len: usize,
}

impl BitWriter {
    fn new() -> Self {
        Self { bytes: Vec::new(), len: 0 }
    }

    fn push(&mut self, value: u64, bits: u32) {
        let mut value = value & low_mask(bits);
        let mut left = bits as usize;
        while left > 0 {
            let used = self.len % 8;
            if used == 0 {
                self.bytes.push(0);
            }
            let take = (8 - used).min(left);
            *self.bytes.last_mut().unwrap() |= ((value & low_mask(take as u32)) as u8) << used;
            value = value.checked_shr(take as u32).unwrap_or(0);
            self.len += take;
            left -= take;
        }
    }
}

struct BitReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl BitReader<'_> {
    /// Caller guarantees `bits` remain.
    fn read(&mut self, bits: u32) -> u64 {
        let mut out = 0u64;
        let mut got = 0usize;
        while got < bits as usize {
            let byte = self.bytes[self.pos / 8] as u64;
            let used = self.pos % 8;
            let take = (8 - used).min(bits as usize - got);
            out |= ((byte >> used) & low_mask(take as u32)) << got;
            got += take;
            self.pos += take;
        }
        out
    }
}

/// A sparse state: header byte `b`, then the atom count and each ascending
/// atom index in `b` bits, LSB first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SparseBits {
    pub bytes: Vec<u8>,
    pub bit_len: usize,
}

/// Field width for a sparse state: the bit length of `max(count, largest)`,
/// at least 1.
pub fn sparse_width(count: u64, largest: u64) -> u32 {
    bit_length(count.max(largest)).max(1)
}

/// Total bits of a sparse state with field width `b`.
pub fn sparse_bit_len(width: u32, count: u64) -> u64 {
    8 + width as u64 * (1 + count)
}

pub fn encode_sparse(atoms: &[u64]) -> Result<SparseBits> {
    if atoms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Validation("sparse atoms must be strictly ascending".into()));
    }
    let b = sparse_width(atoms.len() as u64, atoms.last().copied().unwrap_or(0));
    let mut w = BitWriter::new();
    w.push(b as u64, 8);
    w.push(atoms.len() as u64, b);
    for &a in atoms {
        w.push(a, b);
    }
    debug_assert_eq!(w.len as u64, sparse_bit_len(b, atoms.len() as u64));
    Ok(SparseBits { bit_len: w.len, bytes: w.bytes })
}

/// Inverse of [`encode_sparse`]. Rejects anything the encoder would not
/// produce, including trailing bytes.
pub fn decode_sparse(bytes: &[u8]) -> Result<Vec<u64>> {
    let corrupt = |m: &str| Err(Error::Corrupt(format!("sparse state: {m}")));
    let Some(&b) = bytes.first() else {
        return corrupt("missing header");
    };
    let b = b as u32;
    if !(1..=64).contains(&b) {
        return corrupt("field width out of range");
    }
    let avail = bytes.len() * 8;
    if avail < 8 + b as usize {
        return corrupt("truncated count");
    }
    let mut r = BitReader { bytes, pos: 8 };
    let count = r.read(b);
    let total = 8u128 + b as u128 * (1 + count as u128);
    if total.div_ceil(8) != bytes.len() as u128 {
        return corrupt("length does not match count");
    }
    let mut atoms = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let a = r.read(b);
        if atoms.last().is_some_and(|&p| p >= a) {
            return corrupt("indices not ascending");
        }
        atoms.push(a);
    }
    if b != sparse_width(count, atoms.last().copied().unwrap_or(0)) {
        return corrupt("non-canonical field width");
    }
    let rest = avail - r.pos;
    if rest > 0 && r.read(rest as u32) != 0 {
        return corrupt("nonzero padding bits");
    }
    Ok(atoms)
}

// ---------------------------------------------------------------------------
// Dense numeric

pub fn encode_numeric(values: &[f64], out: &mut Vec<u8>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

pub fn decode_numeric(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return Err(Error::Corrupt(format!("numeric block of {} bytes", bytes.len())));
    }
    Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
}

// ---------------------------------------------------------------------------
// Codec

/// How a state becomes a tree-database sequence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SequenceCodec {
    /// The layout's packed words.
    #[default]
    FdrWords,
    /// The ascending indices of true atoms.
    SparseAtoms,
}

impl FromStr for SequenceCodec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fdr" => Ok(Self::FdrWords),
            "sparse" => Ok(Self::SparseAtoms),
            _ => Err(Error::Validation(format!("unknown codec `{s}` (expected fdr or sparse)"))),
        }
    }
}

impl fmt::Display for SequenceCodec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::FdrWords => "fdr",
            Self::SparseAtoms => "sparse",
        })
    }
}

/// Task-specific encoding context shared by all backends of a run.
#[derive(Clone, Debug)]
pub struct StateCodec {
    fdr: FdrCompilation,
    layout: FdrLayout,
    numeric_count: usize,
}

impl StateCodec {
    pub fn new(task: &GroundedTask, layout: FdrLayout) -> Result<Self> {
        let fdr = task.fdr();
        if layout.domains() != fdr.domains().as_slice() {
            return Err(Error::Validation("layout does not match the task's FDR variables".into()));
        }
        Ok(Self { fdr, layout, numeric_count: task.numeric_vars.len() })
    }

    /// Codec with variables packed in their FDR order.
    pub fn with_input_order(task: &GroundedTask, word_bits: u32) -> Result<Self> {
        Self::new(task, FdrLayout::sequential(&task.fdr().domains(), word_bits)?)
    }

    pub fn fdr(&self) -> &FdrCompilation {
        &self.fdr
    }

    pub fn layout(&self) -> &FdrLayout {
        &self.layout
    }

    pub fn word_bits(&self) -> u32 {
        self.layout.word_bits()
    }

    pub fn numeric_count(&self) -> usize {
        self.numeric_count
    }

    /// FDR values of a state after checking it belongs to the task.
    pub fn values(&self, s: &State) -> Result<Vec<u64>> {
        if s.numeric().len() != self.numeric_count {
            return Err(Error::Validation(format!(
                "state has {} numeric values, task has {}",
                s.numeric().len(),
                self.numeric_count
            )));
        }
        for &v in s.numeric() {
            check_numeric(v)?;
        }
        self.fdr.values(s)
    }

    pub fn state_from_values(&self, values: &[u64], numeric: Vec<f64>) -> Result<State> {
        Ok(State::from_sorted(self.fdr.atoms(values)?, numeric))
    }

    pub fn state_to_sequence(
        &self,
        s: &State,
        codec: SequenceCodec,
        numeric: &mut NumericLeafStore,
    ) -> Result<Vec<u64>> {
        let values = self.values(s)?;
        let mut seq = match codec {
            SequenceCodec::FdrWords => self.layout.pack(&values)?,
            SequenceCodec::SparseAtoms => s.atoms().iter().map(|&a| a as u64).collect(),
        };
        for &v in s.numeric() {
            seq.push(numeric.intern(v)?);
        }
        Ok(seq)
    }

    pub fn sequence_to_state(
        &self,
        seq: &[u64],
        codec: SequenceCodec,
        numeric: &NumericLeafStore,
    ) -> Result<State> {
        let Some(split) = seq.len().checked_sub(self.numeric_count) else {
            return Err(Error::Corrupt(format!("sequence of length {} is too short", seq.len())));
        };
        let nums = seq[split..].iter().map(|&id| numeric.value_of(id)).collect::<Result<Vec<_>>>()?;
        match codec {
            SequenceCodec::FdrWords => {
                let values = self.layout.unpack(&seq[..split])?;
                self.state_from_values(&values, nums)
            }
            SequenceCodec::SparseAtoms => {
                let atoms = seq[..split]
                    .iter()
                    .map(|&a| {
                        AtomId::try_from(a)
                            .ok()
                            .filter(|&a| (a as usize) < self.fdr.atom_count())
                            .ok_or_else(|| Error::Corrupt(format!("unknown atom {a}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if atoms.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::Corrupt("atoms not ascending".into()));
                }
                let s = State::from_sorted(atoms, nums);
                self.fdr.values(&s).map_err(|e| Error::Corrupt(e.to_string()))?;
                Ok(s)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Backends

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BackendKind {
    HashsetUnpacked,
    HashsetPacked,
    HashsetSparse,
    DtdbS,
    DtdbH,
}

impl BackendKind {
    pub const ALL: [BackendKind; 5] = [
        BackendKind::HashsetUnpacked,
        BackendKind::HashsetPacked,
        BackendKind::HashsetSparse,
        BackendKind::DtdbS,
        BackendKind::DtdbH,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BackendKind::HashsetUnpacked => "hashset-unpacked",
            BackendKind::HashsetPacked => "hashset-packed",
            BackendKind::HashsetSparse => "hashset-sparse",
            BackendKind::DtdbS => "dtdb-s",
            BackendKind::DtdbH => "dtdb-h",
        }
    }
}

impl FromStr for BackendKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown backend `{s}`")))
    }
}

impl fmt::Display for BackendKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Settings shared by every backend kind.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct BackendConfig {
    pub tree: TreeConfig,
    pub sequence: SequenceCodec,
}

/// A deduplicating store of states with dense indices.
pub trait StateSet {
    fn kind(&self) -> BackendKind;

    /// Index of `s` and whether it was not stored before.
    fn insert(&mut self, s: &State) -> Result<(StateIndex, bool)>;

    fn lookup(&self, index: StateIndex) -> Result<State>;

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Accounted size of the stored representation in bytes.
    fn rep_bytes(&self) -> u64;

    fn peak_rep_bytes(&self) -> u64;

    /// Tree nodes, or 0 for hash-set baselines.
    fn node_count(&self) -> usize;
}

pub fn make_backend(
    kind: BackendKind,
    codec: Arc<StateCodec>,
    config: BackendConfig,
) -> Result<Box<dyn StateSet>> {
    if config.tree.word_bits != codec.word_bits() {
        return Err(Error::Validation(format!(
            "backend word size {} differs from layout word size {}",
            config.tree.word_bits,
            codec.word_bits()
        )));
    }
    Ok(match kind {
        BackendKind::HashsetUnpacked | BackendKind::HashsetPacked | BackendKind::HashsetSparse => {
            Box::new(HashsetBackend::new(kind, codec, config.tree)?)
        }
        BackendKind::DtdbS | BackendKind::DtdbH => {
            let variant = if kind == BackendKind::DtdbS { Variant::Stable } else { Variant::HashId };
            Box::new(TreeBackend {
                kind,
                db: TreeDatabase::new(variant, config.tree),
                codec,
                sequence: config.sequence,
            })
        }
    })
}

/// Byte payloads in an arena, deduplicated through a flat index of ids.
///
/// Capacities are tracked logically and grow by the configured factor so the
/// accounting does not depend on the allocator.
#[derive(Clone, Debug)]
struct PayloadSet {
    arena: Vec<u8>,
    arena_capacity: usize,
    /// Fixed payload size, or `None` for variable-size payloads.
    stride: Option<usize>,
    /// (byte offset, bit length) per id for variable-size payloads.
    directory: Vec<(usize, usize)>,
    directory_capacity: usize,
    index: RawTable<u32>,
    hasher: WordHasher,
    config: TableConfig,
    word_bytes: u64,
}

impl PayloadSet {
    fn new(stride: Option<usize>, tree: TreeConfig) -> Result<Self> {
        let config = TableConfig::new(tree.seed, tree.growth, tree.word_bits)?;
        let arena_capacity = match stride {
            Some(s) => s * INITIAL_CAPACITY,
            None => 8 * INITIAL_CAPACITY,
        };
        Ok(Self {
            arena: Vec::new(),
            arena_capacity,
            stride,
            directory: Vec::new(),
            directory_capacity: if stride.is_some() { 0 } else { INITIAL_CAPACITY },
            index: RawTable::with_capacity(INITIAL_CAPACITY),
            hasher: config.hasher(),
            config,
            word_bytes: tree.word_bytes(),
        })
    }

    fn len(&self) -> usize {
        self.index.len()
    }

    fn get(&self, id: u32) -> Option<(&[u8], usize)> {
        let id = id as usize;
        if id >= self.len() {
            return None;
        }
        Some(match self.stride {
            Some(s) => (&self.arena[id * s..(id + 1) * s], s * 8),
            None => {
                let (off, bits) = self.directory[id];
                (&self.arena[off..off + bits.div_ceil(8)], bits)
            }
        })
    }

    fn insert(&mut self, payload: &[u8], bits: usize) -> Result<(u32, bool)> {
        let hash = self.hasher.hash_bytes(payload);
        let probe = {
            let (arena, stride, dir) = (&self.arena, self.stride, &self.directory);
            self.index.probe(hash, |&id| {
                let id = id as usize;
                match stride {
                    Some(s) => &arena[id * s..(id + 1) * s] == payload,
                    None => {
                        let (off, b) = dir[id];
                        b == bits && &arena[off..off + b.div_ceil(8)] == payload
                    }
                }
            })
        };
        let slot = match probe {
            Probe::Found(slot) => return Ok((*self.index.get(slot).unwrap(), false)),
            Probe::Vacant(slot) => slot,
        };
        let id = u32::try_from(self.len())
            .ok()
            .filter(|&id| id < u32::MAX)
            .ok_or(Error::IndexSpaceExhausted { bits: 32 })?;
        let growth = self.config.growth as usize;
        let need = self.arena.len() + payload.len();
        while self.arena_capacity < need {
            self.arena_capacity = (self.arena_capacity * growth).max(1);
        }
        if self.stride.is_none() {
            if self.directory.len() == self.directory_capacity {
                self.directory_capacity *= growth;
            }
            self.directory.push((self.arena.len(), bits));
        }
        self.arena.extend_from_slice(payload);
        if self.index.has_room() {
            self.index.occupy(slot, hash, id);
        } else {
            let cap = self.config.grown(self.index.capacity())?;
            let (arena, stride, dir, hasher) = (&self.arena, self.stride, &self.directory, &self.hasher);
            let bytes_of = |id: u32| -> &[u8] {
                let id = id as usize;
                match stride {
                    Some(s) => &arena[id * s..(id + 1) * s],
                    None => {
                        let (off, b) = dir[id];
                        &arena[off..off + b.div_ceil(8)]
                    }
                }
            };
            self.index = self.index.rehashed(cap, |&id| hasher.hash_bytes(bytes_of(id)));
            self.index.insert_unique(hash, id);
        }
        Ok((id, true))
    }

    fn accounted_bytes(&self) -> u64 {
        let wb = self.word_bytes;
        self.arena_capacity as u64
            + self.directory_capacity as u64 * 2 * wb
            + self.index.capacity() as u64 * (wb + 1)
    }
}

/// The three hash-set baselines over one payload arena.
struct HashsetBackend {
    kind: BackendKind,
    set: PayloadSet,
    codec: Arc<StateCodec>,
    word_bytes: usize,
    scratch: Vec<u8>,
    peak: u64,
}

impl HashsetBackend {
    fn new(kind: BackendKind, codec: Arc<StateCodec>, tree: TreeConfig) -> Result<Self> {
        let wb = tree.word_bytes() as usize;
        let nn = codec.numeric_count() * 8;
        let stride = match kind {
            BackendKind::HashsetUnpacked => Some(codec.layout().var_count() * wb + nn),
            BackendKind::HashsetPacked => Some(codec.layout().word_count() * wb + nn),
            _ => None,
        };
        let set = PayloadSet::new(stride, tree)?;
        let peak = set.accounted_bytes();
        Ok(Self { kind, set, codec, word_bytes: wb, scratch: Vec::new(), peak })
    }

    fn push_word(out: &mut Vec<u8>, word: u64, wb: usize) {
        out.extend_from_slice(&word.to_le_bytes()[..wb]);
    }

    fn read_word(bytes: &[u8]) -> u64 {
        let mut buf = [0u8; 8];
        buf[..bytes.len()].copy_from_slice(bytes);
        u64::from_le_bytes(buf)
    }
}

impl StateSet for HashsetBackend {
    fn kind(&self) -> BackendKind {
        self.kind
    }

    fn insert(&mut self, s: &State) -> Result<(StateIndex, bool)> {
        let values = self.codec.values(s)?;
        let mut buf = std::mem::take(&mut self.scratch);
        buf.clear();
        let wb = self.word_bytes;
        let bits = match self.kind {
            BackendKind::HashsetUnpacked => {
                for &v in &values {
                    Self::push_word(&mut buf, v, wb);
                }
                encode_numeric(s.numeric(), &mut buf);
                buf.len() * 8
            }
            BackendKind::HashsetPacked => {
                for w in self.codec.layout().pack(&values)? {
                    Self::push_word(&mut buf, w, wb);
                }
                encode_numeric(s.numeric(), &mut buf);
                buf.len() * 8
            }
            _ => {
                let atoms: Vec<u64> = s.atoms().iter().map(|&a| a as u64).collect();
                let sparse = encode_sparse(&atoms)?;
                buf.extend_from_slice(&sparse.bytes);
                encode_numeric(s.numeric(), &mut buf);
                sparse.bytes.len() * 8 + s.numeric().len() * 64
            }
        };
        let out = self.set.insert(&buf, bits);
        self.scratch = buf;
        self.peak = self.peak.max(self.set.accounted_bytes());
        out.map(|(id, new)| (StateIndex(id), new))
    }

    fn lookup(&self, index: StateIndex) -> Result<State> {
        let (bytes, _) = self
            .set
            .get(index.0)
            .ok_or(Error::IndexOutOfRange { index: index.0 as u64, len: self.len() as u64 })?;
        let nn = self.codec.numeric_count() * 8;
        let (head, tail) = bytes.split_at(bytes.len() - nn);
        let numeric = decode_numeric(tail)?;
        let wb = self.word_bytes;
        match self.kind {
            BackendKind::HashsetUnpacked => {
                let values: Vec<u64> = head.chunks_exact(wb).map(Self::read_word).collect();
                self.codec.state_from_values(&values, numeric)
            }
            BackendKind::HashsetPacked => {
                let words: Vec<u64> = head.chunks_exact(wb).map(Self::read_word).collect();
                let values = self.codec.layout().unpack(&words)?;
                self.codec.state_from_values(&values, numeric)
            }
            _ => {
                let atoms = decode_sparse(head)?;
                Ok(State::from_sorted(atoms.into_iter().map(|a| a as AtomId).collect(), numeric))
            }
        }
    }

    fn len(&self) -> usize {
        self.set.len()
    }

    fn rep_bytes(&self) -> u64 {
        self.set.accounted_bytes()
    }

    fn peak_rep_bytes(&self) -> u64 {
        self.peak
    }

    fn node_count(&self) -> usize {
        0
    }
}

/// DTDB-S or DTDB-H over state sequences.
struct TreeBackend {
    kind: BackendKind,
    db: TreeDatabase,
    codec: Arc<StateCodec>,
    sequence: SequenceCodec,
}

impl StateSet for TreeBackend {
    fn kind(&self) -> BackendKind {
        self.kind
    }

    fn insert(&mut self, s: &State) -> Result<(StateIndex, bool)> {
        let seq = self.codec.state_to_sequence(s, self.sequence, self.db.numeric_mut())?;
        self.db.insert(&seq)
    }

    fn lookup(&self, index: StateIndex) -> Result<State> {
        let seq = self.db.lookup(index)?;
        self.codec.sequence_to_state(&seq, self.sequence, self.db.numeric())
    }

    fn len(&self) -> usize {
        self.db.len()
    }

    fn rep_bytes(&self) -> u64 {
        self.db.allocated_bytes()
    }

    fn peak_rep_bytes(&self) -> u64 {
        self.db.peak_bytes()
    }

    fn node_count(&self) -> usize {
        self.db.node_count()
    }
}
