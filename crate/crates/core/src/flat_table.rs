//! Open-addressing hash tables with control-byte fingerprints.
//!
//! Every table keeps a parallel array of control bytes next to its slots.
//! An occupied slot's control byte holds the top 7 bits of the key's hash
//! (high bit clear); an empty slot holds [`EMPTY`]. Probing starts at
//! `hash mod capacity` and walks forward with wraparound. A full key
//! comparison only happens when the control byte matches the fingerprint.
//!
//! Three structures are built on [`RawTable`]:
//!
//! * [`FlatTable`] stores keys directly and reports the slot of each key.
//! * [`StableIndexedSet`] appends keys to a dense array and indexes them
//!   through a table of positions, so indices are insertion-ordered and
//!   never change.
//! * [`HashIdSet`] stores keys directly and uses the slot as the key's id.
//!   Ids are only stable between resizes, and the owner decides how a resize
//!   happens.
//!
//! Capacities are powers of two and the load factor never exceeds 7/8.

use crate::{Error, Result};

/// Control byte of a slot that has never held a key.
pub const EMPTY: u8 = 0x80;
/// Reserved for tombstones. Nothing deletes, so no slot ever holds it.
pub const DELETED: u8 = 0xFE;

pub const INITIAL_CAPACITY: usize = 16;
pub const DEFAULT_SEED: u64 = 0x2545_f491_4f6c_dd1d;

const MIX: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn fmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded 64-bit hash over machine words.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WordHasher {
    seed: u64,
}

impl WordHasher {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn hash_word(&self, word: u64) -> u64 {
        fmix64(fmix64(self.seed ^ word).wrapping_add(MIX))
    }

    #[inline]
    pub fn hash_pair(&self, a: u64, b: u64) -> u64 {
        let h = fmix64(self.seed ^ a).wrapping_add(MIX);
        fmix64(fmix64(h ^ b).wrapping_add(MIX))
    }

    pub fn hash_words(&self, words: &[u64]) -> u64 {
        let mut h = self.seed ^ (words.len() as u64).wrapping_mul(MIX);
        for &w in words {
            h = fmix64(h ^ w).wrapping_add(MIX);
        }
        fmix64(h)
    }

    pub fn hash_bytes(&self, bytes: &[u8]) -> u64 {
        let mut h = self.seed ^ (bytes.len() as u64).wrapping_mul(MIX);
        let mut chunks = bytes.chunks_exact(8);
        for chunk in &mut chunks {
            let w = u64::from_le_bytes(chunk.try_into().unwrap());
            h = fmix64(h ^ w).wrapping_add(MIX);
        }
        let rest = chunks.remainder();
        if !rest.is_empty() {
            let mut buf = [0u8; 8];
            buf[..rest.len()].copy_from_slice(rest);
            h = fmix64(h ^ u64::from_le_bytes(buf)).wrapping_add(MIX);
        }
        fmix64(h)
    }
}

impl Default for WordHasher {
    fn default() -> Self {
        Self::new(DEFAULT_SEED)
    }
}

/// Top 7 bits of the hash.
#[inline]
pub fn fingerprint(hash: u64) -> u8 {
    (hash >> 57) as u8
}

/// Largest occupied-slot count allowed for a capacity: `⌊7c/8⌋`.
#[inline]
pub fn max_load(capacity: usize) -> usize {
    (capacity as u128 * 7 / 8) as usize
}

/// A key that can live in a flat table.
pub trait FlatKey: Copy + Eq + Default {
    fn hash_with(&self, hasher: &WordHasher) -> u64;
}

impl FlatKey for u64 {
    #[inline]
    fn hash_with(&self, hasher: &WordHasher) -> u64 {
        hasher.hash_word(*self)
    }
}

impl FlatKey for u32 {
    #[inline]
    fn hash_with(&self, hasher: &WordHasher) -> u64 {
        hasher.hash_word(*self as u64)
    }
}

impl FlatKey for (u64, u64) {
    #[inline]
    fn hash_with(&self, hasher: &WordHasher) -> u64 {
        hasher.hash_pair(self.0, self.1)
    }
}

/// Shared sizing parameters for every table in one structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TableConfig {
    pub seed: u64,
    /// Capacity multiplier on growth; a power of two, at least 2.
    pub growth: u32,
    /// Width of ids handed out by the structure; bounds capacity at `2^bits`.
    pub index_bits: u32,
}

impl TableConfig {
    pub fn new(seed: u64, growth: u32, index_bits: u32) -> Result<Self> {
        if growth < 2 || !growth.is_power_of_two() {
            return Err(Error::Validation(format!(
                "growth factor must be a power of two >= 2, got {growth}"
            )));
        }
        if !(1..=64).contains(&index_bits) {
            return Err(Error::Validation(format!("index width {index_bits} not in 1..=64")));
        }
        Ok(Self { seed, growth, index_bits })
    }

    pub fn hasher(&self) -> WordHasher {
        WordHasher::new(self.seed)
    }

    fn slot_limit(&self) -> u128 {
        1u128 << self.index_bits
    }

    /// Next capacity after `capacity`, or `TableFull` if it would not be addressable.
    pub fn grown(&self, capacity: usize) -> Result<usize> {
        let next = capacity as u128 * self.growth as u128;
        if next > self.slot_limit() || next > usize::MAX as u128 {
            return Err(Error::TableFull { capacity, bits: self.index_bits });
        }
        Ok(next as usize)
    }
}

impl Default for TableConfig {
    fn default() -> Self {
        Self { seed: DEFAULT_SEED, growth: 2, index_bits: 32 }
    }
}

/// Result of probing for a key.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Probe {
    Found(usize),
    /// First empty slot on the probe path.
    Vacant(usize),
}

/// Control bytes plus slots, with no policy about hashing or growth.
#[derive(Clone, Debug)]
pub struct RawTable<V> {
    ctrl: Vec<u8>,
    slots: Vec<V>,
    len: usize,
}

impl<V: Copy + Default> RawTable<V> {
    pub fn with_capacity(capacity: usize) -> Self {
        assert!(capacity.is_power_of_two(), "capacity {capacity} is not a power of two");
        Self { ctrl: vec![EMPTY; capacity], slots: vec![V::default(); capacity], len: 0 }
    }

    #[inline]
    pub fn capacity(&self) -> usize {
        self.ctrl.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// True if one more key fits without exceeding 7/8 load.
    #[inline]
    pub fn has_room(&self) -> bool {
        self.len < max_load(self.capacity())
    }

    #[inline]
    pub fn control(&self, slot: usize) -> u8 {
        self.ctrl[slot]
    }

    #[inline]
    pub fn get(&self, slot: usize) -> Option<&V> {
        match self.ctrl.get(slot) {
            Some(&c) if c & 0x80 == 0 => Some(&self.slots[slot]),
            _ => None,
        }
    }

    /// Walks the probe path of `hash`, comparing keys only on fingerprint match.
    #[inline]
    pub fn probe(&self, hash: u64, mut eq: impl FnMut(&V) -> bool) -> Probe {
        let mask = self.capacity() - 1;
        let fp = fingerprint(hash);
        let mut i = hash as usize & mask;
        // Load < 1 guarantees an empty slot within `capacity` steps.
        loop {
            let c = self.ctrl[i];
            if c == EMPTY {
                return Probe::Vacant(i);
            }
            if c == fp && eq(&self.slots[i]) {
                return Probe::Found(i);
            }
            i = (i + 1) & mask;
        }
    }

    #[inline]
    pub fn find(&self, hash: u64, eq: impl FnMut(&V) -> bool) -> Option<usize> {
        match self.probe(hash, eq) {
            Probe::Found(i) => Some(i),
            Probe::Vacant(_) => None,
        }
    }

    /// Fills a vacant slot returned by [`probe`](Self::probe).
    #[inline]
    pub fn occupy(&mut self, slot: usize, hash: u64, value: V) {
        debug_assert_eq!(self.ctrl[slot], EMPTY);
        self.ctrl[slot] = fingerprint(hash);
        self.slots[slot] = value;
        self.len += 1;
    }

    /// Inserts a value known to be absent, probing for the first empty slot.
    pub fn insert_unique(&mut self, hash: u64, value: V) -> usize {
        let slot = match self.probe(hash, |_| false) {
            Probe::Vacant(s) => s,
            Probe::Found(_) => unreachable!(),
        };
        self.occupy(slot, hash, value);
        slot
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, &V)> + '_ {
        self.ctrl
            .iter()
            .zip(&self.slots)
            .enumerate()
            .filter(|(_, (c, _))| **c & 0x80 == 0)
            .map(|(i, (_, v))| (i, v))
    }

    /// Copies every value into a fresh table of `capacity` slots.
    pub fn rehashed(&self, capacity: usize, hash: impl Fn(&V) -> u64) -> Self {
        let mut next = Self::with_capacity(capacity);
        for (_, v) in self.iter() {
            next.insert_unique(hash(v), *v);
        }
        next
    }
}

/// Open-addressing set whose keys live directly in the slots.
#[derive(Clone, Debug)]
pub struct FlatTable<K> {
    raw: RawTable<K>,
    hasher: WordHasher,
    config: TableConfig,
    growths: usize,
}

impl<K: FlatKey> FlatTable<K> {
    pub fn new(config: TableConfig) -> Self {
        Self { raw: RawTable::with_capacity(INITIAL_CAPACITY), hasher: config.hasher(), config, growths: 0 }
    }

    /// Returns the key's slot and whether it was newly inserted. Grows first
    /// when a new key would push the load above 7/8.
    pub fn insert(&mut self, key: K) -> Result<(usize, bool)> {
        let hash = key.hash_with(&self.hasher);
        loop {
            match self.raw.probe(hash, |k| *k == key) {
                Probe::Found(s) => return Ok((s, false)),
                Probe::Vacant(s) if self.raw.has_room() => {
                    self.raw.occupy(s, hash, key);
                    return Ok((s, true));
                }
                Probe::Vacant(_) => self.grow()?,
            }
        }
    }

    pub fn find(&self, key: &K) -> Option<usize> {
        self.raw.find(key.hash_with(&self.hasher), |k| k == key)
    }

    pub fn contains(&self, key: &K) -> bool {
        self.find(key).is_some()
    }

    pub fn get(&self, slot: usize) -> Option<K> {
        self.raw.get(slot).copied()
    }

    pub fn control(&self, slot: usize) -> u8 {
        self.raw.control(slot)
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.raw.capacity()
    }

    pub fn growths(&self) -> usize {
        self.growths
    }

    pub fn load_factor(&self) -> f64 {
        self.len() as f64 / self.capacity() as f64
    }

    pub fn hasher(&self) -> &WordHasher {
        &self.hasher
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, K)> + '_ {
        self.raw.iter().map(|(i, k)| (i, *k))
    }

    fn grow(&mut self) -> Result<()> {
        let cap = self.config.grown(self.capacity())?;
        let hasher = self.hasher;
        self.raw = self.raw.rehashed(cap, |k| k.hash_with(&hasher));
        self.growths += 1;
        Ok(())
    }
}

/// Indexed set with insertion-ordered, permanent indices.
///
/// Keys are appended to a dense array; a [`RawTable`] of array positions
/// provides the reverse mapping. The array grows by the configured factor
/// when full.
#[derive(Clone, Debug)]
pub struct StableIndexedSet<K> {
    keys: Vec<K>,
    key_capacity: usize,
    index: RawTable<u32>,
    hasher: WordHasher,
    config: TableConfig,
}

impl<K: FlatKey> StableIndexedSet<K> {
    pub fn new(config: TableConfig) -> Self {
        Self {
            keys: Vec::with_capacity(INITIAL_CAPACITY),
            key_capacity: INITIAL_CAPACITY,
            index: RawTable::with_capacity(INITIAL_CAPACITY),
            hasher: config.hasher(),
            config,
        }
    }

    pub fn insert(&mut self, key: K) -> Result<(u32, bool)> {
        let hash = key.hash_with(&self.hasher);
        loop {
            let keys = &self.keys;
            match self.index.probe(hash, |&p| keys[p as usize] == key) {
                Probe::Found(s) => return Ok((self.index.slots[s], false)),
                Probe::Vacant(s) if self.index.has_room() => {
                    let pos = self.push_key(key)?;
                    self.index.occupy(s, hash, pos);
                    return Ok((pos, true));
                }
                Probe::Vacant(_) => self.grow_index()?,
            }
        }
    }

    pub fn find(&self, key: &K) -> Option<u32> {
        let keys = &self.keys;
        self.index
            .find(key.hash_with(&self.hasher), |&p| keys[p as usize] == *key)
            .map(|s| self.index.slots[s])
    }

    #[inline]
    pub fn key_of(&self, index: u32) -> Option<&K> {
        self.keys.get(index as usize)
    }

    pub fn keys(&self) -> &[K] {
        &self.keys
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Slots reserved in the dense key array.
    pub fn key_capacity(&self) -> usize {
        self.key_capacity
    }

    pub fn index_capacity(&self) -> usize {
        self.index.capacity()
    }

    /// Capacity-based size: key array plus one `word_bytes` position and one
    /// control byte per index slot.
    pub fn accounted_bytes(&self, key_bytes: u64, word_bytes: u64) -> u64 {
        self.key_capacity as u64 * key_bytes + self.index.capacity() as u64 * (word_bytes + 1)
    }

    /// Rewrites keys in place, then rebuilds the index at the same capacity.
    /// Indices are preserved; rewritten keys must stay pairwise distinct.
    pub fn rewrite_keys(&mut self, mut f: impl FnMut(u32, &mut K)) -> Result<()> {
        for (i, k) in self.keys.iter_mut().enumerate() {
            f(i as u32, k);
        }
        let mut index = RawTable::with_capacity(self.index.capacity());
        for (pos, key) in self.keys.iter().enumerate() {
            let hash = key.hash_with(&self.hasher);
            let keys = &self.keys;
            match index.probe(hash, |&p| keys[p as usize] == *key) {
                Probe::Vacant(s) => index.occupy(s, hash, pos as u32),
                Probe::Found(_) => {
                    return Err(Error::Corrupt(format!("rewritten key at {pos} is a duplicate")))
                }
            }
        }
        self.index = index;
        Ok(())
    }

    fn push_key(&mut self, key: K) -> Result<u32> {
        let pos = self.keys.len();
        let limit = 1u64.checked_shl(self.config.index_bits.min(32)).unwrap_or(u64::MAX);
        if pos as u64 >= limit {
            return Err(Error::IndexSpaceExhausted { bits: self.config.index_bits.min(32) });
        }
        if pos == self.key_capacity {
            self.key_capacity = self.key_capacity.saturating_mul(self.config.growth as usize);
            self.keys.reserve_exact(self.key_capacity - pos);
        }
        self.keys.push(key);
        Ok(pos as u32)
    }

    fn grow_index(&mut self) -> Result<()> {
        let cap = self.config.grown(self.index.capacity())?;
        let (keys, hasher) = (&self.keys, self.hasher);
        self.index = self.index.rehashed(cap, |&p| keys[p as usize].hash_with(&hasher));
        Ok(())
    }
}

/// Indexed set whose id for a key is the slot holding it.
///
/// [`insert`](Self::insert) grows by plain rehashing, which moves ids.
/// Owners that keep ids inside other keys use
/// [`try_insert`](Self::try_insert) and relocate on their own terms.
#[derive(Clone, Debug)]
pub struct HashIdSet<K> {
    table: RawTable<K>,
    hasher: WordHasher,
    config: TableConfig,
}

impl<K: FlatKey> HashIdSet<K> {
    pub fn new(config: TableConfig) -> Self {
        Self::with_capacity(config, INITIAL_CAPACITY)
    }

    pub fn with_capacity(config: TableConfig, capacity: usize) -> Self {
        Self { table: RawTable::with_capacity(capacity), hasher: config.hasher(), config }
    }

    /// Inserts without growing; `None` means a new key would exceed 7/8
    /// load and nothing was changed.
    #[inline]
    pub fn try_insert(&mut self, key: K) -> Option<(u64, bool)> {
        let hash = key.hash_with(&self.hasher);
        match self.table.probe(hash, |k| *k == key) {
            Probe::Found(s) => Some((s as u64, false)),
            Probe::Vacant(s) if self.table.has_room() => {
                self.table.occupy(s, hash, key);
                Some((s as u64, true))
            }
            Probe::Vacant(_) => None,
        }
    }

    /// Inserts, rehashing into a larger table when needed. Ids of all keys
    /// may change when that happens.
    pub fn insert(&mut self, key: K) -> Result<(u64, bool)> {
        loop {
            if let Some(r) = self.try_insert(key) {
                return Ok(r);
            }
            let cap = self.grown_capacity()?;
            let hasher = self.hasher;
            self.table = self.table.rehashed(cap, |k| k.hash_with(&hasher));
        }
    }

    pub fn find(&self, key: &K) -> Option<u64> {
        self.table.find(key.hash_with(&self.hasher), |k| k == key).map(|s| s as u64)
    }

    #[inline]
    pub fn key_of(&self, id: u64) -> Result<K> {
        usize::try_from(id).ok().and_then(|s| self.table.get(s)).copied().ok_or(Error::EmptySlot { id })
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.table.capacity()
    }

    pub fn config(&self) -> TableConfig {
        self.config
    }

    pub fn grown_capacity(&self) -> Result<usize> {
        self.config.grown(self.capacity())
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, K)> + '_ {
        self.table.iter().map(|(i, k)| (i as u64, *k))
    }

    /// Key bytes plus one control byte per slot.
    pub fn accounted_bytes(&self, key_bytes: u64) -> u64 {
        self.capacity() as u64 * (key_bytes + 1)
    }
}
