//! Variable orders that keep variables changed together in the same word.
//!
//! Variables are indexed with all FDR variables first, then the numeric
//! variables in task order. Only FDR variables are packed into bins; numeric
//! variables always follow the last bin.

use std::fmt;
use std::str::FromStr;

use crate::encoding::{bitwidth, FdrLayout};
use crate::task::{Action, FdrCompilation, GroundedTask};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum OrderingKind {
    /// FDR order, packed next-fit.
    #[default]
    Input,
    /// Greedy affinity packing.
    Affinity,
}

impl FromStr for OrderingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "input" => Ok(Self::Input),
            "affinity" => Ok(Self::Affinity),
            _ => Err(Error::Validation(format!("unknown ordering `{s}`"))),
        }
    }
}

impl fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Input => "input",
            Self::Affinity => "affinity",
        })
    }
}

/// Variables written by an action's effects, ascending and deduplicated.
pub fn effect_vars(fdr: &FdrCompilation, action: &Action) -> Vec<usize> {
    let kf = fdr.var_count();
    let mut vars: Vec<usize> = action
        .add
        .iter()
        .chain(&action.del)
        .map(|&a| fdr.var_of(a))
        .chain(action.num_eff.iter().map(|e| kf + e.var))
        .collect();
    vars.sort_unstable();
    vars.dedup();
    vars
}

/// Symmetric count of actions whose effects touch both variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffinityMatrix {
    n: usize,
    counts: Vec<u32>,
}

impl AffinityMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> u32 {
        self.counts[a * self.n + b]
    }

    pub fn row(&self, a: usize) -> &[u32] {
        &self.counts[a * self.n..(a + 1) * self.n]
    }
}

pub fn affinity(task: &GroundedTask, fdr: &FdrCompilation) -> AffinityMatrix {
    let n = fdr.var_count() + task.numeric_vars.len();
    let mut counts = vec![0u32; n * n];
    for a in &task.actions {
        let vars = effect_vars(fdr, a);
        for (i, &x) in vars.iter().enumerate() {
            for &y in &vars[i + 1..] {
                counts[x * n + y] += 1;
                counts[y * n + x] += 1;
            }
        }
    }
    AffinityMatrix { n, counts }
}

/// A permutation of all variables plus the bins of FDR variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VariableOrdering {
    /// FDR variables per bin, in packing order.
    pub bins: Vec<Vec<usize>>,
    /// Variable at each position; the inverse of π.
    pub order: Vec<usize>,
    pub capacity: u32,
}

impl VariableOrdering {
    fn from_bins(bins: Vec<Vec<usize>>, total_vars: usize, capacity: u32) -> Self {
        let mut order: Vec<usize> = bins.iter().flatten().copied().collect();
        let kf = order.len();
        order.extend(kf..total_vars);
        Self { bins, order, capacity }
    }

    /// π: the position of every variable.
    pub fn positions(&self) -> Vec<usize> {
        let mut pi = vec![0; self.order.len()];
        for (p, &v) in self.order.iter().enumerate() {
            pi[v] = p;
        }
        pi
    }

    /// One `word_bits`-bit word per bin.
    pub fn layout(&self, fdr: &FdrCompilation, word_bits: u32) -> Result<FdrLayout> {
        FdrLayout::from_bins(&fdr.domains(), &self.bins, word_bits)
    }
}

fn check_capacity(fdr: &FdrCompilation, capacity: u32) -> Result<()> {
    for v in 0..fdr.var_count() {
        let w = bitwidth(fdr.domain_size(v));
        if w > capacity {
            return Err(Error::Validation(format!(
                "variable {v} needs {w} bits, more than the bin capacity {capacity}"
            )));
        }
    }
    Ok(())
}

/// FDR variables in index order, next-fit into bins of `capacity` bits.
pub fn input_order(task: &GroundedTask, capacity: u32) -> Result<VariableOrdering> {
    let fdr = task.fdr();
    check_capacity(&fdr, capacity)?;
    let mut bins: Vec<Vec<usize>> = Vec::new();
    let mut used = capacity;
    for v in 0..fdr.var_count() {
        let w = bitwidth(fdr.domain_size(v));
        if bins.is_empty() || used + w > capacity {
            bins.push(Vec::new());
            used = 0;
        }
        bins.last_mut().unwrap().push(v);
        used += w;
    }
    Ok(VariableOrdering::from_bins(bins, fdr.var_count() + task.numeric_vars.len(), capacity))
}

/// Greedy bin packing by affinity.
///
/// Each bin is seeded with the unpacked variable of highest total affinity to
/// all FDR variables, then extended with the fitting variable of highest
/// affinity to the bin until nothing fits. Ties go to the larger domain, then
/// the lower index.
pub fn greedy_pack(task: &GroundedTask, capacity: u32) -> Result<VariableOrdering> {
    let fdr = task.fdr();
    check_capacity(&fdr, capacity)?;
    let kf = fdr.var_count();
    let aff = affinity(task, &fdr);
    let domain: Vec<u64> = (0..kf).map(|v| fdr.domain_size(v)).collect();
    let width: Vec<u32> = domain.iter().map(|&m| bitwidth(m)).collect();
    let total: Vec<u64> = (0..kf).map(|v| aff.row(v)[..kf].iter().map(|&x| x as u64).sum()).collect();

    let better = |a: usize, gain_a: u64, b: usize, gain_b: u64| {
        (gain_a, domain[a], std::cmp::Reverse(a)) > (gain_b, domain[b], std::cmp::Reverse(b))
    };

    let mut packed = vec![false; kf];
    let mut left = kf;
    let mut bins = Vec::new();
    let mut gain = vec![0u64; kf];
    while left > 0 {
        let mut seed = None;
        for v in (0..kf).filter(|&v| !packed[v]) {
            if seed.is_none_or(|s| better(v, total[v], s, total[s])) {
                seed = Some(v);
            }
        }
        let seed = seed.unwrap();
        let mut bin = vec![seed];
        let mut used = width[seed];
        packed[seed] = true;
        left -= 1;
        for (v, g) in gain.iter_mut().enumerate() {
            *g = aff.get(v, seed) as u64;
        }
        loop {
            let mut pick = None;
            for v in (0..kf).filter(|&v| !packed[v] && used + width[v] <= capacity) {
                if pick.is_none_or(|p| better(v, gain[v], p, gain[p])) {
                    pick = Some(v);
                }
            }
            let Some(p) = pick else { break };
            bin.push(p);
            used += width[p];
            packed[p] = true;
            left -= 1;
            for (v, g) in gain.iter_mut().enumerate() {
                *g += aff.get(v, p) as u64;
            }
        }
        bins.push(bin);
    }
    Ok(VariableOrdering::from_bins(bins, kf + task.numeric_vars.len(), capacity))
}

pub fn build_ordering(task: &GroundedTask, kind: OrderingKind, capacity: u32) -> Result<VariableOrdering> {
    match kind {
        OrderingKind::Input => input_order(task, capacity),
        OrderingKind::Affinity => greedy_pack(task, capacity),
    }
}

/// Sum over actions of the number of leaf pairs `⌊π(v)/2⌋` their effects touch.
pub fn objective(positions: &[usize], task: &GroundedTask, fdr: &FdrCompilation) -> u64 {
    task.actions
        .iter()
        .map(|a| {
            let mut leaves: Vec<usize> = effect_vars(fdr, a).iter().map(|&v| positions[v] / 2).collect();
            leaves.sort_unstable();
            leaves.dedup();
            leaves.len() as u64
        })
        .sum()
}
