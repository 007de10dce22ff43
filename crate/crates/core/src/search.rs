//! Uniform-cost search over a [`StateSet`].
//!
//! States live only in the state set; the open list holds state indices and
//! each expansion decodes its state with `lookup`.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::encoding::StateSet;
use crate::task::GroundedTask;
use crate::treedb::StateIndex;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SearchStatus {
    Solved,
    Exhausted,
    Limit,
}

impl fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Solved => "SOLVED",
            Self::Exhausted => "EXHAUSTED",
            Self::Limit => "LIMIT",
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_expansions: Option<u64>,
    /// Bound on the state set's accounted size.
    pub max_bytes: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchResult {
    pub status: SearchStatus,
    /// Action names from the initial state to a goal; empty unless solved.
    pub plan: Vec<String>,
    pub plan_cost: Option<u64>,
    pub expanded: u64,
    pub generated: u64,
    pub unique_states: u64,
    pub peak_open_size: u64,
}

const NO_PARENT: u32 = u32::MAX;

#[derive(Clone, Copy)]
struct Link {
    parent: u32,
    action: u32,
    g: u64,
    closed: bool,
}

/// Uniform-cost search with duplicate detection through the state set.
///
/// Open states are grouped by g and expanded FIFO within a group. A cheaper
/// path to an open state re-queues it; the old entry is skipped when popped.
pub fn ucs(task: &GroundedTask, states: &mut dyn StateSet, limits: SearchLimits) -> Result<SearchResult> {
    let mut links: Vec<Link> = Vec::new();
    let mut open: BTreeMap<u64, VecDeque<u32>> = BTreeMap::new();
    let mut open_size = 0u64;
    let mut result = SearchResult {
        status: SearchStatus::Exhausted,
        plan: Vec::new(),
        plan_cost: None,
        expanded: 0,
        generated: 0,
        unique_states: 0,
        peak_open_size: 0,
    };

    let (root, _) = states.insert(&task.initial_state())?;
    links.push(Link { parent: NO_PARENT, action: 0, g: 0, closed: false });
    open.entry(0).or_default().push_back(root.0);
    open_size += 1;
    result.peak_open_size = 1;

    while let Some(mut bucket) = open.first_entry() {
        let g = *bucket.key();
        let id = bucket.get_mut().pop_front().unwrap();
        if bucket.get().is_empty() {
            bucket.remove();
        }
        open_size -= 1;
        let link = links[id as usize];
        if link.closed || link.g < g {
            continue;
        }
        if limits.max_expansions.is_some_and(|m| result.expanded >= m)
            || limits.max_bytes.is_some_and(|m| states.rep_bytes() > m)
        {
            result.status = SearchStatus::Limit;
            break;
        }
        links[id as usize].closed = true;
        let s = states.lookup(StateIndex(id))?;
        if task.is_goal(&s) {
            result.status = SearchStatus::Solved;
            result.plan_cost = Some(g);
            result.plan = plan_to(task, &links, id);
            break;
        }
        result.expanded += 1;
        for a in task.applicable(&s) {
            let next = task.successor(&s, a);
            result.generated += 1;
            let (idx, new) = states.insert(&next)?;
            let ng = g + task.actions[a].cost;
            let link = Link { parent: id, action: a as u32, g: ng, closed: false };
            if new {
                debug_assert_eq!(idx.get(), links.len());
                links.push(link);
            } else {
                let old = &mut links[idx.get()];
                if old.closed || old.g <= ng {
                    continue;
                }
                *old = link;
            }
            open.entry(ng).or_default().push_back(idx.0);
            open_size += 1;
            result.peak_open_size = result.peak_open_size.max(open_size);
        }
    }
    result.unique_states = states.len() as u64;
    Ok(result)
}

fn plan_to(task: &GroundedTask, links: &[Link], mut id: u32) -> Vec<String> {
    let mut plan = Vec::new();
    while links[id as usize].parent != NO_PARENT {
        let l = links[id as usize];
        plan.push(task.actions[l.action as usize].name.clone());
        id = l.parent;
    }
    plan.reverse();
    plan
}
