//! Every subgroup size in a range.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::ops::RangeInclusive;

use crate::cost::SubgroupLadder;
use crate::error::Result;
use crate::index::{AccessCounters, IrTree, NodeBody, PageId};

use super::single::best_first;
use super::topk::TopK;
use super::{PopEvent, PoppedItem, PreparedGroup, ResultEntry};

/// One best-first pass per size.
pub(crate) fn repeated(
    tree: &IrTree,
    group: &PreparedGroup,
    sizes: RangeInclusive<usize>,
    k: usize,
    prune: bool,
    counters: &mut AccessCounters,
    mut trace: Option<&mut Vec<PopEvent>>,
) -> Result<Vec<ResultEntry>> {
    let mut out = Vec::new();
    for size in sizes {
        out.extend(best_first(tree, group, size, k, prune, counters, trace.as_deref_mut())?);
    }
    Ok(out)
}

struct Queued {
    key: f64,
    page_id: PageId,
    /// Best-subgroup bound per size; only the smallest size when relaxed.
    bounds: Vec<f64>,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.total_cmp(&other.key).then(self.page_id.cmp(&other.page_id))
    }
}

/// True when some size could still improve its result list. Relaxed: the
/// smallest-size bound against the largest size's k-th best.
fn promising(bounds: &[f64], best: &[TopK], relaxed: bool) -> bool {
    if relaxed {
        bounds[0] < best[best.len() - 1].threshold()
    } else {
        bounds.iter().zip(best).any(|(b, t)| *b < t.threshold())
    }
}

/// A single best-first pass that fills the result lists of all sizes.
#[allow(clippy::too_many_arguments)]
pub(crate) fn single_pass(
    tree: &IrTree,
    group: &PreparedGroup,
    sizes: RangeInclusive<usize>,
    k: usize,
    relaxed: bool,
    prune: bool,
    counters: &mut AccessCounters,
    mut trace: Option<&mut Vec<PopEvent>>,
) -> Result<Vec<ResultEntry>> {
    let n = group.len();
    let sizes: Vec<usize> = sizes.collect();
    let mut best: Vec<TopK> = sizes.iter().map(|_| TopK::new(k)).collect();
    let bound_count = if relaxed { 1 } else { sizes.len() };
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Queued {
        key: 0.0,
        page_id: tree.root_page(),
        bounds: vec![0.0; bound_count],
    }));
    counters.nodes_enqueued += 1;
    while let Some(Reverse(item)) = heap.pop() {
        if let Some(t) = trace.as_deref_mut() {
            t.push(PopEvent {
                key: item.key,
                item: PoppedItem::Node { page_id: item.page_id },
            });
        }
        if prune && !promising(&item.bounds, &best, relaxed) {
            counters.nodes_pruned += 1;
            continue;
        }
        let node = tree.read_node(item.page_id, counters)?;
        match &node.body {
            NodeBody::Interior { children, keywords } => {
                let costs = group.score_children(children, keywords);
                for (slot, child) in children.iter().enumerate() {
                    let ladder = SubgroupLadder::new(&costs[slot * n..(slot + 1) * n], group.aggregate);
                    let bounds: Vec<f64> = sizes[..bound_count].iter().map(|&s| ladder.aggregate(s)).collect();
                    if prune && !promising(&bounds, &best, relaxed) {
                        counters.nodes_pruned += 1;
                        continue;
                    }
                    let key = if relaxed { bounds[0] } else { bounds.iter().sum() };
                    heap.push(Reverse(Queued {
                        key,
                        page_id: child.page_id,
                        bounds,
                    }));
                    counters.nodes_enqueued += 1;
                }
            }
            NodeBody::Leaf { objects, .. } => {
                let inv = tree.read_postings(&node, counters)?;
                let costs = group.score_objects(objects, inv.table());
                for (slot, entry) in objects.iter().enumerate() {
                    counters.objects_scored += 1;
                    let ladder = SubgroupLadder::new(&costs[slot * n..(slot + 1) * n], group.aggregate);
                    for (&size, list) in sizes.iter().zip(best.iter_mut()) {
                        list.offer(ladder.aggregate(size), entry.id, || ladder.members(size));
                    }
                }
            }
        }
    }
    Ok(sizes
        .iter()
        .zip(best)
        .flat_map(|(&size, list)| list.into_entries(size))
        .collect())
}
