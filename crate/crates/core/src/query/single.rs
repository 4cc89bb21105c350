//! One subgroup size: branch-and-bound and best-first traversals.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::cost::SubgroupLadder;
use crate::error::Result;
use crate::index::{AccessCounters, IrTree, NodeBody, PageId};
use crate::model::ObjectId;

use super::topk::TopK;
use super::{PopEvent, PoppedItem, PreparedGroup, ResultEntry};

pub(crate) fn branch_and_bound(
    tree: &IrTree,
    group: &PreparedGroup,
    size: usize,
    k: usize,
    prune: bool,
    counters: &mut AccessCounters,
    mut trace: Option<&mut Vec<PopEvent>>,
) -> Result<Vec<ResultEntry>> {
    let n = group.len();
    let mut best = TopK::new(k);
    let mut stack: Vec<(PageId, f64)> = vec![(tree.root_page(), 0.0)];
    counters.nodes_enqueued += 1;
    while let Some((page_id, bound)) = stack.pop() {
        if let Some(t) = trace.as_deref_mut() {
            t.push(PopEvent {
                key: bound,
                item: PoppedItem::Node { page_id },
            });
        }
        // the threshold may have dropped since this entry was pushed
        if prune && bound >= best.threshold() {
            counters.nodes_pruned += 1;
            continue;
        }
        let node = tree.read_node(page_id, counters)?;
        match &node.body {
            NodeBody::Interior { children, keywords } => {
                let costs = group.score_children(children, keywords);
                for (slot, child) in children.iter().enumerate() {
                    let ladder = SubgroupLadder::new(&costs[slot * n..(slot + 1) * n], group.aggregate);
                    let b = ladder.aggregate(size);
                    if !prune || b < best.threshold() {
                        stack.push((child.page_id, b));
                        counters.nodes_enqueued += 1;
                    } else {
                        counters.nodes_pruned += 1;
                    }
                }
            }
            NodeBody::Leaf { objects, .. } => {
                let inv = tree.read_postings(&node, counters)?;
                let costs = group.score_objects(objects, inv.table());
                for (slot, entry) in objects.iter().enumerate() {
                    counters.objects_scored += 1;
                    let ladder = SubgroupLadder::new(&costs[slot * n..(slot + 1) * n], group.aggregate);
                    best.offer(ladder.aggregate(size), entry.id, || ladder.members(size));
                }
            }
        }
    }
    Ok(best.into_entries(size))
}

enum Payload {
    Node(PageId),
    Object(ObjectId, Vec<usize>),
}

struct Queued {
    key: f64,
    payload: Payload,
}

impl Queued {
    // nodes before objects at equal keys, then page or object id
    fn rank(&self) -> (u8, u64) {
        match self.payload {
            Payload::Node(p) => (0, p as u64),
            Payload::Object(id, _) => (1, id),
        }
    }
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
        self.key.total_cmp(&other.key).then(self.rank().cmp(&other.rank()))
    }
}

pub(crate) fn best_first(
    tree: &IrTree,
    group: &PreparedGroup,
    size: usize,
    k: usize,
    prune: bool,
    counters: &mut AccessCounters,
    mut trace: Option<&mut Vec<PopEvent>>,
) -> Result<Vec<ResultEntry>> {
    let n = group.len();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(Queued {
        key: 0.0,
        payload: Payload::Node(tree.root_page()),
    }));
    counters.nodes_enqueued += 1;
    let mut out = Vec::with_capacity(k);
    while let Some(Reverse(item)) = heap.pop() {
        if let Some(t) = trace.as_deref_mut() {
            t.push(PopEvent {
                key: item.key,
                item: match item.payload {
                    Payload::Node(page_id) => PoppedItem::Node { page_id },
                    Payload::Object(id, _) => PoppedItem::Object { id },
                },
            });
        }
        match item.payload {
            Payload::Object(id, subgroup) => {
                if out.len() < k {
                    out.push(ResultEntry {
                        object_id: id,
                        cost: item.key,
                        subgroup,
                        subgroup_size: size,
                    });
                }
                if prune && out.len() == k {
                    break;
                }
            }
            Payload::Node(page_id) => {
                let node = tree.read_node(page_id, counters)?;
                match &node.body {
                    NodeBody::Interior { children, keywords } => {
                        let costs = group.score_children(children, keywords);
                        for (slot, child) in children.iter().enumerate() {
                            let ladder = SubgroupLadder::new(&costs[slot * n..(slot + 1) * n], group.aggregate);
                            heap.push(Reverse(Queued {
                                key: ladder.aggregate(size),
                                payload: Payload::Node(child.page_id),
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
                            heap.push(Reverse(Queued {
                                key: ladder.aggregate(size),
                                payload: Payload::Object(entry.id, ladder.members(size)),
                            }));
                        }
                    }
                }
            }
        }
    }
    counters.nodes_pruned += heap
        .iter()
        .filter(|Reverse(q)| matches!(q.payload, Payload::Node(_)))
        .count() as u64;
    Ok(out)
}
