use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::ObjectId;

use super::ResultEntry;

struct Held {
    cost: f64,
    id: ObjectId,
    subgroup: Vec<usize>,
}

impl PartialEq for Held {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Held {}

impl PartialOrd for Held {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Held {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cost.total_cmp(&other.cost).then(self.id.cmp(&other.id))
    }
}

/// The k best objects seen so far, worst on top.
pub(crate) struct TopK {
    k: usize,
    heap: BinaryHeap<Held>,
}

impl TopK {
    pub(crate) fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    /// Cost of the k-th best object, infinite until k are held.
    pub(crate) fn threshold(&self) -> f64 {
        match self.heap.peek() {
            Some(worst) if self.heap.len() >= self.k => worst.cost,
            _ => f64::INFINITY,
        }
    }

    pub(crate) fn offer(&mut self, cost: f64, id: ObjectId, subgroup: impl FnOnce() -> Vec<usize>) {
        if self.heap.len() >= self.k {
            let worst = self.heap.peek().expect("k >= 1");
            if (cost, id) >= (worst.cost, worst.id) {
                return;
            }
            self.heap.pop();
        }
        self.heap.push(Held {
            cost,
            id,
            subgroup: subgroup(),
        });
    }

    pub(crate) fn into_entries(self, size: usize) -> Vec<ResultEntry> {
        self.heap
            .into_sorted_vec()
            .into_iter()
            .map(|h| ResultEntry {
                object_id: h.id,
                cost: h.cost,
                subgroup: h.subgroup,
                subgroup_size: size,
            })
            .collect()
    }
}
