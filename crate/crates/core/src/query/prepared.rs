//! Query group resolved against an index dictionary.

use crate::cost::{blend, normalized_distance, normalized_min_dist, similarity_from_sum};
use crate::index::{ChildEntry, IrTree, KeywordId, KeywordTable, LeafEntry};
use crate::model::{Aggregate, CostParams, Point, QueryGroup};

struct Member {
    location: Point,
    priority: f64,
    query_len: usize,
    /// Query keywords known to the index, in keyword order, with normalized
    /// weights.
    terms: Vec<(KeywordId, f64)>,
}

pub(crate) struct PreparedGroup {
    members: Vec<Member>,
    alpha: f64,
    d_max: f64,
    pub(crate) aggregate: Aggregate,
}

impl PreparedGroup {
    pub(crate) fn new(tree: &IrTree, group: &QueryGroup, params: &CostParams) -> Self {
        let members = group
            .members()
            .iter()
            .map(|q| Member {
                location: q.location,
                priority: q.priority,
                query_len: q.keywords.len(),
                terms: q
                    .keywords
                    .iter()
                    .filter_map(|kw| tree.keyword_id(kw).map(|id| (id, params.normalized_weight(kw))))
                    .collect(),
            })
            .collect();
        PreparedGroup {
            members,
            alpha: params.alpha,
            d_max: params.d_max,
            aggregate: params.aggregate,
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.members.len()
    }

    /// Row-major `[slot][member]` costs for entries whose keywords are
    /// described by `table`.
    fn score(&self, count: usize, table: &KeywordTable, dist: impl Fn(usize, Point) -> f64) -> Vec<f64> {
        let n = self.members.len();
        let mut out = vec![0.0; count * n];
        let mut sums = vec![0.0; count];
        for (j, member) in self.members.iter().enumerate() {
            sums.iter_mut().for_each(|s| *s = 0.0);
            for &(kw, w) in &member.terms {
                if let Some(slots) = table.slots(kw) {
                    for &s in slots {
                        sums[s as usize] += w;
                    }
                }
            }
            for (slot, &sum) in sums.iter().enumerate() {
                let sim = similarity_from_sum(sum, member.query_len);
                out[slot * n + j] = blend(self.alpha, dist(slot, member.location), sim, member.priority);
            }
        }
        out
    }

    pub(crate) fn score_children(&self, children: &[ChildEntry], table: &KeywordTable) -> Vec<f64> {
        self.score(children.len(), table, |slot, q| {
            normalized_min_dist(q, &children[slot].mbr, self.d_max)
        })
    }

    pub(crate) fn score_objects(&self, objects: &[LeafEntry], table: &KeywordTable) -> Vec<f64> {
        self.score(objects.len(), table, |slot, q| {
            normalized_distance(q, objects[slot].location, self.d_max)
        })
    }
}
