//! Object and node costs, aggregates and optimal subgroup selection.
//!
//! Every path that scores something (oracle scans, index traversals, node
//! bounds) funnels through [`blend`], [`similarity_from_sum`] and
//! [`SubgroupLadder`], so costs computed by different routes are bit-identical.

use crate::error::{Error, Result};
use crate::model::{
    distance, Aggregate, CostParams, KeywordSet, Point, QueryGroup, QueryPoint, Rect,
    SpatioTextualObject, SubgroupSelection,
};

/// `min(1, euclidean(a, b) / d_max)`.
pub fn normalized_distance(a: Point, b: Point, d_max: f64) -> f64 {
    (distance(a, b) / d_max).min(1.0)
}

/// `min(1, min_dist(p, rect) / d_max)`.
pub fn normalized_min_dist(p: Point, rect: &Rect, d_max: f64) -> f64 {
    (rect.min_dist(p) / d_max).min(1.0)
}

/// Turns the running sum of normalized weights of shared keywords into the
/// similarity value.
#[inline]
pub(crate) fn similarity_from_sum(weight_sum: f64, query_len: usize) -> f64 {
    weight_sum / query_len as f64
}

/// `alpha * dist + (1 - alpha) * (1 - sim)`, divided by the member priority.
#[inline]
pub(crate) fn blend(alpha: f64, dist: f64, sim: f64, priority: f64) -> f64 {
    (alpha * dist + (1.0 - alpha) * (1.0 - sim)) / priority
}

/// Normalized weight sum of the query keywords present in `target`, divided
/// by the number of query keywords.
pub fn keyword_similarity(
    query_keywords: &KeywordSet,
    target_keywords: &KeywordSet,
    params: &CostParams,
) -> Result<f64> {
    if query_keywords.is_empty() {
        return Err(Error::invalid("query keyword set is empty"));
    }
    let mut sum = 0.0;
    for kw in query_keywords {
        if target_keywords.contains(kw) {
            sum += params.normalized_weight(kw);
        }
    }
    Ok(similarity_from_sum(sum, query_keywords.len()))
}

pub fn cost_object(q: &QueryPoint, o: &SpatioTextualObject, params: &CostParams) -> Result<f64> {
    let sim = keyword_similarity(&q.keywords, &o.keywords, params)?;
    let dist = normalized_distance(q.location, o.location, params.d_max);
    Ok(blend(params.alpha, dist, sim, q.priority))
}

pub fn cost_node(
    q: &QueryPoint,
    mbr: &Rect,
    node_keywords: &KeywordSet,
    params: &CostParams,
) -> Result<f64> {
    mbr.validate()?;
    let sim = keyword_similarity(&q.keywords, node_keywords, params)?;
    let dist = normalized_min_dist(q.location, mbr, params.d_max);
    Ok(blend(params.alpha, dist, sim, q.priority))
}

/// Per-member costs of `o` for every member of `group`, in member order.
pub fn cost_vector(
    group: &QueryGroup,
    o: &SpatioTextualObject,
    params: &CostParams,
) -> Result<Vec<f64>> {
    group
        .members()
        .iter()
        .map(|q| cost_object(q, o, params))
        .collect()
}

/// Folds `costs` with `kind`, visiting values in ascending order.
///
/// The ascending order makes SUM independent of member order and makes it
/// monotone under elementwise-dominated inputs, which the pruning bounds rely
/// on.
pub fn aggregate(costs: &[f64], kind: Aggregate) -> Result<f64> {
    if costs.is_empty() {
        return Err(Error::invalid("cannot aggregate an empty cost vector"));
    }
    Ok(SubgroupLadder::new(costs, kind).aggregate(costs.len()))
}

/// The `m` members with the lowest costs (ties by member index) and their
/// aggregate. Optimal among all size-`m` subgroups for SUM, MAX and MIN.
pub fn best_subgroup(costs: &[f64], m: usize, kind: Aggregate) -> Result<SubgroupSelection> {
    if m == 0 || m > costs.len() {
        return Err(Error::invalid(format!(
            "subgroup size {m} out of range 1..={}",
            costs.len()
        )));
    }
    Ok(SubgroupLadder::new(costs, kind).selection(m))
}

/// Best-subgroup aggregates for every size `1..=n` of one cost vector.
///
/// Members are ranked once by `(cost, index)`; the aggregate for size `i` is
/// the fold over the first `i` ranked costs.
#[derive(Clone, Debug)]
pub struct SubgroupLadder {
    order: Vec<usize>,
    running: Vec<f64>,
}

impl SubgroupLadder {
    /// `costs` must be non-empty.
    pub fn new(costs: &[f64], kind: Aggregate) -> Self {
        debug_assert!(!costs.is_empty());
        let mut order: Vec<usize> = (0..costs.len()).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        let mut running = Vec::with_capacity(costs.len());
        let mut acc = costs[order[0]];
        running.push(acc);
        for &idx in &order[1..] {
            acc = kind.combine(acc, costs[idx]);
            running.push(acc);
        }
        SubgroupLadder { order, running }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Aggregate of the best subgroup of `size` members (`1 <= size <= n`).
    pub fn aggregate(&self, size: usize) -> f64 {
        self.running[size - 1]
    }

    /// Member indices of the best subgroup of `size`, sorted ascending.
    pub fn members(&self, size: usize) -> Vec<usize> {
        let mut members = self.order[..size].to_vec();
        members.sort_unstable();
        members
    }

    pub fn selection(&self, size: usize) -> SubgroupSelection {
        SubgroupSelection {
            member_indices: self.members(size),
            aggregate_cost: self.aggregate(size),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{QueryPoint, SpatioTextualObject};
    use proptest::prelude::*;

    fn uniform(alpha: f64, d_max: f64) -> CostParams {
        CostParams::new(alpha, Aggregate::Sum, d_max).unwrap()
    }

    fn kws(items: &[&str]) -> KeywordSet {
        items.iter().map(|s| s.to_string()).collect()
    }

    /// Every subset of `0..n` with exactly `m` members.
    fn subsets(n: usize, m: usize) -> Vec<Vec<usize>> {
        (0u32..(1 << n))
            .filter(|mask| mask.count_ones() as usize == m)
            .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
            .collect()
    }

    fn naive_fold(values: &[f64], kind: Aggregate) -> f64 {
        match kind {
            Aggregate::Sum => {
                let mut total = 0.0;
                for v in values {
                    total += v;
                }
                total
            }
            Aggregate::Max => values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            Aggregate::Min => values.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    #[test]
    fn normalized_distance_examples() {
        let a = Point::new(0.0, 0.0);
        assert!((normalized_distance(a, Point::new(6.5, 0.0), 10.0) - 0.65).abs() < 1e-12);
        assert_eq!(normalized_distance(a, a, 3.0), 0.0);
        assert_eq!(normalized_distance(a, Point::new(9.0, 12.0), 10.0), 1.0);
    }

    #[test]
    fn keyword_similarity_examples() {
        let p = uniform(0.5, 10.0);
        let sim = keyword_similarity(&kws(&["t3", "t6"]), &kws(&["t1", "t3", "t4"]), &p).unwrap();
        assert_eq!(sim, 0.5);
        assert_eq!(keyword_similarity(&kws(&["a"]), &kws(&["b"]), &p).unwrap(), 0.0);
        assert_eq!(keyword_similarity(&kws(&["a", "b"]), &kws(&["a", "b", "c"]), &p).unwrap(), 1.0);
        assert!(keyword_similarity(&KeywordSet::new(), &kws(&["a"]), &p).is_err());
    }

    #[test]
    fn weighted_similarity_uses_w_max() {
        let weights = [("a".to_string(), 2.0), ("b".to_string(), 4.0)].into();
        let p = CostParams::with_weights(0.5, Aggregate::Sum, 1.0, 4.0, weights).unwrap();
        let sim = keyword_similarity(&kws(&["a", "b", "c"]), &kws(&["a", "c"]), &p).unwrap();
        // (2/4 + 1/4) / 3
        assert!((sim - 0.25).abs() < 1e-15);
    }

    #[test]
    fn worked_example_member_costs() {
        let p = uniform(0.5, 10.0);
        let o6 = SpatioTextualObject::new(6, Point::new(0.0, 0.0), ["t1", "t3", "t4"]);
        let cases = [(6.5, vec!["t3", "t6"], 0.575), (1.0, vec!["t1"], 0.05), (9.5, vec!["t4", "t6"], 0.725)];
        for (d, q_kws, expected) in cases {
            let q = QueryPoint::new(Point::new(d, 0.0), q_kws).unwrap();
            let c = cost_object(&q, &o6, &p).unwrap();
            assert!((c - expected).abs() < 1e-9, "{c} vs {expected}");
        }
    }

    #[test]
    fn alpha_one_at_zero_distance_is_free() {
        let p = uniform(1.0, 5.0);
        let o = SpatioTextualObject::new(1, Point::new(2.0, 2.0), ["x"]);
        let q = QueryPoint::new(Point::new(2.0, 2.0), ["y"]).unwrap();
        assert_eq!(cost_object(&q, &o, &p).unwrap(), 0.0);
    }

    #[test]
    fn node_cost_inside_mbr() {
        let p = uniform(0.5, 10.0);
        let mbr = Rect::new(Point::new(0.0, 0.0), Point::new(4.0, 4.0)).unwrap();
        let q = QueryPoint::new(Point::new(1.0, 1.0), ["a", "b"]).unwrap();
        assert_eq!(cost_node(&q, &mbr, &kws(&["a", "b", "c"]), &p).unwrap(), 0.0);
        assert_eq!(cost_node(&q, &mbr, &kws(&["z"]), &p).unwrap(), 0.5);
        let bad = Rect {
            min: Point::new(1.0, 1.0),
            max: Point::new(0.0, 0.0),
        };
        assert!(cost_node(&q, &bad, &kws(&["a"]), &p).is_err());
    }

    #[test]
    fn aggregate_examples() {
        let costs = [0.575, 0.05, 0.725, 0.4, 0.3];
        assert_eq!(aggregate(&costs, Aggregate::Max).unwrap(), 0.725);
        assert_eq!(aggregate(&costs, Aggregate::Min).unwrap(), 0.05);
        assert_eq!(aggregate(&[0.0; 7], Aggregate::Sum).unwrap(), 0.0);
        assert!(aggregate(&[], Aggregate::Sum).is_err());
    }

    #[test]
    fn best_subgroup_worked_example() {
        // o6 member costs recomputed from the worked example's distances and keywords.
        let costs = [0.425, 0.275, 0.575, 0.05, 0.725];
        let sel = best_subgroup(&costs, 3, Aggregate::Sum).unwrap();
        assert_eq!(sel.member_indices, vec![0, 1, 3]);
        assert!((sel.aggregate_cost - 0.75).abs() < 1e-12);
        let all = best_subgroup(&costs, 5, Aggregate::Sum).unwrap();
        assert_eq!(all.member_indices, vec![0, 1, 2, 3, 4]);
        assert_eq!(all.aggregate_cost, aggregate(&costs, Aggregate::Sum).unwrap());
        assert!(best_subgroup(&costs, 0, Aggregate::Sum).is_err());
        assert!(best_subgroup(&costs, 6, Aggregate::Sum).is_err());
    }

    #[test]
    fn best_subgroup_ties_prefer_low_index() {
        let sel = best_subgroup(&[0.2, 0.1, 0.2, 0.2], 2, Aggregate::Sum).unwrap();
        assert_eq!(sel.member_indices, vec![0, 1]);
    }

    #[test]
    fn best_subgroup_matches_exhaustive_for_eight_choose_three() {
        let costs = [0.81, 0.12, 0.55, 0.33, 0.97, 0.08, 0.46, 0.29];
        let brute = subsets(8, 3)
            .into_iter()
            .map(|s| s.iter().map(|&i| costs[i]).sum::<f64>())
            .fold(f64::INFINITY, f64::min);
        let sel = best_subgroup(&costs, 3, Aggregate::Sum).unwrap();
        assert!((sel.aggregate_cost - brute).abs() < 1e-12);
        assert_eq!(subsets(8, 3).len(), 56);
    }

    proptest! {
        #[test]
        fn cost_object_stays_in_unit_range(
            qx in -50.0..50.0f64, qy in -50.0..50.0f64,
            ox in -50.0..50.0f64, oy in -50.0..50.0f64,
            alpha in 0.0..=1.0f64, d_max in 0.1..200.0f64,
            qmask in 1u8..16, omask in 0u8..16,
        ) {
            let pool = ["a", "b", "c", "d"];
            let pick = |mask: u8| pool.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| *s).collect::<Vec<_>>();
            let q = QueryPoint::new(Point::new(qx, qy), pick(qmask)).unwrap();
            let o = SpatioTextualObject::new(0, Point::new(ox, oy), pick(omask));
            let c = cost_object(&q, &o, &uniform(alpha, d_max)).unwrap();
            prop_assert!((0.0..=1.0).contains(&c));
        }

        #[test]
        fn degenerate_mbr_equals_object_cost(
            qx in -50.0..50.0f64, qy in -50.0..50.0f64,
            px in -50.0..50.0f64, py in -50.0..50.0f64,
            alpha in 0.0..=1.0f64, priority in 0.1..4.0f64,
            qmask in 1u8..16, omask in 0u8..16,
        ) {
            let pool = ["a", "b", "c", "d"];
            let pick = |mask: u8| pool.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, s)| *s).collect::<Vec<_>>();
            let params = uniform(alpha, 30.0);
            let q = QueryPoint::with_priority(Point::new(qx, qy), pick(qmask), priority).unwrap();
            let o = SpatioTextualObject::new(0, Point::new(px, py), pick(omask));
            let node = cost_node(&q, &Rect::from_point(o.location), &o.keywords, &params).unwrap();
            prop_assert_eq!(node, cost_object(&q, &o, &params).unwrap());
        }

        #[test]
        fn sum_matches_independent_summation(costs in prop::collection::vec(0.0..1.0f64, 1..40)) {
            let got = aggregate(&costs, Aggregate::Sum).unwrap();
            prop_assert!((got - naive_fold(&costs, Aggregate::Sum)).abs() < 1e-12);
        }

        #[test]
        fn subgroup_is_optimal(costs in prop::collection::vec(0.0..2.0f64, 1..=10)) {
            let n = costs.len();
            for kind in Aggregate::ALL {
                for m in 1..=n {
                    let sel = best_subgroup(&costs, m, kind).unwrap();
                    prop_assert_eq!(sel.member_indices.len(), m);
                    let brute = subsets(n, m)
                        .into_iter()
                        .map(|s| naive_fold(&s.iter().map(|&i| costs[i]).collect::<Vec<_>>(), kind))
                        .fold(f64::INFINITY, f64::min);
                    prop_assert!((sel.aggregate_cost - brute).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn subgroup_aggregate_nondecreasing_in_size(costs in prop::collection::vec(0.0..2.0f64, 1..=12)) {
            for kind in [Aggregate::Sum, Aggregate::Max] {
                let ladder = SubgroupLadder::new(&costs, kind);
                for size in 2..=costs.len() {
                    prop_assert!(ladder.aggregate(size) >= ladder.aggregate(size - 1));
                }
            }
        }

        #[test]
        fn doubling_priorities_halves_costs(
            pts in prop::collection::vec((-20.0..20.0f64, -20.0..20.0f64, 0.2..3.0f64), 1..8),
            ox in -20.0..20.0f64, oy in -20.0..20.0f64,
        ) {
            let members = pts.iter().map(|&(x, y, p)| QueryPoint::with_priority(Point::new(x, y), ["a"], p).unwrap()).collect();
            let group = QueryGroup::new(members).unwrap();
            let doubled = group.scale_priorities(2.0).unwrap();
            let params = uniform(0.5, 25.0);
            let o = SpatioTextualObject::new(0, Point::new(ox, oy), ["a", "b"]);
            let base = cost_vector(&group, &o, &params).unwrap();
            let half = cost_vector(&doubled, &o, &params).unwrap();
            for (b, h) in base.iter().zip(&half) {
                prop_assert_eq!(b / 2.0, *h);
            }
            for kind in [Aggregate::Sum, Aggregate::Max] {
                prop_assert_eq!(aggregate(&base, kind).unwrap() / 2.0, aggregate(&half, kind).unwrap());
            }
        }
    }
}
