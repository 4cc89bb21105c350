//! Linear-scan reference answers. Nothing here touches the index.

use std::collections::HashMap;

use crate::cost::{aggregate, best_subgroup, cost_vector};
use crate::error::{Error, Result};
use crate::model::{distance, Aggregate, CostParams, QueryGroup, Rect, SpatioTextualObject};
use crate::query::{QuerySpec, ResultEntry};

/// Largest group the exhaustive subset search accepts.
pub const MAX_EXHAUSTIVE_GROUP: usize = 12;

/// Cost parameters derived from the raw objects with the same rules the index
/// builder uses: `d_max` is the bounding-box diagonal (or the largest
/// pairwise distance when `exact`), 1.0 when every object shares a location;
/// `w_max` is the largest weight of a keyword that occurs in the data.
pub fn cost_params(
    objects: &[SpatioTextualObject],
    alpha: f64,
    aggregate: Aggregate,
    weights: &HashMap<String, f64>,
    exact: bool,
) -> Result<CostParams> {
    if objects.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let d = if exact {
        let mut best = 0.0f64;
        for a in objects {
            for b in objects {
                best = best.max(distance(a.location, b.location));
            }
        }
        best
    } else {
        Rect::bounding(objects.iter().map(|o| o.location))
            .expect("non-empty")
            .diagonal()
    };
    let d_max = if d > 0.0 { d } else { 1.0 };
    let used: HashMap<String, f64> = objects
        .iter()
        .flat_map(|o| o.keywords.iter())
        .filter_map(|k| weights.get(k).map(|&w| (k.clone(), w)))
        .collect();
    let w_max = objects
        .iter()
        .flat_map(|o| o.keywords.iter())
        .map(|k| weights.get(k).copied().unwrap_or(1.0))
        .fold(0.0f64, f64::max);
    CostParams::with_weights(alpha, aggregate, d_max, w_max, used)
}

fn check(objects: &[SpatioTextualObject], group: &QueryGroup, k: usize) -> Result<()> {
    if objects.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if group.is_empty() {
        return Err(Error::invalid("query group is empty"));
    }
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    Ok(())
}

fn top_k(mut ranked: Vec<ResultEntry>, k: usize) -> Vec<ResultEntry> {
    ranked.sort_by(|a, b| a.cost.total_cmp(&b.cost).then(a.object_id.cmp(&b.object_id)));
    ranked.truncate(k);
    ranked
}

/// The k best objects for the whole group, ranked by (cost, id).
pub fn scan_gnnk(
    objects: &[SpatioTextualObject],
    group: &QueryGroup,
    params: &CostParams,
    k: usize,
) -> Result<Vec<ResultEntry>> {
    check(objects, group, k)?;
    let n = group.len();
    let ranked = objects
        .iter()
        .map(|o| {
            let costs = cost_vector(group, o, params)?;
            Ok(ResultEntry {
                object_id: o.id,
                cost: aggregate(&costs, params.aggregate)?,
                subgroup: (0..n).collect(),
                subgroup_size: n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(top_k(ranked, k))
}

/// The k best (object, size-`m` subgroup) pairs, taking the `m` cheapest
/// members of each object.
pub fn scan_fsnnk(
    objects: &[SpatioTextualObject],
    group: &QueryGroup,
    params: &CostParams,
    m: usize,
    k: usize,
) -> Result<Vec<ResultEntry>> {
    check(objects, group, k)?;
    let ranked = objects
        .iter()
        .map(|o| {
            let costs = cost_vector(group, o, params)?;
            let sel = best_subgroup(&costs, m, params.aggregate)?;
            Ok(ResultEntry {
                object_id: o.id,
                cost: sel.aggregate_cost,
                subgroup: sel.member_indices,
                subgroup_size: m,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(top_k(ranked, k))
}

/// As [`scan_fsnnk`], but every one of the C(n, m) subsets is evaluated.
/// Among equal aggregates the lexicographically smallest subset wins.
pub fn scan_fsnnk_exhaustive(
    objects: &[SpatioTextualObject],
    group: &QueryGroup,
    params: &CostParams,
    m: usize,
    k: usize,
) -> Result<Vec<ResultEntry>> {
    check(objects, group, k)?;
    let n = group.len();
    if n > MAX_EXHAUSTIVE_GROUP {
        return Err(Error::invalid(format!(
            "exhaustive search supports at most {MAX_EXHAUSTIVE_GROUP} members, group has {n}"
        )));
    }
    if m == 0 || m > n {
        return Err(Error::invalid(format!("subgroup size {m} out of range 1..={n}")));
    }
    let subsets: Vec<Vec<usize>> = (0u32..1 << n)
        .filter(|mask| mask.count_ones() as usize == m)
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    let mut ranked = Vec::with_capacity(objects.len());
    for o in objects {
        let costs = cost_vector(group, o, params)?;
        let mut best: Option<(f64, &Vec<usize>)> = None;
        for subset in &subsets {
            let picked: Vec<f64> = subset.iter().map(|&i| costs[i]).collect();
            let value = aggregate(&picked, params.aggregate)?;
            let better = match best {
                None => true,
                Some((c, s)) => value < c || (value == c && subset < s),
            };
            if better {
                best = Some((value, subset));
            }
        }
        let (cost, subset) = best.expect("at least one subset");
        ranked.push(ResultEntry {
            object_id: o.id,
            cost,
            subgroup: subset.clone(),
            subgroup_size: m,
        });
    }
    Ok(top_k(ranked, k))
}

/// Per-size top-k lists for every size in `m..=n`, concatenated by size.
pub fn scan_mfsnnk(
    objects: &[SpatioTextualObject],
    group: &QueryGroup,
    params: &CostParams,
    m: usize,
    k: usize,
) -> Result<Vec<ResultEntry>> {
    check(objects, group, k)?;
    let mut out = Vec::new();
    for size in m..=group.len() {
        out.extend(scan_fsnnk(objects, group, params, size, k)?);
    }
    Ok(out)
}

/// Reference answer for `spec`, shaped like the entries of a query result.
pub fn scan(objects: &[SpatioTextualObject], spec: &QuerySpec) -> Result<Vec<ResultEntry>> {
    spec.validate()?;
    let mut out = Vec::new();
    for size in spec.sizes() {
        if size == spec.group.len() {
            out.extend(scan_gnnk(objects, &spec.group, &spec.params, spec.k)?);
        } else {
            out.extend(scan_fsnnk(objects, &spec.group, &spec.params, size, spec.k)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Point, QueryPoint};
    use proptest::prelude::*;

    fn obj(id: u64, x: f64, y: f64, kws: &[&str]) -> SpatioTextualObject {
        SpatioTextualObject::new(id, Point::new(x, y), kws.iter().copied())
    }

    #[test]
    fn single_object_wins() {
        let objects = vec![obj(9, 1.0, 1.0, &["a"])];
        let group = QueryGroup::new(vec![QueryPoint::new(Point::new(0.0, 0.0), ["b"]).unwrap()]).unwrap();
        let params = CostParams::new(0.5, Aggregate::Sum, 2.0).unwrap();
        let r = scan_gnnk(&objects, &group, &params, 3).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].object_id, 9);
    }

    #[test]
    fn params_follow_index_rules() {
        let objects = vec![obj(1, 0.0, 0.0, &["a"]), obj(2, 3.0, 4.0, &["b"])];
        let mut weights = HashMap::new();
        weights.insert("b".to_string(), 4.0);
        weights.insert("zzz".to_string(), 9.0);
        let p = cost_params(&objects, 0.5, Aggregate::Max, &weights, false).unwrap();
        assert_eq!(p.d_max, 5.0);
        assert_eq!(p.w_max, 4.0);
        let same = vec![obj(1, 2.0, 2.0, &["a"])];
        assert_eq!(cost_params(&same, 0.5, Aggregate::Sum, &HashMap::new(), true).unwrap().d_max, 1.0);
    }

    // Second scorer written from scratch against the cost definition: a full
    // member-by-object cost matrix, aggregated by sorting each column.
    fn matrix_gnnk(objects: &[SpatioTextualObject], group: &QueryGroup, params: &CostParams) -> Vec<(u64, f64)> {
        let mut out: Vec<(u64, f64)> = objects
            .iter()
            .map(|o| {
                let mut column: Vec<f64> = group
                    .members()
                    .iter()
                    .map(|q| {
                        let dx = q.location.x - o.location.x;
                        let dy = q.location.y - o.location.y;
                        let d = ((dx * dx + dy * dy).sqrt() / params.d_max).min(1.0);
                        let shared: f64 = q
                            .keywords
                            .iter()
                            .filter(|k| o.keywords.contains(*k))
                            .map(|k| params.weight(k) / params.w_max)
                            .sum();
                        let sim = shared / q.keywords.len() as f64;
                        (params.alpha * d + (1.0 - params.alpha) * (1.0 - sim)) / q.priority
                    })
                    .collect();
                column.sort_by(f64::total_cmp);
                let agg = match params.aggregate {
                    Aggregate::Sum => column.iter().sum(),
                    Aggregate::Max => column[column.len() - 1],
                    Aggregate::Min => column[0],
                };
                (o.id, agg)
            })
            .collect();
        out.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        out
    }

    fn instance() -> impl Strategy<Value = (Vec<SpatioTextualObject>, QueryGroup, f64, usize)> {
        let vocab = ["a", "b", "c", "d", "e", "f"];
        let kws = proptest::sample::subsequence(vocab.to_vec(), 1..4);
        let objects = proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64, kws.clone()), 1..30);
        let members = proptest::collection::vec((0.0..10.0f64, 0.0..10.0f64, kws, 0.5..2.0f64), 1..7);
        (objects, members, 0.0..=1.0f64, 0usize..3).prop_map(|(objects, members, alpha, agg)| {
            let objects = objects
                .into_iter()
                .enumerate()
                .map(|(i, (x, y, k))| SpatioTextualObject::new(i as u64, Point::new(x, y), k))
                .collect();
            let members = members
                .into_iter()
                .map(|(x, y, k, p)| QueryPoint::with_priority(Point::new(x, y), k, p).unwrap())
                .collect();
            (objects, QueryGroup::new(members).unwrap(), alpha, agg)
        })
    }

    proptest! {
        #[test]
        fn gnnk_matches_matrix_scorer((objects, group, alpha, agg) in instance()) {
            let params = CostParams::new(alpha, Aggregate::ALL[agg], 7.5).unwrap();
            let ours = scan_gnnk(&objects, &group, &params, objects.len()).unwrap();
            let theirs = matrix_gnnk(&objects, &group, &params);
            prop_assert_eq!(ours.len(), theirs.len());
            for (a, (_, cost)) in ours.iter().zip(&theirs) {
                prop_assert!((a.cost - cost).abs() <= 1e-12);
            }
        }

        #[test]
        fn exhaustive_equals_prefix_selection((objects, group, alpha, agg) in instance(), m_pick in 0usize..6) {
            let params = CostParams::new(alpha, Aggregate::ALL[agg], 7.5).unwrap();
            let m = 1 + m_pick % group.len();
            let fast = scan_fsnnk(&objects, &group, &params, m, objects.len()).unwrap();
            let slow = scan_fsnnk_exhaustive(&objects, &group, &params, m, objects.len()).unwrap();
            for (a, b) in fast.iter().zip(&slow) {
                prop_assert_eq!(a.cost, b.cost);
            }
        }

        #[test]
        fn full_size_reduces_to_gnnk((objects, group, alpha, agg) in instance()) {
            let params = CostParams::new(alpha, Aggregate::ALL[agg], 7.5).unwrap();
            let n = group.len();
            let whole = scan_gnnk(&objects, &group, &params, 5).unwrap();
            let sub = scan_fsnnk(&objects, &group, &params, n, 5).unwrap();
            prop_assert_eq!(whole, sub);
        }
    }
}
