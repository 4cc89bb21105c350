#![allow(dead_code)]

use std::path::PathBuf;

use gsk_core::formats::{read_dataset, read_query_group};
use gsk_core::workload::{gen_objects, GenConfig};
use gsk_core::{
    build_index, oracle, Aggregate, BuildOptions, IrTree, Method, Point, QueryGroup, QueryPoint,
    QueryResult, QuerySpec, ResultEntry, SpatioTextualObject,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/example")
}

pub fn fixture_objects() -> Vec<SpatioTextualObject> {
    read_dataset(&data_dir().join("objects.tsv")).unwrap()
}

pub fn fixture_group() -> QueryGroup {
    read_query_group(&data_dir().join("group.tsv")).unwrap()
}

pub fn tree_of(objects: &[SpatioTextualObject], fanout: usize) -> IrTree {
    let options = BuildOptions {
        fanout,
        page_size: 4096.max(64 * fanout),
        ..BuildOptions::default()
    };
    IrTree::from_bytes(build_index(objects, &options).unwrap()).unwrap()
}

pub fn random_objects(seed: u64, count: usize, vocabulary: usize) -> Vec<SpatioTextualObject> {
    gen_objects(&GenConfig {
        seed,
        object_count: count,
        vocabulary_size: vocabulary,
        ..GenConfig::default()
    })
    .unwrap()
}

/// A group spread over a random tenth of the data space, with 1..=4 keywords
/// per member and priorities in [0.5, 2].
pub fn random_group(rng: &mut ChaCha8Rng, n: usize, vocabulary: usize, objects: &[SpatioTextualObject]) -> QueryGroup {
    let bbox = gsk_core::Rect::bounding(objects.iter().map(|o| o.location)).unwrap();
    let side_x = bbox.width() * 0.3;
    let side_y = bbox.height() * 0.3;
    let x0 = rng.random_range(bbox.min.x..=bbox.max.x - side_x);
    let y0 = rng.random_range(bbox.min.y..=bbox.max.y - side_y);
    let members = (0..n)
        .map(|_| {
            let loc = Point::new(rng.random_range(x0..=x0 + side_x), rng.random_range(y0..=y0 + side_y));
            let count = rng.random_range(1..=4);
            let kws: Vec<String> = (0..count).map(|_| format!("t{}", rng.random_range(0..vocabulary))).collect();
            QueryPoint::with_priority(loc, kws, rng.random_range(0.5..=2.0)).unwrap()
        })
        .collect();
    QueryGroup::new(members).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn spec(tree: &IrTree, group: QueryGroup, method: Method, alpha: f64, agg: Aggregate, k: usize, m: usize) -> QuerySpec {
    let params = tree.cost_params(alpha, agg).unwrap();
    QuerySpec::new(group, params, method).with_k(k).with_m(m)
}

/// Empty when `result` equals the oracle: same ids and bit-identical costs in
/// the same order, set-equal subgroups. Otherwise a description of the first
/// difference.
pub fn oracle_mismatch(objects: &[SpatioTextualObject], spec: &QuerySpec, result: &QueryResult) -> Option<String> {
    let expected = oracle::scan(objects, spec).unwrap();
    compare_entries(&expected, &result.entries)
}

pub fn compare_entries(expected: &[ResultEntry], got: &[ResultEntry]) -> Option<String> {
    if expected.len() != got.len() {
        return Some(format!("expected {} entries, got {}", expected.len(), got.len()));
    }
    for (e, g) in expected.iter().zip(got) {
        if e.subgroup_size != g.subgroup_size
            || e.object_id != g.object_id
            || e.cost.to_bits() != g.cost.to_bits()
            || e.subgroup != g.subgroup
        {
            return Some(format!("expected {e:?}, got {g:?}"));
        }
    }
    None
}
