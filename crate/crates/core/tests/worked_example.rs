mod common;

use common::*;
use gsk_core::index::NodeBody;
use gsk_core::{execute, oracle, Aggregate, Method};

const ALPHA: f64 = 0.5;

#[test]
fn oracle_reproduces_narrative_winners() {
    let objects = fixture_objects();
    let group = fixture_group();
    let tree = tree_of(&objects, 2);
    let params = tree.cost_params(ALPHA, Aggregate::Sum).unwrap();
    let whole = oracle::scan_gnnk(&objects, &group, &params, 1).unwrap();
    assert_eq!(whole[0].object_id, 7);
    let three = oracle::scan_fsnnk(&objects, &group, &params, 3, 1).unwrap();
    assert_eq!(three[0].object_id, 6);
    assert_eq!(three[0].subgroup, vec![0, 1, 3]);
    let exhaustive = oracle::scan_fsnnk_exhaustive(&objects, &group, &params, 3, 1).unwrap();
    assert_eq!(exhaustive, three);
}

#[test]
fn every_method_finds_the_fixture_winners() {
    let objects = fixture_objects();
    for fanout in [2, 3, 50] {
        let tree = tree_of(&objects, fanout);
        for method in [Method::GnnkBb, Method::GnnkBf] {
            let r = execute(&tree, &spec(&tree, fixture_group(), method, ALPHA, Aggregate::Sum, 1, 5)).unwrap();
            assert_eq!(r.entries[0].object_id, 7, "{method} fanout {fanout}");
        }
        for method in [Method::FsnnkBb, Method::FsnnkBf] {
            let r = execute(&tree, &spec(&tree, fixture_group(), method, ALPHA, Aggregate::Sum, 1, 3)).unwrap();
            assert_eq!(r.entries[0].object_id, 6);
            assert_eq!(r.entries[0].subgroup, vec![0, 1, 3]);
        }
        for method in [Method::MfsnnkN, Method::MfsnnkBf] {
            let s = spec(&tree, fixture_group(), method, ALPHA, Aggregate::Sum, 1, 3);
            let r = execute(&tree, &s).unwrap();
            let winners: Vec<(usize, u64)> = r.entries.iter().map(|e| (e.subgroup_size, e.object_id)).collect();
            assert_eq!(winners, vec![(3, 6), (4, 7), (5, 7)], "{method} fanout {fanout}");
            assert_eq!(oracle_mismatch(&objects, &s, &r), None);
        }
    }
}

#[test]
fn fanout_two_pairs_o6_with_o7() {
    let objects = fixture_objects();
    let tree = tree_of(&objects, 2);
    let leaf = tree
        .nodes()
        .unwrap()
        .into_iter()
        .find(|n| matches!(&n.body, NodeBody::Leaf { objects, .. } if objects.iter().any(|e| e.id == 6)))
        .unwrap();
    let NodeBody::Leaf { objects: entries, .. } = &leaf.body else { unreachable!() };
    let mut ids: Vec<u64> = entries.iter().map(|e| e.id).collect();
    ids.sort_unstable();
    assert_eq!(ids, vec![6, 7]);
    let mut counters = Default::default();
    let inv = tree.read_postings(&leaf, &mut counters).unwrap();
    let summary: Vec<&str> = inv.keywords().iter().map(|&k| tree.keyword(k).unwrap()).collect();
    assert_eq!(summary, vec!["t1", "t3", "t4", "t6"]);
}

#[test]
fn o6_member_costs_from_stated_distances() {
    // distances 3.5, 5.5, 6.5, 1, 9.5 with d_max 10; the best three sum to
    // 0.75 and the larger sizes follow
    use gsk_core::{cost_object, CostParams, Point, QueryPoint, SpatioTextualObject};
    let params = CostParams::new(ALPHA, Aggregate::Sum, 10.0).unwrap();
    let o6 = SpatioTextualObject::new(6, Point::new(0.0, 0.0), ["t1", "t3", "t4"]);
    let group = fixture_group();
    let costs: Vec<f64> = group
        .members()
        .iter()
        .zip([3.5, 5.5, 6.5, 1.0, 9.5])
        .map(|(q, d)| {
            let q = QueryPoint::new(Point::new(d, 0.0), q.keywords.iter().cloned()).unwrap();
            cost_object(&q, &o6, &params).unwrap()
        })
        .collect();
    let ladder = gsk_core::SubgroupLadder::new(&costs, Aggregate::Sum);
    assert!((ladder.aggregate(3) - 0.75).abs() < 1e-9);
    assert_eq!(ladder.members(3), vec![0, 1, 3]);
    assert!((ladder.aggregate(4) - 1.325).abs() < 1e-9);
    assert!((ladder.aggregate(5) - 2.05).abs() < 1e-9);
}
