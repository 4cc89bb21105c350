//! Shared setup for the criterion benches.

use gsk_core::workload::{gen_objects, gen_query_groups, GenConfig};
use gsk_core::{build_index, Aggregate, BuildOptions, IrTree, Method, QueryGroup, QuerySpec, SpatioTextualObject};

pub struct Workload {
    pub objects: Vec<SpatioTextualObject>,
    pub tree: IrTree,
    pub groups: Vec<QueryGroup>,
}

/// Default generator settings with `object_count` objects and `group_count`
/// query groups.
pub fn workload(object_count: usize, group_count: usize) -> Workload {
    let config = GenConfig {
        object_count,
        ..GenConfig::default()
    };
    let objects = gen_objects(&config).expect("valid generator config");
    let tree = IrTree::from_bytes(build_index(&objects, &BuildOptions::default()).expect("index builds"))
        .expect("fresh index opens");
    let groups = gen_query_groups(&config, &objects, group_count).expect("groups generate");
    Workload { objects, tree, groups }
}

impl Workload {
    /// Specs with k = 10, alpha = 0.5, SUM and m at 60% of the group.
    pub fn specs(&self, method: Method) -> Vec<QuerySpec> {
        let params = self.tree.cost_params(0.5, Aggregate::Sum).expect("valid params");
        self.groups
            .iter()
            .map(|g| {
                let m = (g.len() * 6).div_ceil(10);
                QuerySpec::new(g.clone(), params.clone(), method).with_k(10).with_m(m)
            })
            .collect()
    }
}
