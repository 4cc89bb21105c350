//! Geo-textual group nearest neighbor queries over a disk-paged IR-tree.
//!
//! A group of query points, each with a location, keywords and a priority,
//! asks for the objects that best serve the whole group (GNNK), the best
//! subgroup of a fixed size (FSNNK), or every subgroup size from a minimum
//! up to the whole group (MFSNNK).
//!
//! ```no_run
//! use gsk_core::{build_index, execute, Aggregate, BuildOptions, IrTree, Method, QuerySpec};
//! # fn main() -> gsk_core::Result<()> {
//! let objects = gsk_core::formats::read_dataset("objects.tsv".as_ref())?;
//! let tree = IrTree::from_bytes(build_index(&objects, &BuildOptions::default())?)?;
//! let group = gsk_core::formats::read_query_group("group.tsv".as_ref())?;
//! let params = tree.cost_params(0.5, Aggregate::Sum)?;
//! let spec = QuerySpec::new(group, params, Method::FsnnkBf).with_m(3).with_k(5);
//! let result = execute(&tree, &spec)?;
//! # Ok(()) }
//! ```

pub mod cost;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod index;
pub mod model;
pub mod oracle;
pub mod query;
pub mod workload;

pub use cost::{aggregate, best_subgroup, cost_node, cost_object, cost_vector, SubgroupLadder};
pub use error::{Error, Result};
pub use index::{build_index, build_index_to_file, AccessCounters, BuildOptions, IndexHeader, IrTree};
pub use model::{
    Aggregate, CostParams, KeywordSet, ObjectId, Point, QueryGroup, QueryPoint, Rect,
    SpatioTextualObject, SubgroupSelection,
};
pub use query::{
    execute, execute_with, Algorithm, Method, PopEvent, PoppedItem, QueryOptions, QueryResult,
    QuerySpec, ResultEntry, Variant,
};
