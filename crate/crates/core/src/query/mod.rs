//! Group query algorithms over an [`IrTree`].
//!
//! | method      | traversal                                        |
//! |-------------|--------------------------------------------------|
//! | `gnnk-bb`   | depth-first stack, prune against k-th best cost  |
//! | `gnnk-bf`   | min-priority queue, stop after k objects         |
//! | `fsnnk-bb`  | as `gnnk-bb`, bounds over the best size-m subgroup |
//! | `fsnnk-bf`  | as `gnnk-bf`, bounds over the best size-m subgroup |
//! | `mfsnnk-n`  | `fsnnk-bf` once per size in `m..=n`              |
//! | `mfsnnk-bf` | one best-first pass serving every size in `m..=n` |

mod multi;
mod prepared;
mod single;
mod topk;

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{AccessCounters, IrTree};
use crate::model::{CostParams, ObjectId, QueryGroup};

pub(crate) use prepared::PreparedGroup;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    Gnnk,
    Fsnnk,
    Mfsnnk,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Algorithm {
    BranchAndBound,
    BestFirst,
    /// Repeated single-size passes; MFSNNK only.
    Naive,
}

/// A (variant, algorithm) pair under its command-line name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    GnnkBb,
    GnnkBf,
    FsnnkBb,
    FsnnkBf,
    MfsnnkN,
    MfsnnkBf,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::GnnkBb,
        Method::GnnkBf,
        Method::FsnnkBb,
        Method::FsnnkBf,
        Method::MfsnnkN,
        Method::MfsnnkBf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::GnnkBb => "gnnk-bb",
            Method::GnnkBf => "gnnk-bf",
            Method::FsnnkBb => "fsnnk-bb",
            Method::FsnnkBf => "fsnnk-bf",
            Method::MfsnnkN => "mfsnnk-n",
            Method::MfsnnkBf => "mfsnnk-bf",
        }
    }

    pub fn variant(self) -> Variant {
        match self {
            Method::GnnkBb | Method::GnnkBf => Variant::Gnnk,
            Method::FsnnkBb | Method::FsnnkBf => Variant::Fsnnk,
            Method::MfsnnkN | Method::MfsnnkBf => Variant::Mfsnnk,
        }
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            Method::GnnkBb | Method::FsnnkBb => Algorithm::BranchAndBound,
            Method::GnnkBf | Method::FsnnkBf | Method::MfsnnkBf => Algorithm::BestFirst,
            Method::MfsnnkN => Algorithm::Naive,
        }
    }

    pub fn from_parts(variant: Variant, algorithm: Algorithm) -> Option<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.variant() == variant && m.algorithm() == algorithm)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown algorithm '{s}'")))
    }
}

/// Everything needed to run one group query.
#[derive(Clone, Debug)]
pub struct QuerySpec {
    pub group: QueryGroup,
    pub params: CostParams,
    pub variant: Variant,
    pub algorithm: Algorithm,
    /// Results per subgroup size.
    pub k: usize,
    /// Subgroup size for FSNNK, minimum subgroup size for MFSNNK; ignored by GNNK.
    pub m: usize,
    /// Replace the per-size admission test of MFSNNK-BF by the single
    /// comparison of the size-m bound against the whole-group k-th best.
    pub relaxed_prune: bool,
}

impl QuerySpec {
    pub fn new(group: QueryGroup, params: CostParams, method: Method) -> Self {
        let m = group.len();
        QuerySpec {
            group,
            params,
            variant: method.variant(),
            algorithm: method.algorithm(),
            k: 1,
            m,
            relaxed_prune: false,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_m(mut self, m: usize) -> Self {
        self.m = m;
        self
    }

    pub fn with_relaxed_prune(mut self, relaxed: bool) -> Self {
        self.relaxed_prune = relaxed;
        self
    }

    pub fn method(&self) -> Option<Method> {
        Method::from_parts(self.variant, self.algorithm)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let n = self.group.len();
        if self.k == 0 {
            return Err(Error::invalid("k must be at least 1"));
        }
        if self.variant != Variant::Gnnk && !(1..=n).contains(&self.m) {
            return Err(Error::invalid(format!(
                "subgroup size m={} out of range 1..={n}",
                self.m
            )));
        }
        if self.algorithm == Algorithm::Naive && self.variant != Variant::Mfsnnk {
            return Err(Error::invalid("the naive algorithm only applies to MFSNNK"));
        }
        if self.relaxed_prune && self.method() != Some(Method::MfsnnkBf) {
            return Err(Error::invalid("relaxed pruning only applies to mfsnnk-bf"));
        }
        Ok(())
    }

    /// Subgroup sizes this query reports.
    pub fn sizes(&self) -> RangeInclusive<usize> {
        let n = self.group.len();
        match self.variant {
            Variant::Gnnk => n..=n,
            Variant::Fsnnk => self.m..=self.m,
            Variant::Mfsnnk => self.m..=n,
        }
    }
}

/// Execution switches used by tests and experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QueryOptions {
    /// When false every bound is treated as infinite and best-first searches
    /// run to exhaustion.
    pub prune: bool,
    /// Record every element popped from the stack or queue.
    pub trace: bool,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions {
            prune: true,
            trace: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResultEntry {
    pub object_id: ObjectId,
    pub cost: f64,
    /// Member indices of the subgroup, ascending; every member for GNNK.
    pub subgroup: Vec<usize>,
    pub subgroup_size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum PoppedItem {
    Node { page_id: u32 },
    Object { id: ObjectId },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PopEvent {
    pub key: f64,
    pub item: PoppedItem,
}

#[derive(Clone, Debug)]
pub struct QueryResult {
    /// Grouped by ascending subgroup size, then ascending (cost, object id).
    pub entries: Vec<ResultEntry>,
    pub counters: AccessCounters,
    pub elapsed: Duration,
    /// Popped elements in order, when tracing was requested.
    pub trace: Vec<PopEvent>,
}

impl QueryResult {
    pub fn for_size(&self, size: usize) -> impl Iterator<Item = &ResultEntry> {
        self.entries.iter().filter(move |e| e.subgroup_size == size)
    }

    pub fn best(&self, size: usize) -> Option<&ResultEntry> {
        self.for_size(size).next()
    }
}

/// Runs `spec` against `tree` with default options.
pub fn execute(tree: &IrTree, spec: &QuerySpec) -> Result<QueryResult> {
    execute_with(tree, spec, QueryOptions::default())
}

pub fn execute_with(tree: &IrTree, spec: &QuerySpec, options: QueryOptions) -> Result<QueryResult> {
    spec.validate()?;
    let method = spec.method().expect("validated combination");
    let start = Instant::now();
    let group = PreparedGroup::new(tree, &spec.group, &spec.params);
    let mut counters = AccessCounters::default();
    let mut trace = Vec::new();
    let trace_sink = options.trace.then_some(&mut trace);
    let n = spec.group.len();
    let entries = match method {
        Method::GnnkBb => single::branch_and_bound(tree, &group, n, spec.k, options.prune, &mut counters, trace_sink)?,
        Method::FsnnkBb => single::branch_and_bound(tree, &group, spec.m, spec.k, options.prune, &mut counters, trace_sink)?,
        Method::GnnkBf => single::best_first(tree, &group, n, spec.k, options.prune, &mut counters, trace_sink)?,
        Method::FsnnkBf => single::best_first(tree, &group, spec.m, spec.k, options.prune, &mut counters, trace_sink)?,
        Method::MfsnnkN => multi::repeated(tree, &group, spec.sizes(), spec.k, options.prune, &mut counters, trace_sink)?,
        Method::MfsnnkBf => multi::single_pass(
            tree,
            &group,
            spec.sizes(),
            spec.k,
            spec.relaxed_prune,
            options.prune,
            &mut counters,
            trace_sink,
        )?,
    };
    Ok(QueryResult {
        entries,
        counters,
        elapsed: start.elapsed(),
        trace,
    })
}

pub fn gnnk_bb(tree: &IrTree, spec: &QuerySpec) -> Result<QueryResult> {
    expect_method(spec, Method::GnnkBb)?;
    execute(tree, spec)
}

pub fn gnnk_bf(tree: &IrTree, spec: &QuerySpec) -> Result<QueryResult> {
    expect_method(spec, Method::GnnkBf)?;
    execute(tree, spec)
}

pub fn fsnnk_bb(tree: &IrTree, spec: &QuerySpec) -> Result<QueryResult> {
    expect_method(spec, Method::FsnnkBb)?;
    execute(tree, spec)
}

pub fn fsnnk_bf(tree: &IrTree, spec: &QuerySpec) -> Result<QueryResult> {
    expect_method(spec, Method::FsnnkBf)?;
    execute(tree, spec)
}

pub fn mfsnnk_n(tree: &IrTree, spec: &QuerySpec) -> Result<QueryResult> {
    expect_method(spec, Method::MfsnnkN)?;
    execute(tree, spec)
}

pub fn mfsnnk_bf(tree: &IrTree, spec: &QuerySpec) -> Result<QueryResult> {
    expect_method(spec, Method::MfsnnkBf)?;
    execute(tree, spec)
}

fn expect_method(spec: &QuerySpec, method: Method) -> Result<()> {
    match spec.method() {
        Some(m) if m == method => Ok(()),
        other => Err(Error::invalid(format!(
            "{method} called with a {:?}/{:?} spec ({other:?})",
            spec.variant, spec.algorithm
        ))),
    }
}
