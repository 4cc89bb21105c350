//! Parameter sweeps producing averaged counters as CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::index::{build_index, AccessCounters, BuildOptions, IrTree};
use crate::model::Aggregate;
use crate::query::{execute_with, Method, QueryOptions, QuerySpec};
use crate::workload::{gen_objects, gen_query_groups, kv_pairs, GenConfig};

/// The parameter an experiment varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SweepParam {
    K,
    GroupSize,
    /// Minimum subgroup size as a percentage of the group size.
    SubgroupPercent,
    KeywordsPerQuery,
    QuerySpace,
    KeywordSet,
    Alpha,
    DatasetSize,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::K => "k",
            SweepParam::GroupSize => "n",
            SweepParam::SubgroupPercent => "m_percent",
            SweepParam::KeywordsPerQuery => "keywords_per_query",
            SweepParam::QuerySpace => "query_space",
            SweepParam::KeywordSet => "keyword_set",
            SweepParam::Alpha => "alpha",
            SweepParam::DatasetSize => "objects",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepParam {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            SweepParam::K,
            SweepParam::GroupSize,
            SweepParam::SubgroupPercent,
            SweepParam::KeywordsPerQuery,
            SweepParam::QuerySpace,
            SweepParam::KeywordSet,
            SweepParam::Alpha,
            SweepParam::DatasetSize,
        ]
        .into_iter()
        .find(|p| p.name() == s)
        .ok_or_else(|| Error::invalid(format!("unknown sweep parameter '{s}'")))
    }
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub generator: GenConfig,
    pub sweep: SweepParam,
    pub values: Vec<f64>,
    /// Query groups per sweep point.
    pub repetitions: usize,
    pub methods: Vec<Method>,
    pub aggregates: Vec<Aggregate>,
    pub k: usize,
    pub m_percent: f64,
    pub alpha: f64,
    pub relaxed_prune: bool,
    pub fanout: usize,
    pub page_size: usize,
}

impl Default for Experiment {
    fn default() -> Self {
        let build = BuildOptions::default();
        Experiment {
            generator: GenConfig::default(),
            sweep: SweepParam::GroupSize,
            values: vec![10.0, 20.0, 40.0],
            repetitions: 20,
            methods: vec![Method::GnnkBb, Method::GnnkBf],
            aggregates: vec![Aggregate::Sum],
            k: 10,
            m_percent: 60.0,
            alpha: 0.5,
            relaxed_prune: false,
            fanout: build.fanout,
            page_size: build.page_size,
        }
    }
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|e| Error::invalid(format!("bad entry '{s}' for {key}: {e}")))
        })
        .collect()
}

fn parse_one<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::invalid(format!("bad value '{value}' for {key}: {e}")))
}

impl Experiment {
    /// Parses `key=value` lines. Generator keys are accepted alongside the
    /// experiment's own (`sweep`, `values`, `repetitions`, `algorithms`,
    /// `aggregates`, `k`, `m_percent`, `alpha`, `relaxed_prune`, `fanout`,
    /// `page_size`).
    pub fn from_kv(text: &str) -> Result<Self> {
        let mut e = Experiment::default();
        for (key, value) in kv_pairs(text)? {
            match key.as_str() {
                "sweep" => e.sweep = value.parse()?,
                "values" => e.values = parse_list(&key, &value)?,
                "repetitions" => e.repetitions = parse_one(&key, &value)?,
                "algorithms" => e.methods = parse_list(&key, &value)?,
                "aggregates" => e.aggregates = parse_list(&key, &value)?,
                "k" => e.k = parse_one(&key, &value)?,
                "m_percent" => e.m_percent = parse_one(&key, &value)?,
                "alpha" => e.alpha = parse_one(&key, &value)?,
                "relaxed_prune" => e.relaxed_prune = parse_one(&key, &value)?,
                "fanout" => e.fanout = parse_one(&key, &value)?,
                "page_size" => e.page_size = parse_one(&key, &value)?,
                _ => e.generator.set(&key, &value)?,
            }
        }
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(Error::invalid("repetitions must be at least 1"));
        }
        if self.values.is_empty() || self.methods.is_empty() || self.aggregates.is_empty() {
            return Err(Error::invalid("values, algorithms and aggregates must be non-empty"));
        }
        self.generator.validate()
    }

    /// Settings for one sweep point.
    fn at(&self, value: f64) -> Result<Experiment> {
        let mut e = self.clone();
        let count = || -> Result<usize> {
            if value >= 1.0 && value.fract() == 0.0 {
                Ok(value as usize)
            } else {
                Err(Error::invalid(format!("{} needs a positive integer, got {value}", self.sweep)))
            }
        };
        match self.sweep {
            SweepParam::K => e.k = count()?,
            SweepParam::GroupSize => e.generator.query.group_size = count()?,
            SweepParam::SubgroupPercent => e.m_percent = value,
            SweepParam::KeywordsPerQuery => e.generator.query.keywords_per_query = count()?,
            SweepParam::QuerySpace => e.generator.query.query_space_fraction = value,
            SweepParam::KeywordSet => e.generator.query.keyword_set_fraction = value,
            SweepParam::Alpha => e.alpha = value,
            SweepParam::DatasetSize => e.generator.object_count = count()?,
        }
        e.validate()?;
        Ok(e)
    }

    /// Minimum subgroup size for a group of `n`.
    pub fn subgroup_size(&self, n: usize) -> usize {
        ((self.m_percent / 100.0 * n as f64).round() as usize).clamp(1, n)
    }
}

/// One CSV row: means over the query groups of one sweep point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentRow {
    pub parameter: String,
    pub value: f64,
    pub algorithm: String,
    pub aggregate: String,
    pub queries: usize,
    pub mean_elapsed_ms: f64,
    pub mean_page_accesses: f64,
    pub mean_nodes_pruned: f64,
    pub pruning_power: f64,
}

/// Runs every (value, algorithm, aggregate) combination in sweep order.
pub fn run_experiment(experiment: &Experiment) -> Result<Vec<ExperimentRow>> {
    experiment.validate()?;
    let mut rows = Vec::new();
    let mut cached: Option<(usize, IrTree, Vec<crate::model::SpatioTextualObject>)> = None;
    for &value in &experiment.values {
        let point = experiment.at(value)?;
        let gen = &point.generator;
        let rebuild = !matches!(&cached, Some((count, _, _)) if *count == gen.object_count);
        if rebuild {
            let objects = gen_objects(gen)?;
            let options = BuildOptions {
                fanout: point.fanout,
                page_size: point.page_size,
                ..BuildOptions::default()
            };
            let tree = IrTree::from_bytes(build_index(&objects, &options)?)?;
            cached = Some((gen.object_count, tree, objects));
        }
        let (_, tree, objects) = cached.as_ref().expect("cached index");
        let groups = gen_query_groups(gen, objects, point.repetitions)?;
        for &method in &point.methods {
            for &agg in &point.aggregates {
                let params = tree.cost_params(point.alpha, agg)?;
                let mut total = AccessCounters::default();
                let mut elapsed = 0.0;
                for group in &groups {
                    let m = point.subgroup_size(group.len());
                    let spec = QuerySpec::new(group.clone(), params.clone(), method)
                        .with_k(point.k)
                        .with_m(m)
                        .with_relaxed_prune(point.relaxed_prune && method == Method::MfsnnkBf);
                    let result = execute_with(tree, &spec, QueryOptions::default())?;
                    total += result.counters;
                    elapsed += result.elapsed.as_secs_f64() * 1000.0;
                }
                let q = groups.len() as f64;
                rows.push(ExperimentRow {
                    parameter: point.sweep.name().to_string(),
                    value,
                    algorithm: method.name().to_string(),
                    aggregate: agg.name().to_string(),
                    queries: groups.len(),
                    mean_elapsed_ms: elapsed / q,
                    mean_page_accesses: total.page_accesses() as f64 / q,
                    mean_nodes_pruned: total.nodes_pruned as f64 / q,
                    pruning_power: total.pruning_power(),
                });
            }
        }
    }
    Ok(rows)
}

/// Writes `rows` with a header line.
pub fn write_csv<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row).map_err(|e| Error::invalid(format!("csv: {e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Experiment {
        Experiment::from_kv(
            "objects=2000\nvocabulary=50\nsweep=m_percent\nvalues=40,80\nrepetitions=3\n\
             algorithms=mfsnnk-n,mfsnnk-bf\naggregates=sum,max\nquery_space=0.01\nfanout=10\npage_size=1024\n",
        )
        .unwrap()
    }

    #[test]
    fn rows_follow_sweep_order() {
        let rows = run_experiment(&tiny()).unwrap();
        let keys: Vec<(f64, &str, &str)> = rows
            .iter()
            .map(|r| (r.value, r.algorithm.as_str(), r.aggregate.as_str()))
            .collect();
        assert_eq!(
            keys,
            vec![
                (40.0, "mfsnnk-n", "sum"),
                (40.0, "mfsnnk-n", "max"),
                (40.0, "mfsnnk-bf", "sum"),
                (40.0, "mfsnnk-bf", "max"),
                (80.0, "mfsnnk-n", "sum"),
                (80.0, "mfsnnk-n", "max"),
                (80.0, "mfsnnk-bf", "sum"),
                (80.0, "mfsnnk-bf", "max"),
            ]
        );
    }

    #[test]
    fn counters_reproducible() {
        let strip = |rows: Vec<ExperimentRow>| -> Vec<ExperimentRow> {
            rows.into_iter()
                .map(|r| ExperimentRow {
                    mean_elapsed_ms: 0.0,
                    ..r
                })
                .collect()
        };
        assert_eq!(strip(run_experiment(&tiny()).unwrap()), strip(run_experiment(&tiny()).unwrap()));
    }

    #[test]
    fn csv_has_header() {
        let rows = run_experiment(&tiny()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("parameter,value,algorithm,aggregate,queries,mean_elapsed_ms,"));
        assert_eq!(text.lines().count(), rows.len() + 1);
    }

    #[test]
    fn rejects_bad_settings() {
        assert!(Experiment::from_kv("repetitions=0").is_err());
        assert!(Experiment::from_kv("sweep=nope").is_err());
        assert!(Experiment::from_kv("algorithms=gnnk-xx").is_err());
    }
}
