use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, Parser, Subcommand};
use serde::Serialize;

use gsk_core::experiment::{run_experiment, write_csv, Experiment};
use gsk_core::formats::{read_dataset, read_query_group, read_weights, write_dataset, write_query_group};
use gsk_core::workload::{gen_objects, gen_query_groups, GenConfig};
use gsk_core::{
    build_index_to_file, oracle, AccessCounters, Aggregate, BuildOptions, IrTree, Method, PopEvent,
    QueryOptions, QuerySpec, ResultEntry,
};

#[derive(Parser)]
#[command(name = "gsk", version, about = "Group nearest neighbor keyword queries over an IR-tree")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bulk-load an index file from a tab-separated dataset.
    Build {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 50)]
        fanout: usize,
        #[arg(long, default_value_t = 4096)]
        page_size: usize,
        /// Normalize distances by the largest pairwise distance instead of the
        /// bounding-box diagonal.
        #[arg(long)]
        exact_dmax: bool,
        /// Keyword weights, one `keyword<TAB>weight` per line.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Run one query group against an index and print the result as JSON.
    Query {
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        queries: PathBuf,
        #[arg(long, value_parser = parse_method)]
        algo: Method,
        #[arg(long, default_value = "sum", value_parser = parse_aggregate)]
        agg: Aggregate,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Subgroup size (FSNNK) or smallest subgroup size (MFSNNK); defaults
        /// to the group size.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        relaxed_prune: bool,
        /// Recompute the answer by linear scan over --data and fail on any
        /// difference.
        #[arg(long, requires = "data")]
        oracle_check: bool,
        #[arg(long)]
        data: Option<PathBuf>,
        /// Include every popped frontier element in the output.
        #[arg(long)]
        trace: bool,
    },
    /// Generate a synthetic dataset.
    GenData {
        #[arg(long)]
        out: PathBuf,
        /// key=value generator settings; flags below override them.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        objects: Option<usize>,
        #[arg(long)]
        vocabulary: Option<usize>,
        #[arg(long)]
        keywords_per_object: Option<f64>,
    },
    /// Generate query groups for a dataset, one file per group.
    GenQueries {
        #[arg(long)]
        data: PathBuf,
        /// Output directory; files are named group-000.tsv, group-001.tsv, ...
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        count: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        keywords_per_query: Option<usize>,
        #[arg(long)]
        query_space: Option<f64>,
        #[arg(long)]
        keyword_set: Option<f64>,
    },
    /// Run a parameter sweep from a key=value file and write CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: gsk_core::Error| e.to_string())
}

fn parse_aggregate(s: &str) -> Result<Aggregate, String> {
    s.parse().map_err(|e: gsk_core::Error| e.to_string())
}

#[derive(Serialize)]
struct SizeBlock<'a> {
    subgroup_size: usize,
    entries: Vec<EntryOut<'a>>,
}

#[derive(Serialize)]
struct EntryOut<'a> {
    object_id: u64,
    cost: f64,
    subgroup_indices: &'a [usize],
}

#[derive(Serialize)]
struct CountersOut {
    #[serde(flatten)]
    counters: AccessCounters,
    page_accesses: u64,
    pruning_power: f64,
}

#[derive(Serialize)]
struct QueryOut<'a> {
    algorithm: &'a str,
    aggregate: &'a str,
    alpha: f64,
    k: usize,
    m: usize,
    group_size: usize,
    results: Vec<SizeBlock<'a>>,
    counters: CountersOut,
    elapsed_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle_check: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    trace: Option<&'a [PopEvent]>,
}

fn blocks(entries: &[ResultEntry]) -> Vec<SizeBlock<'_>> {
    let mut out: Vec<SizeBlock> = Vec::new();
    for e in entries {
        if out.last().map(|b| b.subgroup_size) != Some(e.subgroup_size) {
            out.push(SizeBlock {
                subgroup_size: e.subgroup_size,
                entries: Vec::new(),
            });
        }
        out.last_mut().expect("pushed").entries.push(EntryOut {
            object_id: e.object_id,
            cost: e.cost,
            subgroup_indices: &e.subgroup,
        });
    }
    out
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, value)?;
    writeln!(lock)?;
    Ok(())
}

fn load_gen_config(path: Option<&Path>) -> Result<GenConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
            Ok(GenConfig::from_kv(&text)?)
        }
        None => Ok(GenConfig::default()),
    }
}

fn usage_error(message: String) -> anyhow::Error {
    Cli::command().error(clap::error::ErrorKind::ValueValidation, message).exit()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Build {
            data,
            out,
            fanout,
            page_size,
            exact_dmax,
            weights,
        } => {
            let objects = read_dataset(&data).with_context(|| "no such dataset or unreadable file")?;
            let weights = match weights {
                Some(p) => read_weights(&p)?,
                None => Default::default(),
            };
            let options = BuildOptions {
                fanout,
                page_size,
                exact_dmax,
                weights,
            };
            let header = build_index_to_file(&objects, &options, &out)?;
            print_json(&header)
        }
        Command::Query {
            index,
            queries,
            algo,
            agg,
            alpha,
            k,
            m,
            relaxed_prune,
            oracle_check,
            data,
            trace,
        } => {
            let tree = IrTree::open(&index).with_context(|| format!("cannot open index {}", index.display()))?;
            let group = read_query_group(&queries)?;
            let n = group.len();
            let m = m.unwrap_or(n);
            if m == 0 || m > n {
                return Err(usage_error(format!("--m {m} must lie in 1..={n} for a group of {n}")));
            }
            let params = tree.cost_params(alpha, agg)?;
            let spec = QuerySpec::new(group, params, algo)
                .with_k(k)
                .with_m(m)
                .with_relaxed_prune(relaxed_prune);
            if let Err(e) = spec.validate() {
                return Err(usage_error(e.to_string()));
            }
            let result = gsk_core::execute_with(&tree, &spec, QueryOptions { prune: true, trace })?;
            let checked = if oracle_check {
                let path = data.expect("clap enforces --data");
                let objects = read_dataset(&path)?;
                let expected = oracle::scan(&objects, &spec)?;
                let same = expected.len() == result.entries.len()
                    && expected.iter().zip(&result.entries).all(|(a, b)| {
                        a.object_id == b.object_id
                            && a.cost.to_bits() == b.cost.to_bits()
                            && a.subgroup_size == b.subgroup_size
                            && a.subgroup == b.subgroup
                    });
                if !same {
                    bail!(
                        "oracle check failed: index returned {:?}, linear scan returned {:?}",
                        result.entries,
                        expected
                    );
                }
                Some("pass")
            } else {
                None
            };
            print_json(&QueryOut {
                algorithm: algo.name(),
                aggregate: agg.name(),
                alpha,
                k,
                m,
                group_size: n,
                results: blocks(&result.entries),
                counters: CountersOut {
                    counters: result.counters,
                    page_accesses: result.counters.page_accesses(),
                    pruning_power: result.counters.pruning_power(),
                },
                elapsed_ms: result.elapsed.as_secs_f64() * 1000.0,
                oracle_check: checked,
                trace: trace.then_some(result.trace.as_slice()),
            })
        }
        Command::GenData {
            out,
            config,
            seed,
            objects,
            vocabulary,
            keywords_per_object,
        } => {
            let mut c = load_gen_config(config.as_deref())?;
            if let Some(v) = seed {
                c.seed = v;
            }
            if let Some(v) = objects {
                c.object_count = v;
            }
            if let Some(v) = vocabulary {
                c.vocabulary_size = v;
            }
            if let Some(v) = keywords_per_object {
                c.keywords_per_object = v;
            }
            let generated = gen_objects(&c)?;
            write_dataset(&out, &generated)?;
            eprintln!("wrote {} objects to {}", generated.len(), out.display());
            Ok(())
        }
        Command::GenQueries {
            data,
            out,
            count,
            config,
            seed,
            n,
            keywords_per_query,
            query_space,
            keyword_set,
        } => {
            let mut c = load_gen_config(config.as_deref())?;
            if let Some(v) = seed {
                c.seed = v;
            }
            if let Some(v) = n {
                c.query.group_size = v;
            }
            if let Some(v) = keywords_per_query {
                c.query.keywords_per_query = v;
            }
            if let Some(v) = query_space {
                c.query.query_space_fraction = v;
            }
            if let Some(v) = keyword_set {
                c.query.keyword_set_fraction = v;
            }
            let objects = read_dataset(&data)?;
            let groups = gen_query_groups(&c, &objects, count)?;
            std::fs::create_dir_all(&out).with_context(|| format!("cannot create {}", out.display()))?;
            for (i, g) in groups.iter().enumerate() {
                write_query_group(&out.join(format!("group-{i:03}.tsv")), g)?;
            }
            eprintln!("wrote {} groups to {}", groups.len(), out.display());
            Ok(())
        }
        Command::Bench { config, out } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("cannot read config {}", config.display()))?;
            let experiment = Experiment::from_kv(&text)?;
            let rows = run_experiment(&experiment)?;
            match out {
                Some(p) => {
                    let f = File::create(&p).with_context(|| format!("cannot create {}", p.display()))?;
                    write_csv(&rows, BufWriter::new(f))?;
                }
                None => write_csv(&rows, io::stdout().lock())?,
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already embed their io cause
            let mut message = e.to_string();
            for cause in e.chain().skip(1) {
                let text = cause.to_string();
                if !message.contains(&text) {
                    message = format!("{message}: {text}");
                }
            }
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
