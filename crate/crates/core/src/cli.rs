//! Command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::advise::advise;
use crate::convac::{
    build_tn, forward, random_weights, weights_tensor, ConvACSpec, RepresentationInput, WeightSet,
};
use crate::error::{Error, Result};
use crate::graph::{to_analysis_graph, CutMethod, Weighting};
use crate::network::TensorNetwork;
use crate::partition::InputPartition;
use crate::simulation::{run_simulation, write_csv, Selection, SimulationConfig, SimulationSummary};
use crate::spectrum::{entanglement_measures, numerical_rank, svd_spectrum, RankRule, DEFAULT_RANK_TOL};
use crate::tensor::DenseTensor;

#[derive(Debug, Parser)]
#[command(name = "tnarch", version, about = "Tensor-network analysis of convolutional arithmetic circuits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Architecture JSON file.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Seed for randomly drawn weights.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write machine output here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank, entanglement measures and cut bounds of one matricization.
    Analyze {
        #[command(flatten)]
        common: Common,
        /// One-based inputs on side A, comma separated.
        #[arg(long)]
        partition: String,
        /// Weights JSON; drawn from --seed when absent.
        #[arg(long)]
        weights: Option<PathBuf>,
        /// One-based class index.
        #[arg(long, default_value_t = 1)]
        class: usize,
        #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
        tol: f64,
    },
    /// Minimum cut of the analysis graph for one partition.
    Mincut {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        partition: String,
        /// Count each δ group once.
        #[arg(long)]
        modified: bool,
        /// Also report the power-rounding lower bound.
        #[arg(long)]
        lower_bound: bool,
        /// Enumerate vertex colourings instead of running max-flow.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Rank versus min-cut sweep, written as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Candidate channel counts, comma separated.
        #[arg(long, default_value = "2,3,5,7,11,13")]
        dims: String,
        #[arg(long, default_value = "all")]
        arrangements: String,
        #[arg(long, default_value = "all")]
        partitions: String,
        /// Relative rank tolerance, or `machine` for max(rows, cols) * eps.
        #[arg(long, default_value = "machine")]
        tol: String,
        #[arg(long)]
        threads: Option<usize>,
        /// Independent weight draws per configuration.
        #[arg(long, default_value_t = 1)]
        weight_seeds: usize,
        #[arg(long, default_value_t = 2)]
        pool: usize,
    },
    /// Which layers matter for correlations at a given feature size.
    Advise {
        #[command(flatten)]
        common: Common,
        #[arg(long, visible_alias = "xi")]
        feature_size: usize,
    },
    /// Contract a network file, or evaluate the circuit of --spec.
    Contract {
        #[command(flatten)]
        common: Common,
        /// Tensor-network JSON file.
        #[arg(long, conflicts_with = "spec")]
        network: Option<PathBuf>,
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Representation vectors `{"x": [[...], ...]}`; scores are returned when given.
        #[arg(long)]
        input: Option<PathBuf>,
        /// One-based class index for the weights tensor.
        #[arg(long)]
        class: Option<usize>,
    },
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

fn load_spec(common: &Common) -> Result<ConvACSpec> {
    let path = common
        .spec
        .as_deref()
        .ok_or_else(|| Error::Config("--spec is required".into()))?;
    let spec: ConvACSpec = read_json(path)?;
    spec.validate()?;
    Ok(spec)
}

fn load_weights(spec: &ConvACSpec, path: Option<&Path>, seed: u64) -> Result<WeightSet> {
    match path {
        Some(p) => {
            let w: WeightSet = read_json(p)?;
            w.check(spec)?;
            Ok(w)
        }
        None => random_weights(spec, seed),
    }
}

fn emit(common: &Common, mut text: String) -> Result<()> {
    if !text.ends_with('\n') {
        text.push('\n');
    }
    match &common.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn render(common: &Common, value: &Value, text: impl FnOnce() -> String) -> Result<()> {
    if common.json {
        emit(common, serde_json::to_string_pretty(value)?)
    } else {
        emit(common, text())
    }
}

fn one_based_class(class: usize, spec: &ConvACSpec) -> Result<usize> {
    if class == 0 || class > spec.classes {
        return Err(Error::Config(format!("class {class} outside 1..={}", spec.classes)));
    }
    Ok(class - 1)
}

fn tensor_json(t: &DenseTensor) -> Value {
    json!({ "shape": t.shape(), "data": t.data() })
}

pub fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { common, partition, weights, class, tol } => {
            let spec = load_spec(&common)?;
            let p = InputPartition::parse_one_based(&partition, spec.n)?;
            let w = load_weights(&spec, weights.as_deref(), common.seed)?;
            let y = one_based_class(class, &spec)?;
            let a = weights_tensor(&spec, &w, y)?;
            let s = svd_spectrum(&a.matricize(&p.to_index_partition())?)?;
            let report = entanglement_measures(&s, tol)?;
            let rank = numerical_rank(&s, tol);
            let g = to_analysis_graph(&build_tn(&spec, &w)?)?;
            let cut = g.min_cut(&p)?;
            let modified = g.modified_min_cut(&p)?;
            let (lb, base) = g.rank_lower_bound(&p)?;
            let v = json!({
                "spec": spec,
                "partition": p.one_based(),
                "seed": common.seed,
                "class": class,
                "rank": rank,
                "entropy": report.entropy,
                "geometric": report.geometric,
                "schmidt": report.schmidt,
                "tolerance_used": report.tolerance_used,
                "normalization": report.normalization,
                "mincut": cut.weight.to_string(),
                "modified_mincut": modified.weight.to_string(),
                "lower_bound": lb.to_string(),
                "lower_bound_base": base,
            });
            render(&common, &v, || {
                format!(
                    "spec: {spec}\npartition A: {:?}\nrank: {rank}\nentropy: {}\ngeometric: {}\nschmidt: {}\nmincut: {}\nmodified mincut: {}\nlower bound: {lb} (base {base})",
                    p.one_based(),
                    report.entropy,
                    report.geometric,
                    report.schmidt,
                    cut.weight,
                    modified.weight
                )
            })
        }
        Command::Mincut { common, partition, modified, lower_bound, exhaustive } => {
            let spec = load_spec(&common)?;
            let p = InputPartition::parse_one_based(&partition, spec.n)?;
            let w = random_weights(&spec, common.seed)?;
            let g = to_analysis_graph(&build_tn(&spec, &w)?)?;
            let weighting = if modified { Weighting::Modified } else { Weighting::Plain };
            let method = if exhaustive { CutMethod::Exhaustive } else { CutMethod::Flow };
            let cut = g.min_cut_with(&p, weighting, method)?;
            let mut v = serde_json::to_value(&cut)?;
            if lower_bound {
                let (lb, base) = g.rank_lower_bound(&p)?;
                v["lower_bound"] = json!(lb.to_string());
                v["lower_bound_base"] = json!(base);
            }
            // a cut report is JSON either way
            emit(&common, serde_json::to_string_pretty(&v)?)
        }
        Command::Simulate {
            common,
            n,
            m,
            dims,
            arrangements,
            partitions,
            tol,
            threads,
            weight_seeds,
            pool,
        } => {
            let dim_pool = dims
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::Config(format!("bad dimension {t:?} in --dims")))
                })
                .collect::<Result<Vec<_>>>()?;
            let cfg = SimulationConfig {
                n,
                m,
                dim_pool,
                pool,
                arrangements: arrangements.parse::<Selection>()?,
                partitions: partitions.parse::<Selection>()?,
                master_seed: common.seed,
                weight_seeds_per_config: weight_seeds,
                rank_tol: tol.parse::<RankRule>()?,
                threads,
            };
            let report = run_simulation(&cfg)?;
            match &common.out {
                Some(path) => {
                    let file = fs::File::create(path)?;
                    write_csv(&report.records, std::io::BufWriter::new(file))?;
                    let text = summary_text(&report.summary, common.json)?;
                    std::io::stdout().lock().write_all(text.as_bytes())?;
                }
                None => {
                    write_csv(&report.records, std::io::stdout().lock())?;
                    eprint!("{}", summary_text(&report.summary, common.json)?);
                }
            }
            Ok(())
        }
        Command::Advise { common, feature_size } => {
            let spec = load_spec(&common)?;
            let a = advise(&spec, feature_size)?;
            let v = serde_json::to_value(&a)?;
            render(&common, &v, || {
                let mut s = format!(
                    "feature size: {}\ncritical layer: {}\nbounding layers: {}\nemphasis: {}\n",
                    a.feature_size,
                    a.critical_layer,
                    a.bounding_layers.join(", "),
                    a.emphasis
                );
                for l in &a.layers {
                    s.push_str(&format!("  {} = {}: {}\n", l.layer, l.channels, l.note));
                }
                for r in &a.table {
                    s.push_str(&format!("  {} (xi = {}): mincut {}\n", r.partition, r.segment_length, r.mincut));
                }
                s
            })
        }
        Command::Contract { common, network, weights, input, class } => {
            if let Some(path) = network {
                let tn: TensorNetwork = read_json(&path)?;
                let problems = tn.validate();
                if !problems.is_empty() {
                    return Err(Error::Network(problems));
                }
                let t = tn.contract()?;
                return render(&common, &tensor_json(&t), || format!("shape: {:?}\ndata: {:?}", t.shape(), t.data()));
            }
            let spec = load_spec(&common)?;
            let w = load_weights(&spec, weights.as_deref(), common.seed)?;
            if let Some(path) = input {
                let x: RepresentationInput = read_json(&path)?;
                let scores = forward(&spec, &w, &x)?;
                let v = json!({ "scores": scores });
                return render(&common, &v, || format!("scores: {scores:?}"));
            }
            let y = one_based_class(class.unwrap_or(1), &spec)?;
            let t = weights_tensor(&spec, &w, y)?;
            render(&common, &tensor_json(&t), || format!("shape: {:?}\ndata: {:?}", t.shape(), t.data()))
        }
    }
}

fn summary_text(s: &SimulationSummary, json: bool) -> Result<String> {
    if json {
        return Ok(serde_json::to_string_pretty(s)? + "\n");
    }
    Ok(format!(
        "records: {}\ndeviations: {} ({:.6})\nmin ratio: {}\nmax deviation: {}\nmax difference: {}\nlower-bound exceptions: {}\nruntime: {:.2} s\n",
        s.records,
        s.deviations,
        s.deviation_fraction,
        s.min_ratio,
        s.max_deviation,
        s.max_abs_difference,
        s.lower_bound_exceptions,
        s.runtime_secs
    ))
}

/// Parses `args`, runs the command and maps the outcome to an exit code:
/// 0 success, 1 invalid input or usage, 2 internal failure.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}
