//! Rank versus min-cut sweeps over channel arrangements and input partitions.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::convac::{build_tn, derive_seed, random_weights, weights_tensor, ConvACSpec};
use crate::error::{Error, Result};
use crate::graph::to_analysis_graph;
use crate::partition::{balanced_count, sample_ids, unrank_balanced, InputPartition, ENUMERATION_CAP};
use crate::spectrum::{numerical_rank, svd_spectrum, RankRule};

pub const CSV_HEADER: [&str; 9] = [
    "arrangement_id",
    "channels",
    "partition_id",
    "partition_mask",
    "rank",
    "mincut",
    "lower_bound",
    "ratio",
    "deviated",
];

/// `all` or `sample:K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    All,
    Sample(usize),
}

impl FromStr for Selection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "all" {
            return Ok(Selection::All);
        }
        match s.strip_prefix("sample:").map(|k| k.parse::<usize>()) {
            Some(Ok(k)) if k >= 1 => Ok(Selection::Sample(k)),
            _ => Err(Error::Config(format!("expected 'all' or 'sample:K' with K >= 1, got {s:?}"))),
        }
    }
}

impl fmt::Display for Selection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selection::All => f.write_str("all"),
            Selection::Sample(k) => write!(f, "sample:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub n: usize,
    pub m: usize,
    /// Candidate channel counts; each arrangement picks `depth` distinct entries in order.
    pub dim_pool: Vec<usize>,
    pub pool: usize,
    pub arrangements: Selection,
    pub partitions: Selection,
    pub master_seed: u64,
    pub weight_seeds_per_config: usize,
    /// Defaults to [`RankRule::Machine`]: the weights tensor's spectrum routinely spans
    /// more than seven decades at `n = 16`, so a fixed relative cutoff drops true rank.
    pub rank_tol: RankRule,
    /// Worker threads; `None` uses the global rayon pool.
    pub threads: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            n: 16,
            m: 2,
            dim_pool: vec![2, 3, 5, 7, 11, 13],
            pool: 2,
            arrangements: Selection::All,
            partitions: Selection::All,
            master_seed: 0,
            weight_seeds_per_config: 1,
            rank_tol: RankRule::Machine,
            threads: None,
        }
    }
}

impl SimulationConfig {
    /// Number of hidden layers implied by `n` and `pool`.
    pub fn depth(&self) -> Result<usize> {
        if self.pool < 2 {
            return Err(Error::Config("pool arity must be at least 2".into()));
        }
        let mut depth = 0;
        let mut size = 1usize;
        while size < self.n {
            size = size.saturating_mul(self.pool);
            depth += 1;
        }
        if size != self.n || depth == 0 {
            return Err(Error::Config(format!("n = {} is not a power of {}", self.n, self.pool)));
        }
        Ok(depth)
    }

    pub fn validate(&self) -> Result<()> {
        let depth = self.depth()?;
        if self.m < 1 {
            return Err(Error::Config("m must be positive".into()));
        }
        if self.dim_pool.iter().any(|&d| d < 2) {
            return Err(Error::Config("dimension pool entries must be at least 2".into()));
        }
        if self.dim_pool.len() < depth {
            return Err(Error::Config(format!(
                "{} layers need at least {depth} pool entries, got {}",
                depth,
                self.dim_pool.len()
            )));
        }
        if self.weight_seeds_per_config == 0 {
            return Err(Error::Config("weight_seeds_per_config must be at least 1".into()));
        }
        self.rank_tol.validate()?;
        if matches!(self.threads, Some(0)) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        if self.partitions == Selection::All && self.n > ENUMERATION_CAP {
            return Err(Error::Config(format!(
                "n = {} exceeds the enumeration cap of {ENUMERATION_CAP}; use --partitions sample:K",
                self.n
            )));
        }
        Ok(())
    }
}

/// Number of ordered `len`-selections without repetition from `k` items.
pub fn arrangement_count(k: usize, len: usize) -> u128 {
    if len > k {
        return 0;
    }
    (k - len + 1..=k).map(|x| x as u128).product()
}

/// The arrangement with lexicographic index `id` among ordered selections of
/// pool positions (so the pool's own order defines the ordering).
pub fn unrank_arrangement(dim_pool: &[usize], len: usize, mut id: u128) -> Result<Vec<usize>> {
    let total = arrangement_count(dim_pool.len(), len);
    if id >= total {
        return Err(Error::Config(format!("arrangement {id} out of range ({total})")));
    }
    let mut left: Vec<usize> = dim_pool.to_vec();
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        let block = arrangement_count(left.len() - 1, len - t - 1);
        let k = (id / block) as usize;
        id %= block;
        out.push(left.remove(k));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub arrangement_id: u64,
    pub channels: Vec<usize>,
    pub weight_seed_index: usize,
    pub partition_id: u64,
    pub partition_mask: String,
    pub rank: usize,
    pub mincut: String,
    pub lower_bound: String,
    pub ratio: f64,
    pub deviated: bool,
    /// `lower_bound > rank`: the measure-zero exception or tolerance grazing.
    pub below_lower_bound: bool,
}

impl SimulationRecord {
    fn csv_row(&self) -> [String; 9] {
        [
            self.arrangement_id.to_string(),
            self.channels.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(";"),
            self.partition_id.to_string(),
            self.partition_mask.clone(),
            self.rank.to_string(),
            self.mincut.clone(),
            self.lower_bound.clone(),
            self.ratio.to_string(),
            self.deviated.to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub records: usize,
    pub arrangements: usize,
    pub partitions: usize,
    pub weight_seeds: usize,
    pub deviations: usize,
    pub deviation_fraction: f64,
    pub min_ratio: f64,
    /// `1 - min_ratio`.
    pub max_deviation: f64,
    /// Largest `mincut - rank`, for the difference reading of deviation size.
    pub max_abs_difference: String,
    pub lower_bound_exceptions: usize,
    pub lower_bound_exception_fraction: f64,
    pub runtime_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub records: Vec<SimulationRecord>,
    pub summary: SimulationSummary,
}

fn big_to_f64(x: &BigUint) -> f64 {
    x.to_f64().unwrap_or(f64::INFINITY)
}

struct Work {
    arrangement_id: u128,
    channels: Vec<usize>,
}

/// Runs the sweep. Records are ordered by `(arrangement_id, weight seed, partition_id)`
/// regardless of the thread count.
pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let start = Instant::now();
    let depth = cfg.depth()?;

    let total_arr = arrangement_count(cfg.dim_pool.len(), depth);
    let arr_ids = match cfg.arrangements {
        Selection::All => (0..total_arr).collect(),
        Selection::Sample(k) => sample_ids(total_arr, k, derive_seed(&[cfg.master_seed, 0xA44A])),
    };
    let work = arr_ids
        .into_iter()
        .map(|id| {
            Ok(Work {
                arrangement_id: id,
                channels: unrank_arrangement(&cfg.dim_pool, depth, id)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    if cfg.n % 2 != 0 {
        return Err(Error::Config("balanced partitions need an even n".into()));
    }
    let total_parts = balanced_count(cfg.n)?;
    let part_ids = match cfg.partitions {
        Selection::All => (0..total_parts).collect(),
        Selection::Sample(k) => sample_ids(total_parts, k, derive_seed(&[cfg.master_seed, 0x9A47])),
    };
    let partitions = part_ids
        .iter()
        .map(|&r| Ok((r, unrank_balanced(cfg.n, r)?)))
        .collect::<Result<Vec<(u128, InputPartition)>>>()?;

    let run = || {
        work.par_iter()
            .map(|w| simulate_arrangement(cfg, w, &partitions))
            .collect::<Result<Vec<Vec<SimulationRecord>>>>()
    };
    let nested = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?,
        None => run()?,
    };
    let records: Vec<SimulationRecord> = nested.into_iter().flatten().collect();
    let summary = summarize(&records, work.len(), partitions.len(), cfg.weight_seeds_per_config, start);
    Ok(SimulationReport { records, summary })
}

fn simulate_arrangement(
    cfg: &SimulationConfig,
    w: &Work,
    partitions: &[(u128, InputPartition)],
) -> Result<Vec<SimulationRecord>> {
    let spec = ConvACSpec::deep(cfg.n, cfg.m, w.channels.clone(), 1, cfg.pool)?;
    let structure = random_weights(&spec, 0)?;
    let graph = to_analysis_graph(&build_tn(&spec, &structure)?)?;
    let cuts = partitions
        .par_iter()
        .map(|(_, p)| {
            let upper = graph.min_cut(p)?.weight;
            let (lower, _) = graph.rank_lower_bound(p)?;
            if lower > upper {
                return Err(Error::BoundViolation(format!(
                    "lower bound {lower} exceeds min-cut {upper} for {spec}, A = {:?}",
                    p.one_based()
                )));
            }
            Ok((upper, lower))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut out = Vec::with_capacity(partitions.len() * cfg.weight_seeds_per_config);
    for s in 0..cfg.weight_seeds_per_config {
        let seed = derive_seed(&[cfg.master_seed, w.arrangement_id as u64, s as u64]);
        let weights = random_weights(&spec, seed)?;
        let tensor = weights_tensor(&spec, &weights, 0)?;
        let rows = partitions
            .par_iter()
            .zip(&cuts)
            .map(|((pid, p), (upper, lower))| {
                let mat = tensor.matricize(&p.to_index_partition())?;
                let tol = cfg.rank_tol.tolerance(mat.shape()[0], mat.shape()[1]);
                let rank = numerical_rank(&svd_spectrum(&mat)?, tol);
                let rank_big = BigUint::from(rank);
                if rank_big > *upper {
                    return Err(Error::BoundViolation(format!(
                        "rank {rank} exceeds min-cut {upper} for {spec}, A = {:?}, weight seed {seed}",
                        p.one_based()
                    )));
                }
                Ok(SimulationRecord {
                    arrangement_id: w.arrangement_id as u64,
                    channels: w.channels.clone(),
                    weight_seed_index: s,
                    partition_id: *pid as u64,
                    partition_mask: p.mask(),
                    rank,
                    mincut: upper.to_string(),
                    lower_bound: lower.to_string(),
                    ratio: rank as f64 / big_to_f64(upper),
                    deviated: rank_big < *upper,
                    below_lower_bound: rank_big < *lower,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.extend(rows);
    }
    Ok(out)
}

fn summarize(
    records: &[SimulationRecord],
    arrangements: usize,
    partitions: usize,
    weight_seeds: usize,
    start: Instant,
) -> SimulationSummary {
    let n = records.len();
    let deviations = records.iter().filter(|r| r.deviated).count();
    let exceptions = records.iter().filter(|r| r.below_lower_bound).count();
    let min_ratio = records.iter().map(|r| r.ratio).fold(1.0f64, f64::min);
    let max_diff = records
        .iter()
        .map(|r| r.mincut.parse::<BigUint>().expect("decimal") - BigUint::from(r.rank))
        .max()
        .unwrap_or_default();
    let frac = |k: usize| if n == 0 { 0.0 } else { k as f64 / n as f64 };
    SimulationSummary {
        records: n,
        arrangements,
        partitions,
        weight_seeds,
        deviations,
        deviation_fraction: frac(deviations),
        min_ratio,
        max_deviation: 1.0 - min_ratio,
        max_abs_difference: max_diff.to_string(),
        lower_bound_exceptions: exceptions,
        lower_bound_exception_fraction: frac(exceptions),
        runtime_secs: start.elapsed().as_secs_f64(),
    }
}

/// Writes the records as CSV with the fixed header; LF line endings.
pub fn write_csv<W: Write>(records: &[SimulationRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.write_record(r.csv_row())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrangement_counts_and_order() {
        assert_eq!(arrangement_count(6, 4), 360);
        let pool = [2, 3, 5, 7, 11, 13];
        assert_eq!(unrank_arrangement(&pool, 4, 0).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(unrank_arrangement(&pool, 4, 1).unwrap(), vec![2, 3, 5, 11]);
        assert_eq!(unrank_arrangement(&pool, 4, 359).unwrap(), vec![13, 11, 7, 5]);
        let all: Vec<Vec<usize>> = (0..360).map(|i| unrank_arrangement(&pool, 4, i).unwrap()).collect();
        assert!(all.windows(2).all(|w| {
            let pos = |v: &Vec<usize>| v.iter().map(|x| pool.iter().position(|p| p == x).unwrap()).collect::<Vec<_>>();
            pos(&w[0]) < pos(&w[1])
        }));
        assert!(unrank_arrangement(&pool, 4, 360).is_err());
    }

    #[test]
    fn selection_parsing() {
        assert_eq!("all".parse::<Selection>().unwrap(), Selection::All);
        assert_eq!("sample:50".parse::<Selection>().unwrap(), Selection::Sample(50));
        assert!("sample:0".parse::<Selection>().is_err());
        assert!("some".parse::<Selection>().is_err());
    }

    #[test]
    fn config_validation() {
        let ok = SimulationConfig { n: 8, ..Default::default() };
        assert!(ok.validate().is_ok());
        assert!(SimulationConfig { n: 12, ..Default::default() }.validate().is_err());
        assert!(SimulationConfig { n: 8, dim_pool: vec![2, 1, 3], ..Default::default() }.validate().is_err());
        assert!(SimulationConfig { n: 8, dim_pool: vec![2, 3], ..Default::default() }.validate().is_err());
        assert!(SimulationConfig { n: 32, ..Default::default() }.validate().is_err());
        let sampled = SimulationConfig { n: 32, partitions: Selection::Sample(3), ..Default::default() };
        assert!(sampled.validate().is_ok());
    }

    #[test]
    fn small_sweep_shape() {
        let cfg = SimulationConfig {
            n: 4,
            dim_pool: vec![2, 3, 5],
            arrangements: Selection::All,
            partitions: Selection::All,
            weight_seeds_per_config: 2,
            ..Default::default()
        };
        let rep = run_simulation(&cfg).unwrap();
        assert_eq!(rep.records.len(), 6 * 3 * 2);
        assert_eq!(rep.summary.records, 36);
        for r in &rep.records {
            assert!(r.ratio <= 1.0 + 1e-12);
            assert_eq!(r.deviated, BigUint::from(r.rank) < r.mincut.parse::<BigUint>().unwrap());
        }
        let mut buf = Vec::new();
        write_csv(&rep.records, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "arrangement_id,channels,partition_id,partition_mask,rank,mincut,lower_bound,ratio,deviated\n"
        ));
        assert_eq!(text.lines().count(), 37);
        assert!(!text.contains('\r'));
    }
}
