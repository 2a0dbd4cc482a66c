//! Synthetic sparse tensors and repeated-trial measurement of each layout.
//!
//! Sizes and row counts are deterministic for a given [`GenSpec`]; wall
//! clock timings are recorded per phase so that write and read times are
//! exact sums of their parts.

use std::collections::HashSet;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;
use crate::container::{coo_container_len, dense_container_len};
use crate::error::{Error, Result};
use crate::layout::{self, AnyTensor, EncodeOptions, Layout};
use crate::store::object_store::{LocalFsStore, MemoryStore, ObjectStore};
use crate::tensor::{coo_to_dense, CooTensor, ElementType, Shape, SliceSpec, TensorId};

/// Largest element count materialized densely (512 MiB of f64).
pub const DEFAULT_DENSE_CAP: usize = 1 << 26;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValueDist {
    /// Uniform in (0, 1].
    UnitUniform,
    /// Integers 1..=100, like trip counts.
    PositiveCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub shape: Shape,
    pub density: f64,
    pub seed: u64,
    pub value_dist: ValueDist,
}

impl GenSpec {
    pub fn new(shape: Shape, density: f64, seed: u64) -> Self {
        GenSpec {
            shape,
            density,
            seed,
            value_dist: ValueDist::PositiveCounts,
        }
    }
}

pub fn target_nnz(g: &GenSpec) -> Result<usize> {
    if !(0.0..=1.0).contains(&g.density) {
        return Err(Error::DensityTooHigh(g.density));
    }
    Ok((g.density * g.shape.element_count() as f64).round() as usize)
}

/// Draws exactly `target_nnz` distinct coordinates by rejection sampling.
/// Above half density the zeros are sampled instead, so the loop always
/// terminates quickly.
pub fn gen_sparse(g: &GenSpec) -> Result<CooTensor> {
    let k = target_nnz(g)?;
    let total = g.shape.element_count();
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let complement = k > total / 2;
    let draws = if complement { total - k } else { k };
    let mut picked: HashSet<usize> = HashSet::with_capacity(draws);
    while picked.len() < draws {
        picked.insert(rng.gen_range(0..total));
    }
    let offsets: Vec<usize> = if complement {
        (0..total).filter(|o| !picked.contains(o)).collect()
    } else {
        let mut v: Vec<usize> = picked.into_iter().collect();
        v.sort_unstable();
        v
    };
    let values = offsets
        .iter()
        .map(|_| match g.value_dist {
            ValueDist::UnitUniform => 1.0 - rng.gen::<f64>(),
            ValueDist::PositiveCounts => rng.gen_range(1..=100u32) as f64,
        })
        .collect();
    Ok(CooTensor::from_sorted_offsets(g.shape.clone(), &offsets, values))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Baseline {
    /// The `.dten` container of the densified tensor.
    DenseBinary,
    /// The `.dcoo` container.
    CooBinary,
}

pub fn baseline_bytes(c: &CooTensor, kind: Baseline, dense_cap: usize) -> Result<u64> {
    match kind {
        Baseline::CooBinary => Ok(coo_container_len(c.rank(), c.nnz()) as u64),
        Baseline::DenseBinary => {
            let n = c.shape().element_count();
            if n > dense_cap {
                return Err(Error::TooLargeForDense(n));
            }
            Ok(dense_container_len(c.shape(), ElementType::F64) as u64)
        }
    }
}

/// Dense layouts compare against the dense file, sparse ones against COO.
pub fn baseline_for(layout: Layout) -> Baseline {
    if layout.is_sparse() {
        Baseline::CooBinary
    } else {
        Baseline::DenseBinary
    }
}

/// Nanoseconds spent in each phase of one trial.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialPhases {
    pub t_en: u64,
    pub t_ser: u64,
    pub t_des: u64,
    pub t_de: u64,
    pub t_slice_des: u64,
    pub t_slice_de: u64,
    pub t_write: u64,
    pub t_read_tensor: u64,
    pub t_read_slice: u64,
}

impl TrialPhases {
    fn new(t_en: u64, t_ser: u64, t_des: u64, t_de: u64, t_slice_des: u64, t_slice_de: u64) -> Self {
        TrialPhases {
            t_en,
            t_ser,
            t_des,
            t_de,
            t_slice_des,
            t_slice_de,
            t_write: t_ser + t_en,
            t_read_tensor: t_des + t_de,
            t_read_slice: t_slice_des + t_slice_de,
        }
    }

    /// Whether the totals are the sums of their phases.
    pub fn is_composed(&self) -> bool {
        self.t_write == self.t_ser + self.t_en
            && self.t_read_tensor == self.t_des + self.t_de
            && self.t_read_slice == self.t_slice_des + self.t_slice_de
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: u64,
    pub min: u64,
    pub max: u64,
}

impl Summary {
    fn of(xs: impl Iterator<Item = u64> + Clone) -> Self {
        let n = xs.clone().count().max(1) as u64;
        Summary {
            mean: xs.clone().sum::<u64>() / n,
            min: xs.clone().min().unwrap_or(0),
            max: xs.max().unwrap_or(0),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub t_en: Summary,
    pub t_ser: Summary,
    pub t_des: Summary,
    pub t_de: Summary,
    pub t_write: Summary,
    pub t_read_tensor: Summary,
    pub t_read_slice: Summary,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowsScanned {
    pub full: u64,
    pub slice: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutResult {
    pub layout: String,
    pub s_encode_bytes: u64,
    pub s_baseline_bytes: u64,
    pub baseline: Baseline,
    pub c_r: f64,
    pub timings: Timings,
    pub rows_scanned: RowsScanned,
    pub trials: Vec<TrialPhases>,
}

impl LayoutResult {
    /// Compression ratio and phase sums hold exactly.
    pub fn is_consistent(&self) -> bool {
        self.c_r == self.s_encode_bytes as f64 / self.s_baseline_bytes as f64
            && self.trials.iter().all(TrialPhases::is_composed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecEcho {
    pub shape: Vec<usize>,
    pub density: f64,
    pub seed: u64,
    pub trials: usize,
    pub value_dist: ValueDist,
    pub nnz: usize,
    pub slice: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub spec: SpecEcho,
    pub results: Vec<LayoutResult>,
    pub environment: String,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub layouts: Vec<Layout>,
    pub trials: usize,
    /// Defaults to the first index of the first dimension.
    pub slice: Option<SliceSpec>,
    /// Directory for per-trial stores; in memory when unset.
    pub store_root: Option<PathBuf>,
    pub options: EncodeOptions,
    pub dense_cap: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            layouts: Layout::ALL.to_vec(),
            trials: 10,
            slice: None,
            store_root: None,
            options: EncodeOptions::default(),
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

fn nanos(start: Instant) -> u64 {
    start.elapsed().as_nanos() as u64
}

fn fresh_store(cfg: &BenchConfig, trial: usize) -> Result<Arc<dyn ObjectStore>> {
    Ok(match &cfg.store_root {
        Some(root) => {
            let dir = root.join(format!("trial-{trial:03}"));
            if dir.exists() {
                std::fs::remove_dir_all(&dir)?;
            }
            Arc::new(LocalFsStore::new(dir)?)
        }
        None => Arc::new(MemoryStore::new()),
    })
}

fn bench_layout(
    layout: Layout,
    source: &AnyTensor,
    slice: &SliceSpec,
    cfg: &BenchConfig,
) -> Result<LayoutResult> {
    let id = TensorId::new(format!("bench-{layout}"))?;
    let want_slice: AnyTensor = match source {
        AnyTensor::Dense(t) => crate::tensor::slice_dense(t, slice)?.into(),
        AnyTensor::Sparse(c) => c.slice(slice)?.into(),
    };
    let mut trials = Vec::with_capacity(cfg.trials);
    let mut s_encode_bytes = 0;
    let mut rows_scanned = RowsScanned::default();
    for r in 0..cfg.trials {
        let mut cat = Catalog::open(fresh_store(cfg, r)?)?;

        let t = Instant::now();
        let enc = layout::encode(layout, source, &id, &cfg.options)?;
        let t_en = nanos(t);
        let t = Instant::now();
        cat.persist(&enc)?;
        let t_ser = nanos(t);
        drop(enc);

        let t = Instant::now();
        let (_, rows, full_stats) = cat.fetch(&id)?;
        let t_des = nanos(t);
        let t = Instant::now();
        let back = layout::decode(layout, &rows, cat.entry(&id)?)?;
        let t_de = nanos(t);
        if !back.bitwise_eq(source) {
            return Err(Error::VerificationFailed(layout.to_string()));
        }
        drop((rows, back));

        let t = Instant::now();
        let (fetched, slice_stats) = cat.fetch_slice(&id, slice)?;
        let t_slice_des = nanos(t);
        let t = Instant::now();
        let got = cat.decode_slice(&id, &fetched, slice)?;
        let t_slice_de = nanos(t);
        if !got.bitwise_eq(&want_slice) {
            return Err(Error::VerificationFailed(format!("{layout} slice")));
        }

        s_encode_bytes = cat.table(layout).expect("written").table_size_bytes();
        rows_scanned = RowsScanned {
            full: full_stats.rows_scanned,
            slice: slice_stats.rows_scanned,
        };
        trials.push(TrialPhases::new(t_en, t_ser, t_des, t_de, t_slice_des, t_slice_de));
    }
    let coo = source.to_coo();
    let baseline = baseline_for(layout);
    let s_baseline_bytes = baseline_bytes(&coo, baseline, cfg.dense_cap)?;
    let pick = |f: fn(&TrialPhases) -> u64| Summary::of(trials.iter().map(f));
    let timings = Timings {
        t_en: pick(|p| p.t_en),
        t_ser: pick(|p| p.t_ser),
        t_des: pick(|p| p.t_des),
        t_de: pick(|p| p.t_de),
        t_write: pick(|p| p.t_write),
        t_read_tensor: pick(|p| p.t_read_tensor),
        t_read_slice: pick(|p| p.t_read_slice),
    };
    Ok(LayoutResult {
        layout: layout.to_string(),
        s_encode_bytes,
        s_baseline_bytes,
        baseline,
        c_r: s_encode_bytes as f64 / s_baseline_bytes as f64,
        timings,
        rows_scanned,
        trials,
    })
}

/// Generates the tensor once, then for each layout runs `trials` rounds of
/// encode, write, full read and slice read, checking every decoded result
/// against the source before recording it.
pub fn run_bench(g: &GenSpec, cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.trials == 0 {
        return Err(Error::Parse {
            token: "0".into(),
            position: 0,
            reason: "trials must be at least 1".into(),
        });
    }
    let coo = gen_sparse(g)?;
    let slice = cfg
        .slice
        .clone()
        .unwrap_or_else(|| SliceSpec::leading(g.shape.rank(), 0, 1));
    slice.bounds(&g.shape)?;
    let mut results = Vec::with_capacity(cfg.layouts.len());
    let sparse = AnyTensor::Sparse(coo.clone());
    for &layout in &cfg.layouts {
        let source = if layout.is_sparse() {
            sparse.clone()
        } else {
            let n = g.shape.element_count();
            if n > cfg.dense_cap {
                return Err(Error::TooLargeForDense(n));
            }
            AnyTensor::Dense(coo_to_dense(&coo)?)
        };
        results.push(bench_layout(layout, &source, &slice, cfg)?);
    }
    Ok(BenchReport {
        spec: SpecEcho {
            shape: g.shape.dims().to_vec(),
            density: g.density,
            seed: g.seed,
            trials: cfg.trials,
            value_dist: g.value_dist,
            nnz: coo.nnz(),
            slice: slice.to_string(),
        },
        results,
        environment: format!(
            "{}-{}, single-threaded, {} store, timings in nanoseconds",
            std::env::consts::OS,
            std::env::consts::ARCH,
            if cfg.store_root.is_some() { "local filesystem" } else { "in-memory" }
        ),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(Error::Parse {
                token: other.into(),
                position: 0,
                reason: "format must be json or csv".into(),
            }),
        }
    }
}

const CSV_METRICS: [&str; 7] = ["t_en", "t_ser", "t_des", "t_de", "t_write", "t_read_tensor", "t_read_slice"];

/// Serializes a report. JSON keeps every field; CSV has one row per layout
/// with timing summaries flattened to `{metric}_{mean,min,max}`.
pub fn emit_report(r: &BenchReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(r).expect("report is always serializable");
            out.push(b'\n');
            out
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec![
                "layout".to_string(),
                "s_encode_bytes".into(),
                "s_baseline_bytes".into(),
                "baseline".into(),
                "c_r".into(),
            ];
            for m in CSV_METRICS {
                for stat in ["mean", "min", "max"] {
                    header.push(format!("{m}_{stat}"));
                }
            }
            header.extend(["rows_scanned_full".into(), "rows_scanned_slice".into(), "trials".into()]);
            w.write_record(&header).expect("in-memory write");
            for res in &r.results {
                let t = &res.timings;
                let sums = [t.t_en, t.t_ser, t.t_des, t.t_de, t.t_write, t.t_read_tensor, t.t_read_slice];
                let mut rec = vec![
                    res.layout.clone(),
                    res.s_encode_bytes.to_string(),
                    res.s_baseline_bytes.to_string(),
                    format!("{:?}", res.baseline),
                    res.c_r.to_string(),
                ];
                for s in sums {
                    rec.extend([s.mean.to_string(), s.min.to_string(), s.max.to_string()]);
                }
                rec.extend([
                    res.rows_scanned.full.to_string(),
                    res.rows_scanned.slice.to_string(),
                    res.trials.len().to_string(),
                ]);
                w.write_record(&rec).expect("in-memory write");
            }
            w.into_inner().expect("in-memory flush")
        }
    }
}

pub fn parse_report(json: &[u8]) -> Result<BenchReport> {
    Ok(serde_json::from_slice(json)?)
}
