//! The `dt` command line: argument parsing and dispatch to the library.
//!
//! Exit codes: 0 on success, 1 for usage errors (bad flags, unparseable
//! values, out-of-range slices), 2 for data errors (missing or corrupt
//! tables, unknown ids). Stdout carries only ids and paths.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::bench::{emit_report, run_bench, BenchConfig, GenSpec, ReportFormat};
use crate::catalog::Catalog;
use crate::container::{read_coo_file, read_dense_file, write_coo_file, write_dense_file};
use crate::error::{Error, Result};
use crate::layout::{self, AnyTensor, EncodeOptions, Layout};
use crate::tensor::{classify, dense_to_coo, DimRange, Shape, SliceSpec, Sparsity, TensorId};

#[derive(Debug, Parser)]
#[command(name = "dt", version, about = "Store and read tensors in table layouts")]
struct Args {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Clone, PartialEq, Subcommand)]
pub enum CliCommand {
    /// Encode a `.dten` or `.dcoo` file into the table directory.
    Write {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        table: PathBuf,
        /// ftsf, coo, csr, csc, csf, bsgs or auto.
        #[arg(long)]
        layout: String,
        #[arg(long)]
        id: Option<String>,
        #[arg(long)]
        chunk_dim: Option<usize>,
        /// Comma-separated block extents over the trailing dims.
        #[arg(long)]
        block_shape: Option<String>,
    },
    /// Write a stored tensor back out as `.dten` (ftsf) or `.dcoo`.
    Read {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a slice such as "0:10,:,3".
    Slice {
        #[arg(long)]
        table: PathBuf,
        #[arg(long)]
        id: String,
        #[arg(long)]
        spec: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Benchmark layouts on a generated sparse tensor.
    Bench {
        #[arg(long)]
        shape: String,
        #[arg(long)]
        density: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        layouts: String,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long)]
        slice: Option<String>,
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        format: String,
    },
    /// List tables, tensors, row counts and sizes.
    Inspect {
        #[arg(long)]
        table: PathBuf,
    },
}

/// What one invocation printed and how it exited.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn parse_error(token: &str, position: usize, reason: &str) -> Error {
    Error::Parse {
        token: token.to_string(),
        position,
        reason: reason.to_string(),
    }
}

/// Comma-separated tokens with their byte offsets in `text`.
fn tokens(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.split(',').scan(0, |pos, tok| {
        let at = *pos;
        *pos += tok.len() + 1;
        Some((at, tok))
    })
}

fn parse_index(tok: &str, at: usize) -> Result<usize> {
    tok.trim()
        .parse()
        .map_err(|_| parse_error(tok, at, "expected a non-negative integer"))
}

/// Parses numpy-style slice text: one token per dimension, each `:`,
/// `a:b`, or a single index `k` meaning `k:k+1`.
pub fn parse_slice_spec(text: &str) -> Result<SliceSpec> {
    let mut ranges = Vec::new();
    for (at, tok) in tokens(text) {
        let t = tok.trim();
        let range = match t.split_once(':') {
            _ if t == ":" => DimRange::Full,
            Some((a, b)) => {
                let (a, b) = (parse_index(a, at)?, parse_index(b, at)?);
                if a >= b {
                    return Err(parse_error(tok, at, "range start must be below its end"));
                }
                DimRange::range(a, b)
            }
            None => DimRange::index(parse_index(t, at)?),
        };
        ranges.push(range);
    }
    Ok(SliceSpec::new(ranges))
}

/// Parses "a,b,c" into positive dimensions.
pub fn parse_dims(text: &str) -> Result<Vec<usize>> {
    tokens(text)
        .map(|(at, tok)| match parse_index(tok, at)? {
            0 => Err(parse_error(tok, at, "dimensions must be positive")),
            d => Ok(d),
        })
        .collect()
}

fn parse_layouts(text: &str) -> Result<Vec<Layout>> {
    tokens(text)
        .map(|(at, tok)| {
            tok.trim()
                .parse()
                .map_err(|_| parse_error(tok, at, "unknown layout"))
        })
        .collect()
}

fn is_usage(e: &Error) -> bool {
    matches!(
        e,
        Error::Parse { .. }
            | Error::InvalidId(_)
            | Error::BadChunkDim { .. }
            | Error::BadBlockShape(_)
            | Error::RangeOutOfBounds(_)
            | Error::DensityTooHigh(_)
            | Error::RankTooLow(_)
    )
}

enum Input {
    Dense(crate::tensor::DenseTensor),
    Sparse(crate::tensor::CooTensor),
}

fn read_input(path: &Path) -> Result<Input> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("dten") => Ok(Input::Dense(read_dense_file(path)?)),
        Some("dcoo") => Ok(Input::Sparse(read_coo_file(path)?)),
        _ => Err(parse_error(
            &path.display().to_string(),
            0,
            "input must end in .dten or .dcoo",
        )),
    }
}

/// Opens an existing table directory; reads never create one.
fn open_existing(table: &Path) -> Result<Catalog> {
    if !table.is_dir() {
        return Err(Error::NotFound(table.display().to_string()));
    }
    Catalog::open_dir(table)
}

fn write_tensor(out: &Path, t: &AnyTensor) -> Result<()> {
    match t {
        AnyTensor::Dense(d) => write_dense_file(out, d),
        AnyTensor::Sparse(c) => write_coo_file(out, c),
    }
}

fn run_write(
    input: &Path,
    table: &Path,
    layout: &str,
    id: Option<&str>,
    chunk_dim: Option<usize>,
    block_shape: Option<&str>,
) -> Result<String> {
    let tensor = read_input(input)?;
    let (source, dtype): (AnyTensor, _) = match tensor {
        Input::Dense(d) => {
            let dtype = d.dtype();
            (d.into(), dtype)
        }
        Input::Sparse(c) => (c.into(), crate::tensor::ElementType::F64),
    };
    let layout = match layout {
        "auto" => match classify(&source.to_coo()) {
            Sparsity::General => Layout::Ftsf,
            Sparsity::Sparse => Layout::Bsgs,
        },
        other => other
            .parse()
            .map_err(|_| parse_error(other, 0, "unknown layout"))?,
    };
    let source = match (&source, layout.is_sparse()) {
        (AnyTensor::Dense(d), true) => AnyTensor::Sparse(dense_to_coo(d)),
        (AnyTensor::Sparse(_), false) => AnyTensor::Dense(source.to_dense()?),
        _ => source,
    };
    let rank = source.shape().rank();
    let id = match id {
        Some(s) => TensorId::new(s)?,
        None => TensorId::generate(layout.name(), rank, &mut rand::thread_rng()),
    };
    let opts = EncodeOptions {
        chunk_dim,
        block_shape: block_shape.map(parse_dims).transpose()?,
        ..EncodeOptions::default()
    };
    let mut cat = Catalog::open_dir(table)?;
    let mut enc = layout::encode(layout, &source, &id, &opts)?;
    enc.dtype = dtype;
    cat.persist(&enc)?;
    Ok(format!("{id}\n"))
}

#[allow(clippy::too_many_arguments)]
fn run_bench_cmd(
    shape: &str,
    density: f64,
    seed: u64,
    layouts: &str,
    trials: usize,
    slice: Option<&str>,
    report: &Path,
    format: &str,
) -> Result<String> {
    let format: ReportFormat = format.parse()?;
    let g = GenSpec::new(Shape::new(parse_dims(shape)?)?, density, seed);
    let cfg = BenchConfig {
        layouts: parse_layouts(layouts)?,
        trials,
        slice: slice.map(parse_slice_spec).transpose()?,
        ..BenchConfig::default()
    };
    let r = run_bench(&g, &cfg)?;
    std::fs::write(report, emit_report(&r, format))?;
    Ok(format!("{}\n", report.display()))
}

fn run_inspect(table: &Path) -> Result<String> {
    let cat = open_existing(table)?;
    let mut out = String::new();
    for t in cat.inspect() {
        out.push_str(&format!(
            "table\t{}\t{}\tsegments={}\tbytes={}\n",
            t.layout, t.schema, t.segments, t.size_bytes
        ));
        for (id, e) in &t.tensors {
            let dims: Vec<String> = e.dense_shape.dims().iter().map(|d| d.to_string()).collect();
            out.push_str(&format!(
                "tensor\t{id}\t{}\t{}\t{:?}\trows={}\n",
                e.layout,
                dims.join("x"),
                e.dtype,
                e.rows
            ));
        }
    }
    Ok(out)
}

/// Runs one parsed command, returning its stdout text.
pub fn run(cmd: &CliCommand) -> Result<String> {
    match cmd {
        CliCommand::Write {
            input,
            table,
            layout,
            id,
            chunk_dim,
            block_shape,
        } => run_write(input, table, layout, id.as_deref(), *chunk_dim, block_shape.as_deref()),
        CliCommand::Read { table, id, out } => {
            let cat = open_existing(table)?;
            let (t, _) = cat.read(&TensorId::new(id.as_str())?)?;
            write_tensor(out, &t)?;
            Ok(format!("{}\n", out.display()))
        }
        CliCommand::Slice { table, id, spec, out } => {
            let s = parse_slice_spec(spec)?;
            let cat = open_existing(table)?;
            let (t, _) = cat.read_slice(&TensorId::new(id.as_str())?, &s)?;
            write_tensor(out, &t)?;
            Ok(format!("{}\n", out.display()))
        }
        CliCommand::Bench {
            shape,
            density,
            seed,
            layouts,
            trials,
            slice,
            report,
            format,
        } => run_bench_cmd(shape, *density, *seed, layouts, *trials, slice.as_deref(), report, format),
        CliCommand::Inspect { table } => run_inspect(table),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn dispatch<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let parsed = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                Outcome {
                    code: 1,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                Outcome {
                    code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    match run(&parsed.command) {
        Ok(stdout) => Outcome {
            code: 0,
            stdout,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: if is_usage(&e) { 1 } else { 2 },
            stdout: String::new(),
            stderr: format!("dt: {e}\n"),
        },
    }
}
