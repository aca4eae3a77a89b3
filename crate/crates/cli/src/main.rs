use std::fs::{self, File, OpenOptions};
use std::io::{self, BufWriter, Read, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lls_core::drop::DropContext;
use lls_core::enumerate::count_small_oracle;
use lls_core::family::Sink;
use lls_core::render::{render_table, render_tensor, render_twist, Format as RenderFormat};
use lls_core::{
    default_multidegree, verify_family, verify_table, Checkpoint, Enumerator, FamilyConfig, Params, SwapFilter,
    TensorTable, TwistVector, VanishingTable, VerifyConfig,
};

#[derive(Parser)]
#[command(name = "lls", version, about = "Vanishing-order tables of limit linear series on elliptic chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream every table (or a seeded sample) for (g, r, d).
    Enumerate(EnumerateArgs),
    /// Verify one table, or a whole family with a JSONL verdict stream.
    Verify(VerifyArgs),
    /// Print λ, δ, swaps and degeneracy class of a table.
    Inspect(TableArgs),
    /// Print the default multidegree of a table.
    DefaultMd(TableArgs),
    /// Run the dropping rules in the default (or a given) multidegree.
    Drop(DropArgs),
    /// Render a table or its tensor table.
    Render(RenderArgs),
    /// Brute-force table count for small parameters.
    Oracle(FamilyArgs),
}

#[derive(Args, Clone)]
struct FamilyArgs {
    #[arg(long)]
    g: usize,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    d: i32,
    /// Defect budget; defaults to ρ.
    #[arg(long)]
    rho_max: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exhaustive,
    Sampled,
    /// Top swap count exhaustive, lower counts sampled.
    Stratified,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Jsonl,
    Ascii,
    Latex,
}

#[derive(Args)]
struct EnumerateArgs {
    #[command(flatten)]
    family: FamilyArgs,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: Mode,
    /// Draws in sampled mode.
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only these swap counts (comma separated).
    #[arg(long, value_delimiter = ',')]
    swaps: Option<Vec<usize>>,
    /// Stop after this many tables.
    #[arg(long)]
    limit: Option<u64>,
    /// Print only the count per swap number.
    #[arg(long)]
    count: bool,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "jsonl")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// A single table (JSON file, or - for stdin) instead of a family.
    #[arg(long, conflicts_with_all = ["g", "r", "d"])]
    table: Option<PathBuf>,
    #[arg(long, requires_all = ["r", "d"])]
    g: Option<usize>,
    #[arg(long)]
    r: Option<usize>,
    #[arg(long)]
    d: Option<i32>,
    #[arg(long)]
    rho_max: Option<usize>,
    #[arg(long, value_enum, default_value = "exhaustive")]
    mode: Mode,
    /// Draws for sampled strata.
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads.
    #[arg(long, env = "LLS_JOBS", value_parser = clap::value_parser!(u32).range(1..))]
    jobs: Option<u32>,
    /// Checkpoint file; resumed from when it exists.
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    /// JSONL verdict stream (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report file (stdout after the stream when absent).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Most tables per work unit.
    #[arg(long, default_value_t = 4096, value_parser = clap::value_parser!(u64).range(1..))]
    unit_size: u64,
    /// Include full certificates in verdicts.
    #[arg(long)]
    certificates: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct TableArgs {
    /// Table JSON file, or - for stdin.
    #[arg(long)]
    table: PathBuf,
    #[arg(long, value_enum, default_value = "ascii")]
    format: Format,
}

#[derive(Args)]
struct DropArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Twist vector c_2..c_N (comma separated); the default when absent.
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<i64>>,
    /// Print every step.
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct RenderArgs {
    #[command(flatten)]
    table: TableArgs,
    /// Render the tensor table with potential sections highlighted.
    #[arg(long)]
    tensor: bool,
    #[arg(long, value_delimiter = ',')]
    c: Option<Vec<i64>>,
}

/// An error in the command line or its inputs.
#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Usage(msg.into()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}

/// Ok(false) when verification found a failure.
fn run(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Enumerate(a) => enumerate(a),
        Command::Verify(a) => verify(a),
        Command::Inspect(a) => inspect(a),
        Command::DefaultMd(a) => default_md(a),
        Command::Drop(a) => drop_cmd(a),
        Command::Render(a) => render(a),
        Command::Oracle(a) => {
            let rho_max = params(&a)?.rho_max;
            let n = count_small_oracle(a.g, a.r, a.d, rho_max).map_err(|e| usage(e.to_string()))?;
            println!("{}", n);
            Ok(true)
        }
    }
}

fn params(a: &FamilyArgs) -> anyhow::Result<Params> {
    Params::new(a.g, a.r, a.d, a.rho_max).map_err(|e| usage(e.to_string()))
}

fn read_table(path: &Path) -> anyhow::Result<VanishingTable> {
    let text = if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        s
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?
    };
    let t = VanishingTable::from_json(&text).map_err(|e| usage(format!("{}: {}", path.display(), e)))?;
    t.validate().map_err(|e| usage(format!("{}: {}", path.display(), e)))?;
    Ok(t)
}

fn output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn render_format(f: Format) -> anyhow::Result<RenderFormat> {
    match f {
        Format::Ascii => Ok(RenderFormat::Ascii),
        Format::Latex => Ok(RenderFormat::Latex),
        _ => Err(usage("this output needs --format ascii or latex")),
    }
}

fn twist_for(t: &VanishingTable, c: &Option<Vec<i64>>) -> anyhow::Result<TwistVector> {
    let w = match c {
        Some(c) => TwistVector::new(2 * t.d() as i64, c.clone()).map_err(|e| usage(e.to_string()))?,
        None => default_multidegree(t).map_err(|e| usage(e.to_string()))?,
    };
    w.check_chain(t.chain()).map_err(|e| usage(e.to_string()))?;
    Ok(w)
}

fn enumerate(a: EnumerateArgs) -> anyhow::Result<bool> {
    let p = params(&a.family)?;
    if matches!(a.mode, Mode::Stratified) {
        return Err(usage("enumerate supports --mode exhaustive or sampled"));
    }
    if !matches!(a.format, Format::Json | Format::Jsonl | Format::Ascii) {
        return Err(usage("enumerate writes --format json, jsonl or ascii"));
    }
    let filter = match &a.swaps {
        Some(s) if s.iter().any(|&k| k > p.rho_max) => return Err(usage("--swaps exceeds rho-max")),
        Some(s) => SwapFilter(s.clone()),
        None => SwapFilter::all(p.rho_max),
    };
    let e = Enumerator::new(p).map_err(|e| usage(e.to_string()))?;
    let mut out = output(&a.out)?;
    if a.count {
        let counts = e.total_counts();
        let by_swaps: Vec<String> = filter.0.iter().map(|&s| format!("\"{}\":{}", s, counts[s])).collect();
        writeln!(out, "{{\"total\":{},\"by_swaps\":{{{}}}}}", e.total(&filter), by_swaps.join(","))?;
        out.flush()?;
        return Ok(true);
    }
    let limit = a.limit.unwrap_or(u64::MAX);
    let mut written = 0u64;
    let mut err = None;
    let mut emit = |t: VanishingTable, out: &mut dyn Write| -> ControlFlow<()> {
        if written >= limit {
            return ControlFlow::Break(());
        }
        let r = match a.format {
            Format::Ascii => writeln!(out, "{}", render_table(&t, RenderFormat::Ascii)),
            Format::Json => writeln!(out, "{}{}", if written == 0 { "[" } else { "," }, t.to_json()),
            _ => writeln!(out, "{}", t.to_json()),
        };
        written += 1;
        match r {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                err = Some(e);
                ControlFlow::Break(())
            }
        }
    };
    match a.mode {
        Mode::Sampled => {
            for idx in 0..a.samples {
                let Some(t) = e.sample(&filter, a.seed, idx) else { break };
                if emit(t, &mut out).is_break() {
                    break;
                }
            }
        }
        _ => {
            let _ = e.for_each(&filter, &mut |t| emit(t, &mut out));
        }
    }
    if let Some(e) = err {
        return Err(e.into());
    }
    if matches!(a.format, Format::Json) {
        writeln!(out, "{}", if written == 0 { "[]" } else { "]" })?;
    }
    out.flush()?;
    Ok(true)
}

fn verify(a: VerifyArgs) -> anyhow::Result<bool> {
    let vconfig = VerifyConfig { max_candidates: None, include_certificate: a.certificates };
    if let Some(path) = &a.table {
        let t = read_table(path)?;
        let v = verify_table(&t, &vconfig);
        let mut out = output(&a.out)?;
        writeln!(out, "{}", serde_json::to_string_pretty(&v)?)?;
        out.flush()?;
        return Ok(v.pass && v.violations.is_empty());
    }
    let (Some(g), Some(r), Some(d)) = (a.g, a.r, a.d) else {
        return Err(usage("give --table or all of --g, --r, --d"));
    };
    if !matches!(a.format, Format::Json | Format::Jsonl) {
        return Err(usage("verify writes --format json or jsonl"));
    }
    let p = Params::new(g, r, d, a.rho_max).map_err(|e| usage(e.to_string()))?;
    let mut config = match a.mode {
        Mode::Exhaustive => FamilyConfig::exhaustive(p),
        Mode::Sampled => FamilyConfig::sampled(p, a.samples, a.seed),
        Mode::Stratified => FamilyConfig::stratified(p, a.samples, a.seed),
    };
    config.verify = vconfig;
    config.unit_size = a.unit_size;
    let jobs =
        a.jobs.map(|j| j as usize).unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let resume = match &a.checkpoint {
        Some(c) if c.exists() => Some(Checkpoint::load(c).map_err(|e| usage(e.to_string()))?),
        _ => None,
    };
    let mut file: Box<dyn Write> = match (&a.out, &resume) {
        (Some(p), Some(c)) => {
            let f = OpenOptions::new().write(true).open(p).with_context(|| format!("opening {}", p.display()))?;
            let len = f.metadata()?.len();
            if len < c.bytes {
                bail!("{} holds {} bytes but the checkpoint expects {}", p.display(), len, c.bytes);
            }
            f.set_len(c.bytes)?;
            let mut f = f;
            use std::io::Seek;
            f.seek(io::SeekFrom::End(0))?;
            Box::new(BufWriter::new(f))
        }
        (Some(p), None) => {
            Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?))
        }
        (None, _) => Box::new(BufWriter::new(io::stdout().lock())),
    };
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(|e| anyhow!(e))?;
    let mut sink = Sink { out: Some(&mut *file), checkpoint: a.checkpoint.clone() };
    let report = verify_family(&config, &mut sink, resume)?;
    file.flush()?;
    drop(file);
    let text = serde_json::to_string_pretty(&report)?;
    match &a.report {
        Some(p) => fs::write(p, text + "\n").with_context(|| format!("writing {}", p.display()))?,
        None if a.out.is_some() => println!("{}", text),
        None => eprintln!("{}", text),
    }
    Ok(report.ok())
}

fn inspect(a: TableArgs) -> anyhow::Result<bool> {
    let t = read_table(&a.table)?;
    let ls = t.lambda_sequence();
    let swaps = t.find_swaps();
    let class = t.classify_degeneracy();
    let rho = t.rho_accounting().map_err(|e| usage(e.to_string()))?;
    if matches!(a.format, Format::Json | Format::Jsonl) {
        let v = serde_json::json!({
            "n": t.n(), "r": t.r(), "d": t.d(), "rho": t.rho(),
            "lambda": ls.lambda, "bar_lambda": ls.bar_lambda, "delta": ls.delta,
            "swaps": swaps, "class": class, "rho_breakdown": rho,
        });
        println!("{}", serde_json::to_string_pretty(&v)?);
        return Ok(true);
    }
    println!("N = {}, r = {}, d = {}, rho = {}", t.n(), t.r(), t.d(), t.rho());
    println!(
        "defect: initial {}, exceptional {}, missing delta {}, final {}; total {}",
        rho.initial_ramification, rho.exceptional_defect, rho.missing_delta, rho.final_ramification, rho.total
    );
    for i in 1..=t.n() {
        let delta = ls.delta[i].map_or("-".to_string(), |j| j.to_string());
        let lam: Vec<String> = ls.lambda[i].iter().map(|x| x.to_string()).collect();
        println!("column {:>2}: delta {:>2}  lambda ({})", i, delta, lam.join(","));
    }
    let noun = if swaps.len() == 1 { "swap" } else { "swaps" };
    let list: Vec<String> = swaps
        .iter()
        .map(|s| {
            format!(
                "column {}, rows ({},{}), {}",
                s.column,
                s.rows.0,
                s.rows.1,
                if s.minimal { "minimal" } else { "not minimal" }
            )
        })
        .collect();
    if list.is_empty() {
        println!("0 swaps; class {}", class.name());
    } else {
        println!("{} {}: {}; class {}", swaps.len(), noun, list.join("; "), class.name());
    }
    Ok(true)
}

fn default_md(a: TableArgs) -> anyhow::Result<bool> {
    let t = read_table(&a.table)?;
    let w = default_multidegree(&t).map_err(|e| usage(e.to_string()))?;
    match a.format {
        Format::Json | Format::Jsonl => println!("{}", serde_json::to_string(&w)?),
        f => {
            let c: Vec<String> = w.c().iter().map(|x| x.to_string()).collect();
            println!("c = {}", c.join(","));
            print!("{}", render_twist(&w, t.d(), render_format(f)?));
        }
    }
    Ok(true)
}

fn drop_cmd(a: DropArgs) -> anyhow::Result<bool> {
    let t = read_table(&a.table.table)?;
    let w = twist_for(&t, &a.c)?;
    let tt = TensorTable::new(&t);
    let ctx = DropContext::new(&t, &tt, &w, tt.potential_sections(&w));
    let outcome = ctx.drop_all();
    let json = matches!(a.table.format, Format::Json | Format::Jsonl);
    if json {
        println!("{}", serde_json::to_string_pretty(&outcome)?);
    } else {
        let (cert, ok) = match &outcome {
            lls_core::DropOutcome::Success { certificate, .. } => (certificate, true),
            lls_core::DropOutcome::Failure { partial, .. } => (partial, false),
        };
        if a.trace {
            for (k, s) in cert.steps.iter().enumerate() {
                let cols: Vec<String> = s.columns.iter().map(|c| c.to_string()).collect();
                let secs: Vec<String> =
                    s.dropped.iter().map(|x| format!("({},{})[{}-{}]", x.row.0, x.row.1, x.start, x.end)).collect();
                println!("{:>3}. rule ({:?}) at {}: {}", k + 1, s.rule, cols.join("-"), secs.join(" "));
            }
        }
        let blocks: Vec<String> = cert.blocks().iter().map(|(i, j)| format!("{}-{}", i, j)).collect();
        println!(
            "{} sections, {} steps, blocks {{{}}}: {}",
            ctx.sections().len(),
            cert.steps.len(),
            blocks.join(", "),
            if ok { "all dropped" } else { "stuck" }
        );
        if let lls_core::DropOutcome::Failure { remaining, .. } = &outcome {
            for x in remaining {
                println!("remaining ({},{})[{}-{}]", x.row.0, x.row.1, x.start, x.end);
            }
        }
    }
    Ok(outcome.is_success())
}

fn render(a: RenderArgs) -> anyhow::Result<bool> {
    let t = read_table(&a.table.table)?;
    let f = render_format(a.table.format)?;
    if a.tensor {
        let w = twist_for(&t, &a.c)?;
        print!("{}", render_tensor(&t, &w, f));
    } else {
        print!("{}", render_table(&t, f));
    }
    Ok(true)
}
