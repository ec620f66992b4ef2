use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use eaknit::bench::{cphase_sweep, fig4_histogram, theta_grid, BenchManifest, DEFAULT_BINS, DEFAULT_SAMPLES};
use eaknit::bounds::bound_set;
use eaknit::estimator::{locality_audit, mc_estimate_with, product_state, shots_for_bound, Mode, Observable, ShotPlan};
use eaknit::exec::Execution;
use eaknit::gates;
use eaknit::qpd::{build_bell_gate_cut, build_lo_gate_cut, build_psi_gate_cut, build_wire_cut, EffectiveQpd, QpdConfig};
use eaknit::schmidt::operator_schmidt;
use eaknit::{ComplexMatrix, KnitError, ResourceState, C64};

const OUT_DIR_ENV: &str = "EAKNIT_OUT_DIR";

#[derive(Parser)]
#[command(name = "eaknit", version, about = "Entanglement-assisted gate and wire cutting")]
struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Operator Schmidt decomposition of a two-party gate.
    Decompose { gate: String },
    /// Build a gate-cut or wire-cut configuration and audit it.
    Cut(CutArgs),
    /// Monte Carlo estimate of an expectation value through a configuration.
    Estimate(EstimateArgs),
    /// Overhead bounds for a gate.
    Bounds {
        gate: String,
        #[arg(long, default_value = "none")]
        resource: String,
        /// Entanglement parameter for the psi(r) upper bound.
        #[arg(long)]
        r: Option<f64>,
    },
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Args)]
struct CutArgs {
    /// Named gate or JSON matrix file; not used with --wire.
    #[arg(required_unless_present = "wire")]
    gate: Option<String>,
    /// none, bell, bell:<d> or psi:<r>.
    #[arg(long, default_value = "none")]
    resource: String,
    /// Cut a wire instead of a gate.
    #[arg(long)]
    wire: bool,
    /// Wire dimension.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Shot,
    BranchAnalytic,
}

#[derive(Args)]
struct EstimateArgs {
    config: PathBuf,
    /// Product of qubit states, one of 0 1 + - r l per qubit.
    #[arg(long)]
    state: String,
    /// Pauli string, e.g. ZZ.
    #[arg(long)]
    obs: String,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    /// Fixed shot count; overrides --eps/--delta.
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "shot")]
    mode: ModeArg,
    /// Disable the thread pool.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Overhead histogram of parallel Haar-random two-qubit gate pairs.
    Fig4 {
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write one row per sample next to the histogram.
        #[arg(long)]
        raw: bool,
    },
    /// Controlled-phase overhead and Bell-usage sweep over [-pi, pi].
    Cphase {
        /// Number of grid points.
        #[arg(long, default_value_t = 181)]
        grid: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with the exit code it maps to.
enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<KnitError> for Failure {
    fn from(e: KnitError) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Numeric(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

/// 8 significant digits.
fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..8).contains(&e) {
        format!("{:.*}", (7 - e).max(0) as usize, x)
    } else {
        format!("{x:.7e}")
    }
}

fn sig_list(xs: &[f64]) -> String {
    xs.iter().map(|x| sig(*x)).collect::<Vec<_>>().join(", ")
}

#[derive(Deserialize)]
struct GateFile {
    /// Rows of `[re, im]` pairs.
    matrix: Vec<Vec<[f64; 2]>>,
    dims: [usize; 2],
}

fn parse_gate(gate_arg: &str) -> Result<(ComplexMatrix, (usize, usize)), Failure> {
    let lower = gate_arg.trim().to_ascii_lowercase();
    let named = match lower.as_str() {
        "cnot" | "cx" => Some(gates::cnot()),
        "cz" => Some(gates::cz()),
        "swap" => Some(gates::swap()),
        "iswap" => Some(gates::iswap()),
        _ => None,
    };
    if let Some(u) = named {
        return Ok((u, (2, 2)));
    }
    if let Some(arg) = lower.strip_prefix("cphase:") {
        let theta: f64 = arg
            .parse()
            .map_err(|_| Failure::Usage(format!("bad cphase angle '{arg}'")))?;
        return Ok((gates::cphase(theta), (2, 2)));
    }
    let path = Path::new(gate_arg);
    if !path.is_file() {
        return Err(Failure::Usage(format!(
            "unknown gate '{gate_arg}' (expected cnot, cz, swap, iswap, cphase:<theta> or a JSON matrix file)"
        )));
    }
    let doc: GateFile = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let n = doc.matrix.len();
    let [da, db] = doc.dims;
    if n == 0 || da * db != n || doc.matrix.iter().any(|row| row.len() != n) {
        return Err(Failure::Numeric(format!("matrix is not {0}x{0} for dims {da}x{db}", da * db)));
    }
    let data: Vec<C64> = doc.matrix.iter().flatten().map(|[re, im]| C64::new(*re, *im)).collect();
    let u = ComplexMatrix::from_row_slice(n, n, &data);
    if !u.is_unitary(1e-8) {
        return Err(Failure::Numeric("matrix is not unitary within 1e-8".into()));
    }
    Ok((u, (da, db)))
}

fn parse_resource(s: &str) -> Result<ResourceState, Failure> {
    s.parse().map_err(|e: KnitError| Failure::Usage(e.to_string()))
}

fn out_path(explicit: Option<PathBuf>, default_name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."));
        dir.join(default_name)
    })
}

fn write_file(path: &Path, body: &str) -> Outcome {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, body)?;
    Ok(())
}

fn print_json(v: &serde_json::Value) -> Outcome {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn decompose(gate: &str, json: bool) -> Outcome {
    let (u, dims) = parse_gate(gate)?;
    let lud = operator_schmidt(&u, dims)?;
    if json {
        return print_json(&serde_json::json!({
            "lambdas": lud.lambdas,
            "kak_like": lud.kak_like,
            "rank": lud.rank(),
            "dims": [dims.0, dims.1],
        }));
    }
    println!("lambda = ({})", sig_list(&lud.lambdas));
    println!("kak_like = {}", lud.kak_like);
    println!("rank = {}", lud.rank());
    Ok(())
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect()
}

fn cut(args: CutArgs, json: bool) -> Outcome {
    let resource = parse_resource(&args.resource)?;
    let (config, gamma, name): (Option<QpdConfig>, f64, String) = if args.wire {
        let w = build_wire_cut(&resource, args.dim)?;
        (w.config, w.gamma, format!("wire_d{}_{}", args.dim, file_stem(&args.resource)))
    } else {
        let gate_arg = args.gate.as_deref().unwrap_or_default();
        let (u, dims) = parse_gate(gate_arg)?;
        let lud = operator_schmidt(&u, dims)?;
        let c = match resource {
            ResourceState::Separable => build_lo_gate_cut(&lud)?,
            ResourceState::Bell { d: 2 } => build_bell_gate_cut(&lud)?,
            ResourceState::Psi { r } => build_psi_gate_cut(&lud, r)?,
            other => return Err(Failure::Usage(format!("gate cuts take none, bell or psi:<r>, not {other}"))),
        };
        let g = c.gamma;
        let stem = match Path::new(gate_arg) {
            p if p.is_file() => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
            _ => gate_arg.to_string(),
        };
        (Some(c), g, format!("gate_{}_{}", file_stem(&stem), file_stem(&args.resource)))
    };
    let Some(config) = config else {
        if json {
            return print_json(&serde_json::json!({"gamma": gamma, "constructive": false}));
        }
        println!("gamma = {}", sig(gamma));
        println!("no configuration is constructed for this resource and dimension");
        return Ok(());
    };
    let audit = locality_audit(&config)?;
    let path = out_path(args.out, &format!("{name}.json"));
    write_file(&path, &(config.to_json()? + "\n"))?;
    if json {
        return print_json(&serde_json::json!({
            "gamma": gamma,
            "terms": config.terms.len(),
            "audit": audit,
            "config": path,
        }));
    }
    println!("gamma = {}", sig(gamma));
    println!("terms = {}", config.terms.len());
    println!("audit = {} ({} classical bits)", audit.class, audit.classical_bits);
    println!("config = {}", path.display());
    Ok(())
}

fn estimate(args: EstimateArgs) -> Outcome {
    let config = QpdConfig::from_json(&std::fs::read_to_string(&args.config)?)?;
    let rho = product_state(&args.state)?;
    let obs = Observable::pauli(&args.obs)?;
    let plan = match args.shots {
        Some(n) => ShotPlan::fixed(n),
        None => shots_for_bound(config.gamma, args.eps, args.delta, obs.bound())?,
    };
    let mode = match args.mode {
        ModeArg::Shot => Mode::Shot,
        ModeArg::BranchAnalytic => Mode::BranchAnalytic,
    };
    let exec = if args.sequential { Execution::Sequential } else { Execution::default() };
    let eff = EffectiveQpd::from_config(&config)?;
    let r = mc_estimate_with(&eff, &rho, &obs, &plan, args.seed, mode, exec)?;
    print_json(&serde_json::to_value(&r)?)
}

fn bounds(gate: &str, resource: &str, r: Option<f64>) -> Outcome {
    let (u, dims) = parse_gate(gate)?;
    let res = parse_resource(resource)?;
    let lud = operator_schmidt(&u, dims)?;
    let b = bound_set(&lud, Some(&res), r)?;
    println!("{}", b.to_json()?);
    Ok(())
}

fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn bench(cmd: BenchCommand, json: bool) -> Outcome {
    let start = Instant::now();
    let (seed, samples, bins, mut outputs) = match cmd {
        BenchCommand::Fig4 { samples, seed, bins, out, raw } => {
            let h = fig4_histogram(samples, seed, bins, Execution::default())?;
            let path = out_path(out, "fig4.csv");
            write_file(&path, &h.to_csv())?;
            let mut outputs = vec![path.clone()];
            if raw {
                let raw_path = path.with_extension("raw.csv");
                write_file(&raw_path, &h.raw_csv())?;
                outputs.push(raw_path);
            }
            if !json {
                println!("median gamma_free = {}", sig(h.free.median));
                println!("median gamma_bell = {}", sig(h.bell.median));
                println!("median ratio = {}", sig(h.median_ratio()));
            }
            (seed, samples, bins, outputs)
        }
        BenchCommand::Cphase { grid, seed, out } => {
            let s = cphase_sweep(&theta_grid(grid), seed)?;
            let path = out_path(out, "cphase.csv");
            write_file(&path, &s.to_csv())?;
            if !json {
                println!("break-even (closed form) theta = {}", sig(s.break_even_closed_form));
                println!("break-even (decomposition) theta = {}", sig(s.break_even_svd));
            }
            (seed, grid, 0, vec![path])
        }
    };
    let manifest_file = manifest_path(&outputs[0]);
    outputs.push(manifest_file.clone());
    let manifest = BenchManifest {
        seed,
        samples,
        bins,
        outputs,
        wall_time: start.elapsed().as_secs_f64(),
    };
    manifest.write(&manifest_file)?;
    if json {
        return print_json(&serde_json::to_value(&manifest)?);
    }
    for p in &manifest.outputs {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Decompose { gate } => decompose(&gate, cli.json),
        Command::Cut(args) => cut(args, cli.json),
        Command::Estimate(args) => estimate(args),
        Command::Bounds { gate, resource, r } => bounds(&gate, &resource, r),
        Command::Bench(cmd) => bench(cmd, cli.json),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
