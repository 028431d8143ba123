//! `rcmor` command-line front end.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage or input error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use rcmor::analysis::{
    match_order, moments, relative_errors, sweep_parallel, write_error_csv, write_sweep_csv,
    AnalysisError, Axis, FrequencyGrid, MomentSeries,
};
use rcmor::netlist::{
    assemble_mna, gen_synthetic, load_reduced, load_sparse_triplets, parse_netlist, save_reduced,
    write_netlist, MnaSystem, NetlistError, PortSource, SyntheticSpec, Topology,
};
use rcmor::reduction::{
    prima_reduce, sip_reduce, smp_reduce, turbomor_reduce, ExpansionSchedule, Method,
    ReducedSystem, ReductionError, ReductionOptions,
};
use rcmor::LinearSystem;

#[derive(Parser)]
#[command(
    name = "rcmor",
    version,
    about = "Multipoint model order reduction for many-port RC networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic RC netlist.
    Gen(GenArgs),
    /// Reduce a circuit and write the reduced model.
    Reduce(ReduceArgs),
    /// Sample the transfer function on a frequency grid (CSV).
    Sweep(SweepArgs),
    /// Relative errors of a reduced model against the original.
    Compare(CompareArgs),
    /// Print moments about an expansion point.
    Moments(MomentsArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "mesh")]
    topology: Topology,
    /// Number of non-ground nodes.
    #[arg(long, short)]
    n: usize,
    /// Number of ports.
    #[arg(long, short)]
    p: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output netlist; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Where a system comes from: a netlist, a pair of triplet files, or a
/// reduced model written by `reduce`.
#[derive(Args, Default, Clone)]
struct InputArgs {
    #[arg(long)]
    netlist: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["G", "C"])]
    triplets: Option<Vec<PathBuf>>,
    /// With `--triplets`: the first P indices are the ports.
    #[arg(long, value_name = "P")]
    ports_first: Option<usize>,
    /// With `--triplets`: file of `index [name]` lines naming the ports.
    #[arg(long)]
    ports_file: Option<PathBuf>,
    /// A reduced model (JSON metadata written by `reduce`).
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[command(flatten)]
    input: InputArgs,
    /// JSON run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    method: Option<Method>,
    /// Expansion points in rad/s, e.g. `0,1e9,1e12`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    points: Option<Vec<f64>>,
    /// Block count for turbomor / prima.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    no_sparsity_control: bool,
    #[arg(long)]
    no_deflation: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Model file stem inside the output directory.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct GridArgs {
    /// `lo:hi:n` log-spaced grid in Hz; default 100 points over [1, 1e13] plus DC.
    #[arg(long)]
    grid: Option<FrequencyGrid>,
}

impl GridArgs {
    fn grid(&self) -> FrequencyGrid {
        self.grid.clone().unwrap_or_default()
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value = "imag")]
    axis: Axis,
    /// Output CSV; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// The original system.
    #[command(flatten)]
    input: InputArgs,
    /// The reduced model to check.
    #[arg(long)]
    reduced: PathBuf,
    #[command(flatten)]
    grid: GridArgs,
    /// Error CSV; only the summary is printed if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0.0)]
    s0: f64,
    /// Number of moments.
    #[arg(long, short = 'k', default_value_t = 4)]
    count: usize,
    /// Second model; prints the measured match order.
    #[arg(long)]
    against: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

/// Reduction settings as read from `--config`. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    netlist: Option<PathBuf>,
    triplets: Option<[PathBuf; 2]>,
    ports_first: Option<usize>,
    ports_file: Option<PathBuf>,
    method: Option<Method>,
    points: Option<Vec<f64>>,
    order: Option<usize>,
    eta: Option<f64>,
    delta: Option<f64>,
    sparsity_control: Option<bool>,
    deflation: Option<bool>,
    out: Option<PathBuf>,
    name: Option<String>,
}

#[derive(Serialize)]
struct ReduceReport {
    schema: u32,
    method: Method,
    dim: usize,
    nnz: usize,
    blocks: Vec<usize>,
    points: Vec<f64>,
    ports: usize,
    original_dim: usize,
    wall_time_s: f64,
    model: PathBuf,
}

enum Failure {
    Usage(anyhow::Error),
    Numerical(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numerical(_) => 1,
        }
    }
}

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        match e {
            ReductionError::EmptySchedule
            | ReductionError::InvalidPoint(_)
            | ReductionError::InvalidOptions(_)
            | ReductionError::OrderTooLarge { .. } => Failure::Usage(e.into()),
            _ => Failure::Numerical(e.into()),
        }
    }
}

impl From<AnalysisError> for Failure {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::PortMismatch { .. }
            | AnalysisError::InvalidGrid(_)
            | AnalysisError::Csv { .. } => Failure::Usage(e.into()),
            AnalysisError::Io(_) => Failure::Usage(e.into()),
            AnalysisError::Reduction(r) => r.into(),
            _ => Failure::Numerical(e.into()),
        }
    }
}

impl From<NetlistError> for Failure {
    fn from(e: NetlistError) -> Self {
        match e {
            NetlistError::Sparse(_) => Failure::Numerical(e.into()),
            _ => Failure::Usage(e.into()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.into())
    }
}

/// A loaded system of either kind.
enum System {
    Full(MnaSystem),
    Reduced(ReducedSystem),
}

impl System {
    fn as_dyn(&self) -> &(dyn LinearSystem + Sync) {
        match self {
            System::Full(s) => s,
            System::Reduced(s) => s,
        }
    }
}

fn read_netlist(path: &Path) -> Result<MnaSystem, Failure> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    let nl = parse_netlist(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)?;
    Ok(assemble_mna(&nl)?)
}

fn load_triplets(
    paths: &[PathBuf],
    first: Option<usize>,
    file: Option<PathBuf>,
) -> Result<MnaSystem, Failure> {
    let ports = match (first, file) {
        (Some(p), None) => PortSource::First(p),
        (None, Some(f)) => PortSource::File(f),
        _ => {
            return Err(usage(anyhow!(
                "--triplets needs exactly one of --ports-first or --ports-file"
            )))
        }
    };
    Ok(load_sparse_triplets(&paths[0], &paths[1], &ports)?.system)
}

fn load_input(input: &InputArgs) -> Result<System, Failure> {
    let given = [
        input.netlist.is_some(),
        input.triplets.is_some(),
        input.model.is_some(),
    ];
    if given.iter().filter(|&&g| g).count() != 1 {
        return Err(usage(anyhow!(
            "give exactly one of --netlist, --triplets or --model"
        )));
    }
    if input.triplets.is_none() && (input.ports_first.is_some() || input.ports_file.is_some()) {
        return Err(usage(anyhow!(
            "--ports-first / --ports-file only apply to --triplets"
        )));
    }
    if let Some(path) = &input.netlist {
        return Ok(System::Full(read_netlist(path)?));
    }
    if let Some(paths) = &input.triplets {
        return Ok(System::Full(load_triplets(
            paths,
            input.ports_first,
            input.ports_file.clone(),
        )?));
    }
    let path = input.model.as_ref().expect("one source is present");
    Ok(System::Reduced(load_reduced(path)?))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(usage),
        None => Ok(io::stdout().lock().write_all(bytes)?),
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), Failure> {
    let spec = SyntheticSpec::new(args.topology, args.n, args.p, args.seed);
    let nl = gen_synthetic(&spec)?;
    write_output(args.out.as_deref(), write_netlist(&nl).as_bytes())
}

fn read_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(usage)?;
    serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", path.display()))
        .map_err(usage)
}

fn cmd_reduce(args: ReduceArgs) -> Result<(), Failure> {
    let cfg = read_config(args.config.as_deref())?;
    let mut input = args.input.clone();
    if input.netlist.is_none() && input.triplets.is_none() && input.model.is_none() {
        input.netlist = cfg.netlist;
        input.triplets = cfg.triplets.map(Vec::from);
    }
    input.ports_first = input.ports_first.or(cfg.ports_first);
    input.ports_file = input.ports_file.or(cfg.ports_file);
    if input.model.is_some() {
        return Err(usage(anyhow!(
            "reduce needs a netlist or triplet input, not a reduced model"
        )));
    }
    let System::Full(sys) = load_input(&input)? else {
        unreachable!("models are rejected above")
    };

    let method = args.method.or(cfg.method).unwrap_or(Method::Smp);
    let defaults = ReductionOptions::default();
    let opts = ReductionOptions {
        eta: args.eta.or(cfg.eta).unwrap_or(defaults.eta),
        delta: args.delta.or(cfg.delta).unwrap_or(defaults.delta),
        sparsity_control: !args.no_sparsity_control && cfg.sparsity_control.unwrap_or(true),
        deflation: !args.no_deflation && cfg.deflation.unwrap_or(true),
    };
    let points = args.points.or(cfg.points);
    let order = args.order.or(cfg.order);
    let out = args.out.or(cfg.out).unwrap_or_else(|| PathBuf::from("."));
    let name = args.name.or(cfg.name).unwrap_or_else(|| "model".into());

    let start = Instant::now();
    let model = match method {
        Method::Smp => {
            let pts = points.ok_or_else(|| usage(anyhow!("smp needs --points")))?;
            smp_reduce(&sys, &ExpansionSchedule::new(pts)?, &opts)?
        }
        Method::Sip => {
            let pts = points.unwrap_or_else(|| vec![0.0]);
            let [s0] = pts[..] else {
                return Err(usage(anyhow!("sip takes a single expansion point")));
            };
            sip_reduce(&sys, s0, &opts)?
        }
        Method::Turbomor => turbomor_reduce(
            &sys,
            order.ok_or_else(|| usage(anyhow!("turbomor needs --order")))?,
        )?,
        Method::Prima => {
            let r = order.ok_or_else(|| usage(anyhow!("prima needs --order")))?;
            let s0 = match points.as_deref() {
                None => 0.0,
                Some(&[s0]) => s0,
                Some(_) => return Err(usage(anyhow!("prima takes a single expansion point"))),
            };
            prima_reduce(&sys, r, s0)?
        }
    };
    let wall = start.elapsed().as_secs_f64();

    fs::create_dir_all(&out)
        .with_context(|| format!("creating {}", out.display()))
        .map_err(usage)?;
    let path = out.join(format!("{name}.json"));
    save_reduced(&model, &path)?;
    let report = ReduceReport {
        schema: 1,
        method,
        dim: model.dim(),
        nnz: model.nnz(),
        blocks: model.block_sizes().to_vec(),
        points: model.points().to_vec(),
        ports: model.port_count(),
        original_dim: sys.dim(),
        wall_time_s: wall,
        model: path,
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    println!("{json}");
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let sys = load_input(&args.input)?;
    let samples = sweep_parallel(sys.as_dyn(), &args.grid.grid(), args.axis)?;
    let mut buf = Vec::new();
    write_sweep_csv(&samples, &mut buf)?;
    write_output(args.out.as_deref(), &buf)
}

fn cmd_compare(args: CompareArgs) -> Result<(), Failure> {
    let orig = load_input(&args.input)?;
    let red = load_reduced(&args.reduced)?;
    let report = relative_errors(orig.as_dyn(), &red, &args.grid.grid())?;
    if let Some(out) = &args.out {
        let mut buf = Vec::new();
        write_error_csv(&report, &mut buf)?;
        write_output(Some(out), &buf)?;
    }
    let s = report.summary();
    println!(
        "max E_R = {:e}, max E_C = {:e}, mean E_R = {:e}, mean E_C = {:e}, undefined = {}",
        s.max_e_r, s.max_e_c, s.mean_e_r, s.mean_e_c, s.undefined
    );
    Ok(())
}

fn print_moments(m: &MomentSeries) {
    println!("k,i,j,value");
    for (k, t) in m.terms.iter().enumerate() {
        for i in 0..t.nrows() {
            for j in 0..t.ncols() {
                println!("{k},{i},{j},{}", t[(i, j)]);
            }
        }
    }
}

fn cmd_moments(args: MomentsArgs) -> Result<(), Failure> {
    let sys = load_input(&args.input)?;
    let m = moments(sys.as_dyn(), args.s0, args.count)?;
    print_moments(&m);
    if let Some(other) = &args.against {
        let red = load_reduced(other)?;
        if red.port_count() != sys.as_dyn().port_count() {
            return Err(AnalysisError::PortMismatch {
                left: sys.as_dyn().port_count(),
                right: red.port_count(),
            }
            .into());
        }
        let mr = moments(&red, args.s0, args.count)?;
        println!("match order: {}", match_order(&m, &mr, args.tol));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Reduce(a) => cmd_reduce(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Moments(a) => cmd_moments(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let code = f.code();
            let (Failure::Usage(e) | Failure::Numerical(e)) = f;
            eprintln!("error: {e:#}");
            ExitCode::from(code)
        }
    }
}
