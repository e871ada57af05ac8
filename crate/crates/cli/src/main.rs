use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qbeam::bench::{
    cmd_bench, cmd_distribution, cmd_landscape, cmd_solve, ChannelSource, ConfigOverrides, DistributionConfig,
    LandscapeConfig, SolverKind, SolverSettings,
};
use qbeam::qaoa::GridAxis;
use qbeam::Error;

#[derive(Parser)]
#[command(name = "qbeam", version, about = "Quantized MIMO beamforming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep over solvers, sizes and resolutions.
    Bench(BenchArgs),
    /// Single-layer F(gamma, beta) grids for each cost formulation.
    Landscape(LandscapeArgs),
    /// Per-round sampled distributions of one Alg. 2 run.
    Distribution(DistributionArgs),
    /// Solve one channel and print the outcome as JSON.
    Solve(SolveArgs),
}

#[derive(Args)]
struct QaoaArgs {
    /// QAOA layers.
    #[arg(long)]
    p: Option<usize>,
    /// Alternating-optimization rounds.
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
}

impl QaoaArgs {
    fn apply(&self, s: &mut SolverSettings) {
        if let Some(p) = self.p {
            s.ao.qaoa.p = p;
        }
        if let Some(k) = self.k {
            s.ao.rounds = k;
        }
        if let Some(shots) = self.shots {
            s.ao.qaoa.shots = shots;
        }
    }
}

#[derive(Args)]
struct BenchArgs {
    /// Flat TOML file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    solver: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    nt: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    nr: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    b: Option<Vec<u32>>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long)]
    shots: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_inits: Option<usize>,
    /// Run alg2 with its warm start.
    #[arg(long)]
    warm_start: bool,
    /// Output directory; without it results go to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record wall-clock runtimes.
    #[arg(long)]
    timing: bool,
}

#[derive(Args)]
struct LandscapeArgs {
    #[arg(long, default_value_t = 5)]
    nt: usize,
    #[arg(long, default_value_t = 5)]
    nr: usize,
    #[arg(long, default_value_t = 2)]
    b: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 41)]
    steps: usize,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    gamma_max: f64,
    #[arg(long, default_value_t = std::f64::consts::PI)]
    beta_max: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DistributionArgs {
    #[arg(long, default_value_t = 2)]
    nt: usize,
    #[arg(long, default_value_t = 2)]
    nr: usize,
    #[arg(long, default_value_t = 2)]
    b: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    warm_start: bool,
    #[command(flatten)]
    qaoa: QaoaArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SolveArgs {
    /// Channel JSON file; otherwise a seeded Rayleigh channel is drawn.
    #[arg(long)]
    channel: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    nt: usize,
    #[arg(long, default_value_t = 2)]
    nr: usize,
    #[arg(long, default_value_t = 2)]
    b: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    solver: String,
    #[arg(long)]
    warm_start: bool,
    #[arg(long)]
    n_inits: Option<usize>,
    #[command(flatten)]
    qaoa: QaoaArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &PathBuf) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn bench(a: BenchArgs) -> Result<(), Error> {
    let file = match &a.config {
        Some(p) => ConfigOverrides::from_toml(&read(p)?)?,
        None => ConfigOverrides::default(),
    };
    let mut cli = ConfigOverrides::default();
    if let Some(v) = a.solver {
        cli = cli.solvers(v);
    }
    if let Some(v) = a.nt {
        cli = cli.nt(v);
    }
    if let Some(v) = a.nr {
        cli = cli.nr(v);
    }
    if let Some(v) = a.b {
        cli = cli.bits(v);
    }
    if let Some(v) = a.trials {
        cli = cli.trials(v);
    }
    if let Some(v) = a.p {
        cli = cli.layers(v);
    }
    if let Some(v) = a.k {
        cli = cli.rounds(v);
    }
    if let Some(v) = a.shots {
        cli = cli.shots(v);
    }
    if let Some(v) = a.seed {
        cli = cli.seed(v);
    }
    if let Some(v) = a.n_inits {
        cli = cli.n_inits(v);
    }
    if a.warm_start {
        cli = cli.warm_start(true);
    }
    if let Some(v) = a.out {
        cli = cli.out(v);
    }
    if a.timing {
        cli = cli.timing(true);
    }
    let cfg = file.merge(cli).build()?;
    let report = cmd_bench(&cfg)?;
    for s in &report.skipped {
        eprintln!("skipped {} {}x{} b={}: {}", s.solver.name(), s.nt, s.nr, s.b, s.reason);
    }
    match &cfg.out {
        Some(dir) => report.write(dir),
        None => emit(None, &report.results_csv()),
    }
}

fn landscape(a: LandscapeArgs) -> Result<(), Error> {
    let cfg = LandscapeConfig {
        nt: a.nt,
        nr: a.nr,
        b: a.b,
        seed: a.seed,
        gamma: GridAxis { lo: 0.0, hi: a.gamma_max, steps: a.steps },
        beta: GridAxis { lo: 0.0, hi: a.beta_max, steps: a.steps },
        ..Default::default()
    };
    let report = cmd_landscape(&cfg)?;
    for s in &report.skipped {
        eprintln!("skipped {s}");
    }
    report.write(&a.out, &cfg)
}

fn distribution(a: DistributionArgs) -> Result<(), Error> {
    let mut settings = SolverSettings::default();
    a.qaoa.apply(&mut settings);
    let cfg = DistributionConfig { nt: a.nt, nr: a.nr, b: a.b, seed: a.seed, warm_start: a.warm_start, ao: settings.ao };
    let v = cmd_distribution(&cfg)?;
    emit(a.out.as_ref(), &(serde_json::to_string_pretty(&v).expect("serializes") + "\n"))
}

fn solve(a: SolveArgs) -> Result<(), Error> {
    let mut kind: SolverKind = a.solver.parse()?;
    if a.warm_start && kind == SolverKind::Alg2 {
        kind = SolverKind::Alg2Ws;
    }
    let mut settings = SolverSettings::default();
    a.qaoa.apply(&mut settings);
    if let Some(n) = a.n_inits {
        settings.n_inits = n;
    }
    let source = match &a.channel {
        Some(p) => ChannelSource::Json(read(p)?),
        None => ChannelSource::Seeded { nt: a.nt, nr: a.nr, seed: a.seed },
    };
    let v = cmd_solve(&source, kind, a.b, a.seed, &settings)?;
    emit(a.out.as_ref(), &(serde_json::to_string_pretty(&v).expect("serializes") + "\n"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Bench(a) => bench(a),
        Command::Landscape(a) => landscape(a),
        Command::Distribution(a) => distribution(a),
        Command::Solve(a) => solve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidArgument(_) | Error::Parse(_) => 2,
                Error::ResourceLimit(_) => 3,
                Error::DegenerateInput(_) => 1,
            })
        }
    }
}
