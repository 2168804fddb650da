//! `wiretap`: secrecy regions, Gaussian sweeps, binning simulations,
//! covering experiments and the repeated-game bound, with run manifests.
//!
//! Exit codes: 0 success, 1 internal failure or a rerun whose outputs differ,
//! 2 invalid input, 3 infeasible rates, 4 enumeration budget exceeded.

mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use manifest::{normalize_args, replace_out, FileHash, RunManifest};
use wiretap_core::channel::build_full_joint;
use wiretap_core::channel::{load_channel, SCHEMA_VERSION};
use wiretap_core::coding::covering::DEFAULT_PAIR_BUDGET;
use wiretap_core::coding::equivocation::DEFAULT_TERM_BUDGET;
use wiretap_core::coding::{
    covering_experiment, exact_equivocation, Codebook, CoveringConfig, SimConfig, TypicalityParams,
};
use wiretap_core::game::{self, CandidateConfig, SearchBudget, StageGame};
use wiretap_core::gaussian::{self, GaussianParams, Leakage, SweepGrid};
use wiretap_core::instances::{CoveringInput, EquivocationConfig};
use wiretap_core::pmf::Pmf;
use wiretap_core::region::{search_region, SearchConfig};
use wiretap_core::Error;

#[derive(Parser, Debug)]
#[command(
    name = "wiretap",
    version,
    about = "Secrecy rate regions and binning simulations for broadcast wiretap channels with state"
)]
struct Cli {
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true, env = "WIRETAP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Achievable region of a discrete channel by policy search.
    RegionDiscrete(RegionDiscreteArgs),
    /// Region of the Gaussian model over an auxiliary-parameter grid.
    RegionGaussian(RegionGaussianArgs),
    /// Single-user rate with decoder side information as a function of alpha1.
    SideInfo(SideInfoArgs),
    /// Monte Carlo run of the binning scheme.
    Simulate(SimulateArgs),
    /// Mutual covering experiment.
    Covering(CoveringArgs),
    /// Exact equivocation of a tiny code and of its no-sub-bin ablation.
    Equivocation(EquivocationArgs),
    /// Upper bound on player 4's min-max level.
    GameMinmax(GameArgs),
    /// Re-executes a run from its manifest and compares output hashes.
    Rerun(RerunArgs),
}

#[derive(Args, Debug)]
struct RegionDiscreteArgs {
    #[arg(long)]
    channel: PathBuf,
    /// Auxiliary alphabet sizes `K1,K2`.
    #[arg(long, value_parser = parse_pair)]
    aux_sizes: Option<[usize; 2]>,
    #[arg(long, default_value_t = 1000)]
    budget: usize,
    #[arg(long, default_value_t = 400)]
    refine: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[allow(non_snake_case)]
struct RegionGaussianArgs {
    /// JSON parameter file; flags override its fields.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long = "P")]
    P: Option<f64>,
    #[arg(long = "N1")]
    N1: Option<f64>,
    #[arg(long = "N2")]
    N2: Option<f64>,
    #[arg(long = "N3")]
    N3: Option<f64>,
    #[arg(long = "Q1")]
    Q1: Option<f64>,
    #[arg(long = "Q2")]
    Q2: Option<f64>,
    #[arg(long)]
    rho: Option<f64>,
    /// `default`, or `key=v,v;...` with keys alpha1, alpha2, beta replacing
    /// the default lists.
    #[arg(long, default_value = "default")]
    grid: String,
    /// Drop every eavesdropper term.
    #[arg(long)]
    no_eavesdropper: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[allow(non_snake_case)]
struct SideInfoArgs {
    #[arg(long = "P", default_value_t = 1.0)]
    P: f64,
    #[arg(long = "N1", default_value_t = 1.0)]
    N1: f64,
    #[arg(long = "N3", default_value_t = 2.0)]
    N3: f64,
    #[arg(long = "Q1", default_value_t = 5.0)]
    Q1: f64,
    #[arg(long, value_delimiter = ',', default_value = "0,1,10,100,1000")]
    alphas: Vec<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct CoveringArgs {
    /// Full input file (joint plus settings).
    #[arg(long, conflicts_with = "joint")]
    config: Option<PathBuf>,
    /// Two-axis joint distribution; settings from the flags.
    #[arg(long)]
    joint: Option<PathBuf>,
    #[arg(long)]
    ri: Option<f64>,
    #[arg(long)]
    rj: Option<f64>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct EquivocationArgs {
    #[arg(long)]
    config: PathBuf,
    /// Cap on enumerated terms.
    #[arg(long, default_value_t = DEFAULT_TERM_BUDGET)]
    budget: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GameArgs {
    #[arg(long)]
    game: PathBuf,
    /// Correlated distributions tested for achievability.
    #[arg(long, default_value_t = 64)]
    budget: usize,
    /// Simplex grid resolution for product distributions.
    #[arg(long, default_value_t = 10)]
    steps: usize,
    #[arg(long, default_value_t = 4)]
    restarts: usize,
    #[arg(long, default_value_t = 150)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RerunArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// New output prefix; defaults to the recorded one.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Core(Error),
    Usage(String),
    Mismatch(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Core(Error::Infeasible(_)) => 3,
            CliError::Core(Error::BudgetExceeded { .. }) => 4,
            CliError::Core(Error::Lp(_)) | CliError::Mismatch(_) => 1,
            CliError::Core(_) | CliError::Usage(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Mismatch(m) => f.write_str(m),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a command produced, before it is written.
struct Run {
    outputs: Vec<(&'static str, Vec<u8>)>,
    parameters: Value,
    seed: Option<u64>,
    inputs: Vec<PathBuf>,
}

fn json_bytes<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn region_discrete(a: &RegionDiscreteArgs) -> CliResult<Run> {
    let spec = load_channel(&a.channel).map_err(|e| CliError::Usage(format!("{}: {e}", a.channel.display())))?;
    let cfg = SearchConfig {
        aux_sizes: a.aux_sizes,
        sample_budget: a.budget,
        refinement_iterations: a.refine,
        seed: a.seed,
        ..Default::default()
    };
    let res = search_region(&spec, &cfg)?;
    Ok(Run {
        outputs: vec![
            (".region.csv", res.region.to_csv().into_bytes()),
            (
                ".policies.json",
                json_bytes(&json!({ "schema_version": SCHEMA_VERSION, "result": res }))?,
            ),
        ],
        parameters: serde_json::to_value(&cfg)?,
        seed: Some(a.seed),
        inputs: vec![a.channel.clone()],
    })
}

fn parse_pair(v: &str) -> std::result::Result<[usize; 2], String> {
    let parts: Vec<&str> = v.split(',').collect();
    match parts.as_slice() {
        [a, b] => Ok([
            a.trim().parse().map_err(|e| format!("{e}"))?,
            b.trim().parse().map_err(|e| format!("{e}"))?,
        ]),
        _ => Err("expected K1,K2".into()),
    }
}

fn parse_list(v: &str) -> CliResult<Vec<f64>> {
    v.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad grid value `{x}`: {e}")))
        })
        .collect()
}

fn parse_grid(spec: &str, gp: &GaussianParams) -> CliResult<SweepGrid> {
    let mut grid = SweepGrid::default_for(gp);
    if spec == "default" {
        return Ok(grid);
    }
    for part in spec.split(';').filter(|p| !p.trim().is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("grid entry `{part}` is not key=values")))?;
        let values = parse_list(v)?;
        match k.trim() {
            "alpha1" => grid.alpha1 = values,
            "alpha2" => grid.alpha2 = values,
            "beta" => grid.beta = values,
            other => return Err(CliError::Usage(format!("unknown grid key `{other}`"))),
        }
    }
    if grid.is_empty() {
        return Err(CliError::Usage("grid is empty".into()));
    }
    Ok(grid)
}

fn region_gaussian(a: &RegionGaussianArgs) -> CliResult<Run> {
    let mut gp = match &a.params {
        Some(p) => read_json::<GaussianParams>(p)?,
        None => GaussianParams::default(),
    };
    let overrides = [
        (&mut gp.P, a.P),
        (&mut gp.N1, a.N1),
        (&mut gp.N2, a.N2),
        (&mut gp.N3, a.N3),
        (&mut gp.Q1, a.Q1),
        (&mut gp.Q2, a.Q2),
        (&mut gp.rho, a.rho),
    ];
    for (field, v) in overrides {
        if let Some(v) = v {
            *field = v;
        }
    }
    gp.validate()?;
    let grid = parse_grid(&a.grid, &gp)?;
    let mode = if a.no_eavesdropper {
        Leakage::NoEavesdropper
    } else {
        Leakage::WithEavesdropper
    };
    let res = gaussian::sweep_region_mode(&gp, &grid, mode)?;
    let sweep = json!({
        "schema_version": SCHEMA_VERSION,
        "params": gp,
        "no_eavesdropper": a.no_eavesdropper,
        "grid": grid,
        "result": res,
    });
    Ok(Run {
        outputs: vec![
            (".region.csv", res.region.to_csv().into_bytes()),
            (".sweep.json", json_bytes(&sweep)?),
        ],
        parameters: json!({ "params": gp, "grid": grid, "no_eavesdropper": a.no_eavesdropper }),
        seed: None,
        inputs: a.params.iter().cloned().collect(),
    })
}

fn side_info(a: &SideInfoArgs) -> CliResult<Run> {
    let gp = GaussianParams {
        P: a.P,
        N1: a.N1,
        N2: a.N1,
        N3: a.N3,
        Q1: a.Q1,
        Q2: 0.0,
        rho: 0.0,
    };
    gp.validate()?;
    let mut csv = String::from("alpha1,rate_bits,capacity_bits\n");
    let cap = gaussian::capacity_limit(&gp);
    for &al in &a.alphas {
        csv.push_str(&format!("{al},{},{cap}\n", gaussian::decoder_side_info_rate(&gp, al)?));
    }
    Ok(Run {
        outputs: vec![(".side_info.csv", csv.into_bytes())],
        parameters: json!({ "params": gp, "alphas": a.alphas }),
        seed: None,
        inputs: vec![],
    })
}

fn simulate(a: &SimulateArgs) -> CliResult<Run> {
    let mut cfg: SimConfig = read_json(&a.config)?;
    if let Some(n) = a.n {
        cfg.n = n;
    }
    if let Some(t) = a.trials {
        cfg.trials = t;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let rates = cfg.resolve_rates()?;
    let report = cfg.run()?;
    Ok(Run {
        outputs: vec![(".report.json", json_bytes(&report)?)],
        parameters: json!({ "n": cfg.n, "trials": cfg.trials, "epsilon": cfg.epsilon, "rates": rates }),
        seed: Some(cfg.seed),
        inputs: vec![a.config.clone()],
    })
}

fn covering(a: &CoveringArgs) -> CliResult<Run> {
    let (joint, mut cfg, input) = match (&a.config, &a.joint) {
        (Some(p), _) => {
            let c: CoveringInput = read_json(p)?;
            (c.joint, c.config, p.clone())
        }
        (None, Some(p)) => {
            let j: Pmf = read_json(p)?;
            let cfg = CoveringConfig {
                rate_i: 0.0,
                rate_j: 0.0,
                n: 100,
                trials: 100,
                epsilon: 0.1,
                seed: 0,
                pair_budget: DEFAULT_PAIR_BUDGET,
            };
            (j, cfg, p.clone())
        }
        (None, None) => return Err(CliError::Usage("either --config or --joint is required".into())),
    };
    if let Some(v) = a.ri {
        cfg.rate_i = v;
    }
    if let Some(v) = a.rj {
        cfg.rate_j = v;
    }
    if let Some(v) = a.n {
        cfg.n = v;
    }
    if let Some(v) = a.trials {
        cfg.trials = v;
    }
    if let Some(v) = a.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    let report = covering_experiment(&joint, &cfg)?;
    Ok(Run {
        outputs: vec![(
            ".covering.json",
            json_bytes(&json!({ "schema_version": SCHEMA_VERSION, "config": cfg, "report": report }))?,
        )],
        parameters: serde_json::to_value(cfg)?,
        seed: Some(cfg.seed),
        inputs: vec![input],
    })
}

fn equivocation(a: &EquivocationArgs) -> CliResult<Run> {
    let cfg: EquivocationConfig = read_json(&a.config)?;
    let j = build_full_joint(&cfg.channel, &cfg.policy)?;
    let tp = TypicalityParams::new(cfg.epsilon, cfg.n)?;
    let run = |rates| -> CliResult<_> {
        let cb = Codebook::generate(&j, &rates, cfg.n, cfg.seed)?;
        Ok(exact_equivocation(&cb, &cfg.channel, &cfg.policy, tp, a.budget)?)
    };
    let full = run(cfg.rates)?;
    let ablation = run(cfg.rates.without_sub_bins())?;
    Ok(Run {
        outputs: vec![(
            ".equivocation.json",
            json_bytes(&json!({ "schema_version": SCHEMA_VERSION, "full": full, "ablation": ablation }))?,
        )],
        parameters: json!({ "n": cfg.n, "epsilon": cfg.epsilon, "rates": cfg.rates, "budget": a.budget }),
        seed: Some(cfg.seed),
        inputs: vec![a.config.clone()],
    })
}

fn game_minmax(a: &GameArgs) -> CliResult<Run> {
    let g: StageGame = read_json(&a.game)?;
    let cfg = CandidateConfig {
        samples: a.budget,
        product_steps: a.steps,
        search: SearchBudget {
            restarts: a.restarts,
            iterations: a.iterations,
            aux_sizes: None,
        },
        seed: a.seed,
    };
    let result = game::solve_game(&g, &cfg)?;
    let out = json!({
        "schema_version": SCHEMA_VERSION,
        "nu": result.nu,
        "product_grid_oracle": game::product_grid_oracle(&g, a.steps),
        "full_correlation_oracle": game::full_correlation_oracle(&g)?,
        "result": result,
    });
    Ok(Run {
        outputs: vec![(".minmax.json", json_bytes(&out)?)],
        parameters: serde_json::to_value(cfg)?,
        seed: Some(a.seed),
        inputs: vec![a.game.clone()],
    })
}

fn out_prefix(c: &Command) -> Option<&Path> {
    Some(match c {
        Command::RegionDiscrete(a) => &a.out,
        Command::RegionGaussian(a) => &a.out,
        Command::SideInfo(a) => &a.out,
        Command::Simulate(a) => &a.out,
        Command::Covering(a) => &a.out,
        Command::Equivocation(a) => &a.out,
        Command::GameMinmax(a) => &a.out,
        Command::Rerun(_) => return None,
    })
}

/// Runs a non-rerun command, writes its outputs and manifest, and returns
/// the manifest.
fn execute(command: &Command, args: Vec<String>) -> CliResult<RunManifest> {
    let start = Instant::now();
    let (name, run) = match command {
        Command::RegionDiscrete(a) => ("region-discrete", region_discrete(a)?),
        Command::RegionGaussian(a) => ("region-gaussian", region_gaussian(a)?),
        Command::SideInfo(a) => ("side-info", side_info(a)?),
        Command::Simulate(a) => ("simulate", simulate(a)?),
        Command::Covering(a) => ("covering", covering(a)?),
        Command::Equivocation(a) => ("equivocation", equivocation(a)?),
        Command::GameMinmax(a) => ("game-minmax", game_minmax(a)?),
        Command::Rerun(_) => unreachable!("rerun is dispatched separately"),
    };
    let prefix = out_prefix(command).expect("command writes outputs");
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut m = RunManifest::new(name, args);
    m.parameters = run.parameters;
    m.seed = run.seed;
    for p in &run.inputs {
        let abs = fs::canonicalize(p)?;
        m.inputs.push(FileHash::of(&abs)?);
    }
    for (suffix, bytes) in &run.outputs {
        let path = with_suffix(prefix, suffix);
        fs::write(&path, bytes)?;
        m.outputs.push(FileHash::of(&path)?);
    }
    m.duration_seconds = start.elapsed().as_secs_f64();
    fs::write(with_suffix(prefix, ".manifest.json"), json_bytes(&m)?)?;
    Ok(m)
}

fn rerun(a: &RerunArgs) -> CliResult<()> {
    let recorded: RunManifest = read_json(&a.manifest)?;
    for input in &recorded.inputs {
        let now =
            FileHash::of(&input.path).map_err(|e| CliError::Usage(format!("input {}: {e}", input.path.display())))?;
        if now.sha256 != input.sha256 {
            return Err(CliError::Usage(format!(
                "input {} changed since the recorded run",
                input.path.display()
            )));
        }
    }
    let args = match &a.out {
        Some(p) => replace_out(
            &recorded.args,
            &normalize_args(&["--out".into(), p.to_string_lossy().into_owned()])[1],
        ),
        None => recorded.args.clone(),
    };
    let argv = std::iter::once("wiretap".to_string()).chain(args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(e.to_string()))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return Err(CliError::Usage("a manifest cannot record a rerun".into()));
    }
    let fresh = execute(&cli.command, args)?;
    for (old, new) in recorded.outputs.iter().zip(&fresh.outputs) {
        if old.sha256 != new.sha256 {
            return Err(CliError::Mismatch(format!(
                "{} differs from recorded {}",
                new.path.display(),
                old.path.display()
            )));
        }
        println!("reproduced {}", new.path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match &cli.command {
        Command::Rerun(a) => rerun(a),
        other => {
            let args: Vec<String> = std::env::args().skip(1).collect();
            execute(other, normalize_args(&args)).map(|m| {
                for o in &m.outputs {
                    println!("{}", o.path.display());
                }
            })
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
