//! Command-line front end: path lifting, relation checking, mixed-driver
//! construction, RDE solving and the averaging experiment. Data goes to CSV
//! files under `--out`; diagnostics go to stderr; summaries to stdout.
//!
//! Exit codes: 0 success, 1 validation failure, 2 runtime abort.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use rough3::anisotropic::{assemble_arp, ext};
use rough3::controlled::SmoothMap3;
use rough3::drivers::{derive_seed, ito_cross_integrals, sample_bm, sample_fbm};
use rough3::error::Error;
use rough3::io;
use rough3::norms::PairStrategy;
use rough3::rde::{solve_rde, RdeProblem};
use rough3::roughpath::GridRoughPath;
use rough3::slowfast::{averaging_experiment, systems};

const CHECK_RESIDUAL_LIMIT: f64 = 1e-8;

#[derive(Parser)]
#[command(name = "rough3", version, about = "Level-3 rough path numerics and slow-fast averaging")]
struct Cli {
    /// Worker threads for Monte Carlo loops (0 = rayon default).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lift a sampled path (CSV `t,x1,...,xd`) to a level-3 rough path.
    Lift(LiftArgs),
    /// Check Chen/shuffle residuals and Hölder norms of a rough-path file.
    Check(CheckArgs),
    /// Build the mixed fBm × Brownian driver and its level-3 extension.
    Mixed(MixedArgs),
    /// Solve an RDE from a config file against a rough-path driver file.
    Rde(RdeArgs),
    /// Run the slow-fast averaging experiment from a config file.
    Average(AverageArgs),
}

#[derive(Args)]
struct LiftArgs {
    /// Input sample-path CSV.
    #[arg(long)]
    input: PathBuf,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Hölder exponent for the reported homogeneous norm.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    alpha: f64,
}

#[derive(Args)]
struct CheckArgs {
    /// Rough-path CSV to validate.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    alpha: f64,
}

#[derive(Args)]
struct MixedArgs {
    /// Hurst parameter of the rough block (warned outside (1/4, 1/3]).
    #[arg(long)]
    hurst: f64,
    /// Rough block dimension d.
    #[arg(short = 'd', long, default_value_t = 1)]
    dim_b: usize,
    /// Brownian block dimension e (0 = pure fBm lift).
    #[arg(short = 'e', long, default_value_t = 1)]
    dim_w: usize,
    /// Number of grid steps (power of two for the fast sampler).
    #[arg(short = 'n', long, default_value_t = 1024)]
    steps: usize,
    /// Time horizon T.
    #[arg(short = 'T', long, default_value_t = 1.0)]
    horizon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RdeArgs {
    /// RDE config (flat key = value; keys: xi, sigma, sigma0, drift, theta,
    /// mu, alpha, beta).
    #[arg(long)]
    config: PathBuf,
    /// Driver rough-path CSV.
    #[arg(long)]
    driver: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also solve on grids coarsened by 2..2^k and print a self-convergence
    /// report.
    #[arg(long, default_value_t = 0)]
    refine: u32,
}

#[derive(Args)]
struct AverageArgs {
    /// Experiment config (keys m,n,d,e,H,T,N,beta,p,epsilons,samples,seed,
    /// system,delta_mode).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the config seed when set.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads;
    let run = || match cli.command {
        Command::Lift(args) => cmd_lift(args),
        Command::Check(args) => cmd_check(args),
        Command::Mixed(args) => cmd_mixed(args),
        Command::Rde(args) => cmd_rde(args),
        Command::Average(args) => cmd_average(args),
    };
    let result = if threads > 0 {
        match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                eprintln!("rough3: cannot build thread pool: {e}");
                return ExitCode::from(1);
            }
        }
    } else {
        run()
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("rough3: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// 1 = validation failure, 2 = runtime abort.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Explosion { .. }
        | Error::NonFinite { .. }
        | Error::NonContraction { .. }
        | Error::EmbeddingFailed(_)
        | Error::TableOutOfRange(_) => 2,
        _ => 1,
    }
}

fn cmd_lift(args: LiftArgs) -> rough3::Result<()> {
    let text = io::read_to_string(&args.input)?;
    let path = io::sample_path_from_csv(&text)?;
    if path.values.len() < 2 {
        return Err(Error::InvalidArgument("need >= 2 samples".into()));
    }
    let rp = GridRoughPath::lift_piecewise_linear(&path.times, &path.values)?;
    let norms = rp.holder_norms(args.alpha, PairStrategy::Auto)?;
    io::write_string(&args.out.join("roughpath.csv"), &io::rough_path_to_csv(&rp))?;
    println!("homogeneous_norm_alpha={} |||X|||={:.6e}", args.alpha, norms.homogeneous);
    Ok(())
}

fn cmd_check(args: CheckArgs) -> rough3::Result<()> {
    let text = io::read_to_string(&args.input)?;
    let rp = io::rough_path_from_csv(&text)?;
    let chen = rp.chen_residual(20_000)?;
    let shuffle = rp.shuffle_residual(PairStrategy::Auto)?;
    let norms = rp.holder_norms(args.alpha, PairStrategy::Auto)?;
    println!("chen_residual={chen:.6e}");
    println!("shuffle_residual={shuffle:.6e}");
    println!(
        "holder_norms alpha={} X1={:.6e} X2={:.6e} X3={:.6e} homogeneous={:.6e}",
        args.alpha, norms.level1, norms.level2, norms.level3, norms.homogeneous
    );
    if chen > CHECK_RESIDUAL_LIMIT || shuffle > CHECK_RESIDUAL_LIMIT {
        return Err(Error::InvalidArgument(format!(
            "residuals exceed {CHECK_RESIDUAL_LIMIT:e} (chen {chen:e}, shuffle {shuffle:e})"
        )));
    }
    Ok(())
}

fn cmd_mixed(args: MixedArgs) -> rough3::Result<()> {
    if !(args.hurst > 0.25 && args.hurst <= 1.0 / 3.0) {
        eprintln!(
            "rough3: warning: H = {} outside (1/4, 1/3]; the level-3 lift is only needed there",
            args.hurst
        );
    }
    let b = sample_fbm(args.hurst, args.dim_b, args.steps, args.horizon, derive_seed(args.seed, &[0]))?;
    io::write_string(&args.out.join("b.csv"), &io::sample_path_to_csv(&b))?;
    let b_lift = GridRoughPath::lift_piecewise_linear(&b.times, &b.values)?;
    if args.dim_w == 0 {
        io::write_string(&args.out.join("xi.csv"), &io::rough_path_to_csv(&b_lift))?;
        println!("pure fBm lift written (e = 0)");
        return Ok(());
    }
    let w = sample_bm(args.dim_w, args.steps, args.horizon, derive_seed(args.seed, &[1]))?;
    io::write_string(&args.out.join("w.csv"), &io::sample_path_to_csv(&w))?;
    let cross = ito_cross_integrals(&b, &w)?;
    let gamma = 0.45;
    let arp = assemble_arp(&b_lift, &w, &cross, gamma)?;
    io::write_string(&args.out.join("arp.csv"), &io::arp_to_csv(&arp))?;
    let alpha = (args.hurst - 0.01).min(1.0 / 3.0).max(0.26);
    let xi = ext(&arp, alpha, gamma)?;
    io::write_string(&args.out.join("xi.csv"), &io::rough_path_to_csv(&xi))?;
    println!("mixed driver written: b.csv, w.csv, arp.csv, xi.csv (alpha={alpha}, gamma={gamma})");
    Ok(())
}

struct RdeConfig {
    xi: Vec<f64>,
    sigma: String,
    sigma0: Vec<f64>,
    drift: String,
    theta: f64,
    mu: f64,
    alpha: f64,
    beta: f64,
}

fn parse_rde_config(text: &str) -> rough3::Result<RdeConfig> {
    let mut cfg = RdeConfig {
        xi: vec![0.0],
        sigma: "zero".into(),
        sigma0: vec![],
        drift: "zero".into(),
        theta: 1.0,
        mu: 0.0,
        alpha: 0.33,
        beta: 0.26,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ln = idx + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or(Error::Parse { line: ln, message: "expected key = value".into() })?;
        let parse_list = |v: &str| -> rough3::Result<Vec<f64>> {
            v.split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|_| Error::Parse { line: ln, message: format!("bad float '{t}'") })
                })
                .collect()
        };
        let scalar = |v: &str| -> rough3::Result<f64> {
            v.trim()
                .parse()
                .map_err(|_| Error::Parse { line: ln, message: format!("bad float '{v}'") })
        };
        match key.trim() {
            "xi" => cfg.xi = parse_list(value)?,
            "sigma" => cfg.sigma = value.trim().to_string(),
            "sigma0" => cfg.sigma0 = parse_list(value)?,
            "drift" => cfg.drift = value.trim().to_string(),
            "theta" => cfg.theta = scalar(value)?,
            "mu" => cfg.mu = scalar(value)?,
            "alpha" => cfg.alpha = scalar(value)?,
            "beta" => cfg.beta = scalar(value)?,
            other => return Err(Error::Parse { line: ln, message: format!("unknown key '{other}'") }),
        }
    }
    Ok(cfg)
}

fn rde_sigma_map(cfg: &RdeConfig, w: usize, d: usize) -> rough3::Result<SmoothMap3> {
    match cfg.sigma.as_str() {
        "zero" => Ok(SmoothMap3::constant(w, vec![0.0; w * d])),
        "constant" => {
            if cfg.sigma0.len() != w * d {
                return Err(Error::InvalidArgument(format!(
                    "sigma0 needs {} entries for a {w}×{d} matrix",
                    w * d
                )));
            }
            Ok(SmoothMap3::constant(w, cfg.sigma0.clone()))
        }
        "linear" => {
            if w != 1 || d != 1 {
                return Err(Error::InvalidArgument("sigma = linear needs w = d = 1".into()));
            }
            Ok(SmoothMap3::new(1, 1, |y: &[f64]| vec![y[0]], |_| vec![1.0], |_| vec![0.0]))
        }
        other => Err(Error::InvalidArgument(format!("unknown sigma '{other}'"))),
    }
}

fn cmd_rde(args: RdeArgs) -> rough3::Result<()> {
    let cfg = parse_rde_config(&io::read_to_string(&args.config)?)?;
    let rp = Arc::new(io::rough_path_from_csv(&io::read_to_string(&args.driver)?)?);
    let w = cfg.xi.len();
    let d = rp.dim();
    let sigma = rde_sigma_map(&cfg, w, d)?;
    let (theta, mu) = (cfg.theta, cfg.mu);
    let drift_kind = cfg.drift.clone();
    let drift = move |y: &[f64], _psi: &[f64]| -> Vec<f64> {
        match drift_kind.as_str() {
            "relax" => y.iter().map(|v| theta * (mu - v)).collect(),
            _ => vec![0.0; y.len()],
        }
    };
    if cfg.drift != "zero" && cfg.drift != "relax" {
        return Err(Error::InvalidArgument(format!("unknown drift '{}'", cfg.drift)));
    }
    let prob = RdeProblem::new(cfg.xi.clone(), &sigma, &drift, &rp, cfg.alpha, cfg.beta);
    let solution = solve_rde(&prob)?;
    io::write_string(&args.out.join("solution.csv"), &io::controlled_path_to_csv(&solution))?;
    println!("solved {} steps, final Y = {:?}", rp.n_steps(), solution.y(solution.n_steps()));
    if args.refine > 0 {
        // grid-doubling self-convergence: solve on coarsened grids and
        // compare at shared grid points
        let n = rp.n_steps();
        let fine_values: Vec<Vec<f64>> = (0..=n).map(|k| solution.y(k).to_vec()).collect();
        let mut errors = Vec::new();
        for level in (1..=args.refine).rev() {
            let stride = 1usize << level;
            if n % stride != 0 {
                return Err(Error::InvalidArgument(format!(
                    "refine level {level} needs the step count divisible by {stride}"
                )));
            }
            let coarse_rp = Arc::new(rp.coarsen(stride)?);
            let prob = RdeProblem::new(cfg.xi.clone(), &sigma, &drift, &coarse_rp, cfg.alpha, cfg.beta);
            let coarse = solve_rde(&prob)?;
            let mut dev = 0.0f64;
            for k in 0..=coarse.n_steps() {
                for a in 0..w {
                    dev = dev.max((coarse.y(k)[a] - fine_values[k * stride][a]).abs());
                }
            }
            errors.push((stride, dev));
            println!("refine stride={stride} sup_deviation={dev:.6e}");
        }
        if errors.len() >= 2 {
            let xs: Vec<f64> = errors.iter().map(|(s, _)| (*s as f64).ln()).collect();
            let ys: Vec<f64> = errors.iter().map(|(_, e)| (e + 1e-300).ln()).collect();
            let order = rough3::norms::regression_slope(&xs, &ys);
            println!("self_convergence_order={order:.3}");
        }
    }
    Ok(())
}

fn cmd_average(args: AverageArgs) -> rough3::Result<()> {
    let mut cfg = io::experiment_config_from_str(&io::read_to_string(&args.config)?)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let sys = systems::by_name(&cfg.system)?;
    let rows = averaging_experiment(&sys, &cfg)?;
    io::write_string(&args.out.join("results.csv"), &io::results_to_csv(&rows))?;
    for r in &rows {
        println!(
            "epsilon={:.4} delta={:.4} estimate={:.6e} stderr={:.6e} used={} exploded={}",
            r.epsilon, r.delta, r.estimate, r.stderr, r.samples_used, r.exploded
        );
    }
    Ok(())
}
