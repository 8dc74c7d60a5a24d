use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pfpd::kernels::{KernelKind, KernelSpec};
use pfpd::normalization::{c0_profile_report, mc_cap_fraction_oracle, normalization_constant};
use pfpd::scenarios::{build_scenario, resolve_config, run_simulation, RunOptions, ScenarioConfig};
use pfpd::Error;

#[derive(Parser)]
#[command(name = "pfpd", version, about = "Phase-field correspondence peridynamics fracture simulations")]
struct Cli {
    /// Worker threads for the solver (0 = all cores).
    #[arg(long, global = true, env = "PFPD_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario to its end time and write outputs.
    Run {
        #[command(flatten)]
        setup: Setup,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
        /// End time in seconds, overriding the configuration.
        #[arg(long)]
        t_end: Option<f64>,
    },
    /// Build and check a scenario without stepping it.
    Validate {
        #[command(flatten)]
        setup: Setup,
        /// Print the resolved configuration.
        #[arg(long)]
        print: bool,
    },
    /// Print the normalization constant of a kernel.
    C0 {
        #[arg(long, default_value = "cubic")]
        kernel: String,
        /// Write the cap-fraction profile f_ω(ξ) to this CSV file.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value_t = 201)]
        points: usize,
        /// Compare the profile against a Monte-Carlo estimate with this many samples.
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct Setup {
    /// mode_i, mode_ii, btt or kalthoff_winkler.
    #[arg(long)]
    scenario: Option<String>,
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// desk or paper.
    #[arg(long)]
    preset: Option<String>,
    /// key=value override, e.g. grid.n=30; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Setup {
    fn resolve(&self) -> pfpd::Result<ScenarioConfig> {
        resolve_config(self.scenario.as_deref(), self.preset.as_deref(), self.config.as_deref(), &self.overrides)
    }
}

fn c0_command(kernel: &str, profile: Option<PathBuf>, points: usize, mc: Option<usize>, seed: u64) -> pfpd::Result<()> {
    let kind = KernelKind::parse(kernel)
        .ok_or_else(|| Error::config("kernel", format!("unknown kernel `{kernel}` (expected constant, linear, cubic)")))?;
    let spec = KernelSpec::new(kind, 1.0)?;
    println!("{:.16}", normalization_constant(&spec));
    if let Some(path) = profile {
        let report = c0_profile_report(&spec, points)?;
        report.write_csv(&path)?;
        eprintln!("profile written to {} (trapezoid c0 = {:.10})", path.display(), report.trapezoid_c0());
    }
    if let Some(n) = mc {
        for xi in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let q = pfpd::normalization::kernel_cap_fraction(&spec, xi)?;
            let est = mc_cap_fraction_oracle(&spec, xi, n, seed)?;
            eprintln!(
                "xi = {xi:.2}: quadrature {q:.8}, monte carlo {:.8} ± {:.2e} ({:+.2} σ)",
                est.estimate,
                est.std_error,
                (q - est.estimate) / est.std_error
            );
        }
    }
    Ok(())
}

fn execute(cli: Cli) -> pfpd::Result<()> {
    match cli.command {
        Command::Run { setup, out_dir, t_end } => {
            let cfg = setup.resolve()?;
            let out = run_simulation(&cfg, &RunOptions { out_dir: Some(out_dir.clone()), t_end })?;
            print!("{}", out.summary.to_toml());
            eprintln!("outputs in {}", out_dir.display());
            Ok(())
        }
        Command::Validate { setup, print } => {
            let cfg = setup.resolve()?;
            let sc = build_scenario(&cfg)?;
            if print {
                print!("{}", cfg.to_toml());
            }
            let sim = &sc.sim;
            println!("scenario = \"{}\"", cfg.scenario);
            println!("setup_hash = \"{}\"", sc.setup_hash);
            println!("points = {}", sim.cloud.len());
            println!("grid = {:?}", sim.cloud.counts);
            println!("bonds = {}", sim.neigh.n_bonds());
            println!("precracked_bonds = {}", sc.n_precracked);
            println!("horizon = {:e}", sim.neigh.horizon);
            println!("dt = {:e}", sim.dt);
            println!("steps = {}", (cfg.t_end / sim.dt - 1e-9).ceil());
            println!("c0 = {}", sim.mat.c0);
            println!("yc = {:e}", sim.mat.yc);
            Ok(())
        }
        Command::C0 { kernel, profile, points, mc_samples, seed } => c0_command(&kernel, profile, points, mc_samples, seed),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: cannot configure {} threads: {e}", cli.threads);
            return ExitCode::from(1);
        }
    }
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::Config { .. }) { 2 } else { 1 })
        }
    }
}
