//! Thin command-line front end over the library drivers.
//!
//! Exit codes: 0 success, 1 assertion/acceptance failure, 2 usage error.
//! Every subcommand accepts `--config <file>` holding the same parameters as
//! JSON; explicit flags override file values.

use clap::{Parser, Subcommand};
use onofri_lab::cli::{
    cmd_branch, cmd_bubble_report, cmd_config_search, cmd_minimize, cmd_mto_sample,
    cmd_quad_check, load_batch, load_single, BranchParams, BubbleReportParams, CommandOutcome,
    ConfigSearchParams, MinimizeParams, MtoSampleParams, QuadCheckParams, RunConfig,
};
use onofri_lab::Error;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "onofri-lab",
    about = "Second-moment-constrained Onofri inequalities and the mean field equation on the sphere",
    version
)]
struct Cli {
    /// Write output to this path instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format where a command supports both (csv | json)
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check quadrature exactness on low-degree monomials
    QuadCheck {
        #[arg(long)]
        grid_l: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Verify bubble asymptotics over configurations and an epsilon ladder
    BubbleReport {
        /// Comma list: pair,triangle,tetrahedron,octahedron
        #[arg(long, value_delimiter = ',')]
        configs: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        grid_l: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Minimize |Lambda|^2 over centered point measures
    ConfigSearch {
        /// Comma list of atom counts
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        /// Restrict to antipodal pairs with equal weights
        #[arg(long)]
        even: bool,
        #[arg(long)]
        starts: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Continue a mean-field solution branch in the parameter a
    Branch {
        #[arg(long)]
        a_start: Option<f64>,
        #[arg(long)]
        a_end: Option<f64>,
        #[arg(long)]
        step: Option<f64>,
        /// Switch onto the nontrivial branch bifurcating at a = 1/3
        #[arg(long)]
        switch_at_third: bool,
        #[arg(long)]
        l_max: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Seeded runs of the Lambda-constrained Onofri minimization
    Minimize {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        c0: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Use a penalty of this weight instead of backtracking
        #[arg(long)]
        penalty_weight: Option<f64>,
        #[arg(long)]
        l_max: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Onofri gap and Jensen slack on random band-limited fields
    MtoSample {
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        band_l: Option<usize>,
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        grid_l: Option<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Execute a JSON batch file of commands
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn run(cli: &Cli) -> onofri_lab::Result<CommandOutcome> {
    if let Some(f) = &cli.format {
        // commands have a fixed natural format; validate the flag anyway
        onofri_lab::cli::OutputFormat::parse(f)?;
    }
    match &cli.command {
        Command::QuadCheck { grid_l, config } => {
            let mut params = QuadCheckParams { grid_l: *grid_l };
            if let Some(path) = config {
                if let RunConfig::QuadCheck(file) = load_single(path, "quad-check")? {
                    params = params.overriding(&file);
                }
            }
            cmd_quad_check(&params)
        }
        Command::BubbleReport {
            configs,
            epsilons,
            delta,
            grid_l,
            config,
        } => {
            let mut params = BubbleReportParams {
                configs: configs.clone(),
                epsilons: epsilons.clone(),
                delta: *delta,
                grid_l: *grid_l,
            };
            if let Some(path) = config {
                if let RunConfig::BubbleReport(file) = load_single(path, "bubble-report")? {
                    params = params.overriding(&file);
                }
            }
            cmd_bubble_report(&params)
        }
        Command::ConfigSearch {
            n,
            even,
            starts,
            seed,
            config,
        } => {
            let mut params = ConfigSearchParams {
                n: n.clone(),
                even: if *even { Some(true) } else { None },
                starts: *starts,
                seed: *seed,
            };
            if let Some(path) = config {
                if let RunConfig::ConfigSearch(file) = load_single(path, "config-search")? {
                    params = params.overriding(&file);
                }
            }
            cmd_config_search(&params)
        }
        Command::Branch {
            a_start,
            a_end,
            step,
            switch_at_third,
            l_max,
            config,
        } => {
            let mut params = BranchParams {
                a_start: *a_start,
                a_end: *a_end,
                step: *step,
                switch_at_third: if *switch_at_third { Some(true) } else { None },
                l_max: *l_max,
            };
            if let Some(path) = config {
                if let RunConfig::Branch(file) = load_single(path, "branch")? {
                    params = params.overriding(&file);
                }
            }
            cmd_branch(&params)
        }
        Command::Minimize {
            a,
            c0,
            seeds,
            penalty_weight,
            l_max,
            config,
        } => {
            let mut params = MinimizeParams {
                a: *a,
                c0: *c0,
                seeds: seeds.clone(),
                penalty_weight: *penalty_weight,
                l_max: *l_max,
                init_sup: None,
            };
            if let Some(path) = config {
                if let RunConfig::Minimize(file) = load_single(path, "minimize")? {
                    params = params.overriding(&file);
                }
            }
            cmd_minimize(&params)
        }
        Command::MtoSample {
            count,
            band_l,
            amplitude,
            seed,
            grid_l,
            config,
        } => {
            let mut params = MtoSampleParams {
                count: *count,
                band_l: *band_l,
                amplitude: *amplitude,
                seed: *seed,
                grid_l: *grid_l,
            };
            if let Some(path) = config {
                if let RunConfig::MtoSample(file) = load_single(path, "mto-sample")? {
                    params = params.overriding(&file);
                }
            }
            cmd_mto_sample(&params)
        }
        Command::Run { config } => {
            let batch = load_batch(config)?;
            let mut output = String::new();
            let mut ok = true;
            for entry in &batch {
                let outcome = entry.execute()?;
                output.push_str(&outcome.output);
                ok &= outcome.ok;
            }
            Ok(CommandOutcome { output, ok })
        }
    }
}

fn main() -> ExitCode {
    onofri_lab::init_thread_pool_from_env();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            let write_result = match &cli.out {
                Some(path) => std::fs::write(path, &outcome.output),
                None => {
                    print!("{}", outcome.output);
                    Ok(())
                }
            };
            if let Err(e) = write_result {
                eprintln!("error: {e}");
                return ExitCode::from(1);
            }
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::Infeasible(_) | Error::GridResolution { .. } => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(1),
            }
        }
    }
}
