//! Command-line entry point. Exit codes: 0 all assertions pass, 1 an
//! assertion failed, 2 usage or dispatch failure.

use clap::{Parser, Subcommand, ValueEnum};
use ppde_core::cli::{self, CommandSpec, ExpectationMode, RunOptions, ThetaFile};
use ppde_core::experiments::ExperimentConfig;
use ppde_core::viscosity::Role;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Parser)]
#[command(
    name = "ppde",
    about = "Desk-scale laboratory for path-dependent PDEs: sublinear expectations on scenario lattices, jet-based viscosity checks, envelope regularization, and the Hilbert-space lift",
    after_help = "Environment: PPDE_BUDGET overrides the lattice node budget (max nodes per backward induction).\n\
                  Reports are JSON on stdout; wall time goes to stderr; CSV traces to --out."
)]
struct Cli {
    /// TOML configuration file (empty or absent: desk defaults)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Directory for CSV traces
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override the configuration seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Scale every tolerance by this factor
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Sup,
    Inf,
    PureStop,
}

#[derive(Clone, Copy, ValueEnum)]
enum RoleArg {
    Sub,
    Super,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize a payoff over the lattice control family
    Expectation {
        /// payoff name, e.g. time, value, value-sq, affine:<a>,<b>
        #[arg(long)]
        payoff: String,
        /// control bound (overrides the configuration)
        #[arg(long = "L")]
        l_bound: Option<f64>,
        /// number of grid steps (overrides the configuration)
        #[arg(long = "N")]
        n_steps: Option<usize>,
        /// localization level for the hitting-index clip
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, value_enum, default_value = "sup")]
        mode: ModeArg,
    },
    /// Verify the dynamic-programming identities for a payoff
    DppCheck {
        #[arg(long)]
        payoff: String,
        /// conditioning depth (grid index)
        #[arg(long, default_value_t = 2)]
        tau: usize,
    },
    /// Test one jet against the sub- and superjet of a functional
    JetCheck {
        #[arg(long)]
        u: String,
        /// JSON file with {t_index, path}; defaults to the origin
        #[arg(long)]
        theta: Option<PathBuf>,
        /// jet as "alpha,beta,gamma"
        #[arg(long, allow_hyphen_values = true)]
        jet: String,
        #[arg(long)]
        delta: f64,
    },
    /// One-sided viscosity check of a candidate solution
    Check {
        #[arg(long, value_enum)]
        role: RoleArg,
        #[arg(long)]
        u: String,
        #[arg(long = "G")]
        g: String,
    },
    /// Regularized comparison of a sub- and a supersolution
    Comparison {
        #[arg(long = "G")]
        g: String,
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
        /// envelope parameters, e.g. "2,5,10,20"
        #[arg(long)]
        n_ladder: Option<String>,
    },
    /// Convergence and identity sweeps for the Hilbert-space lift
    HilbertCheck {
        /// resolvent | semigroup | bnorm | conv
        #[arg(long)]
        suite: String,
        #[arg(long, default_value_t = 4)]
        refinements: usize,
    },
    /// Assembled demonstrations
    Experiment {
        /// heat | verify | perron | stability | comparison
        #[arg(long)]
        name: String,
    },
}

fn load_config(path: &Option<PathBuf>) -> Result<ExperimentConfig, ppde_core::PpdeError> {
    match path {
        None => cli::parse_config(""),
        Some(p) => {
            let text = std::fs::read_to_string(p)?;
            cli::parse_config(&text)
        }
    }
}

fn main() {
    let cli_args = Cli::parse();
    let started = Instant::now();

    let outcome = (|| -> Result<cli::RunReport, ppde_core::PpdeError> {
        let mut config = load_config(&cli_args.config)?;
        if let Ok(budget) = std::env::var("PPDE_BUDGET") {
            let cap: u64 = budget.parse().map_err(|_| {
                ppde_core::PpdeError::Config("PPDE_BUDGET must be an integer".into())
            })?;
            config.budget.max_nodes = cap;
        }
        let spec = match &cli_args.command {
            Command::Expectation { payoff, l_bound, n_steps, delta, mode } => {
                if let Some(l) = l_bound {
                    config.l_bound = *l;
                    config.drift_grid = vec![-l, 0.0, *l];
                    config.var_grid = vec![0.0, *l];
                }
                if let Some(n) = n_steps {
                    config.n = *n;
                }
                config.validate()?;
                CommandSpec::Expectation {
                    payoff: payoff.clone(),
                    delta: *delta,
                    mode: match mode {
                        ModeArg::Sup => ExpectationMode::Sup,
                        ModeArg::Inf => ExpectationMode::Inf,
                        ModeArg::PureStop => ExpectationMode::PureStop,
                    },
                }
            }
            Command::DppCheck { payoff, tau } => {
                CommandSpec::DppCheck { payoff: payoff.clone(), tau: *tau }
            }
            Command::JetCheck { u, theta, jet, delta } => {
                let parts: Vec<f64> = jet
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| {
                        ppde_core::PpdeError::InvalidInput(
                            "jet must be three numbers 'a,b,c'".into(),
                        )
                    })?;
                if parts.len() != 3 {
                    return Err(ppde_core::PpdeError::InvalidInput(
                        "jet must be three numbers 'a,b,c'".into(),
                    ));
                }
                let theta_file: Option<ThetaFile> = match theta {
                    None => None,
                    Some(p) => {
                        let text = std::fs::read_to_string(p)?;
                        Some(serde_json::from_str(&text).map_err(|e| {
                            ppde_core::PpdeError::InvalidInput(format!("theta file: {e}"))
                        })?)
                    }
                };
                CommandSpec::JetCheck {
                    u: u.clone(),
                    theta: theta_file,
                    jet: (parts[0], parts[1], parts[2]),
                    delta: *delta,
                }
            }
            Command::Check { role, u, g } => CommandSpec::Check {
                role: match role {
                    RoleArg::Sub => Role::Sub,
                    RoleArg::Super => Role::Super,
                },
                u: u.clone(),
                g: g.clone(),
            },
            Command::Comparison { g, u, v, n_ladder } => {
                let ladder = match n_ladder {
                    None => None,
                    Some(s) => Some(
                        s.split(',')
                            .map(|x| x.trim().parse::<f64>())
                            .collect::<Result<Vec<_>, _>>()
                            .map_err(|_| {
                                ppde_core::PpdeError::InvalidInput(
                                    "n-ladder must be comma-separated numbers".into(),
                                )
                            })?,
                    ),
                };
                CommandSpec::Comparison {
                    g: g.clone(),
                    u: u.clone(),
                    v: v.clone(),
                    n_ladder: ladder,
                }
            }
            Command::HilbertCheck { suite, refinements } => {
                CommandSpec::HilbertCheck { suite: suite.clone(), refinements: *refinements }
            }
            Command::Experiment { name } => CommandSpec::Experiment { name: name.clone() },
        };
        let opts = RunOptions {
            seed: cli_args.seed,
            tol_scale: cli_args.tol_scale,
            out_dir: cli_args.out.clone(),
        };
        cli::run(&spec, &config, &opts)
    })();

    match outcome {
        Ok(report) => {
            println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
            eprintln!("completed in {} ms", started.elapsed().as_millis());
            std::process::exit(if report.pass { 0 } else { 1 });
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(2);
        }
    }
}
