//! Thin command-line front end over the library: instance generation, dataset
//! sampling, the two solvers, the audit suite, sample-size sweeps and rate
//! fitting. Everything interesting lives in the library; this file only wires
//! flags and files to it.

use clap::{Args, Parser, Subcommand};
use lporl::case1::{bound_main1, solve_case1, Case1Config, ThresholdMode};
use lporl::case2::{bound_main2, inactive_mass, primal_gap, solve_case2, Case2Config};
use lporl::data::{empirical_model, population_model, sample_dataset, Dataset, EmpiricalModel};
use lporl::diagnostics::{
    check_suite, compute_c_max, AuditInputs, Case1Audit, Case2Audit, DEFAULT_TAU_ACT,
    DEFAULT_VI_TOL,
};
use lporl::harness::{
    fit_rate, generate_garnet, generate_mu, rows_from_csv, rows_to_csv, run_sweep, CaseSelect,
    ExperimentConfig, RateFit,
};
use lporl::mdp::{OptimalityProfile, TabularMdp};
use lporl::report::{JsonReal, SolveReport};
use lporl::rng::SplitMix64;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "lporl", version, about = "LP-based offline RL on tabular MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the experiment configuration; a JSON config file may
/// supply any subset and individual flags override it.
#[derive(Args, Clone, Debug, Default)]
struct ConfigArgs {
    /// JSON config file with any subset of the experiment fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long)]
    actions: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    branching: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Mixture weight of the optimal occupancy in the data distribution.
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    b_w: Option<f64>,
    #[arg(long)]
    num_seeds: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    /// one | two | both
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    card_w: Option<f64>,
    #[arg(long)]
    card_v: Option<f64>,
    /// Output file (defaults to stdout, or the config's output_path).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig, String> {
        let mut config = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("reading {}: {e}", path.display()))?;
                ExperimentConfig::from_json(&text).map_err(|e| e.to_string())?
            }
            None => ExperimentConfig::default(),
        };
        if let Some(v) = self.states {
            config.mdp_spec.num_states = v;
        }
        if let Some(v) = self.actions {
            config.mdp_spec.num_actions = v;
        }
        if let Some(v) = self.gamma {
            config.mdp_spec.gamma = v;
        }
        if let Some(v) = self.branching {
            config.mdp_spec.branching_factor = v;
        }
        if let Some(v) = self.seed {
            config.mdp_spec.seed = v;
        }
        if let Some(v) = self.alpha {
            config.coverage_alpha = v;
        }
        if let Some(v) = self.delta {
            config.delta = v;
        }
        if let Some(v) = self.b_w {
            config.b_w = Some(v);
        }
        if let Some(v) = self.num_seeds {
            config.num_seeds = v;
        }
        if let Some(v) = &self.n_grid {
            config.n_grid = v.clone();
        }
        if let Some(v) = &self.case {
            config.case = match v.as_str() {
                "one" => CaseSelect::One,
                "two" => CaseSelect::Two,
                "both" => CaseSelect::Both,
                other => return Err(format!("unknown case {other:?} (one|two|both)")),
            };
        }
        if let Some(v) = self.card_w {
            config.card_w = Some(v);
        }
        if let Some(v) = self.card_v {
            config.card_v = Some(v);
        }
        if let Some(v) = &self.out {
            config.output_path = Some(v.display().to_string());
        }
        config.validate().map_err(|e| e.to_string())?;
        Ok(config)
    }
}

#[derive(Args, Clone, Debug)]
struct InstanceArgs {
    /// Read the MDP from a JSON file instead of generating one.
    #[arg(long)]
    mdp: Option<PathBuf>,
    /// Read the dataset from a CSV file instead of sampling one.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Sample size when sampling a dataset (also feeds the threshold/bound
    /// formulas).
    #[arg(long, default_value_t = 8000)]
    n: usize,
    /// Dataset seed; defaults to a stream derived from the MDP seed and n.
    #[arg(long)]
    data_seed: Option<u64>,
    /// Use the exact population model instead of a sampled dataset.
    #[arg(long, default_value_t = false)]
    population: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random MDP and emit it as JSON.
    Gen {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Sample an offline dataset from the generated (or given) instance and
    /// emit it as CSV.
    Sample {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Solve the budget-constrained program and emit a JSON report.
    SolveCase1 {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        instance: InstanceArgs,
        /// Explicit validity budget, overriding the concentration threshold.
        #[arg(long)]
        epsilon: Option<f64>,
    },
    /// Solve the lower-bounded minimax program and emit a JSON report.
    SolveCase2 {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        instance: InstanceArgs,
    },
    /// Run the inequality audit suite; exit code 0 iff every check passes.
    Check {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        instance: InstanceArgs,
        /// Number of random draws behind the randomized checks.
        #[arg(long, default_value_t = 100)]
        trials: usize,
    },
    /// Run the full sample-size sweep and emit CSV rows.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Use the exact population model in every cell (infinite-data
        /// surrogate).
        #[arg(long, default_value_t = false)]
        population: bool,
    },
    /// Fit the log-log rate profile of a sweep CSV.
    Rate {
        /// Sweep CSV produced by the sweep command.
        #[arg(long)]
        input: PathBuf,
        /// Restrict to one case (one | two).
        #[arg(long, default_value = "one")]
        case: String,
    },
}

struct Instance {
    mdp: TabularMdp,
    profile: OptimalityProfile,
    dist: lporl::data::DataDistribution,
    model: EmpiricalModel,
    n: usize,
}

fn load_mdp(path: &Path) -> Result<TabularMdp, String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("reading {}: {e}", path.display()))?;
    TabularMdp::from_json(&text).map_err(|e| e.to_string())
}

fn build_instance(config: &ExperimentConfig, args: &InstanceArgs) -> Result<Instance, String> {
    let mdp = match &args.mdp {
        Some(path) => load_mdp(path)?,
        None => generate_garnet(&config.mdp_spec),
    };
    let profile = mdp
        .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
        .map_err(|e| e.to_string())?;
    let dist = generate_mu(&mdp, &profile, config.coverage_alpha).map_err(|e| e.to_string())?;
    let (model, n) = if args.population {
        (
            population_model(&mdp, &dist).map_err(|e| e.to_string())?,
            args.n,
        )
    } else if let Some(path) = &args.data {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("reading {}: {e}", path.display()))?;
        let dataset = Dataset::from_csv(&text).map_err(|e| e.to_string())?;
        let n = dataset.len();
        let model = empirical_model(
            &dataset,
            mdp.reward(),
            mdp.discount(),
            mdp.num_states(),
            mdp.num_actions(),
        )
        .map_err(|e| e.to_string())?;
        (model, n)
    } else {
        let seed = args
            .data_seed
            .unwrap_or_else(|| SplitMix64::derive(config.mdp_spec.seed, args.n as u64));
        let dataset = sample_dataset(&mdp, &dist, args.n, seed).map_err(|e| e.to_string())?;
        let model = empirical_model(
            &dataset,
            mdp.reward(),
            mdp.discount(),
            mdp.num_states(),
            mdp.num_actions(),
        )
        .map_err(|e| e.to_string())?;
        (model, args.n)
    };
    Ok(Instance {
        mdp,
        profile,
        dist,
        model,
        n,
    })
}

fn emit(config: &ExperimentConfig, text: &str) -> Result<(), String> {
    match &config.output_path {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("writing {path}: {e}")),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn empty_report(case: &str, status: &str, epsilon: f64, bound_rhs: f64) -> SolveReport {
    SolveReport {
        case: case.into(),
        status: status.into(),
        objective: JsonReal(f64::NAN),
        l1_residual: JsonReal(f64::NAN),
        bound_rhs: JsonReal(bound_rhs),
        epsilon: JsonReal(epsilon),
        w: Vec::new(),
        policy: Vec::new(),
        delta_emp: None,
        delta_pop: None,
        inactive_mass: None,
        delta_q: None,
        c_max: None,
    }
}

fn run() -> Result<ExitCode, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gen { config } => {
            let config = config.resolve()?;
            let mdp = generate_garnet(&config.mdp_spec);
            emit(&config, &(mdp.to_json() + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sample { config, instance } => {
            let config = config.resolve()?;
            if instance.population {
                return Err("sample: --population does not apply".into());
            }
            let mdp = match &instance.mdp {
                Some(path) => load_mdp(path)?,
                None => generate_garnet(&config.mdp_spec),
            };
            let profile = mdp
                .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
                .map_err(|e| e.to_string())?;
            let dist =
                generate_mu(&mdp, &profile, config.coverage_alpha).map_err(|e| e.to_string())?;
            let seed = instance
                .data_seed
                .unwrap_or_else(|| SplitMix64::derive(config.mdp_spec.seed, instance.n as u64));
            let dataset =
                sample_dataset(&mdp, &dist, instance.n, seed).map_err(|e| e.to_string())?;
            emit(&config, &dataset.to_csv())?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveCase1 {
            config,
            instance,
            epsilon,
        } => {
            let config = config.resolve()?;
            let inst = build_instance(&config, &instance)?;
            let mode = match epsilon {
                Some(eps) => ThresholdMode::Explicit(eps),
                None => ThresholdMode::Tabular,
            };
            let cfg = Case1Config::new(config.effective_b_w(), config.delta, mode)
                .map_err(|e| e.to_string())?;
            let bound = bound_main1(
                &cfg,
                inst.mdp.num_states(),
                inst.mdp.num_actions(),
                inst.n,
                inst.mdp.discount(),
            );
            let report = match solve_case1(
                &inst.model,
                inst.dist.behavior(),
                inst.mdp.initial_dist(),
                &cfg,
                inst.n,
            ) {
                Ok(sol) => SolveReport {
                    case: "one".into(),
                    status: "optimal".into(),
                    objective: JsonReal(sol.objective),
                    l1_residual: JsonReal(sol.l1_residual),
                    bound_rhs: JsonReal(sol.bound_rhs),
                    epsilon: JsonReal(sol.epsilon),
                    w: sol.w_d.values().to_vec(),
                    policy: (0..inst.mdp.num_states())
                        .map(|s| sol.policy.row(s).to_vec())
                        .collect(),
                    delta_emp: None,
                    delta_pop: None,
                    inactive_mass: None,
                    delta_q: None,
                    c_max: None,
                },
                Err(lporl::Error::Infeasible(_)) => {
                    let eps = cfg.epsilon(inst.mdp.num_states(), inst.mdp.num_actions(), inst.n);
                    empty_report("one", "infeasible", eps, bound)
                }
                Err(e) => return Err(e.to_string()),
            };
            emit(&config, &(report.to_json() + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SolveCase2 { config, instance } => {
            let config = config.resolve()?;
            let inst = build_instance(&config, &instance)?;
            let cfg = Case2Config::new(config.effective_b_w(), config.delta)
                .map_err(|e| e.to_string())?;
            let (card_w, card_v) = config.effective_cards();
            let c_max = compute_c_max(&inst.mdp, &inst.dist).map_err(|e| e.to_string())?;
            let (bound, _) = bound_main2(
                &cfg,
                inst.mdp.discount(),
                c_max,
                inst.profile.gap,
                card_w,
                card_v,
                inst.n,
            );
            let report = match solve_case2(&inst.model, inst.dist.behavior(), &cfg) {
                Ok(sol) => {
                    let population =
                        population_model(&inst.mdp, &inst.dist).map_err(|e| e.to_string())?;
                    let delta_pop = primal_gap(&population, &sol.w_d, inst.dist.behavior(), &cfg)
                        .map_err(|e| e.to_string())?;
                    let mass =
                        inactive_mass(&sol.w_d, inst.dist.mu(), &inst.profile.inactive_pairs);
                    SolveReport {
                        case: "two".into(),
                        status: "optimal".into(),
                        objective: JsonReal(sol.ell_emp),
                        l1_residual: JsonReal(lporl::linalg::l1_norm(
                            &lporl::case1::validity_residual(
                                &inst.model,
                                sol.w_d.values(),
                                inst.model.mu_d_state(),
                            ),
                        )),
                        bound_rhs: JsonReal(bound),
                        epsilon: JsonReal(f64::NAN),
                        w: sol.w_d.values().to_vec(),
                        policy: (0..inst.mdp.num_states())
                            .map(|s| sol.policy.row(s).to_vec())
                            .collect(),
                        delta_emp: Some(JsonReal(sol.delta_emp)),
                        delta_pop: Some(JsonReal(delta_pop)),
                        inactive_mass: Some(JsonReal(mass)),
                        delta_q: Some(JsonReal(inst.profile.gap)),
                        c_max: Some(JsonReal(c_max)),
                    }
                }
                Err(lporl::Error::Infeasible(_)) => {
                    empty_report("two", "infeasible", f64::NAN, bound)
                }
                Err(e) => return Err(e.to_string()),
            };
            emit(&config, &(report.to_json() + "\n"))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Check {
            config,
            instance,
            trials,
        } => {
            let config = config.resolve()?;
            let inst = build_instance(&config, &instance)?;
            let (card_w, card_v) = config.effective_cards();
            let cfg1 =
                Case1Config::new(config.effective_b_w(), config.delta, ThresholdMode::Tabular)
                    .map_err(|e| e.to_string())?;
            let cfg2 = Case2Config::new(config.effective_b_w(), config.delta)
                .map_err(|e| e.to_string())?;
            let sol1 = match solve_case1(
                &inst.model,
                inst.dist.behavior(),
                inst.mdp.initial_dist(),
                &cfg1,
                inst.n,
            ) {
                Ok(sol) => Some(sol),
                Err(lporl::Error::Infeasible(_)) => None,
                Err(e) => return Err(e.to_string()),
            };
            let sol2 =
                solve_case2(&inst.model, inst.dist.behavior(), &cfg2).map_err(|e| e.to_string())?;
            let report = check_suite(&AuditInputs {
                mdp: &inst.mdp,
                dist: &inst.dist,
                case1: sol1.as_ref().map(|solution| Case1Audit {
                    solution,
                    config: &cfg1,
                }),
                case2: Some(Case2Audit {
                    solution: &sol2,
                    config: &cfg2,
                    n: inst.n,
                    card_w,
                    card_v,
                }),
                seed: SplitMix64::derive(config.mdp_spec.seed, 0xA0D17),
                trials,
            })
            .map_err(|e| e.to_string())?;
            eprint!("{}", report.render_text());
            emit(&config, &(report.to_json() + "\n"))?;
            Ok(if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Sweep { config, population } => {
            let mut config = config.resolve()?;
            if population {
                config.population = true;
            }
            let rows = run_sweep(&config).map_err(|e| e.to_string())?;
            emit(&config, &rows_to_csv(&rows))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rate { input, case } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| format!("reading {}: {e}", input.display()))?;
            let rows = rows_from_csv(&text).map_err(|e| e.to_string())?;
            let selected: Vec<_> = rows.into_iter().filter(|r| r.case == case).collect();
            if selected.is_empty() {
                return Err(format!("no rows for case {case:?} in {}", input.display()));
            }
            for (n, m) in lporl::harness::median_subopt_by_n(&selected) {
                println!("n={n} median_subopt={m:.6e}");
            }
            match fit_rate(&selected) {
                RateFit::Fitted { slope, intercept } => {
                    println!("verdict=fitted slope={slope:.4} intercept={intercept:.4}");
                }
                RateFit::Saturated => println!("verdict=saturated"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}
