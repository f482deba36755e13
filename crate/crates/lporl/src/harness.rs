//! Experiment orchestration: random MDP generation with controllable
//! coverage, sample-size sweeps for both solvers, and the bound-versus-
//! realized bookkeeping emitted as CSV.
//!
//! Coverage is constructed rather than assumed: the data distribution is a
//! mixture `alpha * theta(greedy) + (1 - alpha) * theta(uniform)` of exact
//! occupancies, so the best-policy coverage constant is at most `1/alpha` by
//! construction and bound experiments are honest.

use crate::case1::{solve_case1, Case1Config, ThresholdMode};
use crate::case2::{bound_main2, inactive_mass, primal_gap, solve_case2, Case2Config};
use crate::data::{empirical_model, population_model, sample_dataset, DataDistribution};
use crate::diagnostics::{
    compute_c_max, compute_c_star, InitialDist, DEFAULT_TAU_ACT, DEFAULT_VI_TOL,
};
use crate::mdp::{OptimalityProfile, TabularMdp};
use crate::rng::SplitMix64;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::time::Instant;

/// Parameters of the random-MDP generator: every pair gets exactly
/// `branching_factor` uniformly chosen successor states with uniform-simplex
/// weights, rewards are i.i.d. uniform on `[0, 1]`, and the initial
/// distribution is uniform over states.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GarnetSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub gamma: f64,
    pub branching_factor: usize,
    pub seed: u64,
}

impl Default for GarnetSpec {
    fn default() -> Self {
        GarnetSpec {
            num_states: 8,
            num_actions: 3,
            gamma: 0.9,
            branching_factor: 4,
            seed: 1,
        }
    }
}

pub fn generate_garnet(spec: &GarnetSpec) -> TabularMdp {
    assert!(
        spec.num_states > 0 && spec.num_actions > 0,
        "empty state or action space"
    );
    assert!(
        spec.branching_factor >= 1 && spec.branching_factor <= spec.num_states,
        "branching factor must lie in [1, num_states]"
    );
    let mut rng = SplitMix64::new(spec.seed);
    let m = spec.num_states * spec.num_actions;
    let mut transition = Vec::with_capacity(m);
    for _ in 0..m {
        let successors = rng.choose_distinct(spec.num_states, spec.branching_factor);
        let weights = rng.simplex(spec.branching_factor);
        let mut row = vec![0.0; spec.num_states];
        for (k, &s_next) in successors.iter().enumerate() {
            row[s_next] = weights[k];
        }
        transition.push(row);
    }
    let reward: Vec<f64> = (0..m).map(|_| rng.next_f64()).collect();
    let initial = vec![1.0 / spec.num_states as f64; spec.num_states];
    TabularMdp::new(
        spec.num_states,
        spec.num_actions,
        transition,
        reward,
        spec.gamma,
        initial,
    )
    .expect("generator output satisfies the MDP invariants")
}

/// Data distribution mixing the canonical greedy optimal occupancy with the
/// uniform policy's occupancy, both started from the MDP's initial
/// distribution. The optimal policy's coverage constant is at most `1/alpha`.
pub fn generate_mu(
    mdp: &TabularMdp,
    profile: &OptimalityProfile,
    alpha: f64,
) -> Result<DataDistribution> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Invalid(format!("alpha = {alpha} outside (0, 1]")));
    }
    let greedy = profile.greedy_policy();
    let theta_star = mdp.occupancy_measure(&greedy, mdp.initial_dist())?;
    let uniform = crate::mdp::Policy::uniform(mdp.num_states(), mdp.num_actions());
    let theta_unif = mdp.occupancy_measure(&uniform, mdp.initial_dist())?;
    let mu: Vec<f64> = theta_star
        .values()
        .iter()
        .zip(theta_unif.values())
        .map(|(&a, &b)| alpha * a + (1.0 - alpha) * b)
        .collect();
    DataDistribution::new(mu, mdp.num_states(), mdp.num_actions())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CaseSelect {
    One,
    Two,
    Both,
}

impl CaseSelect {
    fn runs_one(self) -> bool {
        matches!(self, CaseSelect::One | CaseSelect::Both)
    }

    fn runs_two(self) -> bool {
        matches!(self, CaseSelect::Two | CaseSelect::Both)
    }
}

/// Full sweep configuration; all fields have desk-scale defaults, so a JSON
/// config file may specify any subset.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub mdp_spec: GarnetSpec,
    /// Mixture weight on the optimal occupancy in the data distribution.
    pub coverage_alpha: f64,
    pub n_grid: Vec<usize>,
    pub num_seeds: usize,
    pub delta: f64,
    /// Ratio-class bound; `None` defaults to `2 / coverage_alpha`.
    pub b_w: Option<f64>,
    pub case: CaseSelect,
    /// Cardinality surrogates entering the Case-II bound formulas; defaults
    /// are the tabular extreme-point counts.
    pub card_w: Option<f64>,
    pub card_v: Option<f64>,
    /// Replace sampled datasets with the exact population model (the
    /// infinite-data surrogate); the case-one budget then collapses to zero.
    pub population: bool,
    pub output_path: Option<String>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mdp_spec: GarnetSpec::default(),
            coverage_alpha: 0.5,
            n_grid: vec![500, 2000, 8000, 32000],
            num_seeds: 20,
            delta: 0.05,
            b_w: None,
            case: CaseSelect::Both,
            card_w: None,
            card_v: None,
            population: false,
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.coverage_alpha > 0.0 && self.coverage_alpha <= 1.0) {
            return Err(Error::Invalid("coverage_alpha must lie in (0, 1]".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("n_grid must be strictly increasing".into()));
        }
        if self.num_seeds == 0 {
            return Err(Error::Invalid("num_seeds must be at least 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::Invalid("delta must lie in (0, 1)".into()));
        }
        if let Some(b_w) = self.b_w {
            if b_w.is_nan() || b_w < 1.0 {
                return Err(Error::Invalid("b_w must be at least 1".into()));
            }
        }
        Ok(())
    }

    pub fn effective_b_w(&self) -> f64 {
        self.b_w.unwrap_or(2.0 / self.coverage_alpha)
    }

    pub fn effective_cards(&self) -> (f64, f64) {
        let (card_b, card_w) = crate::case1::tabular_extreme_point_cards(
            self.mdp_spec.num_states,
            self.mdp_spec.num_actions,
        );
        (self.card_w.unwrap_or(card_w), self.card_v.unwrap_or(card_b))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("config JSON: {e}")))
    }
}

/// One `(seed, n, case)` cell of a sweep. `subopt` is measured against the
/// case's own initial distribution (the MDP's `mu0` for case one, the data
/// marginal for case two). Missing diagnostics (case-one rows, failed solves)
/// are `None`/NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub seed: u64,
    pub n: usize,
    pub case: String,
    pub subopt: f64,
    pub bound_rhs: f64,
    pub l1_residual: f64,
    pub delta_emp: Option<f64>,
    pub delta_pop: Option<f64>,
    pub inactive_mass: Option<f64>,
    pub c_star: f64,
    pub c_max: f64,
    pub delta_q: f64,
    pub status: String,
    pub runtime_ms: f64,
}

pub const SWEEP_CSV_HEADER: &str =
    "seed,n,case,subopt,bound_rhs,l1_residual,delta_emp,delta_pop,inactive_mass,c_star,c_max,delta_q,status,runtime_ms";

fn csv_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v}")
    }
}

fn csv_opt(v: Option<f64>) -> String {
    v.map(csv_f64).unwrap_or_default()
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.seed,
            r.n,
            r.case,
            csv_f64(r.subopt),
            csv_f64(r.bound_rhs),
            csv_f64(r.l1_residual),
            csv_opt(r.delta_emp),
            csv_opt(r.delta_pop),
            csv_opt(r.inactive_mass),
            csv_f64(r.c_star),
            csv_f64(r.c_max),
            csv_f64(r.delta_q),
            r.status,
            csv_f64(r.runtime_ms),
        ));
    }
    out
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    match field {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => field
            .parse::<f64>()
            .map_err(|e| Error::Invalid(format!("sweep CSV line {line}: {e}"))),
    }
}

pub fn rows_from_csv(text: &str) -> Result<Vec<SweepRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == SWEEP_CSV_HEADER => {}
        _ => return Err(Error::Invalid("sweep CSV header mismatch".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 14 {
            return Err(Error::Invalid(format!(
                "sweep CSV line {}: expected 14 fields",
                i + 1
            )));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                parse_f64(s, i + 1).map(Some)
            }
        };
        rows.push(SweepRow {
            seed: f[0]
                .parse()
                .map_err(|e| Error::Invalid(format!("line {}: {e}", i + 1)))?,
            n: f[1]
                .parse()
                .map_err(|e| Error::Invalid(format!("line {}: {e}", i + 1)))?,
            case: f[2].to_string(),
            subopt: parse_f64(f[3], i + 1)?,
            bound_rhs: parse_f64(f[4], i + 1)?,
            l1_residual: parse_f64(f[5], i + 1)?,
            delta_emp: opt(f[6])?,
            delta_pop: opt(f[7])?,
            inactive_mass: opt(f[8])?,
            c_star: parse_f64(f[9], i + 1)?,
            c_max: parse_f64(f[10], i + 1)?,
            delta_q: parse_f64(f[11], i + 1)?,
            status: f[12].to_string(),
            runtime_ms: parse_f64(f[13], i + 1)?,
        });
    }
    Ok(rows)
}

/// Runs the full sweep: for each seed an independent generator instance, data
/// distribution and datasets; for each `(seed, n)` cell one solve per
/// requested case. Infeasible or capped solves are recorded in the row status
/// and never abort the sweep. Rows come out sorted by (seed, n, case).
pub fn run_sweep(config: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    config.validate()?;
    let b_w = config.effective_b_w();
    let (card_w, card_v) = config.effective_cards();
    let mut rows = Vec::new();
    for seed_idx in 0..config.num_seeds {
        let instance_seed = SplitMix64::derive(config.mdp_spec.seed, seed_idx as u64);
        let spec = GarnetSpec {
            seed: instance_seed,
            ..config.mdp_spec
        };
        let mdp = generate_garnet(&spec);
        let profile = mdp.optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)?;
        let dist = generate_mu(&mdp, &profile, config.coverage_alpha)?;
        let population = population_model(&mdp, &dist)?;
        let c_star_mu0 = compute_c_star(&mdp, &dist, InitialDist::Mu0)?;
        let c_star_mu = compute_c_star(&mdp, &dist, InitialDist::MuMarginal)?;
        let c_max = if config.case.runs_two() {
            compute_c_max(&mdp, &dist)?
        } else {
            f64::NAN
        };
        let j_star_mu0 = profile.optimal_return(mdp.discount(), mdp.initial_dist());
        let j_star_mu = profile.optimal_return(mdp.discount(), dist.state_marginal());
        for &n in &config.n_grid {
            let model = if config.population {
                population.clone()
            } else {
                let data_seed = SplitMix64::derive(instance_seed, n as u64);
                let dataset = sample_dataset(&mdp, &dist, n, data_seed)?;
                empirical_model(
                    &dataset,
                    mdp.reward(),
                    mdp.discount(),
                    mdp.num_states(),
                    mdp.num_actions(),
                )?
            };
            if config.case.runs_one() {
                let started = Instant::now();
                let mode = if config.population {
                    ThresholdMode::Explicit(0.0)
                } else {
                    ThresholdMode::Tabular
                };
                let cfg = Case1Config::new(b_w, config.delta, mode)?;
                let mut row = SweepRow {
                    seed: seed_idx as u64,
                    n,
                    case: "one".into(),
                    subopt: f64::NAN,
                    bound_rhs: crate::case1::bound_main1(
                        &cfg,
                        mdp.num_states(),
                        mdp.num_actions(),
                        n,
                        mdp.discount(),
                    ),
                    l1_residual: f64::NAN,
                    delta_emp: None,
                    delta_pop: None,
                    inactive_mass: None,
                    c_star: c_star_mu0,
                    c_max: f64::NAN,
                    delta_q: profile.gap,
                    status: "optimal".into(),
                    runtime_ms: 0.0,
                };
                match solve_case1(&model, dist.behavior(), mdp.initial_dist(), &cfg, n) {
                    Ok(sol) => {
                        row.subopt = j_star_mu0 - mdp.return_of(&sol.policy, mdp.initial_dist())?;
                        row.l1_residual = sol.l1_residual;
                    }
                    Err(Error::Infeasible(_)) => row.status = "infeasible".into(),
                    Err(Error::Unbounded) => row.status = "unbounded".into(),
                    Err(Error::IterationLimit) => row.status = "iteration_limit".into(),
                    Err(other) => return Err(other),
                }
                row.runtime_ms = started.elapsed().as_secs_f64() * 1e3;
                rows.push(row);
            }
            if config.case.runs_two() {
                let started = Instant::now();
                let cfg = Case2Config::new(b_w, config.delta)?;
                let (bound, _degenerate) =
                    bound_main2(&cfg, mdp.discount(), c_max, profile.gap, card_w, card_v, n);
                let mut row = SweepRow {
                    seed: seed_idx as u64,
                    n,
                    case: "two".into(),
                    subopt: f64::NAN,
                    bound_rhs: bound,
                    l1_residual: f64::NAN,
                    delta_emp: None,
                    delta_pop: None,
                    inactive_mass: None,
                    c_star: c_star_mu,
                    c_max,
                    delta_q: profile.gap,
                    status: "optimal".into(),
                    runtime_ms: 0.0,
                };
                match solve_case2(&model, dist.behavior(), &cfg) {
                    Ok(sol) => {
                        row.subopt =
                            j_star_mu - mdp.return_of(&sol.policy, dist.state_marginal())?;
                        row.l1_residual = crate::linalg::l1_norm(&crate::case1::validity_residual(
                            &model,
                            sol.w_d.values(),
                            model.mu_d_state(),
                        ));
                        row.delta_emp = Some(sol.delta_emp);
                        row.delta_pop =
                            Some(primal_gap(&population, &sol.w_d, dist.behavior(), &cfg)?);
                        row.inactive_mass =
                            Some(inactive_mass(&sol.w_d, dist.mu(), &profile.inactive_pairs));
                    }
                    Err(Error::Infeasible(_)) => row.status = "infeasible".into(),
                    Err(Error::Unbounded) => row.status = "unbounded".into(),
                    Err(Error::IterationLimit) => row.status = "iteration_limit".into(),
                    Err(other) => return Err(other),
                }
                row.runtime_ms = started.elapsed().as_secs_f64() * 1e3;
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Outcome of fitting the log-log rate profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RateFit {
    Fitted {
        slope: f64,
        intercept: f64,
    },
    /// Fewer than three grid points have median suboptimality above 1e-6:
    /// the solver saturated (a success mode, not an error).
    Saturated,
}

pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of empty slice");
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Median suboptimality per sample size, over rows with optimal status.
pub fn median_subopt_by_n(rows: &[SweepRow]) -> Vec<(usize, f64)> {
    let mut by_n: std::collections::BTreeMap<usize, Vec<f64>> = Default::default();
    for row in rows {
        if row.status == "optimal" && row.subopt.is_finite() {
            by_n.entry(row.n).or_default().push(row.subopt);
        }
    }
    by_n.into_iter()
        .map(|(n, mut v)| (n, median(&mut v)))
        .collect()
}

/// Least-squares slope of `log(median subopt)` against `log(n)`, guarding
/// against saturated (effectively exact) grid points.
pub fn fit_rate(rows: &[SweepRow]) -> RateFit {
    let medians = median_subopt_by_n(rows);
    let points: Vec<(f64, f64)> = medians
        .iter()
        .filter(|&&(_, m)| m > 1e-6)
        .map(|&(n, m)| ((n as f64).ln(), m.ln()))
        .collect();
    if points.len() < 3 {
        return RateFit::Saturated;
    }
    let k = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    let slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    let intercept = (sy - slope * sx) / k;
    RateFit::Fitted { slope, intercept }
}
