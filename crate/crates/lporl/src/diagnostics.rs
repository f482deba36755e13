//! Coverage auditing and inequality verification.
//!
//! Everything the analysis of the two solvers leans on is made executable
//! here: the concentrability constants (`C*`, `C_max`, `C_mu`), the mu-policy
//! predicates, the redistribution construction that turns a Case-II solution
//! into a covered optimal policy, and [`check_suite`], which evaluates every
//! inequality with its measured slack on a concrete instance.

use crate::case1::{validity_residual, Case1Config, Case1Solution};
use crate::case2::{inactive_mass, primal_gap, primal_gap_threshold, Case2Config, Case2Solution};
use crate::data::{population_model, DataDistribution};
use crate::linalg::{dot, l1_norm, linf_norm};
use crate::mdp::{
    concentrability, policy_from_theta, OccupancyMeasure, OptimalityProfile, Policy, TabularMdp,
};
use crate::report::JsonReal;
use crate::rng::SplitMix64;
use crate::{pair_index, Error, Result};
use serde::{Deserialize, Serialize};

/// Strict-positivity threshold shared by every support test in this module
/// (`S_0`, optimal-action sets against data support, mu-policy predicates), so
/// the predicates stay mutually consistent.
pub const SUPP_TOL: f64 = 1e-12;

/// Default value-iteration tolerance for diagnostics-grade optimal profiles.
pub const DEFAULT_VI_TOL: f64 = 1e-12;
/// Default active-set tolerance.
pub const DEFAULT_TAU_ACT: f64 = 1e-8;

/// Cap on deterministic-policy enumeration (`prod_s |T(s)|` combinations).
const ENUMERATION_CAP: usize = 4096;

/// Which initial distribution the occupancy in a concentrability constant is
/// measured from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialDist {
    /// The MDP's own initial distribution.
    Mu0,
    /// The state marginal of the data distribution.
    MuMarginal,
}

fn default_profile(mdp: &TabularMdp) -> Result<OptimalityProfile> {
    mdp.optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
}

/// Coverage constant of the best-covered deterministic optimal policy:
/// the minimum over deterministic policies with actions restricted to the
/// optimal sets of `max_{s,a} theta(s,a) / mu(s,a)`, started from `initial`.
/// `+inf` means no enumerated optimal policy is covered by the data.
///
/// Enumeration is capped at 4096 action combinations; the scan always starts
/// at the canonical greedy policy, so the result is an upper bound on the true
/// minimum for heavily tied instances past the cap.
pub fn compute_c_star(
    mdp: &TabularMdp,
    dist: &DataDistribution,
    initial: InitialDist,
) -> Result<f64> {
    let profile = default_profile(mdp)?;
    let rho = match initial {
        InitialDist::Mu0 => mdp.initial_dist().to_vec(),
        InitialDist::MuMarginal => dist.state_marginal().to_vec(),
    };
    let sizes: Vec<usize> = profile.argmax_sets.iter().map(|set| set.len()).collect();
    let total: usize = sizes
        .iter()
        .try_fold(1usize, |acc, &k| acc.checked_mul(k))
        .unwrap_or(usize::MAX);
    let scan = total.min(ENUMERATION_CAP);
    let mut best = f64::INFINITY;
    let mut counter = vec![0usize; sizes.len()];
    for _ in 0..scan {
        let actions: Vec<usize> = counter
            .iter()
            .enumerate()
            .map(|(s, &k)| profile.argmax_sets[s][k])
            .collect();
        let policy = Policy::deterministic(&actions, mdp.num_actions());
        let theta = mdp.occupancy_measure(&policy, &rho)?;
        best = best.min(concentrability(&theta, dist.mu()));
        // Mixed-radix increment.
        for s in 0..counter.len() {
            counter[s] += 1;
            if counter[s] < sizes[s] {
                break;
            }
            counter[s] = 0;
        }
    }
    Ok(best)
}

/// Upper coverage constant over all data-covered optimal occupancies,
/// computed by one LP per state: maximize the state's occupancy mass over
/// `{theta >= 0, M theta = (1-gamma) mu, theta = 0 on inactive pairs,
/// theta = 0 on unsupported pairs of supported states}`, then take
/// `max_s value(s) / mu(s)` under the `0/0 = 0` convention. `+inf` when the
/// polytope is empty (no covered optimal policy) or when positive optimal
/// mass escapes the support of `mu`.
pub fn compute_c_max(mdp: &TabularMdp, dist: &DataDistribution) -> Result<f64> {
    let profile = default_profile(mdp)?;
    let num_actions = mdp.num_actions();
    let m = mdp.build_m();
    let rho = dist.state_marginal();
    let gamma = mdp.discount();

    let build_lp = |objective_state: usize| {
        use crate::lp::{LinearProgram, Rel, Sense};
        let mut lp = LinearProgram::new(Sense::Maximize);
        let mut ids = Vec::with_capacity(mdp.num_pairs());
        for s in 0..mdp.num_states() {
            for a in 0..num_actions {
                let pair = pair_index(s, a, num_actions);
                let pinned =
                    profile.is_inactive(s, a) || (rho[s] > SUPP_TOL && dist.mu()[pair] <= SUPP_TOL);
                let upper = if pinned { 0.0 } else { f64::INFINITY };
                let obj = if s == objective_state { 1.0 } else { 0.0 };
                ids.push(lp.add_var(obj, 0.0, upper));
            }
        }
        for row in 0..mdp.num_states() {
            let coeffs: Vec<(usize, f64)> = (0..mdp.num_pairs())
                .map(|pair| (ids[pair], m.get(row, pair)))
                .filter(|&(_, c)| c != 0.0)
                .collect();
            lp.add_row(&coeffs, Rel::Eq, (1.0 - gamma) * rho[row]);
        }
        lp
    };

    let mut worst = 0.0_f64;
    for s in 0..mdp.num_states() {
        let sol = crate::lp::solve_lp(&build_lp(s), 1e-9, 1e-9)?;
        match sol.status {
            crate::lp::LpStatus::Optimal => {}
            crate::lp::LpStatus::Infeasible => return Ok(f64::INFINITY),
            crate::lp::LpStatus::Unbounded => return Err(Error::Unbounded),
            crate::lp::LpStatus::IterationLimit => return Err(Error::IterationLimit),
        }
        let mass = sol.objective_value.max(0.0);
        if rho[s] > SUPP_TOL {
            worst = worst.max(mass / rho[s]);
        } else if mass > 1e-9 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(worst)
}

/// Coverage of one initial distribution by another: `max_s mu0(s) / mu(s)`.
pub fn initial_coverage(mu0: &[f64], mu_state: &[f64]) -> f64 {
    let mut worst = 0.0_f64;
    for (&a, &b) in mu0.iter().zip(mu_state) {
        if b > SUPP_TOL {
            worst = worst.max(a / b);
        } else if a > SUPP_TOL {
            return f64::INFINITY;
        }
    }
    worst
}

/// Whether every action the policy can take at a data-supported state is
/// itself covered by the data distribution. Behavior off the support never
/// affects the verdict.
pub fn is_mu_policy(policy: &Policy, dist: &DataDistribution) -> bool {
    let num_actions = dist.num_actions();
    for (s, &mass) in dist.state_marginal().iter().enumerate() {
        if mass <= SUPP_TOL {
            continue;
        }
        for a in 0..num_actions {
            if policy.prob(s, a) > SUPP_TOL && dist.mu()[pair_index(s, a, num_actions)] <= SUPP_TOL
            {
                return false;
            }
        }
    }
    true
}

/// The covered optimal policy with maximal supported optimal-action sets:
/// uniform over the data-covered optimal actions on supported states,
/// deterministic optimal elsewhere. `None` if some supported state has no
/// covered optimal action (the strengthened coverage assumption fails).
pub fn max_mu_optimal_policy(
    mdp: &TabularMdp,
    dist: &DataDistribution,
    profile: &OptimalityProfile,
) -> Option<Policy> {
    let num_actions = mdp.num_actions();
    let mut rows = Vec::with_capacity(mdp.num_states());
    for s in 0..mdp.num_states() {
        let mut row = vec![0.0; num_actions];
        if dist.state_marginal()[s] > SUPP_TOL {
            let covered: Vec<usize> = profile.argmax_sets[s]
                .iter()
                .copied()
                .filter(|&a| dist.mu()[pair_index(s, a, num_actions)] > SUPP_TOL)
                .collect();
            if covered.is_empty() {
                return None;
            }
            for &a in &covered {
                row[a] = 1.0 / covered.len() as f64;
            }
        } else {
            row[profile.argmax_sets[s][0]] = 1.0;
        }
        rows.push(row);
    }
    Some(Policy::new(rows).expect("rows are stochastic"))
}

/// Coverage audit of one `(mdp, mu)` instance.
#[derive(Clone, Debug, Serialize)]
pub struct CoverageAudit {
    /// Best deterministic-optimal-policy concentrability from the MDP's own
    /// initial distribution.
    pub c_star: JsonReal,
    /// LP-computed upper coverage constant over covered optimal occupancies
    /// started from the data marginal.
    pub c_max: JsonReal,
    /// `max_s mu0(s) / mu(s)`.
    pub c_mu: JsonReal,
    /// Data-supported states.
    pub s0: Vec<usize>,
    /// Some optimal policy is covered from the MDP's initial distribution.
    pub spc_holds: bool,
    /// The maximal covered optimal policy exists and its occupancy from the
    /// data marginal stays inside the data support.
    pub spc_plus_holds: bool,
}

pub fn coverage_audit(mdp: &TabularMdp, dist: &DataDistribution) -> Result<CoverageAudit> {
    let profile = default_profile(mdp)?;
    let c_star = compute_c_star(mdp, dist, InitialDist::Mu0)?;
    let c_max = compute_c_max(mdp, dist)?;
    let c_mu = initial_coverage(mdp.initial_dist(), dist.state_marginal());
    let spc_plus_holds = match max_mu_optimal_policy(mdp, dist, &profile) {
        None => false,
        Some(policy) => {
            let theta = mdp.occupancy_measure(&policy, dist.state_marginal())?;
            concentrability(&theta, dist.mu()).is_finite()
        }
    };
    Ok(CoverageAudit {
        c_star: JsonReal(c_star),
        c_max: JsonReal(c_max),
        c_mu: JsonReal(c_mu),
        s0: dist.supported_states(),
        spc_holds: c_star.is_finite(),
        spc_plus_holds,
    })
}

/// Rebuilds a covered optimal policy from a Case-II solution by moving each
/// supported state's inactive mass uniformly onto its covered optimal
/// actions; off the data support the policy is deterministic optimal. The
/// result is verified to be optimal (return within 1e-8 from the data
/// marginal) and covered before it is returned.
pub fn construct_tilde_pistar(
    solution: &Case2Solution,
    mdp: &TabularMdp,
    dist: &DataDistribution,
    profile: &OptimalityProfile,
) -> Result<Policy> {
    let num_actions = mdp.num_actions();
    let theta_d = solution.w_d.occupancy_against(dist.mu());
    let mut rows = Vec::with_capacity(mdp.num_states());
    for s in 0..mdp.num_states() {
        let mut row = vec![0.0; num_actions];
        if dist.state_marginal()[s] > SUPP_TOL {
            let targets: Vec<usize> = profile.argmax_sets[s]
                .iter()
                .copied()
                .filter(|&a| dist.mu()[pair_index(s, a, num_actions)] > SUPP_TOL)
                .collect();
            if targets.is_empty() {
                return Err(Error::Unsupported(format!(
                    "state {s} is data-supported but no optimal action is covered"
                )));
            }
            let inactive_share: f64 = (0..num_actions)
                .filter(|&a| profile.is_inactive(s, a))
                .map(|a| theta_d.get(s, a))
                .sum::<f64>()
                / targets.len() as f64;
            for a in 0..num_actions {
                if profile.is_inactive(s, a) {
                    continue;
                }
                row[a] = theta_d.get(s, a);
            }
            for &a in &targets {
                row[a] += inactive_share;
            }
            let mass: f64 = row.iter().sum();
            if mass <= 0.0 {
                return Err(Error::Unsupported(format!(
                    "state {s}: no mass to normalize after redistribution"
                )));
            }
            for v in &mut row {
                *v /= mass;
            }
        } else {
            row[profile.argmax_sets[s][0]] = 1.0;
        }
        rows.push(row);
    }
    let policy = Policy::new(rows)?;
    if !is_mu_policy(&policy, dist) {
        return Err(Error::Unsupported(
            "reconstructed policy escapes the data support".into(),
        ));
    }
    let j = mdp.return_of(&policy, dist.state_marginal())?;
    let j_star = profile.optimal_return(mdp.discount(), dist.state_marginal());
    if (j_star - j).abs() > 1e-8 {
        return Err(Error::Unsupported(format!(
            "reconstructed policy is not optimal: return {j} vs {j_star}"
        )));
    }
    Ok(policy)
}

/// One verified inequality: `lhs <= rhs` with `slack = rhs - lhs`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AuditCheck {
    pub check_id: String,
    /// The statement being checked, in formula form.
    pub paper_ref: String,
    pub lhs: JsonReal,
    pub rhs: JsonReal,
    pub slack: JsonReal,
    pub pass: bool,
}

fn check(check_id: &str, statement: &str, lhs: f64, rhs: f64) -> AuditCheck {
    let slack = rhs - lhs;
    AuditCheck {
        check_id: check_id.into(),
        paper_ref: statement.into(),
        lhs: JsonReal(lhs),
        rhs: JsonReal(rhs),
        slack: JsonReal(slack),
        pass: slack >= 0.0,
    }
}

/// Serializes as a bare JSON list of checks.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit serialization cannot fail")
    }

    /// One line per check, `PASS`/`FAIL` first.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<32} lhs={:<12.6e} rhs={:<12.6e} slack={:.3e}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.check_id,
                c.lhs.0,
                c.rhs.0,
                c.slack.0
            ));
        }
        out
    }
}

/// Case-I artifacts to audit.
pub struct Case1Audit<'a> {
    pub solution: &'a Case1Solution,
    pub config: &'a Case1Config,
}

/// Case-II artifacts to audit.
pub struct Case2Audit<'a> {
    pub solution: &'a Case2Solution,
    pub config: &'a Case2Config,
    pub n: usize,
    pub card_w: f64,
    pub card_v: f64,
}

pub struct AuditInputs<'a> {
    pub mdp: &'a TabularMdp,
    pub dist: &'a DataDistribution,
    pub case1: Option<Case1Audit<'a>>,
    pub case2: Option<Case2Audit<'a>>,
    pub seed: u64,
    /// Number of random draws behind the randomized checks.
    pub trials: usize,
}

/// Evaluates every inequality the solver analysis relies on, on one concrete
/// instance, reporting measured slack per check. Randomized checks draw their
/// ratios, policies and initial distributions from `seed`. Checks whose
/// prerequisites are absent (no solution supplied, degenerate gap, uncovered
/// instance) are skipped rather than failed.
pub fn check_suite(inputs: &AuditInputs<'_>) -> Result<AuditReport> {
    let mdp = inputs.mdp;
    let dist = inputs.dist;
    let mut rng = SplitMix64::new(inputs.seed);
    let trials = inputs.trials.max(1);
    let num_states = mdp.num_states();
    let num_actions = mdp.num_actions();
    let num_pairs = mdp.num_pairs();
    let gamma = mdp.discount();
    let profile = default_profile(mdp)?;
    let population = population_model(mdp, dist)?;
    let m = mdp.build_m();
    let mut checks = Vec::new();

    // Link identities between the scaled and unscaled operators.
    let mut worst_link = 0.0_f64;
    for _ in 0..trials {
        let w: Vec<f64> = (0..num_pairs).map(|_| rng.next_f64() * 3.0).collect();
        let theta: Vec<f64> = w.iter().zip(dist.mu()).map(|(a, b)| a * b).collect();
        worst_link = worst_link.max((dot(population.u_d(), &w) - dot(mdp.reward(), &theta)).abs());
        let kw = population.k_d().matvec(&w);
        let mtheta = m.matvec(&theta);
        for (a, b) in kw.iter().zip(&mtheta) {
            worst_link = worst_link.max((a - b).abs());
        }
    }
    checks.push(check(
        "link_identity",
        "u'w = r'theta and Kw = M theta for theta = w.mu",
        worst_link,
        1e-12,
    ));

    // Occupancy validity and policy round-trip.
    let mut worst_validity = 0.0_f64;
    let mut worst_round_trip = 0.0_f64;
    for _ in 0..trials {
        let policy = random_policy(&mut rng, num_states, num_actions);
        let rho = rng.simplex(num_states);
        let theta = mdp.occupancy_measure(&policy, &rho)?;
        worst_validity = worst_validity.max(linf_norm(&mdp.validity_residual(&theta, &rho)));
        let recovered = policy_from_theta(&theta);
        for (s, &mass) in theta.state_marginal().iter().enumerate() {
            if mass > 0.0 {
                for a in 0..num_actions {
                    worst_round_trip =
                        worst_round_trip.max((recovered.prob(s, a) - policy.prob(s, a)).abs());
                }
            }
        }
    }
    checks.push(check(
        "occupancy_validity",
        "||M theta - (1-gamma) rho||_inf = 0 for computed occupancies",
        worst_validity,
        1e-9,
    ));
    checks.push(check(
        "policy_round_trip",
        "normalizing theta recovers the generating policy on visited states",
        worst_round_trip,
        1e-9,
    ));

    // Unconditional return-error bound for arbitrary nonnegative theta.
    let mut min_slack = f64::INFINITY;
    let mut at_lhs = 0.0;
    let mut at_rhs = 0.0;
    for _ in 0..trials {
        let raw: Vec<f64> = (0..num_pairs).map(|_| rng.next_f64() * 0.5).collect();
        let theta = OccupancyMeasure::from_values(raw, num_actions).expect("nonnegative");
        let pi_theta = policy_from_theta(&theta);
        let realized = mdp.occupancy_measure(&pi_theta, mdp.initial_dist())?;
        let lhs = (dot(mdp.reward(), theta.values()) - dot(mdp.reward(), realized.values())).abs();
        let rhs =
            l1_norm(&mdp.validity_residual(&theta, mdp.initial_dist())) / (1.0 - gamma) + 1e-9;
        if rhs - lhs < min_slack {
            min_slack = rhs - lhs;
            at_lhs = lhs;
            at_rhs = rhs;
        }
    }
    checks.push(check(
        "return_error_bound",
        "|r'(theta - theta_pi)| <= ||M theta - (1-gamma)mu0||_1 / (1-gamma)",
        at_lhs,
        at_rhs,
    ));

    // State-mass lower bound for any policy and initial distribution.
    let mut worst_defect = f64::NEG_INFINITY;
    for _ in 0..trials {
        let policy = random_policy(&mut rng, num_states, num_actions);
        let rho = rng.simplex(num_states);
        let theta = mdp.occupancy_measure(&policy, &rho)?;
        for (s, &bar) in theta.state_marginal().iter().enumerate() {
            worst_defect = worst_defect.max((1.0 - gamma) * rho[s] - bar);
        }
    }
    checks.push(check(
        "state_mass_lower_bound",
        "sum_a theta(s,a) >= (1-gamma) rho(s)",
        worst_defect,
        1e-9,
    ));

    // Active-set structure: optimal deterministic policies carry no inactive
    // mass; active-supported policies are optimal.
    if (num_actions as f64).powi(num_states as i32) <= ENUMERATION_CAP as f64 {
        let j_star = profile.optimal_return(gamma, dist.state_marginal());
        let mut worst_inactive = 0.0_f64;
        let mut worst_gap = 0.0_f64;
        let mut counter = vec![0usize; num_states];
        loop {
            let policy = Policy::deterministic(&counter, num_actions);
            let j = mdp.return_of(&policy, dist.state_marginal())?;
            if (j - j_star).abs() <= 1e-9 {
                let theta = mdp.occupancy_measure(&policy, dist.state_marginal())?;
                for &(s, a) in &profile.inactive_pairs {
                    worst_inactive = worst_inactive.max(theta.get(s, a));
                }
            }
            let mut done = true;
            for s in 0..num_states {
                counter[s] += 1;
                if counter[s] < num_actions {
                    done = false;
                    break;
                }
                counter[s] = 0;
            }
            if done {
                break;
            }
        }
        for _ in 0..trials.min(20) {
            let mut rows = Vec::with_capacity(num_states);
            for s in 0..num_states {
                let active = &profile.argmax_sets[s];
                let weights = rng.simplex(active.len());
                let mut row = vec![0.0; num_actions];
                for (k, &a) in active.iter().enumerate() {
                    row[a] = weights[k];
                }
                rows.push(row);
            }
            let policy = Policy::new(rows)?;
            let j = mdp.return_of(&policy, dist.state_marginal())?;
            worst_gap = worst_gap.max(j_star - j);
        }
        checks.push(check(
            "inactive_zero_occupancy",
            "optimal policies place zero occupancy on inactive pairs",
            worst_inactive,
            1e-9,
        ));
        checks.push(check(
            "active_support_optimality",
            "policies supported on active pairs attain the optimal return",
            worst_gap,
            1e-8,
        ));
    }

    // Coverage constants and the change-of-measure inequality.
    let audit = coverage_audit(mdp, dist)?;
    if audit.c_star.0.is_finite() {
        // The best-covered optimal ratio is exactly valid in population.
        let greedy = profile.greedy_policy();
        let theta_star = mdp.occupancy_measure(&greedy, mdp.initial_dist())?;
        if concentrability(&theta_star, dist.mu()).is_finite() {
            let w_star: Vec<f64> = theta_star
                .values()
                .iter()
                .zip(dist.mu())
                .map(|(&t, &mu)| if mu > 0.0 { t / mu } else { 0.0 })
                .collect();
            let residual = validity_residual(&population, &w_star, mdp.initial_dist());
            checks.push(check(
                "optimal_ratio_validity",
                "||K w* - (1-gamma) mu0||_1 = 0 for w* = theta*/mu",
                l1_norm(&residual),
                1e-10,
            ));
        }
    }
    if audit.c_mu.0.is_finite() {
        let probe_policy = match &inputs.case2 {
            Some(audit2) => audit2.solution.policy.clone(),
            None => dist.behavior().clone(),
        };
        let j0_gap = profile.optimal_return(gamma, mdp.initial_dist())
            - mdp.return_of(&probe_policy, mdp.initial_dist())?;
        let jmu_gap = profile.optimal_return(gamma, dist.state_marginal())
            - mdp.return_of(&probe_policy, dist.state_marginal())?;
        checks.push(check(
            "initial_change_of_measure",
            "J_mu0(pi*) - J_mu0(pi) <= C_mu (J_mu(pi*) - J_mu(pi))",
            j0_gap,
            audit.c_mu.0 * jmu_gap + 1e-8,
        ));
    }

    if let Some(case1) = &inputs.case1 {
        let sol = case1.solution;
        checks.push(check(
            "budget_honored",
            "||K_D w_D - (1-gamma) mu0||_1 <= eps",
            sol.l1_residual,
            sol.epsilon + 1e-9,
        ));
        let worst_cap = sol
            .w_d
            .per_state_sums()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(check(
            "ratio_state_cap",
            "sum_a w_D(s,a) <= B_w",
            worst_cap,
            case1.config.b_w + 1e-9,
        ));
    }

    if let Some(case2) = &inputs.case2 {
        let sol = case2.solution;
        checks.push(check(
            "empirical_primal_gap_zero",
            "the empirical minimizer has zero empirical primal gap",
            sol.delta_emp.abs(),
            1e-9,
        ));
        let worst_lb = (0..num_states)
            .map(|s| {
                (1.0 - gamma)
                    - (0..num_actions)
                        .map(|a| sol.w_d.get(s, a) * dist.behavior().prob(s, a))
                        .sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(check(
            "ratio_lower_bound",
            "sum_a w_D(s,a) pi_mu(a|s) >= 1-gamma",
            worst_lb,
            1e-9,
        ));
        let gap_pop = primal_gap(&population, &sol.w_d, dist.behavior(), case2.config)?;
        if profile.gap.is_finite() {
            let mass = inactive_mass(&sol.w_d, dist.mu(), &profile.inactive_pairs);
            checks.push(check(
                "inactive_mass_ratio",
                "sum_I theta_D <= Delta(w_D) / Delta_Q",
                mass,
                gap_pop.max(0.0) / profile.gap + 1e-8,
            ));
            if audit.c_max.0.is_finite() {
                let j_gap = profile.optimal_return(gamma, dist.state_marginal())
                    - mdp.return_of(&sol.policy, dist.state_marginal())?;
                checks.push(check(
                    "performance_difference_chain",
                    "J_mu(pi*) - J_mu(pi_D) <= 2 C_max Delta(w_D) / ((1-gamma)^2 Delta_Q)",
                    j_gap,
                    2.0 * audit.c_max.0 * gap_pop.max(0.0) / ((1.0 - gamma).powi(2) * profile.gap)
                        + 1e-6,
                ));
            }
        }
        checks.push(check(
            "primal_gap_concentration",
            "|Delta(w_D)| <= 4 sqrt(2) B_w sqrt(log(|V||W|/delta)) / ((1-gamma) sqrt(n))",
            gap_pop.abs(),
            primal_gap_threshold(case2.config, gamma, case2.card_w, case2.card_v, case2.n),
        ));
    }

    Ok(AuditReport { checks })
}

fn random_policy(rng: &mut SplitMix64, num_states: usize, num_actions: usize) -> Policy {
    let rows: Vec<Vec<f64>> = (0..num_states).map(|_| rng.simplex(num_actions)).collect();
    Policy::new(rows).expect("simplex rows are stochastic")
}
