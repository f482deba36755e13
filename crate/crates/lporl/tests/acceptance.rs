//! Acceptance suite: one test per criterion, each printing a PASS line with
//! the measured quantity once its assertions hold. Criteria that share the
//! standard sweep reuse one cached run.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

use lporl::case1::{solve_case1, Case1Config, ThresholdMode};
use lporl::case2::{primal_gap, primal_gap_threshold, solve_case2, Case2Config};
use lporl::data::{population_model, DataDistribution};
use lporl::diagnostics::{
    compute_c_star, construct_tilde_pistar, is_mu_policy, InitialDist, DEFAULT_TAU_ACT,
    DEFAULT_VI_TOL,
};
use lporl::harness::{
    fit_rate, generate_garnet, generate_mu, median_subopt_by_n, run_sweep, ExperimentConfig,
    GarnetSpec, RateFit, SweepRow,
};
use lporl::linalg::{dot, l1_norm, linf_norm};
use lporl::lp::{solve_lp, LinearProgram, LpStatus, Rel, Sense};
use lporl::mdp::{policy_from_theta, OccupancyMeasure, Policy, TabularMdp};
use lporl::rng::SplitMix64;
use std::sync::OnceLock;
use std::time::Instant;

const FEAS: f64 = 1e-9;
const OPT: f64 = 1e-9;

fn random_instance(rng: &mut SplitMix64, max_states: usize) -> TabularMdp {
    let num_states = 2 + rng.uniform_below(max_states - 1);
    let num_actions = 2 + rng.uniform_below(3);
    let spec = GarnetSpec {
        num_states,
        num_actions,
        gamma: 0.5 + 0.45 * rng.next_f64(),
        branching_factor: num_states,
        seed: rng.next_u64(),
    };
    generate_garnet(&spec)
}

fn random_policy(rng: &mut SplitMix64, num_states: usize, num_actions: usize) -> Policy {
    let rows: Vec<Vec<f64>> = (0..num_states).map(|_| rng.simplex(num_actions)).collect();
    Policy::new(rows).unwrap()
}

/// The 20-instance population-limit corpus: standard 8x3 Garnets with mixture
/// coverage at alpha = 1/2.
fn population_corpus() -> Vec<(TabularMdp, DataDistribution)> {
    (0..20)
        .map(|i| {
            let seed = SplitMix64::derive(0xC0FFEE, i);
            let spec = GarnetSpec {
                seed,
                ..GarnetSpec::default()
            };
            let mdp = generate_garnet(&spec);
            let profile = mdp
                .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
                .unwrap();
            let dist = generate_mu(&mdp, &profile, 0.5).unwrap();
            (mdp, dist)
        })
        .collect()
}

fn standard_sweep() -> &'static Vec<SweepRow> {
    static SWEEP: OnceLock<Vec<SweepRow>> = OnceLock::new();
    SWEEP.get_or_init(|| {
        let config = ExperimentConfig::default();
        run_sweep(&config).expect("standard sweep must complete")
    })
}

#[test]
fn criterion_01_link_identities() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0x01);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let mdp = random_instance(&mut rng, 10);
        let m_pairs = mdp.num_pairs();
        let dist = DataDistribution::new(rng.simplex(m_pairs), mdp.num_states(), mdp.num_actions())
            .unwrap();
        let model = population_model(&mdp, &dist).unwrap();
        let w: Vec<f64> = (0..m_pairs).map(|_| rng.next_f64() * 3.0).collect();
        let theta: Vec<f64> = w.iter().zip(dist.mu()).map(|(a, b)| a * b).collect();
        worst = worst.max((dot(model.u_d(), &w) - dot(mdp.reward(), &theta)).abs());
        let kw = model.k_d().matvec(&w);
        let mtheta = mdp.build_m().matvec(&theta);
        for (a, b) in kw.iter().zip(&mtheta) {
            worst = worst.max((a - b).abs());
        }
    }
    assert!(worst <= 1e-12, "identity defect {worst:.3e}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS criterion 01: link identities within 1e-12 over 100 instances \
         (worst {worst:.3e}, {elapsed:.2?})"
    );
}

#[test]
fn criterion_02_occupancy_validity_and_round_trip() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0x02);
    let mut worst_validity = 0.0_f64;
    let mut worst_round_trip = 0.0_f64;
    for _ in 0..100 {
        let mdp = random_instance(&mut rng, 8);
        let policy = random_policy(&mut rng, mdp.num_states(), mdp.num_actions());
        let rho = rng.simplex(mdp.num_states());
        let theta = mdp.occupancy_measure(&policy, &rho).unwrap();
        worst_validity = worst_validity.max(linf_norm(&mdp.validity_residual(&theta, &rho)));
        let recovered = policy_from_theta(&theta);
        for (s, &mass) in theta.state_marginal().iter().enumerate() {
            if mass > 0.0 {
                for a in 0..mdp.num_actions() {
                    worst_round_trip =
                        worst_round_trip.max((recovered.prob(s, a) - policy.prob(s, a)).abs());
                }
            }
        }
    }
    assert!(
        worst_validity <= 1e-9,
        "validity defect {worst_validity:.3e}"
    );
    assert!(
        worst_round_trip <= 1e-9,
        "round-trip defect {worst_round_trip:.3e}"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "PASS criterion 02: occupancy validity {worst_validity:.3e}, policy round-trip \
         {worst_round_trip:.3e} over 100 draws ({elapsed:.2?})"
    );
}

#[test]
fn criterion_03_unconditional_error_bound() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0x03);
    let mut min_slack = f64::INFINITY;
    for i in 0..100 {
        let mdp = random_instance(&mut rng, 8);
        let scale = if i % 3 == 0 { 0.05 } else { 0.6 };
        let raw: Vec<f64> = (0..mdp.num_pairs())
            .map(|_| {
                if rng.next_f64() < 0.15 {
                    0.0
                } else {
                    rng.next_f64() * scale
                }
            })
            .collect();
        let theta = OccupancyMeasure::from_values(raw, mdp.num_actions()).unwrap();
        let pi_theta = policy_from_theta(&theta);
        let realized = mdp
            .occupancy_measure(&pi_theta, mdp.initial_dist())
            .unwrap();
        let lhs = (dot(mdp.reward(), theta.values()) - dot(mdp.reward(), realized.values())).abs();
        let rhs =
            l1_norm(&mdp.validity_residual(&theta, mdp.initial_dist())) / (1.0 - mdp.discount());
        min_slack = min_slack.min(rhs - lhs);
    }
    assert!(min_slack >= -1e-9, "bound violated by {:.3e}", -min_slack);
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 2.0, "took {elapsed:?}");
    println!(
        "PASS criterion 03: return-error bound held on 100 arbitrary ratios \
         (min slack {min_slack:.3e}, {elapsed:.2?})"
    );
}

#[test]
fn criterion_04_population_limit_case_one() {
    let started = Instant::now();
    let mut worst_gap = 0.0_f64;
    for (mdp, dist) in population_corpus() {
        let model = population_model(&mdp, &dist).unwrap();
        let cfg = Case1Config::new(4.0, 0.05, ThresholdMode::Explicit(0.0)).unwrap();
        let sol = solve_case1(&model, dist.behavior(), mdp.initial_dist(), &cfg, 1).unwrap();
        let profile = mdp
            .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
            .unwrap();
        let j_star = profile.optimal_return(mdp.discount(), mdp.initial_dist());
        let j_learned = mdp.return_of(&sol.policy, mdp.initial_dist()).unwrap();
        worst_gap = worst_gap.max(j_star - j_learned);
        assert!(
            (sol.objective - j_star).abs() <= 1e-7,
            "objective off by {:.3e}",
            (sol.objective - j_star).abs()
        );
    }
    assert!(worst_gap <= 1e-7, "worst return gap {worst_gap:.3e}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "PASS criterion 04: exact-data budget solver optimal on 20 instances \
         (worst gap {worst_gap:.3e}, {elapsed:.2?})"
    );
}

#[test]
fn criterion_05_population_limit_case_two() {
    let started = Instant::now();
    let mut worst_gap = 0.0_f64;
    let mut worst_delta = 0.0_f64;
    for (mdp, dist) in population_corpus() {
        let model = population_model(&mdp, &dist).unwrap();
        // The cap must admit the optimal ratio, so it sits above the measured
        // coverage constant for the data-marginal initial distribution.
        let c_star_mu = compute_c_star(&mdp, &dist, InitialDist::MuMarginal).unwrap();
        assert!(
            c_star_mu.is_finite(),
            "constructed mu must cover the optimum"
        );
        let cfg = Case2Config::new(4.0_f64.max(c_star_mu + 1.0), 0.05).unwrap();
        let sol = solve_case2(&model, dist.behavior(), &cfg).unwrap();
        let delta_pop = primal_gap(&model, &sol.w_d, dist.behavior(), &cfg).unwrap();
        worst_delta = worst_delta.max(delta_pop.abs());
        let profile = mdp
            .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
            .unwrap();
        let j_star = profile.optimal_return(mdp.discount(), dist.state_marginal());
        let j_learned = mdp.return_of(&sol.policy, dist.state_marginal()).unwrap();
        worst_gap = worst_gap.max(j_star - j_learned);
    }
    assert!(worst_delta <= 1e-8, "worst primal gap {worst_delta:.3e}");
    assert!(worst_gap <= 1e-7, "worst return gap {worst_gap:.3e}");
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "PASS criterion 05: exact-data minimax solver optimal on 20 instances \
         (worst primal gap {worst_delta:.3e}, worst return gap {worst_gap:.3e}, {elapsed:.2?})"
    );
}

#[test]
fn criterion_06_finite_sample_bound_case_one() {
    let started = Instant::now();
    let rows = standard_sweep();
    let case_one: Vec<&SweepRow> = rows.iter().filter(|r| r.case == "one").collect();
    assert_eq!(case_one.len(), 20 * 4);
    let mut covered = 0usize;
    let mut total = 0usize;
    for row in &case_one {
        if row.status != "optimal" {
            continue;
        }
        total += 1;
        if row.subopt <= row.bound_rhs {
            covered += 1;
        }
    }
    assert!(
        total >= 72,
        "too many non-optimal cells: {}",
        case_one.len() - total
    );
    let fraction = covered as f64 / total as f64;
    assert!(
        fraction >= 0.9,
        "bound covered only {covered}/{total} cells"
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "PASS criterion 06: realized suboptimality under the bound on {covered}/{total} \
         cells ({elapsed:.2?} incl. shared sweep)"
    );
}

#[test]
fn criterion_07_gap_chain_case_two() {
    let started = Instant::now();
    let rows = standard_sweep();
    let mut checked = 0usize;
    let mut degenerate = 0usize;
    for row in rows
        .iter()
        .filter(|r| r.case == "two" && r.status == "optimal")
    {
        if row.delta_q.is_infinite() {
            degenerate += 1;
            continue;
        }
        let delta_pop = row.delta_pop.expect("sweep fills delta_pop").max(0.0);
        let mass = row.inactive_mass.expect("sweep fills inactive_mass");
        assert!(
            mass <= delta_pop / row.delta_q + 1e-8,
            "inactive mass {mass:.3e} above {:.3e} (seed {} n {})",
            delta_pop / row.delta_q,
            row.seed,
            row.n
        );
        assert!(
            row.c_max.is_finite(),
            "constructed coverage keeps C_max finite"
        );
        let chain_rhs =
            2.0 * row.c_max * delta_pop / ((1.0 - 0.9_f64).powi(2) * row.delta_q) + 1e-6;
        assert!(
            row.subopt <= chain_rhs,
            "return gap {:.3e} above chain bound {chain_rhs:.3e} (seed {} n {})",
            row.subopt,
            row.seed,
            row.n
        );
        checked += 1;
    }
    assert!(checked > 0, "no non-degenerate cells to check");
    let elapsed = started.elapsed();
    println!(
        "PASS criterion 07: inactive-mass and performance-difference chain held on \
         {checked} cells ({degenerate} degenerate excluded, {elapsed:.2?})"
    );
}

#[test]
fn criterion_08_primal_gap_concentration() {
    let started = Instant::now();
    let n = 8000;
    let cfg2 = Case2Config::new(4.0, 0.05).unwrap();
    let config = ExperimentConfig::default();
    let (card_w, card_v) = config.effective_cards();
    let mut exceed = 0usize;
    for i in 0..50 {
        let seed = SplitMix64::derive(0xFACADE, i);
        let spec = GarnetSpec {
            seed,
            ..GarnetSpec::default()
        };
        let mdp = generate_garnet(&spec);
        let profile = mdp
            .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
            .unwrap();
        let dist = generate_mu(&mdp, &profile, 0.5).unwrap();
        let dataset =
            lporl::data::sample_dataset(&mdp, &dist, n, SplitMix64::derive(seed, 7)).unwrap();
        let model = lporl::data::empirical_model(
            &dataset,
            mdp.reward(),
            mdp.discount(),
            mdp.num_states(),
            mdp.num_actions(),
        )
        .unwrap();
        let sol = solve_case2(&model, dist.behavior(), &cfg2).unwrap();
        let population = population_model(&mdp, &dist).unwrap();
        let delta_pop = primal_gap(&population, &sol.w_d, dist.behavior(), &cfg2).unwrap();
        let threshold = primal_gap_threshold(&cfg2, mdp.discount(), card_w, card_v, n);
        if delta_pop.abs() > threshold {
            exceed += 1;
        }
    }
    assert!(exceed <= 5, "threshold exceeded on {exceed}/50 seeds");
    let elapsed = started.elapsed();
    println!(
        "PASS criterion 08: population primal gap within the concentration threshold on \
         {}/50 seeds ({elapsed:.2?})",
        50 - exceed
    );
}

#[test]
fn criterion_09_rate_profile_case_one() {
    let rows = standard_sweep();
    let case_one: Vec<SweepRow> = rows.iter().filter(|r| r.case == "one").cloned().collect();
    let medians = median_subopt_by_n(&case_one);
    assert_eq!(medians.len(), 4);
    for pair in medians.windows(2) {
        assert!(
            pair[1].1 <= pair[0].1 + 1e-9,
            "median rose from {:.3e} (n={}) to {:.3e} (n={})",
            pair[0].1,
            pair[0].0,
            pair[1].1,
            pair[1].0
        );
    }
    let verdict = match fit_rate(&case_one) {
        RateFit::Fitted { slope, .. } => {
            assert!(
                (-0.8..=-0.2).contains(&slope),
                "log-log slope {slope:.3} outside [-0.8, -0.2]"
            );
            format!("slope {slope:.3}")
        }
        RateFit::Saturated => "saturated (exact recovery before the grid ends)".to_string(),
    };
    println!(
        "PASS criterion 09: medians nonincreasing {:?}; rate verdict: {verdict}",
        medians
            .iter()
            .map(|&(n, m)| (n, format!("{m:.2e}")))
            .collect::<Vec<_>>()
    );
}

#[test]
fn criterion_10_state_mass_lower_bound() {
    let started = Instant::now();
    let mut rng = SplitMix64::new(0x0A);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let mdp = random_instance(&mut rng, 8);
        let policy = random_policy(&mut rng, mdp.num_states(), mdp.num_actions());
        let rho = rng.simplex(mdp.num_states());
        let theta = mdp.occupancy_measure(&policy, &rho).unwrap();
        for (s, &bar) in theta.state_marginal().iter().enumerate() {
            worst = worst.max((1.0 - mdp.discount()) * rho[s] - bar);
        }
    }
    assert!(worst <= 1e-9, "lower bound violated by {worst:.3e}");
    let elapsed = started.elapsed();
    println!(
        "PASS criterion 10: state-mass lower bound held on 100 draws \
         (worst defect {worst:.3e}, {elapsed:.2?})"
    );
}

#[test]
fn criterion_11_optimal_policy_reconstruction() {
    let started = Instant::now();
    for (mdp, dist) in population_corpus() {
        let model = population_model(&mdp, &dist).unwrap();
        let c_star_mu = compute_c_star(&mdp, &dist, InitialDist::MuMarginal).unwrap();
        let cfg = Case2Config::new(4.0_f64.max(c_star_mu + 1.0), 0.05).unwrap();
        let sol = solve_case2(&model, dist.behavior(), &cfg).unwrap();
        let profile = mdp
            .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
            .unwrap();
        let rebuilt = construct_tilde_pistar(&sol, &mdp, &dist, &profile).unwrap();
        assert!(is_mu_policy(&rebuilt, &dist));
        let j = mdp.return_of(&rebuilt, dist.state_marginal()).unwrap();
        let j_star = profile.optimal_return(mdp.discount(), dist.state_marginal());
        assert!(
            (j_star - j).abs() <= 1e-8,
            "reconstruction off by {:.3e}",
            (j_star - j).abs()
        );
    }
    let elapsed = started.elapsed();
    println!(
        "PASS criterion 11: redistribution yields a covered optimal policy on 20 \
         instances ({elapsed:.2?})"
    );
}

#[test]
fn criterion_12_lp_engine() {
    let started = Instant::now();
    // Dual-form return maximization agrees with value iteration.
    let mut rng = SplitMix64::new(0x0C);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let mdp = random_instance(&mut rng, 6);
        let rho = rng.simplex(mdp.num_states());
        let m = mdp.build_m();
        let mut lp = LinearProgram::new(Sense::Maximize);
        let ids: Vec<usize> = mdp
            .reward()
            .iter()
            .map(|&r| lp.add_var(r, 0.0, f64::INFINITY))
            .collect();
        for s in 0..mdp.num_states() {
            let coeffs: Vec<(usize, f64)> = ids
                .iter()
                .enumerate()
                .map(|(c, &id)| (id, m.get(s, c)))
                .filter(|&(_, v)| v != 0.0)
                .collect();
            lp.add_row(&coeffs, Rel::Eq, (1.0 - mdp.discount()) * rho[s]);
        }
        let sol = solve_lp(&lp, FEAS, OPT).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let profile = mdp
            .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
            .unwrap();
        worst =
            worst.max((sol.objective_value - profile.optimal_return(mdp.discount(), &rho)).abs());
    }
    assert!(worst <= 1e-7, "dual optimum off by {worst:.3e}");

    // Hand corpus of infeasible and unbounded programs.
    let corpus: Vec<(&str, LinearProgram, LpStatus)> = vec![
        (
            "conflicting one-variable rows",
            {
                let mut lp = LinearProgram::new(Sense::Minimize);
                let x = lp.add_var(1.0, 0.0, f64::INFINITY);
                lp.add_row(&[(x, 1.0)], Rel::Ge, 2.0);
                lp.add_row(&[(x, 1.0)], Rel::Le, 1.0);
                lp
            },
            LpStatus::Infeasible,
        ),
        (
            "inconsistent equalities",
            {
                let mut lp = LinearProgram::new(Sense::Minimize);
                let x = lp.add_var(0.0, 0.0, f64::INFINITY);
                let y = lp.add_var(0.0, 0.0, f64::INFINITY);
                lp.add_row(&[(x, 1.0), (y, 1.0)], Rel::Eq, 1.0);
                lp.add_row(&[(x, 1.0), (y, 1.0)], Rel::Eq, 2.0);
                lp
            },
            LpStatus::Infeasible,
        ),
        (
            "empty bound box",
            {
                let mut lp = LinearProgram::new(Sense::Minimize);
                lp.add_var(1.0, 2.0, 1.0);
                lp
            },
            LpStatus::Infeasible,
        ),
        (
            "negative rhs on nonnegative variable",
            {
                let mut lp = LinearProgram::new(Sense::Minimize);
                let x = lp.add_var(1.0, 0.0, f64::INFINITY);
                lp.add_row(&[(x, 2.0)], Rel::Le, -1.0);
                lp
            },
            LpStatus::Infeasible,
        ),
        (
            "surplus cannot reach",
            {
                let mut lp = LinearProgram::new(Sense::Minimize);
                let x = lp.add_var(1.0, 0.0, 3.0);
                let y = lp.add_var(1.0, 0.0, 3.0);
                lp.add_row(&[(x, 1.0), (y, 1.0)], Rel::Ge, 7.0);
                lp
            },
            LpStatus::Infeasible,
        ),
        (
            "three-way inconsistency",
            {
                let mut lp = LinearProgram::new(Sense::Minimize);
                let x = lp.add_var(0.0, f64::NEG_INFINITY, f64::INFINITY);
                let y = lp.add_var(0.0, f64::NEG_INFINITY, f64::INFINITY);
                lp.add_row(&[(x, 1.0)], Rel::Eq, 1.0);
                lp.add_row(&[(y, 1.0)], Rel::Eq, 1.0);
                lp.add_row(&[(x, 1.0), (y, 1.0)], Rel::Eq, 3.0);
                lp
            },
            LpStatus::Infeasible,
        ),
        (
            "free variable maximization",
            {
                let mut lp = LinearProgram::new(Sense::Maximize);
                let x = lp.add_var(1.0, f64::NEG_INFINITY, f64::INFINITY);
                lp.add_row(&[(x, 1.0)], Rel::Ge, 0.0);
                lp
            },
            LpStatus::Unbounded,
        ),
        (
            "coupled growth",
            {
                let mut lp = LinearProgram::new(Sense::Maximize);
                let x = lp.add_var(1.0, 0.0, f64::INFINITY);
                let y = lp.add_var(1.0, 0.0, f64::INFINITY);
                lp.add_row(&[(x, 1.0), (y, -1.0)], Rel::Le, 1.0);
                lp
            },
            LpStatus::Unbounded,
        ),
        (
            "descent along free coordinate",
            {
                let mut lp = LinearProgram::new(Sense::Minimize);
                let x = lp.add_var(1.0, 0.0, 1.0);
                let y = lp.add_var(-1.0, f64::NEG_INFINITY, f64::INFINITY);
                lp.add_row(&[(x, 1.0)], Rel::Le, 1.0);
                let _ = y;
                lp
            },
            LpStatus::Unbounded,
        ),
        (
            "negative cost ray",
            {
                let mut lp = LinearProgram::new(Sense::Minimize);
                let x = lp.add_var(-1.0, 0.0, f64::INFINITY);
                let y = lp.add_var(0.0, 0.0, 5.0);
                lp.add_row(&[(x, -1.0), (y, 1.0)], Rel::Le, 4.0);
                lp
            },
            LpStatus::Unbounded,
        ),
    ];
    assert_eq!(corpus.len(), 10);
    for (name, lp, expected) in corpus {
        let sol = solve_lp(&lp, FEAS, OPT).unwrap();
        assert_eq!(sol.status, expected, "case {name:?} misclassified");
    }
    let elapsed = started.elapsed();
    println!(
        "PASS criterion 12: dual optimum matched value iteration on 50 MDPs \
         (worst {worst:.3e}) and 10 hand cases classified ({elapsed:.2?})"
    );
}
