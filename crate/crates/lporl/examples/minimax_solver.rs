//! The lower-bounded minimax solver end to end: the closed-form inner
//! maximization over the value box, primal gaps, inactive mass, and the
//! gap-dependent guarantee.
//!
//! ```bash
//! cargo run --example minimax_solver
//! ```

use lporl::case2::{bound_main2, inactive_mass, inner_max, primal_gap, solve_case2, Case2Config};
use lporl::data::{empirical_model, population_model, sample_dataset};
use lporl::diagnostics::{compute_c_max, DEFAULT_TAU_ACT, DEFAULT_VI_TOL};
use lporl::harness::{generate_garnet, generate_mu, GarnetSpec};

fn main() {
    let spec = GarnetSpec::default();
    let mdp = generate_garnet(&spec);
    let profile = mdp
        .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
        .unwrap();
    let dist = generate_mu(&mdp, &profile, 0.5).unwrap();
    let population = population_model(&mdp, &dist).unwrap();
    let cfg = Case2Config::new(6.0, 0.05).unwrap();

    // Exact data: the minimizer reaches the optimal return from rho = mu.
    let sol = solve_case2(&population, dist.behavior(), &cfg).unwrap();
    let j_star = profile.optimal_return(mdp.discount(), dist.state_marginal());
    let j = mdp.return_of(&sol.policy, dist.state_marginal()).unwrap();
    println!("optimal return (mu)   : {j_star:.9}");
    println!("exact-data return     : {j:.9}");
    println!(
        "saddle value          : {:.9} (= -optimal return)",
        sol.ell_emp
    );
    println!("empirical primal gap  : {:.3e}", sol.delta_emp);

    // The inner maximization is a closed form: box radius times the L1
    // residual, with a sign-vector maximizer.
    let (value, v_star) = inner_max(
        &population,
        sol.w_d.values(),
        population.mu_d_state(),
        1.0 / (1.0 - mdp.discount()),
    );
    println!(
        "inner max at solution : {value:.9}, |v| = {:?}",
        v_star[0].abs()
    );

    // Sampled data: primal gaps, inactive mass and the chain of bounds.
    let c_max = compute_c_max(&mdp, &dist).unwrap();
    let gap = profile.gap;
    println!("C_max = {c_max:.4}, action gap = {gap:.4}");
    println!("--- sampled data ---");
    for n in [500usize, 4_000, 32_000] {
        let dataset = sample_dataset(&mdp, &dist, n, 99).unwrap();
        let model = empirical_model(
            &dataset,
            mdp.reward(),
            mdp.discount(),
            mdp.num_states(),
            mdp.num_actions(),
        )
        .unwrap();
        let sol = solve_case2(&model, dist.behavior(), &cfg).unwrap();
        let delta_pop = primal_gap(&population, &sol.w_d, dist.behavior(), &cfg).unwrap();
        let mass = inactive_mass(&sol.w_d, dist.mu(), &profile.inactive_pairs);
        let j = mdp.return_of(&sol.policy, dist.state_marginal()).unwrap();
        let (bound, _) = bound_main2(
            &cfg,
            mdp.discount(),
            c_max,
            gap,
            4.0_f64.powi(8),
            2.0_f64.powi(8),
            n,
        );
        println!(
            "n = {n:>6}: subopt = {:>10.3e}  pop gap = {:>10.3e}  inactive mass = {:>9.3e}  bound = {bound:.2}",
            j_star - j,
            delta_pop,
            mass,
        );
        // The inactive mass is controlled by the primal gap over the action
        // gap; the return gap follows through the performance-difference
        // chain.
        assert!(mass <= delta_pop.max(0.0) / gap + 1e-8);
        assert!(
            j_star - j
                <= 2.0 * c_max * delta_pop.max(0.0) / ((1.0 - mdp.discount()).powi(2) * gap) + 1e-6
        );
    }
}
