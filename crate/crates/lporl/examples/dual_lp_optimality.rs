//! The dual (occupancy) form of the MDP linear program, solved with the
//! built-in simplex: its optimum matches value iteration, and normalizing the
//! maximizer yields an optimal policy.
//!
//! ```bash
//! cargo run --example dual_lp_optimality
//! ```

use lporl::diagnostics::{DEFAULT_TAU_ACT, DEFAULT_VI_TOL};
use lporl::harness::{generate_garnet, GarnetSpec};
use lporl::lp::{solve_lp, LinearProgram, Rel, Sense};
use lporl::mdp::{policy_from_theta, OccupancyMeasure};

fn main() {
    let spec = GarnetSpec {
        num_states: 6,
        num_actions: 3,
        gamma: 0.9,
        branching_factor: 3,
        seed: 42,
    };
    let mdp = generate_garnet(&spec);
    let rho = mdp.initial_dist().to_vec();

    // max r' theta  s.t.  M theta = (1-gamma) rho, theta >= 0.
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
    let sol = solve_lp(&lp, 1e-9, 1e-9).unwrap();
    println!(
        "LP status     : {:?} after {} pivots",
        sol.status, sol.iterations
    );
    println!("LP optimum    : {:.12}", sol.objective_value);

    let profile = mdp
        .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
        .unwrap();
    let j_star = profile.optimal_return(mdp.discount(), &rho);
    println!("VI optimum    : {j_star:.12}");
    println!(
        "difference    : {:.3e}",
        (sol.objective_value - j_star).abs()
    );
    assert!((sol.objective_value - j_star).abs() < 1e-7);

    // The maximizer is the occupancy of an optimal policy.
    let theta = OccupancyMeasure::from_values(
        sol.x.iter().map(|&v| v.max(0.0)).collect(),
        mdp.num_actions(),
    )
    .unwrap();
    let policy = policy_from_theta(&theta);
    let j_policy = mdp.return_of(&policy, &rho).unwrap();
    println!("policy return : {j_policy:.12}");
    println!(
        "action gap    : {:.4} (min over inactive pairs)",
        profile.gap
    );
}
