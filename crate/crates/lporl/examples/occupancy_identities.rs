//! Exact tabular machinery on a tiny chain MDP: occupancy measures from the
//! flow-balance solve, value functions from Bellman evaluation, and the
//! identities tying them together.
//!
//! ```bash
//! cargo run --example occupancy_identities
//! ```

use lporl::linalg::{dot, l1_norm, linf_norm};
use lporl::mdp::{policy_from_theta, Policy, TabularMdp};

fn main() {
    // Two states, one action: state 0 steps to state 1, state 1 loops.
    // Reward is earned only in state 1.
    let mdp = TabularMdp::new(
        2,
        1,
        vec![vec![0.0, 1.0], vec![0.0, 1.0]],
        vec![0.0, 1.0],
        0.5,
        vec![1.0, 0.0],
    )
    .unwrap();
    let policy = Policy::uniform(2, 1);

    let theta = mdp.occupancy_measure(&policy, mdp.initial_dist()).unwrap();
    println!("occupancy theta        = {:?}", theta.values());
    println!("state marginal         = {:?}", theta.state_marginal());
    println!("total mass             = {}", theta.total_mass());

    // Validity: M theta = (1 - gamma) mu0 up to solver precision.
    let residual = mdp.validity_residual(&theta, mdp.initial_dist());
    println!("validity residual inf  = {:.3e}", linf_norm(&residual));

    // The return can be read two ways: (1-gamma) mu0' v, or r' theta.
    let profile = mdp.value_profile(&policy).unwrap();
    println!("v                      = {:?}", profile.v);
    let j_v = mdp.return_of(&policy, mdp.initial_dist()).unwrap();
    let j_theta = dot(mdp.reward(), theta.values());
    println!("return via values      = {j_v}");
    println!("return via occupancy   = {j_theta}");
    assert!((j_v - j_theta).abs() < 1e-12);

    // Normalizing the occupancy recovers the policy on visited states.
    let recovered = policy_from_theta(&theta);
    println!("recovered policy row 0 = {:?}", recovered.row(0));

    // An arbitrary nonnegative vector is generally *not* an occupancy; its
    // return error is controlled by the L1 size of its validity defect.
    let fake = lporl::mdp::OccupancyMeasure::from_values(vec![0.8, 0.2], 1).unwrap();
    let fake_residual = mdp.validity_residual(&fake, mdp.initial_dist());
    let realized = mdp
        .occupancy_measure(&policy_from_theta(&fake), mdp.initial_dist())
        .unwrap();
    let lhs = (dot(mdp.reward(), fake.values()) - dot(mdp.reward(), realized.values())).abs();
    let rhs = l1_norm(&fake_residual) / (1.0 - mdp.discount());
    println!("return error           = {lhs:.6} <= {rhs:.6} (L1 defect / (1-gamma))");
    assert!(lhs <= rhs + 1e-12);
}
