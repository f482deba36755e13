//! Coverage constants and the inequality audit: concentrability, the
//! mu-policy predicates, reconstruction of a covered optimal policy from a
//! solver run, and the full check suite with measured slack.
//!
//! ```bash
//! cargo run --example coverage_audit
//! ```

use lporl::case1::{solve_case1, Case1Config, ThresholdMode};
use lporl::case2::{solve_case2, Case2Config};
use lporl::data::{empirical_model, sample_dataset};
use lporl::diagnostics::{
    check_suite, construct_tilde_pistar, coverage_audit, is_mu_policy, AuditInputs, Case1Audit,
    Case2Audit, DEFAULT_TAU_ACT, DEFAULT_VI_TOL,
};
use lporl::harness::{generate_garnet, generate_mu, GarnetSpec};

fn main() {
    let spec = GarnetSpec::default();
    let mdp = generate_garnet(&spec);
    let profile = mdp
        .optimal_profile(DEFAULT_VI_TOL, DEFAULT_TAU_ACT)
        .unwrap();
    let dist = generate_mu(&mdp, &profile, 0.5).unwrap();

    let audit = coverage_audit(&mdp, &dist).unwrap();
    println!("C*    = {:.4}", audit.c_star.0);
    println!("C_max = {:.4}", audit.c_max.0);
    println!("C_mu  = {:.4}", audit.c_mu.0);
    println!("S_0   = {:?}", audit.s0);
    println!(
        "coverage holds: {}, strengthened: {}",
        audit.spc_holds, audit.spc_plus_holds
    );

    // Solve both programs on one sampled dataset and audit everything.
    let n = 8000;
    let dataset = sample_dataset(&mdp, &dist, n, 13).unwrap();
    let model = empirical_model(
        &dataset,
        mdp.reward(),
        mdp.discount(),
        mdp.num_states(),
        mdp.num_actions(),
    )
    .unwrap();
    let cfg1 = Case1Config::new(4.0, 0.05, ThresholdMode::Tabular).unwrap();
    let sol1 = solve_case1(&model, dist.behavior(), mdp.initial_dist(), &cfg1, n).unwrap();
    let cfg2 = Case2Config::new(4.0, 0.05).unwrap();
    let sol2 = solve_case2(&model, dist.behavior(), &cfg2).unwrap();

    let report = check_suite(&AuditInputs {
        mdp: &mdp,
        dist: &dist,
        case1: Some(Case1Audit {
            solution: &sol1,
            config: &cfg1,
        }),
        case2: Some(Case2Audit {
            solution: &sol2,
            config: &cfg2,
            n,
            card_w: 4.0_f64.powi(8),
            card_v: 2.0_f64.powi(8),
        }),
        seed: 1234,
        trials: 50,
    })
    .unwrap();
    print!("{}", report.render_text());
    println!("all checks pass: {}", report.all_pass());

    // Rebuild a covered optimal policy from the minimax solution.
    let rebuilt = construct_tilde_pistar(&sol2, &mdp, &dist, &profile).unwrap();
    let j = mdp.return_of(&rebuilt, dist.state_marginal()).unwrap();
    let j_star = profile.optimal_return(mdp.discount(), dist.state_marginal());
    println!(
        "reconstructed policy: optimal within {:.1e}, covered = {}",
        (j_star - j).abs(),
        is_mu_policy(&rebuilt, &dist)
    );
}
