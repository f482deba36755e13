//! Case-II solver: the lower-bounded minimax program over density ratios and
//! box-bounded value vectors, with the data distribution itself as the initial
//! distribution (`rho = mu`).
//!
//! The saddle objective is the validity Lagrangian
//! `ell(w, v) = -u^T w + v^T (K w - (1-gamma) rho)`. With the value class
//! taken to be the full box `[-1/(1-gamma), 1/(1-gamma)]^|S|`, the inner
//! maximum has the closed form `-u^T w + ||K w - (1-gamma) rho||_1 / (1-gamma)`,
//! so the whole minimax collapses to one LP. The ratio class is
//! `{0 <= w <= B_w}` intersected with the per-state lower bound
//! `sum_a w(s,a) pi_mu(a|s) >= 1-gamma`, which keeps the policy normalization
//! away from zero on every supported state.

use crate::data::{DensityRatio, EmpiricalModel};
use crate::lp::{l1_epigraph, solve_lp, L1Budget, LinearProgram, LpSolution, LpStatus, Rel, Sense};
use crate::mdp::Policy;
use crate::{pair_index, Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct Case2Config {
    /// Elementwise cap on the ratio class.
    pub b_w: f64,
    pub delta: f64,
}

impl Case2Config {
    pub fn new(b_w: f64, delta: f64) -> Result<Self> {
        if !b_w.is_finite() || b_w < 1.0 {
            return Err(Error::Invalid(format!("B_w = {b_w} must be at least 1")));
        }
        if delta <= 0.0 || delta >= 1.0 {
            return Err(Error::Invalid(format!("delta = {delta} outside (0, 1)")));
        }
        Ok(Case2Config { b_w, delta })
    }

    /// Radius of the value box for discount `gamma`.
    pub fn v_radius(gamma: f64) -> f64 {
        1.0 / (1.0 - gamma)
    }
}

/// The validity Lagrangian `-u^T w + v^T (K w - (1-gamma) rho)` under `model`.
pub fn ell(model: &EmpiricalModel, w: &[f64], v: &[f64], rho: &[f64]) -> f64 {
    let residual = crate::case1::validity_residual(model, w, rho);
    -crate::linalg::dot(model.u_d(), w) + crate::linalg::dot(v, &residual)
}

/// Exact inner maximization of `ell(w, .)` over the value box of radius
/// `v_radius`: the value is `-u^T w + v_radius * ||K w - (1-gamma) rho||_1`
/// and a maximizer is `v_radius * sign(residual)` (sign of zero fixed to +1).
pub fn inner_max(model: &EmpiricalModel, w: &[f64], rho: &[f64], v_radius: f64) -> (f64, Vec<f64>) {
    let residual = crate::case1::validity_residual(model, w, rho);
    let value = -crate::linalg::dot(model.u_d(), w) + v_radius * crate::linalg::l1_norm(&residual);
    let argmax: Vec<f64> = residual
        .iter()
        .map(|&r| if r < 0.0 { -v_radius } else { v_radius })
        .collect();
    (value, argmax)
}

/// Result of a Case-II solve. `delta_pop` and `inactive_mass` are diagnostics
/// that need the population model and the optimal-action geometry; they are
/// filled in by the caller when that data is available.
#[derive(Clone, Debug)]
pub struct Case2Solution {
    pub w_d: DensityRatio,
    pub policy: Policy,
    /// `max_v ell_D(w_D, v)` over the value box.
    pub ell_emp: f64,
    /// Empirical primal gap at the solution (zero up to solver tolerance).
    pub delta_emp: f64,
    /// Population primal gap, when the population model has been supplied.
    pub delta_pop: Option<f64>,
    /// Mass `sum_{inactive (s,a)} w_D(s,a) mu(s,a)`, when the optimal-action
    /// geometry has been supplied.
    pub inactive_mass: Option<f64>,
}

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;

/// Builds and solves the collapsed minimax LP, returning the raw LP solution
/// and the ratio-variable ids. The initial distribution is the model's own
/// state marginal (`rho = mu`, empirical or exact depending on the model).
fn min_ell_lp(
    model: &EmpiricalModel,
    pi_mu: &Policy,
    cfg: &Case2Config,
) -> Result<(LpSolution, Vec<usize>)> {
    let num_states = model.num_states();
    let num_actions = model.num_actions();
    if pi_mu.num_states() != num_states || pi_mu.num_actions() != num_actions {
        return Err(Error::Invalid(
            "behavior policy shape does not match model".into(),
        ));
    }
    let gamma = model.gamma();
    let v_radius = Case2Config::v_radius(gamma);
    let mut lp = LinearProgram::new(Sense::Minimize);
    let w_ids: Vec<usize> = model
        .u_d()
        .iter()
        .map(|&u| lp.add_var(-u, 0.0, cfg.b_w))
        .collect();
    for s in 0..num_states {
        let row: Vec<(usize, f64)> = (0..num_actions)
            .map(|a| (w_ids[pair_index(s, a, num_actions)], pi_mu.prob(s, a)))
            .filter(|&(_, c)| c != 0.0)
            .collect();
        lp.add_row(&row, Rel::Ge, 1.0 - gamma);
    }
    let offset: Vec<f64> = model
        .mu_d_state()
        .iter()
        .map(|&m| (1.0 - gamma) * m)
        .collect();
    l1_epigraph(
        &mut lp,
        model.k_d(),
        &w_ids,
        &offset,
        L1Budget::Weighted(v_radius),
    );
    let sol = solve_lp(&lp, FEAS_TOL, OPT_TOL)?;
    match sol.status {
        LpStatus::Optimal => Ok((sol, w_ids)),
        LpStatus::Infeasible => Err(Error::Infeasible(
            "ratio class with per-state lower bounds is empty (B_w too small?)".into(),
        )),
        LpStatus::Unbounded => Err(Error::Unbounded),
        LpStatus::IterationLimit => Err(Error::IterationLimit),
    }
}

/// Solves the empirical lower-bounded minimax program on `model`.
pub fn solve_case2(
    model: &EmpiricalModel,
    pi_mu: &Policy,
    cfg: &Case2Config,
) -> Result<Case2Solution> {
    let (sol, w_ids) = min_ell_lp(model, pi_mu, cfg)?;
    let w: Vec<f64> = w_ids
        .iter()
        .map(|&id| sol.x[id].clamp(0.0, cfg.b_w))
        .collect();
    let w_d = DensityRatio::new(w.clone(), model.num_actions())?;
    let policy = extract_policy_case2(&w_d, pi_mu);
    let v_radius = Case2Config::v_radius(model.gamma());
    let (ell_emp, _) = inner_max(model, &w, model.mu_d_state(), v_radius);
    let delta_emp = ell_emp - sol.objective_value;
    Ok(Case2Solution {
        w_d,
        policy,
        ell_emp,
        delta_emp,
        delta_pop: None,
        inactive_mass: None,
    })
}

/// Primal gap of `w` under `model`: `max_v ell(w, v) - min_{w' in class}
/// max_v ell(w', v)`. Pass the empirical model for the empirical gap and the
/// population model for the population gap.
pub fn primal_gap(
    model: &EmpiricalModel,
    w: &DensityRatio,
    pi_mu: &Policy,
    cfg: &Case2Config,
) -> Result<f64> {
    if w.values().len() != model.num_states() * model.num_actions() {
        return Err(Error::Invalid("ratio length does not match model".into()));
    }
    let v_radius = Case2Config::v_radius(model.gamma());
    let (value_at_w, _) = inner_max(model, w.values(), model.mu_d_state(), v_radius);
    let (min_sol, _) = min_ell_lp(model, pi_mu, cfg)?;
    Ok(value_at_w - min_sol.objective_value)
}

/// Reads the policy off a ratio: `pi_w(a|s)` proportional to
/// `w(s,a) pi_mu(a|s)`, uniform where the normalizer vanishes. Under the
/// per-state lower bound the normalizer is at least `1-gamma`, so the uniform
/// branch never fires for solver output.
pub fn extract_policy_case2(w: &DensityRatio, pi_mu: &Policy) -> Policy {
    let num_actions = w.num_actions();
    let num_states = w.values().len() / num_actions;
    let rows: Vec<Vec<f64>> = (0..num_states)
        .map(|s| {
            let weights: Vec<f64> = (0..num_actions)
                .map(|a| w.get(s, a) * pi_mu.prob(s, a))
                .collect();
            let mass: f64 = weights.iter().sum();
            if mass > 0.0 {
                weights.iter().map(|&x| x / mass).collect()
            } else {
                vec![1.0 / num_actions as f64; num_actions]
            }
        })
        .collect();
    Policy::new(rows).expect("normalized rows are stochastic")
}

/// The gap-dependent suboptimality guarantee
/// `8 sqrt(2) B_w C_max / (Delta_Q (1-gamma)^3) * sqrt(log(|W||V|/delta) / n)`.
/// A degenerate gap (`Delta_Q = +inf`, every pair active) returns `(0, true)`:
/// the bound is vacuous because every policy is optimal.
pub fn bound_main2(
    cfg: &Case2Config,
    gamma: f64,
    c_max: f64,
    delta_q: f64,
    card_w: f64,
    card_v: f64,
    n: usize,
) -> (f64, bool) {
    assert!(n >= 1, "bound needs n >= 1");
    if delta_q.is_infinite() {
        return (0.0, true);
    }
    assert!(delta_q > 0.0, "bound needs a positive action gap");
    let log_term = card_w.ln() + card_v.ln() + (1.0 / cfg.delta).ln();
    let value = 8.0 * std::f64::consts::SQRT_2 * cfg.b_w * c_max
        / (delta_q * (1.0 - gamma).powi(3))
        * (log_term / n as f64).sqrt();
    (value, false)
}

/// Variant of [`bound_main2`] for returns measured from an initial
/// distribution covered by `mu` with constant `c_mu`.
pub fn bound_main2_with_initial_coverage(
    cfg: &Case2Config,
    gamma: f64,
    c_max: f64,
    delta_q: f64,
    card_w: f64,
    card_v: f64,
    n: usize,
    c_mu: f64,
) -> (f64, bool) {
    let (value, degenerate) = bound_main2(cfg, gamma, c_max, delta_q, card_w, card_v, n);
    (value * c_mu, degenerate)
}

/// `sum over the given inactive pairs of w(s,a) mu(s,a)`.
pub fn inactive_mass(w: &DensityRatio, mu: &[f64], inactive_pairs: &[(usize, usize)]) -> f64 {
    inactive_pairs
        .iter()
        .map(|&(s, a)| w.get(s, a) * mu[pair_index(s, a, w.num_actions())])
        .sum()
}

/// The generalization threshold `4 sqrt(2) B_w sqrt(log(|V||W|/delta)) /
/// ((1-gamma) sqrt(n))` that the population primal gap exceeds with
/// probability at most `delta`.
pub fn primal_gap_threshold(
    cfg: &Case2Config,
    gamma: f64,
    card_w: f64,
    card_v: f64,
    n: usize,
) -> f64 {
    assert!(n >= 1, "threshold needs n >= 1");
    let log_term = card_w.ln() + card_v.ln() + (1.0 / cfg.delta).ln();
    4.0 * std::f64::consts::SQRT_2 * cfg.b_w * log_term.sqrt() / ((1.0 - gamma) * (n as f64).sqrt())
}
