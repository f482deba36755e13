//! Case-I solver: return maximization over density ratios under an explicit
//! L1 budget on the occupancy-validity residual.
//!
//! The program solved is
//!
//! ```text
//!   max  u_D^T w
//!   s.t. w >= 0,  sum_a w(s,a) <= B_w          for every state s,
//!        ||K_D w - (1-gamma) mu0||_1 <= eps,
//! ```
//!
//! compiled to a single LP through the epigraph of the L1 norm. The budget
//! `eps` comes from a concentration threshold that shrinks like `1/sqrt(n)`,
//! so with more data the feasible set tightens onto the valid occupancies. An
//! infeasible budget is reported as an error, never silently relaxed: the
//! harness is expected to retry with the next grid value instead.

use crate::data::{DensityRatio, EmpiricalModel};
use crate::linalg::{dot, l1_norm};
use crate::lp::{l1_epigraph, solve_lp, L1Budget, LinearProgram, LpStatus, Rel, Sense};
use crate::mdp::{policy_from_theta, OccupancyMeasure, Policy};
use crate::{pair_index, Error, Result};

/// How the validity budget is chosen.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ThresholdMode {
    /// Finite-class threshold `B_w sqrt(2 log(|B||W|/delta)) / sqrt(n)` with
    /// explicit class cardinalities (or covering/extreme-point surrogates).
    General { card_b: f64, card_w: f64 },
    /// The convex tabular classes, with budget
    /// `B_w sqrt(|S|) log(2|A|+2) log(1/delta) / sqrt(n)`.
    Tabular,
    /// A caller-supplied budget, bypassing the concentration formula.
    Explicit(f64),
}

#[derive(Clone, Copy, Debug)]
pub struct Case1Config {
    pub b_w: f64,
    pub delta: f64,
    pub threshold_mode: ThresholdMode,
}

impl Case1Config {
    pub fn new(b_w: f64, delta: f64, threshold_mode: ThresholdMode) -> Result<Self> {
        if !b_w.is_finite() || b_w < 1.0 {
            return Err(Error::Invalid(format!("B_w = {b_w} must be at least 1")));
        }
        if !(0.0..1.0).contains(&delta) || delta <= 0.0 {
            return Err(Error::Invalid(format!("delta = {delta} outside (0, 1)")));
        }
        if let ThresholdMode::Explicit(eps) = threshold_mode {
            if eps < 0.0 || eps.is_nan() {
                return Err(Error::Invalid(format!(
                    "explicit budget {eps} must be >= 0"
                )));
            }
        }
        Ok(Case1Config {
            b_w,
            delta,
            threshold_mode,
        })
    }

    /// The budget `eps` this configuration yields at sample size `n`.
    pub fn epsilon(&self, num_states: usize, num_actions: usize, n: usize) -> f64 {
        match self.threshold_mode {
            ThresholdMode::General { card_b, card_w } => {
                threshold_general(self.b_w, card_b, card_w, self.delta, n)
            }
            ThresholdMode::Tabular => {
                threshold_tabular(self.b_w, num_states, num_actions, self.delta, n)
            }
            ThresholdMode::Explicit(eps) => eps,
        }
    }
}

/// Extreme-point counts of the convex tabular classes: `(|A|+1)^|S|` for the
/// per-state-capped ratios and `2^|S|` for the sign box. These are the default
/// cardinality surrogates for [`ThresholdMode::General`].
pub fn tabular_extreme_point_cards(num_states: usize, num_actions: usize) -> (f64, f64) {
    let card_w = ((num_actions + 1) as f64).powi(num_states as i32);
    let card_b = 2.0_f64.powi(num_states as i32);
    (card_b, card_w)
}

/// `B_w sqrt(2 log(|B||W|/delta)) / sqrt(n)`.
pub fn threshold_general(b_w: f64, card_b: f64, card_w: f64, delta: f64, n: usize) -> f64 {
    assert!(n >= 1, "threshold needs n >= 1");
    assert!(
        card_b > 0.0 && card_w > 0.0,
        "class cardinalities must be positive"
    );
    let log_term = card_b.ln() + card_w.ln() + (1.0 / delta).ln();
    assert!(log_term >= 0.0, "|B||W| must be at least delta");
    b_w * (2.0 * log_term).sqrt() / (n as f64).sqrt()
}

/// `B_w sqrt(|S|) log(2|A|+2) log(1/delta) / sqrt(n)`, the budget printed in
/// the tabular program. The accompanying guarantee assumes `delta < 1/3`; the
/// formula itself evaluates for any `delta` in `(0, 1)`.
pub fn threshold_tabular(
    b_w: f64,
    num_states: usize,
    num_actions: usize,
    delta: f64,
    n: usize,
) -> f64 {
    assert!(n >= 1, "threshold needs n >= 1");
    assert!(delta > 0.0 && delta < 1.0, "delta must lie in (0, 1)");
    b_w * (num_states as f64).sqrt() * ((2 * num_actions + 2) as f64).ln() * (1.0 / delta).ln()
        / (n as f64).sqrt()
}

/// The suboptimality guarantee evaluated for this configuration:
/// `2 sqrt(2) B_w sqrt(log(|B||W|/delta)) / ((1-gamma) sqrt(n))` for the
/// general classes, `2 B_w sqrt(|S| log(2|A|+2) log(1/delta)) / ((1-gamma)
/// sqrt(n))` for the tabular ones, and `2 eps / (1-gamma)` for an explicit
/// budget.
pub fn bound_main1(
    cfg: &Case1Config,
    num_states: usize,
    num_actions: usize,
    n: usize,
    gamma: f64,
) -> f64 {
    assert!(n >= 1, "bound needs n >= 1");
    match cfg.threshold_mode {
        ThresholdMode::General { card_b, card_w } => {
            let log_term = card_b.ln() + card_w.ln() + (1.0 / cfg.delta).ln();
            2.0 * std::f64::consts::SQRT_2 * cfg.b_w * log_term.sqrt()
                / ((1.0 - gamma) * (n as f64).sqrt())
        }
        ThresholdMode::Tabular => {
            let log_term =
                num_states as f64 * ((2 * num_actions + 2) as f64).ln() * (1.0 / cfg.delta).ln();
            2.0 * cfg.b_w * log_term.sqrt() / ((1.0 - gamma) * (n as f64).sqrt())
        }
        ThresholdMode::Explicit(eps) => 2.0 * eps / (1.0 - gamma),
    }
}

/// The box-dual maximizer certifying the L1 size of the validity residual:
/// elementwise sign of `K w - (1-gamma) mu0`, with sign(0) fixed to +1 for
/// determinism. Its inner product with the residual is exactly the L1 norm.
pub fn sign_vector(model: &EmpiricalModel, w: &[f64], mu0: &[f64]) -> Vec<f64> {
    let residual = validity_residual(model, w, mu0);
    residual
        .iter()
        .map(|&r| if r < 0.0 { -1.0 } else { 1.0 })
        .collect()
}

/// `K w - (1-gamma) rho` under the given model.
pub fn validity_residual(model: &EmpiricalModel, w: &[f64], rho: &[f64]) -> Vec<f64> {
    let mut res = model.k_d().matvec(w);
    for (r, &m) in res.iter_mut().zip(rho) {
        *r -= (1.0 - model.gamma()) * m;
    }
    res
}

/// Result of a feasible Case-I solve.
#[derive(Clone, Debug)]
pub struct Case1Solution {
    pub w_d: DensityRatio,
    /// `w_D(s,a) * pi_mu(a|s)`: the (unnormalized) occupancy surrogate the
    /// policy is read from.
    pub theta_tilde: OccupancyMeasure,
    pub policy: Policy,
    /// `||K_D w_D - (1-gamma) mu0||_1` at the solution.
    pub l1_residual: f64,
    /// `u_D^T w_D`.
    pub objective: f64,
    /// The suboptimality guarantee for this configuration and sample size.
    pub bound_rhs: f64,
    /// The budget actually enforced.
    pub epsilon: f64,
}

const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;

/// Solves the budgeted program on `model` with exact initial distribution
/// `mu0` and known behavior policy `pi_mu`; `n` is the sample size behind the
/// model (used only by the threshold and bound formulas).
pub fn solve_case1(
    model: &EmpiricalModel,
    pi_mu: &Policy,
    mu0: &[f64],
    cfg: &Case1Config,
    n: usize,
) -> Result<Case1Solution> {
    let num_states = model.num_states();
    let num_actions = model.num_actions();
    let num_pairs = num_states * num_actions;
    if pi_mu.num_states() != num_states || pi_mu.num_actions() != num_actions {
        return Err(Error::Invalid(
            "behavior policy shape does not match model".into(),
        ));
    }
    if mu0.len() != num_states {
        return Err(Error::Invalid("mu0 has wrong length".into()));
    }
    let epsilon = cfg.epsilon(num_states, num_actions, n);
    let gamma = model.gamma();

    let mut lp = LinearProgram::new(Sense::Maximize);
    let w_ids: Vec<usize> = model
        .u_d()
        .iter()
        .map(|&u| lp.add_var(u, 0.0, f64::INFINITY))
        .collect();
    for s in 0..num_states {
        let row: Vec<(usize, f64)> = (0..num_actions)
            .map(|a| (w_ids[pair_index(s, a, num_actions)], 1.0))
            .collect();
        lp.add_row(&row, Rel::Le, cfg.b_w);
    }
    if epsilon.is_finite() {
        let offset: Vec<f64> = mu0.iter().map(|&m| (1.0 - gamma) * m).collect();
        l1_epigraph(
            &mut lp,
            model.k_d(),
            &w_ids,
            &offset,
            L1Budget::SumLe(epsilon),
        );
    }
    let sol = solve_lp(&lp, FEAS_TOL, OPT_TOL)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible(format!(
                "no ratio in the B_w class meets the validity budget eps = {epsilon:.6e}"
            )))
        }
        LpStatus::Unbounded => return Err(Error::Unbounded),
        LpStatus::IterationLimit => return Err(Error::IterationLimit),
    }
    let w: Vec<f64> = w_ids.iter().map(|&id| sol.x[id].max(0.0)).collect();
    let w_d = DensityRatio::new(w.clone(), num_actions)?;
    let theta_values: Vec<f64> = (0..num_pairs)
        .map(|i| w[i] * pi_mu.prob(i / num_actions, i % num_actions))
        .collect();
    let theta_tilde = OccupancyMeasure::from_values(theta_values, num_actions)?;
    let policy = policy_from_theta(&theta_tilde);
    let l1_residual = l1_norm(&validity_residual(model, &w, mu0));
    Ok(Case1Solution {
        objective: dot(model.u_d(), &w),
        bound_rhs: bound_main1(cfg, num_states, num_actions, n, gamma),
        w_d,
        theta_tilde,
        policy,
        l1_residual,
        epsilon,
    })
}
