//! Exact tabular MDP machinery.
//!
//! A [`TabularMdp`] is the tuple (S, A, P, r, gamma, mu0) with validated
//! invariants. Occupancy measures and value functions are computed by dense
//! linear solves rather than simulation, so downstream identity checks can be
//! asserted at 1e-9 tolerances.
//!
//! The flat pair ordering `(s0,a0), (s0,a1), ..., (s1,a0), ...` (see
//! [`crate::pair_index`]) is shared by every vector and matrix here and in the
//! rest of the crate.

use crate::linalg::{self, Mat};
use crate::{pair_index, Error, Result};
use serde::{Deserialize, Serialize};

/// Tolerance for "is a probability vector" input validation.
pub const DIST_TOL: f64 = 1e-12;
/// Tolerance at which computed occupancies must satisfy the validity equation
/// `M theta = (1 - gamma) rho`.
pub const VALIDITY_TOL: f64 = 1e-9;

/// Finite MDP with deterministic rewards in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpJson", into = "MdpJson")]
pub struct TabularMdp {
    num_states: usize,
    num_actions: usize,
    /// `num_states * num_actions` rows, each a distribution over next states.
    transition: Mat,
    reward: Vec<f64>,
    discount: f64,
    initial_dist: Vec<f64>,
}

/// On-disk JSON schema for an MDP. `transition` is row-major over pairs, i.e.
/// `transition[s * num_actions + a][s_next]`.
#[derive(Serialize, Deserialize)]
struct MdpJson {
    num_states: usize,
    num_actions: usize,
    gamma: f64,
    transition: Vec<Vec<f64>>,
    reward: Vec<f64>,
    initial_dist: Vec<f64>,
}

impl From<TabularMdp> for MdpJson {
    fn from(mdp: TabularMdp) -> Self {
        let transition = (0..mdp.num_pairs())
            .map(|i| mdp.transition.row(i).to_vec())
            .collect();
        MdpJson {
            num_states: mdp.num_states,
            num_actions: mdp.num_actions,
            gamma: mdp.discount,
            transition,
            reward: mdp.reward,
            initial_dist: mdp.initial_dist,
        }
    }
}

impl TryFrom<MdpJson> for TabularMdp {
    type Error = Error;

    fn try_from(json: MdpJson) -> Result<Self> {
        TabularMdp::new(
            json.num_states,
            json.num_actions,
            json.transition,
            json.reward,
            json.gamma,
            json.initial_dist,
        )
    }
}

fn check_distribution(v: &[f64], what: &str) -> Result<()> {
    let mut sum = 0.0;
    for &x in v {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Invalid(format!(
                "{what}: entry {x} not a probability"
            )));
        }
        sum += x;
    }
    if (sum - 1.0).abs() > DIST_TOL {
        return Err(Error::Invalid(format!("{what}: sums to {sum}, expected 1")));
    }
    Ok(())
}

impl TabularMdp {
    pub fn new(
        num_states: usize,
        num_actions: usize,
        transition: Vec<Vec<f64>>,
        reward: Vec<f64>,
        discount: f64,
        initial_dist: Vec<f64>,
    ) -> Result<Self> {
        if num_states == 0 || num_actions == 0 {
            return Err(Error::Invalid(
                "state and action counts must be positive".into(),
            ));
        }
        let m = num_states * num_actions;
        if transition.len() != m {
            return Err(Error::Invalid(format!(
                "transition has {} rows, expected {m}",
                transition.len()
            )));
        }
        for (i, row) in transition.iter().enumerate() {
            if row.len() != num_states {
                return Err(Error::Invalid(format!(
                    "transition row {i} has length {}, expected {num_states}",
                    row.len()
                )));
            }
            check_distribution(row, &format!("transition row {i}"))?;
        }
        if reward.len() != m {
            return Err(Error::Invalid(format!(
                "reward has length {}, expected {m}",
                reward.len()
            )));
        }
        for (i, &r) in reward.iter().enumerate() {
            if !r.is_finite() || !(0.0..=1.0).contains(&r) {
                return Err(Error::Invalid(format!("reward[{i}] = {r} outside [0, 1]")));
            }
        }
        if !discount.is_finite() || !(0.0..1.0).contains(&discount) {
            return Err(Error::Invalid(format!(
                "discount {discount} outside [0, 1)"
            )));
        }
        if initial_dist.len() != num_states {
            return Err(Error::Invalid(
                "initial distribution has wrong length".into(),
            ));
        }
        check_distribution(&initial_dist, "initial distribution")?;
        Ok(TabularMdp {
            num_states,
            num_actions,
            transition: Mat::from_rows(&transition),
            reward,
            discount,
            initial_dist,
        })
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.num_states
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `|S| * |A|`.
    #[inline]
    pub fn num_pairs(&self) -> usize {
        self.num_states * self.num_actions
    }

    #[inline]
    pub fn discount(&self) -> f64 {
        self.discount
    }

    #[inline]
    pub fn reward(&self) -> &[f64] {
        &self.reward
    }

    #[inline]
    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    /// Next-state distribution of the pair `(s, a)`.
    #[inline]
    pub fn transition_row(&self, state: usize, action: usize) -> &[f64] {
        self.transition
            .row(pair_index(state, action, self.num_actions))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("MDP serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Invalid(format!("MDP JSON: {e}")))
    }

    /// State-to-state flow matrix under `policy`: entry `(j, i)` is the
    /// probability of stepping from state `i` to state `j`.
    fn flow_matrix(&self, policy: &Policy) -> Mat {
        let n = self.num_states;
        let mut flow = Mat::zeros(n, n);
        for i in 0..n {
            for a in 0..self.num_actions {
                let p = policy.prob(i, a);
                if p == 0.0 {
                    continue;
                }
                for (j, &t) in self.transition_row(i, a).iter().enumerate() {
                    flow.add_to(j, i, p * t);
                }
            }
        }
        flow
    }

    /// Discounted state-action occupancy of `policy` started from `rho`,
    /// normalized to total mass one. Computed exactly from the flow balance
    /// system `(I - gamma P_pi) theta_bar = (1 - gamma) rho`.
    pub fn occupancy_measure(&self, policy: &Policy, rho: &[f64]) -> Result<OccupancyMeasure> {
        self.check_policy(policy)?;
        check_distribution(rho, "rho")?;
        if rho.len() != self.num_states {
            return Err(Error::Invalid("rho has wrong length".into()));
        }
        let n = self.num_states;
        let flow = self.flow_matrix(policy);
        let mut system = Mat::identity(n);
        for j in 0..n {
            for i in 0..n {
                system.add_to(j, i, -self.discount * flow.get(j, i));
            }
        }
        let rhs: Vec<f64> = rho.iter().map(|&x| (1.0 - self.discount) * x).collect();
        let mut state_occ = linalg::solve_dense(&system, &rhs)
            .ok_or_else(|| Error::Singular("occupancy flow system".into()))?;
        for x in &mut state_occ {
            // Snap solver dust to exact zero so support tests stay meaningful.
            if x.abs() < 1e-13 {
                *x = 0.0;
            } else if *x < 0.0 {
                if *x < -VALIDITY_TOL {
                    return Err(Error::Singular(format!("negative occupancy {x}")));
                }
                *x = 0.0;
            }
        }
        let mut values = vec![0.0; self.num_pairs()];
        for s in 0..n {
            for a in 0..self.num_actions {
                values[pair_index(s, a, self.num_actions)] = state_occ[s] * policy.prob(s, a);
            }
        }
        let theta = OccupancyMeasure {
            values,
            num_actions: self.num_actions,
        };
        let residual = self.validity_residual(&theta, rho);
        if linalg::linf_norm(&residual) > VALIDITY_TOL {
            return Err(Error::Singular(format!(
                "occupancy solve residual {:.3e} above {VALIDITY_TOL:.0e}",
                linalg::linf_norm(&residual)
            )));
        }
        Ok(theta)
    }

    /// `M theta - (1 - gamma) rho`, the flow-conservation defect of `theta`.
    pub fn validity_residual(&self, theta: &OccupancyMeasure, rho: &[f64]) -> Vec<f64> {
        let m = self.build_m();
        let mut res = m.matvec(theta.values());
        for (r, &x) in res.iter_mut().zip(rho) {
            *r -= (1.0 - self.discount) * x;
        }
        res
    }

    /// Q and v functions of `policy`, from the exact Bellman evaluation system.
    pub fn value_profile(&self, policy: &Policy) -> Result<ValueProfile> {
        self.check_policy(policy)?;
        let n = self.num_states;
        let flow = self.flow_matrix(policy);
        // v = r_pi + gamma * flow^T v  (flow columns index the source state).
        let mut system = Mat::identity(n);
        for i in 0..n {
            for j in 0..n {
                system.add_to(i, j, -self.discount * flow.get(j, i));
            }
        }
        let r_pi: Vec<f64> = (0..n)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| policy.prob(s, a) * self.reward[pair_index(s, a, self.num_actions)])
                    .sum()
            })
            .collect();
        let v0 = linalg::solve_dense(&system, &r_pi)
            .ok_or_else(|| Error::Singular("Bellman evaluation system".into()))?;
        let mut q = self.transition.matvec(&v0);
        for (qi, &ri) in q.iter_mut().zip(&self.reward) {
            *qi = ri + self.discount * *qi;
        }
        let v: Vec<f64> = (0..n)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| policy.prob(s, a) * q[pair_index(s, a, self.num_actions)])
                    .sum()
            })
            .collect();
        Ok(ValueProfile { v, q })
    }

    /// Normalized return `(1 - gamma) * rho^T v_pi`; equal to `r^T theta_{pi,rho}`.
    pub fn return_of(&self, policy: &Policy, rho: &[f64]) -> Result<f64> {
        if rho.len() != self.num_states {
            return Err(Error::Invalid("rho has wrong length".into()));
        }
        let profile = self.value_profile(policy)?;
        Ok((1.0 - self.discount) * linalg::dot(rho, &profile.v))
    }

    /// The validity constraint matrix `M` with `M[s'][(s,a)] = 1{s'=s} - gamma
    /// P_{s,a}(s')`; every genuine occupancy from `rho` satisfies
    /// `M theta = (1 - gamma) rho`.
    pub fn build_m(&self) -> Mat {
        let mut m = Mat::zeros(self.num_states, self.num_pairs());
        for s in 0..self.num_states {
            for a in 0..self.num_actions {
                let col = pair_index(s, a, self.num_actions);
                m.add_to(s, col, 1.0);
                for (s_next, &t) in self.transition_row(s, a).iter().enumerate() {
                    m.add_to(s_next, col, -self.discount * t);
                }
            }
        }
        m
    }

    /// Optimal values, active sets and the action gap, via value iteration to
    /// sup-norm residual `tol`. Actions within `tau_act` of the per-state
    /// maximum count as active.
    pub fn optimal_profile(&self, tol: f64, tau_act: f64) -> Result<OptimalityProfile> {
        if tol <= 0.0 || tau_act <= 0.0 {
            return Err(Error::Invalid("tol and tau_act must be positive".into()));
        }
        const MAX_ITERS: usize = 1_000_000;
        let n = self.num_states;
        let mut v = vec![0.0; n];
        let mut residual = f64::INFINITY;
        for _ in 0..MAX_ITERS {
            let next = self.bellman_backup(&v);
            residual = v
                .iter()
                .zip(&next)
                .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
            v = next;
            if residual <= tol {
                break;
            }
        }
        if residual > tol {
            return Err(Error::NoConvergence { residual });
        }
        // One more backup to measure the Bellman residual of the returned v.
        let check = self.bellman_backup(&v);
        let value_iter_residual = v
            .iter()
            .zip(&check)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()));
        let mut q_star = self.transition.matvec(&v);
        for (qi, &ri) in q_star.iter_mut().zip(&self.reward) {
            *qi = ri + self.discount * *qi;
        }
        let v_star: Vec<f64> = (0..n)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| q_star[pair_index(s, a, self.num_actions)])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let mut argmax_sets = Vec::with_capacity(n);
        let mut inactive_pairs = Vec::new();
        let mut gap = f64::INFINITY;
        for s in 0..n {
            let mut active = Vec::new();
            for a in 0..self.num_actions {
                let deficit = v_star[s] - q_star[pair_index(s, a, self.num_actions)];
                if deficit <= tau_act {
                    active.push(a);
                } else {
                    inactive_pairs.push((s, a));
                    gap = gap.min(deficit);
                }
            }
            argmax_sets.push(active);
        }
        Ok(OptimalityProfile {
            v_star,
            q_star,
            argmax_sets,
            inactive_pairs,
            gap,
            value_iter_residual,
            tau_act,
            num_actions: self.num_actions,
        })
    }

    fn bellman_backup(&self, v: &[f64]) -> Vec<f64> {
        (0..self.num_states)
            .map(|s| {
                (0..self.num_actions)
                    .map(|a| {
                        let idx = pair_index(s, a, self.num_actions);
                        self.reward[idx] + self.discount * linalg::dot(self.transition.row(idx), v)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.num_states() != self.num_states || policy.num_actions() != self.num_actions {
            return Err(Error::Invalid("policy shape does not match MDP".into()));
        }
        Ok(())
    }
}

/// Row-stochastic decision rule.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Policy {
    probs: Mat,
}

impl From<Policy> for Vec<Vec<f64>> {
    fn from(p: Policy) -> Self {
        (0..p.num_states()).map(|s| p.row(s).to_vec()).collect()
    }
}

impl TryFrom<Vec<Vec<f64>>> for Policy {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Policy::new(rows)
    }
}

impl Policy {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.is_empty() || rows[0].is_empty() {
            return Err(Error::Invalid(
                "policy must have at least one state and action".into(),
            ));
        }
        let width = rows[0].len();
        for (s, row) in rows.iter().enumerate() {
            if row.len() != width {
                return Err(Error::Invalid("ragged policy rows".into()));
            }
            check_distribution(row, &format!("policy row {s}"))?;
        }
        Ok(Policy {
            probs: Mat::from_rows(&rows),
        })
    }

    pub fn uniform(num_states: usize, num_actions: usize) -> Self {
        let row = vec![1.0 / num_actions as f64; num_actions];
        Policy {
            probs: Mat::from_rows(&vec![row; num_states]),
        }
    }

    /// Point-mass policy taking `actions[s]` at state `s`.
    pub fn deterministic(actions: &[usize], num_actions: usize) -> Self {
        let rows: Vec<Vec<f64>> = actions
            .iter()
            .map(|&a| {
                assert!(a < num_actions, "action index out of range");
                let mut row = vec![0.0; num_actions];
                row[a] = 1.0;
                row
            })
            .collect();
        Policy {
            probs: Mat::from_rows(&rows),
        }
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.probs.rows()
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.probs.cols()
    }

    #[inline]
    pub fn prob(&self, state: usize, action: usize) -> f64 {
        self.probs.get(state, action)
    }

    #[inline]
    pub fn row(&self, state: usize) -> &[f64] {
        self.probs.row(state)
    }
}

/// Nonnegative state-action vector in the canonical pair ordering. Instances
/// produced by [`TabularMdp::occupancy_measure`] have total mass one.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupancyMeasure {
    values: Vec<f64>,
    num_actions: usize,
}

impl OccupancyMeasure {
    pub fn from_values(values: Vec<f64>, num_actions: usize) -> Result<Self> {
        if num_actions == 0 || values.len() % num_actions != 0 {
            return Err(Error::Invalid(
                "occupancy length not divisible by action count".into(),
            ));
        }
        if values.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::Invalid(
                "occupancy entries must be finite and nonnegative".into(),
            ));
        }
        Ok(OccupancyMeasure {
            values,
            num_actions,
        })
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.values.len() / self.num_actions
    }

    #[inline]
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[pair_index(state, action, self.num_actions)]
    }

    /// Per-state mass `theta_bar(s) = sum_a theta(s, a)`.
    pub fn state_marginal(&self) -> Vec<f64> {
        self.values
            .chunks(self.num_actions)
            .map(|row| row.iter().sum())
            .collect()
    }

    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Evaluation of one policy: `v` over states, `q` over pairs.
#[derive(Clone, Debug)]
pub struct ValueProfile {
    pub v: Vec<f64>,
    pub q: Vec<f64>,
}

/// Optimal values plus the active-set geometry used by the gap-dependent
/// analysis: per-state optimal action sets, the inactive pairs, and the
/// minimal optimality deficit over inactive pairs (`+inf` when every pair is
/// active, in which case gap-dependent bounds are skipped).
#[derive(Clone, Debug)]
pub struct OptimalityProfile {
    pub v_star: Vec<f64>,
    pub q_star: Vec<f64>,
    /// For each state, the actions whose Q-value is within `tau_act` of v*.
    pub argmax_sets: Vec<Vec<usize>>,
    pub inactive_pairs: Vec<(usize, usize)>,
    /// `min over inactive pairs of v*(s) - Q*(s,a)`; `+inf` if none.
    pub gap: f64,
    pub value_iter_residual: f64,
    pub tau_act: f64,
    num_actions: usize,
}

impl OptimalityProfile {
    /// Lowest-index optimal action per state: the canonical deterministic
    /// optimal policy.
    pub fn greedy_policy(&self) -> Policy {
        let actions: Vec<usize> = self.argmax_sets.iter().map(|set| set[0]).collect();
        Policy::deterministic(&actions, self.num_actions)
    }

    /// `(1 - gamma) * rho^T v*`, the optimal return from `rho`.
    pub fn optimal_return(&self, gamma: f64, rho: &[f64]) -> f64 {
        (1.0 - gamma) * linalg::dot(rho, &self.v_star)
    }

    pub fn is_inactive(&self, state: usize, action: usize) -> bool {
        self.v_star[state] - self.q_star[pair_index(state, action, self.num_actions)] > self.tau_act
    }
}

/// Normalizes `theta` row-wise into a policy; states with zero mass fall back
/// to the uniform distribution.
pub fn policy_from_theta(theta: &OccupancyMeasure) -> Policy {
    let num_actions = theta.num_actions();
    let rows: Vec<Vec<f64>> = theta
        .values()
        .chunks(num_actions)
        .map(|row| {
            let mass: f64 = row.iter().sum();
            if mass > 0.0 {
                row.iter().map(|&x| x / mass).collect()
            } else {
                vec![1.0 / num_actions as f64; num_actions]
            }
        })
        .collect();
    Policy::new(rows).expect("normalized rows are stochastic")
}

/// Smallest `C` with `theta(s,a) <= C * mu(s,a)` everywhere, under the
/// `0/0 = 0` convention; `+inf` when `theta` has mass outside the support of
/// `mu`.
pub fn concentrability(theta: &OccupancyMeasure, mu: &[f64]) -> f64 {
    assert_eq!(
        theta.values().len(),
        mu.len(),
        "concentrability: length mismatch"
    );
    let mut worst = 0.0_f64;
    for (&t, &m) in theta.values().iter().zip(mu) {
        if m > 0.0 {
            worst = worst.max(t / m);
        } else if t > 0.0 {
            return f64::INFINITY;
        }
    }
    worst
}


#[cfg(test)]
mod tests {
    use super::test_support::*;
    use super::*;
    use crate::rng::SplitMix64;

    #[test]
    fn occupancy_with_zero_discount_is_initial_times_policy() {
        let mut rng = SplitMix64::new(1);
        let mdp = random_mdp(&mut rng, 4, 3, 0.0);
        let policy = random_policy(&mut rng, 4, 3);
        let rho = rng.simplex(4);
        let theta = mdp.occupancy_measure(&policy, &rho).unwrap();
        for s in 0..4 {
            for a in 0..3 {
                assert!((theta.get(s, a) - rho[s] * policy.prob(s, a)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn occupancy_single_state_single_action() {
        for gamma in [0.0, 0.3, 0.9, 0.99] {
            let mdp = TabularMdp::new(1, 1, vec![vec![1.0]], vec![0.5], gamma, vec![1.0]).unwrap();
            let theta = mdp
                .occupancy_measure(&Policy::uniform(1, 1), &[1.0])
                .unwrap();
            assert!((theta.values()[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn occupancy_two_state_chain_geometric() {
        let mdp = two_state_chain(0.5);
        let theta = mdp
            .occupancy_measure(&Policy::uniform(2, 1), &[1.0, 0.0])
            .unwrap();
        let bar = theta.state_marginal();
        assert!((bar[0] - 0.5).abs() < 1e-12);
        assert!((bar[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn occupancy_is_valid_and_round_trips_policy() {
        let mut rng = SplitMix64::new(2);
        for _ in 0..25 {
            let mdp = random_mdp(&mut rng, 5, 3, 0.9);
            let policy = random_policy(&mut rng, 5, 3);
            let rho = rng.simplex(5);
            let theta = mdp.occupancy_measure(&policy, &rho).unwrap();
            assert!((theta.total_mass() - 1.0).abs() < VALIDITY_TOL);
            let residual = mdp.validity_residual(&theta, &rho);
            assert!(crate::linalg::linf_norm(&residual) <= VALIDITY_TOL);
            let recovered = policy_from_theta(&theta);
            let bar = theta.state_marginal();
            for s in 0..5 {
                if bar[s] > 0.0 {
                    for a in 0..3 {
                        assert!((recovered.prob(s, a) - policy.prob(s, a)).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn value_profile_zero_discount_equals_reward() {
        let mut rng = SplitMix64::new(3);
        let mdp = random_mdp(&mut rng, 3, 2, 0.0);
        let policy = random_policy(&mut rng, 3, 2);
        let profile = mdp.value_profile(&policy).unwrap();
        for (q, r) in profile.q.iter().zip(mdp.reward()) {
            assert!((q - r).abs() < 1e-15);
        }
    }

    #[test]
    fn value_single_state_geometric_sum() {
        let mdp = TabularMdp::new(1, 1, vec![vec![1.0]], vec![1.0], 0.75, vec![1.0]).unwrap();
        let profile = mdp.value_profile(&Policy::uniform(1, 1)).unwrap();
        assert!((profile.v[0] - 4.0).abs() < 1e-10);
    }

    #[test]
    fn value_two_state_chain_hand_solve() {
        let mdp = two_state_chain(0.5);
        let policy = Policy::uniform(2, 1);
        let profile = mdp.value_profile(&policy).unwrap();
        assert!((profile.v[1] - 2.0).abs() < 1e-12);
        assert!((profile.v[0] - 1.0).abs() < 1e-12);
        let j = mdp.return_of(&policy, &[1.0, 0.0]).unwrap();
        assert!((j - 0.5).abs() < 1e-12);
    }

    #[test]
    fn value_profile_is_consistent_and_in_range() {
        let mut rng = SplitMix64::new(14);
        for _ in 0..10 {
            let mdp = random_mdp(&mut rng, 4, 3, 0.9);
            let policy = random_policy(&mut rng, 4, 3);
            let profile = mdp.value_profile(&policy).unwrap();
            let cap = 1.0 / (1.0 - mdp.discount());
            for s in 0..4 {
                let mixed: f64 = (0..3)
                    .map(|a| policy.prob(s, a) * profile.q[pair_index(s, a, 3)])
                    .sum();
                assert!((profile.v[s] - mixed).abs() <= 1e-9);
                assert!(profile.v[s] >= -1e-9 && profile.v[s] <= cap + 1e-9);
            }
            for &q in &profile.q {
                assert!(q >= -1e-9 && q <= cap + 1e-9);
            }
        }
    }

    #[test]
    fn active_and_inactive_pairs_partition() {
        let mut rng = SplitMix64::new(15);
        let mdp = random_mdp(&mut rng, 4, 3, 0.85);
        let profile = mdp.optimal_profile(1e-12, 1e-8).unwrap();
        let active: usize = profile.argmax_sets.iter().map(|s| s.len()).sum();
        assert_eq!(active + profile.inactive_pairs.len(), mdp.num_pairs());
        assert!(profile.argmax_sets.iter().all(|s| !s.is_empty()));
        if !profile.inactive_pairs.is_empty() {
            assert!(profile.gap > 0.0);
        }
        assert!(profile.value_iter_residual <= 1e-12);
    }

    #[test]
    fn return_identity_against_occupancy() {
        let mut rng = SplitMix64::new(4);
        for _ in 0..25 {
            let mdp = random_mdp(&mut rng, 4, 2, 0.85);
            let policy = random_policy(&mut rng, 4, 2);
            let rho = rng.simplex(4);
            let j = mdp.return_of(&policy, &rho).unwrap();
            let theta = mdp.occupancy_measure(&policy, &rho).unwrap();
            let j_theta = crate::linalg::dot(mdp.reward(), theta.values());
            assert!((j - j_theta).abs() <= 1e-9);
        }
    }

    #[test]
    fn return_is_one_for_unit_rewards() {
        let mut rng = SplitMix64::new(5);
        let m = 3 * 2;
        let transition: Vec<Vec<f64>> = (0..m).map(|_| rng.simplex(3)).collect();
        let mdp = TabularMdp::new(3, 2, transition, vec![1.0; m], 0.7, rng.simplex(3)).unwrap();
        let policy = random_policy(&mut rng, 3, 2);
        let rho = rng.simplex(3);
        assert!((mdp.return_of(&policy, &rho).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn build_m_zero_discount_is_state_marginal_operator() {
        let mut rng = SplitMix64::new(6);
        let mdp = random_mdp(&mut rng, 3, 2, 0.0);
        let m = mdp.build_m();
        let theta: Vec<f64> = (0..6).map(|_| rng.next_f64()).collect();
        let out = m.matvec(&theta);
        for s in 0..3 {
            let marginal: f64 = (0..2).map(|a| theta[pair_index(s, a, 2)]).sum();
            assert!((out[s] - marginal).abs() < 1e-15);
        }
    }

    #[test]
    fn build_m_single_state() {
        let mdp = TabularMdp::new(
            1,
            3,
            vec![vec![1.0]; 3],
            vec![0.1, 0.2, 0.3],
            0.6,
            vec![1.0],
        )
        .unwrap();
        let m = mdp.build_m();
        for col in 0..3 {
            assert!((m.get(0, col) - 0.4).abs() < 1e-15);
        }
    }

    #[test]
    fn build_m_agrees_with_occupancy_oracle() {
        let mut rng = SplitMix64::new(7);
        let mdp = random_mdp(&mut rng, 3, 2, 0.9);
        let m = mdp.build_m();
        for _ in 0..10 {
            let policy = random_policy(&mut rng, 3, 2);
            let rho = rng.simplex(3);
            let theta = mdp.occupancy_measure(&policy, &rho).unwrap();
            let out = m.matvec(theta.values());
            for s in 0..3 {
                assert!((out[s] - 0.1 * rho[s]).abs() <= VALIDITY_TOL);
            }
        }
    }

    #[test]
    fn optimal_profile_bandit() {
        let mdp =
            TabularMdp::new(1, 2, vec![vec![1.0]; 2], vec![1.0, 0.4], 0.0, vec![1.0]).unwrap();
        let profile = mdp.optimal_profile(1e-12, 1e-8).unwrap();
        assert_eq!(profile.argmax_sets[0], vec![0]);
        assert_eq!(profile.inactive_pairs, vec![(0, 1)]);
        assert!((profile.gap - 0.6).abs() < 1e-12);
    }

    #[test]
    fn optimal_profile_degenerate_all_active() {
        let mut rng = SplitMix64::new(8);
        let m = 3 * 2;
        let transition: Vec<Vec<f64>> = (0..m).map(|_| rng.simplex(3)).collect();
        let mdp = TabularMdp::new(3, 2, transition, vec![0.5; m], 0.8, rng.simplex(3)).unwrap();
        let profile = mdp.optimal_profile(1e-12, 1e-8).unwrap();
        assert!(profile.inactive_pairs.is_empty());
        assert!(profile.gap.is_infinite());
    }

    #[test]
    fn optimal_profile_matches_policy_enumeration() {
        let mut rng = SplitMix64::new(9);
        let mdp = random_mdp(&mut rng, 5, 3, 0.9);
        let profile = mdp.optimal_profile(1e-12, 1e-8).unwrap();
        // Brute force over all 3^5 deterministic policies.
        let mut best_v = [f64::NEG_INFINITY; 5];
        for code in 0..3usize.pow(5) {
            let mut c = code;
            let actions: Vec<usize> = (0..5)
                .map(|_| {
                    let a = c % 3;
                    c /= 3;
                    a
                })
                .collect();
            let policy = Policy::deterministic(&actions, 3);
            let value = mdp.value_profile(&policy).unwrap();
            for s in 0..5 {
                best_v[s] = best_v[s].max(value.v[s]);
            }
        }
        for s in 0..5 {
            assert!((profile.v_star[s] - best_v[s]).abs() < 1e-6);
        }
    }

    #[test]
    fn policy_from_theta_examples() {
        let theta = OccupancyMeasure::from_values(vec![0.2, 0.2, 0.0, 0.0, 0.3, 0.1], 2).unwrap();
        let policy = policy_from_theta(&theta);
        let expected = [[0.5, 0.5], [0.5, 0.5], [0.75, 0.25]]; // zero row -> uniform
        for s in 0..3 {
            for a in 0..2 {
                assert!((policy.prob(s, a) - expected[s][a]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn concentrability_examples() {
        let mu = vec![0.25, 0.25, 0.5, 0.0];
        let same = OccupancyMeasure::from_values(mu.clone(), 2).unwrap();
        assert_eq!(concentrability(&same, &mu), 1.0);

        let doubled = OccupancyMeasure::from_values(vec![0.5, 0.5, 1.0, 0.0], 2).unwrap();
        assert_eq!(concentrability(&doubled, &mu), 2.0);

        let uncovered = OccupancyMeasure::from_values(vec![0.0, 0.0, 0.5, 0.5], 2).unwrap();
        assert!(concentrability(&uncovered, &mu).is_infinite());
    }

    #[test]
    fn state_mass_dominates_initial_mass() {
        // theta_bar(s) >= (1 - gamma) rho(s) for every policy and rho.
        let mut rng = SplitMix64::new(10);
        for _ in 0..20 {
            let mdp = random_mdp(&mut rng, 4, 3, 0.9);
            let policy = random_policy(&mut rng, 4, 3);
            let rho = rng.simplex(4);
            let theta = mdp.occupancy_measure(&policy, &rho).unwrap();
            for (s, &bar) in theta.state_marginal().iter().enumerate() {
                assert!(bar >= 0.1 * rho[s] - 1e-9);
            }
        }
    }

    #[test]
    fn error_bound_for_invalid_theta() {
        // |r^T (theta - theta_{pi_theta})| <= ||M theta - (1-gamma) mu0||_1 / (1-gamma)
        // for arbitrary nonnegative theta.
        let mut rng = SplitMix64::new(11);
        for _ in 0..30 {
            let mdp = random_mdp(&mut rng, 4, 2, 0.8);
            let raw: Vec<f64> = (0..8).map(|_| rng.next_f64() * 0.4).collect();
            let theta = OccupancyMeasure::from_values(raw, 2).unwrap();
            let pi_theta = policy_from_theta(&theta);
            let realized = mdp
                .occupancy_measure(&pi_theta, mdp.initial_dist())
                .unwrap();
            let lhs = (crate::linalg::dot(mdp.reward(), theta.values())
                - crate::linalg::dot(mdp.reward(), realized.values()))
            .abs();
            let residual = mdp.validity_residual(&theta, mdp.initial_dist());
            let rhs = crate::linalg::l1_norm(&residual) / (1.0 - mdp.discount());
            assert!(lhs <= rhs + 1e-9, "lhs {lhs} rhs {rhs}");
        }
    }

    #[test]
    fn inactive_pairs_carry_no_optimal_occupancy() {
        // Enumerated optimal deterministic policies put zero mass on inactive
        // pairs; conversely, policies supported on active pairs are optimal.
        let mut rng = SplitMix64::new(12);
        let mdp = random_mdp(&mut rng, 3, 2, 0.85);
        let profile = mdp.optimal_profile(1e-12, 1e-8).unwrap();
        let mu0 = mdp.initial_dist().to_vec();
        let j_star = profile.optimal_return(mdp.discount(), &mu0);
        for code in 0..4usize {
            let actions = vec![code & 1, (code >> 1) & 1, 0];
            let policy = Policy::deterministic(&actions, 2);
            let j = mdp.return_of(&policy, &mu0).unwrap();
            let theta = mdp.occupancy_measure(&policy, &mu0).unwrap();
            if (j - j_star).abs() <= 1e-9 {
                for &(s, a) in &profile.inactive_pairs {
                    assert!(theta.get(s, a) <= 1e-9);
                }
            }
        }
        // Any policy supported inside the active sets evaluates optimally.
        let mut rows = Vec::new();
        for s in 0..3 {
            let active = &profile.argmax_sets[s];
            let mut row = vec![0.0; 2];
            let weights = rng.simplex(active.len());
            for (k, &a) in active.iter().enumerate() {
                row[a] = weights[k];
            }
            rows.push(row);
        }
        let active_policy = Policy::new(rows).unwrap();
        let j = mdp.return_of(&active_policy, &mu0).unwrap();
        assert!((j - j_star).abs() <= 1e-8);
    }

    #[test]
    fn mdp_json_round_trip() {
        let mut rng = SplitMix64::new(13);
        let mdp = random_mdp(&mut rng, 3, 2, 0.9);
        let text = mdp.to_json();
        let back = TabularMdp::from_json(&text).unwrap();
        assert_eq!(mdp, back);
        // Deterministic: serializing again yields identical bytes.
        assert_eq!(text, back.to_json());
    }

    #[test]
    fn constructor_rejects_bad_inputs() {
        assert!(TabularMdp::new(1, 1, vec![vec![0.9]], vec![0.5], 0.5, vec![1.0]).is_err());
        assert!(TabularMdp::new(1, 1, vec![vec![1.0]], vec![1.5], 0.5, vec![1.0]).is_err());
        assert!(TabularMdp::new(1, 1, vec![vec![1.0]], vec![0.5], 1.0, vec![1.0]).is_err());
        assert!(TabularMdp::new(1, 1, vec![vec![1.0]], vec![0.5], 0.5, vec![0.9]).is_err());
        assert!(Policy::new(vec![vec![0.5, 0.6]]).is_err());
    }
}
