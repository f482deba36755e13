//! Offline data pipeline: the data distribution `mu` over state-action pairs,
//! its induced behavior policy, i.i.d. dataset sampling, and the plug-in
//! estimates (`mu_D`, `u_D`, `K_D`, `nu_D`) consumed by both solvers.
//!
//! [`population_model`] yields the infinite-data limit of the same estimates,
//! used for exactness tests and population-level diagnostics.

use crate::linalg::Mat;
use crate::mdp::{Policy, TabularMdp, DIST_TOL};
use crate::rng::{Cdf, SplitMix64};
use crate::{pair_index, Error, Result};

/// Distribution `mu` over state-action pairs, with its state marginal and the
/// conditional (behavior) policy `pi_mu(a|s) = mu(s,a)/mu(s)`, uniform at
/// states with zero marginal.
#[derive(Clone, Debug)]
pub struct DataDistribution {
    mu: Vec<f64>,
    num_actions: usize,
    state_marginal: Vec<f64>,
    behavior: Policy,
}

impl DataDistribution {
    pub fn new(mu: Vec<f64>, num_states: usize, num_actions: usize) -> Result<Self> {
        if mu.len() != num_states * num_actions {
            return Err(Error::Invalid("mu has wrong length".into()));
        }
        let mut sum = 0.0;
        for &x in &mu {
            if !x.is_finite() || x < 0.0 {
                return Err(Error::Invalid("mu entries must be nonnegative".into()));
            }
            sum += x;
        }
        if (sum - 1.0).abs() > DIST_TOL {
            return Err(Error::Invalid(format!("mu sums to {sum}, expected 1")));
        }
        let state_marginal: Vec<f64> = mu.chunks(num_actions).map(|row| row.iter().sum()).collect();
        let rows: Vec<Vec<f64>> = (0..num_states)
            .map(|s| {
                let mass = state_marginal[s];
                if mass > 0.0 {
                    (0..num_actions)
                        .map(|a| mu[pair_index(s, a, num_actions)] / mass)
                        .collect()
                } else {
                    vec![1.0 / num_actions as f64; num_actions]
                }
            })
            .collect();
        let behavior = Policy::new(rows)?;
        Ok(DataDistribution {
            mu,
            num_actions,
            state_marginal,
            behavior,
        })
    }

    #[inline]
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.state_marginal.len()
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    /// `mu(s) = sum_a mu(s, a)`.
    #[inline]
    pub fn state_marginal(&self) -> &[f64] {
        &self.state_marginal
    }

    /// The behavior policy `pi_mu`.
    #[inline]
    pub fn behavior(&self) -> &Policy {
        &self.behavior
    }

    /// States with positive marginal mass (the support `S_0`).
    pub fn supported_states(&self) -> Vec<usize> {
        self.state_marginal
            .iter()
            .enumerate()
            .filter(|(_, &m)| m > 0.0)
            .map(|(s, _)| s)
            .collect()
    }
}

/// The conditional action distribution induced by `dist`.
pub fn behavior_policy(dist: &DataDistribution) -> Policy {
    dist.behavior().clone()
}

/// Importance weight `w` of a target occupancy against a data distribution:
/// `w(s,a) * mu(s,a) = theta(s,a)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityRatio {
    values: Vec<f64>,
    num_actions: usize,
}

impl DensityRatio {
    pub fn new(values: Vec<f64>, num_actions: usize) -> Result<Self> {
        if num_actions == 0 || values.len() % num_actions != 0 {
            return Err(Error::Invalid(
                "ratio length not divisible by action count".into(),
            ));
        }
        if values.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(Error::Invalid(
                "ratio entries must be finite and nonnegative".into(),
            ));
        }
        Ok(DensityRatio {
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
    pub fn get(&self, state: usize, action: usize) -> f64 {
        self.values[pair_index(state, action, self.num_actions)]
    }

    /// `sum_a w(s, a)` per state.
    pub fn per_state_sums(&self) -> Vec<f64> {
        self.values
            .chunks(self.num_actions)
            .map(|row| row.iter().sum())
            .collect()
    }

    /// The occupancy `theta = w * mu` this ratio encodes against `mu`.
    pub fn occupancy_against(&self, mu: &[f64]) -> crate::mdp::OccupancyMeasure {
        assert_eq!(mu.len(), self.values.len(), "ratio/mu length mismatch");
        let theta: Vec<f64> = self.values.iter().zip(mu).map(|(w, m)| w * m).collect();
        crate::mdp::OccupancyMeasure::from_values(theta, self.num_actions)
            .expect("product of nonnegative vectors is nonnegative")
    }
}

/// One logged interaction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Transition {
    pub state: usize,
    pub action: usize,
    pub next_state: usize,
}

/// An i.i.d. offline dataset of `(s, a, s', r)` tuples together with the seed
/// that produced it. Rewards are recovered from the generating MDP's reward
/// table, so they are not stored per tuple.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    tuples: Vec<Transition>,
    rewards: Vec<f64>,
    seed: u64,
}

impl Dataset {
    #[inline]
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn tuples(&self) -> &[Transition] {
        &self.tuples
    }

    #[inline]
    pub fn reward(&self, i: usize) -> f64 {
        self.rewards[i]
    }

    /// CSV serialization with the mandatory `s,a,s_next,r` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,a,s_next,r\n");
        for (t, &r) in self.tuples.iter().zip(&self.rewards) {
            out.push_str(&format!(
                "{},{},{},{}\n",
                t.state, t.action, t.next_state, r
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(header) if header.trim() == "s,a,s_next,r" => {}
            _ => {
                return Err(Error::Invalid(
                    "dataset CSV must start with 's,a,s_next,r'".into(),
                ))
            }
        }
        let mut tuples = Vec::new();
        let mut rewards = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(Error::Invalid(format!(
                    "dataset CSV line {}: expected 4 fields",
                    i + 2
                )));
            }
            let parse_usize = |f: &str| {
                f.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::Invalid(format!("dataset CSV line {}: {e}", i + 2)))
            };
            tuples.push(Transition {
                state: parse_usize(fields[0])?,
                action: parse_usize(fields[1])?,
                next_state: parse_usize(fields[2])?,
            });
            rewards.push(
                fields[3]
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Invalid(format!("dataset CSV line {}: {e}", i + 2)))?,
            );
        }
        Ok(Dataset {
            tuples,
            rewards,
            seed: 0,
        })
    }
}

/// Draws `n` i.i.d. tuples: `(s, a) ~ mu`, `s' ~ P_{s,a}`, `r = r(s, a)`.
/// Deterministic given `seed`.
pub fn sample_dataset(
    mdp: &TabularMdp,
    dist: &DataDistribution,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Invalid("dataset size must be at least 1".into()));
    }
    if dist.num_states() != mdp.num_states() || dist.num_actions() != mdp.num_actions() {
        return Err(Error::Invalid(
            "data distribution shape does not match MDP".into(),
        ));
    }
    let mut rng = SplitMix64::new(seed);
    let pair_cdf = Cdf::new(dist.mu());
    let num_actions = mdp.num_actions();
    let row_cdfs: Vec<Cdf> = (0..mdp.num_pairs())
        .map(|i| Cdf::new(mdp.transition_row(i / num_actions, i % num_actions)))
        .collect();
    let mut tuples = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for _ in 0..n {
        let pair = pair_cdf.sample(&mut rng);
        let state = pair / num_actions;
        let action = pair % num_actions;
        let next_state = row_cdfs[pair].sample(&mut rng);
        tuples.push(Transition {
            state,
            action,
            next_state,
        });
        rewards.push(mdp.reward()[pair]);
    }
    Ok(Dataset {
        tuples,
        rewards,
        seed,
    })
}

/// Plug-in estimates of the scaled-LP data: `mu_D`, `u_D = r * mu_D`, the
/// transition-difference matrix `K_D`, and the joint empirical distribution
/// `nu_D` over `(s, a, s')`.
///
/// `K_D` has one column per pair: `+mu_D(s,a)` at row `s` and `-gamma *
/// nu_D(s,a,s')` spread over rows `s'` (entries combine additively on
/// self-loops), so each column sums to `(1 - gamma) * mu_D(s,a)`.
#[derive(Clone, Debug)]
pub struct EmpiricalModel {
    mu_d: Vec<f64>,
    u_d: Vec<f64>,
    k_d: Mat,
    nu_d: Mat,
    mu_d_state: Vec<f64>,
    gamma: f64,
    num_actions: usize,
}

impl EmpiricalModel {
    #[inline]
    pub fn mu_d(&self) -> &[f64] {
        &self.mu_d
    }

    #[inline]
    pub fn u_d(&self) -> &[f64] {
        &self.u_d
    }

    /// `|S| x |S||A|` matrix; see the type-level docs for the column layout.
    #[inline]
    pub fn k_d(&self) -> &Mat {
        &self.k_d
    }

    /// `|S||A| x |S|` matrix with `nu_d.get(pair, s_next) = nu_D(s, a, s')`.
    #[inline]
    pub fn nu_d(&self) -> &Mat {
        &self.nu_d
    }

    #[inline]
    pub fn mu_d_state(&self) -> &[f64] {
        &self.mu_d_state
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    #[inline]
    pub fn num_states(&self) -> usize {
        self.mu_d_state.len()
    }

    #[inline]
    pub fn num_actions(&self) -> usize {
        self.num_actions
    }
}

fn model_from_nu(nu: Mat, reward: &[f64], gamma: f64, num_actions: usize) -> EmpiricalModel {
    let num_pairs = nu.rows();
    let num_states = nu.cols();
    let mut mu_d = vec![0.0; num_pairs];
    let mut k_d = Mat::zeros(num_states, num_pairs);
    for pair in 0..num_pairs {
        let s = pair / num_actions;
        for (s_next, &w) in nu.row(pair).iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            mu_d[pair] += w;
            k_d.add_to(s, pair, w);
            k_d.add_to(s_next, pair, -gamma * w);
        }
    }
    let u_d: Vec<f64> = reward.iter().zip(&mu_d).map(|(&r, &m)| r * m).collect();
    let mu_d_state: Vec<f64> = mu_d
        .chunks(num_actions)
        .map(|row| row.iter().sum())
        .collect();
    EmpiricalModel {
        mu_d,
        u_d,
        k_d,
        nu_d: nu,
        mu_d_state,
        gamma,
        num_actions,
    }
}

/// Empirical model of a dataset. `reward` is the known deterministic reward
/// table (equal to the logged `r_i` at observed pairs).
pub fn empirical_model(
    dataset: &Dataset,
    reward: &[f64],
    gamma: f64,
    num_states: usize,
    num_actions: usize,
) -> Result<EmpiricalModel> {
    if dataset.is_empty() {
        return Err(Error::Invalid("empirical model of an empty dataset".into()));
    }
    if reward.len() != num_states * num_actions {
        return Err(Error::Invalid("reward table has wrong length".into()));
    }
    let n = dataset.len() as f64;
    let mut nu = Mat::zeros(num_states * num_actions, num_states);
    for t in dataset.tuples() {
        if t.state >= num_states || t.action >= num_actions || t.next_state >= num_states {
            return Err(Error::Invalid("dataset tuple out of range".into()));
        }
        nu.add_to(
            pair_index(t.state, t.action, num_actions),
            t.next_state,
            1.0 / n,
        );
    }
    Ok(model_from_nu(nu, reward, gamma, num_actions))
}

/// The infinite-data limit: exact `mu`, `u`, `K` built from
/// `nu(s,a,s') = P_{s,a}(s') mu(s,a)`.
pub fn population_model(mdp: &TabularMdp, dist: &DataDistribution) -> Result<EmpiricalModel> {
    if dist.num_states() != mdp.num_states() || dist.num_actions() != mdp.num_actions() {
        return Err(Error::Invalid(
            "data distribution shape does not match MDP".into(),
        ));
    }
    let num_actions = mdp.num_actions();
    let mut nu = Mat::zeros(mdp.num_pairs(), mdp.num_states());
    for pair in 0..mdp.num_pairs() {
        let w = dist.mu()[pair];
        if w == 0.0 {
            continue;
        }
        for (s_next, &t) in mdp
            .transition_row(pair / num_actions, pair % num_actions)
            .iter()
            .enumerate()
        {
            nu.set(pair, s_next, t * w);
        }
    }
    Ok(model_from_nu(nu, mdp.reward(), mdp.discount(), num_actions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dot, linf_norm};
    use crate::mdp::test_support::random_mdp;
    use crate::rng::SplitMix64;

    fn random_dist(
        rng: &mut SplitMix64,
        num_states: usize,
        num_actions: usize,
    ) -> DataDistribution {
        let mu = rng.simplex(num_states * num_actions);
        DataDistribution::new(mu, num_states, num_actions).unwrap()
    }

    #[test]
    fn behavior_policy_examples() {
        // Uniform mu gives the uniform behavior policy.
        let uniform = DataDistribution::new(vec![0.25; 4], 2, 2).unwrap();
        for s in 0..2 {
            assert_eq!(behavior_policy(&uniform).row(s), &[0.5, 0.5]);
        }
        // A 1:3 split within one state's block normalizes to (0.25, 0.75).
        let skewed = DataDistribution::new(vec![0.1, 0.3, 0.3, 0.3], 2, 2).unwrap();
        assert!((skewed.behavior().prob(0, 0) - 0.25).abs() < 1e-12);
        assert!((skewed.behavior().prob(0, 1) - 0.75).abs() < 1e-12);
        // Unvisited state falls back to uniform.
        let degenerate = DataDistribution::new(vec![0.5, 0.5, 0.0, 0.0], 2, 2).unwrap();
        assert_eq!(degenerate.behavior().row(1), &[0.5, 0.5]);
        assert_eq!(degenerate.supported_states(), vec![0]);
    }

    #[test]
    fn sampling_is_deterministic_and_point_mass_collapses() {
        let mdp = TabularMdp::new(
            2,
            2,
            vec![
                vec![0.0, 1.0],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 1.0],
            ],
            vec![0.1, 0.2, 0.3, 0.4],
            0.5,
            vec![1.0, 0.0],
        )
        .unwrap();
        let point = DataDistribution::new(vec![1.0, 0.0, 0.0, 0.0], 2, 2).unwrap();
        let data = sample_dataset(&mdp, &point, 50, 7).unwrap();
        for (i, t) in data.tuples().iter().enumerate() {
            assert_eq!(
                *t,
                Transition {
                    state: 0,
                    action: 0,
                    next_state: 1
                }
            );
            assert_eq!(data.reward(i), 0.1);
        }
        let again = sample_dataset(&mdp, &point, 50, 7).unwrap();
        assert_eq!(data.to_csv(), again.to_csv());
        assert!(sample_dataset(&mdp, &point, 0, 7).is_err());
    }

    #[test]
    fn empirical_mu_concentrates() {
        // sup-norm error below 5/sqrt(n) on at least 95% of seeds.
        let mut rng = SplitMix64::new(21);
        let mdp = random_mdp(&mut rng, 3, 2, 0.9);
        let dist = DataDistribution::new(vec![1.0 / 6.0; 6], 3, 2).unwrap();
        let n = 100_000;
        let mut within = 0;
        for seed in 0..100 {
            let data = sample_dataset(&mdp, &dist, n, seed).unwrap();
            let model = empirical_model(&data, mdp.reward(), 0.9, 3, 2).unwrap();
            let err: Vec<f64> = model
                .mu_d()
                .iter()
                .zip(dist.mu())
                .map(|(a, b)| a - b)
                .collect();
            if linf_norm(&err) <= 5.0 / (n as f64).sqrt() {
                within += 1;
            }
        }
        assert!(within >= 95, "only {within}/100 seeds within tolerance");
    }

    #[test]
    fn single_tuple_k_columns() {
        let mdp = TabularMdp::new(
            2,
            1,
            vec![vec![0.0, 1.0], vec![0.5, 0.5]],
            vec![0.3, 0.6],
            0.4,
            vec![1.0, 0.0],
        )
        .unwrap();
        // One observed tuple (s=0, a=0, s'=1): column has +1 at row 0, -gamma at row 1.
        let data = Dataset {
            tuples: vec![Transition {
                state: 0,
                action: 0,
                next_state: 1,
            }],
            rewards: vec![0.3],
            seed: 0,
        };
        let model = empirical_model(&data, mdp.reward(), 0.4, 2, 1).unwrap();
        assert!((model.k_d().get(0, 0) - 1.0).abs() < 1e-15);
        assert!((model.k_d().get(1, 0) + 0.4).abs() < 1e-15);
        // Self-loop tuple merges +1 and -gamma into a single 1-gamma entry.
        let loop_data = Dataset {
            tuples: vec![Transition {
                state: 1,
                action: 0,
                next_state: 1,
            }],
            rewards: vec![0.6],
            seed: 0,
        };
        let loop_model = empirical_model(&loop_data, mdp.reward(), 0.4, 2, 1).unwrap();
        assert!((loop_model.k_d().get(1, 1) - 0.6).abs() < 1e-15);
        assert_eq!(loop_model.k_d().get(0, 1), 0.0);
    }

    #[test]
    fn enumerated_dataset_matches_population() {
        // A dataset whose empirical nu equals nu exactly reproduces the
        // population model.
        let mdp = TabularMdp::new(
            2,
            2,
            vec![
                vec![0.5, 0.5],
                vec![0.25, 0.75],
                vec![1.0, 0.0],
                vec![0.0, 1.0],
            ],
            vec![0.1, 0.9, 0.5, 0.2],
            0.6,
            vec![0.5, 0.5],
        )
        .unwrap();
        let dist = DataDistribution::new(vec![0.25; 4], 2, 2).unwrap();
        let population = population_model(&mdp, &dist).unwrap();
        // Enumerate nu with denominator 16: each (s,a) appears 4 times with
        // next states in exact proportion.
        let mut tuples = Vec::new();
        let mut rewards = Vec::new();
        let counts = [
            (0, 0, vec![0, 0, 1, 1]),
            (0, 1, vec![0, 1, 1, 1]),
            (1, 0, vec![0, 0, 0, 0]),
            (1, 1, vec![1, 1, 1, 1]),
        ];
        for (s, a, nexts) in counts {
            for s_next in nexts {
                tuples.push(Transition {
                    state: s,
                    action: a,
                    next_state: s_next,
                });
                rewards.push(mdp.reward()[pair_index(s, a, 2)]);
            }
        }
        let data = Dataset {
            tuples,
            rewards,
            seed: 0,
        };
        let model = empirical_model(&data, mdp.reward(), 0.6, 2, 2).unwrap();
        for pair in 0..4 {
            assert!((model.mu_d()[pair] - population.mu_d()[pair]).abs() < 1e-12);
            for s in 0..2 {
                assert!((model.k_d().get(s, pair) - population.k_d().get(s, pair)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k_equals_m_scaled_by_mu_elementwise() {
        let mut rng = SplitMix64::new(22);
        for _ in 0..10 {
            let mdp = random_mdp(&mut rng, 4, 3, 0.9);
            let dist = random_dist(&mut rng, 4, 3);
            let model = population_model(&mdp, &dist).unwrap();
            let m = mdp.build_m();
            for row in 0..4 {
                for col in 0..12 {
                    let expected = m.get(row, col) * dist.mu()[col];
                    assert!((model.k_d().get(row, col) - expected).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn link_identities_hold() {
        // u^T w = r^T theta and K w = M theta for theta = w * mu.
        let mut rng = SplitMix64::new(23);
        for _ in 0..20 {
            let mdp = random_mdp(&mut rng, 4, 2, 0.8);
            let dist = random_dist(&mut rng, 4, 2);
            let model = population_model(&mdp, &dist).unwrap();
            let w: Vec<f64> = (0..8).map(|_| rng.next_f64() * 3.0).collect();
            let theta: Vec<f64> = w.iter().zip(dist.mu()).map(|(a, b)| a * b).collect();
            let lhs = dot(model.u_d(), &w);
            let rhs = dot(mdp.reward(), &theta);
            assert!((lhs - rhs).abs() < 1e-12);
            let kw = model.k_d().matvec(&w);
            let mtheta = mdp.build_m().matvec(&theta);
            for (a, b) in kw.iter().zip(&mtheta) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k_column_sums() {
        let mut rng = SplitMix64::new(24);
        let mdp = random_mdp(&mut rng, 3, 2, 0.7);
        let dist = random_dist(&mut rng, 3, 2);
        let model = population_model(&mdp, &dist).unwrap();
        for pair in 0..6 {
            let col_sum: f64 = (0..3).map(|s| model.k_d().get(s, pair)).sum();
            assert!((col_sum - 0.3 * model.mu_d()[pair]).abs() < 1e-13);
        }
        // gamma = 0 restricts row s to that state's own block.
        let mdp0 = random_mdp(&mut rng, 3, 2, 0.0);
        let model0 = population_model(&mdp0, &dist).unwrap();
        for s in 0..3 {
            for pair in 0..6 {
                let expected = if pair / 2 == s { dist.mu()[pair] } else { 0.0 };
                assert!((model0.k_d().get(s, pair) - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn point_mass_mu_gives_single_column() {
        let mut rng = SplitMix64::new(25);
        let mdp = random_mdp(&mut rng, 3, 2, 0.5);
        let mut mu = vec![0.0; 6];
        mu[3] = 1.0;
        let dist = DataDistribution::new(mu, 3, 2).unwrap();
        let model = population_model(&mdp, &dist).unwrap();
        for pair in 0..6 {
            let col_norm: f64 = (0..3).map(|s| model.k_d().get(s, pair).abs()).sum();
            if pair == 3 {
                assert!(col_norm > 0.0);
            } else {
                assert_eq!(col_norm, 0.0);
            }
        }
    }

    #[test]
    fn dataset_csv_round_trip() {
        let mut rng = SplitMix64::new(26);
        let mdp = random_mdp(&mut rng, 3, 2, 0.9);
        let dist = random_dist(&mut rng, 3, 2);
        let data = sample_dataset(&mdp, &dist, 40, 11).unwrap();
        let text = data.to_csv();
        let back = Dataset::from_csv(&text).unwrap();
        assert_eq!(data.tuples(), back.tuples());
        for i in 0..data.len() {
            assert_eq!(data.reward(i), back.reward(i));
        }
    }
}
