//! Offline reinforcement learning on tabular MDPs through the linear-programming
//! lens.
//!
//! The crate is organized around the dual ("occupancy measure") form of the MDP
//! linear program and its density-ratio rescaling. Two solvers are provided:
//!
//! * [`case1::solve_case1`] maximizes the estimated return of a density ratio
//!   subject to an explicit L1 budget on the occupancy-validity residual.
//! * [`case2::solve_case2`] minimizes the value-box worst case of the
//!   validity Lagrangian, with a per-state lower bound on the ratio so that
//!   policy extraction never degenerates.
//!
//! Everything else supports those two entry points: exact tabular MDP machinery
//! ([`mdp`]), the offline data pipeline ([`data`]), a self-contained dense
//! simplex solver ([`lp`]), coverage/optimality diagnostics ([`diagnostics`]),
//! and an experiment harness ([`harness`]).
//!
//! All numeric work is deterministic: sampling goes through the seeded
//! [`rng::SplitMix64`] generator and the simplex solver pivots by Bland's rule,
//! so identical inputs reproduce identical outputs byte for byte.
//!
//! ```
//! use lporl::case2::{solve_case2, Case2Config};
//! use lporl::data::{empirical_model, sample_dataset};
//! use lporl::harness::{generate_garnet, generate_mu, GarnetSpec};
//!
//! // A random instance with coverage built in, an offline dataset, and one
//! // minimax solve.
//! let mdp = generate_garnet(&GarnetSpec::default());
//! let profile = mdp.optimal_profile(1e-12, 1e-8)?;
//! let dist = generate_mu(&mdp, &profile, 0.5)?;
//! let dataset = sample_dataset(&mdp, &dist, 4000, 7)?;
//! let model = empirical_model(
//!     &dataset,
//!     mdp.reward(),
//!     mdp.discount(),
//!     mdp.num_states(),
//!     mdp.num_actions(),
//! )?;
//! let solution = solve_case2(&model, dist.behavior(), &Case2Config::new(4.0, 0.05)?)?;
//! assert!(solution.delta_emp.abs() < 1e-8);
//! let learned = mdp.return_of(&solution.policy, dist.state_marginal())?;
//! let optimal = profile.optimal_return(mdp.discount(), dist.state_marginal());
//! assert!(optimal - learned < 0.05);
//! # Ok::<(), lporl::Error>(())
//! ```

pub mod case1;
pub mod case2;
pub mod data;
pub mod diagnostics;
pub mod harness;
pub mod linalg;
pub mod lp;
pub mod mdp;
pub mod report;
pub mod rng;

use std::fmt;

/// Crate-wide error type.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An input violated a documented invariant (bad dimensions, non-stochastic
    /// rows, out-of-range scalars, NaN entries, ...).
    Invalid(String),
    /// A dense linear solve hit a (numerically) singular system.
    Singular(String),
    /// Value iteration stopped at the iteration cap; carries the residual it
    /// reached.
    NoConvergence { residual: f64 },
    /// An optimization problem has an empty feasible set.
    Infeasible(String),
    /// An optimization problem is unbounded in the optimization direction.
    Unbounded,
    /// The simplex iteration cap was exceeded (reported distinctly from
    /// infeasibility).
    IterationLimit,
    /// A diagnostic construction could not be carried out (e.g. no covered
    /// optimal action at a supported state).
    Unsupported(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(msg) => write!(f, "invalid input: {msg}"),
            Error::Singular(msg) => write!(f, "singular linear system: {msg}"),
            Error::NoConvergence { residual } => {
                write!(
                    f,
                    "value iteration did not converge (residual {residual:.3e})"
                )
            }
            Error::Infeasible(msg) => write!(f, "infeasible: {msg}"),
            Error::Unbounded => write!(f, "unbounded"),
            Error::IterationLimit => write!(f, "simplex iteration cap exceeded"),
            Error::Unsupported(msg) => write!(f, "unsupported instance: {msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;

/// Flat index of the state-action pair `(s, a)` in the canonical ordering
/// `(s0,a0), (s0,a1), ..., (s1,a0), ...` shared by every vector and matrix in
/// the crate.
#[inline]
pub fn pair_index(state: usize, action: usize, num_actions: usize) -> usize {
    state * num_actions + action
}
