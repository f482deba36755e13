//! Deterministic random numbers.
//!
//! All sampling in the crate flows through [`SplitMix64`], a counter-based
//! generator with a 64-bit seed. It is trivial to port bit for bit, so
//! experiments are reproducible from the seeds recorded in their outputs.

/// SplitMix64 generator (Steele, Lea, Flood's mixing constants).
#[derive(Clone, Debug)]
pub struct SplitMix64 {
    state: u64,
}

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    /// Derives an independent stream seed from `(seed, stream)`; used to give
    /// each dataset/instance in an experiment its own generator.
    pub fn derive(seed: u64, stream: u64) -> u64 {
        let mut rng = SplitMix64::new(seed ^ stream.wrapping_mul(GOLDEN_GAMMA));
        rng.next_u64()
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `[0, n)` via the 128-bit multiply trick.
    pub fn uniform_below(&mut self, n: usize) -> usize {
        assert!(n > 0, "uniform_below(0)");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Chooses `k` distinct values from `[0, n)` by a partial Fisher-Yates
    /// shuffle; the result is sorted so output depends only on the set chosen.
    pub fn choose_distinct(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "choose_distinct: k > n");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.uniform_below(n - i);
            pool.swap(i, j);
        }
        let mut picked = pool[..k].to_vec();
        picked.sort_unstable();
        picked
    }

    /// Uniform point on the `k`-simplex (Dirichlet with unit concentration),
    /// via normalized exponentials.
    pub fn simplex(&mut self, k: usize) -> Vec<f64> {
        assert!(k > 0, "simplex(0)");
        let mut draws: Vec<f64> = (0..k).map(|_| -(1.0 - self.next_f64()).ln()).collect();
        let total: f64 = draws.iter().sum();
        if total <= 0.0 {
            return vec![1.0 / k as f64; k];
        }
        for d in &mut draws {
            *d /= total;
        }
        draws
    }
}

/// Cumulative distribution over `0..weights.len()` for repeated inverse-CDF
/// sampling.
pub struct Cdf {
    cumulative: Vec<f64>,
}

impl Cdf {
    pub fn new(weights: &[f64]) -> Self {
        assert!(!weights.is_empty(), "empty weight vector");
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for &w in weights {
            assert!(w >= 0.0 && w.is_finite(), "negative or non-finite weight");
            acc += w;
            cumulative.push(acc);
        }
        assert!(acc > 0.0, "all-zero weight vector");
        // Normalize so the last entry is exactly 1 and the final bucket
        // absorbs any rounding slack.
        for c in &mut cumulative {
            *c /= acc;
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Cdf { cumulative }
    }

    pub fn sample(&self, rng: &mut SplitMix64) -> usize {
        let u = rng.next_f64();
        // First bucket whose cumulative mass exceeds u; the strict increase
        // there guarantees the bucket has positive weight even when u lands
        // exactly on a boundary shared with zero-weight buckets.
        self.cumulative.partition_point(|&c| c <= u)
    }
}
