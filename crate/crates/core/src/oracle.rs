//! Run-length Markov chain of the equilibrium process, truncated at `M`.
//!
//! States are `(s, m)`: symbol `s` is being read for the `m`-th consecutive
//! time. From `(s, m)` the chain continues to `(s, m+1)` with probability
//! `T(m+1)/T(m)` and switches to `(1-s, 1)` with probability `eta_m/T(m)`;
//! at `m = M` it always switches. The stationary law is `pi(s, m) ∝ T(m)`.
//!
//! Every quantity is symmetric under the symbol swap, so only the `s = 0`
//! half of each vector is stored.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::seq::EtaSequence;
use crate::summation::NeumaierSum;

const PATH_CHUNK: usize = 4096;

#[derive(Debug, Clone)]
pub struct RenewalChain {
    m: usize,
    /// `tails[i] = T(i+1)` for `i <= M`.
    tails: Vec<f64>,
    /// `cont[i]` continue probability from run position `i+1`.
    cont: Vec<f64>,
    /// `leave[i] = eta_{i+1} / T(i+1)`, one at `M`.
    leave: Vec<f64>,
    /// `pi[i] = pi(0, i+1)`
    pi: Vec<f64>,
    eps_trunc: f64,
}

impl RenewalChain {
    /// Builds the chain, rejecting `M` when `sum_{m>M} T(m) / sum_m T(m)`
    /// exceeds `eps`.
    pub fn build(eta: &EtaSequence, m: usize, eps: f64) -> Result<Self> {
        if m < 2 {
            return Err(invalid("M", format!("{m} < 2")));
        }
        let achieved = eta.double_tail(m)?.value / eta.first_moment()?.value;
        if achieved > eps {
            return Err(Error::TruncationTooCoarse {
                m,
                achieved,
                requested: eps,
            });
        }
        let tails = (1..=m + 1)
            .map(|i| eta.tail(i).map(|t| t.value))
            .collect::<Result<Vec<_>>>()?;
        if let Some(i) = tails[..m].iter().position(|&t| !(t > f64::MIN_POSITIVE)) {
            return Err(invalid("M", format!("T({}) underflows; use M < {}", i + 1, i + 1)));
        }
        let mut cont: Vec<f64> = tails.windows(2).map(|w| w[1] / w[0]).collect();
        cont[m - 1] = 0.0;
        let mut leave = (1..=m)
            .map(|i| eta.eta(i).map(|e| e / tails[i - 1]))
            .collect::<Result<Vec<_>>>()?;
        leave[m - 1] = 1.0;
        let mass = tails[..m].iter().rev().copied().collect::<NeumaierSum>().sum();
        let pi = tails[..m].iter().map(|t| t / (2.0 * mass)).collect();
        Ok(Self {
            m,
            tails,
            cont,
            leave,
            pi,
            eps_trunc: achieved,
        })
    }

    pub fn truncation(&self) -> usize {
        self.m
    }

    pub fn eps_trunc(&self) -> f64 {
        self.eps_trunc
    }

    /// Relative truncation error of word probabilities, `eps / (1 - eps)`.
    pub fn word_bound(&self) -> f64 {
        self.eps_trunc / (1.0 - self.eps_trunc)
    }

    /// Bound on the truncation error of any correlation value.
    pub fn correlation_bound(&self) -> f64 {
        2.0 * self.eps_trunc
    }

    fn switch(&self, i: usize) -> f64 {
        self.leave[i]
    }

    /// `pi(s, m)`; symmetric in `s`.
    pub fn stationary(&self, m: usize) -> f64 {
        self.pi[m - 1]
    }

    /// Largest deviation of a row sum from one.
    pub fn row_sum_deviation(&self) -> f64 {
        self.cont
            .iter()
            .zip(&self.leave)
            .map(|(c, l)| (c + l - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max |pi P - pi|` over all states.
    pub fn stationarity_deviation(&self) -> f64 {
        let inflow_first: f64 = (0..self.m).map(|i| self.pi[i] * self.switch(i)).sum();
        let mut worst = (inflow_first - self.pi[0]).abs();
        for i in 1..self.m {
            worst = worst.max((self.pi[i - 1] * self.cont[i - 1] - self.pi[i]).abs());
        }
        worst
    }

    /// Total stationary mass on symbol 0.
    pub fn mass_zero(&self) -> f64 {
        self.pi.iter().rev().copied().collect::<NeumaierSum>().sum()
    }

    /// `P_pi(x_0 = .. = x_{q-1} = 0, x_q = 1)`.
    pub fn cylinder_probability(&self, q: usize) -> f64 {
        if q == 0 || q > self.m {
            return 0.0;
        }
        // run positions m with m + q - 1 <= M, ending exactly after q - 1 more steps
        let mut acc = NeumaierSum::default();
        for m in 1..=self.m + 1 - q {
            let end = m + q - 1;
            let exit = if end == self.m {
                self.tails[end - 1]
            } else {
                self.tails[end - 1] - self.tails[end]
            };
            acc.add(self.pi[m - 1] / self.tails[m - 1] * exit);
        }
        acc.sum()
    }

    /// One backward step `g <- P g` on `g(m) = P(x_q = 0 | (0, m))`.
    fn step_forward(&self, g: &[f64], out: &mut [f64]) {
        let renew = 1.0 - g[0];
        for i in 0..self.m {
            let next = if i + 1 < self.m { g[i + 1] } else { 0.0 };
            out[i] = self.cont[i] * next + self.switch(i) * renew;
        }
    }

    /// `P(x_q = 0 | x_0 = (symbol, m))` for `q = 0..=qmax`.
    pub fn conditional_a(&self, symbol: u8, m: usize, qmax: usize) -> Result<Vec<f64>> {
        if m < 1 || m > self.m {
            return Err(invalid("m", format!("run position must lie in 1..={}", self.m)));
        }
        if symbol > 1 {
            return Err(invalid("symbol", "must be 0 or 1"));
        }
        let mut out = Vec::with_capacity(qmax + 1);
        self.sweep(qmax, |_, g| {
            let v = g[m - 1];
            out.push(if symbol == 0 { v } else { 1.0 - v });
        });
        Ok(out)
    }

    /// Runs `g_q` for `q = 0..=qmax`, handing each to `visit`.
    fn sweep(&self, qmax: usize, mut visit: impl FnMut(usize, &[f64])) {
        let mut g = vec![1.0; self.m];
        let mut next = vec![0.0; self.m];
        visit(0, &g);
        for q in 1..=qmax {
            self.step_forward(&g, &mut next);
            std::mem::swap(&mut g, &mut next);
            visit(q, &g);
        }
    }

    /// `C(q) = P_pi(x_0 = 0, x_q = 0) - 1/4` for `q = 0..=qmax`.
    pub fn correlations(&self, qmax: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(qmax + 1);
        self.sweep(qmax, |_, g| out.push(self.pair_mass(g)));
        out[0] = 0.25;
        out
    }

    fn pair_mass(&self, g: &[f64]) -> f64 {
        let mut acc = NeumaierSum::default();
        for i in (0..self.m).rev() {
            acc.add(self.pi[i] * g[i]);
        }
        acc.sum() - 0.25
    }

    /// The same correlations computed on the time-reversed chain, which
    /// walks each run backwards and jumps from `(s, 1)` to `(1-s, m)` with
    /// probability `eta_m / W`.
    pub fn reversed_correlations(&self, qmax: usize) -> Vec<f64> {
        let w = self.tails[0];
        let jump: Vec<f64> = (0..self.m)
            .map(|i| {
                if i + 1 == self.m {
                    self.tails[i] / w
                } else {
                    (self.tails[i] - self.tails[i + 1]) / w
                }
            })
            .collect();
        let mut h = vec![1.0; self.m];
        let mut next = vec![0.0; self.m];
        let mut out = vec![0.25];
        for _ in 1..=qmax {
            let mut acc = NeumaierSum::default();
            for i in (0..self.m).rev() {
                acc.add(jump[i] * (1.0 - h[i]));
            }
            next[0] = acc.sum();
            next[1..].copy_from_slice(&h[..self.m - 1]);
            std::mem::swap(&mut h, &mut next);
            out.push(self.pair_mass(&h));
        }
        out
    }

    /// Simulates `n_paths` independent stationary paths and estimates
    /// `C(q)` for each requested lag. Paths are drawn in fixed-size blocks,
    /// block `i` from ChaCha8 stream `i` of `seed`.
    pub fn sample_paths(&self, lags: &[usize], n_paths: usize, seed: u64) -> Result<Vec<McCorrelation>> {
        if n_paths < 2 {
            return Err(invalid("n_paths", "need at least two paths"));
        }
        let horizon = lags.iter().copied().max().unwrap_or(0);
        // cumulative stationary mass over run positions, for sampling x_0
        let mut cdf = Vec::with_capacity(self.m);
        let mut acc = 0.0;
        for &p in &self.pi {
            acc += 2.0 * p;
            cdf.push(acc);
        }
        let blocks = n_paths.div_ceil(PATH_CHUNK);
        let partial: Vec<Vec<(u64, u64)>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let count = PATH_CHUNK.min(n_paths - b * PATH_CHUNK);
                let mut hits = vec![(0u64, 0u64); lags.len()];
                let mut path = vec![0u8; horizon + 1];
                for _ in 0..count {
                    self.draw_path(&mut rng, &cdf, &mut path);
                    for (slot, &q) in hits.iter_mut().zip(lags) {
                        if path[0] == 0 && path[q] == 0 {
                            slot.0 += 1;
                        }
                        slot.1 += 1;
                    }
                }
                hits
            })
            .collect();
        let n = n_paths as f64;
        Ok(lags
            .iter()
            .enumerate()
            .map(|(j, &q)| {
                let hits: u64 = partial.iter().map(|h| h[j].0).sum();
                let p = hits as f64 / n;
                McCorrelation {
                    q,
                    estimate: p - 0.25,
                    stderr: (p * (1.0 - p) / (n - 1.0)).sqrt(),
                    paths: n_paths,
                    seed,
                }
            })
            .collect())
    }

    fn draw_path(&self, rng: &mut ChaCha8Rng, cdf: &[f64], path: &mut [u8]) {
        let total = cdf[self.m - 1];
        let u: f64 = rng.random::<f64>() * total;
        let mut pos = cdf.partition_point(|&c| c <= u).min(self.m - 1) + 1;
        let mut sym: u8 = if rng.random::<f64>() < 0.5 { 0 } else { 1 };
        let mut t = 0;
        while t < path.len() {
            // last run position reached before switching, P(L >= n) = T(n)/T(pos)
            let v = rng.random::<f64>() * self.tails[pos - 1];
            let end = self.tails[..self.m].partition_point(|&x| x > v).max(pos);
            let len = end - pos + 1;
            for slot in path.iter_mut().skip(t).take(len) {
                *slot = sym;
            }
            t += len;
            sym ^= 1;
            pos = 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCorrelation {
    pub q: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub paths: usize,
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decay::{b_from, correlation_renewal, RenewalSeries};
    use crate::potential::mu_cylinder;
    use crate::seq::Family;

    fn power3(n: usize) -> EtaSequence {
        EtaSequence::new(Family::Power { gamma: 3.0 }, n).unwrap()
    }

    #[test]
    fn bernoulli_chain() {
        let eta = EtaSequence::new(Family::Geometric { ratio: 0.5 }, 100).unwrap();
        let ch = RenewalChain::build(&eta, 64, 1e-12).unwrap();
        assert!(ch.cont[..63].iter().all(|&c| (c - 0.5).abs() < 1e-15));
        let c = ch.correlations(64);
        assert_eq!(c[0], 0.25);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn stochastic_and_stationary() {
        let ch = RenewalChain::build(&power3(10_000), 10_000, 1e-3).unwrap();
        assert!(ch.row_sum_deviation() < 1e-14);
        assert!(ch.stationarity_deviation() < 1e-12);
        assert!((ch.mass_zero() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn coarse_truncation_rejected() {
        assert!(matches!(
            RenewalChain::build(&power3(1000), 8, 1e-6),
            Err(Error::TruncationTooCoarse { .. })
        ));
    }

    #[test]
    fn single_step_from_run_start() {
        let eta = power3(10_000);
        let ch = RenewalChain::build(&eta, 10_000, 1e-3).unwrap();
        let a = ch.conditional_a(0, 1, 1).unwrap();
        let zeta3 = 1.202_056_903_159_594_3;
        assert!((a[1] - (zeta3 - 1.0) / zeta3).abs() < 1e-9);
        let b = ch.conditional_a(1, 1, 1).unwrap();
        assert!((a[1] + b[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn matches_renewal_recursions() {
        let eta = power3(10_000);
        let ch = RenewalChain::build(&eta, 10_000, 1e-3).unwrap();
        let series = RenewalSeries::new(&eta, 64).unwrap();
        for s in [1, 4] {
            let chain = ch.conditional_a(0, s, 64).unwrap();
            for q in 1..=64 {
                let b = b_from(&series, &eta, s, q).unwrap();
                assert!((chain[q] - b).abs() < 1e-10, "s={s} q={q}");
            }
        }
    }

    #[test]
    fn correlations_three_ways() {
        let eta = power3(20_000);
        let ch = RenewalChain::build(&eta, 20_000, 1e-3).unwrap();
        let forward = ch.correlations(128);
        let reversed = ch.reversed_correlations(128);
        let renewal = correlation_renewal(&eta, 128).unwrap();
        for q in 0..=128 {
            assert!((forward[q] - reversed[q]).abs() < 1e-12, "q={q}");
            assert!((forward[q] - renewal[q]).abs() <= ch.correlation_bound(), "q={q}");
        }
    }

    #[test]
    fn cylinders_match_equilibrium_measure() {
        let eta = power3(20_000);
        let ch = RenewalChain::build(&eta, 20_000, 1e-3).unwrap();
        for q in 1..=64 {
            let mu = mu_cylinder(q, &eta, true).unwrap();
            assert!(
                (ch.cylinder_probability(q) - mu).abs() <= ch.word_bound() * mu + 1e-15,
                "q={q}"
            );
        }
    }

    #[test]
    fn monte_carlo() {
        let eta = EtaSequence::new(Family::Geometric { ratio: 0.5 }, 100).unwrap();
        let ch = RenewalChain::build(&eta, 64, 1e-12).unwrap();
        let mc = ch.sample_paths(&[1], 100_000, 3).unwrap();
        assert!(mc[0].estimate.abs() < 4.0 * mc[0].stderr, "{mc:?}");

        let eta = power3(10_000);
        let ch = RenewalChain::build(&eta, 10_000, 1e-3).unwrap();
        let exact = ch.correlations(16);
        let mc = ch.sample_paths(&[0, 4, 16], 100_000, 11).unwrap();
        assert!((mc[0].estimate - 0.25).abs() < 4.0 * mc[0].stderr.max(1e-3));
        for r in &mc[1..] {
            assert!(
                (r.estimate - exact[r.q]).abs() < 4.0 * r.stderr,
                "{r:?} vs {}",
                exact[r.q]
            );
        }
        let again = ch.sample_paths(&[0, 4, 16], 100_000, 11).unwrap();
        assert_eq!(mc, again);
    }
}
