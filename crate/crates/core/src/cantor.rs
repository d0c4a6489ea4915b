//! The digit-restricted Cantor set `K(l, k)`, its maximal-entropy measure
//! `nu`, and certified quadrature of `I(x) = int_K (x - t)^-alpha d nu(t)`.
//!
//! The quadrature averages the kernel over all depth-`D` digit prefixes,
//! each evaluated at the barycenter of its cylinder. When `l^D` is too large
//! to enumerate, the innermost digits are integrated exactly against the
//! moments of the residual measure through a Taylor expansion of the kernel.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certified::Certified;
use crate::error::{invalid, Error, Result};
use crate::renorm::DigitSystem;
use crate::summation::NeumaierSum;

/// Largest prefix set enumerated explicitly.
pub const ENUMERATION_LIMIT: usize = 1 << 20;

/// Prefix count beyond which further digits go into the moment expansion.
const NODE_TARGET: usize = 1 << 16;

/// Taylor order used for the unenumerated digits.
const TAYLOR_ORDER: usize = 8;

const CHUNK: usize = 4096;
const MC_CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorMeasure {
    pub ds: DigitSystem,
    pub alpha: f64,
}

impl CantorMeasure {
    /// Measure with the dimension exponent `alpha = log l / log k`.
    pub fn new(ds: DigitSystem) -> Self {
        let alpha = ds.hausdorff_alpha();
        Self { ds, alpha }
    }

    pub fn with_alpha(ds: DigitSystem, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid("alpha", "must be positive"));
        }
        Ok(Self { ds, alpha })
    }

    fn kf(&self) -> f64 {
        self.ds.k() as f64
    }

    /// `min K = c_1 / (k - 1)`
    pub fn inf(&self) -> f64 {
        self.ds.digits()[0] as f64 / (self.kf() - 1.0)
    }

    /// `max K = c_l / (k - 1)`
    pub fn sup(&self) -> f64 {
        *self.ds.digits().last().expect("l >= 2") as f64 / (self.kf() - 1.0)
    }

    /// Mean of `nu`.
    pub fn barycenter(&self) -> f64 {
        let d = self.ds.digits();
        let mean = d.iter().map(|&c| c as f64).sum::<f64>() / d.len() as f64;
        mean / (self.kf() - 1.0)
    }

    /// Left endpoints `t_w = sum_{i<=D} b_i k^-i` of the `l^D` depth-`D`
    /// cylinders, each carrying mass `l^-D`.
    pub fn prefixes(&self, depth: u32) -> Result<Vec<f64>> {
        let l = self.ds.l();
        let count = (l as u128).checked_pow(depth).unwrap_or(u128::MAX);
        if count > ENUMERATION_LIMIT as u128 {
            return Err(Error::EnumerationTooLarge {
                count,
                limit: ENUMERATION_LIMIT as u128,
            });
        }
        let k = self.kf();
        let mut pts = vec![0.0];
        let mut scale = 1.0;
        for _ in 0..depth {
            scale /= k;
            let mut next = Vec::with_capacity(pts.len() * l);
            for &p in &pts {
                for &c in self.ds.digits() {
                    next.push(p + c as f64 * scale);
                }
            }
            pts = next;
        }
        Ok(pts)
    }

    /// Quadrature rule of the given depth, reusable across many `x`.
    pub fn rule(&self, depth: u32) -> Result<QuadratureRule> {
        let l = self.ds.l();
        let mut enumerated = 0u32;
        while enumerated < depth && l.pow(enumerated + 1) <= NODE_TARGET {
            enumerated += 1;
        }
        let inner = depth - enumerated;
        let k = self.kf();
        let h = k.powi(-(enumerated as i32));
        let c = self.barycenter();
        let nodes = self.prefixes(enumerated)?.into_iter().map(|t| t + h * c).collect();
        let (moments, spread) = if inner == 0 {
            (vec![1.0], 0.0)
        } else {
            let m = residual_moments(&self.ds, c, inner, TAYLOR_ORDER);
            (m, (c - self.inf()).max(self.sup() - c))
        };
        // w_j = (alpha)_j h^j M_j / j!
        let mut weights = Vec::with_capacity(moments.len());
        let mut coef = 1.0;
        for (j, m) in moments.iter().enumerate() {
            if j > 0 {
                coef *= (self.alpha + (j - 1) as f64) * h / j as f64;
            }
            weights.push(coef * m);
        }
        Ok(QuadratureRule {
            alpha: self.alpha,
            k,
            depth,
            nodes,
            weights,
            taylor_radius: h * spread,
            sup: self.sup(),
            spread: (c - self.inf()).max(self.sup() - c),
        })
    }

    /// `I(n)` at depth `D` with a certified error bound.
    pub fn quadrature(&self, n: usize, depth: u32) -> Result<Certified> {
        if n <= 1 {
            return Err(Error::Singular {
                n: n as f64,
                sup: self.sup(),
            });
        }
        self.rule(depth)?.integrate(n as f64)
    }

    /// Smallest depth whose bound at `n = 2` is below `tol`.
    pub fn default_depth(&self, tol: f64) -> u32 {
        let y = 2.0 - self.sup().max(1.0);
        let spread = (self.barycenter() - self.inf()).max(self.sup() - self.barycenter());
        let lead = self.alpha * y.powf(-self.alpha - 1.0) * spread.max(1.0);
        let mut d = 1;
        while lead * self.kf().powi(-(d as i32)) > tol && d < 60 {
            d += 1;
        }
        d
    }

    /// Monte Carlo estimate of `I(n)` from uniformly random digit strings.
    ///
    /// Samples are split into fixed-size blocks; block `i` draws from the
    /// ChaCha8 stream `i` of `seed`, so the estimate is bitwise reproducible
    /// regardless of thread count.
    pub fn mc_integral(&self, n: usize, samples: usize, seed: u64) -> Result<McEstimate> {
        if samples < 1000 {
            return Err(invalid("samples", format!("{samples} < 1000")));
        }
        if (n as f64) <= self.sup() || n <= 1 {
            return Err(Error::Singular {
                n: n as f64,
                sup: self.sup(),
            });
        }
        let digits_per_sample = (40.0 / self.kf().log2()).ceil() as usize;
        let blocks = samples.div_ceil(MC_CHUNK);
        let x = n as f64;
        let k = self.kf();
        let digits = self.ds.digits();
        let alpha = self.alpha;
        let partial: Vec<(f64, f64)> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(b as u64);
                let count = MC_CHUNK.min(samples - b * MC_CHUNK);
                let mut s1 = NeumaierSum::default();
                let mut s2 = NeumaierSum::default();
                for _ in 0..count {
                    let mut t = 0.0;
                    for _ in 0..digits_per_sample {
                        let c = digits[rng.random_range(0..digits.len())] as f64;
                        t = (t + c) / k;
                    }
                    let f = (-alpha * (x - t).ln()).exp();
                    s1.add(f);
                    s2.add(f * f);
                }
                (s1.sum(), s2.sum())
            })
            .collect();
        let (mut s1, mut s2) = (NeumaierSum::default(), NeumaierSum::default());
        for (a, b) in partial {
            s1.add(a);
            s2.add(b);
        }
        let m = samples as f64;
        let mean = s1.sum() / m;
        let var = ((s2.sum() / m - mean * mean) * m / (m - 1.0)).max(0.0);
        Ok(McEstimate {
            n,
            estimate: mean,
            stderr: (var / m).sqrt(),
            samples,
            seed,
            digits_per_sample,
        })
    }

    /// `|I(n) - sum_j I(kn - c_j)|` against `(l + 1)` times the bound at `n`.
    pub fn self_similarity_check(&self, n: usize, depth: u32) -> Result<SelfSimilarity> {
        let rule = self.rule(depth)?;
        if n <= 1 {
            return Err(Error::Singular {
                n: n as f64,
                sup: self.sup(),
            });
        }
        let lhs = rule.integrate(n as f64)?;
        let mut rhs = NeumaierSum::default();
        for &c in self.ds.digits() {
            rhs.add(rule.integrate((self.ds.k() as usize * n - c as usize) as f64)?.value);
        }
        let rhs = rhs.sum();
        Ok(SelfSimilarity {
            n,
            depth,
            lhs: lhs.value,
            rhs,
            difference: (lhs.value - rhs).abs(),
            allowed: (self.ds.l() + 1) as f64 * lhs.error,
        })
    }
}

/// Central moments `E[(s - c)^j]`, `j <= order`, of the depth-`depth`
/// discrete approximation `s = t_v + c k^-depth` of `nu`.
fn residual_moments(ds: &DigitSystem, c: f64, depth: u32, order: usize) -> Vec<f64> {
    let k = ds.k() as f64;
    let l = ds.l() as f64;
    let binom = binomials(order);
    let mut m = vec![0.0; order + 1];
    m[0] = 1.0;
    for _ in 0..depth {
        let mut next = vec![0.0; order + 1];
        for &b in ds.digits() {
            let e = (b as f64 - (k - 1.0) * c) / k;
            for (j, slot) in next.iter_mut().enumerate() {
                let mut acc = 0.0;
                for i in 0..=j {
                    acc += binom[j][i] * e.powi((j - i) as i32) * k.powi(-(i as i32)) * m[i];
                }
                *slot += acc / l;
            }
        }
        m = next;
    }
    m
}

fn binomials(n: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![1.0; i + 1];
        for j in 1..i {
            row[j] = prev[j - 1] + prev[j];
        }
        rows.push(row);
    }
    rows
}

/// Precomputed nodes and Taylor weights for one depth.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    alpha: f64,
    k: f64,
    depth: u32,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    taylor_radius: f64,
    sup: f64,
    spread: f64,
}

impl QuadratureRule {
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// `I(x)` for `x > sup K`.
    pub fn integrate(&self, x: f64) -> Result<Certified> {
        let y_min = x - self.sup;
        if !(y_min > 0.0) {
            return Err(Error::Singular { n: x, sup: self.sup });
        }
        let sum = if self.nodes.len() > CHUNK {
            let parts: Vec<f64> = self
                .nodes
                .par_chunks(CHUNK)
                .map(|chunk| self.chunk_sum(x, chunk))
                .collect();
            parts.into_iter().collect::<NeumaierSum>().sum()
        } else {
            self.chunk_sum(x, &self.nodes)
        };
        let value = sum / self.nodes.len() as f64;
        Ok(Certified::new(value, self.bound(x) + 8.0 * f64::EPSILON * value))
    }

    fn chunk_sum(&self, x: f64, nodes: &[f64]) -> f64 {
        let mut acc = NeumaierSum::default();
        for &t in nodes {
            let y = x - t;
            let inv = 1.0 / y;
            let mut p = (-self.alpha * y.ln()).exp();
            let mut s = 0.0;
            for &w in &self.weights {
                s += w * p;
                p *= inv;
            }
            acc.add(s);
        }
        acc.sum()
    }

    /// Mean-value bound `alpha (x - max(1, sup K))^(-alpha-1) k^-D`, scaled
    /// by the cylinder spread when it exceeds one, plus the Taylor remainder.
    pub fn bound(&self, x: f64) -> f64 {
        let y = x - self.sup.max(1.0);
        let y = if y > 0.0 { y } else { x - self.sup };
        let lead = self.alpha * y.powf(-self.alpha - 1.0) * self.spread.max(1.0) * self.k.powi(-(self.depth as i32));
        let taylor = if self.weights.len() > 1 {
            let p = self.weights.len();
            let mut coef = 1.0;
            for j in 0..p {
                coef *= (self.alpha + j as f64) / (j + 1) as f64;
            }
            coef * (x - self.sup).powf(-self.alpha - p as f64) * self.taylor_radius.powi(p as i32)
        } else {
            0.0
        };
        lead + taylor
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub n: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
    pub digits_per_sample: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarity {
    pub n: usize,
    pub depth: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub difference: f64,
    pub allowed: f64,
}

impl SelfSimilarity {
    pub fn passed(&self) -> bool {
        self.difference <= self.allowed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn cantor() -> CantorMeasure {
        CantorMeasure::new(DigitSystem::new(3, vec![0, 2]).unwrap())
    }

    fn lebesgue() -> CantorMeasure {
        CantorMeasure::new(DigitSystem::new(3, vec![0, 1, 2]).unwrap())
    }

    #[test]
    fn hausdorff_exponent() {
        assert!((cantor().alpha - 0.630_929_753_571_457_4).abs() < 1e-15);
        assert_eq!(lebesgue().alpha, 1.0);
    }

    #[test]
    fn masses_sum_to_one() {
        let cm = cantor();
        for d in 0..10 {
            let p = cm.prefixes(d).unwrap();
            let mass: f64 = p.iter().map(|_| 1.0 / p.len() as f64).sum();
            assert!((mass - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&t| t >= 0.0 && t <= cm.sup()));
        }
    }

    #[test]
    fn enumeration_limit() {
        assert!(matches!(
            lebesgue().prefixes(20),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    #[test]
    fn lebesgue_is_log_two() {
        let q = lebesgue().quadrature(2, 20).unwrap();
        assert!((q.value - LN_2).abs() < 3f64.powi(-20), "{q:?}");
        assert!(q.contains(LN_2));
    }

    #[test]
    fn lebesgue_direct_depth() {
        // enumerated without the moment expansion
        let q = lebesgue().quadrature(2, 10).unwrap();
        assert!(q.contains(LN_2), "{q:?}");
    }

    #[test]
    fn moments_agree_with_enumeration() {
        let cm = CantorMeasure::new(DigitSystem::new(5, vec![0, 1, 3]).unwrap());
        let c = cm.barycenter();
        let depth = 6;
        let m = residual_moments(&cm.ds, c, depth, 4);
        let h = 5f64.powi(-(depth as i32));
        let pts: Vec<f64> = cm.prefixes(depth).unwrap().iter().map(|t| t + h * c).collect();
        for (j, mj) in m.iter().enumerate() {
            let direct = pts.iter().map(|s| (s - c).powi(j as i32)).sum::<f64>() / pts.len() as f64;
            assert!((direct - mj).abs() < 1e-14, "moment {j}: {direct} vs {mj}");
        }
        assert!(m[1].abs() < 1e-15);
    }

    #[test]
    fn moment_expansion_matches_enumeration() {
        let cm = CantorMeasure::new(DigitSystem::new(5, vec![0, 1, 3]).unwrap());
        let direct = cm.rule(8).unwrap();
        assert_eq!(direct.weights.len(), 1);
        let mut split = cm.rule(8).unwrap();
        // force a split at depth 4 with the remaining digits in moments
        let c = cm.barycenter();
        let h = 5f64.powi(-4);
        split.nodes = cm.prefixes(4).unwrap().into_iter().map(|t| t + h * c).collect();
        let m = residual_moments(&cm.ds, c, 4, TAYLOR_ORDER);
        let mut coef = 1.0;
        split.weights = m
            .iter()
            .enumerate()
            .map(|(j, mj)| {
                if j > 0 {
                    coef *= (cm.alpha + (j - 1) as f64) * h / j as f64;
                }
                coef * mj
            })
            .collect();
        for x in [2.0, 3.0, 17.0] {
            let a = direct.integrate(x).unwrap().value;
            let b = split.integrate(x).unwrap().value;
            assert!((a - b).abs() < 1e-14, "{a} {b}");
        }
    }

    #[test]
    fn depth_refinement_within_bound() {
        let cm = cantor();
        let coarse = cm.quadrature(2, 14).unwrap();
        let fine = cm.quadrature(2, 18).unwrap();
        assert!((coarse.value - fine.value).abs() <= coarse.error);
        assert!(coarse.error < 2.0 * cm.alpha * 3f64.powi(-14));
    }

    #[test]
    fn decreasing_and_asymptotic() {
        let cm = cantor();
        let rule = cm.rule(14).unwrap();
        let mut prev = f64::INFINITY;
        for n in 2..200 {
            let v = rule.integrate(n as f64).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
        let n = 1000.0f64;
        let v = rule.integrate(n).unwrap().value;
        assert!((n.powf(cm.alpha) * v - 1.0).abs() < 0.01);
    }

    #[test]
    fn singular_kernel_rejected() {
        assert!(matches!(cantor().quadrature(1, 10), Err(Error::Singular { .. })));
        // c_l = k puts sup K at 2
        let cm = CantorMeasure::new(DigitSystem::new(2, vec![0, 2]).unwrap());
        assert!(matches!(cm.quadrature(2, 10), Err(Error::Singular { .. })));
        assert!(cm.quadrature(3, 10).is_ok());
    }

    #[test]
    fn monte_carlo_agrees() {
        let cm = cantor();
        let q = cm.quadrature(2, 16).unwrap();
        let mc = cm.mc_integral(2, 200_000, 7).unwrap();
        assert!((mc.estimate - q.value).abs() < 4.0 * mc.stderr, "{mc:?} vs {q:?}");
        let again = cm.mc_integral(2, 200_000, 7).unwrap();
        assert_eq!(mc.estimate.to_bits(), again.estimate.to_bits());
        let other = cm.mc_integral(2, 200_000, 8).unwrap();
        assert_ne!(mc.estimate, other.estimate);
        assert!(cm.mc_integral(2, 10, 7).is_err());
    }

    #[test]
    fn self_similarity() {
        let s = cantor().self_similarity_check(2, 14).unwrap();
        assert!(s.passed(), "{s:?}");
        let s = lebesgue().self_similarity_check(2, 14).unwrap();
        assert!(s.difference < 1e-9, "{s:?}");
        let cm = CantorMeasure::new(DigitSystem::new(5, vec![0, 3]).unwrap());
        assert!(cm.self_similarity_check(3, 14).unwrap().passed());
    }

    #[test]
    fn default_depth_reaches_tolerance() {
        let cm = cantor();
        let d = cm.default_depth(1e-8);
        assert!(cm.quadrature(2, d).unwrap().error <= 1e-8);
    }
}
