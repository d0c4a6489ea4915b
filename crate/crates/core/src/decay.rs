//! Renewal description of the equilibrium process at `beta = 1`.
//!
//! A run of a symbol has length `n` with probability `p_n = eta_n / W`. With
//! `A_q` the probability of reading `0` at time `q` given that a run of `0`s
//! starts at time 0,
//!
//! `A_q = T(q+1)/W + sum_{n=1}^{q} p_n (1 - A_{q-n})`,  `A_0 = 1`,
//!
//! and `V_q = 1/2 - A_q` solves `V_q = K_q - sum_{j<q} p_{q-j} V_j` with
//! `K_q = (eta_q - T(q+1)) / 2W`.

use serde::{Deserialize, Serialize};

use crate::certified::Certified;
use crate::error::{invalid, Result};
use crate::seq::{EtaSequence, Family};
use crate::summation::NeumaierSum;

/// `mu([0])`, fixed by the symbol swap.
pub const MU_ZERO: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalSeries {
    pub qmax: usize,
    pub w: f64,
    /// `p[n-1] = p_n`
    pub p: Vec<f64>,
    /// `tail_term[q] = T(q+1)/W` for `0 <= q <= qmax`.
    pub tail_term: Vec<f64>,
    /// `k[q-1] = K_q`
    pub k: Vec<f64>,
    /// `a[q] = A_q`, `a[0] = 1`.
    pub a: Vec<f64>,
    /// `v[q-1] = V_q`
    pub v: Vec<f64>,
}

impl RenewalSeries {
    pub fn new(eta: &EtaSequence, qmax: usize) -> Result<Self> {
        if qmax < 1 {
            return Err(invalid("qmax", "must be at least 1"));
        }
        let w = eta.total().value;
        let p = (1..=qmax)
            .map(|n| eta.eta(n).map(|e| e / w))
            .collect::<Result<Vec<_>>>()?;
        let tail_term = (0..=qmax)
            .map(|q| eta.tail(q + 1).map(|t| t.value / w))
            .collect::<Result<Vec<_>>>()?;
        let k = (1..=qmax)
            .map(|q| (p[q - 1] - tail_term[q]) * MU_ZERO)
            .collect::<Vec<_>>();

        let mut a = Vec::with_capacity(qmax + 1);
        a.push(1.0);
        for q in 1..=qmax {
            let mut acc = NeumaierSum::default();
            acc.add(tail_term[q]);
            for n in 1..=q {
                acc.add(p[n - 1] * (1.0 - a[q - n]));
            }
            a.push(acc.sum());
        }

        let mut v: Vec<f64> = Vec::with_capacity(qmax);
        for q in 1..=qmax {
            let mut acc = NeumaierSum::default();
            acc.add(k[q - 1]);
            for j in 1..q {
                acc.add(-p[q - j - 1] * v[j - 1]);
            }
            v.push(acc.sum());
        }
        Ok(Self {
            qmax,
            w,
            p,
            tail_term,
            k,
            a,
            v,
        })
    }

    pub fn a(&self, q: usize) -> f64 {
        self.a[q]
    }

    pub fn v(&self, q: usize) -> f64 {
        self.v[q - 1]
    }

    pub fn k(&self, q: usize) -> f64 {
        self.k[q - 1]
    }

    /// `max_q |V_q - (1/2 - A_q)|`
    pub fn v_consistency(&self) -> f64 {
        (1..=self.qmax)
            .map(|q| (self.v(q) - (MU_ZERO - self.a(q))).abs())
            .fold(0.0, f64::max)
    }

    /// `V(z) (1 + P(z)) - K(z)` with all series cut at `qmax`, against a
    /// bound on the dropped terms.
    pub fn generating_check(&self, z: f64) -> Result<GeneratingCheck> {
        if !(z > 0.0 && z < 1.0) {
            return Err(invalid("z", "must lie in (0, 1)"));
        }
        let q = self.qmax;
        let series = |c: &[f64]| -> f64 {
            let mut acc = NeumaierSum::default();
            let mut zp = 1.0;
            for &x in c {
                zp *= z;
                acc.add(x * zp);
            }
            acc.sum()
        };
        let vz = series(&self.v);
        let pz = series(&self.p);
        let kz = series(&self.k);
        let lhs = vz * (1.0 + pz);
        // products V_j p_n z^(j+n) with j + n > qmax, plus K and V terms past qmax
        let zq = z.powi(q as i32 + 1);
        let truncation = zq * (q as f64 + 2.0) / (1.0 - z).powi(2);
        Ok(GeneratingCheck {
            z,
            lhs,
            rhs: kz,
            residual: (lhs - kz).abs(),
            truncation,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratingCheck {
    pub z: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    pub truncation: f64,
}

/// `A_1 .. A_qmax`.
pub fn renewal_a(eta: &EtaSequence, qmax: usize) -> Result<Vec<f64>> {
    Ok(RenewalSeries::new(eta, qmax)?.a[1..].to_vec())
}

/// `V_1 .. V_qmax`.
pub fn renewal_v(eta: &EtaSequence, qmax: usize) -> Result<Vec<f64>> {
    Ok(RenewalSeries::new(eta, qmax)?.v)
}

/// The recursion `A_q = sum_{m<q} p_m A_{q-m} + T(q+1)/W` without the
/// complement on the renewed term. It agrees with [`renewal_a`] only when
/// `p_n = 2^-n`; kept for comparison.
pub fn renewal_a_uncomplemented(eta: &EtaSequence, qmax: usize) -> Result<Vec<f64>> {
    let s = RenewalSeries::new(eta, qmax)?;
    let mut a = vec![0.0; qmax + 1];
    for q in 1..=qmax {
        let mut acc = NeumaierSum::default();
        acc.add(s.tail_term[q]);
        for m in 1..q {
            acc.add(s.p[m - 1] * a[q - m]);
        }
        a[q] = acc.sum();
    }
    Ok(a[1..].to_vec())
}

/// `B^s_q`: probability of `0` at time `q` from inside a run of `0`s at its
/// `s`-th symbol,
///
/// `T(s+q)/T(s) + sum_{n=1}^{q} (eta_{s+n-1}/T(s)) (1 - A_{q-n})`.
pub fn b_series(eta: &EtaSequence, s: usize, q: usize) -> Result<f64> {
    if s < 1 {
        return Err(invalid("s", "run positions start at 1"));
    }
    if q < 1 {
        return Ok(1.0);
    }
    let series = RenewalSeries::new(eta, q)?;
    b_from(&series, eta, s, q)
}

/// [`b_series`] reusing a precomputed series with `qmax >= q`.
pub fn b_from(series: &RenewalSeries, eta: &EtaSequence, s: usize, q: usize) -> Result<f64> {
    if q > series.qmax {
        return Err(invalid("q", format!("{q} exceeds the series length {}", series.qmax)));
    }
    let ts = eta.tail(s)?.value;
    let mut acc = NeumaierSum::default();
    acc.add(eta.tail(s + q)?.value / ts);
    for n in 1..=q {
        acc.add(eta.eta(s + n - 1)? / ts * (1.0 - series.a[q - n]));
    }
    Ok(acc.sum())
}

/// `C(q) = mu(x_0 = 0, x_q = 0) - 1/4` for `0 <= q <= qmax` from the
/// renewal series:
///
/// `C(q) = [D(q) + sum_{n=1}^{q} (1 - A_{q-n}) T(n)] / Z - 1/4`.
pub fn correlation_renewal(eta: &EtaSequence, qmax: usize) -> Result<Vec<f64>> {
    let series = RenewalSeries::new(eta, qmax.max(1))?;
    let z = 2.0 * eta.first_moment()?.value;
    let tails = (1..=qmax.max(1))
        .map(|n| eta.tail(n).map(|t| t.value))
        .collect::<Result<Vec<_>>>()?;
    (0..=qmax)
        .map(|q| {
            let mut acc = NeumaierSum::default();
            acc.add(eta.double_tail(q)?.value);
            for n in 1..=q {
                acc.add((1.0 - series.a[q - n]) * tails[n - 1]);
            }
            Ok(acc.sum() / z - 0.25)
        })
        .collect()
}

/// Predicted order of `|C(q)|`: the double tail `D(q)`.
pub fn correlation_asymptotic(eta: &EtaSequence, q: usize) -> Result<Certified> {
    eta.double_tail(q)
}

/// Two competing intermediate asymptotics, reported side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub q: usize,
    /// `sum_{n=1}^{q} sum_{j>q} eta_j = q T(q+1)`
    pub can1: f64,
    /// `q^2 exp(-sqrt q)`
    pub est1: f64,
    pub ratio: f64,
}

pub fn diagnostics(eta: &EtaSequence, q: usize) -> Result<Diagnostics> {
    if q < 1 {
        return Err(invalid("q", "must be at least 1"));
    }
    let qf = q as f64;
    let can1 = qf * eta.tail(q + 1)?.value;
    let est1 = qf * qf * (-qf.sqrt()).exp();
    Ok(Diagnostics {
        q,
        can1,
        est1,
        ratio: can1 / est1,
    })
}

/// Tail estimates for `eta_n ~ exp(-sqrt n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AppendixReport {
    pub n: usize,
    /// `sum_{k>=0} e^{-sqrt(n+k)} / (sqrt(n+1) e^{-sqrt(n+1)})` by direct summation.
    pub tail_ratio_direct: f64,
    /// The same ratio from the certified tail of the sequence.
    pub tail_ratio_closed: f64,
    /// `D(n) / (n e^{-sqrt n})`
    pub double_tail_ratio: f64,
}

pub fn appendix_estimates(eta: &EtaSequence, n: usize) -> Result<AppendixReport> {
    if eta.family() != (Family::Stretched { theta: 0.5 }) {
        return Err(invalid("eta", format!("needs stretched:0.5, got {}", eta.family())));
    }
    if n < 1 {
        return Err(invalid("n", "must be at least 1"));
    }
    let nf = n as f64;
    let anchor = (nf + 1.0).sqrt();
    let mut acc = NeumaierSum::default();
    let mut m = nf;
    loop {
        let term = (anchor - m.sqrt()).exp();
        acc.add(term);
        if term < 1e-18 * acc.sum() {
            break;
        }
        m += 1.0;
    }
    let tail_ratio_direct = acc.sum() / anchor;
    let tail_ratio_closed = eta.tail(n)?.value / (anchor * eta.eta(n + 1)?);
    let double_tail_ratio = eta.double_tail(n)?.value / (nf * eta.eta(n)?);
    Ok(AppendixReport {
        n,
        tail_ratio_direct,
        tail_ratio_closed,
        double_tail_ratio,
    })
}

/// One CSV row of [`decay_rows`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub q: usize,
    pub a: f64,
    pub v: f64,
    pub k: f64,
    pub d: f64,
    pub c_renewal: f64,
    /// `|C(q)| / D(q)`
    pub ratio: f64,
}

pub fn decay_rows(eta: &EtaSequence, qmax: usize) -> Result<Vec<DecayRow>> {
    let series = RenewalSeries::new(eta, qmax)?;
    let c = correlation_renewal(eta, qmax)?;
    let z = 2.0 * eta.first_moment()?.value;
    (1..=qmax)
        .map(|q| {
            let d = eta.double_tail(q)?.value;
            Ok(DecayRow {
                q,
                a: series.a(q),
                v: series.v(q),
                k: series.k(q),
                d,
                c_renewal: c[q],
                ratio: c[q].abs() * z / d,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn power3(n: usize) -> EtaSequence {
        EtaSequence::new(Family::Power { gamma: 3.0 }, n).unwrap()
    }

    fn geometric() -> EtaSequence {
        EtaSequence::new(Family::Geometric { ratio: 0.5 }, 200).unwrap()
    }

    const ZETA3: f64 = 1.202_056_903_159_594_3;

    #[test]
    fn bernoulli_case() {
        let s = RenewalSeries::new(&geometric(), 64).unwrap();
        for q in 1..=64 {
            assert!((s.a(q) - 0.5).abs() < 1e-15);
            assert!(s.k(q).abs() < 1e-15);
            assert!(s.v(q).abs() < 1e-15);
        }
        let c = correlation_renewal(&geometric(), 64).unwrap();
        assert_eq!(c[0], 0.25);
        assert!(c[1..].iter().all(|x| x.abs() < 1e-15));
        for s in 1..5 {
            assert!((b_series(&geometric(), s, 7).unwrap() - 0.5).abs() < 1e-15);
        }
    }

    #[test]
    fn power_first_terms() {
        let s = RenewalSeries::new(&power3(1000), 50).unwrap();
        assert!((s.a(1) - (ZETA3 - 1.0) / ZETA3).abs() < 1e-9);
        assert!((s.k(1) - (1.0 / ZETA3 - 0.5)).abs() < 1e-9);
        assert_eq!(s.v(1), s.k(1));
        assert!(s.v_consistency() < 1e-12);
        assert!(s.a[1..].iter().all(|&a| a > 0.0 && a < 1.0));
        assert!((s.p.iter().sum::<f64>() + s.tail_term[50] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uncomplemented_form_differs() {
        let a = renewal_a(&power3(1000), 5).unwrap();
        let b = renewal_a_uncomplemented(&power3(1000), 5).unwrap();
        assert_eq!(a[0], b[0]);
        assert!((a[1] - b[1]).abs() > 0.1);
        let g = geometric();
        let a = renewal_a(&g, 20).unwrap();
        let b = renewal_a_uncomplemented(&g, 20).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn b_reduces_to_a() {
        let eta = power3(2000);
        let s = RenewalSeries::new(&eta, 40).unwrap();
        for q in 1..=40 {
            assert!((b_from(&s, &eta, 1, q).unwrap() - s.a(q)).abs() < 1e-14);
        }
    }

    #[test]
    fn v_tends_to_zero() {
        let s = RenewalSeries::new(&power3(5000), 2000).unwrap();
        assert!(s.v(2000).abs() < s.v(1).abs() * 1e-2);
    }

    #[test]
    fn generating_identity() {
        for eta in [power3(1000), geometric()] {
            let s = RenewalSeries::new(&eta, 200).unwrap();
            let g = s.generating_check(0.5).unwrap();
            assert!(g.residual <= g.truncation + 1e-14, "{g:?}");
        }
    }

    #[test]
    fn correlation_starts_at_quarter_and_decays() {
        let c = correlation_renewal(&power3(5000), 512).unwrap();
        assert!((c[0] - 0.25).abs() < 1e-12);
        assert!(c.iter().all(|x| x.abs() <= 0.25 + 1e-12));
        assert!(c[512] > 0.0 && c[512] < c[64]);
    }

    #[test]
    fn scale_invariance() {
        let eta = power3(2000);
        let big = eta.scaled(7.0).unwrap();
        let a = RenewalSeries::new(&eta, 100).unwrap();
        let b = RenewalSeries::new(&big, 100).unwrap();
        for q in 1..=100 {
            assert!((a.a(q) - b.a(q)).abs() < 1e-13);
            assert!((a.v(q) - b.v(q)).abs() < 1e-13);
        }
        let ca = correlation_renewal(&eta, 100).unwrap();
        let cb = correlation_renewal(&big, 100).unwrap();
        for (x, y) in ca.iter().zip(&cb) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn appendix_ratios() {
        let eta = EtaSequence::new(Family::Stretched { theta: 0.5 }, 20_000).unwrap();
        let r = appendix_estimates(&eta, 10_000).unwrap();
        assert!((1.8..=2.2).contains(&r.tail_ratio_direct), "{r:?}");
        assert!((r.tail_ratio_direct - r.tail_ratio_closed).abs() < 1e-8 * r.tail_ratio_direct);
        let r100 = appendix_estimates(&eta, 100).unwrap();
        let r1000 = appendix_estimates(&eta, 1000).unwrap();
        let gaps: Vec<f64> = [r100, r1000, r]
            .iter()
            .map(|x| (x.tail_ratio_direct - 2.0).abs())
            .collect();
        assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2]);
        assert!(appendix_estimates(&power3(100), 10).is_err());
    }

    #[test]
    fn diagnostics_reported() {
        let eta = EtaSequence::new(Family::Stretched { theta: 0.5 }, 2000).unwrap();
        let d = diagnostics(&eta, 400).unwrap();
        assert!(d.can1 > 0.0 && d.est1 > 0.0);
    }
}
