//! Renormalization operators on Walters coefficients and their fixed points.
//!
//! First type: `(R_k a)_n` sums the `k` consecutive coefficients
//! `a_{k(n-2)+3} .. a_{k(n-1)+2}`. Second type: `(R a)_n = sum_i a_{kn - c_i}`
//! for a digit system `(k, c_1 < .. < c_l)`.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::CantorMeasure;
use crate::error::{invalid, Error, Result};
use crate::seq::{DominatingBound, WaltersCoefficients};
use crate::summation::NeumaierSum;

/// Largest digit-index multiset produced by [`renorm2_digit_indices`].
pub const DIGIT_INDEX_LIMIT: u128 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDigits", into = "RawDigits")]
pub struct DigitSystem {
    k: u32,
    digits: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct RawDigits {
    k: u32,
    digits: Vec<u32>,
}

impl TryFrom<RawDigits> for DigitSystem {
    type Error = Error;
    fn try_from(r: RawDigits) -> Result<Self> {
        DigitSystem::new(r.k, r.digits)
    }
}

impl From<DigitSystem> for RawDigits {
    fn from(d: DigitSystem) -> Self {
        RawDigits {
            k: d.k,
            digits: d.digits,
        }
    }
}

impl DigitSystem {
    pub fn new(k: u32, digits: Vec<u32>) -> Result<Self> {
        if k < 2 {
            return Err(invalid("k", format!("{k} < 2")));
        }
        let l = digits.len();
        if l < 2 || l > k as usize {
            return Err(invalid("digits", format!("need 2 <= l <= k, got l = {l}, k = {k}")));
        }
        if digits.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid("digits", "must be strictly increasing"));
        }
        if digits[l - 1] > k {
            return Err(invalid(
                "digits",
                format!("largest digit {} exceeds k = {k}", digits[l - 1]),
            ));
        }
        Ok(Self { k, digits })
    }

    /// Parses a comma-separated digit list such as `0,2`.
    pub fn parse(k: u32, digits: &str) -> Result<Self> {
        let parsed = digits
            .split(',')
            .map(|s| s.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid("digits", e.to_string()))?;
        Self::new(k, parsed)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn l(&self) -> usize {
        self.digits.len()
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    /// `log l / log k`
    pub fn hausdorff_alpha(&self) -> f64 {
        if self.l() == self.k as usize {
            1.0
        } else {
            (self.l() as f64).ln() / (self.k as f64).ln()
        }
    }
}

impl fmt::Display for DigitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d: Vec<String> = self.digits.iter().map(|c| c.to_string()).collect();
        write!(f, "k={} digits={}", self.k, d.join(","))
    }
}

/// Which renormalization a residual refers to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Operator {
    FirstType { k: u32 },
    SecondType { ds: DigitSystem },
}

impl Operator {
    pub fn apply(&self, a: &WaltersCoefficients) -> Result<WaltersCoefficients> {
        match self {
            Operator::FirstType { k } => renorm1_apply(a, *k),
            Operator::SecondType { ds } => renorm2_apply(a, ds),
        }
    }
}

fn check_k(k: u32) -> Result<usize> {
    if k < 2 {
        return Err(invalid("k", format!("{k} < 2")));
    }
    Ok(k as usize)
}

/// `R_k a` at every `n` whose window lies within `a`.
pub fn renorm1_apply(a: &WaltersCoefficients, k: u32) -> Result<WaltersCoefficients> {
    let ku = check_k(k)?;
    let m = a.max_index();
    if m < ku + 2 {
        return Err(Error::MissingIndex { index: ku + 2 });
    }
    renorm1_apply_upto(a, k, (m - 2) / ku + 1)
}

/// `R_k a` for `2 <= n <= n_out`.
pub fn renorm1_apply_upto(a: &WaltersCoefficients, k: u32, n_out: usize) -> Result<WaltersCoefficients> {
    let k = check_k(k)?;
    if n_out < 2 {
        return Err(invalid("n_out", format!("{n_out} < 2")));
    }
    a.require(k * (n_out - 1) + 2)?;
    let out = (2..=n_out)
        .map(|n| {
            (k * (n - 2) + 3..=k * (n - 1) + 2)
                .map(|i| a.get(i).expect("checked"))
                .collect::<NeumaierSum>()
                .sum()
        })
        .collect();
    Ok(WaltersCoefficients { a: out, b: a.b, d: a.d })
}

/// First-type fixed point with offsets `alpha(n)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstTypeFixedPoint {
    pub k: u32,
    pub coeffs: WaltersCoefficients,
    /// `offsets[0]` holds `alpha(2)`.
    pub offsets: Vec<f64>,
}

/// `a_n = -log((n + alpha(n)) / (n + alpha(n) - 1))`, with `alpha(2)` fixed by
/// `a_2` and `alpha(m) = k alpha(n) + k - 2` on the block of `n`.
pub fn renorm1_fixed_point(k: u32, a2: f64, n_max: usize) -> Result<FirstTypeFixedPoint> {
    let ku = check_k(k)?;
    if !(a2 < 0.0) {
        return Err(invalid("a2", format!("{a2} must be negative")));
    }
    if n_max < 2 {
        return Err(invalid("n_max", format!("{n_max} < 2")));
    }
    let e = a2.exp();
    let alpha2 = (2.0 * e - 1.0) / (1.0 - e);
    let mut offsets = Vec::with_capacity(n_max - 1);
    offsets.push(alpha2);
    for m in 3..=n_max {
        let parent = (m - 3) / ku + 2;
        offsets.push(ku as f64 * offsets[parent - 2] + ku as f64 - 2.0);
    }
    let mut a = Vec::with_capacity(offsets.len());
    for (i, &al) in offsets.iter().enumerate() {
        let n = (i + 2) as f64;
        let denom = n + al - 1.0;
        if !(denom > 0.0) {
            return Err(invalid(
                "a2",
                format!("n + alpha(n) - 1 = {denom} <= 0 at n = {}", i + 2),
            ));
        }
        a.push(-(1.0 / denom).ln_1p());
    }
    Ok(FirstTypeFixedPoint {
        k,
        coeffs: WaltersCoefficients::new(a),
        offsets,
    })
}

/// `R a` at every `n` with `kn - c_1` within `a`.
pub fn renorm2_apply(a: &WaltersCoefficients, ds: &DigitSystem) -> Result<WaltersCoefficients> {
    let k = ds.k() as usize;
    let c1 = ds.digits()[0] as usize;
    let n_out = (a.max_index() + c1) / k;
    if n_out < 2 {
        return Err(Error::MissingIndex { index: 2 * k - c1 });
    }
    renorm2_apply_upto(a, ds, n_out)
}

pub fn renorm2_apply_upto(a: &WaltersCoefficients, ds: &DigitSystem, n_out: usize) -> Result<WaltersCoefficients> {
    if n_out < 2 {
        return Err(invalid("n_out", format!("{n_out} < 2")));
    }
    let k = ds.k() as usize;
    a.require(k * n_out - ds.digits()[0] as usize)?;
    let out = (2..=n_out)
        .map(|n| {
            ds.digits()
                .iter()
                .map(|&c| a.get(k * n - c as usize).expect("checked"))
                .collect::<NeumaierSum>()
                .sum()
        })
        .collect();
    Ok(WaltersCoefficients { a: out, b: a.b, d: a.d })
}

/// All `l^N` sums `b_0 + b_1 k + .. + b_{N-1} k^{N-1}` with digits `b_i`,
/// sorted, with multiplicity.
pub fn renorm2_digit_indices(ds: &DigitSystem, n: u32) -> Result<Vec<u64>> {
    if n == 0 {
        return Err(invalid("N", "must be at least 1"));
    }
    let count = (ds.l() as u128).checked_pow(n).unwrap_or(u128::MAX);
    if count > DIGIT_INDEX_LIMIT {
        return Err(Error::EnumerationTooLarge {
            count,
            limit: DIGIT_INDEX_LIMIT,
        });
    }
    let k = ds.k() as u64;
    let mut out = vec![0u64];
    let mut place = 1u64;
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|&j| ds.digits().iter().map(move |&c| j + c as u64 * place))
            .collect();
        place *= k;
    }
    out.sort_unstable();
    Ok(out)
}

/// `(R^N a)_n = sum_j a_{k^N n - j}` over the digit indices of length `N`.
pub fn renorm2_power_apply(a: &WaltersCoefficients, ds: &DigitSystem, n: u32) -> Result<WaltersCoefficients> {
    let idx = renorm2_digit_indices(ds, n)?;
    let kn = (ds.k() as u64)
        .checked_pow(n)
        .ok_or_else(|| invalid("N", "k^N overflows"))? as usize;
    let j_min = idx[0] as usize;
    let n_out = (a.max_index() + j_min) / kn;
    if n_out < 2 {
        return Err(Error::MissingIndex { index: 2 * kn - j_min });
    }
    let out = (2..=n_out)
        .map(|m| {
            let mut acc = NeumaierSum::default();
            for &j in &idx {
                acc.add(a.require(kn * m - j as usize)?);
            }
            Ok(acc.sum())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(WaltersCoefficients { a: out, b: a.b, d: a.d })
}

/// Second-type fixed point `a_n = -I(n)` with per-index quadrature bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondTypeFixedPoint {
    pub ds: DigitSystem,
    pub alpha: f64,
    pub depth: u32,
    pub coeffs: WaltersCoefficients,
    /// `bounds[0]` bounds the error of `a_2`.
    pub bounds: Vec<f64>,
}

impl SecondTypeFixedPoint {
    /// Certified domination of `eta_n = exp(a_2 + .. + a_n)` past the stored
    /// range, from `I(n) >= n^-alpha`. `None` when `alpha = 1`, where `eta`
    /// is not summable.
    pub fn eta_bound(&self) -> Option<DominatingBound> {
        let theta = 1.0 - self.alpha;
        if theta <= 0.0 {
            return None;
        }
        Some(DominatingBound::Stretched {
            c: (2f64.powf(theta) / theta).exp(),
            rate: 1.0 / theta,
            theta,
        })
    }

    /// Largest `n` at which the fixed-point identity can be checked.
    pub fn verifiable_up_to(&self) -> usize {
        (self.coeffs.max_index() + self.ds.digits()[0] as usize) / self.ds.k() as usize
    }
}

pub fn renorm2_fixed_point(ds: &DigitSystem, n_max: usize, depth: u32) -> Result<SecondTypeFixedPoint> {
    if n_max < 2 {
        return Err(invalid("n_max", format!("{n_max} < 2")));
    }
    let cm = CantorMeasure::new(ds.clone());
    let rule = cm.rule(depth)?;
    let vals = (2..=n_max)
        .into_par_iter()
        .map(|n| rule.integrate(n as f64))
        .collect::<Result<Vec<_>>>()?;
    Ok(SecondTypeFixedPoint {
        ds: ds.clone(),
        alpha: cm.alpha,
        depth,
        coeffs: WaltersCoefficients::new(vals.iter().map(|c| -c.value).collect()),
        bounds: vals.iter().map(|c| c.error).collect(),
    })
}

/// `sup_n |a_n - (Ra)_n|` over the verifiable range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub absolute: f64,
    pub relative: f64,
    pub worst_index: usize,
    pub checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualRow {
    pub n: usize,
    pub a: f64,
    pub ra: f64,
    pub residual: f64,
}

pub fn residual_rows(a: &WaltersCoefficients, op: &Operator) -> Result<Vec<ResidualRow>> {
    let ra = op.apply(a)?;
    Ok(ra
        .iter()
        .map(|(n, r)| {
            let an = a.get(n).expect("image range lies inside the input");
            ResidualRow {
                n,
                a: an,
                ra: r,
                residual: (an - r).abs(),
            }
        })
        .collect())
}

pub fn residual(a: &WaltersCoefficients, op: &Operator) -> Result<Residual> {
    let rows = residual_rows(a, op)?;
    let mut out = Residual {
        absolute: 0.0,
        relative: 0.0,
        worst_index: 2,
        checked: rows.len(),
    };
    for r in &rows {
        if r.residual > out.absolute {
            out.absolute = r.residual;
            out.worst_index = r.n;
        }
        if r.a != 0.0 {
            out.relative = out.relative.max(r.residual / r.a.abs());
        } else if r.residual > 0.0 {
            out.relative = f64::INFINITY;
        }
    }
    Ok(out)
}

/// Least-squares fit of `log eta_n = c - gamma log n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub gamma: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub max_abs_residual: f64,
    /// Largest residual relative to the span of `log eta` over the range.
    pub relative_residual: f64,
    pub is_power_law: bool,
    pub range: (usize, usize),
}

/// Relative residual above which the fit is not a power law.
pub const POWER_LAW_TOLERANCE: f64 = 0.01;

/// `values[0]` is `eta_1`; `range` is inclusive in `n`.
pub fn estimate_gamma(values: &[f64], range: (usize, usize)) -> Result<GammaFit> {
    let (lo, hi) = range;
    if lo < 1 || hi > values.len() || hi < lo + 2 {
        return Err(Error::Degenerate(format!(
            "fit range [{lo}, {hi}] needs three points within 1..={}",
            values.len()
        )));
    }
    let mut pts = Vec::with_capacity(hi - lo + 1);
    for n in lo..=hi {
        let v = values[n - 1];
        if !(v > 0.0) {
            return Err(Error::NonPositive { index: n, value: v });
        }
        pts.push(((n as f64).ln(), v.ln()));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_abs_residual = pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).abs())
        .fold(0.0, f64::max);
    let span = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
        - pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let relative_residual = if span > 0.0 { max_abs_residual / span } else { 0.0 };
    let r_squared = if syy > 0.0 { (sxy * sxy) / (sxx * syy) } else { 1.0 };
    Ok(GammaFit {
        gamma: -slope,
        intercept,
        r_squared,
        max_abs_residual,
        relative_residual,
        is_power_law: relative_residual <= POWER_LAW_TOLERANCE,
        range,
    })
}

impl FromStr for Operator {
    type Err = Error;
    /// `type1:k` or `type2:k:c1,c2,..`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let k = |t: &str| t.parse::<u32>().map_err(|e| invalid("k", e.to_string()));
        match parts.as_slice() {
            ["type1", kk] => Ok(Operator::FirstType { k: k(kk)? }),
            ["type2", kk, d] => Ok(Operator::SecondType {
                ds: DigitSystem::parse(k(kk)?, d)?,
            }),
            _ => Err(invalid("operator", format!("unrecognised '{s}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq::{eta_values_from_coeffs, EtaSequence, Family};
    use std::f64::consts::LN_2;

    fn hofbauer(n_max: usize) -> WaltersCoefficients {
        WaltersCoefficients::new((2..=n_max).map(|n| -((n as f64) / (n as f64 - 1.0)).ln()).collect())
    }

    #[test]
    fn digit_system_validation() {
        assert!(DigitSystem::new(1, vec![0, 1]).is_err());
        assert!(DigitSystem::new(3, vec![0]).is_err());
        assert!(DigitSystem::new(3, vec![2, 0]).is_err());
        assert!(DigitSystem::new(3, vec![0, 4]).is_err());
        assert!(DigitSystem::new(3, vec![0, 1, 2, 3]).is_err());
        assert!(DigitSystem::new(2, vec![0, 2]).is_ok());
        let ds = DigitSystem::parse(5, "0, 3").unwrap();
        assert!((ds.hausdorff_alpha() - 0.430_676_558_073_393).abs() < 1e-12);
        let json = serde_json::to_string(&ds).unwrap();
        assert_eq!(serde_json::from_str::<DigitSystem>(&json).unwrap(), ds);
        assert!(serde_json::from_str::<DigitSystem>(r#"{"k":3,"digits":[2,1]}"#).is_err());
    }

    #[test]
    fn first_type_examples() {
        let a = hofbauer(100);
        let r = renorm1_apply(&a, 2).unwrap();
        assert!((r.get(2).unwrap() + LN_2).abs() < 1e-15);
        let r3 = renorm1_apply(&a, 3).unwrap();
        assert!((r3.get(2).unwrap() + 2.5f64.ln()).abs() < 1e-15);
        let zero = renorm1_apply(&WaltersCoefficients::new(vec![0.0; 50]), 2).unwrap();
        assert!(zero.a.iter().all(|&v| v == 0.0));
        assert!(matches!(
            renorm1_apply_upto(&a, 2, 60),
            Err(Error::MissingIndex { index: 120 })
        ));
    }

    #[test]
    fn first_type_fixed_points() {
        let fp = renorm1_fixed_point(2, -LN_2, 1000).unwrap();
        assert!(fp.offsets.iter().all(|&x| x.abs() < 1e-15));
        let eta = eta_values_from_coeffs(&fp.coeffs);
        assert!((eta[999] - 1e-3).abs() < 1e-15);

        let fp = renorm1_fixed_point(2, -3f64.ln(), 100).unwrap();
        assert!((fp.offsets[0] + 0.5).abs() < 1e-15);
        assert!((fp.coeffs.get(3).unwrap() + LN_2).abs() < 1e-15);
        assert!((fp.coeffs.get(4).unwrap() + 1.5f64.ln()).abs() < 1e-15);

        for k in 2..=4 {
            for a2 in [-LN_2, -3f64.ln()] {
                let fp = renorm1_fixed_point(k, a2, 10_000).unwrap();
                let r = residual(&fp.coeffs, &Operator::FirstType { k }).unwrap();
                assert!(r.absolute < 1e-12, "k={k} a2={a2}: {r:?}");
                assert!(r.checked >= 10_000 / k as usize - 1);
            }
        }
        assert!(renorm1_fixed_point(2, 0.0, 10).is_err());
        assert!(renorm1_fixed_point(2, 0.1, 10).is_err());
    }

    #[test]
    fn second_type_examples() {
        let ds = DigitSystem::new(3, vec![0, 2]).unwrap();
        let a = WaltersCoefficients::new((2..=30).map(|n| n as f64).collect());
        let r = renorm2_apply(&a, &ds).unwrap();
        assert_eq!(r.get(2), Some(10.0));
        let leb = DigitSystem::new(3, vec![0, 1, 2]).unwrap();
        let r = renorm2_apply(&hofbauer(30), &leb).unwrap();
        assert!((r.get(2).unwrap() + LN_2).abs() < 1e-15);
        assert!(renorm2_apply(&WaltersCoefficients::new(vec![0.0; 3]), &ds).is_err());
    }

    #[test]
    fn digit_indices() {
        let ds = DigitSystem::new(3, vec![0, 2]).unwrap();
        assert_eq!(renorm2_digit_indices(&ds, 1).unwrap(), vec![0, 2]);
        assert_eq!(renorm2_digit_indices(&ds, 2).unwrap(), vec![0, 2, 6, 8]);
        assert_eq!(renorm2_digit_indices(&ds, 3).unwrap(), vec![0, 2, 6, 8, 18, 20, 24, 26]);
        assert!(matches!(
            renorm2_digit_indices(&ds, 21),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    /// Composing the index maps `n -> kn - c` N times gives the same
    /// multiset as the digit expansion.
    #[test]
    fn digit_lemma_symbolic() {
        for ds in [
            DigitSystem::new(3, vec![0, 2]).unwrap(),
            DigitSystem::new(2, vec![0, 2]).unwrap(),
            DigitSystem::new(4, vec![1, 2, 4]).unwrap(),
        ] {
            let k = ds.k() as u64;
            for n in 1..=5u32 {
                if (ds.l() as u64).pow(n) > 4096 {
                    continue;
                }
                let m = 7u64;
                let mut idx = vec![m];
                for _ in 0..n {
                    idx = idx
                        .iter()
                        .flat_map(|&i| ds.digits().iter().map(move |&c| k * i - c as u64))
                        .collect();
                }
                let mut from_lemma: Vec<u64> = renorm2_digit_indices(&ds, n)
                    .unwrap()
                    .iter()
                    .map(|j| k.pow(n) * m - j)
                    .collect();
                idx.sort_unstable();
                from_lemma.sort_unstable();
                assert_eq!(idx, from_lemma, "{ds} N={n}");
            }
        }
    }

    #[test]
    fn digit_lemma_numeric() {
        // integer-valued coefficients make every sum exact
        let ds = DigitSystem::new(3, vec![0, 2]).unwrap();
        let a = WaltersCoefficients::new((2..=3000).map(|n| ((n * 7919) % 101) as f64 - 50.0).collect());
        for n in 1..=5u32 {
            let mut iter = a.clone();
            for _ in 0..n {
                iter = renorm2_apply(&iter, &ds).unwrap();
            }
            let once = renorm2_power_apply(&a, &ds, n).unwrap();
            let common = iter.a.len().min(once.a.len());
            assert!(common > 0);
            assert_eq!(&iter.a[..common], &once.a[..common], "N={n}");
        }
    }

    #[test]
    fn second_type_lebesgue_closed_form() {
        let ds = DigitSystem::new(3, vec![0, 1, 2]).unwrap();
        let fp = renorm2_fixed_point(&ds, 200, 20).unwrap();
        let exact = hofbauer(200);
        for (x, y) in fp.coeffs.a.iter().zip(&exact.a) {
            assert!((x - y).abs() < 1e-8);
        }
        assert!(fp.eta_bound().is_none());
    }

    #[test]
    fn second_type_residual_within_bounds() {
        let ds = DigitSystem::new(3, vec![0, 2]).unwrap();
        let fp = renorm2_fixed_point(&ds, 400, 14).unwrap();
        let rows = residual_rows(&fp.coeffs, &Operator::SecondType { ds: ds.clone() }).unwrap();
        assert_eq!(rows.len(), fp.verifiable_up_to() - 1);
        for r in rows {
            assert!(r.residual <= 3.0 * fp.bounds[r.n - 2], "{r:?}");
        }
    }

    #[test]
    fn residual_sensitivity() {
        let mut fp = renorm1_fixed_point(2, -LN_2, 200).unwrap().coeffs;
        fp.a[10] += 1e-3;
        let r = residual(&fp, &Operator::FirstType { k: 2 }).unwrap();
        assert!(r.absolute >= 1e-3 - 1e-15);
        let zero = WaltersCoefficients::new(vec![0.0; 100]);
        assert_eq!(residual(&zero, &Operator::FirstType { k: 3 }).unwrap().absolute, 0.0);
    }

    #[test]
    fn gamma_estimates() {
        let p3 = EtaSequence::new(Family::Power { gamma: 3.0 }, 1000).unwrap();
        let fit = estimate_gamma(p3.values(), (10, 1000)).unwrap();
        assert!((fit.gamma - 3.0).abs() < 0.01 && fit.is_power_law);
        let fp = renorm1_fixed_point(2, -LN_2, 1000).unwrap();
        let fit = estimate_gamma(&eta_values_from_coeffs(&fp.coeffs), (10, 1000)).unwrap();
        assert!((fit.gamma - 1.0).abs() < 0.01 && fit.is_power_law);
        let st = EtaSequence::new(Family::Stretched { theta: 0.5 }, 1000).unwrap();
        let fit = estimate_gamma(st.values(), (10, 1000)).unwrap();
        assert!(!fit.is_power_law, "{fit:?}");
        assert!(estimate_gamma(p3.values(), (10, 11)).is_err());
    }

    #[test]
    fn operator_parse() {
        assert_eq!("type1:3".parse::<Operator>().unwrap(), Operator::FirstType { k: 3 });
        assert!(matches!(
            "type2:3:0,2".parse::<Operator>().unwrap(),
            Operator::SecondType { .. }
        ));
        assert!("type3:2".parse::<Operator>().is_err());
    }
}
