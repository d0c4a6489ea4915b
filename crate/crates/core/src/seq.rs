//! Weight sequences `eta_n`, their tails and the conversions to and from
//! Walters coefficients.
//!
//! An [`EtaSequence`] stores `eta_1..eta_N` explicitly and carries a tail
//! model that bounds everything beyond `N`. All derived quantities
//! (`T(m)`, the double tail `D(q)`, first moments) are certified: the
//! reported error covers both the analytic remainder and floating-point
//! rounding.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ui;

use crate::certified::{rounding_allowance, Certified};
use crate::error::{invalid, Error, Result};
use crate::summation::NeumaierSum;

/// Smallest accepted explicit cutoff.
pub const MIN_N_MAX: usize = 8;

/// Upper bound on `eta_n` valid for every `n > n_max` of a custom sequence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DominatingBound {
    /// `eta_n <= c * ratio^n`
    Geometric { c: f64, ratio: f64 },
    /// `eta_n <= c * n^-gamma`
    Power { c: f64, gamma: f64 },
    /// `eta_n <= c * exp(-rate * n^theta)`
    Stretched { c: f64, rate: f64, theta: f64 },
    /// Remainders known in closed form: `tail = sum_{n>N} eta_n` and
    /// `double_tail = sum_{n>N} (n-N) eta_n`.
    Known { tail: f64, double_tail: f64 },
}

/// Analytic family that generates the sequence or bounds its tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
pub enum Family {
    /// `eta_n = n^-gamma`
    Power { gamma: f64 },
    /// `eta_n = exp(-n^theta)`
    Stretched { theta: f64 },
    /// `eta_n = ratio^(n-1)`
    Geometric { ratio: f64 },
    /// Explicit values with a dominating tail bound.
    Custom { bound: DominatingBound },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Power { .. } => "power",
            Family::Stretched { .. } => "stretched",
            Family::Geometric { .. } => "geometric",
            Family::Custom { .. } => "custom",
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Family::Power { gamma } => {
                if !gamma.is_finite() {
                    return Err(invalid("gamma", "must be finite"));
                }
                if gamma <= 1.0 {
                    return Err(Error::NotSummable(format!("power family with gamma = {gamma} <= 1")));
                }
            }
            Family::Stretched { theta } => {
                if !(theta > 0.0 && theta < 1.0) {
                    return Err(invalid("theta", format!("{theta} is not in (0, 1)")));
                }
            }
            Family::Geometric { ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(invalid("ratio", format!("{ratio} is not in (0, 1)")));
                }
            }
            Family::Custom { bound } => match bound {
                DominatingBound::Geometric { c, ratio } => {
                    if !(c > 0.0 && ratio > 0.0 && ratio < 1.0) {
                        return Err(invalid("bound", "geometric bound needs c > 0, 0 < ratio < 1"));
                    }
                }
                DominatingBound::Power { c, gamma } => {
                    if !(c > 0.0) {
                        return Err(invalid("bound", "power bound needs c > 0"));
                    }
                    if gamma <= 1.0 {
                        return Err(Error::NotSummable(format!("power bound with gamma = {gamma} <= 1")));
                    }
                }
                DominatingBound::Stretched { c, rate, theta } => {
                    if !(c > 0.0 && rate > 0.0 && theta > 0.0 && theta <= 1.0) {
                        return Err(invalid(
                            "bound",
                            "stretched bound needs c > 0, rate > 0, 0 < theta <= 1",
                        ));
                    }
                }
                DominatingBound::Known { tail, double_tail } => {
                    if !(tail >= 0.0 && tail.is_finite()) || double_tail < 0.0 {
                        return Err(invalid("bound", "known remainders must be nonnegative"));
                    }
                }
            },
        }
        Ok(())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Power { gamma } => write!(f, "power:{gamma}"),
            Family::Stretched { theta } => write!(f, "stretched:{theta}"),
            Family::Geometric { ratio } => write!(f, "geometric:{ratio}"),
            Family::Custom { .. } => write!(f, "custom"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    /// Parses `power:3`, `stretched:0.5`, `geometric:0.5`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = s
            .split_once(':')
            .ok_or_else(|| invalid("family", format!("expected <name>:<param>, got `{s}`")))?;
        let value: f64 = param
            .trim()
            .parse()
            .map_err(|_| invalid("family", format!("cannot parse parameter `{param}`")))?;
        let family = match name.trim() {
            "power" => Family::Power { gamma: value },
            "stretched" => Family::Stretched { theta: value },
            "geometric" => Family::Geometric { ratio: value },
            other => return Err(invalid("family", format!("unknown family `{other}`"))),
        };
        family.validate()?;
        Ok(family)
    }
}

/// Unscaled generating function used for remainders past the cutoff.
#[derive(Debug, Clone, Copy)]
enum Model {
    Power {
        gamma: f64,
    },
    /// `exp(-rate * x^theta)`
    Stretched {
        rate: f64,
        theta: f64,
    },
    /// `ratio^(x-1)`
    Geometric {
        ratio: f64,
    },
    Bound(DominatingBound),
}

impl Model {
    fn of(family: Family) -> Self {
        match family {
            Family::Power { gamma } => Model::Power { gamma },
            Family::Stretched { theta } => Model::Stretched { rate: 1.0, theta },
            Family::Geometric { ratio } => Model::Geometric { ratio },
            Family::Custom { bound } => Model::Bound(bound),
        }
    }

    fn eval(&self, n: f64) -> Option<f64> {
        match *self {
            Model::Power { gamma } => Some(n.powf(-gamma)),
            Model::Stretched { rate, theta } => Some((-rate * n.powf(theta)).exp()),
            Model::Geometric { ratio } => Some(ratio.powf(n - 1.0)),
            Model::Bound(_) => None,
        }
    }

    /// `|f'(x)|` for the analytic families.
    fn slope(&self, x: f64) -> f64 {
        match *self {
            Model::Power { gamma } => gamma * x.powf(-gamma - 1.0),
            Model::Stretched { rate, theta } => rate * theta * x.powf(theta - 1.0) * (-rate * x.powf(theta)).exp(),
            Model::Geometric { ratio } => -ratio.ln() * ratio.powf(x - 1.0),
            Model::Bound(_) => f64::NAN,
        }
    }

    /// `int_x^inf f`
    fn integral0(&self, x: f64) -> f64 {
        match *self {
            Model::Power { gamma } => x.powf(1.0 - gamma) / (gamma - 1.0),
            Model::Stretched { rate, theta } => stretched_moment(rate, theta, 1.0, x),
            Model::Geometric { ratio } => -ratio.powf(x - 1.0) / ratio.ln(),
            Model::Bound(_) => f64::NAN,
        }
    }

    /// `int_x^inf (t - x) f(t) dt`
    fn integral1(&self, x: f64) -> Option<f64> {
        match *self {
            Model::Power { gamma } => (gamma > 2.0).then(|| x.powf(2.0 - gamma) / ((gamma - 1.0) * (gamma - 2.0))),
            Model::Stretched { rate, theta } => {
                Some(stretched_moment(rate, theta, 2.0, x) - x * stretched_moment(rate, theta, 1.0, x))
            }
            Model::Geometric { ratio } => {
                let l = ratio.ln();
                Some(ratio.powf(x - 1.0) / (l * l))
            }
            Model::Bound(_) => None,
        }
    }

    /// `sum_{m > n} f(m)`.
    fn remainder0(&self, n: usize) -> Certified {
        let nf = n as f64;
        match *self {
            Model::Geometric { ratio } => {
                let v = ratio.powf(nf) / (1.0 - ratio);
                Certified::new(v, 4.0 * f64::EPSILON * v)
            }
            Model::Power { .. } | Model::Stretched { .. } => {
                // Midpoint rule on a convex decreasing function.
                let h = nf + 0.5;
                let e = self.slope(h) / 48.0;
                let v = self.integral0(h) - e;
                Certified::new(v, e + 8.0 * f64::EPSILON * v.abs())
            }
            Model::Bound(b) => match b {
                DominatingBound::Known { tail, .. } => Certified::exact(tail),
                _ => Certified::bracket(0.0, bound_remainder0(b, nf)),
            },
        }
    }

    /// `sum_{m > n} (m - n) f(m)`; `None` when the first moment diverges.
    fn remainder1(&self, n: usize) -> Option<Certified> {
        let nf = n as f64;
        match *self {
            Model::Geometric { ratio } => {
                let v = ratio.powf(nf) / ((1.0 - ratio) * (1.0 - ratio));
                Some(Certified::new(v, 4.0 * f64::EPSILON * v))
            }
            Model::Power { .. } | Model::Stretched { .. } => {
                let f1 = self.integral1(nf)?;
                let h = nf + 0.5;
                let c = (self.eval(nf)? + self.eval(h)? + self.slope(h)) / 24.0;
                let v = f1 - 0.5 * c;
                Some(Certified::new(v, 0.5 * c + 16.0 * f64::EPSILON * v.abs()))
            }
            Model::Bound(b) => match b {
                DominatingBound::Known { double_tail, .. } => {
                    double_tail.is_finite().then_some(Certified::exact(double_tail))
                }
                _ => {
                    let hi = bound_remainder1(b, nf)?;
                    Some(Certified::bracket(0.0, hi))
                }
            },
        }
    }

    /// Model for `f^beta`, if it stays summable.
    fn powered(&self, beta: f64) -> Option<Model> {
        let m = match *self {
            Model::Power { gamma } => Model::Power { gamma: gamma * beta },
            Model::Stretched { rate, theta } => Model::Stretched {
                rate: rate * beta,
                theta,
            },
            Model::Geometric { ratio } => Model::Geometric {
                ratio: ratio.powf(beta),
            },
            Model::Bound(b) => Model::Bound(match b {
                DominatingBound::Geometric { c, ratio } => DominatingBound::Geometric {
                    c: c.powf(beta),
                    ratio: ratio.powf(beta),
                },
                DominatingBound::Power { c, gamma } => DominatingBound::Power {
                    c: c.powf(beta),
                    gamma: gamma * beta,
                },
                DominatingBound::Stretched { c, rate, theta } => DominatingBound::Stretched {
                    c: c.powf(beta),
                    rate: rate * beta,
                    theta,
                },
                DominatingBound::Known { .. } => return None,
            }),
        };
        let summable = match m {
            Model::Power { gamma } | Model::Bound(DominatingBound::Power { gamma, .. }) => gamma > 1.0,
            _ => true,
        };
        summable.then_some(m)
    }

    fn first_moment_finite(&self) -> bool {
        match *self {
            Model::Power { gamma } | Model::Bound(DominatingBound::Power { gamma, .. }) => gamma > 2.0,
            Model::Bound(DominatingBound::Known { double_tail, .. }) => double_tail.is_finite(),
            _ => true,
        }
    }
}

/// `int_x^inf t^(p-1) exp(-rate t^theta) dt`, via the upper incomplete gamma
/// function.
fn stretched_moment(rate: f64, theta: f64, p: f64, x: f64) -> f64 {
    let s = p / theta;
    let z = rate * x.powf(theta);
    if z > 740.0 {
        return 0.0;
    }
    gamma_ui(s, z) / (theta * rate.powf(s))
}

fn bound_remainder0(b: DominatingBound, n: f64) -> f64 {
    match b {
        DominatingBound::Geometric { c, ratio } => c * ratio.powf(n + 1.0) / (1.0 - ratio),
        DominatingBound::Power { c, gamma } => c * n.powf(1.0 - gamma) / (gamma - 1.0),
        DominatingBound::Stretched { c, rate, theta } => c * stretched_moment(rate, theta, 1.0, n),
        DominatingBound::Known { tail, .. } => tail,
    }
}

fn bound_remainder1(b: DominatingBound, n: f64) -> Option<f64> {
    match b {
        DominatingBound::Geometric { c, ratio } => Some(c * ratio.powf(n + 1.0) / ((1.0 - ratio) * (1.0 - ratio))),
        DominatingBound::Power { c, gamma } => (gamma > 2.0)
            .then(|| c * (n.powf(2.0 - gamma) / ((gamma - 1.0) * (gamma - 2.0)) + n.powf(1.0 - gamma) / (gamma - 1.0))),
        // (m - n) g(m) <= int_{m-1}^{m} (x + 1 - n) g(x) dx for decreasing g
        DominatingBound::Stretched { c, rate, theta } => {
            let m1 = stretched_moment(rate, theta, 2.0, n);
            let m0 = stretched_moment(rate, theta, 1.0, n);
            Some(c * (m1 - (n - 1.0) * m0).max(0.0))
        }
        DominatingBound::Known { double_tail, .. } => double_tail.is_finite().then_some(double_tail),
    }
}

/// Positive, nonincreasing, summable weights `eta_1, eta_2, ...`.
///
/// Immutable after construction. Tails `T(m) = sum_{j>=m} eta_j` and double
/// tails `S(m) = sum_{j>=m} T(j)` are precomputed back to front for every
/// `m <= n_max + 1`.
#[derive(Debug, Clone)]
pub struct EtaSequence {
    family: Family,
    scale: f64,
    values: Vec<f64>,
    tails: Vec<f64>,
    tail_remainder: Certified,
    double_tails: Option<Vec<f64>>,
    double_tail_remainder: Option<Certified>,
}

impl EtaSequence {
    /// Build one of the analytic families with explicit values up to `n_max`.
    pub fn new(family: Family, n_max: usize) -> Result<Self> {
        if matches!(family, Family::Custom { .. }) {
            return Err(invalid("family", "custom sequences are built with EtaSequence::custom"));
        }
        family.validate()?;
        check_n_max(n_max)?;
        let model = Model::of(family);
        let values: Vec<f64> = (1..=n_max)
            .map(|n| model.eval(n as f64).expect("analytic family"))
            .collect();
        if let Some(i) = values.iter().position(|&v| v < f64::MIN_POSITIVE) {
            return Err(invalid(
                "n_max",
                format!("eta_{} underflows; n_max must be below {}", i + 1, i + 1),
            ));
        }
        Self::assemble(family, 1.0, values)
    }

    /// Explicit values `eta_1..eta_N` with a bound covering every `n > N`.
    pub fn custom(values: Vec<f64>, bound: DominatingBound) -> Result<Self> {
        let family = Family::Custom { bound };
        family.validate()?;
        check_n_max(values.len())?;
        if let Some((i, &v)) = values.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
            return Err(Error::NonPositive { index: i + 1, value: v });
        }
        check_monotone(&values)?;
        let n = values.len() as f64;
        let last = *values.last().expect("nonempty");
        let dominated = match bound {
            DominatingBound::Geometric { c, ratio } => last <= c * ratio.powf(n) * (1.0 + 1e-12),
            DominatingBound::Power { c, gamma } => last <= c * n.powf(-gamma) * (1.0 + 1e-12),
            DominatingBound::Stretched { c, rate, theta } => last <= c * (-rate * n.powf(theta)).exp() * (1.0 + 1e-12),
            DominatingBound::Known { .. } => true,
        };
        if !dominated {
            return Err(invalid(
                "bound",
                format!("eta_{} = {last:e} already exceeds the dominating bound", values.len()),
            ));
        }
        Self::assemble(family, 1.0, values)
    }

    fn assemble(family: Family, scale: f64, values: Vec<f64>) -> Result<Self> {
        check_monotone(&values)?;
        let n_max = values.len();
        let model = Model::of(family);
        let tail_remainder = model.remainder0(n_max).scale(scale);

        let mut tails = vec![0.0; n_max + 1];
        tails[n_max] = tail_remainder.value;
        for i in (0..n_max).rev() {
            tails[i] = values[i] + tails[i + 1];
        }

        let double_tail_remainder = if model.first_moment_finite() {
            model.remainder1(n_max).map(|c| c.scale(scale))
        } else {
            None
        };
        let double_tails = double_tail_remainder.map(|r| {
            let mut s = vec![0.0; n_max + 1];
            s[n_max] = r.value;
            for i in (0..n_max).rev() {
                s[i] = tails[i] + s[i + 1];
            }
            s
        });

        Ok(Self {
            family,
            scale,
            values,
            tails,
            tail_remainder,
            double_tails,
            double_tail_remainder,
        })
    }

    /// The same sequence multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(invalid("scale", format!("{c} must be positive and finite")));
        }
        let values = self.values.iter().map(|v| v * c).collect();
        Self::assemble(self.family, self.scale * c, values)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn scale_factor(&self) -> f64 {
        self.scale
    }

    pub fn n_max(&self) -> usize {
        self.values.len()
    }

    /// `eta_1..eta_N`, index 0 holding `eta_1`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn model(&self) -> Model {
        Model::of(self.family)
    }

    /// `eta_n`; past the cutoff only analytic families can answer.
    pub fn eta(&self, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(invalid("n", "indices start at 1"));
        }
        if n <= self.values.len() {
            return Ok(self.values[n - 1]);
        }
        self.model()
            .eval(n as f64)
            .map(|v| v * self.scale)
            .ok_or(Error::OutOfRange {
                index: n,
                n_max: self.n_max(),
            })
    }

    /// Certified `T(m) = sum_{j >= m} eta_j`.
    pub fn tail(&self, m: usize) -> Result<Certified> {
        if m == 0 {
            return Err(invalid("m", "indices start at 1"));
        }
        let n_max = self.n_max();
        if m <= n_max + 1 {
            let v = self.tails[m - 1];
            let err = self.tail_remainder.error + rounding_allowance(v, n_max + 2 - m);
            return Ok(Certified::new(v, err));
        }
        if let Family::Custom {
            bound: DominatingBound::Known { .. },
        } = self.family
        {
            return Err(Error::OutOfRange { index: m, n_max });
        }
        Ok(self.model().remainder0(m - 1).scale(self.scale))
    }

    /// `T(m)` with its error checked against `tol`.
    pub fn tail_within(&self, m: usize, tol: f64) -> Result<f64> {
        let c = self.tail(m)?;
        if c.error > tol {
            return Err(Error::ToleranceUnachievable {
                requested: tol,
                floor: c.error,
            });
        }
        Ok(c.value)
    }

    /// `T(q+1)/T(q)`; closed form for the geometric family once `T(q)` underflows.
    pub fn continue_ratio(&self, q: usize) -> Result<f64> {
        let t = self.tail(q)?.value;
        if t >= f64::MIN_POSITIVE {
            return Ok(self.tail(q + 1)?.value / t);
        }
        match self.family {
            Family::Geometric { ratio } => Ok(ratio),
            _ => Err(Error::Underflow { index: q }),
        }
    }

    /// `eta_q/T(q)`; closed form for the geometric family once `T(q)` underflows.
    pub fn hazard(&self, q: usize) -> Result<f64> {
        let t = self.tail(q)?.value;
        if t >= f64::MIN_POSITIVE {
            return Ok(self.eta(q)? / t);
        }
        match self.family {
            Family::Geometric { ratio } => Ok(1.0 - ratio),
            _ => Err(Error::Underflow { index: q }),
        }
    }

    /// `W = sum_n eta_n = T(1)`.
    pub fn total(&self) -> Certified {
        self.tail(1).expect("T(1) always exists")
    }

    /// `W(beta) = sum_n eta_n^beta`.
    pub fn total_powered(&self, beta: f64) -> Result<Certified> {
        if beta == 1.0 {
            return Ok(self.total());
        }
        self.powered_tail_from(0, beta)
    }

    /// Certified `sum_{m > n} eta_m^beta`.
    pub(crate) fn powered_tail_from(&self, n: usize, beta: f64) -> Result<Certified> {
        if !(beta > 0.0) {
            return Err(invalid("beta", "must be positive"));
        }
        let n_max = self.n_max();
        let remainder = self.powered_remainder(beta)?;
        if n >= n_max {
            return Err(Error::OutOfRange { index: n + 1, n_max });
        }
        let mut acc = NeumaierSum::default();
        for v in self.values[n..].iter().rev() {
            acc.add(v.powf(beta));
        }
        let explicit = acc.sum();
        let value = explicit + remainder.value;
        Ok(Certified::new(value, remainder.error + rounding_allowance(explicit, 4)))
    }

    /// `sum_{m > N} eta_m^beta`.
    pub(crate) fn powered_remainder(&self, beta: f64) -> Result<Certified> {
        let n_max = self.n_max();
        if let Family::Custom {
            bound: DominatingBound::Known { tail, .. },
        } = self.family
        {
            // eta_m^beta <= eta_N^(beta-1) eta_m for beta >= 1
            if beta >= 1.0 {
                let last = self.values[n_max - 1];
                return Ok(Certified::bracket(0.0, last.powf(beta - 1.0) * tail * self.scale));
            }
            return Err(Error::Divergent(format!(
                "no tail bound for eta^{beta} on a sequence with known remainders only"
            )));
        }
        let model = self
            .model()
            .powered(beta)
            .ok_or_else(|| Error::NotSummable(format!("eta^{beta} is not summable")))?;
        Ok(model.remainder0(n_max).scale(self.scale.powf(beta)))
    }

    pub fn first_moment_finite(&self) -> bool {
        self.double_tails.is_some()
    }

    /// Certified `D(q) = sum_{s>=1} sum_{k>=0} eta_{k+q+s} = sum_{m>q} (m-q) eta_m`.
    pub fn double_tail(&self, q: usize) -> Result<Certified> {
        let s = self.double_tails.as_ref().ok_or(Error::FirstMomentInfinite)?;
        let rem = self.double_tail_remainder.expect("set with double_tails");
        let n_max = self.n_max();
        if q < n_max + 1 {
            let v = s[q];
            let steps = n_max - q;
            let err = rem.error + steps as f64 * self.tail_remainder.error + rounding_allowance(v, 2 * steps + 2);
            return Ok(Certified::new(v, err));
        }
        if let Family::Custom {
            bound: DominatingBound::Known { .. },
        } = self.family
        {
            if q > n_max {
                return Err(Error::OutOfRange { index: q, n_max });
            }
        }
        self.model()
            .remainder1(q)
            .map(|c| c.scale(self.scale))
            .ok_or(Error::FirstMomentInfinite)
    }

    /// Point value of `D(q)`.
    pub(crate) fn d(&self, q: usize) -> f64 {
        self.double_tail(q).expect("double tail available").value
    }

    /// `sum_n n eta_n = sum_m T(m) = D(0)`.
    pub fn first_moment(&self) -> Result<Certified> {
        self.double_tail(0)
    }

    /// CSV rows `(n, eta, T, a)` with `a_1` left empty.
    pub fn rows(&self) -> Vec<(usize, f64, f64, Option<f64>)> {
        (1..=self.n_max())
            .map(|n| {
                let a = (n >= 2).then(|| log_ratio(self.values[n - 1], self.values[n - 2]));
                (n, self.values[n - 1], self.tails[n - 1], a)
            })
            .collect()
    }

    pub fn to_record(&self) -> EtaRecord {
        EtaRecord {
            family: self.family,
            scale: self.scale,
            n_max: self.n_max(),
            values: self.values.clone(),
        }
    }

    /// Rebuild from a serialized record. Analytic families are regenerated
    /// and must agree with the stored values.
    pub fn from_record(rec: &EtaRecord) -> Result<Self> {
        let seq = match rec.family {
            Family::Custom { bound } => EtaSequence::custom(rec.values.clone(), bound)?,
            family => EtaSequence::new(family, rec.n_max)?.scaled(rec.scale)?,
        };
        if seq.values.len() != rec.values.len()
            || seq
                .values
                .iter()
                .zip(&rec.values)
                .any(|(a, b)| (a - b).abs() > 1e-12 * a.abs())
        {
            return Err(invalid("values", "stored values disagree with the family"));
        }
        Ok(seq)
    }
}

/// JSON layout `{family, params, scale, n_max, values}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaRecord {
    #[serde(flatten)]
    pub family: Family,
    pub scale: f64,
    pub n_max: usize,
    pub values: Vec<f64>,
}

impl Serialize for EtaSequence {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_record().serialize(s)
    }
}

fn check_monotone(values: &[f64]) -> Result<()> {
    match values.windows(2).position(|w| w[1] > w[0]) {
        Some(i) => Err(Error::NotMonotone { index: i + 1 }),
        None => Ok(()),
    }
}

fn check_n_max(n_max: usize) -> Result<()> {
    if n_max < MIN_N_MAX {
        return Err(invalid("n_max", format!("{n_max} < {MIN_N_MAX}")));
    }
    Ok(())
}

/// `log(cur/prev)` computed as `log1p((cur - prev)/prev)`.
fn log_ratio(cur: f64, prev: f64) -> f64 {
    ((cur - prev) / prev).ln_1p()
}

/// Coefficients of a Walters potential in the symmetric model: `a_n` for
/// `n >= 2` (equal to `c_n`), and the constants `b = b_n` and `d = d_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaltersCoefficients {
    /// `a[0]` holds `a_2`.
    pub a: Vec<f64>,
    pub b: f64,
    pub d: f64,
}

impl WaltersCoefficients {
    pub fn new(a: Vec<f64>) -> Self {
        Self { a, b: 0.0, d: 0.0 }
    }

    pub fn with_b(mut self, b: f64) -> Self {
        self.b = b;
        self.d = b;
        self
    }

    /// `a_n` for `n >= 2`.
    pub fn get(&self, n: usize) -> Option<f64> {
        n.checked_sub(2).and_then(|i| self.a.get(i)).copied()
    }

    pub fn require(&self, n: usize) -> Result<f64> {
        self.get(n).ok_or(Error::MissingIndex { index: n })
    }

    /// Largest `n` with `a_n` stored (1 when empty).
    pub fn max_index(&self) -> usize {
        self.a.len() + 1
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.a.iter().enumerate().map(|(i, &v)| (i + 2, v))
    }
}

/// `a_n = log(eta_n / eta_{n-1})`, the inverse of [`eta_values_from_coeffs`].
///
/// Requires `eta_1 = 1` unless `rescale` is set.
pub fn coeffs_from_eta(eta: &EtaSequence, rescale: bool) -> Result<WaltersCoefficients> {
    let v = eta.values();
    if !rescale && (v[0] - 1.0).abs() > 4.0 * f64::EPSILON {
        return Err(invalid(
            "eta",
            format!("eta_1 = {} != 1; rescale first or pass the rescale flag", v[0]),
        ));
    }
    let a = v.windows(2).map(|w| log_ratio(w[1], w[0])).collect();
    Ok(WaltersCoefficients::new(a))
}

/// `eta_1 = 1`, `eta_q = exp(a_2 + ... + a_q)`.
pub fn eta_values_from_coeffs(coeffs: &WaltersCoefficients) -> Vec<f64> {
    let mut out = Vec::with_capacity(coeffs.a.len() + 1);
    out.push(1.0);
    let mut acc = NeumaierSum::default();
    for &a in &coeffs.a {
        acc.add(a);
        out.push(acc.sum().exp());
    }
    out
}

/// Certified version of [`eta_values_from_coeffs`]; the caller supplies the
/// bound for indices past the stored coefficients.
pub fn eta_from_coeffs(coeffs: &WaltersCoefficients, bound: DominatingBound) -> Result<EtaSequence> {
    EtaSequence::custom(eta_values_from_coeffs(coeffs), bound)
}

/// Target decay sequence `d_q` for [`inverse_design`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", content = "params", rename_all = "snake_case")]
pub enum DecayTarget {
    /// `d_q = q^-p`
    Power { p: f64 },
    /// `d_q = ratio^q`
    Geometric { ratio: f64 },
    /// Explicit `d_1, d_2, ...`, assumed to tend to zero past the list.
    Values(Vec<f64>),
}

impl FromStr for DecayTarget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = s
            .split_once(':')
            .ok_or_else(|| invalid("target", format!("expected <name>:<param>, got `{s}`")))?;
        let value: f64 = param
            .trim()
            .parse()
            .map_err(|_| invalid("target", format!("cannot parse parameter `{param}`")))?;
        match name.trim() {
            "power" if value > 0.0 => Ok(DecayTarget::Power { p: value }),
            "geometric" if value > 0.0 && value < 1.0 => Ok(DecayTarget::Geometric { ratio: value }),
            "power" | "geometric" => Err(invalid("target", format!("parameter {value} out of range"))),
            other => Err(invalid("target", format!("unknown target `{other}`"))),
        }
    }
}

impl DecayTarget {
    /// `d_q` for `q >= 1`, if available.
    pub fn value(&self, q: usize) -> Option<f64> {
        match self {
            DecayTarget::Power { p } => Some((q as f64).powf(-p)),
            DecayTarget::Geometric { ratio } => Some(ratio.powi(q as i32)),
            DecayTarget::Values(v) => q.checked_sub(1).and_then(|i| v.get(i)).copied(),
        }
    }
}

/// Result of the inverse construction: the weights and the empirically
/// verified index shift `delta` with `D(q) = d_{q + delta}`.
#[derive(Debug, Clone)]
pub struct InverseDesign {
    pub eta: EtaSequence,
    pub target: DecayTarget,
    pub shift: usize,
    /// Max relative error of `D(q)` against `d_{q+shift}` over the checked range.
    pub max_rel_err: f64,
    pub checked: (usize, usize),
}

/// Weights whose double tail reproduces a prescribed decay sequence:
/// `c_n = d_n - d_{n+1}`, `eta_r = c_r - c_{r+1}`.
pub fn inverse_design(target: &DecayTarget, n_max: usize) -> Result<InverseDesign> {
    check_n_max(n_max)?;
    let eta = match *target {
        DecayTarget::Geometric { ratio } => {
            // eta_r = ratio^r (1 - ratio)^2 is itself geometric
            let s = ratio * (1.0 - ratio) * (1.0 - ratio);
            EtaSequence::new(Family::Geometric { ratio }, n_max)?.scaled(s)?
        }
        DecayTarget::Power { .. } => {
            let values = second_differences(target, n_max)?;
            let d = |q: usize| target.value(q).expect("analytic target");
            // telescoping: sum_{r>N} eta_r = c_{N+1} and sum_{j>N} T(j) = d_{N+1}
            let tail = d(n_max + 1) - d(n_max + 2);
            EtaSequence::custom(
                values,
                DominatingBound::Known {
                    tail,
                    double_tail: d(n_max + 1),
                },
            )?
        }
        DecayTarget::Values(ref d) => {
            if d.len() < MIN_N_MAX + 2 {
                return Err(invalid("target", "too few values"));
            }
            let n = n_max.min(d.len() - 2);
            let values = second_differences(target, n)?;
            let tail = d[n] - d[n + 1];
            let double_tail = d[n];
            EtaSequence::custom(values, DominatingBound::Known { tail, double_tail })?
        }
    };

    let n = eta.n_max();
    let hi = match target {
        DecayTarget::Values(d) => n.min(d.len() - 1),
        _ => n,
    };
    let lo = 1;
    let mut errs = [0.0f64; 2];
    for q in lo..hi {
        let dq = eta.d(q);
        for (shift, e) in errs.iter_mut().enumerate() {
            if let Some(t) = target.value(q + shift) {
                *e = e.max(((dq - t) / t).abs());
            }
        }
    }
    let shift = if errs[1] <= errs[0] { 1 } else { 0 };
    Ok(InverseDesign {
        eta,
        target: target.clone(),
        shift,
        max_rel_err: errs[shift],
        checked: (lo, hi - 1),
    })
}

fn second_differences(target: &DecayTarget, n: usize) -> Result<Vec<f64>> {
    let d: Vec<f64> = (1..=n + 2)
        .map(|q| target.value(q).ok_or(Error::MissingIndex { index: q }))
        .collect::<Result<_>>()?;
    for (i, w) in d.windows(2).enumerate() {
        if !(w[1] < w[0]) || !(w[1] > 0.0) {
            return Err(Error::NotMonotone { index: i + 1 });
        }
    }
    let mut values = Vec::with_capacity(n);
    for r in 0..n {
        let v = d[r] - 2.0 * d[r + 1] + d[r + 2];
        if !(v > 0.0) {
            return Err(Error::NonPositive { index: r + 1, value: v });
        }
        values.push(v);
    }
    Ok(values)
}
