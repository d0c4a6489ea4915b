//! The potential `g`, the eigenfunction of its Ruelle operator, the
//! eigenmeasure `rho`, the equilibrium measure `mu` and the normalized
//! Jacobian, all written in terms of an [`EtaSequence`].
//!
//! Both symbols play identical roles, so every function treats `R(q)` like
//! `L(q)` and `Ioi(q)` like `Olo(q)`.

use serde::{Deserialize, Serialize};

use crate::certified::Certified;
use crate::error::{invalid, Error, Result};
use crate::seq::EtaSequence;

/// A point of `{0,1}^N`, described up to the information `g`, `phi` and `J`
/// depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymbolicPoint {
    /// `0^q 1 ...`
    L(usize),
    /// `1^q 0 ...`
    R(usize),
    /// `0 1^q 0 ...`
    Olo(usize),
    /// `1 0^q 1 ...`
    Ioi(usize),
    /// `0^inf`
    Zeros,
    /// `1^inf`
    Ones,
    /// `0 1^inf`
    ZeroOnes,
    /// `1 0^inf`
    OneZeros,
}

impl SymbolicPoint {
    fn validate(self) -> Result<Self> {
        match self {
            SymbolicPoint::L(0) | SymbolicPoint::R(0) | SymbolicPoint::Olo(0) | SymbolicPoint::Ioi(0) => {
                Err(invalid("point", "run length must be at least 1"))
            }
            p => Ok(p),
        }
    }

    /// Length of the leading run, `None` for the two fixed points.
    pub fn leading_run(self) -> Option<usize> {
        match self {
            SymbolicPoint::L(q) | SymbolicPoint::R(q) => Some(q),
            SymbolicPoint::Olo(_) | SymbolicPoint::Ioi(_) | SymbolicPoint::ZeroOnes | SymbolicPoint::OneZeros => {
                Some(1)
            }
            SymbolicPoint::Zeros | SymbolicPoint::Ones => None,
        }
    }

    /// Image under the shift, when it is again representable.
    pub fn shift(self) -> Option<SymbolicPoint> {
        match self {
            SymbolicPoint::L(q) if q >= 2 => Some(SymbolicPoint::L(q - 1)),
            SymbolicPoint::R(q) if q >= 2 => Some(SymbolicPoint::R(q - 1)),
            SymbolicPoint::Olo(q) => Some(SymbolicPoint::R(q)),
            SymbolicPoint::Ioi(q) => Some(SymbolicPoint::L(q)),
            SymbolicPoint::Zeros | SymbolicPoint::OneZeros => Some(SymbolicPoint::Zeros),
            SymbolicPoint::Ones | SymbolicPoint::ZeroOnes => Some(SymbolicPoint::Ones),
            _ => None,
        }
    }

    /// The same point with the symbols swapped.
    pub fn flip(self) -> SymbolicPoint {
        match self {
            SymbolicPoint::L(q) => SymbolicPoint::R(q),
            SymbolicPoint::R(q) => SymbolicPoint::L(q),
            SymbolicPoint::Olo(q) => SymbolicPoint::Ioi(q),
            SymbolicPoint::Ioi(q) => SymbolicPoint::Olo(q),
            SymbolicPoint::Zeros => SymbolicPoint::Ones,
            SymbolicPoint::Ones => SymbolicPoint::Zeros,
            SymbolicPoint::ZeroOnes => SymbolicPoint::OneZeros,
            SymbolicPoint::OneZeros => SymbolicPoint::ZeroOnes,
        }
    }
}

/// `g_beta(x)`: `beta a_q` on `L_q`, `R_q` (`q >= 2`), `-log W(beta)` on
/// `L_1`, `R_1`, zero at the two fixed points.
pub fn g_value(p: SymbolicPoint, beta: f64, eta: &EtaSequence) -> Result<f64> {
    match p.validate()? {
        SymbolicPoint::Zeros | SymbolicPoint::Ones => Ok(0.0),
        SymbolicPoint::L(q) | SymbolicPoint::R(q) if q >= 2 => {
            let a = ((eta.eta(q)? - eta.eta(q - 1)?) / eta.eta(q - 1)?).ln_1p();
            Ok(beta * a)
        }
        _ => Ok(-eta.total_powered(beta)?.value.ln()),
    }
}

/// `r(q) = T(q) / eta_q`, the eigenfunction at `beta = 1` on `L_q`.
pub fn r(q: usize, eta: &EtaSequence) -> Result<f64> {
    Ok(eta.tail(q)?.value / eta.eta(q)?)
}

/// Eigenfunction `phi_beta(0^n 1 ...) = 1 + eta_n^-beta sum_{j>=1} eta_{n+j}^beta lambda^-j`,
/// with both normalizing constants set to one.
///
/// No eigenvalue search is done; `lambda` is supplied by the caller.
pub fn eigenfunction(p: SymbolicPoint, beta: f64, lambda: f64, eta: &EtaSequence, tol: f64) -> Result<f64> {
    let Some(n) = p.validate()?.leading_run() else {
        return Ok(1.0);
    };
    if !(lambda >= 1.0) {
        return Err(invalid("lambda", format!("{lambda} < 1")));
    }
    if !(beta > 0.0) {
        return Err(invalid("beta", "must be positive"));
    }
    let series = eigen_series(n, beta, lambda, eta)?;
    let scale = eta.eta(n)?.powf(beta);
    if series.error / scale > tol {
        return Err(Error::ToleranceUnachievable {
            requested: tol,
            floor: series.error / scale,
        });
    }
    Ok(1.0 + series.value / scale)
}

/// `sum_{j>=1} eta_{n+j}^beta lambda^-j`
fn eigen_series(n: usize, beta: f64, lambda: f64, eta: &EtaSequence) -> Result<Certified> {
    if beta == 1.0 && lambda == 1.0 {
        return eta.tail(n + 1);
    }
    let n_max = eta.n_max();
    if n >= n_max {
        return Err(Error::OutOfRange { index: n + 1, n_max });
    }
    let values = eta.values();
    let mut explicit = 0.0;
    for m in (n + 1..=n_max).rev() {
        explicit += values[m - 1].powf(beta) * lambda.powf(-((m - n) as f64));
    }
    let remainder = if lambda == 1.0 {
        eta.powered_remainder(beta)
            .map_err(|_| Error::Divergent(format!("sum of eta^{beta} diverges at lambda = 1")))?
    } else {
        let damp = lambda.powf(-((n_max + 1 - n) as f64));
        let geometric = values[n_max - 1].powf(beta) / (1.0 - 1.0 / lambda);
        let ub = match eta.powered_remainder(beta) {
            Ok(c) => c.hi().min(geometric),
            Err(_) => geometric,
        };
        Certified::bracket(0.0, damp * ub)
    };
    Ok(Certified::new(
        explicit + remainder.value,
        remainder.error + 4.0 * f64::EPSILON * (n_max - n) as f64 * explicit,
    ))
}

/// Eigenprobability of the dual operator: `rho([0^q 1]) = eta_q`.
pub fn rho_cylinder(q: usize, eta: &EtaSequence) -> Result<f64> {
    eta.eta(q)
}

/// Normalization `Z = 2 sum_m m eta_m` of the equilibrium measure.
pub fn normalization(eta: &EtaSequence) -> Result<f64> {
    Ok(2.0 * eta.first_moment()?.value)
}

/// `mu([0^q 1]) = T(q)`, divided by `Z` when `normalized`.
pub fn mu_cylinder(q: usize, eta: &EtaSequence, normalized: bool) -> Result<f64> {
    let raw = eta.tail(q)?.value;
    if normalized {
        Ok(raw / normalization(eta)?)
    } else {
        Ok(raw)
    }
}

/// Jacobian of the equilibrium measure at `beta = 1`.
///
/// `T(q)/T(q-1)` on `L_q`, `R_q` (`q >= 2`); `eta_q/T(q)` on `0 1^q 0` and
/// `1 0^q 1`; one at the fixed points; zero at `0 1^inf`, `1 0^inf`.
pub fn jacobian(p: SymbolicPoint, eta: &EtaSequence) -> Result<f64> {
    match p.validate()? {
        SymbolicPoint::L(1) | SymbolicPoint::R(1) => Err(invalid(
            "point",
            "J on [01] depends on the following run; use Olo(q) or Ioi(q)",
        )),
        SymbolicPoint::L(q) | SymbolicPoint::R(q) => eta.continue_ratio(q - 1),
        SymbolicPoint::Olo(q) | SymbolicPoint::Ioi(q) => eta.hazard(q),
        SymbolicPoint::Zeros | SymbolicPoint::Ones => Ok(1.0),
        SymbolicPoint::ZeroOnes | SymbolicPoint::OneZeros => Ok(0.0),
    }
}

/// `log J = g + log phi - log(phi o sigma)` evaluated literally from the
/// potential and the eigenfunction at `beta = lambda = 1`. Defined where the
/// shifted point is a run-structure cylinder.
pub fn log_jacobian_from_potential(p: SymbolicPoint, eta: &EtaSequence) -> Result<f64> {
    let p = p.validate()?;
    match p {
        SymbolicPoint::L(1) | SymbolicPoint::R(1) | SymbolicPoint::ZeroOnes | SymbolicPoint::OneZeros => {
            return Err(invalid("point", "no run-structure image under the shift"));
        }
        _ => {}
    }
    let image = p.shift().expect("checked above");
    let phi = |x: SymbolicPoint| eigenfunction(x, 1.0, 1.0, eta, f64::INFINITY);
    Ok(g_value(p, 1.0, eta)? + phi(p)?.ln() - phi(image)?.ln())
}

/// Outcome of [`check_normalization`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationReport {
    pub states_checked: usize,
    pub max_deviation: f64,
    pub worst_state: usize,
    pub tolerance: f64,
    /// First run length `m` whose preimage sum misses one by more than `tolerance`.
    pub first_violation: Option<usize>,
}

impl NormalizationReport {
    pub fn passed(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks `sum_a J(a x) = 1` at `x = 0^m 1 ...` and `x = 1^m 0 ...` for each
/// `m` in `states`, and at the two fixed points.
pub fn check_normalization(
    eta: &EtaSequence,
    states: impl IntoIterator<Item = usize>,
    tol: f64,
) -> Result<NormalizationReport> {
    let mut report = NormalizationReport {
        states_checked: 0,
        max_deviation: 0.0,
        worst_state: 0,
        tolerance: tol,
        first_violation: None,
    };
    let fixed = jacobian(SymbolicPoint::Zeros, eta)? + jacobian(SymbolicPoint::OneZeros, eta)?;
    report.max_deviation = (fixed - 1.0).abs();
    for m in states {
        let zeros = jacobian(SymbolicPoint::L(m + 1), eta)? + jacobian(SymbolicPoint::Ioi(m), eta)?;
        let ones = jacobian(SymbolicPoint::R(m + 1), eta)? + jacobian(SymbolicPoint::Olo(m), eta)?;
        let dev = (zeros - 1.0).abs().max((ones - 1.0).abs());
        let dev = if dev.is_nan() { f64::INFINITY } else { dev };
        report.states_checked += 1;
        if dev > report.max_deviation {
            report.max_deviation = dev;
            report.worst_state = m;
        }
        if dev > tol && report.first_violation.is_none() {
            report.first_violation = Some(m);
        }
    }
    Ok(report)
}

/// Eigendata at the given inverse temperature. Only `beta = lambda = 1` has
/// an equilibrium measure here.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumData {
    pub eta: EtaSequence,
    #[serde(rename = "Z")]
    pub z: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Constants of the eigenfunction on the two halves of the shift.
    pub alpha: f64,
    pub b_beta: f64,
}

/// One CSV row of [`EquilibriumData::rows`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CylinderRow {
    pub q: usize,
    pub rho: f64,
    pub mu_raw: f64,
    pub mu_norm: f64,
    pub r: f64,
    /// `J` on `L_q`; undefined for `q = 1`.
    pub jacobian_l: Option<f64>,
}

impl EquilibriumData {
    pub fn new(eta: EtaSequence) -> Result<Self> {
        let z = normalization(&eta)?;
        if !(z > 0.0 && z.is_finite()) {
            return Err(Error::Degenerate(format!("normalization Z = {z}")));
        }
        Ok(Self {
            eta,
            z,
            beta: 1.0,
            lambda: 1.0,
            alpha: 1.0,
            b_beta: 1.0,
        })
    }

    /// `mu([0]) = sum_q T(q) / Z`, which is one half.
    pub fn mu_zero(&self) -> Result<f64> {
        Ok(self.eta.first_moment()?.value / self.z)
    }

    pub fn rows(&self, qmax: usize) -> Result<Vec<CylinderRow>> {
        (1..=qmax)
            .map(|q| {
                let mu_raw = self.eta.tail(q)?.value;
                Ok(CylinderRow {
                    q,
                    rho: self.eta.eta(q)?,
                    mu_raw,
                    mu_norm: mu_raw / self.z,
                    r: r(q, &self.eta)?,
                    jacobian_l: if q >= 2 {
                        Some(jacobian(SymbolicPoint::L(q), &self.eta)?)
                    } else {
                        None
                    },
                })
            })
            .collect()
    }
}
