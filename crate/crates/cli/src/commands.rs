use std::fmt;
use std::fs::File;
use std::io;
use std::path::Path;

use serde_json::json;
use walters_core::cantor::CantorMeasure;
use walters_core::decay::{correlation_renewal, diagnostics, RenewalSeries};
use walters_core::oracle::RenewalChain;
use walters_core::potential::{check_normalization, EquilibriumData};
use walters_core::renorm::{estimate_gamma, renorm1_fixed_point, renorm2_fixed_point, residual, DigitSystem, Operator};
use walters_core::seq::inverse_design;
use walters_core::{DecayTarget, EtaSequence, Family, WaltersCoefficients};

use crate::output::{Cell, OutputArgs, Table};
use crate::{
    ApplyArgs, Command, DecayArgs, EquilibriumArgs, EtaArgs, FitArgs, FixedPointArgs, IntegrateArgs, InverseArgs,
    OperatorArgs,
};

#[derive(Debug)]
pub enum CliError {
    Core {
        module: &'static str,
        source: walters_core::Error,
    },
    Input(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core { .. } | CliError::Input(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core { module, source } => write!(f, "{module}: {source}"),
            CliError::Input(msg) => write!(f, "input: {msg}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type Result<T> = std::result::Result<T, CliError>;

trait InModule<T> {
    fn in_module(self, module: &'static str) -> Result<T>;
}

impl<T> InModule<T> for walters_core::Result<T> {
    fn in_module(self, module: &'static str) -> Result<T> {
        self.map_err(|source| CliError::Core { module, source })
    }
}

pub fn run(command: Command) -> Result<()> {
    let (table, output) = match command {
        Command::Eta(a) => (eta(&a)?, a.output),
        Command::FixedPoint(a) => (fixed_point(&a)?, a.output),
        Command::Apply(a) => (apply(&a)?, a.output),
        Command::Integrate(a) => (integrate(&a)?, a.output),
        Command::Decay(a) => (decay(&a)?, a.output),
        Command::Inverse(a) => (inverse(&a)?, a.output),
        Command::Equilibrium(a) => (equilibrium(&a)?, a.output),
        Command::Fit(a) => (fit(&a)?, a.output),
    };
    emit(&table, &output)
}

fn emit(table: &Table, output: &OutputArgs) -> Result<()> {
    if let Some(path) = table.emit(output)? {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn family(s: &str) -> Result<Family> {
    s.parse::<Family>().in_module("seq")
}

fn number(v: f64) -> serde_json::Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(v.to_string())
    }
}

fn eta(a: &EtaArgs) -> Result<Table> {
    let eta = EtaSequence::new(family(&a.family)?, a.nmax).in_module("seq")?;
    let mut t = Table::new("eta", &["n", "eta", "T", "a"]);
    t.param("family", &a.family).param("nmax", a.nmax);
    let w = eta.total();
    t.summary("W", number(w.value)).summary("W_error", number(w.error));
    match eta.first_moment() {
        Ok(m) => t.summary("first_moment", number(m.value)),
        Err(_) => t.summary("first_moment", "infinite"),
    };
    for (n, e, tail, coef) in eta.rows() {
        t.row(vec![n.into(), e.into(), tail.into(), coef.into()]);
    }
    Ok(t)
}

fn operator(op: &OperatorArgs) -> Result<Operator> {
    if op.type1 {
        if !op.digits.is_empty() {
            return Err(CliError::Input("--digits only applies to --type2".into()));
        }
        Ok(Operator::FirstType { k: op.k })
    } else {
        let ds = DigitSystem::new(op.k, op.digits.clone()).in_module("renorm")?;
        Ok(Operator::SecondType { ds })
    }
}

fn operator_params(t: &mut Table, op: &Operator) {
    match op {
        Operator::FirstType { k } => t.param("operator", "type1").param("k", k),
        Operator::SecondType { ds } => t.param("operator", "type2").param("k", ds.k()).param(
            "digits",
            ds.digits().iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
        ),
    };
}

fn residual_table(t: &mut Table, a: &WaltersCoefficients, op: &Operator, extra: Option<&[f64]>) -> Result<()> {
    let ra = op.apply(a).in_module("renorm")?;
    let r = residual(a, op).in_module("renorm")?;
    t.summary("residual_abs", number(r.absolute))
        .summary("residual_rel", number(r.relative))
        .summary("residual_worst_n", r.worst_index)
        .summary("verified_up_to", ra.max_index());
    for (n, an) in a.iter() {
        let image = ra.get(n);
        let mut row = vec![n.into(), an.into(), image.into(), image.map(|x| (an - x).abs()).into()];
        if let Some(col) = extra {
            row.push(col[n - 2].into());
        }
        t.row(row);
    }
    Ok(())
}

fn fixed_point(a: &FixedPointArgs) -> Result<Table> {
    let op = operator(&a.op)?;
    match &op {
        Operator::FirstType { k } => {
            let nmax = a.nmax.unwrap_or(10_000);
            let fp = renorm1_fixed_point(*k, a.a2, nmax).in_module("renorm")?;
            let mut t = Table::new("fixed-point", &["n", "a", "Ra", "residual", "offset"]);
            operator_params(&mut t, &op);
            t.param("a2", a.a2).param("nmax", nmax);
            t.summary("alpha_2", number(fp.offsets[0]));
            residual_table(&mut t, &fp.coeffs, &op, Some(&fp.offsets))?;
            if nmax >= 12 {
                let eta = walters_core::seq::eta_values_from_coeffs(&fp.coeffs);
                if let Ok(fit) = estimate_gamma(&eta, (10.min(nmax / 2), nmax)) {
                    t.summary("gamma_fit", number(fit.gamma))
                        .summary("power_law", fit.is_power_law);
                }
            }
            Ok(t)
        }
        Operator::SecondType { ds } => {
            let nmax = a.nmax.unwrap_or(1000);
            let fp = renorm2_fixed_point(ds, nmax, a.depth).in_module("cantor")?;
            let mut t = Table::new("fixed-point", &["n", "a", "Ra", "residual", "bound"]);
            operator_params(&mut t, &op);
            t.param("depth", a.depth).param("nmax", nmax);
            t.summary("alpha", number(fp.alpha));
            residual_table(&mut t, &fp.coeffs, &op, Some(&fp.bounds))?;
            let allowed = (ds.l() + 1) as f64;
            let ra = op.apply(&fp.coeffs).in_module("renorm")?;
            let worst = ra
                .iter()
                .map(|(n, r)| (fp.coeffs.get(n).expect("in range") - r).abs() / (allowed * fp.bounds[n - 2]))
                .fold(0.0, f64::max);
            t.summary("residual_over_allowed", number(worst))
                .summary("within_bound", worst <= 1.0);
            Ok(t)
        }
    }
}

fn read_coefficients(path: &Path) -> Result<WaltersCoefficients> {
    let file = File::open(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers = reader.headers().map_err(|e| CliError::Input(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Input(format!("{}: missing column `{name}`", path.display())))
    };
    let (ni, ai) = (col("n")?, col("a")?);
    let mut values = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Input(e.to_string()))?;
        let bad = |what: &str| CliError::Input(format!("{}: record {}: bad {what}", path.display(), line + 1));
        let n: usize = rec.get(ni).and_then(|s| s.parse().ok()).ok_or_else(|| bad("n"))?;
        let v: f64 = rec.get(ai).and_then(|s| s.parse().ok()).ok_or_else(|| bad("a"))?;
        if n != values.len() + 2 {
            return Err(CliError::Input(format!(
                "{}: expected n = {} but found {n}; indices must run 2, 3, ... without gaps",
                path.display(),
                values.len() + 2
            )));
        }
        values.push(v);
    }
    Ok(WaltersCoefficients::new(values))
}

fn apply(a: &ApplyArgs) -> Result<Table> {
    let op = operator(&a.op)?;
    let coeffs = read_coefficients(&a.input)?;
    let mut t = Table::new("apply", &["n", "a", "Ra", "residual"]);
    operator_params(&mut t, &op);
    t.param("in", a.input.display());
    residual_table(&mut t, &coeffs, &op, None)?;
    Ok(t)
}

fn integrate(a: &IntegrateArgs) -> Result<Table> {
    let ds = DigitSystem::new(a.k, a.digits.clone()).in_module("renorm")?;
    let cm = CantorMeasure::new(ds);
    let rule = cm.rule(a.depth).in_module("cantor")?;
    let mut t = Table::new("integrate", &["n", "value", "bound", "mc_estimate", "mc_stderr"]);
    t.param("k", a.k)
        .param(
            "digits",
            a.digits.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(","),
        )
        .param("depth", a.depth)
        .param("mc", a.mc)
        .param("seed", a.seed);
    t.summary("alpha", number(cm.alpha)).summary("sup_K", number(cm.sup()));
    for &n in &a.n {
        if n <= 1 {
            return Err(CliError::Core {
                module: "cantor",
                source: walters_core::Error::Singular {
                    n: n as f64,
                    sup: cm.sup(),
                },
            });
        }
        let q = rule.integrate(n as f64).in_module("cantor")?;
        let (est, se) = if a.mc > 0 {
            let mc = cm.mc_integral(n, a.mc, a.seed).in_module("cantor")?;
            (Cell::Float(mc.estimate), Cell::Float(mc.stderr))
        } else {
            (Cell::Empty, Cell::Empty)
        };
        t.row(vec![n.into(), q.value.into(), q.error.into(), est, se]);
    }
    let ss = cm.self_similarity_check(a.n[0], a.depth).in_module("cantor")?;
    t.summary("self_similarity_difference", number(ss.difference))
        .summary("self_similarity_allowed", number(ss.allowed));
    Ok(t)
}

fn decay(a: &DecayArgs) -> Result<Table> {
    if a.qmax < 1 {
        return Err(CliError::Input("--qmax must be at least 1".into()));
    }
    if a.mc_paths > 0 && a.oracle_trunc == 0 {
        return Err(CliError::Input("--mc-paths needs --oracle-trunc".into()));
    }
    let nmax = (a.qmax + 2).max(a.oracle_trunc + 2).max(1000);
    let eta = EtaSequence::new(family(&a.family)?, nmax).in_module("seq")?;
    let series = RenewalSeries::new(&eta, a.qmax).in_module("decay")?;
    let c = correlation_renewal(&eta, a.qmax).in_module("decay")?;
    let z = 2.0 * eta.first_moment().in_module("decay")?.value;

    let mut t = Table::new(
        "decay",
        &[
            "q",
            "A",
            "V",
            "K",
            "D",
            "C_renewal",
            "C_oracle",
            "C_mc",
            "mc_stderr",
            "ratio",
            "can1",
            "est1",
        ],
    );
    t.param("family", &a.family)
        .param("qmax", a.qmax)
        .param("nmax", nmax)
        .param("oracle_trunc", a.oracle_trunc)
        .param("eps", a.eps)
        .param("mc_paths", a.mc_paths)
        .param("seed", a.seed);
    t.summary("W", number(series.w))
        .summary("Z", number(z))
        .summary("v_consistency", number(series.v_consistency()));
    let gf = series.generating_check(0.5).in_module("decay")?;
    t.summary("generating_residual", number(gf.residual))
        .summary("generating_truncation", number(gf.truncation));

    let oracle = if a.oracle_trunc > 0 {
        let chain = RenewalChain::build(&eta, a.oracle_trunc, a.eps).in_module("oracle")?;
        let corr = chain.correlations(a.qmax);
        let gap = (1..=a.qmax).map(|q| (corr[q] - c[q]).abs()).fold(0.0, f64::max);
        t.summary("eps_trunc", number(chain.eps_trunc()))
            .summary("oracle_bound", number(chain.correlation_bound()))
            .summary("oracle_max_gap", number(gap));
        let mc = if a.mc_paths > 0 {
            let lags: Vec<usize> = (1..=a.qmax).collect();
            Some(chain.sample_paths(&lags, a.mc_paths, a.seed).in_module("oracle")?)
        } else {
            None
        };
        Some((corr, mc))
    } else {
        None
    };
    t.summary("sign_C_qmax", if c[a.qmax] >= 0.0 { "+" } else { "-" });

    for q in 1..=a.qmax {
        let d = eta.double_tail(q).in_module("decay")?.value;
        let diag = diagnostics(&eta, q).in_module("decay")?;
        let (co, cm, se) = match &oracle {
            Some((corr, mc)) => (
                Cell::Float(corr[q]),
                mc.as_ref().map_or(Cell::Empty, |m| Cell::Float(m[q - 1].estimate)),
                mc.as_ref().map_or(Cell::Empty, |m| Cell::Float(m[q - 1].stderr)),
            ),
            None => (Cell::Empty, Cell::Empty, Cell::Empty),
        };
        t.row(vec![
            q.into(),
            series.a(q).into(),
            series.v(q).into(),
            series.k(q).into(),
            d.into(),
            c[q].into(),
            co,
            cm,
            se,
            (c[q].abs() * z / d).into(),
            diag.can1.into(),
            diag.est1.into(),
        ]);
    }
    Ok(t)
}

fn read_column(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let s = line.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        match s.parse::<f64>() {
            Ok(v) => out.push(v),
            // a header line is allowed before the first value
            Err(_) if out.is_empty() => {}
            Err(_) => {
                return Err(CliError::Input(format!(
                    "{}: line {}: not a number",
                    path.display(),
                    i + 1
                )));
            }
        }
    }
    Ok(out)
}

fn inverse(a: &InverseArgs) -> Result<Table> {
    let target = match (&a.target, &a.target_file) {
        (Some(s), _) => s.parse::<DecayTarget>().in_module("seq")?,
        (None, Some(p)) => DecayTarget::Values(read_column(p)?),
        (None, None) => unreachable!("clap requires one of the two"),
    };
    let design = inverse_design(&target, a.qmax).in_module("seq")?;
    let mut t = Table::new("inverse", &["q", "eta", "D", "target", "rel_err"]);
    match (&a.target, &a.target_file) {
        (Some(s), _) => t.param("target", s),
        (_, Some(p)) => t.param("target_file", p.display()),
        _ => unreachable!(),
    };
    t.param("qmax", a.qmax);
    t.summary("shift", design.shift)
        .summary("max_rel_err", number(design.max_rel_err))
        .summary("checked_from", design.checked.0)
        .summary("checked_to", design.checked.1);
    let eta = &design.eta;
    for q in 1..=eta.n_max() {
        let d = eta.double_tail(q).in_module("seq")?.value;
        let goal = target.value(q + design.shift);
        let err = goal.map(|g| ((d - g) / g).abs());
        t.row(vec![
            q.into(),
            eta.eta(q).in_module("seq")?.into(),
            d.into(),
            goal.into(),
            err.into(),
        ]);
    }
    Ok(t)
}

fn equilibrium(a: &EquilibriumArgs) -> Result<Table> {
    let eta = EtaSequence::new(family(&a.family)?, a.nmax.max(a.qmax + 1)).in_module("seq")?;
    let report = check_normalization(&eta, 1..=a.qmax, 1e-12).in_module("potential")?;
    let data = EquilibriumData::new(eta).in_module("potential")?;
    let mut t = Table::new("equilibrium", &["q", "rho", "mu_raw", "mu_norm", "r", "jacobian_l"]);
    t.param("family", &a.family).param("qmax", a.qmax).param("nmax", a.nmax);
    t.summary("Z", number(data.z))
        .summary("mu_zero", number(data.mu_zero().in_module("potential")?))
        .summary("jacobian_max_deviation", number(report.max_deviation));
    for r in data.rows(a.qmax).in_module("potential")? {
        t.row(vec![
            r.q.into(),
            r.rho.into(),
            r.mu_raw.into(),
            r.mu_norm.into(),
            r.r.into(),
            r.jacobian_l.into(),
        ]);
    }
    Ok(t)
}

fn fit(a: &FitArgs) -> Result<Table> {
    let eta = EtaSequence::new(family(&a.family)?, a.nmax).in_module("seq")?;
    let [lo, hi] = a.range[..] else {
        return Err(CliError::Input("--range takes two values `lo,hi`".into()));
    };
    let fit = estimate_gamma(eta.values(), (lo, hi)).in_module("renorm")?;
    let mut t = Table::new("fit", &["n", "log_n", "log_eta", "fitted", "residual"]);
    t.param("family", &a.family)
        .param("nmax", a.nmax)
        .param("range", format!("{lo},{hi}"));
    t.summary("gamma", number(fit.gamma))
        .summary("intercept", number(fit.intercept))
        .summary("r_squared", number(fit.r_squared))
        .summary("max_abs_residual", number(fit.max_abs_residual))
        .summary("relative_residual", number(fit.relative_residual))
        .summary("power_law", fit.is_power_law);
    for n in lo..=hi {
        let x = (n as f64).ln();
        let y = eta.values()[n - 1].ln();
        let f = fit.intercept - fit.gamma * x;
        t.row(vec![n.into(), x.into(), y.into(), f.into(), (y - f).into()]);
    }
    Ok(t)
}
