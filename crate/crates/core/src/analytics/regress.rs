//! Linear, logit and Poisson fits with cluster-robust covariance.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;

use super::VariableTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Linear,
    Logit,
    Poisson,
}

/// A regressor: `x`, `x^2` or the product `x:y`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Term {
    Linear(String),
    Square(String),
    Interaction(String, String),
}

impl Term {
    fn variables(&self) -> Vec<&str> {
        match self {
            Term::Linear(a) | Term::Square(a) => vec![a],
            Term::Interaction(a, b) => vec![a, b],
        }
    }

    fn eval(&self, table: &VariableTable, row: usize) -> Result<Option<f64>> {
        Ok(match self {
            Term::Linear(a) => table.column(a)?[row],
            Term::Square(a) => table.column(a)?[row].map(|v| v * v),
            Term::Interaction(a, b) => match (table.column(a)?[row], table.column(b)?[row]) {
                (Some(x), Some(y)) => Some(x * y),
                _ => None,
            },
        })
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Linear(a) => write!(f, "{a}"),
            Term::Square(a) => write!(f, "{a}^2"),
            Term::Interaction(a, b) => write!(f, "{a}:{b}"),
        }
    }
}

impl FromStr for Term {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::invalid("empty regressor term"));
        }
        if let Some(a) = s.strip_suffix("^2") {
            return Ok(Term::Square(a.to_string()));
        }
        if let Some((a, b)) = s.split_once(':') {
            return Ok(Term::Interaction(a.to_string(), b.to_string()));
        }
        Ok(Term::Linear(s.to_string()))
    }
}

impl TryFrom<String> for Term {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Term> for String {
    fn from(t: Term) -> String {
        t.to_string()
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub name: String,
    pub family: Family,
    pub dependent: String,
    pub regressors: Vec<Term>,
    #[serde(default)]
    pub fixed_effects: Vec<String>,
    pub cluster: String,
    #[serde(default = "default_true")]
    pub intercept: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub spec: RegressionSpec,
    pub columns: Vec<String>,
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub stat: Vec<f64>,
    pub p: Vec<f64>,
    pub cov: Vec<Vec<f64>>,
    pub n: usize,
    pub k: usize,
    pub n_clusters: usize,
    pub r2: Option<f64>,
    pub log_likelihood: Option<f64>,
    pub aic: Option<f64>,
    pub iterations: usize,
    pub covariance: String,
    pub reference_distribution: String,
}

impl RegressionFit {
    fn pos(&self, column: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == column)
    }

    pub fn coefficient(&self, column: &str) -> Option<f64> {
        self.pos(column).map(|k| self.coef[k])
    }

    pub fn std_error(&self, column: &str) -> Option<f64> {
        self.pos(column).map(|k| self.se[k])
    }
}

pub(crate) struct Design {
    pub columns: Vec<String>,
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub clusters: Vec<String>,
}

pub(crate) fn design(spec: &RegressionSpec, table: &VariableTable) -> Result<Design> {
    if spec
        .regressors
        .iter()
        .any(|t| t.variables().contains(&spec.dependent.as_str()))
    {
        return Err(Error::invalid(format!(
            "dependent `{}` appears among the regressors",
            spec.dependent
        )));
    }
    let y = table.column(&spec.dependent)?;
    let cluster = table.keys(&spec.cluster)?;
    let fe: Vec<Vec<Option<String>>> = spec
        .fixed_effects
        .iter()
        .map(|f| table.keys(f))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    'row: for r in 0..table.n_rows() {
        if y[r].is_none() || cluster[r].is_none() || fe.iter().any(|f| f[r].is_none()) {
            continue;
        }
        let mut vals = Vec::with_capacity(spec.regressors.len());
        for t in &spec.regressors {
            match t.eval(table, r)? {
                Some(v) => vals.push(v),
                None => continue 'row,
            }
        }
        rows.push((r, vals));
    }

    let mut columns: Vec<String> = Vec::new();
    if spec.intercept {
        columns.push("(intercept)".into());
    }
    columns.extend(spec.regressors.iter().map(Term::to_string));
    let mut dummies: Vec<(usize, Vec<String>)> = Vec::new();
    for (k, f) in fe.iter().enumerate() {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (r, _) in &rows {
            *counts.entry(f[*r].as_deref().unwrap()).or_default() += 1;
        }
        let mut dropped = None;
        for (level, c) in &counts {
            if dropped.is_none_or(|(_, best)| *c > best) {
                dropped = Some((*level, *c));
            }
        }
        let kept: Vec<String> = counts
            .keys()
            .filter(|l| Some(**l) != dropped.map(|d| d.0))
            .map(|l| l.to_string())
            .collect();
        columns.extend(
            kept.iter()
                .map(|l| format!("{}={l}", spec.fixed_effects[k])),
        );
        dummies.push((k, kept));
    }

    let n = rows.len();
    let kk = columns.len();
    let mut x = DMatrix::zeros(n, kk);
    let mut yv = DVector::zeros(n);
    let mut clusters = Vec::with_capacity(n);
    for (i, (r, vals)) in rows.iter().enumerate() {
        let mut c = 0;
        if spec.intercept {
            x[(i, 0)] = 1.0;
            c = 1;
        }
        for v in vals {
            x[(i, c)] = *v;
            c += 1;
        }
        for (k, kept) in &dummies {
            let level = fe[*k][*r].as_deref().unwrap();
            if let Some(p) = kept.iter().position(|l| l == level) {
                x[(i, c + p)] = 1.0;
            }
            c += kept.len();
        }
        yv[i] = y[*r].unwrap();
        clusters.push(cluster[*r].clone().unwrap());
    }
    Ok(Design {
        columns,
        x,
        y: yv,
        clusters,
    })
}

/// Weighted least squares through column-pivoted QR. Returns the solution and
/// `(X'WX)^-1`, or the columns that make the design rank deficient.
fn solve_ls(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    w: Option<&DVector<f64>>,
    names: &[String],
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (n, k) = x.shape();
    let (xs, ys) = match w {
        Some(w) => {
            let sw = w.map(f64::sqrt);
            let mut xs = x.clone();
            for (i, mut row) in xs.row_iter_mut().enumerate() {
                row *= sw[i];
            }
            (xs, y.component_mul(&sw))
        }
        None => (x.clone(), y.clone()),
    };
    let qr = xs.col_piv_qr();
    let mut perm = DMatrix::from_fn(1, k, |_, j| j as f64);
    qr.p().permute_columns(&mut perm);
    let perm: Vec<usize> = perm.iter().map(|v| *v as usize).collect();
    let r = qr.r();
    let r00 = r[(0, 0)].abs();
    let tol = n.max(k) as f64 * f64::EPSILON * r00;
    let rank = (0..k).take_while(|j| r[(*j, *j)].abs() > tol).count();
    if rank < k || r00 == 0.0 {
        let mut dropped: Vec<String> = perm[rank..].iter().map(|j| names[*j].clone()).collect();
        dropped.sort();
        return Err(Error::Collinear(dropped));
    }
    let qty = qr.q().transpose() * ys;
    let z = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::invalid("singular triangular factor"))?;
    let rinv = r
        .solve_upper_triangular(&DMatrix::identity(k, k))
        .ok_or_else(|| Error::invalid("singular triangular factor"))?;
    let m = &rinv * rinv.transpose();
    let mut beta = DVector::zeros(k);
    let mut bread = DMatrix::zeros(k, k);
    for a in 0..k {
        beta[perm[a]] = z[a];
        for b in 0..k {
            bread[(perm[a], perm[b])] = m[(a, b)];
        }
    }
    Ok((beta, bread))
}

/// `c * B (sum_g s_g s_g') B` with `s_g` the summed score `x_i u_i` in cluster g.
pub(crate) fn cluster_sandwich(
    x: &DMatrix<f64>,
    u: &DVector<f64>,
    clusters: &[String],
    bread: &DMatrix<f64>,
    factor: f64,
) -> DMatrix<f64> {
    let k = x.ncols();
    let mut sums: BTreeMap<&str, DVector<f64>> = BTreeMap::new();
    for (i, g) in clusters.iter().enumerate() {
        let s = sums.entry(g).or_insert_with(|| DVector::zeros(k));
        for j in 0..k {
            s[j] += x[(i, j)] * u[i];
        }
    }
    let mut meat = DMatrix::zeros(k, k);
    for s in sums.values() {
        meat += s * s.transpose();
    }
    let cov = bread * meat * bread * factor;
    (&cov + cov.transpose()) * 0.5
}

fn logistic(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

fn log_likelihood(family: Family, y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    let terms: Vec<f64> = y
        .iter()
        .zip(eta.iter())
        .map(|(y, e)| match family {
            Family::Logit => y * e - softplus(*e),
            Family::Poisson => y * e - e.exp() - ln_gamma(y + 1.0),
            Family::Linear => unreachable!(),
        })
        .collect();
    terms.iter().sum()
}

const MAX_ITER: usize = 100;

/// Coefficients, bread matrix, score residuals, log-likelihood, iterations.
type IrlsOutput = (DVector<f64>, DMatrix<f64>, DVector<f64>, f64, usize);

fn irls(family: Family, d: &Design) -> Result<IrlsOutput> {
    let y = &d.y;
    let n = y.len();
    let mut mu = DVector::from_fn(n, |i, _| match family {
        Family::Logit => (y[i] + 0.5) / 2.0,
        _ => y[i] + 0.1,
    });
    let mut eta = mu.map(|m| match family {
        Family::Logit => (m / (1.0 - m)).ln(),
        _ => m.ln(),
    });
    let mut trace = Vec::new();
    let mut ll_old: Option<f64> = None;
    for it in 1..=MAX_ITER {
        let w = mu.map(|m| match family {
            Family::Logit => (m * (1.0 - m)).max(1e-300),
            _ => m.max(1e-300),
        });
        let z = DVector::from_fn(n, |i, _| eta[i] + (y[i] - mu[i]) / w[i]);
        let (beta, _) = solve_ls(&d.x, &z, Some(&w), &d.columns)?;
        eta = &d.x * &beta;
        mu = eta.map(|e| match family {
            Family::Logit => logistic(e),
            _ => e.exp(),
        });
        if mu.iter().any(|m| !m.is_finite()) {
            return Err(Error::NonConvergence {
                iterations: it,
                reason: "fitted mean overflowed".into(),
                trace,
            });
        }
        let ll = log_likelihood(family, y, &eta);
        trace.push(ll);
        let score = d.x.transpose() * (y - &mu);
        let max_score = score.amax();
        let rel = ll_old.map(|o| ((ll - o) / ll.abs().max(f64::MIN_POSITIVE)).abs());
        if max_score < 1e-8 || rel.is_some_and(|r| r < 1e-10) {
            if family == Family::Logit && eta.amax() > 30.0 {
                return Err(Error::NonConvergence {
                    iterations: it,
                    reason: "separation: fitted probabilities at 0 or 1".into(),
                    trace,
                });
            }
            let w = mu.map(|m| match family {
                Family::Logit => m * (1.0 - m),
                _ => m,
            });
            let (_, bread) = solve_ls(&d.x, &z, Some(&w), &d.columns)?;
            let u = y - &mu;
            return Ok((beta, bread, u, ll, it));
        }
        ll_old = Some(ll);
    }
    Err(Error::NonConvergence {
        iterations: MAX_ITER,
        reason: "iteration cap reached".into(),
        trace,
    })
}

fn validate_response(family: Family, y: &DVector<f64>) -> Result<()> {
    let ok = match family {
        Family::Linear => y.iter().all(|v| v.is_finite()),
        Family::Logit => y.iter().all(|v| *v == 0.0 || *v == 1.0),
        Family::Poisson => y.iter().all(|v| *v >= 0.0 && v.fract() == 0.0),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "response is not valid for the {family:?} family"
        )))
    }
}

pub fn fit(spec: &RegressionSpec, table: &VariableTable) -> Result<RegressionFit> {
    let d = design(spec, table)?;
    let n = d.y.len();
    let k = d.columns.len();
    if n <= k {
        return Err(Error::invalid(format!(
            "{n} complete rows for {k} parameters"
        )));
    }
    let g = d
        .clusters
        .iter()
        .collect::<std::collections::BTreeSet<_>>()
        .len();
    if g < 2 {
        return Err(Error::invalid(
            "cluster-robust covariance needs at least 2 clusters",
        ));
    }
    validate_response(spec.family, &d.y)?;
    let gf = g as f64 / (g - 1) as f64;

    let (beta, bread, u, ll, iterations, factor) = match spec.family {
        Family::Linear => {
            let (beta, bread) = solve_ls(&d.x, &d.y, None, &d.columns)?;
            let u = &d.y - &d.x * &beta;
            let f = gf * (n - 1) as f64 / (n - k) as f64;
            (beta, bread, u, None, 1, f)
        }
        fam => {
            let (beta, bread, u, ll, it) = irls(fam, &d)?;
            (beta, bread, u, Some(ll), it, gf)
        }
    };
    let cov = cluster_sandwich(&d.x, &u, &d.clusters, &bread, factor);
    let se: Vec<f64> = (0..k).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
    let stat: Vec<f64> = (0..k).map(|j| beta[j] / se[j]).collect();
    let (p, reference) = match spec.family {
        Family::Linear => {
            let t = StudentsT::new(0.0, 1.0, (g - 1) as f64)
                .map_err(|e| Error::invalid(e.to_string()))?;
            (
                stat.iter().map(|s| 2.0 * (1.0 - t.cdf(s.abs()))).collect(),
                format!("t({})", g - 1),
            )
        }
        _ => {
            let z = Normal::standard();
            (
                stat.iter().map(|s| 2.0 * (1.0 - z.cdf(s.abs()))).collect(),
                "normal".to_string(),
            )
        }
    };
    let r2 = (spec.family == Family::Linear).then(|| {
        let ybar = if spec.intercept { d.y.mean() } else { 0.0 };
        let sst: f64 = d.y.iter().map(|v| (v - ybar).powi(2)).sum();
        1.0 - u.norm_squared() / sst
    });
    let covariance = match spec.family {
        Family::Linear => "CR1 cluster sandwich, factor G/(G-1)*(N-1)/(N-K)",
        _ => "CR1 cluster sandwich, factor G/(G-1)",
    };
    Ok(RegressionFit {
        spec: spec.clone(),
        columns: d.columns,
        coef: beta.iter().copied().collect(),
        se,
        stat,
        p,
        cov: (0..k)
            .map(|a| (0..k).map(|b| cov[(a, b)]).collect())
            .collect(),
        n,
        k,
        n_clusters: g,
        r2,
        log_likelihood: ll,
        aic: ll.map(|l| 2.0 * k as f64 - 2.0 * l),
        iterations,
        covariance: covariance.into(),
        reference_distribution: reference,
    })
}

/// Location of the extremum of `b1 x + b2 x^2`.
pub fn turning_point(b1: f64, b2: f64) -> Result<f64> {
    if b2 == 0.0 {
        return Err(Error::invalid(
            "quadratic coefficient is zero: no interior extremum",
        ));
    }
    Ok(-b1 / (2.0 * b2))
}

/// Derivative of `b1 x + b2 x^2` at `x`.
pub fn marginal_effect(b1: f64, b2: f64, x: f64) -> f64 {
    b1 + 2.0 * b2 * x
}
