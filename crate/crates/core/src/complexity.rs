//! Closed-form FLOP counts of the three transmit designs.
//!
//! Each method is tabulated twice: as a polynomial in the group count `K`
//! (the canonical form) and regrouped as a polynomial in the group size `T`.
//! The two should agree term by term; [`cross_check`] reports any point where
//! they do not, which indicates a transcription error in one of the forms.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MaxGrpNsp,
    Leakage,
    Bd,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::MaxGrpNsp, Method::Leakage, Method::Bd];

    pub fn id(&self) -> &'static str {
        match self {
            Method::MaxGrpNsp => "max-grp-nsp",
            Method::Leakage => "leakage",
            Method::Bd => "bd",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.id() == s)
            .ok_or_else(|| domain(format!("unknown method '{s}'")))
    }
}

/// Problem sizes: `K` groups of `T` users, `N` antennas, `M` eavesdroppers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlopsQuery {
    pub method: Method,
    pub k: u64,
    pub t: u64,
    pub n: u64,
    pub m: u64,
}

impl FlopsQuery {
    pub fn new(method: Method, k: u64, t: u64, n: u64, m: u64) -> Result<Self> {
        let q = Self { method, k, t, n, m };
        q.validate()?;
        Ok(q)
    }

    /// All sizes positive and `N >= K T + M`.
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 || self.t == 0 || self.n == 0 || self.m == 0 {
            return Err(domain(format!("sizes must be positive: {self:?}")));
        }
        if self.n < self.k * self.t + self.m {
            return Err(domain(format!(
                "N = {} below K*T + M = {}",
                self.n,
                self.k * self.t + self.m
            )));
        }
        Ok(())
    }

    pub fn with(&self, variable: Variable, value: u64) -> Self {
        let mut q = *self;
        match variable {
            Variable::K => q.k = value,
            Variable::T => q.t = value,
            Variable::N => q.n = value,
        }
        q
    }

    pub fn get(&self, variable: Variable) -> u64 {
        match variable {
            Variable::K => self.k,
            Variable::T => self.t,
            Variable::N => self.n,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variable {
    K,
    T,
    N,
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variable::K => "K",
            Variable::T => "T",
            Variable::N => "N",
        })
    }
}

/// Polynomial in `K`, evaluated without checking the size invariant.
pub fn k_form(method: Method, k: i128, t: i128, n: i128, m: i128) -> i128 {
    match method {
        Method::MaxGrpNsp => {
            (7 * t * t * n + 3 * t.pow(3)) * k * k
                + (-12 * t * t - 4 * t * n * n - 3 * t.pow(3) - n * t) * k
                + (7 * t * t * n + 7 * t * n * n + 2 * n.pow(3) + t.pow(3) + n * n + n * t)
        }
        Method::Leakage => 2 * t * n * n * k + (3 * m * n * n + t * n * n + 4 * n.pow(3)),
        // The constant group is printed with a stray leading "+"; read as +T^2 M.
        Method::Bd => {
            3 * t * t * n * k * k
                + (t.pow(3) - t * t * n + m * n * t + t * n - m * m * t - 2 * n * n * t) * k
                + (-t.pow(3) + 2 * m * m * n - m * n * t)
                + (t * t * m - t * n + m * n + m * n * n + n.pow(3))
        }
    }
}

/// The same counts regrouped as polynomials in `T`.
pub fn t_form(method: Method, k: i128, t: i128, n: i128, m: i128) -> i128 {
    match method {
        Method::MaxGrpNsp => {
            (3 * k * k - 3 * k + 1) * t.pow(3)
                + (7 * k * k * n - 12 * k * n + 7 * n) * t * t
                + (7 * n * n - 4 * k * n * n + n - n * k) * t
                + (n * n + 2 * n.pow(3))
        }
        Method::Leakage => (2 * k * n * n + n * n) * t + (3 * m * n * n + 4 * n.pow(3)),
        Method::Bd => {
            (k - 1) * t.pow(3)
                + (3 * k * k * n - k * n + m) * t * t
                + (m * n * k - m * n + k * n - n - m * m * k - 2 * n * n * k) * t
                + (2 * m * m * n + m * n + m * n * n + n.pow(3))
        }
    }
}

fn as_i128(q: &FlopsQuery) -> (i128, i128, i128, i128) {
    (q.k as i128, q.t as i128, q.n as i128, q.m as i128)
}

/// FLOP count of the canonical (`K`) form for a valid query.
pub fn flops(q: &FlopsQuery) -> Result<u128> {
    q.validate()?;
    let (k, t, n, m) = as_i128(q);
    let count = k_form(q.method, k, t, n, m);
    if count <= 0 {
        return Err(domain(format!("non-positive FLOP count {count} for {q:?}")));
    }
    Ok(count as u128)
}

/// A point where the two tabulated forms disagree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Discrepancy {
    pub query: FlopsQuery,
    pub k_form: i128,
    pub t_form: i128,
}

/// Evaluates both forms; `Some` if they differ.
pub fn cross_check(q: &FlopsQuery) -> Option<Discrepancy> {
    let (k, t, n, m) = as_i128(q);
    let a = k_form(q.method, k, t, n, m);
    let b = t_form(q.method, k, t, n, m);
    (a != b).then_some(Discrepancy {
        query: *q,
        k_form: a,
        t_form: b,
    })
}

/// `log(f(x2) / f(x1)) / log(x2 / x1)`.
pub fn log_slope(f1: f64, f2: f64, x1: f64, x2: f64) -> Result<f64> {
    if !(f1 > 0.0 && f2 > 0.0) {
        return Err(domain(format!(
            "counts must be positive, got {f1} and {f2}"
        )));
    }
    if !(x1 > 0.0 && x2 > 0.0) || x1 == x2 {
        return Err(domain(format!(
            "need distinct positive abscissae, got {x1} and {x2}"
        )));
    }
    Ok((f2 / f1).ln() / (x2 / x1).ln())
}

/// Log-ratio exponent of the count when `variable` is multiplied by
/// `factor`, other sizes held at `base`. Both points must be valid queries.
pub fn scaling_exponent(
    method: Method,
    variable: Variable,
    base: FlopsQuery,
    factor: u64,
) -> Result<f64> {
    if factor < 2 {
        return Err(domain("scaling factor must be at least 2"));
    }
    let base = FlopsQuery { method, ..base };
    let x1 = base.get(variable);
    let scaled = base.with(variable, x1 * factor);
    let f1 = flops(&base)? as f64;
    let f2 = flops(&scaled)? as f64;
    log_slope(f1, f2, x1 as f64, (x1 * factor) as f64)
}

/// Growth exponent of the polynomial itself in one variable with the other
/// sizes held fixed, ignoring `N >= K T + M`. This is the polynomial degree
/// seen at the evaluated range; it is what "linear in K" or "cubic in T"
/// statements about the count refer to.
pub fn growth_exponent(
    method: Method,
    variable: Variable,
    base: FlopsQuery,
    factor: u64,
) -> Result<f64> {
    if factor < 2 {
        return Err(domain("scaling factor must be at least 2"));
    }
    let (k, t, n, m) = as_i128(&base);
    let x1 = base.get(variable) as i128;
    let x2 = x1 * factor as i128;
    let eval = |x: i128| match variable {
        Variable::K => k_form(method, x, t, n, m),
        Variable::T => k_form(method, k, x, n, m),
        Variable::N => k_form(method, k, t, x, m),
    };
    log_slope(eval(x1) as f64, eval(x2) as f64, x1 as f64, x2 as f64)
}
