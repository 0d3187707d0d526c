//! Lower-bound machinery: the survival-path bound
//!
//!   P(R >= x) >= p_delta^y,   delta = cq/x,  y = ln(1-c)/ln(1-delta),
//!   p_delta = P(1 - delta <= M <= 1),
//!
//! its optimization over the free constant c, the c0 root governing the
//! large-x optimum for power-type Phi, the l'Hospital ratio for the
//! extreme thin-tail family, and assembly of normalized tail-ratio
//! curves that bracket ln P(R >= x) between this lower bound and the
//! Chernoff upper bound.

use crate::chernoff::{chernoff_upper_log, BoundReport};
use crate::error::{Error, Result};
use crate::mlaw::{thin_tail_left_integral_ln, Law, MLaw};
use crate::numerics::find_root;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Parameters of one survival-path evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LowerBoundQuery {
    pub q: f64,
    pub x: f64,
    pub c: f64,
}

impl LowerBoundQuery {
    pub fn new(q: f64, x: f64, c: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::Domain(format!("q = {q} must be positive")));
        }
        if !(x > q) {
            return Err(Error::Domain(format!("x = {x} must exceed q = {q}")));
        }
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Domain(format!("c = {c} must lie in (0, 1)")));
        }
        Ok(Self { q, x, c })
    }

    pub fn delta(&self) -> f64 {
        self.c * self.q / self.x
    }
}

/// A lower bound on ln P(R >= x). `trivial` marks p_delta = 0, where
/// the bound degenerates to -inf and says nothing.
#[derive(Debug, Clone, Copy)]
pub struct LowerBound {
    pub log_bound: f64,
    pub trivial: bool,
}

/// y * ln p_delta with y = ln(1-c)/ln(1-cq/x), evaluated log1p-style so
/// that delta near 0 loses no precision.
pub fn lower_bound_log(law: &Law, query: &LowerBoundQuery) -> Result<LowerBound> {
    let delta = query.delta();
    let y = (-query.c).ln_1p() / (-delta).ln_1p();
    let ln_p = law.ln_tail_mass(delta)?;
    if ln_p == f64::NEG_INFINITY {
        return Ok(LowerBound {
            log_bound: f64::NEG_INFINITY,
            trivial: true,
        });
    }
    Ok(LowerBound {
        log_bound: y * ln_p,
        trivial: false,
    })
}

/// Default c grid: 48 geometric points spanning (0, 1) from 1e-3 up to
/// 1 - 1e-3, so optima near 0 (beta-type laws) and interior optima
/// (Weibull-type) are both reachable.
pub fn default_c_grid() -> Vec<f64> {
    crate::chernoff::geometric_grid(1e-3, 1.0 - 1e-3, 48).expect("static grid")
}

/// Grid argmax of the survival-path bound over c, refined by golden
/// section inside the bracketing cells. Returns (c*, bound at c*).
pub fn optimize_c(law: &Law, q: f64, x: f64, c_grid: &[f64]) -> Result<(f64, f64)> {
    if c_grid.is_empty() || c_grid.iter().any(|&c| !(c > 0.0 && c < 1.0)) {
        return Err(Error::Domain("c grid must be non-empty within (0, 1)".into()));
    }
    let eval = |c: f64| -> Result<f64> {
        Ok(lower_bound_log(law, &LowerBoundQuery::new(q, x, c)?)?.log_bound)
    };
    let mut best_i = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, &c) in c_grid.iter().enumerate() {
        let v = eval(c)?;
        if v > best {
            best = v;
            best_i = i;
        }
    }
    if best == f64::NEG_INFINITY {
        return Err(Error::NotFound(
            "survival-path bound is trivial at every grid c".into(),
        ));
    }
    if c_grid.len() == 1 {
        return Ok((c_grid[0], best));
    }
    let mut lo = c_grid[best_i.saturating_sub(1)];
    let mut hi = c_grid[(best_i + 1).min(c_grid.len() - 1)];
    // golden section on [lo, hi]; 90 iterations shrink the interval by
    // ~1e-19, past f64 resolution
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = eval(a)?;
    let mut fb = eval(b)?;
    for _ in 0..90 {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = eval(a)?;
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = eval(b)?;
        }
    }
    let c_star = 0.5 * (lo + hi);
    let v_star = eval(c_star)?;
    if v_star >= best {
        Ok((c_star, v_star))
    } else {
        Ok((c_grid[best_i], best))
    }
}

/// The unique root in (0, 1) of 1/(1-c) + r* ln(1-c)/c = 0 with
/// r* = r/(r-1): the large-x limit of the optimal c for power-tail
/// multipliers.
pub fn c0_root(r: f64) -> Result<f64> {
    if !(r > 1.0) {
        return Err(Error::Domain(format!("r = {r} must exceed 1")));
    }
    let r_star = r / (r - 1.0);
    let f = |c: f64| 1.0 / (1.0 - c) + r_star * (-c).ln_1p() / c;
    find_root(f, (1e-12, 1.0 - 1e-12), 1e-13)
}

/// The lower-bound constant ln(1-c0) / (c0^{r*} r^{1/(r-1)}) at the
/// optimal c0. Tends to -1 as r -> oo and to -ln(r* ln r*)/e as
/// r -> 1+.
pub fn c0_constant(r: f64) -> Result<f64> {
    let c0 = c0_root(r)?;
    let r_star = r / (r - 1.0);
    Ok((-c0).ln_1p() / (c0.powf(r_star) * r.powf(1.0 / (r - 1.0))))
}

/// y ln(int_0^{1/y} e^{-h(t)} dt) / e^y, which tends to -1 as y grows.
/// The integral underflows past all linear-scale representation almost
/// immediately (h(1/y) ~ e^y), so it is evaluated in log domain with the
/// quadrature centered on the right endpoint t = 1/y where the mass
/// concentrates.
pub fn hosp_ratio(y: f64) -> Result<f64> {
    if !(y >= 1.0) {
        return Err(Error::Domain(format!("y = {y} must be >= 1")));
    }
    let ln_integral = thin_tail_left_integral_ln(1.0 / y)?;
    Ok(y * ln_integral / y.exp())
}

/// Normalizing curves against which log tails are plotted: the caller
/// picks the tag, so a family can deliberately be probed against the
/// "wrong" normalizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Normalizer {
    /// x ln x
    XLogX,
    /// x (ln x)^eta
    XLogXEta { eta: f64 },
    /// (x/q)^{r*}
    Power { r_star: f64 },
    /// B e^{x/B}
    Exp { b: f64 },
}

impl Normalizer {
    pub fn value(&self, x: f64, q: f64) -> f64 {
        match *self {
            Self::XLogX => x * x.ln(),
            Self::XLogXEta { eta } => x * x.ln().powf(eta),
            Self::Power { r_star } => (x / q).powf(r_star),
            Self::Exp { b } => b * (x / b).exp(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::XLogX => true,
            Self::XLogXEta { eta } => eta > 0.0,
            Self::Power { r_star } => r_star > 1.0,
            Self::Exp { b } => b > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!("invalid normalizer parameters: {self}")))
        }
    }
}

impl fmt::Display for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::XLogX => write!(f, "xlogx"),
            Self::XLogXEta { eta } => write!(f, "xlogx_eta:eta={eta}"),
            Self::Power { r_star } => write!(f, "power:rstar={r_star}"),
            Self::Exp { b } => write!(f, "exp:b={b}"),
        }
    }
}

impl FromStr for Normalizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let one_param = |rest: Option<&str>, key: &str| -> Result<f64> {
            let body = rest.ok_or_else(|| {
                Error::Parse(format!("normalizer '{head}' needs a parameter '{key}='"))
            })?;
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected '{key}=VALUE', got '{body}'")))?;
            if k != key {
                return Err(Error::Parse(format!("unknown key '{k}', expected '{key}'")));
            }
            v.parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad value '{v}': {e}")))
        };
        let norm = match head {
            "xlogx" => {
                if rest.is_some() {
                    return Err(Error::Parse("xlogx takes no parameters".into()));
                }
                Self::XLogX
            }
            "xlogx_eta" => Self::XLogXEta {
                eta: one_param(rest, "eta")?,
            },
            "power" => Self::Power {
                r_star: one_param(rest, "rstar")?,
            },
            "exp" => Self::Exp {
                b: one_param(rest, "b")?,
            },
            other => return Err(Error::Parse(format!("unknown normalizer '{other}'"))),
        };
        norm.validate()?;
        Ok(norm)
    }
}

/// Bracketing curves for ln P(R >= x), raw and divided by a normalizer.
/// Points where the lower bound is trivial are None and should be
/// omitted downstream, not plotted as sentinels.
#[derive(Debug, Clone, Serialize)]
pub struct TailCurve {
    pub family: MLaw,
    pub q: f64,
    pub normalizer: Normalizer,
    pub x_grid: Vec<f64>,
    pub lower_log: Vec<Option<f64>>,
    pub upper_log: Vec<f64>,
    pub lower_ratio: Vec<Option<f64>>,
    pub upper_ratio: Vec<f64>,
    pub normalizer_value: Vec<f64>,
}

/// Assembles the bracketing curve. The upper branch requires a passing
/// iteration certificate; a failed report is rejected.
pub fn tail_ratio_curve(
    law: &Law,
    q: f64,
    x_grid: &[f64],
    report: &BoundReport,
    normalizer: Normalizer,
    c_grid: &[f64],
) -> Result<TailCurve> {
    if !report.pass {
        return Err(Error::MissingCertificate);
    }
    normalizer.validate()?;
    if x_grid.is_empty() || x_grid.iter().any(|&x| !(x > q)) {
        return Err(Error::Domain("x grid must be non-empty with every x > q".into()));
    }
    if x_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("x grid must be strictly ascending".into()));
    }
    let n = x_grid.len();
    let mut curve = TailCurve {
        family: *law.spec(),
        q,
        normalizer,
        x_grid: x_grid.to_vec(),
        lower_log: Vec::with_capacity(n),
        upper_log: Vec::with_capacity(n),
        lower_ratio: Vec::with_capacity(n),
        upper_ratio: Vec::with_capacity(n),
        normalizer_value: Vec::with_capacity(n),
    };
    for &x in x_grid {
        let nv = normalizer.value(x, q);
        let lower = match optimize_c(law, q, x, c_grid) {
            Ok((_, v)) => Some(v),
            Err(Error::NotFound(_)) => None,
            Err(e) => return Err(e),
        };
        let upper = chernoff_upper_log(&report.phi, report.coeff, x)?;
        curve.lower_log.push(lower);
        curve.upper_log.push(upper);
        curve.lower_ratio.push(lower.map(|v| v / nv));
        curve.upper_ratio.push(upper / nv);
        curve.normalizer_value.push(nv);
    }
    Ok(curve)
}
