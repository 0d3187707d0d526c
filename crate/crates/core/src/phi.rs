//! The Phi families appearing in the moment-generating-function bounds:
//! e^{bz}, exp(b z^{1/eta}), z^r and z ln z.

use crate::error::{Error, Result};
use crate::special::ln_one_minus_exp_neg_from_ln;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Convex increasing growth functions used in the Chernoff machinery.
///
/// `ZLogZ` is taken as z ln z for z >= 1 and 0 on (0, 1); it enters the
/// bounds only for large z, and verification grids floor at z = e.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PhiFamily {
    /// Phi(z) = e^{bz}
    ExpLinear { b: f64 },
    /// Phi(z) = exp(b z^{1/eta})
    ExpPower { b: f64, eta: f64 },
    /// Phi(z) = z^r, r > 1
    Power { r: f64 },
    /// Phi(z) = z ln z on z >= 1
    ZLogZ,
}

impl PhiFamily {
    pub fn exp_linear(b: f64) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::Domain(format!("exp-linear rate b = {b} must be positive")));
        }
        Ok(Self::ExpLinear { b })
    }

    pub fn exp_power(b: f64, eta: f64) -> Result<Self> {
        if !(b > 0.0 && eta > 0.0) {
            return Err(Error::Domain(format!(
                "exp-power parameters b = {b}, eta = {eta} must be positive"
            )));
        }
        Ok(Self::ExpPower { b, eta })
    }

    pub fn power(r: f64) -> Result<Self> {
        if !(r > 1.0) {
            return Err(Error::Domain(format!("power exponent r = {r} must exceed 1")));
        }
        Ok(Self::Power { r })
    }

    pub fn eval(&self, z: f64) -> f64 {
        match *self {
            Self::ExpLinear { b } => (b * z).exp(),
            Self::ExpPower { b, eta } => (b * z.powf(1.0 / eta)).exp(),
            Self::Power { r } => z.powf(r),
            Self::ZLogZ => {
                if z >= 1.0 {
                    z * z.ln()
                } else {
                    0.0
                }
            }
        }
    }

    /// ln Phi(z), finite even where Phi itself overflows f64.
    pub fn ln_eval(&self, z: f64) -> f64 {
        match *self {
            Self::ExpLinear { b } => b * z,
            Self::ExpPower { b, eta } => b * z.powf(1.0 / eta),
            Self::Power { r } => r * z.ln(),
            Self::ZLogZ => self.eval(z).ln(),
        }
    }

    /// B (Phi(z t) - Phi(z)) for t = 1 - u, parameterized by v = ln u.
    ///
    /// This is the shifted exponent of the iteration integrand. It is
    /// <= 0 for u in (0, 1) and is computed through logs so that values
    /// like B e^{bz} (1 - e^{-bzu}) stay meaningful when e^{bz} or u
    /// individually overflow/underflow f64.
    pub fn gap_ln_u(&self, coeff: f64, z: f64, v: f64) -> f64 {
        debug_assert!(v <= 0.0 && z > 0.0 && coeff > 0.0);
        match *self {
            Self::ExpLinear { b } => {
                // -B e^{bz} (1 - e^{-bzu})
                let ln_inner = ln_one_minus_exp_neg_from_ln((b * z).ln() + v);
                neg_exp(coeff.ln() + b * z + ln_inner)
            }
            Self::ExpPower { b, eta } => {
                // -B e^{a} (1 - e^{-a g}) with a = b z^{1/eta},
                // g = 1 - t^{1/eta}
                let a = b * z.powf(1.0 / eta);
                let ln_g = if v < -30.0 {
                    // 1 - (1-u)^{1/eta} = u/eta + O(u^2)
                    v - eta.ln()
                } else {
                    let u = v.exp();
                    // ln_1p keeps full relative accuracy in u; forming
                    // 1 - u first would inject eps(1)/u noise
                    (-((-u).ln_1p() / eta).exp_m1()).ln()
                };
                let ln_inner = ln_one_minus_exp_neg_from_ln(a.ln() + ln_g);
                neg_exp(coeff.ln() + a + ln_inner)
            }
            Self::Power { r } => {
                // -B z^r (1 - t^r)
                let ln_one_minus_tr = if v < -30.0 {
                    v + r.ln()
                } else {
                    let u = v.exp();
                    (-(r * (-u).ln_1p()).exp_m1()).ln()
                };
                neg_exp(coeff.ln() + r * z.ln() + ln_one_minus_tr)
            }
            Self::ZLogZ => {
                let u = v.exp();
                let t = 1.0 - u;
                if z * t <= 1.0 {
                    // Phi(zt) = 0 on (0, 1]
                    return -coeff * self.eval(z);
                }
                if v < -30.0 {
                    // zt ln(zt) - z ln z = -z u (ln z + 1) + O(u^2 z)
                    neg_exp((coeff * z * (z.ln() + 1.0)).ln() + v)
                } else {
                    // zt ln(zt) - z ln z = z(-u ln z + (1-u) ln(1-u)):
                    // both addends are <= 0, so no cancellation remains
                    let ln_1mu = (-u).ln_1p();
                    coeff * z * (-u * z.ln() + (1.0 - u) * ln_1mu)
                }
            }
        }
    }
}

fn neg_exp(ln_mag: f64) -> f64 {
    // -e^{ln_mag}; overflow to -inf is the honest limit
    -ln_mag.exp()
}

impl fmt::Display for PhiFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Self::ExpLinear { b } => write!(f, "explinear:b={b}"),
            Self::ExpPower { b, eta } => write!(f, "exppower:b={b},eta={eta}"),
            Self::Power { r } => write!(f, "power:r={r}"),
            Self::ZLogZ => write!(f, "zlogz"),
        }
    }
}

impl std::str::FromStr for PhiFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (head, rest) = match s.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (s, None),
        };
        let params = |rest: Option<&str>, keys: &[&str]| -> Result<Vec<f64>> {
            let body = rest.ok_or_else(|| {
                Error::Parse(format!("phi family '{head}' requires parameters {keys:?}"))
            })?;
            let mut vals = vec![None; keys.len()];
            for part in body.split(',') {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| Error::Parse(format!("expected key=value, got '{part}'")))?;
                let idx = keys
                    .iter()
                    .position(|&key| key == k)
                    .ok_or_else(|| Error::Parse(format!("unknown key '{k}' for '{head}'")))?;
                if vals[idx].is_some() {
                    return Err(Error::Parse(format!("duplicate key '{k}'")));
                }
                vals[idx] =
                    Some(v.parse::<f64>().map_err(|e| Error::Parse(format!("bad value '{v}': {e}")))?);
            }
            vals.into_iter()
                .enumerate()
                .map(|(i, v)| v.ok_or_else(|| Error::Parse(format!("missing key '{}'", keys[i]))))
                .collect()
        };
        match head {
            "explinear" => {
                let p = params(rest, &["b"])?;
                Self::exp_linear(p[0])
            }
            "exppower" => {
                let p = params(rest, &["b", "eta"])?;
                Self::exp_power(p[0], p[1])
            }
            "power" => {
                let p = params(rest, &["r"])?;
                Self::power(p[0])
            }
            "zlogz" => {
                if rest.is_some() {
                    return Err(Error::Parse("zlogz takes no parameters".into()));
                }
                Ok(Self::ZLogZ)
            }
            other => Err(Error::Parse(format!("unknown phi family '{other}'"))),
        }
    }
}

/// Closed form Phi*_B(x) for Phi(z) = e^{bz}: (x/b) ln(x / (B b e)),
/// valid where the maximizer ln(x/(Bb))/b is positive.
pub fn exp_linear_conjugate(b: f64, coeff: f64, x: f64) -> f64 {
    (x / b) * (x / (coeff * b * std::f64::consts::E)).ln()
}

/// Closed form Phi*_B(x) for Phi(z) = z ln z: B e^{x/B - 1}.
pub fn z_log_z_conjugate(coeff: f64, x: f64) -> f64 {
    coeff * (x / coeff - 1.0).exp()
}
