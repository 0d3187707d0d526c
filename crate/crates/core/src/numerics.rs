//! Deterministic numerical kernels: log-domain adaptive quadrature,
//! bracketed root finding and the Legendre-type conjugate transform.
//!
//! Everything here is a pure function of its arguments and safe to call
//! concurrently.

use crate::error::{Error, Result};
use crate::phi::PhiFamily;
use crate::special::{log_add_exp, log_sum_exp};

/// Panel rule order for the adaptive scheme. Gauss-Legendre nodes are
/// strictly interior, so integrable endpoint singularities are never
/// evaluated.
const GL_ORDER: usize = 15;

/// Gauss-Legendre nodes/weights on [-1, 1], generated once by Newton
/// iteration on the Legendre recurrence.
fn gl_rule() -> &'static ([f64; GL_ORDER], [f64; GL_ORDER]) {
    use std::sync::OnceLock;
    static RULE: OnceLock<([f64; GL_ORDER], [f64; GL_ORDER])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = [0.0; GL_ORDER];
        let mut weights = [0.0; GL_ORDER];
        for i in 0..n {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                // evaluate P_n and P_n' at x via the three-term recurrence
                let mut p0 = 1.0;
                let mut p1 = x;
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// ln of a single-panel Gauss-Legendre estimate; exposed for cumulative
/// density tables, which integrate between consecutive grid knots.
pub(crate) fn panel_log_gl<F: Fn(f64) -> f64>(ln_f: &F, a: f64, b: f64) -> f64 {
    panel_log(ln_f, a, b)
}

/// Interval and tolerances for [`log_integrate`].
#[derive(Debug, Clone, Copy)]
pub struct LogQuadSpec {
    pub lower: f64,
    pub upper: f64,
    /// Target relative error of the integral (not of its log).
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl LogQuadSpec {
    pub fn new(lower: f64, upper: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::Domain(format!(
                "quadrature interval ({lower}, {upper}) must be finite with lower < upper"
            )));
        }
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(Error::Domain(format!("rel_tol {rel_tol} must be in (0, 1)")));
        }
        if max_subdivisions == 0 {
            return Err(Error::Domain("max_subdivisions must be positive".into()));
        }
        Ok(Self {
            lower,
            upper,
            rel_tol,
            max_subdivisions,
        })
    }

    /// Defaults good for the integrands in this crate.
    pub fn default_tol(lower: f64, upper: f64) -> Result<Self> {
        Self::new(lower, upper, 1e-10, 100_000)
    }
}

/// ln of a single-panel Gauss-Legendre estimate of int_a^b e^{ln_f}.
fn panel_log<F: Fn(f64) -> f64>(ln_f: &F, a: f64, b: f64) -> f64 {
    let (nodes, weights) = gl_rule();
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let ln_half = half.ln();
    let mut terms = [f64::NEG_INFINITY; GL_ORDER];
    for i in 0..GL_ORDER {
        let x = mid + half * nodes[i];
        let v = ln_f(x);
        terms[i] = if v == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            ln_half + weights[i].ln() + v
        };
    }
    log_sum_exp(&terms)
}

/// Returns ln of int e^{ln_f(t)} dt over the spec's interval.
///
/// Works entirely in shifted-exponent arithmetic, so integrands as small
/// as e^{-1e6} are fine. `ln_f` may tend to +-inf at the endpoints as
/// long as the integral exists; the panel rule never samples the
/// endpoints themselves.
pub fn log_integrate<F: Fn(f64) -> f64>(ln_f: F, spec: &LogQuadSpec) -> Result<f64> {
    LogQuadSpec::new(spec.lower, spec.upper, spec.rel_tol, spec.max_subdivisions)?;

    // initial uniform split so a narrow interior peak cannot hide from a
    // single coarse panel
    const INIT_PANELS: usize = 16;
    let width = (spec.upper - spec.lower) / INIT_PANELS as f64;
    let mut stack: Vec<(f64, f64, f64)> = Vec::with_capacity(64);
    let mut scale = f64::NEG_INFINITY;
    for i in 0..INIT_PANELS {
        let a = spec.lower + i as f64 * width;
        let b = if i == INIT_PANELS - 1 {
            spec.upper
        } else {
            a + width
        };
        let e0 = panel_log(&ln_f, a, b);
        scale = scale.max(e0);
        stack.push((a, b, e0));
    }

    let mut accepted: Vec<f64> = Vec::with_capacity(256);
    let mut subdivisions = 0usize;
    // contributions this far below the running peak cannot move the total
    // at rel_tol accuracy
    let negligible_gap = -(spec.rel_tol.ln()) + (spec.max_subdivisions as f64).ln() + 10.0;

    while let Some((a, b, e0)) = stack.pop() {
        let m = 0.5 * (a + b);
        if !(a < m && m < b) {
            // interval at the resolution of f64: accept as is
            accepted.push(e0);
            continue;
        }
        subdivisions += 1;
        if subdivisions > spec.max_subdivisions {
            return Err(Error::QuadratureDiverged {
                subdivisions: spec.max_subdivisions,
            });
        }
        let left = panel_log(&ln_f, a, m);
        let right = panel_log(&ln_f, m, b);
        let refined = log_add_exp(left, right);
        scale = scale.max(refined);

        let converged = if refined == f64::NEG_INFINITY {
            e0 == f64::NEG_INFINITY || e0 < scale - negligible_gap
        } else {
            let rel_err = (e0 - refined).exp_m1().abs();
            // panel estimates inherit absolute rounding noise of order
            // eps * |ln f|; below that floor refinement cannot certify
            // anything further
            let noise_floor = 8.0 * f64::EPSILON * e0.abs().max(refined.abs());
            // a panel holding a fraction e^{refined - scale} of the total
            // only needs that fraction of the accuracy; without this,
            // panels just inside the negligibility cutoff are held to the
            // peak panel's relative tolerance, which rounding noise in
            // their much larger |ln f| can make unreachable. The 1024
            // divisor keeps the summed error of panels accepted this way
            // within the overall budget.
            let share_allowance = 0.25 * spec.rel_tol * (scale - refined).exp() / 1024.0;
            rel_err <= (0.25 * spec.rel_tol).max(noise_floor).max(share_allowance)
                || refined < scale - negligible_gap
        };
        if converged {
            accepted.push(left);
            accepted.push(right);
        } else {
            stack.push((a, m, left));
            stack.push((m, b, right));
        }
    }
    Ok(log_sum_exp(&accepted))
}

/// ln of int_0^width g(w) dw for an integrand that decays (roughly
/// exponentially) away from w = 0.
///
/// The caller supplies ln g as a function of the distance w from the
/// peak. Integration runs in v = ln w coordinates, where an exponential
/// decay profile has O(1) transition width regardless of how narrow the
/// peak is in linear scale. Used for near-endpoint tail masses whose
/// width can be far below e^-700 relative to the interval.
pub fn log_integrate_peak_decay<F: Fn(f64) -> f64>(
    ln_g: F,
    width: f64,
    rel_tol: f64,
) -> Result<f64> {
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::Domain(format!("peak-decay width {width} must be positive")));
    }
    let v_hi = width.ln();
    // w below width * e^-760 is beyond f64 resolution relative to the
    // peak location and contributes e^{ln g(0) + v} at most
    let v_lo = v_hi - 760.0;
    let spec = LogQuadSpec::new(v_lo, v_hi, rel_tol, 200_000)?;
    log_integrate(|v| ln_g(v.exp()) + v, &spec)
}

/// Bisection on a bracketing interval. Deterministic: identical inputs
/// give bitwise-identical output.
pub fn find_root<F: Fn(f64) -> f64>(f: F, bracket: (f64, f64), tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Domain(format!("bracket ({lo}, {hi}) must be ordered")));
    }
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance {tol} must be positive")));
    }
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoSignChange(lo, hi));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // f64 resolution reached
        }
        let fmid = f(mid);
        if fmid == 0.0 {
            return Ok(mid);
        }
        if fmid.signum() == flo.signum() {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inputs for the conjugate transform sup_z { zx - B Phi(z) }.
#[derive(Debug, Clone, Copy)]
pub struct ConjugateQuery {
    pub phi: PhiFamily,
    pub coeff: f64,
    pub x: f64,
    pub z_cap: f64,
}

impl ConjugateQuery {
    pub fn new(phi: PhiFamily, coeff: f64, x: f64) -> Result<Self> {
        Self::with_cap(phi, coeff, x, DEFAULT_Z_CAP)
    }

    pub fn with_cap(phi: PhiFamily, coeff: f64, x: f64, z_cap: f64) -> Result<Self> {
        if !(coeff > 0.0) {
            return Err(Error::Domain(format!("B = {coeff} must be positive")));
        }
        if !(x > 0.0) {
            return Err(Error::Domain(format!("x = {x} must be positive")));
        }
        if !(z_cap > 0.0) {
            return Err(Error::Domain(format!("z_cap = {z_cap} must be positive")));
        }
        Ok(Self {
            phi,
            coeff,
            x,
            z_cap,
        })
    }
}

/// The supremum is attained at z -> inf as x grows, so a fixed cap is
/// wrong; the search doubles the cap up to [`MAX_Z_CAP`] before flagging
/// truncation.
pub const DEFAULT_Z_CAP: f64 = 1e4;
pub const MAX_Z_CAP: f64 = 1e8;

/// Value of Phi*_B(x) = sup_z { zx - B Phi(z) }.
///
/// Power laws use the closed form x^{r*} / (r* (Br)^{1/(r-1)}); the
/// remaining families go through one-dimensional maximization in ln z.
pub fn legendre(query: &ConjugateQuery) -> Result<f64> {
    let q = ConjugateQuery::with_cap(query.phi, query.coeff, query.x, query.z_cap)?;
    if let PhiFamily::Power { r } = q.phi {
        let r_star = r / (r - 1.0);
        return Ok(q.x.powf(r_star) / (r_star * (q.coeff * r).powf(1.0 / (r - 1.0))));
    }
    let objective = |z: f64| z * q.x - q.coeff * q.phi.eval(z);
    let mut cap = q.z_cap;
    loop {
        let (z_star, value) = maximize_log_scale(&objective, 1e-12, cap);
        if z_star < 0.9 * cap {
            return Ok(value);
        }
        if cap >= MAX_Z_CAP {
            return Err(Error::Truncated { z_cap: cap });
        }
        cap = (cap * 2.0).min(MAX_Z_CAP);
    }
}

/// Golden-section maximization over ln z on [lo, hi]. The objective must
/// be unimodal there (it is: zx - B Phi(z) is concave in z for convex
/// Phi, and unimodality survives the monotone reparameterization).
fn maximize_log_scale<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = lo.ln();
    let mut b = hi.ln();
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c.exp());
    let mut fd = f(d.exp());
    for _ in 0..300 {
        if b - a < 1e-13 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c.exp());
        } else {
            // ties (including both -inf on an overflowed right flank)
            // shrink from the right, where the -inf plateau lives
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d.exp());
        }
    }
    let z = (0.5 * (a + b)).exp();
    (z, f(z))
}
