//! Numerical check of equivalence at 1: two laws mu, nu are equivalent
//! when the ratio of near-1 tail masses mu_delta / nu_delta stays
//! bounded away from 0 and infinity for all small delta. A finite grid
//! cannot prove that, so the verdict is a certificate over a geometric
//! delta grid plus a trend test that flags slow divergence.

use crate::error::{Error, Result};
use crate::mlaw::{Law, MLaw};
use serde::Serialize;

/// How many decades below epsilon the grid reaches.
const GRID_DECADES: f64 = 6.0;
/// Bounded-ratio threshold: D_hat / d_hat beyond this fails outright.
const MAX_SPAN: f64 = 1e6;
/// Trend threshold: the ratio may drift by at most this relative amount
/// over the last decade of delta.
const MAX_TREND: f64 = 0.10;

/// Which criterion decided the verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EquivVerdict {
    Pass,
    /// a tail mass vanished at this delta, the ratio is undefined
    UndefinedRatio { delta: f64 },
    /// D_hat / d_hat exceeded the bounded-ratio threshold
    SpanExceeded { span: f64 },
    /// the ratio was still drifting over the last decade of the grid
    Drifting { relative_change: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivReport {
    pub mu: MLaw,
    pub nu: MLaw,
    pub epsilon: f64,
    /// descending deltas in (0, epsilon]
    pub delta_grid: Vec<f64>,
    pub mu_tail: Vec<f64>,
    pub nu_tail: Vec<f64>,
    /// mu_delta / nu_delta per grid point; NaN where undefined
    pub ratio: Vec<f64>,
    pub d_hat: f64,
    pub big_d_hat: f64,
    pub pass: bool,
    pub verdict: EquivVerdict,
}

/// Evaluates mu_delta / nu_delta on a geometric grid from epsilon down
/// to epsilon * 10^-6 and decides pass/fail. Ratios are formed from log
/// tail masses, so deeply subnormal tails still compare cleanly.
pub fn check_equivalence(mu: &Law, nu: &Law, epsilon: f64, n_grid: usize) -> Result<EquivReport> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must lie in (0, 1)")));
    }
    if n_grid < 2 {
        return Err(Error::Domain("need at least 2 grid points".into()));
    }
    let step = GRID_DECADES * std::f64::consts::LN_10 / (n_grid - 1) as f64;
    let delta_grid: Vec<f64> = (0..n_grid)
        .map(|i| epsilon * (-step * i as f64).exp())
        .collect();

    let mut mu_tail = Vec::with_capacity(n_grid);
    let mut nu_tail = Vec::with_capacity(n_grid);
    let mut ln_ratio = Vec::with_capacity(n_grid);
    let mut undefined_at = None;
    for &delta in &delta_grid {
        let lm = mu.ln_tail_mass(delta)?;
        let ln = nu.ln_tail_mass(delta)?;
        mu_tail.push(lm.exp());
        nu_tail.push(ln.exp());
        if lm == f64::NEG_INFINITY || ln == f64::NEG_INFINITY {
            undefined_at.get_or_insert(delta);
            ln_ratio.push(f64::NAN);
        } else {
            ln_ratio.push(lm - ln);
        }
    }

    let ratio: Vec<f64> = ln_ratio.iter().map(|r| r.exp()).collect();
    let finite: Vec<f64> = ln_ratio.iter().copied().filter(|r| r.is_finite()).collect();
    let (d_hat, big_d_hat) = if finite.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        let lo = finite.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo.exp(), hi.exp())
    };

    let verdict = if let Some(delta) = undefined_at {
        EquivVerdict::UndefinedRatio { delta }
    } else {
        let span = (big_d_hat.ln() - d_hat.ln()).exp();
        if !span.is_finite() || span > MAX_SPAN {
            EquivVerdict::SpanExceeded { span }
        } else {
            // compare the ratio at the grid end against one decade up
            let last = *ln_ratio.last().unwrap();
            let decade_pts = ((n_grid - 1) as f64 / GRID_DECADES).ceil() as usize;
            let earlier = ln_ratio[n_grid - 1 - decade_pts.min(n_grid - 1)];
            let relative_change = (last - earlier).exp_m1().abs();
            if relative_change > MAX_TREND {
                EquivVerdict::Drifting { relative_change }
            } else {
                EquivVerdict::Pass
            }
        }
    };

    Ok(EquivReport {
        mu: *mu.spec(),
        nu: *nu.spec(),
        epsilon,
        delta_grid,
        mu_tail,
        nu_tail,
        ratio,
        d_hat,
        big_d_hat,
        pass: verdict == EquivVerdict::Pass,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(s: &str) -> Law {
        Law::new(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn identical_laws_pass_with_unit_ratio() {
        let mu = law("beta:a=1,b=2");
        let report = check_equivalence(&mu, &mu, 0.1, 25).unwrap();
        assert!(report.pass);
        assert!(report.ratio.iter().all(|&r| (r - 1.0).abs() < 1e-12));
        assert!((report.d_hat - 1.0).abs() < 1e-12);
        assert!((report.big_d_hat - 1.0).abs() < 1e-12);
    }

    #[test]
    fn same_beta_different_alpha_pass() {
        let report = check_equivalence(&law("beta:a=2,b=3"), &law("beta:a=1,b=3"), 0.1, 25).unwrap();
        assert!(report.pass, "verdict: {:?}", report.verdict);
        assert!(report.big_d_hat / report.d_hat < 10.0);
    }

    #[test]
    fn different_beta_exponent_fails() {
        // mu_delta / nu_delta = delta / delta^2 = 1/delta diverges
        let report = check_equivalence(&law("beta:a=1,b=1"), &law("beta:a=1,b=2"), 0.1, 25).unwrap();
        assert!(!report.pass);
        // either the span blows past 1e6 or the drift test fires first;
        // with a 6-decade grid the span lands right at 1e6
        match report.verdict {
            EquivVerdict::SpanExceeded { .. } | EquivVerdict::Drifting { .. } => {}
            ref v => panic!("unexpected verdict {v:?}"),
        }
        assert!(report.big_d_hat / report.d_hat > 1e5);
    }

    #[test]
    fn genbeta_eta_one_is_beta() {
        let report =
            check_equivalence(&law("genbeta:b=3,eta=1"), &law("beta:a=1,b=3"), 0.1, 25).unwrap();
        assert!(report.pass);
        assert!(report.ratio.iter().all(|&r| (r - 1.0).abs() < 1e-8));
    }

    #[test]
    fn weibull_vs_beta_fails() {
        // super-polynomial decay at 1 cannot match any beta tail
        let report = check_equivalence(&law("weibull:r=2"), &law("beta:a=1,b=2"), 0.05, 25).unwrap();
        assert!(!report.pass);
    }

    #[test]
    fn verdict_symmetry() {
        let (mu, nu) = (law("beta:a=2,b=3"), law("beta:a=1,b=3"));
        let fwd = check_equivalence(&mu, &nu, 0.1, 25).unwrap();
        let bwd = check_equivalence(&nu, &mu, 0.1, 25).unwrap();
        assert_eq!(fwd.pass, bwd.pass);
        assert!((fwd.d_hat - 1.0 / bwd.big_d_hat).abs() < 1e-9 * fwd.d_hat.abs());
        assert!((fwd.big_d_hat - 1.0 / bwd.d_hat).abs() < 1e-9 * fwd.big_d_hat.abs());
    }

    #[test]
    fn point_mass_ratio_undefined() {
        let report =
            check_equivalence(&law("point:m=0.5"), &law("beta:a=1,b=2"), 0.1, 10).unwrap();
        assert!(!report.pass);
        match report.verdict {
            EquivVerdict::UndefinedRatio { delta } => assert!(delta <= 0.1),
            ref v => panic!("unexpected verdict {v:?}"),
        }
    }

    #[test]
    fn input_validation() {
        let mu = law("beta:a=1,b=1");
        assert!(check_equivalence(&mu, &mu, 1.5, 10).is_err());
        assert!(check_equivalence(&mu, &mu, 0.1, 1).is_err());
    }
}
