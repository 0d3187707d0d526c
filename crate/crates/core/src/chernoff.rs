//! Upper-bound machinery: certification of the iteration inequality
//!
//!   e^{qz} int_0^1 e^{B Phi(zt)} mu(dt)  <=  e^{B Phi(z)}
//!
//! on a z grid, the resulting Chernoff tail bound -Phi*_B(x), Bernoulli
//! domination of [0,1]-supported multipliers, and the geometric
//! convolution mgf.
//!
//! All quantities are handled through the shifted exponent
//! B(Phi(zt) - Phi(z)) so that certification stays meaningful when
//! B Phi(z) itself is far beyond f64 range.

use crate::error::{Error, Result};
use crate::mlaw::{Law, MLaw};
use crate::numerics::{legendre, log_integrate, ConjugateQuery, LogQuadSpec};
use crate::phi::PhiFamily;
use crate::special::log_add_exp;
use serde::Serialize;

/// Grid certificate for the iteration inequality. `pass` means the
/// margin ln RHS - ln LHS is nonnegative at every grid point; this is
/// explicitly weaker than the inequality holding for all z >= z0.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub phi: PhiFamily,
    pub coeff: f64,
    pub z_grid: Vec<f64>,
    pub lhs_log: Vec<f64>,
    pub rhs_log: Vec<f64>,
    pub margin: Vec<f64>,
    pub pass: bool,
}

fn check_z(phi: &PhiFamily, z: f64) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("z = {z} must be positive")));
    }
    if matches!(phi, PhiFamily::ZLogZ) && z < std::f64::consts::E {
        return Err(Error::Domain(format!(
            "z = {z} below e: z log z bounds are only used for z >= e"
        )));
    }
    Ok(())
}

/// ln RHS - ln LHS of the iteration inequality at one z, i.e.
/// B Phi(z) - qz - ln int e^{B Phi(zt)} mu(dt), computed without ever
/// forming B Phi(z) in linear scale.
pub fn iteration_margin(law: &Law, q: f64, phi: &PhiFamily, coeff: f64, z: f64) -> Result<f64> {
    if !(q > 0.0 && coeff > 0.0) {
        return Err(Error::Domain(format!("q = {q} and B = {coeff} must be positive")));
    }
    check_z(phi, z)?;
    let shifted = ln_shifted_integral(law, phi, coeff, z)?;
    Ok(-q * z - shifted)
}

/// ln int_0^1 e^{B(Phi(zt) - Phi(z))} mu(dt).
fn ln_shifted_integral(law: &Law, phi: &PhiFamily, coeff: f64, z: f64) -> Result<f64> {
    match *law.spec() {
        MLaw::PointMass { m } => Ok(atom_gap(phi, coeff, z, m)),
        MLaw::Bernoulli { m } => Ok(log_add_exp(
            (1.0 - m).ln() + atom_gap(phi, coeff, z, 0.0),
            m.ln() + atom_gap(phi, coeff, z, 1.0),
        )),
        _ => {
            // whole interval in v = ln(1 - t): the surviving mass sits
            // at depths like 1 - t ~ e^{-b z}, far below linear-scale
            // resolution, while everything nearer t = 0 is crushed
            // doubly-exponentially by the gap
            let integrand = |v: f64| {
                // the density must be evaluated in whichever endpoint
                // parameterization is well conditioned: rebuilding
                // 1 - t from t quantizes the near-1 tail to eps(1) and
                // the resulting noise stalls the adaptive refinement
                let ln_f = if v > -0.5 {
                    let t = -v.exp_m1();
                    law.ln_density(t).unwrap_or(f64::NEG_INFINITY)
                } else {
                    law.ln_density_near_one(v).unwrap_or(f64::NEG_INFINITY)
                };
                phi.gap_ln_u(coeff, z, v) + ln_f + v
            };
            const SLAB: f64 = 800.0;
            let mut lo = (gap_unit_v(phi, coeff, z)).min(0.0) - SLAB;
            let mut total = log_integrate(integrand, &LogQuadSpec::new(lo, 0.0, 1e-10, 200_000)?)?;
            // extend downward until an added slab stops mattering:
            // slowly decaying near-one densities need extra depth
            for _ in 0..64 {
                let chunk =
                    log_integrate(integrand, &LogQuadSpec::new(lo - SLAB, lo, 1e-10, 200_000)?)?;
                lo -= SLAB;
                total = log_add_exp(total, chunk);
                if chunk < total - 40.0 {
                    break;
                }
            }
            Ok(total)
        }
    }
}

/// v at which the shifted exponent B(Phi(z(1-e^v)) - Phi(z)) reaches
/// order -1; to the right of this the integrand is suppressed
/// doubly-exponentially.
fn gap_unit_v(phi: &PhiFamily, coeff: f64, z: f64) -> f64 {
    let ln_b = coeff.ln();
    match *phi {
        PhiFamily::ExpLinear { b } => -(ln_b + b * z + (b * z).ln()),
        PhiFamily::ExpPower { b, eta } => {
            let a = b * z.powf(1.0 / eta);
            -(ln_b + a + a.ln() - eta.ln())
        }
        PhiFamily::Power { r } => -(ln_b + r * z.ln() + r.ln()),
        PhiFamily::ZLogZ => -(ln_b + z.ln() + (z.ln() + 1.0).ln()),
    }
}

fn atom_gap(phi: &PhiFamily, coeff: f64, z: f64, t: f64) -> f64 {
    if t >= 1.0 {
        0.0
    } else {
        phi.gap_ln_u(coeff, z, (-t).ln_1p())
    }
}

/// qz + ln int e^{B Phi(zt)} mu(dt). Overflows to +inf together with
/// B Phi(z); use [`iteration_margin`] for the difference, which stays
/// finite.
pub fn iteration_lhs_log(law: &Law, q: f64, phi: &PhiFamily, coeff: f64, z: f64) -> Result<f64> {
    check_z(phi, z)?;
    let shifted = ln_shifted_integral(law, phi, coeff, z)?;
    Ok(q * z + coeff * phi.eval(z) + shifted)
}

/// Evaluates the iteration inequality over an ascending z grid.
/// Failures are a valid report, not an error.
pub fn verify_iteration(
    law: &Law,
    q: f64,
    phi: &PhiFamily,
    coeff: f64,
    z_grid: &[f64],
) -> Result<BoundReport> {
    if z_grid.is_empty() || z_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("z_grid must be non-empty and ascending".into()));
    }
    let mut lhs_log = Vec::with_capacity(z_grid.len());
    let mut rhs_log = Vec::with_capacity(z_grid.len());
    let mut margin = Vec::with_capacity(z_grid.len());
    for &z in z_grid {
        let m = iteration_margin(law, q, phi, coeff, z)?;
        let rhs = coeff * phi.eval(z);
        rhs_log.push(rhs);
        lhs_log.push(rhs - m);
        margin.push(m);
    }
    let pass = margin.iter().all(|&m| m >= 0.0);
    Ok(BoundReport {
        phi: *phi,
        coeff,
        z_grid: z_grid.to_vec(),
        lhs_log,
        rhs_log,
        margin,
        pass,
    })
}

/// Geometric z grid of `n` points on [z0, factor * z0], the default
/// certification window.
pub fn geometric_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || n < 2 {
        return Err(Error::Domain(format!(
            "geometric grid needs 0 < lo < hi and n >= 2, got [{lo}, {hi}] x {n}"
        )));
    }
    let ratio = (hi / lo).ln() / (n - 1) as f64;
    Ok((0..n).map(|i| lo * (ratio * i as f64).exp()).collect())
}

/// Default B search grid for [`find_min_b`]: geometric, 1e-2 .. 1e3.
pub fn default_b_grid() -> Vec<f64> {
    geometric_grid(1e-2, 1e3, 26).expect("static grid")
}

/// Smallest grid B whose certificate passes (full scan; monotonicity in
/// B is not assumed).
pub fn find_min_b(
    law: &Law,
    q: f64,
    phi: &PhiFamily,
    z_grid: &[f64],
    b_grid: &[f64],
) -> Result<(f64, BoundReport)> {
    if b_grid.is_empty() || b_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("B grid must be non-empty and ascending".into()));
    }
    let mut best: Option<(f64, BoundReport)> = None;
    for &b in b_grid {
        let report = verify_iteration(law, q, phi, b, z_grid)?;
        if report.pass && best.is_none() {
            best = Some((b, report));
        }
    }
    best.ok_or_else(|| Error::NotFound("no B in the grid yields a passing certificate".into()))
}

/// Chernoff bound on ln P(R >= x): -Phi*_B(x). The caller is
/// responsible for holding a passing certificate for (phi, B).
pub fn chernoff_upper_log(phi: &PhiFamily, coeff: f64, x: f64) -> Result<f64> {
    Ok(-legendre(&ConjugateQuery::new(*phi, coeff, x)?)?)
}

/// ln(1 + m(e^s - 1)) - ln E e^{sM}: the Bernoulli domination margin,
/// nonnegative for every law supported in [0, 1] by convexity.
pub fn bernoulli_domination_margin(law: &Law, s_grid: &[f64]) -> Result<Vec<f64>> {
    if s_grid.iter().any(|&s| s <= 0.0) {
        return Err(Error::Domain("s grid must be positive".into()));
    }
    let m = law.mean();
    s_grid
        .iter()
        .map(|&s| {
            let dominating = (m * s.exp_m1()).ln_1p();
            Ok(dominating - law.ln_mgf(s)?)
        })
        .collect()
}

/// (1-m) e^{qz} / (1 - m e^{qz}): the mgf of the geometric convolution
/// sum_{k=1}^N q with N ~ Geom(1-m), finite on m e^{qz} < 1.
pub fn geometric_mgf(m: f64, q: f64, z: f64) -> Result<f64> {
    if !(m > 0.0 && m < 1.0) {
        return Err(Error::Domain(format!("m = {m} must be in (0, 1)")));
    }
    if !(q > 0.0) {
        return Err(Error::Domain(format!("q = {q} must be positive")));
    }
    let e_qz = (q * z).exp();
    if m * e_qz >= 1.0 {
        return Err(Error::Domain(format!(
            "z = {z} outside the radius of convergence (m e^qz = {})",
            m * e_qz
        )));
    }
    Ok((1.0 - m) * e_qz / (1.0 - m * e_qz))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(s: &str) -> Law {
        Law::new(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn lhs_point_mass_zero() {
        let l = law("point:m=0");
        // Power: Phi(0) = 0, integrand constant 1
        let phi = PhiFamily::power(2.0).unwrap();
        let got = iteration_lhs_log(&l, 1.5, &phi, 3.0, 2.0).unwrap();
        assert!((got - 3.0).abs() < 1e-12);
        // ExpLinear: Phi(0) = 1, so the atom contributes e^B
        let phi = PhiFamily::exp_linear(1.0).unwrap();
        let got = iteration_lhs_log(&l, 1.5, &phi, 2.0, 3.0).unwrap();
        assert!((got - (1.5 * 3.0 + 2.0)).abs() < 1e-10, "got {got}");
    }

    #[test]
    fn lhs_bernoulli_two_point() {
        let l = law("bernoulli:m=0.25");
        let phi = PhiFamily::power(2.0).unwrap();
        let (q, z) = (1.0, 1.5);
        let got = iteration_lhs_log(&l, q, &phi, 1.0, z).unwrap();
        let expect = q * z + (0.75 + 0.25 * (z * z).exp()).ln();
        assert!((got - expect).abs() < 1e-10);
    }

    #[test]
    fn lhs_uniform_exp_linear_golden() {
        // q=1, B=1, b=1, z=1: 1 + ln int_0^1 exp(e^t) dt.
        // Oracle: 2^22-point midpoint rule in linear scale (integrand
        // peaks at e^e, no overflow).
        let n = 1 << 22;
        let oracle: f64 = (0..n)
            .map(|i| {
                let t = (i as f64 + 0.5) / n as f64;
                (t.exp()).exp() / n as f64
            })
            .sum();
        let l = law("beta:a=1,b=1");
        let phi = PhiFamily::exp_linear(1.0).unwrap();
        let got = iteration_lhs_log(&l, 1.0, &phi, 1.0, 1.0).unwrap();
        assert!(
            (got - (1.0 + oracle.ln())).abs() < 1e-7,
            "got {got}, oracle {}",
            1.0 + oracle.ln()
        );
        // frozen fixture: 1 + ln(Ei(e) - Ei(1))
        assert!((got - 2.843_175_4).abs() < 1e-6, "got {got}");
    }

    #[test]
    fn margin_matches_direct_difference_in_safe_range() {
        // where B Phi(z) is small, margin must equal
        // B Phi(z) - iteration_lhs_log
        let l = law("beta:a=1,b=2");
        let phi = PhiFamily::exp_linear(0.5).unwrap();
        let (q, b, z) = (1.0, 2.0, 8.0);
        let margin = iteration_margin(&l, q, &phi, b, z).unwrap();
        let lhs = iteration_lhs_log(&l, q, &phi, b, z).unwrap();
        let direct = b * phi.eval(z) - lhs;
        assert!((margin - direct).abs() < 1e-8, "{margin} vs {direct}");
    }

    #[test]
    fn point_mass_one_never_certifies() {
        // M = 1 has no contraction: LHS = qz + B Phi(z) > B Phi(z)
        let l = law("point:m=1");
        for phi in [
            PhiFamily::exp_linear(1.0).unwrap(),
            PhiFamily::power(2.0).unwrap(),
        ] {
            let report =
                verify_iteration(&l, 1.0, &phi, 10.0, &geometric_grid(5.0, 50.0, 8).unwrap())
                    .unwrap();
            assert!(!report.pass);
            assert!(report.margin.iter().all(|&m| m < 0.0));
        }
    }

    #[test]
    fn beta_poissonian_certificate() {
        // Beta(1,2), q = 1, b = q/beta = 0.5: some B <= 1e3 passes on
        // z in [20, 200]
        let l = law("beta:a=1,b=2");
        let phi = PhiFamily::exp_linear(0.5).unwrap();
        let z_grid = geometric_grid(20.0, 200.0, 32).unwrap();
        let (b, report) = find_min_b(&l, 1.0, &phi, &z_grid, &default_b_grid()).unwrap();
        assert!(report.pass && b <= 1e3);
        // determinism of the found B
        let (b2, _) = find_min_b(&l, 1.0, &phi, &z_grid, &default_b_grid()).unwrap();
        assert_eq!(b.to_bits(), b2.to_bits());
    }

    #[test]
    fn weibull_power_certificate() {
        // B = A^r (q/r)^r (r-1)^{r-1} with A = 1.5, r = 2, q = 1
        let l = law("weibull:r=2");
        let phi = PhiFamily::power(2.0).unwrap();
        let b = 1.5f64.powi(2) * 0.5f64.powi(2);
        let mut passed = false;
        for z0 in [10.0, 20.0, 50.0, 100.0] {
            let grid = geometric_grid(z0, 10.0 * z0, 16).unwrap();
            let report = verify_iteration(&l, 1.0, &phi, b, &grid).unwrap();
            if report.pass {
                passed = true;
                break;
            }
        }
        assert!(passed, "no z0 <= 100 certifies the Weibull power bound");
    }

    #[test]
    fn margins_finite_at_extreme_z() {
        // b z = 1000: B Phi(z) overflows, margin must stay finite and
        // positive
        let l = law("beta:a=1,b=2");
        let phi = PhiFamily::exp_linear(0.5).unwrap();
        let m = iteration_margin(&l, 1.0, &phi, 2.0, 2000.0).unwrap();
        assert!(m.is_finite(), "margin = {m}");
        assert!(m > 0.0);
        // rough scale: beta ln(B b z e)-ish, tens not thousands
        assert!(m < 100.0, "margin = {m}");
    }

    #[test]
    fn chernoff_closed_forms() {
        // z log z: -B e^{x/B - 1}
        let got = chernoff_upper_log(&PhiFamily::ZLogZ, 2.0, 2.0).unwrap();
        assert!((got + 2.0).abs() < 1e-6, "got {got}");
        // power r=2, B=1: -x^2/4
        let got = chernoff_upper_log(&PhiFamily::power(2.0).unwrap(), 1.0, 4.0).unwrap();
        assert!((got + 4.0).abs() < 1e-12);
        // exp-linear closed form -(x/b) ln(x/(B b e))
        let phi = PhiFamily::exp_linear(1.0).unwrap();
        let x = std::f64::consts::E.powi(2);
        let got = chernoff_upper_log(&phi, 1.0, x).unwrap();
        assert!((got + x).abs() < 1e-5, "got {got}");
        let closed = -crate::phi::exp_linear_conjugate(1.0, 1.0, x);
        assert!((got - closed).abs() < 1e-5);
    }

    #[test]
    fn chernoff_exp_linear_tracks_closed_form_at_large_x() {
        let phi = PhiFamily::exp_linear(0.5).unwrap();
        for &x in &[1e3, 1e4, 1e6] {
            let got = chernoff_upper_log(&phi, 2.0, x).unwrap();
            let closed = -crate::phi::exp_linear_conjugate(0.5, 2.0, x);
            assert!(
                (got - closed).abs() < 1e-7 * closed.abs(),
                "x={x}: {got} vs {closed}"
            );
        }
    }

    #[test]
    fn domination_margins() {
        // uniform: E e^s = e - 1 <= 1 + (e-1)/2 at s = 1
        let l = law("beta:a=1,b=1");
        let m = bernoulli_domination_margin(&l, &[1.0]).unwrap()[0];
        let expect = (1.0 + 0.5 * 1f64.exp_m1()).ln() - 1f64.exp_m1().ln();
        assert!((m - expect).abs() < 1e-8);
        // point mass 0.5 at s = 2: e^1 <= 1 + 0.5(e^2 - 1)
        let l = law("point:m=0.5");
        let m = bernoulli_domination_margin(&l, &[2.0]).unwrap()[0];
        let expect = (1.0 + 0.5 * 2f64.exp_m1()).ln() - 1.0;
        assert!((m - expect).abs() < 1e-12);
        // first-order tangency at s -> 0+
        let l = law("beta:a=1,b=1");
        let m = bernoulli_domination_margin(&l, &[1e-6]).unwrap()[0];
        assert!(m.abs() < 1e-9);
        assert!(m >= -1e-12);
    }

    #[test]
    fn domination_nonnegative_across_catalogue() {
        let grid: Vec<f64> = geometric_grid(1e-3, 10.0, 25).unwrap();
        for s in [
            "beta:a=1,b=1",
            "beta:a=2,b=3",
            "genbeta:b=4,eta=2",
            "weibull:r=2",
            "thintail",
            "bernoulli:m=0.3",
            "point:m=0.5",
        ] {
            let margins = bernoulli_domination_margin(&law(s), &grid).unwrap();
            for (i, &m) in margins.iter().enumerate() {
                assert!(m >= -1e-12, "{s} at s={}: margin {m}", grid[i]);
            }
        }
    }

    #[test]
    fn geometric_mgf_values() {
        assert!((geometric_mgf(0.3, 1.0, 0.0).unwrap() - 1.0).abs() < 1e-15);
        // m=0.5, q=1, z=0.5
        let e = 0.5f64.exp();
        let expect = 0.5 * e / (1.0 - 0.5 * e);
        assert!((geometric_mgf(0.5, 1.0, 0.5).unwrap() - expect).abs() < 1e-12);
        assert!((expect - 4.693_5).abs() < 1e-4);
        // boundary of convergence
        assert!(geometric_mgf(0.5, 1.0, 2f64.ln()).is_err());
    }

    #[test]
    fn bernoulli_certificate_matches_mgf_domain() {
        // for M ~ Bin(1, m) the inequality certifies exactly where the
        // geometric-convolution mgf is finite: qz < ln(1/m)
        let m = 0.3;
        let l = law("bernoulli:m=0.3");
        let q = 1.0;
        let z_split = (1.0f64 / m).ln() / q;
        let phi = PhiFamily::exp_linear(1.0).unwrap();
        let b = 50.0; // large enough that the atom at 0 is negligible
        for &z in &[0.5 * z_split, 0.9 * z_split] {
            let margin = iteration_margin(&l, q, &phi, b, z).unwrap();
            assert!(margin > 0.0, "z = {z} inside the mgf domain must pass");
            assert!(geometric_mgf(m, q, z).is_ok());
        }
        for &z in &[1.1 * z_split, 2.0 * z_split] {
            let margin = iteration_margin(&l, q, &phi, b, z).unwrap();
            assert!(margin < 0.0, "z = {z} outside the mgf domain must fail");
            assert!(geometric_mgf(m, q, z).is_err());
        }
    }

    #[test]
    fn zlogz_grid_floor() {
        let l = law("thintail");
        assert!(iteration_margin(&l, 1.0, &PhiFamily::ZLogZ, 2.0, 1.5).is_err());
    }
}
