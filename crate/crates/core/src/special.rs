//! Small special-function helpers: log-sum-exp primitives and the
//! exponential integral Ei on [1, oo).

/// ln(exp(a) + exp(b)) without overflow; handles -inf operands.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// ln(sum exp(v)) over a slice; -inf for an empty or all-(-inf) slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !hi.is_finite() {
        // all -inf, or an inf/nan which propagates below anyway
        return hi;
    }
    let sum: f64 = values.iter().map(|v| (v - hi).exp()).sum();
    hi + sum.ln()
}

/// ln(1 - exp(-x)) for x > 0, given ln(x). Accurate for x far below the
/// underflow threshold of exp.
pub fn ln_one_minus_exp_neg_from_ln(ln_x: f64) -> f64 {
    if ln_x < -30.0 {
        // 1 - e^{-x} = x(1 - x/2 + ...) ; the correction is below 1e-13 here
        ln_x
    } else if ln_x > 6.6 {
        // x > ~700: 1 - e^{-x} indistinguishable from 1
        0.0
    } else {
        let x = ln_x.exp();
        (-(-x).exp_m1()).ln()
    }
}

/// Exponential integral Ei(x) for x >= 1.
///
/// Power series for moderate arguments, asymptotic expansion beyond; the
/// crossover keeps both branches at full double precision. Overflows to
/// +inf for x beyond ~709 + ln overhead, which is the honest answer at
/// this precision.
pub fn ei(x: f64) -> f64 {
    assert!(x >= 1.0, "ei: argument {x} below 1");
    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
    if x <= 40.0 {
        // Ei(x) = gamma + ln x + sum_{k>=1} x^k / (k k!)
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..200 {
            term *= x / k as f64;
            let add = term / k as f64;
            sum += add;
            if add < sum * 1e-17 {
                break;
            }
        }
        EULER_GAMMA + x.ln() + sum
    } else {
        // Ei(x) ~ e^x/x (1 + 1!/x + 2!/x^2 + ...), truncated at the
        // smallest term
        let mut term = 1.0;
        let mut sum = 1.0;
        let mut k = 1.0;
        loop {
            let next = term * k / x;
            if next >= term || !next.is_finite() {
                break;
            }
            sum += next;
            term = next;
            k += 1.0;
        }
        x.exp() / x * sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_add_exp_basics() {
        assert!((log_add_exp(0.0, 0.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(log_add_exp(f64::NEG_INFINITY, 3.0), 3.0);
        // huge magnitudes shift cleanly
        let v = log_add_exp(-1.0e6, -1.0e6);
        assert!((v - (-1.0e6 + std::f64::consts::LN_2)).abs() < 1e-9);
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let vals = [-1.0f64, -2.0, -3.0];
        let direct: f64 = vals.iter().map(|v| v.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&vals) - direct).abs() < 1e-14);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn ln_one_minus_exp_neg_branches_agree() {
        // at the branch edges the two evaluations must coincide
        for &ln_x in &[-30.5f64, -29.5, -5.0, 0.0, 6.5, 6.7] {
            let x: f64 = ln_x.exp();
            let direct = (-(-x).exp_m1()).ln();
            let stable = ln_one_minus_exp_neg_from_ln(ln_x);
            assert!(
                (direct - stable).abs() < 1e-12,
                "ln_x={ln_x}: {direct} vs {stable}"
            );
        }
    }

    #[test]
    fn ei_reference_values() {
        // Abramowitz & Stegun table values
        assert!((ei(1.0) - 1.895_117_816_355_937).abs() < 1e-12);
        assert!((ei(2.0) - 4.954_234_356_001_89).abs() < 1e-11);
        assert!((ei(10.0) - 2_492.228_976_241_877).abs() < 1e-8);
        // branch crossover continuity; d(ln Ei)/dx ~ 1, so the points
        // must sit much closer to 40 than the tolerance
        let below = ei(39.999_999_99);
        let above = ei(40.000_000_01);
        assert!((below / above - 1.0).abs() < 1e-7);
    }

    #[test]
    fn ei_asymptotic_magnitude() {
        // Ei(100) ~ e^100/100 * 1.0102...
        let v = ei(100.0);
        let lead = (100.0f64).exp() / 100.0;
        assert!(v > lead && v < lead * 1.02);
    }
}
