//! χ² distribution functions for integer degrees of freedom.
//!
//! The CDF is the regularized lower incomplete gamma `P(k/2, x/2)`, computed
//! by its power series for `x < a + 1` and by a Lentz continued fraction for
//! the upper tail otherwise. Quantiles use safeguarded Newton iterations.

use crate::error::{invalid, Error, Result};

const MAX_ITER: usize = 500;
const EPS: f64 = 1e-16;

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, nine terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    let t = x + G + 0.5;
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// `(P(a,x), Q(a,x))`, the regularized incomplete gamma pair.
fn gamma_pq(a: f64, x: f64) -> Result<(f64, f64)> {
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    let log_prefactor = -x + a * x.ln() - ln_gamma(a);
    if x < a + 1.0 {
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..MAX_ITER {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * EPS {
                let p = (log_prefactor.exp() * sum).min(1.0);
                return Ok((p, 1.0 - p));
            }
        }
        Err(Error::NoConvergence("incomplete gamma series".into()))
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..MAX_ITER {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < EPS {
                let q = (log_prefactor.exp() * h).min(1.0);
                return Ok((1.0 - q, q));
            }
        }
        Err(Error::NoConvergence("incomplete gamma continued fraction".into()))
    }
}

fn check(x: f64, df: u32) -> Result<()> {
    if df == 0 {
        return Err(invalid("degrees of freedom must be positive"));
    }
    if !(x >= 0.0) {
        return Err(invalid(format!("chi-square argument must be >= 0, got {x}")));
    }
    Ok(())
}

/// `P(χ²_df ≤ x)`.
pub fn chisq_cdf(x: f64, df: u32) -> Result<f64> {
    check(x, df)?;
    if x.is_infinite() {
        return Ok(1.0);
    }
    Ok(gamma_pq(0.5 * df as f64, 0.5 * x)?.0)
}

/// Upper tail `P(χ²_df > x)`, accurate where the CDF is close to one.
pub fn chisq_sf(x: f64, df: u32) -> Result<f64> {
    check(x, df)?;
    if x.is_infinite() {
        return Ok(0.0);
    }
    Ok(gamma_pq(0.5 * df as f64, 0.5 * x)?.1)
}

pub fn chisq_pdf(x: f64, df: u32) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let k = 0.5 * df as f64;
    if x == 0.0 {
        return match df {
            1 => f64::INFINITY,
            2 => 0.5,
            _ => 0.0,
        };
    }
    ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - ln_gamma(k)).exp()
}

/// The `p`-quantile of χ²_df, for `0 < p < 1`.
///
/// Brackets the root by doubling, then runs Newton steps that fall back to
/// bisection whenever a step leaves the bracket. For `p > 0.5` the equation
/// is solved on the upper tail to keep full relative accuracy.
pub fn chisq_quantile(p: f64, df: u32) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid(format!("quantile level must lie in (0,1), got {p}")));
    }
    if df == 0 {
        return Err(invalid("degrees of freedom must be positive"));
    }
    let upper = p > 0.5;
    let target = if upper { 1.0 - p } else { p };
    // f is increasing in x in both branches
    let f = |x: f64| -> Result<f64> {
        Ok(if upper { target - chisq_sf(x, df)? } else { chisq_cdf(x, df)? - target })
    };

    let mut lo = 0.0;
    let mut hi = df as f64;
    while f(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoConvergence("chi-square quantile bracket".into()));
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = chisq_pdf(x, df);
        let newton = if pdf > 0.0 && pdf.is_finite() { x - fx / pdf } else { f64::NAN };
        let next = if newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - x).abs() <= 1e-15 * x.max(1e-300) || hi - lo <= 1e-15 * hi {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson on the density after the substitution x = t², which
    /// removes the df = 1 singularity at zero.
    fn oracle_cdf(x: f64, df: u32) -> f64 {
        fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
            let (flm, frm) = (f(lm), f(rm));
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
                + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let k = df as f64 / 2.0;
        // log Γ(k) for half-integers, exactly via the recurrence
        let mut lg = if df % 2 == 0 { 0.0 } else { 0.5 * std::f64::consts::PI.ln() };
        let mut a = if df % 2 == 0 { 1.0 } else { 0.5 };
        while a < k {
            lg += a.ln();
            a += 1.0;
        }
        let g = move |t: f64| {
            if t == 0.0 {
                return if df == 1 { 2.0 * (-(k * std::f64::consts::LN_2) - lg).exp() } else { 0.0 };
            }
            let x = t * t;
            2.0 * t * ((k - 1.0) * x.ln() - 0.5 * x - k * std::f64::consts::LN_2 - lg).exp()
        };
        let b = x.sqrt();
        let (fa, fm, fb) = (g(0.0), g(0.5 * b), g(b));
        let whole = b / 6.0 * (fa + 4.0 * fm + fb);
        simpson(&g, 0.0, b, fa, fm, fb, whole, 1e-13, 50)
    }

    fn oracle_quantile(p: f64, df: u32) -> f64 {
        let (mut lo, mut hi) = (0.0, 200.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if oracle_cdf(mid, df) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn closed_forms() {
        for k in 1..=12 {
            assert_eq!(chisq_cdf(0.0, k).unwrap(), 0.0);
        }
        let x = 2.0 * std::f64::consts::LN_2;
        assert!((chisq_cdf(x, 2).unwrap() - 0.5).abs() < 1e-15);
        assert!((chisq_quantile(0.5, 2).unwrap() - x).abs() < 1e-12);
        for &x in &[0.3, 1.0, 7.5, 40.0] {
            assert!((chisq_cdf(x, 2).unwrap() - (1.0 - (-x / 2.0).exp())).abs() < 1e-14);
        }
    }

    #[test]
    fn oracle_values_are_frozen() {
        // Frozen from the quadrature oracle above.
        let frozen_cdf = oracle_cdf(12.5916, 6);
        assert!((frozen_cdf - 0.95).abs() < 1e-4);
        assert!((chisq_cdf(12.5916, 6).unwrap() - frozen_cdf).abs() < 1e-9);
        let q1 = oracle_quantile(0.95, 1);
        assert!((q1 - 3.841_458_820_694_124).abs() < 1e-7);
        assert!((chisq_quantile(0.95, 1).unwrap() - 3.841_458_820_694_124).abs() < 1e-4);
    }

    #[test]
    fn quantile_matches_oracle_and_inverts_cdf() {
        for &df in &[1, 2, 3, 6, 9, 12] {
            for &p in &[0.05, 0.5, 0.9, 0.95, 0.99] {
                let q = chisq_quantile(p, df).unwrap();
                assert!((q - oracle_quantile(p, df)).abs() < 1e-6, "df={df} p={p}");
                assert!((chisq_cdf(q, df).unwrap() - p).abs() < 1e-8);
            }
        }
        for &k in &[1, 3, 6] {
            for &x in &[0.5, 3.0, 10.0] {
                let back = chisq_quantile(chisq_cdf(x, k).unwrap(), k).unwrap();
                assert!((back - x).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn cdf_is_monotone_on_grid() {
        for df in 1..=12 {
            let mut prev = 0.0;
            for i in 0..1000 {
                let x = i as f64 * 0.06;
                let c = chisq_cdf(x, df).unwrap();
                assert!((0.0..=1.0).contains(&c));
                assert!(c >= prev);
                prev = c;
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(chisq_cdf(-1.0, 3).is_err());
        assert!(chisq_cdf(1.0, 0).is_err());
        assert!(chisq_quantile(0.0, 3).is_err());
        assert!(chisq_quantile(1.0, 3).is_err());
        assert!(chisq_quantile(f64::NAN, 3).is_err());
    }

    #[test]
    fn sf_complements_cdf() {
        for df in [1, 4, 9] {
            for x in [0.1, 2.0, 25.0, 80.0] {
                let s = chisq_sf(x, df).unwrap() + chisq_cdf(x, df).unwrap();
                assert!((s - 1.0).abs() < 1e-14);
            }
        }
    }
}
