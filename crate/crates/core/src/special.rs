//! Shared special-function kernels: log-Gamma, regularized incomplete
//! gamma, chi-square tails and log-binomial coefficients.

use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
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

/// `ln Gamma(x)` for `x > 0` (Lanczos approximation, ~1e-13 relative).
pub fn ln_gamma(x: f64) -> f64 {
    debug_assert!(x > 0.0, "ln_gamma requires x > 0, got {x}");
    if x < 0.5 {
        // Reflection keeps the approximation in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut series = LANCZOS[0];
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        series += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + series.ln()
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn reg_gamma_lower(a: f64, x: f64) -> Result<f64> {
    if a <= 0.0 || x < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "reg_gamma_lower requires a > 0, x >= 0; got a = {a}, x = {x}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        Ok(1.0 - gamma_cont_frac(a, x)?)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn reg_gamma_upper(a: f64, x: f64) -> Result<f64> {
    if a <= 0.0 || x < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "reg_gamma_upper requires a > 0, x >= 0; got a = {a}, x = {x}"
        )));
    }
    if x == 0.0 {
        return Ok(1.0);
    }
    if x < a + 1.0 {
        Ok(1.0 - gamma_series(a, x)?)
    } else {
        gamma_cont_frac(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> Result<f64> {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            return Ok(sum * (-x + a * x.ln() - ln_gamma(a)).exp());
        }
    }
    Err(Error::NonConvergent(format!(
        "incomplete gamma series at a = {a}, x = {x}"
    )))
}

fn gamma_cont_frac(a: f64, x: f64) -> Result<f64> {
    // Modified Lentz continued fraction for Q(a, x).
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            return Ok(h * (-x + a * x.ln() - ln_gamma(a)).exp());
        }
    }
    Err(Error::NonConvergent(format!(
        "incomplete gamma continued fraction at a = {a}, x = {x}"
    )))
}

/// Upper-tail p-value of a chi-square statistic with `df` degrees of freedom.
pub fn chi_square_sf(stat: f64, df: f64) -> Result<f64> {
    reg_gamma_upper(df / 2.0, stat / 2.0)
}

/// Pearson chi-square p-value of observed counts against model
/// probabilities (upper tail, `len - 1` degrees of freedom).
pub fn chi_square_test(counts: &[u64], probs: &[f64]) -> Result<f64> {
    if counts.len() != probs.len() || counts.len() < 2 {
        return Err(Error::InvalidParameter(
            "chi_square_test needs matching counts/probs of length >= 2".into(),
        ));
    }
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(probs) {
        let expected = total as f64 * p;
        if expected <= 0.0 {
            return Err(Error::InvalidParameter(
                "chi_square_test: zero expected count".into(),
            ));
        }
        let d = c as f64 - expected;
        stat += d * d / expected;
    }
    chi_square_sf(stat, (counts.len() - 1) as f64)
}

/// `ln C(n, k)` via log-Gamma; exact overflow-free binomials.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    assert!(k <= n, "ln_binomial requires k <= n");
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

/// Clopper-Pearson 95% upper confidence bound for a proportion with zero
/// observed successes in `n` trials: `1 - 0.05^(1/n)`.
pub fn zero_event_upper_bound(n: u64) -> f64 {
    assert!(n > 0);
    1.0 - 0.05f64.powf(1.0 / n as f64)
}

/// Gauss-Legendre nodes and weights of order `m` on `[-1, 1]`.
///
/// Newton iteration on the Legendre recurrence; nodes are sorted
/// ascending and accurate to ~1e-15.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(m >= 1);
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let half = m.div_ceil(2);
    for k in 0..half {
        // Tricomi-style initial guess for the k-th positive root.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Evaluate P_m(x) and P_m'(x) via the three-term recurrence.
            let mut p0 = 1.0f64;
            let mut p1 = x;
            for j in 2..=m {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            let p = p1;
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[m - 1 - k] = x;
        weights[m - 1 - k] = w;
        nodes[k] = -x;
        weights[k] = w;
    }
    if m % 2 == 1 {
        // The middle node is exactly zero; recompute its weight cleanly.
        let mid = m / 2;
        nodes[mid] = 0.0;
        let mut p0 = 1.0f64;
        let mut p1 = 0.0f64;
        for j in 2..=m {
            let jf = j as f64;
            let p2 = (-(jf - 1.0) * p0) / jf;
            p0 = p1;
            p1 = p2;
        }
        let dp = m as f64 * (0.0 * p1 - p0) / (0.0 - 1.0);
        weights[mid] = 2.0 / (dp * dp);
    }
    (nodes, weights)
}

/// Integrate `f` over consecutive panels `[pts[i], pts[i+1]]`, each split
/// into `subdiv` equal subpanels evaluated with Gauss-Legendre of the
/// given order.
pub fn integrate_panels(f: &dyn Fn(f64) -> f64, pts: &[f64], order: usize, subdiv: usize) -> f64 {
    let (nodes, weights) = gauss_legendre(order);
    let mut acc = crate::logdomain::CompensatedSum::new();
    for pair in pts.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.partial_cmp(&a) != Some(std::cmp::Ordering::Greater) {
            continue;
        }
        let h = (b - a) / subdiv as f64;
        for s in 0..subdiv {
            let lo = a + s as f64 * h;
            let mid = lo + 0.5 * h;
            let scale = 0.5 * h;
            for (x, w) in nodes.iter().zip(&weights) {
                acc.add(w * scale * f(mid + scale * x));
            }
        }
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ln_gamma_known_values() {
        // Gamma(1) = Gamma(2) = 1, Gamma(5) = 24, Gamma(0.5) = sqrt(pi).
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert_relative_eq!(ln_gamma(5.0), 24.0f64.ln(), max_relative = 1e-13);
        assert_relative_eq!(
            ln_gamma(0.5),
            0.5 * std::f64::consts::PI.ln(),
            max_relative = 1e-13
        );
        // Large argument against Stirling with correction terms.
        let x = 1234.5f64;
        let stirling =
            (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
                - 1.0 / (360.0 * x.powi(3));
        assert_relative_eq!(ln_gamma(x), stirling, max_relative = 1e-13);
    }

    #[test]
    fn incomplete_gamma_special_cases() {
        // P(1, x) = 1 - exp(-x).
        for &x in &[0.1, 1.0, 3.5, 10.0] {
            assert_relative_eq!(
                reg_gamma_lower(1.0, x).unwrap(),
                -(-x).exp_m1(),
                max_relative = 1e-12
            );
        }
        // P + Q = 1.
        for &(a, x) in &[(0.5, 0.2), (3.0, 2.0), (10.0, 14.0), (50.0, 40.0)] {
            let p = reg_gamma_lower(a, x).unwrap();
            let q = reg_gamma_upper(a, x).unwrap();
            assert_relative_eq!(p + q, 1.0, max_relative = 1e-12);
        }
        // Chi-square with 2 df is Exp(1/2).
        assert_relative_eq!(
            chi_square_sf(3.0, 2.0).unwrap(),
            (-1.5f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn binomials_are_exact_in_log() {
        assert_relative_eq!(ln_binomial(4, 2), 6.0f64.ln(), max_relative = 1e-13);
        assert_relative_eq!(ln_binomial(8, 4), 70.0f64.ln(), max_relative = 1e-13);
        assert_relative_eq!(
            ln_binomial(100, 50),
            1.008913445455642e29f64.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn zero_event_bound_matches_definition() {
        let n = 1000u64;
        let p = zero_event_upper_bound(n);
        assert_relative_eq!((1.0 - p).powf(n as f64), 0.05, max_relative = 1e-10);
    }

    #[test]
    fn gauss_legendre_integrates_monomials_exactly() {
        // Order m is exact through degree 2m - 1.
        for m in [2usize, 5, 8, 13, 40, 64] {
            let (nodes, weights) = gauss_legendre(m);
            assert!(nodes.windows(2).all(|w| w[0] < w[1]));
            assert!(weights.iter().all(|&w| w > 0.0));
            for d in 0..2 * m {
                let quad: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .map(|(x, w)| w * x.powi(d as i32))
                    .sum();
                let exact = if d % 2 == 1 {
                    0.0
                } else {
                    2.0 / (d as f64 + 1.0)
                };
                assert!(
                    (quad - exact).abs() < 5e-14,
                    "m = {m}, degree {d}: {quad} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn panel_integration_handles_smooth_integrands() {
        let pts = [0.0, 1.0, 3.0];
        let val = integrate_panels(&|x: f64| (-x).exp(), &pts, 32, 4);
        assert_relative_eq!(val, 1.0 - (-3.0f64).exp(), max_relative = 1e-14);
    }
}
