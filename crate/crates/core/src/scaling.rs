//! Closed-form constants of the intermediate-disorder regime.
//!
//! Digamma and its second derivative, the temperature-to-shape map
//! `theta(beta)`, exact weight moments for both weight families, the
//! cancellation-safe moment gap, and the centering/scale applied to free
//! energies before distribution tests.

use serde::{Deserialize, Serialize};

use crate::environment::XiDistribution;
use crate::{Error, Result};

/// Digamma `psi(x)` for `x > 0`, relative error ~1e-14.
///
/// Recurrence-shifts the argument above 10 and applies the asymptotic
/// series; all shape parameters of interest already exceed 10, so the
/// shift is usually a no-op.
pub fn digamma(x: f64) -> f64 {
    assert!(x > 0.0, "digamma requires x > 0, got {x}");
    let mut shift = 0.0;
    let mut x = x;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // ln x - 1/(2x) - sum B_{2k} / (2k x^{2k}), seven terms.
    let series = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2
                                * (1.0 / 240.0
                                    - inv2
                                        * (1.0 / 132.0
                                            - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    shift + x.ln() - 0.5 / x - series
}

/// Second derivative of digamma, `psi''(x)`, for `x > 0`.
///
/// Same shift-then-asymptotic-series scheme as [`digamma`]:
/// `psi''(x) = -1/x^2 - 1/x^3 - 1/(2x^4) + 1/(6x^6) - ...`.
pub fn trigamma2(x: f64) -> f64 {
    assert!(x > 0.0, "trigamma2 requires x > 0, got {x}");
    let mut shift = 0.0;
    let mut x = x;
    while x < 10.0 {
        shift += 2.0 / (x * x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv2
        * (-1.0
            + inv
                * (-1.0
                    + inv
                        * (-0.5
                            + inv2
                                * (1.0 / 6.0
                                    + inv2
                                        * (-1.0 / 6.0 + inv2 * (3.0 / 10.0 - inv2 * 5.0 / 6.0))))));
    series - shift
}

/// Shape parameter `theta = 2 + phi(beta)^2 / (phi(2 beta) - phi(beta)^2)`
/// matching the first two weight moments of the tilted family, plus the
/// asymptotic check ratio `theta sigma^2 beta^2` (tends to 1 as beta -> 0).
///
/// The two stated asymptotics for theta in terms of sigma do not coincide
/// unless sigma = 1; this closed form is the operational definition
/// throughout the crate.
pub fn theta_of_beta(xi: &XiDistribution, beta: f64) -> Result<ThetaReport> {
    xi.validate()?;
    let ln_phi_b = xi.ln_mgf(beta)?;
    let ln_phi_2b = xi.ln_mgf(2.0 * beta)?;
    // phi(2b) - phi(b)^2 = phi(b)^2 (exp(ln phi(2b) - 2 ln phi(b)) - 1).
    let rel = (ln_phi_2b - 2.0 * ln_phi_b).exp_m1();
    if rel <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "degenerate xi variance: phi(2b) - phi(b)^2 <= 0 at beta = {beta}"
        )));
    }
    let theta = 2.0 + 1.0 / rel;
    let sigma_sq = xi.variance();
    Ok(ThetaReport {
        theta,
        check_ratio: theta * sigma_sq * beta * beta,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThetaReport {
    pub theta: f64,
    /// `theta sigma^2 beta^2`; approaches 1 as beta -> 0.
    pub check_ratio: f64,
}

/// Exact `E[omega'^k] = (theta-1)^k Gamma(theta-k)/Gamma(theta)` for the
/// mean-one log-Gamma weight, as an exact telescoping product.
pub fn loggamma_moment(theta: f64, k: u32) -> Result<f64> {
    if theta <= k as f64 {
        return Err(Error::InvalidParameter(format!(
            "log-Gamma moment requires theta > k, got theta = {theta}, k = {k}"
        )));
    }
    let mut prod = 1.0;
    for j in 1..=k {
        prod *= (theta - 1.0) / (theta - j as f64);
    }
    Ok(prod)
}

/// Exact `E[omega^k] = phi(k beta) phi(beta)^{-k}` for the tilted weight.
pub fn expweight_moment(xi: &XiDistribution, beta: f64, k: u32) -> Result<f64> {
    Ok(ln_expweight_moment(xi, beta, k)?.exp())
}

fn ln_expweight_moment(xi: &XiDistribution, beta: f64, k: u32) -> Result<f64> {
    Ok(xi.ln_mgf(k as f64 * beta)? - k as f64 * xi.ln_mgf(beta)?)
}

/// `|E[omega^k] - E[omega'^k]|` with theta derived from the same
/// `(xi, beta)`, in a cancellation-safe form.
///
/// Both moments are ~1 and their difference is O(beta^4) at k = 3, so the
/// gap is evaluated as `exp(L') |expm1(L - L')|` on log-moments rather
/// than by subtracting two nearby doubles.
pub fn moment_gap(xi: &XiDistribution, beta: f64, k: u32) -> Result<f64> {
    let theta = theta_of_beta(xi, beta)?.theta;
    if theta <= k as f64 {
        return Err(Error::InvalidParameter(format!(
            "moment_gap: theta = {theta} from beta = {beta} does not support k = {k}"
        )));
    }
    let ln_exp = ln_expweight_moment(xi, beta, k)?;
    let ln_lg = loggamma_moment(theta, k)?.ln();
    Ok(ln_lg.exp() * (ln_exp - ln_lg).exp_m1().abs())
}

/// All constants of one experiment configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelConstants {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma_sq: f64,
    pub theta: f64,
    /// Textbook centering `2n (ln phi(beta) + ln(theta-1) - psi(theta/2))`.
    pub a_n: f64,
    /// `(4 sigma^4 beta^4 n)^{1/3}`.
    pub paper_scale: f64,
    /// `(-psi''(theta/2) n)^{1/3}`.
    pub exact_scale: f64,
    /// Centering adapted to mean-one weights on the `(n+1)^2` lattice:
    /// `(2n+1) ln(theta-1) - 2(n+1) psi(theta/2)`. A path holds `2n+1`
    /// weights, each carrying a `theta - 1` normalizer, and the lattice
    /// maps onto the solvable-model normalization at size `n + 1`; both
    /// counts matter at the O(1) level that distribution tests resolve.
    /// The convergence experiments subtract this value.
    pub lattice_centering: f64,
    /// `ln phi(beta)` of the tilted family (0 contribution for the pure
    /// log-Gamma case).
    pub ln_phi_beta: f64,
}

/// Scale convention for [`rescale_free_energy`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScaleMode {
    /// Divide by `(4 sigma^4 beta^4 n)^{1/3}`.
    Paper,
    /// Divide by `(-psi''(theta/2) n)^{1/3}`.
    Exact,
}

impl ModelConstants {
    /// Constants for the tilted family with disorder `xi` at
    /// `beta = n^{-alpha}`.
    pub fn for_exp_tilt(xi: &XiDistribution, n: usize, alpha: f64) -> Result<Self> {
        let beta = (n as f64).powf(-alpha);
        let theta = theta_of_beta(xi, beta)?.theta;
        let ln_phi_beta = xi.ln_mgf(beta)?;
        Ok(Self::assemble(
            n,
            alpha,
            beta,
            xi.variance(),
            theta,
            ln_phi_beta,
        ))
    }

    /// Constants for a pure log-Gamma run at the given theta; sigma^2 is
    /// the matched value `1/((theta - 2) beta^2)`.
    pub fn for_log_gamma(theta: f64, n: usize, alpha: f64) -> Result<Self> {
        if theta <= 3.0 {
            return Err(Error::InvalidParameter(format!(
                "third-moment work requires theta > 3, got {theta}"
            )));
        }
        let beta = (n as f64).powf(-alpha);
        let sigma_sq = 1.0 / ((theta - 2.0) * beta * beta);
        Ok(Self::assemble(n, alpha, beta, sigma_sq, theta, 0.0))
    }

    fn assemble(
        n: usize,
        alpha: f64,
        beta: f64,
        sigma_sq: f64,
        theta: f64,
        ln_phi_beta: f64,
    ) -> Self {
        let nf = n as f64;
        let psi_half = digamma(theta / 2.0);
        let a_n = 2.0 * nf * (ln_phi_beta + (theta - 1.0).ln() - psi_half);
        let paper_scale = (4.0 * sigma_sq * sigma_sq * beta.powi(4) * nf).cbrt();
        let exact_scale = (-trigamma2(theta / 2.0) * nf).cbrt();
        let lattice_centering = (2.0 * nf + 1.0) * (theta - 1.0).ln() - 2.0 * (nf + 1.0) * psi_half;
        Self {
            n,
            alpha,
            beta,
            sigma_sq,
            theta,
            a_n,
            paper_scale,
            exact_scale,
            lattice_centering,
            ln_phi_beta,
        }
    }

    pub fn scale(&self, mode: ScaleMode) -> f64 {
        match mode {
            ScaleMode::Paper => self.paper_scale,
            ScaleMode::Exact => self.exact_scale,
        }
    }
}

/// Centering and both scale denominators.
pub fn centering_and_scale(constants: &ModelConstants) -> (f64, f64, f64) {
    (constants.a_n, constants.paper_scale, constants.exact_scale)
}

/// Standardize a free energy for distribution tests:
/// `(log Z - a_n) / scale`.
pub fn rescale_free_energy(log_z: f64, constants: &ModelConstants, mode: ScaleMode) -> f64 {
    (log_z - constants.a_n) / constants.scale(mode)
}

/// Standardize against the lattice centering used by the convergence
/// experiments.
pub fn rescale_free_energy_lattice(log_z: f64, constants: &ModelConstants, mode: ScaleMode) -> f64 {
    (log_z - constants.lattice_centering) / constants.scale(mode)
}

/// One row of the constants table: `(n, alpha) -> beta, theta, a_n, scales`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstantsRow {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub a_n: f64,
    pub paper_scale: f64,
    pub exact_scale: f64,
}

/// Evaluate the constants table on a grid of `(n, alpha)` pairs for the
/// given disorder distribution.
pub fn constants_table(
    xi: &XiDistribution,
    ns: &[usize],
    alphas: &[f64],
) -> Result<Vec<ConstantsRow>> {
    let mut rows = Vec::with_capacity(ns.len() * alphas.len());
    for &n in ns {
        for &alpha in alphas {
            let c = ModelConstants::for_exp_tilt(xi, n, alpha)?;
            rows.push(ConstantsRow {
                n,
                alpha,
                beta: c.beta,
                theta: c.theta,
                a_n: c.a_n,
                paper_scale: c.paper_scale,
                exact_scale: c.exact_scale,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::gamma_law_expectation;
    use crate::environment::least_squares;
    use approx::assert_relative_eq;

    #[test]
    fn digamma_at_one_is_minus_euler_gamma() {
        // Independent oracle: Euler-Maclaurin tail of the harmonic sum.
        let n = 10_000usize;
        let harmonic: f64 = (1..=n).map(|k| 1.0 / k as f64).sum();
        let nf = n as f64;
        let gamma = harmonic - nf.ln() - 0.5 / nf + 1.0 / (12.0 * nf * nf);
        assert_relative_eq!(digamma(1.0), -gamma, epsilon = 1e-12);
        assert_relative_eq!(digamma(1.0), -0.5772156649015329, epsilon = 1e-13);
    }

    #[test]
    fn digamma_recurrence_identity() {
        for &x in &[0.5, 1.0, 3.7, 9.99, 25.0] {
            assert_relative_eq!(digamma(x + 1.0) - digamma(x), 1.0 / x, epsilon = 1e-12);
        }
    }

    #[test]
    fn digamma_reflection_identity() {
        // psi(1 - x) - psi(x) = pi cot(pi x).
        for &x in &[0.25, 0.3, 0.41] {
            let lhs = digamma(1.0 - x) - digamma(x);
            let rhs = std::f64::consts::PI / (std::f64::consts::PI * x).tan();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn trigamma2_at_one_is_minus_two_zeta_three() {
        // zeta(3) by direct series plus an Euler-Maclaurin tail.
        let n = 10_000usize;
        let partial: f64 = (1..=n).map(|k| (k as f64).powi(-3)).sum();
        let nf = n as f64;
        let zeta3 = partial + 0.5 / (nf * nf) - 0.5 / (nf * nf * nf) + 0.25 / nf.powi(4);
        assert_relative_eq!(trigamma2(1.0), -2.0 * zeta3, epsilon = 1e-12);
        assert_relative_eq!(trigamma2(1.0), -2.404113806319188, epsilon = 1e-12);
    }

    #[test]
    fn trigamma2_recurrence_identity() {
        for &x in &[0.5, 1.0, 2.25, 7.5] {
            assert_relative_eq!(
                trigamma2(x + 1.0) - trigamma2(x),
                2.0 / (x * x * x),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn theta_for_standard_gaussian() {
        // theta = 2 + 1/(exp(beta^2) - 1) at sigma = 1.
        let xi = XiDistribution::standard_gaussian();
        let r = theta_of_beta(&xi, 0.1).unwrap();
        assert_relative_eq!(r.theta, 2.0 + 1.0 / 0.01f64.exp_m1(), max_relative = 1e-13);
        assert_relative_eq!(r.theta, 101.50083, max_relative = 1e-7);
        // The check ratio approaches 1 monotonically as beta shrinks.
        let ratios: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&b| theta_of_beta(&xi, b).unwrap().check_ratio)
            .collect();
        for w in ratios.windows(2) {
            assert!((w[1] - 1.0).abs() < (w[0] - 1.0).abs());
        }
    }

    #[test]
    fn theta_agrees_across_matched_families() {
        // A two-point xi with the same variance gives theta within O(beta^2)
        // relative of the Gaussian value.
        let gauss = XiDistribution::standard_gaussian();
        let two_point = XiDistribution::standardized_two_point(1.0, 0.5);
        for &beta in &[0.2, 0.1, 0.05] {
            let a = theta_of_beta(&gauss, beta).unwrap().theta;
            let b = theta_of_beta(&two_point, beta).unwrap().theta;
            let rel = (a - b).abs() / a;
            assert!(rel < 1.5 * beta * beta, "beta {beta}: rel diff {rel}");
        }
    }

    #[test]
    fn loggamma_moments_match_quadrature_oracle() {
        assert_relative_eq!(loggamma_moment(17.3, 1).unwrap(), 1.0, epsilon = 1e-15);
        // theta = 10, k = 3: 81/56, also (theta-1)^2/((theta-2)(theta-3)).
        let m3 = loggamma_moment(10.0, 3).unwrap();
        assert_relative_eq!(m3, 81.0 / 56.0, max_relative = 1e-14);
        let quad = gamma_law_expectation(10.0, &|x| (9.0 / x).powi(3));
        assert_relative_eq!(m3, quad, max_relative = 1e-9);
        assert!(loggamma_moment(3.0, 3).is_err());
    }

    #[test]
    fn loggamma_variance_scales_like_beta_squared() {
        // E[omega'^2] - 1 = 1/(theta - 2) ~ beta^2 when theta = 1/beta^2.
        let betas = [0.2f64, 0.1, 0.05, 0.025];
        let xs: Vec<f64> = betas.iter().map(|b| b.ln()).collect();
        let ys: Vec<f64> = betas
            .iter()
            .map(|&b| (loggamma_moment(1.0 / (b * b), 2).unwrap() - 1.0).ln())
            .collect();
        let (slope, _) = least_squares(&xs, &ys);
        assert!(slope > 1.9 && slope < 2.1, "slope {slope}");
    }

    #[test]
    fn expweight_moments_gaussian_closed_form() {
        let xi = XiDistribution::standard_gaussian();
        assert_relative_eq!(expweight_moment(&xi, 0.1, 1).unwrap(), 1.0, epsilon = 1e-15);
        // k = 3, beta = 0.1: exp(9 b^2/2 - 3 b^2/2) = exp(0.03).
        assert_relative_eq!(
            expweight_moment(&xi, 0.1, 3).unwrap(),
            0.03f64.exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn expweight_moment_matches_monte_carlo() {
        use rand::Rng;
        let xi = XiDistribution::standard_gaussian();
        let beta = 0.2;
        let k = 3u32;
        let exact = expweight_moment(&xi, beta, k).unwrap();
        let ln_phi = xi.ln_mgf(beta).unwrap();
        let mut rng = crate::rng::KeyedRng::from_key(&[404]);
        let draws = 2_000_000usize;
        let (mut s1, mut s2) = (0.0f64, 0.0f64);
        for _ in 0..draws {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            let w = ((beta * z - ln_phi) * k as f64).exp();
            s1 += w;
            s2 += w * w;
        }
        let mean = s1 / draws as f64;
        let se = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        assert!(
            (mean - exact).abs() < 4.0 * se,
            "MC {mean} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn first_two_moment_gaps_vanish() {
        // theta is constructed so k = 1, 2 match identically.
        let xi = XiDistribution::standard_gaussian();
        for &beta in &[0.2, 0.1, 0.05] {
            assert!(moment_gap(&xi, beta, 1).unwrap() < 1e-12);
            assert!(moment_gap(&xi, beta, 2).unwrap() < 1e-12);
        }
        let skew = XiDistribution::standardized_two_point(1.0, 0.125);
        for &beta in &[0.2, 0.1] {
            assert!(moment_gap(&skew, beta, 1).unwrap() < 1e-12);
            assert!(moment_gap(&skew, beta, 2).unwrap() < 1e-12);
        }
    }

    #[test]
    fn third_moment_gap_slopes() {
        let betas = [0.2f64, 0.1, 0.05, 0.025];
        let xs: Vec<f64> = betas.iter().map(|b| b.ln()).collect();
        // Symmetric xi: gap = O(beta^4), log-log slope >= 3.9.
        let gauss = XiDistribution::standard_gaussian();
        let ys: Vec<f64> = betas
            .iter()
            .map(|&b| moment_gap(&gauss, b, 3).unwrap().ln())
            .collect();
        let (slope, _) = least_squares(&xs, &ys);
        assert!((3.9..=4.1).contains(&slope), "gaussian slope {slope}");
        // Skewed xi: E xi^3 != 0 drops the slope to ~3. The two-point at
        // p = 0.125 keeps the beta^4 correction small on this grid.
        let skew = XiDistribution::standardized_two_point(1.0, 0.125);
        let ys: Vec<f64> = betas
            .iter()
            .map(|&b| moment_gap(&skew, b, 3).unwrap().ln())
            .collect();
        let (slope, _) = least_squares(&xs, &ys);
        assert!((2.8..=3.2).contains(&slope), "skewed slope {slope}");
    }

    #[test]
    fn moment_closed_forms_match_quadrature() {
        // Exp-tilt moments against direct quadrature over the xi law.
        let xi = XiDistribution::standard_gaussian();
        let beta = 0.15;
        for k in 1..=4u32 {
            let closed = expweight_moment(&xi, beta, k).unwrap();
            let ln_phi = xi.ln_mgf(beta).unwrap();
            let quad = xi.integrate(&|x| ((beta * x - ln_phi) * k as f64).exp(), &[]);
            assert_relative_eq!(closed, quad, max_relative = 1e-9);
        }
        // Log-Gamma moments against the Gamma-law quadrature.
        for k in 1..=3u32 {
            let closed = loggamma_moment(21.0, k).unwrap();
            let quad = gamma_law_expectation(21.0, &|x| (20.0 / x).powi(k as i32));
            assert_relative_eq!(closed, quad, max_relative = 1e-9);
        }
    }

    #[test]
    fn centering_and_scales() {
        let xi = XiDistribution::standard_gaussian();
        let c = ModelConstants::for_exp_tilt(&xi, 10_000, 0.2).unwrap();
        let (a_n, paper, exact) = centering_and_scale(&c);
        // Scale equivalence: the ratio approaches 1 as beta -> 0.
        assert!(
            (exact / paper - 1.0).abs() < 0.05,
            "ratio {}",
            exact / paper
        );
        // a_n is linear in n at fixed beta.
        let c2 =
            ModelConstants::assemble(2 * c.n, c.alpha, c.beta, c.sigma_sq, c.theta, c.ln_phi_beta);
        assert_relative_eq!(c2.a_n, 2.0 * a_n, max_relative = 1e-12);
        // Pure log-Gamma case drops the phi contribution.
        let lg = ModelConstants::for_log_gamma(c.theta, c.n, c.alpha).unwrap();
        let nf = c.n as f64;
        assert_relative_eq!(
            lg.a_n,
            2.0 * nf * ((lg.theta - 1.0).ln() - digamma(lg.theta / 2.0)),
            max_relative = 1e-12
        );
    }

    #[test]
    fn rescale_is_affine() {
        let xi = XiDistribution::standard_gaussian();
        let c = ModelConstants::for_exp_tilt(&xi, 1000, 0.2).unwrap();
        assert_eq!(rescale_free_energy(c.a_n, &c, ScaleMode::Paper), 0.0);
        let x = rescale_free_energy(c.a_n + 3.0, &c, ScaleMode::Paper);
        let mut doubled = c.clone();
        doubled.paper_scale *= 2.0;
        assert_relative_eq!(
            rescale_free_energy(c.a_n + 3.0, &doubled, ScaleMode::Paper),
            x / 2.0,
            max_relative = 1e-14
        );
        assert_eq!(
            rescale_free_energy_lattice(c.lattice_centering, &c, ScaleMode::Exact),
            0.0
        );
    }

    #[test]
    fn constants_table_covers_grid() {
        let xi = XiDistribution::standard_gaussian();
        let rows = constants_table(&xi, &[100, 1000], &[0.15, 0.2]).unwrap();
        assert_eq!(rows.len(), 4);
        for row in rows {
            assert!(row.beta > 0.0 && row.theta > 3.0);
            assert!(row.paper_scale > 0.0 && row.exact_scale > 0.0);
            assert_relative_eq!(
                row.beta,
                (row.n as f64).powf(-row.alpha),
                max_relative = 1e-14
            );
        }
    }
}
