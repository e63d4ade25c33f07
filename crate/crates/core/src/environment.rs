//! Quenched random weight fields.
//!
//! An [`Environment`] assigns an i.i.d. positive weight to every vertex of
//! an `(m+1) x (n+1)` grid. Weights are drawn from one of the
//! [`WeightFamily`] variants, all of which have mean exactly one by
//! construction (the testing families `Constant` / `TwoPoint` only when
//! their parameters say so). Each weight comes from its own
//! counter-based generator keyed by `(seed, stream, vertex)`, so fields
//! regenerate bit-exactly in any order.

use std::io::{Read, Write};

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::logdomain::log_sum_exp2;
use crate::rng::KeyedRng;
use crate::special::integrate_panels;
use crate::{Error, Result, Vertex};

/// Distribution of the untilted disorder variable `xi` used by the
/// exponentially tilted weight family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum XiDistribution {
    /// Centered Gaussian with standard deviation `sigma`.
    Gaussian { sigma: f64 },
    /// Uniform on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
    /// Two-point: value `a` with probability `p`, else `b`.
    TwoPoint { a: f64, b: f64, p: f64 },
}

impl XiDistribution {
    pub fn standard_gaussian() -> Self {
        XiDistribution::Gaussian { sigma: 1.0 }
    }

    /// Mean-zero two-point distribution with variance `sigma^2`; skewed
    /// unless `p = 1/2`.
    pub fn standardized_two_point(sigma: f64, p: f64) -> Self {
        let a = sigma * ((1.0 - p) / p).sqrt();
        let b = -sigma * (p / (1.0 - p)).sqrt();
        XiDistribution::TwoPoint { a, b, p }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            XiDistribution::Gaussian { sigma } => sigma.is_finite() && *sigma > 0.0,
            XiDistribution::Uniform { half_width } => half_width.is_finite() && *half_width > 0.0,
            XiDistribution::TwoPoint { a, b, p } => {
                a.is_finite() && b.is_finite() && (0.0..=1.0).contains(p)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidFamily(format!(
                "bad xi distribution {self:?}"
            )))
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            XiDistribution::Gaussian { .. } | XiDistribution::Uniform { .. } => 0.0,
            XiDistribution::TwoPoint { a, b, p } => p * a + (1.0 - p) * b,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            XiDistribution::Gaussian { sigma } => sigma * sigma,
            XiDistribution::Uniform { half_width } => half_width * half_width / 3.0,
            XiDistribution::TwoPoint { a, b, p } => {
                let m = self.mean();
                p * (a - m).powi(2) + (1.0 - p) * (b - m).powi(2)
            }
        }
    }

    /// Third central moment; zero for the symmetric families.
    pub fn third_central_moment(&self) -> f64 {
        match self {
            XiDistribution::Gaussian { .. } | XiDistribution::Uniform { .. } => 0.0,
            XiDistribution::TwoPoint { a, b, p } => {
                let m = self.mean();
                p * (a - m).powi(3) + (1.0 - p) * (b - m).powi(3)
            }
        }
    }

    /// `log phi(t)` where `phi` is the moment generating function.
    ///
    /// All supported families have entire mgfs in closed form; the only
    /// failure mode is overflow of `phi` itself at extreme `t`.
    pub fn ln_mgf(&self, t: f64) -> Result<f64> {
        let v = match self {
            XiDistribution::Gaussian { sigma } => 0.5 * (t * sigma) * (t * sigma),
            XiDistribution::Uniform { half_width } => {
                let x = t * half_width;
                if x.abs() < 1e-4 {
                    // sinh(x)/x = 1 + x^2/6 + x^4/120 + ...
                    (x * x / 6.0 * (1.0 + x * x / 20.0)).ln_1p()
                } else {
                    (x.sinh() / x).ln()
                }
            }
            XiDistribution::TwoPoint { a, b, p } => {
                if *p == 1.0 {
                    t * a
                } else if *p == 0.0 {
                    t * b
                } else {
                    log_sum_exp2(p.ln() + t * a, (1.0 - p).ln() + t * b)
                }
            }
        };
        if v.is_finite() && v < 700.0 {
            Ok(v)
        } else {
            Err(Error::InvalidParameter(format!(
                "mgf overflows at t = {t} for {self:?}"
            )))
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            XiDistribution::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            XiDistribution::Uniform { half_width } => {
                let u: f64 = rng.random();
                half_width * (2.0 * u - 1.0)
            }
            XiDistribution::TwoPoint { a, b, p } => {
                let u: f64 = rng.random();
                if u < *p {
                    *a
                } else {
                    *b
                }
            }
        }
    }

    /// Quadrature of `f(xi)` against this distribution's law, used as an
    /// independent oracle for closed-form moments.
    pub fn integrate(&self, f: &dyn Fn(f64) -> f64, split: &[f64]) -> f64 {
        match self {
            XiDistribution::Gaussian { sigma } => {
                let dens = |x: f64| {
                    (-0.5 * (x / sigma).powi(2)).exp()
                        / (sigma * (2.0 * std::f64::consts::PI).sqrt())
                };
                let mut pts = vec![-14.0 * sigma];
                pts.extend(split.iter().copied().filter(|x| x.abs() < 14.0 * sigma));
                pts.push(14.0 * sigma);
                pts.sort_by(f64::total_cmp);
                integrate_panels(&|x| f(x) * dens(x), &pts, 48, 8)
            }
            XiDistribution::Uniform { half_width } => {
                let dens = 1.0 / (2.0 * half_width);
                let mut pts = vec![-*half_width];
                pts.extend(split.iter().copied().filter(|x| x.abs() < *half_width));
                pts.push(*half_width);
                pts.sort_by(f64::total_cmp);
                integrate_panels(&|x| f(x) * dens, &pts, 48, 8)
            }
            XiDistribution::TwoPoint { a, b, p } => p * f(*a) + (1.0 - p) * f(*b),
        }
    }
}

/// Weight distribution family for one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WeightFamily {
    /// `omega = exp(beta xi) / phi(beta)`; mean one by construction.
    ExpTilt { xi: XiDistribution },
    /// `omega = (theta - 1) / X`, `X ~ Gamma(theta, 1)`; requires
    /// `theta > 1`, and `theta > k` for k-th moment queries.
    LogGamma { theta: f64 },
    /// Deterministic weight; mean one only when `value = 1`.
    Constant { value: f64 },
    /// Two-point weight for testing; mean one only when
    /// `p v1 + (1 - p) v2 = 1`.
    TwoPoint { v1: f64, v2: f64, p: f64 },
}

impl WeightFamily {
    pub fn exp_tilt_gaussian(sigma: f64) -> Self {
        WeightFamily::ExpTilt {
            xi: XiDistribution::Gaussian { sigma },
        }
    }

    /// Tag stored in the binary header.
    pub fn tag(&self) -> u64 {
        match self {
            WeightFamily::ExpTilt { .. } => 1,
            WeightFamily::LogGamma { .. } => 2,
            WeightFamily::Constant { .. } => 3,
            WeightFamily::TwoPoint { .. } => 4,
        }
    }

    /// Validate parameters at inverse temperature `beta`.
    pub fn validate(&self, beta: f64) -> Result<()> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        match self {
            WeightFamily::ExpTilt { xi } => {
                xi.validate()?;
                xi.ln_mgf(beta)?;
                xi.ln_mgf(2.0 * beta)?;
                Ok(())
            }
            WeightFamily::LogGamma { theta } => {
                if theta.is_finite() && *theta > 1.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidFamily(format!(
                        "log-Gamma requires theta > 1, got {theta}"
                    )))
                }
            }
            WeightFamily::Constant { value } => {
                if value.is_finite() && *value > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidFamily(format!(
                        "constant weight must be positive, got {value}"
                    )))
                }
            }
            WeightFamily::TwoPoint { v1, v2, p } => {
                if *v1 > 0.0 && *v2 > 0.0 && (0.0..=1.0).contains(p) {
                    Ok(())
                } else {
                    Err(Error::InvalidFamily(format!(
                        "two-point weights must be positive with p in [0,1], got {self:?}"
                    )))
                }
            }
        }
    }

    /// Exact mean; 1 for the tilted / log-Gamma families.
    pub fn mean(&self, beta: f64) -> Result<f64> {
        self.moment(beta, 1)
    }

    /// Exact `E[omega^k]` in closed form.
    pub fn moment(&self, beta: f64, k: u32) -> Result<f64> {
        self.validate(beta)?;
        match self {
            WeightFamily::ExpTilt { xi } => {
                let ln = xi.ln_mgf(k as f64 * beta)? - k as f64 * xi.ln_mgf(beta)?;
                Ok(ln.exp())
            }
            WeightFamily::LogGamma { theta } => {
                if *theta <= k as f64 {
                    return Err(Error::InvalidParameter(format!(
                        "log-Gamma k-th moment needs theta > k, got theta = {theta}, k = {k}"
                    )));
                }
                // (theta-1)^k Gamma(theta-k)/Gamma(theta) as an exact product.
                let mut prod = 1.0;
                for j in 1..=k {
                    prod *= (theta - 1.0) / (theta - j as f64);
                }
                Ok(prod)
            }
            WeightFamily::Constant { value } => Ok(value.powi(k as i32)),
            WeightFamily::TwoPoint { v1, v2, p } => {
                Ok(p * v1.powi(k as i32) + (1.0 - p) * v2.powi(k as i32))
            }
        }
    }

    /// `E|omega - 1|^k`: closed form for discrete families and even `k`,
    /// quadrature against the underlying density otherwise.
    pub fn abs_central_moment(&self, beta: f64, k: u32) -> Result<f64> {
        self.validate(beta)?;
        match self {
            WeightFamily::Constant { value } => Ok((value - 1.0).abs().powi(k as i32)),
            WeightFamily::TwoPoint { v1, v2, p } => {
                Ok(p * (v1 - 1.0).abs().powi(k as i32)
                    + (1.0 - p) * (v2 - 1.0).abs().powi(k as i32))
            }
            WeightFamily::ExpTilt { xi } => {
                let ln_phi = xi.ln_mgf(beta)?;
                let g = move |x: f64| ((beta * x - ln_phi).exp() - 1.0).abs().powi(k as i32);
                // Kink of |omega - 1| at beta xi = ln phi(beta).
                Ok(xi.integrate(&g, &[ln_phi / beta]))
            }
            WeightFamily::LogGamma { theta } => {
                if *theta <= k as f64 {
                    return Err(Error::InvalidParameter(format!(
                        "log-Gamma |. - 1|^k moment needs theta > k, got theta = {theta}"
                    )));
                }
                Ok(gamma_law_expectation(*theta, &|x| {
                    ((theta - 1.0) / x - 1.0).abs().powi(k as i32)
                }))
            }
        }
    }

    /// Draw one weight. The log-weight is returned alongside so that
    /// downstream log-domain code never re-takes logarithms of tiny
    /// values.
    pub fn sample_weight<R: Rng>(&self, beta: f64, rng: &mut R) -> (f64, f64) {
        match self {
            WeightFamily::ExpTilt { xi } => {
                let ln_phi = xi.ln_mgf(beta).expect("validated");
                let x = xi.sample(rng);
                let logw = beta * x - ln_phi;
                (logw.exp(), logw)
            }
            WeightFamily::LogGamma { theta } => {
                let gamma = Gamma::new(*theta, 1.0).expect("validated");
                let x = gamma.sample(rng);
                let logw = (theta - 1.0).ln() - x.ln();
                (logw.exp(), logw)
            }
            WeightFamily::Constant { value } => (*value, value.ln()),
            WeightFamily::TwoPoint { v1, v2, p } => {
                let u: f64 = rng.random();
                let w = if u < *p { *v1 } else { *v2 };
                (w, w.ln())
            }
        }
    }
}

/// Expectation of `f(X)` for `X ~ Gamma(theta, 1)` by panel quadrature;
/// an independent oracle for the closed-form Gamma-ratio moments.
pub fn gamma_law_expectation(theta: f64, f: &dyn Fn(f64) -> f64) -> f64 {
    let ln_gamma_theta = crate::special::ln_gamma(theta);
    let dens = move |x: f64| ((theta - 1.0) * x.ln() - x - ln_gamma_theta).exp();
    let sd = theta.sqrt();
    let lo = (theta - 1.0 - 14.0 * sd).max(1e-12);
    let hi = theta + 16.0 * sd + 20.0;
    // Panel boundaries concentrated around the mode theta - 1.
    let mut pts = vec![lo];
    let mode = (theta - 1.0).max(lo * 2.0);
    let mut x = lo;
    while x < mode {
        x = (x * 4.0).min(mode);
        pts.push(x);
    }
    for i in 1..=8 {
        pts.push(mode + (hi - mode) * i as f64 / 8.0);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    integrate_panels(&|x| f(x) * dens(x), &pts, 48, 8)
}

/// Time strip `[a, b]` on the anti-diagonal coordinate `i + j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripSpec {
    pub a: usize,
    pub b: usize,
}

impl StripSpec {
    pub fn new(a: usize, b: usize, time_extent: usize) -> Result<Self> {
        if a < b && b <= time_extent {
            Ok(Self { a, b })
        } else {
            Err(Error::StripOutOfRange {
                a,
                b,
                max: time_extent,
            })
        }
    }

    /// Strip length `n0 = b - a`.
    pub fn n0(&self) -> usize {
        self.b - self.a
    }

    pub fn contains_time(&self, t: usize) -> bool {
        (self.a..=self.b).contains(&t)
    }
}

/// One realization of the quenched disorder on an `(m+1) x (n+1)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub m: usize,
    pub n: usize,
    pub beta: f64,
    pub family: WeightFamily,
    pub seed: u64,
    pub stream: u64,
    /// Strip replacement applied after sampling, if any.
    pub strip: Option<StripSpec>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
}

/// Regenerating JSON descriptor: everything needed to reproduce the field
/// bit-exactly without storing it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentDescriptor {
    pub m: usize,
    pub n: usize,
    pub beta: f64,
    pub family: WeightFamily,
    pub seed: u64,
    pub stream: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strip: Option<StripSpec>,
}

pub const ENV_MAGIC: &[u8; 7] = b"PLYENV1";

impl Environment {
    /// Sample a fresh i.i.d. environment.
    pub fn sample(
        family: WeightFamily,
        beta: f64,
        m: usize,
        n: usize,
        seed: u64,
        stream: u64,
    ) -> Result<Self> {
        family.validate(beta)?;
        let len = (m + 1) * (n + 1);
        let mut weights = vec![0.0; len];
        let mut log_weights = vec![0.0; len];
        for j in 0..=n {
            for i in 0..=m {
                let (w, logw) = vertex_weight(&family, beta, seed, stream, i, j);
                let idx = j * (m + 1) + i;
                weights[idx] = w;
                log_weights[idx] = logw;
            }
        }
        Ok(Self {
            m,
            n,
            beta,
            family,
            seed,
            stream,
            strip: None,
            weights,
            log_weights,
        })
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i <= self.m && j <= self.n);
        j * (self.m + 1) + i
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[self.index(i, j)]
    }

    #[inline]
    pub fn log_weight(&self, i: usize, j: usize) -> f64 {
        self.log_weights[self.index(i, j)]
    }

    pub fn contains(&self, v: Vertex) -> bool {
        v.0 <= self.m && v.1 <= self.n
    }

    /// Largest time coordinate `m + n`.
    pub fn time_extent(&self) -> usize {
        self.m + self.n
    }

    /// Replace every weight with `i + j` in `[strip.a, strip.b]` by 1.
    pub fn modify_strip(&self, strip: StripSpec) -> Result<Self> {
        if strip.b > self.time_extent() {
            return Err(Error::StripOutOfRange {
                a: strip.a,
                b: strip.b,
                max: self.time_extent(),
            });
        }
        let mut out = self.clone();
        for j in 0..=self.n {
            for i in 0..=self.m {
                if strip.contains_time(i + j) {
                    let idx = out.index(i, j);
                    out.weights[idx] = 1.0;
                    out.log_weights[idx] = 0.0;
                }
            }
        }
        out.strip = Some(strip);
        Ok(out)
    }

    /// Event `W_s`: every weight lies in `[exp(-M beta^s), exp(M beta^s)]`.
    pub fn check_event_ws(&self, s: f64, m_const: f64) -> bool {
        debug_assert!(s > 0.0 && s < 1.0 && m_const > 0.0);
        let bound = m_const * self.beta.powf(s);
        self.log_weights.iter().all(|&lw| lw.abs() <= bound)
    }

    /// Overwrite a single vertex weight (replacement machinery).
    pub fn set_weight(&mut self, v: Vertex, w: f64) {
        assert!(w > 0.0, "weights must stay positive");
        let idx = self.index(v.0, v.1);
        self.weights[idx] = w;
        self.log_weights[idx] = w.ln();
    }

    pub fn descriptor(&self) -> EnvironmentDescriptor {
        EnvironmentDescriptor {
            m: self.m,
            n: self.n,
            beta: self.beta,
            family: self.family.clone(),
            seed: self.seed,
            stream: self.stream,
            strip: self.strip,
        }
    }

    /// Regenerate from a descriptor; bit-exact w.r.t. the original field.
    pub fn from_descriptor(d: &EnvironmentDescriptor) -> Result<Self> {
        let env = Self::sample(d.family.clone(), d.beta, d.m, d.n, d.seed, d.stream)?;
        match d.strip {
            Some(strip) => env.modify_strip(strip),
            None => Ok(env),
        }
    }

    /// Binary dump: `PLYENV1`, then m, n, family tag, beta, seed, stream
    /// as little-endian 64-bit fields, then row-major log-weights.
    pub fn write_binary<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(ENV_MAGIC)?;
        w.write_all(&(self.m as u64).to_le_bytes())?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&self.family.tag().to_le_bytes())?;
        w.write_all(&self.beta.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.stream.to_le_bytes())?;
        for &lw in &self.log_weights {
            w.write_all(&lw.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Parsed binary environment file. The header carries only the family
/// tag, so turning the payload back into an [`Environment`] requires the
/// full family from the JSON descriptor side.
#[derive(Debug, Clone)]
pub struct BinaryEnvFile {
    pub m: usize,
    pub n: usize,
    pub family_tag: u64,
    pub beta: f64,
    pub seed: u64,
    pub stream: u64,
    pub log_weights: Vec<f64>,
}

impl BinaryEnvFile {
    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 7];
        r.read_exact(&mut magic)?;
        if &magic != ENV_MAGIC {
            return Err(Error::BadFormat("bad magic, expected PLYENV1".into()));
        }
        let mut buf = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut buf)?;
            Ok(u64::from_le_bytes(buf))
        };
        let m = next_u64(r)? as usize;
        let n = next_u64(r)? as usize;
        let family_tag = next_u64(r)?;
        let beta = f64::from_le_bytes({
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            b
        });
        let seed = next_u64(r)?;
        let stream = next_u64(r)?;
        let len = (m + 1) * (n + 1);
        let mut log_weights = Vec::with_capacity(len);
        let mut b = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut b)?;
            log_weights.push(f64::from_le_bytes(b));
        }
        Ok(Self {
            m,
            n,
            family_tag,
            beta,
            seed,
            stream,
            log_weights,
        })
    }

    /// Rehydrate with the family the file was written from.
    pub fn into_environment(self, family: WeightFamily) -> Result<Environment> {
        if family.tag() != self.family_tag {
            return Err(Error::BadFormat(format!(
                "family tag mismatch: file has {}, caller supplied {}",
                self.family_tag,
                family.tag()
            )));
        }
        family.validate(self.beta)?;
        let weights = self.log_weights.iter().map(|lw| lw.exp()).collect();
        Ok(Environment {
            m: self.m,
            n: self.n,
            beta: self.beta,
            family,
            seed: self.seed,
            stream: self.stream,
            strip: None,
            weights,
            log_weights: self.log_weights,
        })
    }
}

/// Weight of a single vertex, regenerable in isolation.
pub fn vertex_weight(
    family: &WeightFamily,
    beta: f64,
    seed: u64,
    stream: u64,
    i: usize,
    j: usize,
) -> (f64, f64) {
    let mut rng = KeyedRng::for_vertex(seed, stream, i, j);
    family.sample_weight(beta, &mut rng)
}

/// Least-squares fit of `log E|omega - 1|^k` against `log beta`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentFit {
    pub k: u32,
    pub betas: Vec<f64>,
    pub log_moments: Vec<f64>,
    /// Fitted slope; Assumption-style scaling predicts slope >= k.
    pub slope: f64,
    pub intercept: f64,
    /// True when every moment vanishes (degenerate family).
    pub degenerate: bool,
}

/// Fit the decay rate of `E|omega - 1|^k` on a beta grid.
///
/// `family_at` maps each `beta` to the family to test, so scalings like
/// `theta = 1/beta^2` can be threaded through.
pub fn assumption_moment_fit(
    family_at: &dyn Fn(f64) -> WeightFamily,
    k: u32,
    betas: &[f64],
) -> Result<MomentFit> {
    if k == 0 || betas.len() < 4 {
        return Err(Error::InvalidParameter(
            "assumption_moment_fit needs k >= 1 and at least 4 beta points".into(),
        ));
    }
    let mut log_moments = Vec::with_capacity(betas.len());
    let mut degenerate = false;
    for &beta in betas {
        let m = family_at(beta).abs_central_moment(beta, k)?;
        if m <= 0.0 {
            degenerate = true;
            log_moments.push(f64::NEG_INFINITY);
        } else {
            log_moments.push(m.ln());
        }
    }
    if degenerate {
        return Ok(MomentFit {
            k,
            betas: betas.to_vec(),
            log_moments,
            slope: f64::NAN,
            intercept: f64::NAN,
            degenerate: true,
        });
    }
    let xs: Vec<f64> = betas.iter().map(|b| b.ln()).collect();
    let (slope, intercept) = least_squares(&xs, &log_moments);
    Ok(MomentFit {
        k,
        betas: betas.to_vec(),
        log_moments,
        slope,
        intercept,
        degenerate: false,
    })
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
