//! Transversal-fluctuation and steep-path experiments.
//!
//! Tail probabilities of `TF(pi, r)` under the polymer measure have two
//! routes: an exact one summing the cut-line marginal obtained from the
//! forward/backward fields (any tail size, no sampling noise), and a
//! Monte Carlo one driving the exact path sampler. Steep-path mass
//! across a strip gets the analogous exact treatment through a dedicated
//! strip DP between the bounding lines.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{least_squares, Environment, StripSpec, WeightFamily};
use crate::logdomain::{log_sum_exp, log_sum_exp2};
use crate::partition::{line_vertices, log_partition_field, Direction};
use crate::rng::{replica_key, KeyedRng};
use crate::sampler::{sample_path, steep_indicator};
use crate::special::{ln_binomial, zero_event_upper_bound};
use crate::{Error, Result, Vertex};

/// Estimation route for the fluctuation experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateMethod {
    /// Cut-line marginal from the DP fields; exact per environment.
    Exact,
    /// Path sampling; standard errors are binomial.
    Sampling,
}

/// Configuration shared by the fluctuation experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FluctuationConfig {
    pub n: usize,
    pub alpha: f64,
    /// Weight-bound exponent `s` of the event `W_s`.
    pub s: f64,
    /// `M` of the event `W_s`.
    pub m_const: f64,
    /// Cut time for the local experiment.
    pub r: usize,
    pub t_grid: Vec<f64>,
    pub gamma: f64,
    pub strip: Option<StripSpec>,
    pub replicas: usize,
    /// Paths drawn per environment in sampling mode.
    pub samples_per_replica: usize,
    pub master_seed: u64,
    pub family: WeightFamily,
    pub method: EstimateMethod,
}

impl FluctuationConfig {
    pub fn beta(&self) -> f64 {
        (self.n as f64).powf(-self.alpha)
    }

    fn validate(&self) -> Result<()> {
        if !(self.s > 0.0 && self.s < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "s must be in (0,1), got {}",
                self.s
            )));
        }
        if self.replicas == 0 {
            return Err(Error::InvalidParameter("replicas must be positive".into()));
        }
        if self.t_grid.is_empty() || self.t_grid.iter().any(|&t| t <= 0.0) {
            return Err(Error::InvalidParameter("t grid must be positive".into()));
        }
        if !self.t_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("t grid must be increasing".into()));
        }
        Ok(())
    }

    /// A t-grid resolvable at desk scale: thresholds at `tau` diffusive
    /// units, mapped back to the `t` normalization of the decay bound as
    /// `t = tau r^{(s alpha - 1)/2}`.
    pub fn default_t_grid(n: usize, r: usize, alpha: f64, s: f64) -> Vec<f64> {
        let _ = n;
        let rf = r as f64;
        [0.5f64, 0.75, 1.0, 1.25, 1.5]
            .iter()
            .map(|tau| tau * rf.sqrt() / rf.powf(1.0 - s * alpha / 2.0))
            .collect()
    }
}

/// Estimates of tail probabilities on a t-grid plus the decay fit
/// `log P = intercept - c x` with `x = t^2 r^{1 - s alpha}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFitReport {
    pub r: usize,
    pub t_grid: Vec<f64>,
    /// Absolute TF thresholds `t r^{1 - s alpha / 2}`.
    pub thresholds: Vec<f64>,
    /// Fit abscissa `t^2 r^{1 - s alpha}`.
    pub x_grid: Vec<f64>,
    /// Annealed tail probability estimates (Clopper-Pearson 95% upper
    /// bounds where `is_upper_bound` is set).
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Observed event counts (sampling) or contributing replicas (exact).
    pub counts: Vec<u64>,
    pub is_upper_bound: Vec<bool>,
    /// Largest per-environment estimate, per t.
    pub per_env_max: Vec<f64>,
    /// Fitted decay coefficient `c` (positive when tails decay).
    pub fitted_c: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Number of grid points that entered the fit.
    pub fit_points: usize,
}

/// Exact joint law of the TF numerator `j - i` on the line `i + j = r`.
pub fn line_tf_distribution(env: &Environment, r: usize) -> Result<Vec<(i64, f64)>> {
    if r > env.time_extent() {
        return Err(Error::InvalidParameter(format!(
            "cut time {r} beyond the lattice extent {}",
            env.time_extent()
        )));
    }
    let fwd = log_partition_field(env, (0, 0), Direction::Forward)?;
    let bwd = log_partition_field(env, (env.m, env.n), Direction::Backward)?;
    let log_z = fwd.log_z(env.m, env.n);
    Ok(line_vertices(env, r)
        .map(|(i, j)| {
            (
                j as i64 - i as i64,
                fwd.log_z(i, j) + bwd.log_z(i, j) - env.log_weight(i, j) - log_z,
            )
        })
        .collect())
}

/// Tail probability `Q(|TF(pi, r)| >= thr)` from a line marginal.
fn tail_from_marginal(marginal: &[(i64, f64)], thr: f64) -> f64 {
    let logs: Vec<f64> = marginal
        .iter()
        .filter(|(num, _)| (num.abs() as f64) + 1e-9 >= 2.0 * thr)
        .map(|&(_, lq)| lq)
        .collect();
    if logs.is_empty() {
        0.0
    } else {
        log_sum_exp(&logs).exp().min(1.0)
    }
}

/// Global transversal fluctuation experiment: the event
/// `|TF(pi, n)| >= t n^{1 - s alpha / 2}` at the midline of an `n x n`
/// polymer.
pub fn global_fluct_probability(cfg: &FluctuationConfig) -> Result<DecayFitReport> {
    fluct_at_cut(cfg, cfg.n, "global-fluct")
}

/// Local transversal fluctuation experiment at interior time `r << n`
/// (enforced as `r <= n / 10`).
pub fn local_fluct_probability(cfg: &FluctuationConfig) -> Result<DecayFitReport> {
    if cfg.r > cfg.n / 10 {
        return Err(Error::InvalidParameter(format!(
            "local experiment needs r <= n/10, got r = {}, n = {}",
            cfg.r, cfg.n
        )));
    }
    fluct_at_cut(cfg, cfg.r, "local-fluct")
}

fn fluct_at_cut(cfg: &FluctuationConfig, r: usize, kind: &str) -> Result<DecayFitReport> {
    cfg.validate()?;
    if r == 0 || r > 2 * cfg.n {
        return Err(Error::InvalidParameter(format!(
            "cut time r = {r} out of range"
        )));
    }
    let beta = cfg.beta();
    let rf = r as f64;
    let exponent = 1.0 - cfg.s * cfg.alpha / 2.0;
    let thresholds: Vec<f64> = cfg.t_grid.iter().map(|t| t * rf.powf(exponent)).collect();
    let x_grid: Vec<f64> = cfg
        .t_grid
        .iter()
        .map(|t| t * t * rf.powf(1.0 - cfg.s * cfg.alpha))
        .collect();

    // Per-replica tail estimates, deterministic by replica index.
    let per_replica: Vec<Vec<f64>> = (0..cfg.replicas)
        .into_par_iter()
        .map(|rep| -> Result<Vec<f64>> {
            let (seed, stream) = replica_key(cfg.master_seed, kind, rep as u64);
            let env = Environment::sample(cfg.family.clone(), beta, cfg.n, cfg.n, seed, stream)?;
            match cfg.method {
                EstimateMethod::Exact => {
                    let marginal = line_tf_distribution(&env, r)?;
                    Ok(thresholds
                        .iter()
                        .map(|&t| tail_from_marginal(&marginal, t))
                        .collect())
                }
                EstimateMethod::Sampling => {
                    let fwd = log_partition_field(&env, (0, 0), Direction::Forward)?;
                    let mut rng = KeyedRng::from_key(&[seed, stream, 0xf1]);
                    let mut hits = vec![0u64; thresholds.len()];
                    for _ in 0..cfg.samples_per_replica {
                        let sample = sample_path(&env, &fwd, &mut rng)?;
                        let tf2 = sample.path.tf_numerator(r)?.abs() as f64;
                        for (k, &thr) in thresholds.iter().enumerate() {
                            if tf2 + 1e-9 >= 2.0 * thr {
                                hits[k] += 1;
                            }
                        }
                    }
                    Ok(hits
                        .iter()
                        .map(|&h| h as f64 / cfg.samples_per_replica as f64)
                        .collect())
                }
            }
        })
        .collect::<Result<_>>()?;

    let total_draws = match cfg.method {
        EstimateMethod::Exact => cfg.replicas as u64,
        EstimateMethod::Sampling => (cfg.replicas * cfg.samples_per_replica) as u64,
    };
    assemble_report(
        r,
        &cfg.t_grid,
        thresholds,
        x_grid,
        &per_replica,
        total_draws,
    )
}

fn assemble_report(
    r: usize,
    t_grid: &[f64],
    thresholds: Vec<f64>,
    x_grid: Vec<f64>,
    per_replica: &[Vec<f64>],
    total_draws: u64,
) -> Result<DecayFitReport> {
    let replicas = per_replica.len() as f64;
    let k = t_grid.len();
    let mut estimates = vec![0.0; k];
    let mut std_errors = vec![0.0; k];
    let mut counts = vec![0u64; k];
    let mut per_env_max = vec![0.0; k];
    let mut is_upper_bound = vec![false; k];
    for j in 0..k {
        let vals: Vec<f64> = per_replica.iter().map(|v| v[j]).collect();
        let mean = vals.iter().sum::<f64>() / replicas;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / replicas.max(2.0);
        estimates[j] = mean;
        std_errors[j] = (var / replicas).sqrt();
        counts[j] = vals.iter().filter(|&&v| v > 0.0).count() as u64;
        per_env_max[j] = vals.iter().cloned().fold(0.0, f64::max);
        if mean == 0.0 {
            // Nothing observed: report the 95% upper confidence bound.
            estimates[j] = zero_event_upper_bound(total_draws);
            is_upper_bound[j] = true;
        }
    }
    // Fit log P = intercept - c x on the resolvable points.
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for j in 0..k {
        if !is_upper_bound[j] && estimates[j] > 0.0 {
            xs.push(x_grid[j]);
            ys.push(estimates[j].ln());
        }
    }
    let (fitted_c, intercept, r_squared) = if xs.len() >= 2 {
        let (slope, b) = least_squares(&xs, &ys);
        let my = ys.iter().sum::<f64>() / ys.len() as f64;
        let ss_tot: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        let ss_res: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let e = y - (slope * x + b);
                e * e
            })
            .sum();
        let r2 = if ss_tot > 0.0 {
            1.0 - ss_res / ss_tot
        } else {
            1.0
        };
        (-slope, b, r2)
    } else {
        (f64::NAN, f64::NAN, f64::NAN)
    };
    Ok(DecayFitReport {
        r,
        t_grid: t_grid.to_vec(),
        thresholds,
        x_grid,
        estimates,
        std_errors,
        counts,
        is_upper_bound,
        per_env_max,
        fitted_c,
        intercept,
        r_squared,
        fit_points: xs.len(),
    })
}

/// Exact all-ones tail: under constant weights the midline marginal is
/// the squared-binomial law `C(n, i)^2 / C(2n, n)`.
pub fn all_ones_binomial_tail(n: usize, thr: f64) -> f64 {
    let logs: Vec<f64> = (0..=n)
        .filter(|&i| ((n as i64 - 2 * i as i64).abs() as f64) + 1e-9 >= 2.0 * thr)
        .map(|i| 2.0 * ln_binomial(n as u64, i as u64) - ln_binomial(2 * n as u64, n as u64))
        .collect();
    if logs.is_empty() {
        0.0
    } else {
        log_sum_exp(&logs).exp().min(1.0)
    }
}

/// Result of one steep-path mass estimation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteepMassReport {
    pub n: usize,
    pub strip: StripSpec,
    pub n0: usize,
    /// Annealed mean of the per-environment steep mass.
    pub estimate: f64,
    pub std_error: f64,
    pub per_env_max: f64,
    /// 95% upper bound when nothing was observed (sampling mode only).
    pub is_upper_bound: bool,
    /// Environments rejected by the W_s conditioning.
    pub ws_rejections: u64,
    pub replicas: usize,
    /// Fit abscissa `n0^{1 - s alpha}` for decay scans.
    pub x_value: f64,
}

/// Steep-path mass `Q'(S~)` under the strip-modified environment,
/// conditioned on the bounded-weight event `W_s`.
pub fn steep_mass(cfg: &FluctuationConfig) -> Result<SteepMassReport> {
    cfg.validate()?;
    let strip = cfg.strip.ok_or_else(|| {
        Error::InvalidParameter("steep_mass needs a strip in the configuration".into())
    })?;
    let beta = cfg.beta();
    let n0 = strip.n0();

    let outcomes: Vec<(f64, u64)> = (0..cfg.replicas)
        .into_par_iter()
        .map(|rep| -> Result<(f64, u64)> {
            let (seed, stream0) = replica_key(cfg.master_seed, "steep-mass", rep as u64);
            // Resample environments failing W_s, counting rejections.
            let mut rejections = 0u64;
            let env = loop {
                if rejections > 64 {
                    return Err(Error::NonConvergent(format!(
                        "replica {rep}: 64 consecutive environments failed W_s"
                    )));
                }
                let stream = crate::rng::hash_words(&[stream0, rejections]);
                let env =
                    Environment::sample(cfg.family.clone(), beta, cfg.n, cfg.n, seed, stream)?;
                if env.check_event_ws(cfg.s, cfg.m_const) {
                    break env;
                }
                rejections += 1;
            };
            let modified = env.modify_strip(strip)?;
            let mass = match cfg.method {
                EstimateMethod::Exact => steep_mass_exact(&modified, strip)?,
                EstimateMethod::Sampling => {
                    let fwd = log_partition_field(&modified, (0, 0), Direction::Forward)?;
                    let mut rng = KeyedRng::from_key(&[seed, stream0, 0x57]);
                    let mut hits = 0u64;
                    for _ in 0..cfg.samples_per_replica {
                        let sample = sample_path(&modified, &fwd, &mut rng)?;
                        if steep_indicator(&sample.path, strip)? {
                            hits += 1;
                        }
                    }
                    hits as f64 / cfg.samples_per_replica as f64
                }
            };
            Ok((mass, rejections))
        })
        .collect::<Result<_>>()?;

    let rejections: u64 = outcomes.iter().map(|(_, r)| r).sum();
    let attempts = cfg.replicas as u64 + rejections;
    if rejections * 2 > attempts {
        return Err(Error::NonConvergent(format!(
            "W_s rejection rate {rejections}/{attempts} exceeds 50%; \
             weaken (s, M) or shrink beta"
        )));
    }
    let vals: Vec<f64> = outcomes.iter().map(|(v, _)| *v).collect();
    let replicas = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / replicas;
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / replicas.max(2.0);
    let mut estimate = mean;
    let mut is_upper_bound = false;
    if mean == 0.0 && cfg.method == EstimateMethod::Sampling {
        estimate = zero_event_upper_bound((cfg.replicas * cfg.samples_per_replica) as u64);
        is_upper_bound = true;
    }
    Ok(SteepMassReport {
        n: cfg.n,
        strip,
        n0,
        estimate,
        std_error: (var / replicas).sqrt(),
        per_env_max: vals.iter().cloned().fold(0.0, f64::max),
        is_upper_bound,
        ws_rejections: rejections,
        replicas: cfg.replicas,
        x_value: (n0 as f64).powf(1.0 - cfg.s * cfg.alpha),
    })
}

/// Exact steep mass via a dedicated DP from every entry point on `L_a`
/// to the exit line `L_b`.
pub fn steep_mass_exact(env: &Environment, strip: StripSpec) -> Result<f64> {
    if strip.b > env.time_extent() {
        return Err(Error::StripOutOfRange {
            a: strip.a,
            b: strip.b,
            max: env.time_extent(),
        });
    }
    let fwd = log_partition_field(env, (0, 0), Direction::Forward)?;
    let bwd = log_partition_field(env, (env.m, env.n), Direction::Backward)?;
    let log_z = fwd.log_z(env.m, env.n);
    let n0 = strip.n0();
    let mut steep_terms: Vec<f64> = Vec::new();
    for u in line_vertices(env, strip.a) {
        let exits = strip_partition_to_line(env, u, strip.b);
        let entry = fwd.log_z(u.0, u.1) - env.log_weight(u.0, u.1);
        let u_num = u.1 as i64 - u.0 as i64;
        for (v, log_zuv) in exits {
            let v_num = v.1 as i64 - v.0 as i64;
            if 2 * (v_num - u_num).unsigned_abs() > n0 as u64 {
                steep_terms
                    .push(entry + log_zuv + bwd.log_z(v.0, v.1) - env.log_weight(v.0, v.1) - log_z);
            }
        }
    }
    if steep_terms.is_empty() {
        return Ok(0.0);
    }
    Ok(log_sum_exp(&steep_terms).exp().min(1.0))
}

/// `log Z_{u, v}` for every `v` on the line `i + j = b` reachable from
/// `u`, via one rolling DP across the strip.
fn strip_partition_to_line(env: &Environment, u: Vertex, b: usize) -> Vec<(Vertex, f64)> {
    let t0 = u.0 + u.1;
    debug_assert!(b >= t0);
    // Frontier at time tau, indexed by i - u.0.
    let mut frontier = vec![env.log_weight(u.0, u.1)];
    for tau in t0 + 1..=b {
        let width = tau - t0;
        let mut next = vec![f64::NEG_INFINITY; width + 1];
        for (d, &val) in frontier.iter().enumerate() {
            if val == f64::NEG_INFINITY {
                continue;
            }
            let i = u.0 + d;
            let j = tau - 1 - i;
            // Step e1.
            if i < env.m {
                let idx = d + 1;
                next[idx] = log_sum_exp2(next[idx], val + env.log_weight(i + 1, j));
            }
            // Step e2.
            if j < env.n {
                next[d] = log_sum_exp2(next[d], val + env.log_weight(i, j + 1));
            }
        }
        frontier = next;
    }
    frontier
        .into_iter()
        .enumerate()
        .filter(|(_, v)| *v != f64::NEG_INFINITY)
        .map(|(d, v)| {
            let i = u.0 + d;
            ((i, b - i), v)
        })
        .collect()
}

/// Enumeration oracle: steep mass by walking every path.
pub fn steep_mass_enumeration(env: &Environment, strip: StripSpec) -> Result<f64> {
    let measure = crate::sampler::enumerate_polymer_measure(env, (0, 0), (env.m, env.n))?;
    let mut total = 0.0;
    for (path, q) in measure {
        if steep_indicator(&path, strip)? {
            total += q;
        }
    }
    Ok(total)
}

/// One row of the binomial-asymptotics check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PncRow {
    pub k: i64,
    /// Exact `ln C(n, n/2 + k)`.
    pub log_a: f64,
    /// `(n + 1/2) ln 2 - ln(n pi)/2 - 2 k^2 / n`.
    pub approx: f64,
    /// `log_a - approx`.
    pub delta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PncReport {
    pub n: usize,
    pub rows: Vec<PncRow>,
    pub max_abs_delta: f64,
}

/// Check the Gaussian asymptotics of the central binomial counts
/// `a(n, k) = C(n, n/2 + k)` on a k-grid.
pub fn lemma_pnc_check(n: usize, ks: &[i64]) -> Result<PncReport> {
    if !n.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!("n must be even, got {n}")));
    }
    let half = (n / 2) as i64;
    let nf = n as f64;
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        if k.abs() > half {
            return Err(Error::InvalidParameter(format!(
                "|k| = {} exceeds n/2 = {half}",
                k.abs()
            )));
        }
        let log_a = ln_binomial(n as u64, (half + k) as u64);
        let approx = (nf + 0.5) * std::f64::consts::LN_2
            - 0.5 * (nf * std::f64::consts::PI).ln()
            - 2.0 * (k * k) as f64 / nf;
        rows.push(PncRow {
            k,
            log_a,
            approx,
            delta: log_a - approx,
        });
    }
    let max_abs_delta = rows.iter().map(|r| r.delta.abs()).fold(0.0, f64::max);
    Ok(PncReport {
        n,
        rows,
        max_abs_delta,
    })
}
