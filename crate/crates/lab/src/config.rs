//! Experiment configurations: a tagged JSON document per run, validated
//! before any computation starts.

use polymer_core::environment::{WeightFamily, XiDistribution};
use polymer_core::fluct::EstimateMethod;
use polymer_core::lindeberg::{PolymerFamily, TestFunction};
use polymer_core::scaling::ScaleMode;
use serde::{Deserialize, Serialize};

/// One experiment description. The `kind` tag must match the CLI
/// subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ExperimentConfig {
    /// DP-vs-enumeration oracle suite on small lattices.
    PartitionCheck {
        master_seed: u64,
        cases: usize,
        /// Largest `m + n` per case (enumeration guard), at most 16.
        max_extent: usize,
    },
    /// Chi-square test of the path sampler against enumerated measures.
    SamplerCheck {
        master_seed: u64,
        seeds: usize,
        samples: usize,
        grid: usize,
        family: WeightFamily,
        beta: f64,
    },
    /// Central-binomial asymptotics deviations.
    LemmaPnc { n: usize, k_max: i64 },
    /// Midline transversal fluctuation tails.
    GlobalFluct(FluctParams),
    /// Interior-time transversal fluctuation tails.
    LocalFluct(FluctParams),
    /// Steep-path mass across a centered strip, scanned over strip
    /// lengths.
    SteepMass {
        master_seed: u64,
        n: usize,
        alpha: f64,
        s: f64,
        m_const: f64,
        n0_grid: Vec<usize>,
        replicas: usize,
        samples_per_replica: usize,
        family: PolymerFamily,
        method: EstimateMethod,
    },
    /// Closed-form weight moment gaps over a beta grid.
    MomentGap {
        xi: XiDistribution,
        k_max: u32,
        betas: Vec<f64>,
    },
    /// Scaling constants on an `(n, alpha)` grid.
    ConstantsTable {
        xi: XiDistribution,
        ns: Vec<usize>,
        alphas: Vec<f64>,
    },
    /// Tracy-Widom GUE table construction.
    TwTable { step: f64, order: usize },
    /// Rescaled free-energy batch against the Tracy-Widom table.
    TwConvergence {
        master_seed: u64,
        n: usize,
        alpha: f64,
        replicas: usize,
        family: PolymerFamily,
        scale_mode: ScaleMode,
    },
    /// Exact-vs-Monte-Carlo replacement error on a tiny lattice.
    LindebergTiny {
        master_seed: u64,
        n: usize,
        surround: WeightFamily,
        fam_a: WeightFamily,
        fam_b: WeightFamily,
        f: TestFunction,
        environments: usize,
        theta: f64,
        alpha: f64,
    },
    /// Strip sweep of per-vertex replacement errors.
    LindebergSweep {
        master_seed: u64,
        n: usize,
        alpha: f64,
        base: PolymerFamily,
        target: PolymerFamily,
        delta: f64,
        k_moments: u32,
        f: TestFunction,
        replicas: usize,
        vertices_per_strip: usize,
    },
    /// Two-family distribution transfer experiment.
    Transfer {
        master_seed: u64,
        n: usize,
        alpha: f64,
        replicas: usize,
        fam_a: PolymerFamily,
        fam_b: PolymerFamily,
    },
}

/// Shared parameters of the two fluctuation experiments.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluctParams {
    pub master_seed: u64,
    pub n: usize,
    pub alpha: f64,
    pub s: f64,
    pub m_const: f64,
    /// Cut time; ignored by the global experiment.
    #[serde(default)]
    pub r: usize,
    /// Defaults to a resolvable diffusive-unit grid when empty.
    #[serde(default)]
    pub t_grid: Vec<f64>,
    pub replicas: usize,
    #[serde(default)]
    pub samples_per_replica: usize,
    pub family: PolymerFamily,
    pub method: EstimateMethod,
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::PartitionCheck { .. } => "partition-check",
            ExperimentConfig::SamplerCheck { .. } => "sampler-check",
            ExperimentConfig::LemmaPnc { .. } => "lemma-pnc",
            ExperimentConfig::GlobalFluct(_) => "global-fluct",
            ExperimentConfig::LocalFluct(_) => "local-fluct",
            ExperimentConfig::SteepMass { .. } => "steep-mass",
            ExperimentConfig::MomentGap { .. } => "moment-gap",
            ExperimentConfig::ConstantsTable { .. } => "constants-table",
            ExperimentConfig::TwTable { .. } => "tw-table",
            ExperimentConfig::TwConvergence { .. } => "tw-convergence",
            ExperimentConfig::LindebergTiny { .. } => "lindeberg-tiny",
            ExperimentConfig::LindebergSweep { .. } => "lindeberg-sweep",
            ExperimentConfig::Transfer { .. } => "transfer",
        }
    }

    pub fn master_seed(&self) -> Option<u64> {
        match self {
            ExperimentConfig::PartitionCheck { master_seed, .. }
            | ExperimentConfig::SamplerCheck { master_seed, .. }
            | ExperimentConfig::SteepMass { master_seed, .. }
            | ExperimentConfig::TwConvergence { master_seed, .. }
            | ExperimentConfig::LindebergTiny { master_seed, .. }
            | ExperimentConfig::LindebergSweep { master_seed, .. }
            | ExperimentConfig::Transfer { master_seed, .. } => Some(*master_seed),
            ExperimentConfig::GlobalFluct(p) | ExperimentConfig::LocalFluct(p) => {
                Some(p.master_seed)
            }
            _ => None,
        }
    }

    pub fn set_master_seed(&mut self, seed: u64) {
        match self {
            ExperimentConfig::PartitionCheck { master_seed, .. }
            | ExperimentConfig::SamplerCheck { master_seed, .. }
            | ExperimentConfig::SteepMass { master_seed, .. }
            | ExperimentConfig::TwConvergence { master_seed, .. }
            | ExperimentConfig::LindebergTiny { master_seed, .. }
            | ExperimentConfig::LindebergSweep { master_seed, .. }
            | ExperimentConfig::Transfer { master_seed, .. } => *master_seed = seed,
            ExperimentConfig::GlobalFluct(p) | ExperimentConfig::LocalFluct(p) => {
                p.master_seed = seed
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    /// Outside the ranges the source results cover; still runnable.
    Warning,
    /// Not runnable.
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub severity: Severity,
    pub message: String,
}

fn err(msgs: &mut Vec<Violation>, message: String) {
    msgs.push(Violation {
        severity: Severity::Error,
        message,
    });
}

fn warn(msgs: &mut Vec<Violation>, message: String) {
    msgs.push(Violation {
        severity: Severity::Warning,
        message,
    });
}

/// Check the (n, alpha) pair against the universality window.
fn check_alpha(v: &mut Vec<Violation>, alpha: f64) {
    if !(alpha > 0.0 && alpha < 1.0) {
        err(v, format!("alpha must lie in (0, 1), got {alpha}"));
        return;
    }
    let lo = 2.0 / 17.0;
    if !(alpha > lo && alpha < 0.25) {
        warn(
            v,
            format!("alpha = {alpha} outside the covered window (2/17, 1/4); running anyway"),
        );
    }
}

fn check_replicas(v: &mut Vec<Violation>, replicas: usize) {
    if replicas == 0 {
        err(v, "replica count must be positive".into());
    }
}

fn check_family(v: &mut Vec<Violation>, family: &PolymerFamily, n: usize, alpha: f64, k: u32) {
    let beta = (n as f64).powf(-alpha);
    match family.theta(beta) {
        Err(e) => err(v, format!("family invalid: {e}")),
        Ok(Some(theta)) => {
            if theta <= k as f64 {
                err(
                    v,
                    format!(
                        "theta = {theta:.3} at beta = {beta:.4} cannot support k = {k} moments"
                    ),
                );
            }
        }
        Ok(None) => {}
    }
}

/// All violations of a configuration; runnable iff no `Error` entries.
pub fn validate(config: &ExperimentConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    match config {
        ExperimentConfig::PartitionCheck {
            cases, max_extent, ..
        } => {
            if *cases == 0 {
                err(&mut v, "cases must be positive".into());
            }
            if *max_extent > 16 {
                err(
                    &mut v,
                    format!("max_extent {max_extent} exceeds the enumeration guard (16)"),
                );
            }
        }
        ExperimentConfig::SamplerCheck {
            seeds,
            samples,
            grid,
            family,
            beta,
            ..
        } => {
            check_replicas(&mut v, *seeds);
            if *samples < 1000 {
                err(&mut v, "sampler check needs at least 1000 samples".into());
            }
            if *grid == 0 || *grid > 4 {
                err(&mut v, "grid must be in 1..=4 (enumeration cost)".into());
            }
            if let Err(e) = family.validate(*beta) {
                err(&mut v, format!("family invalid: {e}"));
            }
        }
        ExperimentConfig::LemmaPnc { n, k_max } => {
            if *n == 0 || n % 2 != 0 {
                err(&mut v, format!("n must be positive and even, got {n}"));
            }
            if *k_max < 0 || *k_max > (*n as i64) / 2 {
                err(&mut v, format!("k_max must lie in [0, n/2], got {k_max}"));
            }
            if (*k_max as f64) > (*n as f64).sqrt() {
                warn(
                    &mut v,
                    format!("k_max = {k_max} beyond sqrt(n); the k << n regime ends there"),
                );
            }
        }
        ExperimentConfig::GlobalFluct(p) | ExperimentConfig::LocalFluct(p) => {
            check_alpha(&mut v, p.alpha);
            check_replicas(&mut v, p.replicas);
            if !(p.s > 0.0 && p.s < 1.0) {
                err(&mut v, format!("s must be in (0, 1), got {}", p.s));
            }
            if p.m_const <= 0.0 {
                err(&mut v, "M must be positive".into());
            }
            if matches!(config, ExperimentConfig::LocalFluct(_)) {
                if p.r == 0 || p.r > p.n / 10 {
                    err(
                        &mut v,
                        format!("local experiment needs 1 <= r <= n/10, got r = {}", p.r),
                    );
                }
                let cap = (p.r as f64).powf(p.s * p.alpha / 2.0);
                if p.t_grid.iter().any(|&t| t > cap) {
                    warn(&mut v, format!("t grid exceeds r^(s alpha / 2) = {cap:.3}; the bound is unspecified there"));
                }
            }
            if p.method == EstimateMethod::Sampling && p.samples_per_replica == 0 {
                err(
                    &mut v,
                    "sampling method needs samples_per_replica > 0".into(),
                );
            }
            check_family(&mut v, &p.family, p.n, p.alpha, 2);
        }
        ExperimentConfig::SteepMass {
            n,
            alpha,
            s,
            m_const,
            n0_grid,
            replicas,
            samples_per_replica,
            family,
            method,
            ..
        } => {
            check_alpha(&mut v, *alpha);
            check_replicas(&mut v, *replicas);
            if !(*s > 0.0 && *s < 1.0) {
                err(&mut v, format!("s must be in (0, 1), got {s}"));
            }
            if *m_const <= 0.0 {
                err(&mut v, "M must be positive".into());
            }
            if n0_grid.is_empty() || n0_grid.iter().any(|&n0| n0 < 2 || n0 >= *n) {
                err(&mut v, "n0 grid entries must lie in [2, n)".into());
            }
            if *method == EstimateMethod::Sampling && *samples_per_replica == 0 {
                err(
                    &mut v,
                    "sampling method needs samples_per_replica > 0".into(),
                );
            }
            check_family(&mut v, family, *n, *alpha, 2);
        }
        ExperimentConfig::MomentGap { xi, k_max, betas } => {
            if let Err(e) = xi.validate() {
                err(&mut v, format!("xi invalid: {e}"));
            }
            if *k_max < 3 {
                err(&mut v, "k_max must be at least 3".into());
            }
            if betas.len() < 4 {
                err(&mut v, "need at least 4 beta points for a slope fit".into());
            }
            for &beta in betas {
                let theta_est = 1.0 / (xi.variance() * beta * beta) + 2.0;
                if theta_est <= *k_max as f64 {
                    err(&mut v, format!(
                        "beta = {beta} puts theta near {theta_est:.2} <= k_max = {k_max} (moment pole)"
                    ));
                }
            }
        }
        ExperimentConfig::ConstantsTable { xi, ns, alphas } => {
            if let Err(e) = xi.validate() {
                err(&mut v, format!("xi invalid: {e}"));
            }
            if ns.is_empty() || alphas.is_empty() {
                err(&mut v, "n and alpha grids must be non-empty".into());
            }
            for &alpha in alphas {
                check_alpha(&mut v, alpha);
            }
        }
        ExperimentConfig::TwTable { step, order } => {
            if !(*step > 0.0 && *step <= 0.25) {
                err(&mut v, format!("step must be in (0, 0.25], got {step}"));
            }
            if *order < 20 {
                err(&mut v, format!("Nystrom order must be >= 20, got {order}"));
            }
        }
        ExperimentConfig::TwConvergence {
            n,
            alpha,
            replicas,
            family,
            ..
        } => {
            check_alpha(&mut v, *alpha);
            check_replicas(&mut v, *replicas);
            if *replicas < 100 {
                err(&mut v, "KS statistics need at least 100 replicas".into());
            }
            if *n < 10 {
                err(&mut v, "n too small for the convergence experiment".into());
            }
            check_family(&mut v, family, *n, *alpha, 2);
        }
        ExperimentConfig::LindebergTiny {
            n,
            surround,
            fam_a,
            fam_b,
            environments,
            theta,
            alpha,
            ..
        } => {
            if *n < 2 || *n > 4 {
                err(&mut v, format!("tiny mode supports n in 2..=4, got {n}"));
            }
            if *environments < 10 {
                err(&mut v, "need at least 10 environments".into());
            }
            if *theta <= 3.0 {
                err(&mut v, format!("theta must exceed 3, got {theta}"));
            }
            check_alpha(&mut v, *alpha);
            for fam in [surround, fam_a, fam_b] {
                if let Err(e) = fam.validate(0.5) {
                    err(&mut v, format!("family invalid: {e}"));
                }
                if !matches!(
                    fam,
                    WeightFamily::Constant { .. } | WeightFamily::TwoPoint { .. }
                ) {
                    err(&mut v, "tiny mode needs discrete weight families".into());
                }
            }
        }
        ExperimentConfig::LindebergSweep {
            n,
            alpha,
            base,
            target,
            delta,
            k_moments,
            replicas,
            vertices_per_strip,
            ..
        } => {
            check_alpha(&mut v, *alpha);
            check_replicas(&mut v, *replicas);
            if !(*delta > 0.0 && *delta < 1.0) {
                err(&mut v, format!("delta must be in (0, 1), got {delta}"));
            }
            if *k_moments < 2 {
                err(&mut v, "K must be at least 2".into());
            }
            if *vertices_per_strip == 0 {
                err(&mut v, "vertices_per_strip must be positive".into());
            }
            check_family(&mut v, base, *n, *alpha, *k_moments);
            check_family(&mut v, target, *n, *alpha, *k_moments);
            let lambda = polymer_core::lindeberg::lambda_exponent(*alpha, *delta, *k_moments);
            if lambda >= 0.0 {
                warn(&mut v, format!(
                    "lambda = {lambda:.4} >= 0 for (alpha = {alpha}, delta = {delta}, K = {k_moments}); \
                     the report will document non-decay"
                ));
            }
        }
        ExperimentConfig::Transfer {
            n,
            alpha,
            replicas,
            fam_a,
            fam_b,
            ..
        } => {
            check_alpha(&mut v, *alpha);
            check_replicas(&mut v, *replicas);
            if *replicas < 100 {
                err(&mut v, "KS statistics need at least 100 replicas".into());
            }
            check_family(&mut v, fam_a, *n, *alpha, 2);
            check_family(&mut v, fam_b, *n, *alpha, 2);
        }
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fluct_params(alpha: f64) -> FluctParams {
        FluctParams {
            master_seed: 1,
            n: 100,
            alpha,
            s: 0.5,
            m_const: 5.0,
            r: 10,
            t_grid: vec![],
            replicas: 8,
            samples_per_replica: 100,
            family: PolymerFamily::LogGamma {
                theta_rule: polymer_core::lindeberg::ThetaRule::InvBetaSq,
            },
            method: EstimateMethod::Exact,
        }
    }

    #[test]
    fn alpha_outside_window_warns_but_runs() {
        let cfg = ExperimentConfig::GlobalFluct(fluct_params(0.3));
        let violations = validate(&cfg);
        assert!(violations
            .iter()
            .any(|v| v.severity == Severity::Warning
                && v.message.contains("outside the covered window")));
        assert!(violations.iter().all(|v| v.severity != Severity::Error));
    }

    #[test]
    fn theta_pole_is_a_hard_error() {
        let cfg = ExperimentConfig::MomentGap {
            xi: XiDistribution::standard_gaussian(),
            k_max: 3,
            betas: vec![1.5, 1.2, 1.1, 1.0],
        };
        assert!(validate(&cfg).iter().any(|v| v.severity == Severity::Error));
    }

    #[test]
    fn zero_replicas_is_a_hard_error() {
        let mut p = fluct_params(0.2);
        p.replicas = 0;
        let cfg = ExperimentConfig::GlobalFluct(p);
        assert!(validate(&cfg).iter().any(|v| v.severity == Severity::Error));
    }

    #[test]
    fn negative_replicas_fail_to_parse_at_all() {
        let json = r#"{"kind":"tw-convergence","master_seed":1,"n":100,"alpha":0.2,
                       "replicas":-5,"family":{"kind":"log-gamma","theta_rule":{"rule":"inv-beta-sq"}},
                       "scale_mode":"paper"}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = ExperimentConfig::SteepMass {
            master_seed: 9,
            n: 64,
            alpha: 0.2,
            s: 0.5,
            m_const: 4.0,
            n0_grid: vec![4, 8],
            replicas: 12,
            samples_per_replica: 0,
            family: PolymerFamily::log_gamma_matched_gaussian(),
            method: EstimateMethod::Exact,
        };
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(
            serde_json::to_string(&back).unwrap(),
            serde_json::to_string(&cfg).unwrap()
        );
        assert_eq!(back.kind(), "steep-mass");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let json = r#"{"kind":"lemma-pnc","n":100,"k_max":5,"bogus":1}"#;
        assert!(serde_json::from_str::<ExperimentConfig>(json).is_err());
    }
}
