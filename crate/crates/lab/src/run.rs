//! Experiment drivers: execute a validated configuration, write
//! `results.csv`, `summary.json` and `manifest.json` into the output
//! directory.
//!
//! Result files are a pure function of `(config, master seed, code
//! version)`: all randomness flows through counter-based replica keys,
//! aggregation is ordered by replica index, and wall-clock data lives
//! only in the manifest.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use polymer_core::environment::{Environment, StripSpec, WeightFamily};
use polymer_core::fluct::{
    global_fluct_probability, lemma_pnc_check, local_fluct_probability, steep_mass, DecayFitReport,
    FluctuationConfig,
};
use polymer_core::lindeberg::{
    distribution_transfer_experiment, rescaled_batch, strip_sweep, zeta_v, zeta_v_exact_tiny,
};
use polymer_core::partition::{
    brute_force_log_partition, log_partition_field, Direction, PointPair,
};
use polymer_core::rng::{replica_key, KeyedRng};
use polymer_core::sampler::sample_path;
use polymer_core::scaling::{constants_table, moment_gap, theta_of_beta, ModelConstants};
use polymer_core::special::chi_square_test;
use polymer_core::tracy_widom::{ks_distance, DistributionTable};

use crate::config::{validate, ExperimentConfig, Severity};

/// Failure classes map to distinct process exit codes.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 4,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<polymer_core::Error> for RunError {
    fn from(e: polymer_core::Error) -> Self {
        match e {
            polymer_core::Error::Io(io) => RunError::Io(io.to_string()),
            polymer_core::Error::Json(j) => RunError::Io(j.to_string()),
            polymer_core::Error::NonConvergent(m) | polymer_core::Error::PrecisionLoss(m) => {
                RunError::Numerical(m)
            }
            other => RunError::Config(other.to_string()),
        }
    }
}

fn io_err<E: std::fmt::Display>(e: E) -> RunError {
    RunError::Io(e.to_string())
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub kind: String,
    pub version: String,
    pub config: ExperimentConfig,
    pub workers: usize,
    pub master_seed: Option<u64>,
    /// `(seed, stream)` per replica; enough to replay any one of them.
    pub replica_keys: Vec<(u64, u64)>,
    pub wall_clock_seconds: f64,
    /// SHA-256 of each output file.
    pub output_checksums: std::collections::BTreeMap<String, String>,
    /// Checksum of a consumed Tracy-Widom table, when one was read.
    pub tw_table_checksum: Option<String>,
}

pub struct RunOutcome {
    pub manifest: Manifest,
    pub summary: Value,
    pub warnings: Vec<String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<String, RunError> {
    std::fs::write(dir.join(name), bytes).map_err(io_err)?;
    Ok(sha256_hex(bytes))
}

/// Exact `(seed, stream)` pairs each experiment derives per replica, as
/// recorded in the manifest for isolated replay. The strip sweep keys
/// replicas per strip group and lists nothing here; its keys are a pure
/// function of `(master seed, group, replica)` in the report.
fn manifest_keys(config: &ExperimentConfig, replicas: usize) -> Vec<(u64, u64)> {
    let Some(seed) = config.master_seed() else {
        return Vec::new();
    };
    let labels: &[&str] = match config.kind() {
        "global-fluct" => &["global-fluct"],
        "local-fluct" => &["local-fluct"],
        "steep-mass" => &["steep-mass"],
        "lindeberg-tiny" => &["zeta-v"],
        "transfer" => &["transfer-a", "transfer-b"],
        "lindeberg-sweep" => &[],
        _ => &["replica"],
    };
    labels
        .iter()
        .flat_map(|label| (0..replicas).map(move |r| replica_key(seed, label, r as u64)))
        .collect()
}

/// Execute one experiment; returns the manifest after writing all
/// output files.
pub fn run(
    config: ExperimentConfig,
    out_dir: &Path,
    workers: usize,
    tw_table: Option<PathBuf>,
) -> Result<RunOutcome, RunError> {
    let violations = validate(&config);
    let warnings: Vec<String> = violations
        .iter()
        .filter(|v| v.severity == Severity::Warning)
        .map(|v| v.message.clone())
        .collect();
    let errors: Vec<&crate::config::Violation> = violations
        .iter()
        .filter(|v| v.severity == Severity::Error)
        .collect();
    if !errors.is_empty() {
        let joined = errors
            .iter()
            .map(|v| v.message.as_str())
            .collect::<Vec<_>>()
            .join("; ");
        return Err(RunError::Config(joined));
    }
    std::fs::create_dir_all(out_dir).map_err(io_err)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| RunError::Config(e.to_string()))?;

    let start = Instant::now();
    let (csv, mut summary, replica_count, tw_table_checksum) =
        pool.install(|| execute(&config, tw_table.as_deref()))?;
    let wall = start.elapsed().as_secs_f64();

    if let Some(obj) = summary.as_object_mut() {
        obj.insert("kind".into(), json!(config.kind()));
        obj.insert("warnings".into(), json!(warnings));
    }

    let mut output_checksums = std::collections::BTreeMap::new();
    let csv_sum = write_file(out_dir, "results.csv", csv.as_bytes())?;
    output_checksums.insert("results.csv".into(), csv_sum);
    let summary_bytes = serde_json::to_vec_pretty(&summary).map_err(io_err)?;
    let summary_sum = write_file(out_dir, "summary.json", &summary_bytes)?;
    output_checksums.insert("summary.json".into(), summary_sum);

    let replica_keys = manifest_keys(&config, replica_count);
    let manifest = Manifest {
        kind: config.kind().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.master_seed(),
        config,
        workers,
        replica_keys,
        wall_clock_seconds: wall,
        output_checksums,
        tw_table_checksum,
    };
    let manifest_bytes = serde_json::to_vec_pretty(&manifest).map_err(io_err)?;
    std::fs::write(out_dir.join("manifest.json"), manifest_bytes).map_err(io_err)?;
    Ok(RunOutcome {
        manifest,
        summary,
        warnings,
    })
}

fn load_or_build_table(
    tw_table: Option<&Path>,
) -> Result<(DistributionTable, Option<String>), RunError> {
    match tw_table {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(io_err)?;
            let table = DistributionTable::read_csv(bytes.as_slice())?;
            Ok((table, Some(sha256_hex(&bytes))))
        }
        None => Ok((DistributionTable::build_tw_gue(0.05, 48)?, None)),
    }
}

fn decay_report_csv(report: &DecayFitReport) -> String {
    let mut csv = String::from("t,threshold,x,estimate,std_error,count,upper_bound,per_env_max\n");
    for i in 0..report.t_grid.len() {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            report.t_grid[i],
            report.thresholds[i],
            report.x_grid[i],
            report.estimates[i],
            report.std_errors[i],
            report.counts[i],
            report.is_upper_bound[i],
            report.per_env_max[i]
        );
    }
    csv
}

fn decay_report_summary(report: &DecayFitReport) -> Value {
    json!({
        "r": report.r,
        "fitted_c": report.fitted_c,
        "intercept": report.intercept,
        "r_squared": report.r_squared,
        "fit_points": report.fit_points,
    })
}

type ExecOutput = (String, Value, usize, Option<String>);

fn execute(config: &ExperimentConfig, tw_table: Option<&Path>) -> Result<ExecOutput, RunError> {
    match config {
        ExperimentConfig::PartitionCheck {
            master_seed,
            cases,
            max_extent,
        } => {
            let shapes: Vec<(usize, usize)> = (0..*cases)
                .map(|c| {
                    let h = polymer_core::rng::hash_words(&[*master_seed, c as u64, 0x9a]);
                    let total = 2 + (h % (*max_extent as u64 - 1)) as usize;
                    let m = ((h >> 32) % (total as u64 + 1)) as usize;
                    (m, total - m)
                })
                .collect();
            let mut csv = String::from("case,m,n,seed,log_z_dp,log_z_enum,rel_err\n");
            let mut worst: f64 = 0.0;
            for (c, &(m, n)) in shapes.iter().enumerate() {
                let (seed, stream) = replica_key(*master_seed, "replica", c as u64);
                let env = Environment::sample(
                    WeightFamily::LogGamma { theta: 9.0 },
                    0.35,
                    m,
                    n,
                    seed,
                    stream,
                )?;
                let field = log_partition_field(&env, (0, 0), Direction::Forward)?;
                let pair = PointPair::new((0, 0), (m, n), &env)?;
                let exact = brute_force_log_partition(&env, pair)?;
                let dp = field.log_z(m, n);
                let rel = (dp - exact).abs() / exact.abs().max(1.0);
                worst = worst.max(rel);
                let _ = writeln!(csv, "{c},{m},{n},{seed},{dp},{exact},{rel:e}");
            }
            let pass = worst <= 1e-10;
            let summary = json!({
                "cases": cases,
                "worst_rel_err": worst,
                "tolerance": 1e-10,
                "pass": pass,
            });
            if !pass {
                return Err(RunError::Numerical(format!(
                    "partition check failed: worst relative error {worst:e}"
                )));
            }
            Ok((csv, summary, *cases, None))
        }

        ExperimentConfig::SamplerCheck {
            master_seed,
            seeds,
            samples,
            grid,
            family,
            beta,
        } => {
            let mut csv = String::from("seed,p_value\n");
            let mut passes = 0usize;
            for s in 0..*seeds {
                let (seed, stream) = replica_key(*master_seed, "replica", s as u64);
                let env = Environment::sample(family.clone(), *beta, *grid, *grid, seed, stream)?;
                let field = log_partition_field(&env, (0, 0), Direction::Forward)?;
                let enumerated =
                    polymer_core::sampler::enumerate_polymer_measure(&env, (0, 0), (*grid, *grid))?;
                let mut index = std::collections::HashMap::new();
                let mut probs = Vec::new();
                for (k, (p, q)) in enumerated.iter().enumerate() {
                    index.insert(p.vertices().to_vec(), k);
                    probs.push(*q);
                }
                let mut counts = vec![0u64; probs.len()];
                let mut rng = KeyedRng::from_key(&[seed, stream, 0x5a]);
                for _ in 0..*samples {
                    let sample = sample_path(&env, &field, &mut rng)?;
                    counts[index[sample.path.vertices()]] += 1;
                }
                let p = chi_square_test(&counts, &probs)?;
                if p > 1e-3 {
                    passes += 1;
                }
                let _ = writeln!(csv, "{s},{p}");
            }
            let summary = json!({
                "seeds": seeds,
                "samples": samples,
                "passes": passes,
                "required": (*seeds as f64 * 0.95).ceil() as usize,
                "pass": passes * 100 >= seeds * 95,
            });
            Ok((csv, summary, *seeds, None))
        }

        ExperimentConfig::LemmaPnc { n, k_max } => {
            let ks: Vec<i64> = (-*k_max..=*k_max).collect();
            let report = lemma_pnc_check(*n, &ks)?;
            let mut csv = String::from("k,log_a,approx,delta\n");
            for row in &report.rows {
                let _ = writeln!(csv, "{},{},{},{}", row.k, row.log_a, row.approx, row.delta);
            }
            let summary = json!({
                "n": n,
                "k_max": k_max,
                "max_abs_delta": report.max_abs_delta,
            });
            Ok((csv, summary, 0, None))
        }

        ExperimentConfig::GlobalFluct(p) | ExperimentConfig::LocalFluct(p) => {
            let is_global = matches!(config, ExperimentConfig::GlobalFluct(_));
            let t_grid = if p.t_grid.is_empty() {
                let r = if is_global { p.n } else { p.r };
                FluctuationConfig::default_t_grid(p.n, r, p.alpha, p.s)
            } else {
                p.t_grid.clone()
            };
            let beta = (p.n as f64).powf(-p.alpha);
            let cfg = FluctuationConfig {
                n: p.n,
                alpha: p.alpha,
                s: p.s,
                m_const: p.m_const,
                r: p.r,
                t_grid,
                gamma: 0.0,
                strip: None,
                replicas: p.replicas,
                samples_per_replica: p.samples_per_replica,
                master_seed: p.master_seed,
                family: p.family.weight_family(beta)?,
                method: p.method,
            };
            let report = if is_global {
                global_fluct_probability(&cfg)?
            } else {
                local_fluct_probability(&cfg)?
            };
            Ok((
                decay_report_csv(&report),
                decay_report_summary(&report),
                p.replicas,
                None,
            ))
        }

        ExperimentConfig::SteepMass {
            master_seed,
            n,
            alpha,
            s,
            m_const,
            n0_grid,
            replicas,
            samples_per_replica,
            family,
            method,
        } => {
            let beta = (*n as f64).powf(-*alpha);
            let weights = family.weight_family(beta)?;
            let mut csv = String::from(
                "n0,a,b,estimate,std_error,per_env_max,upper_bound,ws_rejections,x_value\n",
            );
            let mut rows = Vec::new();
            for &n0 in n0_grid {
                let strip = StripSpec {
                    a: n - n0 / 2,
                    b: n - n0 / 2 + n0,
                };
                let cfg = FluctuationConfig {
                    n: *n,
                    alpha: *alpha,
                    s: *s,
                    m_const: *m_const,
                    r: 1,
                    t_grid: vec![1.0],
                    gamma: (n0 as f64).ln() / (*n as f64).ln(),
                    strip: Some(strip),
                    replicas: *replicas,
                    samples_per_replica: *samples_per_replica,
                    master_seed: *master_seed,
                    family: weights.clone(),
                    method: *method,
                };
                let rep = steep_mass(&cfg)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    rep.n0,
                    strip.a,
                    strip.b,
                    rep.estimate,
                    rep.std_error,
                    rep.per_env_max,
                    rep.is_upper_bound,
                    rep.ws_rejections,
                    rep.x_value
                );
                rows.push(rep);
            }
            let monotone = rows.windows(2).all(|w| w[1].estimate <= w[0].estimate);
            // Decay fit against n0^{1 - s alpha} on the resolvable rows.
            let xs: Vec<f64> = rows
                .iter()
                .filter(|r| !r.is_upper_bound && r.estimate > 0.0)
                .map(|r| r.x_value)
                .collect();
            let ys: Vec<f64> = rows
                .iter()
                .filter(|r| !r.is_upper_bound && r.estimate > 0.0)
                .map(|r| r.estimate.ln())
                .collect();
            let fit = if xs.len() >= 2 {
                let (slope, intercept) = polymer_core::environment::least_squares(&xs, &ys);
                json!({"c": -slope, "intercept": intercept, "points": xs.len()})
            } else {
                json!(null)
            };
            let summary = json!({
                "n": n,
                "n0_grid": n0_grid,
                "estimates": rows.iter().map(|r| r.estimate).collect::<Vec<_>>(),
                "monotone_decreasing": monotone,
                "decay_fit": fit,
            });
            Ok((csv, summary, *replicas, None))
        }

        ExperimentConfig::MomentGap { xi, k_max, betas } => {
            let mut csv = String::from("k,beta,theta,gap\n");
            let mut slopes = serde_json::Map::new();
            for k in 1..=*k_max {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for &beta in betas {
                    let theta = theta_of_beta(xi, beta)?.theta;
                    let gap = moment_gap(xi, beta, k)?;
                    let _ = writeln!(csv, "{k},{beta},{theta},{gap:e}");
                    if gap > 0.0 {
                        xs.push(beta.ln());
                        ys.push(gap.ln());
                    }
                }
                let slope = if xs.len() >= 2 {
                    json!(polymer_core::environment::least_squares(&xs, &ys).0)
                } else {
                    json!(null)
                };
                slopes.insert(format!("k{k}"), slope);
            }
            let summary = json!({
                "betas": betas,
                "third_central_moment": xi.third_central_moment(),
                "slopes": slopes,
            });
            Ok((csv, summary, 0, None))
        }

        ExperimentConfig::ConstantsTable { xi, ns, alphas } => {
            let rows = constants_table(xi, ns, alphas)?;
            let mut csv = String::from("n,alpha,beta,theta,a_n,paper_scale,exact_scale\n");
            for r in &rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    r.n, r.alpha, r.beta, r.theta, r.a_n, r.paper_scale, r.exact_scale
                );
            }
            let summary = json!({"rows": rows.len()});
            Ok((csv, summary, 0, None))
        }

        ExperimentConfig::TwTable { step, order } => {
            let table = DistributionTable::build_tw_gue(*step, *order)?;
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            let csv = String::from_utf8(buf).map_err(|e| RunError::Io(e.to_string()))?;
            let summary = json!({
                "grid_points": table.s_grid.len(),
                "step": step,
                "order": order,
                "s_range": [table.s_grid.first(), table.s_grid.last()],
            });
            Ok((csv, summary, 0, None))
        }

        ExperimentConfig::TwConvergence {
            master_seed,
            n,
            alpha,
            replicas,
            family,
            scale_mode,
        } => {
            let (table, checksum) = load_or_build_table(tw_table)?;
            let batch = rescaled_batch(
                family,
                *n,
                *alpha,
                *replicas,
                *master_seed,
                "replica",
                *scale_mode,
            )?;
            let mut csv = String::from("replica,seed,stream,rescaled\n");
            for (i, v) in batch.iter().enumerate() {
                let (seed, stream) = replica_key(*master_seed, "replica", i as u64);
                let _ = writeln!(csv, "{i},{seed},{stream},{v}");
            }
            let ks = ks_distance(&batch, &table)?;
            let mean = batch.iter().sum::<f64>() / batch.len() as f64;
            let var = batch.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>()
                / (batch.len() - 1) as f64;
            let constants = family.constants(*n, *alpha)?;
            let summary = json!({
                "n": n,
                "alpha": alpha,
                "beta": constants.beta,
                "theta": constants.theta,
                "scale_mode": scale_mode,
                "replicas": replicas,
                "ks_to_tw": ks,
                "mean": mean,
                "variance": var,
                "tw_mean": -1.7711,
                "tw_variance": 0.8132,
                "tw_table_checksum": checksum,
            });
            Ok((csv, summary, *replicas, checksum))
        }

        ExperimentConfig::LindebergTiny {
            master_seed,
            n,
            surround,
            fam_a,
            fam_b,
            f,
            environments,
            theta,
            alpha,
        } => {
            let mut constants = ModelConstants::for_log_gamma(*theta, *n, *alpha)
                .map_err(|e| RunError::Config(e.to_string()))?;
            // Center the statistic on the tiny lattice itself.
            let paths = polymer_core::special::ln_binomial(2 * *n as u64, *n as u64);
            constants.lattice_centering = paths;
            // Per-vertex exact and Monte Carlo replacement errors over
            // every interior vertex.
            let mut csv = String::from("i,j,exact,mc,mc_std_error,z_score\n");
            let mut worst_z = 0.0f64;
            let mut within = 0usize;
            let mut count = 0usize;
            for j in 0..=*n {
                for i in 0..=*n {
                    if (i, j) == (0, 0) || (i, j) == (*n, *n) {
                        continue;
                    }
                    let exact =
                        zeta_v_exact_tiny(surround, fam_a, fam_b, *n, (i, j), *f, &constants)?;
                    let mc = zeta_v(
                        surround,
                        fam_a,
                        fam_b,
                        (i, j),
                        *f,
                        &constants,
                        *environments,
                        0,
                        *master_seed ^ ((i as u64) << 32 | j as u64),
                        false,
                    )?;
                    let z_score = (mc.value - exact).abs() / mc.std_error.max(1e-300);
                    worst_z = worst_z.max(z_score);
                    count += 1;
                    if z_score <= 3.0 {
                        within += 1;
                    }
                    let _ = writeln!(
                        csv,
                        "{i},{j},{exact},{},{},{z_score}",
                        mc.value, mc.std_error
                    );
                }
            }
            let summary = json!({
                "n": n,
                "vertices": count,
                "within_3_sigma": within,
                "worst_z_score": worst_z,
            });
            Ok((csv, summary, *environments, None))
        }

        ExperimentConfig::LindebergSweep {
            master_seed,
            n,
            alpha,
            base,
            target,
            delta,
            k_moments,
            f,
            replicas,
            vertices_per_strip,
        } => {
            let constants = base
                .constants(*n, *alpha)
                .map_err(|e| RunError::Config(e.to_string()))?;
            let beta = constants.beta;
            let report = strip_sweep(
                &base.weight_family(beta)?,
                &target.weight_family(beta)?,
                &constants,
                *delta,
                *k_moments,
                *f,
                *replicas,
                *vertices_per_strip,
                *master_seed,
            )?;
            let mut csv = String::from(
                "segment,lo,hi,vertices,sampled,mean_zeta,mean_zeta_se,sum\n",
            );
            // The boundary band covers both endpoint neighborhoods:
            // times [0, cut] and [2n - cut, 2n].
            let _ = writeln!(
                csv,
                "boundary,0,{},{},{},{},{},{}",
                report.boundary_cut,
                report.boundary_vertices,
                report.boundary_vertices,
                report.boundary_sum / report.boundary_vertices.max(1) as f64,
                report.boundary_sum_se / report.boundary_vertices.max(1) as f64,
                report.boundary_sum
            );
            for s in &report.strips {
                let _ = writeln!(
                    csv,
                    "strip,{},{},{},{},{},{},{}",
                    s.time_range.0,
                    s.time_range.1,
                    s.vertex_count,
                    s.sampled_vertices,
                    s.mean_zeta,
                    s.mean_zeta_se,
                    s.extrapolated_sum
                );
            }
            let summary = serde_json::to_value(&report).map_err(io_err)?;
            Ok((csv, summary, *replicas, None))
        }

        ExperimentConfig::Transfer {
            master_seed,
            n,
            alpha,
            replicas,
            fam_a,
            fam_b,
        } => {
            let (table, checksum) = load_or_build_table(tw_table)?;
            let report = distribution_transfer_experiment(
                fam_a,
                fam_b,
                *n,
                *alpha,
                *replicas,
                *master_seed,
                &table,
            )?;
            let csv = format!(
                "quantity,value\ntwo_sample_ks,{}\nks_a_to_tw,{}\nks_b_to_tw,{}\nmean_a,{}\nmean_b,{}\nvar_a,{}\nvar_b,{}\n",
                report.two_sample_ks,
                report.ks_a_to_tw,
                report.ks_b_to_tw,
                report.mean_a,
                report.mean_b,
                report.var_a,
                report.var_b
            );
            let summary = serde_json::to_value(&report).map_err(io_err)?;
            Ok((csv, summary, *replicas, checksum))
        }
    }
}
