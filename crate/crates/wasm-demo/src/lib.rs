//! Browser bindings for a small interactive slice of the laboratory:
//! polymer path sampling, the Tracy-Widom GUE curve, and rescaled
//! free-energy batches. See `www/index.html` for the page driving it.

use wasm_bindgen::prelude::*;

use polymer_core::environment::{Environment, WeightFamily, XiDistribution};
use polymer_core::lindeberg::{rescaled_batch, PolymerFamily, ThetaRule};
use polymer_core::partition::{log_partition_field, Direction};
use polymer_core::rng::KeyedRng;
use polymer_core::sampler::sample_path;
use polymer_core::scaling::ScaleMode;
use polymer_core::tracy_widom::{default_cutoff, tw_gue_cdf};

fn family_from_name(name: &str, beta: f64) -> Result<WeightFamily, String> {
    match name {
        "log-gamma" => Ok(WeightFamily::LogGamma {
            theta: 1.0 / (beta * beta),
        }),
        "exp-tilt-gaussian" => Ok(WeightFamily::ExpTilt {
            xi: XiDistribution::standard_gaussian(),
        }),
        "uniform" => Ok(WeightFamily::Constant { value: 1.0 }),
        other => Err(format!("unknown family '{other}'")),
    }
}

/// Sample `count` polymer paths on an `n x n` lattice and return the
/// flattened vertex list `[i0, j0, i1, j1, ...]`, `2n + 1` vertices per
/// path, paths concatenated in order.
pub fn polymer_paths(
    n: u32,
    family: &str,
    alpha: f64,
    seed: u64,
    count: u32,
) -> Result<Vec<i32>, String> {
    if n == 0 || n > 400 {
        return Err("n must lie in 1..=400 for the demo".into());
    }
    if count == 0 || count > 64 {
        return Err("path count must lie in 1..=64".into());
    }
    let beta = f64::from(n as i32).powf(-alpha);
    let fam = family_from_name(family, beta)?;
    let env = Environment::sample(fam, beta, n as usize, n as usize, seed, 0)
        .map_err(|e| e.to_string())?;
    let field = log_partition_field(&env, (0, 0), Direction::Forward).map_err(|e| e.to_string())?;
    let mut rng = KeyedRng::from_key(&[seed, 0xde40]);
    let mut out = Vec::with_capacity(count as usize * (2 * n as usize + 1) * 2);
    for _ in 0..count {
        let sample = sample_path(&env, &field, &mut rng).map_err(|e| e.to_string())?;
        for &(i, j) in sample.path.vertices() {
            out.push(i as i32);
            out.push(j as i32);
        }
    }
    Ok(out)
}

/// Tracy-Widom GUE CDF on an equispaced grid, flattened as
/// `[s0, F(s0), s1, F(s1), ...]`.
pub fn tw_curve(s_min: f64, s_max: f64, points: u32) -> Result<Vec<f64>, String> {
    if !(s_min < s_max && (-10.0..=6.0).contains(&s_min) && (-10.0..=6.0).contains(&s_max)) {
        return Err("s range must be increasing inside [-10, 6]".into());
    }
    if !(2..=600).contains(&points) {
        return Err("point count must lie in 2..=600".into());
    }
    let mut out = Vec::with_capacity(points as usize * 2);
    for k in 0..points {
        let s = s_min + (s_max - s_min) * f64::from(k) / f64::from(points - 1);
        let f = tw_gue_cdf(s, 48, default_cutoff(s)).map_err(|e| e.to_string())?;
        out.push(s);
        out.push(f);
    }
    Ok(out)
}

/// Rescaled free energies of the log-Gamma polymer (theta matched to the
/// standard Gaussian tilt), sorted ascending so the page can draw the
/// empirical CDF directly.
pub fn rescaled_free_energies(
    n: u32,
    alpha: f64,
    replicas: u32,
    seed: u64,
) -> Result<Vec<f64>, String> {
    if !(8..=512).contains(&n) {
        return Err("n must lie in 8..=512 for the demo".into());
    }
    if !(10..=2000).contains(&replicas) {
        return Err("replicas must lie in 10..=2000".into());
    }
    if !(alpha > 0.05 && alpha < 0.3) {
        return Err("alpha must lie in (0.05, 0.3)".into());
    }
    let fam = PolymerFamily::LogGamma {
        theta_rule: ThetaRule::Matched {
            xi: XiDistribution::standard_gaussian(),
        },
    };
    let mut batch = rescaled_batch(
        &fam,
        n as usize,
        alpha,
        replicas as usize,
        seed,
        "demo",
        ScaleMode::Paper,
    )
    .map_err(|e| e.to_string())?;
    batch.sort_by(f64::total_cmp);
    Ok(batch)
}

#[wasm_bindgen(js_name = polymerPaths)]
pub fn polymer_paths_js(
    n: u32,
    family: &str,
    alpha: f64,
    seed: u64,
    count: u32,
) -> Result<Vec<i32>, JsValue> {
    polymer_paths(n, family, alpha, seed, count).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = twCurve)]
pub fn tw_curve_js(s_min: f64, s_max: f64, points: u32) -> Result<Vec<f64>, JsValue> {
    tw_curve(s_min, s_max, points).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = rescaledFreeEnergies)]
pub fn rescaled_free_energies_js(
    n: u32,
    alpha: f64,
    replicas: u32,
    seed: u64,
) -> Result<Vec<f64>, JsValue> {
    rescaled_free_energies(n, alpha, replicas, seed).map_err(|e| JsValue::from_str(&e))
}
