//! Tracy-Widom GUE distribution and goodness-of-fit statistics.
//!
//! `F_2(s) = det(I - K_Ai)` on `L^2(s, infinity)` is evaluated by Nystrom
//! discretization: Gauss-Legendre nodes mapped to `[s, s + T]`, the Airy
//! kernel sampled there with square-root weight symmetrization, and the
//! determinant taken through a pivoted LU factorization.

mod airy;
mod tables;

pub use airy::{airy_ai, AIRY_RANGE};

use std::io::{BufRead, BufReader, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::special::gauss_legendre;
use crate::{Error, Result};

/// Gauss-Legendre rule mapped onto `[s, s + t_cutoff]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn on_interval(order: usize, lo: f64, hi: f64) -> Self {
        let (xs, ws) = gauss_legendre(order);
        let mid = 0.5 * (lo + hi);
        let half = 0.5 * (hi - lo);
        QuadratureRule {
            order,
            nodes: xs.iter().map(|x| mid + half * x).collect(),
            weights: ws.iter().map(|w| w * half).collect(),
        }
    }
}

/// Airy kernel `(Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y)` with the
/// removable singularity on the diagonal handled analytically.
fn airy_kernel(x: f64, ax: (f64, f64), y: f64, ay: (f64, f64)) -> Result<f64> {
    let d = x - y;
    if d == 0.0 {
        // Analytic limit: Ai'(x)^2 - x Ai(x)^2.
        return Ok(ax.1 * ax.1 - x * ax.0 * ax.0);
    }
    if d.abs() < 1e-6 {
        // First-order Taylor of the numerator about the midpoint.
        let m = 0.5 * (x + y);
        let (ai, aip) = airy_ai(m)?;
        return Ok(aip * aip - m * ai * ai);
    }
    Ok((ax.0 * ay.1 - ax.1 * ay.0) / d)
}

/// Determinant of `I - D K D` (`D = diag(sqrt(w))`) by LU with partial
/// pivoting. Eigenvalues of the discretized kernel lie in `[0, 1)`, so
/// the factorization is stable and the determinant lands in `(0, 1]`.
fn det_i_minus_k(rule: &QuadratureRule) -> Result<f64> {
    let m = rule.order;
    let airy_at: Vec<(f64, f64)> = rule
        .nodes
        .iter()
        .map(|&x| airy_ai(x))
        .collect::<Result<_>>()?;
    let sqrt_w: Vec<f64> = rule.weights.iter().map(|w| w.sqrt()).collect();
    let mut a = vec![0.0f64; m * m];
    for i in 0..m {
        for j in 0..=i {
            let k = airy_kernel(rule.nodes[i], airy_at[i], rule.nodes[j], airy_at[j])?;
            let v = sqrt_w[i] * k * sqrt_w[j];
            // Symmetric by construction; fill both triangles.
            a[i * m + j] = -v;
            a[j * m + i] = -v;
        }
        a[i * m + i] += 1.0;
    }
    // In-place LU, partial pivoting; determinant is the pivot product.
    let mut det = 1.0f64;
    for col in 0..m {
        let mut piv = col;
        let mut best = a[col * m + col].abs();
        for r in col + 1..m {
            let v = a[r * m + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return Ok(0.0);
        }
        if piv != col {
            for c in 0..m {
                a.swap(col * m + c, piv * m + c);
            }
            det = -det;
        }
        let d = a[col * m + col];
        det *= d;
        for r in col + 1..m {
            let factor = a[r * m + col] / d;
            if factor == 0.0 {
                continue;
            }
            for c in col + 1..m {
                a[r * m + c] -= factor * a[col * m + c];
            }
        }
    }
    Ok(det)
}

/// Truncation adequacy: the omitted tail must be invisible at the target
/// accuracy.
fn validate_cutoff(s: f64, t_cutoff: f64) -> Result<()> {
    let edge = s + t_cutoff;
    let (ai, _) = airy_ai(edge.min(AIRY_RANGE.1))?;
    if ai * ai >= 1e-30 {
        return Err(Error::InvalidParameter(format!(
            "cutoff T = {t_cutoff} too small at s = {s}: Ai(s+T)^2 = {:.2e} >= 1e-30",
            ai * ai
        )));
    }
    Ok(())
}

/// Cutoff satisfying the `Ai(s+T)^2 < 1e-30` truncation rule with the
/// default 16 as a floor.
pub fn default_cutoff(s: f64) -> f64 {
    (18.5 - s).max(16.0)
}

/// Tracy-Widom GUE CDF `F_2(s)` by an order-`m` Nystrom determinant on
/// `[s, s + t_cutoff]`.
pub fn tw_gue_cdf(s: f64, order: usize, t_cutoff: f64) -> Result<f64> {
    if !(-10.0..=6.0).contains(&s) {
        return Err(Error::InvalidParameter(format!(
            "tw_gue_cdf supports s in [-10, 6], got {s}"
        )));
    }
    if order < 20 {
        return Err(Error::InvalidParameter(format!(
            "Nystrom order must be >= 20, got {order}"
        )));
    }
    validate_cutoff(s, t_cutoff)?;
    let rule = QuadratureRule::on_interval(order, s, s + t_cutoff);
    let det = det_i_minus_k(&rule)?;
    Ok(det.clamp(0.0, 1.0))
}

/// `F_2(s)` with an order-doubling convergence check; errors when the
/// two orders disagree by more than 1e-6.
pub fn tw_gue_cdf_checked(s: f64, order: usize, t_cutoff: f64) -> Result<f64> {
    let coarse = tw_gue_cdf(s, order, t_cutoff)?;
    let fine = tw_gue_cdf(s, 2 * order, t_cutoff)?;
    if (coarse - fine).abs() > 1e-6 {
        return Err(Error::NonConvergent(format!(
            "Nystrom determinant at s = {s}: order {order} gives {coarse}, order {} gives {fine}",
            2 * order
        )));
    }
    Ok(fine)
}

/// Tabulated `F_2` with monotone cubic interpolation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DistributionTable {
    pub s_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Interpolation method tag; currently always `pchip`.
    pub interpolation: String,
    #[serde(skip)]
    slopes: Vec<f64>,
}

impl DistributionTable {
    /// Wrap a precomputed grid. Enforces monotonicity and the tail
    /// limits (0 and 1 within 1e-8 at the grid ends).
    pub fn new(s_grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if s_grid.len() != values.len() || s_grid.len() < 4 {
            return Err(Error::InvalidParameter(
                "distribution table needs >= 4 matching grid points".into(),
            ));
        }
        if !s_grid.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter("s grid must be increasing".into()));
        }
        if !values.windows(2).all(|w| w[0] <= w[1]) {
            return Err(Error::InvalidParameter(
                "F values must be nondecreasing".into(),
            ));
        }
        if values[0] > 1e-8 || values[values.len() - 1] < 1.0 - 1e-8 {
            return Err(Error::InvalidParameter(format!(
                "table does not reach its limits: F(lo) = {:.3e}, F(hi) = {:.10}",
                values[0],
                values[values.len() - 1]
            )));
        }
        let slopes = pchip_slopes(&s_grid, &values);
        Ok(Self {
            s_grid,
            values,
            interpolation: "pchip".into(),
            slopes,
        })
    }

    /// Build the default Tracy-Widom GUE table on `[-10, 6]`.
    pub fn build_tw_gue(step: f64, order: usize) -> Result<Self> {
        if !(step > 0.0 && step <= 0.25) {
            return Err(Error::InvalidParameter(format!(
                "table step must be in (0, 0.25], got {step}"
            )));
        }
        let count = ((16.0 / step).round() as usize) + 1;
        let s_grid: Vec<f64> = (0..count).map(|i| -10.0 + i as f64 * step).collect();
        let mut values: Vec<f64> = s_grid
            .par_iter()
            .map(|&s| tw_gue_cdf_checked(s, order, default_cutoff(s)))
            .collect::<Result<_>>()?;
        // Iron out 1e-12 level determinant noise so the table is exactly
        // monotone.
        for i in 1..values.len() {
            values[i] = values[i].max(values[i - 1]);
        }
        Self::new(s_grid, values)
    }

    /// Interpolated CDF value, clamped to `[0, 1]` outside the grid.
    pub fn cdf(&self, s: f64) -> f64 {
        let n = self.s_grid.len();
        if s <= self.s_grid[0] {
            return 0.0;
        }
        if s >= self.s_grid[n - 1] {
            return 1.0;
        }
        let hi = self.s_grid.partition_point(|&x| x < s).min(n - 1);
        let lo = hi - 1;
        let h = self.s_grid[hi] - self.s_grid[lo];
        let t = (s - self.s_grid[lo]) / h;
        let (y0, y1) = (self.values[lo], self.values[hi]);
        let (d0, d1) = (self.slopes[lo], self.slopes[hi]);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        (h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1).clamp(0.0, 1.0)
    }

    /// Generalized inverse `inf {s : F(s) >= p}` by bisection.
    pub fn inverse(&self, p: f64) -> f64 {
        let n = self.s_grid.len();
        let (mut lo, mut hi) = (self.s_grid[0], self.s_grid[n - 1]);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// CSV export: header `s,F2` then one row per grid point.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "s,F2")?;
        for (s, v) in self.s_grid.iter().zip(&self.values) {
            writeln!(w, "{s:.17e},{v:.17e}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut s_grid = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if idx == 0 {
                if line.trim() != "s,F2" {
                    return Err(Error::BadFormat("expected header 's,F2'".into()));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(',');
            let s: f64 = parts
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| Error::BadFormat(format!("bad row {idx}: {line}")))?;
            let v: f64 = parts
                .next()
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| Error::BadFormat(format!("bad row {idx}: {line}")))?;
            s_grid.push(s);
            values.push(v);
        }
        Self::new(s_grid, values)
    }

    /// Mean and variance of the induced density, by Stieltjes integration
    /// by parts of fresh Nystrom evaluations over the support.
    pub fn tw_mean_variance(order: usize) -> Result<(f64, f64)> {
        let (lo, hi) = (-10.0f64, 6.0f64);
        let rule = QuadratureRule::on_interval(24, 0.0, 1.0);
        let mut int_f = crate::logdomain::CompensatedSum::new();
        let mut int_sf = crate::logdomain::CompensatedSum::new();
        let panels = 16usize;
        let h = (hi - lo) / panels as f64;
        let evals: Vec<(f64, f64)> = (0..panels)
            .into_par_iter()
            .flat_map_iter(|p| {
                let base = lo + p as f64 * h;
                rule.nodes
                    .iter()
                    .zip(rule.weights.clone())
                    .map(move |(&t, w)| (base + t * h, w * h))
                    .collect::<Vec<_>>()
            })
            .map(|(s, w)| {
                let f = tw_gue_cdf(s, order, default_cutoff(s))?;
                Ok((w * f, w * s * f))
            })
            .collect::<Result<_>>()?;
        for (wf, wsf) in evals {
            int_f.add(wf);
            int_sf.add(wsf);
        }
        // E[X] = hi - int F, E[X^2] = hi^2 - int 2 s F ds.
        let mean = hi - int_f.value();
        let second = hi * hi - 2.0 * int_sf.value();
        Ok((mean, second - mean * mean))
    }
}

/// Fritsch-Carlson monotone cubic slopes.
fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let mut deltas = Vec::with_capacity(n - 1);
    for i in 0..n - 1 {
        deltas.push((ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]));
    }
    let mut d = vec![0.0f64; n];
    d[0] = deltas[0];
    d[n - 1] = deltas[n - 2];
    for i in 1..n - 1 {
        let (d0, d1) = (deltas[i - 1], deltas[i]);
        if d0 * d1 <= 0.0 {
            d[i] = 0.0;
        } else {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            d[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    d
}

/// Kolmogorov-Smirnov distance between samples and a tabulated CDF.
pub fn ks_distance(samples: &[f64], table: &DistributionTable) -> Result<f64> {
    if samples.len() < 100 {
        return Err(Error::InvalidParameter(format!(
            "ks_distance needs >= 100 samples, got {}",
            samples.len()
        )));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = table.cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= x {
            i += 1;
        }
        while j < ys.len() && ys[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}
