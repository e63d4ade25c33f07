//! Exact sampling from the quenched polymer measure and path geometry.
//!
//! One forward DP sweep gives all predecessor probabilities; a backward
//! walk from the terminal then draws a path exactly from
//! `Q(pi) = l(pi) / Z` in O(m + n) time. Transversal fluctuations are
//! half-integers and are kept as integer numerators so event boundaries
//! never touch float comparisons.

use std::io::Write;

use rand::Rng;

use crate::environment::{Environment, StripSpec};
use crate::partition::{Direction, LogPartitionField};
use crate::{Error, Result, Vertex};

/// An up-right path as its full vertex sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticePath {
    vertices: Vec<Vertex>,
}

impl LatticePath {
    /// Build from a vertex sequence, checking every increment is `e1` or
    /// `e2`.
    pub fn new(vertices: Vec<Vertex>) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidParameter("empty path".into()));
        }
        for w in vertices.windows(2) {
            let ((i0, j0), (i1, j1)) = (w[0], w[1]);
            let step_e1 = i1 == i0 + 1 && j1 == j0;
            let step_e2 = i1 == i0 && j1 == j0 + 1;
            if !(step_e1 || step_e2) {
                return Err(Error::InvalidParameter(format!(
                    "illegal step {:?} -> {:?}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { vertices })
    }

    pub fn start(&self) -> Vertex {
        self.vertices[0]
    }

    pub fn end(&self) -> Vertex {
        *self.vertices.last().unwrap()
    }

    /// Number of steps (vertices minus one).
    pub fn len(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    /// Vertex at step `r` counted from the path start.
    pub fn at(&self, r: usize) -> Result<Vertex> {
        self.vertices.get(r).copied().ok_or_else(|| {
            Error::InvalidParameter(format!("step {r} out of range 0..={}", self.len()))
        })
    }

    /// Twice the transversal fluctuation at step `r`: the integer `j - i`.
    pub fn tf_numerator(&self, r: usize) -> Result<i64> {
        let (i, j) = self.at(r)?;
        Ok(j as i64 - i as i64)
    }

    /// CSV rows `step,i,j`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "step,i,j")?;
        for (r, (i, j)) in self.vertices.iter().enumerate() {
            writeln!(w, "{r},{i},{j}")?;
        }
        Ok(())
    }
}

/// Transversal fluctuation `TF(pi, r) = (j - i) / 2` at step `r`.
pub fn transversal_fluctuation(path: &LatticePath, r: usize) -> Result<f64> {
    Ok(path.tf_numerator(r)? as f64 / 2.0)
}

/// Steepness across a strip: true iff the slope of the anti-diagonal
/// displacement strictly exceeds 1/2 in magnitude,
/// `|TF(b) - TF(a)| * 2 / (b - a) > 1` in half-integer units. Slope
/// exactly 1/2 classifies as NOT steep.
pub fn steep_indicator(path: &LatticePath, strip: StripSpec) -> Result<bool> {
    let start_time = path.start().0 + path.start().1;
    let a = strip
        .a
        .checked_sub(start_time)
        .ok_or_else(|| Error::InvalidParameter("strip begins before path".into()))?;
    let b = strip
        .b
        .checked_sub(start_time)
        .ok_or_else(|| Error::InvalidParameter("strip begins before path".into()))?;
    if b > path.len() {
        return Err(Error::StripOutOfRange {
            a: strip.a,
            b: strip.b,
            max: start_time + path.len(),
        });
    }
    let d = (path.tf_numerator(b)? - path.tf_numerator(a)?).unsigned_abs();
    // |delta(j - i)| > (b - a) / 2, in integers: 2 |delta| > b - a.
    Ok(2 * d > (b - a) as u64)
}

/// A sampled path together with its log-weight and provenance.
#[derive(Debug, Clone)]
pub struct PathSample {
    pub path: LatticePath,
    /// `sum_{v in pi} log omega_v`, recomputable from the environment.
    pub log_weight: f64,
}

/// Draw one path exactly from the quenched polymer measure between the
/// field origin and `(env.m, env.n)`.
///
/// Walks backward from the terminal; each predecessor is chosen with
/// probability proportional to its forward partition function.
pub fn sample_path<R: Rng>(
    env: &Environment,
    field_fwd: &LogPartitionField,
    rng: &mut R,
) -> Result<PathSample> {
    if field_fwd.direction != Direction::Forward {
        return Err(Error::InvalidParameter(
            "sample_path needs a forward field".into(),
        ));
    }
    let origin = field_fwd.origin;
    let terminal = (env.m, env.n);
    let mut vertices = Vec::with_capacity(env.m + env.n + 1 - origin.0 - origin.1);
    let mut current = terminal;
    let mut log_weight = env.log_weight(terminal.0, terminal.1);
    vertices.push(current);
    while current != origin {
        let (i, j) = current;
        let left = if i > origin.0 {
            field_fwd.log_z(i - 1, j)
        } else {
            f64::NEG_INFINITY
        };
        let below = if j > origin.1 {
            field_fwd.log_z(i, j - 1)
        } else {
            f64::NEG_INFINITY
        };
        if left == f64::NEG_INFINITY && below == f64::NEG_INFINITY {
            return Err(Error::InvalidParameter(
                "field does not cover the sampling rectangle".into(),
            ));
        }
        let go_left = if left == f64::NEG_INFINITY {
            false
        } else if below == f64::NEG_INFINITY {
            true
        } else {
            // P(left) = Z_left / (Z_left + Z_below), computed stably.
            let p_left = 1.0 / (1.0 + (below - left).exp());
            rng.random::<f64>() < p_left
        };
        current = if go_left { (i - 1, j) } else { (i, j - 1) };
        log_weight += env.log_weight(current.0, current.1);
        vertices.push(current);
    }
    vertices.reverse();
    Ok(PathSample {
        path: LatticePath::new(vertices)?,
        log_weight,
    })
}

/// Enumerate every path of `pair` with its polymer probability
/// (enumeration oracle for sampler tests).
pub fn enumerate_polymer_measure(
    env: &Environment,
    from: Vertex,
    to: Vertex,
) -> Result<Vec<(LatticePath, f64)>> {
    let pair = crate::partition::PointPair::new(from, to, env)?;
    let log_z = crate::partition::brute_force_log_partition(env, pair)?;
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<Vertex>, f64)> = vec![(vec![from], env.log_weight(from.0, from.1))];
    while let Some((prefix, acc)) = stack.pop() {
        let (i, j) = *prefix.last().unwrap();
        if (i, j) == to {
            out.push((LatticePath::new(prefix)?, (acc - log_z).exp()));
            continue;
        }
        if i < to.0 {
            let mut next = prefix.clone();
            next.push((i + 1, j));
            stack.push((next, acc + env.log_weight(i + 1, j)));
        }
        if j < to.1 {
            let mut next = prefix;
            next.push((i, j + 1));
            stack.push((next, acc + env.log_weight(i, j + 1)));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::WeightFamily;
    use crate::partition::log_partition_field;
    use crate::rng::KeyedRng;
    use crate::special::chi_square_test;
    use approx::assert_relative_eq;
    use std::collections::HashMap;

    fn ones(m: usize, n: usize) -> Environment {
        Environment::sample(WeightFamily::Constant { value: 1.0 }, 0.5, m, n, 0, 0).unwrap()
    }

    fn path_key(p: &LatticePath) -> Vec<Vertex> {
        p.vertices().to_vec()
    }

    #[test]
    fn uniform_measure_under_constant_weights() {
        let env = ones(2, 2);
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let mut rng = KeyedRng::from_key(&[101]);
        let draws = 100_000usize;
        let mut counts: HashMap<Vec<Vertex>, u64> = HashMap::new();
        for _ in 0..draws {
            let s = sample_path(&env, &field, &mut rng).unwrap();
            *counts.entry(path_key(&s.path)).or_default() += 1;
        }
        assert_eq!(counts.len(), 6);
        let expect = draws as f64 / 6.0;
        let sd = (draws as f64 * (1.0 / 6.0) * (5.0 / 6.0)).sqrt();
        for (_, c) in counts {
            assert!(
                (c as f64 - expect).abs() < 3.0 * sd,
                "count {c} vs expected {expect}"
            );
        }
    }

    #[test]
    fn heavily_weighted_path_dominates() {
        // Give one specific path's vertices weight 1e6; it must be drawn
        // with frequency > 0.99 (exact Q-probability is ~1 - 6e-6).
        let mut env = ones(2, 2);
        for v in [(0, 0), (0, 1), (1, 1), (2, 1), (2, 2)] {
            env.set_weight(v, 1e6);
        }
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let favored: Vec<Vertex> = vec![(0, 0), (0, 1), (1, 1), (2, 1), (2, 2)];
        let mut rng = KeyedRng::from_key(&[55]);
        let draws = 20_000usize;
        let mut hits = 0;
        for _ in 0..draws {
            let s = sample_path(&env, &field, &mut rng).unwrap();
            if s.path.vertices() == favored.as_slice() {
                hits += 1;
            }
        }
        assert!(hits as f64 / draws as f64 > 0.99);
        // Cross-check the enumerated Q-probability of that path.
        let q = enumerate_polymer_measure(&env, (0, 0), (2, 2))
            .unwrap()
            .into_iter()
            .find(|(p, _)| p.vertices() == favored.as_slice())
            .unwrap()
            .1;
        assert!(q > 0.999);
    }

    #[test]
    fn chi_square_against_enumerated_measure() {
        // Random 3x3 environments; empirical path frequencies follow the
        // enumerated Q. p > 1e-3 must hold in >= 95 of 100 seeds.
        let mut passes = 0;
        for seed in 0..100u64 {
            let env =
                Environment::sample(WeightFamily::LogGamma { theta: 10.0 }, 0.3, 3, 3, seed, 0)
                    .unwrap();
            let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
            let enumerated = enumerate_polymer_measure(&env, (0, 0), (3, 3)).unwrap();
            let mut index: HashMap<Vec<Vertex>, usize> = HashMap::new();
            let mut probs = Vec::new();
            for (k, (p, q)) in enumerated.iter().enumerate() {
                index.insert(path_key(p), k);
                probs.push(*q);
            }
            let mut counts = vec![0u64; probs.len()];
            let mut rng = KeyedRng::from_key(&[seed, 999]);
            for _ in 0..20_000 {
                let s = sample_path(&env, &field, &mut rng).unwrap();
                counts[index[&path_key(&s.path)]] += 1;
            }
            let p = chi_square_test(&counts, &probs).unwrap();
            if p > 1e-3 {
                passes += 1;
            }
        }
        assert!(passes >= 95, "chi-square passes: {passes}/100");
    }

    #[test]
    fn sampler_total_variation_is_small() {
        // <= 10^3 paths; TV between empirical law and enumerated Q < 0.01.
        let env = Environment::sample(
            WeightFamily::TwoPoint {
                v1: 0.6,
                v2: 1.4,
                p: 0.5,
            },
            0.5,
            4,
            4,
            12,
            0,
        )
        .unwrap();
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let enumerated = enumerate_polymer_measure(&env, (0, 0), (4, 4)).unwrap();
        assert_eq!(enumerated.len(), 70);
        let mut index: HashMap<Vec<Vertex>, usize> = HashMap::new();
        for (k, (p, _)) in enumerated.iter().enumerate() {
            index.insert(path_key(p), k);
        }
        let draws = 1_000_000usize;
        let mut counts = vec![0u64; enumerated.len()];
        let mut rng = KeyedRng::from_key(&[7, 7]);
        for _ in 0..draws {
            let s = sample_path(&env, &field, &mut rng).unwrap();
            counts[index[&path_key(&s.path)]] += 1;
        }
        let tv: f64 = enumerated
            .iter()
            .enumerate()
            .map(|(k, (_, q))| (counts[k] as f64 / draws as f64 - q).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.01, "total variation {tv}");
    }

    #[test]
    fn log_weight_is_recomputable() {
        let env =
            Environment::sample(WeightFamily::LogGamma { theta: 9.0 }, 0.3, 5, 4, 3, 0).unwrap();
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let mut rng = KeyedRng::from_key(&[1]);
        for _ in 0..50 {
            let s = sample_path(&env, &field, &mut rng).unwrap();
            let recomputed: f64 = s
                .path
                .vertices()
                .iter()
                .map(|&(i, j)| env.log_weight(i, j))
                .sum();
            assert_relative_eq!(s.log_weight, recomputed, max_relative = 1e-12);
            assert_eq!(s.path.start(), (0, 0));
            assert_eq!(s.path.end(), (5, 4));
        }
    }

    #[test]
    fn conditional_prefix_law_matches_sub_rectangle() {
        // Given pi(r) = u, the prefix is polymer-distributed on the
        // sub-rectangle (0,0) -> u.
        let env = Environment::sample(
            WeightFamily::TwoPoint {
                v1: 0.5,
                v2: 1.5,
                p: 0.4,
            },
            0.5,
            3,
            3,
            4,
            0,
        )
        .unwrap();
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let r = 3usize;
        let u = (2usize, 1usize);
        let prefix_measure = enumerate_polymer_measure(&env, (0, 0), u).unwrap();
        let mut index: HashMap<Vec<Vertex>, usize> = HashMap::new();
        let mut probs = Vec::new();
        for (k, (p, q)) in prefix_measure.iter().enumerate() {
            index.insert(path_key(p), k);
            probs.push(*q);
        }
        let mut counts = vec![0u64; probs.len()];
        let mut rng = KeyedRng::from_key(&[31]);
        let mut kept = 0usize;
        for _ in 0..200_000 {
            let s = sample_path(&env, &field, &mut rng).unwrap();
            if s.path.at(r).unwrap() == u {
                let prefix: Vec<Vertex> = s.path.vertices()[..=r].to_vec();
                counts[index[&prefix]] += 1;
                kept += 1;
            }
        }
        assert!(kept > 5_000, "conditioning event too rare: {kept}");
        let p = chi_square_test(&counts, &probs).unwrap();
        assert!(p > 1e-4, "conditional chi-square p = {p}");
    }

    #[test]
    fn tf_values_on_reference_paths() {
        // All-e2 prefix: TF(r) = r/2.
        let p = LatticePath::new(vec![(0, 0), (0, 1), (0, 2), (0, 3)]).unwrap();
        for r in 0..=3 {
            assert_eq!(transversal_fluctuation(&p, r).unwrap(), r as f64 / 2.0);
        }
        // Alternating path: TF = 0 at even steps.
        let p = LatticePath::new(vec![(0, 0), (0, 1), (1, 1), (1, 2), (2, 2)]).unwrap();
        assert_eq!(transversal_fluctuation(&p, 0).unwrap(), 0.0);
        assert_eq!(transversal_fluctuation(&p, 2).unwrap(), 0.0);
        assert_eq!(transversal_fluctuation(&p, 4).unwrap(), 0.0);
        assert_eq!(transversal_fluctuation(&p, 1).unwrap(), 0.5);
        // Any path to (n, n) ends with TF = 0.
        assert_eq!(transversal_fluctuation(&p, p.len()).unwrap(), 0.0);
        // Out of range r is an error.
        assert!(transversal_fluctuation(&p, 5).is_err());
    }

    #[test]
    fn tf_increments_are_half_steps() {
        let env = ones(6, 6);
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let mut rng = KeyedRng::from_key(&[88]);
        for _ in 0..200 {
            let s = sample_path(&env, &field, &mut rng).unwrap();
            for r in 0..s.path.len() {
                let d = s.path.tf_numerator(r + 1).unwrap() - s.path.tf_numerator(r).unwrap();
                assert!(d == 1 || d == -1);
            }
        }
    }

    #[test]
    fn steepness_matches_two_step_enumeration() {
        // Across a strip of length 2, exactly the two equal-step patterns
        // are steep.
        let strip = StripSpec { a: 0, b: 2 };
        let patterns: [(Vec<Vertex>, bool); 4] = [
            (vec![(0, 0), (1, 0), (2, 0)], true),  // e1 e1
            (vec![(0, 0), (1, 0), (1, 1)], false), // e1 e2
            (vec![(0, 0), (0, 1), (1, 1)], false), // e2 e1
            (vec![(0, 0), (0, 1), (0, 2)], true),  // e2 e2
        ];
        for (verts, expect) in patterns {
            let p = LatticePath::new(verts).unwrap();
            assert_eq!(steep_indicator(&p, strip).unwrap(), expect);
        }
    }

    #[test]
    fn steepness_boundary_is_not_steep() {
        // Slope exactly +1/2 over a strip of length 4: TF moves by 1,
        // i.e. three e2 and one e1.
        let p = LatticePath::new(vec![(0, 0), (0, 1), (0, 2), (1, 2), (1, 3)]).unwrap();
        let strip = StripSpec { a: 0, b: 4 };
        let slope_num = p.tf_numerator(4).unwrap() - p.tf_numerator(0).unwrap();
        assert_eq!(slope_num, 2); // TF gain of exactly (b - a)/4: the boundary case
        assert!(!steep_indicator(&p, strip).unwrap());
        // Constant-TF path across the strip: never steep.
        let p = LatticePath::new(vec![(0, 0), (1, 0), (1, 1), (2, 1), (2, 2)]).unwrap();
        assert!(!steep_indicator(&p, strip).unwrap());
        // All-e2 across the strip: maximal slope 1, steep.
        let p = LatticePath::new(vec![(0, 0), (0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        assert!(steep_indicator(&p, strip).unwrap());
    }

    #[test]
    fn path_validation_rejects_bad_steps() {
        assert!(LatticePath::new(vec![(0, 0), (1, 1)]).is_err());
        assert!(LatticePath::new(vec![(0, 0), (0, 0)]).is_err());
        assert!(LatticePath::new(vec![(2, 0), (1, 0)]).is_err());
        assert!(LatticePath::new(vec![]).is_err());
    }

    #[test]
    fn csv_export_shape() {
        let p = LatticePath::new(vec![(0, 0), (1, 0), (1, 1)]).unwrap();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "step,i,j\n0,0,0\n1,1,0\n2,1,1\n");
    }
}
