//! Point-to-point partition functions.
//!
//! `Z_{u,v}` sums the weight product over all up-right paths from `u` to
//! `v`, with both endpoint weights included. Everything is evaluated in
//! log-domain; the partition function at `n = 2000` spans thousands of
//! orders of magnitude.

use std::io::Write;

use crate::environment::Environment;
use crate::logdomain::{log_sum_exp, log_sum_exp2};
use crate::{Error, Result, Vertex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Field entry at `v` is `log Z_{origin, v}`.
    Forward,
    /// Field entry at `v` is `log Z_{v, origin}` (origin is the terminal).
    Backward,
}

/// All `log Z` values from one DP sweep over the grid.
///
/// Entries outside the reachable quadrant are `-inf`.
#[derive(Debug, Clone)]
pub struct LogPartitionField {
    pub origin: Vertex,
    pub direction: Direction,
    m: usize,
    n: usize,
    data: Vec<f64>,
}

impl LogPartitionField {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        j * (self.m + 1) + i
    }

    /// `log Z` between the origin and `(i, j)`; `-inf` when unreachable.
    #[inline]
    pub fn log_z(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.m, self.n)
    }

    /// Debug dump as `i,j,logZ` CSV rows (no format stability promised).
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "i,j,logZ")?;
        for j in 0..=self.n {
            for i in 0..=self.m {
                let v = self.log_z(i, j);
                if v != f64::NEG_INFINITY {
                    writeln!(w, "{i},{j},{v:.17e}")?;
                }
            }
        }
        Ok(())
    }
}

/// Full-field DP sweep from `origin` in the given direction.
pub fn log_partition_field(
    env: &Environment,
    origin: Vertex,
    direction: Direction,
) -> Result<LogPartitionField> {
    if !env.contains(origin) {
        return Err(Error::VertexOutsideGrid(origin.0, origin.1));
    }
    let (m, n) = (env.m, env.n);
    let mut data = vec![f64::NEG_INFINITY; (m + 1) * (n + 1)];
    let at = |i: usize, j: usize| j * (m + 1) + i;
    match direction {
        Direction::Forward => {
            for j in origin.1..=n {
                for i in origin.0..=m {
                    let from_left = if i > origin.0 {
                        data[at(i - 1, j)]
                    } else {
                        f64::NEG_INFINITY
                    };
                    let from_below = if j > origin.1 {
                        data[at(i, j - 1)]
                    } else {
                        f64::NEG_INFINITY
                    };
                    let incoming = if (i, j) == origin {
                        0.0
                    } else {
                        log_sum_exp2(from_left, from_below)
                    };
                    data[at(i, j)] = env.log_weight(i, j) + incoming;
                }
            }
        }
        Direction::Backward => {
            for j in (0..=origin.1).rev() {
                for i in (0..=origin.0).rev() {
                    let from_right = if i < origin.0 {
                        data[at(i + 1, j)]
                    } else {
                        f64::NEG_INFINITY
                    };
                    let from_above = if j < origin.1 {
                        data[at(i, j + 1)]
                    } else {
                        f64::NEG_INFINITY
                    };
                    let incoming = if (i, j) == origin {
                        0.0
                    } else {
                        log_sum_exp2(from_right, from_above)
                    };
                    data[at(i, j)] = env.log_weight(i, j) + incoming;
                }
            }
        }
    }
    Ok(LogPartitionField {
        origin,
        direction,
        m,
        n,
        data,
    })
}

/// Ordered pair of lattice vertices `u <= v` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PointPair {
    pub u: Vertex,
    pub v: Vertex,
}

impl PointPair {
    pub fn new(u: Vertex, v: Vertex, env: &Environment) -> Result<Self> {
        if !(env.contains(u) && env.contains(v)) {
            let bad = if env.contains(u) { v } else { u };
            return Err(Error::VertexOutsideGrid(bad.0, bad.1));
        }
        if u.0 <= v.0 && u.1 <= v.1 {
            Ok(Self { u, v })
        } else {
            Err(Error::InvalidParameter(format!(
                "point pair requires u <= v componentwise, got {u:?}, {v:?}"
            )))
        }
    }
}

/// `log Z_{u,v}` with both endpoint weights included.
///
/// Served from the cached fields when the pair shares an endpoint with
/// one of them; otherwise a dedicated DP over the sub-rectangle.
pub fn log_partition_between(
    field_fwd: &LogPartitionField,
    field_bwd: &LogPartitionField,
    pair: PointPair,
    env: &Environment,
) -> f64 {
    let PointPair { u, v } = pair;
    if field_fwd.direction == Direction::Forward && field_fwd.origin == u {
        return field_fwd.log_z(v.0, v.1);
    }
    if field_bwd.direction == Direction::Backward && field_bwd.origin == v {
        return field_bwd.log_z(u.0, u.1);
    }
    log_partition_subrect(env, u, v)
}

/// Dedicated rolling-row DP for `log Z_{u,v}`.
pub fn log_partition_subrect(env: &Environment, u: Vertex, v: Vertex) -> f64 {
    debug_assert!(u.0 <= v.0 && u.1 <= v.1);
    let width = v.0 - u.0;
    let mut row = vec![f64::NEG_INFINITY; width + 1];
    for j in u.1..=v.1 {
        for di in 0..=width {
            let i = u.0 + di;
            let from_left = if di > 0 {
                row[di - 1]
            } else {
                f64::NEG_INFINITY
            };
            let from_below = row[di];
            let incoming = if (i, j) == u {
                0.0
            } else if j == u.1 {
                from_left
            } else {
                log_sum_exp2(from_left, from_below)
            };
            row[di] = env.log_weight(i, j) + incoming;
        }
    }
    row[width]
}

/// Exhaustive enumeration oracle for `log Z_{u,v}`.
///
/// Walks every up-right path (at most `guard`, default 10^6), summing
/// `log l(pi)` terms through a compensated log-sum-exp.
pub fn brute_force_log_partition(env: &Environment, pair: PointPair) -> Result<f64> {
    const GUARD: u128 = 1_000_000;
    let PointPair { u, v } = pair;
    let (di, dj) = (v.0 - u.0, v.1 - u.1);
    let count = binomial_u128(di + dj, di);
    if count > GUARD {
        return Err(Error::PathCountExceeded {
            count,
            guard: GUARD,
        });
    }
    let mut log_values = Vec::with_capacity(count as usize);
    // Depth-first over the e1/e2 step choices.
    let mut stack: Vec<(Vertex, f64)> = vec![(u, env.log_weight(u.0, u.1))];
    while let Some(((i, j), acc)) = stack.pop() {
        if (i, j) == v {
            log_values.push(acc);
            continue;
        }
        if i < v.0 {
            stack.push(((i + 1, j), acc + env.log_weight(i + 1, j)));
        }
        if j < v.1 {
            stack.push(((i, j + 1), acc + env.log_weight(i, j + 1)));
        }
    }
    debug_assert_eq!(log_values.len() as u128, count);
    Ok(log_sum_exp(&log_values))
}

fn binomial_u128(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Free energy `log Z_{(0,0),(m,n)}` via a rolling-row sweep.
pub fn free_energy(env: &Environment) -> f64 {
    log_partition_subrect(env, (0, 0), (env.m, env.n))
}

/// Free energy of a freshly keyed environment without materializing it.
///
/// Weights are produced vertex-by-vertex from the same counter-based
/// generator as [`Environment::sample`], so this agrees bit-for-bit with
/// `free_energy(&Environment::sample(..))` while using O(n) memory.
pub fn streaming_free_energy(
    family: &crate::environment::WeightFamily,
    beta: f64,
    m: usize,
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<f64> {
    family.validate(beta)?;
    let mut row = vec![f64::NEG_INFINITY; m + 1];
    for j in 0..=n {
        for i in 0..=m {
            let (_, logw) = crate::environment::vertex_weight(family, beta, seed, stream, i, j);
            let from_left = if i > 0 { row[i - 1] } else { f64::NEG_INFINITY };
            let from_below = row[i];
            let incoming = if (i, j) == (0, 0) {
                0.0
            } else if j == 0 {
                from_left
            } else {
                log_sum_exp2(from_left, from_below)
            };
            row[i] = logw + incoming;
        }
    }
    Ok(row[m])
}

/// Cut-line decomposition: `log Z_{(0,0),(m,n)}` recomposed through the
/// anti-diagonal `L_r`, subtracting each crossing vertex's double-counted
/// weight.
pub fn log_partition_via_cut(
    field_fwd: &LogPartitionField,
    field_bwd: &LogPartitionField,
    env: &Environment,
    r: usize,
) -> f64 {
    let terms: Vec<f64> = line_vertices(env, r)
        .map(|(i, j)| field_fwd.log_z(i, j) + field_bwd.log_z(i, j) - env.log_weight(i, j))
        .collect();
    log_sum_exp(&terms)
}

/// Vertices of the grid on the line `i + j = r`.
pub fn line_vertices(env: &Environment, r: usize) -> impl Iterator<Item = Vertex> + '_ {
    let m = env.m;
    let n = env.n;
    let lo = r.saturating_sub(n);
    let hi = r.min(m);
    (lo..=hi).filter_map(move |i| {
        let j = r.checked_sub(i)?;
        (j <= n).then_some((i, j))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{Environment, WeightFamily, XiDistribution};
    use approx::assert_relative_eq;

    fn ones(m: usize, n: usize) -> Environment {
        Environment::sample(WeightFamily::Constant { value: 1.0 }, 0.5, m, n, 0, 0).unwrap()
    }

    fn random_env(m: usize, n: usize, seed: u64) -> Environment {
        Environment::sample(
            WeightFamily::TwoPoint {
                v1: 0.5,
                v2: 1.5,
                p: 0.5,
            },
            0.5,
            m,
            n,
            seed,
            0,
        )
        .unwrap()
    }

    #[test]
    fn all_ones_counts_paths() {
        let env = ones(2, 2);
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        assert_relative_eq!(field.log_z(2, 2), 6.0f64.ln(), max_relative = 1e-14);
        // Binomial counting on a wider grid.
        let env = ones(5, 3);
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        assert_relative_eq!(field.log_z(5, 3), 56.0f64.ln(), max_relative = 1e-13);
    }

    #[test]
    fn single_row_is_a_product() {
        let env =
            Environment::sample(WeightFamily::LogGamma { theta: 8.0 }, 0.4, 6, 0, 3, 1).unwrap();
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let sum: f64 = (0..=6).map(|i| env.log_weight(i, 0)).sum();
        assert_relative_eq!(field.log_z(6, 0), sum, max_relative = 1e-14);
    }

    #[test]
    fn recursion_consistency_holds_pointwise() {
        let env = random_env(4, 5, 9);
        let f = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        assert_relative_eq!(f.log_z(0, 0), env.log_weight(0, 0), max_relative = 1e-15);
        for j in 0..=5usize {
            for i in 0..=4usize {
                if (i, j) == (0, 0) {
                    continue;
                }
                let left = if i > 0 {
                    f.log_z(i - 1, j)
                } else {
                    f64::NEG_INFINITY
                };
                let below = if j > 0 {
                    f.log_z(i, j - 1)
                } else {
                    f64::NEG_INFINITY
                };
                let expect = env.log_weight(i, j) + log_sum_exp2(left, below);
                assert_relative_eq!(f.log_z(i, j), expect, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn dp_matches_enumeration_oracle() {
        // The module's core oracle test: exhaustive path enumeration on
        // random environments.
        for seed in 0..100 {
            let env = random_env(5, 5, seed);
            let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
            let pair = PointPair::new((0, 0), (5, 5), &env).unwrap();
            let exact = brute_force_log_partition(&env, pair).unwrap();
            let dp = field.log_z(5, 5);
            assert!(
                (dp - exact).abs() <= 1e-10 * exact.abs().max(1.0),
                "seed {seed}: dp {dp} vs enumeration {exact}"
            );
        }
    }

    #[test]
    fn three_by_three_against_enumeration() {
        let env = random_env(3, 3, 1234);
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let pair = PointPair::new((0, 0), (3, 3), &env).unwrap();
        let exact = brute_force_log_partition(&env, pair).unwrap();
        assert!((field.log_z(3, 3) - exact).abs() <= 1e-10 * exact.abs().max(1.0));
    }

    #[test]
    fn brute_force_trivial_values() {
        let env = ones(4, 4);
        let pair = PointPair::new((0, 0), (4, 4), &env).unwrap();
        assert_relative_eq!(
            brute_force_log_partition(&env, pair).unwrap(),
            70.0f64.ln(),
            max_relative = 1e-13
        );
        let env2 =
            Environment::sample(WeightFamily::Constant { value: 2.0 }, 0.5, 1, 1, 0, 0).unwrap();
        let pair2 = PointPair::new((0, 0), (1, 1), &env2).unwrap();
        // Two paths of three vertices each: 2 * 2^3 = 16.
        assert_relative_eq!(
            brute_force_log_partition(&env2, pair2).unwrap(),
            16.0f64.ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn enumeration_guard_trips() {
        let env = ones(30, 30);
        let pair = PointPair::new((0, 0), (30, 30), &env).unwrap();
        assert!(matches!(
            brute_force_log_partition(&env, pair),
            Err(Error::PathCountExceeded { .. })
        ));
    }

    #[test]
    fn between_handles_all_endpoint_combinations() {
        let env = random_env(6, 6, 77);
        let fwd = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let bwd = log_partition_field(&env, (6, 6), Direction::Backward).unwrap();

        // u = v: a single vertex path.
        let p = PointPair::new((3, 2), (3, 2), &env).unwrap();
        assert_relative_eq!(
            log_partition_between(&fwd, &bwd, p, &env),
            env.log_weight(3, 2),
            max_relative = 1e-14
        );

        // Interior pair against enumeration.
        let p = PointPair::new((1, 2), (5, 4), &env).unwrap();
        let exact = brute_force_log_partition(&env, p).unwrap();
        assert_relative_eq!(
            log_partition_between(&fwd, &bwd, p, &env),
            exact,
            max_relative = 1e-12
        );

        // Shared endpoints use the cached fields.
        let p = PointPair::new((0, 0), (4, 5), &env).unwrap();
        assert_relative_eq!(
            log_partition_between(&fwd, &bwd, p, &env),
            fwd.log_z(4, 5),
            max_relative = 1e-15
        );
        let p = PointPair::new((2, 3), (6, 6), &env).unwrap();
        assert_relative_eq!(
            log_partition_between(&fwd, &bwd, p, &env),
            bwd.log_z(2, 3),
            max_relative = 1e-15
        );

        // All-ones two-path sanity.
        let env1 = ones(1, 1);
        let f1 = log_partition_field(&env1, (0, 0), Direction::Forward).unwrap();
        let b1 = log_partition_field(&env1, (1, 1), Direction::Backward).unwrap();
        let p = PointPair::new((0, 0), (1, 1), &env1).unwrap();
        assert_relative_eq!(
            log_partition_between(&f1, &b1, p, &env1),
            2.0f64.ln(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn cut_line_identity_along_every_line() {
        for seed in [3u64, 14, 159] {
            let env = random_env(6, 6, seed);
            let fwd = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
            let bwd = log_partition_field(&env, (6, 6), Direction::Backward).unwrap();
            let total = fwd.log_z(6, 6);
            for r in 0..=env.time_extent() {
                let via_cut = log_partition_via_cut(&fwd, &bwd, &env, r);
                assert_relative_eq!(via_cut, total, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn transposition_symmetry() {
        let env = random_env(5, 5, 21);
        // Build the transposed environment explicitly.
        let mut t = env.clone();
        for j in 0..=5usize {
            for i in 0..=5usize {
                t.set_weight((i, j), env.weight(j, i));
            }
        }
        let a = free_energy(&env);
        let b = free_energy(&t);
        assert_relative_eq!(a, b, max_relative = 1e-13);
    }

    #[test]
    fn free_energy_monotone_in_single_weight() {
        let env = random_env(4, 4, 5);
        let base = free_energy(&env);
        let mut bumped = env.clone();
        bumped.set_weight((2, 3), env.weight(2, 3) * 1.5);
        assert!(free_energy(&bumped) > base);
    }

    #[test]
    fn streaming_matches_materialized() {
        let family = WeightFamily::ExpTilt {
            xi: XiDistribution::standard_gaussian(),
        };
        let env = Environment::sample(family.clone(), 0.2, 12, 9, 17, 4).unwrap();
        let a = free_energy(&env);
        let b = streaming_free_energy(&family, 0.2, 12, 9, 17, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn path_weight_bound_on_ws_event() {
        // On environments passing W_s, every path log-weight obeys the
        // global bound 2 M (m + n) beta^s.
        let (s, m_const) = (0.5, 2.0);
        let env =
            Environment::sample(WeightFamily::LogGamma { theta: 60.0 }, 0.15, 4, 4, 8, 0).unwrap();
        assert!(env.check_event_ws(s, m_const), "pick a tamer seed");
        let bound = 2.0 * m_const * (env.m + env.n) as f64 * env.beta.powf(s);
        // Enumerate all path log-weights directly.
        let pair = PointPair::new((0, 0), (4, 4), &env).unwrap();
        let mut stack: Vec<(Vertex, f64)> = vec![((0, 0), env.log_weight(0, 0))];
        while let Some(((i, j), acc)) = stack.pop() {
            if (i, j) == (4, 4) {
                assert!(acc.abs() <= bound, "path log-weight {acc} exceeds {bound}");
                continue;
            }
            if i < pair.v.0 {
                stack.push(((i + 1, j), acc + env.log_weight(i + 1, j)));
            }
            if j < pair.v.1 {
                stack.push(((i, j + 1), acc + env.log_weight(i, j + 1)));
            }
        }
    }

    #[test]
    fn csv_dump_is_parseable() {
        let env = ones(2, 1);
        let field = log_partition_field(&env, (0, 0), Direction::Forward).unwrap();
        let mut buf = Vec::new();
        field.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("i,j,logZ\n"));
        assert_eq!(text.lines().count(), 1 + 6);
    }

    #[test]
    fn origin_outside_grid_is_an_error() {
        let env = ones(2, 2);
        assert!(log_partition_field(&env, (3, 0), Direction::Forward).is_err());
    }
}
