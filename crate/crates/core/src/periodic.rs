//! Exact enumeration of periodic points and orbits of hyperbolic toral
//! automorphisms, and the obstruction sums of observables over them.
//!
//! Fixed points of Tⁿ are the torus points x with (Mⁿ − I)x ∈ ℤ². The
//! lattice solve uses exact integer arithmetic through a 2×2 Smith normal
//! form; floating enumeration is forbidden because Mⁿ − I is violently
//! ill-conditioned along the stable direction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::TrigObservable;
use crate::torus::{HyperbolicToralMap, RationalTorusPoint};

/// Default cap on |det(Mⁿ − I)| for a single enumeration call.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Obstruction sums below this are treated as zero (machine epsilon times a
/// generous orbit-length and safety margin).
pub const OBSTRUCTION_ZERO_TOLERANCE: f64 = 1e-10;

/// A periodic orbit in canonical form: the representative is the
/// lexicographically smallest point, `points` follows the map from it, and
/// `period` is minimal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicOrbit {
    pub representative: RationalTorusPoint,
    pub period: u32,
    pub points: Vec<RationalTorusPoint>,
}

impl PeriodicOrbit {
    /// The orbit of a single point under a linear map. Walks until first
    /// return; panics if the point is not periodic within `limit` steps.
    pub fn from_point(map: &HyperbolicToralMap, start: RationalTorusPoint, limit: u32) -> Self {
        let mut cycle = vec![start];
        let mut p = map.apply_rational(start);
        while p != start {
            assert!(
                cycle.len() <= limit as usize,
                "point did not return within {limit} steps"
            );
            cycle.push(p);
            p = map.apply_rational(p);
        }
        let min_idx = cycle
            .iter()
            .enumerate()
            .min_by_key(|(_, q)| **q)
            .map(|(i, _)| i)
            .unwrap();
        cycle.rotate_left(min_idx);
        PeriodicOrbit {
            representative: cycle[0],
            period: cycle.len() as u32,
            points: cycle,
        }
    }
}

/// Exact number of fixed points of Tⁿ: |det(Mⁿ − I)| = |2 − trace(Mⁿ)|
/// for determinant-one matrices.
pub fn count_period_n_points(map: &HyperbolicToralMap, n: u32) -> Result<u128> {
    assert!(n >= 1, "period must be positive");
    let p = map.power_entries(n)?;
    let a = sub_identity(p);
    Ok(det2(a).unsigned_abs())
}

fn sub_identity(p: [[i128; 2]; 2]) -> [[i128; 2]; 2] {
    [[p[0][0] - 1, p[0][1]], [p[1][0], p[1][1] - 1]]
}

fn det2(a: [[i128; 2]; 2]) -> i128 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// All fixed points of Tⁿ, exactly.
///
/// Solves (Mⁿ − I)x ≡ 0 (mod ℤ²) through the Smith normal form
/// A = U·diag(s1,s2)·V: the solutions are x = V⁻¹(i/s1, j/s2) mod 1. Every
/// returned point is round-trip verified with exact rational arithmetic.
pub fn enumerate_periodic_points(
    map: &HyperbolicToralMap,
    n: u32,
    cap: u128,
) -> Result<Vec<RationalTorusPoint>> {
    let expected = count_period_n_points(map, n)?;
    if expected > cap {
        return Err(Error::EnumerationCapExceeded {
            required: expected,
            cap,
        });
    }
    let a = sub_identity(map.power_entries(n)?);
    let snf = smith_normal_form(a);
    let (s1, s2) = (snf.s1, snf.s2);
    debug_assert_eq!((s1 * s2) as u128, expected);

    let stride = s2 / s1;
    let w = snf.v_inv;
    let mut points = Vec::with_capacity(expected as usize);
    for i in 0..s1 {
        for j in 0..s2 {
            // y = (i/s1, j/s2) over the common denominator s2.
            let y1 = i * stride;
            let y2 = j;
            let n1 = (w[0][0] * y1 + w[0][1] * y2).rem_euclid(s2);
            let n2 = (w[1][0] * y1 + w[1][1] * y2).rem_euclid(s2);
            points.push(RationalTorusPoint::new(n1 as i64, n2 as i64, s2 as i64));
        }
    }
    points.sort();
    points.dedup();
    assert_eq!(
        points.len() as u128,
        expected,
        "lattice solve produced a wrong solution count"
    );
    for &p in &points {
        let mut q = p;
        for _ in 0..n {
            q = map.apply_rational(q);
        }
        assert_eq!(q, p, "enumerated point failed exact round-trip");
    }
    Ok(points)
}

struct Snf {
    s1: i128,
    s2: i128,
    /// V⁻¹, accumulated from the column operations.
    v_inv: [[i128; 2]; 2],
}

/// Smith normal form of a nonsingular 2×2 integer matrix: row/column
/// operations until diagonal with s1 | s2, both positive. Row operations
/// need no tracking; column operations accumulate into V⁻¹.
fn smith_normal_form(mut s: [[i128; 2]; 2]) -> Snf {
    assert!(det2(s) != 0, "matrix must be nonsingular");
    let mut w: [[i128; 2]; 2] = [[1, 0], [0, 1]];

    let swap_cols = |s: &mut [[i128; 2]; 2], w: &mut [[i128; 2]; 2]| {
        for r in 0..2 {
            s[r].swap(0, 1);
            w[r].swap(0, 1);
        }
    };
    // col1 -= q * col0
    let col_op = |s: &mut [[i128; 2]; 2], w: &mut [[i128; 2]; 2], q: i128| {
        for r in 0..2 {
            s[r][1] -= q * s[r][0];
            w[r][1] -= q * w[r][0];
        }
    };

    loop {
        // Bring a minimal-absolute-value nonzero entry to (0,0).
        let (mut bi, mut bj, mut best) = (0usize, 0usize, i128::MAX);
        for i in 0..2 {
            for j in 0..2 {
                let v = s[i][j].abs();
                if v != 0 && v < best {
                    best = v;
                    bi = i;
                    bj = j;
                }
            }
        }
        if bi == 1 {
            s.swap(0, 1);
        }
        if bj == 1 {
            swap_cols(&mut s, &mut w);
        }
        // Reduce the off-diagonal entries of row 0 and column 0.
        if s[0][1] != 0 {
            let q = s[0][1].div_euclid(s[0][0]);
            col_op(&mut s, &mut w, q);
            if s[0][1] != 0 {
                continue;
            }
        }
        if s[1][0] != 0 {
            let q = s[1][0].div_euclid(s[0][0]);
            for j in 0..2 {
                s[1][j] -= q * s[0][j];
            }
            if s[1][0] != 0 {
                continue;
            }
        }
        // Diagonal; enforce the divisibility s1 | s2.
        if s[1][1] % s[0][0] != 0 {
            // Fold column 1 into column 0 and keep reducing.
            for r in 0..2 {
                s[r][0] += s[r][1];
                w[r][0] += w[r][1];
            }
            continue;
        }
        break;
    }

    // Make the diagonal positive; negating a column of S negates the same
    // column of V⁻¹.
    for c in 0..2 {
        if s[c][c] < 0 {
            for r in 0..2 {
                s[r][c] = -s[r][c];
                w[r][c] = -w[r][c];
            }
        }
    }
    Snf {
        s1: s[0][0],
        s2: s[1][1],
        v_inv: w,
    }
}

/// Partition fixed points of Tⁿ into canonical orbits with minimal periods.
/// The sum of the periods equals the number of input points.
pub fn group_into_orbits(
    points: &[RationalTorusPoint],
    map: &HyperbolicToralMap,
) -> Vec<PeriodicOrbit> {
    let mut remaining: std::collections::BTreeSet<RationalTorusPoint> =
        points.iter().copied().collect();
    let limit = points.len().max(1) as u32;
    let mut orbits = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let orbit = PeriodicOrbit::from_point(map, start, limit);
        for p in &orbit.points {
            remaining.remove(p);
        }
        orbits.push(orbit);
    }
    orbits.sort_by(|a, b| (a.period, a.representative).cmp(&(b.period, b.representative)));
    orbits
}

/// All orbits with minimal period ≤ `n_max`, each listed once.
pub fn orbits_up_to(
    map: &HyperbolicToralMap,
    n_max: u32,
    cap: u128,
) -> Result<Vec<PeriodicOrbit>> {
    let mut orbits = Vec::new();
    for n in 1..=n_max {
        let points = enumerate_periodic_points(map, n, cap)?;
        orbits.extend(
            group_into_orbits(&points, map)
                .into_iter()
                .filter(|o| o.period == n),
        );
    }
    Ok(orbits)
}

/// The obstruction sum `Σ_{x ∈ O} φ(x)` over one periodic orbit, evaluated
/// at exact rational coordinates in floating point.
pub fn orbit_obstruction(phi: &TrigObservable, orbit: &PeriodicOrbit) -> f64 {
    orbit
        .points
        .iter()
        .map(|p| phi.evaluate(p.as_float()))
        .sum()
}

/// Scan all orbits of minimal period ≤ `n_max` for the largest |obstruction|.
/// Returns `None` when every obstruction vanishes within `tolerance`.
pub fn max_obstruction_up_to(
    phi: &TrigObservable,
    map: &HyperbolicToralMap,
    n_max: u32,
    cap: u128,
    tolerance: f64,
) -> Result<Option<(PeriodicOrbit, f64)>> {
    let mut best: Option<(PeriodicOrbit, f64)> = None;
    for orbit in orbits_up_to(map, n_max, cap)? {
        let value = orbit_obstruction(phi, &orbit);
        if best
            .as_ref()
            .map(|(_, b)| value.abs() > b.abs())
            .unwrap_or(true)
        {
            best = Some((orbit, value));
        }
    }
    Ok(best.filter(|(_, v)| v.abs() > tolerance))
}
