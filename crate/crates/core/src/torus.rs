//! Explicit volume-preserving Anosov dynamics on the 2-torus: linear
//! hyperbolic automorphisms, optional area-preserving shear perturbations,
//! and grid-sampled hyperbolicity certificates.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::TrigObservable;

/// Reduce a real number into `[0, 1)`. Exact integers (including 1.0) map to
/// 0.0; the explicit clamp covers the rounding edge where `x - floor(x)`
/// lands on 1.0 for values just below an integer.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// A point of the 2-torus, both coordinates always in `[0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x1: f64,
    pub x2: f64,
}

impl TorusPoint {
    pub fn new(x1: f64, x2: f64) -> Self {
        TorusPoint {
            x1: wrap_unit(x1),
            x2: wrap_unit(x2),
        }
    }

    /// Toroidal distance (minimum-image, Euclidean).
    pub fn distance(&self, other: &TorusPoint) -> f64 {
        let d1 = circle_dist(self.x1, other.x1);
        let d2 = circle_dist(self.x2, other.x2);
        (d1 * d1 + d2 * d2).sqrt()
    }
}

fn circle_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// An exact rational point `(n1/d, n2/d)` of the torus, stored in canonical
/// reduced form: `0 ≤ n1, n2 < d` and `gcd(n1, n2, d) = 1`.
///
/// Rational points are closed under integer matrices (the denominator never
/// grows), which is what makes periodic-orbit verification exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalTorusPoint {
    n1: i64,
    n2: i64,
    d: i64,
}

impl RationalTorusPoint {
    pub fn new(n1: i64, n2: i64, d: i64) -> Self {
        assert!(d > 0, "denominator must be positive");
        let n1 = n1.rem_euclid(d);
        let n2 = n2.rem_euclid(d);
        let g = gcd(gcd(n1, n2), d);
        RationalTorusPoint {
            n1: n1 / g,
            n2: n2 / g,
            d: d / g,
        }
    }

    pub fn origin() -> Self {
        RationalTorusPoint { n1: 0, n2: 0, d: 1 }
    }

    pub fn numerators(&self) -> (i64, i64) {
        (self.n1, self.n2)
    }

    pub fn denominator(&self) -> i64 {
        self.d
    }

    pub fn as_float(&self) -> TorusPoint {
        TorusPoint::new(self.n1 as f64 / self.d as f64, self.n2 as f64 / self.d as f64)
    }
}

impl Ord for RationalTorusPoint {
    /// Lexicographic order on the exact fractions `(n1/d, n2/d)`.
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs1 = self.n1 as i128 * other.d as i128;
        let rhs1 = other.n1 as i128 * self.d as i128;
        lhs1.cmp(&rhs1).then_with(|| {
            let lhs2 = self.n2 as i128 * other.d as i128;
            let rhs2 = other.n2 as i128 * self.d as i128;
            lhs2.cmp(&rhs2)
        })
    }
}

impl PartialOrd for RationalTorusPoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A hyperbolic automorphism of the 2-torus: an integer matrix with
/// determinant +1 (area- and orientation-preserving) and |trace| ≥ 3, so
/// both eigenvalues are real and off the unit circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "[[i64; 2]; 2]", into = "[[i64; 2]; 2]")]
pub struct HyperbolicToralMap {
    m: [[i64; 2]; 2],
}

impl TryFrom<[[i64; 2]; 2]> for HyperbolicToralMap {
    type Error = Error;
    fn try_from(m: [[i64; 2]; 2]) -> Result<Self> {
        HyperbolicToralMap::new(m)
    }
}

impl From<HyperbolicToralMap> for [[i64; 2]; 2] {
    fn from(map: HyperbolicToralMap) -> Self {
        map.m
    }
}

impl HyperbolicToralMap {
    pub fn new(m: [[i64; 2]; 2]) -> Result<Self> {
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if det != 1 {
            return Err(Error::InvalidMap(format!(
                "determinant must be +1, got {det}"
            )));
        }
        let trace = m[0][0] + m[1][1];
        if trace.abs() < 3 {
            return Err(Error::InvalidMap(format!(
                "|trace| must be >= 3 for hyperbolicity, got {trace}"
            )));
        }
        Ok(HyperbolicToralMap { m })
    }

    /// The Arnold cat map `[[2,1],[1,1]]`.
    pub fn cat() -> Self {
        HyperbolicToralMap {
            m: [[2, 1], [1, 1]],
        }
    }

    pub fn entries(&self) -> [[i64; 2]; 2] {
        self.m
    }

    pub fn trace(&self) -> i64 {
        self.m[0][0] + self.m[1][1]
    }

    /// Integer inverse (the adjugate, since the determinant is 1). The
    /// inverse has the same trace, hence is hyperbolic as well.
    pub fn inverse(&self) -> HyperbolicToralMap {
        HyperbolicToralMap {
            m: [
                [self.m[1][1], -self.m[0][1]],
                [-self.m[1][0], self.m[0][0]],
            ],
        }
    }

    /// Entries of the n-th matrix power, exact in i128. Errors on overflow.
    pub fn power_entries(&self, n: u32) -> Result<[[i128; 2]; 2]> {
        let mut acc: [[i128; 2]; 2] = [[1, 0], [0, 1]];
        let m: [[i128; 2]; 2] = [
            [self.m[0][0] as i128, self.m[0][1] as i128],
            [self.m[1][0] as i128, self.m[1][1] as i128],
        ];
        for _ in 0..n {
            acc = mat_mul_checked(acc, m)?;
        }
        Ok(acc)
    }

    pub fn apply(&self, x: TorusPoint) -> TorusPoint {
        let a = self.m;
        TorusPoint::new(
            a[0][0] as f64 * x.x1 + a[0][1] as f64 * x.x2,
            a[1][0] as f64 * x.x1 + a[1][1] as f64 * x.x2,
        )
    }

    /// Exact image of a rational point; the denominator never grows.
    pub fn apply_rational(&self, p: RationalTorusPoint) -> RationalTorusPoint {
        let a = self.m;
        let n1 = (a[0][0] as i128 * p.n1 as i128 + a[0][1] as i128 * p.n2 as i128)
            .rem_euclid(p.d as i128) as i64;
        let n2 = (a[1][0] as i128 * p.n1 as i128 + a[1][1] as i128 * p.n2 as i128)
            .rem_euclid(p.d as i128) as i64;
        RationalTorusPoint::new(n1, n2, p.d)
    }

    /// Dominant (unstable) eigenvalue; its inverse is the stable one.
    pub fn unstable_eigenvalue(&self) -> f64 {
        let t = self.trace() as f64;
        let disc = (t * t - 4.0).sqrt();
        if t >= 0.0 {
            (t + disc) / 2.0
        } else {
            (t - disc) / 2.0
        }
    }

    /// Unit eigenvectors (unstable, stable). `m12 ≠ 0` always holds for
    /// hyperbolic unimodular matrices, so `(m12, λ − m11)` is an eigenvector.
    pub fn eigenbasis(&self) -> ([f64; 2], [f64; 2]) {
        let lu = self.unstable_eigenvalue();
        let ls = 1.0 / lu;
        let eu = normalize([self.m[0][1] as f64, lu - self.m[0][0] as f64]);
        let es = normalize([self.m[0][1] as f64, ls - self.m[0][0] as f64]);
        (eu, es)
    }
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

fn mat_mul_checked(a: [[i128; 2]; 2], b: [[i128; 2]; 2]) -> Result<[[i128; 2]; 2]> {
    let mut out = [[0i128; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let p1 = a[i][0]
                .checked_mul(b[0][j])
                .ok_or_else(overflow)?;
            let p2 = a[i][1]
                .checked_mul(b[1][j])
                .ok_or_else(overflow)?;
            out[i][j] = p1.checked_add(p2).ok_or_else(overflow)?;
        }
    }
    Ok(out)
}

fn overflow() -> Error {
    Error::InvalidParameter("matrix power overflows 128-bit integers".into())
}

/// Certificate that a sampled cone field is invariant and uniformly expanded.
///
/// The unstable cone of half-width `cone_slope` is taken around the base
/// matrix's unstable eigendirection, in eigenbasis coordinates. `verified`
/// is true only if at every one of `grid_resolution²` sample points the
/// differential maps the cone strictly inside itself and stretches every
/// sampled cone direction by at least `expansion_lower_bound`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeCertificate {
    pub cone_slope: f64,
    pub expansion_lower_bound: f64,
    pub grid_resolution: u32,
    pub verified: bool,
    /// Smallest expansion factor seen over all sample points and directions.
    pub worst_expansion: f64,
    /// First sample point at which the criterion failed, if any.
    pub failing_point: Option<TorusPoint>,
}

/// An area-preserving perturbation of a linear hyperbolic map: apply the
/// base matrix, then the shear `(x1, x2) ↦ (x1 + amplitude·g(x2), x2)`.
/// The shear has a triangular Jacobian with unit diagonal, so area is
/// preserved exactly; hyperbolicity is certified numerically, not assumed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearedMap {
    base: HyperbolicToralMap,
    amplitude: f64,
    shear_profile: TrigObservable,
    certificate: Option<ConeCertificate>,
}

impl ShearedMap {
    pub fn new(
        base: HyperbolicToralMap,
        amplitude: f64,
        shear_profile: TrigObservable,
    ) -> Result<Self> {
        if !amplitude.is_finite() {
            return Err(Error::InvalidMap("shear amplitude must be finite".into()));
        }
        if !shear_profile.depends_on_x2_only() {
            return Err(Error::InvalidMap(
                "shear profile must depend on x2 only (all frequencies (0, k2))".into(),
            ));
        }
        Ok(ShearedMap {
            base,
            amplitude,
            shear_profile,
            certificate: None,
        })
    }

    pub fn base(&self) -> &HyperbolicToralMap {
        &self.base
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn certificate(&self) -> Option<&ConeCertificate> {
        self.certificate.as_ref()
    }

    pub fn set_certificate(&mut self, cert: ConeCertificate) {
        self.certificate = Some(cert);
    }

    pub fn apply(&self, x: TorusPoint) -> TorusPoint {
        let y = self.base.apply(x);
        TorusPoint::new(y.x1 + self.amplitude * self.shear_profile.evaluate(y), y.x2)
    }

    pub fn apply_inverse(&self, x: TorusPoint) -> TorusPoint {
        let y = TorusPoint::new(x.x1 - self.amplitude * self.shear_profile.evaluate(x), x.x2);
        self.base.inverse().apply(y)
    }
}

/// Sample the cone criterion on a `resolution × resolution` grid.
///
/// At each sample point x the differential is `S'(Mx)·M` with the shear
/// Jacobian `[[1, a·g'(x2)], [0, 1]]`. Expressed in the eigenbasis of the
/// base matrix, the unstable cone is `{|v_s| ≤ slope·|v_u|}`; invariance is
/// checked on the two edge directions (conic combinations stay inside a
/// convex sector) and the expansion on a fan of sampled directions, in
/// eigenbasis coordinates.
pub fn verify_cone_condition(
    map: &ShearedMap,
    cone_slope: f64,
    expansion: f64,
    resolution: u32,
) -> Result<ConeCertificate> {
    if resolution < 16 {
        return Err(Error::InvalidParameter(
            "cone verification needs resolution >= 16".into(),
        ));
    }
    if cone_slope <= 0.0 || expansion <= 1.0 {
        return Err(Error::InvalidParameter(
            "need cone_slope > 0 and expansion > 1".into(),
        ));
    }

    let (eu, es) = map.base.eigenbasis();
    // P maps eigenbasis coordinates to standard coordinates.
    let p = [[eu[0], es[0]], [eu[1], es[1]]];
    let det_p = p[0][0] * p[1][1] - p[0][1] * p[1][0];
    let p_inv = [
        [p[1][1] / det_p, -p[0][1] / det_p],
        [-p[1][0] / det_p, p[0][0] / det_p],
    ];
    let mf = {
        let a = map.base.entries();
        [
            [a[0][0] as f64, a[0][1] as f64],
            [a[1][0] as f64, a[1][1] as f64],
        ]
    };
    let g_prime = map.shear_profile.partial_derivative(1);

    const DIRECTIONS: usize = 17;
    let mut worst = f64::INFINITY;
    let mut failing: Option<TorusPoint> = None;

    'grid: for i in 0..resolution {
        for j in 0..resolution {
            let x = TorusPoint::new(
                (i as f64 + 0.5) / resolution as f64,
                (j as f64 + 0.5) / resolution as f64,
            );
            let y = map.base.apply(x);
            let shear_entry = map.amplitude * g_prime.evaluate(y);
            let s = [[1.0, shear_entry], [0.0, 1.0]];
            let j_std = mat2_mul(s, mf);
            let j_eig = mat2_mul(mat2_mul(p_inv, j_std), p);

            // Cone invariance on the two edges.
            for &t in &[-cone_slope, cone_slope] {
                let w = mat2_vec(j_eig, [1.0, t]);
                if w[1].abs() >= cone_slope * w[0].abs() {
                    failing = Some(x);
                    break 'grid;
                }
            }
            // Uniform expansion over a fan of cone directions.
            for d in 0..DIRECTIONS {
                let t = cone_slope * (2.0 * d as f64 / (DIRECTIONS - 1) as f64 - 1.0);
                let v = [1.0, t];
                let w = mat2_vec(j_eig, v);
                let stretch = (norm2(w) / norm2(v)).sqrt();
                worst = worst.min(stretch);
                if stretch < expansion {
                    failing = Some(x);
                    break 'grid;
                }
            }
        }
    }

    Ok(ConeCertificate {
        cone_slope,
        expansion_lower_bound: expansion,
        grid_resolution: resolution,
        verified: failing.is_none(),
        worst_expansion: worst,
        failing_point: failing,
    })
}

fn mat2_mul(a: [[f64; 2]; 2], b: [[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

fn mat2_vec(a: [[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [a[0][0] * v[0] + a[0][1] * v[1], a[1][0] * v[0] + a[1][1] * v[1]]
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0] * v[0] + v[1] * v[1]
}

/// Either a linear hyperbolic automorphism or a certified shear perturbation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TorusMap {
    Linear(HyperbolicToralMap),
    Sheared(ShearedMap),
}

impl TorusMap {
    pub fn cat() -> Self {
        TorusMap::Linear(HyperbolicToralMap::cat())
    }

    pub fn apply(&self, x: TorusPoint) -> TorusPoint {
        match self {
            TorusMap::Linear(m) => m.apply(x),
            TorusMap::Sheared(s) => s.apply(x),
        }
    }

    pub fn apply_inverse(&self, x: TorusPoint) -> TorusPoint {
        match self {
            TorusMap::Linear(m) => m.inverse().apply(x),
            TorusMap::Sheared(s) => s.apply_inverse(x),
        }
    }

    /// Orbit segment `[x, Tx, …, Tⁿx]` of length `n + 1`.
    pub fn iterate(&self, x: TorusPoint, n: u64) -> Vec<TorusPoint> {
        let mut orbit = Vec::with_capacity(n as usize + 1);
        orbit.push(x);
        let mut p = x;
        for _ in 0..n {
            p = self.apply(p);
            orbit.push(p);
        }
        orbit
    }

    /// The underlying linear map; exact-arithmetic operations reject shears.
    pub fn linear(&self) -> Result<&HyperbolicToralMap> {
        match self {
            TorusMap::Linear(m) => Ok(m),
            TorusMap::Sheared(_) => Err(Error::ShearNotSupported),
        }
    }

    pub fn apply_rational(&self, p: RationalTorusPoint) -> Result<RationalTorusPoint> {
        Ok(self.linear()?.apply_rational(p))
    }

    pub fn is_sheared(&self) -> bool {
        matches!(self, TorusMap::Sheared(_))
    }

    /// Gate for statistical experiments: sheared maps must carry a verified
    /// cone certificate before they are sampled.
    pub fn require_experiment_ready(&self) -> Result<()> {
        match self {
            TorusMap::Linear(_) => Ok(()),
            TorusMap::Sheared(s) => match s.certificate() {
                Some(c) if c.verified => Ok(()),
                _ => Err(Error::Uncertified),
            },
        }
    }
}

/// Map specification file:
/// `{"matrix": [[2,1],[1,1]], "shear": {"amplitude": 0.1, "profile": {...}}}`.
/// A missing shear block, or amplitude 0, denotes the pure linear map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapSpec {
    pub matrix: [[i64; 2]; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shear: Option<ShearSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShearSpec {
    pub amplitude: f64,
    pub profile: TrigObservable,
}

impl MapSpec {
    pub fn to_map(&self) -> Result<TorusMap> {
        let base = HyperbolicToralMap::new(self.matrix)?;
        match &self.shear {
            Some(s) if s.amplitude != 0.0 => Ok(TorusMap::Sheared(ShearedMap::new(
                base,
                s.amplitude,
                s.profile.clone(),
            )?)),
            _ => Ok(TorusMap::Linear(base)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wrap_reduces_into_unit_interval() {
        assert_eq!(wrap_unit(1.0), 0.0);
        assert_eq!(wrap_unit(0.0), 0.0);
        assert_eq!(wrap_unit(-0.25), 0.75);
        assert_eq!(wrap_unit(2.5), 0.5);
        // Rounding edge: a value just below an integer must not escape [0,1).
        let tricky = -1e-20;
        let w = wrap_unit(tricky);
        assert!((0.0..1.0).contains(&w));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let x = (rng.random::<f64>() - 0.5) * 1e6;
            let w = wrap_unit(x);
            assert!((0.0..1.0).contains(&w), "wrap({x}) = {w}");
        }
    }

    #[test]
    fn rejects_non_unimodular_and_non_hyperbolic_matrices() {
        assert!(HyperbolicToralMap::new([[1, 0], [0, 1]]).is_err()); // trace 2
        assert!(HyperbolicToralMap::new([[2, 1], [1, 1]]).is_ok());
        assert!(HyperbolicToralMap::new([[2, 0], [0, 2]]).is_err()); // det 4
        assert!(HyperbolicToralMap::new([[0, 1], [-1, 0]]).is_err()); // elliptic
        assert!(HyperbolicToralMap::new([[-2, -1], [-1, -1]]).is_ok()); // trace -3
    }

    #[test]
    fn cat_map_fixes_origin() {
        let map = HyperbolicToralMap::cat();
        let o = TorusPoint::new(0.0, 0.0);
        assert_eq!(map.apply(o), o);
    }

    #[test]
    fn cat_map_image_of_half_half() {
        // (2·0.5 + 0.5, 0.5 + 0.5) = (1.5, 1.0) ≡ (0.5, 0.0)
        let map = HyperbolicToralMap::cat();
        let y = map.apply(TorusPoint::new(0.5, 0.5));
        assert!((y.x1 - 0.5).abs() < 1e-12);
        assert!(y.x2.abs() < 1e-12);
    }

    #[test]
    fn apply_then_inverse_is_identity() {
        let map = TorusMap::cat();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let x = TorusPoint::new(rng.random(), rng.random());
            let back = map.apply_inverse(map.apply(x));
            assert!(back.distance(&x) < 1e-12);
        }
    }

    #[test]
    fn apply_rational_example() {
        // (1/5, 3/5) → ((2·1+3)/5, (1+3)/5) = (0/5, 4/5)
        let map = HyperbolicToralMap::cat();
        let p = RationalTorusPoint::new(1, 3, 5);
        let q = map.apply_rational(p);
        assert_eq!(q, RationalTorusPoint::new(0, 4, 5));
    }

    #[test]
    fn origin_is_fixed_with_unit_denominator() {
        let map = HyperbolicToralMap::cat();
        let o = RationalTorusPoint::new(0, 0, 1);
        assert_eq!(map.apply_rational(o), o);
        assert_eq!(o.denominator(), 1);
        // Reduction is canonical regardless of the input denominator.
        assert_eq!(RationalTorusPoint::new(0, 0, 5), o);
    }

    #[test]
    fn rational_points_reduce_canonically() {
        assert_eq!(
            RationalTorusPoint::new(2, 4, 8),
            RationalTorusPoint::new(1, 2, 4)
        );
        assert_eq!(RationalTorusPoint::new(-1, 7, 5), RationalTorusPoint::new(4, 2, 5));
    }

    #[test]
    fn apply_rational_is_a_bijection_on_denominator_lattices() {
        // Exact bijection on the d² lattice points for every d ≤ 64.
        let map = HyperbolicToralMap::cat();
        for d in 1..=64i64 {
            let mut images = std::collections::BTreeSet::new();
            for n1 in 0..d {
                for n2 in 0..d {
                    images.insert(map.apply_rational(RationalTorusPoint::new(n1, n2, d)));
                }
            }
            assert_eq!(images.len(), (d * d) as usize, "not a bijection at d={d}");
        }
    }

    #[test]
    fn cat_map_permutes_denominator_five_points() {
        let map = HyperbolicToralMap::cat();
        let mut set: std::collections::BTreeSet<_> = (0..5)
            .flat_map(|a| (0..5).map(move |b| RationalTorusPoint::new(a, b, 5)))
            .collect();
        for _ in 0..2 {
            set = set.into_iter().map(|p| map.apply_rational(p)).collect();
            assert_eq!(set.len(), 25);
        }
    }

    #[test]
    fn iterate_base_cases() {
        let map = TorusMap::cat();
        let x = TorusPoint::new(0.3, 0.4);
        assert_eq!(map.iterate(x, 0), vec![x]);
        let o = TorusPoint::new(0.0, 0.0);
        let orbit = map.iterate(o, 10);
        assert_eq!(orbit.len(), 11);
        assert!(orbit.iter().all(|p| *p == o));
    }

    #[test]
    fn float_orbit_tracks_exact_rational_orbit() {
        // The unstable eigenvalue amplifies the initial representation
        // error of n/d by λ ≈ 2.618 per step, so the float orbit can track
        // the exact one at 1e-9 only while λⁿ·2⁻⁵³ stays below that:
        // about a dozen steps. Beyond that the honest bound is λⁿ·2⁻⁵³.
        let map = TorusMap::cat();
        let linear = HyperbolicToralMap::cat();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..25 {
            let d = rng.random_range(2..=1000i64);
            let n1 = rng.random_range(0..d);
            let n2 = rng.random_range(0..d);
            let mut exact = RationalTorusPoint::new(n1, n2, d);
            let mut float = exact.as_float();
            for step in 1..=30 {
                exact = linear.apply_rational(exact);
                float = map.apply(float);
                let err = float.distance(&exact.as_float());
                if step <= 12 {
                    assert!(err < 1e-9, "step {step}: divergence {err}");
                }
                assert!(err < 1e-3, "step {step}: divergence {err}");
            }
        }
    }

    #[test]
    fn cone_certificate_for_pure_cat_map() {
        let shear = ShearedMap::new(
            HyperbolicToralMap::cat(),
            0.0,
            TrigObservable::sine((0, 1), 1.0),
        )
        .unwrap();
        let cert = verify_cone_condition(&shear, 0.5, 2.0, 32).unwrap();
        assert!(cert.verified);
        // Worst stretch over the slope-0.5 cone in the orthonormal eigenbasis:
        // sqrt((λu² + 0.25 λs²) / 1.25), λu = (3+√5)/2.
        let lu = (3.0 + 5.0f64.sqrt()) / 2.0;
        let ls = 1.0 / lu;
        let expected = ((lu * lu + 0.25 * ls * ls) / 1.25).sqrt();
        assert!(
            (cert.worst_expansion - expected).abs() < 1e-9,
            "worst expansion {} vs analytic {}",
            cert.worst_expansion,
            expected
        );
    }

    #[test]
    fn cone_fails_when_demanding_too_much_expansion() {
        let shear = ShearedMap::new(
            HyperbolicToralMap::cat(),
            0.0,
            TrigObservable::sine((0, 1), 1.0),
        )
        .unwrap();
        let cert = verify_cone_condition(&shear, 0.5, 3.0, 32).unwrap();
        assert!(!cert.verified);
        assert!(cert.failing_point.is_some());
    }

    #[test]
    fn cone_fails_for_violent_shear() {
        let shear = ShearedMap::new(
            HyperbolicToralMap::cat(),
            10.0,
            TrigObservable::sine((0, 1), 1.0),
        )
        .unwrap();
        let cert = verify_cone_condition(&shear, 0.5, 2.0, 32).unwrap();
        assert!(!cert.verified);
    }

    #[test]
    fn moderate_shear_is_certifiable_and_area_preserving() {
        let mut shear = ShearedMap::new(
            HyperbolicToralMap::cat(),
            0.05,
            TrigObservable::sine((0, 1), 1.0),
        )
        .unwrap();
        let cert = verify_cone_condition(&shear, 0.5, 1.5, 64).unwrap();
        assert!(cert.verified, "worst expansion {}", cert.worst_expansion);
        shear.set_certificate(cert);
        let map = TorusMap::Sheared(shear);
        assert!(map.require_experiment_ready().is_ok());
        push_forward_histogram_is_uniform(&map);
    }

    #[test]
    fn cat_map_push_forward_histogram_is_uniform() {
        push_forward_histogram_is_uniform(&TorusMap::cat());
    }

    /// Volume preservation, quantified: push forward 10⁵ uniform points and
    /// demand every 16×16 histogram cell stays within 4/√(per-cell count)
    /// of the uniform share.
    fn push_forward_histogram_is_uniform(map: &TorusMap) {
        const N: usize = 100_000;
        const GRID: usize = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let mut counts = [0u32; GRID * GRID];
        for _ in 0..N {
            let x = TorusPoint::new(rng.random(), rng.random());
            let y = map.apply(map.apply(x));
            let i = ((y.x1 * GRID as f64) as usize).min(GRID - 1);
            let j = ((y.x2 * GRID as f64) as usize).min(GRID - 1);
            counts[i * GRID + j] += 1;
        }
        let per_cell = N as f64 / (GRID * GRID) as f64;
        let tol = 4.0 / per_cell.sqrt();
        for (idx, &c) in counts.iter().enumerate() {
            let rel = (c as f64 - per_cell).abs() / per_cell;
            assert!(rel <= tol, "cell {idx}: count {c}, rel dev {rel} > {tol}");
        }
    }

    #[test]
    fn uncertified_shear_is_rejected_for_experiments() {
        let shear = ShearedMap::new(
            HyperbolicToralMap::cat(),
            0.05,
            TrigObservable::sine((0, 1), 1.0),
        )
        .unwrap();
        let map = TorusMap::Sheared(shear);
        assert!(matches!(
            map.require_experiment_ready(),
            Err(Error::Uncertified)
        ));
        assert!(matches!(
            map.apply_rational(RationalTorusPoint::origin()),
            Err(Error::ShearNotSupported)
        ));
    }

    #[test]
    fn map_spec_round_trip() {
        let json = r#"{"matrix": [[2,1],[1,1]]}"#;
        let spec: MapSpec = serde_json::from_str(json).unwrap();
        let map = spec.to_map().unwrap();
        assert!(!map.is_sheared());

        let json = r#"{"matrix": [[2,1],[1,1]],
                       "shear": {"amplitude": 0.05,
                                 "profile": {"terms": [{"k": [0,1], "sin": 1.0}]}}}"#;
        let spec: MapSpec = serde_json::from_str(json).unwrap();
        assert!(spec.to_map().unwrap().is_sheared());

        // Amplitude zero denotes the pure linear map.
        let json = r#"{"matrix": [[2,1],[1,1]],
                       "shear": {"amplitude": 0.0,
                                 "profile": {"terms": []}}}"#;
        let spec: MapSpec = serde_json::from_str(json).unwrap();
        assert!(!spec.to_map().unwrap().is_sheared());
    }
}
