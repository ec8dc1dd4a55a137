//! Observables as finite trigonometric polynomials with exact coefficient
//! algebra: means, Lipschitz norms, derivatives and coboundaries are all
//! computed symbolically, so tests can pin them without estimation.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{HyperbolicToralMap, TorusMap, TorusPoint};

/// One frequency of a trigonometric polynomial:
/// `cos_coeff * cos(2π k·x) + sin_coeff * sin(2π k·x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub k: (i64, i64),
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

/// A real trigonometric polynomial on the 2-torus.
///
/// Terms are kept in a canonical form: frequencies live in the half-lattice
/// `k = (0,0)`, `k1 > 0`, or `k1 = 0, k2 > 0` (a term at `-k` folds into `k`
/// since cosine is even and sine is odd), they are sorted, and zero terms are
/// pruned. The constant term carries no sine part. Canonical form makes
/// equality, serialization and evaluation order deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "ObservableSpec", try_from = "ObservableSpec")]
pub struct TrigObservable {
    terms: Vec<Term>,
}

/// Wire format: `{"terms": [{"k": [1,0], "cos": 1.0, "sin": 0.0}, ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservableSpec {
    pub terms: Vec<TermSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermSpec {
    pub k: [i64; 2],
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl From<TrigObservable> for ObservableSpec {
    fn from(o: TrigObservable) -> Self {
        ObservableSpec {
            terms: o
                .terms
                .iter()
                .map(|t| TermSpec {
                    k: [t.k.0, t.k.1],
                    cos: t.cos_coeff,
                    sin: t.sin_coeff,
                })
                .collect(),
        }
    }
}

impl TryFrom<ObservableSpec> for TrigObservable {
    type Error = Error;

    fn try_from(spec: ObservableSpec) -> Result<Self> {
        for t in &spec.terms {
            if !t.cos.is_finite() || !t.sin.is_finite() {
                return Err(Error::InvalidObservable(
                    "coefficients must be finite".into(),
                ));
            }
        }
        Ok(TrigObservable::from_terms(
            spec.terms.iter().map(|t| ((t.k[0], t.k[1]), t.cos, t.sin)),
        ))
    }
}

impl TrigObservable {
    /// The zero observable.
    pub fn zero() -> Self {
        TrigObservable { terms: Vec::new() }
    }

    /// The constant observable `c`.
    pub fn constant(c: f64) -> Self {
        Self::from_terms([((0, 0), c, 0.0)])
    }

    /// `coeff * cos(2π k·x)`.
    pub fn cosine(k: (i64, i64), coeff: f64) -> Self {
        Self::from_terms([(k, coeff, 0.0)])
    }

    /// `coeff * sin(2π k·x)`.
    pub fn sine(k: (i64, i64), coeff: f64) -> Self {
        Self::from_terms([(k, 0.0, coeff)])
    }

    /// Build from raw `(k, cos, sin)` triples, folding into canonical form.
    pub fn from_terms<I: IntoIterator<Item = ((i64, i64), f64, f64)>>(iter: I) -> Self {
        let mut acc: BTreeMap<(i64, i64), (f64, f64)> = BTreeMap::new();
        for (k, a, b) in iter {
            let (k, a, b) = if k == (0, 0) {
                // sin(0) = 0: the sine part of the constant term is dropped.
                (k, a, 0.0)
            } else if k.0 < 0 || (k.0 == 0 && k.1 < 0) {
                ((-k.0, -k.1), a, -b)
            } else {
                (k, a, b)
            };
            let e = acc.entry(k).or_insert((0.0, 0.0));
            e.0 += a;
            e.1 += b;
        }
        let terms = acc
            .into_iter()
            .filter(|(_, (a, b))| *a != 0.0 || *b != 0.0)
            .map(|(k, (a, b))| Term {
                k,
                cos_coeff: a,
                sin_coeff: b,
            })
            .collect();
        TrigObservable { terms }
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Evaluate at a torus point. Deterministic: terms are summed in
    /// canonical (sorted) frequency order.
    #[inline]
    pub fn evaluate(&self, x: TorusPoint) -> f64 {
        let mut sum = 0.0;
        for t in &self.terms {
            let angle = TAU * (t.k.0 as f64 * x.x1 + t.k.1 as f64 * x.x2);
            let (s, c) = angle.sin_cos();
            sum += t.cos_coeff * c + t.sin_coeff * s;
        }
        sum
    }

    /// Exact mean with respect to Lebesgue measure: the constant cosine
    /// coefficient (all other frequencies integrate to zero).
    pub fn mean(&self) -> f64 {
        self.terms
            .iter()
            .find(|t| t.k == (0, 0))
            .map(|t| t.cos_coeff)
            .unwrap_or(0.0)
    }

    /// Drop the constant term so the result has mean exactly zero.
    pub fn normalize_zero_mean(&self) -> TrigObservable {
        TrigObservable {
            terms: self
                .terms
                .iter()
                .filter(|t| t.k != (0, 0))
                .copied()
                .collect(),
        }
    }

    /// Upper bound for the Lipschitz-plus-sup norm, exact from coefficients:
    /// `Σ_k (|a_k| + |b_k|) (1 + 2π |k|₂)`.
    pub fn lipschitz_norm(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let kn = ((t.k.0 as f64).powi(2) + (t.k.1 as f64).powi(2)).sqrt();
                (t.cos_coeff.abs() + t.sin_coeff.abs()) * (1.0 + TAU * kn)
            })
            .sum()
    }

    /// Coefficient bound for the sup norm: `Σ_k (|a_k| + |b_k|)`.
    pub fn sup_norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.cos_coeff.abs() + t.sin_coeff.abs())
            .sum()
    }

    /// Exact partial derivative along coordinate `axis` (0 or 1).
    pub fn partial_derivative(&self, axis: usize) -> TrigObservable {
        assert!(axis < 2, "axis must be 0 or 1");
        Self::from_terms(self.terms.iter().map(|t| {
            let kj = if axis == 0 { t.k.0 } else { t.k.1 } as f64;
            // d/dx [a cos + b sin] = 2πk_j (b cos - a sin)
            (t.k, TAU * kj * t.sin_coeff, -TAU * kj * t.cos_coeff)
        }))
    }

    /// Exact composition with a linear toral map: frequency `k` becomes
    /// `Mᵀ k`, coefficients are carried over.
    pub fn compose_linear(&self, map: &HyperbolicToralMap) -> TrigObservable {
        let [[m11, m12], [m21, m22]] = map.entries();
        Self::from_terms(self.terms.iter().map(|t| {
            let k = (m11 * t.k.0 + m21 * t.k.1, m12 * t.k.0 + m22 * t.k.1);
            (k, t.cos_coeff, t.sin_coeff)
        }))
    }

    /// Scale all coefficients by `s`.
    pub fn scaled(&self, s: f64) -> TrigObservable {
        Self::from_terms(
            self.terms
                .iter()
                .map(|t| (t.k, s * t.cos_coeff, s * t.sin_coeff)),
        )
    }

    /// True if every frequency is of the form `(0, k2)`, i.e. the observable
    /// depends on the second coordinate only.
    pub fn depends_on_x2_only(&self) -> bool {
        self.terms.iter().all(|t| t.k.0 == 0)
    }
}

impl Add for &TrigObservable {
    type Output = TrigObservable;
    fn add(self, rhs: &TrigObservable) -> TrigObservable {
        TrigObservable::from_terms(
            self.terms
                .iter()
                .chain(rhs.terms.iter())
                .map(|t| (t.k, t.cos_coeff, t.sin_coeff)),
        )
    }
}

impl Sub for &TrigObservable {
    type Output = TrigObservable;
    fn sub(self, rhs: &TrigObservable) -> TrigObservable {
        self + &rhs.scaled(-1.0)
    }
}

impl Neg for &TrigObservable {
    type Output = TrigObservable;
    fn neg(self) -> TrigObservable {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for &TrigObservable {
    type Output = TrigObservable;
    fn mul(self, s: f64) -> TrigObservable {
        self.scaled(s)
    }
}

/// A cocycle increment: the value of an orbit sum together with the number
/// of steps it spans. Additive under concatenation along the same orbit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CocycleValue {
    pub value: f64,
    pub steps: u64,
}

/// Birkhoff sum `Σ_{i=0}^{n-1} φ(Tⁱ x)`. Zero for `n = 0`.
///
/// Accumulation is strictly left to right; every other routine in the crate
/// that needs partial sums reproduces exactly this operation order, so equal
/// inputs give bit-identical floats everywhere.
pub fn birkhoff_sum(phi: &TrigObservable, map: &TorusMap, x: TorusPoint, n: u64) -> f64 {
    let mut acc = 0.0;
    let mut p = x;
    for _ in 0..n {
        acc += phi.evaluate(p);
        p = map.apply(p);
    }
    acc
}

/// Birkhoff sum packaged as a cocycle value.
pub fn birkhoff_cocycle(
    phi: &TrigObservable,
    map: &TorusMap,
    x: TorusPoint,
    n: u64,
) -> CocycleValue {
    CocycleValue {
        value: birkhoff_sum(phi, map, x, n),
        steps: n,
    }
}

/// The coboundary `ψ∘T − ψ` of a generator `ψ`, computed symbolically.
///
/// Only defined over linear maps: composing with a shear leaves the class of
/// trigonometric polynomials. The result has mean exactly zero and its
/// frequencies are `{Mᵀ k} ∪ {k}`.
pub fn coboundary_from(psi: &TrigObservable, map: &TorusMap) -> Result<TrigObservable> {
    let linear = map.linear()?;
    Ok(&psi.compose_linear(linear) - psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::HyperbolicToralMap;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cat() -> TorusMap {
        TorusMap::Linear(HyperbolicToralMap::new([[2, 1], [1, 1]]).unwrap())
    }

    fn random_point(rng: &mut ChaCha8Rng) -> TorusPoint {
        TorusPoint::new(rng.random::<f64>(), rng.random::<f64>())
    }

    #[test]
    fn constant_evaluates_to_itself() {
        let c = TrigObservable::constant(3.25);
        assert_eq!(c.evaluate(TorusPoint::new(0.7, 0.1)), 3.25);
        assert_eq!(c.mean(), 3.25);
    }

    #[test]
    fn cosine_quarter_period_is_zero() {
        let phi = TrigObservable::cosine((1, 0), 1.0);
        let v = phi.evaluate(TorusPoint::new(0.25, 0.9));
        assert!(v.abs() < 1e-15, "cos(π/2) should vanish, got {v}");
    }

    #[test]
    fn evaluation_matches_shuffled_term_order_oracle() {
        // Independent oracle: sum the same terms in a different order.
        let phi = TrigObservable::from_terms([
            ((1, 0), 0.3, -0.2),
            ((0, 1), -1.1, 0.4),
            ((2, 3), 0.05, 0.7),
            ((1, -2), 0.9, 0.01),
            ((0, 0), 0.5, 0.0),
        ]);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = random_point(&mut rng);
            let mut oracle = 0.0;
            for t in phi.terms().iter().rev() {
                let ang = TAU * (t.k.0 as f64 * x.x1 + t.k.1 as f64 * x.x2);
                oracle += t.cos_coeff * ang.cos();
                oracle += t.sin_coeff * ang.sin();
            }
            assert!((phi.evaluate(x) - oracle).abs() < 1e-13);
        }
    }

    #[test]
    fn canonical_form_folds_negative_frequencies() {
        // cos is even, sin is odd: a term at -k folds into k.
        let a = TrigObservable::from_terms([((-1, -2), 0.5, 0.25)]);
        let b = TrigObservable::from_terms([((1, 2), 0.5, -0.25)]);
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let x = random_point(&mut rng);
            assert!((a.evaluate(x) - b.evaluate(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn normalize_zero_mean_drops_constant_only() {
        let phi = TrigObservable::from_terms([((0, 0), 5.0, 0.0), ((1, 0), 1.0, 0.0)]);
        let centered = phi.normalize_zero_mean();
        assert_eq!(centered.mean(), 0.0);
        assert_eq!(centered, TrigObservable::cosine((1, 0), 1.0));
        // Already zero-mean observables are unchanged.
        assert_eq!(centered.normalize_zero_mean(), centered);
    }

    #[test]
    fn monte_carlo_mean_of_centered_observable_is_near_zero() {
        let phi = TrigObservable::from_terms([((0, 0), 2.0, 0.0), ((1, 1), 0.8, -0.3)]);
        let centered = phi.normalize_zero_mean();
        let sup = centered.sup_norm_bound();
        let n = 1_000_000usize;
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut acc = 0.0;
        for _ in 0..n {
            acc += centered.evaluate(random_point(&mut rng));
        }
        let mean = acc / n as f64;
        assert!(mean.abs() <= 3.0 / (n as f64).sqrt() * sup);
    }

    #[test]
    fn lipschitz_norm_examples() {
        assert_eq!(TrigObservable::constant(-4.0).lipschitz_norm(), 4.0);
        let phi = TrigObservable::cosine((1, 0), 1.0);
        assert!((phi.lipschitz_norm() - (1.0 + TAU)).abs() < 1e-15);
        // Absolute homogeneity.
        let psi = TrigObservable::from_terms([((1, 2), 0.3, 0.4), ((0, 1), -0.7, 0.0)]);
        assert!((psi.scaled(2.0).lipschitz_norm() - 2.0 * psi.lipschitz_norm()).abs() < 1e-12);
    }

    #[test]
    fn finite_difference_slopes_never_exceed_lipschitz_norm() {
        let phi = TrigObservable::from_terms([((1, 0), 0.6, 0.0), ((2, 1), -0.3, 0.8)]);
        let norm = phi.lipschitz_norm();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10_000 {
            let x = random_point(&mut rng);
            let y = random_point(&mut rng);
            let dx = torus_dist(x.x1, y.x1);
            let dy = torus_dist(x.x2, y.x2);
            let dist = (dx * dx + dy * dy).sqrt();
            if dist < 1e-9 {
                continue;
            }
            let slope = (phi.evaluate(x) - phi.evaluate(y)).abs() / dist;
            assert!(slope <= norm + 1e-9, "slope {slope} exceeds norm {norm}");
        }
    }

    fn torus_dist(a: f64, b: f64) -> f64 {
        let d = (a - b).abs();
        d.min(1.0 - d)
    }

    #[test]
    fn birkhoff_sum_base_cases() {
        let phi = TrigObservable::from_terms([((0, 0), 1.5, 0.0), ((1, 0), 1.0, 0.0)]);
        let map = cat();
        let x = TorusPoint::new(0.123, 0.456);
        assert_eq!(birkhoff_sum(&phi, &map, x, 0), 0.0);
        // Origin is fixed, so the n-sum is n·φ(0,0).
        let origin = TorusPoint::new(0.0, 0.0);
        let v = birkhoff_sum(&phi, &map, origin, 17);
        assert!((v - 17.0 * phi.evaluate(origin)).abs() < 1e-12);
    }

    #[test]
    fn birkhoff_cocycle_relation() {
        // A(n1+n2, x) = A(n1, T^{n2} x) + A(n2, x)
        let phi = TrigObservable::from_terms([((1, 0), 0.7, 0.0), ((0, 1), 0.0, -0.4)]);
        let map = cat();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(n1, n2) in &[(1u64, 1u64), (3, 7), (100, 234), (5000, 5000), (9999, 1)] {
            let x = random_point(&mut rng);
            let total = birkhoff_sum(&phi, &map, x, n1 + n2);
            let part2 = birkhoff_sum(&phi, &map, x, n2);
            let mut y = x;
            for _ in 0..n2 {
                y = map.apply(y);
            }
            let part1 = birkhoff_sum(&phi, &map, y, n1);
            let scale = 1.0f64.max(total.abs());
            assert!(
                (total - (part1 + part2)).abs() / scale < 1e-10,
                "cocycle relation broken at n1={n1}, n2={n2}"
            );
        }
    }

    #[test]
    fn coboundary_of_constant_is_zero() {
        let psi = TrigObservable::constant(2.0);
        let phi = coboundary_from(&psi, &cat()).unwrap();
        assert!(phi.is_zero());
    }

    #[test]
    fn coboundary_of_cosine_has_expected_frequencies() {
        // ψ = cos 2πx1 over the cat map: Mᵀ(1,0) = (2,1), so
        // ψ∘T − ψ = cos 2π(2x1 + x2) − cos 2πx1.
        let psi = TrigObservable::cosine((1, 0), 1.0);
        let map = cat();
        let phi = coboundary_from(&psi, &map).unwrap();
        let expected = TrigObservable::from_terms([((2, 1), 1.0, 0.0), ((1, 0), -1.0, 0.0)]);
        assert_eq!(phi, expected);
        assert_eq!(phi.mean(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let x = random_point(&mut rng);
            let direct = psi.evaluate(map.apply(x)) - psi.evaluate(x);
            assert!((phi.evaluate(x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn coboundary_pointwise_identity_random_generator() {
        let psi = TrigObservable::from_terms([((1, 1), 0.4, -0.2), ((0, 2), 0.0, 0.9)]);
        let map = cat();
        let phi = coboundary_from(&psi, &map).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..1000 {
            let x = random_point(&mut rng);
            let direct = psi.evaluate(map.apply(x)) - psi.evaluate(x);
            assert!((phi.evaluate(x) - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn coboundary_birkhoff_sums_telescope() {
        // |φ_n(x)| = |ψ(Tⁿx) − ψ(x)| ≤ 2 sup|ψ| uniformly in n.
        let psi = TrigObservable::from_terms([((1, 0), 0.5, 0.3), ((1, 2), -0.2, 0.0)]);
        let map = cat();
        let phi = coboundary_from(&psi, &map).unwrap();
        let bound = 2.0 * psi.sup_norm_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let x = random_point(&mut rng);
            for &n in &[1u64, 10, 100, 2000] {
                let s = birkhoff_sum(&phi, &map, x, n);
                assert!(s.abs() <= bound + 1e-9);
            }
        }
    }

    #[test]
    fn serde_round_trip_is_exact() {
        let phi = TrigObservable::from_terms([
            ((1, 0), 0.1, -0.7),
            ((3, -4), 1e-15, 2.5),
            ((0, 0), std::f64::consts::PI, 0.0),
        ]);
        let json = serde_json::to_string(&phi).unwrap();
        let back: TrigObservable = serde_json::from_str(&json).unwrap();
        assert_eq!(phi, back);
    }

    #[test]
    fn spec_json_format_parses() {
        let json = r#"{"terms": [{"k": [1,0], "cos": 1.0, "sin": 0.0}, {"k": [0,1], "cos": 1.0}]}"#;
        let phi: TrigObservable = serde_json::from_str(json).unwrap();
        let expected =
            &TrigObservable::cosine((1, 0), 1.0) + &TrigObservable::cosine((0, 1), 1.0);
        assert_eq!(phi, expected);
    }
}
