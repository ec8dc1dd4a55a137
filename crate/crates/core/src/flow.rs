//! The flow-side analog: a suspension of a toral automorphism under a
//! positive roof function. Flow cocycles are integrals of an observable
//! along trajectories, evaluated segment-by-segment with Gauss–Legendre
//! quadrature; periodic flow orbits sit over periodic base orbits with
//! period t_p = Σ roof.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::TrigObservable;
use crate::periodic::PeriodicOrbit;
use crate::quad;
use crate::sampling::with_chunk_rngs;
use crate::torus::{TorusMap, TorusPoint};

use rayon::prelude::*;

/// Required pointwise lower bound of a roof, with margin.
pub const ROOF_MIN: f64 = 0.1;

/// Grid used to certify roof positivity and to bound its maximum.
pub const ROOF_GRID: u32 = 256;

/// A strictly positive roof: a constant plus a trigonometric oscillation.
/// Positivity (infimum ≥ 0.1 on a 256×256 grid) is checked at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RoofSpec", into = "RoofSpec")]
pub struct RoofFunction {
    base_constant: f64,
    oscillation: TrigObservable,
}

/// Wire format: `{"constant": 1.0, "oscillation": {"terms": [...]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoofSpec {
    pub constant: f64,
    #[serde(default = "zero_observable")]
    pub oscillation: TrigObservable,
}

fn zero_observable() -> TrigObservable {
    TrigObservable::zero()
}

impl From<RoofFunction> for RoofSpec {
    fn from(r: RoofFunction) -> Self {
        RoofSpec {
            constant: r.base_constant,
            oscillation: r.oscillation,
        }
    }
}

impl TryFrom<RoofSpec> for RoofFunction {
    type Error = Error;
    fn try_from(spec: RoofSpec) -> Result<Self> {
        RoofFunction::new(spec.constant, spec.oscillation)
    }
}

impl RoofFunction {
    pub fn new(base_constant: f64, oscillation: TrigObservable) -> Result<Self> {
        let roof = RoofFunction {
            base_constant,
            oscillation,
        };
        let inf = roof.grid_min();
        if !(inf >= ROOF_MIN) {
            return Err(Error::InvalidRoof(format!(
                "grid infimum {inf} is below the required {ROOF_MIN}"
            )));
        }
        Ok(roof)
    }

    pub fn constant(c: f64) -> Result<Self> {
        Self::new(c, TrigObservable::zero())
    }

    #[inline]
    pub fn evaluate(&self, x: TorusPoint) -> f64 {
        self.base_constant + self.oscillation.evaluate(x)
    }

    pub fn base_constant(&self) -> f64 {
        self.base_constant
    }

    pub fn oscillation(&self) -> &TrigObservable {
        &self.oscillation
    }

    fn grid_min(&self) -> f64 {
        let mut inf = f64::INFINITY;
        for i in 0..ROOF_GRID {
            for j in 0..ROOF_GRID {
                let x = TorusPoint::new(
                    i as f64 / ROOF_GRID as f64,
                    j as f64 / ROOF_GRID as f64,
                );
                inf = inf.min(self.evaluate(x));
            }
        }
        inf
    }

    /// Rigorous upper bound: grid maximum plus Lipschitz slack over half a
    /// grid cell diagonal. Used as the rejection-sampling proposal height.
    pub fn upper_bound(&self) -> f64 {
        let mut sup = f64::NEG_INFINITY;
        for i in 0..ROOF_GRID {
            for j in 0..ROOF_GRID {
                let x = TorusPoint::new(
                    i as f64 / ROOF_GRID as f64,
                    j as f64 / ROOF_GRID as f64,
                );
                sup = sup.max(self.evaluate(x));
            }
        }
        sup + self.oscillation.lipschitz_norm() * std::f64::consts::SQRT_2 / (2.0 * ROOF_GRID as f64)
    }
}

/// A point of the suspension space: a base point and a height in
/// `[0, roof(base))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub base: TorusPoint,
    pub height: f64,
}

impl FlowPoint {
    /// Canonical representative under the suspension identification.
    pub fn new(base: TorusPoint, height: f64, roof: &RoofFunction, map: &TorusMap) -> Self {
        canonicalize(FlowPoint { base, height }, roof, map)
    }

    pub fn on_base(base: TorusPoint) -> Self {
        FlowPoint { base, height: 0.0 }
    }
}

fn canonicalize(mut p: FlowPoint, roof: &RoofFunction, map: &TorusMap) -> FlowPoint {
    while p.height < 0.0 {
        p.base = map.apply_inverse(p.base);
        p.height += roof.evaluate(p.base);
    }
    loop {
        let r = roof.evaluate(p.base);
        if p.height < r {
            break;
        }
        p.height -= r;
        p.base = map.apply(p.base);
    }
    p
}

/// Move along the suspension flow for time `t` (negative time runs the
/// inverse map). Input and output are canonical flow points.
pub fn flow(point: FlowPoint, t: f64, roof: &RoofFunction, map: &TorusMap) -> FlowPoint {
    canonicalize(
        FlowPoint {
            base: point.base,
            height: point.height + t,
        },
        roof,
        map,
    )
}

/// Height profile factor of a suspension observable, a function of the
/// rescaled height u = s/roof(x).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HeightProfile {
    One,
    /// cos(2π · cycles · u)
    Cos(i32),
    /// sin(2π · cycles · u)
    Sin(i32),
}

impl HeightProfile {
    #[inline]
    fn evaluate(&self, u: f64) -> f64 {
        match *self {
            HeightProfile::One => 1.0,
            HeightProfile::Cos(c) => (std::f64::consts::TAU * c as f64 * u).cos(),
            HeightProfile::Sin(c) => (std::f64::consts::TAU * c as f64 * u).sin(),
        }
    }
}

/// One product term of a suspension observable:
/// `base(x) · profile(s/roof(x)) · roof(x)^roof_power`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTerm {
    pub base: TrigObservable,
    pub profile: HeightProfile,
    pub roof_power: i32,
}

/// An observable on the suspension space, as a sum of product terms. The
/// class is closed under linear combinations and contains constants, lifted
/// base observables, and the telescoping test generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowObservable {
    pub terms: Vec<FlowTerm>,
}

impl FlowObservable {
    pub fn zero() -> Self {
        FlowObservable { terms: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        FlowObservable {
            terms: vec![FlowTerm {
                base: TrigObservable::constant(c),
                profile: HeightProfile::One,
                roof_power: 0,
            }],
        }
    }

    /// Lift a base observable (constant in the flow direction).
    pub fn from_base(base: TrigObservable) -> Self {
        FlowObservable {
            terms: vec![FlowTerm {
                base,
                profile: HeightProfile::One,
                roof_power: 0,
            }],
        }
    }

    /// The derivative along the flow of Φ(x, s) = sin(2πs/roof(x)):
    /// φ(x, s) = (2π/roof(x)) · cos(2πs/roof(x)). Since Φ vanishes at both
    /// s = 0 and s = roof(x), its flow integrals telescope over roof
    /// crossings: a built-in exact flow coboundary generator.
    pub fn telescoping_generator() -> Self {
        FlowObservable {
            terms: vec![FlowTerm {
                base: TrigObservable::constant(std::f64::consts::TAU),
                profile: HeightProfile::Cos(1),
                roof_power: -1,
            }],
        }
    }

    /// The transfer function of the telescoping generator (for tests).
    pub fn telescoping_transfer(x: TorusPoint, s: f64, roof: &RoofFunction) -> f64 {
        (std::f64::consts::TAU * s / roof.evaluate(x)).sin()
    }

    pub fn add(&self, other: &FlowObservable) -> FlowObservable {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        FlowObservable { terms }
    }

    pub fn scaled(&self, s: f64) -> FlowObservable {
        FlowObservable {
            terms: self
                .terms
                .iter()
                .map(|t| FlowTerm {
                    base: t.base.scaled(s),
                    profile: t.profile,
                    roof_power: t.roof_power,
                })
                .collect(),
        }
    }

    #[inline]
    pub fn evaluate(&self, x: TorusPoint, s: f64, roof: &RoofFunction) -> f64 {
        let r = roof.evaluate(x);
        let u = s / r;
        self.terms
            .iter()
            .map(|t| t.base.evaluate(x) * t.profile.evaluate(u) * r.powi(t.roof_power))
            .sum()
    }
}

/// A flow-cocycle increment: the integral value and the elapsed time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCocycleValue {
    pub value: f64,
    pub elapsed: f64,
}

/// ∫_h^{h+dt} φ(b, u) du along one roof fiber.
fn fiber_integral(
    phi: &FlowObservable,
    b: TorusPoint,
    lo: f64,
    hi: f64,
    roof: &RoofFunction,
) -> f64 {
    quad::integrate(|u| phi.evaluate(b, u, roof), lo, hi)
}

/// The cocycle A(t, x) = ∫₀ᵗ φ(flow_s(x)) ds, computed segment-by-segment
/// across roof crossings with the fixed-order quadrature of [`quad`].
pub fn flow_cocycle(
    phi: &FlowObservable,
    t: f64,
    x: FlowPoint,
    roof: &RoofFunction,
    map: &TorusMap,
) -> FlowCocycleValue {
    let mut acc = 0.0;
    if t >= 0.0 {
        let mut b = x.base;
        let mut h = x.height;
        let mut remaining = t;
        while remaining > 0.0 {
            let r = roof.evaluate(b);
            let seg = (r - h).min(remaining);
            acc += fiber_integral(phi, b, h, h + seg, roof);
            remaining -= seg;
            if remaining <= 0.0 {
                break;
            }
            b = map.apply(b);
            h = 0.0;
        }
    } else {
        let mut b = x.base;
        let mut h = x.height;
        let mut remaining = -t;
        while remaining > 0.0 {
            if h <= 0.0 {
                b = map.apply_inverse(b);
                h = roof.evaluate(b);
            }
            let seg = h.min(remaining);
            acc -= fiber_integral(phi, b, h - seg, h, roof);
            h -= seg;
            remaining -= seg;
        }
    }
    FlowCocycleValue {
        value: acc,
        elapsed: t,
    }
}

/// Central finite-difference recovery of the infinitesimal generator:
/// (A(h,x) − A(−h,x)) / 2h at h = 1e−5, which must agree with φ(x).
pub fn infinitesimal_generator_check(
    phi: &FlowObservable,
    x: FlowPoint,
    roof: &RoofFunction,
    map: &TorusMap,
) -> f64 {
    let h = 1e-5;
    let fwd = flow_cocycle(phi, h, x, roof, map).value;
    let bwd = flow_cocycle(phi, -h, x, roof, map).value;
    (fwd - bwd) / (2.0 * h)
}

/// A periodic orbit of the suspension flow: a periodic base orbit together
/// with its flow period t_p = Σ roof over the base points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicFlowOrbit {
    pub base_orbit: PeriodicOrbit,
    pub t_p: f64,
}

impl PeriodicFlowOrbit {
    pub fn from_base(base_orbit: PeriodicOrbit, roof: &RoofFunction) -> Self {
        let t_p = base_orbit
            .points
            .iter()
            .map(|p| roof.evaluate(p.as_float()))
            .sum();
        PeriodicFlowOrbit { base_orbit, t_p }
    }
}

/// The flow obstruction ∫₀^{t_p} φ(flow_s(p)) ds over one periodic flow
/// orbit.
///
/// This is the reduction to the base that makes the flow side reuse the
/// discrete machinery: the integral over one flow period equals the base
/// Birkhoff sum, over the periodic base orbit, of the per-fiber segment
/// integrals ∫₀^{roof(b)} φ(b, u) du.
pub fn flow_orbit_obstruction(
    phi: &FlowObservable,
    orbit: &PeriodicFlowOrbit,
    roof: &RoofFunction,
) -> f64 {
    orbit
        .base_orbit
        .points
        .iter()
        .map(|p| {
            let b = p.as_float();
            fiber_integral(phi, b, 0.0, roof.evaluate(b), roof)
        })
        .sum()
}

/// Per-t row of a flow CLT report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowCltEntry {
    pub t: f64,
    pub sigma_squared: f64,
    pub sigma_se: f64,
    pub ks: Option<f64>,
    pub tails: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowCltReport {
    pub entries: Vec<FlowCltEntry>,
    pub count: usize,
    pub seed: u64,
    /// Mean of φ over the suspension volume, subtracted before integrating.
    pub phi_bar: f64,
    /// Fraction of accepted proposals in the under-the-roof sampler; equals
    /// mean(roof)/bound up to sampling error.
    pub acceptance_rate: f64,
    pub proposal_height: f64,
}

/// Mean of a suspension observable with respect to the normalized volume
/// under the roof: periodic trapezoid sums over the base grid (spectrally
/// accurate for trigonometric integrands) with a Gauss–Legendre integral
/// along each fiber.
pub fn suspension_mean(phi: &FlowObservable, roof: &RoofFunction) -> f64 {
    let g = ROOF_GRID;
    let mut numerator = 0.0;
    let mut volume = 0.0;
    for i in 0..g {
        for j in 0..g {
            let x = TorusPoint::new(i as f64 / g as f64, j as f64 / g as f64);
            let r = roof.evaluate(x);
            numerator += fiber_integral(phi, x, 0.0, r, roof);
            volume += r;
        }
    }
    numerator / volume
}

/// Sample `count` points uniformly under the roof by acceptance-rejection
/// (uniform base point, uniform height below the proposal bound).
/// Deterministic per seed and chunk-stream, as everywhere else.
fn sample_under_roof(
    roof: &RoofFunction,
    count: usize,
    seed: u64,
    stream_base: u64,
) -> (Vec<FlowPoint>, f64, f64) {
    let bound = roof.upper_bound();
    let trials: Vec<(FlowPoint, u64)> = with_chunk_rngs(count, seed, stream_base, |rng, _| {
        let mut attempts = 0u64;
        loop {
            attempts += 1;
            let base = TorusPoint::new(rng.random(), rng.random());
            let s: f64 = rng.random::<f64>() * bound;
            if s < roof.evaluate(base) {
                return (FlowPoint { base, height: s }, attempts);
            }
        }
    });
    let total_attempts: u64 = trials.iter().map(|(_, a)| a).sum();
    let points = trials.into_iter().map(|(p, _)| p).collect();
    (points, count as f64 / total_attempts as f64, bound)
}

/// Monte-Carlo CLT report for the flow: per horizon t, the variance
/// estimate σ̂² = mean(A(t,·)²)/t of the centered observable, the KS
/// distance of A(t,·)/(σ̂√t) from the standard normal, and tail fractions.
pub fn flow_clt_report(
    phi: &FlowObservable,
    roof: &RoofFunction,
    map: &TorusMap,
    schedule: &[f64],
    count: usize,
    seed: u64,
    thresholds: &[f64],
) -> Result<FlowCltReport> {
    map.require_experiment_ready()?;
    if count < 100 {
        return Err(Error::InvalidParameter("flow CLT needs count >= 100".into()));
    }
    if schedule.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("horizons must be positive".into()));
    }

    // Center φ by its mean over the suspension volume. The mean is computed
    // by deterministic quadrature rather than sampled: Monte-Carlo noise in
    // φ̄ would enter σ̂² as (noise)²·t and swamp the coboundary cases.
    let phi_bar = suspension_mean(phi, roof);
    let centered = phi.add(&FlowObservable::constant(-phi_bar));

    let mut entries = Vec::with_capacity(schedule.len());
    let mut acceptance_rate = 0.0;
    let mut proposal_height = 0.0;
    for (idx, &t) in schedule.iter().enumerate() {
        let (starts, rate, bound) =
            sample_under_roof(roof, count, seed, (idx as u64 + 1) << 20);
        acceptance_rate = rate;
        proposal_height = bound;
        let values: Vec<f64> = starts
            .par_iter()
            .map(|&p| flow_cocycle(&centered, t, p, roof, map).value)
            .collect();
        let squares: Vec<f64> = values.iter().map(|v| v * v / t).collect();
        let n = squares.len() as f64;
        let s2 = squares.iter().sum::<f64>() / n;
        let var = squares.iter().map(|v| (v - s2) * (v - s2)).sum::<f64>() / n;
        let se = (var / n).sqrt();
        let ks = if s2 > 0.0 {
            let scale = s2.sqrt() * t.sqrt();
            let normalized: Vec<f64> = values.iter().map(|v| v / scale).collect();
            Some(crate::clt::ks_statistic(&normalized, crate::clt::normal_cdf))
        } else {
            None
        };
        let tails = thresholds
            .iter()
            .map(|&c| (c, crate::clt::tail_fraction(&values, c)))
            .collect();
        entries.push(FlowCltEntry {
            t,
            sigma_squared: s2,
            sigma_se: se,
            ks,
            tails,
        });
    }
    Ok(FlowCltReport {
        entries,
        count,
        seed,
        phi_bar,
        acceptance_rate,
        proposal_height,
    })
}
