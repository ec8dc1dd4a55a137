//! Quantitative type certificates: given thresholds (C, C̃, ε) and a
//! periodic orbit p, check class membership of an observable and search for
//! the first time k ≤ N at which the volume of {φ_k > C} certifiably
//! exceeds 1/2 − ε, then assemble the rigidity witness that such a
//! certificate implies for candidate measurable transfer functions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::TrigObservable;
use crate::periodic::{
    max_obstruction_up_to, orbit_obstruction, PeriodicOrbit, OBSTRUCTION_ZERO_TOLERANCE,
};
use crate::sampling::{par_count, par_update_chunks, uniform_starts};
use crate::torus::{TorusMap, TorusPoint};

/// Confidence level of the Hoeffding radius: 99%.
pub const CONFIDENCE_ALPHA: f64 = 0.01;

/// Minimum Monte-Carlo sample count for a certificate.
pub const MIN_CERTIFY_COUNT: usize = 10_000;

/// ε used for the certificate inside a rigidity witness, after rescaling the
/// observable to unit obstruction. Below 1/3 the measure bookkeeping
/// (1 − ε/2) + (1/2 − ε) > 1 yields a genuine contradiction.
pub const WITNESS_EPSILON: f64 = 0.25;

/// Threshold C used inside a rigidity witness, in rescaled (unit
/// obstruction) units.
pub const WITNESS_THRESHOLD: f64 = 2.0;

/// Two-sided 99% Hoeffding radius for an empirical mean of `count`
/// indicator samples.
pub fn hoeffding_radius(count: usize) -> f64 {
    ((2.0 / CONFIDENCE_ALPHA).ln() / (2.0 * count as f64)).sqrt()
}

/// The three membership conditions of the certified class
/// F(C̃, ε, p): zero mean, norm at most C̃, orbit obstruction at least ε.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MembershipCheck {
    pub zero_mean: bool,
    pub norm_ok: bool,
    pub obstruction_ok: bool,
    pub obstruction_value: f64,
}

impl MembershipCheck {
    pub fn member(&self) -> bool {
        self.zero_mean && self.norm_ok && self.obstruction_ok
    }
}

pub fn check_membership(
    phi: &TrigObservable,
    c_tilde: f64,
    epsilon: f64,
    orbit: &PeriodicOrbit,
) -> Result<MembershipCheck> {
    if !(epsilon > 0.0) || !(c_tilde > 0.0) {
        return Err(Error::InvalidParameter(
            "need epsilon > 0 and c_tilde > 0".into(),
        ));
    }
    let obstruction_value = orbit_obstruction(phi, orbit);
    Ok(MembershipCheck {
        zero_mean: phi.mean().abs() <= 1e-12,
        norm_ok: phi.lipschitz_norm() <= c_tilde,
        obstruction_ok: obstruction_value >= epsilon,
        obstruction_value,
    })
}

/// Result of the k-sweep.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SweepOutcome {
    /// Smallest k whose estimate certifies the inequality beyond the radius.
    pub k_found: Option<u64>,
    /// The k attaining the measure estimate below (equals `k_found` when
    /// certification succeeded, otherwise the best near-miss).
    pub best_k: u64,
    /// Empirical measure of {φ_k > C} at `best_k`.
    pub measure_estimate: f64,
}

/// Linear search over k = 1..N_max with early exit, no membership gate.
///
/// The per-sample partial sums are updated incrementally with the same
/// left-to-right accumulation as `clt::birkhoff_values`, so at equal
/// `(k, count, seed)` both paths produce bit-identical sums, hence identical
/// tail fractions. The hit count is an integer reduction: exact and
/// independent of the thread count.
pub fn certify_search(
    map: &TorusMap,
    phi: &TrigObservable,
    c: f64,
    epsilon: f64,
    n_max: u64,
    count: usize,
    seed: u64,
) -> Result<SweepOutcome> {
    map.require_experiment_ready()?;
    if n_max == 0 || count == 0 {
        return Err(Error::InvalidParameter("need n_max ≥ 1 and count ≥ 1".into()));
    }
    let centered = phi.normalize_zero_mean();
    let radius = hoeffding_radius(count);
    let target = 0.5 - epsilon;

    struct State {
        x: TorusPoint,
        sum: f64,
    }
    let mut states: Vec<State> = uniform_starts(count, seed)
        .into_iter()
        .map(|x| State { x, sum: 0.0 })
        .collect();

    let mut best_k = 0u64;
    let mut best_estimate = f64::NEG_INFINITY;
    for k in 1..=n_max {
        par_update_chunks(&mut states, |s| {
            s.sum += centered.evaluate(s.x);
            s.x = map.apply(s.x);
        });
        let hits = par_count(&states, |s| s.sum > c);
        let estimate = hits as f64 / count as f64;
        if estimate > best_estimate {
            best_k = k;
            best_estimate = estimate;
        }
        if estimate - radius > target {
            return Ok(SweepOutcome {
                k_found: Some(k),
                best_k: k,
                measure_estimate: estimate,
            });
        }
    }
    Ok(SweepOutcome {
        k_found: None,
        best_k,
        measure_estimate: best_estimate,
    })
}

/// A certificate of the time-k tail inequality, embedding everything needed
/// to replay it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeCertificate {
    pub c: f64,
    pub c_tilde: f64,
    pub epsilon: f64,
    pub orbit: PeriodicOrbit,
    pub k_found: Option<u64>,
    pub n_max: u64,
    /// Estimate of m{φ_k > C} at the certified k, or at the best near-miss
    /// k when no k qualified within budget.
    pub measure_estimate: f64,
    pub best_k: u64,
    /// 99% Hoeffding radius; certification demands
    /// `measure_estimate − confidence_radius > 1/2 − ε`, so a false
    /// certificate is improbable rather than impossible.
    pub confidence_radius: f64,
    pub sample_count: usize,
    pub seed: u64,
    pub membership: MembershipCheck,
}

/// Search for the smallest certifying k ≤ N_max.
///
/// `c_tilde` defaults to the observable's own exact norm, making the norm
/// condition non-restrictive unless the caller pins a smaller class.
/// A `k_found` of `None` is a budget verdict, not a disproof: the common
/// time exists by compactness but is not constructive.
#[allow(clippy::too_many_arguments)]
pub fn certify_type(
    map: &TorusMap,
    phi: &TrigObservable,
    c: f64,
    c_tilde: Option<f64>,
    epsilon: f64,
    orbit: &PeriodicOrbit,
    n_max: u64,
    count: usize,
    seed: u64,
) -> Result<TypeCertificate> {
    if count < MIN_CERTIFY_COUNT {
        return Err(Error::InvalidParameter(format!(
            "certification needs count >= {MIN_CERTIFY_COUNT}, got {count}"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter("need C > 0".into()));
    }
    let c_tilde = c_tilde.unwrap_or_else(|| phi.lipschitz_norm());
    let membership = check_membership(phi, c_tilde, epsilon, orbit)?;
    if !membership.member() {
        return Err(Error::NotAMember(format!(
            "zero_mean={}, norm_ok={}, obstruction_ok={} (obstruction {})",
            membership.zero_mean,
            membership.norm_ok,
            membership.obstruction_ok,
            membership.obstruction_value
        )));
    }
    let sweep = certify_search(map, phi, c, epsilon, n_max, count, seed)?;
    let cert = TypeCertificate {
        c,
        c_tilde,
        epsilon,
        orbit: orbit.clone(),
        k_found: sweep.k_found,
        n_max,
        measure_estimate: sweep.measure_estimate,
        best_k: sweep.best_k,
        confidence_radius: hoeffding_radius(count),
        sample_count: count,
        seed,
        membership,
    };
    if cert.k_found.is_some() {
        assert!(
            cert.measure_estimate - cert.confidence_radius > 0.5 - cert.epsilon,
            "certificate invariant violated"
        );
    }
    Ok(cert)
}

/// What a type certificate denies to candidate measurable solutions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessConclusion {
    /// Scale C/2 converted back to the original observable's units.
    pub bound_scale: f64,
    /// Any measurable solution exceeds that scale on at least this measure:
    /// 1/2 − 3ε/2 for the certificate's ε.
    pub measure_lower_bound: f64,
    pub summary: String,
}

/// The obstruction orbit, the rescaled certificate, and the derived
/// conclusion.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RigidityWitness {
    pub orbit: PeriodicOrbit,
    /// Signed obstruction of the (centered) input observable on that orbit.
    pub obstruction: f64,
    /// |obstruction|: the ε for which the observable is a class member.
    pub epsilon: f64,
    /// The certificate below is for `phi / rescale_factor` (unit
    /// obstruction); the factor is recorded to translate scales back.
    pub rescale_factor: f64,
    pub certificate: TypeCertificate,
    pub conclusion: WitnessConclusion,
}

/// Build the rigidity witness for an observable with a nonzero periodic
/// obstruction: locate the maximal obstruction up to `max_period`, rescale
/// to unit obstruction so that C stays meaningful across observables, and
/// certify at (C, ε) = (2, 1/4).
#[allow(clippy::too_many_arguments)]
pub fn rigidity_witness(
    map: &TorusMap,
    phi: &TrigObservable,
    n_max: u64,
    count: usize,
    seed: u64,
    max_period: u32,
    enumeration_cap: u128,
) -> Result<RigidityWitness> {
    let linear = map.linear()?;
    let centered = phi.normalize_zero_mean();
    let Some((orbit, obstruction)) = max_obstruction_up_to(
        &centered,
        linear,
        max_period,
        enumeration_cap,
        OBSTRUCTION_ZERO_TOLERANCE,
    )?
    else {
        return Err(Error::NoObstruction(max_period));
    };

    let rescaled = centered.scaled(1.0 / obstruction);
    let certificate = certify_type(
        map,
        &rescaled,
        WITNESS_THRESHOLD,
        None,
        WITNESS_EPSILON,
        &orbit,
        n_max,
        count,
        seed,
    )?;

    let bound_scale = obstruction.abs() * WITNESS_THRESHOLD / 2.0;
    let measure_lower_bound = 0.5 - 1.5 * WITNESS_EPSILON;
    let summary = match certificate.k_found {
        Some(k) => format!(
            "certified at k = {k}: any measurable transfer function exceeds \
             {bound_scale:.6} in absolute value on a set of measure at least \
             {measure_lower_bound:.3}"
        ),
        None => format!(
            "no certifying k within budget {n_max}; best near-miss at k = {} \
             with estimate {:.6}",
            certificate.best_k, certificate.measure_estimate
        ),
    };
    Ok(RigidityWitness {
        orbit,
        obstruction,
        epsilon: obstruction.abs(),
        rescale_factor: obstruction,
        certificate,
        conclusion: WitnessConclusion {
            bound_scale,
            measure_lower_bound,
            summary,
        },
    })
}
