//! The built-in observable suite used by demos and the acceptance checks:
//! ten coboundary generators with varied frequencies and mixed parities,
//! plus two observables with a known nonzero obstruction at the origin.

use crate::observable::TrigObservable;
use crate::torus::HyperbolicToralMap;

/// Ten generators ψ; their coboundaries ψ∘T − ψ are the ground-truth
/// cohomologically trivial test cases.
pub fn coboundary_generators() -> Vec<(&'static str, TrigObservable)> {
    vec![
        ("cos_x1", TrigObservable::cosine((1, 0), 1.0)),
        ("sin_x1", TrigObservable::sine((1, 0), 1.0)),
        ("cos_x2", TrigObservable::cosine((0, 1), 1.0)),
        ("sin_diag", TrigObservable::sine((1, 1), 1.0)),
        (
            "mixed_low",
            TrigObservable::from_terms([((1, 0), 1.0, 0.0), ((0, 1), 0.0, 0.5)]),
        ),
        ("cos_antidiag", TrigObservable::cosine((1, -1), 1.0)),
        ("cos_2x1", TrigObservable::cosine((2, 0), 0.3)),
        (
            "sin_skew",
            TrigObservable::from_terms([((1, 2), 0.0, 0.25)]),
        ),
        (
            "mixed_high",
            TrigObservable::from_terms([((2, 1), 0.5, 0.0), ((0, 1), 0.0, 0.2)]),
        ),
        (
            "three_waves",
            TrigObservable::from_terms([
                ((1, 0), 0.4, -0.1),
                ((0, 2), 0.0, 0.3),
                ((1, 1), -0.2, 0.0),
            ]),
        ),
    ]
}

/// Observables with a nonzero periodic obstruction: both take the value
/// of their coefficient sum at the fixed point (0,0).
pub fn obstructed_observables() -> Vec<(&'static str, TrigObservable)> {
    vec![
        (
            "cos_x1_plus_cos_x2",
            &TrigObservable::cosine((1, 0), 1.0) + &TrigObservable::cosine((0, 1), 1.0),
        ),
        ("cos_x1_alone", TrigObservable::cosine((1, 0), 1.0)),
    ]
}

/// The standard test map.
pub fn cat_map() -> HyperbolicToralMap {
    HyperbolicToralMap::cat()
}
