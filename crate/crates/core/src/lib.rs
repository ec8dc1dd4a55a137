//! Computational laboratory for cohomological rigidity on the 2-torus.
//!
//! The crate implements, on explicit volume-preserving Anosov systems
//! (hyperbolic toral automorphisms and their suspension flows), every piece
//! of the measurable-rigidity story that can actually be checked on a desk:
//!
//! * exact enumeration of periodic orbits and their obstruction sums,
//! * trigonometric-polynomial observables with exactly computable norms,
//!   means and coboundaries,
//! * numerical reconstruction of transfer functions along long orbits,
//! * Monte-Carlo verification of the Central Limit Theorem with two
//!   independent variance estimators,
//! * quantitative type certificates (a common time at which Birkhoff sums
//!   exceed a threshold on almost half the volume) and the rigidity witness
//!   they imply,
//! * the flow-side analogs on suspensions under positive roof functions.
//!
//! All randomized routines are deterministic per seed and independent of the
//! number of worker threads.

pub mod certify;
pub mod clt;
pub mod error;
pub mod flow;
pub mod observable;
pub mod periodic;
pub mod quad;
pub mod sampling;
pub mod solver;
pub mod suite;
pub mod torus;

pub use error::{Error, Result};
pub use observable::{CocycleValue, TrigObservable};
pub use periodic::PeriodicOrbit;
pub use torus::{
    ConeCertificate, HyperbolicToralMap, RationalTorusPoint, ShearedMap, TorusMap, TorusPoint,
};
