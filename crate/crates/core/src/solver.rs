//! Numerical solution of the cohomological equation φ = Φ∘T − Φ along a
//! long orbit, with the transfer function reconstructed as cell means on a
//! torus grid, plus the boundedness test for measurable solvability.
//!
//! Along an orbit x₀, Tx₀, … the partial sums φ_k(x₀) are forced values of
//! Φ(Tᵏx₀) up to the constant Φ(x₀) := 0. If a continuous solution exists
//! the values assigned to one grid cell agree up to the cell diameter times
//! the Lipschitz constant; if not, the per-cell spread diverges as the orbit
//! revisits cells with incompatible partial sums.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::observable::TrigObservable;
use crate::sampling::{par_update_chunks, uniform_starts};
use crate::torus::{TorusMap, TorusPoint};

/// Coverage fraction below which residual checks refuse to run.
pub const COVERAGE_REQUIRED: f64 = 0.99;

/// Per-cell statistics of the values assigned to it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub sum: f64,
    pub visits: u64,
    pub min: f64,
    pub max: f64,
}

impl Cell {
    fn empty() -> Self {
        Cell {
            sum: 0.0,
            visits: 0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
        }
    }

    pub fn is_visited(&self) -> bool {
        self.visits > 0
    }

    /// Mean of the assigned values; `None` for unvisited cells (never a
    /// silent zero).
    pub fn value(&self) -> Option<f64> {
        self.is_visited().then(|| self.sum / self.visits as f64)
    }

    /// Max − min of the assigned values.
    pub fn spread(&self) -> Option<f64> {
        self.is_visited().then(|| self.max - self.min)
    }

    fn record(&mut self, v: f64) {
        self.sum += v;
        self.visits += 1;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    fn merge(&mut self, other: &Cell) {
        if other.is_visited() {
            self.sum += other.sum;
            self.visits += other.visits;
            self.min = self.min.min(other.min);
            self.max = self.max.max(other.max);
        }
    }
}

/// A candidate transfer function tabulated on an R×R torus grid, normalized
/// by the anchor point where the value 0 was assigned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    resolution: u32,
    anchor: TorusPoint,
    cells: Vec<Cell>,
}

impl GridFunction {
    pub fn new(resolution: u32, anchor: TorusPoint) -> Self {
        assert!(resolution >= 1);
        GridFunction {
            resolution,
            anchor,
            cells: vec![Cell::empty(); (resolution * resolution) as usize],
        }
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    pub fn anchor(&self) -> TorusPoint {
        self.anchor
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    #[inline]
    fn cell_index(&self, x: TorusPoint) -> usize {
        let r = self.resolution as usize;
        let i = ((x.x1 * self.resolution as f64) as usize).min(r - 1);
        let j = ((x.x2 * self.resolution as f64) as usize).min(r - 1);
        i * r + j
    }

    pub fn record(&mut self, x: TorusPoint, value: f64) {
        let idx = self.cell_index(x);
        self.cells[idx].record(value);
    }

    /// Cell-mean lookup at a point.
    pub fn value_at(&self, x: TorusPoint) -> Option<f64> {
        self.cells[self.cell_index(x)].value()
    }

    pub fn cell(&self, i: u32, j: u32) -> &Cell {
        &self.cells[(i * self.resolution + j) as usize]
    }

    pub fn cell_center(&self, i: u32, j: u32) -> TorusPoint {
        let r = self.resolution as f64;
        TorusPoint::new((i as f64 + 0.5) / r, (j as f64 + 0.5) / r)
    }

    /// Fraction of cells visited at least once.
    pub fn coverage(&self) -> f64 {
        let visited = self.cells.iter().filter(|c| c.is_visited()).count();
        visited as f64 / self.cells.len() as f64
    }

    /// Largest per-cell spread over visited cells.
    pub fn max_spread(&self) -> f64 {
        self.cells
            .iter()
            .filter_map(Cell::spread)
            .fold(0.0, f64::max)
    }

    /// Visit-weighted merge of two solves on the same grid. Associative and
    /// order-independent, so concurrent orbits can be combined in any order.
    pub fn merge(&mut self, other: &GridFunction) {
        assert_eq!(self.resolution, other.resolution, "grid sizes differ");
        for (a, b) in self.cells.iter_mut().zip(&other.cells) {
            a.merge(b);
        }
    }
}

/// Reconstruct a transfer function candidate from one orbit of `n_steps`.
///
/// Requires `n_steps ≥ 10·R²` so a dense orbit can plausibly cover the
/// grid; a run that still covers less than 99% (unlucky or non-transitive
/// start) is reported through `GridFunction::coverage`, not as an error.
pub fn solve_on_orbit(
    phi: &TrigObservable,
    map: &TorusMap,
    x0: TorusPoint,
    n_steps: u64,
    resolution: u32,
) -> Result<GridFunction> {
    map.require_experiment_ready()?;
    if n_steps < 10 * (resolution as u64).pow(2) {
        return Err(Error::InvalidParameter(format!(
            "n_steps = {n_steps} is below the coverage heuristic 10·R² = {}",
            10 * (resolution as u64).pow(2)
        )));
    }
    let mut grid = GridFunction::new(resolution, x0);
    let mut x = x0;
    let mut partial_sum = 0.0;
    for _ in 0..n_steps {
        grid.record(x, partial_sum);
        partial_sum += phi.evaluate(x);
        x = map.apply(x);
    }
    Ok(grid)
}

/// Sup of |Φ̂(Tx) − Φ̂(x) − φ(x)| over all cell centers whose cell and image
/// cell are both visited, with the grid-scale noise floor `‖φ‖_Lip / R`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ResidualReport {
    pub residual: f64,
    pub noise_floor: f64,
    pub samples: usize,
}

pub fn coboundary_residual(
    grid: &GridFunction,
    phi: &TrigObservable,
    map: &TorusMap,
) -> Result<ResidualReport> {
    let coverage = grid.coverage();
    if coverage < COVERAGE_REQUIRED {
        return Err(Error::InsufficientCoverage {
            coverage,
            required: COVERAGE_REQUIRED,
        });
    }
    let r = grid.resolution();
    let mut residual = 0.0f64;
    let mut samples = 0usize;
    for i in 0..r {
        for j in 0..r {
            let x = grid.cell_center(i, j);
            let (Some(here), Some(there)) = (grid.value_at(x), grid.value_at(map.apply(x)))
            else {
                continue;
            };
            residual = residual.max((there - here - phi.evaluate(x)).abs());
            samples += 1;
        }
    }
    Ok(ResidualReport {
        residual,
        noise_floor: phi.lipschitz_norm() / r as f64,
        samples,
    })
}

/// Verdict of the Birkhoff-sum boundedness test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundednessVerdict {
    /// 95th percentile of |φ_n| stays bounded across the schedule.
    CoboundaryLike,
    /// 95th percentile grows like √n across the schedule.
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasurableTestReport {
    pub verdict: BoundednessVerdict,
    /// (n, empirical 95th percentile of |φ_n|) per schedule entry.
    pub percentiles: Vec<(u64, f64)>,
    pub growth_ratio: f64,
    pub sqrt_ratio: f64,
    pub sample_count: usize,
    pub seed: u64,
}

/// Detect whether the Birkhoff sums of φ stay tight (a necessary
/// consequence of a measurable solution) or spread like √n.
///
/// The classification brackets are heuristics gating demos, not acceptance
/// math: bounded means p95 grows by at most 2× across the whole schedule,
/// diffusive means the growth is within a factor 2 of √(n_last/n_first).
pub fn measurable_solution_test(
    phi: &TrigObservable,
    map: &TorusMap,
    sample_count: usize,
    n_schedule: &[u64],
    seed: u64,
) -> Result<MeasurableTestReport> {
    map.require_experiment_ready()?;
    if n_schedule.len() < 2 || n_schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "n_schedule must be strictly increasing with at least two entries".into(),
        ));
    }
    if sample_count == 0 {
        return Err(Error::InvalidParameter("sample_count must be positive".into()));
    }
    let phi = phi.normalize_zero_mean();
    let n_max = *n_schedule.last().unwrap();

    struct State {
        x: TorusPoint,
        sum: f64,
        checkpoints: Vec<f64>,
    }
    let mut states: Vec<State> = uniform_starts(sample_count, seed)
        .into_iter()
        .map(|x| State {
            x,
            sum: 0.0,
            checkpoints: Vec::with_capacity(n_schedule.len()),
        })
        .collect();

    let mut done = 0u64;
    for &n in n_schedule {
        let steps = n - done;
        par_update_chunks(&mut states, |s| {
            for _ in 0..steps {
                s.sum += phi.evaluate(s.x);
                s.x = map.apply(s.x);
            }
            s.checkpoints.push(s.sum.abs());
        });
        done = n;
        debug_assert!(done <= n_max);
    }

    let mut percentiles = Vec::with_capacity(n_schedule.len());
    for (slot, &n) in n_schedule.iter().enumerate() {
        let mut column: Vec<f64> = states.iter().map(|s| s.checkpoints[slot]).collect();
        column.sort_by(|a, b| a.total_cmp(b));
        let idx = ((0.95 * sample_count as f64).ceil() as usize).clamp(1, sample_count) - 1;
        percentiles.push((n, column[idx]));
    }

    let p_first = percentiles.first().unwrap().1;
    let p_last = percentiles.last().unwrap().1;
    let sqrt_ratio =
        ((n_schedule[n_schedule.len() - 1] as f64) / (n_schedule[0] as f64)).sqrt();
    let growth_ratio = if p_first > 0.0 { p_last / p_first } else { f64::INFINITY };

    let verdict = if p_last <= 1e-9 || growth_ratio <= 2.0 {
        BoundednessVerdict::CoboundaryLike
    } else if growth_ratio >= 0.5 * sqrt_ratio && growth_ratio <= 2.0 * sqrt_ratio {
        BoundednessVerdict::Divergent
    } else {
        BoundednessVerdict::Inconclusive
    };

    Ok(MeasurableTestReport {
        verdict,
        percentiles,
        growth_ratio,
        sqrt_ratio,
        sample_count,
        seed,
    })
}
