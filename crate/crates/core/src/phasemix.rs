//! Coarse-grained ergodic mixing on a discrete phase space.
//!
//! The dynamics is the baker transformation realized as an exact bit
//! shuffle of the (x, y) cell index, so the fine-grained map is a
//! permutation: perfectly measure-preserving and exactly reversible.
//! Coarse-graining averages the measure over b×b blocks. Without it the
//! Gibbs entropy −Σ w ln w is constant to the last bit; with it the
//! entropy grows monotonically toward ln N², and two distinguishable
//! initial measures converge to nearly the same equilibrium — forward
//! evolution is well-posed while retrodiction is not.

use crate::error::{Error, Result};

/// Probability measure on an N×N lattice, N a power of two.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    n: usize,
    weights: Vec<f64>,
}

impl PhaseGrid {
    pub fn new(n: usize, weights: Vec<f64>) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::Validation(format!(
                "lattice side {n} must be a power of two"
            )));
        }
        if weights.len() != n * n {
            return Err(Error::Dimension(format!(
                "expected {} weights, got {}",
                n * n,
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::Validation("weights must be finite and ≥ 0".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::Validation(format!(
                "weights sum to {total}, must be 1 within 1e-12"
            )));
        }
        Ok(Self { n, weights })
    }

    /// All mass on one cell.
    pub fn single_cell(n: usize, x: usize, y: usize) -> Result<Self> {
        if x >= n || y >= n {
            return Err(Error::Validation(format!("cell ({x}, {y}) outside {n}×{n}")));
        }
        let mut weights = vec![0.0; n * n];
        weights[y * n + x] = 1.0;
        Self::new(n, weights)
    }

    /// The uniform (equilibrium) measure.
    pub fn uniform(n: usize) -> Result<Self> {
        let w = 1.0 / (n * n) as f64;
        Self::new(n, vec![w; n * n])
    }

    pub fn side(&self) -> usize {
        self.n
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.n + x]
    }

    /// Number of cells with nonzero weight.
    pub fn support(&self) -> usize {
        self.weights.iter().filter(|&&w| w > 0.0).count()
    }

    /// Gibbs entropy S = −Σ w ln w; equals ln(support) on measures that
    /// are uniform over their support, i.e. the log phase volume.
    pub fn entropy(&self) -> f64 {
        self.weights
            .iter()
            .filter(|&&w| w > 0.0)
            .map(|&w| -w * w.ln())
            .sum::<f64>()
            .max(0.0)
    }

    /// Total-variation distance (1/2)·Σ|w − v|.
    pub fn tv_distance(&self, other: &PhaseGrid) -> Result<f64> {
        if self.n != other.n {
            return Err(Error::Dimension("grids of unequal side".into()));
        }
        Ok(0.5
            * self
                .weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>())
    }
}

// Baker step on cell indices, k = log2(N):
//   x' = (x << 1 | y&1) mod N        (stretch x, feed in y's low bit)
//   y' = (y >> 1) | (top bit of x)   (squash y, push x's top bit on top)
// A bijection; the inverse undoes the shifts.
fn baker_forward(n: usize, x: usize, y: usize) -> (usize, usize) {
    let k = n.trailing_zeros();
    let xp = ((x << 1) & (n - 1)) | (y & 1);
    let yp = (y >> 1) | ((x >> (k - 1)) << (k - 1));
    (xp, yp)
}

fn baker_backward(n: usize, x: usize, y: usize) -> (usize, usize) {
    let k = n.trailing_zeros();
    let xin = (x >> 1) | ((y >> (k - 1)) << (k - 1));
    let yin = ((y << 1) & (n - 1)) | (x & 1);
    (xin, yin)
}

/// One exact baker step: weights are permuted, the measure and the
/// support count are preserved bit-for-bit.
pub fn apply_map(grid: &PhaseGrid) -> PhaseGrid {
    let n = grid.n;
    let mut weights = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            let (xp, yp) = baker_forward(n, x, y);
            weights[yp * n + xp] = grid.weights[y * n + x];
        }
    }
    PhaseGrid { n, weights }
}

/// The inverse permutation; `apply_inverse(apply_map(g)) == g` exactly.
pub fn apply_inverse(grid: &PhaseGrid) -> PhaseGrid {
    let n = grid.n;
    let mut weights = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            let (xp, yp) = baker_backward(n, x, y);
            weights[yp * n + xp] = grid.weights[y * n + x];
        }
    }
    PhaseGrid { n, weights }
}

/// Averages the measure uniformly over each b×b block. Total weight is
/// preserved; the support never shrinks and the entropy never decreases
/// (averaging is doubly stochastic).
pub fn coarsen(grid: &PhaseGrid, b: usize) -> Result<PhaseGrid> {
    let n = grid.n;
    if b == 0 || !n.is_multiple_of(b) {
        return Err(Error::Validation(format!(
            "block size {b} does not divide lattice side {n}"
        )));
    }
    if b == 1 {
        return Ok(grid.clone());
    }
    let mut weights = vec![0.0; n * n];
    let cells = (b * b) as f64;
    for by in (0..n).step_by(b) {
        for bx in (0..n).step_by(b) {
            let mut total = 0.0;
            for dy in 0..b {
                for dx in 0..b {
                    total += grid.weights[(by + dy) * n + (bx + dx)];
                }
            }
            let avg = total / cells;
            for dy in 0..b {
                for dx in 0..b {
                    weights[(by + dy) * n + (bx + dx)] = avg;
                }
            }
        }
    }
    let out = PhaseGrid { n, weights };
    debug_assert!(out.entropy() >= grid.entropy() - 1e-12);
    debug_assert!(out.support() >= grid.support());
    Ok(out)
}

/// Entropy and support history of a mixing run.
#[derive(Debug, Clone)]
pub struct MixingRun {
    pub steps: usize,
    pub coarsen_block: usize,
    pub entropy_series: Vec<f64>,
    pub support_series: Vec<usize>,
    pub final_grid: PhaseGrid,
}

/// Alternates baker steps with block averaging every `coarsen_every`
/// steps (b = 0 disables coarsening entirely). Series have steps + 1
/// entries, starting at the initial grid.
pub fn run_mixing(
    initial: &PhaseGrid,
    steps: usize,
    b: usize,
    coarsen_every: usize,
) -> Result<MixingRun> {
    if b > 0 && !initial.n.is_multiple_of(b) {
        return Err(Error::Validation(format!(
            "block size {b} does not divide lattice side {}",
            initial.n
        )));
    }
    if b > 0 && coarsen_every == 0 {
        return Err(Error::Validation("coarsen_every must be ≥ 1 when b > 0".into()));
    }
    let mut grid = initial.clone();
    let mut entropy_series = Vec::with_capacity(steps + 1);
    let mut support_series = Vec::with_capacity(steps + 1);
    entropy_series.push(grid.entropy());
    support_series.push(grid.support());
    for step in 1..=steps {
        grid = apply_map(&grid);
        if b > 0 && step % coarsen_every == 0 {
            grid = coarsen(&grid, b)?;
        }
        entropy_series.push(grid.entropy());
        support_series.push(grid.support());
    }
    Ok(MixingRun {
        steps,
        coarsen_block: b,
        entropy_series,
        support_series,
        final_grid: grid,
    })
}

/// Least-squares slope of the first `points` entries of a series against
/// the step index. Used for the early-phase entropy growth rate.
pub fn lsq_slope(series: &[f64], points: usize) -> f64 {
    let n = points.min(series.len());
    assert!(n >= 2, "slope needs at least two points");
    let xs: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let x_mean = xs.iter().sum::<f64>() / n as f64;
    let y_mean = series[..n].iter().sum::<f64>() / n as f64;
    let num: f64 = xs
        .iter()
        .zip(&series[..n])
        .map(|(x, y)| (x - x_mean) * (y - y_mean))
        .sum();
    let den: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    num / den
}

/// Outcome of evolving two distinct initial measures forward under the
/// same (optionally coarsened) dynamics.
#[derive(Debug, Clone)]
pub struct RetrodictionReport {
    pub initial_tv_distance: f64,
    pub final_tv_distance: f64,
    pub steps: usize,
    pub coarsen_block: usize,
    pub tv_series: Vec<f64>,
}

/// Runs both grids forward with per-step coarsening and reports how the
/// total-variation distance between them collapses (b ≥ 2) or is exactly
/// preserved (b = 0, a permutation isometry).
pub fn retrodiction_demo(
    initial_a: &PhaseGrid,
    initial_b: &PhaseGrid,
    steps: usize,
    b: usize,
) -> Result<RetrodictionReport> {
    if initial_a.n != initial_b.n {
        return Err(Error::Dimension("grids of unequal side".into()));
    }
    let mut ga = initial_a.clone();
    let mut gb = initial_b.clone();
    let mut tv_series = Vec::with_capacity(steps + 1);
    tv_series.push(ga.tv_distance(&gb)?);
    for _ in 0..steps {
        ga = apply_map(&ga);
        gb = apply_map(&gb);
        if b > 0 {
            ga = coarsen(&ga, b)?;
            gb = coarsen(&gb, b)?;
        }
        tv_series.push(ga.tv_distance(&gb)?);
    }
    Ok(RetrodictionReport {
        initial_tv_distance: tv_series[0],
        final_tv_distance: *tv_series.last().expect("nonempty"),
        steps,
        coarsen_block: b,
        tv_series,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_power_of_two() {
        assert!(PhaseGrid::single_cell(48, 0, 0).is_err());
        assert!(PhaseGrid::single_cell(64, 0, 0).is_ok());
    }

    #[test]
    fn forward_backward_is_exact_identity() {
        let start = PhaseGrid::single_cell(64, 17, 42).unwrap();
        let mut g = start.clone();
        for _ in 0..100 {
            g = apply_map(&g);
        }
        assert_ne!(g, start);
        for _ in 0..100 {
            g = apply_inverse(&g);
        }
        assert_eq!(g, start); // bit-for-bit
    }

    #[test]
    fn support_and_measure_invariant_under_map() {
        let mut g = PhaseGrid::single_cell(32, 5, 9).unwrap();
        for _ in 0..40 {
            g = apply_map(&g);
            assert_eq!(g.support(), 1);
            assert!((g.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-15);
        }
    }

    #[test]
    fn uniform_grid_is_a_fixed_point() {
        let g = PhaseGrid::uniform(16).unwrap();
        assert_eq!(apply_map(&g), g);
        assert!((g.entropy() - (256.0_f64).ln()).abs() <= 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let single = PhaseGrid::single_cell(4, 1, 1).unwrap();
        assert_eq!(single.entropy(), 0.0);
        // uniform on 4 of 16 cells → ln 4
        let mut w = vec![0.0; 16];
        w[..4].fill(0.25);
        let quarter = PhaseGrid::new(4, w).unwrap();
        assert!((quarter.entropy() - 4.0_f64.ln()).abs() <= 1e-15);
    }

    #[test]
    fn coarsen_block_average() {
        let g = PhaseGrid::single_cell(4, 0, 0).unwrap();
        let c = coarsen(&g, 2).unwrap();
        assert_eq!(c.support(), 4);
        for y in 0..2 {
            for x in 0..2 {
                assert!((c.weight(x, y) - 0.25).abs() <= 1e-15);
            }
        }
        // b = 1 is the identity
        assert_eq!(coarsen(&g, 1).unwrap(), g);
        // b must divide N
        assert!(coarsen(&g, 3).is_err());
    }

    #[test]
    fn coarsen_twice_on_small_grid() {
        // direct evaluation on a 4×4 grid: two passes at b = 2 keep the
        // blockwise-average structure and never shrink the support
        let mut w = vec![0.0; 16];
        w[0] = 0.5;
        w[5] = 0.5;
        let g = PhaseGrid::new(4, w).unwrap();
        let once = coarsen(&g, 2).unwrap();
        let twice = coarsen(&once, 2).unwrap();
        assert_eq!(once, twice); // block averaging is idempotent at fixed b
        assert!(twice.support() >= g.support());
        assert!((twice.weights().iter().sum::<f64>() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn fine_grained_entropy_is_exactly_constant() {
        let g = PhaseGrid::single_cell(64, 3, 7).unwrap();
        let run = run_mixing(&g, 100, 0, 1).unwrap();
        for &s in &run.entropy_series {
            assert!((s - run.entropy_series[0]).abs() <= 1e-12);
        }
    }

    #[test]
    fn coarsened_entropy_grows_to_saturation() {
        let g = PhaseGrid::single_cell(64, 3, 7).unwrap();
        let run = run_mixing(&g, 30, 2, 1).unwrap();
        let max_s = (64.0_f64 * 64.0).ln();
        for w in run.entropy_series.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        assert!(*run.entropy_series.last().unwrap() <= max_s + 1e-12);
        // long-run convergence to the equilibrium value
        assert!((run.entropy_series.last().unwrap() - max_s).abs() <= 1e-3);
    }

    #[test]
    fn saturation_step_reference_run() {
        // reference run of this dynamics, frozen: a single-cell start at
        // N = 64, b = 2, coarsen_every = 1 first reaches 0.95·ln N² at
        // step 11 (full saturation at the same step)
        let g = PhaseGrid::single_cell(64, 3, 7).unwrap();
        let run = run_mixing(&g, 20, 2, 1).unwrap();
        let max_s = (64.0_f64 * 64.0).ln();
        let first_hit = run
            .entropy_series
            .iter()
            .position(|&s| s >= 0.95 * max_s)
            .expect("saturates within 20 steps");
        assert_eq!(first_hit, 11);
    }

    #[test]
    fn early_slope_near_one_bit_per_step() {
        let g = PhaseGrid::single_cell(64, 3, 7).unwrap();
        let run = run_mixing(&g, 10, 2, 1).unwrap();
        let slope = lsq_slope(&run.entropy_series, 6);
        let ln2 = 2.0_f64.ln();
        assert!(
            (slope / ln2 - 1.0).abs() <= 0.2,
            "slope {slope} not within 20% of ln 2"
        );
        // b = 4 expands faster early on; recorded, not asserted equal
        // (observed ≈ 1.6·ln 2 for this start)
        let run4 = run_mixing(&g, 10, 4, 1).unwrap();
        assert!(lsq_slope(&run4.entropy_series, 6) > 0.0);
    }

    #[test]
    fn disjoint_starts_converge_under_coarsening() {
        // reference run, frozen: TV distance 1 → 0.0 after 30 steps
        let a = PhaseGrid::single_cell(64, 3, 7).unwrap();
        let b = PhaseGrid::single_cell(64, 40, 21).unwrap();
        let rep = retrodiction_demo(&a, &b, 30, 2).unwrap();
        assert_eq!(rep.initial_tv_distance, 1.0);
        assert!(rep.final_tv_distance <= 0.05);
        assert!(rep.final_tv_distance <= 1e-12); // observed exact equilibrium
    }

    #[test]
    fn retrodiction_identical_inputs() {
        let g = PhaseGrid::single_cell(32, 1, 1).unwrap();
        let rep = retrodiction_demo(&g, &g.clone(), 10, 2).unwrap();
        assert_eq!(rep.final_tv_distance, 0.0);
    }

    #[test]
    fn permutations_preserve_distinguishability() {
        let a = PhaseGrid::single_cell(32, 1, 1).unwrap();
        let b = PhaseGrid::single_cell(32, 20, 9).unwrap();
        let rep = retrodiction_demo(&a, &b, 25, 0).unwrap();
        assert_eq!(rep.initial_tv_distance, 1.0);
        assert_eq!(rep.final_tv_distance, 1.0);
    }
}
