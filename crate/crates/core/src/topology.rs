//! Grid geometry, neighborhood kernels and annealing schedules shared by all
//! map variants.

use crate::error::{Error, Result};

/// Rectangular grid of `rows x cols` units. Unit `u` sits at
/// `(u / cols, u % cols)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MapGrid {
    rows: usize,
    cols: usize,
}

impl MapGrid {
    pub fn new(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidParameter(format!("grid {rows}x{cols} has no units")));
        }
        Ok(Self { rows, cols })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn units(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn coord(&self, u: usize) -> (usize, usize) {
        (u / self.cols, u % self.cols)
    }

    #[inline]
    pub fn unit(&self, row: usize, col: usize) -> usize {
        row * self.cols + col
    }

    /// Manhattan distance between unit coordinates.
    #[inline]
    pub fn distance(&self, u: usize, v: usize) -> usize {
        let (r1, c1) = self.coord(u);
        let (r2, c2) = self.coord(v);
        r1.abs_diff(r2) + c1.abs_diff(c2)
    }

    /// Largest grid distance between two units.
    pub fn diameter(&self) -> usize {
        (self.rows - 1) + (self.cols - 1)
    }

    /// Radius that covers the whole grid from any unit.
    pub fn whole_grid_radius(&self) -> f64 {
        (self.rows + self.cols) as f64
    }

    /// Grid-adjacent units (distance 1) in the order up, right, down, left.
    pub fn neighbors(&self, u: usize) -> [Option<usize>; 4] {
        let (r, c) = self.coord(u);
        [
            (r > 0).then(|| self.unit(r - 1, c)),
            (c + 1 < self.cols).then(|| self.unit(r, c + 1)),
            (r + 1 < self.rows).then(|| self.unit(r + 1, c)),
            (c > 0).then(|| self.unit(r, c - 1)),
        ]
    }

    /// Each adjacent pair once, as `(u, v)` with `u < v`.
    pub fn adjacent_pairs(&self) -> Vec<(usize, usize)> {
        let mut pairs = Vec::new();
        for u in 0..self.units() {
            let [_, right, down, _] = self.neighbors(u);
            pairs.extend(right.map(|v| (u, v)));
            pairs.extend(down.map(|v| (u, v)));
        }
        pairs
    }
}

/// Smallest radius the Gaussian kernel uses, so that radius 0 stays defined.
pub const GAUSSIAN_MIN_RADIUS: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NeighborhoodKernel {
    /// 1 within the radius, 0 outside.
    #[default]
    Hard,
    Gaussian,
}

impl NeighborhoodKernel {
    #[inline]
    pub fn weight(self, grid_distance: usize, radius: f64) -> f64 {
        let d = grid_distance as f64;
        match self {
            NeighborhoodKernel::Hard => {
                if d <= radius {
                    1.0
                } else {
                    0.0
                }
            }
            NeighborhoodKernel::Gaussian => {
                let r = radius.max(GAUSSIAN_MIN_RADIUS);
                (-(d * d) / (2.0 * r * r)).exp()
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            NeighborhoodKernel::Hard => "hard",
            NeighborhoodKernel::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for NeighborhoodKernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hard" => Ok(NeighborhoodKernel::Hard),
            "gaussian" => Ok(NeighborhoodKernel::Gaussian),
            other => Err(Error::InvalidParameter(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Neighborhood weight between units `u` and `v` at the given radius.
pub fn kernel_value(grid: &MapGrid, kernel: NeighborhoodKernel, u: usize, v: usize, radius: f64) -> f64 {
    kernel.weight(grid.distance(u, v), radius)
}

/// Learning rate at the last iteration is `alpha0 / (1 + ALPHA_DECAY)`.
pub const ALPHA_DECAY: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Curve {
    /// `alpha0 / (1 + 9 t / T)` and a staircase radius from `max_radius` to 0.
    Annealed { alpha0: f64, plateaus: usize, max_radius: f64 },
    Constant { alpha: f64, radius: f64 },
}

/// Learning-rate and radius curves of an online run over `T` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSchedule {
    iterations: usize,
    curve: Curve,
}

impl TrainingSchedule {
    /// The default annealing: the radius steps down linearly from the whole
    /// grid to 0 over `plateaus` equal stages, and the learning rate decays
    /// like `1/t` to a tenth of `alpha0`.
    pub fn annealed(iterations: usize, alpha0: f64, plateaus: usize, grid: &MapGrid) -> Result<Self> {
        if !(alpha0 > 0.0 && alpha0 <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha0 = {alpha0} must lie in (0, 1]")));
        }
        if plateaus < 2 {
            return Err(Error::InvalidParameter("at least 2 radius plateaus are needed".into()));
        }
        if iterations < plateaus {
            return Err(Error::InvalidParameter(format!(
                "{iterations} iterations cannot hold {plateaus} plateaus"
            )));
        }
        Ok(Self {
            iterations,
            curve: Curve::Annealed { alpha0, plateaus, max_radius: grid.whole_grid_radius() },
        })
    }

    /// Fixed learning rate and radius.
    pub fn constant(iterations: usize, alpha: f64, radius: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1]")));
        }
        check_radius(radius)?;
        Ok(Self { iterations, curve: Curve::Constant { alpha, radius } })
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// `(alpha, radius)` at iteration `t` in `1..=T`.
    pub fn at(&self, t: usize) -> Result<(f64, f64)> {
        if t == 0 || t > self.iterations {
            return Err(Error::IterationOutOfRange { t, total: self.iterations });
        }
        Ok(self.at_unchecked(t))
    }

    #[inline]
    pub(crate) fn at_unchecked(&self, t: usize) -> (f64, f64) {
        match self.curve {
            Curve::Constant { alpha, radius } => (alpha, radius),
            Curve::Annealed { alpha0, plateaus, max_radius } => {
                let total = self.iterations;
                let alpha = alpha0 / (1.0 + ALPHA_DECAY * t as f64 / total as f64);
                let stage = ((t - 1) * plateaus / total).min(plateaus - 1);
                let steps = (plateaus - 1) as f64;
                let radius = (max_radius * (plateaus - 1 - stage) as f64 / steps).round();
                (alpha, radius)
            }
        }
    }

    /// Short description used in run metadata.
    pub fn describe(&self) -> String {
        match self.curve {
            Curve::Annealed { alpha0, plateaus, max_radius } => format!(
                "annealed(T={}, alpha0={alpha0}, plateaus={plateaus}, max_radius={max_radius})",
                self.iterations
            ),
            Curve::Constant { alpha, radius } => {
                format!("constant(T={}, alpha={alpha}, radius={radius})", self.iterations)
            }
        }
    }
}

/// Kernel radius per epoch of a batch run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchSchedule {
    epochs: usize,
    radius: BatchRadius,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum BatchRadius {
    /// Linear from the start value at epoch 1 down to 0 at the last epoch.
    Linear(f64),
    Fixed(f64),
}

impl BatchSchedule {
    pub fn linear(epochs: usize, start_radius: f64) -> Result<Self> {
        check_radius(start_radius)?;
        Ok(Self { epochs, radius: BatchRadius::Linear(start_radius) })
    }

    /// Linear schedule starting from the whole-grid radius.
    pub fn whole_grid(epochs: usize, grid: &MapGrid) -> Self {
        Self { epochs, radius: BatchRadius::Linear(grid.whole_grid_radius()) }
    }

    pub fn fixed(epochs: usize, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self { epochs, radius: BatchRadius::Fixed(radius) })
    }

    pub fn epochs(&self) -> usize {
        self.epochs
    }

    /// Radius at epoch `e` in `1..=epochs`.
    pub fn radius(&self, e: usize) -> Result<f64> {
        if e == 0 || e > self.epochs {
            return Err(Error::IterationOutOfRange { t: e, total: self.epochs });
        }
        Ok(self.radius_unchecked(e))
    }

    pub(crate) fn radius_unchecked(&self, e: usize) -> f64 {
        match self.radius {
            BatchRadius::Fixed(r) => r,
            BatchRadius::Linear(_) if self.epochs <= 1 => 0.0,
            BatchRadius::Linear(start) => start * (self.epochs - e) as f64 / (self.epochs - 1) as f64,
        }
    }

    pub fn describe(&self) -> String {
        match self.radius {
            BatchRadius::Linear(r) => format!("linear(epochs={}, start_radius={r})", self.epochs),
            BatchRadius::Fixed(r) => format!("fixed(epochs={}, radius={r})", self.epochs),
        }
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius >= 0.0 && radius.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("radius {radius} must be finite and >= 0")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_coordinates_are_a_bijection() {
        let g = MapGrid::new(3, 4).unwrap();
        let mut seen = std::collections::HashSet::new();
        for u in 0..g.units() {
            let (r, c) = g.coord(u);
            assert_eq!(g.unit(r, c), u);
            assert!(seen.insert((r, c)));
        }
        assert!(MapGrid::new(0, 3).is_err());
        assert_eq!(g.adjacent_pairs().len(), 3 * 3 + 2 * 4);
    }

    #[test]
    fn kernel_examples() {
        let g = MapGrid::new(10, 10).unwrap();
        for kernel in [NeighborhoodKernel::Hard, NeighborhoodKernel::Gaussian] {
            for r in [0.0, 1.0, 7.5] {
                assert_eq!(kernel_value(&g, kernel, 12, 12, r), 1.0);
            }
        }
        assert_eq!(kernel_value(&g, NeighborhoodKernel::Hard, 0, 1, 0.0), 0.0);
        for u in 0..100 {
            for v in 0..100 {
                assert_eq!(kernel_value(&g, NeighborhoodKernel::Hard, u, v, 20.0), 1.0);
            }
        }
        let gauss = kernel_value(&g, NeighborhoodKernel::Gaussian, 0, 1, 0.0);
        assert!((gauss - (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn kernel_is_symmetric_and_bounded() {
        let g = MapGrid::new(4, 7).unwrap();
        for kernel in [NeighborhoodKernel::Hard, NeighborhoodKernel::Gaussian] {
            for r in [0.0, 0.3, 2.0, 5.5] {
                for u in 0..g.units() {
                    for v in 0..g.units() {
                        let a = kernel_value(&g, kernel, u, v, r);
                        assert_eq!(a, kernel_value(&g, kernel, v, u, r));
                        assert!((0.0..=1.0).contains(&a));
                    }
                }
            }
        }
    }

    #[test]
    fn schedule_endpoints() {
        let g = MapGrid::new(10, 10).unwrap();
        let s = TrainingSchedule::annealed(2500, 0.5, 5, &g).unwrap();
        let (a1, r1) = s.at(1).unwrap();
        assert_eq!(r1, 20.0);
        assert!(r1 >= g.diameter() as f64);
        assert!(a1 <= 0.5 && a1 > 0.0);
        let (a_last, r_last) = s.at(2500).unwrap();
        assert_eq!(r_last, 0.0);
        assert!((a_last - 0.05).abs() < 1e-15);
        assert_eq!(s.at(0).unwrap_err(), Error::IterationOutOfRange { t: 0, total: 2500 });
        assert!(s.at(2501).is_err());
    }

    #[test]
    fn schedule_invariants() {
        let g = MapGrid::new(5, 3).unwrap();
        for &(total, plateaus) in &[(2500usize, 5usize), (7, 3), (101, 4), (2, 2)] {
            let s = TrainingSchedule::annealed(total, 0.9, plateaus, &g).unwrap();
            let mut prev = (f64::INFINITY, f64::INFINITY);
            let mut boundaries = vec![1];
            for t in 1..=total {
                let (a, r) = s.at(t).unwrap();
                assert!(a > 0.0 && a <= 0.9 && a < prev.0);
                assert!(r <= prev.1);
                if r < prev.1 && t > 1 {
                    boundaries.push(t);
                }
                assert!(a * NeighborhoodKernel::Hard.weight(0, r) <= 1.0);
                prev = (a, r);
            }
            assert_eq!(prev.1, 0.0);
            assert_eq!(boundaries.len(), plateaus);
            boundaries.push(total + 1);
            let len = total as f64 / plateaus as f64;
            for w in boundaries.windows(2) {
                assert!(((w[1] - w[0]) as f64 - len).abs() <= 1.0);
            }
        }
    }

    #[test]
    fn invalid_schedules() {
        let g = MapGrid::new(2, 2).unwrap();
        assert!(TrainingSchedule::annealed(10, 1.5, 5, &g).is_err());
        assert!(TrainingSchedule::annealed(10, 0.5, 1, &g).is_err());
        assert!(TrainingSchedule::annealed(3, 0.5, 5, &g).is_err());
        assert!(TrainingSchedule::constant(3, 0.0, 1.0).is_err());
        assert!(TrainingSchedule::constant(3, 1.0, -1.0).is_err());
    }

    #[test]
    fn batch_radius_is_linear_down_to_zero() {
        let g = MapGrid::new(10, 10).unwrap();
        let s = BatchSchedule::whole_grid(21, &g);
        assert_eq!(s.radius(1).unwrap(), 20.0);
        assert_eq!(s.radius(11).unwrap(), 10.0);
        assert_eq!(s.radius(21).unwrap(), 0.0);
        assert!(s.radius(22).is_err());
        let f = BatchSchedule::fixed(4, 0.0).unwrap();
        assert_eq!(f.radius(3).unwrap(), 0.0);
        assert_eq!(BatchSchedule::fixed(4, 2.5).unwrap().radius(1).unwrap(), 2.5);
    }

    proptest::proptest! {
        #[test]
        fn grid_distance_is_a_metric(rows in 1usize..8, cols in 1usize..8, a in 0usize..64, b in 0usize..64, c in 0usize..64) {
            let g = MapGrid::new(rows, cols).unwrap();
            let (a, b, c) = (a % g.units(), b % g.units(), c % g.units());
            proptest::prop_assert_eq!(g.distance(a, b), g.distance(b, a));
            proptest::prop_assert_eq!(g.distance(a, b) == 0, a == b);
            proptest::prop_assert!(g.distance(a, c) <= g.distance(a, b) + g.distance(b, c));
            proptest::prop_assert!(g.distance(a, b) <= g.diameter());
        }

        #[test]
        fn annealed_steps_stay_in_unit_interval(
            rows in 1usize..12, cols in 1usize..12, extra in 0usize..500, alpha0 in 0.01f64..=1.0, gaussian: bool
        ) {
            let g = MapGrid::new(rows, cols).unwrap();
            let plateaus = rows + cols + 1;
            let s = TrainingSchedule::annealed(plateaus + extra, alpha0, plateaus, &g).unwrap();
            let kernel = if gaussian { NeighborhoodKernel::Gaussian } else { NeighborhoodKernel::Hard };
            let mut last = (f64::INFINITY, f64::INFINITY);
            for t in 1..=s.iterations() {
                let (alpha, radius) = s.at(t).unwrap();
                proptest::prop_assert!(alpha <= last.0 && radius <= last.1);
                for d in 0..=g.diameter() {
                    let step = alpha * kernel.weight(d, radius);
                    proptest::prop_assert!((0.0..=1.0).contains(&step));
                }
                last = (alpha, radius);
            }
            proptest::prop_assert_eq!(last.1, 0.0);
        }
    }
}
