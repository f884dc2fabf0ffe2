//! Wall-time scaling of one online iteration and one batch epoch.
//!
//! Runs are timed sequentially, one after another, on uniform-square data.

use std::fmt::Write as _;
use std::time::Instant;

use crate::dissimilarity::squared_euclidean;
use crate::exec::Execution;
use crate::generators::generate_uniform_square;
use crate::som::{
    train_batch_median, train_batch_relational, train_online_euclidean, train_online_relational, AssignmentStrategy,
    InitMode, Initialization, QuadraticUpdate, TrainOptions, Variant,
};
use crate::topology::{BatchSchedule, MapGrid, NeighborhoodKernel, TrainingSchedule};
use crate::{Error, Result};

/// Online runs are timed at `ONLINE_STEPS` and `2 * ONLINE_STEPS` iterations;
/// the difference isolates the per-iteration cost from setup and the final
/// assignment.
pub const ONLINE_STEPS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub label: String,
    pub n: usize,
    pub units: usize,
    /// `iteration` or `epoch`.
    pub per: &'static str,
    pub median_seconds: f64,
}

/// Most square grid with exactly `units` cells.
pub fn grid_for(units: usize) -> Result<MapGrid> {
    if units == 0 {
        return Err(Error::InvalidParameter("U must be at least 1".into()));
    }
    let rows = (1..=units).take_while(|r| r * r <= units).filter(|r| units.is_multiple_of(*r)).last().unwrap_or(1);
    MapGrid::new(rows, units / rows)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn timed<F: FnMut() -> Result<()>>(mut f: F) -> Result<f64> {
    let start = Instant::now();
    f()?;
    Ok(start.elapsed().as_secs_f64())
}

/// Median wall time per iteration (online variants) or per epoch (batch
/// variants) at each `n`. The neighborhood covers the whole grid, so every
/// unit is updated at every step and the cost per step is constant. Batch
/// relational is measured under both assignment strategies.
pub fn benchmark_scaling(variant: Variant, ns: &[usize], units: usize, repetitions: usize, seed: u64) -> Result<Vec<ScalingRow>> {
    if ns.is_empty() || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("n list must be non-empty and strictly ascending".into()));
    }
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    let grid = grid_for(units)?;
    let radius = grid.whole_grid_radius();
    let kernel = NeighborhoodKernel::Hard;
    let init = Initialization::Draw(InitMode::RandomConvex);
    let options = |assignment| TrainOptions {
        checkpoints: Some(Vec::new()),
        assignment,
        quadratic_update: QuadraticUpdate::Recompute,
        execution: Execution::Sequential,
        ..TrainOptions::default()
    };

    let mut rows = Vec::new();
    let strategies: &[AssignmentStrategy] = match variant {
        Variant::BatchRelational => &[AssignmentStrategy::PerPair, AssignmentStrategy::Cached],
        _ => &[AssignmentStrategy::Cached],
    };
    for &strategy in strategies {
        let label = match (variant, strategy) {
            (Variant::BatchRelational, AssignmentStrategy::PerPair) => format!("{}/per-pair", variant.name()),
            (Variant::BatchRelational, AssignmentStrategy::Cached) => format!("{}/cached", variant.name()),
            _ => variant.name().to_string(),
        };
        let opts = options(strategy);
        for &n in ns {
            let points = generate_uniform_square(n, seed)?;
            let d = squared_euclidean(&points);
            let mut samples = Vec::with_capacity(repetitions);
            for _ in 0..repetitions {
                let secs = match variant {
                    Variant::OnlineRelational | Variant::EuclideanOnline => {
                        let run = |steps: usize| {
                            let schedule = TrainingSchedule::constant(steps, 0.1, radius)?;
                            timed(|| {
                                if variant == Variant::OnlineRelational {
                                    train_online_relational(&d, &grid, kernel, &schedule, &init, seed, &opts)?;
                                } else {
                                    train_online_euclidean(&points, &grid, kernel, &schedule, &init, seed, &opts)?;
                                }
                                Ok(())
                            })
                        };
                        let short = run(ONLINE_STEPS)?;
                        let long = run(2 * ONLINE_STEPS)?;
                        ((long - short) / ONLINE_STEPS as f64).max(0.0)
                    }
                    Variant::BatchRelational | Variant::BatchMedian => {
                        let schedule = BatchSchedule::fixed(1, radius)?;
                        timed(|| {
                            if variant == Variant::BatchRelational {
                                train_batch_relational(&d, &grid, kernel, &schedule, &init, seed, &opts)?;
                            } else {
                                train_batch_median(&d, &grid, kernel, &schedule, &init, seed, &opts)?;
                            }
                            Ok(())
                        })?
                    }
                };
                samples.push(secs);
            }
            rows.push(ScalingRow {
                label: label.clone(),
                n,
                units: grid.units(),
                per: if variant.is_batch() { "epoch" } else { "iteration" },
                median_seconds: median(samples),
            });
        }
    }
    Ok(rows)
}

/// Successive time ratios `t(n_{k+1}) / t(n_k)` within each label.
pub fn successive_ratios(rows: &[ScalingRow]) -> Vec<(String, usize, usize, f64)> {
    rows.windows(2)
        .filter(|w| w[0].label == w[1].label)
        .map(|w| (w[0].label.clone(), w[0].n, w[1].n, w[1].median_seconds / w[0].median_seconds))
        .collect()
}

pub fn format_scaling_csv(rows: &[ScalingRow]) -> String {
    let mut out = String::from("variant,n,units,per,median_seconds\n");
    for r in rows {
        writeln!(out, "{},{},{},{},{}", r.label, r.n, r.units, r.per, r.median_seconds).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_for_unit_counts() {
        assert_eq!(grid_for(100).unwrap(), MapGrid::new(10, 10).unwrap());
        assert_eq!(grid_for(12).unwrap(), MapGrid::new(3, 4).unwrap());
        assert_eq!(grid_for(7).unwrap(), MapGrid::new(1, 7).unwrap());
        assert!(grid_for(0).is_err());
    }

    #[test]
    fn small_benchmark_has_one_row_per_size() {
        let rows = benchmark_scaling(Variant::BatchRelational, &[10, 20], 4, 1, 0).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].label, "batch-relational/per-pair");
        assert_eq!(rows[2].label, "batch-relational/cached");
        assert_eq!(successive_ratios(&rows).len(), 2);
        let csv = format_scaling_csv(&rows);
        assert_eq!(csv.lines().count(), 5);

        let rows = benchmark_scaling(Variant::OnlineRelational, &[10, 20], 4, 1, 0).unwrap();
        assert!(rows.iter().all(|r| r.per == "iteration" && r.median_seconds >= 0.0));
    }

    #[test]
    fn rejects_unsorted_sizes() {
        assert!(benchmark_scaling(Variant::OnlineRelational, &[20, 10], 4, 1, 0).is_err());
        assert!(benchmark_scaling(Variant::OnlineRelational, &[10], 4, 0, 0).is_err());
    }
}
