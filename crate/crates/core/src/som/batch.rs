use super::{
    argmin, implicit_distance, mean, Assigner, Checkpoint, Data, Initialization, PrototypeCoefficients, Prototypes,
    Snapshot, TrainOptions, TrainedMap, Variant,
};
use crate::dissimilarity::DissimilarityMatrix;
use crate::error::Result;
use crate::exec::{dot, Execution};
use crate::topology::{BatchSchedule, MapGrid, NeighborhoodKernel};

/// How a batch relational epoch evaluates observation-to-prototype distances.
/// Both strategies give bit-identical assignments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AssignmentStrategy {
    /// Quadratic terms computed once per unit and epoch, `O(U n^2)`.
    #[default]
    Cached,
    /// Each observation-unit pair evaluated from scratch through
    /// [`implicit_distance`], `O(U n^3)`.
    PerPair,
}

impl std::str::FromStr for AssignmentStrategy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cached" => Ok(AssignmentStrategy::Cached),
            "per-pair" => Ok(AssignmentStrategy::PerPair),
            other => Err(crate::Error::InvalidParameter(format!("unknown assignment strategy `{other}`"))),
        }
    }
}

fn assign_relational(
    d: &DissimilarityMatrix,
    coef: &PrototypeCoefficients,
    strategy: AssignmentStrategy,
    exec: Execution,
) -> (Vec<usize>, Vec<f64>) {
    match strategy {
        AssignmentStrategy::Cached => {
            let protos = Prototypes::Coefficients(coef.clone());
            let assigner = Assigner::new(Data::Dissimilarity(d), &protos, exec).expect("shapes checked by caller");
            assigner.assign(d.n(), exec)
        }
        AssignmentStrategy::PerPair => {
            let units = coef.units();
            let pairs = exec.map_range(d.n(), |i| {
                let dist: Vec<f64> = (0..units)
                    .map(|u| implicit_distance(d, coef.row(u), i).expect("shapes checked by caller"))
                    .collect();
                let u = argmin(&dist);
                (u, dist[u])
            });
            pairs.into_iter().unzip()
        }
    }
}

/// Kernel weights between every pair of units at one radius, row-major.
fn kernel_table(grid: &MapGrid, kernel: NeighborhoodKernel, radius: f64) -> Vec<f64> {
    let units = grid.units();
    let mut table = vec![0.0; units * units];
    for u in 0..units {
        for v in 0..units {
            table[u * units + v] = kernel.weight(grid.distance(u, v), radius);
        }
    }
    table
}

/// Epoch bookkeeping shared by both batch trainers.
struct EpochLoop {
    checkpoints: Vec<usize>,
    next_cp: usize,
    history: Vec<Checkpoint>,
    snapshots: Vec<Snapshot>,
    keep_snapshots: bool,
}

impl EpochLoop {
    fn new(options: &TrainOptions, epochs: usize) -> Self {
        Self {
            checkpoints: options.checkpoint_set(epochs, true),
            next_cp: 0,
            history: Vec::new(),
            snapshots: Vec::new(),
            keep_snapshots: options.keep_snapshots,
        }
    }

    fn wants(&self, e: usize) -> bool {
        self.checkpoints.get(self.next_cp) == Some(&e)
    }

    fn record(&mut self, e: usize, qe: f64, protos: impl FnOnce() -> Prototypes) {
        self.history.push(Checkpoint { iteration: e, quantization_error: qe });
        if self.keep_snapshots {
            self.snapshots.push(Snapshot { iteration: e, prototypes: protos() });
        }
        self.next_cp += 1;
    }
}

/// Batch relational SOM.
///
/// Each epoch assigns every observation to its nearest prototype, then sets
/// `beta_ui = K(f(x_i), u) / sum_j K(f(x_j), u)`. A unit with no kernel mass
/// keeps its coefficients. Once the assignments repeat at an unchanged radius
/// the state is a fixed point and epochs at that radius do no work.
pub fn train_batch_relational(
    d: &DissimilarityMatrix,
    grid: &MapGrid,
    kernel: NeighborhoodKernel,
    schedule: &BatchSchedule,
    init: &Initialization,
    seed: u64,
    options: &TrainOptions,
) -> Result<TrainedMap> {
    let n = d.n();
    let units = grid.units();
    let exec = options.execution;
    let strategy = options.assignment;
    let mut coef = init.resolve(n, units, seed)?;
    let epochs = schedule.epochs();
    let mut lp = EpochLoop::new(options, epochs);

    let (mut assignment, mut dist) = assign_relational(d, &coef, strategy, exec);
    if lp.wants(0) {
        lp.record(0, mean(&dist), || Prototypes::Coefficients(coef.clone()));
    }

    let mut empty = 0;
    let mut converged_epoch = None;
    // assignment and radius that produced the current coefficients
    let mut previous: Option<(Vec<usize>, f64)> = None;
    for e in 1..=epochs {
        let radius = schedule.radius_unchecked(e);
        let fixed = matches!(&previous, Some((prev, r)) if *prev == assignment && *r == radius);
        if !fixed {
            let table = kernel_table(grid, kernel, radius);
            let assign = &assignment;
            let mut skipped = vec![false; units];
            exec.for_each_chunk_zip_mut(coef.values_mut(), n, &mut skipped, |u, beta, skip| {
                let weights = &table[u * units..(u + 1) * units];
                let mass: f64 = assign.iter().map(|&f| weights[f]).sum();
                if mass == 0.0 {
                    *skip = true;
                    return;
                }
                for (b, &f) in beta.iter_mut().zip(assign) {
                    *b = weights[f] / mass;
                }
            });
            empty += skipped.iter().filter(|&&s| s).count();
            previous = Some((assignment.clone(), radius));
            (assignment, dist) = assign_relational(d, &coef, strategy, exec);
        } else if (e..=epochs).all(|k| schedule.radius_unchecked(k) == radius) {
            converged_epoch.get_or_insert(e - 1);
        }
        if lp.wants(e) {
            lp.record(e, mean(&dist), || Prototypes::Coefficients(coef.clone()));
        }
    }

    Ok(TrainedMap {
        variant: Variant::BatchRelational,
        grid: *grid,
        kernel,
        prototypes: Prototypes::Coefficients(coef),
        assignment,
        history: lp.history,
        snapshots: lp.snapshots,
        samples: Vec::new(),
        winners: Vec::new(),
        seed,
        schedule: schedule.describe(),
        negative_distances: 0,
        empty_kernel_mass: empty,
        converged_epoch,
    })
}

fn assign_medoids(d: &DissimilarityMatrix, medoids: &[usize], exec: Execution) -> (Vec<usize>, Vec<f64>) {
    let pairs = exec.map_range(d.n(), |i| {
        let dist: Vec<f64> = medoids.iter().map(|&m| d.get(i, m)).collect();
        let u = argmin(&dist);
        (u, dist[u])
    });
    pairs.into_iter().unzip()
}

/// Observation minimizing `sum_i w_i d_ij`; `None` when all weights are 0.
fn weighted_medoid(d: &DissimilarityMatrix, weights: &[f64]) -> Option<usize> {
    if weights.iter().all(|&w| w == 0.0) {
        return None;
    }
    // d is symmetric, so column j is row j
    let costs: Vec<f64> = (0..d.n()).map(|j| dot(weights, d.row(j))).collect();
    Some(argmin(&costs))
}

/// Batch median SOM: prototypes are observations.
///
/// Each epoch assigns every observation to the unit with the nearest medoid,
/// then moves each unit's medoid to the observation minimizing
/// `sum_i K(f(x_i), u) d_ij`. Initial medoids are the largest coefficient of
/// each initial row, so a one-hot draw gives the sampled observations.
pub fn train_batch_median(
    d: &DissimilarityMatrix,
    grid: &MapGrid,
    kernel: NeighborhoodKernel,
    schedule: &BatchSchedule,
    init: &Initialization,
    seed: u64,
    options: &TrainOptions,
) -> Result<TrainedMap> {
    let n = d.n();
    let units = grid.units();
    let exec = options.execution;
    let coef = init.resolve(n, units, seed)?;
    let mut medoids: Vec<usize> = coef
        .rows()
        .map(|r| {
            let neg: Vec<f64> = r.iter().map(|b| -b).collect();
            argmin(&neg)
        })
        .collect();
    let epochs = schedule.epochs();
    let mut lp = EpochLoop::new(options, epochs);

    let (mut assignment, mut dist) = assign_medoids(d, &medoids, exec);
    if lp.wants(0) {
        lp.record(0, mean(&dist), || Prototypes::Medoids(medoids.clone()));
    }

    let mut empty = 0;
    let mut converged_epoch = None;
    let mut previous: Option<(Vec<usize>, f64)> = None;
    for e in 1..=epochs {
        let radius = schedule.radius_unchecked(e);
        let fixed = matches!(&previous, Some((prev, r)) if *prev == assignment && *r == radius);
        if !fixed {
            let table = kernel_table(grid, kernel, radius);
            let assign = &assignment;
            let updates: Vec<Option<usize>> = exec.map_range(units, |u| {
                let weights_u = &table[u * units..(u + 1) * units];
                let w: Vec<f64> = assign.iter().map(|&f| weights_u[f]).collect();
                weighted_medoid(d, &w)
            });
            for (m, up) in medoids.iter_mut().zip(updates) {
                match up {
                    Some(j) => *m = j,
                    None => empty += 1,
                }
            }
            previous = Some((assignment.clone(), radius));
            (assignment, dist) = assign_medoids(d, &medoids, exec);
        } else if (e..=epochs).all(|k| schedule.radius_unchecked(k) == radius) {
            converged_epoch.get_or_insert(e - 1);
        }
        if lp.wants(e) {
            lp.record(e, mean(&dist), || Prototypes::Medoids(medoids.clone()));
        }
    }

    Ok(TrainedMap {
        variant: Variant::BatchMedian,
        grid: *grid,
        kernel,
        prototypes: Prototypes::Medoids(medoids),
        assignment,
        history: lp.history,
        snapshots: lp.snapshots,
        samples: Vec::new(),
        winners: Vec::new(),
        seed,
        schedule: schedule.describe(),
        negative_distances: 0,
        empty_kernel_mass: empty,
        converged_epoch,
    })
}
