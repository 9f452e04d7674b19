//! Cross-evaluation of estimators over a grid of trajectory lengths.

use rayon::prelude::*;

use super::{compute_report, ErrorReport};
use crate::error::{Error, Result};
use crate::generators::{BatchRequest, FouScheme, Generator, HurstSampling, LfsmMesh};
use crate::process::ProcessParams;
use crate::seed::SeedScheme;

/// Grid spacing per evaluation length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtRule {
    Fixed(f64),
    /// `dt = 1 / n`: every trajectory spans one unit of time regardless of
    /// its resolution.
    OneOverN,
}

impl DtRule {
    pub fn resolve(self, n: usize) -> f64 {
        match self {
            DtRule::Fixed(dt) => dt,
            DtRule::OneOverN => 1.0 / n as f64,
        }
    }
}

/// An estimator under a display name: any map from a level path to an
/// exponent estimate. Network and classical estimators both fit.
pub struct NamedEstimator<'a> {
    pub name: String,
    pub estimate: Box<dyn Fn(&[f64]) -> Result<f64> + Sync + 'a>,
}

#[derive(Debug, Clone)]
pub struct MatrixSpec {
    pub params: ProcessParams,
    pub hurst_sampling: HurstSampling,
    pub eval_lengths: Vec<usize>,
    /// Trajectories per evaluation length.
    pub count: u64,
    pub seeds: SeedScheme,
    pub dt: DtRule,
    pub fou_scheme: FouScheme,
    pub lfsm_mesh: LfsmMesh,
}

impl MatrixSpec {
    pub fn new(
        params: ProcessParams,
        eval_lengths: Vec<usize>,
        count: u64,
        seeds: SeedScheme,
    ) -> Self {
        MatrixSpec {
            params,
            hurst_sampling: HurstSampling::Uniform,
            eval_lengths,
            count,
            seeds,
            dt: DtRule::OneOverN,
            fou_scheme: FouScheme::default(),
            lfsm_mesh: LfsmMesh::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixRow {
    pub name: String,
    /// One report per entry of `eval_lengths`, same order.
    pub cells: Vec<ErrorReport>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkMatrix {
    pub eval_lengths: Vec<usize>,
    pub rows: Vec<MatrixRow>,
}

/// A benchmark matrix together with the `(estimate, truth)` pairs behind
/// every cell; `pairs[r][l]` belongs to `matrix.rows[r]` at
/// `matrix.eval_lengths[l]`, ordered by trajectory stream index.
#[derive(Debug, Clone)]
pub struct DetailedMatrix {
    pub matrix: BenchmarkMatrix,
    pub pairs: Vec<Vec<Vec<(f64, f64)>>>,
}

/// Evaluates every estimator on freshly generated labelled trajectories at
/// every length of the grid. All estimators see the same trajectories at a
/// given length; lengths use disjoint seed children so the batches stay
/// uncorrelated.
pub fn benchmark_matrix(
    gen: &Generator,
    estimators: &[NamedEstimator<'_>],
    spec: &MatrixSpec,
) -> Result<BenchmarkMatrix> {
    Ok(benchmark_matrix_detailed(gen, estimators, spec)?.matrix)
}

/// [`benchmark_matrix`] plus the per-pair data, for error dumps and
/// localized diagnostics.
pub fn benchmark_matrix_detailed(
    gen: &Generator,
    estimators: &[NamedEstimator<'_>],
    spec: &MatrixSpec,
) -> Result<DetailedMatrix> {
    if estimators.is_empty() || spec.eval_lengths.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut rows: Vec<MatrixRow> = estimators
        .iter()
        .map(|e| MatrixRow {
            name: e.name.clone(),
            cells: Vec::with_capacity(spec.eval_lengths.len()),
        })
        .collect();
    let mut all_pairs: Vec<Vec<Vec<(f64, f64)>>> =
        vec![Vec::with_capacity(spec.eval_lengths.len()); estimators.len()];

    for (li, &n) in spec.eval_lengths.iter().enumerate() {
        let req = BatchRequest {
            params: spec.params,
            n,
            dt: spec.dt.resolve(n),
            count: spec.count,
            first_index: 0,
            seeds: spec.seeds.child(li as u64),
            hurst_sampling: spec.hurst_sampling,
            fou_scheme: spec.fou_scheme,
            lfsm_mesh: spec.lfsm_mesh,
        };
        let batch = gen.batch(&req)?;
        let truths: Vec<f64> = batch
            .iter()
            .map(|t| {
                t.true_hurst().ok_or_else(|| {
                    Error::InvalidParameter("benchmark trajectory without a label".into())
                })
            })
            .collect::<Result<_>>()?;

        for ((row, est), pair_cells) in rows.iter_mut().zip(estimators).zip(&mut all_pairs) {
            let estimates: Vec<Result<f64>> = batch
                .par_iter()
                .map(|t| (est.estimate)(&t.values))
                .collect();
            let mut pairs = Vec::with_capacity(batch.len());
            for (i, (r, &truth)) in estimates.into_iter().zip(&truths).enumerate() {
                match r {
                    Ok(e) => pairs.push((e, truth)),
                    Err(e) => {
                        return Err(Error::OptimizationFailure(format!(
                            "{} failed at length {n} on trajectory {i}: {e}",
                            est.name
                        )))
                    }
                }
            }
            row.cells.push(compute_report(&pairs)?);
            pair_cells.push(pairs);
        }
    }

    Ok(DetailedMatrix {
        matrix: BenchmarkMatrix {
            eval_lengths: spec.eval_lengths.clone(),
            rows,
        },
        pairs: all_pairs,
    })
}
