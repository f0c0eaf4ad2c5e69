//! Brute-force certification of classical bounds: enumeration of
//! deterministic outcome assignments, their point-mass distributions, and
//! violation maximization over vertices and sampled convex mixtures.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::dist::{DistanceKind, DistError, JointDistribution, ProductTerm, VariableId};
use crate::families;
use crate::inequality::EntropicInequality;

/// Mixture sampling is capped to a seeded subset of this many vertices.
pub const VERTEX_SAMPLING_CAP: usize = 1024;

#[derive(Debug, Error)]
pub enum ClassicalError {
    #[error("{0} variables exceed the enumeration cap of 24")]
    TooManyVariables(usize),
    #[error(transparent)]
    Dist(#[from] DistError),
}

/// A deterministic ±1 assignment to every scenario variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategy {
    values: Vec<i8>,
}

impl DeterministicStrategy {
    /// Strategy at `index` in lexicographic order: variable 0 is the most
    /// significant digit and +1 sorts before −1, so index 0 is all-plus.
    pub fn from_index(index: u64, count: usize) -> Self {
        let values = (0..count)
            .map(|k| if index >> (count - 1 - k) & 1 == 0 { 1 } else { -1 })
            .collect();
        Self { values }
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    /// Product of the assigned values over the term's support.
    pub fn product(&self, term: ProductTerm) -> i8 {
        term.indices().iter().map(|&i| self.values[i]).product()
    }

    /// Point mass on the assigned outcome tuple.
    pub fn to_distribution(&self, vars: &[VariableId]) -> JointDistribution {
        JointDistribution::point_mass(vars.to_vec(), &self.values)
            .expect("point mass over matching variables")
    }
}

/// All 2^k assignments in lexicographic order.
pub fn enumerate_strategies(
    vars: &[VariableId],
) -> Result<impl Iterator<Item = DeterministicStrategy> + '_, ClassicalError> {
    let count = vars.len();
    if count > 24 {
        return Err(ClassicalError::TooManyVariables(count));
    }
    Ok((0..1u64 << count).map(move |i| DeterministicStrategy::from_index(i, count)))
}

/// Exact signed correlator combination of a covariance-kind inequality at a
/// vertex: Σ products(rhs) − product(target), in integer arithmetic.
pub fn vertex_correlation_value(ineq: &EntropicInequality, s: &DeterministicStrategy) -> i64 {
    let rhs: i64 = ineq.rhs_terms().iter().map(|&t| s.product(t) as i64).sum();
    rhs - s.product(ineq.target()) as i64
}

/// Violation of an inequality on an explicit distribution (entropic:
/// lhs − Σ rhs; covariance: combination − bound).
fn violation_on(ineq: &EntropicInequality, dist: &JointDistribution) -> Result<f64, DistError> {
    match ineq.kind() {
        DistanceKind::Entropic => {
            let lhs = dist.delta(ineq.target(), DistanceKind::Entropic)?;
            let rhs: f64 = ineq
                .rhs_terms()
                .iter()
                .map(|&t| dist.delta(t, DistanceKind::Entropic))
                .sum::<Result<f64, _>>()?;
            Ok(lhs - rhs)
        }
        DistanceKind::Covariance => {
            let combo: f64 = ineq
                .rhs_terms()
                .iter()
                .map(|&t| dist.product_expectation(t))
                .sum::<Result<f64, _>>()?
                - dist.product_expectation(ineq.target())?;
            Ok(combo - ineq.classical_bound())
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CertifyOptions {
    /// Skip the sampled convex mixtures and test only the vertices.
    pub vertex_only: bool,
    pub mixture_samples: usize,
    pub seed: u64,
    /// Worker threads for the vertex scan and mixture loop.
    pub jobs: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { vertex_only: false, mixture_samples: 10_000, seed: 0, jobs: 1 }
    }
}

/// What achieved the maximum violation.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Witness {
    Vertex { index: u64, assignment: BTreeMap<String, i8> },
    Mixture { index: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassicalReport {
    pub inequality: String,
    pub kind: DistanceKind,
    pub max_violation: f64,
    pub witness: Witness,
    pub vertices: u64,
    pub mixtures: usize,
    pub seed: u64,
}

/// Evaluates the inequality on every deterministic strategy and, unless
/// `vertex_only`, on Dirichlet-random convex mixtures of vertices. Returns
/// the maximum violation observed and its witness. Deterministic given
/// (seed, mixture_samples); ties resolve to the smallest index.
pub fn classical_max_violation(
    ineq: &EntropicInequality,
    opts: CertifyOptions,
) -> Result<ClassicalReport, ClassicalError> {
    let vars = ineq.variables();
    let count = vars.len();
    if count > 24 {
        return Err(ClassicalError::TooManyVariables(count));
    }
    let total = 1u64 << count;
    let jobs = opts.jobs.max(1);

    // Vertex scan, partitioned by index range. At a point mass the plus
    // probability of any term is exactly (1 + ∏ signs)/2, so the entropic
    // values go through the deterministic entropy branch without
    // materializing the table.
    let vertex_violation = |s: &DeterministicStrategy| -> f64 {
        match ineq.kind() {
            DistanceKind::Covariance => {
                vertex_correlation_value(ineq, s) as f64 - ineq.classical_bound()
            }
            DistanceKind::Entropic => {
                let h = |term: ProductTerm| {
                    crate::dist::binary_entropy((1.0 + s.product(term) as f64) / 2.0)
                        .expect("vertex probability is 0 or 1")
                };
                h(ineq.target()) - ineq.rhs_terms().iter().map(|&t| h(t)).sum::<f64>()
            }
        }
    };
    let scan = |from: u64, to: u64| -> Result<(f64, u64), ClassicalError> {
        let mut best = f64::NEG_INFINITY;
        let mut best_index = from;
        for i in from..to {
            let s = DeterministicStrategy::from_index(i, count);
            let v = vertex_violation(&s);
            if v > best {
                best = v;
                best_index = i;
            }
        }
        Ok((best, best_index))
    };
    let (vertex_best, vertex_index) = if jobs == 1 || total < 64 {
        scan(0, total)?
    } else {
        let chunk = total.div_ceil(jobs as u64);
        let results: Vec<Result<(f64, u64), ClassicalError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs as u64)
                .map(|j| {
                    let from = j * chunk;
                    let to = ((j + 1) * chunk).min(total);
                    scope.spawn(move || scan(from, to.max(from)))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut best = (f64::NEG_INFINITY, 0u64);
        for r in results {
            let (v, i) = r?;
            if v > best.0 || (v == best.0 && i < best.1) {
                best = (v, i);
            }
        }
        best
    };

    let mut best = vertex_best;
    let mut witness = Witness::Vertex {
        index: vertex_index,
        assignment: vars
            .iter()
            .zip(DeterministicStrategy::from_index(vertex_index, count).values())
            .map(|(v, &s)| (v.label.clone(), s))
            .collect(),
    };

    let mixtures = if opts.vertex_only { 0 } else { opts.mixture_samples };
    if mixtures > 0 {
        // Mixtures are sampled over the full vertex set when it is small
        // enough, else over a seeded random subset.
        let pool: Vec<u64> = if total <= VERTEX_SAMPLING_CAP as u64 {
            (0..total).collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            let mut chosen = BTreeSet::new();
            while chosen.len() < VERTEX_SAMPLING_CAP {
                chosen.insert(rng.gen_range(0..total));
            }
            chosen.into_iter().collect()
        };
        let cells: Vec<usize> = pool
            .iter()
            .map(|&i| {
                crate::dist::cell_of(DeterministicStrategy::from_index(i, count).values())
            })
            .collect();

        let eval_mixture = |m: usize| -> Result<f64, ClassicalError> {
            // Per-index derived seed keeps the loop order-independent.
            let mut rng = ChaCha8Rng::seed_from_u64(
                opts.seed ^ (m as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            let mut probs = vec![0.0f64; 1 << count];
            let mut weights: Vec<f64> =
                (0..pool.len()).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let sum: f64 = weights.iter().sum();
            for w in &mut weights {
                *w /= sum;
            }
            for (&cell, &w) in cells.iter().zip(&weights) {
                probs[cell] += w;
            }
            let resid = 1.0 - probs.iter().sum::<f64>();
            probs[cells[0]] += resid;
            let dist = JointDistribution::new(vars.to_vec(), probs)?;
            Ok(violation_on(ineq, &dist)?)
        };

        let run = |from: usize, to: usize| -> Result<(f64, usize), ClassicalError> {
            let mut best = f64::NEG_INFINITY;
            let mut best_index = from;
            for m in from..to {
                let v = eval_mixture(m)?;
                if v > best {
                    best = v;
                    best_index = m;
                }
            }
            Ok((best, best_index))
        };
        let (mix_best, mix_index) = if jobs == 1 {
            run(0, mixtures)?
        } else {
            let chunk = mixtures.div_ceil(jobs);
            let results: Vec<Result<(f64, usize), ClassicalError>> =
                std::thread::scope(|scope| {
                    let handles: Vec<_> = (0..jobs)
                        .map(|j| {
                            let from = (j * chunk).min(mixtures);
                            let to = ((j + 1) * chunk).min(mixtures);
                            scope.spawn(move || run(from, to))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
                });
            let mut best = (f64::NEG_INFINITY, usize::MAX);
            for r in results {
                let (v, i) = r?;
                if v > best.0 || (v == best.0 && i < best.1) {
                    best = (v, i);
                }
            }
            best
        };
        if mix_best > best {
            best = mix_best;
            witness = Witness::Mixture { index: mix_index };
        }
    }

    Ok(ClassicalReport {
        inequality: ineq.name().to_string(),
        kind: ineq.kind(),
        max_violation: best,
        witness,
        vertices: total,
        mixtures,
        seed: opts.seed,
    })
}

/// Result of the exhaustive square-product scan.
#[derive(Debug, Clone, Serialize)]
pub struct PmConstraintReport {
    /// ∏ qᵢ = +1 held for every assignment.
    pub all_products_positive: bool,
    pub assignments: usize,
    /// Distinct (q1..q6) tuples reachable by deterministic assignments.
    pub achievable_q_tuples: Vec<[i8; 6]>,
}

/// Checks the square-product constraint over all 512 assignments to the
/// nine observables and collects the reachable product tuples.
pub fn pm_product_constraint_check() -> PmConstraintReport {
    let f = families::pm_square();
    let mut all_positive = true;
    let mut tuples = BTreeSet::new();
    let mut assignments = 0usize;
    for s in enumerate_strategies(&f.variables).expect("nine variables") {
        assignments += 1;
        let mut q = [0i8; 6];
        for (k, &triple) in f.triples.iter().enumerate() {
            q[k] = s.product(triple);
        }
        all_positive &= q.iter().map(|&x| x as i64).product::<i64>() == 1;
        tuples.insert(q);
    }
    PmConstraintReport {
        all_products_positive: all_positive,
        assignments,
        achievable_q_tuples: tuples.into_iter().collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::variables;
    use crate::inequality::{
        build_cabello_correlation, build_mermin_correlation, build_pm_entropic,
        build_tripartite_entropic,
    };

    #[test]
    fn enumeration_is_lexicographic_and_complete() {
        let vars = variables(&["A"]);
        let all: Vec<_> = enumerate_strategies(&vars).unwrap().collect();
        assert_eq!(all.len(), 2);
        assert_eq!(all[0].values(), &[1]);
        assert_eq!(all[1].values(), &[-1]);
        let vars = variables(&["A1", "A2", "B1", "B2", "C1", "C2"]);
        assert_eq!(enumerate_strategies(&vars).unwrap().count(), 64);
        let nine = families::pm_square().variables;
        assert_eq!(enumerate_strategies(&nine).unwrap().count(), 512);
    }

    #[test]
    fn strategy_distributions_are_deterministic() {
        let vars = variables(&["A", "B"]);
        let s = DeterministicStrategy::from_index(0, 2);
        let d = s.to_distribution(&vars);
        assert_eq!(d.probabilities()[0], 1.0);
        assert_eq!(d.shannon_entropy(), 0.0);
        let t = ProductTerm::from_indices(&[0, 1]);
        assert_eq!(d.product_expectation(t).unwrap(), 1.0);
        let s = DeterministicStrategy::from_index(1, 2);
        assert_eq!(s.values(), &[1, -1]);
        assert_eq!(s.to_distribution(&vars).product_expectation(t).unwrap(), -1.0);
    }

    #[test]
    fn tripartite_vertices_never_violate() {
        let ineq = build_tripartite_entropic();
        let report = classical_max_violation(
            &ineq,
            CertifyOptions { vertex_only: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(report.vertices, 64);
        assert_eq!(report.max_violation, 0.0);
    }

    #[test]
    fn mermin_vertex_maximum_is_two() {
        let ineq = build_mermin_correlation();
        let vars = ineq.variables().to_vec();
        let max = enumerate_strategies(&vars)
            .unwrap()
            .map(|s| vertex_correlation_value(&ineq, &s))
            .max()
            .unwrap();
        assert_eq!(max, 2);
        let report = classical_max_violation(
            &ineq,
            CertifyOptions { vertex_only: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(report.max_violation, 0.0);
    }

    #[test]
    fn cabello_vertex_maximum_is_four() {
        let ineq = build_cabello_correlation();
        let vars = ineq.variables().to_vec();
        let max = enumerate_strategies(&vars)
            .unwrap()
            .map(|s| vertex_correlation_value(&ineq, &s))
            .max()
            .unwrap();
        assert_eq!(max, 4);
        // All-plus assignment reaches the bound: five ones minus one.
        let all_plus = DeterministicStrategy::from_index(0, 9);
        assert_eq!(vertex_correlation_value(&ineq, &all_plus), 4);
    }

    #[test]
    fn mixtures_respect_the_entropic_bounds() {
        let ineq = build_tripartite_entropic();
        let report = classical_max_violation(
            &ineq,
            CertifyOptions { mixture_samples: 300, ..Default::default() },
        )
        .unwrap();
        assert!(report.max_violation <= 1e-12);
        let pm = build_pm_entropic();
        let report = classical_max_violation(
            &pm,
            CertifyOptions { mixture_samples: 100, ..Default::default() },
        )
        .unwrap();
        assert!(report.max_violation <= 1e-12);
    }

    #[test]
    fn certification_is_deterministic_and_job_independent() {
        let ineq = build_mermin_correlation();
        let base = CertifyOptions { mixture_samples: 64, seed: 9, ..Default::default() };
        let a = classical_max_violation(&ineq, base).unwrap();
        let b = classical_max_violation(&ineq, base).unwrap();
        let c = classical_max_violation(&ineq, CertifyOptions { jobs: 4, ..base }).unwrap();
        let (ja, jb, jc) = (
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            serde_json::to_string(&c).unwrap(),
        );
        assert_eq!(ja, jb);
        assert_eq!(ja, jc);
    }

    #[test]
    fn square_products_multiply_to_plus_one() {
        let report = pm_product_constraint_check();
        assert!(report.all_products_positive);
        assert_eq!(report.assignments, 512);
        // Exactly the even-parity tuples are reachable.
        assert_eq!(report.achievable_q_tuples.len(), 32);
        for q in &report.achievable_q_tuples {
            assert_eq!(q.iter().filter(|&&x| x == -1).count() % 2, 0);
        }
        assert!(report.achievable_q_tuples.contains(&[1, 1, 1, 1, 1, 1]));
        assert!(!report.achievable_q_tuples.contains(&[1, 1, 1, 1, 1, -1]));
    }

    #[test]
    fn enumeration_cap() {
        let labels: Vec<String> = (0..25).map(|i| format!("V{i}")).collect();
        let vars = variables(&labels);
        assert!(enumerate_strategies(&vars).is_err());
    }
}
