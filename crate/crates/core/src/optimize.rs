//! Derivative-free maximization of inequality violation over equatorial
//! measurement angles for GHZ scenarios.
//!
//! The objective is evaluated through the closed-form GHZ expectation
//! cos(Σ angles) per term; [`objective_dense`] provides the dense-simulation
//! route for cross-checking. Binary entropy has unbounded slope where a
//! product becomes deterministic, so refinement uses coordinate descent with
//! a shrinking step rather than gradients.

use serde::Serialize;
use thiserror::Error;

use crate::dist::{h2, DistanceKind};
use crate::inequality::{evaluate, ghz_xy_scenario, EntropicInequality, EvalOptions, InequalityError};
use crate::scenario::{AngleConfig, PartySettingLayout, ScenarioError};

#[derive(Debug, Error)]
pub enum OptimizeError {
    #[error("variable {0:?} is not covered by the angle configuration")]
    UncoveredVariable(String),
    #[error("variable {0:?} does not exist in the layout")]
    UnknownVariable(String),
    #[error("grid of {points}^{params} points exceeds the 1e8 guard")]
    GridTooLarge { points: usize, params: usize },
    #[error("bad optimizer settings: {0}")]
    BadSettings(String),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OptimizerSettings {
    pub grid_points_per_angle: usize,
    pub max_refinement_iters: usize,
    /// Step multiplier applied after a sweep with no improvement.
    pub step_shrink: f64,
    pub convergence_tol: f64,
    pub seed: u64,
    /// Share one angle per setting across all parties.
    pub tied: bool,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            grid_points_per_angle: 64,
            max_refinement_iters: 200,
            step_shrink: 0.5,
            convergence_tol: 1e-12,
            seed: 0,
            tied: true,
            jobs: 1,
        }
    }
}

impl OptimizerSettings {
    fn validate(&self) -> Result<(), OptimizeError> {
        if self.grid_points_per_angle < 2 {
            return Err(OptimizeError::BadSettings("grid needs at least 2 points per angle".into()));
        }
        if !(self.step_shrink > 0.0 && self.step_shrink < 1.0) {
            return Err(OptimizeError::BadSettings("step_shrink must lie in (0, 1)".into()));
        }
        if self.convergence_tol <= 0.0 {
            return Err(OptimizeError::BadSettings("convergence_tol must be positive".into()));
        }
        Ok(())
    }
}

/// Closed-form violation of a GHZ scenario at explicit angles: per term,
/// the expectation is cos of its angle sum.
pub fn objective(
    ineq: &EntropicInequality,
    config: &AngleConfig,
) -> Result<f64, OptimizeError> {
    let term_sum = |term: crate::dist::ProductTerm| -> Result<f64, OptimizeError> {
        term.indices()
            .into_iter()
            .map(|i| {
                let v = &ineq.variables()[i];
                config
                    .get(&v.label)
                    .ok_or_else(|| OptimizeError::UncoveredVariable(v.label.clone()))
            })
            .sum()
    };
    let target = term_sum(ineq.target())?;
    let rhs: Vec<f64> =
        ineq.rhs_terms().iter().map(|&t| term_sum(t)).collect::<Result<_, _>>()?;
    Ok(violation_from_sums(ineq, target, &rhs))
}

fn violation_from_sums(ineq: &EntropicInequality, target_sum: f64, rhs_sums: &[f64]) -> f64 {
    match ineq.kind() {
        DistanceKind::Entropic => {
            let lhs = h2((1.0 + target_sum.cos()) / 2.0);
            let rhs: f64 = rhs_sums.iter().map(|&s| h2((1.0 + s.cos()) / 2.0)).sum();
            lhs - rhs
        }
        DistanceKind::Covariance => {
            let combo: f64 = rhs_sums.iter().map(|&s| s.cos()).sum::<f64>() - target_sum.cos();
            combo - ineq.classical_bound()
        }
    }
}

/// Dense-simulation route for the same objective: materializes the GHZ
/// scenario and evaluates the inequality through operator expectations.
pub fn objective_dense(
    ineq: &EntropicInequality,
    layout: &PartySettingLayout,
    config: &AngleConfig,
) -> Result<f64, OptimizeError> {
    let scenario = ghz_xy_scenario("objective-dense", layout, config)?;
    Ok(evaluate(ineq, &scenario, EvalOptions::default())?.violation)
}

/// Free-parameter view of the search space: one angle per setting when
/// tied, otherwise one per (party, setting) with the second setting of the
/// first party pinned to zero to remove a flat direction.
type ParamOf = Box<dyn Fn(usize, usize) -> Option<usize>>;

struct Parameterization {
    labels: Vec<String>,
    /// Per inequality term (target first), the coefficient of each
    /// parameter in the term's angle sum.
    target_coeffs: Vec<f64>,
    rhs_coeffs: Vec<Vec<f64>>,
    tied: bool,
    layout_settings: usize,
    layout_parties: usize,
    pinned_label: Option<String>,
}

impl Parameterization {
    fn build(
        ineq: &EntropicInequality,
        layout: &PartySettingLayout,
        tied: bool,
    ) -> Result<Self, OptimizeError> {
        // Resolve every inequality variable to its layout position.
        let position = |label: &str| -> Result<(usize, usize), OptimizeError> {
            layout
                .variables()
                .iter()
                .find(|v| v.label == label)
                .map(|v| layout.party_setting_of(v.index))
                .ok_or_else(|| OptimizeError::UnknownVariable(label.to_string()))
        };
        let settings = layout.settings_per_party();
        // Gauge fix for the untied search: pin (party 0, setting 1).
        let pinned = if tied || settings < 2 {
            None
        } else {
            Some(layout.variables()[1].label.clone())
        };
        let has_pin = pinned.is_some();
        let (labels, param_of): (Vec<String>, ParamOf) =
            if tied {
                (
                    (0..settings).map(|s| format!("setting{}", s + 1)).collect(),
                    Box::new(move |_party, setting| Some(setting)),
                )
            } else {
                let mut labels = Vec::new();
                for v in layout.variables() {
                    if Some(&v.label) != pinned.as_ref() {
                        labels.push(v.label.clone());
                    }
                }
                let per_party = settings;
                (
                    labels,
                    Box::new(move |party, setting| {
                        let flat = party * per_party + setting;
                        if !has_pin {
                            return Some(flat);
                        }
                        match flat.cmp(&1) {
                            std::cmp::Ordering::Less => Some(0),
                            std::cmp::Ordering::Equal => None,
                            std::cmp::Ordering::Greater => Some(flat - 1),
                        }
                    }),
                )
            };
        let coeffs_of = |term: crate::dist::ProductTerm| -> Result<Vec<f64>, OptimizeError> {
            let mut coeffs = vec![0.0; labels.len()];
            for i in term.indices() {
                let (party, setting) = position(&ineq.variables()[i].label)?;
                if let Some(p) = param_of(party, setting) {
                    coeffs[p] += 1.0;
                }
            }
            Ok(coeffs)
        };
        Ok(Self {
            target_coeffs: coeffs_of(ineq.target())?,
            rhs_coeffs: ineq
                .rhs_terms()
                .iter()
                .map(|&t| coeffs_of(t))
                .collect::<Result<_, _>>()?,
            labels,
            tied,
            layout_settings: settings,
            layout_parties: layout.parties(),
            pinned_label: pinned,
        })
    }

    fn count(&self) -> usize {
        self.labels.len()
    }

    fn value(&self, ineq: &EntropicInequality, params: &[f64]) -> f64 {
        let dot = |coeffs: &[f64]| coeffs.iter().zip(params).map(|(c, p)| c * p).sum::<f64>();
        let rhs: Vec<f64> = self.rhs_coeffs.iter().map(|c| dot(c)).collect();
        violation_from_sums(ineq, dot(&self.target_coeffs), &rhs)
    }

    fn config(&self, layout: &PartySettingLayout, params: &[f64]) -> AngleConfig {
        let wrap = |a: f64| {
            let two_pi = 2.0 * std::f64::consts::PI;
            let mut x = (a + std::f64::consts::PI).rem_euclid(two_pi);
            if x < 0.0 {
                x += two_pi;
            }
            x - std::f64::consts::PI
        };
        if self.tied {
            let angles: Vec<f64> = params.iter().map(|&p| wrap(p)).collect();
            AngleConfig::tied(layout, &angles)
        } else {
            let mut config = AngleConfig::new();
            let mut k = 0usize;
            for party in 0..self.layout_parties {
                for setting in 0..self.layout_settings {
                    let label = &layout.variables()[party * self.layout_settings + setting].label;
                    if Some(label) == self.pinned_label.as_ref() {
                        config.set(label.clone(), 0.0);
                    } else {
                        config.set(label.clone(), wrap(params[k]));
                        k += 1;
                    }
                }
            }
            config
        }
    }
}

/// Outcome of a search stage.
#[derive(Debug, Clone)]
pub struct OptimizerOutcome {
    pub config: AngleConfig,
    pub violation: f64,
    pub evaluations: u64,
    pub iterations: usize,
    /// Grid points sharing the best value (1 when the maximum is unique on
    /// the grid). No uniqueness claim is implied for the continuum.
    pub ties: u64,
    params: Vec<f64>,
}

/// Exhaustive scan over a uniform grid per free parameter, values spaced
/// over [−π, π). Deterministic argmax; ties resolve to the
/// lexicographically smallest angle tuple.
pub fn grid_search(
    ineq: &EntropicInequality,
    layout: &PartySettingLayout,
    settings: &OptimizerSettings,
) -> Result<OptimizerOutcome, OptimizeError> {
    settings.validate()?;
    let param = Parameterization::build(ineq, layout, settings.tied)?;
    let k = param.count();
    let g = settings.grid_points_per_angle;
    let total = match (g as u128).checked_pow(k as u32) {
        Some(t) if t <= 100_000_000 => t as u64,
        _ => return Err(OptimizeError::GridTooLarge { points: g, params: k }),
    };
    let angle_at = |idx: usize| -> f64 {
        -std::f64::consts::PI + 2.0 * std::f64::consts::PI * idx as f64 / g as f64
    };
    // Linear index decodes with parameter 0 most significant, so smaller
    // linear index means lexicographically smaller angle tuple.
    let decode = |mut linear: u64| -> Vec<f64> {
        let mut idxs = vec![0usize; k];
        for slot in (0..k).rev() {
            idxs[slot] = (linear % g as u64) as usize;
            linear /= g as u64;
        }
        idxs.into_iter().map(angle_at).collect()
    };
    let scan = |from: u64, to: u64| -> (f64, u64, u64) {
        let mut best = f64::NEG_INFINITY;
        let mut best_linear = from;
        let mut ties = 0u64;
        for linear in from..to {
            let v = param.value(ineq, &decode(linear));
            if v > best {
                best = v;
                best_linear = linear;
                ties = 1;
            } else if v == best {
                ties += 1;
            }
        }
        (best, best_linear, ties)
    };
    let jobs = settings.jobs.max(1);
    let (best, best_linear, ties) = if jobs == 1 || total < 1024 {
        scan(0, total)
    } else {
        let chunk = total.div_ceil(jobs as u64);
        let results: Vec<(f64, u64, u64)> = std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs as u64)
                .map(|j| {
                    let from = (j * chunk).min(total);
                    let to = ((j + 1) * chunk).min(total);
                    let scan = &scan;
                    scope.spawn(move || scan(from, to))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let mut best = (f64::NEG_INFINITY, u64::MAX, 0u64);
        for (v, i, t) in results {
            if v > best.0 {
                best = (v, i, t);
            } else if v == best.0 {
                best.2 += t;
                if i < best.1 {
                    best.1 = i;
                }
            }
        }
        best
    };
    let params = decode(best_linear);
    Ok(OptimizerOutcome {
        config: param.config(layout, &params),
        violation: best,
        evaluations: total,
        iterations: 0,
        ties,
        params,
    })
}

/// Cyclic coordinate descent with a shrinking step. The returned violation
/// is never below the starting one.
pub fn refine(
    ineq: &EntropicInequality,
    layout: &PartySettingLayout,
    start: &OptimizerOutcome,
    settings: &OptimizerSettings,
) -> Result<OptimizerOutcome, OptimizeError> {
    settings.validate()?;
    let param = Parameterization::build(ineq, layout, settings.tied)?;
    let mut params = start.params.clone();
    let mut best = param.value(ineq, &params);
    let mut evaluations = 1u64;
    let mut step = 2.0 * std::f64::consts::PI / settings.grid_points_per_angle as f64;
    let mut iterations = 0usize;
    for _ in 0..settings.max_refinement_iters {
        iterations += 1;
        let before = best;
        for i in 0..params.len() {
            for delta in [step, -step] {
                let saved = params[i];
                params[i] = saved + delta;
                let v = param.value(ineq, &params);
                evaluations += 1;
                if v > best {
                    best = v;
                } else {
                    params[i] = saved;
                }
            }
        }
        let improvement = best - before;
        if improvement < settings.convergence_tol {
            if step <= settings.convergence_tol.max(1e-14) {
                break;
            }
            step *= settings.step_shrink;
        }
    }
    debug_assert!(best >= start.violation);
    Ok(OptimizerOutcome {
        config: param.config(layout, &params),
        violation: best,
        evaluations,
        iterations,
        ties: start.ties,
        params,
    })
}

/// Per-term breakdown at a configuration (entropy in bits or correlator).
#[derive(Debug, Clone, Serialize)]
pub struct OptimizedTerm {
    pub term: String,
    pub angle_sum: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizerReport {
    pub inequality: String,
    pub kind: DistanceKind,
    pub settings: OptimizerSettings,
    pub best_angles: AngleConfig,
    pub objective: f64,
    pub grid_objective: f64,
    pub target: OptimizedTerm,
    pub rhs_terms: Vec<OptimizedTerm>,
    pub grid_evaluations: u64,
    /// Grid points tied at the grid optimum; the continuum may hold more.
    pub grid_ties: u64,
    pub refine_evaluations: u64,
    pub refine_iterations: usize,
}

/// Grid search followed by refinement, reported with a per-term breakdown.
pub fn run(
    ineq: &EntropicInequality,
    layout: &PartySettingLayout,
    settings: &OptimizerSettings,
) -> Result<OptimizerReport, OptimizeError> {
    let grid = grid_search(ineq, layout, settings)?;
    let refined = refine(ineq, layout, &grid, settings)?;
    let breakdown = |term: crate::dist::ProductTerm| -> Result<OptimizedTerm, OptimizeError> {
        let sum = refined
            .config
            .term_angle_sum(term, ineq.variables())
            .map_err(|_| OptimizeError::UncoveredVariable(ineq.term_label(term)))?;
        let value = match ineq.kind() {
            DistanceKind::Entropic => h2((1.0 + sum.cos()) / 2.0),
            DistanceKind::Covariance => sum.cos(),
        };
        Ok(OptimizedTerm { term: ineq.term_label(term), angle_sum: sum, value })
    };
    Ok(OptimizerReport {
        inequality: ineq.name().to_string(),
        kind: ineq.kind(),
        settings: *settings,
        best_angles: refined.config.clone(),
        objective: refined.violation,
        grid_objective: grid.violation,
        target: breakdown(ineq.target())?,
        rhs_terms: ineq
            .rhs_terms()
            .iter()
            .map(|&t| breakdown(t))
            .collect::<Result<_, _>>()?,
        grid_evaluations: grid.evaluations,
        grid_ties: grid.ties,
        refine_evaluations: refined.evaluations,
        refine_iterations: refined.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inequality::{
        build_mermin_correlation, build_multipartite_entropic, build_tripartite_entropic,
        standard_multipartite_angles, tripartite_max_angles,
    };
    use std::f64::consts::PI;

    #[test]
    fn objective_at_named_angle_families() {
        let tri = build_tripartite_entropic();
        let v = objective(&tri, &tripartite_max_angles()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let layout = PartySettingLayout::tripartite();
        let zero = AngleConfig::tied(&layout, &[0.0, 0.0]);
        assert_eq!(objective(&tri, &zero).unwrap(), 0.0);
        let multi = build_multipartite_entropic(6).unwrap();
        let v = objective(&multi, &standard_multipartite_angles(6).unwrap()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
        let mermin = build_mermin_correlation();
        let v = objective(&mermin, &crate::inequality::mermin_max_angles()).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn objective_rejects_uncovered_variables() {
        let tri = build_tripartite_entropic();
        let mut partial = AngleConfig::new();
        partial.set("A1", 0.1);
        assert!(matches!(
            objective(&tri, &partial),
            Err(OptimizeError::UncoveredVariable(_))
        ));
    }

    #[test]
    fn closed_form_agrees_with_dense_route() {
        use rand::Rng;
        use rand_chacha::rand_core::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let cases: Vec<(EntropicInequality, PartySettingLayout)> = vec![
            (build_tripartite_entropic(), PartySettingLayout::tripartite()),
            (build_multipartite_entropic(4).unwrap(), PartySettingLayout::multipartite(4)),
            (build_multipartite_entropic(6).unwrap(), PartySettingLayout::multipartite(6)),
            (build_multipartite_entropic(8).unwrap(), PartySettingLayout::multipartite(8)),
        ];
        for (ineq, layout) in &cases {
            for _ in 0..25 {
                let mut config = AngleConfig::new();
                for v in layout.variables() {
                    config.set(v.label.clone(), rng.gen_range(-PI..PI));
                }
                let fast = objective(ineq, &config).unwrap();
                let dense = objective_dense(ineq, layout, &config).unwrap();
                assert!(
                    (fast - dense).abs() < 1e-10,
                    "{}: {fast} vs {dense}",
                    ineq.name()
                );
            }
        }
    }

    #[test]
    fn grid_search_tied_tripartite_nears_the_maximum() {
        let ineq = build_tripartite_entropic();
        let layout = PartySettingLayout::tripartite();
        let settings = OptimizerSettings::default();
        let grid = grid_search(&ineq, &layout, &settings).unwrap();
        assert!(grid.violation >= 0.99, "grid best {}", grid.violation);
        assert_eq!(grid.evaluations, 64 * 64);
    }

    #[test]
    fn refine_recovers_the_maximum_and_is_monotone() {
        let ineq = build_tripartite_entropic();
        let layout = PartySettingLayout::tripartite();
        let settings = OptimizerSettings::default();
        let grid = grid_search(&ineq, &layout, &settings).unwrap();
        let refined = refine(&ineq, &layout, &grid, &settings).unwrap();
        assert!(refined.violation >= grid.violation);
        assert!(refined.violation >= 1.0 - 1e-9, "refined {}", refined.violation);
        // Degeneracy-aware check through the invariant quantities: the
        // target angle sum sits where the cosine vanishes, rhs sums where
        // it is ±1.
        let target_sum = refined
            .config
            .term_angle_sum(ineq.target(), ineq.variables())
            .unwrap();
        assert!(target_sum.cos().abs() < 1e-3);
        for &t in ineq.rhs_terms() {
            let sum = refined.config.term_angle_sum(t, ineq.variables()).unwrap();
            assert!(sum.cos().abs() > 1.0 - 1e-6);
        }
    }

    #[test]
    fn refine_from_zero_stays_feasible() {
        let ineq = build_tripartite_entropic();
        let layout = PartySettingLayout::tripartite();
        let settings = OptimizerSettings::default();
        let start = OptimizerOutcome {
            config: AngleConfig::tied(&layout, &[0.0, 0.0]),
            violation: 0.0,
            evaluations: 0,
            iterations: 0,
            ties: 1,
            params: vec![0.0, 0.0],
        };
        let refined = refine(&ineq, &layout, &start, &settings).unwrap();
        assert!(refined.violation >= 0.0);
    }

    #[test]
    fn degenerate_single_term_inequality_is_flat() {
        let f = crate::families::tripartite();
        let ineq = EntropicInequality::new(
            "degenerate",
            f.variables,
            f.target,
            vec![f.target],
            DistanceKind::Entropic,
        )
        .unwrap();
        let layout = PartySettingLayout::tripartite();
        let settings =
            OptimizerSettings { grid_points_per_angle: 8, ..OptimizerSettings::default() };
        let grid = grid_search(&ineq, &layout, &settings).unwrap();
        assert_eq!(grid.violation, 0.0);
        let refined = refine(&ineq, &layout, &grid, &settings).unwrap();
        assert_eq!(refined.violation, 0.0);
    }

    #[test]
    fn reports_are_seed_reproducible_and_job_independent() {
        let ineq = build_tripartite_entropic();
        let layout = PartySettingLayout::tripartite();
        let settings = OptimizerSettings {
            grid_points_per_angle: 16,
            ..OptimizerSettings::default()
        };
        let a = run(&ineq, &layout, &settings).unwrap();
        let b = run(&ineq, &layout, &settings).unwrap();
        let c = run(&ineq, &layout, &OptimizerSettings { jobs: 4, ..settings }).unwrap();
        let (ja, jb, jc) = (
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap(),
            serde_json::to_string(&c).unwrap(),
        );
        assert_eq!(ja, jb);
        assert_eq!(ja, jc);
    }

    #[test]
    fn untied_search_pins_the_gauge_variable() {
        let ineq = build_tripartite_entropic();
        let layout = PartySettingLayout::tripartite();
        let settings = OptimizerSettings {
            tied: false,
            grid_points_per_angle: 4,
            ..OptimizerSettings::default()
        };
        let grid = grid_search(&ineq, &layout, &settings).unwrap();
        assert_eq!(grid.config.get("A2"), Some(0.0));
        assert_eq!(grid.evaluations, 4u64.pow(5));
    }

    #[test]
    fn two_point_grid_contains_the_zero_configuration() {
        // The coarsest grid still includes the all-zero angles, so its
        // argmax can never fall below the feasible value there.
        let ineq = build_tripartite_entropic();
        let layout = PartySettingLayout::tripartite();
        let settings =
            OptimizerSettings { grid_points_per_angle: 2, ..OptimizerSettings::default() };
        let grid = grid_search(&ineq, &layout, &settings).unwrap();
        assert!(grid.violation >= 0.0);
        assert_eq!(grid.evaluations, 4);
    }

    #[test]
    fn grid_guard_rejects_huge_spaces() {
        let ineq = build_multipartite_entropic(12).unwrap();
        let layout = PartySettingLayout::multipartite(12);
        let settings = OptimizerSettings {
            tied: false,
            grid_points_per_angle: 64,
            ..OptimizerSettings::default()
        };
        assert!(matches!(
            grid_search(&ineq, &layout, &settings),
            Err(OptimizeError::GridTooLarge { .. })
        ));
    }

    #[test]
    fn multipartite_recovery_at_small_even_counts() {
        for n in [4usize, 6] {
            let ineq = build_multipartite_entropic(n).unwrap();
            let layout = PartySettingLayout::multipartite(n);
            let settings = OptimizerSettings { jobs: 2, ..OptimizerSettings::default() };
            let grid = grid_search(&ineq, &layout, &settings).unwrap();
            let refined = refine(&ineq, &layout, &grid, &settings).unwrap();
            assert!(refined.violation >= 1.0 - 1e-6, "n={n} refined {}", refined.violation);
        }
    }
}
