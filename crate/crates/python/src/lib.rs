//! Python bindings: distributions and distances, inequality evaluation,
//! classical certification, chain synthesis/verification, and the angle
//! optimizer. Report-shaped results are returned as JSON strings matching
//! the CLI report payloads.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use entrodist_core::chain;
use entrodist_core::classical::{classical_max_violation, CertifyOptions};
use entrodist_core::dist::{self, DistanceKind, ProductTerm};
use entrodist_core::inequality::{
    self, evaluate_pm_products, mermin_scenario, multipartite_scenario, parse_inequality,
    pm_scenario, tripartite_max_scenario, CanonicalDistribution, EvalOptions,
};
use entrodist_core::optimize as optimizer;
use entrodist_core::optimize::OptimizerSettings;
use entrodist_core::scenario::{Binding, PartySettingLayout, Scenario};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_json(value: &impl serde::Serialize) -> PyResult<String> {
    serde_json::to_string_pretty(value).map_err(value_err)
}

fn parse_kind(kind: &str) -> PyResult<DistanceKind> {
    kind.parse().map_err(value_err)
}

/// Probability table over tuples of ±1 outcomes for named binary variables.
#[pyclass(name = "JointDistribution")]
#[derive(Clone)]
struct PyJointDistribution {
    inner: dist::JointDistribution,
}

#[pymethods]
impl PyJointDistribution {
    /// Build from variable labels and a map of outcome strings (one
    /// '+'/'-' per variable) to probabilities; omitted cells are zero.
    #[new]
    fn new(
        variables: Vec<String>,
        probabilities: std::collections::HashMap<String, f64>,
    ) -> PyResult<Self> {
        let value = serde_json::json!({
            "variables": variables,
            "probabilities": probabilities,
        });
        let inner: dist::JointDistribution =
            serde_json::from_value(value).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn uniform(variables: Vec<String>) -> PyResult<Self> {
        dist::JointDistribution::uniform(dist::variables(&variables))
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn point_mass(variables: Vec<String>, outcomes: Vec<i8>) -> PyResult<Self> {
        dist::JointDistribution::point_mass(dist::variables(&variables), &outcomes)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// One of the canonical correlation-figure distributions by name,
    /// e.g. "fig1a_classical" or "pm_quantum_products".
    #[staticmethod]
    fn canonical(name: &str) -> PyResult<Self> {
        let which: CanonicalDistribution = name.parse().map_err(value_err)?;
        Ok(Self { inner: inequality::canonical_distribution(which) })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(|inner| Self { inner }).map_err(value_err)
    }

    fn variables(&self) -> Vec<String> {
        self.inner.variables().iter().map(|v| v.label.clone()).collect()
    }

    fn shannon_entropy(&self) -> f64 {
        self.inner.shannon_entropy()
    }

    /// Distance of the product of the named variables: entropy of the
    /// product outcome ("entropic") or one minus its expectation
    /// ("covariance").
    fn delta(&self, term: Vec<String>, kind: &str) -> PyResult<f64> {
        let term = ProductTerm::from_labels(self.inner.variables(), &term).map_err(value_err)?;
        self.inner.delta(term, parse_kind(kind)?).map_err(value_err)
    }

    fn product_expectation(&self, term: Vec<String>) -> PyResult<f64> {
        let term = ProductTerm::from_labels(self.inner.variables(), &term).map_err(value_err)?;
        self.inner.product_expectation(term).map_err(value_err)
    }

    fn emax_shannon(&self) -> PyResult<f64> {
        self.inner.emax_shannon().map_err(value_err)
    }

    fn mix(&self, other: &PyJointDistribution, lam: f64) -> PyResult<Self> {
        dist::JointDistribution::mix(&self.inner, &other.inner, lam)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// Randomized distance-axiom check; returns the report as JSON.
    fn check_axioms(&self, kind: &str, trials: usize, seed: u64) -> PyResult<String> {
        let report =
            self.inner.check_axioms(parse_kind(kind)?, trials, seed).map_err(value_err)?;
        to_json(&report)
    }

    fn to_json(&self) -> PyResult<String> {
        to_json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("JointDistribution(variables={:?})", self.variables())
    }
}

/// Binary entropy in bits with the 0·log0 ≡ 0 convention.
#[pyfunction]
fn binary_entropy(p: f64) -> PyResult<f64> {
    dist::binary_entropy(p).map_err(value_err)
}

/// GHZ expectation of a tensor product of equatorial measurements:
/// cos of the angle sum.
#[pyfunction]
fn ghz_expectation(angles: Vec<f64>) -> f64 {
    entrodist_core::qsim::ghz_xy_expectation_closed_form(&angles)
}

/// A bundled scenario as JSON: "tripartite_max", "mermin_max",
/// "pm_square", or "multipartite_nN" for even N.
#[pyfunction]
fn builtin_scenario(name: &str) -> PyResult<String> {
    let scenario = match name {
        "tripartite_max" => tripartite_max_scenario(),
        "mermin_max" => mermin_scenario(),
        "pm_square" => pm_scenario(),
        other => match other.strip_prefix("multipartite_n") {
            Some(n) => {
                let n: usize = n.parse().map_err(value_err)?;
                multipartite_scenario(n).map_err(value_err)?
            }
            None => return Err(value_err(format!("unknown scenario {name:?}"))),
        },
    };
    to_json(&scenario)
}

/// Evaluate a built-in inequality against a scenario JSON string; returns
/// the evaluation report as JSON.
#[pyfunction]
#[pyo3(signature = (inequality, scenario_json, tolerance = 1e-9))]
fn evaluate(inequality: &str, scenario_json: &str, tolerance: f64) -> PyResult<String> {
    let scenario: Scenario = serde_json::from_str(scenario_json).map_err(value_err)?;
    let opts = EvalOptions { tolerance, seed: None };
    let report = if inequality == "pm-products" {
        match &scenario.binding {
            Binding::Distribution(d) => evaluate_pm_products(d, opts).map_err(value_err)?,
            Binding::Quantum(_) => {
                return Err(value_err("pm-products evaluation needs a distribution binding"))
            }
        }
    } else {
        let ineq = parse_inequality(inequality).map_err(value_err)?;
        inequality::evaluate(&ineq, &scenario, opts).map_err(value_err)?
    };
    to_json(&report)
}

/// Mix the square-product quantum distribution with the classical one at
/// weight lam and evaluate; returns the report as JSON.
#[pyfunction]
fn pm_mixing_violation(lam: f64) -> PyResult<String> {
    to_json(&inequality::pm_mixing_violation(lam).map_err(value_err)?)
}

/// Certify a classical bound by vertex enumeration plus sampled mixtures;
/// returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (inequality, mixtures = 10_000, vertex_only = false, seed = 0, jobs = 1))]
fn certify(
    inequality: &str,
    mixtures: usize,
    vertex_only: bool,
    seed: u64,
    jobs: usize,
) -> PyResult<String> {
    let ineq = parse_inequality(inequality).map_err(value_err)?;
    let report = classical_max_violation(
        &ineq,
        CertifyOptions { vertex_only, mixture_samples: mixtures, seed, jobs },
    )
    .map_err(value_err)?;
    to_json(&report)
}

/// Exhaustive check of the square-product constraint; returns the report
/// as JSON.
#[pyfunction]
fn pm_product_constraint_check() -> PyResult<String> {
    to_json(&entrodist_core::classical::pm_product_constraint_check())
}

fn ghz_layout(
    inequality: &str,
    ineq: &inequality::EntropicInequality,
) -> PyResult<PartySettingLayout> {
    match inequality {
        "tripartite" | "mermin" => Ok(PartySettingLayout::tripartite()),
        other if other.starts_with("multipartite:") => {
            Ok(PartySettingLayout::multipartite(ineq.variables().len() / 3))
        }
        other => Err(value_err(format!(
            "optimizer supports tripartite, mermin, and multipartite:N, not {other:?}"
        ))),
    }
}

/// Grid search plus refinement over equatorial angles; returns the
/// optimizer report as JSON.
#[pyfunction]
#[pyo3(signature = (inequality, grid = 64, tied = true, seed = 0, jobs = 1))]
fn optimize(inequality: &str, grid: usize, tied: bool, seed: u64, jobs: usize) -> PyResult<String> {
    let ineq = parse_inequality(inequality).map_err(value_err)?;
    let layout = ghz_layout(inequality, &ineq)?;
    let settings = OptimizerSettings {
        grid_points_per_angle: grid,
        tied,
        seed,
        jobs,
        ..OptimizerSettings::default()
    };
    to_json(&optimizer::run(&ineq, &layout, &settings).map_err(value_err)?)
}

/// Find a sub-multiset of the allowed terms whose product telescopes to the
/// target; returns the chain as JSON, or None when no parity solution
/// exists.
#[pyfunction]
fn synthesize_chain(target: Vec<String>, allowed: Vec<Vec<String>>) -> PyResult<Option<String>> {
    let mut labels: Vec<String> = Vec::new();
    for l in target.iter().chain(allowed.iter().flatten()) {
        if !labels.contains(l) {
            labels.push(l.clone());
        }
    }
    let vars = dist::variables(&labels);
    let target = ProductTerm::from_labels(&vars, &target).map_err(value_err)?;
    let allowed: Vec<ProductTerm> = allowed
        .iter()
        .map(|t| ProductTerm::from_labels(&vars, t))
        .collect::<Result<_, _>>()
        .map_err(value_err)?;
    match chain::synthesize_chain(&vars, target, &allowed) {
        Some(c) => Ok(Some(to_json(&c)?)),
        None => Ok(None),
    }
}

/// Verify a chain JSON string; returns the verdict as JSON.
#[pyfunction]
fn verify_chain(chain_json: &str) -> PyResult<String> {
    let c: chain::DerivationChain = serde_json::from_str(chain_json).map_err(value_err)?;
    to_json(&chain::verify_chain(&c))
}

/// Generate the even-N multipartite derivation chain as JSON.
#[pyfunction]
fn generate_multipartite_chain(parties: usize) -> PyResult<String> {
    to_json(&chain::generate_multipartite_chain(parties).map_err(value_err)?)
}

/// Render a chain JSON string in the δ-notation.
#[pyfunction]
fn pretty_chain(chain_json: &str) -> PyResult<String> {
    let c: chain::DerivationChain = serde_json::from_str(chain_json).map_err(value_err)?;
    Ok(chain::pretty_print(&c))
}

#[pymodule]
fn entrodist(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyJointDistribution>()?;
    m.add_function(wrap_pyfunction!(binary_entropy, m)?)?;
    m.add_function(wrap_pyfunction!(ghz_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(pm_mixing_violation, m)?)?;
    m.add_function(wrap_pyfunction!(certify, m)?)?;
    m.add_function(wrap_pyfunction!(pm_product_constraint_check, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_chain, m)?)?;
    m.add_function(wrap_pyfunction!(verify_chain, m)?)?;
    m.add_function(wrap_pyfunction!(generate_multipartite_chain, m)?)?;
    m.add_function(wrap_pyfunction!(pretty_chain, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
