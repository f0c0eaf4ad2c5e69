//! Construction and evaluation of the built-in entropic and correlation
//! inequalities, plus the canonical correlation-figure distributions and the
//! square-product mixing demonstration.
//!
//! Every [`EntropicInequality`] carries a parity certificate: the XOR of the
//! right-hand-side terms equals the target, so a triangle-inequality chain
//! deriving the bound exists. Construction without the certificate is
//! impossible through the public surface.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::chain::xor_sum_check;
use crate::dist::{
    h2, DistanceKind, DistError, JointDistribution, ProductTerm, VariableId,
};
use crate::families;
use crate::qsim::{expectation, product_operator, QsimError};
use crate::scenario::{
    AngleConfig, Binding, PartySettingLayout, QuantumBinding, Scenario, ScenarioError, StateSpec,
};

#[derive(Debug, Error)]
pub enum InequalityError {
    #[error("certificate failed: rhs terms do not multiply to the target")]
    CertificateFailed,
    #[error("inequality terms must have nonempty support")]
    EmptyTerm,
    #[error("term references a variable outside the declared list")]
    TermOutOfRange,
    #[error("unknown inequality {0:?}")]
    UnknownInequality(String),
    #[error("party count {0} must be an even number in 4..=12")]
    BadPartyCount(usize),
    #[error("variable {0:?} is not bound in the scenario")]
    UnboundVariable(String),
    #[error("mixing weight {0} outside [0, 1]")]
    BadWeight(f64),
    #[error("unknown canonical distribution {0:?}")]
    UnknownDistribution(String),
    #[error(transparent)]
    Dist(#[from] DistError),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// A target product term bounded by a sum over right-hand-side terms, with
/// entropic or correlation evaluation semantics.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropicInequality {
    name: String,
    variables: Vec<VariableId>,
    target: ProductTerm,
    rhs_terms: Vec<ProductTerm>,
    kind: DistanceKind,
    classical_bound: f64,
}

impl EntropicInequality {
    /// Checks the parity certificate and term validity. The classical bound
    /// follows from the derivation: 0 for the entropic form, and
    /// (#rhs − 1) for the covariance form (each distance is 1 − ⟨·⟩).
    pub fn new(
        name: impl Into<String>,
        variables: Vec<VariableId>,
        target: ProductTerm,
        rhs_terms: Vec<ProductTerm>,
        kind: DistanceKind,
    ) -> Result<Self, InequalityError> {
        let n = variables.len();
        for term in rhs_terms.iter().chain([&target]) {
            if term.is_empty() {
                return Err(InequalityError::EmptyTerm);
            }
            if n < 64 && term.mask() >> n != 0 {
                return Err(InequalityError::TermOutOfRange);
            }
        }
        if !xor_sum_check(target, &rhs_terms) {
            return Err(InequalityError::CertificateFailed);
        }
        let classical_bound = match kind {
            DistanceKind::Entropic => 0.0,
            DistanceKind::Covariance => rhs_terms.len() as f64 - 1.0,
        };
        Ok(Self {
            name: name.into(),
            variables,
            target,
            rhs_terms,
            kind,
            classical_bound,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn target(&self) -> ProductTerm {
        self.target
    }

    pub fn rhs_terms(&self) -> &[ProductTerm] {
        &self.rhs_terms
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn classical_bound(&self) -> f64 {
        self.classical_bound
    }

    pub fn term_label(&self, term: ProductTerm) -> String {
        term.display(&self.variables)
    }
}

/// Tripartite entropic inequality: δ(A1·B1·C1) bounded by the three
/// mixed-setting terms.
pub fn build_tripartite_entropic() -> EntropicInequality {
    let f = families::tripartite();
    EntropicInequality::new("tripartite", f.variables, f.target, f.rhs, DistanceKind::Entropic)
        .expect("certificate holds by construction")
}

/// Even-N multipartite entropic inequality: the all-first-setting term
/// bounded by N cyclic terms plus the all-second-setting term.
pub fn build_multipartite_entropic(parties: usize) -> Result<EntropicInequality, InequalityError> {
    let f = families::multipartite(parties)
        .map_err(|e| InequalityError::BadPartyCount(e.0))?;
    let mut rhs = f.cyclic;
    rhs.push(f.all_second);
    EntropicInequality::new(
        format!("multipartite:{parties}"),
        f.variables,
        f.target,
        rhs,
        DistanceKind::Entropic,
    )
}

/// Square entropic inequality: δ(alpha·beta·gamma) bounded by the five
/// other commuting-triple products.
pub fn build_pm_entropic() -> EntropicInequality {
    let f = families::pm_square();
    let rhs = vec![f.triples[0], f.triples[1], f.triples[3], f.triples[4], f.triples[2]];
    EntropicInequality::new("pm-entropic", f.variables, f.triples[5], rhs, DistanceKind::Entropic)
        .expect("certificate holds by construction")
}

/// Tripartite correlation inequality (covariance distance applied to the
/// same derivation): ⟨A1B2C2⟩ + ⟨A2B2C1⟩ + ⟨A2B1C2⟩ − ⟨A1B1C1⟩ ≤ 2.
pub fn build_mermin_correlation() -> EntropicInequality {
    let f = families::tripartite();
    EntropicInequality::new("mermin", f.variables, f.target, f.rhs, DistanceKind::Covariance)
        .expect("certificate holds by construction")
}

/// Square correlation inequality: five triple correlators minus
/// ⟨alpha·beta·gamma⟩, noncontextual bound 4.
pub fn build_cabello_correlation() -> EntropicInequality {
    let f = families::pm_square();
    let rhs = vec![f.triples[0], f.triples[1], f.triples[3], f.triples[4], f.triples[2]];
    EntropicInequality::new("cabello", f.variables, f.triples[5], rhs, DistanceKind::Covariance)
        .expect("certificate holds by construction")
}

/// Looks up a built-in inequality by name: `tripartite`, `multipartite:N`,
/// `pm-entropic`, `mermin`, or `cabello`.
pub fn parse_inequality(name: &str) -> Result<EntropicInequality, InequalityError> {
    match name {
        "tripartite" => Ok(build_tripartite_entropic()),
        "pm-entropic" => Ok(build_pm_entropic()),
        "mermin" => Ok(build_mermin_correlation()),
        "cabello" => Ok(build_cabello_correlation()),
        other => match other.strip_prefix("multipartite:") {
            Some(n) => {
                let parties: usize = n
                    .parse()
                    .map_err(|_| InequalityError::UnknownInequality(other.to_string()))?;
                build_multipartite_entropic(parties)
            }
            None => Err(InequalityError::UnknownInequality(other.to_string())),
        },
    }
}

/// The angle family saturating the multipartite inequality on the GHZ
/// state: α₁ = π/2N, α₂ = 0, α₃ = −π/(2N(N−2)), tied across parties.
pub fn standard_multipartite_angles(parties: usize) -> Result<AngleConfig, InequalityError> {
    if parties < 4 || !parties.is_multiple_of(2) || parties > 12 {
        return Err(InequalityError::BadPartyCount(parties));
    }
    let n = parties as f64;
    let layout = PartySettingLayout::multipartite(parties);
    Ok(AngleConfig::tied(&layout, &[PI / (2.0 * n), 0.0, -PI / (2.0 * n * (n - 2.0))]))
}

/// Tripartite angles attaining the maximal entropic violation on GHZ₃:
/// first setting π/6, second setting −π/12, tied across parties.
pub fn tripartite_max_angles() -> AngleConfig {
    AngleConfig::tied(&PartySettingLayout::tripartite(), &[PI / 6.0, -PI / 12.0])
}

/// Tripartite angles attaining the correlation value 4 on GHZ₃:
/// first setting π/3, second setting −π/6, tied across parties.
pub fn mermin_max_angles() -> AngleConfig {
    AngleConfig::tied(&PartySettingLayout::tripartite(), &[PI / 3.0, -PI / 6.0])
}

/// GHZ scenario with equatorial XY measurements given by `angles`.
pub fn ghz_xy_scenario(
    name: impl Into<String>,
    layout: &PartySettingLayout,
    angles: &AngleConfig,
) -> Result<Scenario, InequalityError> {
    let mut observables = BTreeMap::new();
    for v in layout.variables() {
        let (party, _) = layout.party_setting_of(v.index);
        observables.insert(
            v.label.clone(),
            crate::qsim::ObservableSpec::Xy { angle: angles.angle_of(v)?, qubit: party },
        );
    }
    Ok(Scenario::from_layout(
        name,
        layout,
        Binding::Quantum(QuantumBinding { state: StateSpec::Ghz(layout.parties()), observables }),
    ))
}

/// GHZ₃ scenario at the maximal-violation angles.
pub fn tripartite_max_scenario() -> Scenario {
    ghz_xy_scenario("tripartite-max", &PartySettingLayout::tripartite(), &tripartite_max_angles())
        .expect("angles cover the layout")
}

/// GHZ₃ scenario at the correlation-maximizing angles.
pub fn mermin_scenario() -> Scenario {
    ghz_xy_scenario("mermin-max", &PartySettingLayout::tripartite(), &mermin_max_angles())
        .expect("angles cover the layout")
}

/// GHZ_N scenario at the standard multipartite angles.
pub fn multipartite_scenario(parties: usize) -> Result<Scenario, InequalityError> {
    let layout = PartySettingLayout::multipartite(parties);
    ghz_xy_scenario(
        format!("multipartite-max:{parties}"),
        &layout,
        &standard_multipartite_angles(parties)?,
    )
}

/// Two-qubit scenario binding the nine square observables. The identities
/// that drive it are state-independent; GHZ₂ is fixed as the bundled state.
pub fn pm_scenario() -> Scenario {
    let f = families::pm_square();
    let labels: Vec<String> = f.variables.iter().map(|v| v.label.clone()).collect();
    let mut settings = BTreeMap::new();
    settings.insert("system".to_string(), labels);
    Scenario {
        name: "pm-square".into(),
        parties: vec!["system".into()],
        settings,
        binding: Binding::Quantum(QuantumBinding {
            state: StateSpec::Ghz(2),
            observables: families::pm_square_observables().into_iter().collect(),
        }),
    }
}

/// Named distributions of the canonical correlation figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CanonicalDistribution {
    /// A = B = A' = B', uniform sign.
    Fig1aClassical,
    /// Anticorrelated pair inside the transitivity chain: A = −B with
    /// A = B' = A'. The four pairwise constraints of the figure form a
    /// frustrated cycle, so the maximum-entropy table satisfying the
    /// consistent subset is used.
    Fig1bAnticorrelated,
    /// Independent fair A, B.
    Fig1bUncorrelated,
    /// Uniform over assignments with AB'C' = A'BC' = A'B'C = +1 (which
    /// force ABC = +1).
    Fig2aClassical,
    /// Paradoxical table: ABC = −1 while AB'C' = A'BC' = +1 (the fourth
    /// product is then forced to −1; no joint table flips only one
    /// constraint). Local marginals stay uniform.
    Fig2bGhzParadox,
    /// Uniform over (A, B, C): no tripartite correlations.
    Fig2bUncorrelated,
    /// Point mass on the square products (q1..q5, q6) = (+, +, +, +, +, −).
    PmQuantumProducts,
    /// Point mass on all six square products = +1.
    PmClassicalProducts,
}

impl CanonicalDistribution {
    pub const ALL: [CanonicalDistribution; 8] = [
        CanonicalDistribution::Fig1aClassical,
        CanonicalDistribution::Fig1bAnticorrelated,
        CanonicalDistribution::Fig1bUncorrelated,
        CanonicalDistribution::Fig2aClassical,
        CanonicalDistribution::Fig2bGhzParadox,
        CanonicalDistribution::Fig2bUncorrelated,
        CanonicalDistribution::PmQuantumProducts,
        CanonicalDistribution::PmClassicalProducts,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CanonicalDistribution::Fig1aClassical => "fig1a_classical",
            CanonicalDistribution::Fig1bAnticorrelated => "fig1b_anticorrelated",
            CanonicalDistribution::Fig1bUncorrelated => "fig1b_uncorrelated",
            CanonicalDistribution::Fig2aClassical => "fig2a_classical",
            CanonicalDistribution::Fig2bGhzParadox => "fig2b_ghz_paradox",
            CanonicalDistribution::Fig2bUncorrelated => "fig2b_uncorrelated",
            CanonicalDistribution::PmQuantumProducts => "pm_quantum_products",
            CanonicalDistribution::PmClassicalProducts => "pm_classical_products",
        }
    }
}

impl FromStr for CanonicalDistribution {
    type Err = InequalityError;
    fn from_str(s: &str) -> Result<Self, InequalityError> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| InequalityError::UnknownDistribution(s.to_string()))
    }
}

/// Uniform distribution over the cells satisfying every parity constraint
/// (`sign` is the required product over the masked variables).
fn parity_constrained(labels: &[&str], constraints: &[(ProductTerm, i8)]) -> JointDistribution {
    let vars = crate::dist::variables(labels);
    let cells: Vec<usize> = (0..1usize << labels.len())
        .filter(|&cell| {
            constraints.iter().all(|&(term, sign)| {
                let parity_even = (cell as u64 & term.mask()).count_ones().is_multiple_of(2);
                parity_even == (sign > 0)
            })
        })
        .collect();
    JointDistribution::uniform_over(vars, &cells).expect("constrained support is nonempty")
}

/// Builds the named figure distribution.
pub fn canonical_distribution(which: CanonicalDistribution) -> JointDistribution {
    let t = ProductTerm::from_indices;
    match which {
        CanonicalDistribution::Fig1aClassical => parity_constrained(
            &["A", "B", "A'", "B'"],
            &[(t(&[0, 1]), 1), (t(&[1, 2]), 1), (t(&[2, 3]), 1)],
        ),
        CanonicalDistribution::Fig1bAnticorrelated => parity_constrained(
            &["A", "B", "A'", "B'"],
            &[(t(&[0, 1]), -1), (t(&[0, 3]), 1), (t(&[3, 2]), 1)],
        ),
        CanonicalDistribution::Fig1bUncorrelated => {
            JointDistribution::uniform(crate::dist::variables(&["A", "B"])).expect("small table")
        }
        CanonicalDistribution::Fig2aClassical => parity_constrained(
            &["A", "B", "C", "A'", "B'", "C'"],
            &[(t(&[0, 4, 5]), 1), (t(&[3, 1, 5]), 1), (t(&[3, 4, 2]), 1)],
        ),
        CanonicalDistribution::Fig2bGhzParadox => parity_constrained(
            &["A", "B", "C", "A'", "B'", "C'"],
            &[(t(&[0, 1, 2]), -1), (t(&[0, 4, 5]), 1), (t(&[3, 1, 5]), 1)],
        ),
        CanonicalDistribution::Fig2bUncorrelated => {
            JointDistribution::uniform(crate::dist::variables(&["A", "B", "C"]))
                .expect("small table")
        }
        CanonicalDistribution::PmQuantumProducts => JointDistribution::point_mass(
            crate::dist::variables(&["q1", "q2", "q3", "q4", "q5", "q6"]),
            &[1, 1, 1, 1, 1, -1],
        )
        .expect("point mass"),
        CanonicalDistribution::PmClassicalProducts => JointDistribution::point_mass(
            crate::dist::variables(&["q1", "q2", "q3", "q4", "q5", "q6"]),
            &[1, 1, 1, 1, 1, 1],
        )
        .expect("point mass"),
    }
}

/// Scenario wrapper for a canonical distribution (single declared party
/// holding all variables, in table order).
pub fn canonical_scenario(which: CanonicalDistribution) -> Scenario {
    let dist = canonical_distribution(which);
    let labels: Vec<String> = dist.variables().iter().map(|v| v.label.clone()).collect();
    let mut settings = BTreeMap::new();
    settings.insert("vars".to_string(), labels);
    Scenario {
        name: which.name().into(),
        parties: vec!["vars".into()],
        settings,
        binding: Binding::Distribution(dist),
    }
}

/// One evaluated inequality term.
#[derive(Debug, Clone, Serialize)]
pub struct TermValue {
    pub term: String,
    /// Entropy in bits for the entropic kind, raw correlator otherwise.
    pub value: f64,
}

/// Evaluation result: for the entropic kind, `lhs`/`rhs` are the target
/// distance and the summed right-hand side; for the correlation kind, `lhs`
/// is the signed correlator combination and `rhs` the classical bound.
/// `violation = lhs − rhs` in both cases; positive means nonclassical, and
/// negative slack is reported as is.
#[derive(Debug, Clone, Serialize)]
pub struct EvaluationReport {
    pub inequality: String,
    pub kind: DistanceKind,
    pub scenario: String,
    pub binding: String,
    pub target: TermValue,
    pub rhs_terms: Vec<TermValue>,
    pub classical_bound: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub violation: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub tolerance: f64,
    pub seed: Option<u64>,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { tolerance: 1e-9, seed: None }
    }
}

fn assemble_report(
    ineq: &EntropicInequality,
    scenario_name: &str,
    binding: &str,
    target_value: f64,
    rhs_values: Vec<TermValue>,
    opts: EvalOptions,
) -> EvaluationReport {
    let rhs_sum: f64 = rhs_values.iter().map(|t| t.value).sum();
    let (lhs, rhs) = match ineq.kind() {
        DistanceKind::Entropic => (target_value, rhs_sum),
        DistanceKind::Covariance => (rhs_sum - target_value, ineq.classical_bound()),
    };
    EvaluationReport {
        inequality: ineq.name().to_string(),
        kind: ineq.kind(),
        scenario: scenario_name.to_string(),
        binding: binding.to_string(),
        target: TermValue { term: ineq.term_label(ineq.target()), value: target_value },
        rhs_terms: rhs_values,
        classical_bound: ineq.classical_bound(),
        lhs,
        rhs,
        violation: lhs - rhs,
        tolerance: opts.tolerance,
        seed: opts.seed,
    }
}

/// Per-term value under the entropic kind (entropy of the product) or the
/// covariance kind (raw correlator) from an expectation value.
fn term_value_from_expectation(kind: DistanceKind, e: f64) -> f64 {
    match kind {
        DistanceKind::Entropic => h2(((1.0 + e) / 2.0).clamp(0.0, 1.0)),
        DistanceKind::Covariance => e,
    }
}

/// Evaluates an inequality against a scenario binding.
///
/// Classical binding: inequality terms are remapped by label onto the
/// distribution and evaluated via the distance calculus. Quantum binding:
/// each term becomes the ordered product of its bound observables (which
/// must mutually commute) and its expectation on the scenario state.
pub fn evaluate(
    ineq: &EntropicInequality,
    scenario: &Scenario,
    opts: EvalOptions,
) -> Result<EvaluationReport, InequalityError> {
    match &scenario.binding {
        Binding::Distribution(dist) => {
            let remap = remap_terms(ineq, dist)?;
            let one = |term: ProductTerm, mapped: ProductTerm| -> Result<TermValue, InequalityError> {
                let value = match ineq.kind() {
                    DistanceKind::Entropic => dist.delta(mapped, DistanceKind::Entropic)?,
                    DistanceKind::Covariance => dist.product_expectation(mapped)?,
                };
                Ok(TermValue { term: ineq.term_label(term), value })
            };
            let target = one(ineq.target(), remap(ineq.target()))?;
            let rhs = ineq
                .rhs_terms()
                .iter()
                .map(|&t| one(t, remap(t)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(assemble_report(ineq, &scenario.name, "distribution", target.value, rhs, opts))
        }
        Binding::Quantum(q) => {
            let state = q.state.realize()?;
            let qubits = q.state.qubits()?;
            let one = |term: ProductTerm| -> Result<TermValue, InequalityError> {
                let specs = term
                    .indices()
                    .into_iter()
                    .map(|i| {
                        let label = &ineq.variables()[i].label;
                        q.observables
                            .get(label)
                            .cloned()
                            .ok_or_else(|| InequalityError::UnboundVariable(label.clone()))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let product = term_product_matrix(&specs, qubits)?;
                let e = expectation(&state, &product)?;
                Ok(TermValue {
                    term: ineq.term_label(term),
                    value: term_value_from_expectation(ineq.kind(), e),
                })
            };
            let target = one(ineq.target())?;
            let rhs = ineq
                .rhs_terms()
                .iter()
                .map(|&t| one(t))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(assemble_report(ineq, &scenario.name, "quantum", target.value, rhs, opts))
        }
    }
}

/// Matrix of the ordered product of a term's observables, with the
/// commutation precondition enforced.
///
/// Single-qubit measurements on pairwise distinct qubits commute
/// structurally, so that case assembles the tensor product factor by factor.
/// Everything else goes through the dense pairwise commutation check of
/// [`product_operator`].
fn term_product_matrix(
    specs: &[crate::qsim::ObservableSpec],
    qubits: usize,
) -> Result<crate::qsim::Matrix, InequalityError> {
    use crate::qsim::{Matrix, ObservableSpec, XyMeasurement};
    let mut per_qubit: BTreeMap<usize, f64> = BTreeMap::new();
    let disjoint_xy = specs.iter().all(|s| match s {
        ObservableSpec::Xy { angle, qubit } if *qubit < qubits => {
            per_qubit.insert(*qubit, *angle).is_none()
        }
        _ => false,
    });
    if disjoint_xy && !specs.is_empty() {
        let factor = |q: usize| match per_qubit.get(&q) {
            Some(&angle) => XyMeasurement::new(angle).matrix(),
            None => Matrix::identity(2),
        };
        let mut m = factor(0);
        for q in 1..qubits {
            m = m.kron(&factor(q));
        }
        return Ok(m);
    }
    let matrices = specs
        .iter()
        .map(|s| crate::qsim::observable_matrix(s, qubits))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(product_operator(&matrices)?.matrix)
}

/// Builds a label-based remapping from inequality terms to distribution
/// indices.
fn remap_terms<'a>(
    ineq: &EntropicInequality,
    dist: &'a JointDistribution,
) -> Result<impl Fn(ProductTerm) -> ProductTerm + 'a, InequalityError> {
    let mut table = vec![0usize; ineq.variables().len()];
    for v in ineq.variables() {
        table[v.index] = dist
            .index_of(&v.label)
            .map_err(|_| InequalityError::UnboundVariable(v.label.clone()))?;
    }
    Ok(move |term: ProductTerm| {
        ProductTerm::from_indices(
            &term.indices().into_iter().map(|i| table[i]).collect::<Vec<_>>(),
        )
    })
}

/// Evaluates the square entropic inequality over a distribution of the six
/// product variables q1..q6 (each inequality term mapped to its product
/// variable). This is the form probed by the mixing demonstration; the
/// certified nine-variable inequality itself lives in
/// [`build_pm_entropic`].
pub fn evaluate_pm_products(
    dist: &JointDistribution,
    opts: EvalOptions,
) -> Result<EvaluationReport, InequalityError> {
    let f = families::pm_square();
    let ineq = build_pm_entropic();
    let q_index = |i: usize| -> Result<ProductTerm, InequalityError> {
        let label = &f.q_labels[i];
        let idx = dist
            .index_of(label)
            .map_err(|_| InequalityError::UnboundVariable(label.clone()))?;
        Ok(ProductTerm::from_indices(&[idx]))
    };
    // rhs of the square inequality in builder order: q1, q2, q4, q5, q3.
    let rhs_order = [0usize, 1, 3, 4, 2];
    let target = TermValue {
        term: ineq.term_label(ineq.target()),
        value: dist.delta(q_index(5)?, DistanceKind::Entropic)?,
    };
    let rhs = rhs_order
        .iter()
        .zip(ineq.rhs_terms())
        .map(|(&qi, &term)| {
            Ok(TermValue {
                term: ineq.term_label(term),
                value: dist.delta(q_index(qi)?, DistanceKind::Entropic)?,
            })
        })
        .collect::<Result<Vec<_>, InequalityError>>()?;
    let mut report =
        assemble_report(&ineq, "pm-products", "distribution", target.value, rhs, opts);
    report.inequality = "pm-entropic[q-products]".into();
    Ok(report)
}

/// Mixes the quantum square-product distribution with the classical one at
/// weight λ and evaluates the square inequality over the product variables.
/// At λ = 1/2 the left-hand side is exactly one bit and the right-hand side
/// zero.
pub fn pm_mixing_violation(lambda: f64) -> Result<EvaluationReport, InequalityError> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(InequalityError::BadWeight(lambda));
    }
    let quantum = canonical_distribution(CanonicalDistribution::PmQuantumProducts);
    let classical = canonical_distribution(CanonicalDistribution::PmClassicalProducts);
    let mixed = JointDistribution::mix(&quantum, &classical, lambda)?;
    let mut report = evaluate_pm_products(&mixed, EvalOptions::default())?;
    report.scenario = format!("pm-mixing(lambda={lambda})");
    Ok(report)
}
