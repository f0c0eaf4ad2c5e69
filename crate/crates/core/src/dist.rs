//! Shannon entropy and information-theoretic distances over joint
//! distributions of binary ±1 variables.
//!
//! The central objects are [`JointDistribution`], a dense probability table
//! over outcome tuples in {−1,+1}^n, and [`ProductTerm`], a parity vector
//! selecting which variables enter a product observable. Because every
//! variable squares to +1, repeated variables cancel and products compose by
//! XOR of parity vectors. The distance of a product term is the entropy (or
//! one minus the expectation) of its ±1 product outcome.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::BitXor;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Absolute tolerance on probability normalization at construction.
/// Inputs off by more are rejected, not renormalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Absolute tolerance for triangle-inequality slack checks.
pub const TRIANGLE_TOL: f64 = 1e-12;

/// Hard cap on the variable count of a dense probability table
/// (2^24 cells ≈ 16M doubles).
pub const MAX_VARIABLES: usize = 24;

#[derive(Debug, Error)]
pub enum DistError {
    #[error("probability {0} outside [0, 1]")]
    Domain(f64),
    #[error("probabilities sum to {0}, expected 1 within {NORMALIZATION_TOL:e}")]
    NotNormalized(f64),
    #[error("negative probability {value} at cell {cell}")]
    NegativeProbability { cell: usize, value: f64 },
    #[error("{0} variables exceed the dense-table cap of {MAX_VARIABLES}")]
    TooManyVariables(usize),
    #[error("probability table has {got} cells, expected {expected}")]
    TableSize { got: usize, expected: usize },
    #[error("duplicate variable label {0:?}")]
    DuplicateLabel(String),
    #[error("unknown variable label {0:?}")]
    UnknownLabel(String),
    #[error("variable index {index} out of range for a {count}-variable scenario")]
    IndexOutOfRange { index: usize, count: usize },
    #[error("product term has empty support")]
    EmptySupport,
    #[error("operation needs at least {needed} variables, distribution has {got}")]
    NotEnoughVariables { needed: usize, got: usize },
    #[error("variable lists differ between distributions")]
    VariableMismatch,
    #[error("mixing weight {0} outside [0, 1]")]
    BadWeight(f64),
    #[error("bad outcome key {0:?}: expected one '+'/'-' character per variable")]
    BadOutcomeKey(String),
    #[error("outcome tuple has {got} entries, expected {expected}")]
    BadOutcomeTuple { got: usize, expected: usize },
}

/// A named binary ±1 variable inside one scenario.
///
/// Indices within a scenario are distinct and contiguous from zero; labels
/// are distinct. Both are enforced by [`JointDistribution::new`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VariableId {
    pub index: usize,
    pub label: String,
}

impl VariableId {
    pub fn new(index: usize, label: impl Into<String>) -> Self {
        Self { index, label: label.into() }
    }
}

/// Builds a contiguous variable list from labels.
pub fn variables<S: AsRef<str>>(labels: &[S]) -> Vec<VariableId> {
    labels
        .iter()
        .enumerate()
        .map(|(i, l)| VariableId::new(i, l.as_ref()))
        .collect()
}

/// Parity vector over variable indices: bit set ⇔ the variable appears an
/// odd number of times in the product. Repeated ±1 variables cancel, so the
/// product of two terms is the XOR of their parity vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ProductTerm(u64);

impl ProductTerm {
    pub const EMPTY: ProductTerm = ProductTerm(0);

    /// Term from variable indices; repeated indices cancel.
    pub fn from_indices(indices: &[usize]) -> Self {
        let mut mask = 0u64;
        for &i in indices {
            assert!(i < 64, "variable index {i} does not fit a parity mask");
            mask ^= 1 << i;
        }
        ProductTerm(mask)
    }

    /// Term from labels resolved against a variable list.
    pub fn from_labels<S: AsRef<str>>(vars: &[VariableId], labels: &[S]) -> Result<Self, DistError> {
        let mut mask = 0u64;
        for l in labels {
            let l = l.as_ref();
            let idx = vars
                .iter()
                .find(|v| v.label == l)
                .ok_or_else(|| DistError::UnknownLabel(l.to_string()))?
                .index;
            mask ^= 1 << idx;
        }
        Ok(ProductTerm(mask))
    }

    pub fn from_mask(mask: u64) -> Self {
        ProductTerm(mask)
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn support_size(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn contains(self, index: usize) -> bool {
        index < 64 && self.0 >> index & 1 == 1
    }

    pub fn indices(self) -> Vec<usize> {
        (0..64).filter(|&i| self.contains(i)).collect()
    }

    /// Labels of the term's support, in index order.
    pub fn labels(self, vars: &[VariableId]) -> Vec<String> {
        self.indices()
            .into_iter()
            .filter_map(|i| vars.get(i).map(|v| v.label.clone()))
            .collect()
    }

    /// Human-readable product, e.g. `A1·B2·C2`.
    pub fn display(self, vars: &[VariableId]) -> String {
        let labels = self.labels(vars);
        if labels.is_empty() {
            "1".to_string()
        } else {
            labels.join("·")
        }
    }
}

impl BitXor for ProductTerm {
    type Output = ProductTerm;
    fn bitxor(self, rhs: ProductTerm) -> ProductTerm {
        ProductTerm(self.0 ^ rhs.0)
    }
}

/// Which distance is applied to a product term.
///
/// Both kinds are symmetric and obey the same associativity-based triangle
/// calculus, which is what [`JointDistribution::check_axioms`] probes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceKind {
    /// Shannon entropy of the product outcome, in bits; range [0, 1].
    Entropic,
    /// One minus the product expectation; range [0, 2].
    Covariance,
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DistanceKind::Entropic => write!(f, "entropic"),
            DistanceKind::Covariance => write!(f, "covariance"),
        }
    }
}

impl FromStr for DistanceKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "entropic" => Ok(DistanceKind::Entropic),
            "covariance" => Ok(DistanceKind::Covariance),
            other => Err(format!("unknown distance kind {other:?}")),
        }
    }
}

/// Binary entropy −p·log₂p − (1−p)·log₂(1−p) with 0·log₂0 ≡ 0.
///
/// Values outside [0, 1] by more than 1e−12 are a domain error; values
/// inside the slack are clamped.
pub fn binary_entropy(p: f64) -> Result<f64, DistError> {
    if !p.is_finite() || !(-NORMALIZATION_TOL..=1.0 + NORMALIZATION_TOL).contains(&p) {
        return Err(DistError::Domain(p));
    }
    Ok(h2(p.clamp(0.0, 1.0)))
}

/// Binary entropy on an already-validated probability. The endpoint branch
/// is explicit so deterministic outcomes yield exactly zero.
pub(crate) fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Report of a randomized distance-axiom check; see
/// [`JointDistribution::check_axioms`].
#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport {
    pub kind: DistanceKind,
    pub trials: usize,
    /// Worst observed δ(u) − δ(v) − δ(w) over sampled triples with u = v⊕w.
    /// The triangle inequality holds when this is ≤ [`TRIANGLE_TOL`].
    pub worst_slack: f64,
    /// All sampled distances were ≥ 0.
    pub nonnegative: bool,
    /// d(t, t) evaluated to exactly zero for every sampled term.
    pub self_distance_exact: bool,
    /// Terms are parity vectors, so distances are order-free by construction.
    pub symmetry: bool,
    pub passed: bool,
}

/// Probability table over outcome tuples in {−1,+1}^n for a named set of
/// binary variables.
///
/// Cell indexing: bit k of a cell index is 0 when variable k has outcome +1
/// and 1 when it has outcome −1.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    vars: Vec<VariableId>,
    probs: Vec<f64>,
}

impl JointDistribution {
    /// Validates and constructs a distribution.
    ///
    /// Rejects: more than [`MAX_VARIABLES`] variables, duplicate labels,
    /// non-contiguous indices, wrong table size, probabilities below
    /// −1e−12, and normalization off by more than 1e−12. Probabilities in
    /// [−1e−12, 0) are clamped to zero.
    pub fn new(vars: Vec<VariableId>, mut probs: Vec<f64>) -> Result<Self, DistError> {
        let n = vars.len();
        if n > MAX_VARIABLES {
            return Err(DistError::TooManyVariables(n));
        }
        for (i, v) in vars.iter().enumerate() {
            if v.index != i {
                return Err(DistError::IndexOutOfRange { index: v.index, count: n });
            }
            if vars[..i].iter().any(|u| u.label == v.label) {
                return Err(DistError::DuplicateLabel(v.label.clone()));
            }
        }
        let cells = 1usize << n;
        if probs.len() != cells {
            return Err(DistError::TableSize { got: probs.len(), expected: cells });
        }
        let mut sum = 0.0;
        for (cell, p) in probs.iter_mut().enumerate() {
            if !p.is_finite() || *p < -NORMALIZATION_TOL {
                return Err(DistError::NegativeProbability { cell, value: *p });
            }
            if *p < 0.0 {
                *p = 0.0;
            }
            sum += *p;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(DistError::NotNormalized(sum));
        }
        Ok(Self { vars, probs })
    }

    /// Distribution from labels with implied indices 0, 1, ….
    pub fn from_labels<S: AsRef<str>>(labels: &[S], probs: Vec<f64>) -> Result<Self, DistError> {
        Self::new(variables(labels), probs)
    }

    /// Point mass on one outcome tuple (+1/−1 per variable).
    pub fn point_mass(vars: Vec<VariableId>, outcomes: &[i8]) -> Result<Self, DistError> {
        if outcomes.len() != vars.len() {
            return Err(DistError::BadOutcomeTuple { got: outcomes.len(), expected: vars.len() });
        }
        let cell = cell_of(outcomes);
        let mut probs = vec![0.0; 1 << vars.len()];
        probs[cell] = 1.0;
        Self::new(vars, probs)
    }

    /// Uniform distribution over all outcome tuples.
    pub fn uniform(vars: Vec<VariableId>) -> Result<Self, DistError> {
        let cells = 1usize << vars.len();
        Self::new(vars, vec![1.0 / cells as f64; cells])
    }

    /// Uniform distribution over the given support cells.
    pub fn uniform_over(vars: Vec<VariableId>, support: &[usize]) -> Result<Self, DistError> {
        let cells = 1usize << vars.len();
        let mut probs = vec![0.0; cells];
        let w = 1.0 / support.len() as f64;
        for &c in support {
            if c >= cells {
                return Err(DistError::IndexOutOfRange { index: c, count: cells });
            }
            probs[c] += w;
        }
        Self::new(vars, probs)
    }

    /// Dirichlet(1,…,1) random table: uniform over the probability simplex.
    pub fn sample_dirichlet<R: Rng>(vars: Vec<VariableId>, rng: &mut R) -> Result<Self, DistError> {
        let cells = 1usize << vars.len();
        let mut w: Vec<f64> = (0..cells).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
        let sum: f64 = w.iter().sum();
        for x in &mut w {
            *x /= sum;
        }
        // Absorb the rounding residue so construction never trips on it.
        let resid = 1.0 - w.iter().sum::<f64>();
        let argmax = (0..cells).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap_or(0);
        w[argmax] += resid;
        Self::new(vars, w)
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.vars
    }

    pub fn variable_count(&self) -> usize {
        self.vars.len()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    /// Index of a variable by label.
    pub fn index_of(&self, label: &str) -> Result<usize, DistError> {
        self.vars
            .iter()
            .find(|v| v.label == label)
            .map(|v| v.index)
            .ok_or_else(|| DistError::UnknownLabel(label.to_string()))
    }

    fn check_term(&self, term: ProductTerm) -> Result<(), DistError> {
        if term.is_empty() {
            return Err(DistError::EmptySupport);
        }
        let n = self.vars.len();
        if term.mask() >> n != 0 {
            let index = 63 - term.mask().leading_zeros() as usize;
            return Err(DistError::IndexOutOfRange { index, count: n });
        }
        Ok(())
    }

    /// Shannon entropy of the full table, in bits.
    pub fn shannon_entropy(&self) -> f64 {
        self.probs
            .iter()
            .map(|&p| if p > 0.0 { -p * p.log2() } else { 0.0 })
            .sum()
    }

    /// Marginal distribution over a subset of variables (reindexed 0, 1, …
    /// in the order given).
    pub fn marginal(&self, indices: &[usize]) -> Result<JointDistribution, DistError> {
        let n = self.vars.len();
        for &i in indices {
            if i >= n {
                return Err(DistError::IndexOutOfRange { index: i, count: n });
            }
        }
        let sub_vars: Vec<VariableId> = indices
            .iter()
            .enumerate()
            .map(|(k, &i)| VariableId::new(k, self.vars[i].label.clone()))
            .collect();
        let mut probs = vec![0.0; 1 << indices.len()];
        for (cell, &p) in self.probs.iter().enumerate() {
            let mut sub = 0usize;
            for (k, &i) in indices.iter().enumerate() {
                sub |= (cell >> i & 1) << k;
            }
            probs[sub] += p;
        }
        JointDistribution::new(sub_vars, probs)
    }

    /// P(product over the term's support = +1).
    fn product_plus_probability(&self, term: ProductTerm) -> Result<f64, DistError> {
        self.check_term(term)?;
        let mask = term.mask() as usize;
        let mut plus = 0.0;
        for (cell, &p) in self.probs.iter().enumerate() {
            if (cell & mask).count_ones().is_multiple_of(2) {
                plus += p;
            }
        }
        Ok(plus.clamp(0.0, 1.0))
    }

    /// Two-point distribution of the ±1 product of the selected variables.
    /// The synthetic variable is labelled with the product expression.
    pub fn product_marginal(&self, term: ProductTerm) -> Result<JointDistribution, DistError> {
        let plus = self.product_plus_probability(term)?;
        JointDistribution::new(
            vec![VariableId::new(0, term.display(&self.vars))],
            vec![plus, 1.0 - plus],
        )
    }

    /// Expectation of the ±1 product: P(+1) − P(−1).
    pub fn product_expectation(&self, term: ProductTerm) -> Result<f64, DistError> {
        Ok(2.0 * self.product_plus_probability(term)? - 1.0)
    }

    /// Distance of a product term: entropy of the product outcome, or one
    /// minus its expectation.
    pub fn delta(&self, term: ProductTerm, kind: DistanceKind) -> Result<f64, DistError> {
        let plus = self.product_plus_probability(term)?;
        Ok(match kind {
            DistanceKind::Entropic => h2(plus),
            DistanceKind::Covariance => 2.0 * (1.0 - plus),
        })
    }

    /// Distance between two product terms, d(a, b) = δ(a⊕b).
    ///
    /// Repeated variables cancel exactly, so d(t, t) is zero by construction
    /// (the product is the constant +1), not by floating-point accident.
    pub fn pair_distance(
        &self,
        a: ProductTerm,
        b: ProductTerm,
        kind: DistanceKind,
    ) -> Result<f64, DistError> {
        let u = a ^ b;
        if u.is_empty() {
            return Ok(0.0);
        }
        self.delta(u, kind)
    }

    /// Largest single-variable conditional entropy, max_i H(all | X_i)
    /// = H(all) − min_i H(X_i).
    pub fn emax_shannon(&self) -> Result<f64, DistError> {
        let n = self.vars.len();
        if n < 2 {
            return Err(DistError::NotEnoughVariables { needed: 2, got: n });
        }
        let joint = self.shannon_entropy();
        let best = (0..n)
            .map(|i| joint - self.marginal(&[i]).expect("index in range").shannon_entropy())
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(best)
    }

    /// Randomized check of the distance axioms for `kind`: non-negativity,
    /// exact self-distance, and the triangle inequality on `trials` sampled
    /// term triples (u, v, w) with u = v⊕w. Deterministic given `seed`.
    pub fn check_axioms(
        &self,
        kind: DistanceKind,
        trials: usize,
        seed: u64,
    ) -> Result<AxiomReport, DistError> {
        let n = self.vars.len();
        if n < 3 {
            return Err(DistError::NotEnoughVariables { needed: 3, got: n });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let full = (1u64 << n) - 1;
        let mut worst = f64::NEG_INFINITY;
        let mut nonnegative = true;
        let mut self_exact = true;
        for _ in 0..trials {
            let v = ProductTerm::from_mask(rng.gen_range(1..=full));
            let w = loop {
                let w = ProductTerm::from_mask(rng.gen_range(1..=full));
                if w != v {
                    break w;
                }
            };
            let u = v ^ w;
            let du = self.delta(u, kind)?;
            let dv = self.delta(v, kind)?;
            let dw = self.delta(w, kind)?;
            nonnegative &= du >= 0.0 && dv >= 0.0 && dw >= 0.0;
            self_exact &= self.pair_distance(v, v, kind)? == 0.0
                && self.pair_distance(w, w, kind)? == 0.0;
            worst = worst.max(du - dv - dw);
        }
        let worst_slack = if trials == 0 { 0.0 } else { worst };
        let passed = nonnegative && self_exact && worst_slack <= TRIANGLE_TOL;
        Ok(AxiomReport {
            kind,
            trials,
            worst_slack,
            nonnegative,
            self_distance_exact: self_exact,
            symmetry: true,
            passed,
        })
    }

    /// Cell-wise convex combination λ·d1 + (1−λ)·d2 of two distributions
    /// over identical variable lists.
    pub fn mix(d1: &JointDistribution, d2: &JointDistribution, lambda: f64) -> Result<Self, DistError> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(DistError::BadWeight(lambda));
        }
        if d1.vars != d2.vars {
            return Err(DistError::VariableMismatch);
        }
        let probs = d1
            .probs
            .iter()
            .zip(&d2.probs)
            .map(|(&a, &b)| lambda * a + (1.0 - lambda) * b)
            .collect();
        Self::new(d1.vars.clone(), probs)
    }
}

/// Cell index of an outcome tuple: bit k set ⇔ variable k is −1.
pub fn cell_of(outcomes: &[i8]) -> usize {
    outcomes
        .iter()
        .enumerate()
        .fold(0usize, |acc, (k, &s)| acc | (usize::from(s < 0) << k))
}

/// Outcome sign of variable `var` in the given cell.
pub fn outcome_sign(cell: usize, var: usize) -> i8 {
    if cell >> var & 1 == 0 {
        1
    } else {
        -1
    }
}

// JSON form: {"variables": [labels], "probabilities": {"+-+": p, ...}} with
// one '+'/'-' character per variable in variable order; zero cells omitted.

#[derive(Serialize, Deserialize)]
struct DistributionDto {
    variables: Vec<String>,
    probabilities: BTreeMap<String, f64>,
}

fn outcome_key(cell: usize, n: usize) -> String {
    (0..n).map(|k| if cell >> k & 1 == 0 { '+' } else { '-' }).collect()
}

fn parse_outcome_key(key: &str, n: usize) -> Result<usize, DistError> {
    let bad = || DistError::BadOutcomeKey(key.to_string());
    let mut cell = 0usize;
    let mut count = 0usize;
    for (k, ch) in key.chars().enumerate() {
        match ch {
            '+' => {}
            '-' | '\u{2212}' => cell |= 1 << k,
            _ => return Err(bad()),
        }
        count = k + 1;
    }
    if count != n {
        return Err(bad());
    }
    Ok(cell)
}

impl Serialize for JointDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let n = self.vars.len();
        let probabilities = self
            .probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p != 0.0)
            .map(|(cell, &p)| (outcome_key(cell, n), p))
            .collect();
        DistributionDto {
            variables: self.vars.iter().map(|v| v.label.clone()).collect(),
            probabilities,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for JointDistribution {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dto = DistributionDto::deserialize(deserializer)?;
        let n = dto.variables.len();
        if n > MAX_VARIABLES {
            return Err(D::Error::custom(DistError::TooManyVariables(n)));
        }
        let mut probs = vec![0.0; 1 << n];
        for (key, p) in &dto.probabilities {
            let cell = parse_outcome_key(key, n).map_err(D::Error::custom)?;
            probs[cell] += p;
        }
        JointDistribution::from_labels(&dto.variables, probs).map_err(D::Error::custom)
    }
}
