//! Verification and synthesis of triangle-inequality derivation chains over
//! product terms.
//!
//! A chain certifies δ(target) ≤ Σ δ(leaves) for any distance that is
//! symmetric, associative, and obeys the triangle inequality: each step
//! splits an open term `u` into two parts `v`, `w` with u = v⊕w (the shared
//! block cancels in the product), and the terms left open at the end must be
//! exactly the claimed leaves.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dist::{ProductTerm, VariableId};
use crate::families;

#[derive(Debug, Error)]
pub enum ChainError {
    #[error("party count {0} must be an even number ≥ 4")]
    BadPartyCount(usize),
    #[error("unknown variable label {0:?}")]
    UnknownLabel(String),
}

/// One application of the triangle inequality: δ(u) ≤ δ(v) + δ(w),
/// valid iff u = v⊕w.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TriangleStep {
    pub u: ProductTerm,
    pub v: ProductTerm,
    pub w: ProductTerm,
}

/// True iff the step is a sound triangle application.
pub fn verify_step(step: &TriangleStep) -> bool {
    step.u == step.v ^ step.w
}

/// A sequence of triangle steps expanding `target` into `leaves`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivationChain {
    pub variables: Vec<VariableId>,
    pub target: ProductTerm,
    pub steps: Vec<TriangleStep>,
    pub leaves: Vec<ProductTerm>,
}

/// Outcome of [`verify_chain`]. Anything but `Accepted` carries the index
/// of the offending step where one exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ChainVerdict {
    Accepted,
    /// Step `index` violates u = v⊕w.
    InvalidStep { index: usize },
    /// Step `index` expands a term that is not open at that point.
    UnknownTerm { index: usize },
    /// The terms left open do not equal the claimed leaves as a multiset.
    LeafMismatch,
}

impl ChainVerdict {
    pub fn is_accepted(self) -> bool {
        self == ChainVerdict::Accepted
    }
}

/// Replays the chain's bookkeeping: the first step must decompose the
/// target, every later step a term produced earlier, and the terminal terms
/// must equal the leaves exactly. Acceptance implies
/// δ(target) ≤ Σ δ(leaves) for both distance kinds.
pub fn verify_chain(chain: &DerivationChain) -> ChainVerdict {
    let mut open: HashMap<ProductTerm, usize> = HashMap::new();
    *open.entry(chain.target).or_insert(0) += 1;
    for (index, step) in chain.steps.iter().enumerate() {
        match open.get_mut(&step.u) {
            Some(count) if *count > 0 => *count -= 1,
            _ => return ChainVerdict::UnknownTerm { index },
        }
        if !verify_step(step) {
            return ChainVerdict::InvalidStep { index };
        }
        *open.entry(step.v).or_insert(0) += 1;
        *open.entry(step.w).or_insert(0) += 1;
    }
    let mut claimed: HashMap<ProductTerm, usize> = HashMap::new();
    for &leaf in &chain.leaves {
        *claimed.entry(leaf).or_insert(0) += 1;
    }
    open.retain(|_, c| *c > 0);
    claimed.retain(|_, c| *c > 0);
    if open == claimed {
        ChainVerdict::Accepted
    } else {
        ChainVerdict::LeafMismatch
    }
}

/// Parity certificate: the XOR of the leaves equals the target. When true a
/// derivation chain exists (fold the leaves left to right).
pub fn xor_sum_check(target: ProductTerm, leaves: &[ProductTerm]) -> bool {
    leaves.iter().fold(ProductTerm::EMPTY, |acc, &t| acc ^ t) == target
}

/// True iff `target` lies in the GF(2) span of `columns`.
fn in_span(target: ProductTerm, columns: &[ProductTerm]) -> bool {
    let mut basis: Vec<u64> = Vec::new();
    for &c in columns {
        let mut v = c.mask();
        for &b in &basis {
            v = v.min(v ^ b);
        }
        if v != 0 {
            basis.push(v);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    let mut t = target.mask();
    for &b in &basis {
        t = t.min(t ^ b);
    }
    t == 0
}

/// Finds a sub-multiset of `allowed` whose XOR equals `target` (each entry
/// usable at most once) and folds it into a chain. Returns `None` when no
/// parity solution exists.
///
/// Among solutions, the one whose sorted index list is lexicographically
/// smallest is returned: indices are greedily included earliest-first
/// whenever the remainder stays solvable. Empty terms are never selected.
pub fn synthesize_chain(
    variables: &[VariableId],
    target: ProductTerm,
    allowed: &[ProductTerm],
) -> Option<DerivationChain> {
    if !in_span(target, allowed) {
        return None;
    }
    let mut residual = target;
    let mut selected: Vec<ProductTerm> = Vec::new();
    for (i, &term) in allowed.iter().enumerate() {
        if term.is_empty() {
            continue;
        }
        let next = residual ^ term;
        if in_span(next, &allowed[i + 1..]) {
            selected.push(term);
            residual = next;
        }
    }
    debug_assert!(residual.is_empty());
    let steps = fold_steps(target, &selected);
    Some(DerivationChain { variables: variables.to_vec(), target, steps, leaves: selected })
}

/// Left-to-right fold of leaves into triangle steps. With k leaves the
/// chain has k−1 steps; the last remainder coincides with the final leaf.
fn fold_steps(target: ProductTerm, leaves: &[ProductTerm]) -> Vec<TriangleStep> {
    let mut steps = Vec::new();
    let mut remainder = target;
    for &leaf in &leaves[..leaves.len().saturating_sub(1)] {
        let next = remainder ^ leaf;
        steps.push(TriangleStep { u: remainder, v: leaf, w: next });
        remainder = next;
    }
    steps
}

/// Replays the even-N multipartite derivation: N−1 expansions each peeling
/// one cyclic measurable term, then a final split into the last cyclic term
/// and the all-second-setting term. The leaves equal the multipartite
/// inequality's right-hand side.
pub fn generate_multipartite_chain(parties: usize) -> Result<DerivationChain, ChainError> {
    let family = families::multipartite(parties).map_err(|_| ChainError::BadPartyCount(parties))?;
    let mut leaves = family.cyclic.clone();
    leaves.push(family.all_second);
    let steps = fold_steps(family.target, &leaves);
    Ok(DerivationChain { variables: family.variables, target: family.target, steps, leaves })
}

/// Plain-text rendering in the δ(...) ≤ δ(...) + δ(...) notation, one step
/// per line, followed by the leaf list.
pub fn pretty_print(chain: &DerivationChain) -> String {
    let term = |t: ProductTerm| format!("δ({})", chain.display_term(t));
    let mut out = String::new();
    for step in &chain.steps {
        let _ = writeln!(out, "{} ≤ {} + {}", term(step.u), term(step.v), term(step.w));
    }
    let leaves: Vec<String> = chain.leaves.iter().map(|&l| term(l)).collect();
    let _ = writeln!(out, "leaves: {}", leaves.join(" + "));
    out
}

impl DerivationChain {
    fn display_term(&self, term: ProductTerm) -> String {
        let labels = term.labels(&self.variables);
        if labels.is_empty() {
            "1".to_string()
        } else {
            labels.join(",")
        }
    }
}

// JSON form: {"target": [labels], "steps": [{"u": [...], "v": [...],
// "w": [...]}], "leaves": [[...], ...]} with an explicit variable list.

#[derive(Serialize, Deserialize)]
struct ChainDto {
    variables: Vec<String>,
    target: Vec<String>,
    steps: Vec<StepDto>,
    leaves: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
struct StepDto {
    u: Vec<String>,
    v: Vec<String>,
    w: Vec<String>,
}

impl Serialize for DerivationChain {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let labels = |t: ProductTerm| t.labels(&self.variables);
        ChainDto {
            variables: self.variables.iter().map(|v| v.label.clone()).collect(),
            target: labels(self.target),
            steps: self
                .steps
                .iter()
                .map(|s| StepDto { u: labels(s.u), v: labels(s.v), w: labels(s.w) })
                .collect(),
            leaves: self.leaves.iter().map(|&l| labels(l)).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DerivationChain {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dto = ChainDto::deserialize(deserializer)?;
        let vars = crate::dist::variables(&dto.variables);
        let resolve = |labels: &[String]| {
            ProductTerm::from_labels(&vars, labels).map_err(D::Error::custom)
        };
        Ok(DerivationChain {
            target: resolve(&dto.target)?,
            steps: dto
                .steps
                .iter()
                .map(|s| {
                    Ok(TriangleStep { u: resolve(&s.u)?, v: resolve(&s.v)?, w: resolve(&s.w)? })
                })
                .collect::<Result<_, D::Error>>()?,
            leaves: dto.leaves.iter().map(|l| resolve(l)).collect::<Result<_, D::Error>>()?,
            variables: vars,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{variables, DistanceKind, JointDistribution};
    use proptest::prelude::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn term(vars: &[VariableId], labels: &[&str]) -> ProductTerm {
        ProductTerm::from_labels(vars, labels).unwrap()
    }

    /// The two-step tripartite chain: expand the target against {A1,B2,C2},
    /// then split the remainder into the other two measurable terms.
    fn tripartite_chain() -> DerivationChain {
        let vars = variables(&["A1", "A2", "B1", "B2", "C1", "C2"]);
        let target = term(&vars, &["A1", "B1", "C1"]);
        let v1 = term(&vars, &["A1", "B2", "C2"]);
        let rem = target ^ v1;
        let v2 = term(&vars, &["A2", "B2", "C1"]);
        let v3 = term(&vars, &["A2", "B1", "C2"]);
        DerivationChain {
            target,
            steps: vec![
                TriangleStep { u: target, v: v1, w: rem },
                TriangleStep { u: rem, v: v2, w: v3 },
            ],
            leaves: vec![v1, v2, v3],
            variables: vars,
        }
    }

    #[test]
    fn verify_step_parity() {
        let vars = variables(&["A", "B", "C", "D"]);
        let ab = term(&vars, &["A", "B"]);
        let ac = term(&vars, &["A", "C"]);
        let cb = term(&vars, &["C", "B"]);
        let cd = term(&vars, &["C", "D"]);
        assert!(verify_step(&TriangleStep { u: ab, v: ac, w: cb }));
        assert!(!verify_step(&TriangleStep { u: ab, v: ac, w: cd }));
        // First tripartite expansion.
        let vars6 = variables(&["A1", "A2", "B1", "B2", "C1", "C2"]);
        let u = term(&vars6, &["A1", "B1", "C1"]);
        let v = term(&vars6, &["A1", "B2", "C2"]);
        let w = term(&vars6, &["B2", "C2", "B1", "C1"]);
        assert!(verify_step(&TriangleStep { u, v, w }));
    }

    #[test]
    fn tripartite_chain_is_accepted_and_leaf_removal_rejected() {
        let chain = tripartite_chain();
        assert!(verify_chain(&chain).is_accepted());
        for i in 0..chain.leaves.len() {
            let mut broken = chain.clone();
            broken.leaves.remove(i);
            assert_eq!(verify_chain(&broken), ChainVerdict::LeafMismatch);
        }
    }

    #[test]
    fn invalid_and_unknown_steps_report_index() {
        let mut chain = tripartite_chain();
        chain.steps[1].w = chain.steps[1].v;
        assert_eq!(verify_chain(&chain), ChainVerdict::InvalidStep { index: 1 });
        let mut chain = tripartite_chain();
        chain.steps[1].u = chain.target;
        assert_eq!(verify_chain(&chain), ChainVerdict::UnknownTerm { index: 1 });
    }

    #[test]
    fn xor_sum_check_on_known_inequalities() {
        let chain = tripartite_chain();
        assert!(xor_sum_check(chain.target, &chain.leaves));
        assert!(!xor_sum_check(chain.target, &chain.leaves[..2]));
        let f = families::pm_square();
        let rhs = [f.triples[0], f.triples[1], f.triples[3], f.triples[4], f.triples[2]];
        assert!(xor_sum_check(f.triples[5], &rhs));
        let m = families::multipartite(6).unwrap();
        let mut leaves = m.cyclic.clone();
        leaves.push(m.all_second);
        assert!(xor_sum_check(m.target, &leaves));
    }

    #[test]
    fn synthesize_recovers_tripartite_decomposition() {
        let chain = tripartite_chain();
        let got = synthesize_chain(&chain.variables, chain.target, &chain.leaves).unwrap();
        assert!(verify_chain(&got).is_accepted());
        assert_eq!(got.leaves, chain.leaves);
        assert_eq!(got.steps.len(), 2);
    }

    #[test]
    fn synthesize_finds_five_term_square_solution() {
        // All six triple products allowed; the five-term decomposition of
        // the last triple is preferred over the degenerate self-solution.
        let f = families::pm_square();
        let target = f.triples[5];
        let got = synthesize_chain(&f.variables, target, &f.triples).unwrap();
        assert_eq!(got.leaves, f.triples[..5].to_vec());
        assert!(verify_chain(&got).is_accepted());
    }

    #[test]
    fn synthesize_failure_and_single_leaf() {
        let vars = variables(&["A1", "A2"]);
        let a1 = term(&vars, &["A1"]);
        let a2 = term(&vars, &["A2"]);
        assert!(synthesize_chain(&vars, a1, &[a2]).is_none());
        let got = synthesize_chain(&vars, a1, &[a1]).unwrap();
        assert!(got.steps.is_empty());
        assert_eq!(got.leaves, vec![a1]);
        assert!(verify_chain(&got).is_accepted());
    }

    #[test]
    fn synthesize_agrees_with_exhaustive_subset_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let n = rng.gen_range(2..6usize);
            let m = rng.gen_range(1..=12usize);
            let full = (1u64 << n) - 1;
            let allowed: Vec<ProductTerm> =
                (0..m).map(|_| ProductTerm::from_mask(rng.gen_range(0..=full))).collect();
            let target = ProductTerm::from_mask(rng.gen_range(1..=full));
            let exhaustive = (0u64..1 << m).any(|sel| {
                let x = (0..m)
                    .filter(|&i| sel >> i & 1 == 1)
                    .fold(ProductTerm::EMPTY, |acc, i| acc ^ allowed[i]);
                x == target
            });
            let vars = variables(&(0..n).map(|i| format!("V{i}")).collect::<Vec<_>>());
            let synthesized = synthesize_chain(&vars, target, &allowed);
            assert_eq!(synthesized.is_some(), exhaustive);
            if let Some(chain) = synthesized {
                assert!(verify_chain(&chain).is_accepted());
                assert!(xor_sum_check(target, &chain.leaves));
            }
        }
    }

    #[test]
    fn multipartite_generation_accepted_for_even_counts() {
        for n in [4usize, 6, 8, 10, 12] {
            let chain = generate_multipartite_chain(n).unwrap();
            assert_eq!(chain.steps.len(), n);
            assert_eq!(chain.leaves.len(), n + 1);
            assert!(verify_chain(&chain).is_accepted());
            let m = families::multipartite(n).unwrap();
            let mut expected = m.cyclic.clone();
            expected.push(m.all_second);
            assert_eq!(chain.leaves, expected);
        }
        for n in [3usize, 5, 2, 14] {
            assert!(generate_multipartite_chain(n).is_err());
        }
    }

    #[test]
    fn multipartite_leaves_are_distinct_at_n6() {
        let chain = generate_multipartite_chain(6).unwrap();
        for (i, a) in chain.leaves.iter().enumerate() {
            for b in &chain.leaves[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn accepted_chains_bound_random_distributions() {
        // Soundness witness: δ(target) ≤ Σ δ(leaves) on random tables.
        let chains = [tripartite_chain(), generate_multipartite_chain(4).unwrap()];
        for chain in &chains {
            assert!(verify_chain(chain).is_accepted());
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            for _ in 0..1000 {
                let d = JointDistribution::sample_dirichlet(chain.variables.clone(), &mut rng)
                    .unwrap();
                for kind in [DistanceKind::Entropic, DistanceKind::Covariance] {
                    let lhs = d.delta(chain.target, kind).unwrap();
                    let rhs: f64 = chain
                        .leaves
                        .iter()
                        .map(|&l| d.delta(l, kind).unwrap())
                        .sum();
                    assert!(lhs <= rhs + 1e-12);
                }
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let chain = tripartite_chain();
        let json = serde_json::to_string(&chain).unwrap();
        let back: DerivationChain = serde_json::from_str(&json).unwrap();
        assert_eq!(back, chain);
        assert!(verify_chain(&back).is_accepted());
        let text = pretty_print(&chain);
        assert!(text.contains("δ(A1,B1,C1) ≤ δ(A1,B2,C2) + δ(B1,B2,C1,C2)"));
        assert!(text.contains("leaves:"));
    }

    proptest! {
        #[test]
        fn verify_step_symmetric_in_parts(u in 0u64..64, v in 0u64..64) {
            let u = ProductTerm::from_mask(u);
            let v = ProductTerm::from_mask(v);
            let w = u ^ v;
            let forward = TriangleStep { u, v, w };
            let swapped = TriangleStep { u, v: w, w: v };
            prop_assert!(verify_step(&forward));
            prop_assert!(verify_step(&swapped));
        }
    }
}
