//! Canonical variable layouts and product-term families shared by the
//! inequality builders, the derivation generator, and the classical oracle.

use crate::dist::{variables, ProductTerm, VariableId};
use crate::qsim::{ObservableSpec, PauliString};

/// Three parties (A, B, C), two settings each: variables
/// [A1, A2, B1, B2, C1, C2] with index 2·party + setting.
pub struct TripartiteFamily {
    pub variables: Vec<VariableId>,
    pub target: ProductTerm,
    pub rhs: Vec<ProductTerm>,
}

pub fn tripartite() -> TripartiteFamily {
    let vars = variables(&["A1", "A2", "B1", "B2", "C1", "C2"]);
    let t = |labels: &[&str]| ProductTerm::from_labels(&vars, labels).expect("known labels");
    TripartiteFamily {
        target: t(&["A1", "B1", "C1"]),
        rhs: vec![t(&["A1", "B2", "C2"]), t(&["A2", "B2", "C1"]), t(&["A2", "B1", "C2"])],
        variables: vars,
    }
}

/// N parties (N even), three settings each: variables M{i}^({j}) with index
/// 3·party + (setting − 1). Cyclic term j places setting 1 at party j,
/// setting 2 at party j+1 (mod N), and setting 3 everywhere else.
pub struct MultipartiteFamily {
    pub variables: Vec<VariableId>,
    /// All first-setting measurements.
    pub target: ProductTerm,
    /// The N cyclic terms, in party order.
    pub cyclic: Vec<ProductTerm>,
    /// All second-setting measurements.
    pub all_second: ProductTerm,
}

#[derive(Debug)]
pub struct OddPartyCount(pub usize);

pub fn multipartite(parties: usize) -> Result<MultipartiteFamily, OddPartyCount> {
    if parties < 4 || !parties.is_multiple_of(2) || parties > 12 {
        return Err(OddPartyCount(parties));
    }
    let labels: Vec<String> = (0..parties)
        .flat_map(|j| (1..=3).map(move |i| format!("M{i}^({})", j + 1)))
        .collect();
    let vars = variables(&labels);
    let index = |party: usize, setting: usize| 3 * party + setting - 1;
    let target = ProductTerm::from_indices(
        &(0..parties).map(|j| index(j, 1)).collect::<Vec<_>>(),
    );
    let cyclic = (0..parties)
        .map(|j| {
            let indices: Vec<usize> = (0..parties)
                .map(|p| {
                    if p == j {
                        index(p, 1)
                    } else if p == (j + 1) % parties {
                        index(p, 2)
                    } else {
                        index(p, 3)
                    }
                })
                .collect();
            ProductTerm::from_indices(&indices)
        })
        .collect();
    let all_second = ProductTerm::from_indices(
        &(0..parties).map(|j| index(j, 2)).collect::<Vec<_>>(),
    );
    Ok(MultipartiteFamily { variables: vars, target, cyclic, all_second })
}

/// The nine two-qubit square observables and their six commuting triples.
///
/// Variables [A, a, alpha, B, b, beta, C, c, gamma]; triples in the order
/// q1 = A·a·alpha, q2 = B·b·beta, q3 = C·c·gamma, q4 = A·B·C, q5 = a·b·c,
/// q6 = alpha·beta·gamma.
pub struct PmSquareFamily {
    pub variables: Vec<VariableId>,
    pub triples: Vec<ProductTerm>,
    pub q_labels: Vec<String>,
}

pub fn pm_square() -> PmSquareFamily {
    let vars = variables(&["A", "a", "alpha", "B", "b", "beta", "C", "c", "gamma"]);
    let t = |labels: &[&str]| ProductTerm::from_labels(&vars, labels).expect("known labels");
    PmSquareFamily {
        triples: vec![
            t(&["A", "a", "alpha"]),
            t(&["B", "b", "beta"]),
            t(&["C", "c", "gamma"]),
            t(&["A", "B", "C"]),
            t(&["a", "b", "c"]),
            t(&["alpha", "beta", "gamma"]),
        ],
        q_labels: (1..=6).map(|i| format!("q{i}")).collect(),
        variables: vars,
    }
}

/// Two-qubit Pauli observables of the square, in the variable order of
/// [`pm_square`].
pub fn pm_square_observables() -> Vec<(String, ObservableSpec)> {
    let pauli = |s: &str| ObservableSpec::Pauli(PauliString::parse(s).expect("valid symbols"));
    vec![
        ("A".into(), pauli("XI")),
        ("a".into(), pauli("IX")),
        ("alpha".into(), pauli("XX")),
        ("B".into(), pauli("IY")),
        ("b".into(), pauli("YI")),
        ("beta".into(), pauli("YY")),
        ("C".into(), pauli("XY")),
        ("c".into(), pauli("YX")),
        ("gamma".into(), pauli("ZZ")),
    ]
}
