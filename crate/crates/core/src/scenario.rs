//! Measurement scenarios: party/setting layouts, angle assignments, and the
//! JSON scenario format binding variables to either a joint distribution or
//! a quantum state with one observable per variable.

use std::collections::BTreeMap;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::dist::{JointDistribution, VariableId};
use crate::qsim::{
    observable_matrix, DensityMatrix, Matrix, ObservableSpec, PauliString, Phase, QsimError,
    QuantumState, StateVector, C64,
};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("party {0:?} has no settings entry")]
    MissingSettings(String),
    #[error("duplicate variable label {0:?}")]
    DuplicateLabel(String),
    #[error("variable {0:?} has no bound observable")]
    UnboundVariable(String),
    #[error("unknown variable ({party}, {setting})")]
    UnknownPartySetting { party: usize, setting: usize },
    #[error("unknown angle for variable {0:?}")]
    MissingAngle(String),
    #[error("bad state spec: {0}")]
    BadState(String),
    #[error("bad observable spec for {0:?}")]
    BadObservable(String),
    #[error(transparent)]
    Qsim(#[from] QsimError),
    #[error(transparent)]
    Dist(#[from] crate::dist::DistError),
}

/// Flat indexing of (party, setting) pairs onto scenario variables.
///
/// Variables are ordered party-major: index = party·settings_per_party
/// + setting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartySettingLayout {
    party_labels: Vec<String>,
    settings_per_party: usize,
    variables: Vec<VariableId>,
}

impl PartySettingLayout {
    pub fn new(party_labels: Vec<String>, setting_labels: Vec<Vec<String>>) -> Self {
        assert_eq!(party_labels.len(), setting_labels.len());
        let settings_per_party = setting_labels.first().map_or(0, Vec::len);
        assert!(setting_labels.iter().all(|s| s.len() == settings_per_party));
        let variables = setting_labels
            .iter()
            .flatten()
            .enumerate()
            .map(|(i, l)| VariableId::new(i, l.clone()))
            .collect();
        Self { party_labels, settings_per_party, variables }
    }

    /// Tripartite layout with variables [A1, A2, B1, B2, C1, C2].
    pub fn tripartite() -> Self {
        Self::new(
            vec!["Alice".into(), "Bob".into(), "Charlie".into()],
            ["A", "B", "C"]
                .iter()
                .map(|p| vec![format!("{p}1"), format!("{p}2")])
                .collect(),
        )
    }

    /// N-party layout with three settings per party, variables M{i}^({j}).
    pub fn multipartite(parties: usize) -> Self {
        Self::new(
            (1..=parties).map(|j| format!("P{j}")).collect(),
            (1..=parties)
                .map(|j| (1..=3).map(|i| format!("M{i}^({j})")).collect())
                .collect(),
        )
    }

    pub fn parties(&self) -> usize {
        self.party_labels.len()
    }

    pub fn party_labels(&self) -> &[String] {
        &self.party_labels
    }

    pub fn settings_per_party(&self) -> usize {
        self.settings_per_party
    }

    pub fn variables(&self) -> &[VariableId] {
        &self.variables
    }

    pub fn variable_index(&self, party: usize, setting: usize) -> Result<usize, ScenarioError> {
        if party >= self.parties() || setting >= self.settings_per_party {
            return Err(ScenarioError::UnknownPartySetting { party, setting });
        }
        Ok(party * self.settings_per_party + setting)
    }

    pub fn party_setting_of(&self, variable: usize) -> (usize, usize) {
        (variable / self.settings_per_party, variable % self.settings_per_party)
    }

    pub fn setting_labels_of(&self, party: usize) -> Vec<String> {
        (0..self.settings_per_party)
            .map(|s| self.variables[party * self.settings_per_party + s].label.clone())
            .collect()
    }
}

/// Angle assignment per (party, setting), keyed by variable label.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AngleConfig {
    angles: BTreeMap<String, f64>,
}

impl AngleConfig {
    pub fn new() -> Self {
        Self::default()
    }

    /// The same per-setting angles for every party.
    pub fn tied(layout: &PartySettingLayout, setting_angles: &[f64]) -> Self {
        assert_eq!(setting_angles.len(), layout.settings_per_party());
        let mut config = Self::new();
        for v in layout.variables() {
            let (_, setting) = layout.party_setting_of(v.index);
            config.angles.insert(v.label.clone(), setting_angles[setting]);
        }
        config
    }

    pub fn set(&mut self, label: impl Into<String>, angle: f64) {
        self.angles.insert(label.into(), angle);
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.angles.get(label).copied()
    }

    pub fn angle_of(&self, variable: &VariableId) -> Result<f64, ScenarioError> {
        self.get(&variable.label)
            .ok_or_else(|| ScenarioError::MissingAngle(variable.label.clone()))
    }

    pub fn labels(&self) -> impl Iterator<Item = (&String, f64)> {
        self.angles.iter().map(|(l, &a)| (l, a))
    }

    /// Sum of the angles of the term's variables.
    pub fn term_angle_sum(
        &self,
        term: crate::dist::ProductTerm,
        variables: &[VariableId],
    ) -> Result<f64, ScenarioError> {
        term.indices()
            .into_iter()
            .map(|i| self.angle_of(&variables[i]))
            .sum()
    }
}

/// Quantum state description as serialized in scenario files.
#[derive(Debug, Clone, PartialEq)]
pub enum StateSpec {
    Ghz(usize),
    Amplitudes(Vec<C64>),
    Density(Vec<Vec<C64>>),
}

impl StateSpec {
    pub fn realize(&self) -> Result<QuantumState, ScenarioError> {
        match self {
            StateSpec::Ghz(n) => Ok(StateVector::ghz(*n)?.into()),
            StateSpec::Amplitudes(a) => Ok(StateVector::from_amplitudes(a.clone())?.into()),
            StateSpec::Density(rows) => {
                let dim = rows.len();
                if rows.iter().any(|r| r.len() != dim) {
                    return Err(ScenarioError::BadState("density matrix is not square".into()));
                }
                let mut m = Matrix::zeros(dim);
                for (r, row) in rows.iter().enumerate() {
                    for (c, &z) in row.iter().enumerate() {
                        m.set(r, c, z);
                    }
                }
                Ok(DensityMatrix::new(m)?.into())
            }
        }
    }

    pub fn qubits(&self) -> Result<usize, ScenarioError> {
        let dim = match self {
            StateSpec::Ghz(n) => return Ok(*n),
            StateSpec::Amplitudes(a) => a.len(),
            StateSpec::Density(rows) => rows.len(),
        };
        if dim < 2 || !dim.is_power_of_two() {
            return Err(ScenarioError::BadState(format!("dimension {dim} is not a power of two")));
        }
        Ok(dim.trailing_zeros() as usize)
    }
}

/// Quantum side of a scenario: a state and one observable per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumBinding {
    pub state: StateSpec,
    pub observables: BTreeMap<String, ObservableSpec>,
}

impl QuantumBinding {
    /// Dense matrix of the observable bound to `label`.
    pub fn observable(&self, label: &str) -> Result<Matrix, ScenarioError> {
        let qubits = self.state.qubits()?;
        let spec = self
            .observables
            .get(label)
            .ok_or_else(|| ScenarioError::UnboundVariable(label.to_string()))?;
        Ok(observable_matrix(spec, qubits)?)
    }
}

/// Either a joint outcome distribution or a quantum binding over the
/// scenario's variables.
#[derive(Debug, Clone, PartialEq)]
pub enum Binding {
    Distribution(JointDistribution),
    Quantum(QuantumBinding),
}

impl Binding {
    pub fn kind(&self) -> &'static str {
        match self {
            Binding::Distribution(_) => "distribution",
            Binding::Quantum(_) => "quantum",
        }
    }
}

/// A named measurement scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub parties: Vec<String>,
    pub settings: BTreeMap<String, Vec<String>>,
    pub binding: Binding,
}

impl Scenario {
    /// The flat variable list: parties in declared order, settings in
    /// declared order within each party.
    pub fn variables(&self) -> Result<Vec<VariableId>, ScenarioError> {
        let mut vars: Vec<VariableId> = Vec::new();
        for party in &self.parties {
            let settings = self
                .settings
                .get(party)
                .ok_or_else(|| ScenarioError::MissingSettings(party.clone()))?;
            for label in settings {
                if vars.iter().any(|v| v.label == *label) {
                    return Err(ScenarioError::DuplicateLabel(label.clone()));
                }
                vars.push(VariableId::new(vars.len(), label.clone()));
            }
        }
        Ok(vars)
    }

    pub fn from_layout(name: impl Into<String>, layout: &PartySettingLayout, binding: Binding) -> Self {
        let settings = layout
            .party_labels()
            .iter()
            .enumerate()
            .map(|(p, label)| (label.clone(), layout.setting_labels_of(p)))
            .collect();
        Self {
            name: name.into(),
            parties: layout.party_labels().to_vec(),
            settings,
            binding,
        }
    }
}

// JSON forms.
//
// Scenario: {"name": ..., "parties": [...], "settings": {party: [labels]},
//            "binding": {"quantum": {...}} | {"distribution": {...}}}
// State: {"ghz": N} | {"amplitudes": [[re, im], ...]}
//        | {"density": [[[re, im], ...], ...]}
// Observable: {"pauli": "XZ...", "phase": "+1"} | {"xy_angle": r, "qubit": q}

#[derive(Serialize, Deserialize)]
struct ScenarioDto {
    name: String,
    parties: Vec<String>,
    settings: BTreeMap<String, Vec<String>>,
    binding: BindingDto,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum BindingDto {
    Quantum(QuantumDto),
    Distribution(JointDistribution),
}

#[derive(Serialize, Deserialize)]
struct QuantumDto {
    state: StateDto,
    observables: BTreeMap<String, ObservableDto>,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StateDto {
    Ghz(usize),
    Amplitudes(Vec<[f64; 2]>),
    Density(Vec<Vec<[f64; 2]>>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ObservableDto {
    Pauli {
        pauli: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        phase: Option<String>,
    },
    Xy {
        xy_angle: f64,
        qubit: usize,
    },
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn unpair(p: [f64; 2]) -> C64 {
    C64::new(p[0], p[1])
}

impl Serialize for Scenario {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let binding = match &self.binding {
            Binding::Distribution(d) => BindingDto::Distribution(d.clone()),
            Binding::Quantum(q) => BindingDto::Quantum(QuantumDto {
                state: match &q.state {
                    StateSpec::Ghz(n) => StateDto::Ghz(*n),
                    StateSpec::Amplitudes(a) => {
                        StateDto::Amplitudes(a.iter().copied().map(pair).collect())
                    }
                    StateSpec::Density(rows) => StateDto::Density(
                        rows.iter()
                            .map(|r| r.iter().copied().map(pair).collect())
                            .collect(),
                    ),
                },
                observables: q
                    .observables
                    .iter()
                    .map(|(label, spec)| {
                        let dto = match spec {
                            ObservableSpec::Pauli(p) => ObservableDto::Pauli {
                                pauli: p.factors().iter().map(|f| f.to_string()).collect(),
                                phase: match p.phase() {
                                    Phase::PLUS_ONE => None,
                                    other => Some(other.to_string()),
                                },
                            },
                            ObservableSpec::Xy { angle, qubit } => {
                                ObservableDto::Xy { xy_angle: *angle, qubit: *qubit }
                            }
                        };
                        (label.clone(), dto)
                    })
                    .collect(),
            }),
        };
        ScenarioDto {
            name: self.name.clone(),
            parties: self.parties.clone(),
            settings: self.settings.clone(),
            binding,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Scenario {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let dto = ScenarioDto::deserialize(deserializer)?;
        let binding = match dto.binding {
            BindingDto::Distribution(d) => Binding::Distribution(d),
            BindingDto::Quantum(q) => {
                let state = match q.state {
                    StateDto::Ghz(n) => StateSpec::Ghz(n),
                    StateDto::Amplitudes(a) => {
                        StateSpec::Amplitudes(a.into_iter().map(unpair).collect())
                    }
                    StateDto::Density(rows) => StateSpec::Density(
                        rows.into_iter()
                            .map(|r| r.into_iter().map(unpair).collect())
                            .collect(),
                    ),
                };
                let observables = q
                    .observables
                    .into_iter()
                    .map(|(label, dto)| {
                        let spec = match dto {
                            ObservableDto::Pauli { pauli, phase } => {
                                let mut p =
                                    PauliString::parse(&pauli).map_err(D::Error::custom)?;
                                if let Some(ph) = phase {
                                    p = p.with_phase(ph.parse().map_err(D::Error::custom)?);
                                }
                                ObservableSpec::Pauli(p)
                            }
                            ObservableDto::Xy { xy_angle, qubit } => {
                                ObservableSpec::Xy { angle: xy_angle, qubit }
                            }
                        };
                        Ok((label, spec))
                    })
                    .collect::<Result<_, D::Error>>()?;
                Binding::Quantum(QuantumBinding { state, observables })
            }
        };
        Ok(Scenario {
            name: dto.name,
            parties: dto.parties,
            settings: dto.settings,
            binding,
        })
    }
}
