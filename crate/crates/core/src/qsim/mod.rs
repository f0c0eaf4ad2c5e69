//! Exact dense simulation of N-qubit states and ±1 observables.
//!
//! Qubit ordering: qubit 0 is the leftmost tensor factor and the most
//! significant bit of a basis-state index, so |q₀q₁…⟩ has amplitude index
//! q₀·2^(n−1) + … + q_{n−1}·2⁰. Serialized amplitude lists follow the same
//! order.

pub mod matrix;
pub mod pauli;

use rand::Rng;
use thiserror::Error;

pub use matrix::{inner, Matrix, C64};
pub use pauli::{Pauli, PauliString, Phase};

use crate::dist::{JointDistribution, VariableId};

/// Construction tolerances (state norms, Hermiticity, involution).
pub const CONSTRUCTION_TOL: f64 = 1e-12;
/// Commutation tolerance; looser because it compounds two matrix products.
pub const COMMUTATION_TOL: f64 = 1e-10;
/// Tolerance for detecting scalar multiples of the identity.
pub const SCALAR_TOL: f64 = 1e-10;
/// Imaginary residue allowed in a real expectation value.
pub const IMAG_RESIDUE_TOL: f64 = 1e-10;
/// Floor on density-matrix eigenvalues.
pub const EIGENVALUE_TOL: f64 = 1e-10;
/// Dense statevector cap: 2^20 amplitudes × 16 bytes = 16 MiB.
pub const MAX_QUBITS: usize = 20;

#[derive(Debug, Error)]
pub enum QsimError {
    #[error("qubit count {0} outside the supported range 2..={MAX_QUBITS}")]
    BadQubitCount(usize),
    #[error("amplitude vector length {0} is not a power of two")]
    BadAmplitudeCount(usize),
    #[error("state norm {0} differs from 1 beyond tolerance")]
    BadNorm(f64),
    #[error("matrix dimension {0} is not a power of two")]
    BadDimension(usize),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("Pauli strings have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("qubit position {position} out of range for {qubits} qubits")]
    QubitOutOfRange { position: usize, qubits: usize },
    #[error("matrix is not Hermitian within tolerance")]
    NotHermitian,
    #[error("matrix is not a valid density matrix: {0}")]
    NotDensity(String),
    #[error("observable does not square to the identity within tolerance")]
    NotInvolutory,
    #[error("observables do not mutually commute (pair {left}, {right})")]
    NonCommuting { left: usize, right: usize },
    #[error("expectation has imaginary residue {0:e} (non-Hermitian input?)")]
    ImaginaryResidue(f64),
    #[error("unsupported Pauli symbol {0:?}")]
    BadPauliSymbol(char),
    #[error("empty Pauli string")]
    EmptyPauliString,
    #[error("bad phase literal {0:?}")]
    BadPhase(String),
    #[error("observable list and variable list have different lengths")]
    ObservableCountMismatch,
    #[error(transparent)]
    Dist(#[from] crate::dist::DistError),
}

/// Equatorial measurement cos(α)·X + sin(α)·Y; Hermitian with eigenvalues ±1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XyMeasurement {
    pub angle: f64,
}

impl XyMeasurement {
    pub fn new(angle: f64) -> Self {
        Self { angle }
    }

    /// 2×2 matrix [[0, e^{−iα}], [e^{iα}, 0]].
    pub fn matrix(self) -> Matrix {
        let z = C64::new(0.0, 0.0);
        let e = C64::from_polar(1.0, self.angle);
        Matrix::from_rows(2, vec![z, e.conj(), e, z])
    }
}

/// Observable description that expands to a dense matrix on n qubits.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservableSpec {
    /// Pauli string over all qubits (length must equal the qubit count).
    Pauli(PauliString),
    /// Equatorial XY measurement acting on one qubit.
    Xy { angle: f64, qubit: usize },
}

/// Dense Hermitian matrix for an observable spec on `qubits` qubits:
/// tensor product with identity on unspecified positions.
pub fn observable_matrix(spec: &ObservableSpec, qubits: usize) -> Result<Matrix, QsimError> {
    match spec {
        ObservableSpec::Pauli(p) => {
            if p.len() != qubits {
                return Err(QsimError::LengthMismatch { left: p.len(), right: qubits });
            }
            if !p.phase().is_real() {
                return Err(QsimError::NotHermitian);
            }
            Ok(p.to_matrix())
        }
        ObservableSpec::Xy { angle, qubit } => {
            if *qubit >= qubits {
                return Err(QsimError::QubitOutOfRange { position: *qubit, qubits });
            }
            let local = XyMeasurement::new(*angle).matrix();
            let mut m = if *qubit == 0 { local.clone() } else { Matrix::identity(2) };
            for q in 1..qubits {
                let factor = if q == *qubit { &local } else { &IDENTITY2 };
                m = m.kron(factor);
            }
            Ok(m)
        }
    }
}

// Shared 2×2 identity for tensor assembly.
static IDENTITY2: std::sync::LazyLock<Matrix> = std::sync::LazyLock::new(|| Matrix::identity(2));

/// Pure state of N qubits as 2^N complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<C64>,
    qubits: usize,
}

impl StateVector {
    /// GHZ state (|0…0⟩ + |1…1⟩)/√2 on 2..=20 qubits.
    pub fn ghz(qubits: usize) -> Result<Self, QsimError> {
        if !(2..=MAX_QUBITS).contains(&qubits) {
            return Err(QsimError::BadQubitCount(qubits));
        }
        let dim = 1usize << qubits;
        let mut amplitudes = vec![C64::new(0.0, 0.0); dim];
        let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amplitudes[0] = a;
        amplitudes[dim - 1] = a;
        Ok(Self { amplitudes, qubits })
    }

    /// Validates the squared norm to 1e−12 and a power-of-two length.
    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self, QsimError> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(QsimError::BadAmplitudeCount(dim));
        }
        let qubits = dim.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(QsimError::BadQubitCount(qubits));
        }
        let norm2: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(QsimError::BadNorm(norm2.sqrt()));
        }
        Ok(Self { amplitudes, qubits })
    }

    /// Haar-like random pure state: normalized complex Gaussian amplitudes.
    pub fn random<R: Rng>(qubits: usize, rng: &mut R) -> Result<Self, QsimError> {
        if !(1..=MAX_QUBITS).contains(&qubits) {
            return Err(QsimError::BadQubitCount(qubits));
        }
        let dim = 1usize << qubits;
        let mut amplitudes: Vec<C64> = (0..dim).map(|_| gaussian_complex(rng)).collect();
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amplitudes {
            *a /= norm;
        }
        Ok(Self { amplitudes, qubits })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Mixed state of N qubits as a dense 2^N × 2^N matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: Matrix,
    qubits: usize,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace to 1e−12 and eigenvalues
    /// ≥ −1e−10.
    pub fn new(matrix: Matrix) -> Result<Self, QsimError> {
        let dim = matrix.dim();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(QsimError::BadDimension(dim));
        }
        let qubits = dim.trailing_zeros() as usize;
        if qubits > MAX_QUBITS {
            return Err(QsimError::BadQubitCount(qubits));
        }
        if !matrix.is_hermitian(CONSTRUCTION_TOL) {
            return Err(QsimError::NotDensity("not Hermitian".into()));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > CONSTRUCTION_TOL || tr.im.abs() > CONSTRUCTION_TOL {
            return Err(QsimError::NotDensity(format!("trace {tr} differs from 1")));
        }
        let min_eig = matrix.min_eigenvalue_hermitian();
        if min_eig < -EIGENVALUE_TOL {
            return Err(QsimError::NotDensity(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { matrix, qubits })
    }

    pub fn from_pure(state: &StateVector) -> Self {
        let dim = state.dim();
        let mut m = Matrix::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m.set(r, c, state.amplitudes[r] * state.amplitudes[c].conj());
            }
        }
        Self { matrix: m, qubits: state.qubits }
    }

    /// Random mixed state G·G†/Tr(G·G†) from complex Gaussian G.
    pub fn random<R: Rng>(qubits: usize, rng: &mut R) -> Result<Self, QsimError> {
        if !(1..=6).contains(&qubits) {
            return Err(QsimError::BadQubitCount(qubits));
        }
        let dim = 1usize << qubits;
        let mut g = Matrix::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                g.set(r, c, gaussian_complex(rng));
            }
        }
        let gg = g.mul(&g.dagger());
        let tr = gg.trace().re;
        Self::new(gg.scale(C64::new(1.0 / tr, 0.0)))
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

fn gaussian_complex<R: Rng>(rng: &mut R) -> C64 {
    // Box–Muller on (0, 1] uniforms.
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * u2;
    C64::new(r * theta.cos(), r * theta.sin()) * std::f64::consts::FRAC_1_SQRT_2
}

/// Pure or mixed quantum state.
#[derive(Debug, Clone, PartialEq)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn qubits(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.qubits(),
            QuantumState::Mixed(d) => d.qubits(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(s) => s.dim(),
            QuantumState::Mixed(d) => d.dim(),
        }
    }
}

impl From<StateVector> for QuantumState {
    fn from(s: StateVector) -> Self {
        QuantumState::Pure(s)
    }
}

impl From<DensityMatrix> for QuantumState {
    fn from(d: DensityMatrix) -> Self {
        QuantumState::Mixed(d)
    }
}

/// ⟨ψ|O|ψ⟩ or Tr(ρO). The imaginary residue must stay below 1e−10; it is
/// checked and then discarded.
pub fn expectation(state: &QuantumState, obs: &Matrix) -> Result<f64, QsimError> {
    if state.dim() != obs.dim() {
        return Err(QsimError::DimensionMismatch { left: state.dim(), right: obs.dim() });
    }
    let value = match state {
        QuantumState::Pure(s) => inner(s.amplitudes(), &obs.matvec(s.amplitudes())),
        QuantumState::Mixed(d) => d.matrix().trace_product(obs),
    };
    if value.im.abs() >= IMAG_RESIDUE_TOL {
        return Err(QsimError::ImaginaryResidue(value.im.abs()));
    }
    Ok(value.re)
}

/// GHZ expectation of ⊗ₖ (cos αₖ X + sin αₖ Y): cos(Σ αₖ).
///
/// Analytic route used as the oracle against dense [`expectation`].
pub fn ghz_xy_expectation_closed_form(angles: &[f64]) -> f64 {
    angles.iter().sum::<f64>().cos()
}

/// True iff the max norm of AB − BA stays below 1e−10.
pub fn commutes(a: &Matrix, b: &Matrix) -> Result<bool, QsimError> {
    if a.dim() != b.dim() {
        return Err(QsimError::DimensionMismatch { left: a.dim(), right: b.dim() });
    }
    Ok(a.commutator_norm(b) < COMMUTATION_TOL)
}

/// Ordered product of mutually commuting observables, with detection of
/// ±identity results.
#[derive(Debug, Clone)]
pub struct OperatorProduct {
    pub matrix: Matrix,
    /// Some(±1) when the product equals (±1)·I within 1e−10.
    pub scalar: Option<i8>,
}

/// Multiplies the observables in list order after checking that they
/// mutually commute.
pub fn product_operator(observables: &[Matrix]) -> Result<OperatorProduct, QsimError> {
    assert!(!observables.is_empty(), "product of an empty observable list");
    for (i, a) in observables.iter().enumerate() {
        for (j, b) in observables.iter().enumerate().skip(i + 1) {
            if !commutes(a, b)? {
                return Err(QsimError::NonCommuting { left: i, right: j });
            }
        }
    }
    let mut matrix = observables[0].clone();
    for o in &observables[1..] {
        matrix = matrix.mul(o);
    }
    let scalar = matrix.scalar_multiple_of_identity(SCALAR_TOL).and_then(|c| {
        if c.im.abs() < SCALAR_TOL && (c.re - 1.0).abs() < SCALAR_TOL {
            Some(1)
        } else if c.im.abs() < SCALAR_TOL && (c.re + 1.0).abs() < SCALAR_TOL {
            Some(-1)
        } else {
            None
        }
    });
    Ok(OperatorProduct { matrix, scalar })
}

/// Joint outcome distribution of mutually commuting ±1 observables:
/// P(s⃗) = ⟨ Πₖ (I + sₖOₖ)/2 ⟩.
///
/// Each observable must square to the identity within 1e−12 and the set
/// must mutually commute within 1e−10.
pub fn outcome_distribution(
    state: &QuantumState,
    observables: &[Matrix],
    variables: &[VariableId],
) -> Result<JointDistribution, QsimError> {
    if observables.len() != variables.len() {
        return Err(QsimError::ObservableCountMismatch);
    }
    let dim = state.dim();
    let identity = Matrix::identity(dim);
    for (i, o) in observables.iter().enumerate() {
        if o.dim() != dim {
            return Err(QsimError::DimensionMismatch { left: dim, right: o.dim() });
        }
        if o.mul(o).max_abs_diff(&identity) > CONSTRUCTION_TOL {
            return Err(QsimError::NotInvolutory);
        }
        for (j, b) in observables.iter().enumerate().skip(i + 1) {
            if !commutes(o, b)? {
                return Err(QsimError::NonCommuting { left: i, right: j });
            }
        }
    }
    let k = observables.len();
    let mut probs = Vec::with_capacity(1 << k);
    for cell in 0..(1usize << k) {
        // Cell bit convention matches JointDistribution: bit j set ⇔ −1.
        let p = match state {
            QuantumState::Pure(s) => {
                let mut v = s.amplitudes().to_vec();
                for (j, o) in observables.iter().enumerate() {
                    let sign = if cell >> j & 1 == 0 { 1.0 } else { -1.0 };
                    let ov = o.matvec(&v);
                    for (x, y) in v.iter_mut().zip(ov) {
                        *x = (*x + sign * y) * 0.5;
                    }
                }
                inner(s.amplitudes(), &v)
            }
            QuantumState::Mixed(d) => {
                let mut m = d.matrix().clone();
                for (j, o) in observables.iter().enumerate() {
                    let sign = if cell >> j & 1 == 0 { 1.0 } else { -1.0 };
                    let om = o.mul(&m).scale(C64::new(sign, 0.0));
                    m = m.add(&om).scale(C64::new(0.5, 0.0));
                }
                m.trace()
            }
        };
        if p.im.abs() >= IMAG_RESIDUE_TOL {
            return Err(QsimError::ImaginaryResidue(p.im.abs()));
        }
        // Projector probabilities can round slightly below zero.
        let mut re = p.re;
        if re < 0.0 && re > -IMAG_RESIDUE_TOL {
            re = 0.0;
        }
        probs.push(re);
    }
    Ok(JointDistribution::new(variables.to_vec(), probs)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{variables, DistanceKind, ProductTerm};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_6, PI};

    #[test]
    fn ghz_amplitudes_and_norm() {
        let s = StateVector::ghz(2).unwrap();
        let a = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amplitudes()[0].re - a).abs() < 1e-15);
        assert!((s.amplitudes()[3].re - a).abs() < 1e-15);
        assert_eq!(s.amplitudes()[1], C64::new(0.0, 0.0));
        let s3 = StateVector::ghz(3).unwrap();
        assert!((s3.norm() - 1.0).abs() < 1e-15);
        assert!(StateVector::ghz(1).is_err());
        assert!(StateVector::ghz(21).is_err());
    }

    #[test]
    fn ghz_xxx_expectation_is_one() {
        // X⊗X⊗X maps |000⟩ ↔ |111⟩, so ⟨GHZ|XXX|GHZ⟩ = 1.
        let s = StateVector::ghz(3).unwrap();
        let xxx = observable_matrix(
            &ObservableSpec::Pauli(PauliString::parse("XXX").unwrap()),
            3,
        )
        .unwrap();
        let e = expectation(&QuantumState::Pure(s), &xxx).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
    }

    #[test]
    fn xy_measurement_limits_and_involution() {
        let x = XyMeasurement::new(0.0).matrix();
        assert!(x.max_abs_diff(&Pauli::X.matrix()) < 1e-15);
        let y = XyMeasurement::new(FRAC_PI_2).matrix();
        assert!(y.max_abs_diff(&Pauli::Y.matrix()) < 1e-15);
        for k in 0..32 {
            let m = XyMeasurement::new(-PI + k as f64 * PI / 16.0).matrix();
            assert!(m.is_hermitian(CONSTRUCTION_TOL));
            assert!(m.mul(&m).max_abs_diff(&Matrix::identity(2)) < CONSTRUCTION_TOL);
        }
    }

    #[test]
    fn observable_matrix_places_factors() {
        let zz = observable_matrix(
            &ObservableSpec::Pauli(PauliString::parse("ZZ").unwrap()),
            2,
        )
        .unwrap();
        for (i, expect) in [1.0, -1.0, -1.0, 1.0].iter().enumerate() {
            assert!((zz.get(i, i).re - expect).abs() < 1e-15);
        }
        let x0 = observable_matrix(&ObservableSpec::Xy { angle: 0.0, qubit: 0 }, 2).unwrap();
        let xi = PauliString::parse("XI").unwrap().to_matrix();
        assert!(x0.max_abs_diff(&xi) < 1e-15);
        let x1 = observable_matrix(&ObservableSpec::Xy { angle: 0.0, qubit: 1 }, 2).unwrap();
        let ix = PauliString::parse("IX").unwrap().to_matrix();
        assert!(x1.max_abs_diff(&ix) < 1e-15);
        assert!(observable_matrix(&ObservableSpec::Xy { angle: 0.0, qubit: 2 }, 2).is_err());
        // An imaginary-phase Pauli string is not a valid observable.
        let skew = PauliString::parse("XY").unwrap().with_phase(Phase::PLUS_I);
        assert!(observable_matrix(&ObservableSpec::Pauli(skew), 2).is_err());
    }

    #[test]
    fn max_violation_angles_reproduce_target_and_rhs_expectations() {
        let s = QuantumState::Pure(StateVector::ghz(3).unwrap());
        let tensor = |angles: [f64; 3]| {
            let mut m = XyMeasurement::new(angles[0]).matrix();
            for a in &angles[1..] {
                m = m.kron(&XyMeasurement::new(*a).matrix());
            }
            m
        };
        let a1 = FRAC_PI_6;
        let a2 = -PI / 12.0;
        let e_target = expectation(&s, &tensor([a1, a1, a1])).unwrap();
        assert!(e_target.abs() < 1e-12);
        let e_rhs = expectation(&s, &tensor([a1, a2, a2])).unwrap();
        assert!((e_rhs - 1.0).abs() < 1e-12);
        let e_zero = expectation(&s, &tensor([0.0, 0.0, 0.0])).unwrap();
        assert!((e_zero - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_dense_simulation_across_sizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for qubits in 2..=10usize {
            let trials = if qubits <= 6 { 100 } else { 25 };
            let state = QuantumState::Pure(StateVector::ghz(qubits).unwrap());
            for _ in 0..trials {
                let angles: Vec<f64> =
                    (0..qubits).map(|_| rng.gen_range(-PI..PI)).collect();
                let mut m = XyMeasurement::new(angles[0]).matrix();
                for a in &angles[1..] {
                    m = m.kron(&XyMeasurement::new(*a).matrix());
                }
                let dense = expectation(&state, &m).unwrap();
                let closed = ghz_xy_expectation_closed_form(&angles);
                assert!(
                    (dense - closed).abs() < 1e-10,
                    "qubits {qubits}: {dense} vs {closed}"
                );
            }
        }
    }

    #[test]
    fn commutes_basics() {
        let xi = PauliString::parse("XI").unwrap().to_matrix();
        let ix = PauliString::parse("IX").unwrap().to_matrix();
        assert!(commutes(&xi, &ix).unwrap());
        let x = Pauli::X.matrix();
        let y = Pauli::Y.matrix();
        assert!(!commutes(&x, &y).unwrap());
        assert!(commutes(&x, &xi).is_err());
    }

    #[test]
    fn product_operator_detects_scalars() {
        let a = PauliString::parse("XI").unwrap().to_matrix();
        let sq_a = PauliString::parse("IX").unwrap().to_matrix();
        let alpha = PauliString::parse("XX").unwrap().to_matrix();
        let p = product_operator(&[a.clone(), sq_a, alpha]).unwrap();
        assert_eq!(p.scalar, Some(1));
        let xx = PauliString::parse("XX").unwrap().to_matrix();
        let yy = PauliString::parse("YY").unwrap().to_matrix();
        let zz = PauliString::parse("ZZ").unwrap().to_matrix();
        let p = product_operator(&[xx, yy, zz]).unwrap();
        assert_eq!(p.scalar, Some(-1));
        let single = product_operator(std::slice::from_ref(&a)).unwrap();
        assert_eq!(single.scalar, None);
        assert!(single.matrix.max_abs_diff(&a) < 1e-15);
        let x = Pauli::X.matrix();
        let y = Pauli::Y.matrix();
        assert!(matches!(
            product_operator(&[x, y]),
            Err(QsimError::NonCommuting { .. })
        ));
    }

    #[test]
    fn single_local_measurement_on_ghz_is_maximally_random() {
        let s = QuantumState::Pure(StateVector::ghz(3).unwrap());
        let x0 = observable_matrix(&ObservableSpec::Xy { angle: 0.0, qubit: 0 }, 3).unwrap();
        let d = outcome_distribution(&s, &[x0], &variables(&["A"])).unwrap();
        assert!((d.probabilities()[0] - 0.5).abs() < 1e-12);
        assert!((d.probabilities()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identity_observable_gives_point_mass() {
        let s = QuantumState::Pure(StateVector::ghz(2).unwrap());
        let d = outcome_distribution(&s, &[Matrix::identity(4)], &variables(&["E"])).unwrap();
        assert!((d.probabilities()[0] - 1.0).abs() < 1e-12);
        assert!(d.probabilities()[1].abs() < 1e-12);
    }

    #[test]
    fn outcome_distribution_marginals_reproduce_expectations() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let obs = [
            PauliString::parse("XI").unwrap().to_matrix(),
            PauliString::parse("IX").unwrap().to_matrix(),
            PauliString::parse("XX").unwrap().to_matrix(),
        ];
        let vars = variables(&["A", "a", "alpha"]);
        for _ in 0..10 {
            let state: QuantumState = if rng.gen::<bool>() {
                StateVector::random(2, &mut rng).unwrap().into()
            } else {
                DensityMatrix::random(2, &mut rng).unwrap().into()
            };
            let d = outcome_distribution(&state, &obs, &vars).unwrap();
            for (j, o) in obs.iter().enumerate() {
                let from_dist =
                    d.product_expectation(ProductTerm::from_indices(&[j])).unwrap();
                let direct = expectation(&state, o).unwrap();
                assert!((from_dist - direct).abs() < 1e-10);
            }
            // The product over the triple is +1 with certainty.
            let triple = d
                .delta(ProductTerm::from_indices(&[0, 1, 2]), DistanceKind::Entropic)
                .unwrap();
            assert!(triple < 1e-12);
        }
    }

    #[test]
    fn outcome_distribution_enforces_preconditions() {
        let s = QuantumState::Pure(StateVector::ghz(2).unwrap());
        let x = Pauli::X.matrix();
        assert!(matches!(
            outcome_distribution(&s, &[x], &variables(&["A"])),
            Err(QsimError::DimensionMismatch { .. })
        ));
        let xi = PauliString::parse("XI").unwrap().to_matrix();
        let yi = PauliString::parse("YI").unwrap().to_matrix();
        assert!(matches!(
            outcome_distribution(&s, &[xi.clone(), yi], &variables(&["A", "B"])),
            Err(QsimError::NonCommuting { .. })
        ));
        let half = xi.scale(C64::new(0.5, 0.0));
        assert!(matches!(
            outcome_distribution(&s, &[half], &variables(&["A"])),
            Err(QsimError::NotInvolutory)
        ));
    }

    #[test]
    fn density_matrix_validation() {
        let pure = StateVector::ghz(2).unwrap();
        let rho = DensityMatrix::from_pure(&pure);
        assert!(DensityMatrix::new(rho.matrix().clone()).is_ok());
        // Trace ≠ 1.
        assert!(DensityMatrix::new(Matrix::identity(4)).is_err());
        // Hermitian, trace 1, but indefinite.
        let mut m = Matrix::zeros(4);
        m.set(0, 0, C64::new(1.5, 0.0));
        m.set(1, 1, C64::new(-0.5, 0.0));
        assert!(matches!(DensityMatrix::new(m), Err(QsimError::NotDensity(_))));
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            DensityMatrix::random(2, &mut rng).unwrap();
        }
    }

    #[test]
    fn expectation_rejects_mismatch_and_residue() {
        let s = QuantumState::Pure(StateVector::ghz(2).unwrap());
        assert!(expectation(&s, &Matrix::identity(8)).is_err());
        // i·Y is anti-Hermitian; on the +1 eigenstate of Y the expectation
        // is purely imaginary.
        let skew = Pauli::Y.matrix().scale(C64::new(0.0, 1.0));
        let y_plus = StateVector::from_amplitudes(vec![
            C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2),
        ])
        .unwrap();
        assert!(matches!(
            expectation(&QuantumState::Pure(y_plus), &skew),
            Err(QsimError::ImaginaryResidue(_))
        ));
    }
}
