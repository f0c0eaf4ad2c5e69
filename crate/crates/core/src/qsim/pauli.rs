//! Pauli-string operator algebra with phase tracking.

use std::fmt;
use std::str::FromStr;

use super::matrix::{Matrix, C64};
use super::QsimError;

/// Single-qubit Pauli symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn matrix(self) -> Matrix {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let i = C64::new(0.0, 1.0);
        match self {
            Pauli::I => Matrix::from_rows(2, vec![one, z, z, one]),
            Pauli::X => Matrix::from_rows(2, vec![z, one, one, z]),
            Pauli::Y => Matrix::from_rows(2, vec![z, -i, i, z]),
            Pauli::Z => Matrix::from_rows(2, vec![one, z, z, -one]),
        }
    }

    /// Single-qubit product a·b = i^k · c; returns (c, k mod 4).
    fn mul(self, other: Pauli) -> (Pauli, u8) {
        use Pauli::*;
        match (self, other) {
            (I, p) | (p, I) => (p, 0),
            (a, b) if a == b => (I, 0),
            (X, Y) => (Z, 1),
            (Y, X) => (Z, 3),
            (Y, Z) => (X, 1),
            (Z, Y) => (X, 3),
            (Z, X) => (Y, 1),
            (X, Z) => (Y, 3),
            _ => unreachable!(),
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ch = match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        };
        write!(f, "{ch}")
    }
}

/// Overall phase of a Pauli string: one of +1, +i, −1, −i, stored as the
/// exponent of i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const PLUS_ONE: Phase = Phase(0);
    pub const PLUS_I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_i_power(k: u8) -> Self {
        Phase(k % 4)
    }

    pub fn i_power(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> C64 {
        match self.0 {
            0 => C64::new(1.0, 0.0),
            1 => C64::new(0.0, 1.0),
            2 => C64::new(-1.0, 0.0),
            _ => C64::new(0.0, -1.0),
        }
    }

    /// Real phases (+1 or −1) keep a Pauli string Hermitian.
    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn mul(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.0 {
            0 => "+1",
            1 => "+i",
            2 => "-1",
            _ => "-i",
        };
        write!(f, "{s}")
    }
}

impl FromStr for Phase {
    type Err = QsimError;
    fn from_str(s: &str) -> Result<Self, QsimError> {
        match s {
            "+1" | "1" | "+" => Ok(Phase::PLUS_ONE),
            "-1" | "\u{2212}1" | "-" => Ok(Phase::MINUS_ONE),
            "+i" | "i" => Ok(Phase::PLUS_I),
            "-i" | "\u{2212}i" => Ok(Phase::MINUS_I),
            other => Err(QsimError::BadPhase(other.to_string())),
        }
    }
}

/// Tensor product of per-qubit Pauli symbols with an overall phase.
/// Factor 0 is the leftmost tensor factor.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    factors: Vec<Pauli>,
    phase: Phase,
}

impl PauliString {
    pub fn new(factors: Vec<Pauli>, phase: Phase) -> Self {
        Self { factors, phase }
    }

    /// Parses symbols like `"XIZ"`, phase +1.
    pub fn parse(s: &str) -> Result<Self, QsimError> {
        let factors = s
            .chars()
            .map(|ch| match ch {
                'I' | '1' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(QsimError::BadPauliSymbol(other)),
            })
            .collect::<Result<Vec<_>, _>>()?;
        if factors.is_empty() {
            return Err(QsimError::EmptyPauliString);
        }
        Ok(Self::new(factors, Phase::PLUS_ONE))
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factors(&self) -> &[Pauli] {
        &self.factors
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn is_identity(&self) -> bool {
        self.factors.iter().all(|&p| p == Pauli::I)
    }

    /// Factor-wise product with accumulated phase.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString, QsimError> {
        if self.len() != other.len() {
            return Err(QsimError::LengthMismatch { left: self.len(), right: other.len() });
        }
        let mut phase = self.phase.mul(other.phase);
        let factors = self
            .factors
            .iter()
            .zip(&other.factors)
            .map(|(&a, &b)| {
                let (c, k) = a.mul(b);
                phase = phase.mul(Phase::from_i_power(k));
                c
            })
            .collect();
        Ok(PauliString { factors, phase })
    }

    /// Dense matrix: phase · (factor₀ ⊗ factor₁ ⊗ …).
    pub fn to_matrix(&self) -> Matrix {
        let mut m = self.factors[0].matrix();
        for &p in &self.factors[1..] {
            m = m.kron(&p.matrix());
        }
        m.scale(self.phase.to_complex())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: String = self.factors.iter().map(|p| p.to_string()).collect();
        match self.phase {
            Phase::PLUS_ONE => write!(f, "{body}"),
            phase => write!(f, "({phase})·{body}"),
        }
    }
}
