//! Sparse Pauli operators with exact phases.
//!
//! A [`PauliOp`] is `i^k · ⊗_q σ_q` with the product taken over its support.
//! Everything downstream (stabilizers, logicals, errors, rotation generators)
//! is expressed in this type.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Opaque qubit identifier handed out by the lattice.
pub type QubitId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    /// Symplectic bits `(x, z)`.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Axis::X => (true, false),
            Axis::Y => (true, true),
            Axis::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Option<Axis> {
        match (x, z) {
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
            (false, false) => None,
        }
    }

    /// Product of two single-qubit Paulis as `(phase, axis)`; `None` axis is identity.
    pub fn mul(self, other: Axis) -> (Phase, Option<Axis>) {
        use Axis::*;
        match (self, other) {
            (a, b) if a == b => (Phase::ONE, None),
            (X, Y) => (Phase::I, Some(Z)),
            (Y, Z) => (Phase::I, Some(X)),
            (Z, X) => (Phase::I, Some(Y)),
            (Y, X) => (Phase::MINUS_I, Some(Z)),
            (Z, Y) => (Phase::MINUS_I, Some(X)),
            (X, Z) => (Phase::MINUS_I, Some(Y)),
            _ => unreachable!(),
        }
    }

    fn letter(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

/// A power of `i`, stored as the exponent mod 4.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    pub fn from_power(k: u32) -> Phase {
        Phase((k % 4) as u8)
    }

    pub fn power(self) -> u8 {
        self.0
    }

    pub fn is_real(self) -> bool {
        self.0.is_multiple_of(2)
    }

    /// `+1` or `-1` for real phases.
    pub fn sign(self) -> Option<i8> {
        match self.0 {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    pub fn conj(self) -> Phase {
        Phase((4 - self.0) % 4)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

impl std::ops::MulAssign for Phase {
    fn mul_assign(&mut self, rhs: Phase) {
        *self = *self * rhs;
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PauliError {
    #[error("rotation generator must be Hermitian, got phase {0}")]
    NonHermitian(String),
    #[error("cannot parse Pauli operator: {0}")]
    Parse(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PauliOp {
    support: BTreeMap<QubitId, Axis>,
    phase: Phase,
}

impl PauliOp {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn single(q: QubitId, axis: Axis) -> Self {
        let mut support = BTreeMap::new();
        support.insert(q, axis);
        PauliOp { support, phase: Phase::ONE }
    }

    /// Same axis on every listed qubit. Duplicates cancel.
    pub fn uniform<I: IntoIterator<Item = QubitId>>(axis: Axis, qubits: I) -> Self {
        let mut op = PauliOp::identity();
        for q in qubits {
            op.mul_single(q, axis);
        }
        op
    }

    /// Build from `(qubit, axis)` terms, multiplied left to right.
    pub fn from_terms<I: IntoIterator<Item = (QubitId, Axis)>>(terms: I) -> Self {
        let mut op = PauliOp::identity();
        for (q, a) in terms {
            op.mul_single(q, a);
        }
        op
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase;
        self
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: Phase) {
        self.phase = phase;
    }

    pub fn support(&self) -> &BTreeMap<QubitId, Axis> {
        &self.support
    }

    pub fn axis(&self, q: QubitId) -> Option<Axis> {
        self.support.get(&q).copied()
    }

    pub fn qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.support.keys().copied()
    }

    pub fn weight(&self) -> usize {
        self.support.len()
    }

    pub fn is_identity(&self) -> bool {
        self.support.is_empty()
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_real()
    }

    /// The same operator with phase `+1`.
    pub fn unsigned(&self) -> PauliOp {
        PauliOp { support: self.support.clone(), phase: Phase::ONE }
    }

    /// Right-multiply by a single-qubit factor in place.
    pub fn mul_single(&mut self, q: QubitId, axis: Axis) {
        match self.support.get(&q).copied() {
            None => {
                self.support.insert(q, axis);
            }
            Some(a) => {
                let (ph, r) = a.mul(axis);
                self.phase *= ph;
                match r {
                    Some(r) => {
                        self.support.insert(q, r);
                    }
                    None => {
                        self.support.remove(&q);
                    }
                }
            }
        }
    }

    pub fn neg(&self) -> PauliOp {
        PauliOp { support: self.support.clone(), phase: self.phase * Phase::MINUS_ONE }
    }

    /// Restriction to a subset of qubits, phase `+1`.
    pub fn restrict<F: Fn(QubitId) -> bool>(&self, keep: F) -> PauliOp {
        PauliOp {
            support: self.support.iter().filter(|(q, _)| keep(**q)).map(|(q, a)| (*q, *a)).collect(),
            phase: Phase::ONE,
        }
    }

    /// Qubits carrying an X or Y factor.
    pub fn x_part(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.support.iter().filter(|(_, a)| a.bits().0).map(|(q, _)| *q)
    }

    /// Qubits carrying a Z or Y factor.
    pub fn z_part(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.support.iter().filter(|(_, a)| a.bits().1).map(|(q, _)| *q)
    }
}

/// Exact product `a·b`.
pub fn multiply(a: &PauliOp, b: &PauliOp) -> PauliOp {
    let mut out = a.clone();
    out.phase *= b.phase;
    for (&q, &axis) in &b.support {
        out.mul_single(q, axis);
    }
    out
}

impl std::ops::Mul for &PauliOp {
    type Output = PauliOp;
    fn mul(self, rhs: &PauliOp) -> PauliOp {
        multiply(self, rhs)
    }
}

/// Number of qubits on which `a` and `b` carry different non-identity factors.
pub fn anticommuting_overlap(a: &PauliOp, b: &PauliOp) -> usize {
    let (small, large) = if a.weight() <= b.weight() { (a, b) } else { (b, a) };
    small.support.iter().filter(|(q, ax)| large.support.get(q).is_some_and(|bx| bx != *ax)).count()
}

pub fn commutes(a: &PauliOp, b: &PauliOp) -> bool {
    anticommuting_overlap(a, b).is_multiple_of(2)
}

/// `g p g†` for `g = exp(iπ/4 q)`.
///
/// If `p` and `q` anticommute, `g p g† = g² p = i q p`.
pub fn conjugate_by_rotation(p: &PauliOp, q: &PauliOp) -> Result<PauliOp, PauliError> {
    if !q.is_hermitian() {
        return Err(PauliError::NonHermitian(phase_prefix(q.phase).to_string()));
    }
    if commutes(p, q) {
        return Ok(p.clone());
    }
    let mut out = multiply(q, p);
    out.phase *= Phase::I;
    Ok(out)
}

fn phase_prefix(p: Phase) -> &'static str {
    match p.0 {
        0 => "+",
        1 => "+i",
        2 => "-",
        _ => "-i",
    }
}

impl fmt::Display for PauliOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(phase_prefix(self.phase))?;
        if self.support.is_empty() {
            return f.write_str("I");
        }
        if !self.phase.is_real() {
            f.write_str(" ")?;
        }
        for (i, (q, a)) in self.support.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{}{}", a.letter(), q)?;
        }
        Ok(())
    }
}

impl FromStr for PauliOp {
    type Err = PauliError;

    /// Parses the `Display` form; a missing sign means `+`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || PauliError::Parse(s.to_string());
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (Phase::I, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (Phase::MINUS_I, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::ONE, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MINUS_ONE, r)
        } else {
            (Phase::ONE, s)
        };
        let rest = rest.trim();
        let mut op = PauliOp::identity();
        if rest != "I" && !rest.is_empty() {
            for tok in rest.split_whitespace() {
                let mut chars = tok.chars();
                let axis = match chars.next() {
                    Some('X') => Axis::X,
                    Some('Y') => Axis::Y,
                    Some('Z') => Axis::Z,
                    _ => return Err(bad()),
                };
                let q: QubitId = chars.as_str().parse().map_err(|_| bad())?;
                if op.support.contains_key(&q) {
                    return Err(bad());
                }
                op.support.insert(q, axis);
            }
        }
        op.phase = phase;
        Ok(op)
    }
}

impl Serialize for PauliOp {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PauliOp {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(s: &str) -> PauliOp {
        s.parse().unwrap()
    }

    #[test]
    fn xz_is_minus_iy() {
        assert_eq!(multiply(&op("X0"), &op("Z0")), op("-i Y0"));
        assert_eq!(multiply(&op("Z0"), &op("X0")), op("+i Y0"));
    }

    #[test]
    fn hermitian_squares_to_identity() {
        let p = op("-X1 Y4 Z9");
        assert_eq!(multiply(&p, &p), PauliOp::identity());
    }

    #[test]
    fn display_round_trip() {
        for s in ["+I", "-i X3 Z17 Y42", "+X0", "-Z5 Z6", "+i Y2"] {
            assert_eq!(op(s).to_string(), s);
        }
    }

    #[test]
    fn rotation_rejects_non_hermitian() {
        assert!(conjugate_by_rotation(&op("X0"), &op("+i Z0")).is_err());
    }

    #[test]
    fn rotation_of_commuting_is_identity_map() {
        let p = op("X0 X1");
        assert_eq!(conjugate_by_rotation(&p, &op("Z0 Z1")).unwrap(), p);
    }

    #[test]
    fn rotation_of_anticommuting() {
        // exp(iπ/4 X) Z exp(-iπ/4 X) = i X Z = Y
        assert_eq!(conjugate_by_rotation(&op("Z0"), &op("X0")).unwrap(), op("Y0"));
    }
}
