//! Bit-packed binary symplectic representation and stabilizer-group reduction.
//!
//! A row is `i^k · X^x · Z^z` (all X factors to the left of all Z factors).
//! Rows are indexed over a local column map so groups on a few hundred qubits
//! stay cheap to eliminate.

use std::collections::HashMap;

use crate::pauli::{Axis, PauliOp, Phase, QubitId};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BitPauli {
    x: Vec<u64>,
    z: Vec<u64>,
    k: u8,
}

impl BitPauli {
    fn zero(words: usize) -> Self {
        BitPauli { x: vec![0; words], z: vec![0; words], k: 0 }
    }

    fn get(v: &[u64], i: usize) -> bool {
        (v[i / 64] >> (i % 64)) & 1 == 1
    }

    fn flip(v: &mut [u64], i: usize) {
        v[i / 64] ^= 1 << (i % 64);
    }

    pub fn is_zero(&self) -> bool {
        self.x.iter().all(|w| *w == 0) && self.z.iter().all(|w| *w == 0)
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(a, b)| (a | b).count_ones() as usize).sum()
    }

    /// Right-multiply in place: `self ← self · rhs`.
    pub fn mul_assign(&mut self, rhs: &BitPauli) {
        let mut sign = 0u32;
        for (zs, xr) in self.z.iter().zip(&rhs.x) {
            sign += (zs & xr).count_ones();
        }
        self.k = ((self.k as u32 + rhs.k as u32 + 2 * sign) % 4) as u8;
        for (a, b) in self.x.iter_mut().zip(&rhs.x) {
            *a ^= b;
        }
        for (a, b) in self.z.iter_mut().zip(&rhs.z) {
            *a ^= b;
        }
    }

    pub fn commutes(&self, other: &BitPauli) -> bool {
        let mut c = 0u32;
        for i in 0..self.x.len() {
            c += ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones();
        }
        c.is_multiple_of(2)
    }

    /// Column index of `(half, col)`: x-half is 0, z-half is 1.
    fn bit(&self, half: u8, col: usize) -> bool {
        if half == 0 {
            Self::get(&self.x, col)
        } else {
            Self::get(&self.z, col)
        }
    }
}

/// Column map between lattice qubit ids and packed bit positions.
#[derive(Clone, Debug, Default)]
pub struct Columns {
    ids: Vec<QubitId>,
    index: HashMap<QubitId, usize>,
}

impl Columns {
    pub fn new<I: IntoIterator<Item = QubitId>>(ids: I) -> Self {
        let mut ids: Vec<QubitId> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        let index = ids.iter().enumerate().map(|(i, q)| (*q, i)).collect();
        Columns { ids, index }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    fn words(&self) -> usize {
        self.ids.len().div_ceil(64).max(1)
    }

    pub fn contains(&self, q: QubitId) -> bool {
        self.index.contains_key(&q)
    }

    /// `None` if `p` touches a qubit outside the column map.
    pub fn encode(&self, p: &PauliOp) -> Option<BitPauli> {
        let mut b = BitPauli::zero(self.words());
        let mut k = p.phase().power() as u32;
        for (q, a) in p.support() {
            let i = *self.index.get(q)?;
            let (x, z) = a.bits();
            if x {
                BitPauli::flip(&mut b.x, i);
            }
            if z {
                BitPauli::flip(&mut b.z, i);
            }
            if *a == Axis::Y {
                // Y = i X Z
                k += 1;
            }
        }
        b.k = (k % 4) as u8;
        Some(b)
    }

    pub fn decode(&self, b: &BitPauli) -> PauliOp {
        let mut terms = Vec::new();
        let mut k = b.k as u32 + 4;
        for (i, q) in self.ids.iter().enumerate() {
            let x = BitPauli::get(&b.x, i);
            let z = BitPauli::get(&b.z, i);
            if let Some(a) = Axis::from_bits(x, z) {
                if a == Axis::Y {
                    // X Z = -i Y
                    k += 3;
                }
                terms.push((*q, a));
            }
        }
        PauliOp::from_terms(terms).with_phase(Phase::from_power(k))
    }
}

/// Outcome of testing `p` against a group: `p = sign · g` for some element `g`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Membership {
    Member(i8),
    NotMember,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupError {
    /// The listed generators imply `-I`; they cannot stabilize a common state.
    Inconsistent,
    /// A generator acts outside the column map.
    OutOfColumns,
}

/// Fully reduced row-echelon form of a signed, commuting generator set.
#[derive(Clone, Debug)]
pub struct StabilizerGroup {
    cols: Columns,
    rows: Vec<BitPauli>,
    /// `(half, col)` pivot of each row, in elimination order.
    pivots: Vec<(u8, usize)>,
}

impl StabilizerGroup {
    pub fn new(cols: Columns, gens: &[PauliOp]) -> Result<Self, GroupError> {
        let mut g = StabilizerGroup { cols, rows: Vec::new(), pivots: Vec::new() };
        for p in gens {
            let b = g.cols.encode(p).ok_or(GroupError::OutOfColumns)?;
            g.insert(b)?;
        }
        Ok(g)
    }

    pub fn columns(&self) -> &Columns {
        &self.cols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce_bits(&self, b: &mut BitPauli) {
        for (row, &(h, c)) in self.rows.iter().zip(&self.pivots) {
            if b.bit(h, c) {
                b.mul_assign(row);
            }
        }
    }

    fn first_bit(b: &BitPauli) -> Option<(u8, usize)> {
        for (h, v) in [(0u8, &b.x), (1u8, &b.z)] {
            for (w, word) in v.iter().enumerate() {
                if *word != 0 {
                    return Some((h, w * 64 + word.trailing_zeros() as usize));
                }
            }
        }
        None
    }

    fn insert(&mut self, mut b: BitPauli) -> Result<(), GroupError> {
        self.reduce_bits(&mut b);
        match Self::first_bit(&b) {
            None => {
                if b.k == 2 {
                    return Err(GroupError::Inconsistent);
                }
                Ok(())
            }
            Some(piv) => {
                for row in self.rows.iter_mut() {
                    if row.bit(piv.0, piv.1) {
                        row.mul_assign(&b);
                    }
                }
                self.rows.push(b);
                self.pivots.push(piv);
                Ok(())
            }
        }
    }

    /// Unique coset representative: zero on every pivot bit, exact phase.
    pub fn canonical(&self, p: &PauliOp) -> Option<PauliOp> {
        let mut b = self.cols.encode(p)?;
        self.reduce_bits(&mut b);
        Some(self.cols.decode(&b))
    }

    pub fn membership(&self, p: &PauliOp) -> Membership {
        let Some(mut b) = self.cols.encode(p) else {
            return Membership::NotMember;
        };
        self.reduce_bits(&mut b);
        if !b.is_zero() {
            return Membership::NotMember;
        }
        match b.k {
            0 => Membership::Member(1),
            2 => Membership::Member(-1),
            _ => Membership::NotMember,
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = PauliOp> + '_ {
        self.rows.iter().map(|r| self.cols.decode(r))
    }
}

/// Rank of an unsigned operator set over GF(2), ignoring phases.
pub fn symplectic_rank(cols: &Columns, ops: &[PauliOp]) -> usize {
    let mut rows: Vec<BitPauli> = Vec::new();
    let mut pivots: Vec<(u8, usize)> = Vec::new();
    for p in ops {
        let Some(mut b) = cols.encode(&p.unsigned()) else { continue };
        for (row, &(h, c)) in rows.iter().zip(&pivots) {
            if b.bit(h, c) {
                b.mul_assign(row);
            }
        }
        if let Some(piv) = StabilizerGroup::first_bit(&b) {
            rows.push(b);
            pivots.push(piv);
        }
    }
    rows.len()
}
