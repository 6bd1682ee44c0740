//! Heisenberg-picture code state: stabilizer generators with a sign ledger
//! plus tracked logical pairs, evolved by π/4 Pauli rotations and toggles.
//!
//! Each generator is stored unsigned together with its eigenvalue sign, so
//! the true stabilizer is `sign · op`. Inactive generators keep their record:
//! in the error-free picture the state is still an eigenstate of them, which
//! is what lets a toggle-on derive its sign from group membership.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{DefectQubit, Lattice};
use crate::pauli::{commutes, conjugate_by_rotation, multiply, PauliOp, QubitId};
use crate::symplectic::{symplectic_rank, Columns, Membership, StabilizerGroup};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenEntry {
    pub op: PauliOp,
    pub sign: i8,
    pub active: bool,
}

impl GenEntry {
    pub fn signed(&self) -> PauliOp {
        if self.sign < 0 {
            self.op.neg()
        } else {
            self.op.clone()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogicalPair {
    pub tag: String,
    pub x: PauliOp,
    pub z: PauliOp,
}

/// A single-generator switch, identified by its (unsigned) operator.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Toggle {
    pub op: PauliOp,
    pub on: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum HistoryEntry {
    Rotation(PauliOp),
    Toggle(Toggle),
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableauError {
    #[error("{0} does not commute with active generator {1}")]
    CommutationViolation(String, String),
    #[error("{0} does not commute with logical operator {1}")]
    LogicalViolation(String, String),
    #[error("sign of {0} cannot be derived from the known stabilizers")]
    UnknownSign(String),
    #[error("no active generator equals {0}")]
    NotActive(String),
    #[error("generator index {0} out of range")]
    BadIndex(usize),
    #[error("rotation generator {0} is not Hermitian")]
    NonHermitian(String),
    #[error("{0} is not in the normalizer of the active stabilizer group")]
    NotInNormalizer(String),
    #[error("generator {0} exceeds weight 4")]
    WeightExceeded(String),
    #[error("known stabilizers are inconsistent")]
    Inconsistent,
}

/// Output of [`Tableau::reduce_mod_stabilizer`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduced {
    /// Lowest-weight representative found; exactly equal to the input on the code space.
    pub op: PauliOp,
    /// Unique coset representative from Gaussian elimination.
    pub canonical: PauliOp,
    /// The subset search finished inside its budget without finding a lighter element.
    pub minimized: bool,
}

/// Relation of two operators on the code space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Equivalence {
    Same,
    Negated,
    Different,
}

/// Energy label of an eigenspace: `s_j = ±1` for each active generator in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EigenspaceLabel {
    pub s: Vec<i8>,
}

impl EigenspaceLabel {
    /// `ε_s = -J Σ s_j`.
    pub fn energy(&self, j: f64) -> f64 {
        -j * self.s.iter().map(|&v| v as f64).sum::<f64>()
    }

    pub fn excitations(&self) -> usize {
        self.s.iter().filter(|&&v| v < 0).count()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Tableau {
    n_qubits: usize,
    gens: Vec<GenEntry>,
    logicals: Vec<LogicalPair>,
    history: Vec<HistoryEntry>,
    /// Subset size cap for the weight-minimisation search.
    pub search_depth: usize,
    /// Evaluation budget for the weight-minimisation search.
    pub search_budget: usize,
    #[serde(skip)]
    cache: Cache,
}

#[derive(Clone, Debug, Default)]
struct Cache {
    active: OnceLock<StabilizerGroup>,
    known: OnceLock<StabilizerGroup>,
}

impl Tableau {
    /// Generators from a lattice (inactive ones keep their `+1` initialisation
    /// record), the patch logical pair, and one pair per defect.
    pub fn new(lat: &Lattice, defects: &[DefectQubit]) -> Tableau {
        let gens = lat.generators.iter().map(|g| GenEntry { op: g.op(), sign: 1, active: g.active }).collect();
        let (px, pz) = lat.patch_logicals();
        let mut logicals = vec![LogicalPair { tag: "patch".into(), x: px, z: pz }];
        for (i, dq) in defects.iter().enumerate() {
            logicals.push(LogicalPair { tag: format!("q{i}"), x: dq.logical_x.clone(), z: dq.logical_z.clone() });
        }
        Tableau::from_parts(lat.num_qubits(), gens, logicals)
    }

    pub fn from_parts(n_qubits: usize, gens: Vec<GenEntry>, logicals: Vec<LogicalPair>) -> Tableau {
        Tableau {
            n_qubits,
            gens,
            logicals,
            history: Vec::new(),
            search_depth: 2,
            search_budget: 200_000,
            cache: Cache::default(),
        }
    }

    fn invalidate(&mut self) {
        self.cache = Cache::default();
    }

    fn invalidate_active(&mut self) {
        self.cache.active = OnceLock::new();
    }

    pub fn num_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn generators(&self) -> &[GenEntry] {
        &self.gens
    }

    pub fn active(&self) -> impl Iterator<Item = &GenEntry> {
        self.gens.iter().filter(|g| g.active)
    }

    pub fn active_ops(&self) -> Vec<PauliOp> {
        self.active().map(|g| g.op.clone()).collect()
    }

    pub fn logicals(&self) -> &[LogicalPair] {
        &self.logicals
    }

    pub fn logical(&self, tag: &str) -> Option<&LogicalPair> {
        self.logicals.iter().find(|l| l.tag == tag)
    }

    pub fn history(&self) -> &[HistoryEntry] {
        &self.history
    }

    pub fn register_logical(&mut self, tag: impl Into<String>, x: PauliOp, z: PauliOp) {
        self.logicals.push(LogicalPair { tag: tag.into(), x, z });
    }

    pub fn unregister_logical(&mut self, tag: &str) {
        self.logicals.retain(|l| l.tag != tag);
    }

    fn columns(&self) -> Columns {
        Columns::new(0..self.n_qubits as QubitId)
    }

    /// Group generated by the active generators (the Hamiltonian's stabilizer group).
    pub fn active_group(&self) -> &StabilizerGroup {
        self.cache.active.get_or_init(|| {
            let ops: Vec<PauliOp> = self.active().map(|g| g.signed()).collect();
            StabilizerGroup::new(self.columns(), &ops).expect("active generators are consistent")
        })
    }

    /// Group of every stabilizer of the state whose sign is on record.
    pub fn known_group(&self) -> &StabilizerGroup {
        self.cache.known.get_or_init(|| {
            let ops: Vec<PauliOp> = self.gens.iter().map(|g| g.signed()).collect();
            StabilizerGroup::new(self.columns(), &ops).expect("recorded generators are consistent")
        })
    }

    /// Conjugate every generator record and logical by `exp(iπ/4 q)`.
    pub fn apply_rotation(&mut self, q: &PauliOp) -> Result<(), TableauError> {
        if !q.is_hermitian() {
            return Err(TableauError::NonHermitian(q.to_string()));
        }
        for g in self.gens.iter_mut() {
            if commutes(&g.op, q) {
                continue;
            }
            let img = conjugate_by_rotation(&g.signed(), q).expect("hermitian q");
            g.sign = img.phase().sign().expect("image of hermitian is hermitian");
            g.op = img.unsigned();
        }
        for l in self.logicals.iter_mut() {
            l.x = conjugate_by_rotation(&l.x, q).expect("hermitian q");
            l.z = conjugate_by_rotation(&l.z, q).expect("hermitian q");
        }
        self.history.push(HistoryEntry::Rotation(q.clone()));
        self.invalidate();
        Ok(())
    }

    pub fn find_active(&self, op: &PauliOp) -> Option<usize> {
        let u = op.unsigned();
        self.gens.iter().position(|g| g.active && g.op == u)
    }

    /// Switch generator `id` on or off.
    pub fn toggle_generator(&mut self, id: usize, on: bool) -> Result<(), TableauError> {
        let op = self.gens.get(id).ok_or(TableauError::BadIndex(id))?.op.clone();
        if on {
            self.check_can_activate(&op)?;
        }
        self.gens[id].active = on;
        self.history.push(HistoryEntry::Toggle(Toggle { op, on }));
        self.invalidate_active();
        Ok(())
    }

    fn check_can_activate(&self, op: &PauliOp) -> Result<(), TableauError> {
        for g in self.active() {
            if !commutes(&g.op, op) {
                return Err(TableauError::CommutationViolation(op.to_string(), g.op.to_string()));
            }
        }
        for l in &self.logicals {
            for lo in [&l.x, &l.z] {
                if !commutes(lo, op) {
                    return Err(TableauError::LogicalViolation(op.to_string(), lo.to_string()));
                }
            }
        }
        Ok(())
    }

    /// Switch by operator. Turning on reuses a matching inactive record or
    /// derives the sign from the known stabilizers.
    pub fn apply_toggle(&mut self, t: &Toggle) -> Result<(), TableauError> {
        let u = t.op.unsigned();
        if !t.on {
            let id = self.find_active(&u).ok_or_else(|| TableauError::NotActive(u.to_string()))?;
            return self.toggle_generator(id, false);
        }
        if self.find_active(&u).is_some() {
            return Ok(());
        }
        if let Some(id) = self.gens.iter().position(|g| !g.active && g.op == u) {
            return self.toggle_generator(id, true);
        }
        self.check_can_activate(&u)?;
        let sign = match self.known_group().membership(&u) {
            Membership::Member(s) => s,
            Membership::NotMember => return Err(TableauError::UnknownSign(u.to_string())),
        };
        self.gens.push(GenEntry { op: u.clone(), sign, active: true });
        self.history.push(HistoryEntry::Toggle(Toggle { op: u, on: true }));
        self.invalidate_active();
        Ok(())
    }

    /// Active generators anticommuting with `q`, by index.
    pub fn anticommuting(&self, q: &PauliOp) -> Vec<usize> {
        self.gens.iter().enumerate().filter(|(_, g)| g.active && !commutes(&g.op, q)).map(|(i, _)| i).collect()
    }

    pub fn max_active_weight(&self) -> usize {
        self.active().map(|g| g.op.weight()).max().unwrap_or(0)
    }

    pub fn assert_weight_bound(&self, bound: usize) -> Result<(), TableauError> {
        match self.active().find(|g| g.op.weight() > bound) {
            Some(g) => Err(TableauError::WeightExceeded(g.op.to_string())),
            None => Ok(()),
        }
    }

    /// Relation between `a` and `b` modulo the active stabilizer group.
    pub fn equivalent(&self, a: &PauliOp, b: &PauliOp) -> Equivalence {
        let prod = multiply(b, a);
        match self.active_group().membership(&prod) {
            Membership::Member(1) => Equivalence::Same,
            Membership::Member(_) => Equivalence::Negated,
            Membership::NotMember => Equivalence::Different,
        }
    }

    pub fn in_stabilizer(&self, p: &PauliOp) -> Option<i8> {
        match self.active_group().membership(p) {
            Membership::Member(s) => Some(s),
            Membership::NotMember => None,
        }
    }

    /// Coset representative of `p` with (locally) minimal weight.
    pub fn reduce_mod_stabilizer(&self, p: &PauliOp) -> Result<Reduced, TableauError> {
        if let Some(g) = self.active().find(|g| !commutes(&g.op, p)) {
            return Err(TableauError::NotInNormalizer(format!("{p} (vs {})", g.op)));
        }
        let canonical = self.active_group().canonical(p).expect("operator on lattice qubits");
        let gens: Vec<PauliOp> = self.active().map(|g| g.signed()).collect();
        let mut best = if canonical.weight() < p.weight() { canonical.clone() } else { p.clone() };
        let mut evaluations = 0usize;
        let mut exhausted = false;
        'outer: loop {
            let touching: Vec<&PauliOp> = gens.iter().filter(|g| g.qubits().any(|q| best.axis(q).is_some())).collect();
            for size in 1..=self.search_depth {
                let mut idx: Vec<usize> = (0..size).collect();
                if size > touching.len() {
                    break;
                }
                loop {
                    evaluations += 1;
                    if evaluations > self.search_budget {
                        exhausted = true;
                        break 'outer;
                    }
                    let mut cand = best.clone();
                    for &i in &idx {
                        cand = multiply(&cand, touching[i]);
                    }
                    if cand.weight() < best.weight() {
                        best = cand;
                        continue 'outer;
                    }
                    if !next_combination(&mut idx, touching.len()) {
                        break;
                    }
                }
            }
            break;
        }
        Ok(Reduced { op: best, canonical, minimized: !exhausted })
    }

    /// `s` vector of the eigenspace reached by applying `error` to the ground space.
    pub fn eigenspace_label(&self, error: &PauliOp) -> EigenspaceLabel {
        EigenspaceLabel { s: self.active().map(|g| if commutes(&g.op, error) { 1 } else { -1 }).collect() }
    }

    /// Count of active generators anticommuting with `e`.
    pub fn violated_count(&self, e: &PauliOp) -> usize {
        self.active().filter(|g| !commutes(&g.op, e)).count()
    }

    /// Rank of active generators plus every logical operator, over GF(2).
    pub fn symplectic_rank(&self) -> usize {
        let mut ops = self.active_ops();
        for l in &self.logicals {
            ops.push(l.x.clone());
            ops.push(l.z.clone());
        }
        symplectic_rank(&self.columns(), &ops)
    }

    pub fn active_rank(&self) -> usize {
        self.active_group().rank()
    }

    /// Checks pairwise commutation of generators and logical-pair relations.
    pub fn check_invariants(&self) -> Result<(), String> {
        let act: Vec<&GenEntry> = self.active().collect();
        for (i, a) in act.iter().enumerate() {
            for b in &act[i + 1..] {
                if !commutes(&a.op, &b.op) {
                    return Err(format!("generators {} and {} anticommute", a.op, b.op));
                }
            }
        }
        for (i, l) in self.logicals.iter().enumerate() {
            if commutes(&l.x, &l.z) {
                return Err(format!("logical pair {} commutes", l.tag));
            }
            for g in &act {
                if !commutes(&g.op, &l.x) || !commutes(&g.op, &l.z) {
                    return Err(format!("logical {} anticommutes with {}", l.tag, g.op));
                }
            }
            for m in &self.logicals[i + 1..] {
                for (a, b) in [(&l.x, &m.x), (&l.x, &m.z), (&l.z, &m.x), (&l.z, &m.z)] {
                    if !commutes(a, b) {
                        return Err(format!("logical pairs {} and {} interact", l.tag, m.tag));
                    }
                }
            }
        }
        Ok(())
    }

    /// Active generator set as sorted signed strings, for order-free comparison.
    pub fn canonical_generators(&self) -> Vec<String> {
        let mut v: Vec<String> = self.active().map(|g| g.signed().to_string()).collect();
        v.sort();
        v
    }

    /// Both tableaux define the same active stabilizer group, signs included.
    pub fn same_stabilizer_group(&self, other: &Tableau) -> bool {
        self.active_rank() == other.active_rank() && other.active().all(|g| self.in_stabilizer(&g.signed()) == Some(1))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "num_qubits": self.n_qubits,
            "generators": self.gens.iter().filter(|g| g.active).map(|g| g.signed().to_string()).collect::<Vec<_>>(),
            "logicals": self.logicals.iter().map(|l| serde_json::json!({
                "tag": l.tag, "x": l.x.to_string(), "z": l.z.to_string()
            })).collect::<Vec<_>>(),
        })
    }
}

fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let k = idx.len();
    for i in (0..k).rev() {
        if idx[i] < n - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
