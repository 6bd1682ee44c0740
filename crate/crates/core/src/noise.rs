//! Error models: gap-suppressed thermal Pauli events, Heisenberg propagation
//! through deformation histories, and a circuit-level syndrome round.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deformation::DeformationStep;
use crate::lattice::{GenKind, Lattice, DIRS};
use crate::pauli::{conjugate_by_rotation, Axis, PauliOp, QubitId};
use crate::tableau::Tableau;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Product `cβJ`; `c` is never separated out.
    pub cbj: f64,
    /// Per-component circuit error probability.
    pub p: f64,
    /// Time steps between error-correction rounds.
    pub m: f64,
    #[serde(default = "one")]
    pub j: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("cbJ must be non-negative, got {0}")]
    NegativeCbj(f64),
    #[error("p must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("m must be at least 1, got {0}")]
    BadM(f64),
}

impl NoiseParams {
    pub fn new(cbj: f64, p: f64, m: f64) -> Result<Self, NoiseError> {
        let np = NoiseParams { cbj, p, m, j: 1.0, seed: 0 };
        np.validate()?;
        Ok(np)
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        if !(self.cbj >= 0.0) {
            return Err(NoiseError::NegativeCbj(self.cbj));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(NoiseError::BadProbability(self.p));
        }
        if !(self.m >= 1.0) {
            return Err(NoiseError::BadM(self.m));
        }
        Ok(())
    }

    /// Per-step probability of an event in the given class.
    pub fn rate(&self, class: GapClass) -> f64 {
        match class {
            GapClass::Unprotected => self.p,
            GapClass::Bulk2J => (-2.0 * self.cbj).exp(),
            GapClass::Boundary4J => (-4.0 * self.cbj).exp(),
        }
    }
}

/// Energy penalty class of a single-qubit error.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GapClass {
    #[serde(rename = "bulk-2J")]
    Bulk2J,
    #[serde(rename = "boundary-4J")]
    Boundary4J,
    #[serde(rename = "unprotected")]
    Unprotected,
}

impl GapClass {
    /// Class of an error violating `count` active generators (penalty `2J · count`).
    pub fn from_count(count: usize) -> GapClass {
        match count {
            0 => GapClass::Unprotected,
            1 => GapClass::Bulk2J,
            _ => GapClass::Boundary4J,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorEvent {
    pub step: usize,
    pub qubit: QubitId,
    pub axis: Axis,
    pub gap_class: GapClass,
}

pub fn gap_class(tab: &Tableau, err: &PauliOp) -> GapClass {
    GapClass::from_count(tab.violated_count(err))
}

/// Anticommuting-generator counts for `σ_x` and `σ_z` on every qubit.
pub fn violation_counts(tab: &Tableau) -> (Vec<usize>, Vec<usize>) {
    let n = tab.num_qubits();
    let mut cx = vec![0; n];
    let mut cz = vec![0; n];
    for g in tab.active() {
        for (&q, &a) in g.op.support() {
            if a != Axis::X {
                cx[q as usize] += 1;
            }
            if a != Axis::Z {
                cz[q as usize] += 1;
            }
        }
    }
    (cx, cz)
}

/// Number of trials skipped before the next success of a Bernoulli(`p`) sequence.
pub fn geometric_gap<R: Rng + ?Sized>(rng: &mut R, p: f64) -> u64 {
    if p >= 1.0 {
        return 0;
    }
    if p <= 0.0 {
        return u64::MAX;
    }
    let u: f64 = 1.0 - rng.gen::<f64>();
    let g = (u.ln() / (-p).ln_1p()).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

/// Calls `f(i)` for each `i < n` selected independently with probability `p`.
pub fn for_each_hit<R: Rng + ?Sized, F: FnMut(usize)>(rng: &mut R, p: f64, n: usize, mut f: F) {
    let mut i = 0u64;
    loop {
        let g = geometric_gap(rng, p);
        i = match i.checked_add(g) {
            Some(v) if v < n as u64 => v,
            _ => return,
        };
        f(i as usize);
        i += 1;
    }
}

/// Independent per-qubit, per-step `σ_x` and `σ_z` events at their gap-class rates.
pub fn sample_thermal<R: Rng + ?Sized>(
    params: &NoiseParams,
    tab: &Tableau,
    steps: usize,
    rng: &mut R,
) -> Vec<ErrorEvent> {
    let (cx, cz) = violation_counts(tab);
    let mut groups: Vec<(Axis, GapClass, Vec<QubitId>)> = Vec::new();
    for (axis, counts) in [(Axis::X, &cx), (Axis::Z, &cz)] {
        for class in [GapClass::Unprotected, GapClass::Bulk2J, GapClass::Boundary4J] {
            let qs: Vec<QubitId> =
                (0..counts.len()).filter(|&q| GapClass::from_count(counts[q]) == class).map(|q| q as QubitId).collect();
            if !qs.is_empty() {
                groups.push((axis, class, qs));
            }
        }
    }
    let mut out = Vec::new();
    for (axis, class, qs) in &groups {
        let rate = params.rate(*class);
        for_each_hit(rng, rate, qs.len() * steps, |i| {
            out.push(ErrorEvent { step: i / qs.len(), qubit: qs[i % qs.len()], axis: *axis, gap_class: *class });
        });
    }
    out.sort_by_key(|e| (e.step, e.qubit, e.axis as u8));
    out
}

/// Effective error after the rotations of `history[from..to]`.
pub fn propagate(error: &PauliOp, history: &[DeformationStep], from: usize, to: usize) -> PauliOp {
    let mut e = error.clone();
    for step in &history[from..to] {
        for q in &step.rotations {
            e = conjugate_by_rotation(&e, q).expect("schedule rotations are Hermitian");
        }
    }
    e
}

/// Pauli error frame on data qubits.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Frame {
    pub x: Vec<bool>,
    pub z: Vec<bool>,
}

impl Frame {
    pub fn new(n: usize) -> Frame {
        Frame { x: vec![false; n], z: vec![false; n] }
    }

    pub fn from_pauli(n: usize, p: &PauliOp) -> Frame {
        let mut f = Frame::new(n);
        f.apply(p);
        f
    }

    pub fn apply(&mut self, p: &PauliOp) {
        for (&q, &a) in p.support() {
            let (x, z) = a.bits();
            self.x[q as usize] ^= x;
            self.z[q as usize] ^= z;
        }
    }

    pub fn to_pauli(&self) -> PauliOp {
        PauliOp::from_terms(
            (0..self.x.len()).filter_map(|q| Axis::from_bits(self.x[q], self.z[q]).map(|a| (q as QubitId, a))),
        )
    }

    pub fn is_clean(&self) -> bool {
        !self.x.iter().any(|&b| b) && !self.z.iter().any(|&b| b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Gate {
    /// Prepare ancilla in `|0⟩`.
    Init(usize),
    H(usize),
    Cnot(usize, usize),
    Measure(usize),
}

/// Where a single fault can strike and what it can be.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaultKind {
    /// `X` after preparation.
    Init,
    /// One of `X, Y, Z` after a Hadamard.
    Hadamard,
    /// One of the 15 non-identity two-qubit Paulis after a CNOT.
    Cnot,
    /// Reported outcome flipped.
    Measure,
}

impl FaultKind {
    pub fn variants(self) -> usize {
        match self {
            FaultKind::Init | FaultKind::Measure => 1,
            FaultKind::Hadamard => 3,
            FaultKind::Cnot => 15,
        }
    }
}

/// One stabilizer-measurement round for every active lattice generator: an
/// ancilla per generator, CNOT layers in north, west, east, south order.
#[derive(Clone, Debug)]
pub struct SyndromeCircuit {
    n_data: usize,
    /// Lattice generator id of each ancilla.
    pub generators: Vec<usize>,
    gates: Vec<Gate>,
}

impl SyndromeCircuit {
    pub fn new(lat: &Lattice) -> SyndromeCircuit {
        let n = lat.num_qubits();
        let gens: Vec<_> = lat.active_generators().collect();
        let anc = |i: usize| n + i;
        let mut gates = Vec::new();
        for i in 0..gens.len() {
            gates.push(Gate::Init(anc(i)));
        }
        for (i, g) in gens.iter().enumerate() {
            if g.kind == GenKind::Vertex {
                gates.push(Gate::H(anc(i)));
            }
        }
        for &(dr, dc) in &DIRS {
            for (i, g) in gens.iter().enumerate() {
                if let Some(q) = lat.qubit_at(g.pos.offset(dr, dc)) {
                    gates.push(match g.kind {
                        GenKind::Plaquette => Gate::Cnot(q as usize, anc(i)),
                        GenKind::Vertex => Gate::Cnot(anc(i), q as usize),
                    });
                }
            }
        }
        for (i, g) in gens.iter().enumerate() {
            if g.kind == GenKind::Vertex {
                gates.push(Gate::H(anc(i)));
            }
        }
        for i in 0..gens.len() {
            gates.push(Gate::Measure(anc(i)));
        }
        SyndromeCircuit { n_data: n, generators: gens.iter().map(|g| g.id).collect(), gates }
    }

    /// Fault locations in circuit order.
    pub fn locations(&self) -> Vec<FaultKind> {
        self.gates
            .iter()
            .map(|g| match g {
                Gate::Init(_) => FaultKind::Init,
                Gate::H(_) => FaultKind::Hadamard,
                Gate::Cnot(..) => FaultKind::Cnot,
                Gate::Measure(_) => FaultKind::Measure,
            })
            .collect()
    }

    /// Runs the round with the given `(location, variant)` faults; returns flipped reports.
    pub fn run_with_faults(&self, frame: &mut Frame, faults: &[(usize, usize)]) -> Vec<bool> {
        let m = self.generators.len();
        let total = self.n_data + m;
        let mut x = vec![false; total];
        let mut z = vec![false; total];
        x[..self.n_data].copy_from_slice(&frame.x);
        z[..self.n_data].copy_from_slice(&frame.z);
        let mut out = vec![false; m];
        let mut fi = 0;
        for (loc, g) in self.gates.iter().enumerate() {
            let fault = if fi < faults.len() && faults[fi].0 == loc {
                fi += 1;
                Some(faults[fi - 1].1)
            } else {
                None
            };
            match *g {
                Gate::Init(a) => {
                    x[a] = fault.is_some();
                    z[a] = false;
                }
                Gate::H(a) => {
                    std::mem::swap(&mut x[a], &mut z[a]);
                    if let Some(v) = fault {
                        let (bx, bz) = pauli_bits(v + 1);
                        x[a] ^= bx;
                        z[a] ^= bz;
                    }
                }
                Gate::Cnot(c, t) => {
                    x[t] ^= x[c];
                    z[c] ^= z[t];
                    if let Some(v) = fault {
                        let (b1, b2) = ((v + 1) / 4, (v + 1) % 4);
                        let (cx, cz) = pauli_bits(b1);
                        let (tx, tz) = pauli_bits(b2);
                        x[c] ^= cx;
                        z[c] ^= cz;
                        x[t] ^= tx;
                        z[t] ^= tz;
                    }
                }
                Gate::Measure(a) => out[a - self.n_data] = x[a] ^ fault.is_some(),
            }
        }
        frame.x.copy_from_slice(&x[..self.n_data]);
        frame.z.copy_from_slice(&z[..self.n_data]);
        out
    }

    /// Noisy round at physical error rate `p`.
    pub fn run<R: Rng + ?Sized>(&self, frame: &mut Frame, p: f64, rng: &mut R) -> Vec<bool> {
        let kinds = self.locations();
        let mut hits = Vec::new();
        for_each_hit(rng, p, kinds.len(), |loc| hits.push(loc));
        let faults: Vec<(usize, usize)> =
            hits.into_iter().map(|loc| (loc, rng.gen_range(0..kinds[loc].variants()))).collect();
        self.run_with_faults(frame, &faults)
    }
}

/// `(x, z)` bits of Pauli index `0 = I, 1 = X, 2 = Y, 3 = Z`.
fn pauli_bits(i: usize) -> (bool, bool) {
    match i {
        0 => (false, false),
        1 => (true, false),
        2 => (true, true),
        _ => (false, true),
    }
}

/// Reported signs of every active generator and the updated data error.
pub fn syndrome_round<R: Rng + ?Sized>(
    lat: &Lattice,
    frame: &PauliOp,
    params: &NoiseParams,
    rng: &mut R,
) -> (Vec<i8>, PauliOp) {
    let circuit = SyndromeCircuit::new(lat);
    let mut f = Frame::from_pauli(lat.num_qubits(), frame);
    let flips = circuit.run(&mut f, params.p, rng);
    (flips.iter().map(|&b| if b { -1 } else { 1 }).collect(), f.to_pauli())
}
