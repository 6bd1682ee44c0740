//! Logical-level computation: a register of double-hole qubits simulated as a
//! dense state over logical qubits with a software Pauli frame.
//!
//! Only three physical primitives touch the state: the braid CNOT (Z-cut
//! control, X-cut target), first-kind measurements (Z on X-cut, X on Z-cut)
//! and the injection pulse. Everything else is built from them with ancillas
//! drawn from a fixed pool, and every measurement-conditioned fix-up goes to
//! the frame.
//!
//! Frame convention: the logical state is `F · ψ` where `ψ` is the simulated
//! state and `F` the product of the per-qubit frame Paulis.

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::CutKind;

pub const MAX_SLOTS: usize = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MagicLabel {
    pub theta: f64,
    /// Probability that the state is the intended one rather than its `Z` flip.
    pub fidelity: f64,
}

impl MagicLabel {
    pub fn y() -> MagicLabel {
        MagicLabel { theta: std::f64::consts::FRAC_PI_2, fidelity: 1.0 }
    }

    pub fn a() -> MagicLabel {
        MagicLabel { theta: FRAC_PI_4, fidelity: 1.0 }
    }
}

/// What is known about a slot's logical state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Label {
    Eigen { basis: Basis, sign: i8 },
    Magic(MagicLabel),
    Data,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InjectionNoise {
    /// Probability of a logical `Z` flip on the injected state.
    pub flip: f64,
    /// Standard deviation of the pulse-area error on `θ`.
    pub angle_sigma: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub braids: usize,
    pub measurements: usize,
    pub injections: usize,
    pub y_consumed: usize,
    pub a_consumed: usize,
}

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("no free {0:?}-cut ancilla in the pool")]
    PoolExhausted(CutKind),
    #[error("no magic state with angle {0} in the pool")]
    EmptyMagicPool(f64),
    #[error("unknown or released qubit handle {0}")]
    BadHandle(usize),
    #[error("register holds at most {MAX_SLOTS} logical qubits")]
    TooLarge,
    #[error("forced outcome {0} has zero probability")]
    ImpossibleOutcome(i8),
    #[error("injection needs an X-cut qubit in |+>")]
    InjectionPrecondition,
    #[error("control and target coincide")]
    SameQubit,
    #[error("need {need} inputs, got {got}")]
    InsufficientInputs { need: usize, got: usize },
    #[error("malformed program step: {0}")]
    Program(String),
}

#[derive(Clone, Debug)]
pub struct LogicalRegister {
    kinds: Vec<CutKind>,
    busy: Vec<bool>,
    labels: Vec<Label>,
    handles: Vec<Option<usize>>,
    state: Vec<Complex64>,
    frame: Vec<(bool, bool)>,
    rng: ChaCha8Rng,
    forced: VecDeque<i8>,
    pub magic_pool: Vec<MagicLabel>,
    pub injection_noise: InjectionNoise,
    pub stats: Stats,
}

impl LogicalRegister {
    /// All slots exist from the start: X-cut ones in `|+>`, Z-cut ones in
    /// `|0>`, the states that creation yields directly.
    pub fn new(n_x: usize, n_z: usize, seed: u64) -> Result<LogicalRegister, ProtocolError> {
        let n = n_x + n_z;
        if n > MAX_SLOTS {
            return Err(ProtocolError::TooLarge);
        }
        let kinds: Vec<CutKind> = (0..n).map(|i| if i < n_x { CutKind::X } else { CutKind::Z }).collect();
        let labels = kinds
            .iter()
            .map(|k| match k {
                CutKind::X => Label::Eigen { basis: Basis::X, sign: 1 },
                CutKind::Z => Label::Eigen { basis: Basis::Z, sign: 1 },
            })
            .collect();
        let mut state = vec![Complex64::new(0.0, 0.0); 1 << n];
        state[0] = Complex64::new(1.0, 0.0);
        let mut reg = LogicalRegister {
            kinds,
            busy: vec![false; n],
            labels,
            handles: Vec::new(),
            state,
            frame: vec![(false, false); n],
            rng: ChaCha8Rng::seed_from_u64(seed),
            forced: VecDeque::new(),
            magic_pool: Vec::new(),
            injection_noise: InjectionNoise::default(),
            stats: Stats::default(),
        };
        for s in 0..n_x {
            reg.hadamard_raw(s);
        }
        Ok(reg)
    }

    pub fn num_slots(&self) -> usize {
        self.kinds.len()
    }

    pub fn kind(&self, h: usize) -> Result<CutKind, ProtocolError> {
        Ok(self.kinds[self.slot(h)?])
    }

    pub fn label(&self, h: usize) -> Result<Label, ProtocolError> {
        Ok(self.labels[self.slot(h)?])
    }

    pub fn slot(&self, h: usize) -> Result<usize, ProtocolError> {
        self.handles.get(h).copied().flatten().ok_or(ProtocolError::BadHandle(h))
    }

    pub fn free_count(&self, kind: CutKind) -> usize {
        (0..self.num_slots()).filter(|&s| !self.busy[s] && self.kinds[s] == kind).count()
    }

    /// Outcomes to return (instead of sampling) for the next measurements.
    pub fn force_outcomes(&mut self, v: impl IntoIterator<Item = i8>) {
        self.forced.extend(v);
    }

    /// Takes a free qubit as a data qubit in the `+1` eigenstate of `basis`.
    pub fn claim(&mut self, kind: CutKind, basis: Basis) -> Result<usize, ProtocolError> {
        let s = self.acquire(kind, basis)?;
        self.handles.push(Some(s));
        Ok(self.handles.len() - 1)
    }

    pub fn release(&mut self, h: usize) -> Result<(), ProtocolError> {
        let s = self.slot(h)?;
        self.busy[s] = false;
        self.handles[h] = None;
        Ok(())
    }

    fn free_slot(&self, kind: CutKind) -> Result<usize, ProtocolError> {
        (0..self.num_slots())
            .find(|&s| !self.busy[s] && self.kinds[s] == kind)
            .ok_or(ProtocolError::PoolExhausted(kind))
    }

    /// Recycles a free slot into the `+1` eigenstate of `basis`.
    fn acquire(&mut self, kind: CutKind, basis: Basis) -> Result<usize, ProtocolError> {
        let s = self.free_slot(kind)?;
        self.busy[s] = true;
        self.reset(s, basis)?;
        Ok(s)
    }

    fn reset(&mut self, s: usize, basis: Basis) -> Result<(), ProtocolError> {
        let m = self.measure_slot(s, basis)?;
        if m < 0 {
            self.pauli_slot(s, basis == Basis::Z, basis == Basis::X);
        }
        self.labels[s] = Label::Eigen { basis, sign: 1 };
        Ok(())
    }

    fn relocate(&mut self, from: usize, to: usize) {
        for h in self.handles.iter_mut() {
            if *h == Some(from) {
                *h = Some(to);
            }
        }
        self.labels[to] = self.labels[from];
        self.busy[from] = false;
    }

    // Dense primitives on slots.

    fn hadamard_raw(&mut self, s: usize) {
        let bit = 1 << s;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..self.state.len() {
            if i & bit == 0 {
                let (a, b) = (self.state[i], self.state[i | bit]);
                self.state[i] = (a + b) * r;
                self.state[i | bit] = (a - b) * r;
            }
        }
    }

    fn cnot_raw(&mut self, c: usize, t: usize) {
        let (cb, tb) = (1 << c, 1 << t);
        for i in 0..self.state.len() {
            if i & cb != 0 && i & tb == 0 {
                self.state.swap(i, i | tb);
            }
        }
    }

    fn phase_raw(&mut self, s: usize, phi: f64) {
        let bit = 1 << s;
        let (lo, hi) = (Complex64::from_polar(1.0, -phi / 2.0), Complex64::from_polar(1.0, phi / 2.0));
        for (i, a) in self.state.iter_mut().enumerate() {
            *a *= if i & bit == 0 { lo } else { hi };
        }
    }

    fn measure_z_raw(&mut self, s: usize, forced: Option<i8>) -> Result<i8, ProtocolError> {
        let bit = 1 << s;
        let p1: f64 = self.state.iter().enumerate().filter(|(i, _)| i & bit != 0).map(|(_, a)| a.norm_sqr()).sum();
        let one = match forced {
            Some(v) => {
                let one = v < 0;
                if (one && p1 < 1e-12) || (!one && p1 > 1.0 - 1e-12) {
                    return Err(ProtocolError::ImpossibleOutcome(v));
                }
                one
            }
            None => self.rng.gen::<f64>() < p1,
        };
        let norm = if one { p1 } else { 1.0 - p1 }.sqrt();
        for (i, a) in self.state.iter_mut().enumerate() {
            if (i & bit != 0) == one {
                *a /= norm;
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(if one { -1 } else { 1 })
    }

    // Frame-aware logical primitives.

    fn pauli_slot(&mut self, s: usize, x: bool, z: bool) {
        self.frame[s].0 ^= x;
        self.frame[s].1 ^= z;
    }

    /// Braid CNOT; the only physical two-qubit gate.
    fn braid(&mut self, c: usize, t: usize) {
        debug_assert!(self.kinds[c] == CutKind::Z && self.kinds[t] == CutKind::X);
        self.cnot_raw(c, t);
        let (xc, _) = self.frame[c];
        let (_, zt) = self.frame[t];
        self.frame[t].0 ^= xc;
        self.frame[c].1 ^= zt;
        self.stats.braids += 1;
    }

    /// First-kind measurement (direct, non-destructive) returning the logical outcome.
    fn measure_direct(&mut self, s: usize, basis: Basis) -> Result<i8, ProtocolError> {
        let (fx, fz) = self.frame[s];
        let flip = match basis {
            Basis::Z => fx,
            Basis::X => fz,
        };
        let forced = self.forced.pop_front().map(|v| if flip { -v } else { v });
        if basis == Basis::X {
            self.hadamard_raw(s);
        }
        let raw = self.measure_z_raw(s, forced)?;
        if basis == Basis::X {
            self.hadamard_raw(s);
        }
        self.stats.measurements += 1;
        let m = if flip { -raw } else { raw };
        self.labels[s] = Label::Eigen { basis, sign: m };
        Ok(m)
    }

    /// Logical measurement of a slot, first or second kind as the type requires.
    fn measure_slot(&mut self, s: usize, basis: Basis) -> Result<i8, ProtocolError> {
        match (self.kinds[s], basis) {
            (CutKind::X, Basis::Z) | (CutKind::Z, Basis::X) => self.measure_direct(s, basis),
            (CutKind::Z, Basis::Z) => {
                let a = self.acquire(CutKind::X, Basis::Z)?;
                self.braid(s, a);
                let m = self.measure_direct(a, Basis::Z)?;
                self.busy[a] = false;
                self.labels[s] = Label::Eigen { basis, sign: m };
                Ok(m)
            }
            (CutKind::X, Basis::X) => {
                let a = self.acquire(CutKind::Z, Basis::X)?;
                self.braid(a, s);
                let m = self.measure_direct(a, Basis::X)?;
                self.busy[a] = false;
                self.labels[s] = Label::Eigen { basis, sign: m };
                Ok(m)
            }
        }
    }

    /// Logical CNOT between slots; returns the slots now holding control and target.
    fn cnot_slots(&mut self, c: usize, t: usize) -> Result<(usize, usize), ProtocolError> {
        if c == t {
            return Err(ProtocolError::SameQubit);
        }
        match (self.kinds[c], self.kinds[t]) {
            (CutKind::Z, CutKind::X) => {
                self.braid(c, t);
                Ok((c, t))
            }
            (CutKind::Z, CutKind::Z) => {
                let a1 = self.acquire(CutKind::X, Basis::Z)?;
                let a2 = self.acquire(CutKind::Z, Basis::X)?;
                self.braid(t, a1);
                self.braid(c, a1);
                self.braid(a2, a1);
                let mz = self.measure_direct(a1, Basis::Z)?;
                let mx = self.measure_direct(t, Basis::X)?;
                self.busy[a1] = false;
                self.relocate(t, a2);
                if mz < 0 {
                    self.pauli_slot(a2, true, false);
                }
                if mx < 0 {
                    self.pauli_slot(c, false, true);
                    self.pauli_slot(a2, false, true);
                }
                Ok((c, a2))
            }
            (CutKind::X, _) => {
                let a1 = self.acquire(CutKind::X, Basis::Z)?;
                let a2 = self.acquire(CutKind::Z, Basis::X)?;
                self.braid(a2, c);
                let (a2, t) = self.cnot_slots(a2, t)?;
                self.braid(a2, a1);
                let mz = self.measure_direct(c, Basis::Z)?;
                let mx = self.measure_direct(a2, Basis::X)?;
                self.busy[a2] = false;
                self.relocate(c, a1);
                if mz < 0 {
                    self.pauli_slot(a1, true, false);
                    self.pauli_slot(t, true, false);
                }
                if mx < 0 {
                    self.pauli_slot(a1, false, true);
                }
                Ok((a1, t))
            }
        }
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<(), ProtocolError> {
        let (c, t) = (self.slot(control)?, self.slot(target)?);
        let (c, t) = self.cnot_slots(c, t)?;
        self.labels[c] = Label::Data;
        self.labels[t] = Label::Data;
        Ok(())
    }

    /// Non-destructive logical measurement; the qubit stays claimed.
    pub fn measure(&mut self, h: usize, basis: Basis) -> Result<i8, ProtocolError> {
        let s = self.slot(h)?;
        self.measure_slot(s, basis)
    }

    /// Software Pauli on a logical qubit.
    pub fn pauli(&mut self, h: usize, x: bool, z: bool) -> Result<(), ProtocolError> {
        let s = self.slot(h)?;
        self.pauli_slot(s, x, z);
        Ok(())
    }

    fn pulse(&mut self, s: usize, theta: f64) {
        let sign = if self.frame[s].0 { -1.0 } else { 1.0 };
        self.phase_raw(s, sign * theta);
    }

    /// Injection into a fresh slot of `kind`: `|0> + e^{iθ}|1>` up to the
    /// configured noise. Z-cut targets receive the state through the swap
    /// circuit from an X-cut carrier.
    fn inject_slot(&mut self, kind: CutKind, label: MagicLabel) -> Result<usize, ProtocolError> {
        let carrier = self.acquire(CutKind::X, Basis::X)?;
        let mut theta = label.theta;
        if self.injection_noise.angle_sigma > 0.0 {
            let n = Normal::new(0.0, self.injection_noise.angle_sigma).expect("finite sigma");
            theta += n.sample(&mut self.rng);
        }
        self.pulse(carrier, theta);
        if self.rng.gen::<f64>() < self.injection_noise.flip || self.rng.gen::<f64>() >= label.fidelity {
            self.pauli_slot(carrier, false, true);
        }
        self.stats.injections += 1;
        self.labels[carrier] = Label::Magic(label);
        if kind == CutKind::X {
            return Ok(carrier);
        }
        let z = self.acquire(CutKind::Z, Basis::X)?;
        self.braid(z, carrier);
        let (carrier, z) = self.cnot_slots(carrier, z)?;
        self.braid(z, carrier);
        self.busy[carrier] = false;
        self.labels[z] = Label::Magic(label);
        Ok(z)
    }

    /// Prepares a data qubit in a magic state from the given label.
    pub fn inject(&mut self, kind: CutKind, label: MagicLabel) -> Result<usize, ProtocolError> {
        let s = self.inject_slot(kind, label)?;
        self.handles.push(Some(s));
        Ok(self.handles.len() - 1)
    }

    fn take_magic(&mut self, theta: f64) -> Result<MagicLabel, ProtocolError> {
        let i = self
            .magic_pool
            .iter()
            .position(|m| (m.theta - theta).abs() < 1e-12)
            .ok_or(ProtocolError::EmptyMagicPool(theta))?;
        if theta == FRAC_PI_4 {
            self.stats.a_consumed += 1;
        } else {
            self.stats.y_consumed += 1;
        }
        Ok(self.magic_pool.swap_remove(i))
    }

    /// Teleported gate: ancilla control onto `s` (or `s` onto the ancilla
    /// when `data_controls`), measure `s`, output on the ancilla.
    fn teleport(&mut self, s: usize, theta: f64, data_controls: bool) -> Result<(usize, i8), ProtocolError> {
        let label = self.take_magic(theta)?;
        let a = self.inject_slot(self.kinds[s], label)?;
        let (a, s, m) = if data_controls {
            let (s, a) = self.cnot_slots(s, a)?;
            (a, s, self.measure_slot(s, Basis::X)?)
        } else {
            let (a, s) = self.cnot_slots(a, s)?;
            (a, s, self.measure_slot(s, Basis::Z)?)
        };
        self.relocate(s, a);
        self.labels[a] = Label::Data;
        Ok((a, m))
    }

    pub fn apply_s(&mut self, h: usize) -> Result<(), ProtocolError> {
        let s = self.slot(h)?;
        let (a, m) = self.teleport(s, MagicLabel::y().theta, false)?;
        if m < 0 {
            self.pauli_slot(a, true, true);
        }
        Ok(())
    }

    /// `exp(-iπ/4 X)`. With `|Y> = |0> + i|1>` the teleport circuit yields
    /// `exp(+iπ/4 X)` after its `Z X` fix-up, so a software `X` completes it.
    pub fn apply_rx90(&mut self, h: usize) -> Result<(), ProtocolError> {
        let s = self.slot(h)?;
        let (a, m) = self.teleport(s, MagicLabel::y().theta, true)?;
        self.pauli_slot(a, m >= 0, m < 0);
        Ok(())
    }

    /// On outcome `-1` the output is `X T† ψ`; `Z X S` restores `T ψ`.
    pub fn apply_t(&mut self, h: usize) -> Result<i8, ProtocolError> {
        let s = self.slot(h)?;
        let (_, m) = self.teleport(s, MagicLabel::a().theta, false)?;
        if m < 0 {
            self.apply_s(h)?;
            let a = self.slot(h)?;
            self.pauli_slot(a, true, true);
        }
        Ok(m)
    }

    pub fn apply_h(&mut self, h: usize) -> Result<(), ProtocolError> {
        self.apply_s(h)?;
        self.apply_rx90(h)?;
        self.apply_s(h)
    }

    /// Logical state vector with the frame applied.
    fn logical_vector(&self) -> Vec<Complex64> {
        let mut v = self.state.clone();
        for (s, &(x, z)) in self.frame.iter().enumerate() {
            let bit = 1 << s;
            if z {
                for (i, a) in v.iter_mut().enumerate() {
                    if i & bit != 0 {
                        *a = -*a;
                    }
                }
            }
            if x {
                for i in 0..v.len() {
                    if i & bit == 0 {
                        v.swap(i, i | bit);
                    }
                }
            }
        }
        v
    }

    /// `⟨φ|ρ|φ⟩` for the reduced logical state of `hs` (first handle = lowest bit of `phi`).
    pub fn fidelity(&self, hs: &[usize], phi: &[Complex64]) -> Result<f64, ProtocolError> {
        let slots: Vec<usize> = hs.iter().map(|&h| self.slot(h)).collect::<Result<_, _>>()?;
        let v = self.logical_vector();
        let mask: usize = slots.iter().map(|s| 1 << s).sum();
        let mut total = 0.0;
        for rest in 0..v.len() {
            if rest & mask != 0 {
                continue;
            }
            let mut amp = Complex64::new(0.0, 0.0);
            for (k, p) in phi.iter().enumerate() {
                let idx = slots.iter().enumerate().fold(rest, |acc, (j, s)| acc | (((k >> j) & 1) << s));
                amp += p.conj() * v[idx];
            }
            total += amp.norm_sqr();
        }
        Ok(total)
    }

    pub fn frame_of(&self, h: usize) -> Result<(bool, bool), ProtocolError> {
        Ok(self.frame[self.slot(h)?])
    }
}

/// One step of a logical program.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramStep {
    pub op: String,
    #[serde(default)]
    pub qubits: Vec<usize>,
    #[serde(default)]
    pub params: serde_json::Value,
}

/// Register sizes and the steps to run; handles are numbered in `claim` order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Program {
    pub x_slots: usize,
    pub z_slots: usize,
    #[serde(default)]
    pub y_states: usize,
    #[serde(default)]
    pub a_states: usize,
    pub steps: Vec<ProgramStep>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProgramRecord {
    pub step: usize,
    pub op: String,
    pub outcome: Option<i8>,
}

pub fn run_program(p: &Program, seed: u64) -> Result<(LogicalRegister, Vec<ProgramRecord>), ProtocolError> {
    let mut reg = LogicalRegister::new(p.x_slots, p.z_slots, seed)?;
    reg.magic_pool.extend(std::iter::repeat_n(MagicLabel::y(), p.y_states));
    reg.magic_pool.extend(std::iter::repeat_n(MagicLabel::a(), p.a_states));
    let mut out = Vec::new();
    let basis_of = |s: &ProgramStep| -> Result<Basis, ProtocolError> {
        match s.params.get("basis").and_then(|b| b.as_str()).unwrap_or("Z") {
            "X" => Ok(Basis::X),
            "Z" => Ok(Basis::Z),
            b => Err(ProtocolError::Program(format!("unknown basis {b}"))),
        }
    };
    let kind_of = |s: &ProgramStep| -> Result<CutKind, ProtocolError> {
        match s.params.get("kind").and_then(|b| b.as_str()).unwrap_or("Z") {
            "X" => Ok(CutKind::X),
            "Z" => Ok(CutKind::Z),
            k => Err(ProtocolError::Program(format!("unknown kind {k}"))),
        }
    };
    for (i, s) in p.steps.iter().enumerate() {
        let q = |k: usize| {
            s.qubits.get(k).copied().ok_or_else(|| ProtocolError::Program(format!("step {i} needs qubit {k}")))
        };
        let outcome = match s.op.as_str() {
            "claim" => {
                reg.claim(kind_of(s)?, basis_of(s)?)?;
                None
            }
            "cnot" => {
                reg.cnot(q(0)?, q(1)?)?;
                None
            }
            "measure" => Some(reg.measure(q(0)?, basis_of(s)?)?),
            "x" => reg.pauli(q(0)?, true, false).map(|_| None)?,
            "z" => reg.pauli(q(0)?, false, true).map(|_| None)?,
            "s" => reg.apply_s(q(0)?).map(|_| None)?,
            "rx" => reg.apply_rx90(q(0)?).map(|_| None)?,
            "t" => Some(reg.apply_t(q(0)?)?),
            "h" => reg.apply_h(q(0)?).map(|_| None)?,
            "release" => reg.release(q(0)?).map(|_| None)?,
            other => return Err(ProtocolError::Program(format!("unknown op {other}"))),
        };
        out.push(ProgramRecord { step: i, op: s.op.clone(), outcome });
    }
    Ok((reg, out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum EncoderGate {
    H(usize),
    Cnot(usize, usize),
}

/// Outcome of one pass of noisy inputs through a reversed encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistillOutcome {
    pub accept: bool,
    pub output_flip: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistillStats {
    pub p_accept: f64,
    /// Output error probability conditioned on acceptance.
    pub p_out: f64,
}

/// Magic-state distillation by a reversed CSS encoder under `Z`-twirled input errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Distiller {
    pub n: usize,
    pub x_checks: Vec<Vec<bool>>,
    pub x_logical: Vec<bool>,
    pub output: usize,
    pub pivots: Vec<usize>,
    pub encoder: Vec<EncoderGate>,
}

fn bits(rows: &[&str]) -> Vec<Vec<bool>> {
    rows.iter().map(|r| r.bytes().map(|b| b == b'1').collect()).collect()
}

impl Distiller {
    /// Seven-qubit Steane code, for `|Y>`.
    pub fn steane() -> Distiller {
        Distiller::from_css(bits(&["0001111", "0110011", "1010101"]), vec![true; 7])
    }

    /// Fifteen-qubit punctured Reed-Muller code, for `|A>`: the checks are
    /// the four bit-planes of the column index `1..=15`.
    pub fn reed_muller() -> Distiller {
        let rows = (0..4).map(|b| (1..=15u32).map(|c| (c >> b) & 1 == 1).collect()).collect();
        Distiller::from_css(rows, vec![true; 15])
    }

    /// Encoder `|ψ>|0…0> → α|0_L> + β|1_L>`: spread the input along the
    /// logical `X`, then for each check row put its pivot in `|+>` and fan it
    /// out over the row.
    pub fn from_css(checks: Vec<Vec<bool>>, logical: Vec<bool>) -> Distiller {
        let n = logical.len();
        let mut rows = checks.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..n {
            let Some(k) = (r..rows.len()).find(|&k| rows[k][col]) else { continue };
            rows.swap(r, k);
            for k in 0..rows.len() {
                if k != r && rows[k][col] {
                    let pivot_row = rows[r].clone();
                    for (a, b) in rows[k].iter_mut().zip(pivot_row) {
                        *a ^= b;
                    }
                }
            }
            pivots.push(col);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        let mut xl = logical.clone();
        for (row, &p) in rows.iter().zip(&pivots) {
            if xl[p] {
                for (a, b) in xl.iter_mut().zip(row) {
                    *a ^= b;
                }
            }
        }
        let output = (0..n).find(|&q| xl[q]).expect("logical outside the check span");
        let mut encoder = Vec::new();
        for q in 0..n {
            if q != output && xl[q] {
                encoder.push(EncoderGate::Cnot(output, q));
            }
        }
        for (row, &p) in rows.iter().zip(&pivots) {
            encoder.push(EncoderGate::H(p));
            for q in 0..n {
                if q != p && row[q] {
                    encoder.push(EncoderGate::Cnot(p, q));
                }
            }
        }
        Distiller { n, x_checks: checks, x_logical: logical, output, pivots, encoder }
    }

    /// Propagates `Z` errors on the inputs through the reversed encoder.
    /// Pivots end in `|0>` and are read in `Z`; any `X` there rejects.
    pub fn run(&self, z_errors: &[bool]) -> DistillOutcome {
        let mut x = vec![false; self.n];
        let mut z = z_errors.to_vec();
        for g in self.encoder.iter().rev() {
            match *g {
                EncoderGate::H(q) => std::mem::swap(&mut x[q], &mut z[q]),
                EncoderGate::Cnot(c, t) => {
                    x[t] ^= x[c];
                    z[c] ^= z[t];
                }
            }
        }
        let accept = (0..self.n).filter(|&q| q != self.output).all(|q| !x[q]);
        DistillOutcome { accept, output_flip: z[self.output] }
    }

    /// Exact acceptance and output error at input flip rate `p`, over all `2^n` patterns.
    pub fn exact(&self, p: f64) -> DistillStats {
        let (mut acc, mut bad) = (0.0, 0.0);
        let mut e = vec![false; self.n];
        for mask in 0u32..(1 << self.n) {
            for (q, b) in e.iter_mut().enumerate() {
                *b = (mask >> q) & 1 == 1;
            }
            let w = mask.count_ones() as i32;
            let prob = p.powi(w) * (1.0 - p).powi(self.n as i32 - w);
            let o = self.run(&e);
            if o.accept {
                acc += prob;
                if o.output_flip {
                    bad += prob;
                }
            }
        }
        DistillStats { p_accept: acc, p_out: bad / acc }
    }

    /// Over all weight-`w` patterns: `(rejected, accepted with a flipped output)`.
    pub fn weight_census(&self, w: u32) -> (usize, usize) {
        let (mut rej, mut flip) = (0, 0);
        let mut e = vec![false; self.n];
        for mask in 0u32..(1 << self.n) {
            if mask.count_ones() != w {
                continue;
            }
            for (q, b) in e.iter_mut().enumerate() {
                *b = (mask >> q) & 1 == 1;
            }
            let o = self.run(&e);
            if !o.accept {
                rej += 1;
            } else if o.output_flip {
                flip += 1;
            }
        }
        (rej, flip)
    }

    /// One round with inputs failing independently by their labels.
    pub fn sample<R: Rng + ?Sized>(
        &self,
        inputs: &[MagicLabel],
        rng: &mut R,
    ) -> Result<Option<MagicLabel>, ProtocolError> {
        if inputs.len() < self.n {
            return Err(ProtocolError::InsufficientInputs { need: self.n, got: inputs.len() });
        }
        let e: Vec<bool> = inputs[..self.n].iter().map(|m| rng.gen::<f64>() >= m.fidelity).collect();
        let o = self.run(&e);
        if !o.accept {
            return Ok(None);
        }
        // The label carries the expected fidelity, not the sampled flip.
        let p = 1.0 - inputs[..self.n].iter().map(|m| m.fidelity).sum::<f64>() / self.n as f64;
        Ok(Some(MagicLabel { theta: inputs[0].theta, fidelity: 1.0 - self.exact(p).p_out }))
    }
}

impl LogicalRegister {
    /// Consumes pool states of angle `theta` through `d`; an accepted output
    /// returns to the pool.
    pub fn distill(&mut self, d: &Distiller, theta: f64) -> Result<bool, ProtocolError> {
        let have: Vec<usize> =
            (0..self.magic_pool.len()).filter(|&i| (self.magic_pool[i].theta - theta).abs() < 1e-12).collect();
        if have.len() < d.n {
            return Err(ProtocolError::InsufficientInputs { need: d.n, got: have.len() });
        }
        let mut inputs = Vec::new();
        for &i in have[..d.n].iter().rev() {
            inputs.push(self.magic_pool.remove(i));
        }
        match d.sample(&inputs, &mut self.rng)? {
            Some(m) => {
                self.magic_pool.push(m);
                Ok(true)
            }
            None => Ok(false),
        }
    }
}
