//! Dense state-vector integration of adiabatic stabilizer-Hamiltonian paths.
//!
//! The Hamiltonian starts as `H₀ = -J Σ S_j` and each step conjugates it by
//! `U(t) = Π_r exp(i f(t) Q_r)` with `f: 0 → π/4`. States live on `2ⁿ`
//! amplitudes with qubit `q` on bit `q` of the basis index. Hamiltonians are
//! applied term by term, so memory stays `O(2ⁿ)`; dense matrices are only
//! built for spectra on small instances.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{adiabatic_budget, AnalysisError};
use crate::deformation::{smoothstep, DeformationStep};
use crate::pauli::{commutes, conjugate_by_rotation, multiply, Axis, PauliOp, Phase};

pub const MAX_QUBITS: usize = 12;
pub const MAX_DENSE_QUBITS: usize = 10;
/// Largest tolerated norm change over one integrator step.
pub const NORM_GUARD: f64 = 1e-6;
/// Largest tolerated projector distance for a closed loop.
pub const LOOP_TOLERANCE: f64 = 1e-6;

pub type State = Vec<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{0} qubits exceeds the limit of {1}")]
    TooManyQubits(usize, usize),
    #[error("operator {0} acts outside the register")]
    OutOfRange(String),
    #[error("operator {0} is not Hermitian")]
    NonHermitian(String),
    #[error("norm drifted by {drift:e} at t = {t}")]
    NormDrift { drift: f64, t: f64 },
    #[error("loop is not closed: projector distance {0:e}")]
    OpenLoop(f64),
    #[error("state has weight {0:e} outside the ground space")]
    NotGround(f64),
    #[error("schedule: {0}")]
    Schedule(String),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

type Result<T> = std::result::Result<T, OracleError>;

fn phase_value(p: Phase) -> Complex64 {
    [Complex64::new(1.0, 0.0), I, Complex64::new(-1.0, 0.0), -I][p.power() as usize]
}

/// A Pauli operator as basis-index bit masks: `P|i⟩ = phase·(-1)^{|i∧z|} |i⊕x⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaskedPauli {
    pub x: usize,
    pub z: usize,
    pub phase: Complex64,
}

impl MaskedPauli {
    pub fn new(op: &PauliOp, n: usize) -> Result<Self> {
        let (mut x, mut z) = (0usize, 0usize);
        let mut phase = phase_value(op.phase());
        for (&q, &a) in op.support() {
            if q as usize >= n {
                return Err(OracleError::OutOfRange(op.to_string()));
            }
            let (bx, bz) = a.bits();
            x |= (bx as usize) << q;
            z |= (bz as usize) << q;
            if a == Axis::Y {
                // Y = i X Z
                phase *= I;
            }
        }
        Ok(MaskedPauli { x, z, phase })
    }

    /// `dst += c · P src`.
    pub fn apply_add(&self, c: Complex64, src: &[Complex64], dst: &mut [Complex64]) {
        let c = c * self.phase;
        for (i, v) in src.iter().enumerate() {
            let s = if (i & self.z).count_ones() % 2 == 1 { -c } else { c };
            dst[i ^ self.x] += s * v;
        }
    }

    pub fn apply(&self, src: &[Complex64]) -> State {
        let mut out = vec![ZERO; src.len()];
        self.apply_add(Complex64::new(1.0, 0.0), src, &mut out);
        out
    }
}

/// One term `c · cos(2f)^a · sin(2f)^b · P` of a conjugated generator.
#[derive(Clone, Debug)]
struct Term {
    coeff: Complex64,
    op: MaskedPauli,
    cos: i32,
    sin: i32,
}

impl Term {
    fn value(&self, c2: f64, s2: f64) -> Complex64 {
        self.coeff * c2.powi(self.cos) * s2.powi(self.sin)
    }

    /// Derivative with respect to `f`.
    fn slope(&self, c2: f64, s2: f64) -> Complex64 {
        let mut d = 0.0;
        if self.cos > 0 {
            d -= 2.0 * self.cos as f64 * c2.powi(self.cos - 1) * s2.powi(self.sin + 1);
        }
        if self.sin > 0 {
            d += 2.0 * self.sin as f64 * c2.powi(self.cos + 1) * s2.powi(self.sin - 1);
        }
        self.coeff * d
    }
}

/// `-J Σ_j U S_j U†` during one step, expanded symbolically in `cos 2f`, `sin 2f`.
#[derive(Clone, Debug)]
struct StepHamiltonian {
    terms: Vec<Term>,
}

impl StepHamiltonian {
    fn new(n: usize, j: f64, generators: &[PauliOp], rotations: &[PauliOp]) -> Result<Self> {
        let mut sym: Vec<(Complex64, PauliOp, i32, i32)> =
            generators.iter().map(|g| (Complex64::new(-j, 0.0), g.clone(), 0, 0)).collect();
        // e^{ifQ} P e^{-ifQ} = cos2f P + i sin2f QP when {P, Q} = 0.
        for q in rotations {
            let mut next = Vec::with_capacity(sym.len());
            for (c, p, a, b) in sym {
                if commutes(&p, q) {
                    next.push((c, p, a, b));
                } else {
                    next.push((c * I, multiply(q, &p), a, b + 1));
                    next.push((c, p, a + 1, b));
                }
            }
            sym = next;
        }
        let terms = sym
            .into_iter()
            .map(|(coeff, p, cos, sin)| Ok(Term { coeff, op: MaskedPauli::new(&p, n)?, cos, sin }))
            .collect::<Result<_>>()?;
        Ok(StepHamiltonian { terms })
    }

    fn apply_add(&self, f: f64, scale: Complex64, src: &[Complex64], dst: &mut [Complex64]) {
        let (s2, c2) = (2.0 * f).sin_cos();
        for t in &self.terms {
            t.op.apply_add(scale * t.value(c2, s2), src, dst);
        }
    }

    fn energy(&self, f: f64, v: &[Complex64]) -> f64 {
        let mut hv = vec![ZERO; v.len()];
        self.apply_add(f, Complex64::new(1.0, 0.0), v, &mut hv);
        inner(v, &hv).re
    }

    fn dense(&self, n: usize, f: f64, derivative: bool) -> DMatrix<Complex64> {
        let dim = 1usize << n;
        let (s2, c2) = (2.0 * f).sin_cos();
        let mut m = DMatrix::zeros(dim, dim);
        for t in &self.terms {
            let c = if derivative { t.slope(c2, s2) } else { t.value(c2, s2) } * t.op.phase;
            for i in 0..dim {
                let s = if (i & t.op.z).count_ones() % 2 == 1 { -c } else { c };
                m[(i ^ t.op.x, i)] += s;
            }
        }
        m
    }
}

/// Classification of one step against the generators it starts from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepClass {
    Valid,
    /// Every rotation commutes with the Hamiltonian: the step lies in the
    /// isotropy group and deforms nothing.
    Trivial,
    EvenCount {
        rotation: usize,
        count: usize,
    },
    NonCommuting(usize, usize),
    SharedGenerator(usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectedError {
    pub before_step: usize,
    pub op: PauliOp,
}

/// A small register, a stabilizer Hamiltonian and a path of rotation steps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseSystem {
    pub n: usize,
    pub j: f64,
    pub generators: Vec<PauliOp>,
    /// Rotations within a step act simultaneously.
    pub steps: Vec<Vec<PauliOp>>,
    #[serde(default)]
    pub errors: Vec<InjectedError>,
}

impl DenseSystem {
    pub fn new(n: usize, j: f64, generators: Vec<PauliOp>) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(OracleError::TooManyQubits(n, MAX_QUBITS));
        }
        let sys = DenseSystem { n, j, generators, steps: Vec::new(), errors: Vec::new() };
        for g in &sys.generators {
            sys.check_op(g)?;
        }
        Ok(sys)
    }

    /// Generators in the deformation module's step format. Toggles are not
    /// supported: the dense path only rotates.
    pub fn from_schedule(n: usize, j: f64, generators: Vec<PauliOp>, steps: &[DeformationStep]) -> Result<Self> {
        let mut sys = DenseSystem::new(n, j, generators)?;
        for s in steps {
            if !s.toggles.is_empty() {
                return Err(OracleError::Schedule(format!("step '{}' toggles generators", s.label)));
            }
            sys = sys.with_step(s.rotations.clone())?;
        }
        Ok(sys)
    }

    fn check_op(&self, op: &PauliOp) -> Result<()> {
        if !op.is_hermitian() {
            return Err(OracleError::NonHermitian(op.to_string()));
        }
        MaskedPauli::new(op, self.n).map(|_| ())
    }

    pub fn with_step(mut self, rotations: Vec<PauliOp>) -> Result<Self> {
        for q in &rotations {
            self.check_op(q)?;
        }
        self.steps.push(rotations);
        Ok(self)
    }

    pub fn with_error(mut self, before_step: usize, op: PauliOp) -> Result<Self> {
        MaskedPauli::new(&op, self.n)?;
        if before_step > self.steps.len() {
            return Err(OracleError::Schedule(format!("error before step {before_step} of {}", self.steps.len())));
        }
        self.errors.push(InjectedError { before_step, op });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Generators at the start of step `k` (`k = steps.len()` for the end).
    pub fn generators_at(&self, k: usize) -> Vec<PauliOp> {
        let mut gens = self.generators.clone();
        for step in &self.steps[..k] {
            for q in step {
                for g in &mut gens {
                    *g = conjugate_by_rotation(g, q).expect("rotations are checked Hermitian");
                }
            }
        }
        gens
    }

    pub fn classify(&self) -> Vec<StepClass> {
        (0..self.steps.len())
            .map(|k| {
                let gens = self.generators_at(k);
                let step = &self.steps[k];
                let sets: Vec<Vec<usize>> =
                    step.iter().map(|q| (0..gens.len()).filter(|&j| !commutes(q, &gens[j])).collect()).collect();
                if sets.iter().all(Vec::is_empty) {
                    return StepClass::Trivial;
                }
                for a in 0..step.len() {
                    for b in a + 1..step.len() {
                        if !commutes(&step[a], &step[b]) {
                            return StepClass::NonCommuting(a, b);
                        }
                        if sets[a].iter().any(|j| sets[b].contains(j)) {
                            return StepClass::SharedGenerator(a, b);
                        }
                    }
                }
                match sets.iter().position(|s| s.len() % 2 == 0) {
                    Some(r) => StepClass::EvenCount { rotation: r, count: sets[r].len() },
                    None => StepClass::Valid,
                }
            })
            .collect()
    }

    fn step_hamiltonian(&self, k: usize) -> Result<StepHamiltonian> {
        StepHamiltonian::new(self.n, self.j, &self.generators_at(k), &self.steps[k])
    }

    /// `H` during step `k` at angle `f`, as a dense matrix.
    pub fn dense_hamiltonian(&self, k: usize, f: f64) -> Result<DMatrix<Complex64>> {
        self.dense_guard()?;
        Ok(self.step_hamiltonian(k)?.dense(self.n, f, false))
    }

    fn dense_guard(&self) -> Result<()> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(OracleError::TooManyQubits(self.n, MAX_DENSE_QUBITS));
        }
        Ok(())
    }

    /// Ground energy `-J·(number of generators)`, assuming independent generators.
    pub fn ground_energy(&self) -> f64 {
        -self.j * self.generators.len() as f64
    }

    /// A seeded random state in the ground space of `H₀`.
    pub fn ground_state(&self, seed: u64) -> Result<State> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..16 {
            let v: State =
                (0..self.dim()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let mut w = project(&self.generators, self.n, &v)?;
            if normalize(&mut w) > 1e-6 {
                return Ok(w);
            }
        }
        Err(OracleError::NotGround(1.0))
    }

    /// Orthonormal basis of the ground space of `H₀`.
    pub fn ground_basis(&self, seed: u64) -> Result<Vec<State>> {
        let k = 1usize << (self.n - self.generators.len().min(self.n));
        let mut basis: Vec<State> = Vec::with_capacity(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut attempts = 0;
        while basis.len() < k && attempts < 64 * k {
            attempts += 1;
            let v: State =
                (0..self.dim()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let mut w = project(&self.generators, self.n, &v)?;
            for b in &basis {
                let c = inner(b, &w);
                for (x, y) in w.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
            if normalize(&mut w) > 1e-6 {
                basis.push(w);
            }
        }
        Ok(basis)
    }

    /// Gates and errors applied literally in time order.
    pub fn predict(&self, psi0: &[Complex64]) -> Result<State> {
        let mut psi = psi0.to_vec();
        for k in 0..=self.steps.len() {
            for e in self.errors.iter().filter(|e| e.before_step == k) {
                psi = MaskedPauli::new(&e.op, self.n)?.apply(&psi);
            }
            if k < self.steps.len() {
                for q in &self.steps[k] {
                    psi = rotate(q, self.n, &psi)?;
                }
            }
        }
        Ok(psi)
    }

    /// `Π F^{pq} · Ω_p |ψ⟩`, each error pushed through the later gates as a Pauli.
    pub fn predict_propagated(&self, psi0: &[Complex64]) -> Result<State> {
        let mut psi = psi0.to_vec();
        for step in &self.steps {
            for q in step {
                psi = rotate(q, self.n, &psi)?;
            }
        }
        let mut errs = self.errors.clone();
        errs.sort_by_key(|e| e.before_step);
        for e in errs {
            let mut f = e.op.clone();
            for step in &self.steps[e.before_step..] {
                for q in step {
                    f = conjugate_by_rotation(&f, q).map_err(|_| OracleError::NonHermitian(q.to_string()))?;
                }
            }
            psi = MaskedPauli::new(&f, self.n)?.apply(&psi);
        }
        Ok(psi)
    }

    /// Smallest spectral gap above the ground level, sampled along every step.
    pub fn min_gap(&self, samples: usize) -> Result<f64> {
        self.dense_guard()?;
        let mut gap = f64::INFINITY;
        for k in 0..self.steps.len() {
            let h = self.step_hamiltonian(k)?;
            for i in 0..=samples {
                let f = std::f64::consts::FRAC_PI_4 * i as f64 / samples.max(1) as f64;
                gap = gap.min(spectral_gap(&h.dense(self.n, f, false)));
            }
        }
        Ok(gap)
    }

    /// `sup_ϑ ‖dH/dϑ‖` over all steps for a smoothstep profile of the given order.
    pub fn xi(&self, order: u32, samples: usize) -> Result<f64> {
        self.dense_guard()?;
        let mut best: f64 = 0.0;
        for k in 0..self.steps.len() {
            let h = self.step_hamiltonian(k)?;
            for i in 0..=samples {
                let s = i as f64 / samples.max(1) as f64;
                let sched = SchedulePolicy::fixed(order, 1.0);
                let d = h.dense(self.n, sched.f(s), true) * Complex64::new(sched.df(s), 0.0);
                best = best.max(operator_norm(&d));
            }
        }
        Ok(best)
    }
}

fn check_len(n: usize, v: &[Complex64]) -> Result<()> {
    if v.len() != 1 << n {
        return Err(OracleError::Schedule(format!("state of length {} for {n} qubits", v.len())));
    }
    Ok(())
}

/// `Π_j (1 + S_j)/2 · v`.
pub fn project(generators: &[PauliOp], n: usize, v: &[Complex64]) -> Result<State> {
    check_len(n, v)?;
    let mut w = v.to_vec();
    for g in generators {
        let m = MaskedPauli::new(g, n)?;
        let mut next: State = w.iter().map(|x| x * 0.5).collect();
        m.apply_add(Complex64::new(0.5, 0.0), &w, &mut next);
        w = next;
    }
    Ok(w)
}

/// `exp(iπ/4 Q) v = (v + iQv)/√2`.
pub fn rotate(q: &PauliOp, n: usize, v: &[Complex64]) -> Result<State> {
    let m = MaskedPauli::new(q, n)?;
    let mut out: State = v.iter().map(|x| x * FRAC_1_SQRT_2).collect();
    m.apply_add(Complex64::new(0.0, FRAC_1_SQRT_2), v, &mut out);
    Ok(out)
}

pub fn inner(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalizes in place and returns the original norm.
fn normalize(v: &mut [Complex64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

/// `|⟨a|b⟩|²` for normalized states.
pub fn fidelity(a: &[Complex64], b: &[Complex64]) -> f64 {
    inner(a, b).norm_sqr()
}

/// Dense `2ⁿ × 2ⁿ` matrix of a Pauli, built from 2×2 factors.
pub fn pauli_matrix(op: &PauliOp, n: usize) -> DMatrix<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let factor = |a: Option<Axis>, r: usize, c: usize| -> Complex64 {
        match (a, r, c) {
            (None, r, c) if r == c => one,
            (Some(Axis::X), r, c) if r != c => one,
            (Some(Axis::Y), 1, 0) => I,
            (Some(Axis::Y), 0, 1) => -I,
            (Some(Axis::Z), 0, 0) => one,
            (Some(Axis::Z), 1, 1) => -one,
            _ => ZERO,
        }
    };
    let dim = 1usize << n;
    let ph = phase_value(op.phase());
    DMatrix::from_fn(dim, dim, |r, c| {
        (0..n).fold(ph, |acc, q| acc * factor(op.axis(q as u32), (r >> q) & 1, (c >> q) & 1))
    })
}

fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Vec<f64> {
    let mut ev: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Distance from the lowest eigenvalue to the next distinct one.
pub fn spectral_gap(h: &DMatrix<Complex64>) -> f64 {
    let ev = hermitian_eigenvalues(h);
    ev.iter().find(|&&e| e > ev[0] + 1e-9).map_or(f64::INFINITY, |e| e - ev[0])
}

pub fn operator_norm(h: &DMatrix<Complex64>) -> f64 {
    hermitian_eigenvalues(h).iter().fold(0.0, |m, e| m.max(e.abs()))
}

/// Step duration, profile order and integrator step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchedulePolicy {
    pub order: u32,
    pub t_step: f64,
    pub dt: f64,
    pub gamma: f64,
    pub xi: f64,
}

impl SchedulePolicy {
    pub const DEFAULT_DT: f64 = 0.01;

    pub fn fixed(order: u32, t_step: f64) -> Self {
        SchedulePolicy { order, t_step, dt: Self::DEFAULT_DT, gamma: 1.0, xi: f64::NAN }
    }

    /// Step time `(e/γ) N ξ²/Δ³` with `ξ` and `Δ` measured on the system.
    pub fn budgeted(sys: &DenseSystem, order: u32, gamma: f64) -> Result<Self> {
        let xi = sys.xi(order, 200)?;
        let gap = sys.min_gap(16)?;
        let b = adiabatic_budget(gamma, order, xi, gap)?;
        Ok(SchedulePolicy { order, t_step: b.t_q, dt: Self::DEFAULT_DT, gamma, xi })
    }

    pub fn f(&self, s: f64) -> f64 {
        std::f64::consts::FRAC_PI_4 * smoothstep(self.order, s)
    }

    /// `df/ds`.
    pub fn df(&self, s: f64) -> f64 {
        let n = self.order as i32;
        let s = s.clamp(0.0, 1.0);
        let c: f64 = (1..=self.order).map(|k| (self.order + k) as f64 / k as f64).product();
        std::f64::consts::FRAC_PI_4 * (2 * n + 1) as f64 * c * (s * (1.0 - s)).powi(n)
    }

    pub fn with_dt(self, dt: f64) -> Self {
        SchedulePolicy { dt, ..self }
    }
}

/// Result of one integration.
#[derive(Clone, Debug, PartialEq)]
pub struct Run {
    pub state: State,
    pub total_time: f64,
    /// Largest norm change over a single step, before renormalization.
    pub max_norm_drift: f64,
    /// Largest change of `⟨H(t)⟩` within a step.
    pub max_energy_drift: f64,
}

/// RK4 integration of `i dψ/dt = H(t) ψ` along every step, with errors
/// applied between steps.
pub fn integrate(sys: &DenseSystem, sched: &SchedulePolicy, psi0: &[Complex64]) -> Result<Run> {
    check_len(sys.n, psi0)?;
    if !(sched.t_step > 0.0 && sched.dt > 0.0) {
        return Err(OracleError::Schedule(format!("T = {}, dt = {}", sched.t_step, sched.dt)));
    }
    let mut psi = psi0.to_vec();
    let dim = psi.len();
    let m = (sched.t_step / sched.dt).ceil().max(1.0) as usize;
    let h = sched.t_step / m as f64;
    let minus_i = Complex64::new(0.0, -1.0);
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) =
        (vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim], vec![ZERO; dim]);
    let mut max_norm_drift: f64 = 0.0;
    let mut max_energy_drift: f64 = 0.0;
    for k in 0..=sys.steps.len() {
        for e in sys.errors.iter().filter(|e| e.before_step == k) {
            psi = MaskedPauli::new(&e.op, sys.n)?.apply(&psi);
        }
        if k == sys.steps.len() {
            break;
        }
        let ham = sys.step_hamiltonian(k)?;
        let e0 = ham.energy(0.0, &psi);
        let eval = |s: f64, src: &[Complex64], dst: &mut Vec<Complex64>| {
            dst.iter_mut().for_each(|x| *x = ZERO);
            ham.apply_add(sched.f(s), minus_i, src, dst);
        };
        for step in 0..m {
            let s0 = step as f64 / m as f64;
            let (sm, s1) = ((step as f64 + 0.5) / m as f64, (step + 1) as f64 / m as f64);
            eval(s0, &psi, &mut k1);
            axpy(&psi, h / 2.0, &k1, &mut tmp);
            eval(sm, &tmp, &mut k2);
            axpy(&psi, h / 2.0, &k2, &mut tmp);
            eval(sm, &tmp, &mut k3);
            axpy(&psi, h, &k3, &mut tmp);
            eval(s1, &tmp, &mut k4);
            for i in 0..dim {
                psi[i] += (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]) * (h / 6.0);
            }
            let nrm = normalize(&mut psi);
            let drift = (nrm - 1.0).abs();
            max_norm_drift = max_norm_drift.max(drift);
            if drift > NORM_GUARD {
                let t = (k as f64 + s1) * sched.t_step;
                return Err(OracleError::NormDrift { drift, t });
            }
        }
        let e1 = ham.energy(sched.f(1.0), &psi);
        max_energy_drift = max_energy_drift.max((e1 - e0).abs());
    }
    Ok(Run { state: psi, total_time: sched.t_step * sys.steps.len() as f64, max_norm_drift, max_energy_drift })
}

fn axpy(x: &[Complex64], a: f64, y: &[Complex64], out: &mut [Complex64]) {
    for i in 0..x.len() {
        out[i] = x[i] + y[i] * a;
    }
}

/// One point of an adiabatic-error curve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: f64,
    pub order: u32,
    pub delta: f64,
    pub fidelity: f64,
    pub dt: f64,
}

/// Fidelity error below which integrator differences are not resolved.
pub const RESOLUTION_FLOOR: f64 = 1e-11;

/// `δ = 1 - |⟨prediction|final⟩|²`, halving `dt` until a halving moves `δ`
/// by less than 1% (or less than the resolution floor).
pub fn adiabatic_error(sys: &DenseSystem, sched: &SchedulePolicy, psi0: &[Complex64]) -> Result<CurvePoint> {
    let want = sys.predict(psi0)?;
    let delta_at = |dt: f64| -> Result<f64> {
        let run = integrate(sys, &sched.with_dt(dt), psi0)?;
        Ok((1.0 - fidelity(&want, &run.state)).max(0.0))
    };
    let mut dt = sched.dt;
    let mut prev = delta_at(dt)?;
    for _ in 0..6 {
        let next = delta_at(dt / 2.0)?;
        dt /= 2.0;
        let settled = (next - prev).abs() <= 0.01 * next || (next - prev).abs() < RESOLUTION_FLOOR;
        prev = next;
        if settled {
            break;
        }
    }
    Ok(CurvePoint { t: sched.t_step, order: sched.order, delta: prev, fidelity: 1.0 - prev, dt })
}

/// Adiabatic error over a family of `(order, T)` schedules. Points are
/// independent and run concurrently with the `parallel` feature.
pub fn adiabatic_error_curve(
    sys: &DenseSystem,
    family: &[(u32, f64)],
    dt: f64,
    psi0: &[Complex64],
) -> Result<Vec<CurvePoint>> {
    let point = |&(order, t): &(u32, f64)| adiabatic_error(sys, &SchedulePolicy::fixed(order, t).with_dt(dt), psi0);
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        family.par_iter().map(point).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        family.iter().map(point).collect()
    }
}

/// Projector distance between the ground spaces at the start and the end.
pub fn loop_distance(sys: &DenseSystem, basis: &[State]) -> Result<f64> {
    let end = sys.generators_at(sys.steps.len());
    let mut worst: f64 = 0.0;
    for v in basis {
        let p = project(&end, sys.n, v)?;
        let diff: State = v.iter().zip(&p).map(|(a, b)| a - b).collect();
        worst = worst.max(norm(&diff));
    }
    Ok(worst)
}

/// `Γ = V†(0) V(T)` on the ground space spanned by `basis`, with the
/// dynamical phase removed.
pub fn holonomy(sys: &DenseSystem, sched: &SchedulePolicy, basis: &[State]) -> Result<DMatrix<Complex64>> {
    let dist = loop_distance(sys, basis)?;
    if dist > LOOP_TOLERANCE {
        return Err(OracleError::OpenLoop(dist));
    }
    let k = basis.len();
    let mut gamma = DMatrix::zeros(k, k);
    let e0 = sys.ground_energy();
    for (j, v) in basis.iter().enumerate() {
        let run = integrate(sys, sched, v)?;
        let undo = Complex64::from_polar(1.0, e0 * run.total_time);
        for (i, u) in basis.iter().enumerate() {
            gamma[(i, j)] = inner(u, &run.state) * undo;
        }
    }
    Ok(gamma)
}

/// `V†(0) Ω V(0)`: the gate product restricted to the ground space.
pub fn predicted_holonomy(sys: &DenseSystem, basis: &[State]) -> Result<DMatrix<Complex64>> {
    let k = basis.len();
    let mut out = DMatrix::zeros(k, k);
    for (j, v) in basis.iter().enumerate() {
        let w = sys.predict(v)?;
        for (i, u) in basis.iter().enumerate() {
            out[(i, j)] = inner(u, &w);
        }
    }
    Ok(out)
}

/// Global phase `φ` bringing `e^{iφ} b` closest to `a`, and the remaining
/// Frobenius distance. The first non-adiabatic correction is a phase of
/// order `1/T` shared by the whole ground space.
pub fn phase_aligned_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> (f64, f64) {
    let phi = (b.adjoint() * a).trace().arg();
    (phi, (a - b * Complex64::from_polar(1.0, phi)).norm())
}

/// Four-qubit instance with one logical qubit: `S = {Z1Z2, Z3Z4, X1X2X3X4}`.
pub fn toy_system(j: f64) -> DenseSystem {
    let p = |s: &str| s.parse::<PauliOp>().expect("literal Pauli");
    DenseSystem::new(4, j, vec![p("Z0 Z1"), p("Z2 Z3"), p("X0 X1 X2 X3")]).expect("four qubits")
}

/// Single valid step `Q = Y1Z2`, which anticommutes only with `Z1Z2`.
pub fn single_step_system(j: f64) -> DenseSystem {
    toy_system(j).with_step(vec!["Y0 Z1".parse().expect("literal Pauli")]).expect("in range")
}

/// Two steps with an `X3` error between them; `Q₂ = Y3Z4` anticommutes only with `Z3Z4`.
pub fn error_step_system(j: f64) -> DenseSystem {
    single_step_system(j)
        .with_step(vec!["Y2 Z3".parse().expect("literal Pauli")])
        .and_then(|s| s.with_error(1, "X2".parse().expect("literal Pauli")))
        .expect("in range")
}

/// Both rotations of the two-step path applied in one parallel step.
pub fn parallel_step_system(j: f64) -> DenseSystem {
    toy_system(j)
        .with_step(vec!["Y0 Z1".parse().expect("literal Pauli"), "Y2 Z3".parse().expect("literal Pauli")])
        .expect("in range")
}

/// Three-qubit loop `X1, Z1, Y1` under `H₀ = -J(Z1Z2 + Z2Z3)` that returns
/// `H` to itself while acting nontrivially on the ground space.
pub fn loop_system(j: f64) -> DenseSystem {
    let p = |s: &str| s.parse::<PauliOp>().expect("literal Pauli");
    let mut sys = DenseSystem::new(3, j, vec![p("Z0 Z1"), p("Z1 Z2")]).expect("three qubits");
    for q in ["X0", "Z0", "Y0"] {
        sys = sys.with_step(vec![p(q)]).expect("in range");
    }
    sys
}
