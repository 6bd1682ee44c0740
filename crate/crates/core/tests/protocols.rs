use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4};

use holosurf::lattice::CutKind;
use holosurf::protocols::*;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn magic(theta: f64) -> [Complex64; 2] {
    [c(FRAC_1_SQRT_2, 0.0), Complex64::from_polar(FRAC_1_SQRT_2, theta)]
}

fn kron(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    // First factor on the low bit.
    let mut out = vec![c(0.0, 0.0); a.len() * b.len()];
    for (j, y) in b.iter().enumerate() {
        for (i, x) in a.iter().enumerate() {
            out[i + a.len() * j] = x * y;
        }
    }
    out
}

fn cnot_low_to_high(v: &[Complex64]) -> Vec<Complex64> {
    let mut out = v.to_vec();
    out.swap(1, 3);
    out
}

fn register(seed: u64) -> LogicalRegister {
    let mut r = LogicalRegister::new(5, 5, seed).unwrap();
    r.magic_pool.extend(std::iter::repeat_n(MagicLabel::y(), 8));
    r.magic_pool.extend(std::iter::repeat_n(MagicLabel::a(), 4));
    r
}

const KINDS: [CutKind; 2] = [CutKind::X, CutKind::Z];

#[test]
fn braid_cnot_makes_a_bell_pair() {
    let mut r = register(0);
    let a = r.claim(CutKind::Z, Basis::X).unwrap();
    let b = r.claim(CutKind::X, Basis::Z).unwrap();
    r.cnot(a, b).unwrap();
    let bell = [c(FRAC_1_SQRT_2, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(FRAC_1_SQRT_2, 0.0)];
    assert!((r.fidelity(&[a, b], &bell).unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(r.stats.braids, 1);
}

#[test]
fn every_cnot_type_is_a_cnot_on_generic_inputs() {
    for kc in KINDS {
        for kt in KINDS {
            for seed in 0..24 {
                let mut r = register(seed);
                let (t1, t2) = (0.3 + seed as f64 * 0.1, 1.1 - seed as f64 * 0.07);
                let a = r.inject(kc, MagicLabel { theta: t1, fidelity: 1.0 }).unwrap();
                let b = r.inject(kt, MagicLabel { theta: t2, fidelity: 1.0 }).unwrap();
                r.cnot(a, b).unwrap();
                let want = cnot_low_to_high(&kron(&magic(t1), &magic(t2)));
                let f = r.fidelity(&[a, b], &want).unwrap();
                assert!((f - 1.0).abs() < 1e-9, "{kc:?}->{kt:?} seed {seed}: {f}");
                assert_eq!(r.kind(a).unwrap(), kc);
                assert_eq!(r.kind(b).unwrap(), kt);
            }
        }
    }
}

#[test]
fn composite_cnot_truth_table() {
    for kc in KINDS {
        for kt in KINDS {
            for (x0, x1) in [(false, false), (false, true), (true, false), (true, true)] {
                let mut r = register(7);
                let a = r.claim(kc, Basis::Z).unwrap();
                let b = r.claim(kt, Basis::Z).unwrap();
                r.pauli(a, x0, false).unwrap();
                r.pauli(b, x1, false).unwrap();
                r.cnot(a, b).unwrap();
                assert_eq!(r.measure(a, Basis::Z).unwrap(), if x0 { -1 } else { 1 });
                assert_eq!(r.measure(b, Basis::Z).unwrap(), if x0 ^ x1 { -1 } else { 1 });
            }
        }
    }
}

#[test]
fn measurements_of_both_kinds_preserve_eigenstates() {
    for k in KINDS {
        for basis in [Basis::X, Basis::Z] {
            let mut r = register(3);
            let q = r.claim(k, basis).unwrap();
            for _ in 0..3 {
                assert_eq!(r.measure(q, basis).unwrap(), 1);
            }
            r.pauli(q, basis == Basis::Z, basis == Basis::X).unwrap();
            assert_eq!(r.measure(q, basis).unwrap(), -1);
        }
    }
}

#[test]
fn recycling_chain_returns_an_x_eigenstate() {
    let mut r = register(11);
    let q = r.inject(CutKind::X, MagicLabel::a()).unwrap();
    let mz = r.measure(q, Basis::Z).unwrap();
    let mx = r.measure(q, Basis::X).unwrap();
    let plus = [c(FRAC_1_SQRT_2, 0.0), c(FRAC_1_SQRT_2 * mx as f64, 0.0)];
    assert!((r.fidelity(&[q], &plus).unwrap() - 1.0).abs() < 1e-9, "{mz} {mx}");
}

#[test]
fn s_twice_is_z() {
    for k in KINDS {
        let mut r = register(5);
        let q = r.claim(k, Basis::X).unwrap();
        r.apply_s(q).unwrap();
        r.apply_s(q).unwrap();
        assert_eq!(r.measure(q, Basis::X).unwrap(), -1);
        assert_eq!(r.stats.y_consumed, 2);
    }
}

#[test]
fn single_qubit_gadgets_match_their_matrices() {
    let s_gate = |v: [Complex64; 2]| [v[0], v[1] * c(0.0, 1.0)];
    let rx = |v: [Complex64; 2]| {
        let (a, b) = (c(FRAC_1_SQRT_2, 0.0), c(0.0, -FRAC_1_SQRT_2));
        [a * v[0] + b * v[1], b * v[0] + a * v[1]]
    };
    let t_gate = |v: [Complex64; 2]| [v[0], v[1] * Complex64::from_polar(1.0, FRAC_PI_4)];
    let h = |v: [Complex64; 2]| [(v[0] + v[1]) * FRAC_1_SQRT_2, (v[0] - v[1]) * FRAC_1_SQRT_2];
    for k in KINDS {
        for seed in 0..16 {
            let theta = 0.37 + seed as f64;
            let input = magic(theta);
            let cases: [(&str, [Complex64; 2]); 4] =
                [("s", s_gate(input)), ("rx", rx(input)), ("t", t_gate(input)), ("h", h(input))];
            for (name, want) in cases {
                let mut r = register(seed);
                let q = r.inject(k, MagicLabel { theta, fidelity: 1.0 }).unwrap();
                match name {
                    "s" => r.apply_s(q).unwrap(),
                    "rx" => r.apply_rx90(q).unwrap(),
                    "t" => {
                        r.apply_t(q).unwrap();
                    }
                    _ => r.apply_h(q).unwrap(),
                }
                let f = r.fidelity(&[q], &want).unwrap();
                assert!((f - 1.0).abs() < 1e-9, "{name} on {k:?}, seed {seed}: {f}");
            }
        }
    }
}

#[test]
fn t_gadget_minus_branch_spends_an_extra_s() {
    let mut seen = [false, false];
    for seed in 0..40 {
        let mut r = register(seed);
        let q = r.claim(CutKind::X, Basis::X).unwrap();
        let m = r.apply_t(q).unwrap();
        seen[(m < 0) as usize] = true;
        assert_eq!(r.stats.a_consumed, 1);
        assert_eq!(r.stats.y_consumed, usize::from(m < 0));
        let f = r.fidelity(&[q], &magic(FRAC_PI_4)).unwrap();
        assert!((f - 1.0).abs() < 1e-9);
    }
    assert_eq!(seen, [true, true]);
}

#[test]
fn hadamard_swaps_bases() {
    let mut r = register(2);
    let q = r.claim(CutKind::Z, Basis::Z).unwrap();
    r.apply_h(q).unwrap();
    assert_eq!(r.measure(q, Basis::X).unwrap(), 1);
    r.apply_h(q).unwrap();
    assert_eq!(r.measure(q, Basis::Z).unwrap(), 1);
}

#[test]
fn exhausted_pools_are_reported() {
    let mut r = LogicalRegister::new(1, 1, 0).unwrap();
    let a = r.claim(CutKind::Z, Basis::Z).unwrap();
    let b = r.claim(CutKind::Z, Basis::Z);
    assert_eq!(b, Err(ProtocolError::PoolExhausted(CutKind::Z)));
    assert_eq!(r.apply_s(a), Err(ProtocolError::EmptyMagicPool(FRAC_PI_2)));
    assert!(LogicalRegister::new(10, 10, 0).is_err());
}

#[test]
fn program_runs_from_json() {
    let text = r#"{
        "x_slots": 4, "z_slots": 4, "y_states": 2,
        "steps": [
            {"op": "claim", "params": {"kind": "Z", "basis": "X"}},
            {"op": "claim", "params": {"kind": "Z", "basis": "Z"}},
            {"op": "cnot", "qubits": [0, 1]},
            {"op": "measure", "qubits": [0], "params": {"basis": "Z"}},
            {"op": "measure", "qubits": [1], "params": {"basis": "Z"}}
        ]
    }"#;
    let p: Program = serde_json::from_str(text).unwrap();
    for seed in 0..8 {
        let (_, rec) = run_program(&p, seed).unwrap();
        assert_eq!(rec[3].outcome, rec[4].outcome);
    }
}

/// Independent description: accept iff the checks vanish, flip iff the
/// pattern has odd overlap with the logical `X`.
fn parity_oracle(d: &Distiller, e: &[bool]) -> DistillOutcome {
    let accept = d.x_checks.iter().all(|row| row.iter().zip(e).filter(|(a, b)| **a && **b).count() % 2 == 0);
    let flip = d.x_logical.iter().zip(e).filter(|(a, b)| **a && **b).count() % 2 == 1;
    DistillOutcome { accept, output_flip: accept && flip }
}

#[test]
fn reversed_encoders_agree_with_parity_checks() {
    for d in [Distiller::steane(), Distiller::reed_muller()] {
        for mask in 0u32..(1 << d.n) {
            let e: Vec<bool> = (0..d.n).map(|q| (mask >> q) & 1 == 1).collect();
            let mut got = d.run(&e);
            got.output_flip &= got.accept;
            assert_eq!(got, parity_oracle(&d, &e), "pattern {mask:b}");
        }
    }
}

#[test]
fn distillation_rejects_single_errors_and_counts_triples() {
    let s = Distiller::steane();
    let rm = Distiller::reed_muller();
    assert_eq!(s.weight_census(1), (7, 0));
    assert_eq!(rm.weight_census(1), (15, 0));
    assert_eq!(s.weight_census(2).1, 0);
    assert_eq!(rm.weight_census(2).1, 0);
    assert_eq!(s.weight_census(3).1, 7);
    assert_eq!(rm.weight_census(3).1, 35);
}

#[test]
fn perfect_inputs_always_pass() {
    let d = Distiller::steane();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    use rand::SeedableRng;
    for _ in 0..20 {
        assert_eq!(d.sample(&[MagicLabel::y(); 7], &mut rng).unwrap().unwrap().fidelity, 1.0);
    }
    let mut r = register(0);
    r.magic_pool = vec![MagicLabel::y(); 7];
    assert!(r.distill(&d, FRAC_PI_2).unwrap());
    assert_eq!(r.magic_pool.len(), 1);
    assert_eq!(r.distill(&d, FRAC_PI_2), Err(ProtocolError::InsufficientInputs { need: 7, got: 1 }));
}
