use std::collections::HashMap;

use holosurf::decoder::*;
use holosurf::lattice::{GenKind, Lattice, Pos};
use holosurf::noise::Frame;
use holosurf::pauli::{Axis, PauliOp};
use holosurf::tableau::Tableau;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Minimum over every way of pairing events or sending them to the boundary.
fn brute_force(w: &[Vec<Option<u32>>], b: &[Option<u32>], left: &mut Vec<usize>) -> Option<u64> {
    let Some(i) = left.pop() else { return Some(0) };
    let mut best: Option<u64> = None;
    if let Some(x) = b[i] {
        if let Some(r) = brute_force(w, b, left) {
            best = Some(r + x as u64);
        }
    }
    for k in 0..left.len() {
        let j = left[k];
        if let Some(x) = w[i][j] {
            left.remove(k);
            if let Some(r) = brute_force(w, b, left) {
                best = Some(best.map_or(r + x as u64, |v| v.min(r + x as u64)));
            }
            left.insert(k, j);
        }
    }
    left.push(i);
    best
}

fn random_instance(rng: &mut ChaCha8Rng, k: usize) -> (Vec<Vec<Option<u32>>>, Vec<Option<u32>>) {
    let mut w = vec![vec![None; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            if rng.gen::<f64>() < 0.9 {
                let x = rng.gen_range(1..20);
                w[i][j] = Some(x);
                w[j][i] = Some(x);
            }
        }
    }
    let b = (0..k).map(|_| (rng.gen::<f64>() < 0.8).then(|| rng.gen_range(1..20))).collect();
    (w, b)
}

#[test]
fn matcher_is_optimal_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut agree = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=8);
        let (w, b) = random_instance(&mut rng, k);
        let opt = brute_force(&w, &b, &mut (0..k).collect());
        let g = MatchingGraph::from_weights(&w, &b);
        let exact = match_graph(&g, MatchMethod::Exact).ok().map(|p| p.weight);
        let blossom = match_graph(&g, MatchMethod::Blossom).ok().map(|p| p.weight);
        if exact == opt && blossom == opt {
            agree += 1;
        }
    }
    assert_eq!(agree, 1000);
}

#[test]
fn no_boundary_and_odd_count_is_infeasible() {
    let w = vec![vec![None, Some(1), Some(1)], vec![Some(1), None, Some(1)], vec![Some(1), Some(1), None]];
    let g = MatchingGraph::from_weights(&w, &[None, None, None]);
    assert_eq!(match_graph(&g, MatchMethod::Exact), Err(DecodeError::Infeasible));
    assert_eq!(match_graph(&g, MatchMethod::Blossom), Err(DecodeError::Infeasible));
}

#[test]
fn single_error_gives_two_events_and_measurement_flip_a_time_pair() {
    let lat = Lattice::build(5).unwrap();
    let ids: Vec<usize> = lat.active_generators().map(|g| g.id).collect();
    let q = lat.qubit_at(Pos::new(4, 4)).unwrap();
    let flip = |err: Option<u32>, meas: Option<usize>| {
        ids.iter()
            .enumerate()
            .map(|(s, &id)| {
                let g = &lat.generators[id];
                let bad = g.kind == GenKind::Plaquette && err.is_some_and(|e| g.support.contains(&e));
                if bad ^ (meas == Some(s)) {
                    -1
                } else {
                    1
                }
            })
            .collect::<Vec<i8>>()
    };
    let mut h = SyndromeHistory::new(ids.clone());
    h.push(flip(None, None)).unwrap();
    h.push(flip(Some(q), None)).unwrap();
    let ev = detection_events(&h);
    assert_eq!(ev.len(), 2);
    assert!(ev.iter().all(|e| e.1 == 1));

    let mut h = SyndromeHistory::new(ids.clone());
    h.push(flip(None, None)).unwrap();
    h.push(flip(None, Some(5))).unwrap();
    h.push(flip(None, None)).unwrap();
    assert_eq!(detection_events(&h), vec![(5, 1), (5, 2)]);
}

#[test]
fn chain_near_the_boundary_is_miscorrected() {
    // Two X errors at the left end of a row of the L=5 patch leave one
    // plaquette lit nearer the right boundary; matching completes the row.
    let lat = Lattice::build(5).unwrap();
    let tab = Tableau::new(&lat, &[]);
    let dec = Decoder::new(&lat);
    let n = lat.num_qubits();
    let row = |cols: &[i32]| {
        Frame::from_pauli(n, &PauliOp::uniform(Axis::X, cols.iter().map(|&c| lat.qubit_at(Pos::new(4, c)).unwrap())))
    };
    let near = decode_static(&lat, &tab, &dec, &row(&[0, 2])).unwrap();
    assert_eq!(near.logical_failure, vec![false]);
    let far = decode_static(&lat, &tab, &dec, &row(&[0, 2, 4])).unwrap();
    assert_eq!(far.logical_failure, vec![true]);
}

fn error_frames(lat: &Lattice, max_weight: usize) -> Vec<PauliOp> {
    let n = lat.num_qubits() as u32;
    let axes = [Axis::X, Axis::Y, Axis::Z];
    let mut out = vec![PauliOp::identity()];
    for q in 0..n {
        for a in axes {
            out.push(PauliOp::single(q, a));
            if max_weight >= 2 {
                for r in q + 1..n {
                    for b in axes {
                        out.push(PauliOp::from_terms([(q, a), (r, b)]));
                    }
                }
            }
        }
    }
    out
}

fn failures(l: usize, max_weight: usize) -> (Vec<PauliOp>, usize) {
    let lat = Lattice::build(l).unwrap();
    let tab = Tableau::new(&lat, &[]);
    let dec = Decoder::new(&lat);
    let frames = error_frames(&lat, max_weight);
    let total = frames.len();
    let mut bad = Vec::new();
    for e in frames {
        let out = decode_static(&lat, &tab, &dec, &Frame::from_pauli(lat.num_qubits(), &e)).unwrap();
        assert!(tab.active().all(|g| holosurf::pauli::commutes(&g.op, &out.frame.to_pauli())));
        if out.logical_failure[0] {
            bad.push(e);
        }
    }
    (bad, total)
}

#[test]
fn single_errors_are_always_corrected() {
    for l in [3, 4, 5] {
        assert!(failures(l, 1).0.is_empty(), "L={l}");
    }
}

#[test]
fn weight_two_errors_are_corrected_at_distance_five() {
    assert!(failures(5, 2).0.is_empty());
}

#[test]
fn distance_four_failures_are_all_syndrome_degenerate() {
    // On the L=4 patch a weight-2 error can share its syndrome with another
    // weight-2 error that differs from it by a logical operator; no decoder
    // can correct both. Every failure must be of this kind.
    let lat = Lattice::build(4).unwrap();
    let tab = Tableau::new(&lat, &[]);
    let (bad, total) = failures(4, 2);
    println!("L=4: {} of {total} weight<=2 errors are miscorrected", bad.len());
    assert!(!bad.is_empty());
    let frames = error_frames(&lat, 2);
    let key = |e: &PauliOp| tab.eigenspace_label(e).s;
    let mut by_syndrome: HashMap<Vec<i8>, Vec<&PauliOp>> = HashMap::new();
    for e in &frames {
        by_syndrome.entry(key(e)).or_default().push(e);
    }
    let (px, pz) = lat.patch_logicals();
    // X and Z parts are decoded separately, and each part is itself a
    // weight-<=2 error, so a degenerate partner of either part suffices.
    for e in &bad {
        let parts = [PauliOp::uniform(Axis::X, e.x_part()), PauliOp::uniform(Axis::Z, e.z_part())];
        let ambiguous = parts.iter().filter(|c| !c.is_identity()).any(|c| {
            by_syndrome[&key(c)].iter().any(|o| {
                let prod = holosurf::pauli::multiply(c, o);
                !holosurf::pauli::commutes(&prod, &px) || !holosurf::pauli::commutes(&prod, &pz)
            })
        });
        assert!(ambiguous, "{e} fails without a degenerate partner");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn matching_beats_greedy(seed in any::<u64>(), k in 1usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, b) = random_instance(&mut rng, k);
        let g = MatchingGraph::from_weights(&w, &b);
        if let Ok(p) = match_graph(&g, MatchMethod::Auto) {
            // Greedy: repeatedly take the cheapest available option.
            let mut left: Vec<usize> = (0..k).collect();
            let mut greedy = 0u64;
            let mut ok = true;
            while let Some(&i) = left.first() {
                let mut best: Option<(u32, Option<usize>)> = b[i].map(|x| (x, None));
                for &j in &left[1..] {
                    if let Some(x) = w[i][j] {
                        if best.is_none_or(|(y, _)| x < y) {
                            best = Some((x, Some(j)));
                        }
                    }
                }
                match best {
                    Some((x, j)) => {
                        greedy += x as u64;
                        left.retain(|&v| v != i && Some(v) != j);
                    }
                    None => { ok = false; break; }
                }
            }
            if ok {
                prop_assert!(p.weight <= greedy);
            }
        }
    }

    #[test]
    fn decoding_is_deterministic(seed in any::<u64>()) {
        let lat = Lattice::build(5).unwrap();
        let dec = Decoder::new(&lat);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(0..12);
        let ev: Vec<Event> = (0..k)
            .map(|_| Event { node: rng.gen_range(0..dec.plaquettes.cells.len()), round: rng.gen_range(0..4) })
            .collect();
        let a = dec.correction(GenKind::Plaquette, &ev).unwrap();
        let b = dec.correction(GenKind::Plaquette, &ev).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn correction_returns_to_codespace(seed in any::<u64>()) {
        let lat = Lattice::build(5).unwrap();
        let tab = Tableau::new(&lat, &[]);
        let dec = Decoder::new(&lat);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = lat.num_qubits();
        let mut f = Frame::new(n);
        for q in 0..n {
            f.x[q] = rng.gen::<f64>() < 0.1;
            f.z[q] = rng.gen::<f64>() < 0.1;
        }
        let out = decode_static(&lat, &tab, &dec, &f).unwrap();
        let res = out.frame.to_pauli();
        prop_assert!(tab.active().all(|g| holosurf::pauli::commutes(&g.op, &res)));
    }
}
