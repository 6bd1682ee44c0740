use std::io::Write;
use std::time::{Duration, Instant};

use holosurf::analysis::{estimate_resources, logical_rate, RateQuery, ResourceQuery};
use holosurf::decoder::{decode_static, match_graph, Decoder, MatchMethod, MatchingGraph};
use holosurf::deformation::{check_parallel, check_validity, Device, Direction};
use holosurf::experiments::{log_log_slope, z_less, Execution, MemoryExperiment, VoteExperiment};
use holosurf::lattice::{CutKind, Lattice, Pos};
use holosurf::noise::{propagate, Frame};
use holosurf::oracle::{
    adiabatic_error_curve, error_step_system, fidelity, integrate, single_step_system, SchedulePolicy,
};
use holosurf::pauli::{multiply, Axis, PauliOp};
use holosurf::protocols::Distiller;
use holosurf::tableau::{Equivalence, Tableau};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
    /// A failure the ledger records as unattainable; reported, not asserted.
    expected_fail: bool,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Outcome {
        Outcome { pass, detail, expected_fail: false }
    }
}

fn y(k: u32) -> PauliOp {
    PauliOp::single(k, Axis::Y)
}

fn x(k: u32) -> PauliOp {
    PauliOp::single(k, Axis::X)
}

fn z(k: u32) -> PauliOp {
    PauliOp::single(k, Axis::Z)
}

fn product(ops: &[PauliOp]) -> PauliOp {
    ops.iter().fold(PauliOp::identity(), |a, b| multiply(&a, b))
}

fn signed_generator(tab: &Tableau, id: usize) -> PauliOp {
    tab.generators()[id].signed()
}

fn enlargement_columns() -> Outcome {
    let mut dev = Device::new(8).unwrap();
    let q = dev.create_double_cut(CutKind::Z, Pos::new(4, 5), Pos::new(4, 13)).unwrap();
    let lat = dev.lattice.clone();
    let cells = [Pos::new(4, 5), Pos::new(6, 5), Pos::new(4, 7), Pos::new(6, 7)];
    let s = |a: usize, b: usize| lat.shared_qubit(cells[a], cells[b]).unwrap();
    let zp = |i: usize| lat.cell_op(cells[i]).unwrap();
    // Cells 1, 2, 3 join in turn, each through the qubit it shares with the hole.
    let joins = [(s(0, 1), 1), (s(0, 2), 2), (s(1, 3), 3)];
    let rotations: Vec<PauliOp> = joins.iter().map(|&(e, c)| multiply(&y(e), &zp(c).restrict(|k| k != e))).collect();
    let planned = dev.plan_enlarge(q, 0, 8).unwrap();
    let mut flat: Vec<PauliOp> = planned.iter().flat_map(|st| st.rotations.clone()).collect();
    let mut want = rotations.clone();
    flat.sort_by_key(|p| p.to_string());
    want.sort_by_key(|p| p.to_string());
    if flat != want {
        return Outcome::new(false, "planned rotations differ from the table's".into());
    }
    let mut tab = dev.tableau.clone();
    let tag = Device::tag(q);
    let x_l = tab.logical(&tag).unwrap().x.clone();
    let ids: Vec<usize> = (1..4).map(|c| tab.find_active(&zp(c)).unwrap()).collect();
    let mut bad = Vec::new();
    for t in 0..4 {
        if t > 0 {
            tab.apply_rotation(&rotations[t - 1]).unwrap();
        }
        let l = tab.logical(&tag).unwrap();
        let ring = product(&(0..=t).map(zp).collect::<Vec<_>>());
        if tab.equivalent(&l.z, &ring) != Equivalence::Same {
            bad.push(format!("t{t}: L1"));
        }
        if tab.equivalent(&l.x, &x_l) != Equivalence::Same {
            bad.push(format!("t{t}: L2"));
        }
        for (i, &id) in ids.iter().enumerate() {
            let want = if i < t { x(joins[i].0).neg() } else { zp(i + 1) };
            if signed_generator(&tab, id) != want {
                bad.push(format!("t{t}: S{} = {}", i + 1, signed_generator(&tab, id)));
            }
        }
        if tab.check_invariants().is_err() {
            bad.push(format!("t{t}: invariants"));
        }
    }
    Outcome::new(
        bad.is_empty(),
        if bad.is_empty() { "4 columns, 3 generators + 2 logicals each".into() } else { bad.join(", ") },
    )
}

fn braid_cnot() -> Outcome {
    let mut dev = Device::new(20).unwrap();
    let c = dev.create_double_cut(CutKind::Z, Pos::new(18, 11), Pos::new(18, 3)).unwrap();
    let t = dev.create_double_cut(CutKind::X, Pos::new(19, 20), Pos::new(19, 30)).unwrap();
    for (d, h) in [(c, 0), (c, 1), (t, 0), (t, 1)] {
        dev.enlarge(d, h, 8).unwrap();
    }
    let (x1, z1) = (dev.logical(c).x.clone(), dev.logical(c).z.clone());
    let (x2, z2) = (dev.logical(t).x.clone(), dev.logical(t).z.clone());
    let path = dev.braid(c, t).unwrap();
    let tab = &dev.tableau;
    let rel = [
        tab.equivalent(&dev.logical(c).x, &multiply(&x1, &x2)),
        tab.equivalent(&dev.logical(t).x, &x2),
        tab.equivalent(&dev.logical(c).z, &z1),
        tab.equivalent(&dev.logical(t).z, &multiply(&z1, &z2)),
    ];
    let pass = path.is_closed() && rel.iter().all(|r| *r == Equivalence::Same) && tab.max_active_weight() <= 4;
    Outcome::new(pass, format!("X1 X2 Z1 Z2 -> {rel:?}"))
}

fn propagation() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut dev = Device::new(8).unwrap();
    let q = dev.create_double_cut(CutKind::Z, Pos::new(4, 5), Pos::new(4, 13)).unwrap();
    let (p1, p2) = (Pos::new(4, 5), Pos::new(6, 5));
    let q1 = dev.lattice.shared_qubit(p1, p2).unwrap();
    let steps = dev.plan_enlarge(q, 0, 8).unwrap();
    let got = propagate(&z(q1), &steps, 0, 1);
    let want = multiply(&x(q1), &dev.lattice.cell_op(p2).unwrap().restrict(|k| k != q1)).neg();
    pass &= got == want && got.weight() == 4;
    notes.push(format!("enlarge: Z -> {got}"));

    let mut dev = Device::new(16).unwrap();
    let q = dev.create_double_cut(CutKind::Z, Pos::new(4, 5), Pos::new(4, 25)).unwrap();
    dev.run(&dev.plan_grow(q, 0, Direction::South, 3).unwrap()).unwrap();
    dev.run(&dev.plan_grow(q, 0, Direction::East, 2).unwrap()).unwrap();
    let edge = |r: i32| dev.lattice.shared_qubit(Pos::new(4 + 2 * r, 9), Pos::new(4 + 2 * r, 11)).unwrap();
    let (e1, e2) = (edge(0), edge(2));
    let steps = dev.plan_grow(q, 0, Direction::East, 2).unwrap();
    let zz = propagate(&multiply(&z(e1), &z(e2)), &steps, 0, steps.len());
    let xx = propagate(&multiply(&x(e1), &x(e2)), &steps, 0, steps.len());
    dev.run(&steps).unwrap();
    // Single-qubit σx factors inside the grown hole are active terms and act
    // trivially; what remains is the effective σz string.
    let effective = |op: &PauliOp| -> Option<Vec<u32>> {
        let mut zs = Vec::new();
        for (&k, &a) in op.support() {
            if matches!(a, Axis::X | Axis::Y) && dev.tableau.find_active(&x(k)).is_none() {
                return None;
            }
            if matches!(a, Axis::Z | Axis::Y) {
                zs.push(k);
            }
        }
        Some(zs)
    };
    match (effective(&zz), effective(&xx)) {
        (Some(a), Some(b)) => {
            let ten = a.len() == 10 && !a.contains(&e1) && !a.contains(&e2);
            let twelve = b.len() == 12 && b.contains(&e1) && b.contains(&e2) && a.iter().all(|k| b.contains(k));
            pass &= ten && twelve;
            notes.push(format!("move: ZZ -> {} Z, XX -> {} Z", a.len(), b.len()));
        }
        _ => {
            pass = false;
            notes.push("move: residual σx outside the hole".into());
        }
    }
    Outcome::new(pass, notes.join("; "))
}

fn rates() -> Outcome {
    let rate = logical_rate(&RateQuery { d: 11, m: 1e8, p: 1e-3, cbj: 12.0 }).unwrap();
    let query = |cbj: f64, m: f64| ResourceQuery { big_m: 1e14, delta: 0.1, p: 1e-3, cbj, m_grid: vec![m] };
    let a = estimate_resources(&query(12.0, 1e8)).unwrap();
    let b = estimate_resources(&query(15.0, 1e10)).unwrap();
    let pass = (5e-9..=2e-8).contains(&rate) && (a.d, a.n_tot) == (11, 441) && (b.d, b.n_tot) == (7, 169);
    Outcome::new(pass, format!("P_L = {rate:.2e}; (d, n) = ({}, {}) and ({}, {})", a.d, a.n_tot, b.d, b.n_tot))
}

fn single_step_oracle() -> Outcome {
    let sys = single_step_system(1.0);
    let psi = sys.ground_state(3).unwrap();
    let sched = SchedulePolicy::budgeted(&sys, 4, 1.0).unwrap();
    let run = integrate(&sys, &sched, &psi).unwrap();
    let f = fidelity(&sys.predict(&psi).unwrap(), &run.state);
    let family: Vec<(u32, f64)> = (0..5).map(|k| (4, 2.0 * 2f64.powi(k))).collect();
    let curve = adiabatic_error_curve(&sys, &family, SchedulePolicy::DEFAULT_DT, &psi).unwrap();
    let deltas: Vec<String> = curve.iter().map(|p| format!("{:.1e}", p.delta)).collect();
    let monotone = curve.windows(2).all(|w| w[1].delta < w[0].delta);
    let pass = sys.n <= 6 && f >= 1.0 - 1e-3 && monotone;
    Outcome::new(
        pass,
        format!("n = {}, T = {:.1}, F = {f:.8}; δ(T=2..32) = [{}]", sys.n, sched.t_step, deltas.join(", ")),
    )
}

fn error_step_oracle() -> Outcome {
    let sys = error_step_system(1.0);
    let psi = sys.ground_state(5).unwrap();
    let want = sys.predict_propagated(&psi).unwrap();
    let run = integrate(&sys, &SchedulePolicy::budgeted(&sys, 4, 1.0).unwrap(), &psi).unwrap();
    let f = fidelity(&want, &run.state);
    Outcome::new(f >= 1.0 - 1e-2, format!("n = {}, F = {f:.8}", sys.n))
}

fn validity() -> Outcome {
    let mut dev = Device::new(12).unwrap();
    let q = dev.create_double_cut(CutKind::Z, Pos::new(4, 5), Pos::new(4, 17)).unwrap();
    dev.run(&dev.plan_grow(q, 0, Direction::South, 3).unwrap()).unwrap();
    dev.run(&dev.plan_grow(q, 0, Direction::East, 1).unwrap()).unwrap();
    let step = dev.plan_move(q, 0, Direction::East, 1).unwrap().remove(0);
    let (exp, con): (Vec<_>, Vec<_>) =
        step.rotations.iter().cloned().partition(|r| r.qubits().all(|k| dev.lattice.qubit_pos(k).c >= 7));
    let before: Vec<usize> = con.iter().map(|c| check_validity(&dev.tableau, c).odd_count).collect();
    let mut after_tab = dev.tableau.clone();
    for t in &step.toggles {
        after_tab.apply_toggle(t).unwrap();
    }
    let after: Vec<usize> = con.iter().map(|c| check_validity(&after_tab, c).odd_count).collect();
    let parallel = exp.len() == 4 && check_parallel(&dev.tableau, &exp);
    let pass = before.contains(&2) && before.iter().all(|&n| n >= 2) && after.iter().all(|&n| n == 1) && parallel;
    Outcome::new(pass, format!("counts before {before:?}, after {after:?}; 4 expansions parallel: {parallel}"))
}

/// Minimum over every way of pairing events or sending them to the boundary.
fn brute_force(w: &[Vec<Option<u32>>], b: &[Option<u32>], left: &mut Vec<usize>) -> Option<u64> {
    let Some(i) = left.pop() else { return Some(0) };
    let mut best = b[i].and_then(|x| brute_force(w, b, left).map(|r| r + x as u64));
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

fn decoder() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut agree = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(1..=8);
        let mut w = vec![vec![None; k]; k];
        for i in 0..k {
            for j in i + 1..k {
                if rng.gen::<f64>() < 0.9 {
                    let v = rng.gen_range(1..20);
                    w[i][j] = Some(v);
                    w[j][i] = Some(v);
                }
            }
        }
        let b: Vec<Option<u32>> = (0..k).map(|_| (rng.gen::<f64>() < 0.8).then(|| rng.gen_range(1..20))).collect();
        let opt = brute_force(&w, &b, &mut (0..k).collect());
        let g = MatchingGraph::from_weights(&w, &b);
        if match_graph(&g, MatchMethod::Auto).ok().map(|p| p.weight) == opt {
            agree += 1;
        }
    }
    let lat = Lattice::build(4).unwrap();
    let tab = Tableau::new(&lat, &[]);
    let dec = Decoder::new(&lat);
    let n = lat.num_qubits() as u32;
    let axes = [Axis::X, Axis::Y, Axis::Z];
    let mut frames = vec![PauliOp::identity()];
    for a in 0..n {
        for s in axes {
            frames.push(PauliOp::single(a, s));
            for b in a + 1..n {
                for t in axes {
                    frames.push(PauliOp::from_terms([(a, s), (b, t)]));
                }
            }
        }
    }
    let (mut fails, mut weight_one_fails) = (0, 0);
    for e in &frames {
        let out = decode_static(&lat, &tab, &dec, &Frame::from_pauli(lat.num_qubits(), e)).unwrap();
        if out.logical_failure.iter().any(|&f| f) {
            fails += 1;
            weight_one_fails += usize::from(e.weight() == 1);
        }
    }
    let detail = format!(
        "{agree}/1000 optimal; L=4 weight<=2: {fails} of {} miscorrected ({weight_one_fails} of weight 1); distance 4 makes zero unattainable",
        frames.len()
    );
    // The optimality half and the weight-1 half must hold; only the
    // weight-2 claim is out of reach.
    let supporting = agree == 1000 && weight_one_fails == 0;
    Outcome { pass: supporting && fails == 0, detail, expected_fail: supporting && fails > 0 }
}

fn memory() -> Outcome {
    let p = 1e-3;
    let trials = 1_000_000;
    let t3 = MemoryExperiment::new(3).run(p, 3, trials, 31, Execution::Parallel);
    let t5 = MemoryExperiment::new(5).run(p, 5, trials, 51, Execution::Parallel);
    let zs = z_less(t5, t3);
    Outcome::new(zs > 1.645, format!("{trials} trials: d=3 {:.2e}, d=5 {:.2e}, z = {zs:.1}", t3.rate(), t5.rate()))
}

fn distillation() -> Outcome {
    let ps = [1e-2, 3e-3, 1e-3];
    let mut notes = Vec::new();
    let mut pass = true;
    for (name, d, rejects) in [("7-qubit", Distiller::steane(), 7), ("15-qubit", Distiller::reed_muller(), 15)] {
        let (rej, _) = d.weight_census(1);
        let (_, flips3) = d.weight_census(3);
        let out: Vec<f64> = ps.iter().map(|&p| d.exact(p).p_out).collect();
        let slope = log_log_slope(&ps, &out);
        let coeff = out[2] / ps[2].powi(3);
        let coeff_ok = (coeff / flips3 as f64 - 1.0).abs() < 0.05;
        pass &= rej == rejects && (slope - 3.0).abs() <= 0.3 && coeff_ok;
        notes.push(format!("{name}: {rej} rejected, slope {slope:.3}, p_out/p^3 = {coeff:.2} vs {flips3}"));
    }
    Outcome::new(pass, notes.join("; "))
}

fn vote_exponents() -> Outcome {
    let ps = [0.02, 0.04, 0.08];
    let mut notes = Vec::new();
    let mut pass = true;
    for (i, d) in [16usize, 32, 48].into_iter().enumerate() {
        let rates: Vec<f64> = ps
            .iter()
            .enumerate()
            .map(|(j, &p)| {
                let e = VoteExperiment { d, p, cbj: 0.0 };
                e.run_weighted(400_000, 100 * i as u64 + j as u64, Execution::Parallel, 0.5).mean()
            })
            .collect();
        let slope = log_log_slope(&ps, &rates);
        let target = (d / 16 + 1) as f64;
        pass &= (slope - target).abs() <= 0.5;
        notes.push(format!("d={d}: {slope:.2} vs {target}"));
    }
    Outcome::new(pass, notes.join("; "))
}

#[test]
fn acceptance_criteria() {
    type Criterion = (&'static str, fn() -> Outcome, Duration);
    let secs = Duration::from_secs;
    let criteria: [Criterion; 11] = [
        ("enlargement columns", enlargement_columns, secs(1)),
        ("braid CNOT", braid_cnot, secs(10)),
        ("error propagation", propagation, secs(600)),
        ("rate and resources", rates, secs(1)),
        ("oracle single step", single_step_oracle, secs(300)),
        ("oracle injected error", error_step_oracle, secs(300)),
        ("validity checkers", validity, secs(600)),
        ("decoder", decoder, secs(120)),
        ("memory Monte Carlo", memory, secs(600)),
        ("distillation", distillation, secs(300)),
        ("vote exponents", vote_exponents, secs(600)),
    ];
    let mut unexpected = Vec::new();
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *limit;
        let mut stdout = std::io::stdout().lock();
        writeln!(
            stdout,
            "criterion {:>2} {}: {} ({:.2}s) {}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            name,
            elapsed.as_secs_f64(),
            out.detail
        )
        .unwrap();
        if !pass && !(out.expected_fail && elapsed <= *limit) {
            unexpected.push(i + 1);
        }
    }
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
}
