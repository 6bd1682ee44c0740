mod artifact;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use holosurf::analysis::{estimate_resources, rate_curve, ResourceQuery};
use holosurf::deformation::Device;
use holosurf::experiments::{map_trials, trial_rng, Execution, MemoryExperiment, VoteExperiment};
use holosurf::oracle::{
    adiabatic_error_curve, error_step_system, fidelity, integrate, parallel_step_system, single_step_system,
    SchedulePolicy,
};
use holosurf::pauli::multiply;
use holosurf::protocols::{run_program, Distiller, Program};
use holosurf::tableau::Equivalence;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use artifact::{embedded_config, Out};
use config::{Config, DistillCode, McKind};

#[derive(Parser)]
#[command(name = "holosurf", version, about = "Surface-code deformation experiments")]
struct Cli {
    /// JSON configuration; missing fields take their defaults.
    #[arg(long, global = true, env = "HQC_CONFIG")]
    config: Option<PathBuf>,
    #[arg(long, global = true, env = "HQC_SEED")]
    seed: Option<u64>,
    #[arg(long, global = true, env = "HQC_TRIALS")]
    trials: Option<u64>,
    /// Worker threads; 1 runs trials sequentially. Results do not depend on it.
    #[arg(long, global = true, env = "HQC_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true, env = "HQC_OUT", default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create and enlarge the configured defects and dump the geometry.
    BuildLattice,
    /// Braid the first defect around the second and check the CNOT table.
    BraidCheck,
    /// Logical rate per m steps over the configured grid.
    RateCurve,
    /// Smallest distance meeting the failure budget.
    Estimate,
    /// Dense-state checks of single, erroneous and parallel steps and the adiabatic error curve.
    OracleVerify,
    /// Per-trial Monte Carlo outcomes.
    Montecarlo,
    /// Re-run the trials recorded in a `montecarlo` CSV and compare outcomes.
    Replay {
        log: PathBuf,
        /// Replay only this trial.
        #[arg(long)]
        only: Option<u64>,
    },
    /// Run a logical program given as JSON.
    Program { file: PathBuf },
}

/// `Ok(false)` is a failed check; errors are bad input.
type Status = anyhow::Result<bool>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Status {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    let exec = match cli.workers {
        Some(0) => bail!("--workers must be at least 1"),
        Some(1) => Execution::Sequential,
        Some(n) => {
            rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("thread pool")?;
            Execution::Parallel
        }
        None => Execution::Parallel,
    };
    let out = Out { dir: cli.out, config: cfg };
    match cli.command {
        Command::BuildLattice => build_lattice(&out),
        Command::BraidCheck => braid_check(&out),
        Command::RateCurve => rate_curve_cmd(&out),
        Command::Estimate => estimate(&out),
        Command::OracleVerify => oracle_verify(&out),
        Command::Montecarlo => montecarlo(&out, exec),
        Command::Replay { log, only } => replay(&out, &log, only),
        Command::Program { file } => program(&out, &file),
    }
}

fn device(cfg: &Config) -> anyhow::Result<(Device, Vec<usize>)> {
    let mut dev = Device::new(cfg.lattice.l)?;
    let mut ids = Vec::new();
    for spec in &cfg.lattice.defects {
        let id = dev.create_double_cut(spec.kind, spec.holes[0], spec.holes[1])?;
        if let Some(d) = spec.perimeter {
            dev.enlarge(id, 0, d)?;
            dev.enlarge(id, 1, d)?;
        }
        ids.push(id);
    }
    Ok((dev, ids))
}

fn build_lattice(out: &Out) -> Status {
    let (dev, _) = device(&out.config)?;
    let check = dev.tableau.check_invariants();
    let weight = dev.tableau.max_active_weight();
    let report = serde_json::json!({
        "lattice": dev.lattice.describe(&dev.defects),
        "tableau": dev.tableau.to_json(),
        "max_generator_weight": weight,
        "invariants": check.as_ref().err(),
    });
    let path = out.json("lattice.json", &report)?;
    println!("{} qubits, max weight {weight} -> {}", dev.lattice.num_qubits(), path.display());
    if let Err(e) = check {
        eprintln!("invariant violated: {e}");
        return Ok(false);
    }
    Ok(weight <= 4)
}

#[derive(Serialize)]
struct Mapping {
    before: &'static str,
    after: &'static str,
    relation: String,
}

fn braid_check(out: &Out) -> Status {
    let (mut dev, ids) = device(&out.config)?;
    let [c, t] = ids[..] else { bail!("braid-check needs exactly two defects, got {}", ids.len()) };
    let (x1, z1) = (dev.logical(c).x.clone(), dev.logical(c).z.clone());
    let (x2, z2) = (dev.logical(t).x.clone(), dev.logical(t).z.clone());
    let path = dev.braid(c, t)?;
    let tab = &dev.tableau;
    let rows = [
        ("X1", "X1 X2", tab.equivalent(&dev.logical(c).x, &multiply(&x1, &x2))),
        ("X2", "X2", tab.equivalent(&dev.logical(t).x, &x2)),
        ("Z1", "Z1", tab.equivalent(&dev.logical(c).z, &z1)),
        ("Z2", "Z1 Z2", tab.equivalent(&dev.logical(t).z, &multiply(&z1, &z2))),
    ];
    let ok = path.is_closed()
        && rows.iter().all(|r| r.2 == Equivalence::Same)
        && tab.check_invariants().is_ok()
        && tab.max_active_weight() <= 4;
    let mappings: Vec<Mapping> =
        rows.iter().map(|(b, a, r)| Mapping { before: b, after: a, relation: format!("{r:?}") }).collect();
    for m in &mappings {
        println!("{} -> {}: {}", m.before, m.after, m.relation);
    }
    let report = serde_json::json!({ "path": path, "mappings": mappings, "pass": ok });
    out.json("braid.json", &report)?;
    Ok(ok)
}

fn rate_curve_cmd(out: &Out) -> Status {
    let rc = &out.config.rate_curve;
    let pts = rate_curve(&rc.ds, &rc.cbjs, &rc.m_grid, rc.p);
    let (path, mut w) = out.csv("rate_curve.csv")?;
    w.write_record(["d", "cbj", "m", "rate"])?;
    for p in &pts {
        w.serialize((p.d, p.cbj, p.m, p.rate))?;
    }
    w.flush()?;
    println!("{} points -> {}", pts.len(), path.display());
    Ok(true)
}

fn estimate(out: &Out) -> Status {
    let e = &out.config.estimate;
    let rq = ResourceQuery { big_m: e.big_m, delta: e.delta, p: e.p, cbj: e.cbj, m_grid: e.m_grid.clone() };
    let est = estimate_resources(&rq)?;
    println!("d = {}, m = {:e}, n_tot = {}", est.d, est.m, est.n_tot);
    out.json("estimate.json", &est)?;
    Ok(true)
}

fn oracle_verify(out: &Out) -> Status {
    let o = &out.config.oracle;
    let seed = out.config.seed;
    let mut checks = Vec::new();
    let mut pass = true;
    for (name, sys, tol, propagated) in [
        ("single_step", single_step_system(o.j), 1e-3, false),
        ("error_step", error_step_system(o.j), 1e-2, true),
        ("parallel_step", parallel_step_system(o.j), 1e-3, false),
    ] {
        let psi = sys.ground_state(seed)?;
        let sched = SchedulePolicy::budgeted(&sys, o.order, o.gamma)?;
        let run = integrate(&sys, &sched, &psi)?;
        let want = if propagated { sys.predict_propagated(&psi)? } else { sys.predict(&psi)? };
        let f = fidelity(&want, &run.state);
        let ok = f >= 1.0 - tol;
        pass &= ok;
        println!("{name}: fidelity {f:.10} (need >= {}) {}", 1.0 - tol, if ok { "ok" } else { "FAILED" });
        checks.push(serde_json::json!({
            "name": name, "qubits": sys.n, "t_step": sched.t_step, "fidelity": f,
            "max_norm_drift": run.max_norm_drift, "pass": ok,
        }));
    }
    let sys = single_step_system(o.j);
    let psi = sys.ground_state(seed)?;
    let family: Vec<(u32, f64)> = o.t_values.iter().map(|&t| (o.order, t)).collect();
    let curve = adiabatic_error_curve(&sys, &family, SchedulePolicy::DEFAULT_DT, &psi)?;
    let monotone = curve.windows(2).all(|w| w[1].delta < w[0].delta);
    pass &= monotone;
    let (path, mut w) = out.csv("oracle_curve.csv")?;
    w.write_record(["t", "order", "delta", "fidelity", "dt"])?;
    for p in &curve {
        w.serialize((p.t, p.order, p.delta, p.fidelity, p.dt))?;
    }
    w.flush()?;
    println!("error curve monotone: {monotone} -> {}", path.display());
    out.json("oracle.json", &serde_json::json!({ "checks": checks, "curve_monotone": monotone, "pass": pass }))?;
    Ok(pass)
}

/// Outcome of Monte Carlo trial `k`, as written to the CSV.
fn trial_outcome(cfg: &Config, rng: &mut ChaCha8Rng, mem: Option<&MemoryExperiment>) -> String {
    let mc = &cfg.montecarlo;
    match mc.kind {
        McKind::Memory => {
            let failed = mem.expect("memory experiment").trial(mc.p, mc.rounds.unwrap_or(mc.d), rng);
            u8::from(failed).to_string()
        }
        McKind::Vote => VoteExperiment { d: mc.d, p: mc.p, cbj: mc.cbj }.weighted_trial(rng, mc.bias).to_string(),
        McKind::Distill => {
            let d = distiller(mc.code);
            let e: Vec<bool> = (0..d.n).map(|_| rng.gen::<f64>() < mc.p).collect();
            let o = d.run(&e);
            match (o.accept, o.output_flip) {
                (false, _) => "reject",
                (true, false) => "ok",
                (true, true) => "flip",
            }
            .to_string()
        }
    }
}

fn distiller(code: DistillCode) -> Distiller {
    match code {
        DistillCode::Steane => Distiller::steane(),
        DistillCode::ReedMuller => Distiller::reed_muller(),
    }
}

fn memory_for(cfg: &Config) -> anyhow::Result<Option<MemoryExperiment>> {
    let mc = &cfg.montecarlo;
    match mc.kind {
        McKind::Memory if mc.d < 2 => bail!("memory needs d >= 2"),
        McKind::Memory => Ok(Some(MemoryExperiment::new(mc.d))),
        McKind::Vote if mc.d < 8 || mc.d % 8 != 0 => bail!("vote needs d a positive multiple of 8"),
        _ => Ok(None),
    }
}

fn mc_file(cfg: &Config) -> String {
    format!("montecarlo_{}.csv", serde_json::to_value(cfg.montecarlo.kind).unwrap().as_str().unwrap())
}

fn montecarlo(out: &Out, exec: Execution) -> Status {
    let cfg = &out.config;
    let mem = memory_for(cfg)?;
    let rows = map_trials(cfg.trials, cfg.seed, exec, |_, rng| trial_outcome(cfg, rng, mem.as_ref()));
    let (path, mut w) = out.csv(&mc_file(cfg))?;
    w.write_record(["trial", "outcome"])?;
    for (k, r) in rows.iter().enumerate() {
        w.write_record([k.to_string(), r.clone()])?;
    }
    w.flush()?;
    println!("{} trials -> {}", rows.len(), path.display());
    Ok(true)
}

fn replay(out: &Out, log: &PathBuf, only: Option<u64>) -> Status {
    let cfg = embedded_config(log)?;
    let mem = memory_for(&cfg)?;
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(log)?;
    let replay_out = Out { dir: out.dir.clone(), config: cfg.clone() };
    let (path, mut w) = replay_out.csv("replay.csv")?;
    w.write_record(["trial", "recorded", "replayed"])?;
    let (mut n, mut mismatches) = (0, 0);
    for rec in rd.deserialize::<(u64, String)>() {
        let (k, recorded) = rec?;
        if only.is_some_and(|o| o != k) {
            continue;
        }
        let replayed = trial_outcome(&cfg, &mut trial_rng(cfg.seed, k), mem.as_ref());
        mismatches += usize::from(replayed != recorded);
        n += 1;
        w.write_record([k.to_string(), recorded, replayed])?;
    }
    w.flush()?;
    println!("replayed {n} trials, {mismatches} mismatches -> {}", path.display());
    Ok(mismatches == 0)
}

fn program(out: &Out, file: &PathBuf) -> Status {
    let text = std::fs::read_to_string(file).with_context(|| format!("reading {}", file.display()))?;
    let p: Program = serde_json::from_str(&text).context("parsing program")?;
    let (reg, records) = run_program(&p, out.config.seed)?;
    for r in &records {
        if let Some(o) = r.outcome {
            println!("step {} {}: {o:+}", r.step, r.op);
        }
    }
    out.json("program.json", &serde_json::json!({ "records": records, "stats": reg.stats }))?;
    Ok(true)
}
