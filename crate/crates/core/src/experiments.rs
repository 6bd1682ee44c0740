//! Monte Carlo drivers: a deterministic trial runner with per-trial random
//! streams, the phenomenological memory experiment, and the majority-vote
//! detector experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::decoder::{contact_vote, movement_vote, Decoder, Event};
use crate::lattice::{GenKind, Lattice};
use crate::noise::for_each_hit;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Execution {
    Sequential,
    /// Chunks of trials on the rayon pool; identical results to `Sequential`.
    #[default]
    Parallel,
}

/// Trials per work unit. Results are merged in chunk order, so the outcome
/// does not depend on the execution mode or thread count.
pub const CHUNK: u64 = 4096;

/// Generator for trial `k`: the run seed picks the key, the trial index the stream.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Folds `f` over trials `0..n` chunk by chunk, then merges chunks in order.
pub fn reduce_trials<A, F, G>(n: u64, seed: u64, exec: Execution, init: A, f: F, merge: G) -> A
where
    A: Clone + Send + Sync,
    F: Fn(&mut A, u64, &mut ChaCha8Rng) + Sync,
    G: Fn(A, A) -> A,
{
    let chunks = n.div_ceil(CHUNK);
    let run_chunk = |c: u64| {
        let mut acc = init.clone();
        for t in c * CHUNK..((c + 1) * CHUNK).min(n) {
            f(&mut acc, t, &mut trial_rng(seed, t));
        }
        acc
    };
    let parts: Vec<A> = match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..chunks).into_par_iter().map(run_chunk).collect(),
        _ => (0..chunks).map(run_chunk).collect(),
    };
    parts.into_iter().fold(init.clone(), merge)
}

/// Per-trial results in trial order.
pub fn map_trials<T, F>(n: u64, seed: u64, exec: Execution, f: F) -> Vec<T>
where
    T: Clone + Send + Sync,
    F: Fn(u64, &mut ChaCha8Rng) -> T + Sync,
{
    reduce_trials(
        n,
        seed,
        exec,
        Vec::new(),
        |acc, t, rng| acc.push(f(t, rng)),
        |mut a, b| {
            a.extend(b);
            a
        },
    )
}

/// Hit count over a number of Bernoulli trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tally {
    pub trials: u64,
    pub hits: u64,
}

impl Tally {
    pub fn rate(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.hits as f64 / self.trials as f64
        }
    }

    pub fn merge(self, o: Tally) -> Tally {
        Tally { trials: self.trials + o.trials, hits: self.hits + o.hits }
    }
}

pub fn count_trials<F>(n: u64, seed: u64, exec: Execution, f: F) -> Tally
where
    F: Fn(u64, &mut ChaCha8Rng) -> bool + Sync,
{
    reduce_trials(
        n,
        seed,
        exec,
        Tally::default(),
        |acc, t, rng| {
            acc.trials += 1;
            acc.hits += f(t, rng) as u64;
        },
        Tally::merge,
    )
}

/// Mean of a weighted estimator with its standard error.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub trials: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Estimate {
    pub fn push(&mut self, w: f64) {
        self.trials += 1;
        self.sum += w;
        self.sum_sq += w * w;
    }

    pub fn merge(self, o: Estimate) -> Estimate {
        Estimate { trials: self.trials + o.trials, sum: self.sum + o.sum, sum_sq: self.sum_sq + o.sum_sq }
    }

    pub fn mean(&self) -> f64 {
        self.sum / self.trials.max(1) as f64
    }

    pub fn stderr(&self) -> f64 {
        let n = self.trials.max(2) as f64;
        let var = (self.sum_sq / n - self.mean().powi(2)).max(0.0) * n / (n - 1.0);
        (var / n).sqrt()
    }
}

/// One-sided two-proportion z statistic for `a.rate() < b.rate()`.
pub fn z_less(a: Tally, b: Tally) -> f64 {
    let pooled = (a.hits + b.hits) as f64 / (a.trials + b.trials) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / a.trials as f64 + 1.0 / b.trials as f64)).sqrt();
    if se == 0.0 {
        return 0.0;
    }
    (b.rate() - a.rate()) / se
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

/// Code-capacity-plus-measurement-noise memory experiment on a bare patch:
/// every round each data qubit takes `σ_x` and `σ_z` with probability `p`
/// each and every report flips with probability `p`; a final perfect round
/// closes the history before decoding.
#[derive(Clone, Debug)]
pub struct MemoryExperiment {
    pub d: usize,
    pub decoder: Decoder,
    plaquettes_of: Vec<Vec<usize>>,
    vertices_of: Vec<Vec<usize>>,
    /// Support of the `Z`-type logical: odd residual `σ_x` overlap is a failure.
    z_logical: Vec<bool>,
    x_logical: Vec<bool>,
}

impl MemoryExperiment {
    pub fn new(d: usize) -> MemoryExperiment {
        let lat = Lattice::build(d).expect("valid patch size");
        let decoder = Decoder::new(&lat);
        let n = lat.num_qubits();
        let incidence = |kind: GenKind| {
            let g = decoder.graph(kind);
            let mut of = vec![Vec::new(); n];
            for (i, &p) in g.cells.iter().enumerate() {
                for &q in &lat.generator_at(p).expect("cell").support {
                    of[q as usize].push(i);
                }
            }
            of
        };
        let (px, pz) = lat.patch_logicals();
        let mask = |op: &crate::pauli::PauliOp| {
            let mut m = vec![false; n];
            for q in op.qubits() {
                m[q as usize] = true;
            }
            m
        };
        MemoryExperiment {
            d,
            plaquettes_of: incidence(GenKind::Plaquette),
            vertices_of: incidence(GenKind::Vertex),
            z_logical: mask(&pz),
            x_logical: mask(&px),
            decoder,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.plaquettes_of.len()
    }

    fn sector_fails<R: Rng + ?Sized>(&self, kind: GenKind, p: f64, rounds: usize, rng: &mut R) -> bool {
        let (checks_of, logical) = match kind {
            GenKind::Plaquette => (&self.plaquettes_of, &self.z_logical),
            GenKind::Vertex => (&self.vertices_of, &self.x_logical),
        };
        let nq = checks_of.len();
        let nc = self.decoder.graph(kind).cells.len();
        let mut err = vec![false; nq];
        let mut syn = vec![false; nc];
        let mut prev = vec![false; nc];
        let mut events = Vec::new();
        for t in 0..=rounds {
            let mut report = if t < rounds {
                for_each_hit(rng, p, nq, |q| {
                    err[q] ^= true;
                    for &c in &checks_of[q] {
                        syn[c] ^= true;
                    }
                });
                let mut r = syn.clone();
                for_each_hit(rng, p, nc, |c| r[c] ^= true);
                r
            } else {
                syn.clone()
            };
            for c in 0..nc {
                if report[c] != prev[c] {
                    events.push(Event { node: c, round: t });
                }
            }
            std::mem::swap(&mut prev, &mut report);
        }
        let fix = self.decoder.correction(kind, &events).expect("patch has a boundary");
        for q in fix {
            err[q as usize] ^= true;
        }
        err.iter().zip(logical).filter(|(e, l)| **e && **l).count() % 2 == 1
    }

    /// `true` on a logical failure in either sector.
    pub fn trial<R: Rng + ?Sized>(&self, p: f64, rounds: usize, rng: &mut R) -> bool {
        let x = self.sector_fails(GenKind::Plaquette, p, rounds, rng);
        let z = self.sector_fails(GenKind::Vertex, p, rounds, rng);
        x || z
    }

    pub fn run(&self, p: f64, rounds: usize, trials: u64, seed: u64, exec: Execution) -> Tally {
        count_trials(trials, seed, exec, |_, rng| self.trial(p, rounds, rng))
    }
}

/// Movement-vote experiment: one expansion epoch of `d/4` rows with `d/8`
/// outcomes each. With probability `e^{-4cbJ}` a boundary error corrupts one
/// row (all its outcomes read `-1`); every outcome is then flipped with
/// probability `p`. A misdetection is a boundary error that triggers no row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoteExperiment {
    pub d: usize,
    pub p: f64,
    pub cbj: f64,
}

impl VoteExperiment {
    pub fn boundary_rate(&self) -> f64 {
        (-4.0 * self.cbj).exp()
    }

    fn rows<R: Rng + ?Sized>(&self, rng: &mut R, corrupt: Option<usize>, bias: f64) -> (Vec<Vec<i8>>, f64) {
        let (nr, nc) = (self.d / 4, self.d / 8);
        let mut weight = 1.0;
        let rows = (0..nr)
            .map(|r| {
                let base: i8 = if corrupt == Some(r) { -1 } else { 1 };
                let mut row = vec![base; nc];
                if corrupt == Some(r) && bias != self.p {
                    for v in row.iter_mut() {
                        if rng.gen::<f64>() < bias {
                            *v = -*v;
                            weight *= self.p / bias;
                        } else {
                            weight *= (1.0 - self.p) / (1.0 - bias);
                        }
                    }
                } else {
                    for_each_hit(rng, self.p, nc, |i| row[i] = -row[i]);
                }
                row
            })
            .collect();
        (rows, weight)
    }

    /// Plain sampling: `true` on a misdetection.
    pub fn trial<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        let corrupt = (rng.gen::<f64>() < self.boundary_rate()).then(|| rng.gen_range(0..self.d / 4));
        let (rows, _) = self.rows(rng, corrupt, self.p);
        corrupt.is_some() && !movement_vote(&rows, self.d).expect("shape").trigger_full_ec
    }

    /// Importance-sampled misdetection weight: the boundary error is always
    /// present and the corrupted row's flips are drawn at rate `bias`; the
    /// returned weight is unbiased for the misdetection probability.
    pub fn weighted_trial<R: Rng + ?Sized>(&self, rng: &mut R, bias: f64) -> f64 {
        let r = rng.gen_range(0..self.d / 4);
        let (rows, w) = self.rows(rng, Some(r), bias);
        if movement_vote(&rows, self.d).expect("shape").trigger_full_ec {
            0.0
        } else {
            w * self.boundary_rate()
        }
    }

    pub fn run(&self, trials: u64, seed: u64, exec: Execution) -> Tally {
        count_trials(trials, seed, exec, |_, rng| self.trial(rng))
    }

    pub fn run_weighted(&self, trials: u64, seed: u64, exec: Execution, bias: f64) -> Estimate {
        reduce_trials(
            trials,
            seed,
            exec,
            Estimate::default(),
            |acc, _, rng| acc.push(self.weighted_trial(rng, bias)),
            Estimate::merge,
        )
    }
}

/// Contact-measurement experiment: `2⌊d/8⌋+1` repeated outcomes, which are
/// reliable until a thermal excitation (rate `e^{-4cbJ}`) lets each read
/// wrong with probability `p`. `true` when the vote returns the wrong sign.
pub fn contact_trial<R: Rng + ?Sized>(d: usize, p: f64, cbj: f64, rng: &mut R) -> bool {
    let n = 2 * (d / 8) + 1;
    if rng.gen::<f64>() >= (-4.0 * cbj).exp() {
        return false;
    }
    let mut out = vec![1i8; n];
    for_each_hit(rng, p, n, |i| out[i] = -1);
    contact_vote(&out).expect("odd count") < 0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |t: u64, rng: &mut ChaCha8Rng| (t % 7 == 0) ^ (rng.gen::<f64>() < 0.3);
        let a = count_trials(10_000, 5, Execution::Sequential, f);
        let b = count_trials(10_000, 5, Execution::Parallel, f);
        assert_eq!(a, b);
        assert_eq!(a.trials, 10_000);
    }

    #[test]
    fn trial_streams_are_reproducible_in_isolation() {
        let all = map_trials(9000, 1, Execution::Parallel, |_, rng| rng.gen::<u64>());
        assert_eq!(all[8191], trial_rng(1, 8191).gen::<u64>());
    }

    #[test]
    fn noiseless_memory_never_fails() {
        let m = MemoryExperiment::new(3);
        assert_eq!(m.run(0.0, 3, 200, 0, Execution::Sequential).hits, 0);
    }

    #[test]
    fn importance_sampling_matches_plain() {
        let e = VoteExperiment { d: 16, p: 0.2, cbj: 0.0 };
        let plain = e.run(200_000, 3, Execution::Sequential).rate();
        let w = e.run_weighted(200_000, 4, Execution::Sequential, 0.5);
        assert!((plain - w.mean()).abs() < 4.0 * w.stderr() + 0.003, "{plain} vs {}", w.mean());
    }

    #[test]
    fn slope_of_a_power_law() {
        let x = [1.0, 2.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powi(3)).collect();
        assert!((log_log_slope(&x, &y) - 3.0).abs() < 1e-12);
    }
}
