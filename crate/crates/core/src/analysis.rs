//! Closed-form rate, resource and timing estimates.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("outside the formula's regime: m·e^(-2cbJ) + 7p = {0} >= 1")]
    Regime(f64),
    #[error("invalid input: {0}")]
    Domain(String),
    #[error("no distance in [3, 41] meets the budget")]
    Infeasible,
}

type Result<T> = std::result::Result<T, AnalysisError>;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateQuery {
    pub d: u32,
    /// Deformation steps between error-correction rounds.
    pub m: f64,
    pub p: f64,
    pub cbj: f64,
}

impl RateQuery {
    pub fn d_e(&self) -> u32 {
        self.d.div_ceil(2)
    }

    /// Per-step failure probability of one syndrome-circuit location.
    pub fn base(&self) -> f64 {
        self.m * (-2.0 * self.cbj).exp() + 7.0 * self.p
    }
}

fn ln_factorial(n: u32) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Natural log of the logical rate, `-inf` when the base vanishes.
pub fn ln_logical_rate(q: &RateQuery) -> Result<f64> {
    if q.d < 3 || !(q.p >= 0.0) || !(q.m >= 0.0) || !q.cbj.is_finite() {
        return Err(AnalysisError::Domain(format!("{q:?}")));
    }
    let base = q.base();
    if base >= 1.0 {
        return Err(AnalysisError::Regime(base));
    }
    if base == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let de = q.d_e();
    let comb = ln_factorial(q.d) - ln_factorial(de - 1) - ln_factorial(de);
    Ok((q.d as f64).ln() + comb + de as f64 * base.ln())
}

/// Logical failure probability per `m` deformation steps.
pub fn logical_rate(q: &RateQuery) -> Result<f64> {
    ln_logical_rate(q).map(f64::exp)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub d: u32,
    pub cbj: f64,
    pub m: f64,
    pub rate: f64,
}

/// Every `(d, cbJ, m)` combination that lies inside the regime.
pub fn rate_curve(ds: &[u32], cbjs: &[f64], ms: &[f64], p: f64) -> Vec<RatePoint> {
    let mut out = Vec::new();
    for &d in ds {
        for &cbj in cbjs {
            for &m in ms {
                if let Ok(rate) = logical_rate(&RateQuery { d, m, p, cbj }) {
                    out.push(RatePoint { d, cbj, m, rate });
                }
            }
        }
    }
    out
}

/// Four points per decade of `m` from 1 to 1e12.
pub fn default_m_grid() -> Vec<f64> {
    (0..=48).map(|k| 10f64.powf(k as f64 / 4.0)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceQuery {
    /// Logical operations times logical qubits.
    pub big_m: f64,
    pub delta: f64,
    pub p: f64,
    pub cbj: f64,
    pub m_grid: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub d: u32,
    pub m: f64,
    pub n_tot: u64,
    pub rate: f64,
    pub budget: f64,
}

/// Per-`m`-steps failure budget `mδ/(dM)`.
pub fn rate_budget(d: u32, m: f64, delta: f64, big_m: f64) -> f64 {
    m * delta / (d as f64 * big_m)
}

/// Smallest odd `d` in `[3, 41]` for which some `m` on the grid meets the
/// budget. Among those `m`, the one with the most relative slack wins.
pub fn estimate_resources(rq: &ResourceQuery) -> Result<ResourceEstimate> {
    if !(rq.delta > 0.0 && rq.delta < 1.0) || !(rq.big_m >= 1.0) || rq.m_grid.is_empty() {
        return Err(AnalysisError::Domain(format!("{rq:?}")));
    }
    for d in (3..=41).step_by(2) {
        let mut best: Option<(f64, ResourceEstimate)> = None;
        for &m in &rq.m_grid {
            let Ok(rate) = logical_rate(&RateQuery { d, m, p: rq.p, cbj: rq.cbj }) else { continue };
            let budget = rate_budget(d, m, rq.delta, rq.big_m);
            if rate <= budget {
                let slack = rate / budget;
                if best.is_none_or(|(s, _)| slack < s) {
                    let n = 2 * d as u64 - 1;
                    best = Some((slack, ResourceEstimate { d, m, n_tot: n * n, rate, budget }));
                }
            }
        }
        if let Some((_, e)) = best {
            return Ok(e);
        }
    }
    Err(AnalysisError::Infeasible)
}

/// `prefactor · p^p_exponent · e^(-gap_exponent·cbJ)`, an order-of-magnitude
/// estimate with unknown constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderEstimate {
    pub prefactor: f64,
    pub p_exponent: u32,
    pub gap_exponent: f64,
    pub p: f64,
    pub cbj: f64,
}

impl OrderEstimate {
    pub fn scale(&self) -> f64 {
        self.prefactor * self.p.powi(self.p_exponent as i32) * (-self.gap_exponent * self.cbj).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MovementEstimate {
    /// Error present but no full round triggered.
    pub missed: OrderEstimate,
    /// Full round triggered without an error.
    pub unnecessary: OrderEstimate,
}

pub fn movement_misdetection(d: u32, p: f64, cbj: f64) -> Result<MovementEstimate> {
    if d == 0 || !d.is_multiple_of(8) {
        return Err(AnalysisError::Domain(format!("d = {d} is not a multiple of 8")));
    }
    let base = OrderEstimate { prefactor: d as f64 / 4.0, p_exponent: d / 16 + 1, gap_exponent: 4.0, p, cbj };
    Ok(MovementEstimate { missed: base, unnecessary: OrderEstimate { p_exponent: d / 16, ..base } })
}

pub fn injection_error(d: u32, p: f64, cbj: f64) -> Result<OrderEstimate> {
    if d == 0 || !d.is_multiple_of(4) {
        return Err(AnalysisError::Domain(format!("d = {d} is not a multiple of 4")));
    }
    Ok(OrderEstimate { prefactor: 1.0, p_exponent: d / 8 + 1, gap_exponent: 4.0, p, cbj })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationParams {
    pub j: f64,
    pub h_max: f64,
    pub j2_max: f64,
    pub d: u32,
}

impl PerturbationParams {
    pub fn v(&self) -> f64 {
        (self.j / self.h_max).ln().min((self.j / self.j2_max).ln())
    }
}

/// Ground-space splitting `J e^(-v d/2)` from weak local fields and couplings.
pub fn perturbation_splitting(pp: &PerturbationParams) -> Result<f64> {
    if !(pp.j > 0.0) || pp.h_max < 0.0 || pp.j2_max < 0.0 {
        return Err(AnalysisError::Domain(format!("{pp:?}")));
    }
    let v = pp.v();
    if !(v > 0.0) {
        return Err(AnalysisError::Domain(format!("perturbation not weak: v = {v}")));
    }
    Ok(pp.j * (-v * pp.d as f64 / 2.0).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdiabaticBudget {
    pub t_q: f64,
    pub delta_bound: f64,
}

/// Step duration `(e/γ) N ξ² / Δ³` and the matching error bound `(N+1)^(γ+1) e^(-N)`.
pub fn adiabatic_budget(gamma: f64, order: u32, xi: f64, delta_min: f64) -> Result<AdiabaticBudget> {
    if !(gamma > 0.0 && xi > 0.0 && delta_min > 0.0) {
        return Err(AnalysisError::Domain(format!("gamma={gamma} xi={xi} gap={delta_min}")));
    }
    let n = order as f64;
    Ok(AdiabaticBudget {
        t_q: std::f64::consts::E / gamma * n * xi * xi / delta_min.powi(3),
        delta_bound: (n + 1.0).powf(gamma + 1.0) * (-n).exp(),
    })
}
