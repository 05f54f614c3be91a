//! Self-checks that compare each closed form against its independent oracle.

use crate::config::RunConfig;
use crate::error::Result;
use crate::gaussian_pair::{fock_oracle, FockExpansion, TwoModeSqueezedThermal};
use crate::loading::{coupling_integrals, quadrature_loading_oracle, LoadingHorizon, MemoryCavityParams};
use crate::metrics::{erasure_probability, error_probability, evaluate_detailed, probabilities_from_matrices, success_probability};
use crate::source::OpaParams;

pub const GRID_G: [f64; 4] = [0.01, 0.05, 0.1, 0.3];
pub const GRID_MEMORY_RATIO: [f64; 4] = [0.25, 0.5, 1.0, 2.0];
pub const GRID_ETA: [f64; 3] = [0.01, 0.1, 1.0];

/// Occupation ceiling for the number-basis comparison.
pub const FOCK_NBAR_LIMIT: f64 = 0.1;
pub const FOCK_CUTOFF: usize = 12;

/// One grid point of the loading comparison, in units of Γ = 1 with γ = Γ, γ_c = Γ_c.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub g: f64,
    pub memory_ratio: f64,
    pub eta: f64,
}

impl GridPoint {
    pub fn params(&self) -> Result<(OpaParams, MemoryCavityParams)> {
        Ok((
            OpaParams::new(self.g, 1.0, 1.0)?,
            MemoryCavityParams::new(self.memory_ratio, self.memory_ratio, 1.0)?,
        ))
    }

    pub fn label(&self) -> String {
        format!("G={} Γc/Γ={} η={}", self.g, self.memory_ratio, self.eta)
    }
}

pub fn loading_grid() -> Vec<GridPoint> {
    let mut grid = Vec::new();
    for &g in &GRID_G {
        for &memory_ratio in &GRID_MEMORY_RATIO {
            for &eta in &GRID_ETA {
                grid.push(GridPoint { g, memory_ratio, eta });
            }
        }
    }
    grid
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub points: usize,
    pub max_deviation: f64,
    pub worst_point: String,
}

impl CheckOutcome {
    fn new() -> Self {
        Self {
            points: 0,
            max_deviation: 0.0,
            worst_point: String::new(),
        }
    }

    fn record(&mut self, deviation: f64, label: impl FnOnce() -> String) {
        self.points += 1;
        if deviation > self.max_deviation || self.worst_point.is_empty() {
            self.max_deviation = self.max_deviation.max(deviation);
            self.worst_point = label();
        }
    }

    pub fn passes(&self, tolerance: f64) -> bool {
        self.max_deviation <= tolerance
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b.abs()
    }
}

fn loading_deviation(opa: &OpaParams, mem: &MemoryCavityParams, eta: f64) -> Result<f64> {
    let closed = coupling_integrals(opa, mem, eta)?;
    let quad = quadrature_loading_oracle(opa, mem, eta, LoadingHorizon::SteadyState)?;
    Ok(relative(quad.nbar, closed.nbar()).max(relative(quad.ntilde, closed.ntilde())))
}

/// Relative closed-form vs quadrature deviation of `(n̄, ñ)` over the loading
/// grid plus the configured link at 0 and 50 km.
pub fn quadrature_check(config: &RunConfig) -> Result<CheckOutcome> {
    let mut outcome = CheckOutcome::new();
    for point in loading_grid() {
        let (opa, mem) = point.params()?;
        let dev = loading_deviation(&opa, &mem, point.eta)?;
        outcome.record(dev, || point.label());
    }
    for total in [0.0, 50.0] {
        let op = config.operating_point(total)?;
        let eta = crate::channel::arm_transmissivity(&op.channel);
        let dev = loading_deviation(&op.opa, &op.mem, eta)?;
        outcome.record(dev, || format!("config at 2L={total} km"));
    }
    Ok(outcome)
}

fn pair_deviation(state: &TwoModeSqueezedThermal) -> Result<f64> {
    let pair2 = state.flipped();
    let rho1 = fock_oracle(state, FOCK_CUTOFF)?;
    let rho2 = fock_oracle(&pair2, FOCK_CUTOFF)?;
    let mut worst = rho1
        .max_deviation_from(&FockExpansion::new(*state, FOCK_CUTOFF))?
        .max(rho2.max_deviation_from(&FockExpansion::new(pair2, FOCK_CUTOFF))?);
    let (pe, ps, perr) = probabilities_from_matrices(&rho1, &rho2);
    let pe_closed = erasure_probability(state, &pair2)?;
    let ps_closed = success_probability(state, &pair2)?;
    let perr_closed = error_probability(pe_closed, ps_closed)?;
    for (a, b) in [(pe, pe_closed), (ps, ps_closed), (perr, perr_closed)] {
        worst = worst.max((a - b).abs());
    }
    Ok(worst)
}

/// Max-abs deviation between the squeezed-thermal oracle and the Husimi
/// expansion (all elements up to n = 12), and between the three probabilities
/// by contraction and in closed form, for every grid state with n̄ ≤ 0.1 plus
/// the configured link at 0 and 50 km.
pub fn fock_check(config: &RunConfig) -> Result<CheckOutcome> {
    let mut outcome = CheckOutcome::new();
    for point in loading_grid() {
        let (opa, mem) = point.params()?;
        let c = coupling_integrals(&opa, &mem, point.eta)?;
        if c.nbar() > FOCK_NBAR_LIMIT {
            continue;
        }
        let state = TwoModeSqueezedThermal::new(c.nbar(), c.ntilde())?;
        let dev = pair_deviation(&state)?;
        outcome.record(dev, || point.label());
    }
    for total in [0.0, 50.0] {
        let eval = evaluate_detailed(&config.operating_point(total)?)?;
        let dev = pair_deviation(&eval.pair1)?;
        outcome.record(dev, || format!("config at 2L={total} km"));
    }
    Ok(outcome)
}
