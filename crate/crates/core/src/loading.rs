//! Cold-cavity loading of the memory cavities.
//!
//! The incoming signal and idler fields accumulate in identical memory cavities
//! for a loading interval. Vacuum initial and loss modes contribute nothing to
//! normally-ordered moments, so the loaded state is fixed by the source
//! correlations filtered through the cavity response `√(2γ_c)·e^{−Γ_c(T_c−t)}`.

use crate::error::{invalid, Result};
use crate::gaussian_pair::TwoModeSqueezedThermal;
use crate::quadrature::{integrate, Tolerance};
use crate::source::{normal_correlation, phase_sensitive_correlation, OpaParams};

/// Memory-cavity rates (identical for the signal and idler cavities).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryCavityParams {
    /// Linewidth Γ_c, s⁻¹.
    pub gamma_c_total: f64,
    /// Input-coupling rate γ_c, s⁻¹.
    pub gamma_c_in: f64,
    /// Loading duration T_c, s. Only the finite-time quadrature path reads it.
    pub t_load: f64,
}

impl MemoryCavityParams {
    pub fn new(gamma_c_total: f64, gamma_c_in: f64, t_load: f64) -> Result<Self> {
        let p = Self {
            gamma_c_total,
            gamma_c_in,
            t_load,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_c_total.is_finite() && self.gamma_c_total > 0.0) {
            return Err(invalid("gamma_c_total", format!("{} must be positive", self.gamma_c_total)));
        }
        if !(self.gamma_c_in > 0.0 && self.gamma_c_in <= self.gamma_c_total) {
            return Err(invalid(
                "gamma_c_in",
                format!("{} must lie in (0, gamma_c_total = {}]", self.gamma_c_in, self.gamma_c_total),
            ));
        }
        if !(self.t_load > 0.0) {
            return Err(invalid("t_load", format!("{} must be positive", self.t_load)));
        }
        Ok(())
    }

    pub fn finite_horizon(&self) -> LoadingHorizon {
        LoadingHorizon::Finite(self.t_load)
    }
}

/// How long the memory cavities integrate the incoming field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadingHorizon {
    /// `T_c → ∞`.
    SteadyState,
    /// Loading for the given number of seconds from an empty cavity.
    Finite(f64),
}

/// The two coupling integrals I₋ and I₊.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingPair {
    pub i_minus: f64,
    pub i_plus: f64,
}

impl CouplingPair {
    pub fn nbar(&self) -> f64 {
        self.i_minus - self.i_plus
    }

    pub fn ntilde(&self) -> f64 {
        self.i_minus + self.i_plus
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(invalid("eta", format!("{eta} not in [0, 1]")));
    }
    Ok(())
}

/// Closed-form steady-state coupling integrals
/// `I∓ = η·γ·γ_c·G / (Γ_c·(1∓G)·[(1∓G)Γ + Γ_c])`.
pub fn coupling_integrals(opa: &OpaParams, mem: &MemoryCavityParams, eta: f64) -> Result<CouplingPair> {
    opa.validate()?;
    mem.validate()?;
    check_eta(eta)?;
    let g = opa.g;
    let prefactor = eta * opa.gamma_out * mem.gamma_c_in * g / mem.gamma_c_total;
    let term = |s: f64| prefactor / ((1.0 + s * g) * ((1.0 + s * g) * opa.gamma_total + mem.gamma_c_total));
    Ok(CouplingPair {
        i_minus: term(-1.0),
        i_plus: term(1.0),
    })
}

/// Loaded state of polarization pair 1 (`S_x, I_y`) or 2 (`S_y, I_x`).
///
/// Pair 2 carries the negative phase-sensitive correlation.
pub fn loaded_pair_state(
    opa: &OpaParams,
    mem: &MemoryCavityParams,
    eta: f64,
    pair_index: u8,
) -> Result<TwoModeSqueezedThermal> {
    let sign = match pair_index {
        1 => 1.0,
        2 => -1.0,
        other => return Err(invalid("pair_index", format!("{other} is not 1 or 2"))),
    };
    let c = coupling_integrals(opa, mem, eta)?;
    TwoModeSqueezedThermal::new(c.nbar(), sign * c.ntilde())
}

/// Both loaded pair states, `(pair 1, pair 2)`.
pub fn loaded_link_state(
    opa: &OpaParams,
    mem: &MemoryCavityParams,
    eta: f64,
) -> Result<(TwoModeSqueezedThermal, TwoModeSqueezedThermal)> {
    Ok((loaded_pair_state(opa, mem, eta, 1)?, loaded_pair_state(opa, mem, eta, 2)?))
}

/// Output of the quadrature route.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureLoading {
    pub nbar: f64,
    /// Magnitude of the phase-sensitive moment (pair 1 sign).
    pub ntilde: f64,
    /// Summed error estimate of the two outer integrals.
    pub error_estimate: f64,
}

/// Steady state is integrated over this many memory-cavity lifetimes; the weight
/// beyond it is below e⁻¹⁰⁰.
const STEADY_STATE_LIFETIMES: f64 = 100.0;

/// Direct numerical evaluation of the loaded moments.
///
/// Computes `2γ_c·(ηγ/Γ)·∬ e^{−Γ_c u}e^{−Γ_c u′} K(u − u′) du du′` over
/// `[0, T_c]²`, with `u` the time before the end of loading and `K` either
/// correlation function evaluated as printed. The inner integral is split at
/// the `u = u′` kink of `K`.
pub fn quadrature_loading_oracle(
    opa: &OpaParams,
    mem: &MemoryCavityParams,
    eta: f64,
    horizon: LoadingHorizon,
) -> Result<QuadratureLoading> {
    opa.validate()?;
    check_eta(eta)?;
    let horizon_s = match horizon {
        LoadingHorizon::SteadyState => STEADY_STATE_LIFETIMES / mem.gamma_c_total,
        LoadingHorizon::Finite(t) => {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid("t_load", format!("{t} must be positive and finite")));
            }
            t
        }
    };
    MemoryCavityParams { t_load: horizon_s, ..*mem }.validate()?;
    if opa.g == 0.0 || eta == 0.0 {
        return Ok(QuadratureLoading {
            nbar: 0.0,
            ntilde: 0.0,
            error_estimate: 0.0,
        });
    }

    let scale = 2.0 * mem.gamma_c_in * eta * opa.gamma_out / opa.gamma_total;
    let gc = mem.gamma_c_total;
    let inner_tol = Tolerance {
        abs: 0.0,
        rel: 1e-14,
        max_intervals: 500,
    };
    let outer_tol = Tolerance {
        abs: 0.0,
        rel: 1e-12,
        max_intervals: 500,
    };

    let double_integral = |kernel: &dyn Fn(f64) -> f64| -> Result<(f64, f64)> {
        let mut inner_failure = None;
        let outer = integrate(
            |u| {
                let inner = |v: f64| (-gc * v).exp() * kernel(u - v);
                let below = integrate(inner, 0.0, u, inner_tol);
                let above = integrate(inner, u, horizon_s, inner_tol);
                match (below, above) {
                    (Ok(b), Ok(a)) => (-gc * u).exp() * (b.value + a.value),
                    (Err(e), _) | (_, Err(e)) => {
                        inner_failure.get_or_insert(e);
                        0.0
                    }
                }
            },
            0.0,
            horizon_s,
            outer_tol,
        )?;
        if let Some(e) = inner_failure {
            return Err(e);
        }
        Ok((scale * outer.value, scale * outer.error_estimate))
    };

    let (nbar, err_n) = double_integral(&|tau| normal_correlation(opa, tau))?;
    let (ntilde, err_p) = double_integral(&|tau| {
        phase_sensitive_correlation(opa, tau, 1).expect("opa index 1 is valid")
    })?;
    Ok(QuadratureLoading {
        nbar,
        ntilde,
        error_estimate: err_n + err_p,
    })
}
