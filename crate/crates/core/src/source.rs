//! Dual-OPA source statistics.
//!
//! Two below-threshold OPAs pumped in anti-phase emit signal/idler beams whose
//! zero-mean Gaussian state is fixed by a normally-ordered and a phase-sensitive
//! correlation function. All rates are in s⁻¹; converting a linewidth quoted in
//! Hz is left to the caller (multiply by 2π for an angular rate).

use crate::error::{invalid, Result};

/// Pump level and cavity rates of one OPA (both OPAs are identical).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpaParams {
    /// Normalized pump amplitude; `g²` is the pump power over oscillation threshold.
    pub g: f64,
    /// OPA cavity linewidth Γ, s⁻¹.
    pub gamma_total: f64,
    /// Output-coupling rate γ, s⁻¹.
    pub gamma_out: f64,
}

impl OpaParams {
    pub fn new(g: f64, gamma_total: f64, gamma_out: f64) -> Result<Self> {
        let p = Self {
            g,
            gamma_total,
            gamma_out,
        };
        p.validate()?;
        Ok(p)
    }

    /// Builds the parameters from the pump power fraction `G²` and an output-coupling ratio γ/Γ.
    pub fn from_pump_fraction(pump_fraction: f64, gamma_total: f64, out_coupling_ratio: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&pump_fraction) {
            return Err(invalid("pump_fraction", format!("{pump_fraction} not in [0, 1)")));
        }
        Self::new(pump_fraction.sqrt(), gamma_total, out_coupling_ratio * gamma_total)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.g) {
            return Err(invalid("g", format!("{} not in [0, 1) (below threshold)", self.g)));
        }
        if !(self.gamma_total.is_finite() && self.gamma_total > 0.0) {
            return Err(invalid("gamma_total", format!("{} must be positive", self.gamma_total)));
        }
        if !(self.gamma_out > 0.0 && self.gamma_out <= self.gamma_total) {
            return Err(invalid(
                "gamma_out",
                format!("{} must lie in (0, gamma_total = {}]", self.gamma_out, self.gamma_total),
            ));
        }
        Ok(())
    }

    /// Pair of decay terms `(e^{−(1−G)Γ|τ|}/(1−G), e^{−(1+G)Γ|τ|}/(1+G))`.
    fn decay_terms(&self, tau: f64) -> (f64, f64) {
        let g = self.g;
        let x = self.gamma_total * tau.abs();
        ((-(1.0 - g) * x).exp() / (1.0 - g), (-(1.0 + g) * x).exp() / (1.0 + g))
    }
}

/// Normally-ordered correlation `⟨A†(t+τ)A(t)⟩` of either output, s⁻¹.
pub fn normal_correlation(params: &OpaParams, tau: f64) -> f64 {
    let (slow, fast) = params.decay_terms(tau);
    0.5 * params.g * params.gamma_total * (slow - fast)
}

/// Phase-sensitive correlation `⟨A_S(t+τ)A_I(t)⟩` of OPA `opa_index` (1 or 2), s⁻¹.
///
/// The two OPAs are pumped in anti-phase, so OPA 2 carries the opposite sign.
pub fn phase_sensitive_correlation(params: &OpaParams, tau: f64, opa_index: u8) -> Result<f64> {
    let sign = match opa_index {
        1 => 1.0,
        2 => -1.0,
        other => return Err(invalid("opa_index", format!("{other} is not 1 or 2"))),
    };
    let (slow, fast) = params.decay_terms(tau);
    Ok(sign * 0.5 * params.g * params.gamma_total * (slow + fast))
}

/// Mean photon number per mode at detuning `delta_omega` (rad/s) from the carriers.
pub fn spectral_photon_number(params: &OpaParams, delta_omega: f64) -> f64 {
    let g2 = params.g * params.g;
    let x2 = (delta_omega / params.gamma_total).powi(2);
    4.0 * g2 / ((1.0 - g2 - x2).powi(2) + 4.0 * x2)
}

/// Number-ket amplitudes of the lossless joint state at one detuning.
///
/// Each polarization pair is a two-mode squeezed vacuum
/// `Σₙ cₙ |n⟩|n⟩` with `cₙ = √(N̄ⁿ/(N̄+1)ⁿ⁺¹)`; the second pair carries `(−1)ⁿ`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointModeState {
    pub nbar_spectral: f64,
    /// Coefficients of `|n⟩_{S_x}|n⟩_{I_y}`, `n = 0..=n_max`.
    pub pair1: Vec<f64>,
    /// Coefficients of `|n⟩_{S_y}|n⟩_{I_x}`, `n = 0..=n_max`.
    pub pair2: Vec<f64>,
}

impl JointModeState {
    pub fn n_max(&self) -> usize {
        self.pair1.len() - 1
    }

    /// Probability weight kept by the truncation, `Σₙ cₙ²` for one pair.
    pub fn pair_norm(&self) -> f64 {
        self.pair1.iter().map(|c| c * c).sum()
    }

    /// Overlap `|⟨ψ_singlet|ψ⟩|²` with `(|1100⟩ − |0011⟩)/√2` in the
    /// `(S_x, I_y, S_y, I_x)` ordering.
    pub fn singlet_projection(&self) -> f64 {
        let amp = |pair: &[f64], n: usize| pair.get(n).copied().unwrap_or(0.0);
        let a_1100 = amp(&self.pair1, 1) * amp(&self.pair2, 0);
        let a_0011 = amp(&self.pair1, 0) * amp(&self.pair2, 1);
        let overlap = (a_1100 - a_0011) / std::f64::consts::SQRT_2;
        overlap * overlap
    }
}

/// Truncated number-ket expansion of the lossless two-pair state.
pub fn joint_state(nbar_spectral: f64, n_max: usize) -> Result<JointModeState> {
    if !(nbar_spectral >= 0.0 && nbar_spectral.is_finite()) {
        return Err(invalid("nbar_spectral", format!("{nbar_spectral} must be finite and >= 0")));
    }
    if n_max < 1 {
        return Err(invalid("n_max", "truncation order must be at least 1"));
    }
    let ratio = nbar_spectral / (nbar_spectral + 1.0);
    let c0 = (1.0 / (nbar_spectral + 1.0)).sqrt();
    let pair1: Vec<f64> = (0..=n_max).map(|n| c0 * ratio.sqrt().powi(n as i32)).collect();
    let pair2 = pair1
        .iter()
        .enumerate()
        .map(|(n, c)| if n % 2 == 0 { *c } else { -c })
        .collect();
    Ok(JointModeState {
        nbar_spectral,
        pair1,
        pair2,
    })
}
