//! Erasure, success and error probabilities, loss-limited fidelity and
//! throughput for one operating point.
//!
//! The link state factors into pair 1 `(S_x, I_y)` with `+ñ` and pair 2
//! `(S_y, I_x)` with `−ñ`. The target is the singlet
//! `(|1⟩_{S_x}|1⟩_{I_y}|0⟩_{S_y}|0⟩_{I_x} − |0⟩_{S_x}|0⟩_{I_y}|1⟩_{S_y}|1⟩_{I_x})/√2`.

use rayon::prelude::*;

use crate::channel::{arm_transmissivity, ChannelParams};
use crate::error::{invalid, Error, Result};
use crate::gaussian_pair::{fock_element, TruncatedDensityMatrix, TwoModeSqueezedThermal};
use crate::loading::{loaded_link_state, MemoryCavityParams};
use crate::source::OpaParams;

/// Singlet components as `(amplitude, [S_x, I_y], [S_y, I_x])` occupations.
/// Every contraction in this module reads the ket from here.
pub const SINGLET_KET: [(f64, [usize; 2], [usize; 2]); 2] = [
    (std::f64::consts::FRAC_1_SQRT_2, [1, 1], [0, 0]),
    (-std::f64::consts::FRAC_1_SQRT_2, [0, 0], [1, 1]),
];

/// Floating residue tolerated below zero in the complement `P_error`.
pub const ERROR_CLAMP: f64 = 1e-12;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkMetrics {
    pub p_erasure: f64,
    pub p_success: f64,
    pub p_error: f64,
    pub fidelity_max: f64,
    pub trial_rate_hz: f64,
    pub throughput_per_s: f64,
}

impl LinkMetrics {
    /// Assembles metrics from the erasure and success probabilities.
    pub fn from_probabilities(p_erasure: f64, p_success: f64, trial_rate_hz: f64) -> Result<Self> {
        let p_error = error_probability(p_erasure, p_success)?;
        let fidelity = fidelity_max(p_success, p_error)?;
        Ok(Self {
            p_erasure,
            p_success,
            p_error,
            fidelity_max: fidelity,
            trial_rate_hz,
            throughput_per_s: trial_rate_hz * p_success,
        })
    }
}

/// A complete link configuration. `channel.length_km` is the per-arm length L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub opa: OpaParams,
    pub mem: MemoryCavityParams,
    pub channel: ChannelParams,
    pub trial_rate_hz: f64,
}

impl OperatingPoint {
    pub fn validate(&self) -> Result<()> {
        self.opa.validate()?;
        self.mem.validate()?;
        self.channel.validate()?;
        if !(self.trial_rate_hz.is_finite() && self.trial_rate_hz >= 0.0) {
            return Err(invalid("trial_rate_hz", format!("{} must be finite and >= 0", self.trial_rate_hz)));
        }
        Ok(())
    }

    /// Same point with per-arm length set to half of `total_path_km`.
    pub fn at_total_path(&self, total_path_km: f64) -> Self {
        Self {
            channel: self.channel.with_length(0.5 * total_path_km),
            ..*self
        }
    }
}

fn check_symmetric(pair1: &TwoModeSqueezedThermal, pair2: &TwoModeSqueezedThermal) -> Result<()> {
    let close = |a: f64, b: f64| (a - b).abs() <= SYMMETRY_TOL * a.abs().max(b.abs()).max(1e-300);
    if !close(pair1.nbar(), pair2.nbar()) || !close(pair1.ntilde_signed().abs(), pair2.ntilde_signed().abs()) {
        return Err(Error::InconsistentPairs(format!(
            "asymmetric pairs ({}, {}) and ({}, {})",
            pair1.nbar(),
            pair1.ntilde_signed(),
            pair2.nbar(),
            pair2.ntilde_signed()
        )));
    }
    Ok(())
}

/// Probability that at least one memory stays empty.
///
/// `P(S_x=0)P(S_y=0) + P(I_x=0)P(I_y=0) − P(S_x I_y=00)P(S_y I_x=00)`.
pub fn erasure_probability(pair1: &TwoModeSqueezedThermal, pair2: &TwoModeSqueezedThermal) -> Result<f64> {
    check_symmetric(pair1, pair2)?;
    let signal_empty = pair1.mode_vacuum_probability() * pair2.mode_vacuum_probability();
    let idler_empty = pair1.mode_vacuum_probability() * pair2.mode_vacuum_probability();
    let both_empty = fock_element(pair1, 0, 0, 0, 0)? * fock_element(pair2, 0, 0, 0, 0)?;
    Ok(signal_empty + idler_empty - both_empty)
}

/// Singlet projection `⟨ψ|ρ₁ ⊗ ρ₂|ψ⟩`.
pub fn success_probability(pair1: &TwoModeSqueezedThermal, pair2: &TwoModeSqueezedThermal) -> Result<f64> {
    check_symmetric(pair1, pair2)?;
    if pair1.ntilde_signed() * pair2.ntilde_signed() > 0.0 {
        return Err(Error::InconsistentPairs(
            "pairs carry the same phase-sensitive sign; that is not the singlet source".into(),
        ));
    }
    let mut total = 0.0;
    for &(amp_a, p1_a, p2_a) in &SINGLET_KET {
        for &(amp_b, p1_b, p2_b) in &SINGLET_KET {
            let rho1 = fock_element(pair1, p1_a[0], p1_a[1], p1_b[0], p1_b[1])?;
            let rho2 = fock_element(pair2, p2_a[0], p2_a[1], p2_b[0], p2_b[1])?;
            total += amp_a * amp_b * rho1 * rho2;
        }
    }
    Ok(total)
}

/// `1 − P_erasure − P_success`, with residue above `−1e−12` clamped to zero.
pub fn error_probability(p_erasure: f64, p_success: f64) -> Result<f64> {
    for (name, p) in [("p_erasure", p_erasure), ("p_success", p_success)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(name, format!("{p} not in [0, 1]")));
        }
    }
    let p = 1.0 - p_erasure - p_success;
    if p >= 0.0 {
        Ok(p)
    } else if p >= -ERROR_CLAMP {
        Ok(0.0)
    } else {
        Err(Error::InconsistentProbabilities(format!(
            "P_error = {p:e} < 0 (P_erasure = {p_erasure}, P_success = {p_success})"
        )))
    }
}

/// `F_max = 1 − P_error / [2(P_success + P_error)]`.
pub fn fidelity_max(p_success: f64, p_error: f64) -> Result<f64> {
    let loaded = p_success + p_error;
    if !(loaded > 0.0) {
        return Err(Error::InconsistentProbabilities(
            "no loaded events (P_success + P_error = 0); fidelity undefined".into(),
        ));
    }
    Ok(1.0 - p_error / (2.0 * loaded))
}

/// Full pipeline details for one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub eta_arm: f64,
    pub pair1: TwoModeSqueezedThermal,
    pub pair2: TwoModeSqueezedThermal,
    pub metrics: LinkMetrics,
}

pub fn evaluate_detailed(point: &OperatingPoint) -> Result<Evaluation> {
    point.validate()?;
    let eta_arm = arm_transmissivity(&point.channel);
    let (pair1, pair2) = loaded_link_state(&point.opa, &point.mem, eta_arm)?;
    let p_erasure = erasure_probability(&pair1, &pair2)?;
    let p_success = success_probability(&pair1, &pair2)?;
    let metrics = LinkMetrics::from_probabilities(p_erasure, p_success, point.trial_rate_hz)?;
    Ok(Evaluation {
        eta_arm,
        pair1,
        pair2,
        metrics,
    })
}

/// Channel → loading → pair states → probabilities → fidelity and throughput.
pub fn evaluate(point: &OperatingPoint) -> Result<LinkMetrics> {
    evaluate_detailed(point).map(|e| e.metrics)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub total_path_km: f64,
    pub evaluation: Evaluation,
}

/// Evaluates each total path length `2L` (ascending, non-negative), in input order.
pub fn sweep_path_length(point: &OperatingPoint, lengths_km: &[f64]) -> Result<Vec<SweepPoint>> {
    if let Some(bad) = lengths_km.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
        return Err(invalid("lengths_km", format!("{bad} must be finite and >= 0")));
    }
    if lengths_km.windows(2).any(|w| w[1] < w[0]) {
        return Err(invalid("lengths_km", "lengths must be ascending"));
    }
    lengths_km
        .par_iter()
        .map(|&total| {
            Ok(SweepPoint {
                total_path_km: total,
                evaluation: evaluate_detailed(&point.at_total_path(total))?,
            })
        })
        .collect()
}

/// The three probabilities recomputed by contracting density matrices of the
/// two pairs: marginal vacuum populations and the singlet projection.
pub fn probabilities_from_matrices(
    rho1: &TruncatedDensityMatrix,
    rho2: &TruncatedDensityMatrix,
) -> (f64, f64, f64) {
    let sx0 = rho1.first_mode_population(0);
    let iy0 = rho1.second_mode_population(0);
    let sy0 = rho2.first_mode_population(0);
    let ix0 = rho2.second_mode_population(0);
    let p_erasure = sx0 * sy0 + ix0 * iy0 - rho1.get(0, 0, 0, 0) * rho2.get(0, 0, 0, 0);
    let mut p_success = 0.0;
    for &(amp_a, p1_a, p2_a) in &SINGLET_KET {
        for &(amp_b, p1_b, p2_b) in &SINGLET_KET {
            p_success += amp_a
                * amp_b
                * rho1.get(p1_a[0], p1_a[1], p1_b[0], p1_b[1])
                * rho2.get(p2_a[0], p2_a[1], p2_b[0], p2_b[1]);
        }
    }
    (p_erasure, p_success, 1.0 - p_erasure - p_success)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian_pair::fock_oracle;

    fn pairs(nbar: f64, ntilde: f64) -> (TwoModeSqueezedThermal, TwoModeSqueezedThermal) {
        let p = TwoModeSqueezedThermal::new(nbar, ntilde).unwrap();
        (p, p.flipped())
    }

    fn reference_point() -> OperatingPoint {
        OperatingPoint {
            opa: OpaParams::from_pump_fraction(0.01, 1.0, 1.0).unwrap(),
            mem: MemoryCavityParams::new(0.5, 0.5, 1.0).unwrap(),
            channel: ChannelParams::new(0.0, 0.2, 5.0).unwrap(),
            trial_rate_hz: 5e5,
        }
    }

    #[test]
    fn vacuum_is_always_erasure() {
        let (a, b) = pairs(0.0, 0.0);
        assert_eq!(erasure_probability(&a, &b).unwrap(), 1.0);
        assert_eq!(success_probability(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn reference_probabilities() {
        let (a, b) = pairs(0.002254689754689756, 0.01361832611832612);
        let pe = erasure_probability(&a, &b).unwrap();
        assert!((pe - 0.9996139).abs() < 2e-7, "{pe}");
        let ps = success_probability(&a, &b).unwrap();
        assert!((ps - 3.68793e-4).abs() < 1e-9, "{ps}");
        let d = a.determinant();
        let c = a.mixedness() / d;
        let closed = (c * c + 2.0 * a.ntilde_signed().powi(2) / (d * d)) / (d * d);
        assert!((ps - closed).abs() < 1e-18);
        assert!((pe - (2.0 / (1.0 + a.nbar()).powi(2) - 1.0 / (d * d))).abs() < 1e-15);
    }

    #[test]
    fn zero_km_erasure() {
        // 2/(1+n̄)² − 1/d² at these inputs is 0.99623686
        let (a, b) = pairs(0.0071297, 0.0430645);
        let pe = erasure_probability(&a, &b).unwrap();
        assert!((pe - 0.9962369).abs() < 1e-7, "{pe}");
    }

    #[test]
    fn pair_consistency_checks() {
        let (a, b) = pairs(0.01, 0.05);
        assert!(matches!(success_probability(&a, &a), Err(Error::InconsistentPairs(_))));
        let other = TwoModeSqueezedThermal::new(0.02, -0.05).unwrap();
        assert!(erasure_probability(&a, &other).is_err());
        assert!(success_probability(&a, &b).is_ok());
    }

    #[test]
    fn pure_limit_success() {
        for nbar in [1e-3, 0.01, 0.1, 0.5] {
            let (a, b) = pairs(nbar, (nbar * (nbar + 1.0)).sqrt());
            let ps = success_probability(&a, &b).unwrap();
            assert!((ps - 2.0 * nbar / (1.0 + nbar).powi(3)).abs() < 1e-12);
        }
    }

    #[test]
    fn error_complement() {
        assert_eq!(error_probability(1.0, 0.0).unwrap(), 0.0);
        assert!((error_probability(0.9996139, 3.68793e-4).unwrap() - 1.730e-5).abs() < 1e-8);
        assert!((error_probability(0.9962337, 3.5569e-3).unwrap() - 2.094e-4).abs() < 1e-9);
        assert_eq!(error_probability(1.0, 5e-13).unwrap(), 0.0);
        assert!(matches!(error_probability(1.0, 1e-9), Err(Error::InconsistentProbabilities(_))));
        assert!(error_probability(1.2, 0.0).is_err());
    }

    #[test]
    fn fidelity_examples() {
        assert_eq!(fidelity_max(0.3, 0.0).unwrap(), 1.0);
        assert!((fidelity_max(3.68793e-4, 1.730e-5).unwrap() - 0.977596).abs() < 1e-6);
        assert_eq!(fidelity_max(0.0, 0.2).unwrap(), 0.5);
        assert!(fidelity_max(0.0, 0.0).is_err());
    }

    #[test]
    fn reference_pipeline() {
        let point = reference_point();
        let far = evaluate(&point.at_total_path(50.0)).unwrap();
        assert!((far.throughput_per_s - 184.4).abs() < 0.05, "{}", far.throughput_per_s);
        assert!((far.fidelity_max - 0.977416).abs() < 1e-6, "{}", far.fidelity_max);
        assert_eq!(far.throughput_per_s, far.trial_rate_hz * far.p_success);

        let near = evaluate(&point.at_total_path(0.0)).unwrap();
        assert!((near.throughput_per_s - 1778.49).abs() < 0.01, "{}", near.throughput_per_s);
        assert!((near.fidelity_max - 0.972599).abs() < 1e-6, "{}", near.fidelity_max);

        let idle = evaluate(&OperatingPoint {
            trial_rate_hz: 0.0,
            ..point
        })
        .unwrap();
        assert_eq!(idle.throughput_per_s, 0.0);
    }

    #[test]
    fn rate_rescaling_leaves_metrics_unchanged() {
        let point = reference_point().at_total_path(30.0);
        let scaled = OperatingPoint {
            opa: OpaParams::new(0.1, 1.7e8, 1.7e8).unwrap(),
            mem: MemoryCavityParams::new(0.85e8, 0.85e8, 1.0).unwrap(),
            ..point
        };
        let a = evaluate(&point).unwrap();
        let b = evaluate(&scaled).unwrap();
        for (x, y) in [
            (a.p_erasure, b.p_erasure),
            (a.p_success, b.p_success),
            (a.p_error, b.p_error),
            (a.fidelity_max, b.fidelity_max),
            (a.throughput_per_s, b.throughput_per_s),
        ] {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300), "{x} vs {y}");
        }
    }

    #[test]
    fn sweep_shapes() {
        let point = reference_point();
        assert!(sweep_path_length(&point, &[]).unwrap().is_empty());
        let rows = sweep_path_length(&point, &[0.0, 50.0]).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].total_path_km, 0.0);
        assert!((rows[1].evaluation.metrics.throughput_per_s - 184.4).abs() < 0.05);
        let same = sweep_path_length(&point, &[50.0, 50.0]).unwrap();
        assert_eq!(same[0].evaluation, same[1].evaluation);
        assert!(sweep_path_length(&point, &[10.0, 5.0]).is_err());
        assert!(sweep_path_length(&point, &[-1.0]).is_err());
    }

    #[test]
    fn sweep_throughput_decreases() {
        let lengths: Vec<f64> = (0..=100).map(f64::from).collect();
        let rows = sweep_path_length(&reference_point(), &lengths).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].evaluation.metrics.throughput_per_s < w[0].evaluation.metrics.throughput_per_s);
        }
        for r in &rows {
            let f = r.evaluation.metrics.fidelity_max;
            assert!((0.5..=1.0).contains(&f));
        }
    }

    #[test]
    fn contraction_matches_closed_form() {
        let (a, b) = pairs(0.002254689754689756, 0.01361832611832612);
        let rho1 = fock_oracle(&a, 12).unwrap();
        let rho2 = fock_oracle(&b, 12).unwrap();
        let (pe, ps, perr) = probabilities_from_matrices(&rho1, &rho2);
        let pe_closed = erasure_probability(&a, &b).unwrap();
        let ps_closed = success_probability(&a, &b).unwrap();
        assert!((pe - pe_closed).abs() < 1e-10);
        assert!((ps - ps_closed).abs() < 1e-10);
        assert!((perr - error_probability(pe_closed, ps_closed).unwrap()).abs() < 1e-10);
    }
}
