//! The loaded two-mode squeezed thermal state and its number-basis algebra.
//!
//! A symmetric zero-mean Gaussian state of two modes is fixed by the per-mode
//! occupation `n̄ = ⟨a†a⟩ = ⟨b†b⟩` and the real phase-sensitive moment
//! `ñ = ⟨ab⟩`. Its anti-normally ordered characteristic function is
//! `exp[−(1+n̄)(|ζ_S|² + |ζ_I|²) + 2ñ·Re(ζ_S ζ_I)]`.
//!
//! Matrix elements come from expanding the Husimi function: with
//! `d = (1+n̄)² − ñ²`, `c = [n̄(1+n̄) − ñ²]/d` and `s = ñ/d`,
//!
//! ```text
//! ⟨n1 n2|ρ|m1 m2⟩ = √(n1! n2! m1! m2!)/d · Σ c^{p+q} s^{r+t} / (p! q! r! t!)
//! ```
//!
//! over `p+r = n1, q+r = n2, p+t = m1, q+t = m2`. [`fock_oracle`] rebuilds the
//! same matrix by squeezing a two-mode thermal state, as an independent check.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};

/// Relative slack on `ñ² ≤ n̄(n̄+1)` for states computed at the pure-state boundary.
const PHYSICAL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeSqueezedThermal {
    nbar: f64,
    ntilde_signed: f64,
}

impl TwoModeSqueezedThermal {
    pub fn new(nbar: f64, ntilde_signed: f64) -> Result<Self> {
        if !(nbar.is_finite() && nbar >= 0.0) {
            return Err(invalid("nbar", format!("{nbar} must be finite and >= 0")));
        }
        if !ntilde_signed.is_finite() {
            return Err(invalid("ntilde", "must be finite"));
        }
        let bound = nbar * (nbar + 1.0);
        if ntilde_signed * ntilde_signed > bound * (1.0 + PHYSICAL_SLACK) {
            return Err(invalid(
                "ntilde",
                format!("ñ² = {} exceeds n̄(n̄+1) = {bound}", ntilde_signed * ntilde_signed),
            ));
        }
        Ok(Self { nbar, ntilde_signed })
    }

    /// Two-mode squeezed vacuum with occupation `nbar`.
    pub fn pure(nbar: f64) -> Result<Self> {
        Self::new(nbar, (nbar * (nbar + 1.0)).sqrt())
    }

    pub fn nbar(&self) -> f64 {
        self.nbar
    }

    pub fn ntilde_signed(&self) -> f64 {
        self.ntilde_signed
    }

    /// Same occupation, opposite phase-sensitive sign.
    pub fn flipped(&self) -> Self {
        Self {
            nbar: self.nbar,
            ntilde_signed: -self.ntilde_signed,
        }
    }

    /// `d = (1+n̄)² − ñ²`.
    pub fn determinant(&self) -> f64 {
        (1.0 + self.nbar).powi(2) - self.ntilde_signed * self.ntilde_signed
    }

    /// `⟨00|ρ|00⟩ = 1/d`.
    pub fn vacuum_probability(&self) -> f64 {
        1.0 / self.determinant()
    }

    /// Vacuum probability of either mode alone; each marginal is thermal.
    pub fn mode_vacuum_probability(&self) -> f64 {
        1.0 / (1.0 + self.nbar)
    }

    /// Symplectic-style purity margin `n̄(n̄+1) − ñ²`.
    pub fn mixedness(&self) -> f64 {
        (self.nbar * (self.nbar + 1.0) - self.ntilde_signed * self.ntilde_signed).max(0.0)
    }
}

/// Anti-normally ordered characteristic function `tr[ρ e^{−ζ_S* a − ζ_I* b} e^{ζ_S a† + ζ_I b†}]`.
pub fn antinormal_characteristic(state: &TwoModeSqueezedThermal, zeta_s: Complex64, zeta_i: Complex64) -> f64 {
    (-(1.0 + state.nbar) * (zeta_s.norm_sqr() + zeta_i.norm_sqr())
        + 2.0 * state.ntilde_signed * (zeta_s * zeta_i).re)
        .exp()
}

/// Number-basis matrix elements from the Husimi expansion, with a log-factorial
/// table covering occupations up to `max_index`.
#[derive(Debug, Clone)]
pub struct FockExpansion {
    state: TwoModeSqueezedThermal,
    inv_d: f64,
    ln_c: f64,
    c_is_zero: bool,
    ln_abs_s: f64,
    s_negative: bool,
    s_is_zero: bool,
    ln_factorial: Vec<f64>,
}

impl FockExpansion {
    pub fn new(state: TwoModeSqueezedThermal, max_index: usize) -> Self {
        let d = state.determinant();
        let c = state.mixedness() / d;
        let s = state.ntilde_signed / d;
        let mut ln_factorial = Vec::with_capacity(max_index + 1);
        let mut acc = 0.0;
        ln_factorial.push(0.0);
        for k in 1..=max_index {
            acc += (k as f64).ln();
            ln_factorial.push(acc);
        }
        Self {
            state,
            inv_d: 1.0 / d,
            ln_c: c.ln(),
            c_is_zero: c == 0.0,
            ln_abs_s: s.abs().ln(),
            s_negative: s < 0.0,
            s_is_zero: s == 0.0,
            ln_factorial,
        }
    }

    pub fn state(&self) -> &TwoModeSqueezedThermal {
        &self.state
    }

    pub fn max_index(&self) -> usize {
        self.ln_factorial.len() - 1
    }

    fn ln_power(ln_base: f64, base_is_zero: bool, exponent: usize) -> Option<f64> {
        match (exponent, base_is_zero) {
            (0, _) => Some(0.0),
            (_, true) => None,
            (e, false) => Some(e as f64 * ln_base),
        }
    }

    /// `⟨n1 n2|ρ|m1 m2⟩`; zero unless `n1 − m1 = n2 − m2`.
    pub fn element(&self, n1: usize, n2: usize, m1: usize, m2: usize) -> Result<f64> {
        let limit = self.max_index();
        if let Some(&index) = [n1, n2, m1, m2].iter().find(|&&i| i > limit) {
            return Err(Error::IndexOutOfRange { index, limit });
        }
        if n1 as i64 - m1 as i64 != n2 as i64 - m2 as i64 {
            return Ok(0.0);
        }
        // ρ is real symmetric; evaluate one canonical orientation so both agree bit-for-bit.
        let (n1, n2, m1, m2) = if (m1, m2) < (n1, n2) { (m1, m2, n1, n2) } else { (n1, n2, m1, m2) };
        let lf = &self.ln_factorial;
        let ln_norm = 0.5 * (lf[n1] + lf[n2] + lf[m1] + lf[m2]);
        let r_min = n1.saturating_sub(m1);
        let r_max = n1.min(n2);
        let mut sum = 0.0;
        for r in r_min..=r_max {
            let (p, q) = (n1 - r, n2 - r);
            let t = m1 - p;
            let (Some(ln_cp), Some(ln_sp)) = (
                Self::ln_power(self.ln_c, self.c_is_zero, p + q),
                Self::ln_power(self.ln_abs_s, self.s_is_zero, r + t),
            ) else {
                continue;
            };
            let magnitude = (ln_norm + ln_cp + ln_sp - lf[p] - lf[q] - lf[r] - lf[t]).exp();
            let negative = self.s_negative && (r + t) % 2 == 1;
            sum += if negative { -magnitude } else { magnitude };
        }
        Ok(sum * self.inv_d)
    }
}

/// Largest occupation index accepted by the one-shot [`fock_element`].
pub const MAX_FOCK_INDEX: usize = 170;

/// One-shot `⟨n1 n2|ρ|m1 m2⟩`. Indices above [`MAX_FOCK_INDEX`] are rejected.
pub fn fock_element(state: &TwoModeSqueezedThermal, n1: usize, n2: usize, m1: usize, m2: usize) -> Result<f64> {
    let top = n1.max(n2).max(m1).max(m2);
    if top > MAX_FOCK_INDEX {
        return Err(Error::IndexOutOfRange {
            index: top,
            limit: MAX_FOCK_INDEX,
        });
    }
    FockExpansion::new(*state, top).element(n1, n2, m1, m2)
}

/// Two-mode density matrix cropped to `n ≤ n_max` per mode.
///
/// Basis index of `|n1, n2⟩` is `n1·(n_max+1) + n2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedDensityMatrix {
    pub n_max: usize,
    pub elements: Vec<f64>,
    /// `1 − tr ρ` of the cropped matrix.
    pub trace_deficit: f64,
}

impl TruncatedDensityMatrix {
    pub fn levels(&self) -> usize {
        self.n_max + 1
    }

    pub fn dim(&self) -> usize {
        self.levels() * self.levels()
    }

    fn index(&self, n1: usize, n2: usize) -> usize {
        n1 * self.levels() + n2
    }

    /// `⟨n1 n2|ρ|m1 m2⟩`, or 0 outside the cutoff.
    pub fn get(&self, n1: usize, n2: usize, m1: usize, m2: usize) -> f64 {
        if [n1, n2, m1, m2].iter().any(|&i| i > self.n_max) {
            return 0.0;
        }
        self.elements[self.index(n1, n2) * self.dim() + self.index(m1, m2)]
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.elements[i * self.dim() + i]).sum()
    }

    /// Probability that the first mode holds `n` photons, `Σ_k ⟨n k|ρ|n k⟩`.
    pub fn first_mode_population(&self, n: usize) -> f64 {
        (0..=self.n_max).map(|k| self.get(n, k, n, k)).sum()
    }

    pub fn second_mode_population(&self, n: usize) -> f64 {
        (0..=self.n_max).map(|k| self.get(k, n, k, n)).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..dim {
            for j in (i + 1)..dim {
                worst = worst.max((self.elements[i * dim + j] - self.elements[j * dim + i]).abs());
            }
        }
        worst
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.dim(), self.dim(), &self.elements);
        SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest `|ρ − ρ_closed|` over every retained element.
    pub fn max_deviation_from(&self, expansion: &FockExpansion) -> Result<f64> {
        let l = self.levels();
        let mut worst: f64 = 0.0;
        for n1 in 0..l {
            for n2 in 0..l {
                for m1 in 0..l {
                    for m2 in 0..l {
                        let closed = expansion.element(n1, n2, m1, m2)?;
                        worst = worst.max((self.get(n1, n2, m1, m2) - closed).abs());
                    }
                }
            }
        }
        Ok(worst)
    }

    /// `tr[ρ e^{−ζ_S* a − ζ_I* b} e^{ζ_S a† + ζ_I b†}]` from the stored elements.
    ///
    /// Uses `e^{−ζ*a}e^{ζa†} = e^{−|ζ|²} e^{ζa†}e^{−ζ*a}`, whose number-basis
    /// elements are finite sums.
    pub fn antinormal_characteristic(&self, zeta_s: Complex64, zeta_i: Complex64) -> Complex64 {
        let xs = normal_ordered_displacement(zeta_s, self.n_max);
        let xi = normal_ordered_displacement(zeta_i, self.n_max);
        let l = self.levels();
        let mut acc = Complex64::new(0.0, 0.0);
        for n1 in 0..l {
            for n2 in 0..l {
                for m1 in 0..l {
                    for m2 in 0..l {
                        let rho = self.get(n1, n2, m1, m2);
                        if rho != 0.0 {
                            acc += xs[m1 * l + n1] * xi[m2 * l + n2] * rho;
                        }
                    }
                }
            }
        }
        acc * (-(zeta_s.norm_sqr() + zeta_i.norm_sqr())).exp()
    }
}

/// `⟨m|e^{ζa†}e^{−ζ*a}|n⟩` for `m, n ≤ n_max`, row-major in `m`.
fn normal_ordered_displacement(zeta: Complex64, n_max: usize) -> Vec<Complex64> {
    let l = n_max + 1;
    let mut factorial = vec![1.0f64; l];
    for k in 1..l {
        factorial[k] = factorial[k - 1] * k as f64;
    }
    let minus_conj = -zeta.conj();
    let mut out = vec![Complex64::new(0.0, 0.0); l * l];
    for m in 0..l {
        for n in 0..l {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..=m.min(n) {
                let coeff = (factorial[m] * factorial[n]).sqrt() / (factorial[j] * factorial[m - j] * factorial[n - j]);
                acc += zeta.powu((m - j) as u32) * minus_conj.powu((n - j) as u32) * coeff;
            }
            out[m * l + n] = acc;
        }
    }
    out
}

/// Thermal occupation and squeeze parameter with `ρ = S(r)(ρ_th ⊗ ρ_th)S(r)†`,
/// `S(r) = exp[r(a†b† − ab)]`.
pub fn squeezed_thermal_decomposition(state: &TwoModeSqueezedThermal) -> (f64, f64) {
    let half_sum = state.nbar + 0.5;
    let thermal_half = (half_sum * half_sum - state.ntilde_signed * state.ntilde_signed)
        .max(0.25)
        .sqrt();
    let n_th = (thermal_half - 0.5).max(0.0);
    let r = 0.5 * (state.ntilde_signed / half_sum).atanh();
    (n_th, r)
}

/// Builds ρ by squeezing a symmetric two-mode thermal state in a number basis
/// padded by a guard band, then crops to `n_max`.
pub fn fock_oracle(state: &TwoModeSqueezedThermal, n_max: usize) -> Result<TruncatedDensityMatrix> {
    if n_max < 2 {
        return Err(invalid("n_max", "oracle cutoff must be at least 2"));
    }
    let (n_th, r) = squeezed_thermal_decomposition(state);
    let big = n_max + n_max.max(24);
    let thermal = |n: usize| {
        if n_th == 0.0 {
            if n == 0 {
                1.0
            } else {
                0.0
            }
        } else {
            (n as f64 * (n_th / (1.0 + n_th)).ln()).exp() / (1.0 + n_th)
        }
    };

    let levels = n_max + 1;
    let dim = levels * levels;
    let mut elements = vec![0.0; dim * dim];

    // S(r) preserves n1 − n2; each block is the chain |k+Δ, k⟩ (or |k, k−Δ⟩).
    for delta in -(big as i64)..=(big as i64) {
        let start = (0i64.max(delta) as usize, 0i64.max(-delta) as usize);
        let len = big + 1 - delta.unsigned_abs() as usize;
        if len == 0 {
            continue;
        }
        let state_at = |k: usize| (start.0 + k, start.1 + k);
        let mut generator = DMatrix::<f64>::zeros(len, len);
        for k in 0..len - 1 {
            let (a, b) = state_at(k);
            let up = r * (((a + 1) * (b + 1)) as f64).sqrt();
            generator[(k + 1, k)] = up;
            generator[(k, k + 1)] = -up;
        }
        let unitary = generator.exp();
        let populations: Vec<f64> = (0..len)
            .map(|k| {
                let (a, b) = state_at(k);
                thermal(a) * thermal(b)
            })
            .collect();
        for i in 0..len {
            let (a1, b1) = state_at(i);
            if a1 > n_max || b1 > n_max {
                continue;
            }
            for j in 0..len {
                let (a2, b2) = state_at(j);
                if a2 > n_max || b2 > n_max {
                    continue;
                }
                let value: f64 = (0..len)
                    .map(|k| unitary[(i, k)] * populations[k] * unitary[(j, k)])
                    .sum();
                elements[(a1 * levels + b1) * dim + a2 * levels + b2] = value;
            }
        }
    }

    let mut matrix = TruncatedDensityMatrix {
        n_max,
        elements,
        trace_deficit: 0.0,
    };
    matrix.trace_deficit = 1.0 - matrix.trace();
    Ok(matrix)
}

/// Largest cutoff tried by [`fock_oracle_converged`].
pub const MAX_ORACLE_CUTOFF: usize = 48;

/// Runs [`fock_oracle`] from `n_max = 12`, doubling until the trace deficit is
/// below `target_deficit`.
pub fn fock_oracle_converged(state: &TwoModeSqueezedThermal, target_deficit: f64) -> Result<TruncatedDensityMatrix> {
    let mut n_max = 12;
    loop {
        let matrix = fock_oracle(state, n_max)?;
        if matrix.trace_deficit < target_deficit {
            return Ok(matrix);
        }
        if n_max >= MAX_ORACLE_CUTOFF {
            return Err(Error::Truncation {
                n_max,
                deficit: matrix.trace_deficit,
                target: target_deficit,
            });
        }
        n_max = (2 * n_max).min(MAX_ORACLE_CUTOFF);
    }
}
