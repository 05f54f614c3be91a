//! Monte Carlo replay of the clocked memory-loading protocol.
//!
//! Each trial is one three-way categorical draw from the analytic event
//! probabilities. Trials are split into fixed batches of [`BATCH_TRIALS`];
//! batch `k` draws from a ChaCha8 generator seeded with the root seed on stream
//! `k`, so the merged counts do not depend on how batches are scheduled.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::metrics::LinkMetrics;

pub const BATCH_TRIALS: u64 = 1 << 20;

/// Timing of one memory-loading trial. Durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSchedule {
    pub slot_s: f64,
    pub load_s: f64,
    pub pump_s: f64,
    pub verify_s: f64,
    pub trial_period_s: f64,
}

impl Default for TrialSchedule {
    fn default() -> Self {
        Self {
            slot_s: 400e-9,
            load_s: 400e-9,
            pump_s: 100e-9,
            verify_s: 1e-6,
            trial_period_s: 2e-6,
        }
    }
}

impl TrialSchedule {
    /// Default phase durations with the period set to `1/trial_rate_hz`.
    pub fn for_rate(trial_rate_hz: f64) -> Result<Self> {
        if !(trial_rate_hz.is_finite() && trial_rate_hz > 0.0) {
            return Err(invalid("trial_rate_hz", format!("{trial_rate_hz} must be positive")));
        }
        let s = Self {
            trial_period_s: 1.0 / trial_rate_hz,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("slot_s", self.slot_s),
            ("load_s", self.load_s),
            ("pump_s", self.pump_s),
            ("verify_s", self.verify_s),
            ("trial_period_s", self.trial_period_s),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(name, format!("{v} must be positive")));
            }
        }
        let busy = self.slot_s + self.pump_s + self.verify_s;
        if self.trial_period_s < busy * (1.0 - 1e-12) {
            return Err(invalid(
                "trial_period_s",
                format!("{} is shorter than slot + pump + verify = {busy}", self.trial_period_s),
            ));
        }
        Ok(())
    }

    pub fn trial_rate_hz(&self) -> f64 {
        1.0 / self.trial_period_s
    }

    fn check_against(&self, metrics: &LinkMetrics) -> Result<()> {
        self.validate()?;
        let rate = self.trial_rate_hz();
        if (rate - metrics.trial_rate_hz).abs() > 1e-9 * metrics.trial_rate_hz.abs().max(rate) {
            return Err(invalid(
                "trial_period_s",
                format!("schedule rate {rate} Hz does not match metrics rate {} Hz", metrics.trial_rate_hz),
            ));
        }
        Ok(())
    }
}

/// Outcome tallies. Merging is plain addition.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct TrialCounts {
    pub erasure: u64,
    pub success: u64,
    pub error: u64,
}

impl TrialCounts {
    pub fn trials(&self) -> u64 {
        self.erasure + self.success + self.error
    }

    pub fn merge(self, other: Self) -> Self {
        Self {
            erasure: self.erasure + other.erasure,
            success: self.success + other.success,
            error: self.error + other.error,
        }
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McReport {
    pub trials: u64,
    pub counts: TrialCounts,
    pub throughput_hat: Estimate,
    /// `None` when no trial loaded both memories.
    pub fidelity_hat: Option<Estimate>,
    pub seed: u64,
}

impl McReport {
    pub fn from_counts(counts: TrialCounts, trial_rate_hz: f64, seed: u64) -> Self {
        let n = counts.trials() as f64;
        let p = counts.success as f64 / n;
        let throughput_hat = Estimate {
            value: trial_rate_hz * p,
            std_error: trial_rate_hz * (p * (1.0 - p) / n).sqrt(),
        };
        let loaded = counts.success + counts.error;
        let fidelity_hat = (loaded > 0).then(|| {
            let m = loaded as f64;
            let q = counts.error as f64 / m;
            Estimate {
                value: (counts.success as f64 + 0.5 * counts.error as f64) / m,
                std_error: 0.5 * (q * (1.0 - q) / m).sqrt(),
            }
        });
        Self {
            trials: counts.trials(),
            counts,
            throughput_hat,
            fidelity_hat,
            seed,
        }
    }
}

fn batch_rng(seed: u64, batch: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(batch);
    rng
}

fn run_batch(metrics: &LinkMetrics, trials: u64, seed: u64, batch: u64) -> TrialCounts {
    let mut rng = batch_rng(seed, batch);
    let success_edge = metrics.p_success;
    let error_edge = metrics.p_success + metrics.p_error;
    let mut counts = TrialCounts::default();
    for _ in 0..trials {
        let u: f64 = rng.random();
        if u < success_edge {
            counts.success += 1;
        } else if u < error_edge {
            counts.error += 1;
        } else {
            counts.erasure += 1;
        }
    }
    counts
}

fn check_metrics(metrics: &LinkMetrics) -> Result<()> {
    for (name, p) in [
        ("p_erasure", metrics.p_erasure),
        ("p_success", metrics.p_success),
        ("p_error", metrics.p_error),
    ] {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(name, format!("{p} not in [0, 1]")));
        }
    }
    let total = metrics.p_erasure + metrics.p_success + metrics.p_error;
    if (total - 1.0).abs() > 1e-9 {
        return Err(invalid("metrics", format!("probabilities sum to {total}")));
    }
    Ok(())
}

/// Counts for batches `first..first+batches` of a run with `trials` total trials.
pub fn run_batches(metrics: &LinkMetrics, trials: u64, seed: u64, first: u64, batches: u64) -> TrialCounts {
    let total_batches = trials.div_ceil(BATCH_TRIALS);
    (first..(first + batches).min(total_batches))
        .into_par_iter()
        .map(|b| {
            let size = BATCH_TRIALS.min(trials - b * BATCH_TRIALS);
            run_batch(metrics, size, seed, b)
        })
        .reduce(TrialCounts::default, TrialCounts::merge)
}

/// Simulates `trials` independent loading trials.
pub fn run_trials(metrics: &LinkMetrics, schedule: &TrialSchedule, trials: u64, seed: u64) -> Result<McReport> {
    if trials == 0 {
        return Err(invalid("trials", "at least one trial is required"));
    }
    check_metrics(metrics)?;
    schedule.check_against(metrics)?;
    let counts = run_batches(metrics, trials, seed, 0, trials.div_ceil(BATCH_TRIALS));
    Ok(McReport::from_counts(counts, schedule.trial_rate_hz(), seed))
}

/// Wall-clock statistics for sequentially loading a lattice, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeToLoad {
    pub replications: usize,
    pub mean_s: f64,
    pub std_error_s: f64,
    pub p50_s: f64,
    pub p95_s: f64,
}

/// Time to accumulate `pairs_needed` successes when every trial, whatever its
/// outcome, costs one trial period.
///
/// The number of trials up to each success is geometric, so it is drawn
/// directly instead of stepping through the failures.
pub fn time_to_load(
    metrics: &LinkMetrics,
    schedule: &TrialSchedule,
    pairs_needed: u64,
    replications: usize,
    seed: u64,
) -> Result<TimeToLoad> {
    if pairs_needed == 0 {
        return Err(invalid("pairs_needed", "at least one pair is required"));
    }
    if replications == 0 {
        return Err(invalid("replications", "at least one replication is required"));
    }
    if !(metrics.p_success > 0.0) {
        return Err(invalid("p_success", "a link that never succeeds never finishes loading"));
    }
    check_metrics(metrics)?;
    schedule.validate()?;
    let waits = Geometric::new(metrics.p_success).map_err(|e| invalid("p_success", e.to_string()))?;
    let period = schedule.trial_period_s;

    let mut times: Vec<f64> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = batch_rng(seed, rep as u64);
            let trials: u64 = (0..pairs_needed).map(|_| waits.sample(&mut rng) + 1).sum();
            trials as f64 * period
        })
        .collect();

    let n = times.len() as f64;
    let mean = times.iter().sum::<f64>() / n;
    let var = if times.len() > 1 {
        times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    times.sort_by(f64::total_cmp);
    let quantile = |q: f64| {
        let rank = ((q * n).ceil() as usize).clamp(1, times.len());
        times[rank - 1]
    };
    Ok(TimeToLoad {
        replications,
        mean_s: mean,
        std_error_s: (var / n).sqrt(),
        p50_s: quantile(0.5),
        p95_s: quantile(0.95),
    })
}
