//! Exit criteria for the link model. Each criterion prints one PASS/FAIL line;
//! the process fails if any criterion fails.

use std::fs;
use std::time::{Duration, Instant};

use entlink::checks::{fock_check, loading_grid, quadrature_check};
use entlink::cli::{cmd_sweep, parse_csv_row, sweep_lengths};
use entlink::config::RunConfig;
use entlink::gaussian_pair::{fock_oracle, TwoModeSqueezedThermal};
use entlink::loading::loaded_link_state;
use entlink::metrics::{
    erasure_probability, evaluate_detailed, probabilities_from_matrices, success_probability, sweep_path_length,
    LinkMetrics,
};
use entlink::protocol_mc::run_trials;
use entlink::quadrature::{integrate_real_line, Tolerance};
use entlink::source::{joint_state, normal_correlation, spectral_photon_number, OpaParams};

// Reference operating point at 2L = 50 km.
const THROUGHPUT_REF: f64 = 184.4;
const THROUGHPUT_TOL: f64 = 0.5;
const FIDELITY_REF: f64 = 0.9776;
const FIDELITY_TOL: f64 = 0.0005;
const QUOTED_THROUGHPUT: f64 = 200.0;
const QUOTED_THROUGHPUT_BAND: f64 = 0.25;
const QUOTED_FIDELITY: f64 = 0.975;
const QUOTED_FIDELITY_BAND: f64 = 0.005;

const QUADRATURE_REL_TOL: f64 = 1e-8;
const FOCK_ABS_TOL: f64 = 1e-10;
const PURE_STATE_TOL: f64 = 1e-12;
const FLUX_REL_TOL: f64 = 1e-6;
const SIMPLEX_TOL: f64 = 1e-12;

const MC_TRIALS: u64 = 10_000_000;
const MC_SEED: u64 = 20_240_501;
const MC_SUCCESS_BAND: (u64, u64) = (3506, 3870);
const MC_FIDELITY_SIGMAS: f64 = 4.0;

const SWEEP_FIDELITY_BAND: (f64, f64) = (0.970, 0.985);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = fn() -> Outcome;

fn reference_metrics(total_path_km: f64) -> (LinkMetrics, entlink::metrics::Evaluation) {
    let point = RunConfig::default().operating_point(total_path_km).unwrap();
    let e = evaluate_detailed(&point).unwrap();
    (e.metrics, e)
}

fn fig5_operating_point() -> Outcome {
    let (m, e) = reference_metrics(50.0);
    let rho1 = fock_oracle(&e.pair1, 12).unwrap();
    let rho2 = fock_oracle(&e.pair2, 12).unwrap();
    let (_, ps_oracle, perr_oracle) = probabilities_from_matrices(&rho1, &rho2);
    let throughput_oracle = m.trial_rate_hz * ps_oracle;
    let fidelity_oracle = 1.0 - perr_oracle / (2.0 * (ps_oracle + perr_oracle));

    let own = (m.throughput_per_s - THROUGHPUT_REF).abs() <= THROUGHPUT_TOL
        && (m.fidelity_max - FIDELITY_REF).abs() <= FIDELITY_TOL
        && (throughput_oracle - THROUGHPUT_REF).abs() <= THROUGHPUT_TOL
        && (fidelity_oracle - FIDELITY_REF).abs() <= FIDELITY_TOL;
    let quoted = (m.throughput_per_s - QUOTED_THROUGHPUT).abs() <= QUOTED_THROUGHPUT_BAND * QUOTED_THROUGHPUT
        && (m.fidelity_max - QUOTED_FIDELITY).abs() <= QUOTED_FIDELITY_BAND;
    outcome(
        own && quoted,
        format!(
            "throughput {:.3}/s (oracle {:.3}), F_max {:.6} (oracle {:.6}); quoted 200/s, 0.975",
            m.throughput_per_s, throughput_oracle, m.fidelity_max, fidelity_oracle
        ),
    )
}

fn quadrature_equivalence() -> Outcome {
    let c = quadrature_check(&RunConfig::default()).unwrap();
    outcome(
        c.passes(QUADRATURE_REL_TOL),
        format!("{} points, max relative deviation {:.3e} at {}", c.points, c.max_deviation, c.worst_point),
    )
}

fn fock_equivalence() -> Outcome {
    let c = fock_check(&RunConfig::default()).unwrap();
    outcome(
        c.passes(FOCK_ABS_TOL),
        format!("{} states, max abs deviation {:.3e} at {}", c.points, c.max_deviation, c.worst_point),
    )
}

fn pure_state_consistency() -> Outcome {
    let mut worst: f64 = 0.0;
    for nbar in [1e-4, 1e-3, 0.01, 0.05, 0.1, 0.3, 1.0] {
        let pure = TwoModeSqueezedThermal::pure(nbar).unwrap();
        let ps = success_probability(&pure, &pure.flipped()).unwrap();
        let closed = 2.0 * nbar / (1.0 + nbar).powi(3);
        let lossless = joint_state(nbar, 3).unwrap().singlet_projection();
        worst = worst.max((ps - closed).abs()).max((ps - lossless).abs());
    }
    outcome(worst <= PURE_STATE_TOL, format!("max deviation {worst:.3e}"))
}

fn flux_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for g in [0.05, 0.1, 0.3] {
        let opa = OpaParams::new(g, 1e8, 1e8).unwrap();
        let integral = integrate_real_line(|w| spectral_photon_number(&opa, w), opa.gamma_total, Tolerance::default())
            .unwrap()
            .value;
        let flux = integral / std::f64::consts::TAU;
        let direct = normal_correlation(&opa, 0.0);
        worst = worst.max((flux - direct).abs() / direct);
    }
    outcome(worst <= FLUX_REL_TOL, format!("max relative deviation {worst:.3e}"))
}

fn simplex_and_physicality() -> Outcome {
    let mut worst_sum: f64 = 0.0;
    let mut ok = true;
    let grid = loading_grid();
    for point in &grid {
        let (opa, mem) = point.params().unwrap();
        let (p1, p2) = loaded_link_state(&opa, &mem, point.eta).unwrap();
        let physical = p1.ntilde_signed().powi(2) <= p1.nbar() * (p1.nbar() + 1.0);
        let pe = erasure_probability(&p1, &p2).unwrap();
        let ps = success_probability(&p1, &p2).unwrap();
        let m = LinkMetrics::from_probabilities(pe, ps, 5e5).unwrap();
        let in_range = [m.p_erasure, m.p_success, m.p_error].iter().all(|p| (0.0..=1.0).contains(p));
        worst_sum = worst_sum.max((m.p_erasure + m.p_success + m.p_error - 1.0).abs());
        ok &= physical && in_range;
    }
    outcome(
        ok && worst_sum <= SIMPLEX_TOL,
        format!("{} grid points, max |ΣP − 1| = {worst_sum:.3e}", grid.len()),
    )
}

fn monte_carlo_consistency() -> Outcome {
    let cfg = RunConfig::default();
    let (m, _) = reference_metrics(50.0);
    let schedule = cfg.schedule().unwrap();
    let a = run_trials(&m, &schedule, MC_TRIALS, MC_SEED).unwrap();
    let b = run_trials(&m, &schedule, MC_TRIALS, MC_SEED).unwrap();
    let f = a.fidelity_hat.expect("loaded events at 10^7 trials");
    let in_band = (MC_SUCCESS_BAND.0..=MC_SUCCESS_BAND.1).contains(&a.counts.success);
    let fidelity_ok = (f.value - FIDELITY_REF).abs() <= MC_FIDELITY_SIGMAS * f.std_error;
    outcome(
        in_band && fidelity_ok && a == b,
        format!(
            "n_success {} in [{}, {}], fidelity_hat {:.5} ± {:.5} vs {FIDELITY_REF}, reproducible {}",
            a.counts.success,
            MC_SUCCESS_BAND.0,
            MC_SUCCESS_BAND.1,
            f.value,
            f.std_error,
            a == b
        ),
    )
}

fn sweep_behavior() -> Outcome {
    let cfg = RunConfig::default();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    cmd_sweep(&cfg, 0.0, 100.0, 1.0, &path).unwrap();
    let lengths = sweep_lengths(0.0, 100.0, 1.0).unwrap();
    let rows = sweep_path_length(&cfg.operating_point(0.0).unwrap(), &lengths).unwrap();

    let text = fs::read_to_string(&path).unwrap();
    let parsed: Vec<[f64; 9]> = text.lines().skip(1).map(|l| parse_csv_row(l).unwrap()).collect();
    let round_trip = parsed.len() == rows.len()
        && parsed.iter().zip(&rows).all(|(p, r)| {
            let e = &r.evaluation;
            let expect = [
                r.total_path_km,
                e.eta_arm,
                e.pair1.nbar(),
                e.pair1.ntilde_signed(),
                e.metrics.p_erasure,
                e.metrics.p_success,
                e.metrics.p_error,
                e.metrics.fidelity_max,
                e.metrics.throughput_per_s,
            ];
            p.iter().zip(expect).all(|(a, b)| a.to_bits() == b.to_bits())
        });
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].evaluation.metrics.throughput_per_s < w[0].evaluation.metrics.throughput_per_s);
    let (f_lo, f_hi) = rows.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| {
        let f = r.evaluation.metrics.fidelity_max;
        (lo.min(f), hi.max(f))
    });
    let band = f_lo >= SWEEP_FIDELITY_BAND.0 && f_hi <= SWEEP_FIDELITY_BAND.1;
    outcome(
        round_trip && decreasing && band,
        format!(
            "{} rows, throughput decreasing {decreasing}, CSV round-trip {round_trip}, F_max in [{f_lo:.5}, {f_hi:.5}]",
            rows.len()
        ),
    )
}

fn main() {
    let criteria: [(&str, Criterion, Option<Duration>); 8] = [
        ("reference operating point at 2L = 50 km", fig5_operating_point, Some(Duration::from_secs(1))),
        ("closed-form vs quadrature loading", quadrature_equivalence, Some(Duration::from_secs(10))),
        ("closed-form vs squeezed-thermal Fock oracle", fock_equivalence, Some(Duration::from_secs(10))),
        ("pure-state singlet projection", pure_state_consistency, Some(Duration::from_secs(1))),
        ("time/frequency photon-flux identity", flux_identity, Some(Duration::from_secs(1))),
        ("probability simplex and physicality", simplex_and_physicality, Some(Duration::from_secs(5))),
        ("Monte Carlo consistency", monte_carlo_consistency, Some(Duration::from_secs(30))),
        ("path-length sweep behavior", sweep_behavior, None),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = result.pass && in_time;
        if !pass {
            failures += 1;
        }
        let budget_text = budget.map_or(String::from("no limit"), |b| format!("limit {:?}", b));
        println!(
            "[{}] criterion {}: {name}: {} ({:.3?}, {budget_text})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            elapsed
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
