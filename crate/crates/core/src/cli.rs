//! Command-line front end.
//!
//! Path lengths on the command line are TOTAL source-to-source path `2L` in km;
//! each fiber arm is half of it.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 oracle-check failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::checks::{fock_check, quadrature_check, CheckOutcome};
use crate::config::RunConfig;
use crate::error::{invalid, Error, Result};
use crate::metrics::{evaluate_detailed, sweep_path_length, SweepPoint};
use crate::protocol_mc::{run_trials, time_to_load, McReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_ORACLE_FAILED: i32 = 2;

pub const CSV_HEADER: &str =
    "total_path_km,eta_arm,nbar,ntilde,p_erasure,p_success,p_error,fidelity_max,throughput_per_s";

pub const COUNTS_HEADER: &str =
    "trials,n_erasure,n_success,n_error,seed,throughput_hat,throughput_std_error,fidelity_hat,fidelity_std_error";

#[derive(Debug, Parser)]
#[command(name = "entlink", version, about = "Throughput and loss-limited fidelity of an OPA-to-memory entanglement link")]
pub struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Override one config key (repeatable); wins over the file.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate one total path length and print its CSV row.
    Metrics {
        /// Total path 2L, km.
        #[arg(long)]
        total_path_km: f64,
    },
    /// Sweep total path length and write a CSV file.
    Sweep {
        #[arg(long)]
        from_km: f64,
        #[arg(long)]
        to_km: f64,
        #[arg(long)]
        step_km: f64,
        #[arg(long)]
        output: PathBuf,
    },
    /// Compare closed forms against their numerical oracles.
    OracleCheck {
        #[arg(long, value_enum)]
        mode: OracleMode,
        #[arg(long)]
        tolerance: f64,
    },
    /// Monte Carlo replay of the loading protocol.
    Mc {
        #[arg(long)]
        total_path_km: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Text report path; counts go to the same stem with `.counts.csv`.
        #[arg(long)]
        output: PathBuf,
        /// Also simulate loading this many pairs sequentially.
        #[arg(long)]
        pairs_needed: Option<u64>,
        #[arg(long, default_value_t = 10_000)]
        replications: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    Fock,
    Quadrature,
}

/// One CSV row, full round-trip precision.
pub fn csv_row(point: &SweepPoint) -> String {
    let e = &point.evaluation;
    let m = &e.metrics;
    [
        point.total_path_km,
        e.eta_arm,
        e.pair1.nbar(),
        e.pair1.ntilde_signed(),
        m.p_erasure,
        m.p_success,
        m.p_error,
        m.fidelity_max,
        m.throughput_per_s,
    ]
    .iter()
    .map(|v| format!("{v:?}"))
    .collect::<Vec<_>>()
    .join(",")
}

/// Parses a data row of the sweep CSV back into its nine values.
pub fn parse_csv_row(line: &str) -> Result<[f64; 9]> {
    let mut out = [0.0; 9];
    let fields: Vec<&str> = line.trim_end_matches(['\r', '\n']).split(',').collect();
    if fields.len() != out.len() {
        return Err(invalid("csv", format!("expected 9 fields, found {}", fields.len())));
    }
    for (slot, field) in out.iter_mut().zip(fields) {
        *slot = field
            .parse()
            .map_err(|_| invalid("csv", format!("`{field}` is not a number")))?;
    }
    Ok(out)
}

/// Total path lengths `from, from+step, …` not exceeding `to`.
pub fn sweep_lengths(from_km: f64, to_km: f64, step_km: f64) -> Result<Vec<f64>> {
    if !(step_km > 0.0 && step_km.is_finite()) {
        return Err(invalid("step_km", format!("{step_km} must be positive")));
    }
    if !(from_km >= 0.0 && from_km <= to_km && to_km.is_finite()) {
        return Err(invalid("from_km", format!("need 0 <= from ({from_km}) <= to ({to_km})")));
    }
    let count = ((to_km - from_km) / step_km + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| from_km + i as f64 * step_km).collect())
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::Config {
        key: "output".into(),
        reason: format!("cannot write {}: {e}", path.display()),
    })
}

pub fn cmd_metrics(cfg: &RunConfig, total_path_km: f64) -> Result<String> {
    let point = cfg.operating_point(total_path_km)?;
    let row = SweepPoint {
        total_path_km,
        evaluation: evaluate_detailed(&point)?,
    };
    Ok(format!("{CSV_HEADER}\n{}\n", csv_row(&row)))
}

pub fn cmd_sweep(cfg: &RunConfig, from_km: f64, to_km: f64, step_km: f64, output: &Path) -> Result<usize> {
    let lengths = sweep_lengths(from_km, to_km, step_km)?;
    let rows = sweep_path_length(&cfg.operating_point(from_km)?, &lengths)?;
    let mut text = String::with_capacity(128 * (rows.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for r in &rows {
        text.push_str(&csv_row(r));
        text.push('\n');
    }
    write_file(output, &text)?;
    Ok(rows.len())
}

pub fn cmd_oracle_check(cfg: &RunConfig, mode: OracleMode) -> Result<CheckOutcome> {
    match mode {
        OracleMode::Fock => fock_check(cfg),
        OracleMode::Quadrature => quadrature_check(cfg),
    }
}

pub fn counts_path(output: &Path) -> PathBuf {
    output.with_extension("counts.csv")
}

fn counts_row(r: &McReport) -> String {
    let (f, fse) = match r.fidelity_hat {
        Some(f) => (format!("{:?}", f.value), format!("{:?}", f.std_error)),
        None => (String::new(), String::new()),
    };
    format!(
        "{},{},{},{},{},{:?},{:?},{},{}",
        r.trials,
        r.counts.erasure,
        r.counts.success,
        r.counts.error,
        r.seed,
        r.throughput_hat.value,
        r.throughput_hat.std_error,
        f,
        fse
    )
}

/// Runs the Monte Carlo replay, writes both output files and returns the
/// analytic-vs-empirical summary printed to stdout.
pub fn cmd_mc(
    cfg: &RunConfig,
    total_path_km: f64,
    trials: u64,
    seed: u64,
    output: &Path,
    lattice: Option<(u64, usize)>,
) -> Result<(McReport, String)> {
    let eval = evaluate_detailed(&cfg.operating_point(total_path_km)?)?;
    let m = eval.metrics;
    let schedule = cfg.schedule()?;
    let report = run_trials(&m, &schedule, trials, seed)?;
    let n = report.trials as f64;

    let mut text = String::new();
    let _ = writeln!(text, "entlink Monte Carlo report");
    let _ = writeln!(text, "total_path_km = {total_path_km:?}");
    let _ = writeln!(text, "trials = {}", report.trials);
    let _ = writeln!(text, "seed = {seed}");
    let _ = writeln!(text, "trial_period_s = {:?}", schedule.trial_period_s);
    let _ = writeln!(text);
    let _ = writeln!(text, "{:<12} {:>14} {:>22} {:>22}", "event", "count", "empirical", "analytic");
    for (name, count, p) in [
        ("erasure", report.counts.erasure, m.p_erasure),
        ("success", report.counts.success, m.p_success),
        ("error", report.counts.error, m.p_error),
    ] {
        let _ = writeln!(text, "{name:<12} {count:>14} {:>22.12e} {p:>22.12e}", count as f64 / n);
    }
    let _ = writeln!(text);
    let _ = writeln!(
        text,
        "throughput_per_s = {:.6} ± {:.6} (analytic {:.6})",
        report.throughput_hat.value, report.throughput_hat.std_error, m.throughput_per_s
    );
    match report.fidelity_hat {
        Some(f) => {
            let _ = writeln!(
                text,
                "fidelity = {:.8} ± {:.8} (analytic {:.8})",
                f.value, f.std_error, m.fidelity_max
            );
        }
        None => {
            let _ = writeln!(text, "fidelity = undefined (no loaded trials) (analytic {:.8})", m.fidelity_max);
        }
    }
    if let Some((pairs, replications)) = lattice {
        let t = time_to_load(&m, &schedule, pairs, replications, seed)?;
        let _ = writeln!(
            text,
            "time_to_load[{pairs} pairs, {replications} reps]: mean {:.6e} ± {:.2e} s, p50 {:.6e} s, p95 {:.6e} s (analytic mean {:.6e} s)",
            t.mean_s,
            t.std_error_s,
            t.p50_s,
            t.p95_s,
            pairs as f64 / (m.p_success * m.trial_rate_hz)
        );
    }
    write_file(output, &text)?;
    write_file(&counts_path(output), &format!("{COUNTS_HEADER}\n{}\n", counts_row(&report)))?;

    let mut summary = String::new();
    let _ = writeln!(
        summary,
        "delta p_success = {:+.3e}, delta p_error = {:+.3e}, delta throughput = {:+.4} /s",
        report.counts.success as f64 / n - m.p_success,
        report.counts.error as f64 / n - m.p_error,
        report.throughput_hat.value - m.throughput_per_s
    );
    if let Some(f) = report.fidelity_hat {
        let _ = writeln!(
            summary,
            "delta fidelity = {:+.3e} ({:+.2} standard errors)",
            f.value - m.fidelity_max,
            (f.value - m.fidelity_max) / f.std_error.max(f64::MIN_POSITIVE)
        );
    }
    Ok((report, summary))
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = resolve_config(cli)?;
    let io = |e: std::io::Error| Error::Config {
        key: "stdout".into(),
        reason: e.to_string(),
    };
    match &cli.command {
        Command::Metrics { total_path_km } => {
            out.write_all(cmd_metrics(&cfg, *total_path_km)?.as_bytes()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Sweep {
            from_km,
            to_km,
            step_km,
            output,
        } => {
            let rows = cmd_sweep(&cfg, *from_km, *to_km, *step_km, output)?;
            writeln!(out, "wrote {rows} rows to {}", output.display()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::OracleCheck { mode, tolerance } => {
            if !(*tolerance >= 0.0) {
                return Err(invalid("tolerance", format!("{tolerance} must be >= 0")));
            }
            let outcome = cmd_oracle_check(&cfg, *mode)?;
            let pass = outcome.passes(*tolerance);
            writeln!(
                out,
                "{} {:?} check: {} points, max deviation {:e} (tolerance {:e}) at {}",
                if pass { "PASS" } else { "FAIL" },
                mode,
                outcome.points,
                outcome.max_deviation,
                tolerance,
                outcome.worst_point
            )
            .map_err(io)?;
            Ok(if pass { EXIT_OK } else { EXIT_ORACLE_FAILED })
        }
        Command::Mc {
            total_path_km,
            trials,
            seed,
            output,
            pairs_needed,
            replications,
        } => {
            let lattice = pairs_needed.map(|p| (p, *replications));
            let (report, summary) = cmd_mc(&cfg, *total_path_km, *trials, *seed, output, lattice)?;
            writeln!(
                out,
                "trials {} erasure {} success {} error {}",
                report.trials, report.counts.erasure, report.counts.success, report.counts.error
            )
            .map_err(io)?;
            out.write_all(summary.as_bytes()).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

/// Parses `args` (including the program name) and runs one command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sweep_length_grid() {
        assert_eq!(sweep_lengths(0.0, 100.0, 2.0).unwrap().len(), 51);
        assert_eq!(sweep_lengths(50.0, 50.0, 1.0).unwrap(), vec![50.0]);
        assert_eq!(sweep_lengths(10.0, 12.0, 5.0).unwrap(), vec![10.0]);
        let l = sweep_lengths(0.0, 1.0, 0.1).unwrap();
        assert_eq!(l.len(), 11);
        assert!(sweep_lengths(5.0, 1.0, 1.0).is_err());
        assert!(sweep_lengths(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn row_parse_rejects_garbage() {
        assert!(parse_csv_row("1,2,3").is_err());
        assert!(parse_csv_row("1,2,3,4,5,6,7,8,x").is_err());
        assert_eq!(parse_csv_row("1,2,3,4,5,6,7,8,9\n").unwrap()[8], 9.0);
    }

    #[test]
    fn usage_errors_exit_one() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["entlink", "frobnicate"], &mut out, &mut err), EXIT_USAGE);
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["entlink", "--help"], &mut out, &mut err), EXIT_OK);
        assert!(!out.is_empty());
    }

    #[test]
    fn zero_pump_is_rejected_with_key() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(
            ["entlink", "metrics", "--total-path-km", "50", "--set", "pump_fraction=0"],
            &mut out,
            &mut err,
        );
        assert_eq!(code, EXIT_USAGE);
        assert!(String::from_utf8(err).unwrap().contains("pump_fraction"));
    }
}
