//! `c3bf` command-line runner.
//!
//! Exit codes: 0 success, 1 usage, parse or I/O error, 2 when a run ends in
//! a FAILED-* status or a validation check fails.

use c3bf::barriers::{evaluate, lgh_degeneracy_report, BarrierError, BarrierKind, Pairing, DEGENERACY_THRESHOLD};
use c3bf::scenario::{check_semantics, initial_view, parse_scenario, Overrides};
use c3bf::sim_engine::{collision_report, multi_agent_run, RunStatus, Scenario, TrajectoryLog};
use c3bf::trajectory_csv::write_csv;
use c3bf::validate::run_all;
use clap::{Parser, Subcommand};
use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

#[derive(Parser)]
#[command(name = "c3bf", version, about = "Collision-cone CBF safety-filter simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write its trajectory CSV.
    Run {
        scenario: PathBuf,
        /// Output CSV. Multi-agent scenarios write `<stem>_<agent>.csv` next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run one scenario under several barriers.
    Compare {
        scenario: PathBuf,
        /// Comma-separated list of c3bf, hocbf, ellipse.
        #[arg(long, value_delimiter = ',', required = true)]
        barriers: Vec<String>,
        #[arg(long)]
        out_dir: PathBuf,
        /// γ of the HOCBF barrier, in m/s.
        #[arg(long, default_value_t = 1.0)]
        hocbf_gamma: f64,
    },
    /// Run the built-in validation suite.
    Validate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// Error that ends the command with exit code 1.
struct Fatal(String);

impl<E: std::fmt::Display> From<E> for Fatal {
    fn from(e: E) -> Self {
        Fatal(e.to_string())
    }
}

fn load(path: &Path, overrides: Overrides) -> Result<Scenario, Fatal> {
    let mut sc = parse_scenario(path)?;
    if overrides != Overrides::default() {
        overrides.apply(&mut sc);
        check_semantics(&sc)?;
    }
    Ok(sc)
}

fn write_log(log: &TrajectoryLog, path: &Path) -> Result<(), Fatal> {
    let file = File::create(path).map_err(|e| Fatal(format!("cannot create {}: {e}", path.display())))?;
    write_csv(log, BufWriter::new(file))?;
    Ok(())
}

/// Worst status over the logs; the first failure wins.
fn overall(logs: &[TrajectoryLog]) -> RunStatus {
    logs.iter()
        .map(|l| l.status)
        .find(|s| s.is_failure())
        .unwrap_or(RunStatus::Completed)
}

fn minima(logs: &[TrajectoryLog]) -> (f64, f64) {
    logs.iter().map(collision_report).fold((f64::INFINITY, f64::INFINITY), |(h, m), r| {
        (h.min(r.min_h()), m.min(r.min_margin()))
    })
}

fn agent_path(base: &Path, agent: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    base.with_file_name(format!("{stem}_{agent}.csv"))
}

fn cmd_run(scenario: &Path, out: &Path, overrides: Overrides) -> Result<ExitCode, Fatal> {
    let sc = load(scenario, overrides)?;
    let t0 = Instant::now();
    let logs = multi_agent_run(&sc);
    let wall = t0.elapsed().as_secs_f64();
    if let [log] = logs.as_slice() {
        write_log(log, out)?;
    } else {
        for log in &logs {
            write_log(log, &agent_path(out, &log.agent_id))?;
        }
    }
    let status = overall(&logs);
    let (min_h, margin) = minima(&logs);
    let failure = logs.iter().find_map(|l| l.failure.as_deref());
    print!("{status} min_h={min_h:.6e} min_margin={margin:.6e} wall={wall:.3}s");
    match failure {
        Some(f) => println!(" ({f})"),
        None => println!(),
    }
    Ok(if status.is_failure() { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn barrier_from_name(name: &str, gamma: f64) -> Result<BarrierKind, Fatal> {
    match name.trim() {
        "c3bf" => Ok(BarrierKind::C3bf),
        "hocbf" => Ok(BarrierKind::Hocbf { gamma }),
        "ellipse" => Ok(BarrierKind::Ellipse),
        other => Err(Fatal(format!("unknown barrier `{other}` (expected c3bf, hocbf or ellipse)"))),
    }
}

/// Fails when `kind` has no formula for some agent–obstacle pair.
fn check_applicable(sc: &Scenario, kind: BarrierKind) -> Result<(), Fatal> {
    for (i, agent) in sc.agents.iter().enumerate() {
        for o in initial_view(sc, i)? {
            if let Err(e @ BarrierError::Unsupported { .. }) = evaluate(&agent.vehicle, &agent.initial_state, &o, kind) {
                return Err(Fatal(e.to_string()));
            }
        }
    }
    Ok(())
}

/// Steps where some obstacle's `‖L_g h‖` was below the degeneracy threshold.
fn zero_lgh_steps(logs: &[TrajectoryLog]) -> (usize, usize) {
    logs.iter().fold((0, 0), |(zero, total), l| {
        let z = l
            .records
            .iter()
            .filter(|r| r.obstacles.iter().any(|o| o.lgh_norm < DEGENERACY_THRESHOLD))
            .count();
        (zero + z, total + l.records.len())
    })
}

fn sampled_class(sc: &Scenario, kind: BarrierKind, seed: u64) -> String {
    let model = sc.agents[0].vehicle.tag();
    let pairings: Vec<Pairing> = if sc.obstacles.is_empty() {
        vec![Pairing::of(model, &c3bf::obstacles::ObstacleShape::PlanarEllipse { c1: 1.0, c2: 1.0 })]
    } else {
        let mut p: Vec<Pairing> = sc.obstacles.iter().map(|o| Pairing::of(model, &o.shape)).collect();
        p.dedup();
        p
    };
    pairings
        .into_iter()
        .map(|p| match lgh_degeneracy_report(p, kind, 1000, seed) {
            Ok(r) if p.supports(kind) => format!("{:?}", r.classification).to_uppercase(),
            _ => "n/a".into(),
        })
        .collect::<Vec<_>>()
        .join("/")
}

fn cmd_compare(scenario: &Path, names: &[String], out_dir: &Path, gamma: f64) -> Result<ExitCode, Fatal> {
    let sc = load(scenario, Overrides::default())?;
    let kinds = names
        .iter()
        .map(|n| barrier_from_name(n, gamma))
        .collect::<Result<Vec<_>, _>>()?;
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Fatal(format!("--hocbf-gamma must be positive, got {gamma}")));
    }
    for &k in &kinds {
        check_applicable(&sc, k)?;
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Fatal(format!("cannot create {}: {e}", out_dir.display())))?;

    println!(
        "{:<10} {:<20} {:>14} {:>14} {:>12} {:>16} {:>8}",
        "barrier", "status", "min_h", "min_margin", "zero_lgh", "lgh_class", "wall_s"
    );
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut any_failed = false;
    for kind in kinds {
        let count = seen.entry(kind.name()).or_insert(0);
        *count += 1;
        let tag = if *count == 1 {
            kind.name().to_string()
        } else {
            format!("{}_{}", kind.name(), count)
        };
        let t0 = Instant::now();
        let logs = multi_agent_run(&sc.with_barrier(kind));
        let wall = t0.elapsed().as_secs_f64();
        for log in &logs {
            let file = if logs.len() == 1 {
                format!("{}_{tag}.csv", sc.label)
            } else {
                format!("{}_{tag}_{}.csv", sc.label, log.agent_id)
            };
            write_log(log, &out_dir.join(file))?;
        }
        let status = overall(&logs);
        any_failed |= status.is_failure();
        let (min_h, margin) = minima(&logs);
        let (zero, total) = zero_lgh_steps(&logs);
        println!(
            "{:<10} {:<20} {:>14.6e} {:>14.6e} {:>12} {:>16} {:>8.3}",
            tag,
            status.as_str(),
            min_h,
            margin,
            format!("{zero}/{total}"),
            sampled_class(&sc, kind, sc.sim.seed),
            wall
        );
    }
    Ok(if any_failed { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn cmd_validate(seed: u64) -> ExitCode {
    let t0 = Instant::now();
    let checks = run_all(seed);
    for c in &checks {
        println!("{c}");
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    println!("{passed} of {} checks passed", checks.len());
    eprintln!("validation took {:.1}s", t0.elapsed().as_secs_f64());
    if passed == checks.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run {
            scenario,
            out,
            dt,
            duration,
            seed,
        } => cmd_run(&scenario, &out, Overrides { dt, duration, seed }),
        Command::Compare {
            scenario,
            barriers,
            out_dir,
            hocbf_gamma,
        } => cmd_compare(&scenario, &barriers, &out_dir, hocbf_gamma),
        Command::Validate { seed } => Ok(cmd_validate(seed)),
    };
    match result {
        Ok(code) => code,
        Err(Fatal(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
