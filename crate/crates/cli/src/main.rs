use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qpermute_core::noise::{perturb_operator, sweep_table, DriftParams};
use qpermute_core::schedule::compare_literal_rules;
use qpermute_core::verify::{run_suite, VerifyOptions, DEFAULT_BIN_BUDGET};
use qpermute_core::{
    drift_fidelity_sweep, meta_operator_output, run_device, run_device_with, schedule_for, Error, PhotonState,
    PulseSchedule, SimulationConfig, SwitchNetwork,
};

#[derive(Parser)]
#[command(name = "qpermute", version, about = "Simulate and schedule the all-optical operator-ordering device")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Args)]
struct Common {
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Compile the switch program for a configuration.
    Schedule {
        #[arg(long, required_unless_present = "compare_literal")]
        config: Option<PathBuf>,
        /// Report where the printed activation rules disagree with path routing.
        #[arg(long)]
        compare_literal: bool,
        /// Largest N for the literal-rule comparison when no config is given.
        #[arg(long, default_value_t = 8)]
        n: usize,
        /// Pass count for the literal-rule comparison when no config is given.
        #[arg(long, default_value_t = 2)]
        m: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run the device and compare with the reference output.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Use a previously compiled schedule instead of building one.
        #[arg(long)]
        schedule: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Seeded randomized property checks.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Refuse runs with more than this many time bins.
        #[arg(long, default_value_t = DEFAULT_BIN_BUDGET)]
        budget: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Mean fidelity under pass-to-pass operator drift.
    DriftSweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated drift strengths in radians.
        #[arg(long, value_delimiter = ',', default_value = "0,0.01,0.02,0.05,0.1")]
        sigmas: Vec<f64>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
}

/// Failure that should exit with a specific code but is not a library error.
#[derive(Debug)]
struct Exit(u8, String);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.1)
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = if let Some(e) = err.downcast_ref::<Error>() {
                e.exit_code()
            } else if let Some(e) = err.downcast_ref::<Exit>() {
                e.0 as i32
            } else {
                1
            };
            ExitCode::from(code as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Schedule {
            config,
            compare_literal,
            n,
            m,
            common,
        } => schedule(config.as_deref(), compare_literal, n, m, &common),
        Command::Simulate {
            config,
            schedule,
            common,
        } => simulate(&config, schedule.as_deref(), &common),
        Command::Verify {
            n,
            m,
            trials,
            seed,
            budget,
            common,
        } => verify(
            &VerifyOptions {
                n,
                m,
                trials,
                seed,
                budget,
            },
            &common,
        ),
        Command::DriftSweep {
            config,
            sigmas,
            trials,
            seed,
            common,
        } => drift_sweep(&config, &sigmas, trials, seed, &common),
    }
}

fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(SimulationConfig::from_json(&text)?)
}

fn default_out(config: &Path, suffix: &str) -> PathBuf {
    let stem = config.file_stem().and_then(|s| s.to_str()).unwrap_or("qpermute");
    config.with_file_name(format!("{stem}.{suffix}"))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn schedule(config: Option<&Path>, compare_literal: bool, n: usize, m: usize, common: &Common) -> Result<()> {
    let mut text = String::new();
    let mut machine = serde_json::Map::new();

    let (cmp_n, cmp_m) = match config {
        Some(path) => {
            let cfg = load_config(path)?;
            let net = SwitchNetwork::build(cfg.n)?;
            let sched = schedule_for(&cfg, &net)?;
            sched.check_consistency(&net)?;
            let out = common.out.clone().unwrap_or_else(|| default_out(path, "schedule.json"));
            write_file(&out, &sched.to_json()?)?;
            text.push_str(&timeline_summary(&cfg, &sched));
            writeln!(text, "schedule written to {}", out.display())?;
            machine.insert("schedule_file".into(), json!(out));
            machine.insert("n".into(), json!(cfg.n));
            machine.insert("m".into(), json!(cfg.m));
            machine.insert("occupied_bins".into(), json!(sched.occupied_bins()));
            machine.insert("pulses".into(), json!(sched.pulse_count()));
            (cfg.n, cfg.m)
        }
        None => (n, m),
    };

    if compare_literal {
        let rows = compare_literal_rules(cmp_n, &[cmp_m])?;
        writeln!(
            text,
            "printed activation rules vs path routing (N <= {cmp_n}, M = {cmp_m}): {} disagreements",
            rows.len()
        )?;
        for r in &rows {
            let pass = r.pass.map(|(k, m)| format!(" pass {k}/{m}")).unwrap_or_default();
            writeln!(
                text,
                "  N={} {} l={}{pass}: printed {} derived {}",
                r.n,
                r.switch,
                r.l,
                on_off(r.printed),
                on_off(r.derived)
            )?;
        }
        machine.insert("literal_rule_disagreements".into(), json!(rows));
    }

    emit(common.format, &text, &serde_json::Value::Object(machine))
}

fn on_off(on: bool) -> &'static str {
    if on {
        "on"
    } else {
        "off"
    }
}

fn timeline_summary(cfg: &SimulationConfig, sched: &PulseSchedule) -> String {
    let p = &sched.params;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "N={} M={} bins={} occupied={} bin_spacing={} ps loop_delay={} ps",
        cfg.n,
        cfg.m,
        cfg.n_bins(),
        sched.occupied_bins().len(),
        p.bin_spacing_ps,
        p.loop_delay_ps
    );
    let _ = writeln!(s, "{} pulses", sched.pulse_count());
    for pulse in &sched.timeline {
        let _ = writeln!(s, "  {:<9} {:>12.3} .. {:>12.3} ps", pulse.switch.to_string(), pulse.start_ps, pulse.end_ps);
    }
    s
}

fn emit(format: Format, text: &str, machine: &serde_json::Value) -> Result<()> {
    match format {
        Format::Text => print!("{text}"),
        Format::Machine => println!("{}", serde_json::to_string_pretty(machine)?),
    }
    Ok(())
}

fn state_json(state: &PhotonState) -> serde_json::Value {
    state
        .iter()
        .map(|(slot, s)| json!({"bin": slot.bin, "mode": slot.mode, "h": [s.h.re, s.h.im], "v": [s.v.re, s.v.im]}))
        .collect()
}

fn simulate(config_path: &Path, schedule_path: Option<&Path>, common: &Common) -> Result<()> {
    let cfg = load_config(config_path)?;
    let net = SwitchNetwork::build(cfg.n)?;
    let sched = match schedule_path {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let sched = PulseSchedule::from_json(&text)?;
            sched.check_consistency(&net)?;
            sched
        }
        None => schedule_for(&cfg, &net)?,
    };
    let out = match cfg.drift_sigma {
        Some(sigma) => {
            let drift = DriftParams::new(sigma, cfg.seed)?;
            run_device_with(&cfg, &net, &sched, |pass| {
                cfg.operators
                    .iter()
                    .enumerate()
                    .map(|(l, u)| perturb_operator(u, &drift, pass, l))
                    .collect()
            })?
        }
        None => run_device(&cfg, &net, &sched)?,
    };
    let ideal = meta_operator_output(&cfg.operators, &cfg.control, &cfg.input_polarization, cfg.n, cfg.m)?;
    let fidelity = ideal.fidelity(&out)?;
    let norm_residual = (out.norm() - 1.0).abs();

    let report = json!({
        "n": cfg.n,
        "m": cfg.m,
        "bins": cfg.n_bins(),
        "occupied_bins": out.occupied_bins(),
        "drift_sigma": cfg.drift_sigma,
        "fidelity": fidelity,
        "norm_residual": norm_residual,
        "output": state_json(&out),
    });
    let out_path = common.out.clone().unwrap_or_else(|| default_out(config_path, "report.json"));
    write_file(&out_path, &serde_json::to_string_pretty(&report)?)?;

    let mut text = String::new();
    writeln!(text, "N={} M={} bins={} occupied={}", cfg.n, cfg.m, cfg.n_bins(), out.len())?;
    writeln!(text, "fidelity {fidelity:.15}")?;
    writeln!(text, "norm residual {norm_residual:.3e}")?;
    for (slot, s) in out.iter() {
        writeln!(
            text,
            "  bin {:>6} mode {}: H {:+.6}{:+.6}i  V {:+.6}{:+.6}i",
            slot.bin, slot.mode, s.h.re, s.h.im, s.v.re, s.v.im
        )?;
    }
    writeln!(text, "report written to {}", out_path.display())?;
    emit(common.format, &text, &report)
}

fn verify(opts: &VerifyOptions, common: &Common) -> Result<()> {
    let report = run_suite(opts)?;
    let mut text = String::new();
    writeln!(text, "N={} M={} trials={} seed={}", report.n, report.m, report.trials, report.seed)?;
    for c in &report.checks {
        let status = if c.failed == 0 { "PASS" } else { "FAIL" };
        writeln!(
            text,
            "[{status}] {:<28} passed {:>5} failed {:>5} worst {:.3e}",
            c.name, c.passed, c.failed, c.worst
        )?;
    }
    if let Some(f) = &report.first_failure {
        let path = common.out.clone().unwrap_or_else(|| PathBuf::from("verify-failure.json"));
        let cfg = f.config.to_json()?;
        write_file(&path, &cfg)?;
        writeln!(text, "first failure: {} (trial {}): {}", f.check, f.trial, f.message)?;
        writeln!(text, "minimal failing config written to {}:\n{cfg}", path.display())?;
    }
    emit(common.format, &text, &serde_json::to_value(&report)?)?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(Exit(2, "property checks failed".into()).into())
    }
}

fn drift_sweep(config_path: &Path, sigmas: &[f64], trials: usize, seed: Option<u64>, common: &Common) -> Result<()> {
    let mut cfg = load_config(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let rows = drift_fidelity_sweep(&cfg, sigmas, trials)?;
    let table = sweep_table(&rows);
    if let Some(path) = &common.out {
        write_file(path, &table)?;
    }
    emit(common.format, &table, &serde_json::to_value(&rows)?)
}
