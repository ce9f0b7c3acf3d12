//! Subcommands of the `rcta` binary.
//!
//! Exit codes: 0 on success, 1 when a scenario fails validation, 2 on parse
//! or IO errors.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rcta_core::graph::{NodeSet, TopologyGenerator};
use rcta_core::sim::{
    self, DiagnosticReport, DiagnosticsConfig, PeProbe, RobustnessVerdict, Scenario,
    ValidationReport,
};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::scenario_file::{parse_scenario, scenario_hash};
use crate::trace_io;

#[derive(Debug, Parser)]
#[command(
    name = "rcta",
    version,
    about = "Resilient distributed parameter estimation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a scenario against the convergence assumptions.
    Check {
        scenario: PathBuf,
        #[command(flatten)]
        probe: ProbeArgs,
    },
    /// Simulate a scenario and write trace.csv, error_norms.csv and diagnostics.json.
    Run {
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the number of rounds.
        #[arg(long)]
        rounds: Option<usize>,
        /// Refuse to run when validation fails.
        #[arg(long)]
        strict: bool,
        #[command(flatten)]
        probe: ProbeArgs,
    },
    /// Print a `[graph]` section that is strongly r-robust w.r.t. S = {1..s_size}.
    GenerateGraph {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        s_size: usize,
        #[arg(long)]
        r: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated 1-based faulty labels to keep f-local.
        #[arg(long, value_delimiter = ',')]
        faulty: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        f: usize,
    },
    /// Recompute monotonicity and contraction diagnostics from a trace.
    Diagnose {
        trace: PathBuf,
        /// Comma-separated window lengths for the contraction ratio.
        #[arg(long, value_delimiter = ',')]
        windows: Vec<usize>,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, Args)]
pub struct ProbeArgs {
    /// Excitation window T; defaults to the scenario value.
    #[arg(long)]
    pub pe_window: Option<usize>,
    /// Excitation level; defaults to the scenario value.
    #[arg(long)]
    pub pe_level: Option<f64>,
}

impl ProbeArgs {
    fn resolve(self, scenario: &Scenario) -> PeProbe {
        PeProbe {
            window: self.pe_window.unwrap_or(scenario.pe_probe.window),
            level: self.pe_level.unwrap_or(scenario.pe_probe.level),
        }
    }
}

/// Runs one command, writing human-readable output to `out`, and returns the exit code.
pub fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Check { scenario, probe } => cmd_check(&scenario, probe, out),
        Command::Run {
            scenario,
            out: dir,
            seed,
            rounds,
            strict,
            probe,
        } => cmd_run(&scenario, &dir, seed, rounds, strict, probe, out),
        Command::GenerateGraph {
            nodes,
            s_size,
            r,
            seed,
            faulty,
            f,
        } => cmd_generate_graph(nodes, s_size, r, seed, &faulty, f, out),
        Command::Diagnose {
            trace,
            windows,
            out: json_out,
        } => cmd_diagnose(&trace, &windows, json_out.as_deref(), out),
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn labels(set: &NodeSet) -> String {
    let inner: Vec<String> = set.iter().map(|v| (v + 1).to_string()).collect();
    format!("{{{}}}", inner.join(", "))
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

/// Text form of a validation report, one PASS/FAIL line per assumption.
pub fn render_report(report: &ValidationReport, f: usize) -> String {
    let mut s = String::new();
    let r = report.required_r;
    let robust = match &report.robustness {
        RobustnessVerdict::Passed => "PASS".to_string(),
        RobustnessVerdict::Failed { witness } => {
            format!("FAIL (witness {} is not {r}-reachable)", labels(witness))
        }
        RobustnessVerdict::Undecided { outside, cap } => {
            format!("FAIL (undecided: {outside} nodes outside S exceed the enumeration cap {cap})")
        }
    };
    s += &format!("strong {r}-robustness w.r.t. S: {robust}\n");
    s += &format!(
        "persistent excitation (T = {}, level = {:e}): {}\n",
        report.pe_window,
        report.pe_level,
        verdict(report.pe_passed())
    );
    for v in &report.pe {
        s += &format!(
            "  sensor {}{}: margin {:e} {}\n",
            v.sensor + 1,
            if v.in_s { " (in S)" } else { "" },
            v.margin,
            if v.passed { "ok" } else { "below level" }
        );
    }
    let flocal = if report.f_local_passed() {
        "PASS".to_string()
    } else {
        let bad: NodeSet = report.f_local_violations.iter().copied().collect();
        format!(
            "FAIL (sensors {} hear more than {f} faulty neighbors)",
            labels(&bad)
        )
    };
    s += &format!("{f}-local faulty neighborhoods: {flocal}\n");
    s += &format!(
        "normal sensors in S: {} {}\n",
        labels(&report.s_normal),
        verdict(report.s_normal_nonempty())
    );
    s += &format!("overall: {}\n", verdict(report.all_passed()));
    s
}

fn report_json(report: &ValidationReport) -> Value {
    let robustness = match &report.robustness {
        RobustnessVerdict::Passed => json!({ "status": "passed" }),
        RobustnessVerdict::Failed { witness } => json!({
            "status": "failed",
            "witness": witness.iter().map(|v| v + 1).collect::<Vec<_>>(),
        }),
        RobustnessVerdict::Undecided { outside, cap } => json!({
            "status": "undecided", "outside": outside, "cap": cap,
        }),
    };
    json!({
        "required_r": report.required_r,
        "robustness": robustness,
        "pe_window": report.pe_window,
        "pe_level": report.pe_level,
        "pe": report.pe.iter().map(|v| json!({
            "sensor": v.sensor + 1, "in_s": v.in_s, "margin": v.margin, "passed": v.passed,
        })).collect::<Vec<_>>(),
        "f_local_violations": report.f_local_violations.iter().map(|v| v + 1).collect::<Vec<_>>(),
        "s_normal": report.s_normal.iter().map(|v| v + 1).collect::<Vec<_>>(),
        "passed": report.all_passed(),
    })
}

fn diagnostics_json(report: &DiagnosticReport) -> Value {
    json!({
        "rounds": report.rounds,
        "monotonicity_violations": report.violation_count(),
        "coordinates": report.coordinates.iter().map(|c| json!({
            "coordinate": c.coordinate + 1,
            "initial": c.initial,
            "last": c.last,
            "violations": c.violations.iter().map(|v| json!({ "round": v.round, "increase": v.increase })).collect::<Vec<_>>(),
            "contraction": c.contraction.iter().map(|(w, rho)| json!({ "window": w, "rho": rho })).collect::<Vec<_>>(),
            "fit_exponent": c.fit_exponent,
        })).collect::<Vec<_>>(),
    })
}

/// Text form of a diagnostic report.
pub fn render_diagnostics(report: &DiagnosticReport) -> String {
    let mut s = format!(
        "rounds: {}\nmonotonicity violations: {}\n",
        report.rounds,
        report.violation_count()
    );
    for c in &report.coordinates {
        s += &format!(
            "coordinate {}: m(0) = {:e}, m(last) = {:e}\n",
            c.coordinate + 1,
            c.initial,
            c.last
        );
        for (w, rho) in &c.contraction {
            match rho {
                Some(rho) => s += &format!("  rho({w}) = {rho:.6}\n"),
                None => s += &format!("  rho({w}) = n/a\n"),
            }
        }
        match c.fit_exponent {
            Some(e) => s += &format!("  tail fit exponent = {e:.6}\n"),
            None => s += "  tail fit exponent = n/a\n",
        }
    }
    s
}

fn load(path: &Path, probe: ProbeArgs) -> Result<(Scenario, PeProbe), CliError> {
    let scenario = parse_scenario(path)?;
    let probe = probe.resolve(&scenario);
    if probe.window == 0 || !(probe.level > 0.0) {
        return Err(CliError::Usage(
            "--pe-window and --pe-level must be positive".into(),
        ));
    }
    Ok((scenario, probe))
}

pub fn cmd_check(path: &Path, probe: ProbeArgs, out: &mut dyn Write) -> Result<i32, CliError> {
    let (scenario, probe) = load(path, probe)?;
    let report = sim::validate(&scenario, probe)?;
    write!(out, "{}", render_report(&report, scenario.f)).map_err(io_err(Path::new("<stdout>")))?;
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn cmd_run(
    path: &Path,
    dir: &Path,
    seed: Option<u64>,
    rounds: Option<usize>,
    strict: bool,
    probe: ProbeArgs,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let (mut scenario, probe) = load(path, probe)?;
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(rounds) = rounds {
        scenario.rounds = rounds;
    }
    let stdout = Path::new("<stdout>");
    let report = sim::validate(&scenario, probe)?;
    write!(out, "{}", render_report(&report, scenario.f)).map_err(io_err(stdout))?;
    if strict && !report.all_passed() {
        writeln!(out, "refusing to run: validation failed (--strict)").map_err(io_err(stdout))?;
        return Ok(1);
    }

    let traces = sim::run(&scenario)?;
    let hash = scenario_hash(&scenario);
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;

    let trace_path = dir.join("trace.csv");
    trace_io::write_trace(create(&trace_path)?, &hash, &scenario, &traces).map_err(|source| {
        CliError::Csv {
            path: trace_path.clone(),
            source,
        }
    })?;
    let norms_path = dir.join("error_norms.csv");
    trace_io::write_error_norms(create(&norms_path)?, &scenario, &traces).map_err(|source| {
        CliError::Csv {
            path: norms_path.clone(),
            source,
        }
    })?;

    let diag = sim::diagnostics(
        &sim::max_error_history(&traces),
        &DiagnosticsConfig::default(),
    );
    let diag_path = dir.join("diagnostics.json");
    let doc = json!({
        "scenario_hash": hash,
        "seed": scenario.seed,
        "validation": report_json(&report),
        "diagnostics": diagnostics_json(&diag),
    });
    let mut w = create(&diag_path)?;
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(io_err(&diag_path))?;

    write!(out, "{}", render_diagnostics(&diag)).map_err(io_err(stdout))?;
    writeln!(out, "wrote {}", dir.display()).map_err(io_err(stdout))?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_generate_graph(
    nodes: usize,
    s_size: usize,
    r: usize,
    seed: u64,
    faulty: &[usize],
    f: usize,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    if s_size == 0 || s_size > nodes {
        return Err(CliError::Usage(format!("--s-size must be in 1..={nodes}")));
    }
    let mut gen = TopologyGenerator::new(nodes, NodeSet::range(s_size), r).seed(seed);
    if !faulty.is_empty() {
        if let Some(bad) = faulty.iter().find(|&&v| v == 0 || v > nodes) {
            return Err(CliError::Usage(format!(
                "faulty label {bad} is outside 1..={nodes}"
            )));
        }
        gen = gen.f_local(faulty.iter().map(|v| v - 1).collect(), f);
    }
    let g = gen.generate()?;
    let edges: Vec<String> = g
        .edges()
        .map(|(j, i)| format!("    \"{} -> {}\",", j + 1, i + 1))
        .collect();
    let text = format!(
        "# strongly {r}-robust w.r.t. S = {{1..{s_size}}}, seed {seed}\n[graph]\nnodes = {nodes}\nedges = [\n{}\n]\n",
        edges.join("\n")
    );
    out.write_all(text.as_bytes())
        .map_err(io_err(Path::new("<stdout>")))?;
    Ok(0)
}

pub fn cmd_diagnose(
    trace: &Path,
    windows: &[usize],
    json_out: Option<&Path>,
    out: &mut dyn Write,
) -> Result<i32, CliError> {
    let summary = trace_io::read_trace(trace)?;
    let mut config = DiagnosticsConfig::default();
    if !windows.is_empty() {
        config.windows = windows.to_vec();
    }
    let diag = sim::diagnostics(&summary.max_error, &config);
    writeln!(out, "scenario hash: {}", summary.scenario_hash)
        .map_err(io_err(Path::new("<stdout>")))?;
    write!(out, "{}", render_diagnostics(&diag)).map_err(io_err(Path::new("<stdout>")))?;
    if let Some(path) = json_out {
        let doc = json!({ "scenario_hash": summary.scenario_hash, "diagnostics": diagnostics_json(&diag) });
        let mut w = create(path)?;
        serde_json::to_writer_pretty(&mut w, &doc)?;
        writeln!(w).and_then(|_| w.flush()).map_err(io_err(path))?;
    }
    Ok(0)
}
