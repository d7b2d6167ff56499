//! `revadd` command line.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 usage error, 3 verification or
//! closed-form mismatch.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::circuit::{AdderKind, Circuit};
use crate::metrics::{self, MetricsReport, Table1Row};
use crate::qasm;
use crate::sim::{self, VerifyConfig, ENV_MAX_EXHAUSTIVE_N, ENV_MAX_PERMUTATION_WIDTH};
use crate::synth;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FAILURE: i32 = 3;

/// Largest n whose adder (3n+1 wires) fits a simulated basis state.
const MAX_SIMULATE_N: usize = (sim::MAX_WIDTH - 1) / 3;

#[derive(Debug, Parser)]
#[command(
    name = "revadd",
    version,
    about = "Reversible plain and carry look-ahead adders"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthesize an adder and write it as QASM or a JSON document.
    Build {
        #[arg(long, ignore_case = true)]
        kind: KindArg,
        #[arg(short = 'n', value_parser = clap::value_parser!(u32).range(1..=4096))]
        n: u32,
        #[command(flatten)]
        doc: DocOutput,
    },
    /// Add two operands on the simulated circuit.
    Simulate {
        #[arg(long, ignore_case = true)]
        kind: KindArg,
        #[arg(short = 'n', value_parser = clap::value_parser!(u32).range(1..=MAX_SIMULATE_N as i64))]
        n: u32,
        #[arg(short = 'a')]
        a: u64,
        #[arg(short = 'b')]
        b: u64,
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        c0: u8,
        #[command(flatten)]
        report: ReportOutput,
    },
    /// Exhaustively check adders against integer addition.
    Verify {
        #[arg(long, default_value = "all", ignore_case = true)]
        kind: KindSelection,
        #[arg(short = 'n', default_value = "1..6")]
        n: NRange,
        /// Largest n to enumerate (env REVADD_MAX_EXHAUSTIVE_N, default 8).
        #[arg(long)]
        max_n: Option<usize>,
        /// Widest circuit to permutation-check (env REVADD_MAX_PERMUTATION_WIDTH, default 16).
        #[arg(long)]
        max_width: Option<usize>,
        #[command(flatten)]
        report: ReportOutput,
    },
    /// Gate counts, arity histogram and stage counts.
    Metrics {
        #[arg(long, default_value = "all", ignore_case = true)]
        kind: KindSelection,
        #[arg(short = 'n', default_value = "1..4")]
        n: NRange,
        #[command(flatten)]
        report: ReportOutput,
    },
    /// Gate/stage comparison table for n = 1..n-max.
    Table {
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..=4096))]
        n_max: u32,
        #[command(flatten)]
        report: ReportOutput,
    },
    /// Convert a JSON circuit document to QASM or canonical JSON.
    Export {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        doc: DocOutput,
    },
}

#[derive(Debug, Args)]
struct DocOutput {
    #[arg(long, value_enum, default_value_t = DocFormat::Qasm)]
    format: DocFormat,
    /// Lower gates above this many controls to Toffoli ladders.
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
    decompose: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportOutput {
    #[arg(long, value_enum, default_value_t = ReportFormat::Human)]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DocFormat {
    Qasm,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Human,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Cqp,
    Mqp,
    Qcla,
}

impl From<KindArg> for AdderKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Cqp => AdderKind::Cqp,
            KindArg::Mqp => AdderKind::Mqp,
            KindArg::Qcla => AdderKind::Qcla,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindSelection {
    Cqp,
    Mqp,
    Qcla,
    All,
}

impl KindSelection {
    fn kinds(self) -> Vec<AdderKind> {
        match self {
            KindSelection::Cqp => vec![AdderKind::Cqp],
            KindSelection::Mqp => vec![AdderKind::Mqp],
            KindSelection::Qcla => vec![AdderKind::Qcla],
            KindSelection::All => AdderKind::ALL.to_vec(),
        }
    }
}

/// Inclusive range of operand widths: `4` or `1..6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NRange {
    pub lo: usize,
    pub hi: usize,
}

impl NRange {
    fn iter(self) -> impl Iterator<Item = usize> {
        self.lo..=self.hi
    }
}

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("`{t}` is not a valid width"))
        };
        let (lo, hi) = match s.split_once("..") {
            Some((lo, hi)) => (parse(lo)?, parse(hi.trim_start_matches('='))?),
            None => {
                let n = parse(s)?;
                (n, n)
            }
        };
        if lo == 0 {
            return Err("widths start at 1".into());
        }
        if lo > hi {
            return Err(format!("empty range {lo}..{hi}"));
        }
        Ok(NRange { lo, hi })
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Io(String),
    Failure(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Io(_) => EXIT_IO,
            CliError::Failure(_) => EXIT_FAILURE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::Failure(m) => m,
        }
    }
}

/// Parses `args` (program name first) and runs the command, writing
/// results to `stdout` unless `--out` is given. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let mut rendered = e.render().to_string();
            if e.use_stderr() && !rendered.contains("Usage:") {
                rendered.push_str(&format!("\n{}\n", Cli::command().render_usage()));
            }
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(Output {
            text,
            path,
            failure,
        }) => {
            if let Err(e) = emit(&text, path.as_ref(), stdout) {
                let _ = writeln!(stderr, "error: {}", e.message());
                return e.code();
            }
            match failure {
                Some(f) => {
                    let _ = writeln!(stderr, "error: {}", f.message());
                    f.code()
                }
                None => EXIT_OK,
            }
        }
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.code()
        }
    }
}

struct Output {
    text: String,
    path: Option<PathBuf>,
    /// Set when the output is complete but the run must still exit non-zero.
    failure: Option<CliError>,
}

fn emit(text: &str, path: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn dispatch(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Build { kind, n, doc } => cmd_build(kind.into(), n as usize, &doc),
        Command::Simulate {
            kind,
            n,
            a,
            b,
            c0,
            report,
        } => cmd_simulate(kind.into(), n as usize, a, b, c0 == 1, &report),
        Command::Verify {
            kind,
            n,
            max_n,
            max_width,
            report,
        } => {
            let mut config = VerifyConfig::from_env();
            if let Some(v) = max_n {
                config.max_n = v;
            }
            if let Some(v) = max_width {
                config.max_permutation_width = v;
            }
            cmd_verify(&kind.kinds(), n, &config, &report)
        }
        Command::Metrics { kind, n, report } => cmd_metrics(&kind.kinds(), n, &report),
        Command::Table { n_max, report } => cmd_table(n_max as usize, &report),
        Command::Export { input, doc } => cmd_export(&input, &doc),
    }
}

fn render_circuit(circuit: &Circuit, doc: &DocOutput) -> Result<Output, CliError> {
    let circuit = match doc.decompose {
        Some(k) => metrics::decompose_mcx(circuit, k as usize)
            .map_err(|e| CliError::Usage(e.to_string()))?,
        None => circuit.clone(),
    };
    let text = match doc.format {
        DocFormat::Qasm => qasm::export_qasm(&circuit),
        DocFormat::Json => qasm::to_json(&circuit),
    };
    Ok(Output {
        text,
        path: doc.out.clone(),
        failure: None,
    })
}

fn cmd_build(kind: AdderKind, n: usize, doc: &DocOutput) -> Result<Output, CliError> {
    let circuit = synth::build(kind, n).map_err(|e| CliError::Usage(e.to_string()))?;
    render_circuit(&circuit, doc)
}

fn cmd_export(input: &PathBuf, doc: &DocOutput) -> Result<Output, CliError> {
    let text = std::fs::read_to_string(input)
        .map_err(|e| CliError::Io(format!("{}: {e}", input.display())))?;
    let circuit =
        qasm::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", input.display())))?;
    render_circuit(&circuit, doc)
}

fn bits(v: &[bool]) -> String {
    v.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn cmd_simulate(
    kind: AdderKind,
    n: usize,
    a: u64,
    b: u64,
    c0: bool,
    report: &ReportOutput,
) -> Result<Output, CliError> {
    #[derive(Serialize)]
    struct Row {
        kind: AdderKind,
        n: usize,
        a: u64,
        b: u64,
        c0: bool,
        sum: u64,
        carry_out: bool,
        operand_a: u64,
        ancilla: String,
    }
    for (name, v) in [("a", a), ("b", b)] {
        if v >> n != 0 {
            return Err(CliError::Usage(format!(
                "operand {name}={v} does not fit in {n} bits"
            )));
        }
    }
    let r = sim::add(kind, n, a, b, c0).map_err(|e| CliError::Usage(e.to_string()))?;
    let row = Row {
        kind,
        n,
        a,
        b,
        c0,
        sum: r.sum,
        carry_out: r.carry_out,
        operand_a: r.operand_a,
        ancilla: bits(&r.internal),
    };
    let label = if kind == AdderKind::Qcla { "g" } else { "c" };
    let text = match report.format {
        ReportFormat::Human => format!(
            "{kind} n={n}: {a} + {b} + {c0}\nsum: {}\ncarry_out: {}\na: {}\n{label}[1..{n}): {}\n",
            r.sum,
            r.carry_out as u8,
            r.operand_a,
            row.ancilla,
            c0 = c0 as u8,
        ),
        ReportFormat::Csv => format!(
            "kind,n,a,b,c0,sum,carry_out,operand_a,ancilla\n{kind},{n},{a},{b},{},{},{},{},{}\n",
            c0 as u8, r.sum, r.carry_out as u8, r.operand_a, row.ancilla
        ),
        ReportFormat::Json => json_line(&row),
    };
    Ok(Output {
        text,
        path: report.out.clone(),
        failure: None,
    })
}

fn json_line<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Debug, Serialize)]
struct VerifyRow {
    kind: AdderKind,
    n: usize,
    cases: u64,
    failures: usize,
    /// None when the width exceeds the permutation-check limit.
    permutation: Option<bool>,
    counterexamples: Vec<sim::Counterexample>,
}

fn cmd_verify(
    kinds: &[AdderKind],
    range: NRange,
    config: &VerifyConfig,
    report: &ReportOutput,
) -> Result<Output, CliError> {
    if range.hi > config.max_n {
        return Err(CliError::Usage(format!(
            "n={} exceeds the exhaustive limit {} (raise with --max-n or {ENV_MAX_EXHAUSTIVE_N})",
            range.hi, config.max_n
        )));
    }
    let mut rows = Vec::new();
    for &kind in kinds {
        for n in range.iter() {
            let r = sim::exhaustive_verify(kind, n, config)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let circuit = synth::build(kind, n).map_err(|e| CliError::Usage(e.to_string()))?;
            let permutation = if circuit.width() <= config.max_permutation_width {
                Some(
                    sim::permutation_check(&circuit, config.max_permutation_width)
                        .map_err(|e| CliError::Usage(e.to_string()))?,
                )
            } else {
                None
            };
            rows.push(VerifyRow {
                kind,
                n,
                cases: r.cases,
                failures: r.failures.len(),
                permutation,
                counterexamples: r.failures,
            });
        }
    }
    let perm = |p: Option<bool>| match p {
        Some(true) => "pass",
        Some(false) => "FAIL",
        None => "skipped",
    };
    let mut text = String::new();
    match report.format {
        ReportFormat::Human => {
            let _ = writeln!(
                text,
                "{:<5} {:>3} {:>8} {:>8}  permutation",
                "kind", "n", "cases", "failures"
            );
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{:<5} {:>3} {:>8} {:>8}  {}",
                    r.kind.as_str(),
                    r.n,
                    r.cases,
                    r.failures,
                    perm(r.permutation)
                );
                for c in &r.counterexamples {
                    let _ = writeln!(
                        text,
                        "    a={} b={} c0={}: {}",
                        c.a, c.b, c.c0 as u8, c.reason
                    );
                }
            }
            let _ = writeln!(
                text,
                "permutation check limit: width <= {} ({ENV_MAX_PERMUTATION_WIDTH})",
                config.max_permutation_width
            );
        }
        ReportFormat::Csv => {
            text.push_str("kind,n,cases,failures,permutation\n");
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{}",
                    r.kind,
                    r.n,
                    r.cases,
                    r.failures,
                    perm(r.permutation)
                );
            }
        }
        ReportFormat::Json => text = json_line(&rows),
    }
    let bad = rows
        .iter()
        .filter(|r| r.failures > 0 || r.permutation == Some(false))
        .count();
    Ok(Output {
        text,
        path: report.out.clone(),
        failure: (bad > 0).then(|| {
            CliError::Failure(format!("{bad} adder configuration(s) failed verification"))
        }),
    })
}

fn histogram_str(r: &MetricsReport) -> String {
    r.arity_histogram
        .iter()
        .map(|(k, v)| format!("{k}:{v}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn cmd_metrics(
    kinds: &[AdderKind],
    range: NRange,
    report: &ReportOutput,
) -> Result<Output, CliError> {
    let mut rows = Vec::new();
    for &kind in kinds {
        for n in range.iter() {
            rows.push(metrics::metrics(kind, n).map_err(|e| CliError::Usage(e.to_string()))?);
        }
    }
    let mut text = String::new();
    match report.format {
        ReportFormat::Human => {
            let _ = writeln!(
                text,
                "{:<5} {:>3} {:>6} {:>10} {:>12} {:>10} {:>13}  arity histogram",
                "kind", "n", "gates", "asap_depth", "paper_stages", "cf_gates", "cf_stages"
            );
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{:<5} {:>3} {:>6} {:>10} {:>12} {:>10} {:>13}  {}",
                    r.kind.as_str(),
                    r.n,
                    r.gate_count,
                    r.asap_depth,
                    r.paper_stages,
                    r.closed_form_gates,
                    r.closed_form_stages,
                    histogram_str(r)
                );
            }
        }
        ReportFormat::Csv => {
            text.push_str("kind,n,gate_count,asap_depth,paper_stages,closed_form_gates,closed_form_stages,arity_histogram\n");
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{},{},{}",
                    r.kind,
                    r.n,
                    r.gate_count,
                    r.asap_depth,
                    r.paper_stages,
                    r.closed_form_gates,
                    r.closed_form_stages,
                    histogram_str(r)
                );
            }
        }
        ReportFormat::Json => text = json_line(&rows),
    }
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !r.gates_match_closed_form())
        .map(|r| format!("{} n={}", r.kind, r.n))
        .collect();
    Ok(Output {
        text,
        path: report.out.clone(),
        failure: (!bad.is_empty()).then(|| {
            CliError::Failure(format!(
                "gate count differs from closed form: {}",
                bad.join(", ")
            ))
        }),
    })
}

fn cmd_table(n_max: usize, report: &ReportOutput) -> Result<Output, CliError> {
    let rows = metrics::table1(n_max).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut text = String::new();
    match report.format {
        ReportFormat::Human => {
            let _ = writeln!(
                text,
                "{:>3} | {:>11} {:>10} | {:>10} {:>9} | {:>10} {:>9} | strict ASAP depth (QCLA/CQP/MQP)",
                "n", "QCLA stages", "QCLA gates", "CQP stages", "CQP gates", "MQP stages", "MQP gates"
            );
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{:>3} | {:>11} {:>10} | {:>10} {:>9} | {:>10} {:>9} | {}/{}/{}{}",
                    r.n,
                    r.qcla_stages,
                    r.qcla_gates,
                    r.cqp_stages,
                    r.cqp_gates,
                    r.mqp_stages,
                    r.mqp_gates,
                    r.qcla_asap_depth,
                    r.cqp_asap_depth,
                    r.mqp_asap_depth,
                    if r.gates_match { "" } else { "  MISMATCH" }
                );
            }
        }
        ReportFormat::Csv => {
            text.push_str("n,qcla_stages,qcla_gates,cqp_stages,cqp_gates,mqp_stages,mqp_gates,qcla_asap_depth,cqp_asap_depth,mqp_asap_depth,gates_match\n");
            for r in &rows {
                let _ = writeln!(
                    text,
                    "{},{},{},{},{},{},{},{},{},{},{}",
                    r.n,
                    r.qcla_stages,
                    r.qcla_gates,
                    r.cqp_stages,
                    r.cqp_gates,
                    r.mqp_stages,
                    r.mqp_gates,
                    r.qcla_asap_depth,
                    r.cqp_asap_depth,
                    r.mqp_asap_depth,
                    r.gates_match
                );
            }
        }
        ReportFormat::Json => text = json_line(&rows),
    }
    let bad: Vec<usize> = rows
        .iter()
        .filter(|r: &&Table1Row| !r.gates_match)
        .map(|r| r.n)
        .collect();
    Ok(Output {
        text,
        path: report.out.clone(),
        failure: (!bad.is_empty())
            .then(|| CliError::Failure(format!("closed-form mismatch at n = {bad:?}"))),
    })
}
