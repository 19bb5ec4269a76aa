// SPDX-License-Identifier: Apache-2.0

//! The `qlearn` command: simulate, grade and export circuit files, or run
//! the exercise service.
//!
//! [`run`] does all the work and writes to the given streams so it can be
//! driven from tests without spawning a process.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qlearn_core::format::{format_number, ZERO_THRESHOLD};
use qlearn_core::{
    export_circuit_with_input, export_results, grade, parse_circuit_file, parse_exercise, simulate, BitString, Circuit,
    CircuitFormat, GateRegistry, GradeResult, ResultFormat, ShotSession, MAX_QUBITS,
};
use qlearn_server::{Limits, ServeConfig, TokenTable};

pub const EXIT_OK: u8 = 0;
/// Incorrect answer, invalid input file or any other failure.
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "qlearn", version, about = "Quantum circuit exercises from the command line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the output distribution of a circuit.
    Simulate(SimulateArgs),
    /// Grade an attempt against an exercise.
    Grade(GradeArgs),
    /// Write a circuit as source code, or its final state as a table.
    Export(ExportArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Circuit YAML file.
    #[arg(long)]
    circuit: PathBuf,
    /// Input bitstring, q0 first. Defaults to the circuit's qubit values.
    #[arg(long)]
    input: Option<String>,
    /// Also print this many measurement shots.
    #[arg(long)]
    shots: Option<u32>,
    #[arg(long, default_value_t = 0, requires = "shots")]
    seed: u64,
    /// Also print amplitudes.
    #[arg(long)]
    state: bool,
    /// Leave out rows with zero probability.
    #[arg(long)]
    hide_zero_rows: bool,
}

#[derive(Debug, Args)]
struct GradeArgs {
    /// Exercise YAML file.
    #[arg(long)]
    exercise: PathBuf,
    /// Attempt circuit YAML file. Missing grid dimensions come from the exercise.
    #[arg(long)]
    attempt: PathBuf,
    /// Print the result as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    /// OpenQASM 2.0
    Qasm,
    /// Qiskit Python source
    Qiskit,
    /// Final amplitudes and probabilities as CSV
    Csv,
    /// Final amplitudes and probabilities as JSON
    Json,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["circuit", "exercise"]))]
struct ExportArgs {
    /// Circuit YAML file.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Export the model circuit of this exercise instead.
    #[arg(long)]
    exercise: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: ExportFormat,
    /// Input bitstring. Source formats prepare it with X gates.
    #[arg(long)]
    input: Option<String>,
    /// Write here instead of standard output.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, env = "QLEARN_BIND", default_value = "127.0.0.1")]
    bind: IpAddr,
    #[arg(long, env = "QLEARN_PORT", default_value_t = 8080)]
    port: u16,
    /// Directory of exercise YAML files.
    #[arg(long, env = "QLEARN_EXERCISES")]
    exercises: PathBuf,
    /// SQLite database for attempts. Attempts are kept in memory without it.
    #[arg(long, env = "QLEARN_STORAGE")]
    storage: Option<PathBuf>,
    /// Circuits above this size are simulated by the server.
    #[arg(long, env = "QLEARN_CLIENT_QUBITS", default_value_t = Limits::default().client_qubit_threshold)]
    client_qubits: usize,
    #[arg(long, env = "QLEARN_MAX_QUBITS", default_value_t = Limits::default().max_qubits)]
    max_qubits: usize,
    /// Tokens as `token=user:role`, comma separated.
    #[arg(long, env = "QLEARN_TOKENS", conflicts_with = "tokens_file")]
    tokens: Option<String>,
    /// File with one `token=user:role` per line.
    #[arg(long, env = "QLEARN_TOKENS_FILE")]
    tokens_file: Option<PathBuf>,
    /// Poll the exercise directory this often, in milliseconds. 0 disables reloading.
    #[arg(long, env = "QLEARN_RELOAD_MS", default_value_t = 2000)]
    reload_ms: u64,
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_FAILURE,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Failure {
        Failure::new(e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

/// Runs the command line `args` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code() as u8;
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => run_simulate(a, out, err),
        Command::Grade(a) => run_grade(a, out, err),
        Command::Export(a) => run_export(a, out, err),
        Command::Serve(a) => run_serve(a),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "qlearn: {}", f.message);
            f.code
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(format!("{}: {e}", path.display())))
}

fn warn(err: &mut dyn Write, path: &Path, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(err, "warning: {}: {w}", path.display());
    }
}

fn load_circuit(path: &Path, err: &mut dyn Write) -> Result<(Circuit, GateRegistry), Failure> {
    let parsed = parse_circuit_file(&read(path)?).map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
    warn(err, path, &parsed.warnings);
    let file = parsed.value;
    let registry = file
        .registry()
        .map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
    let circuit = file
        .to_circuit()
        .map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
    check_valid(&circuit, &registry, path)?;
    Ok((circuit, registry))
}

fn load_exercise(path: &Path, err: &mut dyn Write) -> Result<qlearn_core::Exercise, Failure> {
    let parsed = parse_exercise(&read(path)?).map_err(|e| Failure::new(format!("{}: {e}", path.display())))?;
    warn(err, path, &parsed.warnings);
    Ok(parsed.value)
}

fn check_valid(circuit: &Circuit, registry: &GateRegistry, path: &Path) -> Result<(), Failure> {
    let violations = circuit.validate(registry);
    if violations.is_empty() {
        return Ok(());
    }
    let list: Vec<String> = violations.iter().map(|v| format!("  {v}")).collect();
    Err(Failure::new(format!(
        "{}: invalid circuit\n{}",
        path.display(),
        list.join("\n")
    )))
}

fn parse_input(text: Option<&str>, circuit: &Circuit) -> Result<BitString, Failure> {
    match text {
        Some(t) => BitString::parse_for(t, circuit.n_qubits()).map_err(|e| Failure::usage(format!("--input: {e}"))),
        None => Ok(circuit.default_input()),
    }
}

fn run_simulate(a: SimulateArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (circuit, registry) = load_circuit(&a.circuit, err)?;
    let input = parse_input(a.input.as_deref(), &circuit)?;
    if a.shots == Some(0) {
        return Err(Failure::usage("--shots must be at least 1"));
    }
    let state = simulate(&circuit, &input, &registry).map_err(|e| Failure::new(e.to_string()))?;
    let dist = state.probabilities();
    let hidden = |p: f64| a.hide_zero_rows && p < ZERO_THRESHOLD;
    for row in dist.export_rows() {
        if !hidden(row.p) {
            writeln!(out, "{}: {}", row.bitstring, format_number(row.p))?;
        }
    }
    if a.state {
        writeln!(out)?;
        writeln!(out, "amplitudes:")?;
        for (row, p) in state.export_rows().into_iter().zip(dist.probabilities()) {
            if !hidden(*p) {
                writeln!(
                    out,
                    "{}: {} {}",
                    row.bitstring,
                    format_number(row.re),
                    format_number(row.im)
                )?;
            }
        }
    }
    if let Some(shots) = a.shots {
        writeln!(out)?;
        writeln!(out, "shots (seed {}):", a.seed)?;
        let mut session = ShotSession::new(a.seed);
        for _ in 0..shots {
            let shot = session.measure_shot(&dist, &input);
            writeln!(out, "{} {} -> {}", shot.index, shot.input, shot.output)?;
        }
    }
    Ok(EXIT_OK)
}

fn write_grade(result: &GradeResult, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "{}", result.feedback)?;
    writeln!(out, "correct: {}", result.correct)?;
    writeln!(out, "points: {:?}", result.points)?;
    if let Some(stage) = result.failed_stage {
        writeln!(
            out,
            "failed stage: {}",
            serde_json::to_value(stage)
                .unwrap_or_default()
                .as_str()
                .unwrap_or_default()
        )?;
    }
    if let Some(c) = &result.failed_condition {
        writeln!(out, "failed condition: {c}")?;
    }
    if let Some(cx) = &result.counterexample {
        writeln!(out, "counterexample input: {}", cx.input)?;
        writeln!(out, "  bitstring  expected  actual")?;
        for (e, g) in cx.expected.export_rows().iter().zip(cx.actual.export_rows()) {
            writeln!(out, "  {}: {} {}", e.bitstring, format_number(e.p), format_number(g.p))?;
        }
    }
    Ok(())
}

fn run_grade(a: GradeArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let exercise = load_exercise(&a.exercise, err)?;
    let parsed =
        parse_circuit_file(&read(&a.attempt)?).map_err(|e| Failure::new(format!("{}: {e}", a.attempt.display())))?;
    warn(err, &a.attempt, &parsed.warnings);
    let circuit = parsed
        .value
        .to_attempt(&exercise)
        .map_err(|e| Failure::new(format!("{}: {e}", a.attempt.display())))?;
    let result = grade(&circuit, &exercise, exercise.registry()).map_err(|e| Failure::new(e.to_string()))?;
    if a.json {
        let text = serde_json::to_string_pretty(&result).map_err(|e| Failure::new(e.to_string()))?;
        writeln!(out, "{text}")?;
    } else {
        write_grade(&result, out)?;
    }
    Ok(if result.correct { EXIT_OK } else { EXIT_FAILURE })
}

fn run_export(a: ExportArgs, out: &mut dyn Write, err: &mut dyn Write) -> Outcome {
    let (circuit, registry) = match (&a.circuit, &a.exercise) {
        (Some(path), _) => load_circuit(path, err)?,
        (None, Some(path)) => {
            let exercise = load_exercise(path, err)?;
            (exercise.model_circuit(), exercise.registry().clone())
        }
        (None, None) => unreachable!("clap requires a source"),
    };
    let input = parse_input(a.input.as_deref(), &circuit)?;
    let text = match a.format {
        ExportFormat::Qasm | ExportFormat::Qiskit => {
            let format = if a.format == ExportFormat::Qasm {
                CircuitFormat::OpenQasm2
            } else {
                CircuitFormat::FrameworkSource
            };
            export_circuit_with_input(&circuit, &registry, format, &input)
        }
        ExportFormat::Csv | ExportFormat::Json => {
            let state = simulate(&circuit, &input, &registry).map_err(|e| Failure::new(e.to_string()))?;
            let format = if a.format == ExportFormat::Csv {
                ResultFormat::Tabular
            } else {
                ResultFormat::Structured
            };
            export_results(&state, &state.probabilities(), format)
        }
    }
    .map_err(|e| Failure::new(e.to_string()))?;
    match &a.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::new(format!("{}: {e}", path.display())))?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(EXIT_OK)
}

fn serve_config(a: ServeArgs) -> Result<ServeConfig, Failure> {
    if a.max_qubits == 0 || a.max_qubits > MAX_QUBITS {
        return Err(Failure::usage(format!(
            "--max-qubits must be between 1 and {MAX_QUBITS}"
        )));
    }
    if a.client_qubits > a.max_qubits {
        return Err(Failure::usage("--client-qubits cannot exceed --max-qubits"));
    }
    let spec = match (&a.tokens, &a.tokens_file) {
        (Some(t), _) => t.clone(),
        (None, Some(path)) => read(path)?,
        (None, None) => String::new(),
    };
    let tokens = TokenTable::parse(&spec).map_err(Failure::usage)?;
    Ok(ServeConfig {
        addr: SocketAddr::new(a.bind, a.port),
        exercise_dir: a.exercises,
        storage: a.storage,
        limits: Limits {
            client_qubit_threshold: a.client_qubits,
            max_qubits: a.max_qubits,
        },
        tokens,
        reload_every: (a.reload_ms > 0).then(|| Duration::from_millis(a.reload_ms)),
    })
}

fn run_serve(a: ServeArgs) -> Outcome {
    let config = serve_config(a)?;
    let _ = tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info")),
        )
        .with_writer(std::io::stderr)
        .try_init();
    let runtime = tokio::runtime::Runtime::new()?;
    runtime
        .block_on(qlearn_server::serve(config))
        .map_err(|e| Failure::new(e.to_string()))?;
    Ok(EXIT_OK)
}
