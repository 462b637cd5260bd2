//! Command-line front end: argument types, the `run`, `compile`, `sweep` and
//! `circuit` commands, and report rendering.
//!
//! Commands return rendered text rather than printing, so the binary is a thin
//! wrapper around [`main_with_args`] and everything else is testable in
//! process.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, ConfusionMatrix, MarkingPrior};
use crate::compile::{
    cnot_from_ms, compile_circuit, cz_from_ms, sequence_unitary, PulseRecord, PulseSchedule,
    TimingModel,
};
use crate::error::Error;
use crate::gates::{standard_matrix, GateSpec, StandardGate};
use crate::grover::{
    build_diagnostic_circuit, build_experimental_circuit, build_textbook_circuit, leading_marginal,
    run_ideal, Circuit, Marking, AMPLIFICATION_PHASE, PREPARATION_PHASE,
};
use crate::noise::{derive_seed, run_noisy, NoiseModel};
use crate::state::basis_label;

/// Version of every report layout emitted by this module.
pub const SCHEMA_VERSION: u32 = 1;

const VERIFY_TOLERANCE: f64 = 1e-9;

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const VERIFICATION: i32 = 2;
}

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Bad flags, bad configuration or a failed computation.
    Usage(String),
    /// A compiled schedule did not reproduce its target unitary.
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Verification(_) => exit::VERIFICATION,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn field_error(field: &str, e: impl fmt::Display) -> CliError {
    CliError::Usage(format!("invalid --{field}: {e}"))
}

pub type CliResult<T> = std::result::Result<T, CliError>;

// ---------------------------------------------------------------------------
// argument types

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    /// Two ions, no ancilla, native gates only.
    Experimental,
    /// Standard-gate circuit with an ancilla; any register size.
    Textbook,
    /// The experimental circuit without its final entangling gate.
    Diagnostic,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Experimental => "experimental",
            Variant::Textbook => "textbook",
            Variant::Diagnostic => "diagnostic",
        }
    }
}

/// What `compile` can lower: a search circuit or a bare two-qubit gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CompileTarget {
    Experimental,
    Textbook,
    Diagnostic,
    Cnot,
    Cz,
}

impl CompileTarget {
    pub fn name(self) -> &'static str {
        match self {
            CompileTarget::Experimental => "experimental",
            CompileTarget::Textbook => "textbook",
            CompileTarget::Diagnostic => "diagnostic",
            CompileTarget::Cnot => "cnot",
            CompileTarget::Cz => "cz",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MarkedSpec {
    All,
    One(Marking),
}

impl MarkedSpec {
    pub fn parse(s: &str) -> CliResult<Self> {
        if s == "all" {
            Ok(MarkedSpec::All)
        } else {
            s.parse()
                .map(MarkedSpec::One)
                .map_err(|e| field_error("marked", e))
        }
    }

    fn markings(&self, n_bits: usize) -> Vec<Marking> {
        match self {
            MarkedSpec::All => Marking::all(n_bits),
            MarkedSpec::One(m) => vec![m.clone()],
        }
    }
}

impl fmt::Display for MarkedSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MarkedSpec::All => f.write_str("all"),
            MarkedSpec::One(m) => m.fmt(f),
        }
    }
}

/// Where the noise parameters come from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NoiseSource {
    Ideal,
    Default,
    File(PathBuf),
}

impl NoiseSource {
    pub fn parse(s: &str) -> Self {
        match s {
            "ideal" => NoiseSource::Ideal,
            "default" => NoiseSource::Default,
            path => NoiseSource::File(PathBuf::from(path)),
        }
    }

    pub fn resolve(&self) -> CliResult<NoiseModel> {
        match self {
            NoiseSource::Ideal => Ok(NoiseModel::ideal()),
            NoiseSource::Default => Ok(NoiseModel::calibrated()),
            NoiseSource::File(path) => load_noise_file(path),
        }
    }
}

impl fmt::Display for NoiseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseSource::Ideal => f.write_str("ideal"),
            NoiseSource::Default => f.write_str("default"),
            NoiseSource::File(p) => write!(f, "{}", p.display()),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseFile {
    p_ms: Option<f64>,
    p_1q: Option<f64>,
    p_1q_global: Option<f64>,
    readout_flip: Option<f64>,
}

/// Parses flat `key = value` noise settings. Missing keys take the
/// calibrated defaults; unknown keys are rejected.
pub fn parse_noise_config(text: &str) -> CliResult<NoiseModel> {
    let file: NoiseFile = toml::from_str(text).map_err(|e| field_error("noise", e))?;
    let d = NoiseModel::calibrated();
    let model = NoiseModel {
        p_ms: file.p_ms.unwrap_or(d.p_ms),
        p_1q: file.p_1q.unwrap_or(d.p_1q),
        p_1q_global: file.p_1q_global.unwrap_or(d.p_1q_global),
        readout_flip: file.readout_flip.unwrap_or(d.readout_flip),
    };
    model.validate().map_err(|e| field_error("noise", e))?;
    Ok(model)
}

pub fn load_noise_file(path: &Path) -> CliResult<NoiseModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| field_error("noise", format!("{}: {e}", path.display())))?;
    parse_noise_config(&text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
pub enum SweepParameter {
    #[value(name = "p_ms", alias = "p-ms")]
    #[serde(rename = "p_ms")]
    PMs,
    #[value(name = "shots")]
    #[serde(rename = "shots")]
    Shots,
    /// Search-space size; implies the textbook variant.
    #[value(name = "N", alias = "n")]
    #[serde(rename = "N")]
    SearchSize,
}

// ---------------------------------------------------------------------------
// clap surface

#[derive(Debug, Parser)]
#[command(name = "iongrover", version, about = "Two-ion Grover search simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a search circuit and report outcome statistics.
    Run(RunArgs),
    /// Lower a two-qubit circuit to native pulses and verify it.
    Compile(CompileArgs),
    /// Repeat `run` over a range of one parameter.
    Sweep(SweepArgs),
    /// Print the gate list of a search circuit as JSON.
    Circuit(CircuitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[arg(long, value_enum, default_value = "experimental")]
    pub variant: Variant,
    /// Marked bitstring (qubit 0 first) or `all`.
    #[arg(long, default_value = "all")]
    pub marked: String,
    #[arg(long, default_value_t = 500)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// `ideal`, `default`, or a path to a key-value noise file.
    #[arg(long, default_value = "default")]
    pub noise: String,
    /// Data qubits; textbook variant only.
    #[arg(long)]
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompileArgs {
    #[arg(long, value_enum, default_value = "experimental")]
    pub variant: CompileTarget,
    #[arg(long, default_value = "11")]
    pub marked: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub param: SweepParameter,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', num_args = 0.., required = true)]
    pub values: Vec<f64>,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CircuitArgs {
    #[arg(long, value_enum, default_value = "experimental")]
    pub variant: Variant,
    #[arg(long, default_value = "11")]
    pub marked: String,
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub output: OutputArgs,
}

// ---------------------------------------------------------------------------
// run

/// Fully resolved simulation settings.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub variant: Variant,
    pub marked: MarkedSpec,
    pub shots: u64,
    pub seed: u64,
    pub noise: NoiseModel,
    pub noise_source: String,
    /// Data qubits (excludes the textbook ancilla).
    pub n_qubits: usize,
}

impl RunConfig {
    /// Two-qubit experimental run with the given marking and noise.
    pub fn new(variant: Variant, marked: MarkedSpec, noise: NoiseModel) -> Self {
        let n_qubits = match &marked {
            MarkedSpec::One(m) => m.len(),
            MarkedSpec::All => 2,
        };
        Self {
            variant,
            marked,
            shots: 500,
            seed: 0,
            noise,
            noise_source: "custom".into(),
            n_qubits,
        }
    }

    pub fn from_args(args: &SimArgs) -> CliResult<Self> {
        let marked = MarkedSpec::parse(&args.marked)?;
        let source = NoiseSource::parse(&args.noise);
        let noise = source.resolve()?;
        let n_qubits = match (args.n, &marked, args.variant) {
            (Some(n), _, _) => n,
            (None, MarkedSpec::One(m), Variant::Textbook) => m.len(),
            (None, _, _) => 2,
        };
        let config = Self {
            variant: args.variant,
            marked,
            shots: args.shots,
            seed: args.seed,
            noise,
            noise_source: source.to_string(),
            n_qubits,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.shots == 0 {
            return Err(field_error("shots", "must be at least 1"));
        }
        match self.variant {
            Variant::Experimental | Variant::Diagnostic if self.n_qubits != 2 => {
                return Err(field_error(
                    "n",
                    format!("the {} variant has exactly 2 qubits", self.variant.name()),
                ));
            }
            Variant::Textbook if self.n_qubits < 2 => {
                return Err(field_error(
                    "n",
                    "textbook search needs at least 2 data qubits",
                ));
            }
            _ => {}
        }
        if let MarkedSpec::One(m) = &self.marked {
            if m.len() != self.n_qubits {
                return Err(field_error(
                    "marked",
                    format!("`{m}` does not have {} bits", self.n_qubits),
                ));
            }
        }
        self.noise.validate().map_err(|e| field_error("noise", e))?;
        Ok(())
    }
}

/// Configuration echoed in every run report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveConfig {
    pub variant: Variant,
    pub marked: String,
    pub n_qubits: usize,
    pub shots: u64,
    pub seed: u64,
    pub noise_source: String,
    pub noise: NoiseModel,
    pub prior: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkingReport {
    pub marked: Marking,
    /// Seed actually used for this marking's shots.
    pub seed: u64,
    /// Observed outcomes only; absent outcomes have count 0.
    pub counts: BTreeMap<String, u64>,
    pub frequencies: BTreeMap<String, f64>,
    pub success: f64,
    /// Exact noiseless probability of reading the marking.
    pub ideal_success: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: EffectiveConfig,
    pub markings: Vec<MarkingReport>,
    pub confusion_matrix: Option<ConfusionMatrix>,
    pub average_success: f64,
    pub mutual_information: Option<f64>,
}

/// The circuit for `variant` on `n_data` data qubits. Textbook circuits carry
/// one extra ancilla qubit after the data qubits.
pub fn build_circuit(variant: Variant, n_data: usize, marked: &Marking) -> CliResult<Circuit> {
    let c = match variant {
        Variant::Experimental => build_experimental_circuit(marked),
        Variant::Diagnostic => build_diagnostic_circuit(marked),
        Variant::Textbook => build_textbook_circuit(n_data, marked),
    };
    c.map_err(|e| field_error("marked", e))
}

/// Per-marking data-register counts and exact ideal distribution.
fn simulate_marking(
    config: &RunConfig,
    marked: &Marking,
    seed: u64,
) -> CliResult<(Vec<u64>, Vec<f64>)> {
    let circuit = build_circuit(config.variant, config.n_qubits, marked)?;
    let ideal = leading_marginal(&run_ideal(&circuit)?, config.n_qubits);
    let raw = run_noisy(&circuit, &config.noise, config.shots, seed)?;
    let shift = circuit.n_qubits - config.n_qubits;
    let mut counts = vec![0u64; 1 << config.n_qubits];
    for (outcome, c) in raw.iter().enumerate() {
        counts[outcome >> shift] += c;
    }
    Ok((counts, ideal))
}

pub fn cmd_run(config: &RunConfig) -> CliResult<RunReport> {
    config.validate()?;
    let n = config.n_qubits;
    let markings = config.marked.markings(n);
    let mut reports = Vec::with_capacity(markings.len());
    let mut all_counts = Vec::with_capacity(markings.len());
    for marked in &markings {
        let seed = derive_seed(config.seed, marked.index() as u64);
        let (counts, ideal) = simulate_marking(config, marked, seed)?;
        let total = config.shots as f64;
        let observed: BTreeMap<String, u64> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(x, &c)| (basis_label(x, n), c))
            .collect();
        let frequencies = observed
            .iter()
            .map(|(k, &c)| (k.clone(), c as f64 / total))
            .collect();
        reports.push(MarkingReport {
            marked: marked.clone(),
            seed,
            counts: observed,
            frequencies,
            success: counts[marked.index()] as f64 / total,
            ideal_success: ideal[marked.index()],
        });
        all_counts.push(counts);
    }

    let (confusion_matrix, average_success, mutual_information) = match config.marked {
        MarkedSpec::All => {
            let cm = analysis::confusion_from_counts(&all_counts)?;
            let prior = MarkingPrior::uniform(cm.n_outcomes());
            let avg = analysis::average_success(&cm, &prior)?;
            let mi = analysis::mutual_information(&cm, &prior)?;
            (Some(cm), avg, Some(mi))
        }
        MarkedSpec::One(_) => (None, reports[0].success, None),
    };

    Ok(RunReport {
        schema_version: SCHEMA_VERSION,
        config: EffectiveConfig {
            variant: config.variant,
            marked: config.marked.to_string(),
            n_qubits: n,
            shots: config.shots,
            seed: config.seed,
            noise_source: config.noise_source.clone(),
            noise: config.noise,
            prior: "uniform".into(),
        },
        markings: reports,
        confusion_matrix,
        average_success,
        mutual_information,
    })
}

#[derive(Serialize)]
struct RunCsvRow<'a> {
    schema_version: u32,
    variant: &'static str,
    marked: String,
    outcome: &'a str,
    count: u64,
    frequency: f64,
    seed: u64,
    shots: u64,
}

/// One row per observed (marking, outcome) pair.
pub fn run_report_csv(report: &RunReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for m in &report.markings {
        for (outcome, &count) in &m.counts {
            w.serialize(RunCsvRow {
                schema_version: report.schema_version,
                variant: report.config.variant.name(),
                marked: m.marked.to_string(),
                outcome,
                count,
                frequency: m.frequencies[outcome],
                seed: m.seed,
                shots: report.config.shots,
            })
            .map_err(csv_error)?;
        }
    }
    finish_csv(w)
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Usage(format!("cannot write csv: {e}"))
}

fn finish_csv(w: csv::Writer<Vec<u8>>) -> CliResult<String> {
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Usage(format!("cannot write csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Usage(e.to_string()))
}

// ---------------------------------------------------------------------------
// compile

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompileReport {
    pub schema_version: u32,
    pub variant: String,
    pub marked: Option<Marking>,
    pub timing: TimingModel,
    pub pulses: Vec<PulseRecord>,
    pub pulse_count: usize,
    pub ms_count: usize,
    pub total_duration_us: f64,
    /// `|Tr(U†V)|/4` between the compiled schedule and its target.
    pub overlap: f64,
    pub verified: bool,
}

/// The standard-gate form the compiled search circuit must reproduce: the
/// same rotations around a textbook X-conjugated controlled-Z oracle.
fn reference_search_gates(marked: &Marking, with_ms: bool) -> Vec<GateSpec> {
    let zeros: Vec<usize> = (0..2).filter(|&q| !marked.bits()[q]).collect();
    let mut gates = vec![GateSpec::global_rotation(
        0..2,
        std::f64::consts::FRAC_PI_2,
        PREPARATION_PHASE,
    )];
    gates.extend(zeros.iter().map(|&q| GateSpec::pauli_x(q)));
    gates.push(GateSpec::cz(0, 1));
    gates.extend(zeros.iter().map(|&q| GateSpec::pauli_x(q)));
    gates.push(GateSpec::global_rotation(
        0..2,
        std::f64::consts::FRAC_PI_2,
        AMPLIFICATION_PHASE,
    ));
    if with_ms {
        gates.push(GateSpec::ms(0, 1));
    }
    gates
}

/// Lowers `target` to pulses and checks the schedule against its reference
/// unitary. A failed check is returned in the report, not as an error.
pub fn cmd_compile(
    target: CompileTarget,
    marked: &Marking,
    timing: &TimingModel,
) -> CliResult<CompileReport> {
    let (circuit, reference, marked) = match target {
        CompileTarget::Cnot => {
            let mut c = Circuit::new(2, "cnot");
            c.extend(cnot_from_ms())?;
            (c, standard_matrix(StandardGate::Cnot), None)
        }
        CompileTarget::Cz => {
            let mut c = Circuit::new(2, "cz");
            c.extend(cz_from_ms())?;
            (c, standard_matrix(StandardGate::Cz), None)
        }
        CompileTarget::Textbook => {
            let c = build_circuit(Variant::Textbook, marked.len(), marked)?;
            compile_circuit(&c, timing)?;
            unreachable!("textbook circuits contain multi-controlled gates");
        }
        CompileTarget::Experimental | CompileTarget::Diagnostic => {
            if marked.len() != 2 {
                return Err(field_error(
                    "marked",
                    format!("`{marked}` does not have 2 bits"),
                ));
            }
            let with_ms = target == CompileTarget::Experimental;
            let c = if with_ms {
                build_experimental_circuit(marked)?
            } else {
                build_diagnostic_circuit(marked)?
            };
            let reference = sequence_unitary(&reference_search_gates(marked, with_ms), 2)?;
            (c, reference, Some(marked.clone()))
        }
    };

    let schedule: PulseSchedule = compile_circuit(&circuit, timing)?;
    let compiled = sequence_unitary(&schedule.to_gates(), 2)?;
    let overlap = compiled.phase_overlap(&reference);
    Ok(CompileReport {
        schema_version: SCHEMA_VERSION,
        variant: target.name().into(),
        marked,
        timing: *timing,
        pulses: schedule.records(),
        pulse_count: schedule.len(),
        ms_count: schedule.ms_count(),
        total_duration_us: schedule.total_duration_us(),
        overlap,
        verified: overlap >= 1.0 - VERIFY_TOLERANCE,
    })
}

#[derive(Serialize)]
struct PulseCsvRow<'a> {
    schema_version: u32,
    index: usize,
    kind: &'a str,
    theta: Option<f64>,
    phi: Option<f64>,
    qubits: String,
    duration_us: f64,
}

pub fn compile_report_csv(report: &CompileReport) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for (index, p) in report.pulses.iter().enumerate() {
        let qubits: Vec<String> = p.qubits.iter().map(|q| q.to_string()).collect();
        w.serialize(PulseCsvRow {
            schema_version: report.schema_version,
            index,
            kind: &p.kind,
            theta: p.params.get("theta").copied(),
            phi: p.params.get("phi").copied(),
            qubits: qubits.join(" "),
            duration_us: p.duration_us,
        })
        .map_err(csv_error)?;
    }
    finish_csv(w)
}

// ---------------------------------------------------------------------------
// sweep

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub schema_version: u32,
    pub parameter: SweepParameter,
    pub value: f64,
    pub variant: Variant,
    pub n_qubits: usize,
    pub markings: usize,
    pub shots: u64,
    pub seed: u64,
    pub p_ms: f64,
    pub p_1q: f64,
    pub p_1q_global: f64,
    pub readout_flip: f64,
    /// Pooled success over every marking's shots.
    pub mean_success: f64,
    /// Binomial standard error of `mean_success`.
    pub std_error: f64,
    /// Mean exact noiseless success over the markings.
    pub ideal_success: f64,
}

fn config_for(param: SweepParameter, value: f64, base: &RunConfig) -> CliResult<RunConfig> {
    let mut c = base.clone();
    match param {
        SweepParameter::PMs => c.noise.p_ms = value,
        SweepParameter::Shots => {
            if value < 1.0 || value.fract() != 0.0 || value > u64::MAX as f64 {
                return Err(field_error(
                    "values",
                    format!("{value} is not a shot count"),
                ));
            }
            c.shots = value as u64;
        }
        SweepParameter::SearchSize => {
            let size = value as u64;
            if value.fract() != 0.0 || value < 4.0 || !size.is_power_of_two() {
                return Err(field_error(
                    "values",
                    format!("{value} is not a power-of-two search size of at least 4"),
                ));
            }
            c.variant = Variant::Textbook;
            c.n_qubits = size.trailing_zeros() as usize;
        }
    }
    c.validate().map_err(|e| match e {
        CliError::Usage(m) => CliError::Usage(format!("{m} (at sweep value {value})")),
        other => other,
    })?;
    Ok(c)
}

pub fn cmd_sweep(
    param: SweepParameter,
    values: &[f64],
    base: &RunConfig,
) -> CliResult<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(field_error("values", "empty sweep range"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(field_error("values", "values must be finite"));
    }
    values
        .iter()
        .map(|&value| {
            let config = config_for(param, value, base)?;
            let report = cmd_run(&config)?;
            let k = report.markings.len() as f64;
            let trials = config.shots as f64 * k;
            let hits: f64 = report
                .markings
                .iter()
                .map(|m| m.success * config.shots as f64)
                .sum();
            let mean = hits / trials;
            let ideal = report.markings.iter().map(|m| m.ideal_success).sum::<f64>() / k;
            Ok(SweepRow {
                schema_version: SCHEMA_VERSION,
                parameter: param,
                value,
                variant: config.variant,
                n_qubits: config.n_qubits,
                markings: report.markings.len(),
                shots: config.shots,
                seed: config.seed,
                p_ms: config.noise.p_ms,
                p_1q: config.noise.p_1q,
                p_1q_global: config.noise.p_1q_global,
                readout_flip: config.noise.readout_flip,
                mean_success: mean,
                std_error: (mean * (1.0 - mean) / trials).max(0.0).sqrt(),
                ideal_success: ideal,
            })
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    finish_csv(w)
}

// ---------------------------------------------------------------------------
// dispatch

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Usage(format!("cannot encode report: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn parse_marking(s: &str) -> CliResult<Marking> {
    match MarkedSpec::parse(s)? {
        MarkedSpec::One(m) => Ok(m),
        MarkedSpec::All => Err(field_error("marked", "a single bitstring is required here")),
    }
}

/// Rendered output of one command, plus whether it should exit with the
/// verification code.
#[derive(Clone, Debug, PartialEq)]
pub struct Output {
    pub text: String,
    pub out: Option<PathBuf>,
    pub verified: bool,
}

pub fn execute(cli: &Cli) -> CliResult<Output> {
    let (text, output, verified) = match &cli.command {
        Command::Run(a) => {
            let report = cmd_run(&RunConfig::from_args(&a.sim)?)?;
            let text = match a.output.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&report)?,
                Format::Csv => run_report_csv(&report)?,
            };
            (text, &a.output, true)
        }
        Command::Compile(a) => {
            let marked = parse_marking(&a.marked)?;
            let report = cmd_compile(a.variant, &marked, &TimingModel::default())?;
            let text = match a.output.format.unwrap_or(Format::Json) {
                Format::Json => to_json(&report)?,
                Format::Csv => compile_report_csv(&report)?,
            };
            (text, &a.output, report.verified)
        }
        Command::Sweep(a) => {
            let base = RunConfig::from_args(&a.sim)?;
            let rows = cmd_sweep(a.param, &a.values, &base)?;
            let text = match a.output.format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&rows)?,
                Format::Csv => sweep_csv(&rows)?,
            };
            (text, &a.output, true)
        }
        Command::Circuit(a) => {
            let marked = parse_marking(&a.marked)?;
            let n = a.n.unwrap_or(marked.len());
            if a.variant != Variant::Textbook && n != 2 {
                return Err(field_error("n", "only the textbook variant takes --n"));
            }
            if a.output.format == Some(Format::Csv) {
                return Err(field_error("format", "circuits are emitted as JSON only"));
            }
            if marked.len() != n {
                return Err(field_error(
                    "marked",
                    format!("`{marked}` does not have {n} bits"),
                ));
            }
            (
                to_json(&build_circuit(a.variant, n, &marked)?)?,
                &a.output,
                true,
            )
        }
    };
    Ok(Output {
        text,
        out: output.out.clone(),
        verified,
    })
}

/// Parses `args`, runs the command and writes its output. Returns the process
/// exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(output) => {
            let written = match &output.out {
                Some(path) => std::fs::write(path, &output.text)
                    .map_err(|e| field_error("out", format!("{}: {e}", path.display()))),
                None => {
                    print!("{}", output.text);
                    Ok(())
                }
            };
            if let Err(e) = written {
                eprintln!("error: {e}");
                return e.exit_code();
            }
            if output.verified {
                exit::SUCCESS
            } else {
                let e = CliError::Verification(
                    "compiled schedule does not match its target unitary".into(),
                );
                eprintln!("error: {e}");
                e.exit_code()
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
