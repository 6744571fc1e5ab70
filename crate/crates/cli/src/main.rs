use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use roadmap_core::ci::{self, CiError, CrossoverParams};
use roadmap_core::jw::{self, FermionIntegrals, JwError};
use roadmap_core::kak::{self, KakError};
use roadmap_core::numkit::{self, NumError};
use roadmap_core::simulator::{self, EnergyWindow, IpeaMode, SimError, StateVector};
use roadmap_core::vintage::{self, BoysMatrix};
use serde_json::json;

#[derive(Parser)]
#[command(name = "roadmap", version, about = "Quantum chemistry simulation workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Exact,
    Sampled,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Which {
    Six,
    Ten,
}

#[derive(Subcommand)]
enum Command {
    /// Build the CI matrix of an integral file and print its spectrum.
    Ci {
        #[arg(long)]
        input: PathBuf,
        /// Electron count; defaults to NELEC from the file.
        #[arg(long)]
        electrons: Option<usize>,
        /// Where to write the CI matrix; printed to stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Compile a unitary matrix file into CNOT and rotation gates.
    Decompose {
        #[arg(long)]
        input: PathBuf,
        /// Where to write the circuit JSON.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Iterative phase estimation of one eigenvalue of a Hermitian matrix file.
    PhaseEstimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value_t = 16)]
        bits: usize,
        #[arg(long, value_enum, default_value = "exact")]
        mode: Mode,
        #[arg(long, default_value_t = 100)]
        shots: u64,
        /// Required in sampled mode.
        #[arg(long)]
        seed: Option<u64>,
        /// Index of the eigenvector prepared in the register, in ascending energy order.
        #[arg(long, default_value_t = 0)]
        state: usize,
        #[arg(long, default_value_t = 0.1)]
        margin: f64,
        /// Override the evolution time of the energy window (requires --shift).
        #[arg(long, requires = "shift")]
        tau: Option<f64>,
        /// Override the energy offset of the window (requires --tau).
        #[arg(long, requires = "tau", allow_hyphen_values = true)]
        shift: Option<f64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compact versus direct mapping gate counts over a qubit range.
    Crossover {
        #[arg(long, default_value_t = 5)]
        electrons: usize,
        #[arg(long, default_value_t = 1.0)]
        prefactor: f64,
        #[arg(long, default_value_t = 5)]
        bits: u32,
        #[arg(long, default_value_t = 6)]
        qmin: usize,
        #[arg(long, default_value_t = 20)]
        qmax: usize,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Historical qubit requirements of CI calculations.
    Roadmap {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Historical SCF calculations of water and their CI qubit requirements.
    WaterScf {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Ground energy of the Boys beryllium CI matrix by phase estimation.
    Boys {
        #[arg(long, value_enum, default_value = "six")]
        matrix: Which,
        #[arg(long, default_value_t = 20)]
        bits: usize,
        /// Also compile the evolution operator into a circuit.
        #[arg(long)]
        compile: bool,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Jordan-Wigner image of the Hamiltonian in an integral file.
    JwMap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

/// Failure with its exit status: 2 for usage and parse errors, 3 for domain validation.
enum Failure {
    Usage(anyhow::Error),
    Domain(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Domain(_) => 3,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Domain(e) => e,
        }
    }
}

type Run = Result<(), Failure>;

fn usage(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Usage(e.into())
}

fn domain(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Domain(e.into())
}

fn num_failure(e: NumError) -> Failure {
    match e {
        NumError::Parse { .. } | NumError::NotSquare { .. } => usage(e),
        _ => domain(e),
    }
}

fn jw_failure(e: JwError) -> Failure {
    match e {
        JwError::Parse { .. } => usage(e),
        JwError::Numeric(n) => num_failure(n),
        _ => domain(e),
    }
}

fn ci_failure(e: CiError) -> Failure {
    match e {
        CiError::Parse { .. } => usage(e),
        CiError::Jw(j) => jw_failure(j),
        CiError::Numeric(n) => num_failure(n),
        _ => domain(e),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).map_err(usage)
}

fn write_or_print(output: Option<&Path>, text: &str) -> Run {
    match output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).map_err(usage)
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON value serializes");
    s.push('\n');
    s
}

fn read_matrix(path: &Path) -> Result<numkit::ComplexMatrix, Failure> {
    numkit::parse_matrix(&read(path)?).map_err(num_failure)
}

fn read_integrals(path: &Path) -> Result<FermionIntegrals, Failure> {
    FermionIntegrals::parse(&read(path)?).map_err(jw_failure)
}

fn cmd_ci(input: &Path, electrons: Option<usize>, output: Option<&Path>, format: Format) -> Run {
    let ints = read_integrals(input)?;
    let n = electrons.unwrap_or(ints.nelec());
    let ci = ci::build_ci_matrix(&ints, n).map_err(ci_failure)?;
    let evals = ci.eigenvalues().map_err(ci_failure)?;
    let summary = match format {
        Format::Json => to_json(&json!({
            "electrons": n,
            "spin_orbitals": ints.norb(),
            "dimension": ci.dim(),
            "eigenvalues": evals,
        })),
        Format::Text | Format::Csv => {
            let mut s = format!(
                "electrons: {n}\nspin_orbitals: {}\ndimension: {}\neigenvalues:\n",
                ints.norb(),
                ci.dim()
            );
            for (i, e) in evals.iter().enumerate() {
                s.push_str(&format!("{i} {e:.12}\n"));
            }
            s
        }
    };
    match output {
        Some(path) => {
            write_or_print(Some(path), &ci.to_text())?;
            print!("{summary}");
        }
        None => print!("{}{summary}", ci.to_text()),
    }
    Ok(())
}

fn cmd_decompose(input: &Path, output: Option<&Path>, format: Format) -> Run {
    let u = read_matrix(input)?;
    let circuit = kak::qsd(&u).map_err(|e| match e {
        KakError::Numeric(n) => num_failure(n),
        other => domain(other),
    })?;
    let q = circuit.qubits() as u32;
    let bound = kak::cnot_bound(q);
    let timing = kak::timing_estimate(q);
    let circuit_json = circuit.to_json();
    if let Some(path) = output {
        write_or_print(Some(path), &format!("{circuit_json}\n"))?;
    }
    match format {
        Format::Json => {
            let circuit_value: serde_json::Value =
                serde_json::from_str(&circuit_json).expect("circuit JSON parses");
            print!(
                "{}",
                to_json(&json!({
                    "qubits": q,
                    "cnot_count": circuit.cnot_count(),
                    "one_qubit_count": circuit.one_qubit_count(),
                    "cnot_bound": bound.to_string(),
                    "timing_estimate": timing,
                    "circuit": circuit_value,
                }))
            );
        }
        Format::Text | Format::Csv => {
            println!("qubits: {q}");
            println!("cnot_count: {}", circuit.cnot_count());
            println!("one_qubit_count: {}", circuit.one_qubit_count());
            println!("cnot_bound: {bound}");
            println!("timing_estimate_s: {timing:.3}");
            if output.is_none() {
                println!("{circuit_json}");
            }
        }
    }
    Ok(())
}

fn sim_failure(e: SimError) -> Failure {
    match e {
        SimError::Numeric(n) => num_failure(n),
        other => domain(other),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_phase_estimate(
    input: &Path,
    bits: usize,
    mode: Mode,
    shots: u64,
    seed: Option<u64>,
    state: usize,
    margin: f64,
    window: Option<(f64, f64)>,
    format: Format,
    output: Option<&Path>,
) -> Run {
    let mode = match mode {
        Mode::Exact => IpeaMode::Exact,
        Mode::Sampled => {
            let seed = seed.ok_or_else(|| usage(anyhow!("sampled mode requires --seed")))?;
            if shots == 0 {
                return Err(usage(anyhow!("--shots must be positive")));
            }
            IpeaMode::Sampled { shots, seed }
        }
    };
    if bits == 0 {
        return Err(usage(anyhow!("--bits must be positive")));
    }
    let h = read_matrix(input)?;
    let spec = numkit::herm_eig(&h).map_err(num_failure)?;
    if state >= spec.eigenvalues.len() {
        return Err(usage(anyhow!("--state {state} exceeds dimension {}", spec.eigenvalues.len())));
    }
    let window = match window {
        Some((tau, shift)) => {
            if !(tau > 0.0 && tau.is_finite() && shift.is_finite()) {
                return Err(usage(anyhow!("--tau must be positive and --shift finite")));
            }
            EnergyWindow::new(tau, shift)
        }
        None => simulator::energy_window(&h, margin).map_err(sim_failure)?,
    };
    let qubits = simulator::qubits_for_dim(h.nrows());
    let v: Vec<_> = spec.eigenvectors.column(state).iter().copied().collect();
    let psi = StateVector::from_vector_padded(&v, qubits).map_err(sim_failure)?;
    let est = simulator::ipea_estimate(&h, &psi, bits, mode, &window).map_err(sim_failure)?;
    let text = match format {
        Format::Json => to_json(&json!({
            "bits": est.bit_string(),
            "phi": est.phi,
            "energy": est.energy,
            "shots": est.shots_used,
            "eigenvalue": spec.eigenvalues[state],
            "tau": window.tau,
            "shift": window.shift,
        })),
        Format::Text | Format::Csv => format!("{}\n", est.record()),
    };
    write_or_print(output, &text)
}

fn cmd_crossover(params: CrossoverParams, format: Format, output: Option<&Path>) -> Run {
    let table = ci::crossover_scan(&params).map_err(usage)?;
    let star = table.crossover.map_or_else(|| "none".to_string(), |q| q.to_string());
    let text = match format {
        Format::Csv => table.to_csv(),
        Format::Json => to_json(&json!({
            "electrons": params.electrons,
            "prefactor": params.prefactor,
            "bits": params.bits,
            "rows": table.rows.iter().map(|r| json!({"q": r.q, "g_compact": r.g_compact, "g_direct": r.g_direct})).collect::<Vec<_>>(),
            "crossover": table.crossover,
        })),
        Format::Text => {
            let mut s = format!("{:>4} {:>16} {:>16}\n", "q", "g_compact", "g_direct");
            for r in &table.rows {
                s.push_str(&format!("{:>4} {:>16} {:>16}\n", r.q, r.g_compact, r.g_direct));
            }
            s.push_str(&format!("crossover: {star}\n"));
            s
        }
    };
    write_or_print(output, &text)
}

fn cmd_roadmap(format: Format, output: Option<&Path>) -> Run {
    let text = match format {
        Format::Text => vintage::roadmap_text(),
        Format::Csv => vintage::roadmap_csv(),
        Format::Json => to_json(&serde_json::to_value(vintage::roadmap_table()).expect("table serializes")),
    };
    write_or_print(output, &text)
}

fn cmd_water_scf(format: Format, output: Option<&Path>) -> Run {
    let text = match format {
        Format::Text => vintage::water_scf_text(),
        Format::Csv => vintage::water_scf_csv(),
        Format::Json => to_json(&serde_json::to_value(vintage::water_scf_table()).expect("table serializes")),
    };
    write_or_print(output, &text)
}

fn cmd_boys(which: Which, bits: usize, compile: bool, format: Format, output: Option<&Path>) -> Run {
    if bits == 0 || bits > vintage::MAX_PIPELINE_BITS {
        return Err(usage(anyhow!("--bits must lie in 1..={}", vintage::MAX_PIPELINE_BITS)));
    }
    let matrix = match which {
        Which::Six => BoysMatrix::Six,
        Which::Ten => BoysMatrix::Ten,
    };
    let report = vintage::run_boys_pipeline(matrix, bits, compile).map_err(domain)?;
    let text = match format {
        Format::Json | Format::Csv => format!("{}\n", report.to_json()),
        Format::Text => report.to_text(),
    };
    write_or_print(output, &text)
}

fn cmd_jw_map(input: &Path, format: Format, output: Option<&Path>) -> Run {
    let ints = read_integrals(input)?;
    let h = jw::build_hamiltonian(&ints).map_err(jw_failure)?;
    let text = match format {
        Format::Json => {
            let terms: Vec<_> =
                h.strings().iter().map(|s| json!({"pauli": s.label(), "coeff": s.coeff().re})).collect();
            to_json(&json!({"qubits": h.qubits(), "terms": terms}))
        }
        Format::Csv => {
            let mut s = String::from("pauli,coeff\n");
            for p in h.strings() {
                s.push_str(&format!("{},{:.12e}\n", p.label(), p.coeff().re));
            }
            s
        }
        Format::Text => format!("qubits: {}\nterms: {}\n{h}\n", h.qubits(), h.len()),
    };
    write_or_print(output, &text)
}

fn run(cli: Cli) -> Run {
    match cli.command {
        Command::Ci { input, electrons, output, format } => {
            cmd_ci(&input, electrons, output.as_deref(), format)
        }
        Command::Decompose { input, output, format } => cmd_decompose(&input, output.as_deref(), format),
        Command::PhaseEstimate {
            input,
            bits,
            mode,
            shots,
            seed,
            state,
            margin,
            tau,
            shift,
            format,
            output,
        } => cmd_phase_estimate(
            &input,
            bits,
            mode,
            shots,
            seed,
            state,
            margin,
            tau.zip(shift),
            format,
            output.as_deref(),
        ),
        Command::Crossover { electrons, prefactor, bits, qmin, qmax, format, output } => cmd_crossover(
            CrossoverParams { electrons, prefactor, bits, q_min: qmin, q_max: qmax },
            format,
            output.as_deref(),
        ),
        Command::Roadmap { format, output } => cmd_roadmap(format, output.as_deref()),
        Command::WaterScf { format, output } => cmd_water_scf(format, output.as_deref()),
        Command::Boys { matrix, bits, compile, format, output } => {
            cmd_boys(matrix, bits, compile, format, output.as_deref())
        }
        Command::JwMap { input, format, output } => cmd_jw_map(&input, format, output.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
