// `!(x >= lo)` style checks are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use indist::bosonsampling::purity_curve;
use indist::io::{
    csv_float, load_detectors, load_network, parse_occupation, read_json, to_json, write_text, DistributionFile,
    GroupFile, JDump, PhotonEntry, RecordEntry,
};
use indist::network::{NetworkMatrix, OccupationVector};
use indist::probability::{Engine, Experiment, MAX_JMATRIX_PHOTONS, MAX_ORACLE_PHOTONS};
use indist::spectral::{DetectorModel, GaussianState, MixedState, PureState};
use indist::symgroup::MAX_ENUMERATION;
use indist::zeroprob::{suppression_scan, Group, GroupSpec, SuppressionRecord, Verdict};
use indist::Error;
use indist_cli::verify::{self, VerifyConfig};

const EXIT_VERIFY: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_SIZE: u8 = 3;
const EXIT_VIOLATION: u8 = 4;

#[derive(Parser)]
#[command(name = "indist", version, about = "Exact multi-photon interference with partially distinguishable photons")]
struct Cli {
    /// Worker threads; 1 keeps results bitwise reproducible.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full output distribution for one input.
    Distribution(DistributionArgs),
    /// Coincidence probability of two photons on a beam splitter vs. relative delay.
    HomScan(HomArgs),
    /// Purity of the boson-sampling J-matrix vs. the classicality parameter.
    Purity(PurityArgs),
    /// Flag outputs suppressed by amplitude cancellation and test them across distinguishability settings.
    Suppress(SuppressArgs),
    /// Cross-engine and invariant checks on seeded random experiments.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ExperimentArgs {
    /// `fourier:M`, `haar:M:SEED`, `identity:M`, or a network JSON file.
    #[arg(long)]
    network: String,
    /// Input occupation, e.g. `1,1,0`.
    #[arg(long)]
    input: String,
    /// Photon JSON file, one entry per photon in input-mode order. Defaults to identical unit Gaussians.
    #[arg(long)]
    photons: Option<PathBuf>,
    /// Detector JSON file with one entry (broadcast) or one per mode. Defaults to ideal.
    #[arg(long)]
    detectors: Option<PathBuf>,
}

#[derive(Args)]
struct DistributionArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long, default_value = "jmatrix")]
    engine: Engine,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the J-matrix of the first output (uniform detectors only).
    #[arg(long)]
    dump_j: Option<PathBuf>,
}

#[derive(Args)]
struct HomArgs {
    /// Two Gaussian photons; the delay is added to the second one's arrival time.
    #[arg(long)]
    photons: Option<PathBuf>,
    #[arg(long)]
    detectors: Option<PathBuf>,
    /// Delay grid `start:stop:count`.
    #[arg(long, default_value = "-3:3:61", allow_hyphen_values = true)]
    range: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PurityArgs {
    /// Grid of γ values `start:stop:count`.
    #[arg(long, default_value = "0:0.95:20", allow_hyphen_values = true)]
    range: String,
    #[arg(long, default_value = "2,4,10,20,30")]
    n_list: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuppressArgs {
    #[arg(long)]
    network: String,
    /// Group JSON file. Without it, `--input` defines one group of identical photons.
    #[arg(long)]
    groups: Option<PathBuf>,
    #[arg(long, required_unless_present = "groups")]
    input: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluate the settings on a slightly rotated network. Harness self-test.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 50)]
    instances: usize,
    /// Tolerance for engine agreement and normalization.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Negate one J entry before use. Harness self-test.
    #[arg(long, hide = true)]
    inject_fault: bool,
}

enum Failure {
    Error(Error),
    Exit(u8),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

type Outcome = std::result::Result<(), Failure>;

fn validation(msg: impl Into<String>) -> Failure {
    Failure::Error(Error::Argument(msg.into()))
}

fn emit(out: Option<&Path>, text: &str) -> indist::Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `start:stop:count`, inclusive of both ends.
fn parse_range(s: &str) -> std::result::Result<Vec<f64>, Failure> {
    let bad = || validation(format!("--range: expected start:stop:count, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let [a, b, c] = parts.as_slice() else { return Err(bad()) };
    let (a, b): (f64, f64) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
    let count: usize = c.parse().map_err(|_| bad())?;
    if count == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![a]);
    }
    Ok((0..count).map(|i| a + (b - a) * i as f64 / (count - 1) as f64).collect())
}

fn unit_gaussian() -> PureState<f64> {
    PureState::Gaussian(GaussianState::new(0.0, 1.0, 0.0, 0).expect("valid constant"))
}

fn photon_entries(path: &Path) -> indist::Result<Vec<PhotonEntry>> {
    read_json(path)
}

fn detectors_or_ideal(path: Option<&Path>) -> indist::Result<Vec<DetectorModel<f64>>> {
    match path {
        Some(p) => load_detectors(p),
        None => Ok(vec![DetectorModel::Ideal]),
    }
}

fn engine_cap(engine: Engine) -> usize {
    match engine {
        Engine::JMatrix => MAX_JMATRIX_PHOTONS,
        Engine::Oracle => MAX_ORACLE_PHOTONS,
        _ => MAX_ENUMERATION,
    }
}

fn build_experiment(args: &ExperimentArgs) -> std::result::Result<Experiment<f64>, Failure> {
    let network = load_network(&args.network)?;
    let input = parse_occupation(&args.input)?;
    if input.modes() != network.modes() {
        return Err(validation(format!("--input has {} modes, --network has {}", input.modes(), network.modes())));
    }
    let photons = match &args.photons {
        Some(p) => photon_entries(p)?.iter().map(PhotonEntry::build).collect::<indist::Result<Vec<_>>>()?,
        None => vec![MixedState::Pure(unit_gaussian()); input.total()],
    };
    if photons.len() != input.total() {
        return Err(validation(format!("--photons lists {} photons, --input has {}", photons.len(), input.total())));
    }
    let detectors = detectors_or_ideal(args.detectors.as_deref())?;
    Ok(Experiment::new(network, input, photons, detectors)?)
}

fn cmd_distribution(args: &DistributionArgs) -> Outcome {
    let experiment = build_experiment(&args.experiment)?;
    let n = experiment.input().total();
    let cap = engine_cap(args.engine);
    if n > cap {
        return Err(Error::SizeLimit { what: "engine photon number", value: n, cap }.into());
    }
    let dist = experiment.distribution(args.engine)?;
    log::info!("{} outputs, sum {}", dist.outputs.len(), dist.sum);
    emit(args.out.as_deref(), &to_json(&DistributionFile::from_distribution(&dist))?)?;
    if let Some(path) = &args.dump_j {
        if !experiment.uniform_detectors() {
            return Err(validation("--dump-j needs the same detector on every mode"));
        }
        let outputs = indist::network::enumerate_outputs(experiment.network().modes(), n)?;
        let j = experiment.jmatrix(&outputs[0])?;
        write_text(path, &to_json(&JDump::from_jmatrix(&j)?)?)?;
    }
    Ok(())
}

fn cmd_hom_scan(args: &HomArgs) -> Outcome {
    let taus = parse_range(&args.range)?;
    let (a, b) = match &args.photons {
        Some(p) => {
            let entries = photon_entries(p)?;
            let gs: Vec<_> = entries.iter().filter_map(PhotonEntry::as_gaussian).collect();
            if entries.len() != 2 || gs.len() != 2 {
                return Err(validation("--photons: hom-scan needs exactly two Gaussian photons"));
            }
            (
                GaussianState::new(gs[0].omega, gs[0].delta, gs[0].t, gs[0].pol)?,
                GaussianState::new(gs[1].omega, gs[1].delta, gs[1].t, gs[1].pol)?,
            )
        }
        None => {
            let g = GaussianState::new(0.0, 1.0, 0.0, 0)?;
            (g, g)
        }
    };
    let detectors = detectors_or_ideal(args.detectors.as_deref())?;
    let network = NetworkMatrix::fourier(2)?;
    let input = OccupationVector::new(vec![1, 1]);
    let coincidence = OccupationVector::new(vec![1, 1]);
    let mut csv = String::from("tau,p_coincidence\n");
    for tau in taus {
        let photons = vec![
            MixedState::Pure(PureState::Gaussian(a)),
            MixedState::Pure(PureState::Gaussian(b.delayed(tau))),
        ];
        let e = Experiment::new(network.clone(), input.clone(), photons, detectors.clone())?;
        let p = e.probability(Engine::JMatrix, &coincidence)?.p;
        csv.push_str(&format!("{},{}\n", csv_float(tau), csv_float(p)));
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(())
}

fn cmd_purity(args: &PurityArgs) -> Outcome {
    let gammas = parse_range(&args.range)?;
    if let Some(g) = gammas.iter().find(|g| !(**g >= 0.0 && **g < 1.0)) {
        return Err(validation(format!("--range: gamma must lie in [0, 1), got {g}")));
    }
    let n_list = args
        .n_list
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| validation(format!("--n-list: bad entry {s:?}"))))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if n_list.contains(&0) {
        return Err(validation("--n-list: N must be at least 1"));
    }
    let mut csv = String::from("gamma,N,purity,trace\n");
    for row in purity_curve(&n_list, &gammas)? {
        let purity = row.purity.map(csv_float).unwrap_or_default();
        csv.push_str(&format!("{},{},{},{}\n", csv_float(row.gamma), row.n, purity, csv_float(row.trace)));
    }
    emit(args.out.as_deref(), &csv)?;
    Ok(())
}

/// Rotates input modes 0 and 1 by a small angle.
fn perturbed(u: &NetworkMatrix<f64>) -> indist::Result<NetworkMatrix<f64>> {
    let m = u.modes();
    if m < 2 {
        return Ok(u.clone());
    }
    let (c, s) = (0.05f64.cos(), 0.05f64.sin());
    let mut v = u.matrix().clone();
    for l in 0..m {
        let (x, y) = (u.get(0, l), u.get(1, l));
        v[(0, l)] = x * c - y * s;
        v[(1, l)] = x * s + y * c;
    }
    NetworkMatrix::from_user(v)
}

fn render_table(records: &[SuppressionRecord<f64>]) -> String {
    let mut out = String::new();
    let Some(first) = records.first() else { return out };
    let mut header = format!("{:<16} {:>10}", "m", "max|Y|");
    for s in &first.settings {
        header.push_str(&format!(" {:>12}", s.overlap.map_or("P(given)".to_string(), |o| format!("P(s={o})"))));
    }
    out.push_str(&header);
    out.push_str("  verdict\n");
    for r in records {
        let mut line = format!("{:<16} {:>10.3e}", format!("{:?}", r.output.counts()), r.max_amplitude);
        for s in &r.settings {
            line.push_str(&format!(" {:>12.4e}", s.p));
        }
        let v = match r.verdict {
            Verdict::SuppressedByCancellation => "suppressed",
            Verdict::NotSuppressed => "-",
            Verdict::TrivialZero => "trivial-zero",
        };
        out.push_str(&format!("{line}  {v}\n"));
    }
    out
}

fn cmd_suppress(args: &SuppressArgs) -> Outcome {
    let network = load_network(&args.network)?;
    let spec = match (&args.groups, &args.input) {
        (Some(path), _) => read_json::<GroupFile>(path)?.build(network.modes())?,
        (None, Some(input)) => {
            let n = parse_occupation(input)?;
            if n.modes() != network.modes() {
                return Err(validation(format!("--input has {} modes, --network has {}", n.modes(), network.modes())));
            }
            GroupSpec::new(network.modes(), vec![Group { state: unit_gaussian(), modes: n.mode_list() }])?
        }
        (None, None) => return Err(validation("suppress needs --groups or --input")),
    };
    let mut records = suppression_scan(&network, &spec)?;
    if args.inject_fault {
        let shifted = spec.experiment(&perturbed(&network)?)?;
        for r in &mut records {
            if let Some(s) = r.settings.last_mut() {
                s.p = shifted.probability(Engine::JMatrix, &r.output)?.p;
            }
        }
    }
    let entries: Vec<RecordEntry> = records.iter().map(RecordEntry::from_record).collect();
    emit(args.out.as_deref(), &to_json(&entries)?)?;
    eprint!("{}", render_table(&records));
    let violations: Vec<_> = records.iter().filter_map(|r| r.violation().map(|why| (r, why))).collect();
    if violations.is_empty() {
        return Ok(());
    }
    for (r, why) in &violations {
        log::error!("conjecture violation at {}: {why}", r.output);
        eprintln!("{}", to_json(&RecordEntry::from_record(r))?);
    }
    Err(Failure::Exit(EXIT_VIOLATION))
}

fn cmd_verify(args: &VerifyArgs) -> Outcome {
    if !(args.tol > 0.0) {
        return Err(validation("--tol must be positive"));
    }
    let cfg = VerifyConfig {
        seed: args.seed,
        instances: args.instances,
        tol: args.tol,
        inject_fault: args.inject_fault,
        ..VerifyConfig::default()
    };
    let report = verify::run(&cfg)?;
    for c in &report.checks {
        eprintln!("{} {}: {:e} (limit {:e}) {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance, c.detail);
    }
    emit(args.out.as_deref(), &to_json(&report)?)?;
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Exit(EXIT_VERIFY))
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads.max(1)).build_global() {
        log::warn!("thread pool already initialized: {e}");
    }
    let outcome = match &cli.command {
        Command::Distribution(a) => cmd_distribution(a),
        Command::HomScan(a) => cmd_hom_scan(a),
        Command::Purity(a) => cmd_purity(a),
        Command::Suppress(a) => cmd_suppress(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Exit(code)) => ExitCode::from(code),
        Err(Failure::Error(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::SizeLimit { .. } => EXIT_SIZE,
                _ => EXIT_VALIDATION,
            })
        }
    }
}
