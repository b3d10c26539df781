//! `medqsl` command line.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8};
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use medqsl_core::dynamics::{
    evolve_lindblad, evolve_unitary, first_max_entanglement_time, JumpKind, JumpOperatorSet,
    ObserveConfig,
};
use medqsl_core::hamiltonian::{builtin, resource_equality_scale, BUILTIN_NAMES};
use medqsl_core::hspec;
use medqsl_core::qsl::unified_bound;
use medqsl_core::randgen::{HamiltonianEnsemble, StateEnsemble};
use medqsl_core::state::{
    is_classically_correlated_on, maximally_entangled, mutual_information, negativity,
    partial_trace, purity, reduced_mutual_information, reduced_negativity,
};
use medqsl_core::{Bipartition, DensityState, Error, Hamiltonian, TimeGrid, Trajectory};
use serde_json::json;

use crate::io::{
    self, envelope_csv, layout_to_json, matrix_to_json, to_json_pretty, trajectory_csv,
};
use crate::manifest::{manifest_path_for, ManifestBuilder};
use crate::sweep::{self, fig2_closed_form, run_fig2, Experiment, SweepConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_STATIONARY: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "medqsl",
    version,
    about = "Speed limits for mediated entanglement"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve a state and write the trajectory as CSV.
    Evolve(EvolveArgs),
    /// Print the speed-limit bound between two states as JSON.
    Bound(BoundArgs),
    /// Rerun a named experiment and write its data files.
    Reproduce(ReproduceArgs),
    /// Validate a `.hspec` file.
    Parse(ParseArgs),
}

#[derive(Debug, clap::Args)]
pub struct EvolveArgs {
    /// `.hspec` file or builtin name (`direct-optimal:d`, `cmi-product`, ...).
    #[arg(long)]
    pub ham: String,
    /// `ket:<digits>`, a builtin name or a state JSON file; defaults to the
    /// builtin's own initial state.
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub tmax: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Bipartition such as `A:B` or `A,B:C`; subsystems outside it are traced out.
    #[arg(long)]
    pub bipartition: Option<String>,
    /// Target state for the fidelity column (`max-entangled` or as `--state`).
    #[arg(long)]
    pub target: Option<String>,
    /// Local jumps: `TYPE:RATE` on every subsystem or `LABEL=TYPE:RATE,...`.
    #[arg(long)]
    pub lindblad: Option<String>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct BoundArgs {
    #[arg(long)]
    pub ham: String,
    #[arg(long)]
    pub state: Option<String>,
    #[arg(long)]
    pub target: String,
    /// Rescale the Hamiltonian to resource equality first and report `k`.
    #[arg(long)]
    pub normalize: bool,
    /// Also write the JSON here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentName {
    Fig2,
    CmiProduct,
    CmiEntangled,
    CmiClassical,
    OpenSystem,
    ConjectureD2,
    ConjectureD3,
    Smi,
    RateZero,
    CommutingNull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HamEnsembleArg {
    Gue,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StateEnsembleArg {
    HilbertSchmidt,
    Pure,
}

#[derive(Debug, clap::Args)]
pub struct ReproduceArgs {
    pub name: ExperimentName,
    /// Principal dimension (fig2: 2..6, smi: 2..4, sweeps: ≥ 2).
    #[arg(long)]
    pub d: Option<usize>,
    /// Number of sweep instances.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads; never changes any output byte.
    #[arg(long, env = "MEDQSL_WORKERS")]
    pub workers: Option<usize>,
    /// Grid spacing for trajectory experiments.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum, default_value_t = HamEnsembleArg::Gue)]
    pub hamiltonian_ensemble: HamEnsembleArg,
    #[arg(long, value_enum, default_value_t = StateEnsembleArg::HilbertSchmidt)]
    pub state_ensemble: StateEnsembleArg,
    /// Output directory; defaults to `medqsl-out/<name>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Emit {
    Matrix,
    Canonical,
}

#[derive(Debug, clap::Args)]
pub struct ParseArgs {
    #[arg(long)]
    pub check: PathBuf,
    #[arg(long, value_enum)]
    pub emit: Option<Emit>,
}

/// Exit code for an error: numeric failures 3, vacuous bounds 4, else 2.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        match cause.downcast_ref::<Error>() {
            Some(Error::PositivityLost { .. }) => return EXIT_NUMERIC,
            Some(Error::StationaryState { .. }) => return EXIT_STATIONARY,
            _ => {}
        }
    }
    EXIT_INPUT
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return EXIT_INPUT;
            }
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
    };
    let argv: Vec<String> = args
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = match &cli.command {
        Command::Evolve(a) => cmd_evolve(a, argv, stdout),
        Command::Bound(a) => cmd_bound(a, argv, stdout),
        Command::Reproduce(a) => cmd_reproduce(a, argv, stdout),
        Command::Parse(a) => cmd_parse(a, stdout),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            exit_code(&e)
        }
    }
}

fn read_hspec(path: &Path) -> anyhow::Result<hspec::HSpecAst> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    hspec::parse(&text).map_err(|e| anyhow!("{}:{e}", path.display()))
}

/// Hamiltonian from a `.hspec` file or a builtin, with the builtin's state.
fn resolve_ham(arg: &str) -> anyhow::Result<(Hamiltonian, Option<DensityState>)> {
    let path = Path::new(arg);
    if arg.ends_with(".hspec") || path.is_file() {
        let ast = read_hspec(path)?;
        return Ok((hspec::build(&ast)?, None));
    }
    match builtin(arg) {
        Ok((h, s)) => Ok((h, Some(s))),
        Err(e) => Err(anyhow!(e).context(format!(
            "`{arg}` is neither a .hspec file nor a builtin ({})",
            BUILTIN_NAMES.join(", ")
        ))),
    }
}

fn resolve_state(
    arg: Option<&str>,
    h: &Hamiltonian,
    default: Option<DensityState>,
) -> anyhow::Result<DensityState> {
    match (arg, default) {
        (Some(a), _) => io::parse_state_arg(a, h.layout()),
        (None, Some(s)) => Ok(s),
        (None, None) => bail!("--state is required for a .hspec Hamiltonian"),
    }
}

fn resolve_target(arg: &str, h: &Hamiltonian) -> anyhow::Result<DensityState> {
    if arg == "max-entangled" {
        let dims = h.layout().dims();
        if dims.len() != 2 || dims[0] != dims[1] {
            bail!("max-entangled needs a layout of two equal subsystems");
        }
        return Ok(maximally_entangled(dims[0], h.layout().clone())?);
    }
    io::parse_state_arg(arg, h.layout())
}

/// `TYPE:RATE` on every subsystem, or comma-separated `LABEL=TYPE:RATE`.
pub fn parse_lindblad(spec: &str, h: &Hamiltonian) -> anyhow::Result<JumpOperatorSet> {
    let parse_kind_rate = |s: &str| -> anyhow::Result<(JumpKind, f64)> {
        let (kind, rate) = s
            .split_once(':')
            .ok_or_else(|| anyhow!("expected TYPE:RATE, found `{s}`"))?;
        let rate: f64 = rate
            .trim()
            .parse()
            .with_context(|| format!("bad rate `{rate}`"))?;
        Ok((kind.trim().parse()?, rate))
    };
    let mut set = JumpOperatorSet::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('=') {
            Some((label, rest)) => {
                let (kind, rate) = parse_kind_rate(rest)?;
                set.extend(JumpOperatorSet::local(
                    h.layout(),
                    &[label.trim()],
                    kind,
                    rate,
                )?);
            }
            None => {
                let (kind, rate) = parse_kind_rate(part)?;
                set.extend(JumpOperatorSet::everywhere(h.layout(), kind, rate)?);
            }
        }
    }
    if set.is_empty() {
        bail!("--lindblad is empty");
    }
    Ok(set)
}

fn cmd_evolve(a: &EvolveArgs, argv: Vec<String>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::start("evolve", argv);
    let (h, default_state) = resolve_ham(&a.ham)?;
    let s0 = resolve_state(a.state.as_deref(), &h, default_state)?;
    let grid = TimeGrid::from_zero(a.tmax, a.dt)?;
    let mut observe = match &a.bipartition {
        Some(text) => {
            let p = Bipartition::parse(text)?;
            ObserveConfig {
                negativity: Some(p.clone()),
                target: None,
                purity_marginal: Some(p.labels()),
                mutual_information: Some(p),
            }
        }
        None => ObserveConfig::principal_pair(h.layout()),
    };
    if let Some(t) = &a.target {
        observe.target = Some(resolve_target(t, &h)?);
    }
    let traj = match &a.lindblad {
        Some(spec) => evolve_lindblad(&h, &parse_lindblad(spec, &h)?, &s0, &grid, &observe)?,
        None => evolve_unitary(&h, &s0, &grid, &observe)?,
    };
    let csv = trajectory_csv(&traj);
    match &a.out {
        Some(path) => {
            manifest.config(json!({
                "ham": a.ham, "state": a.state, "tmax": a.tmax, "dt": a.dt,
                "bipartition": a.bipartition, "target": a.target, "lindblad": a.lindblad,
            }));
            manifest.output(path, &csv)?;
            manifest.finish(&manifest_path_for(path))?;
        }
        None => stdout.write_all(csv.as_bytes())?,
    }
    Ok(())
}

fn cmd_bound(a: &BoundArgs, argv: Vec<String>, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let mut manifest = ManifestBuilder::start("bound", argv);
    let (h, default_state) = resolve_ham(&a.ham)?;
    let s0 = resolve_state(a.state.as_deref(), &h, default_state)?;
    let target = resolve_target(&a.target, &h)?;
    let (h, k) = if a.normalize {
        let (scaled, k) = resource_equality_scale(&h, &s0)?;
        (scaled, Some(k))
    } else {
        (h, None)
    };
    let report = unified_bound(&s0, &target, &h)?;
    let mut value = serde_json::to_value(report)?;
    if let Some(k) = k {
        value["normalization"] = json!({ "k": k });
    }
    let text = to_json_pretty(&value)?;
    stdout.write_all(text.as_bytes())?;
    if let Some(path) = &a.out {
        manifest.config(json!({
            "ham": a.ham, "state": a.state, "target": a.target, "normalize": a.normalize,
        }));
        manifest.output(path, &text)?;
        manifest.finish(&manifest_path_for(path))?;
    }
    Ok(())
}

fn cmd_parse(a: &ParseArgs, stdout: &mut dyn Write) -> anyhow::Result<()> {
    let ast = read_hspec(&a.check)?;
    let h = hspec::build(&ast)?;
    match a.emit {
        None => {}
        Some(Emit::Canonical) => stdout.write_all(hspec::format(&ast).as_bytes())?,
        Some(Emit::Matrix) => {
            let value = json!({
                "layout": layout_to_json(h.layout()),
                "matrix": matrix_to_json(h.matrix()),
            });
            stdout.write_all(to_json_pretty(&value)?.as_bytes())?;
        }
    }
    Ok(())
}

fn name_of(name: ExperimentName) -> &'static str {
    match name {
        ExperimentName::Fig2 => "fig2",
        ExperimentName::CmiProduct => "cmi-product",
        ExperimentName::CmiEntangled => "cmi-entangled",
        ExperimentName::CmiClassical => "cmi-classical",
        ExperimentName::OpenSystem => "open-system",
        ExperimentName::ConjectureD2 => "conjecture-d2",
        ExperimentName::ConjectureD3 => "conjecture-d3",
        ExperimentName::Smi => "smi",
        ExperimentName::RateZero => "rate-zero",
        ExperimentName::CommutingNull => "commuting-null",
    }
}

fn state_at(traj: &Trajectory, t: f64) -> &DensityState {
    &traj.states[traj.grid.nearest_index(t)]
}

/// Summary scalars for the builtin example trajectories.
fn example_summary(name: ExperimentName, traj: &Trajectory) -> anyhow::Result<serde_json::Value> {
    let ab = Bipartition::pair("A", "B");
    let n_ab = |t: f64| reduced_negativity(state_at(traj, t), &ab);
    let first = traj.states.first().expect("non-empty");
    let mut v = json!({
        "negativity_ab_quarter_pi": n_ab(FRAC_PI_4)?,
        "negativity_ab_half_pi": n_ab(FRAC_PI_2)?,
        "negativity_ab_max": traj.negativity().unwrap_or_default().into_iter().fold(0.0, f64::max),
    });
    let ab_c = Bipartition::parse("A,B:C")?;
    match name {
        ExperimentName::CmiEntangled => {
            v["negativity_ab_c_initial"] = json!(negativity(first, &ab_c)?);
        }
        ExperimentName::CmiClassical => {
            v["mutual_information_ab_c_initial"] = json!(mutual_information(first, &ab_c)?);
            for (key, t) in [("0", 0.0), ("pi_8", FRAC_PI_8), ("pi_4", FRAC_PI_4)] {
                v[format!("classical_on_c_{key}")] =
                    json!(is_classically_correlated_on(state_at(traj, t), "C")?);
            }
            v["purity_ab_initial"] = json!(purity(&partial_trace(first, &["A", "B"])?));
            v["purity_ab_quarter_pi"] = json!(purity(&partial_trace(
                state_at(traj, FRAC_PI_4),
                &["A", "B"]
            )?));
        }
        ExperimentName::OpenSystem => {
            v["mutual_information_ab_initial"] = json!(reduced_mutual_information(first, &ab)?);
            v["mutual_information_ab_quarter_pi"] =
                json!(reduced_mutual_information(state_at(traj, FRAC_PI_4), &ab)?);
        }
        _ => {}
    }
    Ok(v)
}

fn cmd_reproduce(
    a: &ReproduceArgs,
    argv: Vec<String>,
    stdout: &mut dyn Write,
) -> anyhow::Result<()> {
    let name = name_of(a.name);
    let dir = a
        .out
        .clone()
        .unwrap_or_else(|| Path::new("medqsl-out").join(name));
    let mut manifest = ManifestBuilder::start("reproduce", argv);
    manifest.seed(a.seed).workers(a.workers);
    let summary = match a.name {
        ExperimentName::Fig2 => {
            let d = a.d.unwrap_or(2);
            let grid = TimeGrid::from_zero(FRAC_PI_2, a.dt.unwrap_or(1e-3))?;
            let traj = run_fig2(d, &grid)?;
            let max_error = traj
                .observables
                .iter()
                .map(|o| (o.negativity.unwrap_or(f64::NAN) - fig2_closed_form(d, o.time)).abs())
                .fold(0.0, f64::max);
            let h = medqsl_core::hamiltonian::direct_optimal(d)?;
            let first_max = first_max_entanglement_time(
                &h,
                &traj.states[0],
                &Bipartition::pair("A", "B"),
                d,
                FRAC_PI_2,
            )?;
            manifest.config(json!({ "experiment": name, "d": d, "grid": grid }));
            manifest.output(&dir.join(format!("fig2_d{d}.csv")), &trajectory_csv(&traj))?;
            json!({
                "d": d,
                "max_negativity": (d as f64 - 1.0) / 2.0,
                "first_max_time": first_max,
                "expected_first_max_time": medqsl_core::qsl::di_bound(d)?,
                "max_closed_form_error": max_error,
            })
        }
        ExperimentName::CmiProduct
        | ExperimentName::CmiEntangled
        | ExperimentName::CmiClassical
        | ExperimentName::OpenSystem => {
            let (h, s0) = builtin(name)?;
            let grid = TimeGrid::from_zero(FRAC_PI_2, a.dt.unwrap_or(1e-3))?;
            let traj = evolve_unitary(&h, &s0, &grid, &ObserveConfig::principal_pair(h.layout()))?;
            manifest.config(json!({ "experiment": name, "grid": grid }));
            manifest.output(&dir.join(format!("{name}.csv")), &trajectory_csv(&traj))?;
            example_summary(a.name, &traj)?
        }
        _ => {
            let (experiment, d) = match a.name {
                ExperimentName::ConjectureD2 => (Experiment::CmiUncorrelated, 2),
                ExperimentName::ConjectureD3 => (Experiment::CmiUncorrelated, 3),
                ExperimentName::Smi => (Experiment::SmiProtocol, a.d.unwrap_or(2)),
                ExperimentName::RateZero => (Experiment::RateZero, a.d.unwrap_or(2)),
                _ => (Experiment::CommutingNull, a.d.unwrap_or(2)),
            };
            let mut cfg = SweepConfig::new(experiment, d)?;
            cfg.seed = a.seed;
            if let Some(n) = a.n {
                cfg.n_instances = n;
            }
            cfg.ensemble.hamiltonian = match a.hamiltonian_ensemble {
                HamEnsembleArg::Gue => HamiltonianEnsemble::Gue,
                HamEnsembleArg::Uniform => HamiltonianEnsemble::Uniform,
            };
            cfg.ensemble.mediator_state = match a.state_ensemble {
                StateEnsembleArg::HilbertSchmidt => StateEnsemble::HilbertSchmidt,
                StateEnsembleArg::Pure => StateEnsemble::Pure,
            };
            if let (Some(dt), Some(g)) = (a.dt, cfg.grid) {
                cfg.grid = Some(TimeGrid::new(g.start, g.stop, dt)?);
            }
            let report = sweep::run_sweep(&cfg, a.workers)?;
            manifest.config(serde_json::to_value(&cfg)?);
            manifest.output(&dir.join("report.json"), &to_json_pretty(&report)?)?;
            if !report.envelope.times.is_empty() {
                manifest.output(&dir.join("envelope.csv"), &envelope_csv(&report.envelope))?;
            }
            json!({
                "summary": report.summary,
                "violations": report.violations.len(),
                "redraws": report.redraws,
            })
        }
    };
    let text = to_json_pretty(&summary)?;
    manifest.output(&dir.join("summary.json"), &text)?;
    manifest.finish(&dir.join("manifest.json"))?;
    stdout.write_all(text.as_bytes())?;
    Ok(())
}
