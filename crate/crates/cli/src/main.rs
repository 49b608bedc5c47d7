//! `photonstat`: photon-number statistics of pulses scattered by a driven
//! two-level emitter in a waveguide.

mod config;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use photonstat_core::counting::{binomial_moments_of, dual_stats, photon_stats, CutoffPolicy, Method, PhotonStats};
use photonstat_core::sweeps::{
    default_photon_grid, default_width_grid, run_preset, sweep_grid, sweep_two_line, MaximizeOptions, Preset,
    SweepResult,
};
use photonstat_core::trajectories::sample_trajectories;
use photonstat_core::Topology;

use config::{parse_grid, Format, InitialKind, MethodSel, PulseKind, RunConfig, TopologyKind};
use output::{emit, Cell, Table};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical error: {m}"),
        }
    }
}

impl From<photonstat_core::Error> for CliError {
    fn from(e: photonstat_core::Error) -> Self {
        if e.is_config() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "photonstat",
    version,
    about = "Photon-number statistics of a driven two-level emitter in a waveguide"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Photon-number distribution for one drive.
    Simulate(Flags),
    /// Parameter sweep over a preset or custom grid.
    Sweep(Flags),
    /// Quantum-jump trajectory histogram.
    Traj(Flags),
}

#[derive(Clone, Debug, PartialEq)]
struct Grid(Vec<f64>);

fn grid_arg(s: &str) -> Result<Grid, String> {
    parse_grid(s).map(Grid)
}

#[derive(clap::Args, Debug)]
struct Flags {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum)]
    topology: Option<TopologyKind>,
    #[arg(long, value_enum)]
    pulse: Option<PulseKind>,
    /// Pulse width in relaxation times.
    #[arg(long = "T", allow_negative_numbers = true)]
    width: Option<f64>,
    /// Mean photon number of the pulse.
    #[arg(long = "N", allow_negative_numbers = true)]
    photons: Option<f64>,
    /// Weak-to-strong coupling ratio (two lines).
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Drive detuning in units of the decay rate.
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    /// CSV of `t,N_in` rows for `--pulse sampled`.
    #[arg(long)]
    samples: Option<PathBuf>,
    #[arg(long, value_enum)]
    method: Option<MethodSel>,
    /// Fixed moment cutoff (adaptive by default).
    #[arg(long)]
    k: Option<usize>,
    /// End of the counting window.
    #[arg(long = "t-end", allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[arg(long = "n-traj")]
    n_traj: Option<u64>,
    #[arg(long, value_enum)]
    initial: Option<InitialKind>,
    /// fig2 | fig3 | fig4 | fig5 | custom
    #[arg(long)]
    preset: Option<String>,
    /// Custom T grid: `0.1,0.2` or `lin:A:B:N` or `log:A:B:N`.
    #[arg(long = "T-grid", value_parser = grid_arg)]
    width_grid: Option<Grid>,
    #[arg(long = "N-grid", value_parser = grid_arg)]
    photon_grid: Option<Grid>,
    #[arg(long = "a-grid", value_parser = grid_arg)]
    a_grid: Option<Grid>,
    /// Search for the P1 maximum beyond the first Rabi lobe.
    #[arg(long)]
    widen: bool,
    /// Add master-equation probabilities and z-scores to `traj` output.
    #[arg(long)]
    compare: bool,
}

impl Flags {
    fn resolve(self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        macro_rules! over {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$target = v; })*
            };
        }
        over!(topology => topology, pulse => pulse, width => width, photons => photons, a => a, delta => delta,
              method => method, seed => seed, n_traj => n_traj, initial => initial, format => format);
        if self.out.is_some() {
            c.out = self.out;
        }
        if self.samples.is_some() {
            c.samples = self.samples;
        }
        if self.k.is_some() {
            c.k = self.k;
        }
        if self.t_end.is_some() {
            c.t_end = self.t_end;
        }
        if self.threads.is_some() {
            c.threads = self.threads;
        }
        if let Some(p) = self.preset {
            c.preset = p;
        }
        if let Some(Grid(g)) = self.width_grid {
            c.width_grid = Some(g);
        }
        if let Some(Grid(g)) = self.photon_grid {
            c.photon_grid = Some(g);
        }
        if let Some(Grid(g)) = self.a_grid {
            c.a_grid = Some(g);
        }
        c.widen |= self.widen;
        c.compare |= self.compare;
        c.validate()?;
        Ok(c)
    }
}

fn warn_tail(stats: &PhotonStats<f64>) {
    let default = CutoffPolicy::default().threshold;
    if stats.tail_bound > default {
        eprintln!(
            "warning: cutoff k = {} leaves a tail of {:e} ({}); raise --k or drop it for the adaptive cutoff",
            stats.cutoff_k,
            stats.tail_bound,
            stats.method.name()
        );
    }
}

fn simulate(cfg: &RunConfig) -> Result<Table, CliError> {
    let spec = cfg.drive_spec()?;
    let policy = cfg.policy();
    let (moments, counting) = match cfg.method {
        MethodSel::All => {
            let (m, c) = dual_stats(&spec, policy)?;
            (Some(m), Some(c))
        }
        MethodSel::Moments => (Some(photon_stats(&spec, Method::MomentInversion, policy)?), None),
        MethodSel::Counting => (None, Some(photon_stats(&spec, Method::JumpCounting, policy)?)),
        MethodSel::Trajectories => (None, None),
    };
    moments.iter().chain(counting.iter()).for_each(warn_tail);
    let traj = match cfg.method {
        MethodSel::All | MethodSel::Trajectories => Some(sample_trajectories(&spec, cfg.n_traj, cfg.seed)?),
        _ => None,
    };

    let mut columns = vec!["n", "N_m"];
    if moments.is_some() {
        columns.push("P_moments");
    }
    if counting.is_some() {
        columns.push("P_counting");
    }
    if traj.is_some() {
        columns.extend(["P_traj", "P_traj_stderr"]);
    }
    let len = |s: &Option<PhotonStats<f64>>| s.as_ref().map_or(0, |s| s.probabilities.len());
    let rows = len(&moments).max(len(&counting)).max(traj.as_ref().map_or(0, |t| t.counts.len()));
    let traj_moments = traj.as_ref().map(|t| binomial_moments_of(&(0..rows).map(|n| t.p_hat(n)).collect::<Vec<_>>()));

    let mut table = Table::new(columns);
    for n in 0..rows {
        let n_m = match (&moments, &counting, &traj_moments) {
            (Some(m), _, _) => m.n(n),
            (None, Some(c), _) => c.n(n),
            (None, None, Some(t)) => t[n],
            _ => unreachable!("at least one method runs"),
        };
        let mut row = vec![Cell::Int(n as u64), Cell::Num(n_m)];
        row.extend(moments.iter().map(|m| Cell::Num(m.p(n))));
        row.extend(counting.iter().map(|c| Cell::Num(c.p(n))));
        if let Some(t) = &traj {
            row.extend([Cell::Num(t.p_hat(n)), Cell::Num(t.stderr(n))]);
        }
        table.push(row);
    }
    Ok(table)
}

fn traj(cfg: &RunConfig) -> Result<Table, CliError> {
    let spec = cfg.drive_spec()?;
    let result = sample_trajectories(&spec, cfg.n_traj, cfg.seed)?;
    let reference = if cfg.compare { Some(photon_stats(&spec, Method::JumpCounting, cfg.policy())?) } else { None };
    reference.iter().for_each(warn_tail);
    let mut columns = vec!["n", "count", "p_hat", "stderr", "seed"];
    if reference.is_some() {
        columns.extend(["P_counting", "z"]);
    }
    let rows = result.counts.len().max(reference.as_ref().map_or(0, |r| r.probabilities.len()));
    let mut table = Table::new(columns);
    for n in 0..rows {
        let mut row = vec![
            Cell::Int(n as u64),
            Cell::Int(result.counts.get(n).copied().unwrap_or(0)),
            Cell::Num(result.p_hat(n)),
            Cell::Num(result.stderr(n)),
            Cell::Int(cfg.seed),
        ];
        if let Some(r) = &reference {
            row.extend([Cell::Num(r.p(n)), Cell::Num(result.z_score(n, r.p(n)))]);
        }
        table.push(row);
    }
    Ok(table)
}

fn run_sweep(cfg: &RunConfig) -> Result<SweepResult, CliError> {
    let policy = cfg.policy();
    let opts = MaximizeOptions { widen: cfg.widen, ..MaximizeOptions::default() };
    if cfg.preset != "custom" {
        let preset: Preset = cfg.preset.parse()?;
        return Ok(run_preset(preset, policy, opts)?);
    }
    let widths = cfg.width_grid.clone().unwrap_or_else(default_width_grid);
    match cfg.topology {
        TopologyKind::Single => {
            let photons = cfg.photon_grid.clone().unwrap_or_else(default_photon_grid);
            Ok(sweep_grid(cfg.topology(), &widths, &photons, policy)?)
        }
        TopologyKind::Two => {
            let ratios = cfg.a_grid.clone().unwrap_or_else(|| vec![cfg.a]);
            match &cfg.photon_grid {
                Some(photons) => {
                    let mut records = Vec::new();
                    for &a in &ratios {
                        let topo = Topology::TwoLine { ratio: a, detuning: cfg.delta };
                        records.extend(sweep_grid(topo, &widths, photons, policy)?.records);
                    }
                    Ok(SweepResult {
                        axes: vec![("a".into(), ratios), ("T".into(), widths), ("N".into(), photons.clone())],
                        records,
                        metadata: Vec::new(),
                    })
                }
                None if cfg.delta != 0.0 => Err(CliError::Config(
                    "the P1-maximizing two-line sweep is resonant; set delta = 0 or give N_grid".into(),
                )),
                None => Ok(sweep_two_line(&ratios, &widths, opts, policy)?),
            }
        }
    }
}

fn sweep(cfg: &RunConfig) -> Result<Table, CliError> {
    let result = run_sweep(cfg)?;
    let mut table = Table::new(["T", "N", "a", "P0", "P1", "P2", "P3", "N1", "N2", "tail_bound"]);
    for r in &result.records {
        if r.at_boundary {
            eprintln!(
                "warning: P1 maximum at the edge of the search range (T = {}, a = {:?}, N* = {}); try --widen",
                r.width, r.ratio, r.photons
            );
        }
        let s = &r.stats;
        let mut row = vec![Cell::Num(r.width), Cell::Num(r.photons), r.ratio.map_or(Cell::Empty, Cell::Num)];
        row.extend((0..4).map(|n| Cell::Num(s.p(n))));
        row.extend([Cell::Num(s.n(1)), Cell::Num(s.n(2)), Cell::Num(s.tail_bound)]);
        table.push(row);
    }
    Ok(table)
}

type Action = fn(&RunConfig) -> Result<Table, CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (flags, action): (Flags, Action) = match cli.command {
        Command::Simulate(f) => (f, simulate),
        Command::Sweep(f) => (f, sweep),
        Command::Traj(f) => (f, traj),
    };
    let cfg = flags.resolve()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let table = pool.install(|| action(&cfg))?;
    emit(&table, &cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("photonstat: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
