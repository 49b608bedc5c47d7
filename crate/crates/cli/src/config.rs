use std::path::{Path, PathBuf};

use clap::ValueEnum;
use photonstat_core::counting::CutoffPolicy;
use photonstat_core::liouville::{DriveSpec, Envelope, InitialState, Topology};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum TopologyKind {
    Single,
    Two,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PulseKind {
    Square,
    Sampled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodSel {
    Moments,
    Counting,
    Trajectories,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Ground,
    Excited,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Everything a run depends on. Loaded from a flat JSON object, then
/// overridden by command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub topology: TopologyKind,
    pub pulse: PulseKind,
    #[serde(rename = "T")]
    pub width: f64,
    #[serde(rename = "N")]
    pub photons: f64,
    pub a: f64,
    pub delta: f64,
    /// CSV file of `t,N_in` rows for sampled pulses.
    pub samples: Option<PathBuf>,
    pub method: MethodSel,
    /// Fixed cutoff; adaptive when absent.
    pub k: Option<usize>,
    pub t_end: Option<f64>,
    pub seed: u64,
    pub n_traj: u64,
    pub initial: InitialKind,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    /// `fig2`..`fig5`, or `custom` to sweep the grids below.
    pub preset: String,
    #[serde(rename = "T_grid")]
    pub width_grid: Option<Vec<f64>>,
    #[serde(rename = "N_grid")]
    pub photon_grid: Option<Vec<f64>>,
    pub a_grid: Option<Vec<f64>>,
    pub widen: bool,
    pub compare: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            topology: TopologyKind::Single,
            pulse: PulseKind::Square,
            width: 0.1,
            photons: 50.0,
            a: 0.01,
            delta: 0.0,
            samples: None,
            method: MethodSel::Moments,
            k: None,
            t_end: None,
            seed: 0,
            n_traj: 100_000,
            initial: InitialKind::Ground,
            out: None,
            format: Format::Csv,
            threads: None,
            preset: "fig3".into(),
            width_grid: None,
            photon_grid: None,
            a_grid: None,
            widen: false,
            compare: false,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
    }

    pub fn topology(&self) -> Topology<f64> {
        match self.topology {
            TopologyKind::Single => Topology::SingleLine { detuning: self.delta },
            TopologyKind::Two => Topology::TwoLine { ratio: self.a, detuning: self.delta },
        }
    }

    pub fn policy(&self) -> CutoffPolicy {
        match self.k {
            Some(k) => CutoffPolicy::fixed(k),
            None => CutoffPolicy::default(),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == Some(0) {
            return Err(CliError::Config("k must be >= 1".into()));
        }
        if self.n_traj == 0 {
            return Err(CliError::Config("n_traj must be >= 1".into()));
        }
        if self.threads == Some(0) {
            return Err(CliError::Config("threads must be >= 1".into()));
        }
        for (name, grid) in [("T_grid", &self.width_grid), ("N_grid", &self.photon_grid), ("a_grid", &self.a_grid)] {
            if grid.as_ref().is_some_and(|g| g.is_empty()) {
                return Err(CliError::Config(format!("{name} is empty")));
            }
        }
        Ok(())
    }

    fn envelope(&self) -> Result<Envelope<f64>, CliError> {
        match self.pulse {
            PulseKind::Square => Ok(Envelope::square(self.width, self.photons)),
            PulseKind::Sampled => {
                let path = self
                    .samples
                    .as_ref()
                    .ok_or_else(|| CliError::Config("pulse 'sampled' needs a samples file".into()))?;
                Ok(Envelope::Sampled { samples: read_samples(path)? })
            }
        }
    }

    pub fn drive_spec(&self) -> Result<DriveSpec<f64>, CliError> {
        let mut spec = DriveSpec::new(self.envelope()?, self.topology())?;
        if let Some(t_end) = self.t_end {
            spec = spec.with_window_end(t_end)?;
        }
        Ok(spec.with_initial(match self.initial {
            InitialKind::Ground => InitialState::Ground,
            InitialKind::Excited => InitialState::Excited,
        }))
    }
}

/// Reads `t,N_in` rows; a header line and `#` comments are allowed.
pub fn read_samples(path: &Path) -> Result<Vec<(f64, f64)>, CliError> {
    let bad = |msg: String| CliError::Config(format!("samples {}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut samples = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 2 {
            return Err(bad(format!("line {}: expected 2 columns, found {}", i + 1, record.len())));
        }
        let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
        match parsed {
            (Ok(t), Ok(v)) => samples.push((t, v)),
            _ if i == 0 => continue,
            _ => return Err(bad(format!("line {}: not a number pair", i + 1))),
        }
    }
    Ok(samples)
}

/// `0.1,0.2,0.5`, `lin:START:STOP:COUNT` or `log:START:STOP:COUNT`.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    use photonstat_core::sweeps::{linspace, logspace};
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("'{x}': {e}"));
    if let Some((kind, rest)) = s.split_once(':') {
        let parts: Vec<&str> = rest.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected {kind}:START:STOP:COUNT, got '{s}'"));
        }
        let (lo, hi) = (num(parts[0])?, num(parts[1])?);
        let n: usize = parts[2].trim().parse().map_err(|e| format!("'{}': {e}", parts[2]))?;
        match kind {
            "lin" => Ok(linspace(lo, hi, n)),
            "log" if lo > 0.0 && hi > 0.0 => Ok(logspace(lo, hi, n)),
            "log" => Err("log grid bounds must be positive".into()),
            other => Err(format!("unknown grid kind '{other}' (expected lin or log)")),
        }
    } else {
        s.split(',').map(num).collect()
    }
}
