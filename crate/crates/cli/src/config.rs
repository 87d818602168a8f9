//! Scenario configuration: a single JSON document with documented defaults.
//! Unknown keys are rejected so typos fail fast.

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};

use fockgen::protocol::{AtomicOutcome, OptimizeMetric};

/// Named scenarios the batch front end can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Time-evolve the protocol state and tabulate observables.
    Evolve,
    /// Two-parameter search for the optimal preparation.
    Optimize,
    /// Optimize against every target in a range.
    SweepN,
    /// Fidelity grid around the optimum.
    Robustness,
    /// Lossless vs decohered optimization side by side.
    Decoherence,
    /// Wigner function of the prepared state.
    Wigner,
    /// Photon-number distribution of the prepared state.
    Distribution,
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Evolve => "evolve",
            Scenario::Optimize => "optimize",
            Scenario::SweepN => "sweep-n",
            Scenario::Robustness => "robustness",
            Scenario::Decoherence => "decoherence",
            Scenario::Wigner => "wigner",
            Scenario::Distribution => "distribution",
        }
    }

    pub fn parse(s: &str) -> anyhow::Result<Self> {
        Ok(match s {
            "evolve" => Scenario::Evolve,
            "optimize" => Scenario::Optimize,
            "sweep-n" => Scenario::SweepN,
            "robustness" => Scenario::Robustness,
            "decoherence" => Scenario::Decoherence,
            "wigner" => Scenario::Wigner,
            "distribution" => Scenario::Distribution,
            other => bail!("unknown scenario `{other}`"),
        })
    }
}

/// Objective the optimizer maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum MetricName {
    #[default]
    OneMinusDelta,
    Fidelity,
    PostSelected,
}

/// Scenario configuration. Every field has a default; unknown keys are
/// rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    /// Scenario to run (overridable with `--scenario`). Default: optimize.
    pub scenario: Scenario,
    /// Target Fock state. Default: 10.
    pub target_n: usize,
    /// Mean photon number of the initial coherent field. Default: target_n.
    pub n_bar: Option<f64>,
    /// Number of two-level systems (1-3). Default: 1.
    pub n_atoms: usize,
    /// Branch indices to search. Default: [0, 1, 2, 3].
    pub branches: Vec<usize>,
    /// Search metric. Default: one-minus-delta.
    pub metric: MetricName,
    /// Atomic outcome for post-selection, e.g. "e" or "eg". Required when
    /// metric = post-selected. Default: all atoms excited.
    pub post_select: Option<String>,
    /// Include decoherence. Default: false.
    pub lossy: bool,
    /// Cavity decay rate in units of g. Default: cavity-QED preset value.
    pub kappa: Option<f64>,
    /// Atomic decay rate in units of g. Default: cavity-QED preset value.
    pub gamma: Option<f64>,
    /// Mean thermal photon number. Default: cavity-QED preset value.
    pub n_th: Option<f64>,
    /// Final time of the evolve grid (units of 1/g). Default: 1.2x the
    /// first-branch seed time.
    pub t_max: Option<f64>,
    /// Number of evolve grid points. Default: 241.
    pub t_points: usize,
    /// Fock truncation override. Default: automatic from n_bar and target.
    pub field_dim: Option<usize>,
    /// Integrator step override (units of 1/g). Default: 1e-3.
    pub g_dt: Option<f64>,
    /// Target range [lo, hi] for sweep-n. Default: [1, 2*target_n + 5].
    pub targets: Option<[usize; 2]>,
    /// Robustness half-width in beta. Default: 0.06.
    pub beta_window: f64,
    /// Robustness half-width in g*tau. Default: 0.6.
    pub tau_window: f64,
    /// Robustness grid points per axis. Default: 41.
    pub grid_points: usize,
    /// Wigner axis half-width. Default: 2*sqrt(target_n) + 4.
    pub wigner_half_width: Option<f64>,
    /// Wigner grid points per axis. Default: 121.
    pub wigner_points: usize,
    /// Embed the prepared field state in the result JSON. Default: false.
    pub embed_field_state: bool,
    /// Output directory (overridable with `--out`). Default: ".".
    pub out_dir: Option<String>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::Optimize,
            target_n: 10,
            n_bar: None,
            n_atoms: 1,
            branches: vec![0, 1, 2, 3],
            metric: MetricName::OneMinusDelta,
            post_select: None,
            lossy: false,
            kappa: None,
            gamma: None,
            n_th: None,
            t_max: None,
            t_points: 241,
            field_dim: None,
            g_dt: None,
            targets: None,
            beta_window: 0.06,
            tau_window: 0.6,
            grid_points: 41,
            wigner_half_width: None,
            wigner_points: 121,
            embed_field_state: false,
            out_dir: None,
        }
    }
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        let cfg: ScenarioConfig =
            serde_json::from_str(text).context("config validation failed")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.target_n == 0 {
            bail!("target_n must be at least 1");
        }
        if !(1..=3).contains(&self.n_atoms) {
            bail!("n_atoms must be 1, 2, or 3");
        }
        if self.branches.is_empty() {
            bail!("branches must not be empty");
        }
        if let Some(nb) = self.n_bar {
            if nb <= 0.0 || nb.is_nan() {
                bail!("n_bar must be positive");
            }
        }
        if let Some([lo, hi]) = self.targets {
            if lo == 0 || hi < lo {
                bail!("targets range must satisfy 1 <= lo <= hi");
            }
        }
        if self.t_points < 2 {
            bail!("t_points must be at least 2");
        }
        if self.grid_points < 1 || self.wigner_points < 2 {
            bail!("grid sizes too small");
        }
        if self.metric == MetricName::PostSelected || self.post_select.is_some() {
            let outcome = self.outcome();
            match outcome {
                Some(o) if o.n_atoms() == self.n_atoms => {}
                Some(_) => bail!("post_select outcome length must match n_atoms"),
                None => bail!("post_select must be a string of e/g characters"),
            }
        }
        Ok(())
    }

    pub fn n_bar_value(&self) -> f64 {
        self.n_bar.unwrap_or(self.target_n as f64)
    }

    pub fn outcome(&self) -> Option<AtomicOutcome> {
        match &self.post_select {
            Some(s) => AtomicOutcome::parse(s),
            None => Some(AtomicOutcome::all_excited(self.n_atoms)),
        }
    }

    pub fn optimize_metric(&self) -> OptimizeMetric {
        match self.metric {
            MetricName::OneMinusDelta => OptimizeMetric::OneMinusDelta,
            MetricName::Fidelity => OptimizeMetric::Fidelity,
            MetricName::PostSelected => OptimizeMetric::PostSelected(
                self.outcome().expect("validated post-selection outcome"),
            ),
        }
    }
}
