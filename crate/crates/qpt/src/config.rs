//! Run configuration: the JSON document, its validation, and the canonical echo.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use optomech_core::model::HamiltonianKind;
use optomech_core::params::ModelParams;
use optomech_core::spectrum::{ConvergenceOptions, ControlParam, DimsPolicy, Frame};
use optomech_core::variational::{Regime, SeriesOrder, DEFAULT_SERIES_ORDER};
use serde::{Deserialize, Serialize};

use crate::error::{QptError, Result};

pub const SCHEMA: u32 = 1;

/// Relative tolerance for two ways of stating the same parameter.
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Staircase,
    GapSweep,
    Landscape,
    Variational,
    PhaseDiagram,
    HybridSpectrum,
    CrossingScan,
    ConvergenceAudit,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Staircase => "staircase",
            Task::GapSweep => "gap-sweep",
            Task::Landscape => "landscape",
            Task::Variational => "variational",
            Task::PhaseDiagram => "phase-diagram",
            Task::HybridSpectrum => "hybrid-spectrum",
            Task::CrossingScan => "crossing-scan",
            Task::ConvergenceAudit => "convergence-audit",
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FrameName {
    #[default]
    Printed,
    Flipped,
}

impl From<FrameName> for Frame {
    fn from(f: FrameName) -> Frame {
        match f {
            FrameName::Printed => Frame::Printed,
            FrameName::Flipped => Frame::Flipped,
        }
    }
}

impl From<Frame> for FrameName {
    fn from(f: Frame) -> FrameName {
        match f {
            Frame::Printed => FrameName::Printed,
            Frame::Flipped => FrameName::Flipped,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(rename = "N_a", default, skip_serializing_if = "Option::is_none")]
    pub n_atoms: Option<u32>,
    #[serde(rename = "alpha_A2", default, skip_serializing_if = "Option::is_none")]
    pub alpha_a2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    #[serde(rename = "N_factor", default, skip_serializing_if = "Option::is_none")]
    pub n_factor: Option<f64>,
    /// Alternatives to `omega_m`, `g` and `lambda`. Checked against them when both are given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlFile {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DimsFile {
    List(Vec<usize>),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesOrderFile {
    Order(usize),
    Word(String),
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_order: Option<SeriesOrderFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eigen_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photon_tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_total_dim: Option<usize>,
    /// Reset `eps1 = eps2` to the value under which the quartic model has a closed form,
    /// at every sweep point.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub consistent_quartic: Option<bool>,
}

/// The JSON document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(default)]
    pub params: ParamsFile,
    pub control: ControlFile,
    /// Second axis of two-dimensional tasks.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control2: Option<ControlFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dims: Option<DimsFile>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default)]
    pub options: OptionsFile,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Control {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
}

impl Control {
    pub fn values(&self) -> Vec<f64> {
        optomech_core::spectrum::linspace(self.lo, self.hi, self.steps)
    }

    fn to_file(&self) -> ControlFile {
        ControlFile { name: self.name.clone(), lo: self.lo, hi: self.hi, steps: self.steps }
    }
}

/// A validated run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub model: HamiltonianKind,
    pub params: ModelParams,
    pub control: Control,
    pub control2: Option<Control>,
    /// `None` when the task runs without diagonalization.
    pub dims: Option<DimsPolicy>,
    pub seed: u64,
    pub frame: Frame,
    pub format: Format,
    pub series_order: SeriesOrder,
    pub regime: Regime,
    pub convergence: ConvergenceOptions,
    pub consistent_quartic: bool,
}

fn reject(msg: impl Into<String>) -> QptError {
    QptError::Config(msg.into())
}

fn consistent(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= CONSISTENCY_TOL * a.abs().max(b.abs())
}

fn resolve_params(p: &ParamsFile) -> Result<ModelParams> {
    let mut m = ModelParams::default();
    if let Some(v) = p.omega_c {
        m.omega_c = v;
    }
    match (p.omega_m, p.eta) {
        (Some(w), Some(eta)) if !consistent(m.omega_c / w, eta) => {
            return Err(reject(format!("eta = {eta} contradicts omega_c / omega_m = {}", m.omega_c / w)));
        }
        (Some(w), _) => m.omega_m = w,
        (None, Some(eta)) => m.omega_m = m.omega_c / eta,
        (None, None) => {}
    }
    for (name, v) in [("omega_c", m.omega_c), ("omega_m", m.omega_m)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(reject(format!("{name} = {v} must be positive and finite")));
        }
    }
    let from_gamma = p.gamma.map(|v| ("gamma", m.with_gamma(v).g));
    let from_kappa = p.kappa.map(|v| ("kappa", m.with_kappa(v).g));
    let stated: Vec<(&str, f64)> = p.g.map(|v| ("g", v)).into_iter().chain(from_gamma).chain(from_kappa).collect();
    if let Some(&(first, g)) = stated.first() {
        if let Some((other, g2)) = stated.iter().skip(1).find(|(_, g2)| !consistent(g, *g2)) {
            return Err(reject(format!(
                "{other} implies g = {g2}, contradicting {first} (g = {g}); use gamma = 2 sqrt(2) g / sqrt(omega_c omega_m) and kappa = sqrt(omega_c omega_m) / (2 g)"
            )));
        }
        m.g = g;
    }
    if let Some(v) = p.omega_a {
        m.omega_a = v;
    }
    match (p.lambda, p.mu) {
        (Some(l), Some(mu)) if !consistent(m.with_mu(mu).lambda, l) => {
            return Err(reject(format!("mu = {mu} contradicts lambda = {l}")));
        }
        (Some(l), _) => m.lambda = l,
        (None, Some(mu)) => m = m.with_mu(mu),
        (None, None) => {}
    }
    if let Some(v) = p.n_atoms {
        m.n_atoms = v;
    }
    if let Some(v) = p.alpha_a2 {
        m.alpha_a2 = v;
    }
    if let Some(v) = p.xi {
        m.xi = v;
    }
    if let Some(v) = p.theta {
        m.theta = v;
    }
    if let Some(v) = p.eps1 {
        m.eps1 = v;
    }
    if let Some(v) = p.eps2 {
        m.eps2 = v;
    }
    if let Some(v) = p.n_factor {
        m.n_factor = v;
    }
    m.validate()?;
    Ok(m)
}

fn resolve_control(c: &ControlFile, what: &str) -> Result<Control> {
    if !(c.lo.is_finite() && c.hi.is_finite()) {
        return Err(reject(format!("{what} range [{}, {}] must be finite", c.lo, c.hi)));
    }
    if !(c.lo < c.hi) {
        return Err(reject(format!("{what} range needs lo < hi, got [{}, {}]", c.lo, c.hi)));
    }
    if c.steps < 2 {
        return Err(reject(format!("{what} needs steps >= 2, got {}", c.steps)));
    }
    Ok(Control { name: c.name.clone(), lo: c.lo, hi: c.hi, steps: c.steps })
}

fn default_model(task: Task) -> Option<HamiltonianKind> {
    match task {
        Task::Staircase | Task::CrossingScan | Task::Landscape => Some(HamiltonianKind::EffectiveHomTilde),
        Task::Variational => Some(HamiltonianKind::FullH),
        Task::PhaseDiagram | Task::HybridSpectrum => Some(HamiltonianKind::HybridFullSpin),
        Task::GapSweep | Task::ConvergenceAudit => None,
    }
}

fn allowed_models(task: Task) -> &'static [HamiltonianKind] {
    use HamiltonianKind::*;
    match task {
        Task::Staircase | Task::CrossingScan => &[EffectiveHomTilde],
        Task::Landscape => &[EffectiveHomTilde, ApproxHom, FullH, DisplacedHbar, QuarticHop],
        Task::Variational => &[FullH, DisplacedHbar, QuadraticLimitHbarF],
        Task::PhaseDiagram | Task::HybridSpectrum => &[HybridFullSpin, HybridHp],
        Task::GapSweep | Task::ConvergenceAudit => &HamiltonianKind::ALL,
    }
}

/// Control names each task sweeps over.
fn allowed_controls(task: Task, model: HamiltonianKind) -> (&'static [&'static str], Option<&'static [&'static str]>) {
    match task {
        Task::Staircase | Task::CrossingScan => (&["kappa"], None),
        Task::Landscape if model == HamiltonianKind::QuarticHop => (&["alpha"], Some(&["beta"])),
        Task::Landscape => (&["re_alpha"], Some(&["im_alpha"])),
        Task::Variational => (&["gamma", "eta"], None),
        Task::PhaseDiagram => (&["mu"], Some(&["gamma"])),
        Task::HybridSpectrum => (&["gamma", "mu"], None),
        Task::GapSweep | Task::ConvergenceAudit => (&["gamma", "kappa", "mu", "xi", "eta"], None),
    }
}

fn check_name(c: &Control, allowed: &[&str], task: Task, what: &str) -> Result<()> {
    if !allowed.contains(&c.name.as_str()) {
        return Err(reject(format!("{task} sweeps {what} over one of {allowed:?}, got {:?}", c.name)));
    }
    Ok(())
}

fn resolve_dims(task: Task, model: HamiltonianKind, dims: &Option<DimsFile>, control: &Control) -> Result<Option<DimsPolicy>> {
    let policy = match dims {
        None => None,
        Some(DimsFile::Word(w)) if w == "auto" => Some(DimsPolicy::Auto),
        Some(DimsFile::Word(w)) => return Err(reject(format!("dims must be a list of integers or \"auto\", got {w:?}"))),
        Some(DimsFile::List(d)) => {
            let want = model.modes().len();
            if d.len() != want {
                return Err(reject(format!("{model} needs {want} mode dimensions, got {}", d.len())));
            }
            if d.iter().any(|&n| n < 1) {
                return Err(reject("mode dimensions must be >= 1"));
            }
            Some(DimsPolicy::Fixed(d.clone()))
        }
    };
    Ok(match task {
        // the anharmonic staircase is diagonal: pick a dimension that holds the largest occupation
        Task::Staircase | Task::CrossingScan => match policy {
            None | Some(DimsPolicy::Auto) => {
                let top = ((control.hi * control.hi - 1.0) / 2.0).max(0.0).ceil() as usize;
                Some(DimsPolicy::Fixed(vec![(top + 8).max(16)]))
            }
            fixed => fixed,
        },
        Task::GapSweep | Task::ConvergenceAudit => Some(policy.unwrap_or(DimsPolicy::Auto)),
        Task::HybridSpectrum => policy,
        Task::Landscape | Task::Variational | Task::PhaseDiagram => {
            if policy.is_some() {
                return Err(reject(format!("{task} does not diagonalize; remove dims")));
            }
            None
        }
    })
}

impl RunConfig {
    /// Validate a parsed document. `cli_task` must agree with the document's task when both exist.
    pub fn from_file(file: &ConfigFile, cli_task: Option<Task>) -> Result<Self> {
        if file.schema != SCHEMA {
            return Err(reject(format!("unsupported schema {} (this build reads schema {SCHEMA})", file.schema)));
        }
        let task = match (file.task, cli_task) {
            (Some(a), Some(b)) if a != b => {
                return Err(reject(format!("command line asks for {b} but the config is a {a} run")));
            }
            (Some(t), _) | (None, Some(t)) => t,
            (None, None) => return Err(reject("no task given")),
        };
        let model = match &file.model {
            Some(name) => HamiltonianKind::from_str(name)?,
            None => default_model(task).ok_or_else(|| reject(format!("{task} needs a model")))?,
        };
        if !allowed_models(task).contains(&model) {
            let names: Vec<&str> = allowed_models(task).iter().map(|k| k.name()).collect();
            return Err(reject(format!("{task} cannot run model {model}; use one of {names:?}")));
        }
        let params = resolve_params(&file.params)?;
        let control = resolve_control(&file.control, "control")?;
        let (first, second) = allowed_controls(task, model);
        check_name(&control, first, task, "control")?;
        let control2 = match (&file.control2, second) {
            (Some(c), Some(names)) => {
                let c = resolve_control(c, "control2")?;
                check_name(&c, names, task, "control2")?;
                Some(c)
            }
            (None, Some(names)) if task == Task::Landscape && model != HamiltonianKind::QuarticHop => {
                Some(Control { name: names[0].to_string(), ..control.clone() })
            }
            (None, Some(names)) => return Err(reject(format!("{task} needs control2 over {names:?}"))),
            (Some(_), None) => return Err(reject(format!("{task} takes a single control"))),
            (None, None) => None,
        };
        if matches!(task, Task::Staircase | Task::CrossingScan) && control.lo < 0.0 {
            return Err(reject("kappa range must start at >= 0"));
        }
        let dims = resolve_dims(task, model, &file.dims, &control)?;
        let o = &file.options;
        let series_order = match &o.series_order {
            None => DEFAULT_SERIES_ORDER,
            Some(SeriesOrderFile::Order(n)) => SeriesOrder::from_str(&n.to_string())?,
            Some(SeriesOrderFile::Word(w)) => SeriesOrder::from_str(w)?,
        };
        let regime = match &o.regime {
            None => Regime::FiniteEta,
            Some(r) => Regime::from_str(r)?,
        };
        let d = ConvergenceOptions::default();
        let convergence = ConvergenceOptions {
            eigen_tol: o.eigen_tol.unwrap_or(d.eigen_tol),
            photon_tol: o.photon_tol.unwrap_or(d.photon_tol),
            levels: o.levels.unwrap_or(d.levels),
            max_total_dim: o.max_total_dim.unwrap_or(d.max_total_dim),
        };
        if !(convergence.eigen_tol > 0.0 && convergence.photon_tol > 0.0) || convergence.levels < 1 {
            return Err(reject("convergence tolerances must be positive and levels >= 1"));
        }
        Ok(RunConfig {
            task,
            model,
            params,
            control,
            control2,
            dims,
            seed: file.seed,
            frame: file.frame.unwrap_or_default().into(),
            format: file.format.unwrap_or_default(),
            series_order,
            regime,
            convergence,
            consistent_quartic: o.consistent_quartic.unwrap_or(false),
        })
    }

    /// Every setting spelled out; parsing this document gives back `self`.
    pub fn to_file(&self) -> ConfigFile {
        let p = &self.params;
        ConfigFile {
            schema: SCHEMA,
            task: Some(self.task),
            model: Some(self.model.name().to_string()),
            params: ParamsFile {
                omega_c: Some(p.omega_c),
                omega_m: Some(p.omega_m),
                g: Some(p.g),
                omega_a: Some(p.omega_a),
                lambda: Some(p.lambda),
                n_atoms: Some(p.n_atoms),
                alpha_a2: Some(p.alpha_a2),
                xi: Some(p.xi),
                theta: Some(p.theta),
                eps1: Some(p.eps1),
                eps2: Some(p.eps2),
                n_factor: Some(p.n_factor),
                ..ParamsFile::default()
            },
            control: self.control.to_file(),
            control2: self.control2.as_ref().map(Control::to_file),
            dims: self.dims.as_ref().map(|d| match d {
                DimsPolicy::Auto => DimsFile::Word("auto".into()),
                DimsPolicy::Fixed(v) => DimsFile::List(v.clone()),
            }),
            seed: self.seed,
            frame: Some(self.frame.into()),
            format: Some(self.format),
            options: OptionsFile {
                series_order: Some(match self.series_order {
                    SeriesOrder::Truncated(n) => SeriesOrderFile::Order(n),
                    SeriesOrder::Full => SeriesOrderFile::Word("full".into()),
                }),
                regime: Some(self.regime.name().to_string()),
                levels: Some(self.convergence.levels),
                eigen_tol: Some(self.convergence.eigen_tol),
                photon_tol: Some(self.convergence.photon_tol),
                max_total_dim: Some(self.convergence.max_total_dim),
                consistent_quartic: Some(self.consistent_quartic),
            },
        }
    }

    /// Parameters at one value of `control` (and `control2`, when it names a model parameter).
    pub fn params_at(&self, name: &str, value: f64, base: &ModelParams) -> ModelParams {
        let mut p = match ControlParam::from_str(name) {
            Ok(c) => c.apply(base, value),
            Err(_) => *base,
        };
        if self.consistent_quartic {
            p = p.with_consistent_quartic();
        }
        p
    }
}

/// Parse and validate a JSON document.
pub fn parse_config(text: &str, cli_task: Option<Task>) -> Result<RunConfig> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| reject(e.to_string()))?;
    RunConfig::from_file(&file, cli_task)
}

/// Read a config from a path, `-` meaning standard input.
pub fn load_config(path: &Path, cli_task: Option<Task>) -> Result<RunConfig> {
    let text = if path.as_os_str() == "-" {
        std::io::read_to_string(std::io::stdin())?
    } else {
        std::fs::read_to_string(path).map_err(|e| reject(format!("{}: {e}", path.display())))?
    };
    parse_config(&text, cli_task)
}
