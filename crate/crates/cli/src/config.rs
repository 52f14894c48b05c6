//! Run configuration: a single JSON document plus dotted-path overrides.

use std::path::{Path, PathBuf};

use pqlap_core::params::coupling_defect;
use pqlap_core::resonance::{ArctanSum, Forcing};
use pqlap_core::{Mesh, Params, SolverOptions};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Eigen1,
    Eigen2,
    Picone,
    Classify,
    Resonant,
    Sweep,
    Isolation,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Eigen1 => "eigen1",
            Command::Eigen2 => "eigen2",
            Command::Picone => "picone",
            Command::Classify => "classify",
            Command::Resonant => "resonant",
            Command::Sweep => "sweep",
            Command::Isolation => "isolation",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "domain", rename_all = "lowercase")]
pub enum MeshSpec {
    Interval {
        #[serde(default = "one")]
        length: f64,
        cells: usize,
    },
    Rectangle {
        #[serde(default = "one")]
        lx: f64,
        #[serde(default = "one")]
        ly: f64,
        nx: usize,
        ny: usize,
    },
}

fn one() -> f64 {
    1.0
}

impl MeshSpec {
    pub fn build(&self) -> pqlap_core::Result<Mesh> {
        match *self {
            MeshSpec::Interval { length, cells } => Mesh::interval(length, cells),
            MeshSpec::Rectangle { lx, ly, nx, ny } => Mesh::rectangle(lx, ly, nx, ny),
        }
    }
}

/// `beta` may be omitted and is then solved from the coupling identity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSpec {
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    #[serde(default)]
    pub beta: Option<f64>,
}

impl ParamsSpec {
    pub fn beta(&self) -> f64 {
        self.beta.unwrap_or_else(|| self.q * (1.0 - (self.alpha + 1.0) / self.p) - 1.0)
    }

    pub fn build(&self) -> pqlap_core::Result<Params> {
        Params::new(self.p, self.q, self.alpha, self.beta())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSpec {
    pub tol_residual: f64,
    pub tol_q_rel: f64,
    pub max_iters: usize,
    pub step_init: f64,
    pub armijo_c: f64,
    pub backtrack_factor: f64,
    pub epsilon_reg: f64,
    pub n_starts: usize,
    pub loop_samples: usize,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            tol_residual: d.tol_residual,
            tol_q_rel: d.tol_q_rel,
            max_iters: d.max_iters,
            step_init: d.step_init,
            armijo_c: d.armijo_c,
            backtrack_factor: d.backtrack_factor,
            epsilon_reg: d.epsilon_reg,
            n_starts: d.n_starts,
            loop_samples: d.loop_samples,
        }
    }
}

impl SolverSpec {
    pub fn options(&self, seed: u64) -> SolverOptions {
        SolverOptions {
            tol_residual: self.tol_residual,
            tol_q_rel: self.tol_q_rel,
            max_iters: self.max_iters,
            step_init: self.step_init,
            armijo_c: self.armijo_c,
            backtrack_factor: self.backtrack_factor,
            epsilon_reg: self.epsilon_reg,
            seed,
            n_starts: self.n_starts,
            loop_samples: self.loop_samples,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenSpec {
    /// Also run the seeded multi-start agreement check on λ1.
    pub simplicity: bool,
}

/// Nonnegative fields for the Picone check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum FieldSpec {
    Bump {
        #[serde(default = "one")]
        scale: f64,
    },
    /// `scale · sin(kx π x/lx) sin(ky π y/ly)`, clipped at zero.
    Sine {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "unit_mode")]
        kx: u32,
        #[serde(default = "unit_mode")]
        ky: u32,
    },
    /// A multiple of a component of the computed first eigenpair.
    Eigen {
        component: Component,
        #[serde(default = "one")]
        scale: f64,
    },
}

fn unit_mode() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    U,
    V,
}

impl FieldSpec {
    pub fn needs_eigenpair(&self) -> bool {
        matches!(self, FieldSpec::Eigen { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PiconeSpec {
    pub r: f64,
    pub u: FieldSpec,
    pub v: FieldSpec,
    #[serde(default = "picone_tol")]
    pub tol: f64,
}

fn picone_tol() -> f64 {
    1e-10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "family", rename_all = "snake_case")]
pub enum NonlinearitySpec {
    ArctanSum {
        a: f64,
        b: f64,
        #[serde(default)]
        modulation: f64,
    },
}

impl NonlinearitySpec {
    pub fn build(&self) -> ArctanSum {
        match *self {
            NonlinearitySpec::ArctanSum { a, b, modulation } => ArctanSum::with_modulation(a, b, modulation),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, tag = "kind", rename_all = "snake_case")]
pub enum ForcingSpec {
    #[default]
    Zero,
    Constant { value: f64 },
    /// Coefficients of `c₀ + c₁ x + …` in the first coordinate.
    Polynomial { coefficients: Vec<f64> },
    ScaledEigen { scale: f64 },
}

impl ForcingSpec {
    pub fn build(&self) -> Forcing {
        match self {
            ForcingSpec::Zero => Forcing::Zero,
            ForcingSpec::Constant { value } => Forcing::Constant(*value),
            ForcingSpec::Polynomial { coefficients } => Forcing::Polynomial(coefficients.clone()),
            ForcingSpec::ScaledEigen { scale } => Forcing::ScaledEigen(*scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeChoice {
    /// Follow the Landesman–Lazer classification.
    #[default]
    Auto,
    Coercive,
    Saddle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSpec {
    pub nonlinearity: NonlinearitySpec,
    #[serde(default)]
    pub h1: ForcingSpec,
    #[serde(default)]
    pub h2: ForcingSpec,
    #[serde(default)]
    pub regime: RegimeChoice,
    /// Branch parameter Θ of the saddle construction; searched when absent.
    #[serde(default)]
    pub theta_big: Option<f64>,
}

/// Cells are the product `p × q × alpha` in that nesting order. Missing `q`
/// pairs each cell with `q = p`; missing `alpha` uses `α = p/2 - 1`, and `β`
/// always comes from the coupling identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub p: Vec<f64>,
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
    #[serde(default = "yes")]
    pub lambda2: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepCell {
    pub index: usize,
    pub p: f64,
    pub q: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl SweepSpec {
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut out = Vec::new();
        for &p in &self.p {
            let qs = self.q.clone().unwrap_or_else(|| vec![p]);
            for &q in &qs {
                let alphas = self.alpha.clone().unwrap_or_else(|| vec![0.5 * p - 1.0]);
                for &alpha in &alphas {
                    let beta = q * (1.0 - (alpha + 1.0) / p) - 1.0;
                    out.push(SweepCell { index: out.len(), p, q, alpha, beta });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IsolationSpec {
    pub n_grid: usize,
    /// Distance kept from λ1 and λ2 at the ends of the scanned interval.
    pub margin: f64,
}

impl Default for IsolationSpec {
    fn default() -> Self {
        Self { n_grid: 9, margin: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSpec {
    pub dir: Option<PathBuf>,
    /// Also write `mesh.json`.
    pub mesh: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub mesh: MeshSpec,
    /// Required by every command except `sweep`.
    #[serde(default)]
    pub params: Option<ParamsSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub eigen: EigenSpec,
    #[serde(default)]
    pub picone: Option<PiconeSpec>,
    #[serde(default)]
    pub resonance: Option<ResonanceSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    #[serde(default)]
    pub isolation: IsolationSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub seed: u64,
}

impl RunConfig {
    pub fn from_value(value: Value) -> Result<Self, CliError> {
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.into_inner()))
        })
    }

    /// The exponents; only call after [`validate`] reported no errors.
    pub fn params(&self) -> &ParamsSpec {
        self.params.as_ref().expect("validated config has params")
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver.options(self.seed)
    }
}

/// Reads the JSON document and applies `key.path=value` overrides in order.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut value = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    RunConfig::from_value(value)
}

/// Sets a dotted path. The right-hand side is parsed as JSON when possible and
/// taken as a string otherwise.
pub fn apply_override(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not of the form key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(CliError::Config(format!("override `{assignment}` has an empty key segment")));
    }
    let new: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = root;
    let segments: Vec<&str> = key.split('.').collect();
    for (i, seg) in segments.iter().enumerate() {
        if !node.is_object() {
            let at = segments[..i].join(".");
            return Err(CliError::Config(format!("override `{key}`: `{at}` is not an object")));
        }
        let map = node.as_object_mut().expect("checked object");
        if i + 1 == segments.len() {
            map.insert(seg.to_string(), new);
            return Ok(());
        }
        node = map.entry(seg.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    unreachable!("non-empty key")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.field, self.message)
    }
}

fn err(field: &str, message: String) -> Diagnostic {
    Diagnostic { severity: Severity::Error, field: field.into(), message }
}

fn warn(field: &str, message: String) -> Diagnostic {
    Diagnostic { severity: Severity::Warning, field: field.into(), message }
}

fn check_exponents(prefix: &str, p: f64, q: f64, alpha: f64, beta: f64, out: &mut Vec<Diagnostic>) {
    for (name, value) in [("p", p), ("q", q)] {
        if !(value > 1.0) || !value.is_finite() {
            out.push(err(&format!("{prefix}{name}"), format!("must be a finite number above 1, got {value}")));
        }
    }
    for (name, value) in [("alpha", alpha), ("beta", beta)] {
        if !(value > -1.0) || !value.is_finite() {
            out.push(err(&format!("{prefix}{name}"), format!("must be a finite number above -1, got {value}")));
        } else if value <= 0.0 {
            out.push(warn(
                &format!("{prefix}{name}"),
                format!("{name} = {value} is outside the standard hypothesis {name} > 0"),
            ));
        }
    }
    let defect = coupling_defect(p, q, alpha, beta);
    if !(defect.abs() <= pqlap_core::params::COUPLING_TOLERANCE) {
        out.push(err(
            &format!("{prefix}beta"),
            format!("coupling constraint (alpha+1)/p + (beta+1)/q = 1 violated by {defect:e}"),
        ));
    }
}

/// All problems with the configuration; no errors means runnable.
pub fn validate(cfg: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    match cfg.mesh {
        MeshSpec::Interval { length, cells } => {
            if !(length > 0.0) || !length.is_finite() {
                out.push(err("mesh.length", format!("must be positive, got {length}")));
            }
            if cells < 2 {
                out.push(err("mesh.cells", format!("need at least 2 cells, got {cells}")));
            }
        }
        MeshSpec::Rectangle { lx, ly, nx, ny } => {
            for (name, v) in [("mesh.lx", lx), ("mesh.ly", ly)] {
                if !(v > 0.0) || !v.is_finite() {
                    out.push(err(name, format!("must be positive, got {v}")));
                }
            }
            for (name, v) in [("mesh.nx", nx), ("mesh.ny", ny)] {
                if v < 2 {
                    out.push(err(name, format!("need at least 2 cells, got {v}")));
                }
            }
        }
    }
    match &cfg.params {
        Some(ps) => check_exponents("params.", ps.p, ps.q, ps.alpha, ps.beta(), &mut out),
        None if cfg.command != Command::Sweep => {
            out.push(err("params", format!("the {} command needs a `params` section", cfg.command.name())))
        }
        None => {}
    }
    if let Err(e) = cfg.solver_options().validate() {
        out.push(err("solver", e.to_string()));
    }
    match cfg.command {
        Command::Picone => match &cfg.picone {
            None => out.push(err("picone", "the picone command needs a `picone` section".into())),
            Some(pc) => {
                if !(pc.r > 1.0) || !pc.r.is_finite() {
                    out.push(err("picone.r", format!("must exceed 1, got {}", pc.r)));
                }
                if !(pc.tol > 0.0) {
                    out.push(err("picone.tol", format!("must be positive, got {}", pc.tol)));
                }
                for (name, f) in [("picone.u", &pc.u), ("picone.v", &pc.v)] {
                    let scale = match f {
                        FieldSpec::Bump { scale } | FieldSpec::Sine { scale, .. } | FieldSpec::Eigen { scale, .. } => {
                            *scale
                        }
                    };
                    if !(scale >= 0.0) || !scale.is_finite() {
                        out.push(err(name, format!("scale must be nonnegative, got {scale}")));
                    }
                }
                let (FieldSpec::Bump { scale } | FieldSpec::Sine { scale, .. } | FieldSpec::Eigen { scale, .. }) = pc.v;
                if scale == 0.0 {
                    out.push(err("picone.v", "v must be positive in the interior; scale is 0".into()));
                }
                if let FieldSpec::Sine { kx, ky, .. } = pc.v {
                    if kx != 1 || ky != 1 {
                        out.push(err("picone.v", "v must be positive; only the (1,1) sine mode is".into()));
                    }
                }
            }
        },
        Command::Classify | Command::Resonant => match &cfg.resonance {
            None => out.push(err("resonance", format!("the {} command needs a `resonance` section", cfg.command.name()))),
            Some(rs) => {
                let NonlinearitySpec::ArctanSum { a, b, modulation } = rs.nonlinearity;
                for (name, v) in [("a", a), ("b", b)] {
                    if !v.is_finite() {
                        out.push(err(&format!("resonance.nonlinearity.{name}"), format!("must be finite, got {v}")));
                    }
                }
                if !(modulation.abs() < 1.0) {
                    out.push(err(
                        "resonance.nonlinearity.modulation",
                        format!("|modulation| must be below 1, got {modulation}"),
                    ));
                }
                if let Some(t) = rs.theta_big {
                    if !(t > 0.0) || !t.is_finite() {
                        out.push(err("resonance.theta_big", format!("must be positive, got {t}")));
                    }
                }
            }
        },
        Command::Sweep => match &cfg.sweep {
            None => out.push(err("sweep", "the sweep command needs a `sweep` section".into())),
            Some(sw) => {
                if sw.p.is_empty() {
                    out.push(err("sweep.p", "must be non-empty".into()));
                }
                if sw.q.as_ref().is_some_and(Vec::is_empty) {
                    out.push(err("sweep.q", "must be non-empty when given".into()));
                }
                if sw.alpha.as_ref().is_some_and(Vec::is_empty) {
                    out.push(err("sweep.alpha", "must be non-empty when given".into()));
                }
                for c in sw.cells() {
                    check_exponents(&format!("sweep[{}].", c.index), c.p, c.q, c.alpha, c.beta, &mut out);
                }
            }
        },
        Command::Isolation => {
            if cfg.isolation.n_grid == 0 {
                out.push(err("isolation.n_grid", "must be at least 1".into()));
            }
            if !(cfg.isolation.margin >= 0.0) {
                out.push(err("isolation.margin", format!("must be nonnegative, got {}", cfg.isolation.margin)));
            }
        }
        Command::Eigen1 | Command::Eigen2 => {}
    }
    out
}

pub fn has_errors(diags: &[Diagnostic]) -> bool {
    diags.iter().any(|d| d.severity == Severity::Error)
}
