//! Flat `section.key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored. Every key
//! is optional. Unknown or repeated keys are rejected by name.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use swarmfp_core::{build_grid, FluxRule, Grid1D, ModelKind, ModelParams, SchemeConfig};

/// Relative tolerance when checking that a time falls on the sampling lattice.
const LATTICE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Gaussian { center: f64, variance: f64 },
    Uniform { a: f64, b: f64 },
    /// Two-column CSV (`x`, `f`), linearly interpolated and zero outside its range.
    FromFile(PathBuf),
    /// Projection of the stationary profile.
    Steady,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleSpec {
    pub n: usize,
    pub seed: u64,
    pub dt: f64,
}

/// Fully defaulted description of one experiment.
///
/// `params.u0()` is a placeholder equal to `x0`; runs overwrite it with the mean of
/// the projected initial density.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub params: ModelParams,
    pub grid: Grid1D,
    pub scheme: SchemeConfig,
    pub kinds: Vec<ModelKind>,
    pub init: InitSpec,
    pub particles: Option<ParticleSpec>,
    pub output_dir: Option<PathBuf>,
    pub snapshot_times: Vec<f64>,
}

const KEYS: &[&str] = &[
    "model.lambda",
    "model.mu",
    "model.sigma2",
    "model.delta",
    "model.x0",
    "init.kind",
    "init.center",
    "init.variance",
    "init.a",
    "init.b",
    "init.path",
    "grid.xmin",
    "grid.xmax",
    "grid.n",
    "time.dt",
    "time.t_final",
    "time.cadence",
    "solver.kind",
    "solver.rule",
    "particles.enabled",
    "particles.n",
    "particles.seed",
    "particles.dt",
    "output.dir",
    "output.snapshots",
];

pub fn parse_config(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config_str(&text).with_context(|| format!("in config {}", path.display()))
}

pub fn parse_config_str(text: &str) -> Result<ExperimentSpec> {
    let mut raw = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected `key = value`, got `{line}`", lineno + 1))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            bail!("line {}: unknown config key `{key}`", lineno + 1);
        }
        if raw.insert(key.to_string(), value.to_string()).is_some() {
            bail!("line {}: config key `{key}` given twice", lineno + 1);
        }
    }
    build_spec(&Raw(raw))
}

struct Raw(BTreeMap<String, String>);

impl Raw {
    fn get<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|e| anyhow!("config key `{key}`: cannot parse `{v}`: {e}")),
        }
    }

    fn str(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }
}

fn build_spec(raw: &Raw) -> Result<ExperimentSpec> {
    let x0 = raw.get("model.x0", 0.0)?;
    let params = ModelParams::new(
        raw.get("model.lambda", 1.0)?,
        raw.get("model.mu", 0.0)?,
        raw.get("model.sigma2", 1.0)?,
        raw.get("model.delta", 1.0)?,
        x0,
        x0,
    )?;
    let grid = build_grid(raw.get("grid.xmin", -12.0)?, raw.get("grid.xmax", 12.0)?, raw.get("grid.n", 1200)?)?;
    let scheme = SchemeConfig::new(
        raw.get("time.dt", 1e-3)?,
        raw.get("time.t_final", 10.0)?,
        raw.get("time.cadence", 0.05)?,
        raw.get("solver.rule", FluxRule::ChangCooper)?,
    )?;

    let kinds = match raw.str("solver.kind") {
        None => vec![ModelKind::ContinuousKappa],
        Some(list) => {
            let kinds = list.split(',').map(str::parse).collect::<Result<Vec<ModelKind>, _>>()?;
            if kinds.is_empty() || (1..kinds.len()).any(|i| kinds[..i].contains(&kinds[i])) {
                bail!("solver.kind must list distinct model kinds");
            }
            kinds
        }
    };

    let init = match raw.str("init.kind").unwrap_or("gaussian") {
        "gaussian" => {
            let variance: f64 = raw.get("init.variance", 0.25)?;
            if !(variance > 0.0 && variance.is_finite()) {
                bail!("init.variance > 0 is violated (init.variance = {variance})");
            }
            InitSpec::Gaussian { center: raw.get("init.center", 2.0)?, variance }
        }
        "uniform" => {
            let (a, b) = (raw.get("init.a", -1.0)?, raw.get("init.b", 1.0)?);
            if !(a < b) {
                bail!("init.a < init.b is violated ({a} >= {b})");
            }
            InitSpec::Uniform { a, b }
        }
        "from_file" => InitSpec::FromFile(
            raw.str("init.path").ok_or_else(|| anyhow!("init.kind = from_file requires init.path"))?.into(),
        ),
        "steady" => InitSpec::Steady,
        other => bail!("unknown init.kind `{other}` (expected gaussian, uniform, from_file or steady)"),
    };

    let particles = if raw.get("particles.enabled", false)? {
        let spec = ParticleSpec {
            n: raw.get("particles.n", 100_000)?,
            seed: raw.get("particles.seed", 42)?,
            dt: raw.get::<f64>("particles.dt", 1e-3)?,
        };
        if spec.n < 2 {
            bail!("particles.n >= 2 is violated (particles.n = {})", spec.n);
        }
        if !(spec.dt > 0.0 && spec.dt.is_finite()) {
            bail!("particles.dt > 0 is violated (particles.dt = {})", spec.dt);
        }
        if !on_lattice(scheme.cadence, spec.dt) {
            bail!("time.cadence must be a multiple of particles.dt ({} vs {})", scheme.cadence, spec.dt);
        }
        Some(spec)
    } else {
        None
    };

    let snapshot_times = match raw.str("output.snapshots") {
        None => vec![0.0, 1.0, 5.0, 10.0],
        Some(list) => parse_list(list)?,
    };
    for &tau in &snapshot_times {
        if !(0.0..=scheme.t_final).contains(&tau) {
            bail!("snapshot time {tau} is outside [0, t_final = {}]", scheme.t_final);
        }
        if !on_lattice(tau, scheme.cadence) {
            bail!("snapshot time {tau} is not a multiple of time.cadence = {}", scheme.cadence);
        }
    }

    Ok(ExperimentSpec {
        params,
        grid,
        scheme,
        kinds,
        init,
        particles,
        output_dir: raw.str("output.dir").map(PathBuf::from),
        snapshot_times,
    })
}

fn parse_list(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|e| anyhow!("output.snapshots: cannot parse `{s}`: {e}")))
        .collect()
}

/// `t` is a whole multiple of `step`.
pub(crate) fn on_lattice(t: f64, step: f64) -> bool {
    let r = t / step;
    (r - r.round()).abs() <= LATTICE_TOL * r.abs().max(1.0)
}

/// Renders `spec` with every key explicit; floats use the shortest round-trip form.
pub fn resolved_config(spec: &ExperimentSpec) -> String {
    let p = &spec.params;
    let mut s = String::new();
    let mut put = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    put("model.lambda", format!("{:?}", p.lambda()));
    put("model.mu", format!("{:?}", p.mu()));
    put("model.sigma2", format!("{:?}", p.sigma2()));
    put("model.delta", format!("{:?}", p.delta()));
    put("model.x0", format!("{:?}", p.x0()));
    match &spec.init {
        InitSpec::Gaussian { center, variance } => {
            put("init.kind", "gaussian".into());
            put("init.center", format!("{center:?}"));
            put("init.variance", format!("{variance:?}"));
        }
        InitSpec::Uniform { a, b } => {
            put("init.kind", "uniform".into());
            put("init.a", format!("{a:?}"));
            put("init.b", format!("{b:?}"));
        }
        InitSpec::FromFile(path) => {
            put("init.kind", "from_file".into());
            put("init.path", path.display().to_string());
        }
        InitSpec::Steady => put("init.kind", "steady".into()),
    }
    put("grid.xmin", format!("{:?}", spec.grid.xmin()));
    put("grid.xmax", format!("{:?}", spec.grid.xmax()));
    put("grid.n", spec.grid.n_cells().to_string());
    put("time.dt", format!("{:?}", spec.scheme.dt));
    put("time.t_final", format!("{:?}", spec.scheme.t_final));
    put("time.cadence", format!("{:?}", spec.scheme.cadence));
    put("solver.kind", spec.kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(","));
    put("solver.rule", spec.scheme.rule.name().into());
    put("particles.enabled", spec.particles.is_some().to_string());
    if let Some(ps) = &spec.particles {
        put("particles.n", ps.n.to_string());
        put("particles.seed", ps.seed.to_string());
        put("particles.dt", format!("{:?}", ps.dt));
    }
    if let Some(dir) = &spec.output_dir {
        put("output.dir", dir.display().to_string());
    }
    put("output.snapshots", spec.snapshot_times.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>().join(","));
    s
}
