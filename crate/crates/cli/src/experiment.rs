//! Experiment orchestration: PDE runs, optional particle ensemble, checks and files.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use swarmfp_core::diagnostics::{
    balance_residual, boundary_d_bound, boundary_h_bound, entropy_vs_quasi_decomposition, fit_rate, BalanceKind,
    DiagnosticsRecord, RateModel,
};
use swarmfp_core::particles::{histogram_density, run_particles, sample_initial, Histogram, MeanSample, ParticleEnsemble};
use swarmfp_core::{
    l1_distance, mean_closed_form, project_density, run_from_field, steady_masses, steady_profile, DensityField,
    ModelKind, ModelParams, RunOutput, SteadyMasses,
};

use crate::config::{resolved_config, ExperimentSpec, InitSpec, ParticleSpec};
use crate::output::{read_csv, time_label, write_csv, Summary};

pub const MASS_TOL: f64 = 1e-12;
pub const HELLINGER_TOL: f64 = 1e-6;
pub const LYAPUNOV_SLACK: f64 = 1e-8;
pub const CKL_TOL: f64 = 1e-8;
/// A sample of the moment-entropy functional may not exceed this multiple of its
/// initial magnitude.
pub const MOMENT_ENTROPY_FACTOR: f64 = 10.0;

const SNAPSHOT_HEADER: [&str; 4] = ["x", "f", "f_q", "f_inf"];

/// Violation counts over one sampled trajectory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunChecks {
    pub samples: usize,
    pub max_mass_drift: f64,
    pub min_cell: f64,
    pub mass_violations: usize,
    pub positivity_violations: usize,
    pub hellinger_violations: usize,
    pub lyapunov_violations: usize,
    pub lh_bound_violations: usize,
    pub ld_bound_violations: usize,
    pub ckl_violations: usize,
    pub moment_entropy_violations: usize,
}

impl RunChecks {
    /// Mass and positivity failures; these make the run fail.
    pub fn hard_violations(&self) -> usize {
        self.mass_violations + self.positivity_violations
    }
}

pub fn check_trajectory(records: &[DiagnosticsRecord], min_cells: &[f64], p: &ModelParams, m: &SteadyMasses) -> RunChecks {
    let mut c = RunChecks { samples: records.len(), min_cell: f64::INFINITY, ..Default::default() };
    let me0 = records.first().map_or(0.0, |r| r.moment_entropy.abs());
    for r in records {
        let drift = (r.mass - 1.0).abs();
        c.max_mass_drift = c.max_mass_drift.max(drift);
        c.mass_violations += usize::from(drift > MASS_TOL);
        c.hellinger_violations += usize::from(r.d2 > 2.0 * r.ih + HELLINGER_TOL);
        c.lh_bound_violations += usize::from(r.lh.abs() > boundary_h_bound(r.t, p) * (1.0 + 1e-12));
        c.ld_bound_violations += usize::from(r.ld.abs() > boundary_d_bound(r.t, p, m) * (1.0 + 1e-12));
        c.ckl_violations += usize::from(r.ckl_gap < -CKL_TOL);
        c.moment_entropy_violations += usize::from(r.moment_entropy > MOMENT_ENTROPY_FACTOR * me0);
    }
    for w in records.windows(2) {
        c.lyapunov_violations += usize::from(w[1].lyapunov > w[0].lyapunov + LYAPUNOV_SLACK);
    }
    for &v in min_cells {
        c.min_cell = c.min_cell.min(v);
        c.positivity_violations += usize::from(v < 0.0);
    }
    c
}

/// One PDE run of an experiment.
#[derive(Debug, Clone)]
pub struct KindRun {
    pub kind: ModelKind,
    pub output: RunOutput,
    pub masses: SteadyMasses,
    /// Smallest cell value at each diagnostics sample.
    pub min_cells: Vec<f64>,
    pub snapshots: Vec<(f64, DensityField)>,
    pub checks: RunChecks,
}

impl KindRun {
    pub fn snapshot(&self, t: f64) -> Option<&DensityField> {
        self.snapshots.iter().find(|(s, _)| same_time(*s, t)).map(|(_, f)| f)
    }
}

/// Particle ensemble trajectory.
#[derive(Debug, Clone)]
pub struct ParticleRun {
    pub spec: ParticleSpec,
    pub samples: Vec<MeanSample>,
    pub histograms: Vec<(f64, Histogram)>,
    pub ensemble: ParticleEnsemble,
}

impl ParticleRun {
    pub fn max_deviation_se(&self) -> f64 {
        self.samples.iter().map(MeanSample::deviation_in_se).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub runs: Vec<KindRun>,
    pub particles: Option<ParticleRun>,
    /// Histogram-vs-PDE L1 distance at each shared snapshot time.
    pub particle_l1: Vec<(f64, f64)>,
    pub summary: Summary,
    pub written: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn hard_violations(&self) -> usize {
        self.runs.iter().map(|r| r.checks.hard_violations()).sum()
    }
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Unit-mass projection of the configured initial data.
pub fn initial_density(spec: &ExperimentSpec) -> Result<DensityField> {
    let grid = &spec.grid;
    let field = match &spec.init {
        InitSpec::Gaussian { center, variance } => {
            project_density(|x| (-(x - center) * (x - center) / (2.0 * variance)).exp(), grid, true)?
        }
        InitSpec::Uniform { a, b } => project_density(|x| if x >= *a && x <= *b { 1.0 } else { 0.0 }, grid, true)
            .map_err(|e| anyhow!("uniform initial data on [{a}, {b}] misses every cell center: {e}"))?,
        InitSpec::Steady => {
            let m = steady_masses(&spec.params)?;
            project_density(|x| steady_profile(x, &spec.params, &m), grid, true)?
        }
        InitSpec::FromFile(path) => {
            let table = read_csv(path)?;
            let (xs, fs) = (table.column("x")?, table.column("f")?);
            if xs.len() < 2 || xs.windows(2).any(|w| w[1] <= w[0]) {
                bail!("{}: column x must be strictly increasing with at least two rows", path.display());
            }
            if fs.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
                bail!("{}: column f must be finite and nonnegative", path.display());
            }
            project_density(|x| interpolate(&xs, &fs, x), grid, true)?
        }
    };
    Ok(field)
}

/// Piecewise-linear interpolant, zero outside the data range.
fn interpolate(xs: &[f64], fs: &[f64], x: f64) -> f64 {
    if x < xs[0] || x > xs[xs.len() - 1] {
        return 0.0;
    }
    let i = xs.partition_point(|&v| v <= x).clamp(1, xs.len() - 1);
    let w = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
    fs[i - 1] + w * (fs[i] - fs[i - 1])
}

pub fn run_kind(spec: &ExperimentSpec, kind: ModelKind, initial: DensityField) -> Result<KindRun> {
    let mut min_cells = Vec::new();
    let mut snapshots = Vec::new();
    let output = run_from_field(&spec.params, &spec.scheme, kind, initial, |_, state| {
        min_cells.push(state.field.min_value());
        if spec.snapshot_times.iter().any(|&tau| same_time(tau, state.t)) {
            snapshots.push((state.t, state.field.clone()));
        }
    })
    .with_context(|| format!("{kind} run failed"))?;
    let masses = steady_masses(&output.params)?;
    let checks = check_trajectory(&output.trajectory, &min_cells, &output.params, &masses);
    Ok(KindRun { kind, output, masses, min_cells, snapshots, checks })
}

/// Samples the ensemble from `initial` and advances it to `t_final`, keeping a
/// histogram at every snapshot time.
pub fn run_particle_ensemble(spec: &ExperimentSpec, ps: &ParticleSpec, initial: &DensityField) -> Result<ParticleRun> {
    let mut ensemble = sample_initial(initial, ps.n, ps.seed)?;
    let n_steps = (spec.scheme.t_final / ps.dt + 1e-9).floor() as usize;
    let every = (spec.scheme.cadence / ps.dt).round().max(1.0) as usize;
    let mut histograms = Vec::new();
    let samples = run_particles(&mut ensemble, &spec.params, ps.dt, n_steps, every, |e| {
        if spec.snapshot_times.iter().any(|&tau| same_time(tau, e.t())) {
            histograms.push((e.t(), histogram_density(e, &spec.grid)));
        }
    });
    Ok(ParticleRun { spec: *ps, samples, histograms, ensemble })
}

/// Runs every configured model kind (concurrently when there are several), the
/// particle ensemble if enabled, and writes all outputs under `dir`.
pub fn run_experiment(spec: &ExperimentSpec, dir: &Path) -> Result<ExperimentReport> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let initial = initial_density(spec)?;

    let runs: Vec<KindRun> = if spec.kinds.len() == 1 {
        vec![run_kind(spec, spec.kinds[0], initial.clone())?]
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> =
                spec.kinds.iter().map(|&k| s.spawn({ let f0 = initial.clone(); move || run_kind(spec, k, f0) })).collect();
            handles.into_iter().map(|h| h.join().expect("run thread panicked")).collect::<Result<Vec<_>>>()
        })?
    };

    let particles = match &spec.particles {
        Some(ps) => Some(run_particle_ensemble(spec, ps, &runs[0].output.initial)?),
        None => None,
    };
    let reference = runs.iter().find(|r| r.kind == ModelKind::ContinuousKappa);
    let mut particle_l1 = Vec::new();
    if let (Some(pr), Some(pde)) = (&particles, reference) {
        for (t, h) in &pr.histograms {
            if let Some(f) = pde.snapshot(*t) {
                particle_l1.push((*t, l1_distance(&h.field, f)?));
            }
        }
    }

    let mut written = Vec::new();
    let nested = runs.len() > 1;
    for run in &runs {
        let sub = if nested { dir.join(run.kind.name()) } else { dir.to_path_buf() };
        std::fs::create_dir_all(&sub)?;
        written.extend(write_run_files(run, &sub)?);
    }
    if let Some(pr) = &particles {
        written.extend(write_particle_files(pr, dir)?);
    }

    let summary = build_summary(spec, &runs, particles.as_ref(), &particle_l1)?;
    let path = dir.join("summary.txt");
    std::fs::write(&path, summary.render())?;
    written.push(path);
    let path = dir.join("config.resolved");
    std::fs::write(&path, resolved_config(spec))?;
    written.push(path);

    Ok(ExperimentReport { runs, particles, particle_l1, summary, written })
}

fn write_run_files(run: &KindRun, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join("diagnostics.csv");
    write_csv(&path, &DiagnosticsRecord::COLUMNS, run.output.trajectory.iter().map(|r| r.to_array().to_vec()))?;
    written.push(path);

    let ctx = swarmfp_core::DiagnosticsContext::new(&run.output.params, run.output.initial.grid())?;
    for (t, f) in &run.snapshots {
        let fq = ctx.quasi(*t)?;
        let grid = f.grid();
        let rows = (0..grid.n_cells())
            .map(|i| vec![grid.center(i), f.values()[i], fq.values()[i], ctx.steady().values()[i]]);
        let path = dir.join(format!("snapshot_t{}.csv", time_label(*t)));
        write_csv(&path, &SNAPSHOT_HEADER, rows)?;
        written.push(path);
    }
    Ok(written)
}

fn write_particle_files(pr: &ParticleRun, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join("particles_mean.csv");
    let rows = pr.samples.iter().map(|s| vec![s.t, s.mean, s.closed_form, s.standard_error]);
    write_csv(&path, &["t", "mean", "closed_form", "standard_error"], rows)?;
    written.push(path);
    for (t, h) in &pr.histograms {
        let grid = h.field.grid();
        let path = dir.join(format!("particles_t{}.csv", time_label(*t)));
        write_csv(&path, &["x", "f_mc"], (0..grid.n_cells()).map(|i| vec![grid.center(i), h.field.values()[i]]))?;
        written.push(path);
    }
    Ok(written)
}

/// `[2/lambda, t_final]`, when it holds at least a few samples.
pub fn default_fit_window(spec: &ExperimentSpec) -> Option<(f64, f64)> {
    let lambda = spec.params.lambda();
    let t_final = spec.scheme.t_final;
    (lambda > 0.0 && 2.0 / lambda < t_final).then(|| (2.0 / lambda, t_final))
}

fn put_fit(s: &mut Summary, prefix: &str, series: &[(f64, f64)], window: Option<(f64, f64)>, model: RateModel) {
    match window.map(|w| fit_rate(series, w, model)) {
        Some(Ok(fit)) => {
            s.put_f64(format!("{prefix}_rate"), fit.rate);
            s.put_f64(format!("{prefix}_residual"), fit.residual);
        }
        Some(Err(e)) => s.put(format!("{prefix}_rate"), format!("n/a ({e})")),
        None => s.put(format!("{prefix}_rate"), "n/a (no fit window)"),
    }
}

fn build_summary(
    spec: &ExperimentSpec,
    runs: &[KindRun],
    particles: Option<&ParticleRun>,
    particle_l1: &[(f64, f64)],
) -> Result<Summary> {
    let mut s = Summary::default();
    let window = default_fit_window(spec);
    let first = &runs[0];
    let params = first.output.params;
    s.put("kinds", runs.iter().map(|r| r.kind.name()).collect::<Vec<_>>().join(","));
    s.put_f64("u0", params.u0());
    s.put_f64("m1", first.masses.m1());
    s.put_f64("m2", first.masses.m2());
    match window {
        Some((a, b)) => s.put("fit_window", format!("{a:?}:{b:?}")),
        None => s.put("fit_window", "n/a"),
    }

    for run in runs {
        let pre = if runs.len() > 1 { format!("{}.", run.kind.name()) } else { String::new() };
        let tr = &run.output.trajectory;
        let last = tr.last().expect("trajectory has the t = 0 sample");
        let c = &run.checks;
        let mut put = |k: &str, v: f64| s.put_f64(format!("{pre}{k}"), v);
        put("max_mass_drift", c.max_mass_drift);
        put("min_cell", c.min_cell);
        put("max_l1_f_finf", tr.iter().map(|r| r.l1_f_finf).fold(0.0, f64::max));
        put("max_mean_error", tr.iter().map(|r| (r.mean - mean_closed_form(r.t, &params)).abs()).fold(0.0, f64::max));
        put("final_t", last.t);
        put("final_l1_f_finf", last.l1_f_finf);
        put("final_l1_f_fq", last.l1_f_fq);
        put("final_H_f_fq", last.h_f_fq);
        put("final_D2", last.d2);
        for (name, which) in [("H", BalanceKind::RelativeEntropy), ("D", BalanceKind::Hellinger)] {
            match balance_residual(tr, which) {
                Ok(v) => s.put_f64(format!("{pre}balance_residual_{name}"), v),
                Err(e) => s.put(format!("{pre}balance_residual_{name}"), format!("n/a ({e})")),
            }
        }
        let x0 = params.x0();
        let mean: Vec<(f64, f64)> = tr.iter().map(|r| (r.t, (r.mean - x0).abs())).collect();
        put_fit(&mut s, &format!("{pre}mean_decay"), &mean, window, RateModel::Exponential);
        if let (Some(rate), true) = (s.get_f64(&format!("{pre}mean_decay_rate")), params.lambda() > 0.0) {
            s.put_f64(format!("{pre}mean_decay_rate_rel_err"), (rate - params.lambda()).abs() / params.lambda());
        }
        let h: Vec<(f64, f64)> = tr.iter().map(|r| (r.t, r.h_finf_fq)).collect();
        put_fit(&mut s, &format!("{pre}H_finf_fq"), &h, window, RateModel::Exponential);
        let d2: Vec<(f64, f64)> = tr.iter().map(|r| (r.t, r.d2)).collect();
        put_fit(&mut s, &format!("{pre}D2_power"), &d2, window, RateModel::Power);
        for (k, v) in [
            ("mass_violations", c.mass_violations),
            ("positivity_violations", c.positivity_violations),
            ("hellinger_inequality_violations", c.hellinger_violations),
            ("lyapunov_violations", c.lyapunov_violations),
            ("lh_bound_violations", c.lh_bound_violations),
            ("ld_bound_violations", c.ld_bound_violations),
            ("ckl_violations", c.ckl_violations),
            ("moment_entropy_violations", c.moment_entropy_violations),
        ] {
            s.put(format!("{pre}{k}"), v);
        }
    }

    match entropy_vs_quasi_decomposition(&params, &first.masses, spec.scheme.t_final) {
        Ok(d) => {
            for (k, v) in [("offset", d.offset), ("e1", d.e1), ("e2", d.e2), ("e3", d.e3), ("e4", d.e4), ("total", d.total)] {
                s.put_f64(format!("decomposition_{k}"), v);
            }
        }
        Err(e) => s.put("decomposition_total", format!("n/a ({e})")),
    }

    if runs.len() > 1 {
        let d = l1_distance(&runs[0].output.final_state.field, &runs[1].output.final_state.field)?;
        s.put_f64("kinds_l1_final", d);
        s.put_f64("kinds_l1_limit", 5.0 * spec.grid.dx());
    }

    if let Some(pr) = particles {
        s.put("particles_n", pr.spec.n);
        s.put("particles_seed", pr.spec.seed);
        s.put_f64("particles_dt", pr.spec.dt);
        s.put_f64("particles_max_mean_deviation_se", pr.max_deviation_se());
        let overflow = pr.histograms.iter().map(|(_, h)| h.overflow).max().unwrap_or(0);
        s.put("particles_max_overflow", overflow);
        for (t, d) in particle_l1 {
            s.put_f64(format!("particles_l1_t{}", time_label(*t)), *d);
        }
    }

    let hard: usize = runs.iter().map(|r| r.checks.hard_violations()).sum();
    s.put("hard_invariant_violations", hard);
    s.put("status", if hard == 0 { "ok" } else { "violated" });
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config_str;

    #[test]
    fn interpolation_examples() {
        let xs = [0.0, 1.0, 3.0];
        let fs = [0.0, 2.0, 0.0];
        assert_eq!(interpolate(&xs, &fs, 0.5), 1.0);
        assert_eq!(interpolate(&xs, &fs, 2.0), 1.0);
        assert_eq!(interpolate(&xs, &fs, 3.0), 0.0);
        assert_eq!(interpolate(&xs, &fs, -0.1), 0.0);
    }

    #[test]
    fn checks_flag_each_violation() {
        let p = ModelParams::new(0.5, 0.5, 1.0, 1.0, 0.0, 1.0).unwrap();
        let m = steady_masses(&p).unwrap();
        let mut a = [0.0; 16];
        a[1] = 1.0;
        a[4] = 1.0;
        a[11] = 0.5;
        let good = DiagnosticsRecord::from_array(a);
        let mut bad = good;
        bad.t = 0.05;
        bad.mass = 1.0 + 1e-10;
        bad.d2 = 0.1;
        bad.lyapunov = 0.6;
        bad.ckl_gap = -1e-6;
        bad.moment_entropy = 11.0;
        bad.lh = 10.0;
        bad.ld = 10.0;
        let c = check_trajectory(&[good, bad], &[0.0, -1e-3], &p, &m);
        assert_eq!(
            (c.mass_violations, c.positivity_violations, c.hellinger_violations, c.lyapunov_violations),
            (1, 1, 1, 1)
        );
        assert_eq!((c.ckl_violations, c.moment_entropy_violations, c.lh_bound_violations, c.ld_bound_violations), (1, 1, 1, 1));
        assert_eq!(c.hard_violations(), 2);
        assert_eq!(check_trajectory(&[good, good], &[0.0, 0.0], &p, &m).hard_violations(), 0);
    }

    #[test]
    fn initial_data_kinds() {
        let spec = parse_config_str("grid.n = 64\ninit.kind = uniform\ninit.a = -1\ninit.b = 1").unwrap();
        let f = initial_density(&spec).unwrap();
        assert!((f.mass() - 1.0).abs() < 1e-14);
        let spec = parse_config_str("grid.n = 64\ninit.kind = uniform\ninit.a = 0.01\ninit.b = 0.02").unwrap();
        assert!(initial_density(&spec).is_err());
        let spec = parse_config_str("init.kind = steady\nmodel.lambda = 1").unwrap();
        assert!((initial_density(&spec).unwrap().mass() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn fit_window_rule() {
        let spec = parse_config_str("model.lambda = 0.5\nmodel.mu = 0.5").unwrap();
        assert_eq!(default_fit_window(&spec), Some((4.0, 10.0)));
        let spec = parse_config_str("model.lambda = 0\nmodel.mu = 1").unwrap();
        assert_eq!(default_fit_window(&spec), None);
    }
}
