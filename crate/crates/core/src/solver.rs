//! Chang-Cooper finite-volume integration of the nonlocal equation.
//!
//! The total flux `J = (x - c) f + d_x(kappa f)` is written as
//! `J = b f + kappa d_x f` with `b = (x - c) + d_x kappa`. Inside the moving
//! interval `d_x kappa = -(x - c)`, so `b` vanishes there. Each interior edge gets
//! the exponentially fitted flux
//!
//! ```text
//! J_{i+1/2} = kappa_e / dx * ( B(-P) f_{i+1} - B(P) f_i ),   B(z) = z / (e^z - 1)
//! ```
//!
//! where `P` is the jump of the local equilibrium potential between the two cell
//! centers (equal to `b dx / kappa` on edges that do not straddle a kink). A density
//! proportional to the quasi-stationary profile therefore carries zero flux on every
//! edge. The mean coupling is lagged: `c` is frozen at the value from the previous
//! step and the remaining linear system is tridiagonal with zero-flux boundaries.

use std::str::FromStr;

use crate::diagnostics::{DiagnosticsContext, DiagnosticsRecord};
use crate::error::{Error, Result};
use crate::grid::{moment, project_density, DensityField, Grid1D};
use crate::model::{attraction_center, kappa_at_offset, kappa_slope_at_offset, ModelKind, ModelParams};
use crate::tridiag;

/// Relative tolerance when checking that the cadence is a whole number of steps.
const CADENCE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FluxRule {
    /// Exponentially fitted weights (positivity preserving for any `dt`).
    ChangCooper,
    /// Plain central weights `1 -+ P/2`; loses positivity once `|P| > 2`.
    Centered,
}

impl FluxRule {
    pub fn name(&self) -> &'static str {
        match self {
            FluxRule::ChangCooper => "chang_cooper",
            FluxRule::Centered => "centered",
        }
    }
}

impl FromStr for FluxRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "chang_cooper" => Ok(FluxRule::ChangCooper),
            "centered" => Ok(FluxRule::Centered),
            other => Err(Error::InvalidParams(format!(
                "unknown flux rule `{other}` (expected chang_cooper or centered)"
            ))),
        }
    }
}

/// Treatment of the mean inside the implicit step. Only the lagged form exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coupling {
    #[default]
    LaggedExplicit,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub dt: f64,
    pub t_final: f64,
    pub rule: FluxRule,
    pub coupling: Coupling,
    pub cadence: f64,
}

impl SchemeConfig {
    pub fn new(dt: f64, t_final: f64, cadence: f64, rule: FluxRule) -> Result<Self> {
        let cfg = Self { dt, t_final, rule, coupling: Coupling::LaggedExplicit, cadence };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { dt, t_final, cadence, .. } = *self;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidSchedule(format!("dt > 0 is violated (dt = {dt})")));
        }
        if !(t_final >= 0.0 && t_final.is_finite()) {
            return Err(Error::InvalidSchedule(format!("t_final >= 0 is violated (t_final = {t_final})")));
        }
        if !(cadence >= dt) {
            return Err(Error::InvalidSchedule(format!(
                "dt <= cadence is violated (dt = {dt}, cadence = {cadence})"
            )));
        }
        if t_final > 0.0 && cadence > t_final {
            return Err(Error::InvalidSchedule(format!(
                "cadence <= t_final is violated (cadence = {cadence}, t_final = {t_final})"
            )));
        }
        self.steps_per_sample()?;
        Ok(())
    }

    /// Whole number of steps between diagnostics samples.
    pub fn steps_per_sample(&self) -> Result<usize> {
        let ratio = self.cadence / self.dt;
        let k = ratio.round();
        if k < 1.0 || (ratio - k).abs() > CADENCE_TOL * ratio {
            return Err(Error::InvalidSchedule(format!(
                "cadence {} is not an integer multiple of dt {}",
                self.cadence, self.dt
            )));
        }
        Ok(k as usize)
    }

    /// Number of steps to reach `t_final`; the last one may be shortened.
    pub fn n_steps(&self) -> usize {
        let r = self.t_final / self.dt;
        let k = r.round();
        if (r - k).abs() <= CADENCE_TOL * r.max(1.0) {
            k as usize
        } else {
            r.ceil() as usize
        }
    }
}

/// `f(t)` together with its mean and the attraction center built from it.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub field: DensityField,
    pub t: f64,
    pub u: f64,
    pub center: f64,
}

impl SolverState {
    pub fn new(field: DensityField, t: f64, p: &ModelParams) -> Self {
        let u = moment(&field, 1, 0.0);
        Self { field, t, u, center: attraction_center(u, p) }
    }
}

/// Per-edge coefficients of the discrete flux on the `n - 1` interior edges.
/// Edge `e` sits between cells `e` and `e + 1`.
#[derive(Debug, Clone)]
pub struct EdgeFluxes {
    /// Effective advection `b` at the edge point.
    pub advection: Vec<f64>,
    /// Diffusion coefficient at the edge point.
    pub diffusion: Vec<f64>,
    /// Potential jump between the two neighbouring centers.
    pub peclet: Vec<f64>,
    /// Coefficient of `f_{e+1}` in `J_e`.
    pub forward: Vec<f64>,
    /// Coefficient of `f_e` in `J_e` (enters with a minus sign).
    pub backward: Vec<f64>,
}

impl EdgeFluxes {
    /// Interior edge fluxes `J_e` for the given cell values.
    pub fn fluxes(&self, values: &[f64]) -> Vec<f64> {
        assert_eq!(values.len(), self.forward.len() + 1);
        self.forward
            .iter()
            .zip(&self.backward)
            .enumerate()
            .map(|(e, (a, b))| a * values[e + 1] - b * values[e])
            .collect()
    }
}

/// `z / (e^z - 1)`, with the removable singularity at zero filled in.
pub fn bernoulli(z: f64) -> f64 {
    if z.abs() < 1e-3 {
        let z2 = z * z;
        1.0 - 0.5 * z + z2 / 12.0 - z2 * z2 / 720.0
    } else {
        z / z.exp_m1()
    }
}

/// Piecewise quadratic potential: zero on `[lo, hi]`, `((x-c)^2 - (edge-c)^2)/(2 sigma2)`
/// beyond each end. Its derivative is the drift over the diffusion of the local
/// equilibrium.
#[derive(Debug, Clone, Copy)]
struct Potential {
    lo: f64,
    hi: f64,
    center: f64,
    sigma2: f64,
}

impl Potential {
    fn value(&self, x: f64) -> f64 {
        let c = self.center;
        if x >= self.hi {
            ((x - c) * (x - c) - (self.hi - c) * (self.hi - c)) / (2.0 * self.sigma2)
        } else if x <= self.lo {
            ((x - c) * (x - c) - (self.lo - c) * (self.lo - c)) / (2.0 * self.sigma2)
        } else {
            0.0
        }
    }

    fn jump(&self, xl: f64, xr: f64) -> f64 {
        let same_wing = (xl >= self.hi && xr >= self.hi) || (xl <= self.lo && xr <= self.lo);
        if same_wing {
            (xr - xl) * (xl + xr - 2.0 * self.center) / (2.0 * self.sigma2)
        } else if xl > self.lo && xr < self.hi {
            0.0
        } else {
            self.value(xr) - self.value(xl)
        }
    }
}

/// Chang-Cooper edge coefficients for the current state.
pub fn assemble_fluxes(state: &SolverState, p: &ModelParams, kind: ModelKind) -> EdgeFluxes {
    assemble_fluxes_with(state, p, kind, FluxRule::ChangCooper)
}

pub fn assemble_fluxes_with(state: &SolverState, p: &ModelParams, kind: ModelKind, rule: FluxRule) -> EdgeFluxes {
    let grid = state.field.grid();
    let n_edges = grid.n_cells() - 1;
    let dx = grid.dx();
    let c = state.center;
    let potential = match kind {
        ModelKind::ContinuousKappa => Potential { lo: c - p.delta(), hi: c + p.delta(), center: c, sigma2: p.sigma2() },
        ModelKind::DiscontinuousDrift => {
            Potential { lo: p.x0() - p.delta(), hi: p.x0() + p.delta(), center: c, sigma2: p.sigma2() }
        }
    };

    let mut out = EdgeFluxes {
        advection: Vec::with_capacity(n_edges),
        diffusion: Vec::with_capacity(n_edges),
        peclet: Vec::with_capacity(n_edges),
        forward: Vec::with_capacity(n_edges),
        backward: Vec::with_capacity(n_edges),
    };
    for e in 0..n_edges {
        let xe = grid.edge(e + 1);
        let y = xe - c;
        let (b, kappa) = match kind {
            ModelKind::ContinuousKappa => (y + kappa_slope_at_offset(y, p), kappa_at_offset(y, p)),
            ModelKind::DiscontinuousDrift => {
                let b = if (xe - p.x0()).abs() >= p.delta() { y } else { 0.0 };
                (b, p.sigma2())
            }
        };
        let peclet = potential.jump(grid.center(e), grid.center(e + 1));
        let (wf, wb) = match rule {
            FluxRule::ChangCooper => (bernoulli(-peclet), bernoulli(peclet)),
            FluxRule::Centered => (1.0 + 0.5 * peclet, 1.0 - 0.5 * peclet),
        };
        out.advection.push(b);
        out.diffusion.push(kappa);
        out.peclet.push(peclet);
        out.forward.push(kappa / dx * wf);
        out.backward.push(kappa / dx * wb);
    }
    out
}

/// One lagged-coupling implicit step with the Chang-Cooper rule.
pub fn step(state: &SolverState, dt: f64, p: &ModelParams, kind: ModelKind) -> Result<SolverState> {
    step_with(state, dt, p, kind, FluxRule::ChangCooper)
}

pub fn step_with(state: &SolverState, dt: f64, p: &ModelParams, kind: ModelKind, rule: FluxRule) -> Result<SolverState> {
    if !(dt > 0.0) {
        return Err(Error::InvalidSchedule(format!("dt > 0 is violated (dt = {dt})")));
    }
    let fluxes = assemble_fluxes_with(state, p, kind, rule);
    let values = implicit_solve(&state.field, &fluxes, dt)?;
    let field = DensityField::from_trusted(*state.field.grid(), values);
    Ok(SolverState::new(field, state.t + dt, p))
}

/// Solves `(I - dt/dx * D) f_new = f_old`, `D` the flux divergence with zero flux
/// through both boundaries. Column sums of the matrix are exactly one.
fn implicit_solve(field: &DensityField, fx: &EdgeFluxes, dt: f64) -> Result<Vec<f64>> {
    let n = field.values().len();
    let r = dt / field.grid().dx();
    let mut lower = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut upper = vec![0.0; n];
    for e in 0..n - 1 {
        // J_e = forward[e] f_{e+1} - backward[e] f_e leaves cell e and enters e+1
        diag[e] += r * fx.backward[e];
        upper[e] = -r * fx.forward[e];
        diag[e + 1] += r * fx.forward[e];
        lower[e + 1] = -r * fx.backward[e];
    }
    let mut rhs = field.values().to_vec();
    tridiag::solve_in_place(&lower, &diag, &upper, &mut rhs)?;
    if let Some((cell, &value)) = rhs.iter().enumerate().find(|(_, v)| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::NegativeDensity { cell, value });
    }
    Ok(rhs)
}

/// Result of [`run`].
#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Parameters with `u0` set to the quadrature mean of the projected initial data.
    pub params: ModelParams,
    pub initial: DensityField,
    pub final_state: SolverState,
    pub trajectory: Vec<DiagnosticsRecord>,
}

/// Projects `f0` onto `grid` with unit mass and integrates to `t_final`, handing a
/// diagnostics sample to `sink` at every cadence multiple (including `t = 0`).
pub fn run<F, S>(
    p: &ModelParams,
    grid: &Grid1D,
    scheme: &SchemeConfig,
    kind: ModelKind,
    f0: F,
    sink: S,
) -> Result<RunOutput>
where
    F: Fn(f64) -> f64,
    S: FnMut(&DiagnosticsRecord, &SolverState),
{
    let initial = project_density(f0, grid, true)?;
    run_from_field(p, scheme, kind, initial, sink)
}

/// Same as [`run`] for initial data already on the grid (rescaled to unit mass).
pub fn run_from_field<S>(
    p: &ModelParams,
    scheme: &SchemeConfig,
    kind: ModelKind,
    initial: DensityField,
    mut sink: S,
) -> Result<RunOutput>
where
    S: FnMut(&DiagnosticsRecord, &SolverState),
{
    scheme.validate()?;
    let grid = *initial.grid();
    let mass = initial.mass();
    if !(mass > 0.0) {
        return Err(Error::ZeroMass);
    }
    let initial = DensityField::from_trusted(grid, initial.values().iter().map(|v| v / mass).collect());
    let params = p.with_u0(moment(&initial, 1, 0.0));
    let ctx = DiagnosticsContext::new(&params, &grid)?;

    let per_sample = scheme.steps_per_sample()?;
    let n_steps = scheme.n_steps();
    let mut state = SolverState::new(initial.clone(), 0.0, &params);
    let mut trajectory = Vec::with_capacity(n_steps / per_sample + 2);

    let rec = ctx.evaluate(&state.field, 0.0)?;
    sink(&rec, &state);
    trajectory.push(rec);

    for k in 1..=n_steps {
        // every step but a shortened last one uses the exact configured dt
        let (t_next, h) = if k == n_steps {
            (scheme.t_final, (scheme.t_final - (k - 1) as f64 * scheme.dt).min(scheme.dt))
        } else {
            (k as f64 * scheme.dt, scheme.dt)
        };
        let mut next = step_with(&state, h, &params, kind, scheme.rule)?;
        next.t = t_next;
        state = next;
        if k % per_sample == 0 {
            let rec = ctx.evaluate(&state.field, state.t)?;
            sink(&rec, &state);
            trajectory.push(rec);
        }
    }
    Ok(RunOutput { params, initial, final_state: state, trajectory })
}
