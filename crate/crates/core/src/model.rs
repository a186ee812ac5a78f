//! Model parameters and the closed-form objects of the swarm equation.
//!
//! The density evolves under
//!
//! ```text
//! d_t f = d_x [ (x - c(t)) f + d_x (kappa(x - c(t)) f) ],   c(t) = lambda*x0 + mu*u(t)
//! ```
//!
//! where `u(t)` is the mean of `f` and `kappa` is a diffusion coefficient that is
//! raised quadratically inside the target interval `|x - c| < delta`. Everything in
//! this module is a pure function of its arguments.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Tolerance on `lambda + mu = 1`. A handful of ulps, so that decimal inputs such as
/// `0.3 + 0.7` are accepted.
const WEIGHT_SUM_TOL: f64 = 1e-12;

/// Physical parameters of the model plus the initial mean `u0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    lambda: f64,
    mu: f64,
    sigma2: f64,
    delta: f64,
    x0: f64,
    u0: f64,
}

impl ModelParams {
    pub fn new(lambda: f64, mu: f64, sigma2: f64, delta: f64, x0: f64, u0: f64) -> Result<Self> {
        let all = [lambda, mu, sigma2, delta, x0, u0];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if lambda < 0.0 || mu < 0.0 {
            return Err(Error::InvalidParams(format!(
                "lambda and mu must be nonnegative (lambda = {lambda}, mu = {mu})"
            )));
        }
        if (lambda + mu - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidParams(format!(
                "lambda + mu = 1 is violated (lambda = {lambda}, mu = {mu})"
            )));
        }
        if sigma2 <= 0.0 {
            return Err(Error::InvalidParams(format!("sigma2 > 0 is violated (sigma2 = {sigma2})")));
        }
        if delta <= 0.0 {
            return Err(Error::InvalidParams(format!("delta > 0 is violated (delta = {delta})")));
        }
        Ok(Self { lambda, mu, sigma2, delta, x0, u0 })
    }

    /// Same parameters with a different initial mean.
    pub fn with_u0(mut self, u0: f64) -> Self {
        assert!(u0.is_finite(), "initial mean must be finite");
        self.u0 = u0;
        self
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn x0(&self) -> f64 {
        self.x0
    }
    pub fn u0(&self) -> f64 {
        self.u0
    }
    /// Largest value of the diffusion coefficient, `sigma2 + delta^2/2`.
    pub fn kappa_max(&self) -> f64 {
        self.sigma2 + 0.5 * self.delta * self.delta
    }
}

/// Which of the two equivalent formulations is being solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    /// Continuous drift `x - c(t)` with the variable diffusion `kappa`.
    ContinuousKappa,
    /// Constant diffusion `sigma2` and a drift switched off on the fixed target
    /// interval `[x0 - delta, x0 + delta]`.
    DiscontinuousDrift,
}

impl ModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ModelKind::ContinuousKappa => "continuous_kappa",
            ModelKind::DiscontinuousDrift => "discontinuous_drift",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "continuous_kappa" => Ok(ModelKind::ContinuousKappa),
            "discontinuous_drift" => Ok(ModelKind::DiscontinuousDrift),
            other => Err(Error::InvalidParams(format!(
                "unknown model kind `{other}` (expected continuous_kappa or discontinuous_drift)"
            ))),
        }
    }
}

/// Weights of the stationary profile: `m1` on the Gaussian wings, `m2` on the plateau.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyMasses {
    m1: f64,
    m2: f64,
}

impl SteadyMasses {
    pub fn m1(&self) -> f64 {
        self.m1
    }
    pub fn m2(&self) -> f64 {
        self.m2
    }

    /// Plateau height `m2 / (2 delta)`.
    pub fn plateau(&self, delta: f64) -> f64 {
        self.m2 / (2.0 * delta)
    }

    /// Residuals of the two defining conditions: (continuity at the kink, unit mass).
    pub fn residuals(&self, sigma2: f64, delta: f64) -> (f64, f64) {
        let continuity = self.m1 * gaussian_density(delta, sigma2) - self.plateau(delta);
        let mass = self.m1 * gaussian_tail_mass(delta, sigma2) + self.m2 - 1.0;
        (continuity.abs(), mass.abs())
    }
}

/// Centered normal density with variance `sigma2`.
pub fn gaussian_density(y: f64, sigma2: f64) -> f64 {
    (-0.5 * y * y / sigma2).exp() / (2.0 * PI * sigma2).sqrt()
}

/// Mass of the centered normal law with variance `sigma2` outside `[-delta, delta]`.
pub fn gaussian_tail_mass(delta: f64, sigma2: f64) -> f64 {
    libm::erfc(delta / (SQRT_2 * sigma2.sqrt()))
}

/// Diffusion coefficient at `x` for an attraction center `center`.
///
/// Equals `sigma2 + (delta^2 - |x - center|^2)/2` strictly inside the interval and
/// `sigma2` on and outside its boundary, so it is continuous with values in
/// `[sigma2, sigma2 + delta^2/2]`.
pub fn diffusion_coefficient(x: f64, center: f64, p: &ModelParams) -> f64 {
    kappa_at_offset(x - center, p)
}

pub(crate) fn kappa_at_offset(y: f64, p: &ModelParams) -> f64 {
    if y.abs() < p.delta {
        p.sigma2 + 0.5 * (p.delta * p.delta - y * y)
    } else {
        p.sigma2
    }
}

/// `d kappa / dx` at offset `y`; the closed branch (`|y| >= delta`) gives zero.
pub(crate) fn kappa_slope_at_offset(y: f64, p: &ModelParams) -> f64 {
    if y.abs() < p.delta {
        -y
    } else {
        0.0
    }
}

/// Moving attraction center `lambda*x0 + mu*u`.
pub fn attraction_center(u: f64, p: &ModelParams) -> f64 {
    p.lambda * p.x0 + p.mu * u
}

/// Mean of the solution: `x0 + (u0 - x0) exp(-lambda t)`.
pub fn mean_closed_form(t: f64, p: &ModelParams) -> f64 {
    p.x0 + (p.u0 - p.x0) * (-p.lambda * t).exp()
}

/// Attraction center driven by the closed-form mean.
pub fn center_closed_form(t: f64, p: &ModelParams) -> f64 {
    attraction_center(mean_closed_form(t, p), p)
}

/// Solves the 2x2 system (continuity at `|x - x0| = delta`, unit total mass) for
/// the stationary weights.
pub fn steady_masses(p: &ModelParams) -> Result<SteadyMasses> {
    let g = gaussian_density(p.delta, p.sigma2);
    let tail = gaussian_tail_mass(p.delta, p.sigma2);
    // [ g    -1/(2 delta) ] [m1]   [0]
    // [ tail  1           ] [m2] = [1]
    let det = g + tail / (2.0 * p.delta);
    if !(det.is_finite() && det > f64::EPSILON) {
        return Err(Error::InvalidParams(format!(
            "steady-mass system is degenerate (determinant {det:e})"
        )));
    }
    let m1 = 1.0 / (2.0 * p.delta * det);
    let m2 = g / det;
    debug_assert!(m1 > 0.0 && m2 >= 0.0);
    Ok(SteadyMasses { m1, m2 })
}

/// Stationary profile shape at offset `y` from its center.
pub(crate) fn profile_at_offset(y: f64, p: &ModelParams, m: &SteadyMasses) -> f64 {
    if y.abs() < p.delta {
        m.plateau(p.delta)
    } else {
        m.m1 * gaussian_density(y, p.sigma2)
    }
}

/// Stationary profile: uniform plateau of mass `m2` on `|x - x0| < delta`, Gaussian
/// wings of weight `m1` elsewhere.
pub fn steady_profile(x: f64, p: &ModelParams, m: &SteadyMasses) -> f64 {
    profile_at_offset(x - p.x0, p, m)
}

/// Quasi-stationary profile: the stationary shape translated to `center`.
pub fn quasi_profile(x: f64, center: f64, p: &ModelParams, m: &SteadyMasses) -> f64 {
    profile_at_offset(x - center, p, m)
}

/// Time derivative of the quasi-stationary profile along the closed-form center.
///
/// Zero on the plateau; `-f_q (lambda mu / sigma2)(u0 - x0)(x - c(t)) e^{-lambda t}`
/// on the wings.
pub fn quasi_profile_time_derivative(x: f64, t: f64, p: &ModelParams, m: &SteadyMasses) -> f64 {
    let center = center_closed_form(t, p);
    let y = x - center;
    if y.abs() < p.delta {
        return 0.0;
    }
    -profile_at_offset(y, p, m) * center_velocity_factor(t, p) * y
}

/// `(lambda mu / sigma2)(u0 - x0) e^{-lambda t}`, the common prefactor of the
/// quasi-profile time derivative and of both boundary terms.
pub fn center_velocity_factor(t: f64, p: &ModelParams) -> f64 {
    p.lambda * p.mu / p.sigma2 * (p.u0 - p.x0) * (-p.lambda * t).exp()
}

/// Advective velocity field of either formulation, given the current mean `u`.
pub fn drift_field(x: f64, u: f64, p: &ModelParams, kind: ModelKind) -> f64 {
    let center = attraction_center(u, p);
    match kind {
        ModelKind::ContinuousKappa => x - center,
        ModelKind::DiscontinuousDrift => {
            if (x - p.x0).abs() >= p.delta {
                x - center
            } else {
                0.0
            }
        }
    }
}
