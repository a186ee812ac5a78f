//! Entropy functionals, distances, boundary terms and rate fits.
//!
//! All integrals are midpoint sums on the solution grid, except for the four-set
//! split of `H(f_inf | f_q)` which is evaluated by Gauss-Legendre quadrature on
//! the analytic profiles. Cells with density at or below [`TINY`] contribute zero to
//! every `f log f` type term.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{integrate, l1_distance, moment, project_density, DensityField, Grid1D};
use crate::model::{
    center_closed_form, center_velocity_factor, kappa_at_offset, quasi_profile, steady_masses,
    steady_profile, ModelParams, SteadyMasses,
};
use crate::quadrature::GaussLegendre;

/// Densities at or below this value are treated as zero in logarithms.
pub const TINY: f64 = 1e-300;

/// `dH/dt = -RELATIVE_ENTROPY_DISSIPATION * I_H + L_H`: the Dirichlet form
/// `int kappa f |d_x log(f/f_q)|^2` is four times `I_H`.
pub const RELATIVE_ENTROPY_DISSIPATION: f64 = 4.0;

/// `dD^2/dt = -HELLINGER_DISSIPATION * I_D + L_D`.
pub const HELLINGER_DISSIPATION: f64 = 8.0;

/// One time sample of every tracked functional, `f_q` taken at the closed-form center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub mean: f64,
    pub var: f64,
    pub moment_entropy: f64,
    pub h_f_fq: f64,
    pub ih: f64,
    pub lh: f64,
    pub d2: f64,
    pub id: f64,
    pub ld: f64,
    pub lyapunov: f64,
    pub l1_f_fq: f64,
    pub l1_f_finf: f64,
    pub h_finf_fq: f64,
    pub ckl_gap: f64,
}

impl DiagnosticsRecord {
    /// Column names in file order.
    pub const COLUMNS: [&'static str; 16] = [
        "t",
        "mass",
        "mean",
        "var",
        "moment_entropy",
        "H_f_fq",
        "IH",
        "LH",
        "D2",
        "ID",
        "LD",
        "lyapunov",
        "l1_f_fq",
        "l1_f_finf",
        "H_finf_fq",
        "ckl_gap",
    ];

    pub fn to_array(&self) -> [f64; 16] {
        [
            self.t,
            self.mass,
            self.mean,
            self.var,
            self.moment_entropy,
            self.h_f_fq,
            self.ih,
            self.lh,
            self.d2,
            self.id,
            self.ld,
            self.lyapunov,
            self.l1_f_fq,
            self.l1_f_finf,
            self.h_finf_fq,
            self.ckl_gap,
        ]
    }

    pub fn from_array(v: [f64; 16]) -> Self {
        Self {
            t: v[0],
            mass: v[1],
            mean: v[2],
            var: v[3],
            moment_entropy: v[4],
            h_f_fq: v[5],
            ih: v[6],
            lh: v[7],
            d2: v[8],
            id: v[9],
            ld: v[10],
            lyapunov: v[11],
            l1_f_fq: v[12],
            l1_f_finf: v[13],
            h_finf_fq: v[14],
            ckl_gap: v[15],
        }
    }

    pub fn column(&self, name: &str) -> Option<f64> {
        Self::COLUMNS.iter().position(|c| *c == name).map(|i| self.to_array()[i])
    }
}

/// `H(g|h) = sum g log(g/h) dx`.
pub fn relative_entropy(g: &DensityField, h: &DensityField) -> Result<f64> {
    g.same_grid(h)?;
    let mut s = 0.0;
    for (i, (&a, &b)) in g.values().iter().zip(h.values()).enumerate() {
        if a <= TINY {
            continue;
        }
        if b <= 0.0 {
            return Err(Error::SupportMismatch { cell: i });
        }
        s += a * (a / b).ln();
    }
    Ok(s * g.grid().dx())
}

/// `D^2(g|h) = sum (sqrt g - sqrt h)^2 dx`.
pub fn hellinger_sq(g: &DensityField, h: &DensityField) -> Result<f64> {
    g.same_grid(h)?;
    let s: f64 = g
        .values()
        .iter()
        .zip(h.values())
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    Ok(s * g.grid().dx())
}

/// `kappa(x_i - center)` at every cell center.
pub fn kappa_field(grid: &Grid1D, center: f64, p: &ModelParams) -> Vec<f64> {
    grid.centers().map(|x| kappa_at_offset(x - center, p)).collect()
}

/// `sum kappa f_q (d_x phi(f/f_q))^2 dx` with centered node differences, one-sided
/// at the two boundary cells.
fn weighted_dirichlet<T>(f: &DensityField, fq: &DensityField, kappa: &[f64], transform: T) -> Result<f64>
where
    T: Fn(f64) -> f64,
{
    f.same_grid(fq)?;
    let n = f.values().len();
    assert_eq!(kappa.len(), n, "kappa must be sampled at every cell");
    let dx = f.grid().dx();
    let mut phi = Vec::with_capacity(n);
    for (i, (&a, &b)) in f.values().iter().zip(fq.values()).enumerate() {
        if b <= 0.0 {
            if a <= TINY {
                phi.push(0.0);
                continue;
            }
            return Err(Error::SupportMismatch { cell: i });
        }
        phi.push(transform(a / b));
    }
    let mut s = 0.0;
    for i in 0..n {
        let d = if i == 0 {
            (phi[1] - phi[0]) / dx
        } else if i == n - 1 {
            (phi[n - 1] - phi[n - 2]) / dx
        } else {
            (phi[i + 1] - phi[i - 1]) / (2.0 * dx)
        };
        s += kappa[i] * fq.values()[i] * d * d;
    }
    Ok(s * dx)
}

/// `I_H = int kappa f_q (d_x sqrt(f/f_q))^2`.
pub fn entropy_production_h(f: &DensityField, fq: &DensityField, kappa: &[f64]) -> Result<f64> {
    weighted_dirichlet(f, fq, kappa, f64::sqrt)
}

/// `I_D = int kappa f_q (d_x (f/f_q)^{1/4})^2`.
pub fn entropy_production_d(f: &DensityField, fq: &DensityField, kappa: &[f64]) -> Result<f64> {
    weighted_dirichlet(f, fq, kappa, |r| r.sqrt().sqrt())
}

/// `sum_{|x_i - c| >= delta} (x_i - c) w_i dx` with `c` the closed-form center.
fn wing_first_moment<W: Fn(usize) -> f64>(grid: &Grid1D, t: f64, p: &ModelParams, weight: W) -> f64 {
    let c = center_closed_form(t, p);
    let s: f64 = grid
        .centers()
        .enumerate()
        .filter(|(_, x)| (x - c).abs() >= p.delta())
        .map(|(i, x)| (x - c) * weight(i))
        .sum();
    s * grid.dx()
}

/// `L_H = -int f d_t log f_q`.
pub fn boundary_term_h(f: &DensityField, t: f64, p: &ModelParams) -> f64 {
    let v = f.values();
    center_velocity_factor(t, p) * wing_first_moment(f.grid(), t, p, |i| v[i])
}

/// `L_D = int (1 - sqrt(f/f_q)) d_t f_q`.
pub fn boundary_term_d(f: &DensityField, fq: &DensityField, t: f64, p: &ModelParams) -> Result<f64> {
    f.same_grid(fq)?;
    let (a, b) = (f.values(), fq.values());
    let m = wing_first_moment(f.grid(), t, p, |i| b[i] - (a[i] * b[i]).sqrt());
    Ok(-center_velocity_factor(t, p) * m)
}

/// Upper bound on `|L_H|` from `|int_{|x-c|<delta} (x-c) f| <= delta`.
pub fn boundary_h_bound(t: f64, p: &ModelParams) -> f64 {
    let decay = (-p.lambda() * t).exp();
    let offset = (p.u0() - p.x0()).abs();
    decay * p.lambda() * p.mu() / p.sigma2() * offset * (offset * decay + p.delta())
}

/// Cauchy-Schwarz bound on `|L_D|`: `2 (sqrt(m1)/sigma) e^{-lambda t} (lambda mu/sigma2) |u0 - x0|`.
pub fn boundary_d_bound(t: f64, p: &ModelParams, m: &SteadyMasses) -> f64 {
    2.0 * m.m1().sqrt() / p.sigma() * center_velocity_factor(t, p).abs()
}

/// `D^2 + 2 (sqrt(m1) mu / sigma^3) |u0 - x0| e^{-lambda t}`.
pub fn lyapunov_value(d2: f64, t: f64, p: &ModelParams, m: &SteadyMasses) -> f64 {
    let sigma3 = p.sigma2() * p.sigma();
    d2 + 2.0 * m.m1().sqrt() * p.mu() / sigma3 * (p.u0() - p.x0()).abs() * (-p.lambda() * t).exp()
}

/// `2 H(g|h) - ||g - h||_1^2`, nonnegative for unit-mass pairs.
pub fn ckl_gap(g: &DensityField, h: &DensityField) -> Result<f64> {
    let l1 = l1_distance(g, h)?;
    Ok(2.0 * relative_entropy(g, h)? - l1 * l1)
}

/// `sum (1 + x_i^2 + log f_i) f_i dx`.
pub fn moment_entropy_functional(f: &DensityField) -> f64 {
    let g = f.grid();
    let s: f64 = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let x = g.center(i);
            let log = if v > TINY { v.ln() } else { 0.0 };
            (1.0 + x * x + log) * v
        })
        .sum();
    s * g.dx()
}

/// `H(f_inf | f_q(t))` split over the four sets
///
/// ```text
/// E1 = {x < x0 - delta} u {x > x0 + delta + B}   E2 = (x0 - delta + B, x0 + delta)
/// E3 = (x0 - delta, x0 - delta + B)              E4 = (x0 + delta, x0 + delta + B)
/// ```
///
/// with `B(t) = (u0 - x0) e^{-lambda t}` (mirrored about `x0` when `B < 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyDecomposition {
    pub t: f64,
    pub offset: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub total: f64,
}

pub fn entropy_vs_quasi_decomposition(p: &ModelParams, m: &SteadyMasses, t: f64) -> Result<EntropyDecomposition> {
    let offset = (p.u0() - p.x0()) * (-p.lambda() * t).exp();
    let limit = 2.0 * p.delta();
    if offset.abs() >= limit {
        return Err(Error::DecompositionOutOfRange { offset: offset.abs(), limit });
    }
    let (x0, d, b) = (p.x0(), p.delta(), offset.abs());
    let c = center_closed_form(t, p);
    let log_profile = |y: f64| {
        if y.abs() < d {
            m.plateau(d).ln()
        } else {
            m.m1().ln() - 0.5 * (2.0 * PI * p.sigma2()).ln() - 0.5 * y * y / p.sigma2()
        }
    };
    let integrand = |x: f64| {
        let lf = log_profile(x - x0);
        let lq = log_profile(x - c);
        let diff = lf - lq;
        if diff == 0.0 {
            0.0
        } else {
            lf.exp() * diff
        }
    };
    let breaks = [x0 - d, x0 + d, c - d, c + d];
    let rule = GaussLegendre::new(20);
    let piece = |lo: f64, hi: f64| integrate_with_breaks(&rule, &integrand, lo, hi, &breaks, p.sigma());
    let reach = d + b + 40.0 * p.sigma();

    // sets for B >= 0, reflected through x0 otherwise
    let (e1, e2, e3, e4) = if offset >= 0.0 {
        (
            piece(x0 - reach, x0 - d) + piece(x0 + d + b, x0 + reach),
            piece(x0 - d + b, x0 + d),
            piece(x0 - d, x0 - d + b),
            piece(x0 + d, x0 + d + b),
        )
    } else {
        (
            piece(x0 - reach, x0 - d - b) + piece(x0 + d, x0 + reach),
            piece(x0 - d, x0 + d - b),
            piece(x0 + d - b, x0 + d),
            piece(x0 - d - b, x0 - d),
        )
    };
    Ok(EntropyDecomposition { t, offset, e1, e2, e3, e4, total: e1 + e2 + e3 + e4 })
}

/// Integrates over `[lo, hi]`, splitting at every kink inside and using panels no
/// wider than half a standard deviation.
fn integrate_with_breaks<F: Fn(f64) -> f64>(
    rule: &GaussLegendre,
    f: &F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    sigma: f64,
) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let mut pts: Vec<f64> = std::iter::once(lo)
        .chain(breaks.iter().copied().filter(|b| *b > lo && *b < hi))
        .chain(std::iter::once(hi))
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.windows(2)
        .map(|w| {
            let panels = ((w[1] - w[0]) / (0.5 * sigma)).ceil().max(1.0) as usize;
            rule.integrate_composite(f, w[0], w[1], panels)
        })
        .sum()
}

/// Precomputed pieces shared by every sample of a run.
#[derive(Debug, Clone)]
pub struct DiagnosticsContext {
    params: ModelParams,
    masses: SteadyMasses,
    steady: DensityField,
}

impl DiagnosticsContext {
    /// `params` must already carry the run's `u0`.
    pub fn new(params: &ModelParams, grid: &Grid1D) -> Result<Self> {
        let masses = steady_masses(params)?;
        let steady = project_density(|x| steady_profile(x, params, &masses), grid, true)?;
        Ok(Self { params: *params, masses, steady })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
    pub fn masses(&self) -> &SteadyMasses {
        &self.masses
    }
    pub fn steady(&self) -> &DensityField {
        &self.steady
    }

    /// Unit-mass projection of `f_q(t)` at the closed-form center.
    pub fn quasi(&self, t: f64) -> Result<DensityField> {
        let c = center_closed_form(t, &self.params);
        project_density(|x| quasi_profile(x, c, &self.params, &self.masses), self.steady.grid(), true)
    }

    pub fn evaluate(&self, f: &DensityField, t: f64) -> Result<DiagnosticsRecord> {
        let p = &self.params;
        let fq = self.quasi(t)?;
        let kappa = kappa_field(f.grid(), center_closed_form(t, p), p);
        let mean = moment(f, 1, 0.0);
        let h_f_fq = relative_entropy(f, &fq)?;
        let d2 = hellinger_sq(f, &fq)?;
        let l1_f_fq = l1_distance(f, &fq)?;
        Ok(DiagnosticsRecord {
            t,
            mass: integrate(f),
            mean,
            var: moment(f, 2, mean),
            moment_entropy: moment_entropy_functional(f),
            h_f_fq,
            ih: entropy_production_h(f, &fq, &kappa)?,
            lh: boundary_term_h(f, t, p),
            d2,
            id: entropy_production_d(f, &fq, &kappa)?,
            ld: boundary_term_d(f, &fq, t, p)?,
            lyapunov: lyapunov_value(d2, t, p, &self.masses),
            l1_f_fq,
            l1_f_finf: l1_distance(f, &self.steady)?,
            h_finf_fq: relative_entropy(&self.steady, &fq)?,
            ckl_gap: 2.0 * h_f_fq - l1_f_fq * l1_f_fq,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BalanceKind {
    /// `dH/dt + 4 I_H - L_H = 0`
    RelativeEntropy,
    /// `dD^2/dt + 8 I_D - L_D = 0`
    Hellinger,
}

impl BalanceKind {
    pub fn dissipation_factor(&self) -> f64 {
        match self {
            BalanceKind::RelativeEntropy => RELATIVE_ENTROPY_DISSIPATION,
            BalanceKind::Hellinger => HELLINGER_DISSIPATION,
        }
    }
}

/// Per-sample residuals `(t_k, |(V_{k+1} - V_{k-1})/(2 dt) + a I_k - L_k|)` on the
/// interior samples, with `a` the dissipation factor given.
pub fn balance_residual_series_with(
    records: &[DiagnosticsRecord],
    which: BalanceKind,
    factor: f64,
) -> Result<Vec<(f64, f64)>> {
    if records.len() < 3 {
        return Err(Error::TooFewSamples { needed: 3, got: records.len() });
    }
    let h = records[1].t - records[0].t;
    for w in records.windows(2) {
        if ((w[1].t - w[0].t) - h).abs() > 1e-9 * h.abs().max(1e-300) {
            return Err(Error::NonUniformCadence { t: w[0].t });
        }
    }
    let pick = |r: &DiagnosticsRecord| match which {
        BalanceKind::RelativeEntropy => (r.h_f_fq, r.ih, r.lh),
        BalanceKind::Hellinger => (r.d2, r.id, r.ld),
    };
    Ok(records
        .windows(3)
        .map(|w| {
            let (prev, _, _) = pick(&w[0]);
            let (next, _, _) = pick(&w[2]);
            let (_, prod, boundary) = pick(&w[1]);
            let rate = (next - prev) / (w[2].t - w[0].t);
            (w[1].t, (rate + factor * prod - boundary).abs())
        })
        .collect())
}

pub fn balance_residual_series(records: &[DiagnosticsRecord], which: BalanceKind) -> Result<Vec<(f64, f64)>> {
    balance_residual_series_with(records, which, which.dissipation_factor())
}

/// Largest balance residual over the interior samples.
pub fn balance_residual(records: &[DiagnosticsRecord], which: BalanceKind) -> Result<f64> {
    Ok(balance_residual_series(records, which)?.into_iter().map(|(_, r)| r).fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateModel {
    /// `v = A e^{-rate t}`
    Exponential,
    /// `v = A t^{-rate}`
    Power,
}

impl std::str::FromStr for RateModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exp" | "exponential" => Ok(RateModel::Exponential),
            "power" => Ok(RateModel::Power),
            other => Err(Error::InvalidParams(format!("unknown rate model `{other}` (expected exp or power)"))),
        }
    }
}

pub const MIN_FIT_SAMPLES: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub window: (f64, f64),
    pub model: RateModel,
    /// Decay constant or power exponent; positive for decay.
    pub rate: f64,
    /// Intercept of the fitted line in log space.
    pub intercept: f64,
    /// Root-mean-square of the log residuals.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares line through `log v` against `t` (exponential) or `log t` (power),
/// using the samples with `t` in `[window.0, window.1]`.
pub fn fit_rate(series: &[(f64, f64)], window: (f64, f64), model: RateModel) -> Result<RateFit> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidSchedule(format!("fit window needs t_lo < t_hi (got {lo}..{hi})")));
    }
    let slack = 1e-9 * (hi - lo);
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(t, v) in series.iter().filter(|(t, _)| *t >= lo - slack && *t <= hi + slack) {
        if !(v > 0.0) {
            return Err(Error::NonPositiveValue { t, value: v });
        }
        let x = match model {
            RateModel::Exponential => t,
            RateModel::Power => {
                if !(t > 0.0) {
                    return Err(Error::InvalidSchedule("power-law fit needs t > 0 in the window".into()));
                }
                t.ln()
            }
        };
        xs.push(x);
        ys.push(v.ln());
    }
    if xs.len() < MIN_FIT_SAMPLES {
        return Err(Error::TooFewSamples { needed: MIN_FIT_SAMPLES, got: xs.len() });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(RateFit { window, model, rate: -slope, intercept, residual: (sse / n).sqrt(), samples: xs.len() })
}
