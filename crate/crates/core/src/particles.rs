//! Interacting-particle approximation of the continuous-kappa equation.
//!
//! Writing the equation as `d_t f = -d_x(A f) + d_xx(kappa f)` with
//! `A(x, t) = -(x - c(t))` identifies it as the forward equation of the Ito SDE
//!
//! ```text
//! dX = -(X - c(t)) dt + sqrt(2 kappa(X - c(t))) dW,    c(t) = lambda*x0 + mu*E[X(t)]
//! ```
//!
//! (the diffusion enters as `d_xx(kappa f)`, so no Ito correction term appears in the
//! drift). The law-dependent center is closed with the empirical mean of the
//! ensemble, computed once per step before any particle moves.
//!
//! Randomness is counter based: the Gaussian increment of particle `i` at step `k`
//! is drawn from ChaCha8 keyed by `seed`, on stream `k`, at word offset `4 i`. The
//! result does not depend on how particles are split across threads.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid1D};
use crate::model::{attraction_center, kappa_at_offset, mean_closed_form, ModelParams};

/// Fixed reduction block for the empirical mean.
const SUM_CHUNK: usize = 4096;
/// Work unit for the parallel particle update.
const STEP_CHUNK: usize = 8192;
/// Stream reserved for initial sampling; step streams count up from zero.
const INIT_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
    t: f64,
    seed: u64,
    step_index: u64,
}

impl ParticleEnsemble {
    pub fn new(positions: Vec<f64>, seed: u64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::InvalidParams(format!("need N >= 2 particles, got {}", positions.len())));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("particle positions must be finite".into()));
        }
        Ok(Self { positions, t: 0.0, seed, step_index: 0 })
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }
    pub fn len(&self) -> usize {
        self.positions.len()
    }
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn step_index(&self) -> u64 {
        self.step_index
    }
}

fn keyed_rng(seed: u64, stream: u64, word: u128) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(word);
    rng
}

/// Uniform on `(0, 1]` from the top 53 bits.
fn open_unit(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// One standard normal from two words of the generator (Box-Muller, cosine branch).
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let r = (-2.0 * open_unit(rng.next_u64()).ln()).sqrt();
    let theta = 2.0 * std::f64::consts::PI * open_unit(rng.next_u64());
    r * theta.cos()
}

/// Inverse-CDF sampling of the piecewise-constant density `f0`.
pub fn sample_initial(f0: &DensityField, n: usize, seed: u64) -> Result<ParticleEnsemble> {
    let grid = f0.grid();
    let dx = grid.dx();
    let mut cdf = Vec::with_capacity(f0.values().len());
    let mut acc = 0.0;
    for v in f0.values() {
        acc += v * dx;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::ZeroMass);
    }
    let mut rng = keyed_rng(seed, INIT_STREAM, 0);
    let positions = (0..n)
        .map(|_| {
            let target = (1.0 - open_unit(rng.next_u64())) * acc;
            // first cell whose cumulative mass exceeds the target; empty cells are skipped
            let i = cdf.partition_point(|&c| c <= target).min(cdf.len() - 1);
            let before = if i == 0 { 0.0 } else { cdf[i - 1] };
            let cell_mass = cdf[i] - before;
            let frac = if cell_mass > 0.0 { ((target - before) / cell_mass).clamp(0.0, 1.0) } else { 0.5 };
            grid.edge(i) + frac * dx
        })
        .collect();
    ParticleEnsemble::new(positions, seed)
}

/// Arithmetic mean with a fixed summation order.
pub fn empirical_mean(e: &ParticleEnsemble) -> f64 {
    let partial: Vec<f64> = e.positions.par_chunks(SUM_CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    partial.iter().sum::<f64>() / e.positions.len() as f64
}

/// Mean of `kappa(X - c)` over the ensemble, with the same reduction order as
/// [`empirical_mean`].
pub fn mean_diffusion(e: &ParticleEnsemble, center: f64, p: &ModelParams) -> f64 {
    let partial: Vec<f64> = e
        .positions
        .par_chunks(SUM_CHUNK)
        .map(|c| c.iter().map(|x| kappa_at_offset(x - center, p)).sum::<f64>())
        .collect();
    partial.iter().sum::<f64>() / e.positions.len() as f64
}

/// Euler-Maruyama step with the mean-field center taken from the current ensemble.
pub fn em_step(e: &ParticleEnsemble, dt: f64, p: &ModelParams) -> ParticleEnsemble {
    let mut next = e.clone();
    em_step_in_place(&mut next, dt, p);
    next
}

pub fn em_step_in_place(e: &mut ParticleEnsemble, dt: f64, p: &ModelParams) {
    assert!(dt > 0.0, "dt must be positive");
    let center = attraction_center(empirical_mean(e), p);
    let (seed, stream) = (e.seed, e.step_index);
    let sqrt_dt = dt.sqrt();
    e.positions.par_chunks_mut(STEP_CHUNK).enumerate().for_each(|(k, chunk)| {
        let mut rng = keyed_rng(seed, stream, 4 * (k * STEP_CHUNK) as u128);
        for x in chunk.iter_mut() {
            let y = *x - center;
            let z = normal(&mut rng);
            *x += -y * dt + (2.0 * kappa_at_offset(y, p)).sqrt() * sqrt_dt * z;
        }
    });
    e.step_index += 1;
    e.t = e.step_index as f64 * dt;
}

/// Histogram on a grid plus the number of particles that fell outside it.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub field: DensityField,
    pub overflow: usize,
}

impl Histogram {
    pub fn overflow_fraction(&self, n: usize) -> f64 {
        self.overflow as f64 / n as f64
    }
}

/// Cell counts scaled by `1 / (N dx)`.
pub fn histogram_density(e: &ParticleEnsemble, grid: &Grid1D) -> Histogram {
    let mut counts = vec![0usize; grid.n_cells()];
    let mut overflow = 0;
    for &x in &e.positions {
        match grid.locate(x) {
            Some(i) => counts[i] += 1,
            None => overflow += 1,
        }
    }
    let scale = 1.0 / (e.positions.len() as f64 * grid.dx());
    let values = counts.into_iter().map(|c| c as f64 * scale).collect();
    Histogram { field: DensityField::from_trusted(*grid, values), overflow }
}

/// Empirical mean at one sample time, with the closed-form mean and the standard
/// error of the difference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanSample {
    pub t: f64,
    pub mean: f64,
    pub closed_form: f64,
    pub standard_error: f64,
}

impl MeanSample {
    pub fn deviation_in_se(&self) -> f64 {
        let dev = (self.mean - self.closed_form).abs();
        if self.standard_error > 0.0 {
            dev / self.standard_error
        } else if dev == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Advances `e` by `n_steps` EM steps, recording the mean every `sample_every` steps
/// (and at step zero).
///
/// The error `X_bar - u(t)` obeys `e_{k+1} = (1 - lambda dt) e_k + xi_k` with
/// `Var xi_k = 2 dt <kappa>_k / N`, which gives the standard error reported in each
/// sample. The closed-form mean uses the ensemble's own initial mean as `u0`.
pub fn run_particles<F>(
    e: &mut ParticleEnsemble,
    p: &ModelParams,
    dt: f64,
    n_steps: usize,
    sample_every: usize,
    mut on_sample: F,
) -> Vec<MeanSample>
where
    F: FnMut(&ParticleEnsemble),
{
    assert!(sample_every >= 1, "sample_every must be at least one step");
    let params = p.with_u0(empirical_mean(e));
    let n = e.len() as f64;
    let contraction = 1.0 - p.lambda() * dt;
    let mut variance = 0.0;
    let mut samples = Vec::with_capacity(n_steps / sample_every + 1);
    let record = |e: &ParticleEnsemble, variance: f64| MeanSample {
        t: e.t,
        mean: empirical_mean(e),
        closed_form: mean_closed_form(e.t, &params),
        standard_error: variance.sqrt(),
    };
    samples.push(record(e, variance));
    on_sample(e);
    for k in 1..=n_steps {
        let center = attraction_center(empirical_mean(e), p);
        let kbar = mean_diffusion(e, center, p);
        em_step_in_place(e, dt, p);
        variance = contraction * contraction * variance + 2.0 * dt * kbar / n;
        if k % sample_every == 0 {
            samples.push(record(e, variance));
            on_sample(e);
        }
    }
    samples
}
