//! Named scenarios. All share sigma2 = 1, delta = 1, x0 = 0, the grid
//! [-12, 12] x 1200, dt = 1e-3 and t_final = 10 unless listed otherwise.
//!
//! | name              | lambda, mu | initial data          | other                              |
//! |-------------------|------------|-----------------------|------------------------------------|
//! | steady-check      | 1, 0       | projected f_inf       |                                    |
//! | convergence       | 0.5, 0.5   | N(2, 0.25)            |                                    |
//! | particles-vs-pde  | 0.5, 0.5   | N(2, 0.25)            | N = 1e5, seed 42, t_final = 2      |
//! | disc-vs-cont      | 1, 0       | N(2, 0.25)            | both model kinds, t_final = 20     |

use anyhow::{bail, Result};

use crate::config::{parse_config_str, ExperimentSpec};

pub const PRESET_NAMES: [&str; 4] = ["steady-check", "convergence", "particles-vs-pde", "disc-vs-cont"];

const COMMON: &str = "
model.sigma2 = 1
model.delta = 1
model.x0 = 0
grid.xmin = -12
grid.xmax = 12
grid.n = 1200
time.dt = 1e-3
time.cadence = 0.05
";

pub fn preset_config(name: &str) -> Result<String> {
    let body = match name {
        "steady-check" => "model.lambda = 1\nmodel.mu = 0\ninit.kind = steady\ntime.t_final = 10\n",
        "convergence" => {
            "model.lambda = 0.5\nmodel.mu = 0.5\ninit.kind = gaussian\ninit.center = 2\ninit.variance = 0.25\n\
             time.t_final = 10\n"
        }
        "particles-vs-pde" => {
            "model.lambda = 0.5\nmodel.mu = 0.5\ninit.kind = gaussian\ninit.center = 2\ninit.variance = 0.25\n\
             time.t_final = 2\noutput.snapshots = 0,1,2\n\
             particles.enabled = true\nparticles.n = 100000\nparticles.seed = 42\nparticles.dt = 1e-3\n"
        }
        "disc-vs-cont" => {
            "model.lambda = 1\nmodel.mu = 0\ninit.kind = gaussian\ninit.center = 2\ninit.variance = 0.25\n\
             time.t_final = 20\nsolver.kind = continuous_kappa,discontinuous_drift\n\
             output.snapshots = 0,1,5,10,20\n"
        }
        other => bail!("unknown preset `{other}` (available: {})", PRESET_NAMES.join(", ")),
    };
    Ok(format!("# preset {name}{COMMON}{body}"))
}

pub fn preset(name: &str) -> Result<ExperimentSpec> {
    parse_config_str(&preset_config(name)?)
}
