//! Action-angle scan: actions, loop timings, frequencies, and the twist
//! determinant on a label grid. Every grid point must lie in the oscillation
//! region; a point outside it is a numerical failure, not a skipped row.

use rayon::prelude::*;
use torus_atlas::action_angle::{invariants, omega_jacobian};

use crate::config::{self, FreqmapConfig};
use crate::output::{fmt, linspace, Run};
use crate::{Failure, RunArgs};

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, raw): (FreqmapConfig, _) = config::load(&args.config)?;
    config::check_version(cfg.schema_version)?;
    if cfg.grid[0] == 0 || cfg.grid[1] == 0 {
        return Err(Failure::Validation("grid counts must be positive".into()));
    }

    let is = linspace(cfg.i_range, cfg.grid[0]);
    let es = linspace(cfg.e_range, cfg.grid[1]);
    let rows: Vec<Result<String, Failure>> = (0..is.len() * es.len())
        .into_par_iter()
        .map(|k| {
            let (i, e) = (is[k / es.len()], es[k % es.len()]);
            let inv = invariants(i, e)?;
            let jac = omega_jacobian(i, e)?;
            let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
            let w = inv.omega();
            Ok(format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt(i),
                fmt(e),
                fmt(inv.action),
                fmt(inv.period),
                fmt(inv.advance),
                fmt(w[0]),
                fmt(w[1]),
                fmt(det)
            ))
        })
        .collect();

    let mut csv = String::from("i,e,action,period,advance,omega1,omega2,det_jac\n");
    for row in rows {
        csv.push_str(&row?);
    }
    let mut run = Run::new(args)?;
    run.write("freqmap.csv", &csv)?;
    run.finish("freqmap", &raw, None)
}
