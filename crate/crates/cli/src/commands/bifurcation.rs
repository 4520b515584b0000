//! Classify every point of a label grid and emit the result as CSV.

use rayon::prelude::*;
use torus_atlas::fibration::{classify, Class};

use crate::config::{self, BifurcationConfig};
use crate::output::{fmt, linspace, Run};
use crate::{Failure, RunArgs};

pub fn class_name(class: Class) -> &'static str {
    match class {
        Class::Regular => "regular",
        Class::StableEquilibrium => "stable-equilibrium",
        Class::FocusFocus => "focus-focus",
        Class::Boundary => "boundary",
        Class::Exterior => "exterior",
    }
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, raw): (BifurcationConfig, _) = config::load(&args.config)?;
    config::check_version(cfg.schema_version)?;
    if cfg.grid[0] == 0 || cfg.grid[1] == 0 {
        return Err(Failure::Validation("grid counts must be positive".into()));
    }

    let is = linspace(cfg.i_range, cfg.grid[0]);
    let es = linspace(cfg.e_range, cfg.grid[1]);
    let rows: Vec<String> = (0..is.len() * es.len())
        .into_par_iter()
        .map(|k| {
            let (i, e) = (is[k / es.len()], es[k % es.len()]);
            format!("{},{},{}\n", fmt(i), fmt(e), class_name(classify(i, e)))
        })
        .collect();

    let mut csv = String::from("i,e,class\n");
    csv.extend(rows);
    let mut run = Run::new(args)?;
    run.write("bifurcation.csv", &csv)?;
    run.finish("bifurcation", &raw, None)
}
