//! Transport the advance branch around a loop of label pairs and report the
//! winding and transition matrix.

use std::f64::consts::TAU;

use torus_atlas::monodromy::monodromy_along;

use crate::config::{self, MonodromyConfig};
use crate::output::Run;
use crate::{Failure, RunArgs};

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, raw): (MonodromyConfig, _) = config::load(&args.config)?;
    config::check_version(cfg.schema_version)?;
    if cfg.path.vertices < 3 {
        return Err(Failure::Validation("a loop needs at least 3 vertices".into()));
    }

    let path: Vec<[f64; 2]> = (0..cfg.path.vertices)
        .map(|k| {
            let ang = TAU * k as f64 / cfg.path.vertices as f64;
            [
                cfg.path.center[0] + cfg.path.radius * ang.cos(),
                cfg.path.center[1] + cfg.path.radius * ang.sin(),
            ]
        })
        .collect();
    let m = monodromy_along(&path)?;

    let report = serde_json::json!({
        "center": cfg.path.center,
        "radius": cfg.path.radius,
        "vertices": cfg.path.vertices,
        "winding": m.winding,
        "matrix": m.matrix,
        "samples": m.samples,
    });
    let mut run = Run::new(args)?;
    run.write("monodromy.json", &format!("{report:#}\n"))?;
    run.finish("monodromy", &raw, None)
}
