//! Sample frequency vectors from a box and report which pass the small
//! divisor test, plus the acceptance fraction with its sampling error.

use rayon::prelude::*;
use torus_atlas::diophantine::is_diophantine;
use torus_atlas::rng::CounterRng;

use crate::config::{self, DiophantineConfig};
use crate::output::{fmt, Run};
use crate::{Failure, RunArgs};

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, raw): (DiophantineConfig, _) = config::load(&args.config)?;
    config::check_version(cfg.schema_version)?;
    if cfg.samples == 0 {
        return Err(Failure::Validation("samples must be positive".into()));
    }

    let seed = args.seed.unwrap_or(cfg.seed);
    let rng = CounterRng::new(seed);
    let params = cfg.diophantine.params();
    let results: Vec<(f64, f64, bool, f64)> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|k| {
            let w1 = rng.f64_in(2 * k, cfg.omega_box[0][0], cfg.omega_box[0][1]);
            let w2 = rng.f64_in(2 * k + 1, cfg.omega_box[1][0], cfg.omega_box[1][1]);
            let (ok, margin) = is_diophantine([w1, w2], &params);
            (w1, w2, ok, margin)
        })
        .collect();

    let mut csv = String::from("omega1,omega2,accepted,margin\n");
    let mut accepted = 0usize;
    for (w1, w2, ok, margin) in &results {
        accepted += *ok as usize;
        csv.push_str(&format!("{},{},{},{}\n", fmt(*w1), fmt(*w2), ok, fmt(*margin)));
    }

    let fraction = accepted as f64 / cfg.samples as f64;
    let standard_error = (fraction * (1.0 - fraction) / cfg.samples as f64).sqrt();
    let summary = serde_json::json!({
        "samples": cfg.samples,
        "accepted": accepted,
        "fraction": fraction,
        "standard_error": standard_error,
        "gamma": cfg.diophantine.gamma,
        "tau": cfg.diophantine.tau,
        "k_max": cfg.diophantine.k_max,
        "seed": seed,
    });

    let mut run = Run::new(args)?;
    run.write("diophantine.csv", &csv)?;
    run.write("summary.json", &format!("{summary:#}\n"))?;
    run.finish("diophantine", &raw, Some(seed))
}
