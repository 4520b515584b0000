//! Frequency cross-check: sample oscillation-class label pairs, integrate
//! each orbit, and compare the spectral lines of the height and azimuth
//! observables against the quadrature frequencies.

use rayon::prelude::*;
use torus_atlas::action_angle::omega;
use torus_atlas::fibration::{classify, Class};
use torus_atlas::freq::{extract_frequencies, FrequencyEstimate, Observable};
use torus_atlas::geometry::{integrate_every, oscillation_start, HamiltonianSpec};
use torus_atlas::rng::CounterRng;

use crate::config::{self, VerifyFreqConfig};
use crate::output::{fmt, Run};
use crate::{Failure, RunArgs};

struct PointReport {
    i: f64,
    e: f64,
    quad: [f64; 2],
    height: FrequencyEstimate,
    azimuth: FrequencyEstimate,
}

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, raw): (VerifyFreqConfig, _) = config::load(&args.config)?;
    config::check_version(cfg.schema_version)?;
    if cfg.count == 0 {
        return Err(Failure::Validation("count must be positive".into()));
    }

    let seed = args.seed.unwrap_or(cfg.seed);
    let rng = CounterRng::new(seed);
    let spec = HamiltonianSpec::new(cfg.family.perturbation(), cfg.epsilon);
    let n_steps = (cfg.t_end / cfg.h).round() as usize;

    // Rejection-sample the box for oscillation-class pairs; each point owns
    // a disjoint counter block so the draw is independent of thread order.
    let points: Vec<Result<PointReport, Failure>> = (0..cfg.count as u64)
        .into_par_iter()
        .map(|k| {
            let mut label = None;
            for attempt in 0..64 {
                let idx = k * 128 + 2 * attempt;
                let i = rng.f64_in(idx, cfg.i_range[0], cfg.i_range[1]);
                let e = rng.f64_in(idx + 1, cfg.e_range[0], cfg.e_range[1]);
                if classify(i, e) == Class::Regular {
                    label = Some((i, e));
                    break;
                }
            }
            let (i, e) = label.ok_or_else(|| {
                Failure::Validation(
                    "sampling box contains almost no oscillation-class points".into(),
                )
            })?;
            let start = oscillation_start(i, e)?;
            let traj = integrate_every(&spec, &start, cfg.h, n_steps, cfg.stride)?;
            Ok(PointReport {
                i,
                e,
                quad: omega(i, e)?,
                height: extract_frequencies(&traj, Observable::Height, cfg.lines)?,
                azimuth: extract_frequencies(&traj, Observable::Azimuth, cfg.lines)?,
            })
        })
        .collect();

    let mut lines = String::from("point,observable,frequency,amplitude\n");
    let mut compare = String::from("i,e,omega1,omega2,spectral1,spectral2,rel1,rel2\n");
    let mut worst = 0.0f64;
    for (k, point) in points.into_iter().enumerate() {
        let p = point?;
        for (name, est) in [("height", &p.height), ("azimuth", &p.azimuth)] {
            for (freq, amp) in &est.frequencies {
                lines.push_str(&format!("{k},{name},{},{}\n", fmt(*freq), fmt(*amp)));
            }
        }
        let spectral = [p.height.dominant(), p.azimuth.dominant()];
        let rel = [
            (spectral[0] - p.quad[0]).abs() / p.quad[0].abs(),
            (spectral[1] - p.quad[1]).abs() / p.quad[1].abs(),
        ];
        worst = worst.max(rel[0]).max(rel[1]);
        compare.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt(p.i),
            fmt(p.e),
            fmt(p.quad[0]),
            fmt(p.quad[1]),
            fmt(spectral[0]),
            fmt(spectral[1]),
            fmt(rel[0]),
            fmt(rel[1])
        ));
    }

    let summary = serde_json::json!({
        "points": cfg.count,
        "worst_relative_error": worst,
        "t_end": cfg.t_end,
        "epsilon": cfg.epsilon,
        "seed": seed,
    });

    let mut run = Run::new(args)?;
    run.write("lines.csv", &lines)?;
    run.write("compare.csv", &compare)?;
    run.write("summary.json", &format!("{summary:#}\n"))?;
    run.finish("verify-freq", &raw, Some(seed))
}
