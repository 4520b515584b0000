//! Solve the invariance equation on every knot of one chart window and
//! summarize the family; optionally dump each solved torus as a binary
//! coefficient file (format documented in the README).

use torus_atlas::geometry::HamiltonianSpec;
use torus_atlas::kam::{build_local_conjugacy, SolvedTorus};

use crate::config::{self, SolveToriConfig};
use crate::output::{fmt, Run};
use crate::{Failure, RunArgs};

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, raw): (SolveToriConfig, _) = config::load(&args.config)?;
    config::check_version(cfg.schema_version)?;

    let spec = HamiltonianSpec::new(cfg.family.perturbation(), cfg.epsilon);
    let window = cfg.window.window();
    let family = build_local_conjugacy(
        &spec,
        &window,
        cfg.n,
        &cfg.diophantine.params(),
        &cfg.newton.params(),
    )?;

    let mut csv = String::from("i,e,accepted,residual,passes\n");
    let is = window.i_knots();
    let es = window.e_knots();
    let mut run = Run::new(args)?;
    for (a, &i) in is.iter().enumerate() {
        for (b, &e) in es.iter().enumerate() {
            let k = a * es.len() + b;
            let torus = &family.tori[k];
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                fmt(i),
                fmt(e),
                family.accepted[k],
                fmt(torus.residual),
                torus.history.len().saturating_sub(1)
            ));
            if cfg.dump_tori {
                run.write_bytes(&format!("torus_{a}_{b}.bin"), &dump(i, e, torus))?;
            }
        }
    }
    run.write("family.csv", &csv)?;
    run.finish("solve-tori", &raw, None)
}

/// Binary layout: 8-byte little-endian header length, JSON header, then the
/// Fourier coefficients of the six ambient fields as little-endian f64 pairs
/// (re, im), field-major, rows over the first frequency index.
fn dump(i: f64, e: f64, torus: &SolvedTorus) -> Vec<u8> {
    let n = torus.fields[0].n();
    let header = serde_json::json!({
        "schema_version": config::SCHEMA_VERSION,
        "i": i,
        "e": e,
        "n": n,
        "omega": torus.omega,
        "epsilon": torus.epsilon,
        "residual": torus.residual,
        "fields": ["q1", "q2", "q3", "p1", "p2", "p3"],
    })
    .to_string();
    let mut bytes = Vec::with_capacity(8 + header.len() + 6 * n * n * 16);
    bytes.extend_from_slice(&(header.len() as u64).to_le_bytes());
    bytes.extend_from_slice(header.as_bytes());
    for field in &torus.fields {
        for c in field.coeffs() {
            bytes.extend_from_slice(&c.re.to_le_bytes());
            bytes.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    bytes
}
