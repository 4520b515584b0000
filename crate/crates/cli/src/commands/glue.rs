//! Build the chart families, blend them with the partition of unity, check
//! the overlaps, and optionally verify the glued correspondence against the
//! perturbed flow.

use torus_atlas::geometry::HamiltonianSpec;
use torus_atlas::glue::{build_partition, glue, verify_global_conjugacy, ChartSpec, GlueParams};

use crate::config::{self, GlueConfig};
use crate::output::{fmt, linspace, Run};
use crate::{Failure, RunArgs};

pub fn run(args: &RunArgs) -> Result<(), Failure> {
    let (cfg, raw): (GlueConfig, _) = config::load(&args.config)?;
    config::check_version(cfg.schema_version)?;
    if cfg.charts.is_empty() {
        return Err(Failure::Validation("at least one chart is required".into()));
    }

    let spec = HamiltonianSpec::new(cfg.family.perturbation(), cfg.epsilon);
    let dio = cfg.diophantine.params();
    let newton = cfg.newton.params();

    let mut locals = Vec::with_capacity(cfg.charts.len());
    let mut cover = Vec::with_capacity(cfg.charts.len());
    let mut chart_rows = Vec::new();
    for chart in &cfg.charts {
        let window = chart.window.window();
        let local =
            torus_atlas::kam::build_local_conjugacy(&spec, &window, cfg.n, &dio, &newton)?;
        let accepted = local.accepted.iter().filter(|&&ok| ok).count();
        chart_rows.push(serde_json::json!({
            "id": chart.id,
            "knots": local.tori.len(),
            "accepted": accepted,
        }));
        cover.push(ChartSpec::new(chart.id, window, chart.gamma)?);
        locals.push(local);
    }
    let partition = build_partition(cover)?;
    let params = GlueParams {
        lemma_tol: cfg.lemma_tol,
        subgrid: cfg.subgrid,
    };
    let global = glue(locals, partition, &params)?;

    let overlaps: Vec<_> = global
        .checked
        .iter()
        .map(|check| {
            serde_json::json!({
                "fiber": check.action,
                "charts": [check.map.i, check.map.j],
                "deviation": check.deviation,
                "angle_offset": check.map.c,
                "axes": check.map.s,
            })
        })
        .collect();

    // Partition weights sampled over the bounding box of the union; rows
    // outside every support carry zeros.
    let mut bbox = [[f64::INFINITY, f64::NEG_INFINITY]; 2];
    for chart in &cfg.charts {
        bbox[0][0] = bbox[0][0].min(chart.window.i_range[0]);
        bbox[0][1] = bbox[0][1].max(chart.window.i_range[1]);
        bbox[1][0] = bbox[1][0].min(chart.window.e_range[0]);
        bbox[1][1] = bbox[1][1].max(chart.window.e_range[1]);
    }
    let mut csv = String::from("i,e");
    for chart in &cfg.charts {
        csv.push_str(&format!(",w{}", chart.id));
    }
    csv.push('\n');
    for i in linspace(bbox[0], cfg.partition_grid[0]) {
        for e in linspace(bbox[1], cfg.partition_grid[1]) {
            let weights = global
                .partition
                .weights(i, e)
                .unwrap_or_else(|_| vec![0.0; cfg.charts.len()]);
            csv.push_str(&format!("{},{}", fmt(i), fmt(e)));
            for w in weights {
                csv.push_str(&format!(",{}", fmt(w)));
            }
            csv.push('\n');
        }
    }

    let verify = match &cfg.verify {
        Some(v) => {
            let mut near_identity = Vec::with_capacity(v.fibers.len());
            for fiber in &v.fibers {
                let torus = global.correspondence(fiber[0], fiber[1])?;
                near_identity.push(torus.identity_distance(16));
            }
            let defect =
                verify_global_conjugacy(&global, &spec, &v.fibers, v.points, v.t_end, v.h)?;
            serde_json::json!({
                "fibers": v.fibers,
                "t_end": v.t_end,
                "flow_defect": defect,
                "near_identity": near_identity,
            })
        }
        None => serde_json::Value::Null,
    };

    let report = serde_json::json!({
        "epsilon": cfg.epsilon,
        "charts": chart_rows,
        "overlaps": overlaps,
        "verify": verify,
    });

    let mut run = Run::new(args)?;
    run.write("glue.json", &format!("{report:#}\n"))?;
    run.write("partition.csv", &csv)?;
    run.finish("glue", &raw, None)
}
