//! Gluing chart-local torus families into one global correspondence.
//!
//! Each chart solves its own family of perturbed invariant tori over a
//! window of label pairs (I, E). On a fiber covered by several charts the
//! solved tori agree as sets but their angle parameterizations differ, and
//! the local uniqueness of Diophantine tori forces that difference to be a
//! rigid angle translation. The glue is therefore cheap: measure the
//! translation of every covering chart against the heaviest one, average
//! the translations with partition-of-unity weights (lifted to the plane
//! near zero, where the average of nearby torus points is well defined),
//! and evaluate the heaviest chart at the averaged shift.
//!
//! The partition weights are mollifier bumps supported on each chart's
//! shrunken window, normalized by their sum. They depend only on the labels,
//! never on the angles, so every weight is constant along its fiber and the
//! blend never tears a torus apart.
//!
//! [`verify_global_conjugacy`] closes the loop: the unperturbed flow is a
//! straight line in the angles of the source torus, the perturbed flow is
//! integrated numerically from the glued image, and the two must track each
//! other for as long as requested.

use std::f64::consts::{PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action_angle;
use crate::diophantine::is_diophantine;
use crate::embedding::{integrable_embedding, TorusEmbedding};
use crate::error::{Error, Result};
use crate::geometry::{integrate_every, HamiltonianSpec, PhasePoint};
use crate::kam::{ActionWindow, LocalConjugacy, SolvedTorus};

/// One chart of a cover: a label window, an id, and the margin by which the
/// window is eroded before a partition bump is placed on it.
///
/// The erosion keeps the bump's support strictly inside the region where the
/// chart's torus family is trusted, so no weight ever leaks to a label the
/// chart cannot answer for.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ChartSpec {
    pub id: usize,
    pub window: ActionWindow,
    /// Absolute erosion of every window edge, in label units.
    pub gamma: f64,
}

impl ChartSpec {
    pub fn new(id: usize, window: ActionWindow, gamma: f64) -> Result<ChartSpec> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "chart shrink margin must be positive, got {gamma}"
            )));
        }
        let spec = ChartSpec { id, window, gamma };
        let [ir, er] = spec.shrunken();
        if ir[0] >= ir[1] || er[0] >= er[1] {
            return Err(Error::InvalidArgument(format!(
                "window {:?} x {:?} is empty after eroding by {}",
                window.i_range, window.e_range, gamma
            )));
        }
        // A window that pokes into the non-regular part of the label plane
        // would seed unsolvable tori; checking the corners catches the
        // common mistakes cheaply without claiming a full containment proof.
        for i in window.i_range {
            for e in window.e_range {
                action_angle::omega(i, e)?;
            }
        }
        Ok(spec)
    }

    /// The eroded window carrying this chart's bump.
    pub fn shrunken(&self) -> [[f64; 2]; 2] {
        [
            [self.window.i_range[0] + self.gamma, self.window.i_range[1] - self.gamma],
            [self.window.e_range[0] + self.gamma, self.window.e_range[1] - self.gamma],
        ]
    }

    /// Unnormalized bump weight at a label pair. Smooth, positive inside the
    /// shrunken window, identically zero outside it.
    fn bump(&self, i: f64, e: f64) -> f64 {
        let [ir, er] = self.shrunken();
        mollifier(rescale(i, ir)) * mollifier(rescale(e, er))
    }
}

/// Map an interval onto [-1, 1].
fn rescale(x: f64, range: [f64; 2]) -> f64 {
    (2.0 * x - range[0] - range[1]) / (range[1] - range[0])
}

/// The standard compactly supported smooth bump on (-1, 1).
///
/// exp(-1/(1-s^2)) underflows to zero a little inside the mathematical
/// support (around |s| > 0.9993), so the usable interior of each bump is a
/// hair narrower than its window; covers need genuine overlap, not edge
/// contact.
fn mollifier(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - s * s)).exp()
    }
}

/// Normalized bump weights over a cover of chart windows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    pub cover: Vec<ChartSpec>,
}

/// Validate a cover and wrap it as a partition.
///
/// Chart ids must equal their position so that weight indices, local family
/// indices, and reported transition pairs all mean the same thing.
pub fn build_partition(cover: Vec<ChartSpec>) -> Result<PartitionOfUnity> {
    if cover.is_empty() {
        return Err(Error::InvalidArgument("empty chart cover".into()));
    }
    for (k, chart) in cover.iter().enumerate() {
        if chart.id != k {
            return Err(Error::InvalidArgument(format!(
                "chart id {} at cover position {k}; ids must match positions",
                chart.id
            )));
        }
    }
    Ok(PartitionOfUnity { cover })
}

impl PartitionOfUnity {
    /// Normalized weights at one label pair. They are nonnegative and sum to
    /// one by construction; a label where every bump vanishes is a coverage
    /// gap and is reported with the witness point.
    pub fn weights(&self, i: f64, e: f64) -> Result<Vec<f64>> {
        let raw: Vec<f64> = self.cover.iter().map(|c| c.bump(i, e)).collect();
        let sum: f64 = raw.iter().sum();
        if sum == 0.0 {
            return Err(Error::CoverageGap { i, e });
        }
        Ok(raw.iter().map(|r| r / sum).collect())
    }

    /// Sample a rectangle on a grid and fail with a witness at the first
    /// uncovered point.
    pub fn check_coverage(&self, i_range: [f64; 2], e_range: [f64; 2], samples: [usize; 2]) -> Result<()> {
        for a in 0..samples[0] {
            for b in 0..samples[1] {
                let i = grid_point(i_range, a, samples[0]);
                let e = grid_point(e_range, b, samples[1]);
                self.weights(i, e)?;
            }
        }
        Ok(())
    }
}

fn grid_point(range: [f64; 2], k: usize, count: usize) -> f64 {
    if count == 1 {
        return 0.5 * (range[0] + range[1]);
    }
    range[0] + (range[1] - range[0]) * k as f64 / (count - 1) as f64
}

/// Angle transition between two charts on one shared fiber: angles of chart
/// `j` equal `s` times angles of chart `i` plus `c`.
///
/// Charts glued in one run live over a simply connected label region and
/// share their cycle basis, so `s` is always the identity here; the matrix
/// is carried because transporting a chart around the isolated singular
/// value changes the basis (see the monodromy module), and a transition
/// record must be able to say so.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransitionMap {
    pub i: usize,
    pub j: usize,
    pub s: [[i64; 2]; 2],
    pub c: [f64; 2],
}

/// One measured overlap: the transition on a shared fiber together with the
/// spread that certifies it is a rigid translation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OverlapCheck {
    pub action: [f64; 2],
    pub map: TransitionMap,
    pub deviation: f64,
}

/// Knobs for building and checking the glued correspondence.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GlueParams {
    /// Largest allowed spread of an overlap shift field before the
    /// translation picture is declared broken.
    pub lemma_tol: f64,
    /// Shift fields are fitted on this many angles per axis.
    pub subgrid: usize,
}

impl Default for GlueParams {
    fn default() -> Self {
        GlueParams {
            lemma_tol: 1e-6,
            subgrid: 16,
        }
    }
}

/// Fit the per-point angle shift field s with a(theta + s) = b(theta) on a
/// subgrid, by Gauss-Newton in the ambient metric.
///
/// Returns the mean shift (each sample lifted to the branch nearest the
/// first), the sup distance of the field from its mean, and the sup ambient
/// residual of the closest-point fits. The second number certifies rigidity
/// of the angle transition, the third that the two tori coincide as sets.
fn offset_field(a: &SolvedTorus, b: &SolvedTorus, m: usize) -> Result<([f64; 2], f64, f64)> {
    assert!(m >= 2);
    let mut shifts = Vec::with_capacity(m * m);
    let mut worst_res = 0.0f64;
    let mut warm = [0.0f64; 2];
    for k1 in 0..m {
        for k2 in 0..m {
            let t = [TAU * k1 as f64 / m as f64, TAU * k2 as f64 / m as f64];
            let target = b.eval_array(t[0], t[1]);
            let mut s = warm;
            for _ in 0..12 {
                let x = a.eval_array(t[0] + s[0], t[1] + s[1]);
                let jac = a.eval_jacobian(t[0] + s[0], t[1] + s[1]);
                let mut jtj = [[0.0f64; 2]; 2];
                let mut jtr = [0.0f64; 2];
                for f in 0..6 {
                    let r = target[f] - x[f];
                    for col in 0..2 {
                        jtr[col] += jac[f][col] * r;
                        for row in 0..2 {
                            jtj[row][col] += jac[f][row] * jac[f][col];
                        }
                    }
                }
                let det = jtj[0][0] * jtj[1][1] - jtj[0][1] * jtj[1][0];
                let scale = jtj[0][0].abs() + jtj[1][1].abs();
                if det.abs() <= 1e-12 * scale * scale {
                    return Err(Error::InvalidArgument(
                        "degenerate angle Jacobian in a shift fit".into(),
                    ));
                }
                let d0 = (jtj[1][1] * jtr[0] - jtj[0][1] * jtr[1]) / det;
                let d1 = (jtj[0][0] * jtr[1] - jtj[1][0] * jtr[0]) / det;
                s[0] += d0;
                s[1] += d1;
                if d0.abs().max(d1.abs()) < 1e-14 {
                    break;
                }
            }
            let x = a.eval_array(t[0] + s[0], t[1] + s[1]);
            let res: f64 = (0..6).map(|f| (target[f] - x[f]).powi(2)).sum::<f64>().sqrt();
            worst_res = worst_res.max(res);
            warm = s;
            shifts.push(s);
        }
    }
    // Lift every shift to the branch nearest the first one before averaging;
    // a cluster anywhere on the torus then averages correctly.
    let anchor = [wrap_angle(shifts[0][0]), wrap_angle(shifts[0][1])];
    let lifted: Vec<[f64; 2]> = shifts
        .iter()
        .map(|s| {
            [
                anchor[0] + wrap_angle(s[0] - anchor[0]),
                anchor[1] + wrap_angle(s[1] - anchor[1]),
            ]
        })
        .collect();
    let count = lifted.len() as f64;
    let mut c = [0.0f64; 2];
    for s in &lifted {
        c[0] += s[0] / count;
        c[1] += s[1] / count;
    }
    let mut dev = 0.0f64;
    for s in &lifted {
        dev = dev.max((s[0] - c[0]).abs()).max((s[1] - c[1]).abs());
    }
    c = [wrap_angle(c[0]), wrap_angle(c[1])];
    Ok((c, dev, worst_res))
}

/// Wrap into (-pi, pi].
fn wrap_angle(x: f64) -> f64 {
    let y = x - TAU * (x / TAU).round();
    if y <= -PI {
        y + TAU
    } else {
        y
    }
}

/// Measure the rigid translation between two charts' parameterizations of
/// one shared fiber.
///
/// Both tori must be solved at the same label pair, hence carry the same
/// frequency vector. The reported deviation is the larger of the shift
/// field's spread around its mean and the ambient closest-point residual;
/// the first catches a transition that is not a translation, the second a
/// pair of tori that do not even coincide as sets. Exceeding `tol` on
/// either count is the smallness-violation signal of the gluing theory.
pub fn overlap_translation(
    i: usize,
    j: usize,
    action: [f64; 2],
    ti: &SolvedTorus,
    tj: &SolvedTorus,
    tol: f64,
    subgrid: usize,
) -> Result<(TransitionMap, f64)> {
    let identity = [[1i64, 0], [0, 1]];
    if i == j {
        let map = TransitionMap { i, j, s: identity, c: [0.0, 0.0] };
        return Ok((map, 0.0));
    }
    let domega = (ti.omega[0] - tj.omega[0])
        .abs()
        .max((ti.omega[1] - tj.omega[1]).abs());
    if domega > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "overlap pair solved at different frequencies ({:?} vs {:?})",
            ti.omega, tj.omega
        )));
    }
    let (c, spread, res) = offset_field(tj, ti, subgrid)?;
    let deviation = spread.max(res);
    if deviation > tol {
        return Err(Error::OverlapMismatch {
            deviation,
            tol,
            a1: action[0],
            a2: action[1],
        });
    }
    let map = TransitionMap { i, j, s: identity, c };
    Ok((map, deviation))
}

/// Partition-weighted average of per-chart angle offsets, anchored at the
/// reference chart so that equal offsets average to themselves exactly.
fn weighted_shift(reference: usize, weights: &[f64], offsets: &[Option<[f64; 2]>]) -> [f64; 2] {
    let anchor = offsets[reference].expect("reference chart carries an offset");
    let mut out = anchor;
    for (w, off) in weights.iter().zip(offsets) {
        if let Some(d) = off {
            out[0] += w * (d[0] - anchor[0]);
            out[1] += w * (d[1] - anchor[1]);
        }
    }
    out
}

/// The glued correspondence: a partition of unity and the chart-local torus
/// families it blends.
///
/// Fibers are glued lazily by [`GlobalConjugacy::correspondence`]; the
/// overlap translations measured while building are kept for reporting.
#[derive(Debug, Clone)]
pub struct GlobalConjugacy {
    pub partition: PartitionOfUnity,
    pub locals: Vec<LocalConjugacy>,
    pub params: GlueParams,
    /// Overlap translations spot-checked during the build.
    pub checked: Vec<OverlapCheck>,
}

/// Blend chart-local families over a partitioned cover.
///
/// Shapes must line up: one local family per chart, over exactly the
/// chart's window, all for the same Hamiltonian and the same Diophantine
/// test. Every pair of charts whose shrunken windows overlap is then spot
/// checked on one shared Diophantine fiber; a transition that is not a
/// small rigid translation fails the build. The per-fiber evaluator
/// re-measures its own translations later, so the spot check is an early
/// alarm, not the only gate.
pub fn glue(
    locals: Vec<LocalConjugacy>,
    partition: PartitionOfUnity,
    params: &GlueParams,
) -> Result<GlobalConjugacy> {
    if locals.len() != partition.cover.len() {
        return Err(Error::InvalidArgument(format!(
            "{} local families for {} charts",
            locals.len(),
            partition.cover.len()
        )));
    }
    let spec0 = locals[0].spec;
    let dio0 = locals[0].dio;
    for (local, chart) in locals.iter().zip(&partition.cover) {
        if local.window.i_range != chart.window.i_range
            || local.window.e_range != chart.window.e_range
        {
            return Err(Error::InvalidArgument(format!(
                "chart {} window disagrees with its local family",
                chart.id
            )));
        }
        if local.spec.family.id() != spec0.family.id() || local.spec.epsilon != spec0.epsilon {
            return Err(Error::InvalidArgument(
                "local families solved for different Hamiltonians".into(),
            ));
        }
        if local.dio.gamma != dio0.gamma || local.dio.tau != dio0.tau || local.dio.k_max != dio0.k_max
        {
            return Err(Error::InvalidArgument(
                "local families use different Diophantine tests".into(),
            ));
        }
    }
    let mut checked = Vec::new();
    for a in 0..locals.len() {
        for b in a + 1..locals.len() {
            let ra = partition.cover[a].shrunken();
            let rb = partition.cover[b].shrunken();
            let lap = [
                [ra[0][0].max(rb[0][0]), ra[0][1].min(rb[0][1])],
                [ra[1][0].max(rb[1][0]), ra[1][1].min(rb[1][1])],
            ];
            if lap[0][0] >= lap[0][1] || lap[1][0] >= lap[1][1] {
                continue;
            }
            // One Diophantine fiber from the interior of the overlap. Scan a
            // small grid, eroded so the bumps have not underflowed yet.
            let mut found = None;
            'scan: for p in 0..5 {
                for q in 0..5 {
                    let i = lap[0][0] + (lap[0][1] - lap[0][0]) * (0.1 + 0.8 * p as f64 / 4.0);
                    let e = lap[1][0] + (lap[1][1] - lap[1][0]) * (0.1 + 0.8 * q as f64 / 4.0);
                    let w = action_angle::omega(i, e)?;
                    if is_diophantine(w, &dio0).0 {
                        found = Some([i, e]);
                        break 'scan;
                    }
                }
            }
            let Some(action) = found else { continue };
            let ta = locals[a].torus_at(action[0], action[1])?;
            let tb = locals[b].torus_at(action[0], action[1])?;
            let (map, deviation) =
                overlap_translation(a, b, action, &ta, &tb, params.lemma_tol, params.subgrid)?;
            checked.push(OverlapCheck { action, map, deviation });
        }
    }
    Ok(GlobalConjugacy {
        partition,
        locals,
        params: *params,
        checked,
    })
}

/// One glued fiber: the reference chart's solved torus, the partition
/// weights, and the weight-averaged angle shift aligning every covering
/// chart with the reference.
#[derive(Debug, Clone)]
pub struct GluedTorus {
    pub action: [f64; 2],
    pub omega: [f64; 2],
    /// Index of the reference chart (largest weight, ties to the smaller
    /// id).
    pub reference: usize,
    pub weights: Vec<f64>,
    /// Angle offset of each covering chart against the reference.
    pub offsets: Vec<Option<[f64; 2]>>,
    /// Partition-weighted average of the offsets.
    pub shift: [f64; 2],
    /// Overlap translations measured on this fiber.
    pub checks: Vec<OverlapCheck>,
    /// The reference chart's perturbed torus.
    pub torus: SolvedTorus,
    /// The unperturbed torus over the same label pair.
    pub integrable: TorusEmbedding,
}

impl GluedTorus {
    /// Point of the unperturbed torus at one angle pair.
    pub fn source_point(&self, a1: f64, a2: f64) -> PhasePoint {
        self.integrable.eval(a1, a2)
    }

    /// Glued image of the unperturbed point at the same angle pair: the
    /// reference torus, evaluated at the angles shifted back by the blended
    /// offset.
    pub fn image_point(&self, a1: f64, a2: f64) -> PhasePoint {
        self.torus.eval(a1 - self.shift[0], a2 - self.shift[1])
    }

    /// Sup distance between the glued image and the unperturbed point over
    /// an m x m angle grid. The correspondence is worth its name only while
    /// this stays comparable to the perturbation strength.
    pub fn identity_distance(&self, m: usize) -> f64 {
        let mut worst = 0.0f64;
        for k1 in 0..m {
            for k2 in 0..m {
                let t1 = TAU * k1 as f64 / m as f64;
                let t2 = TAU * k2 as f64 / m as f64;
                let a = self.image_point(t1, t2).to_array();
                let b = self.source_point(t1, t2).to_array();
                let d: f64 = (0..6).map(|f| (a[f] - b[f]).powi(2)).sum::<f64>().sqrt();
                worst = worst.max(d);
            }
        }
        worst
    }
}

impl GlobalConjugacy {
    pub fn spec(&self) -> &HamiltonianSpec {
        &self.locals[0].spec
    }

    /// Glue one Diophantine fiber.
    ///
    /// Every chart with positive weight answers for the fiber with a
    /// polished torus; their translations against the heaviest chart are
    /// measured fresh and averaged with the weights. Off-Diophantine labels
    /// are rejected by the chart families themselves.
    pub fn correspondence(&self, i: f64, e: f64) -> Result<GluedTorus> {
        let weights = self.partition.weights(i, e)?;
        let mut reference = 0;
        for (k, w) in weights.iter().enumerate() {
            if *w > weights[reference] {
                reference = k;
            }
        }
        let torus = self.locals[reference].torus_at(i, e)?;
        let mut offsets: Vec<Option<[f64; 2]>> = vec![None; weights.len()];
        offsets[reference] = Some([0.0, 0.0]);
        let mut checks = Vec::new();
        for (j, w) in weights.iter().enumerate() {
            if *w == 0.0 || j == reference {
                continue;
            }
            let tj = self.locals[j].torus_at(i, e)?;
            let (map, deviation) = overlap_translation(
                reference,
                j,
                [i, e],
                &torus,
                &tj,
                self.params.lemma_tol,
                self.params.subgrid,
            )?;
            offsets[j] = Some(map.c);
            checks.push(OverlapCheck {
                action: [i, e],
                map,
                deviation,
            });
        }
        let shift = weighted_shift(reference, &weights, &offsets);
        let integrable = integrable_embedding(i, e, torus.n())?;
        Ok(GluedTorus {
            action: [i, e],
            omega: torus.omega,
            reference,
            weights,
            offsets,
            shift,
            checks,
            torus,
            integrable,
        })
    }
}

/// Flow-commutation defect of the glued correspondence.
///
/// For each sampled fiber and a spread of angles on it, the unperturbed
/// flow is the straight line in the source angles while the perturbed flow
/// is integrated numerically from the glued image; the defect is the sup
/// ambient distance between the glued image of the former and the latter
/// over checkpoints up to `t_end`. Checkpoints are spaced roughly half a
/// time unit apart.
pub fn verify_global_conjugacy(
    g: &GlobalConjugacy,
    spec: &HamiltonianSpec,
    samples: &[[f64; 2]],
    points: usize,
    t_end: f64,
    h: f64,
) -> Result<f64> {
    if spec.family.id() != g.spec().family.id() || spec.epsilon != g.spec().epsilon {
        return Err(Error::InvalidArgument(
            "verification Hamiltonian differs from the glued one".into(),
        ));
    }
    let fibers: Result<Vec<GluedTorus>> = samples
        .par_iter()
        .map(|&[i, e]| g.correspondence(i, e))
        .collect();
    let fibers = fibers?;
    let mut jobs = Vec::new();
    for fiber in &fibers {
        for k in 0..points {
            // Low-discrepancy spread of start angles, same for every fiber.
            let s1 = TAU * ((k as f64 + 1.0) * 0.754_877_666_246_692_7).fract();
            let s2 = TAU * ((k as f64 + 1.0) * 0.569_840_290_998_053_2).fract();
            jobs.push((fiber, [s1, s2]));
        }
    }
    let stride = ((0.5 / h).round() as usize).max(1);
    let n_steps = (t_end / h).round() as usize;
    let defects: Result<Vec<f64>> = jobs
        .par_iter()
        .map(|(fiber, sigma)| {
            let x0 = fiber.image_point(sigma[0], sigma[1]);
            let traj = integrate_every(spec, &x0, h, n_steps, stride)?;
            let mut worst = 0.0f64;
            for (k, pt) in traj.samples.iter().enumerate() {
                let t = traj.step * k as f64;
                let a1 = (sigma[0] + fiber.omega[0] * t - fiber.shift[0]).rem_euclid(TAU);
                let a2 = (sigma[1] + fiber.omega[1] * t - fiber.shift[1]).rem_euclid(TAU);
                let target = fiber.torus.eval_array(a1, a2);
                let here = pt.to_array();
                let d: f64 = (0..6).map(|f| (here[f] - target[f]).powi(2)).sum::<f64>().sqrt();
                worst = worst.max(d);
            }
            Ok(worst)
        })
        .collect();
    Ok(defects?.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diophantine::DiophantineParams;
    use crate::geometry::Perturbation;
    use crate::kam::{build_local_conjugacy, integrable_torus, NewtonParams};

    fn window(i0: f64, i1: f64, e0: f64, e1: f64, k: usize) -> ActionWindow {
        ActionWindow {
            i_range: [i0, i1],
            e_range: [e0, e1],
            knots: [k, k],
        }
    }

    #[test]
    fn bump_is_positive_inside_and_zero_outside_the_shrunken_window() {
        let chart = ChartSpec::new(0, window(0.2, 0.4, 0.4, 0.6, 3), 0.02).unwrap();
        assert!(chart.bump(0.3, 0.5) > 0.0);
        assert_eq!(chart.bump(0.22, 0.5), 0.0);
        assert_eq!(chart.bump(0.3, 0.58), 0.0);
        assert_eq!(chart.bump(0.1, 0.5), 0.0);
        assert!(chart.bump(0.3, 0.5) > chart.bump(0.25, 0.5));
    }

    #[test]
    fn single_chart_partition_is_identically_one() {
        let chart = ChartSpec::new(0, window(0.2, 0.4, 0.4, 0.6, 3), 0.02).unwrap();
        let pu = build_partition(vec![chart]).unwrap();
        for k in 0..25 {
            let i = 0.25 + 0.10 * (k % 5) as f64 / 4.0;
            let e = 0.45 + 0.10 * (k / 5) as f64 / 4.0;
            let w = pu.weights(i, e).unwrap();
            assert_eq!(w, vec![1.0]);
        }
        match pu.weights(0.21, 0.5) {
            Err(Error::CoverageGap { i, e }) => {
                assert_eq!(i, 0.21);
                assert_eq!(e, 0.5);
            }
            other => panic!("expected a coverage gap, got {other:?}"),
        }
    }

    #[test]
    fn two_half_overlapping_windows_sum_to_one() {
        let a = ChartSpec::new(0, window(0.15, 0.30, 0.40, 0.60, 3), 0.01).unwrap();
        let b = ChartSpec::new(1, window(0.22, 0.37, 0.40, 0.60, 3), 0.01).unwrap();
        let pu = build_partition(vec![a, b]).unwrap();
        // Interior of the union of the two shrunken windows, eroded past the
        // mollifier underflow skin.
        pu.check_coverage([0.163, 0.357], [0.413, 0.587], [100, 100])
            .unwrap();
        let mut worst = 0.0f64;
        for p in 0..100 {
            for q in 0..100 {
                let i = 0.163 + (0.357 - 0.163) * p as f64 / 99.0;
                let e = 0.413 + (0.587 - 0.413) * q as f64 / 99.0;
                let w = pu.weights(i, e).unwrap();
                assert!(w.iter().all(|x| (0.0..=1.0).contains(x)));
                worst = worst.max((w.iter().sum::<f64>() - 1.0).abs());
            }
        }
        assert!(worst <= 1e-12, "weights sum off by {worst:.3e}");
    }

    #[test]
    fn equal_offsets_average_to_that_offset_exactly() {
        let offsets = vec![Some([0.37, -0.21]), Some([0.37, -0.21]), Some([0.37, -0.21])];
        let weights = [0.244, 0.511, 0.245];
        let s = weighted_shift(1, &weights, &offsets);
        assert_eq!(s, [0.37, -0.21]);
    }

    #[test]
    fn offset_field_recovers_a_rigid_translation() {
        let emb = integrable_embedding(0.3, 0.5, 64).unwrap();
        let moved = emb.translate([0.013, -0.027]);
        let a = SolvedTorus::from_parts(emb.omega, 0.0, emb.fields.clone(), 0.0);
        let b = SolvedTorus::from_parts(emb.omega, 0.0, moved.fields.clone(), 0.0);
        let (c, dev, res) = offset_field(&a, &b, 16).unwrap();
        assert!((c[0] - 0.013).abs() < 1e-10, "c = {c:?}");
        assert!((c[1] + 0.027).abs() < 1e-10, "c = {c:?}");
        assert!(dev < 1e-10, "deviation {dev:.3e}");
        assert!(res < 1e-10, "residual {res:.3e}");
    }

    #[test]
    fn chart_against_itself_translates_by_zero_exactly() {
        let emb = integrable_embedding(0.3, 0.5, 64).unwrap();
        let t = SolvedTorus::from_parts(emb.omega, 0.0, emb.fields.clone(), 0.0);
        let (map, dev) = overlap_translation(2, 2, [0.3, 0.5], &t, &t, 1e-6, 16).unwrap();
        assert_eq!(map.c, [0.0, 0.0]);
        assert_eq!(dev, 0.0);
    }

    #[test]
    fn tori_that_are_not_translates_are_rejected() {
        let emb = integrable_embedding(0.3, 0.5, 64).unwrap();
        let a = SolvedTorus::from_parts(emb.omega, 0.0, emb.fields.clone(), 0.0);
        let mut warped = emb.fields.clone();
        let n = warped[0].n();
        warped[0].coeffs_mut()[3 * n + 2] += 1e-3;
        let b = SolvedTorus::from_parts(emb.omega, 0.0, warped, 0.0);
        match overlap_translation(0, 1, [0.3, 0.5], &a, &b, 1e-6, 16) {
            Err(Error::OverlapMismatch { deviation, .. }) => assert!(deviation > 1e-6),
            other => panic!("expected an overlap mismatch, got {other:?}"),
        }
        let other_fiber = integrable_torus(0.31, 0.5, 64).unwrap();
        assert!(matches!(
            overlap_translation(0, 1, [0.3, 0.5], &a, &other_fiber, 1e-6, 16),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn single_chart_glue_reduces_to_the_local_family() {
        let spec = HamiltonianSpec::new(Perturbation::Q1Potential, 1e-3);
        let win = window(0.24, 0.36, 0.40, 0.52, 3);
        let dio = DiophantineParams::default();
        let newton = NewtonParams {
            tol: 1e-9,
            strict: false,
            ..NewtonParams::default()
        };
        let local = build_local_conjugacy(&spec, &win, 64, &dio, &newton).unwrap();
        let chart = ChartSpec::new(0, win, 0.01).unwrap();
        let pu = build_partition(vec![chart]).unwrap();
        let g = glue(vec![local.clone()], pu, &GlueParams::default()).unwrap();
        let fiber = g.correspondence(0.30, 0.46).unwrap();
        assert_eq!(fiber.reference, 0);
        assert_eq!(fiber.shift, [0.0, 0.0]);
        let direct = local.torus_at(0.30, 0.46).unwrap();
        let a = fiber.image_point(1.3, 2.1).to_array();
        let b = direct.eval_array(1.3, 2.1);
        for f in 0..6 {
            assert!((a[f] - b[f]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_perturbation_glues_to_the_identity() {
        let spec = HamiltonianSpec::unperturbed();
        let wa = window(0.22, 0.32, 0.40, 0.52, 3);
        let wb = window(0.28, 0.38, 0.40, 0.52, 3);
        let dio = DiophantineParams::default();
        let newton = NewtonParams {
            tol: 1e-9,
            strict: false,
            ..NewtonParams::default()
        };
        let la = build_local_conjugacy(&spec, &wa, 64, &dio, &newton).unwrap();
        let lb = build_local_conjugacy(&spec, &wb, 64, &dio, &newton).unwrap();
        let pu = build_partition(vec![
            ChartSpec::new(0, wa, 0.005).unwrap(),
            ChartSpec::new(1, wb, 0.005).unwrap(),
        ])
        .unwrap();
        let g = glue(vec![la, lb], pu, &GlueParams::default()).unwrap();
        let fiber = g.correspondence(0.30, 0.46).unwrap();
        assert!(fiber.weights[0] > 0.0 && fiber.weights[1] > 0.0);
        assert_eq!(fiber.shift, [0.0, 0.0]);
        assert!(fiber.identity_distance(12) < 1e-13);
    }

    #[test]
    fn glued_fiber_in_an_overlap_blends_two_charts() {
        let spec = HamiltonianSpec::new(Perturbation::Q1Potential, 1e-3);
        let wa = window(0.22, 0.32, 0.40, 0.52, 3);
        let wb = window(0.28, 0.38, 0.40, 0.52, 3);
        let dio = DiophantineParams::default();
        let newton = NewtonParams {
            tol: 1e-9,
            strict: false,
            ..NewtonParams::default()
        };
        let la = build_local_conjugacy(&spec, &wa, 64, &dio, &newton).unwrap();
        let lb = build_local_conjugacy(&spec, &wb, 64, &dio, &newton).unwrap();
        let pu = build_partition(vec![
            ChartSpec::new(0, wa, 0.005).unwrap(),
            ChartSpec::new(1, wb, 0.005).unwrap(),
        ])
        .unwrap();
        let g = glue(vec![la, lb], pu, &GlueParams::default()).unwrap();
        assert!(!g.checked.is_empty());
        for check in &g.checked {
            assert!(check.deviation <= 1e-6);
            assert!(check.map.c[0].abs() < 1e-3 && check.map.c[1].abs() < 1e-3);
        }
        let fiber = g.correspondence(0.30, 0.46).unwrap();
        assert!(fiber.weights[0] > 0.0 && fiber.weights[1] > 0.0);
        assert_eq!(fiber.offsets.iter().flatten().count(), 2);
        // The blend lands between the two chart parameterizations, so it
        // stays within the measured offset of either one.
        let span = fiber.offsets[1].unwrap();
        let lo = span[0].min(0.0) - 1e-9;
        let hi = span[0].max(0.0) + 1e-9;
        assert!(fiber.shift[0] >= lo && fiber.shift[0] <= hi);
        assert!(fiber.identity_distance(12) < 0.05);
    }
}
