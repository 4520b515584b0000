//! Newton correction of invariant tori under perturbation, and interpolation
//! of a solved family into a local conjugacy over a window of label pairs.
//!
//! Tori are stored as six doubly periodic spectral fields, one per ambient
//! coordinate. The cylinder chart would be cheaper (four fields) but pays for
//! it badly here: tori with a turning circle near the south pole sweep the
//! azimuth through almost half a turn in a boundary layer of width rho, and
//! the chart fields need several hundred modes to resolve that whip. The
//! ambient coordinates stay smooth through the polar cap, so the same tori
//! decay into round-off by mode thirty.
//!
//! Each Newton pass writes the invariance defect in an adapted frame: the two
//! tangent columns of the parameterization plus two symplectically normalized
//! partner columns, all four tangent to the constraint manifold. In that
//! frame the linearized equation reduces to a pair of constant-coefficient
//! directional derivatives along the frequency vector, which invert mode by
//! mode, so a pass costs a few dozen transforms plus pointwise linear algebra.
//! Near resonances the mode divisors degenerate; coefficients whose divisor
//! falls under `NewtonParams::divisor_floor` are left untouched instead of
//! being amplified, which keeps the step bounded at the cost of not
//! correcting those modes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action_angle;
use crate::diophantine::{is_diophantine, DiophantineParams};
use crate::embedding::integrable_embedding;
use crate::error::{Error, Result};
use crate::fourier::{signed_freq, Fourier2};
use crate::geometry::{integrate_every, HamiltonianSpec, PhasePoint};
use crate::spline::Spline2;

/// An invariant torus of a perturbed flow, parameterized by six spectral
/// fields over the two internal angles.
#[derive(Debug, Clone)]
pub struct SolvedTorus {
    /// Internal frequency vector.
    pub omega: [f64; 2],
    /// Perturbation size the torus was corrected at.
    pub epsilon: f64,
    /// One field per ambient coordinate: q1, q2, q3, p1, p2, p3.
    pub fields: [Fourier2; 6],
    /// Sup of the invariance defect over the collocation grid.
    pub residual: f64,
    /// Defect sup after every Newton pass, starting with the seed's.
    pub history: Vec<f64>,
}

impl SolvedTorus {
    /// Reassemble a torus from dumped pieces.
    pub fn from_parts(
        omega: [f64; 2],
        epsilon: f64,
        fields: [Fourier2; 6],
        residual: f64,
    ) -> SolvedTorus {
        SolvedTorus {
            omega,
            epsilon,
            fields,
            residual,
            history: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.fields[0].n()
    }

    /// Ambient coordinates at one angle pair.
    pub fn eval_array(&self, t1: f64, t2: f64) -> [f64; 6] {
        let mut out = [0.0f64; 6];
        for (o, f) in out.iter_mut().zip(&self.fields) {
            *o = f.eval(t1, t2);
        }
        out
    }

    /// Phase point at one angle pair. Solved tori sit on the constraint
    /// manifold to solver accuracy, not to bit accuracy, so no re-check.
    pub fn eval(&self, t1: f64, t2: f64) -> PhasePoint {
        PhasePoint::from_array(&self.eval_array(t1, t2))
    }

    /// 6 x 2 angle Jacobian at one point.
    pub fn eval_jacobian(&self, t1: f64, t2: f64) -> [[f64; 2]; 6] {
        let mut out = [[0.0f64; 2]; 6];
        for (row, f) in out.iter_mut().zip(&self.fields) {
            let (_, g) = f.eval_grad(t1, t2);
            *row = g;
        }
        out
    }

    /// Worst outer-band spectral ratio across the six fields.
    pub fn tail_ratio(&self) -> f64 {
        self.fields
            .iter()
            .map(|f| f.tail_ratio())
            .fold(0.0, f64::max)
    }

    /// Largest violation of the sphere and tangency constraints on the grid.
    pub fn constraint_defect(&self) -> f64 {
        let n = self.n();
        let vals: Vec<Vec<f64>> = self.fields.iter().map(|f| f.to_samples()).collect();
        let mut worst = 0.0f64;
        for idx in 0..n * n {
            let q = [vals[0][idx], vals[1][idx], vals[2][idx]];
            let p = [vals[3][idx], vals[4][idx], vals[5][idx]];
            let qq = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
            let qp = q[0] * p[0] + q[1] * p[1] + q[2] * p[2];
            worst = worst.max((qq - 1.0).abs()).max(qp.abs());
        }
        worst
    }
}

/// The unperturbed torus over (i, e); the seed for every Newton solve. Fails
/// with a grid-size suggestion when the spectrum has not decayed into
/// round-off by the outer band.
pub fn integrable_torus(i: f64, e: f64, n: usize) -> Result<SolvedTorus> {
    let emb = integrable_embedding(i, e, n)?;
    let mut torus = SolvedTorus {
        omega: emb.omega,
        epsilon: 0.0,
        fields: emb.fields,
        residual: 0.0,
        history: Vec::new(),
    };
    torus.residual = invariance_defect(&HamiltonianSpec::unperturbed(), &torus)?;
    Ok(torus)
}

/// Knobs for the invariance Newton iteration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NewtonParams {
    /// Grid-sup defect at which the torus counts as solved.
    pub tol: f64,
    /// Iteration budget.
    pub max_iters: usize,
    /// Mode divisors below this size are treated as resonant and skipped.
    pub divisor_floor: f64,
    /// Whether stalling above `tol`, stopping to contract, or diverging is an
    /// error; when false, the best iterate seen is returned with its measured
    /// defect instead. Families solved across resonances want false.
    pub strict: bool,
}

impl Default for NewtonParams {
    fn default() -> Self {
        NewtonParams {
            tol: 1e-10,
            max_iters: 12,
            divisor_floor: 1e-9,
            strict: true,
        }
    }
}

/// Grid quantities shared by the defect measurement and the Newton update.
struct GridState {
    n: usize,
    /// Sup of the defect over the grid.
    res: f64,
    /// Defect components, coordinate-major.
    e: [Vec<f64>; 6],
    /// Tangent frame: l[idx][coordinate][angle].
    l: Vec<[[f64; 2]; 6]>,
    /// Partner frame, coordinate-major: nor[coordinate * 2 + col][idx].
    nor: [Vec<f64>; 12],
    /// Pointwise least-squares solver of [L | N] y = v.
    solver: Vec<[[f64; 6]; 4]>,
    /// Field Jacobian at the torus point.
    dx: Vec<[[f64; 6]; 6]>,
}

/// Standard symplectic rotation of a tangent vector: (dq, dp) -> (dp, -dq).
fn jmap(v: &[f64; 6]) -> [f64; 6] {
    [v[3], v[4], v[5], -v[0], -v[1], -v[2]]
}

/// Canonical pairing of two ambient vectors.
fn pair(u: &[f64; 6], v: &[f64; 6]) -> f64 {
    u[0] * v[3] + u[1] * v[4] + u[2] * v[5] - u[3] * v[0] - u[4] * v[1] - u[5] * v[2]
}

/// Remove the components of `v` that point out of the constraint manifold at
/// (q, p). The two constraint gradients are (q, 0) and (p, q).
fn project_tangent(q: &[f64; 3], p: &[f64; 3], v: &mut [f64; 6]) {
    let qq = q[0] * q[0] + q[1] * q[1] + q[2] * q[2];
    let qp = q[0] * p[0] + q[1] * p[1] + q[2] * p[2];
    let pp = p[0] * p[0] + p[1] * p[1] + p[2] * p[2];
    let g11 = qq;
    let g12 = qp;
    let g22 = pp + qq;
    let det = g11 * g22 - g12 * g12;
    let c1 = q[0] * v[0] + q[1] * v[1] + q[2] * v[2];
    let c2 = p[0] * v[0] + p[1] * v[1] + p[2] * v[2] + q[0] * v[3] + q[1] * v[4] + q[2] * v[5];
    let alpha = (g22 * c1 - g12 * c2) / det;
    let beta = (g11 * c2 - g12 * c1) / det;
    for k in 0..3 {
        v[k] -= alpha * q[k] + beta * p[k];
        v[3 + k] -= beta * q[k];
    }
}

/// Sample the torus and the flow on the collocation grid. With `frames` the
/// adapted frame and its pointwise solver are built as well; without it only
/// the defect fields are filled.
fn sample_state(spec: &HamiltonianSpec, torus: &SolvedTorus, frames: bool) -> Result<GridState> {
    let n = torus.n();
    let w = torus.omega;
    let npts = n * n;
    let vals: Vec<Vec<f64>> = torus.fields.iter().map(|f| f.to_samples()).collect();
    let d1: Vec<Vec<f64>> = torus.fields.iter().map(|f| f.deriv(0).to_samples()).collect();
    let d2: Vec<Vec<f64>> = torus.fields.iter().map(|f| f.deriv(1).to_samples()).collect();

    let mut st = GridState {
        n,
        res: 0.0,
        e: std::array::from_fn(|_| vec![0.0; npts]),
        l: Vec::new(),
        nor: std::array::from_fn(|_| Vec::new()),
        solver: Vec::new(),
        dx: Vec::new(),
    };
    if frames {
        st.l = vec![[[0.0; 2]; 6]; npts];
        for v in st.nor.iter_mut() {
            v.resize(npts, 0.0);
        }
        st.solver = vec![[[0.0; 6]; 4]; npts];
        st.dx = vec![[[0.0; 6]; 6]; npts];
    }

    for idx in 0..npts {
        let q = [vals[0][idx], vals[1][idx], vals[2][idx]];
        let p = [vals[3][idx], vals[4][idx], vals[5][idx]];
        let pt = PhasePoint::new_unchecked(q, p);
        let x = spec.vector_field(&pt).to_array();
        for f in 0..6 {
            let d = x[f] - (w[0] * d1[f][idx] + w[1] * d2[f][idx]);
            st.e[f][idx] = d;
            st.res = st.res.max(d.abs());
        }
        if !frames {
            continue;
        }
        // Tangent columns and their projected symplectic rotations.
        let mut l = [[0.0f64; 2]; 6];
        for f in 0..6 {
            l[f][0] = d1[f][idx];
            l[f][1] = d2[f][idx];
        }
        let cols: [[f64; 6]; 2] =
            std::array::from_fn(|a| std::array::from_fn(|f| l[f][a]));
        let mut n0 = [jmap(&cols[0]), jmap(&cols[1])];
        project_tangent(&q, &p, &mut n0[0]);
        project_tangent(&q, &p, &mut n0[1]);
        // Normalize so the pairing of tangent and partner columns is minus
        // the identity; then remove the partner-partner pairing with a
        // tangent shear. Both conditions are what make the linearized
        // equation triangular in this frame.
        let om = [
            [pair(&cols[0], &n0[0]), pair(&cols[0], &n0[1])],
            [pair(&cols[1], &n0[0]), pair(&cols[1], &n0[1])],
        ];
        let det = om[0][0] * om[1][1] - om[0][1] * om[1][0];
        let scale = om.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
        if det.abs() <= 1e-10 * scale.max(1e-300) * scale {
            return Err(Error::SmallnessViolated(
                "frame normalization became singular during a torus solve".into(),
            ));
        }
        // c = -om^-1
        let c = [
            [-om[1][1] / det, om[0][1] / det],
            [om[1][0] / det, -om[0][0] / det],
        ];
        let n1: [[f64; 6]; 2] = std::array::from_fn(|b| {
            std::array::from_fn(|f| n0[0][f] * c[0][b] + n0[1][f] * c[1][b])
        });
        let s12 = pair(&n1[0], &n1[1]);
        // b = -s0/2 with s0 antisymmetric off-diagonal s12.
        let bsh = [[0.0, -0.5 * s12], [0.5 * s12, 0.0]];
        let nfin: [[f64; 6]; 2] = std::array::from_fn(|b| {
            std::array::from_fn(|f| n1[b][f] + cols[0][f] * bsh[0][b] + cols[1][f] * bsh[1][b])
        });

        // Least-squares solver (F^T F)^-1 F^T for the 6 x 4 frame.
        let fcols = [cols[0], cols[1], nfin[0], nfin[1]];
        let mut ftf = [[0.0f64; 4]; 4];
        for a in 0..4 {
            for b in 0..4 {
                ftf[a][b] = (0..6).map(|f| fcols[a][f] * fcols[b][f]).sum();
            }
        }
        let ftf_inv = inv4(ftf).ok_or_else(|| {
            Error::SmallnessViolated("adapted frame became singular during a torus solve".into())
        })?;
        let mut solver = [[0.0f64; 6]; 4];
        for r in 0..4 {
            for f in 0..6 {
                solver[r][f] = (0..4).map(|k| ftf_inv[r][k] * fcols[k][f]).sum();
            }
        }

        st.l[idx] = l;
        for f in 0..6 {
            st.nor[f * 2][idx] = nfin[0][f];
            st.nor[f * 2 + 1][idx] = nfin[1][f];
        }
        st.solver[idx] = solver;
        st.dx[idx] = spec.vector_field_jacobian(&pt);
    }
    Ok(st)
}

/// Sup over the collocation grid of |X(K) - Dw K|.
pub fn invariance_defect(spec: &HamiltonianSpec, torus: &SolvedTorus) -> Result<f64> {
    Ok(sample_state(spec, torus, false)?.res)
}

/// Solve Dw u = rhs - <rhs> with zero mean on the resolved band, skipping
/// modes whose divisor falls under `floor`, everything outside `kcut`, and
/// the unpaired Nyquist lines. Keeping the corrections inside the inner band
/// makes the iteration a genuine truncated solve: pointwise products alias
/// into the outer third, and correcting modes there would feed the aliases
/// back through their divisors.
fn solve_cohomological(rhs: &[f64], n: usize, w: [f64; 2], floor: f64, kcut: i64) -> Vec<f64> {
    let f = Fourier2::from_samples(rhs, n);
    let mut out = Fourier2::zeros(n);
    for i1 in 0..n {
        let k1 = signed_freq(i1, n);
        for i2 in 0..n {
            let k2 = signed_freq(i2, n);
            if (k1 == 0 && k2 == 0) || k1.abs() > kcut || k2.abs() > kcut {
                continue;
            }
            let kw = k1 as f64 * w[0] + k2 as f64 * w[1];
            if kw.abs() < floor {
                continue;
            }
            let idx = i1 * n + i2;
            out.coeffs_mut()[idx] = f.coeffs()[idx] / Complex64::new(0.0, kw);
        }
    }
    out.to_samples()
}

fn solver_apply(solver: &[[f64; 6]; 4], v: &[f64; 6]) -> [f64; 4] {
    std::array::from_fn(|r| (0..6).map(|f| solver[r][f] * v[f]).sum())
}

/// One Newton pass: decompose the defect in the adapted frame, invert the two
/// directional-derivative equations, add the correction to the fields, and
/// retract the grid back onto the constraint manifold.
fn newton_update(torus: &mut SolvedTorus, st: &GridState, floor: f64) -> Result<()> {
    let n = st.n;
    let w = torus.omega;
    let npts = n * n;
    let kcut = (n as i64) / 3;

    // Defect components in the frame: tangent part a, partner part b.
    let mut a = [vec![0.0f64; npts], vec![0.0f64; npts]];
    let mut b = [vec![0.0f64; npts], vec![0.0f64; npts]];
    for idx in 0..npts {
        let e: [f64; 6] = std::array::from_fn(|f| st.e[f][idx]);
        let ab = solver_apply(&st.solver[idx], &e);
        a[0][idx] = ab[0];
        a[1][idx] = ab[1];
        b[0][idx] = ab[2];
        b[1][idx] = ab[3];
    }

    // Torsion: W = Dw N - DX N projected back on the tangent columns.
    let mut wfield: [Vec<f64>; 12] = std::array::from_fn(|c| {
        Fourier2::from_samples(&st.nor[c], n)
            .dir_deriv(w)
            .to_samples()
    });
    for idx in 0..npts {
        for r in 0..6 {
            for c in 0..2 {
                let dxn: f64 = (0..6).map(|k| st.dx[idx][r][k] * st.nor[k * 2 + c][idx]).sum();
                wfield[r * 2 + c][idx] -= dxn;
            }
        }
    }
    let mut shat =
        [vec![0.0f64; npts], vec![0.0f64; npts], vec![0.0f64; npts], vec![0.0f64; npts]];
    for idx in 0..npts {
        for c in 0..2 {
            let col: [f64; 6] = std::array::from_fn(|f| wfield[f * 2 + c][idx]);
            let y = solver_apply(&st.solver[idx], &col);
            shat[c][idx] = y[0];
            shat[2 + c][idx] = y[1];
        }
    }

    // Zero-mean part of the partner correction.
    let mut eta = [
        solve_cohomological(&b[0], n, w, floor, kcut),
        solve_cohomological(&b[1], n, w, floor, kcut),
    ];

    // The average of the partner correction is the one knob that moves the
    // average tangent defect; the mean torsion decides how.
    let mean = |v: &[f64]| v.iter().sum::<f64>() / npts as f64;
    let sbar = [
        [mean(&shat[0]), mean(&shat[1])],
        [mean(&shat[2]), mean(&shat[3])],
    ];
    let mut rhs0 = [mean(&a[0]), mean(&a[1])];
    for r in 0..2 {
        let coupling = (0..npts)
            .map(|idx| shat[r * 2][idx] * eta[0][idx] + shat[r * 2 + 1][idx] * eta[1][idx])
            .sum::<f64>()
            / npts as f64;
        rhs0[r] -= coupling;
    }
    let dets = sbar[0][0] * sbar[1][1] - sbar[0][1] * sbar[1][0];
    let scale = sbar.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
    if dets.abs() <= 1e-12 * scale.max(1e-300) * scale {
        return Err(Error::SmallnessViolated(format!(
            "mean torsion is singular (det {dets:.3e}); no twist at this frequency"
        )));
    }
    let eta0 = [
        (sbar[1][1] * rhs0[0] - sbar[0][1] * rhs0[1]) / dets,
        (sbar[0][0] * rhs0[1] - sbar[1][0] * rhs0[0]) / dets,
    ];
    for idx in 0..npts {
        eta[0][idx] += eta0[0];
        eta[1][idx] += eta0[1];
    }

    // Tangent correction; its k = 0 coefficient stays pinned to fix the
    // angle origin on the torus.
    let mut xi = [vec![0.0f64; npts], vec![0.0f64; npts]];
    for r in 0..2 {
        let rhs: Vec<f64> = (0..npts)
            .map(|idx| {
                a[r][idx] - shat[r * 2][idx] * eta[0][idx] - shat[r * 2 + 1][idx] * eta[1][idx]
            })
            .collect();
        xi[r] = solve_cohomological(&rhs, n, w, floor, kcut);
    }

    // Assemble the update in ambient components, fold it into the fields,
    // then retract every grid point back onto the manifold; the correction
    // is tangent, so the drift it leaves is second order.
    let mut new_vals: Vec<Vec<f64>> = Vec::with_capacity(6);
    for f in 0..6 {
        let mut samples = torus.fields[f].to_samples();
        for idx in 0..npts {
            samples[idx] += st.l[idx][f][0] * xi[0][idx]
                + st.l[idx][f][1] * xi[1][idx]
                + st.nor[f * 2][idx] * eta[0][idx]
                + st.nor[f * 2 + 1][idx] * eta[1][idx];
        }
        new_vals.push(samples);
    }
    for idx in 0..npts {
        let mut q = [new_vals[0][idx], new_vals[1][idx], new_vals[2][idx]];
        let nq = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt();
        if !(nq > 0.5) {
            return Err(Error::SmallnessViolated(format!(
                "torus update collapsed toward the origin (|q| = {nq:.3e})"
            )));
        }
        for qk in q.iter_mut() {
            *qk /= nq;
        }
        let mut p = [new_vals[3][idx], new_vals[4][idx], new_vals[5][idx]];
        let qp = q[0] * p[0] + q[1] * p[1] + q[2] * p[2];
        for k in 0..3 {
            p[k] -= qp * q[k];
        }
        new_vals[0][idx] = q[0];
        new_vals[1][idx] = q[1];
        new_vals[2][idx] = q[2];
        new_vals[3][idx] = p[0];
        new_vals[4][idx] = p[1];
        new_vals[5][idx] = p[2];
    }
    // Pointwise products alias high modes back into the band; near a strong
    // resonance that feedback loop amplifies instead of decaying. Cutting the
    // outer third after each pass (the usual two-thirds rule) breaks the loop
    // and costs nothing when the grid is generous enough that the torus has
    // no genuine content out there; pick n accordingly.
    for f in 0..6 {
        let mut fld = Fourier2::from_samples(&new_vals[f], n);
        for i1 in 0..n {
            let k1 = signed_freq(i1, n);
            for i2 in 0..n {
                let k2 = signed_freq(i2, n);
                if k1.abs() > kcut || k2.abs() > kcut {
                    fld.coeffs_mut()[i1 * n + i2] = Complex64::new(0.0, 0.0);
                }
            }
        }
        torus.fields[f] = fld;
    }
    Ok(())
}

/// Correct a seed torus into an invariant torus of `spec` at the seed's
/// frequency vector.
///
/// With epsilon = 0 the seed is already the solution up to collocation error
/// and is returned unchanged apart from a freshly measured defect; Newton
/// passes would only shuffle that error around. Divergence, a degenerate
/// frame, or (in strict mode) a stalled iteration all surface as errors
/// rather than as a quietly bad torus.
pub fn solve_invariance(
    spec: &HamiltonianSpec,
    seed: &SolvedTorus,
    params: &NewtonParams,
) -> Result<SolvedTorus> {
    let mut cur = seed.clone();
    cur.epsilon = spec.epsilon;
    cur.history.clear();

    let mut st = sample_state(spec, &cur, spec.epsilon != 0.0)?;
    cur.residual = st.res;
    cur.history.push(st.res);
    if spec.epsilon == 0.0 {
        return Ok(cur);
    }

    let mut best = cur.clone();
    let mut growths = 0usize;
    for _ in 0..params.max_iters {
        if st.res < params.tol {
            return Ok(cur);
        }
        newton_update(&mut cur, &st, params.divisor_floor)?;
        st = sample_state(spec, &cur, true)?;
        cur.residual = st.res;
        cur.history.push(st.res);
        if !st.res.is_finite() || st.res > 1e3 {
            if params.strict {
                return Err(Error::SmallnessViolated(format!(
                    "invariance defect diverged to {:.3e} at epsilon = {:.3e}",
                    st.res, spec.epsilon
                )));
            }
            break;
        }
        let prev = cur.history[cur.history.len() - 2];
        if st.res > 4.0 * prev {
            growths += 1;
            if growths >= 2 {
                if params.strict {
                    return Err(Error::SmallnessViolated(format!(
                        "Newton stopped contracting: defect {:.3e} after {:.3e} at epsilon = {:.3e}",
                        st.res, prev, spec.epsilon
                    )));
                }
                break;
            }
        }
        if st.res < best.residual {
            best = cur.clone();
        }
    }
    if st.res < params.tol {
        return Ok(cur);
    }
    if params.strict {
        Err(Error::SmallnessViolated(format!(
            "Newton stalled at defect {:.3e} (tolerance {:.3e}) after {} passes at epsilon = {:.3e}",
            best.residual, params.tol, params.max_iters, spec.epsilon
        )))
    } else {
        Ok(best)
    }
}

/// Compare the parameterized flow against the integrated one: start at a few
/// angle pairs, advance the angles linearly and the phase point with the
/// symplectic integrator, and report the largest ambient coordinate gap over
/// checkpoints spaced about 0.05 time units apart.
pub fn validate_torus(
    spec: &HamiltonianSpec,
    torus: &SolvedTorus,
    t_end: f64,
    h: f64,
) -> Result<f64> {
    let starts = [[0.0, 0.0], [2.3, 1.1], [4.0, 5.2]];
    let m = (0.05 / h).round().max(1.0) as usize;
    let n_steps = ((t_end / h).round() as usize / m) * m;
    let mut worst = 0.0f64;
    for s in starts {
        let x0 = torus.eval(s[0], s[1]);
        let traj = integrate_every(spec, &x0, h, n_steps, m)?;
        for (k, pt) in traj.samples.iter().enumerate() {
            let t = k as f64 * m as f64 * h;
            let want = torus
                .eval_array(s[0] + torus.omega[0] * t, s[1] + torus.omega[1] * t);
            let got = pt.to_array();
            for c in 0..6 {
                worst = worst.max((got[c] - want[c]).abs());
            }
        }
    }
    Ok(worst)
}

/// Rectangular window of label pairs (I, E) with knot counts per axis.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ActionWindow {
    pub i_range: [f64; 2],
    pub e_range: [f64; 2],
    pub knots: [usize; 2],
}

impl ActionWindow {
    pub fn i_knots(&self) -> Vec<f64> {
        linspace(self.i_range, self.knots[0])
    }

    pub fn e_knots(&self) -> Vec<f64> {
        linspace(self.e_range, self.knots[1])
    }

    pub fn contains(&self, i: f64, e: f64) -> bool {
        i >= self.i_range[0] && i <= self.i_range[1] && e >= self.e_range[0] && e <= self.e_range[1]
    }
}

fn linspace(range: [f64; 2], count: usize) -> Vec<f64> {
    (0..count)
        .map(|k| range[0] + (range[1] - range[0]) * k as f64 / (count - 1) as f64)
        .collect()
}

/// A solved family of tori over a window, splined coefficient-wise in the
/// two labels.
///
/// Knots are solved wholesale, across resonances included, so the spline has
/// support on the full rectangle; evaluation is restricted to label pairs
/// whose frequency vector passes the Diophantine test the family was built
/// with.
#[derive(Debug, Clone)]
pub struct LocalConjugacy {
    pub spec: HamiltonianSpec,
    pub window: ActionWindow,
    pub dio: DiophantineParams,
    pub n: usize,
    pub newton: NewtonParams,
    /// Solved tori at the knots, row-major over (i index, e index).
    pub tori: Vec<SolvedTorus>,
    /// Diophantine verdict of each knot's frequency vector.
    pub accepted: Vec<bool>,
}

/// Solve the invariance equation on every knot of the window.
///
/// Knots whose frequencies fail the Diophantine test are still solved (the
/// divisor floor keeps their steps bounded) but are labeled rejected and the
/// iteration is allowed to stall; accepted knots must converge.
pub fn build_local_conjugacy(
    spec: &HamiltonianSpec,
    window: &ActionWindow,
    n: usize,
    dio: &DiophantineParams,
    newton: &NewtonParams,
) -> Result<LocalConjugacy> {
    let is = window.i_knots();
    let es = window.e_knots();
    if is.len() < 3 || es.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "conjugacy window needs at least 3 knots per axis, got {} x {}",
            is.len(),
            es.len()
        )));
    }
    let cells: Vec<(f64, f64)> = is
        .iter()
        .flat_map(|&i| es.iter().map(move |&e| (i, e)))
        .collect();
    let solved: Result<Vec<(SolvedTorus, bool)>> = cells
        .par_iter()
        .map(|&(i, e)| {
            let w = action_angle::omega(i, e)?;
            let (ok, _) = is_diophantine(w, dio);
            let seed = integrable_torus(i, e, n)?;
            let p = NewtonParams {
                strict: ok && newton.strict,
                ..*newton
            };
            let torus = solve_invariance(spec, &seed, &p).map_err(|err| Error::TorusSolve {
                a1: i,
                a2: e,
                source: Box::new(err),
            })?;
            Ok((torus, ok))
        })
        .collect();
    let (tori, accepted) = solved?.into_iter().unzip();
    Ok(LocalConjugacy {
        spec: *spec,
        window: *window,
        dio: *dio,
        n,
        newton: *newton,
        tori,
        accepted,
    })
}

impl LocalConjugacy {
    /// Invariant torus of the family at one label pair inside the window.
    ///
    /// The pair must pass the family's Diophantine test. The knot spline only
    /// seeds the answer (between knots its invariance defect is interpolation
    /// grade, around 1e-3); the seed is then polished by the Newton stage, so
    /// the returned torus meets the family's own residual tolerance. With no
    /// perturbation the integrable torus is already exact and is returned
    /// directly.
    ///
    /// Spline seeds carry interpolation roughness across all modes, and near
    /// the window edge that roughness can feed the loosely divided high
    /// harmonics faster than the quadratic contraction drains them. When the
    /// polish rejects the spline seed, the unperturbed torus (smooth by
    /// construction, and close enough at small epsilon) gets one retry before
    /// the label is reported unsolvable.
    pub fn torus_at(&self, i: f64, e: f64) -> Result<SolvedTorus> {
        let seed = self.seed_at(i, e)?;
        if self.spec.epsilon == 0.0 {
            return Ok(seed);
        }
        let polish = NewtonParams {
            strict: true,
            ..self.newton
        };
        solve_invariance(&self.spec, &seed, &polish)
            .or_else(|_| {
                let fallback = integrable_torus(i, e, self.n)?;
                solve_invariance(&self.spec, &fallback, &polish)
            })
            .map_err(|err| Error::TorusSolve {
                a1: i,
                a2: e,
                source: Box::new(err),
            })
    }

    /// Coefficient-wise spline of the solved knots, defect measured fresh.
    /// With no perturbation the knots are integrable tori whose closed-form
    /// construction works at any label pair, so the exact torus is returned
    /// instead of its spline.
    pub fn seed_at(&self, i: f64, e: f64) -> Result<SolvedTorus> {
        if !self.window.contains(i, e) {
            return Err(Error::InvalidArgument(format!(
                "label pair ({i}, {e}) is outside the solved window"
            )));
        }
        let w = action_angle::omega(i, e)?;
        let (ok, margin) = is_diophantine(w, &self.dio);
        if !ok {
            return Err(Error::OffDiophantine {
                o1: w[0],
                o2: w[1],
                margin,
            });
        }
        if self.spec.epsilon == 0.0 {
            return integrable_torus(i, e, self.n);
        }
        let is = self.window.i_knots();
        let es = self.window.e_knots();
        let nc = self.n * self.n;
        let mut fields: [Fourier2; 6] = std::array::from_fn(|_| Fourier2::zeros(self.n));
        let mut re = vec![0.0f64; is.len() * es.len()];
        let mut im = vec![0.0f64; is.len() * es.len()];
        for f in 0..6 {
            for idx in 0..nc {
                for (knot, torus) in self.tori.iter().enumerate() {
                    let c = torus.fields[f].coeffs()[idx];
                    re[knot] = c.re;
                    im[knot] = c.im;
                }
                let sr = Spline2::natural(&is, &es, &re)?;
                let si = Spline2::natural(&is, &es, &im)?;
                fields[f].coeffs_mut()[idx] = Complex64::new(sr.eval(i, e), si.eval(i, e));
            }
        }
        let mut torus = SolvedTorus {
            omega: w,
            epsilon: self.spec.epsilon,
            fields,
            residual: 0.0,
            history: Vec::new(),
        };
        torus.residual = invariance_defect(&self.spec, &torus)?;
        Ok(torus)
    }

    /// Knot count along each axis.
    pub fn shape(&self) -> [usize; 2] {
        self.window.knots
    }
}

/// Gauss-Jordan inverse with partial pivoting; None when a pivot vanishes.
fn inv4(mut a: [[f64; 4]; 4]) -> Option<[[f64; 4]; 4]> {
    let mut inv = [[0.0f64; 4]; 4];
    for (r, row) in inv.iter_mut().enumerate() {
        row[r] = 1.0;
    }
    for col in 0..4 {
        let pivot = (col..4).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for k in 0..4 {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for r in 0..4 {
            if r == col {
                continue;
            }
            let f = a[r][col];
            if f == 0.0 {
                continue;
            }
            for k in 0..4 {
                a[r][k] -= f * a[col][k];
                inv[r][k] -= f * inv[col][k];
            }
        }
    }
    Some(inv)
}
