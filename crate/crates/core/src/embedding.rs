//! Fourier embeddings of unperturbed tori.
//!
//! A torus over a regular pair (I, E) is parameterized by two angles moving
//! linearly at the frequencies (omega1, omega2). The embedding samples one
//! radial period of the flow started at the lower turning point, peels the
//! linear azimuth drift off the integrated azimuth, and closes the remainder
//! into a doubly periodic map. Because the second angle only enters through a
//! rigid rotation, the resulting fields carry second-axis harmonics -1, 0, 1
//! only; the first-axis spectrum decays at the analyticity rate of the torus.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::fourier::Fourier2;
use crate::geometry::{
    from_cylinder, integrate_every, to_cylinder, CylPoint, HamiltonianSpec, PhasePoint,
};
use crate::action_angle::{invariants, Invariants};

/// Largest tolerated ratio of the outer-band coefficient maximum to the
/// overall maximum before an embedding is declared under-resolved.
pub const TAIL_TOL: f64 = 1e-8;

/// Integrator step ceiling used when sampling seed tori.
pub const SAMPLE_STEP: f64 = 1e-3;

/// A doubly periodic map into the six ambient coordinates (q, p).
#[derive(Debug, Clone)]
pub struct TorusEmbedding {
    n: usize,
    pub omega: [f64; 2],
    /// One spectral field per ambient coordinate: q1, q2, q3, p1, p2, p3.
    pub fields: [Fourier2; 6],
}

impl TorusEmbedding {
    pub fn from_fields(omega: [f64; 2], fields: [Fourier2; 6]) -> Self {
        let n = fields[0].n();
        assert!(fields.iter().all(|f| f.n() == n));
        TorusEmbedding { n, omega, fields }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval_array(&self, t1: f64, t2: f64) -> [f64; 6] {
        let mut out = [0.0f64; 6];
        for (o, f) in out.iter_mut().zip(&self.fields) {
            *o = f.eval(t1, t2);
        }
        out
    }

    /// Evaluate without re-checking constraints; embeddings stay on the
    /// manifold to solver accuracy, not to bit accuracy.
    pub fn eval(&self, t1: f64, t2: f64) -> PhasePoint {
        let x = self.eval_array(t1, t2);
        PhasePoint::from_array(&x)
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

    /// Worst outer-band ratio across the six fields.
    pub fn tail_ratio(&self) -> f64 {
        self.fields
            .iter()
            .map(|f| f.tail_ratio())
            .fold(0.0f64, f64::max)
    }

    /// Rigid angle translation of the parameterization.
    pub fn translate(&self, shift: [f64; 2]) -> TorusEmbedding {
        let fields = [
            self.fields[0].translate(shift),
            self.fields[1].translate(shift),
            self.fields[2].translate(shift),
            self.fields[3].translate(shift),
            self.fields[4].translate(shift),
            self.fields[5].translate(shift),
        ];
        TorusEmbedding {
            n: self.n,
            omega: self.omega,
            fields,
        }
    }
}

/// Cylinder samples of one closed radial loop of the unperturbed flow over
/// (i, e), taken at the n grid values of the first angle: azimuth offsets
/// with the secular drift removed, heights, and height momenta.
pub(crate) struct LoopSamples {
    pub us: Vec<f64>,
    pub zs: Vec<f64>,
    pub pzs: Vec<f64>,
    pub inv: Invariants,
}

pub(crate) fn loop_samples(i: f64, e: f64, n: usize) -> Result<LoopSamples> {
    if !n.is_power_of_two() || n < 8 {
        return Err(Error::InvalidArgument(format!(
            "grid size {n} must be a power of two, at least 8"
        )));
    }
    let inv = invariants(i, e)?;
    let spec = HamiltonianSpec::unperturbed();
    let rc = crate::fibration::ReducedCubic::new(i, e)?;
    let start = from_cylinder(&CylPoint {
        phi: 0.0,
        z: rc.roots[0],
        p_phi: i,
        p_z: 0.0,
    })?;

    // One radial period in n * m integrator steps, sampled every m.
    let m = (inv.period / (n as f64 * SAMPLE_STEP)).ceil() as usize;
    let h = inv.period / (n * m) as f64;
    let traj = integrate_every(&spec, &start, h, n * m, m)?;

    // Per-sample cylinder data; the azimuth is unwrapped to a continuous
    // branch before the secular drift is subtracted.
    let mut zs = Vec::with_capacity(n);
    let mut pzs = Vec::with_capacity(n);
    let mut us = Vec::with_capacity(n);
    let mut prev_phi = 0.0f64;
    let mut wind = 0.0f64;
    for (k, s) in traj.samples.iter().take(n).enumerate() {
        let c = to_cylinder(s)?;
        let mut phi = c.phi + wind;
        while phi - prev_phi > std::f64::consts::PI {
            phi -= TAU;
            wind -= TAU;
        }
        while phi - prev_phi < -std::f64::consts::PI {
            phi += TAU;
            wind += TAU;
        }
        prev_phi = phi;
        let t1 = TAU * k as f64 / n as f64;
        zs.push(c.z);
        pzs.push(c.p_z);
        us.push(phi - inv.advance * t1 / TAU);
    }
    Ok(LoopSamples { us, zs, pzs, inv })
}

/// Build the embedding of the unperturbed torus over (i, e) on an n x n grid.
///
/// n must be a power of two. The step divides the radial period exactly so
/// samples land on the angle grid; the azimuth is unwrapped before the linear
/// part is removed. Fails with a grid-size suggestion if the spectrum has not
/// decayed into round-off by the outer band.
pub fn integrable_embedding(i: f64, e: f64, n: usize) -> Result<TorusEmbedding> {
    let LoopSamples { us, zs, pzs, inv } = loop_samples(i, e, n)?;

    // Assemble the six sample grids; the second angle enters only through the
    // azimuth rotation.
    let mut grids: [Vec<f64>; 6] = Default::default();
    for g in grids.iter_mut() {
        g.resize(n * n, 0.0);
    }
    for j1 in 0..n {
        let c0 = CylPoint {
            phi: 0.0,
            z: zs[j1],
            p_phi: i,
            p_z: pzs[j1],
        };
        for j2 in 0..n {
            let t2 = TAU * j2 as f64 / n as f64;
            let x = from_cylinder(&CylPoint {
                phi: us[j1] + t2,
                ..c0
            })?
            .to_array();
            for (f, g) in grids.iter_mut().enumerate() {
                g[j1 * n + j2] = x[f];
            }
        }
    }

    let fields = [
        Fourier2::from_samples(&grids[0], n),
        Fourier2::from_samples(&grids[1], n),
        Fourier2::from_samples(&grids[2], n),
        Fourier2::from_samples(&grids[3], n),
        Fourier2::from_samples(&grids[4], n),
        Fourier2::from_samples(&grids[5], n),
    ];
    let emb = TorusEmbedding::from_fields(inv.omega(), fields);
    let ratio = emb.tail_ratio();
    if ratio > TAIL_TOL {
        return Err(Error::GridTooCoarse {
            ratio,
            tol: TAIL_TOL,
            suggested: 2 * n,
        });
    }
    Ok(emb)
}

/// Invert an embedding near a point: find angles with K(angles) close to x,
/// by Gauss-Newton from `guess`. The guess must be within the basin (about a
/// quarter cell); callers track angles along a flow, which keeps it there.
pub fn locate_angle(emb: &TorusEmbedding, x: &[f64; 6], guess: [f64; 2]) -> Result<[f64; 2]> {
    let mut t = guess;
    for _ in 0..60 {
        let v = emb.eval_array(t[0], t[1]);
        let jac = emb.eval_jacobian(t[0], t[1]);
        let mut r = [0.0f64; 6];
        for k in 0..6 {
            r[k] = v[k] - x[k];
        }
        // Normal equations of the 6 x 2 system.
        let mut a = [[0.0f64; 2]; 2];
        let mut b = [0.0f64; 2];
        for k in 0..6 {
            for u in 0..2 {
                for w in 0..2 {
                    a[u][w] += jac[k][u] * jac[k][w];
                }
                b[u] += jac[k][u] * r[k];
            }
        }
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if det.abs() < 1e-14 {
            return Err(Error::ProjectionFailure {
                t: 0.0,
                detail: "degenerate angle Jacobian while inverting an embedding".into(),
            });
        }
        let d0 = (a[1][1] * b[0] - a[0][1] * b[1]) / det;
        let d1 = (a[0][0] * b[1] - a[1][0] * b[0]) / det;
        t[0] -= d0;
        t[1] -= d1;
        if d0.abs().max(d1.abs()) < 1e-13 {
            return Ok(t);
        }
    }
    Err(Error::ProjectionFailure {
        t: 0.0,
        detail: "angle inversion did not converge".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{dot3, flow};

    #[test]
    fn embedded_points_sit_on_the_constraint_manifold() {
        let emb = integrable_embedding(0.3, 0.5, 64).unwrap();
        for &(a, b) in &[(0.0, 0.0), (1.1, 2.2), (3.9, 5.5), (2.4, 0.7)] {
            let x = emb.eval(a, b);
            let (dq, dp) = x.constraint_defect();
            assert!(dq < 1e-11 && dp < 1e-11, "defect ({dq:.2e}, {dp:.2e})");
        }
    }

    #[test]
    fn embedded_points_have_the_right_momentum_and_energy() {
        let (i, e) = (0.2, 0.4);
        let emb = integrable_embedding(i, e, 64).unwrap();
        let spec = HamiltonianSpec::unperturbed();
        for &(a, b) in &[(0.45, 1.0), (2.0, 4.0), (5.9, 3.3)] {
            let x = emb.eval(a, b);
            let (ic, ec) = spec.em_map(&x);
            assert!((ic - i).abs() < 1e-10, "I off by {:.2e}", (ic - i).abs());
            assert!((ec - e).abs() < 1e-10, "E off by {:.2e}", (ec - e).abs());
        }
    }

    #[test]
    fn second_angle_spectrum_is_three_bands() {
        let emb = integrable_embedding(0.25, 0.3, 64).unwrap();
        for f in &emb.fields {
            let mut outside = 0.0f64;
            let mut inside = 0.0f64;
            for k1 in -32i64..32 {
                for k2 in -32i64..32 {
                    let m = f.coeff(k1, k2).norm();
                    if k2.abs() > 1 {
                        outside = outside.max(m);
                    } else {
                        inside = inside.max(m);
                    }
                }
            }
            assert!(
                outside <= 1e-12 * inside.max(1e-300),
                "outside band {outside:.2e}, inside {inside:.2e}"
            );
        }
    }

    #[test]
    fn parameterization_conjugates_the_flow() {
        let (i, e) = (0.3, 0.5);
        let emb = integrable_embedding(i, e, 64).unwrap();
        let spec = HamiltonianSpec::unperturbed();
        let t0 = [1.234, 0.618];
        let x0 = emb.eval(t0[0], t0[1]);
        let dt = 0.37;
        let moved = flow(&spec, &x0, dt, 1e-4).unwrap();
        let want = emb.eval(t0[0] + emb.omega[0] * dt, t0[1] + emb.omega[1] * dt);
        let (a, b) = (moved.to_array(), want.to_array());
        for k in 0..6 {
            assert!(
                (a[k] - b[k]).abs() < 1e-9,
                "coordinate {k} differs by {:.2e}",
                (a[k] - b[k]).abs()
            );
        }
    }

    #[test]
    fn angle_location_inverts_evaluation() {
        let emb = integrable_embedding(0.22, 0.45, 64).unwrap();
        let t = [2.9, 4.1];
        let x = emb.eval_array(t[0], t[1]);
        let got = locate_angle(&emb, &x, [2.8, 4.2]).unwrap();
        assert!((got[0] - t[0]).abs() < 1e-10);
        assert!((got[1] - t[1]).abs() < 1e-10);
    }

    #[test]
    fn tangent_vectors_match_the_vector_field() {
        // d/dt K(t0 + w t) = X(K): the chain rule ties DK and omega to the
        // equations of motion.
        let emb = integrable_embedding(0.35, 0.6, 64).unwrap();
        let spec = HamiltonianSpec::unperturbed();
        let (a, b) = (0.8, 2.6);
        let jac = emb.eval_jacobian(a, b);
        let v = spec.vector_field(&emb.eval(a, b)).to_array();
        for k in 0..6 {
            let lhs = jac[k][0] * emb.omega[0] + jac[k][1] * emb.omega[1];
            assert!(
                (lhs - v[k]).abs() < 1e-9,
                "component {k}: {lhs} vs {}",
                v[k]
            );
        }
    }

    #[test]
    fn eval_stays_near_sphere_square() {
        let emb = integrable_embedding(0.3, 0.5, 64).unwrap();
        let x = emb.eval(0.5, 0.25);
        assert!((dot3(&x.q, &x.q) - 1.0).abs() < 1e-11);
    }
}
