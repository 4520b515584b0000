// Trajectory timing: radial period and azimuth advance measured from raw
// orbit samples, with no quadrature and no spectral machinery. The
// integration tests use this as the independent yardstick for everything
// that claims to know a frequency.

use std::f64::consts::{PI, TAU};

use torus_atlas::geometry::{integrate_every, oscillation_start, HamiltonianSpec, PhasePoint};

/// Period and per-period azimuth advance of one unperturbed orbit.
#[derive(Debug, Clone, Copy)]
pub struct LoopTiming {
    pub period: f64,
    pub advance: f64,
}

impl LoopTiming {
    pub fn omega(&self) -> [f64; 2] {
        [TAU / self.period, self.advance / self.period]
    }
}

/// A phase point with the requested labels, at the upper turning point of
/// the height oscillation.
pub fn start_at(i: f64, e: f64) -> PhasePoint {
    oscillation_start(i, e).expect("labels must be regular")
}

/// Measure period and advance of the unperturbed orbit through `start` by
/// timing successive minima of the height coordinate.
///
/// Minima are bracketed on a coarse sample grid by the sign change of zdot
/// and refined on a cubic Hermite model of zdot whose endpoint slopes are
/// the closed-form acceleration zddot = -(1 - z^2) - 2 z (E - z). The
/// unwrapped azimuth is read at the refined times from a Hermite model as
/// well, with the exact rates phidot = I / (1 - z^2); averaging over all
/// observed loops pushes the measurement error below the integrator's own
/// phase drift.
pub fn measure_timing(start: &PhasePoint, h: f64, loops: usize) -> LoopTiming {
    let spec = HamiltonianSpec::unperturbed();
    let (i_label, e_label) = spec.em_map(start);
    let zddot = |z: f64| -(1.0 - z * z) - 2.0 * z * (e_label - z);
    let phidot = |z: f64| i_label / (1.0 - z * z);

    // Crude initial window; re-sized once the first loops are seen.
    let stride = (0.01 / h).round().max(1.0) as usize;
    let mut t_span = 40.0;
    let mut minima: Vec<f64> = Vec::new();
    let mut advances: Vec<f64> = Vec::new();
    for _ in 0..3 {
        minima.clear();
        advances.clear();
        let n_steps = (t_span / h).round() as usize;
        let traj = integrate_every(&spec, start, h, n_steps, stride).expect("flow stays regular");
        let dt = traj.step;
        let mut prev = traj.samples[0];
        let mut prev_phi = prev.q[1].atan2(prev.q[0]);
        let mut unwrapped = 0.0f64;
        for k in 1..traj.samples.len() {
            let here = traj.samples[k];
            let phi = here.q[1].atan2(here.q[0]);
            let mut dphi = phi - prev_phi;
            if dphi > PI {
                dphi -= TAU;
            } else if dphi < -PI {
                dphi += TAU;
            }
            let prev_unwrapped = unwrapped;
            unwrapped += dphi;
            // zdot changes sign minus to plus exactly at a height minimum.
            let zd0 = prev.p[2];
            let zd1 = here.p[2];
            if zd0 < 0.0 && zd1 >= 0.0 {
                let s = hermite_root(zd0, zddot(prev.q[2]), zd1, zddot(here.q[2]), dt);
                minima.push(dt * (k - 1) as f64 + s * dt);
                advances.push(hermite_value(
                    prev_unwrapped,
                    phidot(prev.q[2]),
                    unwrapped,
                    phidot(here.q[2]),
                    dt,
                    s,
                ));
            }
            prev = here;
            prev_phi = phi;
        }
        if minima.len() >= loops + 1 {
            break;
        }
        let seen = minima.len().max(1) as f64;
        t_span *= (loops + 2) as f64 / seen;
    }
    assert!(
        minima.len() >= 2,
        "no full radial loop observed within the window"
    );
    let last = minima.len().min(loops + 1) - 1;
    LoopTiming {
        period: (minima[last] - minima[0]) / last as f64,
        advance: (advances[last] - advances[0]) / last as f64,
    }
}

/// Cubic Hermite value on [0, dt] at fraction `s`, from endpoint values and
/// slopes.
fn hermite_value(f0: f64, d0: f64, f1: f64, d1: f64, dt: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * f0 + h10 * dt * d0 + h01 * f1 + h11 * dt * d1
}

/// Root fraction of the cubic Hermite interpolant on [0, dt], entered with
/// f0 < 0 <= f1. Bisection brackets, Newton finishes.
fn hermite_root(f0: f64, d0: f64, f1: f64, d1: f64, dt: f64) -> f64 {
    let deriv = |s: f64| {
        let s2 = s * s;
        let g00 = 6.0 * s2 - 6.0 * s;
        let g10 = 3.0 * s2 - 4.0 * s + 1.0;
        let g01 = -6.0 * s2 + 6.0 * s;
        let g11 = 3.0 * s2 - 2.0 * s;
        (g00 * f0 + g10 * dt * d0 + g01 * f1 + g11 * dt * d1) / dt
    };
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    let mut s = f0 / (f0 - f1);
    for _ in 0..60 {
        let v = hermite_value(f0, d0, f1, d1, dt, s);
        if v < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let d = deriv(s) * dt;
        let newton = if d != 0.0 { s - v / d } else { 0.5 * (lo + hi) };
        s = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 {
            break;
        }
    }
    s
}
