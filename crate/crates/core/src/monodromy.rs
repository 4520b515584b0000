//! Monodromy of the torus bundle along loops of regular values.
//!
//! The azimuth advance Theta is continuous modulo 2 pi across the whole
//! regular set, but only its mod-2 pi class is globally defined: transporting
//! it around a loop that encircles the isolated singular value (0, 1) shifts
//! the continuous branch by 2 pi times the winding number of the loop. That
//! integer is read off by sampling Theta along the loop, refining until
//! consecutive wrapped differences are small, and summing the increments.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::action_angle::invariants;
use crate::error::{Error, Result};

/// Largest accepted wrapped step between consecutive loop samples.
pub const STEP_TOL: f64 = PI / 4.0;

/// Deepest bisection allowed per segment before giving up.
pub const MAX_DEPTH: u32 = 24;

/// Residual allowed between the accumulated advance and a 2 pi multiple.
pub const WINDING_TOL: f64 = 1e-6;

/// Outcome of transporting the advance branch around a closed loop.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Monodromy {
    /// Net branch shift in units of 2 pi.
    pub winding: i64,
    /// Transition matrix [[1, winding], [0, 1]] acting on the homology basis.
    pub matrix: [[i64; 2]; 2],
    /// Number of quadrature evaluations spent along the loop.
    pub samples: usize,
}

/// Advance reduced to [0, 2 pi).
fn wrapped_advance(i: f64, e: f64) -> Result<f64> {
    Ok(invariants(i, e)?.advance.rem_euclid(TAU))
}

/// Difference wrapped into (-pi, pi].
fn wrap_diff(d: f64) -> f64 {
    let mut r = d.rem_euclid(TAU);
    if r > PI {
        r -= TAU;
    }
    r
}

/// Transport the advance branch along the closed polyline `path` of (I, E)
/// vertices (the last vertex connects back to the first). All points the
/// refinement touches must be regular values.
pub fn monodromy_along(path: &[[f64; 2]]) -> Result<Monodromy> {
    if path.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "monodromy loop needs at least 3 vertices, got {}",
            path.len()
        )));
    }
    let mut samples = 0usize;
    let mut total = 0.0f64;
    let mut theta_first = None;
    let mut theta_prev = 0.0f64;
    for k in 0..path.len() {
        let a = path[k];
        let b = path[(k + 1) % path.len()];
        let ta = match theta_first {
            None => {
                let t = wrapped_advance(a[0], a[1])?;
                samples += 1;
                theta_first = Some(t);
                t
            }
            Some(_) => theta_prev,
        };
        let (inc, tb, used) = transport_segment(a, ta, b, 0)?;
        total += inc;
        theta_prev = tb;
        samples += used;
    }
    let winding_f = total / TAU;
    let winding = winding_f.round() as i64;
    if (winding_f - winding as f64).abs() > WINDING_TOL {
        return Err(Error::RootSearch(format!(
            "loop transport accumulated {total:.9}, not a 2 pi multiple"
        )));
    }
    Ok(Monodromy {
        winding,
        matrix: [[1, winding], [0, 1]],
        samples,
    })
}

/// Accumulated advance increment along one segment, bisecting until each
/// wrapped step is below `STEP_TOL`. Returns (increment, advance at b, evals).
fn transport_segment(
    a: [f64; 2],
    theta_a: f64,
    b: [f64; 2],
    depth: u32,
) -> Result<(f64, f64, usize)> {
    let theta_b = wrapped_advance(b[0], b[1])?;
    let d = wrap_diff(theta_b - theta_a);
    if d.abs() < STEP_TOL {
        return Ok((d, theta_b, 1));
    }
    if depth >= MAX_DEPTH {
        let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        return Err(Error::RefinementBudget {
            i: mid[0],
            e: mid[1],
        });
    }
    let mid = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
    let (d1, theta_mid, n1) = transport_segment(a, theta_a, mid, depth + 1)?;
    let (d2, theta_b, n2) = transport_segment(mid, theta_mid, b, depth + 1)?;
    Ok((d1 + d2, theta_b, n1 + n2 + 1))
}

/// A circular loop of regular values around the focus-focus value (0, 1):
/// center (0, 1), radius 1/2, counterclockwise, `n` vertices.
pub fn focus_loop(n: usize) -> Vec<[f64; 2]> {
    (0..n)
        .map(|k| {
            let t = TAU * k as f64 / n as f64;
            [0.5 * t.cos(), 1.0 + 0.5 * t.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loop_around_the_singular_value_shifts_by_one() {
        let m = monodromy_along(&focus_loop(32)).unwrap();
        assert_eq!(m.winding, 1);
        assert_eq!(m.matrix, [[1, 1], [0, 1]]);
    }

    #[test]
    fn reversed_loop_shifts_the_other_way() {
        let mut path = focus_loop(32);
        path.reverse();
        let m = monodromy_along(&path).unwrap();
        assert_eq!(m.winding, -1);
        assert_eq!(m.matrix, [[1, -1], [0, 1]]);
    }

    #[test]
    fn doubled_loop_accumulates_two_shifts() {
        let single = focus_loop(32);
        let mut doubled = single.clone();
        doubled.extend_from_slice(&single);
        let m = monodromy_along(&doubled).unwrap();
        assert_eq!(m.winding, 2);
        assert_eq!(m.matrix, [[1, 2], [0, 1]]);
    }

    #[test]
    fn contractible_loop_is_trivial() {
        let path: Vec<[f64; 2]> = (0..16)
            .map(|k| {
                let t = TAU * k as f64 / 16.0;
                [0.3 + 0.08 * t.cos(), 0.1 * t.sin()]
            })
            .collect();
        let m = monodromy_along(&path).unwrap();
        assert_eq!(m.winding, 0);
        assert_eq!(m.matrix, [[1, 0], [0, 1]]);
    }

    #[test]
    fn loops_touching_nonregular_values_fail() {
        // A triangle dipping below the bottom energy.
        let path = vec![[0.2, 0.5], [0.3, -2.0], [0.4, 0.5]];
        assert!(monodromy_along(&path).is_err());
        assert!(monodromy_along(&[[0.2, 0.5], [0.3, 0.5]]).is_err());
    }
}
