//! Radial action, period, and azimuth advance of the unperturbed tori.
//!
//! Over a regular pair (I, E) the motion splits into a radial oscillation of
//! the height z between the turning points z1 and z2, and an azimuthal drift.
//! Three quadratures characterize the torus:
//!
//! * action J = (1/pi) integral of sqrt(f) / (1 - z^2) dz,
//! * period T = 2 integral of dz / sqrt(f),
//! * advance Theta = 2 I integral of dz / ((1 - z^2) sqrt(f)),
//!
//! all over [z1, z2] with f the radial cubic. The frequencies are
//! omega1 = 2 pi / T and omega2 = Theta / T. Each integral is regularized by
//! z = z1 + (z2 - z1) sin^2(psi), which absorbs the square-root turning
//! points; the substituted integrands are smooth and the adaptive panels
//! converge fast.

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fibration::{boundary_energy, ReducedCubic};
use crate::quad::integrate;

/// Absolute tolerance requested from each quadrature.
pub const QUAD_TOL: f64 = 1e-12;

/// The scalar invariants of one unperturbed torus.
#[derive(Debug, Clone, Copy)]
pub struct Invariants {
    pub i: f64,
    pub e: f64,
    /// Radial action J.
    pub action: f64,
    /// Radial period T.
    pub period: f64,
    /// Azimuth advance Theta accumulated over one radial period.
    pub advance: f64,
}

impl Invariants {
    /// Frequencies (omega1, omega2) = (2 pi / T, Theta / T).
    pub fn omega(&self) -> [f64; 2] {
        [TAU / self.period, self.advance / self.period]
    }
}

/// Compute (J, T, Theta) for a regular pair by adaptive quadrature.
pub fn invariants(i: f64, e: f64) -> Result<Invariants> {
    let rc = ReducedCubic::new(i, e)?;
    let [z1, z2, z3] = rc.roots;
    let span = z2 - z1;
    let s2 = 2f64.sqrt();

    // Every factor is expanded in the sin^2/cos^2 barycentric form, e.g.
    // 1 - z = (1 - z1) cos^2 + (1 - z2) sin^2, which stays positive without
    // cancellation even when a turning point touches a pole of the sphere.
    let blend = |lo: f64, hi: f64, s2p: f64, c2p: f64| lo * c2p + hi * s2p;

    let period = 2.0
        * integrate(
            |psi: f64| {
                let (s, c) = psi.sin_cos();
                let (s2p, c2p) = (s * s, c * c);
                s2 / blend(z3 - z1, z3 - z2, s2p, c2p).sqrt()
            },
            0.0,
            PI / 2.0,
            QUAD_TOL,
        )?;

    // When the momentum is zero, or so small that a turning point is
    // indistinguishable from a pole in double precision, the azimuth integral
    // concentrates all of its mass in a boundary layer narrower than one ulp
    // and quadrature cannot see it. The advance is odd in I with a jump at
    // zero; take the one-sided limit: pi for swinging orbits (E < 1), 2 pi
    // for rotating ones.
    let collided = z1 == -1.0 || z2 == 1.0;
    let advance = if collided {
        let mag = if e < 1.0 { PI } else { TAU };
        if i < 0.0 {
            -mag
        } else {
            mag
        }
    } else {
        2.0 * i
            * integrate(
                |psi: f64| {
                    let (s, c) = psi.sin_cos();
                    let (s2p, c2p) = (s * s, c * c);
                    let rho = blend(1.0 + z1, 1.0 + z2, s2p, c2p)
                        * blend(1.0 - z1, 1.0 - z2, s2p, c2p);
                    s2 / (rho * blend(z3 - z1, z3 - z2, s2p, c2p).sqrt())
                },
                0.0,
                PI / 2.0,
                QUAD_TOL,
            )?
    };

    let action = (2.0 * s2 * span * span / PI)
        * integrate(
            |psi: f64| {
                let (s, c) = psi.sin_cos();
                let (s2p, c2p) = (s * s, c * c);
                let rho = blend(1.0 + z1, 1.0 + z2, s2p, c2p)
                    * blend(1.0 - z1, 1.0 - z2, s2p, c2p);
                s2p * c2p * blend(z3 - z1, z3 - z2, s2p, c2p).sqrt() / rho
            },
            0.0,
            PI / 2.0,
            QUAD_TOL,
        )?;

    Ok(Invariants {
        i,
        e,
        action,
        period,
        advance,
    })
}

/// Frequencies alone.
pub fn omega(i: f64, e: f64) -> Result<[f64; 2]> {
    Ok(invariants(i, e)?.omega())
}

/// Gradient of the action with respect to (I, E). These are the closed forms
/// dJ/dI = -Theta / 2 pi and dJ/dE = T / 2 pi; the integration tests confirm
/// them against finite differences of J itself.
pub fn action_gradient(i: f64, e: f64) -> Result<[f64; 2]> {
    let inv = invariants(i, e)?;
    Ok([-inv.advance / TAU, inv.period / TAU])
}

/// Jacobian of (omega1, omega2) with respect to the action pair (I, J),
/// row-major. Derivatives in (I, E) come from Richardson-extrapolated central
/// differences of the quadratures; the change of variables to (I, J) uses
/// dE/dI at fixed J = omega2 and dE/dJ at fixed I = omega1.
pub fn omega_jacobian(i: f64, e: f64) -> Result<[[f64; 2]; 2]> {
    if !(i.abs() > 1e-6) {
        return Err(Error::InvalidArgument(
            "frequency Jacobian is not defined across I = 0".into(),
        ));
    }
    let w = invariants(i, e)?.omega();

    // Keep difference stencils inside the regular region and on one side of
    // I = 0.
    let head = e - boundary_energy(i);
    let h_e = 1e-4f64.min(0.2 * head);
    let h_i = (1e-4 * i.abs().max(1.0)).min(0.25 * i.abs());
    let h_i = h_i.min(0.2 * guard_along_i(i, e));

    let d_i = richardson(|h| omega_diff(i, e, h, 0.0), h_i)?;
    let d_e = richardson(|h| omega_diff(i, e, 0.0, h), h_e)?;

    let mut jac = [[0.0f64; 2]; 2];
    for r in 0..2 {
        jac[r][0] = d_i[r] + d_e[r] * w[1];
        jac[r][1] = d_e[r] * w[0];
    }
    Ok(jac)
}

/// det of `omega_jacobian`: the twist of the frequency map.
pub fn twist(i: f64, e: f64) -> Result<f64> {
    let j = omega_jacobian(i, e)?;
    Ok(j[0][0] * j[1][1] - j[0][1] * j[1][0])
}

/// How far I can move at fixed E before hitting the critical curve.
fn guard_along_i(i: f64, e: f64) -> f64 {
    let mut step = i.abs();
    for _ in 0..40 {
        if boundary_energy(i.abs() + step) < e {
            return step;
        }
        step *= 0.5;
    }
    step
}

fn omega_diff(i: f64, e: f64, h_i: f64, h_e: f64) -> Result<[f64; 2]> {
    let p = invariants(i + h_i, e + h_e)?.omega();
    let m = invariants(i - h_i, e - h_e)?.omega();
    let h = (h_i + h_e) * 2.0;
    Ok([(p[0] - m[0]) / h, (p[1] - m[1]) / h])
}

fn richardson<F>(diff: F, h: f64) -> Result<[f64; 2]>
where
    F: Fn(f64) -> Result<[f64; 2]>,
{
    let full = diff(h)?;
    let half = diff(0.5 * h)?;
    Ok([
        (4.0 * half[0] - full[0]) / 3.0,
        (4.0 * half[1] - full[1]) / 3.0,
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Complete elliptic integral K(m) by the arithmetic-geometric mean;
    /// independent of the quadrature code.
    fn elliptic_k(m: f64) -> f64 {
        let mut a = 1.0f64;
        let mut b = (1.0 - m).sqrt();
        for _ in 0..40 {
            let (a2, b2) = (0.5 * (a + b), (a * b).sqrt());
            a = a2;
            b = b2;
            if (a - b).abs() < 1e-17 {
                break;
            }
        }
        PI / (2.0 * a)
    }

    #[test]
    fn equatorial_swing_period_matches_elliptic_integral() {
        // I = 0, E = 0: the planar swing up to the equator has period
        // 2 K(1/2) in the parameter convention of the AGM.
        let inv = invariants(0.0, 0.0).unwrap();
        assert!((inv.period - 2.0 * elliptic_k(0.5)).abs() < 1e-11);
    }

    #[test]
    fn period_matches_elliptic_form_at_generic_points() {
        // T = 2 sqrt(2) K(k) / sqrt(z3 - z1) with k^2 = (z2 - z1)/(z3 - z1).
        for &(i, e) in &[(0.3, 0.5), (0.55, 0.1), (0.1, -0.8), (0.4, 1.4)] {
            let rc = ReducedCubic::new(i, e).unwrap();
            let [z1, z2, z3] = rc.roots;
            let want = 2.0 * 2f64.sqrt() * elliptic_k((z2 - z1) / (z3 - z1)) / (z3 - z1).sqrt();
            let inv = invariants(i, e).unwrap();
            assert!(
                (inv.period - want).abs() < 1e-11,
                "period mismatch at ({i}, {e}): {} vs {}",
                inv.period,
                want
            );
        }
    }

    #[test]
    fn near_bottom_frequencies_approach_harmonic_values() {
        // Close to the rest point the radial oscillation runs at twice the
        // swing frequency and the azimuth precesses once per radial period.
        let i = 1e-3;
        let e = boundary_energy(i) + 1e-5;
        let w = omega(i, e).unwrap();
        assert!((w[0] - 2.0).abs() < 2e-2, "omega1 = {}", w[0]);
        assert!((w[1] - 1.0).abs() < 2e-2, "omega2 = {}", w[1]);
    }

    #[test]
    fn advance_limits_at_zero_momentum() {
        let swing = invariants(0.0, 0.5).unwrap();
        assert_eq!(swing.advance, PI);
        let rotate = invariants(0.0, 1.5).unwrap();
        assert_eq!(rotate.advance, TAU);
        // The small-I advance tends to the swing limit.
        let near = invariants(1e-4, 0.0).unwrap();
        assert!((near.advance - PI).abs() < 5e-3, "advance {}", near.advance);
        // Odd in I.
        let plus = invariants(0.25, 0.3).unwrap();
        let minus = invariants(-0.25, 0.3).unwrap();
        assert!((plus.advance + minus.advance).abs() < 1e-11);
        assert!((plus.period - minus.period).abs() < 1e-12);
        assert!((plus.action - minus.action).abs() < 1e-12);
    }

    #[test]
    fn action_gradient_agrees_with_differenced_action() {
        let (i, e) = (0.35, 0.4);
        let g = action_gradient(i, e).unwrap();
        let h = 1e-5;
        let fd_e = (invariants(i, e + h).unwrap().action - invariants(i, e - h).unwrap().action)
            / (2.0 * h);
        let fd_i = (invariants(i + h, e).unwrap().action - invariants(i - h, e).unwrap().action)
            / (2.0 * h);
        assert!((g[1] - fd_e).abs() < 1e-8, "dJ/dE {} vs {}", g[1], fd_e);
        assert!((g[0] - fd_i).abs() < 1e-8, "dJ/dI {} vs {}", g[0], fd_i);
    }

    #[test]
    fn twist_is_finite_and_bounded_away_from_zero_on_samples() {
        for &(i, e) in &[(0.2, 0.5), (0.4, 0.0), (0.1, -0.6)] {
            let d = twist(i, e).unwrap();
            assert!(d.is_finite(), "twist {d} at ({i}, {e})");
            assert!(d.abs() > 1e-4, "twist {d} at ({i}, {e})");
        }
    }

    #[test]
    fn jacobian_matches_direct_differences_in_action_coordinates() {
        // Cross-check the chain rule: difference omega along J at fixed I by
        // moving E and rescaling with dJ/dE.
        let (i, e) = (0.3, 0.45);
        let jac = omega_jacobian(i, e).unwrap();
        let h = 1e-5;
        let up = invariants(i, e + h).unwrap();
        let dn = invariants(i, e - h).unwrap();
        let dj = (up.action - dn.action) / (2.0 * h);
        let dw1 = (up.omega()[0] - dn.omega()[0]) / (2.0 * h);
        let dw2 = (up.omega()[1] - dn.omega()[1]) / (2.0 * h);
        // At fixed I, dw/dJ = (dw/dE) / (dJ/dE).
        assert!((jac[0][1] - dw1 / dj).abs() < 1e-5);
        assert!((jac[1][1] - dw2 / dj).abs() < 1e-5);
    }

    #[test]
    fn non_regular_input_is_refused() {
        assert!(invariants(0.0, 1.0).is_err());
        assert!(invariants(0.5, -1.0).is_err());
        assert!(omega_jacobian(0.0, 0.5).is_err());
    }
}
