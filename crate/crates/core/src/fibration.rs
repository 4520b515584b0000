//! Classification of momentum-energy pairs and the reduced radial cubic.
//!
//! The map x -> (I, E) = (angular momentum, energy) organizes the unperturbed
//! dynamics. Its image is bounded below by the curve of horizontal circular
//! orbits; above that curve the fibers are invariant 2-tori except at the
//! isolated value (0, 1), the image of the hanging-up equilibrium. The radial
//! motion along a fiber is governed by the cubic
//! f(z) = 2 (E - z) (1 - z^2) - I^2 = 2 (z - z1)(z - z2)(z - z3),
//! with zdot^2 = f(z), so the height oscillates in [z1, z2].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute energy slack used to decide membership on the critical curve.
pub const BOUNDARY_TOL: f64 = 1e-10;

/// What sits above a momentum-energy pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Class {
    /// An invariant 2-torus.
    Regular,
    /// The bottom rest point, image (0, -1).
    StableEquilibrium,
    /// The top rest point, image (0, 1); an isolated singular value.
    FocusFocus,
    /// A horizontal circular orbit on the critical curve.
    Boundary,
    /// No orbit attains this pair.
    Exterior,
}

impl std::fmt::Display for Class {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Class::Regular => "regular",
            Class::StableEquilibrium => "stable-equilibrium",
            Class::FocusFocus => "focus-focus",
            Class::Boundary => "boundary",
            Class::Exterior => "exterior",
        };
        f.write_str(s)
    }
}

/// Height of the circular orbit with angular momentum |I|, in (-1, 0).
///
/// Along the critical curve, parameterized by that height z,
/// I^2 = -(1 - z^2)^2 / z and E = (3 z^2 - 1) / (2 z); I^2 is strictly
/// increasing in z, so the height is found by bisection.
pub fn boundary_height(i: f64) -> f64 {
    let target = i * i;
    if target == 0.0 {
        return -1.0;
    }
    let g = |z: f64| -(1.0 - z * z).powi(2) / z - target;
    let mut lo = -1.0;
    let mut hi = -1e-12;
    // g(lo) = -target < 0 and g -> +inf at 0^-.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Least energy compatible with angular momentum `i`: the critical curve.
pub fn boundary_energy(i: f64) -> f64 {
    if i == 0.0 {
        return -1.0;
    }
    let z = boundary_height(i);
    (3.0 * z * z - 1.0) / (2.0 * z)
}

/// Classify a momentum-energy pair. The two equilibrium images win over the
/// sets they touch: (0, -1) is reported as the rest point rather than as a
/// curve endpoint, and (0, 1) as focus-focus rather than as a regular value.
pub fn classify(i: f64, e: f64) -> Class {
    let tol = BOUNDARY_TOL;
    if i.abs() <= tol && (e + 1.0).abs() <= tol {
        return Class::StableEquilibrium;
    }
    if i.abs() <= tol && (e - 1.0).abs() <= tol {
        return Class::FocusFocus;
    }
    let eb = boundary_energy(i);
    if (e - eb).abs() <= tol {
        return Class::Boundary;
    }
    if e > eb {
        Class::Regular
    } else {
        Class::Exterior
    }
}

/// The radial cubic of a regular pair, with its roots z1 < z2 < z3.
#[derive(Debug, Clone, Copy)]
pub struct ReducedCubic {
    pub i: f64,
    pub e: f64,
    pub roots: [f64; 3],
}

impl ReducedCubic {
    /// Build the cubic for a regular pair; any other class is an error.
    pub fn new(i: f64, e: f64) -> Result<Self> {
        let class = classify(i, e);
        if class != Class::Regular {
            return Err(Error::NonRegular {
                i,
                e,
                class: class.to_string(),
            });
        }
        let roots = cubic_roots(i, e)?;
        Ok(ReducedCubic { i, e, roots })
    }

    /// f(z) = 2 (E - z)(1 - z^2) - I^2.
    pub fn eval(&self, z: f64) -> f64 {
        2.0 * (self.e - z) * (1.0 - z * z) - self.i * self.i
    }

    /// f'(z).
    pub fn deriv(&self, z: f64) -> f64 {
        -2.0 * (1.0 - z * z) - 4.0 * z * (self.e - z)
    }

    /// The oscillation interval [z1, z2] of the height coordinate.
    pub fn turning_points(&self) -> (f64, f64) {
        (self.roots[0], self.roots[1])
    }
}

/// Roots of z^3 - E z^2 - z + (E - I^2/2), guaranteed all real over the
/// regular region; solved by the trigonometric formula and polished by Newton.
fn cubic_roots(i: f64, e: f64) -> Result<[f64; 3]> {
    if i == 0.0 {
        // The cubic factors as 2 (E - z)(1 - z)(1 + z); writing the roots
        // directly keeps z1 = -1 exact, which downstream integrands rely on.
        let mut roots = [-1.0, e, 1.0];
        roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
        return Ok(roots);
    }
    let a = -e;
    let c = e - 0.5 * i * i;
    // Depress with z = t + e/3.
    let p = -1.0 - e * e / 3.0;
    let q = 2.0 * a.powi(3) / 27.0 - a * (-1.0) / 3.0 + c;
    let m = 2.0 * (-p / 3.0).sqrt();
    let arg = (3.0 * q / (p * m)).clamp(-1.0, 1.0);
    let phase = arg.acos() / 3.0;
    let mut roots = [0.0f64; 3];
    for (k, r) in roots.iter_mut().enumerate() {
        let t = m * (phase - std::f64::consts::TAU * k as f64 / 3.0).cos();
        *r = t + e / 3.0;
    }
    // Two Newton passes tighten each root to full precision.
    let f = |z: f64| 2.0 * (e - z) * (1.0 - z * z) - i * i;
    let fd = |z: f64| -2.0 * (1.0 - z * z) - 4.0 * z * (e - z);
    for r in roots.iter_mut() {
        for _ in 0..2 {
            let d = fd(*r);
            if d.abs() > 1e-14 {
                *r -= f(*r) / d;
            }
        }
    }
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    // The turning points always lie in [-1, 1] (f(+-1) = -I^2 <= 0); rounding
    // can push a root a few ulps past a pole, which downstream integrands
    // cannot tolerate.
    roots[0] = roots[0].max(-1.0);
    roots[1] = roots[1].clamp(-1.0, 1.0);
    if !(roots[0] < roots[1] && roots[1] < roots[2]) {
        return Err(Error::RootSearch(format!(
            "radial cubic roots failed to separate at I = {i}, E = {e}: {roots:?}"
        )));
    }
    Ok(roots)
}
