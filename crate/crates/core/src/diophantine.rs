//! Diophantine frequency checks and frequency-space domains.
//!
//! A frequency pair omega passes when |<omega, k>| >= gamma |k|^(-tau) for
//! every integer pair 0 < |k| <= k_max, with |k| the max norm. The margin is
//! min_k |<omega, k>| |k|^tau - gamma, so acceptance is margin >= 0.
//!
//! The minimization never scans the full lattice. For fixed k2 the weighted
//! combination, as a function of k1, is piecewise: constant weight for
//! |k1| <= |k2| (minimized where the linear form crosses zero), and on each
//! outer side a product whose only interior critical point is a maximum.
//! Minima therefore sit at piece endpoints or next to the zero crossing,
//! a dozen candidates per k2; a brute-force equivalence test keeps this
//! reduction honest.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;

/// Acceptance threshold parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DiophantineParams {
    pub gamma: f64,
    pub tau: f64,
    pub k_max: u32,
}

impl Default for DiophantineParams {
    fn default() -> Self {
        DiophantineParams {
            gamma: 1e-3,
            tau: 2.0,
            k_max: 200,
        }
    }
}

/// min over 0 < |k| <= k_max of |<omega, k>| * |k|^tau.
pub fn weighted_minimum(omega: [f64; 2], tau: f64, k_max: u32) -> f64 {
    let table: Vec<f64> = (0..=k_max).map(|n| (n as f64).powf(tau)).collect();
    weighted_minimum_with(omega, k_max, &table)
}

fn weighted_minimum_with(omega: [f64; 2], k_max: u32, pow_table: &[f64]) -> f64 {
    let [w1, w2] = omega;
    if w1.abs() < 1e-12 {
        // Degenerate direction: the pruning below divides by w1; fall back to
        // the full scan, which only happens for pathological inputs.
        return brute_minimum_with(omega, k_max, pow_table);
    }
    let kk = k_max as i64;
    let mut best = f64::INFINITY;
    let mut consider = |k1: i64, k2: i64| {
        if k1 == 0 && k2 == 0 {
            return;
        }
        let norm = k1.unsigned_abs().max(k2.unsigned_abs());
        if norm == 0 || norm > k_max as u64 {
            return;
        }
        let v = (k1 as f64 * w1 + k2 as f64 * w2).abs() * pow_table[norm as usize];
        if v < best {
            best = v;
        }
    };
    for k2 in 0..=kk {
        // Real zero of the linear form at this k2.
        let root = -(k2 as f64) * w2 / w1;
        let r = root.round() as i64;
        for d in -2..=2 {
            consider(r + d, k2);
        }
        // Piece endpoints: the weight switches at |k1| = |k2| and the band
        // ends at |k1| = k_max.
        for k1 in [-kk, -k2 - 1, -k2, k2, k2 + 1, kk] {
            consider(k1, k2);
        }
    }
    best
}

fn brute_minimum_with(omega: [f64; 2], k_max: u32, pow_table: &[f64]) -> f64 {
    let kk = k_max as i64;
    let mut best = f64::INFINITY;
    for k1 in -kk..=kk {
        for k2 in 0..=kk {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let norm = k1.unsigned_abs().max(k2.unsigned_abs()) as usize;
            let v = (k1 as f64 * omega[0] + k2 as f64 * omega[1]).abs() * pow_table[norm];
            if v < best {
                best = v;
            }
        }
    }
    best
}

/// Full-lattice reference for tests.
pub fn weighted_minimum_brute(omega: [f64; 2], tau: f64, k_max: u32) -> f64 {
    let table: Vec<f64> = (0..=k_max).map(|n| (n as f64).powf(tau)).collect();
    brute_minimum_with(omega, k_max, &table)
}

/// Check one frequency pair; returns (accepted, margin).
pub fn is_diophantine(omega: [f64; 2], params: &DiophantineParams) -> (bool, f64) {
    let margin = weighted_minimum(omega, params.tau, params.k_max) - params.gamma;
    (margin >= 0.0, margin)
}

/// A closed polygon in frequency space with an erosion buffer: membership
/// requires being inside and farther than `erosion` from every edge.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyDomain {
    vertices: Vec<[f64; 2]>,
    erosion: f64,
}

impl FrequencyDomain {
    /// Build from an explicit vertex loop (last vertex connects to the
    /// first). Fails if the eroded interior is empty.
    pub fn from_polygon(vertices: Vec<[f64; 2]>, erosion: f64) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if !(erosion >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "erosion must be nonnegative, got {erosion}"
            )));
        }
        let dom = FrequencyDomain { vertices, erosion };
        if dom.probe_nonempty() {
            Ok(dom)
        } else {
            Err(Error::EmptyDomain { erosion })
        }
    }

    /// Image of an action-window boundary under the frequency map, walked
    /// with `per_edge` samples per rectangle edge.
    pub fn from_action_window(
        i_range: [f64; 2],
        e_range: [f64; 2],
        per_edge: usize,
        erosion: f64,
    ) -> Result<Self> {
        if per_edge < 2 {
            return Err(Error::InvalidArgument(
                "need at least 2 samples per window edge".into(),
            ));
        }
        let m = per_edge;
        let lerp = |a: f64, b: f64, k: usize| a + (b - a) * k as f64 / m as f64;
        let mut pts = Vec::with_capacity(4 * m);
        for k in 0..m {
            pts.push((lerp(i_range[0], i_range[1], k), e_range[0]));
        }
        for k in 0..m {
            pts.push((i_range[1], lerp(e_range[0], e_range[1], k)));
        }
        for k in 0..m {
            pts.push((lerp(i_range[1], i_range[0], k), e_range[1]));
        }
        for k in 0..m {
            pts.push((i_range[0], lerp(e_range[1], e_range[0], k)));
        }
        let vertices = pts
            .into_iter()
            .map(|(i, e)| crate::action_angle::omega(i, e))
            .collect::<Result<Vec<_>>>()?;
        Self::from_polygon(vertices, erosion)
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn erosion(&self) -> f64 {
        self.erosion
    }

    /// Axis-aligned bounding box as (lo, hi).
    pub fn bounding_box(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &self.vertices {
            for a in 0..2 {
                lo[a] = lo[a].min(v[a]);
                hi[a] = hi[a].max(v[a]);
            }
        }
        (lo, hi)
    }

    /// Even-odd point-in-polygon test, ignoring the erosion buffer.
    pub fn inside_polygon(&self, w: [f64; 2]) -> bool {
        let mut inside = false;
        let n = self.vertices.len();
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.vertices[i], self.vertices[j]);
            if (a[1] > w[1]) != (b[1] > w[1]) {
                let x_cross = a[0] + (w[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
                if w[0] < x_cross {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Distance from a point to the polygon boundary.
    pub fn boundary_distance(&self, w: [f64; 2]) -> f64 {
        let n = self.vertices.len();
        let mut best = f64::INFINITY;
        for i in 0..n {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            best = best.min(segment_distance(a, b, w));
        }
        best
    }

    /// Membership with the erosion buffer applied.
    pub fn contains(&self, w: [f64; 2]) -> bool {
        self.inside_polygon(w) && self.boundary_distance(w) > self.erosion
    }

    fn probe_nonempty(&self) -> bool {
        let (lo, hi) = self.bounding_box();
        let m = 48;
        for a in 0..m {
            for b in 0..m {
                let w = [
                    lo[0] + (hi[0] - lo[0]) * (a as f64 + 0.5) / m as f64,
                    lo[1] + (hi[1] - lo[1]) * (b as f64 + 0.5) / m as f64,
                ];
                if self.contains(w) {
                    return true;
                }
            }
        }
        false
    }
}

fn segment_distance(a: [f64; 2], b: [f64; 2], w: [f64; 2]) -> f64 {
    let dx = b[0] - a[0];
    let dy = b[1] - a[1];
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((w[0] - a[0]) * dx + (w[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    };
    let px = a[0] + t * dx - w[0];
    let py = a[1] + t * dy - w[1];
    (px * px + py * py).sqrt()
}

/// Result of a Monte Carlo measure estimate over a frequency domain.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeasureEstimate {
    /// Fraction of in-domain samples that passed the Diophantine check.
    pub fraction: f64,
    /// Binomial standard error sqrt(f (1 - f) / n) over in-domain samples.
    pub std_error: f64,
    /// Total draws attempted in the bounding box.
    pub attempts: u64,
    /// Draws that landed inside the eroded domain.
    pub in_domain: u64,
    /// In-domain draws that passed the check.
    pub accepted: u64,
}

/// Estimate the fraction of the domain passing the Diophantine check, by
/// rejection sampling the bounding box. Draw i is derived from (seed, i), so
/// the result does not depend on how the work is split across threads.
pub fn measure_estimate(
    domain: &FrequencyDomain,
    params: &DiophantineParams,
    attempts: u64,
    seed: u64,
) -> Result<MeasureEstimate> {
    if attempts == 0 {
        return Err(Error::InvalidArgument("attempts must be positive".into()));
    }
    let (lo, hi) = domain.bounding_box();
    let rng = CounterRng::new(seed);
    let table: Vec<f64> = (0..=params.k_max)
        .map(|n| (n as f64).powf(params.tau))
        .collect();

    let (in_domain, accepted) = (0..attempts)
        .into_par_iter()
        .map(|idx| {
            let w = [
                rng.f64_in(2 * idx, lo[0], hi[0]),
                rng.f64_in(2 * idx + 1, lo[1], hi[1]),
            ];
            if !domain.contains(w) {
                return (0u64, 0u64);
            }
            let margin = weighted_minimum_with(w, params.k_max, &table) - params.gamma;
            (1, (margin >= 0.0) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    if in_domain == 0 {
        return Err(Error::EmptyDomain {
            erosion: domain.erosion(),
        });
    }
    let fraction = accepted as f64 / in_domain as f64;
    let std_error = (fraction * (1.0 - fraction) / in_domain as f64).sqrt();
    Ok(MeasureEstimate {
        fraction,
        std_error,
        attempts,
        in_domain,
        accepted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_exact_resonances_and_accepts_the_golden_pair() {
        let params = DiophantineParams {
            gamma: 1e-3,
            tau: 1.5,
            k_max: 50,
        };
        // 2 w1 - 4 w2 = 0: margin is exactly -gamma.
        let (ok, margin) = is_diophantine([1.0, 0.5], &params);
        assert!(!ok);
        assert!((margin + params.gamma).abs() < 1e-15);
        // The golden mean is as far from resonances as it gets.
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        let (ok, margin) = is_diophantine([1.0, phi], &params);
        assert!(ok, "margin {margin}");
    }

    #[test]
    fn margin_scales_along_rays() {
        let params = DiophantineParams {
            gamma: 1e-2,
            tau: 2.0,
            k_max: 80,
        };
        let w = [1.3, 0.7613];
        let base = weighted_minimum(w, params.tau, params.k_max);
        for s in [1.5, 2.0, 10.0] {
            let scaled = weighted_minimum([s * w[0], s * w[1]], params.tau, params.k_max);
            assert!(
                (scaled - s * base).abs() < 1e-12 * s,
                "s = {s}: {scaled} vs {}",
                s * base
            );
        }
    }

    #[test]
    fn smaller_gamma_accepts_a_superset() {
        let loose = DiophantineParams {
            gamma: 1e-4,
            tau: 1.8,
            k_max: 60,
        };
        let tight = DiophantineParams { gamma: 1e-2, ..loose };
        let rng = CounterRng::new(7);
        for idx in 0..200 {
            let w = [rng.f64_in(2 * idx, 0.5, 2.5), rng.f64_in(2 * idx + 1, 0.5, 2.5)];
            let (ok_tight, _) = is_diophantine(w, &tight);
            let (ok_loose, _) = is_diophantine(w, &loose);
            if ok_tight {
                assert!(ok_loose, "tight accepted but loose rejected at {w:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn pruned_minimum_equals_brute_force(
            w1 in prop_oneof![-3.0..-0.1f64, 0.1..3.0f64],
            w2 in -3.0..3.0f64,
            tau in 1.05..2.5f64,
        ) {
            let pruned = weighted_minimum([w1, w2], tau, 24);
            let brute = weighted_minimum_brute([w1, w2], tau, 24);
            prop_assert!(
                (pruned - brute).abs() <= 1e-12 * brute.abs().max(1.0),
                "pruned {pruned} vs brute {brute}"
            );
        }
    }

    #[test]
    fn eroded_unit_square_membership() {
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let dom = FrequencyDomain::from_polygon(square.clone(), 0.1).unwrap();
        assert!(dom.contains([0.5, 0.5]));
        assert!(!dom.contains([0.05, 0.5]), "inside but within the buffer");
        assert!(!dom.contains([1.2, 0.5]));
        assert!((dom.boundary_distance([0.5, 0.5]) - 0.5).abs() < 1e-12);
        // Erosion at half the side length leaves nothing.
        assert!(matches!(
            FrequencyDomain::from_polygon(square, 0.5),
            Err(Error::EmptyDomain { .. })
        ));
    }

    #[test]
    fn eroded_square_area_is_the_shrunken_square() {
        // Area of the 0.1-eroded unit square is 0.8^2 = 0.64; estimate it by
        // counting accepted draws among attempts (box area is 1).
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let dom = FrequencyDomain::from_polygon(square, 0.1).unwrap();
        let rng = CounterRng::new(41);
        let n = 200_000u64;
        let mut hits = 0u64;
        for idx in 0..n {
            let w = [rng.f64_at(2 * idx), rng.f64_at(2 * idx + 1)];
            if dom.contains(w) {
                hits += 1;
            }
        }
        let area = hits as f64 / n as f64;
        assert!((area - 0.64).abs() < 5e-3, "estimated area {area}");
    }

    #[test]
    fn measure_estimate_is_deterministic_and_sane() {
        let square = vec![[0.8, 0.4], [2.0, 0.4], [2.0, 1.6], [0.8, 1.6]];
        let dom = FrequencyDomain::from_polygon(square, 0.05).unwrap();
        let params = DiophantineParams {
            gamma: 5e-3,
            tau: 1.6,
            k_max: 40,
        };
        let a = measure_estimate(&dom, &params, 20_000, 123).unwrap();
        let b = measure_estimate(&dom, &params, 20_000, 123).unwrap();
        assert_eq!(a.accepted, b.accepted);
        assert_eq!(a.in_domain, b.in_domain);
        assert!(a.fraction > 0.0 && a.fraction <= 1.0);
        let expect_se = (a.fraction * (1.0 - a.fraction) / a.in_domain as f64).sqrt();
        assert!((a.std_error - expect_se).abs() < 1e-15);
        // A different seed moves the draw but not by much at this size.
        let c = measure_estimate(&dom, &params, 20_000, 124).unwrap();
        assert!((c.fraction - a.fraction).abs() < 0.05);
    }
}
