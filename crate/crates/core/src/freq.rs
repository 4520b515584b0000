//! Frequency extraction from trajectories, the cross-check oracle for the
//! quadrature frequency map and for solved tori.
//!
//! The estimator is deliberately independent of everything it checks: take
//! the longest power-of-two prefix of a uniformly sampled signal, Hann
//! window it, locate spectral peaks, then polish each peak by maximizing the
//! windowed correlation |C(w)| = |sum_k w_k x_k exp(-i w t_k)| as a function
//! of the continuous frequency. On quasi-periodic input the polish lands far
//! inside one FFT bin, which is what makes six-digit relative checks against
//! quadrature frequencies possible on a few hundred time units of data.
//!
//! Real observables carry every line twice, at +w and -w with equal weight.
//! The peak picker therefore blocks out both mirror bins once a line is
//! claimed, and reports the positive twin. Closely spaced lines inside one
//! window lobe of each other are not separable by this scheme; the tori
//! here never produce them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::fourier::{fft, signed_freq};
use crate::geometry::Trajectory;

/// Smallest usable prefix length.
const MIN_SAMPLES: usize = 1 << 12;

/// Peaks are significant only this far above the carrier scale; below it
/// they are indistinguishable from double-precision leakage noise.
const SIGNIFICANCE: f64 = 1e-9;

/// Scalar or planar signal read off a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    /// Vertical coordinate q3; oscillates at the first frequency.
    Height,
    /// q1 + i q2; winds at the azimuthal frequency.
    Azimuth,
}

/// Extracted spectral lines, strongest first.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    /// (frequency, amplitude) per line, sorted by amplitude.
    pub frequencies: Vec<(f64, f64)>,
    /// Power-of-two prefix length actually analyzed.
    pub window_len: usize,
    /// Largest distance any polish moved from its three-point seed, a proxy
    /// for the remaining leakage error.
    pub error_estimate: f64,
}

impl FrequencyEstimate {
    /// Frequency of the strongest line.
    pub fn dominant(&self) -> f64 {
        self.frequencies[0].0
    }
}

/// Read one observable along a trajectory as a complex series.
pub fn observable_series(traj: &Trajectory, obs: Observable) -> Vec<Complex64> {
    traj.samples
        .iter()
        .map(|pt| match obs {
            Observable::Height => Complex64::new(pt.q[2], 0.0),
            Observable::Azimuth => Complex64::new(pt.q[0], pt.q[1]),
        })
        .collect()
}

/// Extract the strongest `n_freq` lines of one observable of a trajectory.
pub fn extract_frequencies(
    traj: &Trajectory,
    obs: Observable,
    n_freq: usize,
) -> Result<FrequencyEstimate> {
    let series = observable_series(traj, obs);
    extract_from_samples(&series, traj.step, n_freq)
}

/// Extract the strongest `n_freq` lines from a uniformly sampled complex
/// series with spacing `step`.
///
/// Only the longest power-of-two prefix is analyzed. A constant series, or
/// one whose oscillating part sits below the significance floor, is refused
/// rather than reported as a spurious line.
pub fn extract_from_samples(
    samples: &[Complex64],
    step: f64,
    n_freq: usize,
) -> Result<FrequencyEstimate> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "sample spacing must be positive, got {step}"
        )));
    }
    if n_freq == 0 {
        return Err(Error::InvalidArgument("asked for zero lines".into()));
    }
    let m = samples.len().next_power_of_two() >> usize::from(!samples.len().is_power_of_two());
    if m < MIN_SAMPLES {
        return Err(Error::SignalUnusable(format!(
            "needs a power-of-two prefix of at least {MIN_SAMPLES} samples, have {}",
            samples.len()
        )));
    }

    // Hann-window the prefix and remove the weighted mean so the carrier's
    // DC line cannot mask a genuine low line next to bin zero.
    let window: Vec<f64> = (0..m)
        .map(|k| 0.5 * (1.0 - (TAU * k as f64 / m as f64).cos()))
        .collect();
    let wsum: f64 = window.iter().sum();
    let mut mean = Complex64::new(0.0, 0.0);
    for (w, x) in window.iter().zip(samples) {
        mean += w * x;
    }
    mean /= wsum;
    let carrier = samples[..m]
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.norm()));
    let windowed: Vec<Complex64> = window
        .iter()
        .zip(samples)
        .map(|(w, x)| w * (x - mean))
        .collect();

    let mut spectrum = windowed.clone();
    fft(&mut spectrum, false);
    let mags: Vec<f64> = spectrum.iter().map(|c| c.norm()).collect();

    let floor = SIGNIFICANCE * wsum * carrier.max(f64::MIN_POSITIVE);
    let bin = TAU / (m as f64 * step);
    let mut blocked = vec![false; m];
    // The mean removal empties bin zero but its lobe still straddles the
    // neighbors; none of them may claim a line.
    blocked[0] = true;
    blocked[1] = true;
    blocked[m - 1] = true;

    let mut lines: Vec<(f64, f64)> = Vec::new();
    let mut error_estimate = 0.0f64;
    while lines.len() < n_freq {
        let mut best: Option<usize> = None;
        for j in 0..m {
            if blocked[j] {
                continue;
            }
            let prev = mags[(j + m - 1) % m];
            let next = mags[(j + 1) % m];
            if mags[j] < prev || mags[j] < next {
                continue;
            }
            if best.map_or(true, |b| mags[j] > mags[b]) {
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        if mags[j] < floor {
            break;
        }
        let w0 = signed_freq(j, m) as f64 * bin;
        let seed = w0 + three_point_offset(&mags, j, m) * bin;
        let refined = maximize_correlation(&windowed, step, seed, bin);
        error_estimate = error_estimate.max((refined - seed).abs());
        let amp = correlation(&windowed, step, refined).norm() / wsum;
        // Prefer the positive twin of a real signal's mirrored pair.
        let (freq, amp) = if refined < 0.0 {
            let twin = -refined;
            let twin_amp = correlation(&windowed, step, twin).norm() / wsum;
            if (twin_amp - amp).abs() <= 1e-6 * amp {
                (twin, twin_amp)
            } else {
                (refined, amp)
            }
        } else {
            (refined, amp)
        };
        lines.push((freq, amp));
        block_near(&mut blocked, refined, bin, m);
        block_near(&mut blocked, -refined, bin, m);
    }

    if lines.is_empty() {
        return Err(Error::SignalUnusable(
            "no spectral line above the significance floor".into(),
        ));
    }
    lines.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(FrequencyEstimate {
        frequencies: lines,
        window_len: m,
        error_estimate,
    })
}

/// Sub-bin peak offset from a log-parabola through three magnitudes.
fn three_point_offset(mags: &[f64], j: usize, m: usize) -> f64 {
    let lm = mags[(j + m - 1) % m].max(f64::MIN_POSITIVE).ln();
    let l0 = mags[j].max(f64::MIN_POSITIVE).ln();
    let lp = mags[(j + 1) % m].max(f64::MIN_POSITIVE).ln();
    let denom = lm - 2.0 * l0 + lp;
    if denom == 0.0 {
        return 0.0;
    }
    let d = 0.5 * (lm - lp) / denom;
    d.clamp(-0.5, 0.5)
}

/// Windowed correlation C(w) = sum_k x_k exp(-i w t_k) of the already
/// windowed series.
fn correlation(windowed: &[Complex64], step: f64, w: f64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, x) in windowed.iter().enumerate() {
        let phase = -w * step * k as f64;
        acc += x * Complex64::new(phase.cos(), phase.sin());
    }
    acc
}

/// Golden-section maximization of |C(w)| around a seed, one bin wide.
fn maximize_correlation(windowed: &[Complex64], step: f64, seed: f64, bin: f64) -> f64 {
    let inv_phi = 0.618_033_988_749_894_9;
    let mut lo = seed - bin;
    let mut hi = seed + bin;
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = correlation(windowed, step, a).norm_sqr();
    let mut fb = correlation(windowed, step, b).norm_sqr();
    for _ in 0..64 {
        if fa < fb {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = correlation(windowed, step, b).norm_sqr();
        } else {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = correlation(windowed, step, a).norm_sqr();
        }
        if hi - lo < 1e-13 * bin.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Block the peak-picker bins within three bins of a claimed frequency.
fn block_near(blocked: &mut [bool], w: f64, bin: f64, m: usize) {
    let center = (w / bin).round() as i64;
    for d in -3..=3 {
        let idx = (center + d).rem_euclid(m as i64) as usize;
        blocked[idx] = true;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action_angle;
    use crate::embedding::integrable_embedding;
    use crate::geometry::{integrate_every, HamiltonianSpec};

    fn two_tone(count: usize, step: f64, t0: f64) -> Vec<Complex64> {
        (0..count)
            .map(|k| {
                let t = t0 + step * k as f64;
                Complex64::new((1.7 * t).cos() + 0.3 * (2.9 * t).cos(), 0.0)
            })
            .collect()
    }

    #[test]
    fn two_tone_signal_is_recovered_to_seven_digits() {
        let step = 500.0 / 8192.0;
        let est = extract_from_samples(&two_tone(8192, step, 0.0), step, 2).unwrap();
        assert_eq!(est.window_len, 8192);
        assert_eq!(est.frequencies.len(), 2);
        let (f1, a1) = est.frequencies[0];
        let (f2, a2) = est.frequencies[1];
        assert!((f1 - 1.7).abs() < 1e-7, "f1 = {f1}");
        assert!((f2 - 2.9).abs() < 1e-7, "f2 = {f2}");
        assert!(a1 > a2);
        // Each real cosine splits evenly between its two mirror lines.
        assert!((a1 - 0.5).abs() < 1e-3, "a1 = {a1}");
        assert!((a2 - 0.15).abs() < 1e-3, "a2 = {a2}");
    }

    #[test]
    fn time_shift_leaves_frequencies_unchanged() {
        let step = 500.0 / 8192.0;
        let base = extract_from_samples(&two_tone(8192, step, 0.0), step, 2).unwrap();
        let moved = extract_from_samples(&two_tone(8192, step, 37.3), step, 2).unwrap();
        for (a, b) in base.frequencies.iter().zip(&moved.frequencies) {
            assert!((a.0 - b.0).abs() < 1e-8);
        }
    }

    #[test]
    fn doubling_the_window_sharpens_the_estimate() {
        // Short enough that leakage, not roundoff, dominates the error.
        let step = 0.05;
        let err = |count: usize| {
            let est = extract_from_samples(&two_tone(count, step, 0.0), step, 2).unwrap();
            let mut worst = 0.0f64;
            for (f, _) in &est.frequencies {
                let target = if (f - 1.7).abs() < 0.5 { 1.7 } else { 2.9 };
                worst = worst.max((f - target).abs());
            }
            worst
        };
        let coarse = err(4096);
        let fine = err(8192);
        assert!(
            fine <= coarse / 4.0,
            "window doubling only improved {coarse:.3e} to {fine:.3e}"
        );
    }

    #[test]
    fn constant_signal_is_flagged() {
        let flat = vec![Complex64::new(0.7, 0.0); 8192];
        match extract_from_samples(&flat, 0.05, 1) {
            Err(Error::SignalUnusable(_)) => {}
            other => panic!("expected an unusable-signal error, got {other:?}"),
        }
    }

    #[test]
    fn short_input_is_refused() {
        let sig = two_tone(1000, 0.05, 0.0);
        assert!(matches!(
            extract_from_samples(&sig, 0.05, 1),
            Err(Error::SignalUnusable(_))
        ));
    }

    #[test]
    fn pendulum_lines_match_the_quadrature_frequencies() {
        let spec = HamiltonianSpec::unperturbed();
        let start = integrable_embedding(0.2, 0.5, 64).unwrap().eval(0.0, 0.0);
        // 500 time units at the integrator's accurate step, thinned to a
        // power-of-two-friendly series.
        let traj = integrate_every(&spec, &start, 1e-3, 500_000, 8).unwrap();
        let w = action_angle::omega(0.2, 0.5).unwrap();
        let height = extract_frequencies(&traj, Observable::Height, 1).unwrap();
        assert!(
            (height.dominant() - w[0]).abs() / w[0] < 1e-6,
            "height line {} vs quadrature {}",
            height.dominant(),
            w[0]
        );
        let azimuth = extract_frequencies(&traj, Observable::Azimuth, 1).unwrap();
        assert!(
            (azimuth.dominant() - w[1]).abs() / w[1] < 1e-6,
            "azimuth line {} vs quadrature {}",
            azimuth.dominant(),
            w[1]
        );
    }
}
