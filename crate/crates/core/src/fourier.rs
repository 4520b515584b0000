//! Radix-2 FFT and double-periodic Fourier fields on N x N grids.
//!
//! A `Fourier2` holds the coefficients c_k of a real function on the 2-torus,
//! f(t) = sum over k of c_k * exp(i <k, t>), with k ranging over the centered
//! band [-N/2, N/2). Grids are uniform, t_j = 2*pi*j/N, and N is a power of two.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// In-place radix-2 FFT. Forward computes X_j = sum x_m exp(-2i pi jm/n);
/// inverse applies the conjugate kernel and divides by n.
pub fn fft(buf: &mut [Complex64], inverse: bool) {
    let n = buf.len();
    assert!(n.is_power_of_two(), "fft length {n} is not a power of two");
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            buf.swap(i, j);
        }
    }
    let sign = if inverse { 1.0 } else { -1.0 };
    let mut len = 2;
    while len <= n {
        let ang = sign * std::f64::consts::TAU / len as f64;
        let wl = Complex64::new(ang.cos(), ang.sin());
        let mut i = 0;
        while i < n {
            let mut w = Complex64::new(1.0, 0.0);
            for k in 0..len / 2 {
                let u = buf[i + k];
                let v = buf[i + k + len / 2] * w;
                buf[i + k] = u + v;
                buf[i + k + len / 2] = u - v;
                w *= wl;
            }
            i += len;
        }
        len <<= 1;
    }
    if inverse {
        let scale = 1.0 / n as f64;
        for x in buf.iter_mut() {
            *x *= scale;
        }
    }
}

/// Signed frequency of storage index `idx` on a length-`n` grid.
#[inline]
pub fn signed_freq(idx: usize, n: usize) -> i64 {
    if idx < n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

/// Fourier coefficients of a real function on the 2-torus.
#[derive(Debug, Clone)]
pub struct Fourier2 {
    n: usize,
    /// c[k1_idx * n + k2_idx]
    c: Vec<Complex64>,
}

impl Fourier2 {
    pub fn zeros(n: usize) -> Self {
        assert!(n.is_power_of_two() && n >= 4);
        Fourier2 {
            n,
            c: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.c
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.c
    }

    /// Coefficient at signed frequencies (k1, k2); zero outside the band.
    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let h = self.n as i64 / 2;
        if k1 < -h || k1 >= h || k2 < -h || k2 >= h {
            return Complex64::new(0.0, 0.0);
        }
        let i1 = k1.rem_euclid(self.n as i64) as usize;
        let i2 = k2.rem_euclid(self.n as i64) as usize;
        self.c[i1 * self.n + i2]
    }

    /// Transform row-major samples s[j1*n + j2] into coefficients.
    pub fn from_samples(samples: &[f64], n: usize) -> Self {
        assert_eq!(samples.len(), n * n);
        let mut c: Vec<Complex64> = samples.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        fft2(&mut c, n, false);
        let scale = 1.0 / (n * n) as f64;
        for x in c.iter_mut() {
            *x *= scale;
        }
        Fourier2 { n, c }
    }

    /// Inverse transform back to grid samples (real parts; imaginary parts of a
    /// Hermitian-symmetric field cancel to round-off).
    pub fn to_samples(&self) -> Vec<f64> {
        let mut buf = self.c.clone();
        fft2(&mut buf, self.n, true);
        // fft2 inverse already divides by n per axis; undo the 1/n^2 from the
        // forward normalization by multiplying back.
        let scale = (self.n * self.n) as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }

    /// Evaluate at an arbitrary angle pair.
    pub fn eval(&self, t1: f64, t2: f64) -> f64 {
        let n = self.n;
        let e1 = phase_table(n, t1);
        let e2 = phase_table(n, t2);
        let mut acc = Complex64::new(0.0, 0.0);
        for i1 in 0..n {
            let mut row = Complex64::new(0.0, 0.0);
            let base = i1 * n;
            for i2 in 0..n {
                row += self.c[base + i2] * e2[i2];
            }
            acc += row * e1[i1];
        }
        acc.re
    }

    /// Evaluate the function and its angle gradient at one point.
    pub fn eval_grad(&self, t1: f64, t2: f64) -> (f64, [f64; 2]) {
        let n = self.n;
        let e1 = phase_table(n, t1);
        let e2 = phase_table(n, t2);
        let mut f = Complex64::new(0.0, 0.0);
        let mut d1 = Complex64::new(0.0, 0.0);
        let mut d2 = Complex64::new(0.0, 0.0);
        for i1 in 0..n {
            let k1 = signed_freq(i1, n) as f64;
            let mut row = Complex64::new(0.0, 0.0);
            let mut rowk = Complex64::new(0.0, 0.0);
            let base = i1 * n;
            for i2 in 0..n {
                let k2 = signed_freq(i2, n) as f64;
                let term = self.c[base + i2] * e2[i2];
                row += term;
                rowk += term * k2;
            }
            let ph = e1[i1];
            f += row * ph;
            d1 += row * ph * k1;
            d2 += rowk * ph;
        }
        // d/dt of exp(i k t) brings down i k; take real parts of i*(...).
        (f.re, [-d1.im, -d2.im])
    }

    /// Partial derivative along axis 0 or 1 (Nyquist row/column dropped).
    pub fn deriv(&self, axis: usize) -> Fourier2 {
        let n = self.n;
        let mut out = self.clone();
        for i1 in 0..n {
            for i2 in 0..n {
                let k = if axis == 0 {
                    signed_freq(i1, n)
                } else {
                    signed_freq(i2, n)
                };
                let idx = i1 * n + i2;
                // The -N/2 mode has no symmetric partner; zero it for odd operators.
                if k == -(n as i64) / 2 {
                    out.c[idx] = Complex64::new(0.0, 0.0);
                } else {
                    out.c[idx] = self.c[idx] * Complex64::new(0.0, k as f64);
                }
            }
        }
        out
    }

    /// Directional derivative w . d/dt as a new field.
    pub fn dir_deriv(&self, w: [f64; 2]) -> Fourier2 {
        let n = self.n;
        let mut out = self.clone();
        for i1 in 0..n {
            let k1 = signed_freq(i1, n);
            for i2 in 0..n {
                let k2 = signed_freq(i2, n);
                let idx = i1 * n + i2;
                if k1 == -(n as i64) / 2 || k2 == -(n as i64) / 2 {
                    out.c[idx] = Complex64::new(0.0, 0.0);
                } else {
                    let kw = k1 as f64 * w[0] + k2 as f64 * w[1];
                    out.c[idx] = self.c[idx] * Complex64::new(0.0, kw);
                }
            }
        }
        out
    }

    /// Rigid translation: t -> t + shift, i.e. c_k *= exp(i <k, shift>).
    pub fn translate(&self, shift: [f64; 2]) -> Fourier2 {
        let n = self.n;
        let mut out = self.clone();
        for i1 in 0..n {
            let k1 = signed_freq(i1, n) as f64;
            for i2 in 0..n {
                let k2 = signed_freq(i2, n) as f64;
                let ang = k1 * shift[0] + k2 * shift[1];
                out.c[i1 * n + i2] = self.c[i1 * n + i2] * Complex64::new(ang.cos(), ang.sin());
            }
        }
        out
    }

    /// max |c_k| over the outer band |k|_inf > n/4, relative to the overall max.
    pub fn tail_ratio(&self) -> f64 {
        let n = self.n;
        let mut all = 0.0f64;
        let mut tail = 0.0f64;
        for i1 in 0..n {
            let k1 = signed_freq(i1, n).unsigned_abs();
            for i2 in 0..n {
                let k2 = signed_freq(i2, n).unsigned_abs();
                let m = self.c[i1 * n + i2].norm();
                all = all.max(m);
                if k1.max(k2) > (n as u64) / 4 {
                    tail = tail.max(m);
                }
            }
        }
        if all == 0.0 {
            0.0
        } else {
            tail / all
        }
    }

    /// Re-band to a different grid size by zero-padding or truncation.
    pub fn resize(&self, m: usize) -> Result<Fourier2> {
        if !m.is_power_of_two() || m < 4 {
            return Err(Error::InvalidArgument(format!("grid size {m}")));
        }
        let mut out = Fourier2::zeros(m);
        let hb = (self.n.min(m) as i64) / 2;
        for k1 in -hb..hb {
            for k2 in -hb..hb {
                let i1 = k1.rem_euclid(m as i64) as usize;
                let i2 = k2.rem_euclid(m as i64) as usize;
                out.c[i1 * m + i2] = self.coeff(k1, k2);
            }
        }
        Ok(out)
    }

    /// Mean value (the k = 0 coefficient).
    pub fn mean(&self) -> f64 {
        self.c[0].re
    }

    /// Largest asymmetry |c_k - conj(c_{-k})|; zero for a genuinely real field.
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.n as i64;
        let mut worst = 0.0f64;
        for k1 in -n / 2 + 1..n / 2 {
            for k2 in -n / 2 + 1..n / 2 {
                let d = (self.coeff(k1, k2) - self.coeff(-k1, -k2).conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }
}

/// 2D FFT over rows then columns of an n x n complex buffer.
fn fft2(buf: &mut [Complex64], n: usize, inverse: bool) {
    let mut col = vec![Complex64::new(0.0, 0.0); n];
    for r in 0..n {
        fft(&mut buf[r * n..(r + 1) * n], inverse);
    }
    for c in 0..n {
        for r in 0..n {
            col[r] = buf[r * n + c];
        }
        fft(&mut col, inverse);
        for r in 0..n {
            buf[r * n + c] = col[r];
        }
    }
}

fn phase_table(n: usize, t: f64) -> Vec<Complex64> {
    (0..n)
        .map(|i| {
            let ang = signed_freq(i, n) as f64 * t;
            Complex64::new(ang.cos(), ang.sin())
        })
        .collect()
}
