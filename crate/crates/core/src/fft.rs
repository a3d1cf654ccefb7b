//! Iterative radix-2 complex FFT and FFT-based linear convolution.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// Precomputed twiddles and bit-reversal table for one power-of-two size.
#[derive(Debug, Clone)]
pub struct Fft {
    size: usize,
    twiddles: Vec<Complex64>,
    bitrev: Vec<usize>,
}

impl Fft {
    /// Panics if `size` is not a power of two.
    pub fn new(size: usize) -> Self {
        assert!(size.is_power_of_two(), "FFT size must be a power of two, got {size}");
        let bits = size.trailing_zeros();
        let bitrev = (0..size)
            .map(|i| if bits == 0 { 0 } else { i.reverse_bits() >> (usize::BITS - bits) })
            .collect();
        let twiddles = (0..size / 2)
            .map(|k| {
                let a = -2.0 * PI * k as f64 / size as f64;
                Complex64::new(libm::cos(a), libm::sin(a))
            })
            .collect();
        Fft { size, twiddles, bitrev }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// In-place forward transform, `X[k] = Σ x[n] e^{-j2πkn/N}`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, false);
    }

    /// In-place inverse transform including the `1/N` scale.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, true);
        let scale = 1.0 / self.size as f64;
        for x in data.iter_mut() {
            *x *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        assert_eq!(data.len(), self.size);
        let n = self.size;
        for i in 0..n {
            let j = self.bitrev[i];
            if j > i {
                data.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// Full linear convolution, `len(a) + len(b) - 1` samples.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 {
        return convolve_direct(a, b);
    }
    let size = out_len.next_power_of_two();
    let fft = Fft::new(size);
    let mut fa = to_complex(a, size);
    let mut fb = to_complex(b, size);
    fft.forward(&mut fa);
    fft.forward(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft.inverse(&mut fa);
    fa[..out_len].iter().map(|c| c.re).collect()
}

/// Convolves one signal with several filters, sharing the signal's transform.
pub fn convolve_many(signal: &[f64], filters: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let longest = filters.iter().map(Vec::len).max().unwrap_or(0);
    if signal.is_empty() || longest == 0 || signal.len().min(longest) <= 32 {
        return filters.iter().map(|f| convolve(signal, f)).collect();
    }
    let size = (signal.len() + longest - 1).next_power_of_two();
    let fft = Fft::new(size);
    let mut fs = to_complex(signal, size);
    fft.forward(&mut fs);
    filters
        .iter()
        .map(|f| {
            if f.is_empty() {
                return Vec::new();
            }
            let mut ff = to_complex(f, size);
            fft.forward(&mut ff);
            for (y, x) in ff.iter_mut().zip(&fs) {
                *y *= x;
            }
            fft.inverse(&mut ff);
            ff[..signal.len() + f.len() - 1].iter().map(|c| c.re).collect()
        })
        .collect()
}

pub fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn to_complex(x: &[f64], size: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); size];
    for (c, &r) in v.iter_mut().zip(x) {
        c.re = r;
    }
    v
}
