//! Multi-axis FFT helpers over row-major arrays.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// Unnormalized DFT along one axis of a row-major array.
pub(crate) fn transform_axis(data: &mut [Complex64], shape: &[usize], axis: usize, dir: FftDirection) {
    let len = shape[axis];
    if len <= 1 {
        return;
    }
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let fft = FftPlanner::new().plan_fft(len, dir);
    let mut line = vec![Complex64::new(0.0, 0.0); len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for o in 0..outer {
        let base = o * len * inner;
        for i in 0..inner {
            for (t, v) in line.iter_mut().enumerate() {
                *v = data[base + t * inner + i];
            }
            fft.process_with_scratch(&mut line, &mut scratch);
            for (t, v) in line.iter().enumerate() {
                data[base + t * inner + i] = *v;
            }
        }
    }
}

/// Unnormalized DFT along every axis.
pub(crate) fn transform_all(data: &mut [Complex64], shape: &[usize], dir: FftDirection) {
    for axis in 0..shape.len() {
        transform_axis(data, shape, axis, dir);
    }
}

/// Signed frequency of DFT bin `idx` of an `n`-point transform, in `[-n/2, n/2)`.
pub(crate) fn signed(idx: usize, n: usize) -> i64 {
    let i = idx as i64;
    let n = n as i64;
    if i < (n + 1) / 2 {
        i
    } else {
        i - n
    }
}

/// Row-major strides for `shape`.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for a in (0..shape.len().saturating_sub(1)).rev() {
        s[a] = s[a + 1] * shape[a + 1];
    }
    s
}

pub(crate) fn unravel(mut flat: usize, shape: &[usize]) -> Vec<usize> {
    let mut idx = vec![0; shape.len()];
    for a in (0..shape.len()).rev() {
        idx[a] = flat % shape[a];
        flat /= shape[a];
    }
    idx
}

/// Spectral derivative along `axis` of a periodic array with the given period.
/// The Nyquist mode is dropped.
pub(crate) fn derivative_axis(data: &[Complex64], shape: &[usize], axis: usize, period: f64) -> Vec<Complex64> {
    let mut out = data.to_vec();
    let n = shape[axis];
    transform_axis(&mut out, shape, axis, FftDirection::Forward);
    let inner: usize = shape[axis + 1..].iter().product();
    let scale = 1.0 / n as f64;
    for (flat, v) in out.iter_mut().enumerate() {
        let k = (flat / inner) % n;
        let s = signed(k, n);
        *v = if n % 2 == 0 && s == -(n as i64) / 2 {
            Complex64::new(0.0, 0.0)
        } else {
            *v * Complex64::new(0.0, 2.0 * std::f64::consts::PI * s as f64 / period * scale)
        };
    }
    transform_axis(&mut out, shape, axis, FftDirection::Inverse);
    out
}
