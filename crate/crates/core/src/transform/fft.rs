//! Separable multi-dimensional FFTs on row-major arrays.

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

/// In-place unnormalized DFT over the row-major array with extents `dims`.
/// `Forward` uses `e^{-2πi}`, `Inverse` uses `e^{+2πi}`.
pub fn fft_nd(data: &mut [Complex64], dims: &[usize], direction: FftDirection) {
    let total: usize = dims.iter().product();
    assert_eq!(data.len(), total, "array length does not match extents");
    let mut planner = FftPlanner::new();
    let mut line = Vec::new();
    for (axis, &n) in dims.iter().enumerate() {
        if n <= 1 {
            continue;
        }
        let fft = planner.plan_fft(n, direction);
        let stride: usize = dims[axis + 1..].iter().product();
        let outer = total / (n * stride);
        line.resize(n, Complex64::default());
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (i, v) in line.iter_mut().enumerate() {
                    *v = data[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    data[base + i * stride] = *v;
                }
            }
        }
    }
}

/// Signed frequency index of FFT bin `i` on an axis of length `n`.
#[inline]
pub fn signed_bin(i: usize, n: usize) -> i64 {
    if i < n.div_ceil(2) {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Row-major multi-index of flat position `flat`.
pub fn unflatten(mut flat: usize, dims: &[usize], out: &mut [usize]) {
    for a in (0..dims.len()).rev() {
        out[a] = flat % dims[a];
        flat /= dims[a];
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_dft_2d() {
        let dims = [4, 8];
        let data: Vec<Complex64> = (0..32).map(|i| Complex64::new(i as f64, (i * i % 7) as f64)).collect();
        let mut fast = data.clone();
        fft_nd(&mut fast, &dims, FftDirection::Forward);
        for k0 in 0..4 {
            for k1 in 0..8 {
                let mut acc = Complex64::default();
                for n0 in 0..4 {
                    for n1 in 0..8 {
                        let ph = -2.0 * std::f64::consts::PI * ((k0 * n0) as f64 / 4.0 + (k1 * n1) as f64 / 8.0);
                        acc += data[n0 * 8 + n1] * Complex64::from_polar(1.0, ph);
                    }
                }
                assert!((acc - fast[k0 * 8 + k1]).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn signed_bins() {
        let v: Vec<i64> = (0..6).map(|i| signed_bin(i, 6)).collect();
        assert_eq!(v, vec![0, 1, 2, -3, -2, -1]);
    }
}
