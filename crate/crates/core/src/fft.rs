//! Multi-dimensional complex FFT built from rustfft line transforms.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub(crate) struct Fft3 {
    n: [usize; 3],
    fwd: Vec<Option<Arc<dyn Fft<f64>>>>,
    inv: Vec<Option<Arc<dyn Fft<f64>>>>,
}

impl Fft3 {
    pub(crate) fn new(n: [usize; 3]) -> Self {
        let mut planner = FftPlanner::new();
        let mut fwd = Vec::with_capacity(3);
        let mut inv = Vec::with_capacity(3);
        for &len in &n {
            if len > 1 {
                fwd.push(Some(planner.plan_fft_forward(len)));
                inv.push(Some(planner.plan_fft_inverse(len)));
            } else {
                fwd.push(None);
                inv.push(None);
            }
        }
        Self { n, fwd, inv }
    }

    fn size(&self) -> usize {
        self.n.iter().product()
    }

    pub(crate) fn forward(&self, data: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, true);
        buf
    }

    /// Inverse transform, normalized, keeping the real part.
    pub(crate) fn inverse_real(&self, mut spec: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut spec, false);
        let norm = 1.0 / self.size() as f64;
        spec.iter().map(|c| c.re * norm).collect()
    }

    fn transform(&self, buf: &mut [Complex64], forward: bool) {
        for axis in 0..3 {
            let plan = if forward {
                &self.fwd[axis]
            } else {
                &self.inv[axis]
            };
            if let Some(plan) = plan {
                self.axis_pass(buf, axis, plan.as_ref());
            }
        }
    }

    fn axis_pass(&self, buf: &mut [Complex64], axis: usize, plan: &dyn Fft<f64>) {
        let len = self.n[axis];
        let scratch_len = plan.get_inplace_scratch_len();
        if axis == 0 {
            buf.par_chunks_mut(len).for_each_init(
                || vec![Complex64::default(); scratch_len],
                |scratch, line| plan.process_with_scratch(line, scratch),
            );
            return;
        }
        let stride: usize = self.n[..axis].iter().product();
        let block = len * stride;
        let mut lines = vec![Complex64::default(); buf.len()];
        // gather: line (b, inner) holds buf[b*block + m*stride + inner] for m in 0..len
        lines
            .par_chunks_mut(block)
            .zip(buf.par_chunks(block))
            .for_each(|(dst, src)| {
                for inner in 0..stride {
                    for m in 0..len {
                        dst[inner * len + m] = src[m * stride + inner];
                    }
                }
            });
        lines.par_chunks_mut(len).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, line| plan.process_with_scratch(line, scratch),
        );
        buf.par_chunks_mut(block)
            .zip(lines.par_chunks(block))
            .for_each(|(dst, src)| {
                for inner in 0..stride {
                    for m in 0..len {
                        dst[m * stride + inner] = src[inner * len + m];
                    }
                }
            });
    }
}

/// Signed integer wavenumber of FFT index `m` on an axis of length `n`.
#[inline]
pub(crate) fn signed_mode(m: usize, n: usize) -> i64 {
    if m <= n / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_identity() {
        let n = [8, 10, 12];
        let fft = Fft3::new(n);
        let data: Vec<f64> = (0..960).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let back = fft.inverse_real(fft.forward(&data));
        for (a, b) in data.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_on_its_index() {
        let n = [8, 8, 1];
        let fft = Fft3::new(n);
        let data: Vec<f64> = (0..64)
            .map(|idx| {
                let j = idx / 8;
                (2.0 * std::f64::consts::PI * 3.0 * j as f64 / 8.0).cos()
            })
            .collect();
        let spec = fft.forward(&data);
        for (idx, c) in spec.iter().enumerate() {
            let (i, j) = (idx % 8, idx / 8);
            let expect = if i == 0 && (j == 3 || j == 5) {
                32.0
            } else {
                0.0
            };
            assert!((c.re - expect).abs() < 1e-10 && c.im.abs() < 1e-10);
        }
    }

    #[test]
    fn signed_modes() {
        assert_eq!(signed_mode(0, 8), 0);
        assert_eq!(signed_mode(3, 8), 3);
        assert_eq!(signed_mode(4, 8), 4);
        assert_eq!(signed_mode(5, 8), -3);
    }
}
