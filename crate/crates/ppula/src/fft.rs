//! Row-column 2-D FFT on top of rustfft, with cached plans.
//!
//! Forward transform is unnormalized; the inverse carries the 1/(w*h)
//! factor so `inverse(forward(x)) == x`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub(crate) type C64 = Complex<f64>;

#[derive(Clone)]
pub(crate) struct Fft2 {
    width: usize,
    height: usize,
    fwd_row: Arc<dyn Fft<f64>>,
    fwd_col: Arc<dyn Fft<f64>>,
    inv_row: Arc<dyn Fft<f64>>,
    inv_col: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Fft2 {
            width,
            height,
            fwd_row: planner.plan_fft_forward(width),
            fwd_col: planner.plan_fft_forward(height),
            inv_row: planner.plan_fft_inverse(width),
            inv_col: planner.plan_fft_inverse(height),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    /// DFT of a real row-major buffer.
    pub fn forward_real(&self, data: &[f64]) -> Vec<C64> {
        debug_assert_eq!(data.len(), self.len());
        let mut buf: Vec<C64> = data.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward_inplace(&mut buf);
        buf
    }

    pub fn forward_inplace(&self, buf: &mut [C64]) {
        self.transform(buf, true);
    }

    pub fn inverse_inplace(&self, buf: &mut [C64]) {
        self.transform(buf, false);
        let scale = 1.0 / self.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Inverse DFT, keeping the real part. The inputs this crate produces
    /// are conjugate-symmetric, so the imaginary part is rounding noise.
    pub fn inverse_real(&self, mut spec: Vec<C64>) -> Vec<f64> {
        self.inverse_inplace(&mut spec);
        spec.into_iter().map(|c| c.re).collect()
    }

    fn transform(&self, buf: &mut [C64], forward: bool) {
        let (row_plan, col_plan) = if forward {
            (&self.fwd_row, &self.fwd_col)
        } else {
            (&self.inv_row, &self.inv_col)
        };
        let mut scratch = vec![C64::new(0.0, 0.0); row_plan.get_inplace_scratch_len()];
        for row in buf.chunks_exact_mut(self.width) {
            row_plan.process_with_scratch(row, &mut scratch);
        }
        // Columns via transpose so the inner transform stays contiguous.
        let mut t = transpose(buf, self.width, self.height);
        let mut scratch = vec![C64::new(0.0, 0.0); col_plan.get_inplace_scratch_len()];
        for col in t.chunks_exact_mut(self.height) {
            col_plan.process_with_scratch(col, &mut scratch);
        }
        let back = transpose(&t, self.height, self.width);
        buf.copy_from_slice(&back);
    }
}

fn transpose(buf: &[C64], width: usize, height: usize) -> Vec<C64> {
    let mut out = vec![C64::new(0.0, 0.0); buf.len()];
    for r in 0..height {
        for c in 0..width {
            out[c * height + r] = buf[r * width + c];
        }
    }
    out
}
