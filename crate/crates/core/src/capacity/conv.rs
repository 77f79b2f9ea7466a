//! FFT convolution with the pairwise kernel on the embedding grid.

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Circular-convolution plan on a zero-padded grid large enough that the
/// linear convolution with the (even) kernel is exact.
pub(crate) struct ConvPlan {
    pcols: usize,
    prows: usize,
    khat: Vec<Complex<f64>>,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl ConvPlan {
    /// `kernel(di, dj)` for offsets within (-ncols, ncols) × (-nrows, nrows),
    /// symmetric in each argument.
    pub fn new(ncols: usize, nrows: usize, kernel: impl Fn(u32, u32) -> f64) -> Self {
        let pcols = (2 * ncols).next_power_of_two();
        let prows = if nrows == 1 { 1 } else { (2 * nrows).next_power_of_two() };
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(pcols);
        let row_inv = planner.plan_fft_inverse(pcols);
        let col_fwd = planner.plan_fft_forward(prows);
        let col_inv = planner.plan_fft_inverse(prows);

        let mut khat = vec![Complex::new(0.0, 0.0); pcols * prows];
        for dj in -(nrows as i64 - 1)..nrows as i64 {
            let rj = dj.rem_euclid(prows as i64) as usize;
            for di in -(ncols as i64 - 1)..ncols as i64 {
                let ri = di.rem_euclid(pcols as i64) as usize;
                khat[rj * pcols + ri] =
                    Complex::new(kernel(di.unsigned_abs() as u32, dj.unsigned_abs() as u32), 0.0);
            }
        }
        let mut plan = Self { pcols, prows, khat: Vec::new(), row_fwd, row_inv, col_fwd, col_inv };
        plan.fft2(&mut khat, true);
        plan.khat = khat;
        plan
    }

    fn fft2(&self, buf: &mut [Complex<f64>], forward: bool) {
        let row = if forward { &self.row_fwd } else { &self.row_inv };
        for chunk in buf.chunks_exact_mut(self.pcols) {
            row.process(chunk);
        }
        if self.prows > 1 {
            let col = if forward { &self.col_fwd } else { &self.col_inv };
            let mut scratch = vec![Complex::new(0.0, 0.0); self.prows];
            for c in 0..self.pcols {
                for r in 0..self.prows {
                    scratch[r] = buf[r * self.pcols + c];
                }
                col.process(&mut scratch);
                for r in 0..self.prows {
                    buf[r * self.pcols + c] = scratch[r];
                }
            }
        }
    }

    /// Convolve grid samples with the kernel. `input[j] = (col, row, value)`,
    /// output sampled at `outputs[(col, row)]` positions.
    pub fn convolve(
        &self,
        input: impl Iterator<Item = (u32, u32, f64)>,
        outputs: &[[u32; 2]],
        result: &mut [f64],
    ) {
        let mut buf = vec![Complex::new(0.0, 0.0); self.pcols * self.prows];
        for (c, r, v) in input {
            buf[r as usize * self.pcols + c as usize] = Complex::new(v, 0.0);
        }
        self.fft2(&mut buf, true);
        for (b, k) in buf.iter_mut().zip(&self.khat) {
            *b *= k;
        }
        self.fft2(&mut buf, false);
        let scale = 1.0 / (self.pcols * self.prows) as f64;
        for (out, &[c, r]) in result.iter_mut().zip(outputs) {
            *out = buf[r as usize * self.pcols + c as usize].re * scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_direct_convolution() {
        let ncols = 13;
        let nrows = 7;
        let kernel = |di: u32, dj: u32| {
            if di == 0 && dj == 0 {
                0.0
            } else {
                1.0 / ((di * di + dj * dj) as f64).powf(1.3)
            }
        };
        let plan = ConvPlan::new(ncols, nrows, kernel);
        let cells: Vec<[u32; 2]> = (0..nrows as u32)
            .flat_map(|r| (0..ncols as u32).map(move |c| [c, r]))
            .collect();
        let vals: Vec<f64> =
            (0..cells.len()).map(|i| ((i * 31 % 17) as f64 - 8.0) * 0.37).collect();
        let mut out = vec![0.0; cells.len()];
        plan.convolve(
            cells.iter().zip(&vals).map(|(&[c, r], &v)| (c, r, v)),
            &cells,
            &mut out,
        );
        for (i, &[ci, ri]) in cells.iter().enumerate() {
            let mut direct = 0.0;
            for (j, &[cj, rj]) in cells.iter().enumerate() {
                direct += kernel(ci.abs_diff(cj), ri.abs_diff(rj)) * vals[j];
            }
            assert!(
                (direct - out[i]).abs() <= 1e-10 * direct.abs().max(1.0),
                "cell {i}: {direct} vs {}",
                out[i]
            );
        }
    }

    #[test]
    fn one_dimensional_grid() {
        let plan = ConvPlan::new(16, 1, |di, _| if di == 0 { 0.0 } else { 1.0 / di as f64 });
        let cells: Vec<[u32; 2]> = (0..16).map(|c| [c, 0]).collect();
        let vals: Vec<f64> = (0..16).map(|i| i as f64).collect();
        let mut out = vec![0.0; 16];
        plan.convolve(
            cells.iter().zip(&vals).map(|(&[c, r], &v)| (c, r, v)),
            &cells,
            &mut out,
        );
        for (i, &[ci, _]) in cells.iter().enumerate() {
            let direct: f64 = (0..16u32)
                .filter(|&j| j != ci)
                .map(|j| vals[j as usize] / (ci.abs_diff(j) as f64))
                .sum();
            assert!((direct - out[i]).abs() <= 1e-11 * direct.abs().max(1.0));
        }
    }
}
