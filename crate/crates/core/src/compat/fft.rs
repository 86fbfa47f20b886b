//! Three-dimensional complex FFT over the torus grid, built from 1-D passes.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};
use std::sync::Arc;

use crate::field::TorusGrid;

/// Planned forward and inverse transforms for one grid shape.
pub struct Fft3 {
    dims: [usize; 3],
    forward: [Arc<dyn Fft<f64>>; 3],
    inverse: [Arc<dyn Fft<f64>>; 3],
}

impl Fft3 {
    pub fn new(grid: &TorusGrid) -> Self {
        let mut planner = FftPlanner::new();
        let dims = grid.dims;
        let forward = dims.map(|n| planner.plan_fft(n, FftDirection::Forward));
        let inverse = dims.map(|n| planner.plan_fft(n, FftDirection::Inverse));
        Self { dims, forward, inverse }
    }

    /// Unnormalized forward transform `x̂(k) = Σ x(i) exp(-2πi k·i/N)`.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(data, &self.forward);
    }

    /// Inverse transform including the `1/N` factor.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.par_iter_mut().for_each(|v| *v *= scale);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut data);
        data
    }

    pub fn inverse_real(&self, mut data: Vec<Complex64>) -> Vec<f64> {
        self.inverse(&mut data);
        data.into_iter().map(|c| c.re).collect()
    }

    fn run(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>; 3]) {
        let [n1, n2, n3] = self.dims;
        assert_eq!(data.len(), n1 * n2 * n3);
        let slab = n2 * n3;

        // axes 3 and 2 stay inside one i1-slab
        data.par_chunks_mut(slab).for_each(|s| {
            plans[2].process(s);
            let mut line = vec![Complex64::default(); n2];
            for i3 in 0..n3 {
                for i2 in 0..n2 {
                    line[i2] = s[i2 * n3 + i3];
                }
                plans[1].process(&mut line);
                for i2 in 0..n2 {
                    s[i2 * n3 + i3] = line[i2];
                }
            }
        });

        let columns: Vec<Vec<Complex64>> = (0..slab)
            .into_par_iter()
            .map(|off| {
                let mut line: Vec<Complex64> = (0..n1).map(|i1| data[i1 * slab + off]).collect();
                plans[0].process(&mut line);
                line
            })
            .collect();
        for (off, line) in columns.into_iter().enumerate() {
            for (i1, v) in line.into_iter().enumerate() {
                data[i1 * slab + off] = v;
            }
        }
    }
}
