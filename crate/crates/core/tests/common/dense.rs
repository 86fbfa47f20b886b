//! Dense least-squares reconstruction, independent of the spectral solver.

use nalgebra::{DMatrix, DVector};
use trigokit::field::StrainField;

/// Storage slot to index pair, in file order `e11 e22 e33 e23 e13 e12`.
const SLOTS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

/// Matrix of `u ↦ ½(D_i u_j + D_j u_i)` on the periodic grid, with
/// `D_i` the forward difference.
pub fn symmetrized_gradient_matrix(dims: [usize; 3], spacing: [f64; 3]) -> DMatrix<f64> {
    let n = dims.iter().product::<usize>();
    let lin = |c: [usize; 3]| (c[0] * dims[1] + c[1]) * dims[2] + c[2];
    let mut a = DMatrix::zeros(6 * n, 3 * n);
    for i1 in 0..dims[0] {
        for i2 in 0..dims[1] {
            for i3 in 0..dims[2] {
                let c = [i1, i2, i3];
                let here = lin(c);
                for (slot, &(i, j)) in SLOTS.iter().enumerate() {
                    let row = slot * n + here;
                    for (dir, comp) in [(i, j), (j, i)] {
                        let mut next = c;
                        next[dir] = (next[dir] + 1) % dims[dir];
                        let w = 0.5 / spacing[dir];
                        a[(row, comp * n + lin(next))] += w;
                        a[(row, comp * n + here)] -= w;
                    }
                }
            }
        }
    }
    a
}

/// Minimum-norm least-squares periodic displacement for the mean-free part
/// of `e`. The kernel of the operator is the constants, so the normal
/// equations are regularised by `J = Σ_c 1_c 1_cᵀ`, which forces zero mean
/// without changing the least-squares residual.
pub fn dense_reconstruct(e: &StrainField) -> [Vec<f64>; 3] {
    let dims = e.grid.dims;
    let n = e.grid.len();
    let spacing = [0, 1, 2].map(|k| e.grid.lengths[k] / dims[k] as f64);
    let a = symmetrized_gradient_matrix(dims, spacing);
    let mut b = DVector::zeros(6 * n);
    for slot in 0..6 {
        let comp = &e.components[slot];
        let mean = comp.iter().sum::<f64>() / n as f64;
        for k in 0..n {
            b[slot * n + k] = comp[k] - mean;
        }
    }
    let mut normal = a.transpose() * &a;
    for c in 0..3 {
        for r in 0..n {
            for k in 0..n {
                normal[(c * n + r, c * n + k)] += 1.0;
            }
        }
    }
    let x = normal.cholesky().expect("positive definite").solve(&(a.transpose() * b));
    [0, 1, 2].map(|c| (0..n).map(|k| x[c * n + k]).collect())
}
