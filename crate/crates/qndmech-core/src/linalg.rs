//! Small dense-matrix helpers shared by the state and simulation layers.

use alloc::vec;
use nalgebra::{DMatrix, DVector};

use crate::math;

/// Standard symplectic form for `n` modes in `(q, p)`-interleaved ordering:
/// block-diagonal `[[0, 1], [-1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for m in 0..n_modes {
        omega[(2 * m, 2 * m + 1)] = 1.0;
        omega[(2 * m + 1, 2 * m)] = -1.0;
    }
    omega
}

/// Force exact symmetry, averaging round-off drift away.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Max-norm of `S Omega S^T - Omega`.
pub fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let n_modes = s.nrows() / 2;
    let omega = symplectic_form(n_modes);
    let r = s * &omega * s.transpose() - &omega;
    r.iter().fold(0.0f64, |acc, &x| acc.max(math::abs(x)))
}

/// Minimum eigenvalue of the Hermitian matrix `V + (i/2) Omega`, computed
/// through the real embedding `[[V, -Omega/2], [Omega/2, V]]` whose spectrum
/// doubles the Hermitian one. Nonnegative (up to tolerance) iff `V` is a
/// physical covariance matrix.
pub fn physicality_min_eigenvalue(cov: &DMatrix<f64>) -> f64 {
    let dim = cov.nrows();
    let n_modes = dim / 2;
    let omega = symplectic_form(n_modes);
    let mut embed = DMatrix::zeros(2 * dim, 2 * dim);
    for i in 0..dim {
        for j in 0..dim {
            embed[(i, j)] = cov[(i, j)];
            embed[(dim + i, dim + j)] = cov[(i, j)];
            embed[(i, dim + j)] = -0.5 * omega[(i, j)];
            embed[(dim + i, j)] = 0.5 * omega[(i, j)];
        }
    }
    symmetrize(&mut embed);
    min_symmetric_eigenvalue(&embed)
}

/// Minimum eigenvalue of a real symmetric matrix.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen();
    eig.eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Matrix exponential by scaling and squaring with a diagonal Pade
/// approximant. Sized for the small (<= 16 x 16) generators used here.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm needs a square matrix");
    let norm = a.iter().fold(0.0f64, |acc, &x| acc.max(math::abs(x))) * n as f64;
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let a_s = a.scale(scale);

    // [6/6] Pade approximant of exp(a_s).
    const C: [f64; 7] = [
        1.0,
        0.5,
        5.0 / 44.0,
        1.0 / 66.0,
        1.0 / 792.0,
        1.0 / 15840.0,
        1.0 / 665280.0,
    ];
    let id = DMatrix::identity(n, n);
    let a2 = &a_s * &a_s;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_even = id.scale(C[0]) + a2.scale(C[2]) + a4.scale(C[4]) + a6.scale(C[6]);
    let u_odd = &a_s * (id.scale(C[1]) + a2.scale(C[3]) + a4.scale(C[5]));
    let p = &u_even + &u_odd;
    let q = &u_even - &u_odd;
    let mut f = q
        .lu()
        .solve(&p)
        .expect("Pade denominator is singular; generator norm too large");
    for _ in 0..squarings {
        f = &f * &f;
    }
    f
}

/// `phi(t) = integral_0^t exp(F s) ds` and `exp(F t)` in one call, through
/// the augmented block exponential `exp([[F, I], [0, 0]] t)`.
pub fn expm_with_integral(f: &DMatrix<f64>, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = f.nrows();
    let mut aug = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = f[(i, j)] * t;
        }
        aug[(i, n + i)] = t;
    }
    let e = expm(&aug);
    let exp_ft = e.view((0, 0), (n, n)).into_owned();
    let phi = e.view((0, n), (n, n)).into_owned();
    (exp_ft, phi)
}

/// Apply the affine update `x -> A x`, `V -> A V A^T + N` on the subset of
/// coordinates `idx` of a larger state, leaving the rest coupled through
/// the cross-covariances.
pub fn apply_affine_on(
    cov: &mut DMatrix<f64>,
    means: &mut DVector<f64>,
    idx: &[usize],
    a: &DMatrix<f64>,
    noise: Option<&DMatrix<f64>>,
) {
    let dim = cov.nrows();
    let k = idx.len();
    debug_assert_eq!(a.nrows(), k);
    debug_assert_eq!(a.ncols(), k);

    // rows: cov[idx, :] <- A cov[idx, :]
    let mut rows = DMatrix::zeros(k, dim);
    for (r, &i) in idx.iter().enumerate() {
        for j in 0..dim {
            rows[(r, j)] = cov[(i, j)];
        }
    }
    let new_rows = a * &rows;
    for (r, &i) in idx.iter().enumerate() {
        for j in 0..dim {
            cov[(i, j)] = new_rows[(r, j)];
        }
    }
    // cols: cov[:, idx] <- cov[:, idx] A^T
    let mut cols = DMatrix::zeros(dim, k);
    for (c, &j) in idx.iter().enumerate() {
        for i in 0..dim {
            cols[(i, c)] = cov[(i, j)];
        }
    }
    let new_cols = &cols * a.transpose();
    for (c, &j) in idx.iter().enumerate() {
        for i in 0..dim {
            cov[(i, j)] = new_cols[(i, c)];
        }
    }
    if let Some(n) = noise {
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                cov[(i, j)] += n[(r, c)];
            }
        }
    }
    let mut mv = DVector::zeros(k);
    for (r, &i) in idx.iter().enumerate() {
        mv[r] = means[i];
    }
    let new_mv = a * mv;
    for (r, &i) in idx.iter().enumerate() {
        means[i] = new_mv[r];
    }
}

/// Nodes and weights of composite Simpson quadrature on `[0, len]` with
/// `2 panels + 1` points.
pub fn simpson_rule(len: f64, panels: usize) -> (vec::Vec<f64>, vec::Vec<f64>) {
    let n = 2 * panels.max(1);
    let h = len / n as f64;
    let mut nodes = vec::Vec::with_capacity(n + 1);
    let mut weights = vec::Vec::with_capacity(n + 1);
    for i in 0..=n {
        nodes.push(h * i as f64);
        let w = if i == 0 || i == n {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        weights.push(w * h / 3.0);
    }
    (nodes, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_squares_to_minus_identity() {
        let omega = symplectic_form(3);
        let sq = &omega * &omega;
        assert_eq!(sq, -DMatrix::<f64>::identity(6, 6));
    }

    #[test]
    fn expm_matches_scalar_exponential() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![0.3, -1.7, 4.0]));
        let e = expm(&a);
        for (i, &x) in [0.3, -1.7, 4.0].iter().enumerate() {
            let rel = (e[(i, i)] - math::exp(x)).abs() / math::exp(x);
            assert!(rel < 1e-13, "relative error {rel}");
        }
    }

    #[test]
    fn expm_rotation_block() {
        // exp of a rotation generator stays orthogonal
        let w = 2.5;
        let a = DMatrix::from_row_slice(2, 2, &[0.0, w, -w, 0.0]);
        let e = expm(&a);
        assert!((e[(0, 0)] - math::cos(w)).abs() < 1e-12);
        assert!((e[(0, 1)] - math::sin(w)).abs() < 1e-12);
    }

    #[test]
    fn integral_of_exponential() {
        let a = DMatrix::from_row_slice(1, 1, &[-2.0]);
        let (e, phi) = expm_with_integral(&a, 1.5);
        assert!((e[(0, 0)] - math::exp(-3.0)).abs() < 1e-13);
        assert!((phi[(0, 0)] - (1.0 - math::exp(-3.0)) / 2.0).abs() < 1e-13);
    }

    #[test]
    fn simpson_integrates_cubic_exactly() {
        let (nodes, weights) = simpson_rule(2.0, 4);
        let val: f64 = nodes
            .iter()
            .zip(&weights)
            .map(|(&x, &w)| w * (x * x * x - x))
            .sum();
        assert!((val - (4.0 - 2.0)).abs() < 1e-12);
    }

    #[test]
    fn physicality_of_vacuum_is_zero() {
        let v = DMatrix::<f64>::identity(4, 4).scale(0.5);
        let min = physicality_min_eigenvalue(&v);
        assert!(min.abs() < 1e-12, "vacuum saturates the bound, got {min}");
    }
}
