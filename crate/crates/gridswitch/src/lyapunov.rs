//! Dense Lyapunov equation solver.
//!
//! Solves `AᵀP + PA + Q = 0` for Hurwitz `A` and symmetric positive
//! semidefinite `Q` by the Schur-form substitution method: with the real
//! Schur decomposition `A = U T Uᵀ`, the transformed unknown `Y = UᵀP U`
//! satisfies `TᵀY + Y T = −UᵀQ U`, which is solved block column by block
//! column along the quasi-triangular structure of `T`; each diagonal step is
//! a Sylvester system of size at most 4, handled through its Kronecker form.
//! The result is symmetrized and checked against the defining equation; a
//! defect above `1e−9·‖Q‖_F` is reported as an error rather than returned
//! silently.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linearize::{spectral_abscissa, HURWITZ_TOLERANCE};

/// Relative residual bound accepted from the solver.
pub const RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Split the quasi-triangular factor into 1×1 and 2×2 diagonal blocks.
fn diagonal_blocks(t: &DMatrix<f64>) -> Vec<(usize, usize)> {
    let n = t.nrows();
    let mut blocks = Vec::new();
    let mut i = 0;
    while i < n {
        let two = i + 1 < n
            && t[(i + 1, i)].abs() > 1e-12 * (1.0 + t[(i, i)].abs() + t[(i + 1, i + 1)].abs());
        let size = if two { 2 } else { 1 };
        blocks.push((i, size));
        i += size;
    }
    blocks
}

/// Solve `T_iiᵀ X + X T_jj = R` for blocks of size ≤ 2 via the Kronecker
/// form `(I ⊗ T_iiᵀ + T_jjᵀ ⊗ I) vec(X) = vec(R)`.
fn solve_small_sylvester(
    tii: &DMatrix<f64>,
    tjj: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let ni = tii.nrows();
    let nj = tjj.nrows();
    let mut m = DMatrix::zeros(ni * nj, ni * nj);
    for s in 0..nj {
        for r in 0..ni {
            let row = r + s * ni;
            for rp in 0..ni {
                m[(row, rp + s * ni)] += tii[(rp, r)];
            }
            for sp in 0..nj {
                m[(row, r + sp * ni)] += tjj[(sp, s)];
            }
        }
    }
    let vec_rhs = DMatrix::from_fn(ni * nj, 1, |k, _| rhs[(k % ni, k / ni)]);
    let sol = m.lu().solve(&vec_rhs).ok_or_else(|| {
        Error::LyapunovResidual {
            residual: f64::INFINITY,
            tolerance: RESIDUAL_TOLERANCE,
        }
    })?;
    Ok(DMatrix::from_fn(ni, nj, |r, s| sol[(r + s * ni, 0)]))
}

/// Solve `AᵀP + PA + Q = 0` and verify the defect.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "state matrix {}x{} vs constant term {}x{}",
            a.nrows(),
            a.ncols(),
            q.nrows(),
            q.ncols()
        )));
    }
    let abscissa = spectral_abscissa(a);
    if abscissa >= HURWITZ_TOLERANCE {
        return Err(Error::NotHurwitz(abscissa));
    }

    let schur = a.clone().schur();
    let (u, t) = schur.unpack();
    let c = -(u.transpose() * q * &u);
    let blocks = diagonal_blocks(&t);

    let mut y = DMatrix::zeros(n, n);
    for &(j0, nj) in &blocks {
        for &(i0, ni) in &blocks {
            let mut rhs = c.view((i0, j0), (ni, nj)).into_owned();
            // Contributions of already-solved blocks above in this column
            // (from TᵀY) and to the left in this row (from Y T).
            for &(k0, nk) in &blocks {
                if k0 >= i0 {
                    break;
                }
                let t_ki = t.view((k0, i0), (nk, ni));
                let y_kj = y.view((k0, j0), (nk, nj));
                rhs -= t_ki.transpose() * y_kj;
            }
            for &(l0, nl) in &blocks {
                if l0 >= j0 {
                    break;
                }
                let y_il = y.view((i0, l0), (ni, nl));
                let t_lj = t.view((l0, j0), (nl, nj));
                rhs -= y_il * t_lj;
            }
            let tii = t.view((i0, i0), (ni, ni)).into_owned();
            let tjj = t.view((j0, j0), (nj, nj)).into_owned();
            let x = solve_small_sylvester(&tii, &tjj, &rhs)?;
            y.view_mut((i0, j0), (ni, nj)).copy_from(&x);
        }
    }

    let p_raw = &u * y * u.transpose();
    let p = (&p_raw + p_raw.transpose()) * 0.5;

    let defect = (a.transpose() * &p + &p * a + q).norm();
    let bound = RESIDUAL_TOLERANCE * q.norm();
    if defect > bound {
        return Err(Error::LyapunovResidual {
            residual: defect,
            tolerance: bound,
        });
    }
    Ok(p)
}
