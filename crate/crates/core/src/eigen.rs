//! Generalized symmetric eigenproblem K φ = λ M φ.
//!
//! M is factored as L·Lᵀ, the problem is reduced to the standard symmetric
//! problem on A = L⁻¹ K L⁻ᵀ, and A is diagonalized by cyclic Jacobi sweeps.
//! Direct, dependency-light, and bit-deterministic — the matrices here are
//! small (tens of DOFs), where Jacobi is both robust and fast enough to solve
//! tens of thousands of configurations per second.

use nalgebra::DMatrix;

use crate::{Error, Result};

/// Jacobi gives up after this many full sweeps.
pub const MAX_SWEEPS: usize = 100;

/// Convergence: off-diagonal Frobenius norm relative to the full Frobenius
/// norm of the (rotation-invariant) input.
pub const OFF_DIAG_TOL: f64 = 1e-12;

/// Eigenpairs of K φ = λ M φ: `values` ascending, `vectors` columns
/// M-orthonormal (φᵢᵀ M φⱼ = δᵢⱼ).
#[derive(Debug, Clone)]
pub struct GeneralizedEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Full spectrum of the generalized problem.
///
/// # Errors
/// [`Error::DimensionMismatch`] for non-square or unequal shapes,
/// [`Error::MassNotPositiveDefinite`] if M has no Cholesky factor,
/// [`Error::NoConvergence`] if Jacobi exhausts its sweep budget.
pub fn solve_generalized(k: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<GeneralizedEigen> {
    let n = k.nrows();
    if k.ncols() != n || m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "stiffness is {}x{}, mass is {}x{}",
            k.nrows(),
            k.ncols(),
            m.nrows(),
            m.ncols()
        )));
    }
    let chol =
        nalgebra::Cholesky::new(m.clone()).ok_or(Error::MassNotPositiveDefinite)?;
    let l = chol.l();

    // A = L^-1 K L^-T, via two triangular solves (K symmetric).
    let x = l
        .solve_lower_triangular(k)
        .ok_or(Error::MassNotPositiveDefinite)?;
    let mut a = l
        .solve_lower_triangular(&x.transpose())
        .ok_or(Error::MassNotPositiveDefinite)?;
    // The solves leave roundoff-level asymmetry; Jacobi assumes exact symmetry.
    for p in 0..n {
        for q in (p + 1)..n {
            let s = 0.5 * (a[(p, q)] + a[(q, p)]);
            a[(p, q)] = s;
            a[(q, p)] = s;
        }
    }

    let (mut values, y) = jacobi(a)?;

    // Sort ascending, reorder eigenvector columns to match.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    values = order.iter().map(|&i| values[i]).collect();
    let mut y_sorted = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = y.column(src).clone_owned();
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
        y_sorted.set_column(dst, &col);
    }

    // Back-transform: φ = L^-T y keeps φᵀ M φ = yᵀ y = I.
    let vectors = l
        .transpose()
        .solve_upper_triangular(&y_sorted)
        .ok_or(Error::MassNotPositiveDefinite)?;

    Ok(GeneralizedEigen { values, vectors })
}

/// Cyclic Jacobi on a symmetric matrix. Returns (diagonal, accumulated
/// rotations V) with A = V·diag·Vᵀ; V's columns are the eigenvectors.
fn jacobi(mut a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    if n < 2 {
        return Ok((a.diagonal().iter().copied().collect(), v));
    }
    // Frobenius norm is invariant under the rotations; fix the scale once.
    let frob = a.norm();

    for _sweep in 0..MAX_SWEEPS {
        let off = off_diag_norm(&a);
        if off <= OFF_DIAG_TOL * frob {
            return Ok((a.diagonal().iter().copied().collect(), v));
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                // Rotation angle that annihilates a_pq (Golub & Van Loan 8.4).
                let tau = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // A <- Jᵀ A J on columns/rows p, q.
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = c * arp - s * arq;
                    a[(r, q)] = s * arp + c * arq;
                }
                for r in 0..n {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = c * apr - s * aqr;
                    a[(q, r)] = s * apr + c * aqr;
                }
                // The (p,q) entry is zero by construction; pin it to keep
                // symmetry exact against accumulated roundoff.
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;

                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = c * vrp - s * vrq;
                    v[(r, q)] = s * vrp + c * vrq;
                }
            }
        }
    }

    let off = off_diag_norm(&a);
    Err(Error::NoConvergence {
        sweeps: MAX_SWEEPS,
        off: if frob > 0.0 { off / frob } else { off },
    })
}

/// Frobenius norm of the off-diagonal part.
fn off_diag_norm(a: &DMatrix<f64>) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for p in 0..n {
        for q in 0..n {
            if p != q {
                acc += a[(p, q)] * a[(p, q)];
            }
        }
    }
    acc.sqrt()
}
