//! Matrix exponential, principal logarithm and general eigenvalues.

use nalgebra::linalg::Schur;
use num_complex::Complex64;

use super::{c, hermitian_part, identity, max_norm, tol, ComplexMatrix, HermitianOperator, ZERO};
use crate::error::{Error, Result};

const SCHUR_MAX_ITER: usize = 10_000;

/// Relative commutator defect below which a matrix is treated as normal.
const NORMALITY_TOL: f64 = 1e-12;

/// `‖M M† − M† M‖_max ≤ tol · ‖M‖²_max`.
pub fn is_normal(m: &ComplexMatrix) -> bool {
    let scale = max_norm(m).max(f64::MIN_POSITIVE);
    let defect = max_norm(&(m * m.adjoint() - m.adjoint() * m));
    defect <= NORMALITY_TOL * scale * scale * m.nrows() as f64
}

/// Matrix exponential.
///
/// Normal inputs are split into commuting Hermitian and anti-Hermitian parts and
/// exponentiated through their eigendecompositions; everything else goes through
/// Padé-13 scaling and squaring.
pub fn matrix_exponential(m: &ComplexMatrix) -> ComplexMatrix {
    assert!(m.is_square(), "matrix_exponential needs a square matrix");
    if m.nrows() == 0 {
        return m.clone();
    }
    if is_normal(m) {
        exp_normal(m)
    } else {
        exp_pade13(m)
    }
}

fn exp_normal(m: &ComplexMatrix) -> ComplexMatrix {
    let re = hermitian_part(m);
    let im = (m - m.adjoint()).map(|z| z * Complex64::new(0.0, -0.5));
    let exp_re = if max_norm(&re) == 0.0 {
        identity(m.nrows())
    } else {
        hermitian_unchecked(re).map_spectrum(|e| c(e.exp()))
    };
    if max_norm(&im) == 0.0 {
        return exp_re;
    }
    let exp_im = hermitian_unchecked(im).map_spectrum(|e| Complex64::from_polar(1.0, e));
    exp_re * exp_im
}

fn hermitian_unchecked(m: ComplexMatrix) -> HermitianOperator {
    // Both parts are Hermitian by construction up to rounding.
    HermitianOperator::new(m).expect("Hermitian part of a matrix")
}

// Higham (2005) coefficients for the [13/13] Padé approximant.
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &ComplexMatrix) -> f64 {
    m.column_iter()
        .map(|col| col.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn exp_pade13(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.nrows();
    let norm = one_norm(m);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = m.scale(0.5_f64.powi(squarings));
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| c(PADE13[k]);

    let u_inner = a6.map(|z| z * b(13)) + a4.map(|z| z * b(11)) + a2.map(|z| z * b(9));
    let u = &a
        * (&a6 * u_inner + a6.map(|z| z * b(7)) + a4.map(|z| z * b(5)) + a2.map(|z| z * b(3)) + id.map(|z| z * b(1)));
    let v_inner = a6.map(|z| z * b(12)) + a4.map(|z| z * b(10)) + a2.map(|z| z * b(8));
    let v = &a6 * v_inner + a6.map(|z| z * b(6)) + a4.map(|z| z * b(4)) + a2.map(|z| z * b(2)) + id.map(|z| z * b(0));

    let p = &v + &u;
    let q = &v - &u;
    let mut result = q
        .lu()
        .solve(&p)
        .expect("Padé denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Complex Schur form `M = Q T Q†`, with the triangularity and reconstruction checked.
fn complex_schur(m: &ComplexMatrix) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER).ok_or(Error::NoConvergence)?;
    let (q, mut t) = schur.unpack();
    let scale = max_norm(m).max(1.0);
    for j in 0..t.ncols() {
        for i in (j + 1)..t.nrows() {
            if t[(i, j)].norm() > 1e-10 * scale {
                return Err(Error::NoConvergence);
            }
            t[(i, j)] = ZERO;
        }
    }
    let residual = max_norm(&(&q * &t * q.adjoint() - m));
    if residual > 1e-10 * scale {
        return Err(Error::NoConvergence);
    }
    Ok((q, t))
}

/// Eigenvalues of a general complex matrix, via its Schur form.
pub fn general_eigenvalues(m: &ComplexMatrix) -> Result<Vec<Complex64>> {
    let (_, t) = complex_schur(m)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Principal matrix logarithm.
///
/// Inverse scaling and squaring on the Schur form: repeated triangular square roots
/// bring `T` near the identity, then `log(I + X)` is evaluated with a Gauss–Legendre
/// partial-fraction Padé approximant. Inputs with an eigenvalue within
/// [`tol::BRANCH`] of the closed negative real axis are rejected.
pub fn principal_matrix_logarithm(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    assert!(m.is_square(), "principal_matrix_logarithm needs a square matrix");
    let n = m.nrows();
    let (q, mut t) = complex_schur(m)?;
    for i in 0..n {
        let z = t[(i, i)];
        // Distance from z to the closed negative real axis.
        let distance = if z.re <= 0.0 { z.im.abs() } else { z.norm() };
        if distance <= tol::BRANCH {
            return Err(Error::BranchCut(z));
        }
    }

    let id = identity(n);
    let mut roots = 0u32;
    while one_norm(&(&t - &id)) > 0.25 {
        if roots >= 64 {
            return Err(Error::NoConvergence);
        }
        t = upper_triangular_sqrt(&t);
        roots += 1;
    }

    let x = &t - &id;
    let mut log_t = ComplexMatrix::zeros(n, n);
    for (node, weight) in gauss_legendre_unit(12) {
        let denom = &id + x.map(|z| z * node);
        let term = denom
            .solve_upper_triangular(&x)
            .expect("I + sX is nonsingular for ‖X‖ ≤ 1/4");
        log_t += term.map(|z| z * weight);
    }
    let factor = 2.0_f64.powi(roots as i32);
    Ok((&q * log_t * q.adjoint()).map(|z| z * factor))
}

/// Principal square root of an upper-triangular matrix (Björck–Hammarling recurrence).
fn upper_triangular_sqrt(t: &ComplexMatrix) -> ComplexMatrix {
    let n = t.nrows();
    let mut r = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

/// Gauss–Legendre nodes and weights on `[0, 1]`.
fn gauss_legendre_unit(order: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(order);
    for k in 0..order {
        // Newton iteration on P_order starting from the Chebyshev-like guess.
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for m in 2..=order {
                let p2 = ((2 * m - 1) as f64 * x * p1 - (m - 1) as f64 * p0) / m as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((x + 1.0) / 2.0, w / 2.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{diag, max_abs_diff, pauli_x, pauli_z, zeros, I};
    use crate::random::{random_hermitian, random_matrix, seeded};

    #[test]
    fn exp_of_zero_is_identity() {
        assert!(max_abs_diff(&matrix_exponential(&zeros(3)), &identity(3)) == 0.0);
    }

    #[test]
    fn exp_of_diagonal_phase() {
        let theta = 0.7;
        let m = pauli_z().map(|z| z * I * theta);
        let expected = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::from_polar(1.0, theta),
            Complex64::from_polar(1.0, -theta),
        ]));
        assert!(max_abs_diff(&matrix_exponential(&m), &expected) <= 1e-15);
    }

    #[test]
    fn exp_matches_eigendecomposition_oracle() {
        let mut rng = seeded(31);
        for d in 2..=6 {
            let h = random_hermitian(&mut rng, d);
            let oracle = h.map_spectrum(|e| c(e.exp()));
            let rel = max_abs_diff(&exp_pade13(h.matrix()), &oracle) / max_norm(&oracle);
            assert!(rel <= 1e-11, "pade route rel err {rel}");
            let rel = max_abs_diff(&matrix_exponential(h.matrix()), &oracle) / max_norm(&oracle);
            assert!(rel <= 1e-11, "normal route rel err {rel}");
        }
    }

    #[test]
    fn pade_and_normal_routes_agree_on_large_norms() {
        let mut rng = seeded(32);
        for _ in 0..10 {
            let h = random_hermitian(&mut rng, 4);
            let scale = 10.0 / h.norm();
            let m = h.matrix().map(|z| z * Complex64::new(0.2, -1.0) * scale * 0.98);
            let a = exp_normal(&m);
            let b = exp_pade13(&m);
            assert!(max_abs_diff(&a, &b) / max_norm(&a) <= 1e-12);
        }
    }

    #[test]
    fn exp_of_general_matrix_satisfies_group_law() {
        let mut rng = seeded(33);
        let m = random_matrix(&mut rng, 5);
        let whole = matrix_exponential(&m);
        let half = matrix_exponential(&m.scale(0.5));
        assert!(max_abs_diff(&whole, &(&half * &half)) / max_norm(&whole) <= 1e-12);
        // exp(M) exp(-M) = I
        let inv = matrix_exponential(&(-&m));
        assert!(max_abs_diff(&(&whole * inv), &identity(5)) <= 1e-11);
    }

    #[test]
    fn exp_of_anti_hermitian_is_unitary() {
        let mut rng = seeded(34);
        let h = random_hermitian(&mut rng, 6);
        let u = matrix_exponential(&h.matrix().map(|z| -I * 0.3 * z));
        assert!(max_abs_diff(&(&u * u.adjoint()), &identity(6)) <= 1e-11);
    }

    #[test]
    fn log_of_identity_is_zero() {
        assert!(max_norm(&principal_matrix_logarithm(&identity(4)).unwrap()) <= 1e-15);
    }

    #[test]
    fn log_of_diagonal_phase() {
        let m = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::from_polar(1.0, 0.3),
            Complex64::from_polar(1.0, -0.3),
        ]));
        let expected = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            Complex64::new(0.0, 0.3),
            Complex64::new(0.0, -0.3),
        ]));
        assert!(max_abs_diff(&principal_matrix_logarithm(&m).unwrap(), &expected) <= 1e-14);
    }

    #[test]
    fn log_inverts_exp_for_small_arguments() {
        let mut rng = seeded(35);
        for d in 2..=5 {
            let x = random_matrix(&mut rng, d);
            let x = x.scale(0.1 / one_norm(&x));
            let back = principal_matrix_logarithm(&matrix_exponential(&x)).unwrap();
            assert!(max_abs_diff(&back, &x) <= 1e-10);
        }
    }

    #[test]
    fn exp_inverts_log_for_far_from_identity() {
        let mut rng = seeded(36);
        for d in [3, 4, 9, 16] {
            let x = random_matrix(&mut rng, d);
            let m = &identity(d).scale(3.0) + x.scale(0.5);
            let l = principal_matrix_logarithm(&m).unwrap();
            assert!(max_abs_diff(&matrix_exponential(&l), &m) <= 1e-9);
            let eigs = general_eigenvalues(&l).unwrap();
            assert!(eigs.iter().all(|z| z.im.abs() < std::f64::consts::PI));
        }
    }

    #[test]
    fn log_rejects_negative_real_eigenvalue() {
        let m = diag(&[1.0, -2.0]);
        assert!(matches!(principal_matrix_logarithm(&m), Err(Error::BranchCut(_))));
        let singular = diag(&[1.0, 0.0]);
        assert!(matches!(
            principal_matrix_logarithm(&singular),
            Err(Error::BranchCut(_))
        ));
        // σ_x has eigenvalue −1.
        assert!(principal_matrix_logarithm(&pauli_x()).is_err());
    }

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let rule = gauss_legendre_unit(12);
        let integral: f64 = rule.iter().map(|(x, w)| w * x.powi(9)).sum();
        assert!((integral - 0.1).abs() < 1e-15);
        let total: f64 = rule.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigenvalues_of_triangularizable_matrix() {
        let mut rng = seeded(37);
        let h = random_hermitian(&mut rng, 5);
        let mut eigs: Vec<f64> = general_eigenvalues(h.matrix()).unwrap().iter().map(|z| z.re).collect();
        eigs.sort_by(f64::total_cmp);
        for (a, b) in eigs.iter().zip(h.eigenvalues()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
