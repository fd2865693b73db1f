//! Small dense complex linear algebra shared by the field modules.
//!
//! Everything here operates on `DMatrix<Complex<f64>>`. Fibers are tiny
//! (ambient dimension ≤ 4 in all shipped constructions), so dense
//! factorizations are always acceptable; the only large matrices are the
//! Toeplitz truncations in `invariants::fredholm`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Global tolerance for algebraic identities (idempotence, isometry,
/// morphism checks). Overridable per call site.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Eigenvalue threshold separating the 0- and 1-clusters of a numerical
/// projection.
pub const RANK_THRESHOLD: f64 = 0.5;

pub fn cplx(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Operator (spectral) norm via singular values.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Idempotence and hermiticity defects of a candidate projection.
pub fn projection_defects(p: &CMat) -> (f64, f64) {
    let idem = op_norm(&(p * p - p));
    let herm = op_norm(&(p.adjoint() - p));
    (idem, herm)
}

/// Rank of a (numerical) orthogonal projection: eigenvalues above
/// [`RANK_THRESHOLD`].
pub fn projection_rank(p: &CMat) -> usize {
    let eig = p.clone().symmetric_eigen();
    eig.eigenvalues.iter().filter(|&&l| l > RANK_THRESHOLD).count()
}

/// Eigenpairs of a hermitian matrix, eigenvalues ascending.
pub fn herm_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vecs.set_column(col, &eig.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Orthonormal columns spanning the range of a projection.
pub fn fiber_frame(p: &CMat) -> CMat {
    let (vals, vecs) = herm_eigen(p);
    let cols: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] > RANK_THRESHOLD).collect();
    let mut frame = CMat::zeros(p.nrows(), cols.len());
    for (j, &i) in cols.iter().enumerate() {
        frame.set_column(j, &vecs.column(i));
    }
    frame
}

/// Isometric factor of the polar decomposition of a full-column-rank
/// matrix: `m (m* m)^{-1/2}`. `None` when a column-space direction falls
/// below `tol`.
pub fn polar_isometric(m: &CMat, tol: f64) -> Option<CMat> {
    let gram = m.adjoint() * m;
    let (vals, vecs) = herm_eigen(&gram);
    if vals.iter().any(|&l| l < tol) {
        return None;
    }
    let inv_sqrt = CMat::from_fn(vals.len(), vals.len(), |i, j| {
        if i == j {
            cplx(1.0 / vals[i].sqrt(), 0.0)
        } else {
            cplx(0.0, 0.0)
        }
    });
    Some(m * &vecs * inv_sqrt * vecs.adjoint())
}

/// Transport an orthonormal frame onto the range of the next projection.
/// Valid whenever `‖p_next − p_prev‖ < 1`, which every accepted bundle
/// guarantees across edges.
pub fn transport_frame(frame: &CMat, p_next: &CMat) -> Option<CMat> {
    polar_isometric(&(p_next * frame), 1e-12)
}

/// Principal argument in (−π, π].
pub fn principal_arg(z: C64) -> f64 {
    let a = z.im.atan2(z.re);
    if a <= -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// Eigendecomposition of a unitary matrix: angles θ with `U v = e^{iθ} v`
/// and the matching orthonormal eigenvectors.
///
/// Runs two hermitian eigensolves — on `(U+U*)/2` and, within each of its
/// eigenvalue clusters, on `(U−U*)/2i` — which diagonalizes any normal
/// matrix without a general complex Schur step.
pub fn unitary_eigen(u: &CMat) -> (Vec<f64>, CMat) {
    let n = u.nrows();
    let half = cplx(0.5, 0.0);
    let re_part = (u + u.adjoint()) * half;
    let im_part = (u - u.adjoint()) * cplx(0.0, -0.5);
    let (hvals, hvecs) = herm_eigen(&re_part);

    let mut vectors = CMat::zeros(n, n);
    let mut col = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (hvals[end] - hvals[start]).abs() < 1e-7 {
            end += 1;
        }
        let width = end - start;
        let basis = hvecs.columns(start, width).into_owned();
        if width == 1 {
            vectors.set_column(col, &basis.column(0));
            col += 1;
        } else {
            let k_small = basis.adjoint() * &im_part * &basis;
            let (_, kvecs) = herm_eigen(&k_small);
            let refined = basis * kvecs;
            for j in 0..width {
                vectors.set_column(col, &refined.column(j));
                col += 1;
            }
        }
        start = end;
    }

    let angles: Vec<f64> = (0..n)
        .map(|j| {
            let v = vectors.column(j).into_owned();
            let lambda = (v.adjoint() * u * &v)[(0, 0)];
            principal_arg(lambda)
        })
        .collect();
    (angles, vectors)
}

/// `H^t` for a unitary `H` and real exponent `t` (through the principal
/// branch of each eigenvalue angle).
pub fn unitary_power(h: &CMat, t: f64) -> CMat {
    let (angles, vecs) = unitary_eigen(h);
    let n = h.nrows();
    let diag = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::from_polar(1.0, angles[i] * t)
        } else {
            cplx(0.0, 0.0)
        }
    });
    &vecs * diag * vecs.adjoint()
}

/// Sum of principal eigenvalue angles of a unitary.
pub fn unitary_angle_sum(h: &CMat) -> f64 {
    unitary_eigen(h).0.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_projection, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn op_norm_of_projection_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_projection(&mut rng, 4, 2);
        assert!((op_norm(&p) - 1.0).abs() < 1e-9);
        let (idem, herm) = projection_defects(&p);
        assert!(idem < 1e-10 && herm < 1e-10);
        assert_eq!(projection_rank(&p), 2);
    }

    #[test]
    fn fiber_frame_spans_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_projection(&mut rng, 4, 3);
        let b = fiber_frame(&p);
        assert_eq!(b.ncols(), 3);
        assert!(op_norm(&(b.adjoint() * &b - CMat::identity(3, 3))) < 1e-9);
        assert!(op_norm(&(&b * b.adjoint() - &p)) < 1e-9);
    }

    #[test]
    fn unitary_eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=4 {
            let u = random_unitary(&mut rng, n);
            let (angles, vecs) = unitary_eigen(&u);
            let diag = CMat::from_fn(n, n, |i, j| {
                if i == j {
                    C64::from_polar(1.0, angles[i])
                } else {
                    cplx(0.0, 0.0)
                }
            });
            let rebuilt = &vecs * diag * vecs.adjoint();
            assert!(op_norm(&(rebuilt - u)) < 1e-8, "n={n}");
        }
    }

    #[test]
    fn unitary_eigen_handles_conjugate_pairs() {
        // cos-clustered spectrum e^{±iθ}: the second hermitian stage must
        // separate the eigenvectors.
        let theta = 1.1_f64;
        let rot = CMat::from_row_slice(
            2,
            2,
            &[
                cplx(theta.cos(), 0.0),
                cplx(-theta.sin(), 0.0),
                cplx(theta.sin(), 0.0),
                cplx(theta.cos(), 0.0),
            ],
        );
        let (angles, vecs) = unitary_eigen(&rot);
        let mut sorted = angles.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((sorted[0] + theta).abs() < 1e-9);
        assert!((sorted[1] - theta).abs() < 1e-9);
        let diag = CMat::from_fn(2, 2, |i, j| {
            if i == j {
                C64::from_polar(1.0, angles[i])
            } else {
                cplx(0.0, 0.0)
            }
        });
        assert!(op_norm(&(&vecs * diag * vecs.adjoint() - rot)) < 1e-9);
    }

    #[test]
    fn polar_isometric_recovers_isometry() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let u = random_unitary(&mut rng, 4);
        let iso = u.columns(0, 2).into_owned();
        let stretched = &iso * CMat::from_fn(2, 2, |i, j| {
            if i == j {
                cplx(1.5 + i as f64, 0.0)
            } else {
                cplx(0.0, 0.0)
            }
        });
        let recovered = polar_isometric(&stretched, 1e-9).unwrap();
        assert!(op_norm(&(recovered.adjoint() * &recovered - CMat::identity(2, 2))) < 1e-9);
        assert!(op_norm(&(recovered - iso)) < 1e-9);
    }
}
