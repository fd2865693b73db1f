//! Homotopy equivalence of classification data, with explicit discrete
//! certificates.
//!
//! Isometry fields over a 1-complex are compared through their Stiefel
//! records; structured operators through their Fredholm classes. When two
//! square-rank fields are equivalent, the emitted certificate is the
//! pointwise unitary geodesic `D_t = A·exp(t·log(A*B))` with the logarithm
//! branch rotated away from every eigenvalue of `A*B`; in the
//! simply-connected case (source rank < target rank) it is linear
//! interpolation followed by the polar correction back onto the isometries.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::invariants::fredholm::{fredholm_index, StructuredOperator};
use crate::invariants::stiefel_class;
use crate::isometry::IsometryField;
use crate::linalg::{herm_eigen, principal_arg, unitary_eigen, C64, CMat};
use crate::{Error, Result};

/// Maximum allowed distance between consecutive certificate steps.
pub const CERTIFICATE_STEP_BOUND: f64 = 0.5;

/// Outcome of a field homotopy decision.
#[derive(Debug, Clone)]
pub struct FieldHomotopy {
    pub equivalent: bool,
    /// Discrete path of valid isometry fields from `a` to `b`, present when
    /// the verdict is positive.
    pub certificate: Option<Vec<IsometryField>>,
}

/// Decide homotopy equivalence of two isometry fields over the same shape
/// data, emitting a stepwise certificate on a positive verdict.
pub fn homotopy_equivalent_fields(a: &IsometryField, b: &IsometryField) -> Result<FieldHomotopy> {
    check_same_shape(a, b)?;
    let ra = stiefel_class(a)?;
    let rb = stiefel_class(b)?;
    if ra != rb {
        return Ok(FieldHomotopy {
            equivalent: false,
            certificate: None,
        });
    }
    let certificate = build_certificate(a, b)?;
    validate_certificate(&certificate, 1e-6)?;
    Ok(FieldHomotopy {
        equivalent: true,
        certificate: Some(certificate),
    })
}

/// Decide homotopy equivalence of two structured operators: equality of
/// Fredholm classes, with all infinite-defect operators in one class.
pub fn homotopy_equivalent_operators(
    a: &StructuredOperator,
    b: &StructuredOperator,
) -> Result<bool> {
    Ok(fredholm_index(a)? == fredholm_index(b)?)
}

/// Every certificate step must be a valid isometry field (within `tol`)
/// and consecutive steps must stay within [`CERTIFICATE_STEP_BOUND`].
pub fn validate_certificate(certificate: &[IsometryField], tol: f64) -> Result<()> {
    if certificate.is_empty() {
        return Err(Error::CertificateFailure("empty certificate".into()));
    }
    for (i, field) in certificate.iter().enumerate() {
        field
            .check_invariants(tol)
            .map_err(|e| Error::CertificateFailure(format!("step {i}: {e}")))?;
    }
    for (i, pair) in certificate.windows(2).enumerate() {
        let d = pair[0].max_distance(&pair[1]);
        if d >= CERTIFICATE_STEP_BOUND {
            return Err(Error::CertificateFailure(format!(
                "steps {i}→{} are {d:.3} apart (bound {CERTIFICATE_STEP_BOUND})",
                i + 1
            )));
        }
    }
    Ok(())
}

fn check_same_shape(a: &IsometryField, b: &IsometryField) -> Result<()> {
    if a.base().as_ref() != b.base().as_ref() {
        return Err(Error::ShapeMismatch("fields live over different bases".into()));
    }
    if a.vertex_map() != b.vertex_map() {
        return Err(Error::ShapeMismatch("fields pull back along different maps".into()));
    }
    if a.source().values() != b.source().values() || a.target().values() != b.target().values() {
        return Err(Error::ShapeMismatch("fields connect different bundles".into()));
    }
    Ok(())
}

fn is_square(a: &IsometryField) -> bool {
    (0..a.base().n_vertices())
        .all(|z| a.source().rank_at(a.vertex_map()[z]) == a.target().rank_at(z))
}

fn build_certificate(a: &IsometryField, b: &IsometryField) -> Result<Vec<IsometryField>> {
    if a.max_distance(b) < 1e-12 {
        return Ok(vec![a.clone()]);
    }
    if is_square(a) {
        log_geodesic_path(a, b)
    } else {
        // Linear-plus-polar may hit a rank drop on adversarial data; retry
        // through random midpoints before giving up.
        match interpolation_path(a, b) {
            Ok(path) => Ok(path),
            Err(first_err) => {
                for attempt in 0..4u64 {
                    let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE + attempt);
                    let mid = crate::gen::random_isometry_field(
                        &mut rng,
                        a.base(),
                        a.source(),
                        a.vertex_map().to_vec(),
                        a.target(),
                        0,
                    )?;
                    if let (Ok(left), Ok(right)) =
                        (interpolation_path(a, &mid), interpolation_path(&mid, b))
                    {
                        let mut path = left;
                        path.extend(right.into_iter().skip(1));
                        return Ok(path);
                    }
                }
                Err(first_err)
            }
        }
    }
}

/// Winding-aligned matrix-logarithm geodesic between square-rank fields.
fn log_geodesic_path(a: &IsometryField, b: &IsometryField) -> Result<Vec<IsometryField>> {
    let n = a.base().n_vertices();
    let mut eigendata = Vec::with_capacity(n);
    let mut forbidden = Vec::new();
    for z in 0..n {
        let y = a.vertex_map()[z];
        let p = a.source().value(y);
        let id = CMat::identity(p.nrows(), p.nrows());
        let c_tilde = a.value(z).adjoint() * b.value(z) + (&id - p);
        let (angles, vecs) = unitary_eigen(&c_tilde);
        for &t in &angles {
            // The branch cut sits where θ + α ≡ π.
            forbidden.push(wrap_2pi(std::f64::consts::PI - t));
        }
        eigendata.push((angles, vecs));
    }
    let alpha = widest_gap_midpoint(&mut forbidden)?;

    // φ_j = wrap(θ_j + α) − α keeps every rotated angle off the cut, and
    // the complement angles (θ = 0) map to φ = 0 for any |α| < π.
    let phis: Vec<Vec<f64>> = eigendata
        .iter()
        .map(|(angles, _)| {
            angles
                .iter()
                .map(|&t| principal_arg(C64::from_polar(1.0, t + alpha)) - alpha)
                .collect()
        })
        .collect();
    let max_phi = phis
        .iter()
        .flatten()
        .map(|p| p.abs())
        .fold(0.0, f64::max);
    let steps = ((max_phi / 0.4).ceil() as usize).max(1);

    let mut path = Vec::with_capacity(steps + 1);
    path.push(a.clone());
    for i in 1..steps {
        let t = i as f64 / steps as f64;
        let values: Vec<CMat> = (0..n)
            .map(|z| {
                let (_, vecs) = &eigendata[z];
                let dim = vecs.nrows();
                let diag = CMat::from_fn(dim, dim, |r, c| {
                    if r == c {
                        C64::from_polar(1.0, t * phis[z][r])
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                a.value(z) * (vecs * diag * vecs.adjoint())
            })
            .collect();
        path.push(IsometryField::with_tol(
            Arc::clone(a.base()),
            Arc::clone(a.source()),
            a.vertex_map().to_vec(),
            Arc::clone(a.target()),
            values,
            1e-6,
        )?);
    }
    path.push(b.clone());
    Ok(path)
}

fn wrap_2pi(t: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut v = t % two_pi;
    if v < 0.0 {
        v += two_pi;
    }
    v
}

/// Midpoint of the widest circular gap between forbidden branch angles,
/// expressed as a rotation α.
fn widest_gap_midpoint(forbidden: &mut [f64]) -> Result<f64> {
    if forbidden.is_empty() {
        return Ok(0.0);
    }
    forbidden.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut best_gap = two_pi - forbidden.last().unwrap() + forbidden[0];
    let mut best_mid = wrap_2pi(forbidden.last().unwrap() + best_gap / 2.0);
    for w in forbidden.windows(2) {
        let gap = w[1] - w[0];
        if gap > best_gap {
            best_gap = gap;
            best_mid = w[0] + gap / 2.0;
        }
    }
    if best_gap < 1e-6 {
        return Err(Error::CertificateFailure(
            "spectra leave no room for a logarithm branch".into(),
        ));
    }
    // The forbidden values already live in α-space, so the gap midpoint is
    // the rotation itself.
    Ok(principal_arg(C64::from_polar(1.0, best_mid)))
}

/// Linear interpolation followed by polar correction; errors on rank drop.
fn interpolation_path(a: &IsometryField, b: &IsometryField) -> Result<Vec<IsometryField>> {
    let n = a.base().n_vertices();
    let mut steps = 8usize;
    loop {
        let mut path = Vec::with_capacity(steps + 1);
        path.push(a.clone());
        let mut ok = true;
        for i in 1..steps {
            let t = i as f64 / steps as f64;
            let mut values = Vec::with_capacity(n);
            for z in 0..n {
                let y = a.vertex_map()[z];
                let p = a.source().value(y);
                let id = CMat::identity(p.nrows(), p.nrows());
                let m = a.value(z) * C64::new(1.0 - t, 0.0) + b.value(z) * C64::new(t, 0.0);
                let gram = m.adjoint() * &m + (&id - p);
                let (vals, vecs) = herm_eigen(&gram);
                if vals.iter().any(|&l| l < 1e-3) {
                    return Err(Error::CertificateFailure(format!(
                        "interpolation rank drop at vertex {z}, t={t:.3}"
                    )));
                }
                let dim = vals.len();
                let inv_sqrt = CMat::from_fn(dim, dim, |r, c| {
                    if r == c {
                        C64::new(1.0 / vals[r].sqrt(), 0.0)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                values.push(m * (&vecs * inv_sqrt * vecs.adjoint()));
            }
            path.push(IsometryField::with_tol(
                Arc::clone(a.base()),
                Arc::clone(a.source()),
                a.vertex_map().to_vec(),
                Arc::clone(a.target()),
                values,
                1e-6,
            )?);
        }
        path.push(b.clone());
        for w in path.windows(2) {
            if w[0].max_distance(&w[1]) >= 0.45 {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(path);
        }
        steps *= 2;
        if steps > 2048 {
            return Err(Error::CertificateFailure(
                "interpolation path failed to refine below the step bound".into(),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_cycle_setup, random_isometry_field};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_fields_get_a_constant_certificate() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let (_, field) = random_cycle_setup(&mut rng, 16, 3, 2, 2, 1).unwrap();
        let h = homotopy_equivalent_fields(&field, &field).unwrap();
        assert!(h.equivalent);
        assert_eq!(h.certificate.as_ref().unwrap().len(), 1);
    }

    #[test]
    fn different_windings_are_not_equivalent() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let (base, f2) = random_cycle_setup(&mut rng, 32, 2, 1, 1, 2).unwrap();
        let f5 = random_isometry_field(
            &mut rng,
            &base,
            f2.source(),
            f2.vertex_map().to_vec(),
            f2.target(),
            5,
        )
        .unwrap();
        let h = homotopy_equivalent_fields(&f2, &f5).unwrap();
        assert!(!h.equivalent);
        assert!(h.certificate.is_none());
    }

    #[test]
    fn equal_winding_square_fields_get_a_log_geodesic() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let (base, a) = random_cycle_setup(&mut rng, 24, 3, 2, 2, -1).unwrap();
        let b = random_isometry_field(
            &mut rng,
            &base,
            a.source(),
            a.vertex_map().to_vec(),
            a.target(),
            -1,
        )
        .unwrap();
        let h = homotopy_equivalent_fields(&a, &b).unwrap();
        assert!(h.equivalent);
        let cert = h.certificate.unwrap();
        assert!(cert.len() >= 2);
        validate_certificate(&cert, 1e-6).unwrap();
        assert!(cert[0].max_distance(&a) < 1e-12);
        assert!(cert.last().unwrap().max_distance(&b) < 1e-12);
        // Intermediate fields stay continuous along the cycle: a branch cut
        // crossing the spectrum would show up as a near-2 jump here.
        let n = base.n_vertices();
        for (i, step) in cert.iter().enumerate() {
            for z in 0..n {
                let jump =
                    crate::linalg::op_norm(&(step.value(z) - step.value((z + 1) % n)));
                assert!(jump < 1.2, "step {i}, edge ({z},{}): jump {jump}", (z + 1) % n);
            }
        }
    }

    #[test]
    fn low_rank_fields_are_always_equivalent_with_certificates() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let (base, a) = random_cycle_setup(&mut rng, 16, 3, 1, 2, 0).unwrap();
        let b = random_isometry_field(
            &mut rng,
            &base,
            a.source(),
            a.vertex_map().to_vec(),
            a.target(),
            3,
        )
        .unwrap();
        let h = homotopy_equivalent_fields(&a, &b).unwrap();
        assert!(h.equivalent, "k<m fields must be homotopic");
        let cert = h.certificate.unwrap();
        validate_certificate(&cert, 1e-6).unwrap();
        for w in cert.windows(2) {
            assert!(w[0].max_distance(&w[1]) < CERTIFICATE_STEP_BOUND);
        }
    }

    #[test]
    fn operator_verdicts_follow_the_index() {
        let z1 = StructuredOperator::power_symbol(1, 32, false).unwrap();
        let z1_again = StructuredOperator::power_symbol(1, 64, false).unwrap();
        let z2 = StructuredOperator::power_symbol(2, 32, false).unwrap();
        let inf_a = StructuredOperator::power_symbol(0, 16, true).unwrap();
        let inf_b = StructuredOperator::power_symbol(3, 16, true).unwrap();
        assert!(homotopy_equivalent_operators(&z1, &z1_again).unwrap());
        assert!(!homotopy_equivalent_operators(&z1, &z2).unwrap());
        assert!(homotopy_equivalent_operators(&inf_a, &inf_b).unwrap());
        assert!(!homotopy_equivalent_operators(&inf_a, &z1).unwrap());
    }

    #[test]
    fn certificates_serialize_as_wire_lists() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        let (base, a) = random_cycle_setup(&mut rng, 12, 2, 2, 2, 1).unwrap();
        let b = random_isometry_field(
            &mut rng,
            &base,
            a.source(),
            a.vertex_map().to_vec(),
            a.target(),
            1,
        )
        .unwrap();
        let h = homotopy_equivalent_fields(&a, &b).unwrap();
        let cert = h.certificate.unwrap();
        let wires: Vec<_> = cert.iter().map(|f| f.to_wire()).collect();
        let json = serde_json::to_string(&wires).unwrap();
        let back: Vec<crate::isometry::IsometryFieldWire> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.len(), cert.len());
        assert_eq!(back[0].vertex_map, cert[0].vertex_map());
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let (_, a) = random_cycle_setup(&mut rng, 12, 2, 1, 1, 0).unwrap();
        let (_, b) = random_cycle_setup(&mut rng, 16, 2, 1, 1, 0).unwrap();
        assert!(matches!(
            homotopy_equivalent_fields(&a, &b),
            Err(Error::ShapeMismatch(_))
        ));
    }
}
