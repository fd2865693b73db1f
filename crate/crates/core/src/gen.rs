//! Seeded generators for random-but-valid test data: unitaries,
//! projections, smooth fields and sections.
//!
//! Both the property suites and `busby verify` draw from these, always
//! through an explicit RNG so runs are reproducible.

use std::sync::Arc;

use rand::Rng;

use crate::bundle::ProjectionField;
use crate::hilbmod::SectionField;
use crate::isometry::IsometryField;
use crate::linalg::{cplx, C64, CMat, CVec};
use crate::mesh::SimplicialSpace;
use crate::Result;

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller; good enough for Ginibre sampling.
    let u1: f64 = rng.random_range(1e-12..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn random_complex(rng: &mut impl Rng) -> C64 {
    cplx(gaussian(rng), gaussian(rng))
}

pub fn random_cvec(rng: &mut impl Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| random_complex(rng))
}

/// Haar-ish random unitary: QR of a Ginibre matrix with the R-diagonal
/// phases absorbed.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| random_complex(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { cplx(1.0, 0.0) };
        let col = q.column(j) * phase;
        q.set_column(j, &col);
    }
    q
}

/// Random rank-`rank` orthogonal projection on C^n.
pub fn random_projection(rng: &mut impl Rng, n: usize, rank: usize) -> CMat {
    assert!(rank <= n);
    let u = random_unitary(rng, n);
    let frame = u.columns(0, rank).into_owned();
    &frame * frame.adjoint()
}

/// Random skew-hermitian matrix with unit operator-norm scale.
pub fn random_skew(rng: &mut impl Rng, n: usize) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| random_complex(rng));
    let s = (&g - g.adjoint()) * cplx(0.5, 0.0);
    let norm = crate::linalg::op_norm(&s);
    if norm > 0.0 {
        s / cplx(norm, 0.0)
    } else {
        s
    }
}

/// A projection field conjugated out of a constant projection by a unitary
/// field varying smoothly in the vertex coordinates. Amplitude well below 1
/// keeps the edge-continuity invariant.
pub fn random_projection_field(
    rng: &mut impl Rng,
    space: &Arc<SimplicialSpace>,
    ambient_dim: usize,
    rank: usize,
    amplitude: f64,
) -> Result<ProjectionField> {
    let p0 = random_projection(rng, ambient_dim, rank);
    let s1 = random_skew(rng, ambient_dim);
    let s2 = random_skew(rng, ambient_dim);
    let values: Vec<CMat> = (0..space.n_vertices())
        .map(|v| {
            let [x, y] = space.coords(v);
            let skew = &s1 * C64::from(amplitude * x) + &s2 * C64::from(amplitude * y);
            let u = skew_exp(&skew);
            &u * &p0 * u.adjoint()
        })
        .collect();
    ProjectionField::new(Arc::clone(space), ambient_dim, values)
}

/// exp of a skew-hermitian matrix via the hermitian eigendecomposition of
/// `iS`.
pub fn skew_exp(s: &CMat) -> CMat {
    let n = s.nrows();
    let h = s * cplx(0.0, -1.0); // hermitian
    let (vals, vecs) = crate::linalg::herm_eigen(&h);
    let diag = CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::from_polar(1.0, vals[i])
        } else {
            cplx(0.0, 0.0)
        }
    });
    &vecs * diag * vecs.adjoint()
}

/// Random section of a bundle: fiber projection of per-vertex Gaussian
/// vectors.
pub fn random_section(rng: &mut impl Rng, bundle: &Arc<ProjectionField>) -> SectionField {
    let m = bundle.ambient_dim();
    let values: Vec<CVec> = (0..bundle.space().n_vertices())
        .map(|v| bundle.value(v) * random_cvec(rng, m))
        .collect();
    SectionField::new(Arc::clone(bundle), values).expect("projected vectors lie in the fibers")
}

/// Random fiberwise isometry field over a cycle base with a prescribed
/// determinant winding (meaningful when source and target ranks agree;
/// otherwise the winding input only shifts phases).
///
/// The construction transports closed frames over both bundles and fills in
/// `B_ζ · V(θ) · [I_k; 0] · B_ξ*` with `V` a smooth unitary loop of the
/// requested winding, so the result is continuous along the cycle.
pub fn random_isometry_field(
    rng: &mut impl Rng,
    base: &Arc<SimplicialSpace>,
    source: &Arc<ProjectionField>,
    vertex_map: Vec<usize>,
    target: &Arc<ProjectionField>,
    winding: i64,
) -> Result<IsometryField> {
    let cycle: Vec<usize> = (0..base.n_vertices()).collect();
    let source_values: Vec<&CMat> = cycle.iter().map(|&z| source.value(vertex_map[z])).collect();
    let target_values: Vec<&CMat> = cycle.iter().map(|&z| target.value(z)).collect();
    let b_source = crate::isometry::closed_cycle_frames(&source_values)?;
    let b_target = crate::isometry::closed_cycle_frames(&target_values)?;
    let k = b_source[0].ncols();
    let m = b_target[0].ncols();
    assert!(k <= m, "source rank must not exceed target rank");

    let n = base.n_vertices();
    let s1 = random_skew(rng, m);
    let s2 = random_skew(rng, m);
    let amp: f64 = rng.random_range(0.1..0.35);
    let values: Vec<CMat> = (0..n)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / n as f64;
            let smooth = skew_exp(&(&s1 * C64::from(amp * theta.cos()) + &s2 * C64::from(amp * theta.sin())));
            let mut phase = CMat::identity(m, m);
            phase[(0, 0)] = C64::from_polar(1.0, winding as f64 * theta);
            let v = &smooth * phase;
            let w = v.columns(0, k).into_owned();
            &b_target[j] * w * b_source[j].adjoint()
        })
        .collect();
    IsometryField::new(
        Arc::clone(base),
        Arc::clone(source),
        vertex_map,
        Arc::clone(target),
        values,
    )
}

/// Convenience: a trivial-bundle isometry field over a standalone cycle,
/// with given ambient dimensions and ranks.
pub fn random_cycle_setup(
    rng: &mut impl Rng,
    cycle_len: usize,
    ambient: usize,
    source_rank: usize,
    target_rank: usize,
    winding: i64,
) -> Result<(Arc<SimplicialSpace>, IsometryField)> {
    let base = Arc::new(crate::mesh::cycle_space(cycle_len)?);
    let source = Arc::new(random_projection_field(rng, &base, ambient, source_rank, 0.25)?);
    let target = Arc::new(random_projection_field(rng, &base, ambient, target_rank, 0.25)?);
    let vertex_map: Vec<usize> = (0..cycle_len).collect();
    let field = random_isometry_field(rng, &base, &source, vertex_map, &target, winding)?;
    Ok((base, field))
}
