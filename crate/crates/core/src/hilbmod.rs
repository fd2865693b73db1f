//! Hilbert C*-module structure on section fields: algebra-valued inner
//! products, sup norms, ideal membership, module morphisms and fiber
//! quotient norms.
//!
//! Sections of a projection bundle pair pointwise, `⟨s,s'⟩(v) = s(v)*s'(v)`,
//! giving a function field on the base. Over a space with marked boundary
//! the ideal submodule consists of the sections whose self-pairing vanishes
//! on the boundary.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundle::ProjectionField;
use crate::linalg::{C64, CMat, CVec, DEFAULT_TOL};
use crate::mesh::SimplicialSpace;
use crate::{Error, Result};

/// Scalar function on the vertices of a space: an element of C(X), or of
/// C₀(U) when it vanishes on the boundary.
#[derive(Debug, Clone)]
pub struct FunctionField {
    space: Arc<SimplicialSpace>,
    values: Vec<C64>,
}

impl FunctionField {
    pub fn new(space: Arc<SimplicialSpace>, values: Vec<C64>) -> Result<Self> {
        if values.len() != space.n_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} values for {} vertices",
                values.len(),
                space.n_vertices()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument("non-finite function value".into()));
        }
        Ok(FunctionField { space, values })
    }

    pub fn from_fn(space: &Arc<SimplicialSpace>, f: impl FnMut(usize) -> C64) -> Self {
        let values = (0..space.n_vertices()).map(f).collect();
        FunctionField {
            space: Arc::clone(space),
            values,
        }
    }

    pub fn constant(space: &Arc<SimplicialSpace>, z: C64) -> Self {
        Self::from_fn(space, |_| z)
    }

    pub fn space(&self) -> &Arc<SimplicialSpace> {
        &self.space
    }

    pub fn value(&self, v: usize) -> C64 {
        self.values[v]
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn conj(&self) -> FunctionField {
        FunctionField {
            space: Arc::clone(&self.space),
            values: self.values.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max modulus over the boundary vertices.
    pub fn boundary_max_abs(&self) -> f64 {
        self.space
            .boundary_vertices()
            .into_iter()
            .map(|v| self.values[v].norm())
            .fold(0.0, f64::max)
    }

    /// True when the function is within `tol` of a single constant on all
    /// boundary vertices (an element of the one-point-compactification
    /// algebra).
    pub fn constant_on_boundary(&self, tol: f64) -> bool {
        let bnd = self.space.boundary_vertices();
        if bnd.len() < 2 {
            return true;
        }
        let first = self.values[bnd[0]];
        bnd.iter().all(|&v| (self.values[v] - first).norm() <= tol)
    }
}

/// Per-vertex fiber vector lying in a projection bundle.
#[derive(Debug, Clone)]
pub struct SectionField {
    bundle: Arc<ProjectionField>,
    values: Vec<CVec>,
}

impl SectionField {
    pub fn new(bundle: Arc<ProjectionField>, values: Vec<CVec>) -> Result<Self> {
        Self::with_tol(bundle, values, DEFAULT_TOL)
    }

    pub fn with_tol(bundle: Arc<ProjectionField>, values: Vec<CVec>, tol: f64) -> Result<Self> {
        let n = bundle.space().n_vertices();
        if values.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} section values for {} vertices",
                values.len(),
                n
            )));
        }
        for (v, s) in values.iter().enumerate() {
            if s.len() != bundle.ambient_dim() {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v}: section value has dimension {}, ambient is {}",
                    s.len(),
                    bundle.ambient_dim()
                )));
            }
            let defect = (bundle.value(v) * s - s).norm();
            if defect > tol {
                return Err(Error::NotASection { vertex: v, defect });
            }
        }
        Ok(SectionField { bundle, values })
    }

    pub fn from_fn(bundle: &Arc<ProjectionField>, f: impl FnMut(usize) -> CVec) -> Result<Self> {
        let values = (0..bundle.space().n_vertices()).map(f).collect();
        Self::new(Arc::clone(bundle), values)
    }

    pub fn zero(bundle: &Arc<ProjectionField>) -> Self {
        let m = bundle.ambient_dim();
        let values = vec![CVec::zeros(m); bundle.space().n_vertices()];
        SectionField {
            bundle: Arc::clone(bundle),
            values,
        }
    }

    /// Constant ambient vector projected into the fibers.
    pub fn projected_constant(bundle: &Arc<ProjectionField>, v: &CVec) -> Result<Self> {
        Self::from_fn(bundle, |z| bundle.value(z) * v)
    }

    pub fn bundle(&self) -> &Arc<ProjectionField> {
        &self.bundle
    }

    pub fn value(&self, v: usize) -> &CVec {
        &self.values[v]
    }

    pub fn values(&self) -> &[CVec] {
        &self.values
    }

    pub fn add(&self, other: &SectionField) -> Result<SectionField> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SectionField) -> Result<SectionField> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &SectionField, f: impl Fn(&CVec, &CVec) -> CVec) -> Result<SectionField> {
        same_bundle(self, other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| f(a, b))
            .collect();
        Ok(SectionField {
            bundle: Arc::clone(&self.bundle),
            values,
        })
    }

    pub fn scale(&self, z: C64) -> SectionField {
        SectionField {
            bundle: Arc::clone(&self.bundle),
            values: self.values.iter().map(|s| s * z).collect(),
        }
    }

    /// Right module action of a function field on the same space.
    pub fn mul_fn(&self, g: &FunctionField) -> Result<SectionField> {
        if g.space().as_ref() != self.bundle.space().as_ref() {
            return Err(Error::BundleMismatch(
                "function field lives on a different space".into(),
            ));
        }
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(v, s)| s * g.value(v))
            .collect();
        Ok(SectionField {
            bundle: Arc::clone(&self.bundle),
            values,
        })
    }

    pub fn to_wire(&self) -> SectionWire {
        SectionWire {
            bundle: None,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(v, s)| (v.to_string(), s.iter().map(|z| [z.re, z.im]).collect()))
                .collect(),
        }
    }

    pub fn from_wire(bundle: Arc<ProjectionField>, wire: &SectionWire) -> Result<Self> {
        let n = bundle.space().n_vertices();
        let m = bundle.ambient_dim();
        let mut values = Vec::with_capacity(n);
        for v in 0..n {
            let entry = wire.values.get(&v.to_string()).ok_or_else(|| {
                Error::InvalidArgument(format!("section JSON is missing vertex {v}"))
            })?;
            if entry.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v}: section JSON has dimension {}, ambient is {m}",
                    entry.len()
                )));
            }
            values.push(CVec::from_fn(m, |i, _| C64::new(entry[i][0], entry[i][1])));
        }
        Self::new(bundle, values)
    }
}

/// Wire format: `{"bundle": <ref>, "values": {"<vertex>": [[re,im],…]}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SectionWire {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bundle: Option<String>,
    pub values: BTreeMap<String, Vec<[f64; 2]>>,
}

fn same_bundle(a: &SectionField, b: &SectionField) -> Result<()> {
    if !Arc::ptr_eq(&a.bundle, &b.bundle) && a.bundle.values() != b.bundle.values() {
        return Err(Error::BundleMismatch(
            "sections live over different bundles".into(),
        ));
    }
    Ok(())
}

/// Pointwise algebra-valued inner product `⟨s,s'⟩(v) = s(v)* s'(v)`
/// (conjugate-linear in the first argument).
pub fn inner_product(s: &SectionField, s2: &SectionField) -> Result<FunctionField> {
    same_bundle(s, s2)?;
    let values = s
        .values()
        .iter()
        .zip(s2.values())
        .map(|(a, b)| a.dotc(b))
        .collect();
    FunctionField::new(Arc::clone(s.bundle().space()), values)
}

/// Hilbert-module norm `‖⟨s,s⟩‖^{1/2}`: max Euclidean fiber norm.
pub fn sup_norm(s: &SectionField) -> f64 {
    s.values().iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Membership in the ideal submodule Γ₀: `⟨s,s⟩ ≤ tol` at every boundary
/// vertex.
pub fn is_ideal_section_with_tol(s: &SectionField, tol: f64) -> bool {
    s.bundle()
        .space()
        .boundary_vertices()
        .into_iter()
        .all(|v| s.value(v).norm_squared() <= tol)
}

pub fn is_ideal_section(s: &SectionField) -> bool {
    is_ideal_section_with_tol(s, DEFAULT_TOL)
}

/// A module morphism between section spaces: a vertex map `f` from the
/// target base into the source base (the Gelfand dual of the algebra map)
/// together with a per-target-vertex linear map of fibers.
///
/// Construction checks well-formedness only — that each fiber transform
/// carries the source fiber into the target fiber. Whether the morphism
/// respects inner products is the business of [`check_morphism`].
#[derive(Debug, Clone)]
pub struct ModuleMorphism {
    source: Arc<ProjectionField>,
    target: Arc<ProjectionField>,
    vertex_map: Vec<usize>,
    fiber_transform: Vec<CMat>,
}

impl ModuleMorphism {
    pub fn new(
        source: Arc<ProjectionField>,
        target: Arc<ProjectionField>,
        vertex_map: Vec<usize>,
        fiber_transform: Vec<CMat>,
    ) -> Result<Self> {
        let nz = target.space().n_vertices();
        if vertex_map.len() != nz || fiber_transform.len() != nz {
            return Err(Error::InvalidArgument(
                "vertex map / fiber transform length must match the target space".into(),
            ));
        }
        for (z, &y) in vertex_map.iter().enumerate() {
            if y >= source.space().n_vertices() {
                return Err(Error::InvalidArgument(format!(
                    "vertex map sends {z} to missing source vertex {y}"
                )));
            }
            let t = &fiber_transform[z];
            if t.nrows() != target.ambient_dim() || t.ncols() != source.ambient_dim() {
                return Err(Error::InvalidArgument(format!(
                    "fiber transform at {z} is {}×{}, expected {}×{}",
                    t.nrows(),
                    t.ncols(),
                    target.ambient_dim(),
                    source.ambient_dim()
                )));
            }
            // Image condition: (1 − P_target) T P_source ≈ 0.
            let escape = (CMat::identity(t.nrows(), t.nrows()) - target.value(z)) * t * source.value(y);
            let defect = crate::linalg::op_norm(&escape);
            if defect > DEFAULT_TOL {
                return Err(Error::MorphismFailure(format!(
                    "fiber transform at vertex {z} leaves the target fiber (defect {defect:.3e})"
                )));
            }
        }
        Ok(ModuleMorphism {
            source,
            target,
            vertex_map,
            fiber_transform,
        })
    }

    /// Identity morphism of a bundle.
    pub fn identity(bundle: &Arc<ProjectionField>) -> Self {
        let n = bundle.space().n_vertices();
        let m = bundle.ambient_dim();
        ModuleMorphism {
            source: Arc::clone(bundle),
            target: Arc::clone(bundle),
            vertex_map: (0..n).collect(),
            fiber_transform: vec![CMat::identity(m, m); n],
        }
    }

    pub fn source(&self) -> &Arc<ProjectionField> {
        &self.source
    }

    pub fn target(&self) -> &Arc<ProjectionField> {
        &self.target
    }

    pub fn vertex_map(&self) -> &[usize] {
        &self.vertex_map
    }

    pub fn fiber_transform(&self, z: usize) -> &CMat {
        &self.fiber_transform[z]
    }
}

/// Push a section through a morphism: `z ↦ T(z) s(f(z))`.
pub fn apply_morphism(phi: &ModuleMorphism, s: &SectionField) -> Result<SectionField> {
    if s.bundle().as_ref().values() != phi.source.values() {
        return Err(Error::BundleMismatch(
            "section does not live over the morphism source".into(),
        ));
    }
    let values: Vec<CVec> = (0..phi.vertex_map.len())
        .map(|z| &phi.fiber_transform[z] * s.value(phi.vertex_map[z]))
        .collect();
    SectionField::with_tol(Arc::clone(&phi.target), values, 1e-6)
}

/// Decide the module-morphism identity `⟨Φv, Φv'⟩ = ⟨v,v'⟩ ∘ f` on sample
/// pairs, together with linearity on the samples.
pub fn check_morphism(
    phi: &ModuleMorphism,
    samples: &[(SectionField, SectionField)],
    tol: f64,
) -> bool {
    check_morphism_report(phi, samples, tol).is_none()
}

/// Like [`check_morphism`] but reports the first counterexample as
/// `(pair index, target vertex, defect)`.
pub fn check_morphism_report(
    phi: &ModuleMorphism,
    samples: &[(SectionField, SectionField)],
    tol: f64,
) -> Option<(usize, usize, f64)> {
    let a = C64::new(0.7, -0.2);
    let b = C64::new(-0.3, 0.5);
    for (idx, (v, w)) in samples.iter().enumerate() {
        let (pv, pw) = match (apply_morphism(phi, v), apply_morphism(phi, w)) {
            (Ok(pv), Ok(pw)) => (pv, pw),
            _ => return Some((idx, 0, f64::INFINITY)),
        };
        let lhs = match inner_product(&pv, &pw) {
            Ok(f) => f,
            Err(_) => return Some((idx, 0, f64::INFINITY)),
        };
        let rhs = match inner_product(v, w) {
            Ok(f) => f,
            Err(_) => return Some((idx, 0, f64::INFINITY)),
        };
        for (z, &y) in phi.vertex_map.iter().enumerate() {
            let defect = (lhs.value(z) - rhs.value(y)).norm();
            if defect > tol {
                return Some((idx, z, defect));
            }
        }
        // Linearity on the sample pair.
        let combo = v.scale(a).add(&w.scale(b)).expect("same bundle");
        if let (Ok(pc), Ok(expect)) = (apply_morphism(phi, &combo), pv.scale(a).add(&pw.scale(b))) {
            for z in 0..phi.vertex_map.len() {
                let defect = (pc.value(z) - expect.value(z)).norm();
                if defect > tol {
                    return Some((idx, z, defect));
                }
            }
        } else {
            return Some((idx, 0, f64::INFINITY));
        }
    }
    None
}

/// Quotient norm of a section in the fiber over `z`: the infimum of sup
/// norms over sections agreeing with `s` at `z`, which is attained at the
/// evaluation, `‖s(z)‖`.
pub fn fiber_quotient_norm(s: &SectionField, z: usize) -> f64 {
    s.value(z).norm()
}

/// Fullness check: a vertex where every sample's self-pairing vanishes
/// (below `tol`), if one exists. `None` means the inner products of the
/// samples generate a function field with no common zero.
pub fn common_zero(samples: &[SectionField], tol: f64) -> Option<usize> {
    if samples.is_empty() {
        return Some(0);
    }
    let n = samples[0].bundle().space().n_vertices();
    (0..n).find(|&v| samples.iter().all(|s| s.value(v).norm_squared() <= tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{random_section, random_unitary};
    use crate::linalg::cplx;
    use crate::mesh::build_disk_mesh;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn line_bundle(radial: usize, angular: usize) -> Arc<ProjectionField> {
        let disk = Arc::new(build_disk_mesh(radial, angular).unwrap());
        Arc::new(ProjectionField::trivial(disk, 1).unwrap())
    }

    fn rank2_bundle() -> Arc<ProjectionField> {
        let disk = Arc::new(build_disk_mesh(2, 8).unwrap());
        Arc::new(ProjectionField::trivial(disk, 2).unwrap())
    }

    fn unit_section(bundle: &Arc<ProjectionField>) -> SectionField {
        SectionField::from_fn(bundle, |_| CVec::from_element(1, cplx(1.0, 0.0))).unwrap()
    }

    #[test]
    fn inner_product_of_unit_section_is_one() {
        let bundle = line_bundle(1, 4);
        let s = unit_section(&bundle);
        let f = inner_product(&s, &s).unwrap();
        assert!(f.values().iter().all(|z| (z - cplx(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn orthogonal_constant_sections_pair_to_zero() {
        let bundle = rank2_bundle();
        let e1 = SectionField::projected_constant(&bundle, &CVec::from_vec(vec![cplx(1.0, 0.0), cplx(0.0, 0.0)])).unwrap();
        let e2 = SectionField::projected_constant(&bundle, &CVec::from_vec(vec![cplx(0.0, 0.0), cplx(1.0, 0.0)])).unwrap();
        let f = inner_product(&e1, &e2).unwrap();
        assert!(f.max_abs() < 1e-12);
    }

    #[test]
    fn inner_product_matches_direct_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let bundle = rank2_bundle();
        let s = random_section(&mut rng, &bundle);
        let t = random_section(&mut rng, &bundle);
        let f = inner_product(&s, &t).unwrap();
        for v in 0..bundle.space().n_vertices() {
            let direct: C64 = (0..2).map(|i| s.value(v)[i].conj() * t.value(v)[i]).sum();
            assert!((f.value(v) - direct).norm() < 1e-12);
        }
    }

    #[test]
    fn sup_norm_cases() {
        let bundle = line_bundle(1, 4);
        assert_eq!(sup_norm(&SectionField::zero(&bundle)), 0.0);
        assert!((sup_norm(&unit_section(&bundle)) - 1.0).abs() < 1e-12);
        // Scaled by vertex index: the max is at the last vertex.
        let s = SectionField::from_fn(&bundle, |v| CVec::from_element(1, cplx(v as f64, 0.0))).unwrap();
        let exhaustive = (0..bundle.space().n_vertices())
            .map(|v| s.value(v).norm())
            .fold(0.0, f64::max);
        assert_eq!(sup_norm(&s), exhaustive);
        assert!((sup_norm(&s) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn ideal_membership() {
        let bundle = line_bundle(2, 6);
        assert!(is_ideal_section(&SectionField::zero(&bundle)));
        assert!(!is_ideal_section(&unit_section(&bundle)));
        // Multiply by a function vanishing on the boundary.
        let g = FunctionField::from_fn(bundle.space(), |v| {
            if bundle.space().is_boundary(v) {
                cplx(0.0, 0.0)
            } else {
                cplx(1.0, -0.5)
            }
        });
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let s = random_section(&mut rng, &bundle).mul_fn(&g).unwrap();
        assert!(is_ideal_section(&s));
    }

    #[test]
    fn ideal_submodule_is_stable_under_module_action() {
        let bundle = line_bundle(2, 6);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let vanishing = FunctionField::from_fn(bundle.space(), |v| {
            if bundle.space().is_boundary(v) {
                cplx(0.0, 0.0)
            } else {
                cplx(0.3, 0.9)
            }
        });
        let s = random_section(&mut rng, &bundle).mul_fn(&vanishing).unwrap();
        assert!(is_ideal_section(&s));
        let g = FunctionField::from_fn(bundle.space(), |v| cplx(1.0 + v as f64, -2.0));
        let sg = s.mul_fn(&g).unwrap();
        assert!(is_ideal_section(&sg));
    }

    #[test]
    fn identity_morphism_checks_out() {
        let bundle = rank2_bundle();
        let phi = ModuleMorphism::identity(&bundle);
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let samples: Vec<_> = (0..5)
            .map(|_| (random_section(&mut rng, &bundle), random_section(&mut rng, &bundle)))
            .collect();
        assert!(check_morphism(&phi, &samples, DEFAULT_TOL));
    }

    #[test]
    fn contraction_by_half_fails_the_isometry_identity() {
        let bundle = rank2_bundle();
        let n = bundle.space().n_vertices();
        let phi = ModuleMorphism::new(
            Arc::clone(&bundle),
            Arc::clone(&bundle),
            (0..n).collect(),
            vec![CMat::identity(2, 2) * cplx(0.5, 0.0); n],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let samples = vec![(random_section(&mut rng, &bundle), random_section(&mut rng, &bundle))];
        assert!(!check_morphism(&phi, &samples, DEFAULT_TOL));
    }

    #[test]
    fn pointwise_unitary_morphism_passes() {
        let bundle = rank2_bundle();
        let n = bundle.space().n_vertices();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let transforms: Vec<CMat> = (0..n).map(|_| random_unitary(&mut rng, 2)).collect();
        let phi = ModuleMorphism::new(
            Arc::clone(&bundle),
            Arc::clone(&bundle),
            (0..n).collect(),
            transforms,
        )
        .unwrap();
        let samples: Vec<_> = (0..8)
            .map(|_| (random_section(&mut rng, &bundle), random_section(&mut rng, &bundle)))
            .collect();
        assert!(check_morphism(&phi, &samples, DEFAULT_TOL));
        // Contractivity of a validated morphism.
        for (s, _) in &samples {
            let image = apply_morphism(&phi, s).unwrap();
            assert!(sup_norm(&image) <= sup_norm(s) + 1e-9);
        }
    }

    #[test]
    fn apply_morphism_identity_and_rotation() {
        let bundle = line_bundle(1, 4);
        let s = unit_section(&bundle);
        let id = ModuleMorphism::identity(&bundle);
        let same = apply_morphism(&id, &s).unwrap();
        for v in 0..bundle.space().n_vertices() {
            assert!((same.value(v) - s.value(v)).norm() < 1e-12);
        }
        let phase = C64::from_polar(1.0, 1.2);
        let n = bundle.space().n_vertices();
        let rot = ModuleMorphism::new(
            Arc::clone(&bundle),
            Arc::clone(&bundle),
            (0..n).collect(),
            vec![CMat::from_element(1, 1, phase); n],
        )
        .unwrap();
        let rotated = apply_morphism(&rot, &s).unwrap();
        for v in 0..n {
            assert!((rotated.value(v)[0] - phase).norm() < 1e-12);
        }
        // Images still satisfy the inner-product identity.
        assert!(check_morphism(&rot, &[(s.clone(), s.clone())], DEFAULT_TOL));
    }

    #[test]
    fn section_wire_round_trip() {
        let bundle = rank2_bundle();
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let s = random_section(&mut rng, &bundle);
        let json = serde_json::to_string(&s.to_wire()).unwrap();
        assert!(json.contains("\"values\""));
        let wire: SectionWire = serde_json::from_str(&json).unwrap();
        let back = SectionField::from_wire(Arc::clone(&bundle), &wire).unwrap();
        for v in 0..bundle.space().n_vertices() {
            assert!((back.value(v) - s.value(v)).norm() < 1e-12);
        }
    }

    #[test]
    fn quotient_norm_trivial_cases() {
        let bundle = line_bundle(1, 4);
        assert_eq!(fiber_quotient_norm(&SectionField::zero(&bundle), 2), 0.0);
        assert!((fiber_quotient_norm(&unit_section(&bundle), 3) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quotient_norm_matches_brute_force_inf() {
        // Brute-force oracle: minimize sup_norm(s + p) over random
        // perturbations p vanishing at z, including multiplicative tapers
        // with shrinking amplitudes.
        let bundle = rank2_bundle();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let s = random_section(&mut rng, &bundle);
        let z = 5;
        let oracle = brute_force_quotient_norm(&mut rng, &s, z, 1000);
        let fast = fiber_quotient_norm(&s, z);
        assert!((oracle - fast).abs() < 1e-3, "oracle {oracle} vs {fast}");
        assert!(fast <= sup_norm(&s) + 1e-9);
    }

    pub(crate) fn brute_force_quotient_norm(
        rng: &mut ChaCha8Rng,
        s: &SectionField,
        z: usize,
        trials: usize,
    ) -> f64 {
        let bundle = s.bundle();
        let mut best = sup_norm(s);
        for t in 0..trials {
            // Random taper g with g(z) = 1 and |g| small elsewhere,
            // shrinking as the trial index grows: p = s·(g − 1) vanishes
            // at z.
            let amp = 10f64.powf(-(t as f64) / (trials as f64 / 6.0));
            let g = FunctionField::from_fn(bundle.space(), |v| {
                if v == z {
                    cplx(1.0, 0.0)
                } else {
                    cplx(
                        amp * rng.random_range(-1.0..1.0),
                        amp * rng.random_range(-1.0..1.0),
                    )
                }
            });
            let candidate = s.mul_fn(&g).unwrap();
            best = best.min(sup_norm(&candidate));
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn hermitian_symmetry_and_cauchy_schwarz(seed in 0u64..1000) {
            let bundle = rank2_bundle();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_section(&mut rng, &bundle);
            let t = random_section(&mut rng, &bundle);
            let st = inner_product(&s, &t).unwrap();
            let ts = inner_product(&t, &s).unwrap();
            for v in 0..bundle.space().n_vertices() {
                prop_assert!((st.value(v) - ts.value(v).conj()).norm() == 0.0);
                let lhs = st.value(v).norm_sqr();
                let rhs = s.value(v).norm_squared() * t.value(v).norm_squared();
                prop_assert!(lhs <= rhs + 1e-9);
            }
        }

        #[test]
        fn quotient_norm_never_exceeds_sup_norm(seed in 0u64..1000) {
            let bundle = line_bundle(1, 6);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_section(&mut rng, &bundle);
            for z in 0..bundle.space().n_vertices() {
                prop_assert!(fiber_quotient_norm(&s, z) <= sup_norm(&s) + 1e-12);
            }
        }
    }
}
