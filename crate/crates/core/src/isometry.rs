//! The correspondence between Hilbert-module morphisms `Γ(ξ) → Γ(ζ)` and
//! fiberwise isometries `f*(ξ) → ζ`, in both directions.
//!
//! A morphism is turned into a field by evaluating it on a spanning probe
//! family and solving against the fiber Gram matrices; a field is turned
//! into a morphism by `s ↦ D ∘ s ∘ f`. The two composites are mutually
//! inverse, which `roundtrip_check_*` decides numerically.

use std::sync::Arc;

use crate::bundle::ProjectionField;
use crate::hilbmod::{apply_morphism, check_morphism, ModuleMorphism, SectionField};
use crate::linalg::{fiber_frame, op_norm, transport_frame, unitary_power, CMat, DEFAULT_TOL};
use crate::mesh::SimplicialSpace;
use crate::{Error, Result};

/// A per-vertex matrix field `D(z): ξ_{f(z)} → ζ_z` that is isometric on
/// fibers: `D*D = P_ξ(f(z))`, `D P_ξ(f(z)) = D`, `P_ζ(z) D = D`.
#[derive(Debug, Clone)]
pub struct IsometryField {
    base: Arc<SimplicialSpace>,
    source: Arc<ProjectionField>,
    vertex_map: Vec<usize>,
    target: Arc<ProjectionField>,
    values: Vec<CMat>,
}

impl IsometryField {
    pub fn new(
        base: Arc<SimplicialSpace>,
        source: Arc<ProjectionField>,
        vertex_map: Vec<usize>,
        target: Arc<ProjectionField>,
        values: Vec<CMat>,
    ) -> Result<Self> {
        let field = Self::new_unchecked(base, source, vertex_map, target, values)?;
        field.check_invariants(DEFAULT_TOL)?;
        Ok(field)
    }

    pub fn with_tol(
        base: Arc<SimplicialSpace>,
        source: Arc<ProjectionField>,
        vertex_map: Vec<usize>,
        target: Arc<ProjectionField>,
        values: Vec<CMat>,
        tol: f64,
    ) -> Result<Self> {
        let field = Self::new_unchecked(base, source, vertex_map, target, values)?;
        field.check_invariants(tol)?;
        Ok(field)
    }

    /// Structural assembly without the isometry checks, for data whose
    /// validity is itself under test. [`IsometryField::check_invariants`]
    /// performs the full validation.
    pub fn new_unchecked(
        base: Arc<SimplicialSpace>,
        source: Arc<ProjectionField>,
        vertex_map: Vec<usize>,
        target: Arc<ProjectionField>,
        values: Vec<CMat>,
    ) -> Result<Self> {
        if target.space().as_ref() != base.as_ref() {
            return Err(Error::ShapeMismatch(
                "target bundle does not live over the base space".into(),
            ));
        }
        let n = base.n_vertices();
        if vertex_map.len() != n || values.len() != n {
            return Err(Error::InvalidArgument(
                "vertex map / values length must match the base space".into(),
            ));
        }
        if vertex_map.iter().any(|&y| y >= source.space().n_vertices()) {
            return Err(Error::InvalidArgument("vertex map leaves the source space".into()));
        }
        for (z, d) in values.iter().enumerate() {
            if d.nrows() != target.ambient_dim() || d.ncols() != source.ambient_dim() {
                return Err(Error::InvalidArgument(format!(
                    "value at vertex {z} is {}×{}, expected {}×{}",
                    d.nrows(),
                    d.ncols(),
                    target.ambient_dim(),
                    source.ambient_dim()
                )));
            }
        }
        Ok(IsometryField {
            base,
            source,
            vertex_map,
            target,
            values,
        })
    }

    /// Fiber compatibility and fiberwise isometry at every vertex.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        for z in 0..self.base.n_vertices() {
            let y = self.vertex_map[z];
            let d = &self.values[z];
            let p_src = self.source.value(y);
            let p_tgt = self.target.value(z);
            let src_compat = op_norm(&(d * p_src - d));
            if src_compat > tol {
                return Err(Error::NotAnIsometry {
                    vertex: z,
                    what: "D·P_source = D",
                    defect: src_compat,
                });
            }
            let tgt_compat = op_norm(&(p_tgt * d - d));
            if tgt_compat > tol {
                return Err(Error::NotAnIsometry {
                    vertex: z,
                    what: "P_target·D = D",
                    defect: tgt_compat,
                });
            }
            let iso = op_norm(&(d.adjoint() * d - p_src));
            if iso > tol {
                return Err(Error::NotAnIsometry {
                    vertex: z,
                    what: "D*·D = P_source",
                    defect: iso,
                });
            }
        }
        Ok(())
    }

    pub fn base(&self) -> &Arc<SimplicialSpace> {
        &self.base
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

    pub fn value(&self, z: usize) -> &CMat {
        &self.values[z]
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    /// Common source fiber rank, when constant.
    pub fn source_rank(&self) -> usize {
        self.source.rank_at(self.vertex_map[0])
    }

    pub fn target_rank(&self) -> usize {
        self.target.rank_at(0)
    }

    /// Largest entrywise distance to another field of the same shape.
    pub fn max_distance(&self, other: &IsometryField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| op_norm(&(a - b)))
            .fold(0.0, f64::max)
    }

    pub fn to_wire(&self) -> IsometryFieldWire {
        IsometryFieldWire {
            m_source: self.source.ambient_dim(),
            m_target: self.target.ambient_dim(),
            vertex_map: self.vertex_map.clone(),
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(z, d)| (z.to_string(), crate::bundle::mat_to_wire(d)))
                .collect(),
        }
    }

    /// Rebuild from the wire format over explicit bundles, without the
    /// isometry checks (external data is validated by
    /// [`IsometryField::check_invariants`] wherever it is consumed).
    pub fn from_wire_unchecked(
        base: Arc<SimplicialSpace>,
        source: Arc<ProjectionField>,
        target: Arc<ProjectionField>,
        wire: &IsometryFieldWire,
    ) -> Result<IsometryField> {
        if wire.m_source != source.ambient_dim() || wire.m_target != target.ambient_dim() {
            return Err(Error::InvalidArgument(
                "wire ambient dimensions do not match the bundles".into(),
            ));
        }
        let n = base.n_vertices();
        let mut values = Vec::with_capacity(n);
        for z in 0..n {
            let entry = wire.values.get(&z.to_string()).ok_or_else(|| {
                Error::InvalidArgument(format!("isometry JSON is missing vertex {z}"))
            })?;
            values.push(crate::bundle::mat_from_wire(entry, wire.m_target, wire.m_source)?);
        }
        Self::new_unchecked(base, source, wire.vertex_map.clone(), target, values)
    }
}

/// Wire format mirroring the bundle format with rectangular matrices and a
/// vertex-map table.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct IsometryFieldWire {
    pub m_source: usize,
    pub m_target: usize,
    pub vertex_map: Vec<usize>,
    pub values: std::collections::BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

/// Pullback of a bundle along a vertex map: the fiber over `z` is the
/// source fiber over `f(z)`, with the canonical identification being the
/// identity on stored matrices.
#[derive(Debug, Clone)]
pub struct PullbackBundle {
    bundle: ProjectionField,
    vertex_map: Vec<usize>,
    source: Arc<ProjectionField>,
}

impl PullbackBundle {
    pub fn bundle(&self) -> &ProjectionField {
        &self.bundle
    }

    pub fn vertex_map(&self) -> &[usize] {
        &self.vertex_map
    }

    pub fn source(&self) -> &Arc<ProjectionField> {
        &self.source
    }
}

/// Pull a projection field back along `f: base → Y`. The map must send
/// edges to edges or collapse them, so the pullback inherits the edge
/// continuity of the source field.
pub fn pullback_bundle(
    xi: &Arc<ProjectionField>,
    vertex_map: &[usize],
    base: &Arc<SimplicialSpace>,
) -> Result<PullbackBundle> {
    if vertex_map.len() != base.n_vertices() {
        return Err(Error::InvalidArgument(
            "vertex map length must match the base space".into(),
        ));
    }
    let source_space = xi.space();
    for &y in vertex_map {
        if y >= source_space.n_vertices() {
            return Err(Error::InvalidArgument(format!(
                "vertex map hits missing source vertex {y}"
            )));
        }
    }
    for e in base.edges() {
        let (fu, fv) = (vertex_map[e[0]], vertex_map[e[1]]);
        if fu != fv && !source_space.has_edge(fu, fv) {
            return Err(Error::MeshInvariant(format!(
                "vertex map breaks adjacency: base edge ({},{}) maps to non-edge ({},{})",
                e[0], e[1], fu, fv
            )));
        }
    }
    let bundle = xi.restrict(Arc::clone(base), vertex_map)?;
    Ok(PullbackBundle {
        bundle,
        vertex_map: vertex_map.to_vec(),
        source: Arc::clone(xi),
    })
}

/// Continuous closed orthonormal frames along a cycle of projections:
/// transport a fiber frame around the loop and distribute the resulting
/// holonomy uniformly so the frame field closes up exactly.
pub fn closed_cycle_frames(values: &[&CMat]) -> Result<Vec<CMat>> {
    let len = values.len();
    if len == 0 {
        return Ok(Vec::new());
    }
    let first = fiber_frame(values[0]);
    let rank = first.ncols();
    if rank == 0 {
        return Ok(vec![CMat::zeros(values[0].nrows(), 0); len]);
    }
    let mut frames = Vec::with_capacity(len);
    frames.push(first);
    for j in 1..len {
        let next = transport_frame(&frames[j - 1], values[j]).ok_or_else(|| {
            Error::EdgeDiscontinuity {
                u: j - 1,
                v: j,
                distance: 1.0,
            }
        })?;
        frames.push(next);
    }
    let around = transport_frame(&frames[len - 1], values[0]).ok_or_else(|| {
        Error::EdgeDiscontinuity {
            u: len - 1,
            v: 0,
            distance: 1.0,
        }
    })?;
    let holonomy = frames[0].adjoint() * &around;
    // Distribute H^{-j/L} along the loop; H^{-L/L} = H^{-1} closes it.
    let corrected = (0..len)
        .map(|j| &frames[j] * unitary_power(&holonomy, -(j as f64) / len as f64))
        .collect();
    Ok(corrected)
}

/// Recover the fiberwise isometry of a module morphism by evaluating it on
/// a probe family spanning every source fiber.
///
/// Only the morphism's *action* on sections is used — the stored fiber
/// transforms never enter — so composing with [`isometry_to_delta`] is a
/// genuine round trip. The probes must restrict to a basis of each fiber
/// `ξ_{f(z)}`; this is certified by the Gram matrix at `f(z)` having
/// smallest eigenvalue above 1e-9.
pub fn delta_to_isometry(
    delta: &ModuleMorphism,
    probes: &[SectionField],
) -> Result<IsometryField> {
    if probes.is_empty() {
        return Err(Error::InvalidArgument("empty probe family".into()));
    }
    for p in probes {
        if p.bundle().values() != delta.source().values() {
            return Err(Error::BundleMismatch(
                "probe does not live over the morphism source".into(),
            ));
        }
    }
    // The morphism identity must hold before the field is meaningful.
    let mut pairs = Vec::new();
    for i in 0..probes.len() {
        for j in i..probes.len() {
            pairs.push((probes[i].clone(), probes[j].clone()));
        }
    }
    if !check_morphism(delta, &pairs, 1e-7) {
        return Err(Error::MorphismFailure(
            "morphism fails the inner-product identity on the probe family".into(),
        ));
    }

    let images: Vec<SectionField> = probes
        .iter()
        .map(|p| apply_morphism(delta, p))
        .collect::<Result<_>>()?;

    let base = Arc::clone(delta.target().space());
    let n_probes = probes.len();
    let m_src = delta.source().ambient_dim();
    let m_tgt = delta.target().ambient_dim();
    let mut values = Vec::with_capacity(base.n_vertices());
    for (z, &y) in delta.vertex_map().iter().enumerate() {
        if n_probes < delta.source().rank_at(y) {
            // Too few probes can have a nonsingular Gram without spanning.
            return Err(Error::SpanFailure {
                vertex: y,
                min_eigenvalue: 0.0,
            });
        }
        let mut s_y = CMat::zeros(m_src, n_probes);
        let mut e_z = CMat::zeros(m_tgt, n_probes);
        for (k, (probe, image)) in probes.iter().zip(&images).enumerate() {
            s_y.set_column(k, probe.value(y));
            e_z.set_column(k, image.value(z));
        }
        let gram = s_y.adjoint() * &s_y;
        let (vals, _) = crate::linalg::herm_eigen(&gram);
        let min_eigenvalue = vals.first().copied().unwrap_or(0.0);
        if min_eigenvalue <= 1e-9 {
            return Err(Error::SpanFailure {
                vertex: y,
                min_eigenvalue,
            });
        }
        let solved = gram
            .lu()
            .solve(&s_y.adjoint())
            .ok_or(Error::SpanFailure {
                vertex: y,
                min_eigenvalue,
            })?;
        values.push(e_z * solved);
    }
    IsometryField::new(
        base,
        Arc::clone(delta.source()),
        delta.vertex_map().to_vec(),
        Arc::clone(delta.target()),
        values,
    )
}

/// The morphism `Δ_D(s) = D ∘ s ∘ f` of a fiberwise isometry.
pub fn isometry_to_delta(field: &IsometryField) -> ModuleMorphism {
    ModuleMorphism::new(
        Arc::clone(field.source()),
        Arc::clone(field.target()),
        field.vertex_map().to_vec(),
        field.values().to_vec(),
    )
    .expect("a valid isometry field always defines a module morphism")
}

/// Round trip starting from a field: true when
/// `delta_to_isometry(isometry_to_delta(D))` returns `D` entrywise within
/// 1e-9. Invalid fields and span failures report `false`.
pub fn roundtrip_check_field(field: &IsometryField, probes: &[SectionField]) -> bool {
    if field.check_invariants(DEFAULT_TOL).is_err() {
        return false;
    }
    let delta = match ModuleMorphism::new(
        Arc::clone(field.source()),
        Arc::clone(field.target()),
        field.vertex_map().to_vec(),
        field.values().to_vec(),
    ) {
        Ok(d) => d,
        Err(_) => return false,
    };
    match delta_to_isometry(&delta, probes) {
        Ok(recovered) => recovered.max_distance(field) <= DEFAULT_TOL,
        Err(_) => false,
    }
}

/// Round trip starting from a morphism: true when
/// `isometry_to_delta(delta_to_isometry(Δ))` agrees with `Δ` on all probe
/// sections within 1e-9.
pub fn roundtrip_check_morphism(delta: &ModuleMorphism, probes: &[SectionField]) -> bool {
    let field = match delta_to_isometry(delta, probes) {
        Ok(f) => f,
        Err(_) => return false,
    };
    let rebuilt = isometry_to_delta(&field);
    probes.iter().all(|p| {
        match (apply_morphism(delta, p), apply_morphism(&rebuilt, p)) {
            (Ok(a), Ok(b)) => a
                .values()
                .iter()
                .zip(b.values())
                .all(|(x, y)| (x - y).norm() <= DEFAULT_TOL),
            _ => false,
        }
    })
}
