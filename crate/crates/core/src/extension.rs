//! Extension triples `0 → V → W → Z → 0` over a disk-with-boundary space,
//! their Busby invariants as isometry fields on the corona cycle, and the
//! reconstruction of an extension from a Busby invariant.
//!
//! The boundary-phase family stores the middle module as a membership
//! predicate: a function on the closed disk belongs to `W_ω` when its
//! boundary restriction is a scalar multiple of the phase loop ω. The
//! multiplier-data kind stores an extension as bounded tower sections —
//! explicit lifts of a probe family — which is also what reconstruction
//! from a Busby invariant produces.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::bundle::{corona_limit, ProjectionField, CORONA_EPS};
use crate::hilbmod::{inner_product, is_ideal_section, FunctionField, SectionField};
use crate::invariants::winding_number;
use crate::isometry::IsometryField;
use crate::linalg::{C64, CMat, CVec, DEFAULT_TOL};
use crate::mesh::{AnnulusTower, SimplicialSpace};
use crate::{Error, Result};

/// A unit-modulus loop on a boundary cycle together with its declared
/// winding; validation requires the samples to actually wind `k` times.
#[derive(Debug, Clone)]
pub struct WindingDatum {
    omega: Vec<C64>,
    k: i64,
}

impl WindingDatum {
    pub fn new(omega: Vec<C64>, k: i64) -> Result<Self> {
        let computed = winding_number(&omega)?;
        if computed != k {
            return Err(Error::WindingMismatch {
                declared: k,
                computed,
            });
        }
        Ok(WindingDatum { omega, k })
    }

    pub fn omega(&self) -> &[C64] {
        &self.omega
    }

    pub fn k(&self) -> i64 {
        self.k
    }
}

/// The middle-module datum of an extension.
#[derive(Debug, Clone)]
pub enum ExtensionKind {
    /// `W = {α : α|∂ = λω}` over a disk-like space: V is the rank-one
    /// trivial bundle (ideal sections), Z is rank-one over the boundary
    /// complex acting through constants.
    BoundaryPhase {
        disk: Arc<SimplicialSpace>,
        v_bundle: Arc<ProjectionField>,
        /// Ordered boundary cycle in disk indices, counterclockwise.
        cycle: Vec<usize>,
        winding: WindingDatum,
    },
    /// An extension presented as multiplier data over a tower: a spanning
    /// probe family of Z-sections and, per probe, one lift section per
    /// tower level.
    MultiplierData {
        tower: Arc<AnnulusTower>,
        v_levels: Vec<Arc<ProjectionField>>,
        /// Corona position → Z-space vertex.
        vertex_map: Vec<usize>,
        probes: Vec<SectionField>,
        lifts: Vec<Vec<SectionField>>,
    },
}

/// An extension of Z-sections by ideal V-sections.
#[derive(Debug, Clone)]
pub struct ExtensionTriple {
    z_bundle: Arc<ProjectionField>,
    kind: ExtensionKind,
}

/// A section of the middle module W.
#[derive(Debug, Clone)]
pub enum WSection {
    /// A section over the disk space (boundary-phase extensions).
    OnSpace(SectionField),
    /// A bounded tower section coupled with the Z-section it covers.
    Coupled {
        levels: Vec<SectionField>,
        z: SectionField,
    },
}

/// Build the extension `0 → C₀(U) → W_k → ℂ → 0` with `ω(θ) = e^{ikθ}`
/// sampled on the boundary cycle of the disk.
///
/// A cycle too coarse for `|k|` (some intended argument increment reaching
/// π) cannot carry the winding and is rejected with a lift failure.
pub fn build_wk_extension(k: i64, disk: &Arc<SimplicialSpace>) -> Result<ExtensionTriple> {
    let cycle = single_boundary_cycle(disk)?;
    let n = cycle.len();
    let angle = |v: usize| {
        let [x, y] = disk.coords(v);
        y.atan2(x)
    };
    // Intended increments of k·θ around the cycle must stay below π.
    for j in 0..n {
        let a = angle(cycle[j]);
        let b = angle(cycle[(j + 1) % n]);
        let step = crate::linalg::principal_arg(C64::from_polar(1.0, b - a));
        if (k as f64 * step).abs() >= std::f64::consts::PI - 1e-9 {
            return Err(Error::LiftFailure(format!(
                "boundary cycle of length {n} is too coarse for winding {k}: argument increment ≥ π; refine the mesh"
            )));
        }
    }
    let omega: Vec<C64> = cycle
        .iter()
        .map(|&v| C64::from_polar(1.0, k as f64 * angle(v)))
        .collect();
    boundary_phase_extension(disk, omega, k)
}

/// Boundary-phase extension from explicit ω samples along the boundary
/// cycle (in cycle order). Validates unimodularity, liftability, and the
/// declared winding.
pub fn boundary_phase_extension(
    disk: &Arc<SimplicialSpace>,
    omega: Vec<C64>,
    k: i64,
) -> Result<ExtensionTriple> {
    let cycle = single_boundary_cycle(disk)?;
    if omega.len() != cycle.len() {
        return Err(Error::InvalidArgument(format!(
            "{} phase samples for a boundary cycle of length {}",
            omega.len(),
            cycle.len()
        )));
    }
    let winding = WindingDatum::new(omega, k)?;
    let v_bundle = Arc::new(ProjectionField::trivial(Arc::clone(disk), 1)?);
    let z_space = Arc::new(disk.boundary_subcomplex());
    let z_bundle = Arc::new(ProjectionField::trivial(z_space, 1)?);
    Ok(ExtensionTriple {
        z_bundle,
        kind: ExtensionKind::BoundaryPhase {
            disk: Arc::clone(disk),
            v_bundle,
            cycle,
            winding,
        },
    })
}

fn single_boundary_cycle(disk: &Arc<SimplicialSpace>) -> Result<Vec<usize>> {
    let mut cycles = disk.boundary_cycles()?;
    if cycles.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "expected a single boundary cycle, found {}",
            cycles.len()
        )));
    }
    Ok(cycles.remove(0))
}

/// The split extension `W ≅ C(X)`: the boundary-phase extension with
/// ω ≡ 1.
pub fn build_split_extension(disk: &Arc<SimplicialSpace>) -> Result<ExtensionTriple> {
    build_wk_extension(0, disk)
}

/// Assemble a multiplier-data extension from explicit parts. Shapes are
/// validated; membership of the lifts is not, so defective tower data can
/// be represented and diagnosed.
pub fn multiplier_extension(
    z_bundle: Arc<ProjectionField>,
    tower: Arc<AnnulusTower>,
    v_levels: Vec<Arc<ProjectionField>>,
    vertex_map: Vec<usize>,
    probes: Vec<SectionField>,
    lifts: Vec<Vec<SectionField>>,
) -> Result<ExtensionTriple> {
    if v_levels.len() != tower.n_levels() {
        return Err(Error::InvalidArgument(
            "need one V-field per tower level".into(),
        ));
    }
    for (t, f) in v_levels.iter().enumerate() {
        if f.space().as_ref() != tower.level(t).as_ref() {
            return Err(Error::InvalidArgument(format!(
                "V-field {t} does not live over tower level {t}"
            )));
        }
    }
    if vertex_map.len() != tower.n_angular() {
        return Err(Error::InvalidArgument(
            "vertex map must cover the corona cycle".into(),
        ));
    }
    if vertex_map
        .iter()
        .any(|&y| y >= z_bundle.space().n_vertices())
    {
        return Err(Error::InvalidArgument("vertex map leaves the Z-space".into()));
    }
    if probes.is_empty() || lifts.len() != probes.len() {
        return Err(Error::InvalidArgument(
            "need one lift family per probe".into(),
        ));
    }
    for p in &probes {
        if p.bundle().values() != z_bundle.values() {
            return Err(Error::BundleMismatch("probe does not live over Z".into()));
        }
    }
    for per_level in &lifts {
        if per_level.len() != tower.n_levels() {
            return Err(Error::InvalidArgument(
                "each lift needs one section per tower level".into(),
            ));
        }
        for (t, s) in per_level.iter().enumerate() {
            if s.bundle().values() != v_levels[t].values() {
                return Err(Error::BundleMismatch(format!(
                    "lift section at level {t} lives over the wrong bundle"
                )));
            }
        }
    }
    Ok(ExtensionTriple {
        z_bundle,
        kind: ExtensionKind::MultiplierData {
            tower,
            v_levels,
            vertex_map,
            probes,
            lifts,
        },
    })
}

/// Realize the pullback module of a Busby invariant: pairs of a bounded
/// tower section and a Z-section agreeing at the corona. The V-bundle is
/// extended to the tower levels radially (its boundary values transported
/// by angle), and the canonical lifts of a spanning probe family are
/// stored.
pub fn extension_from_busby(
    delta: &IsometryField,
    v_bundle: &Arc<ProjectionField>,
    z_bundle: &Arc<ProjectionField>,
    tower: &Arc<AnnulusTower>,
) -> Result<ExtensionTriple> {
    if delta.base().as_ref() != tower.corona_space().as_ref() {
        return Err(Error::ShapeMismatch(
            "Busby field does not live over the tower corona".into(),
        ));
    }
    if delta.source().values() != z_bundle.values() {
        return Err(Error::BundleMismatch(
            "Busby field source is not the given Z-bundle".into(),
        ));
    }
    if delta.source().ambient_dim() != z_bundle.ambient_dim()
        || delta.target().ambient_dim() != v_bundle.ambient_dim()
    {
        return Err(Error::BundleMismatch("incompatible bundle dimensions".into()));
    }

    // Radially constant extension of the V-bundle boundary values.
    let boundary_values = boundary_values_by_angle(v_bundle, tower.n_angular())?;
    let mut v_levels = Vec::with_capacity(tower.n_levels());
    for t in 0..tower.n_levels() {
        let level = tower.level(t);
        let values: Vec<CMat> = (0..level.n_vertices())
            .map(|v| boundary_values[tower.angle_index(v)].clone())
            .collect();
        v_levels.push(Arc::new(ProjectionField::new(
            Arc::clone(level),
            v_bundle.ambient_dim(),
            values,
        )?));
    }
    // The Busby target must be the corona projection of the extended V.
    let corona = corona_limit(
        &v_levels.iter().map(|f| f.as_ref().clone()).collect::<Vec<_>>(),
        tower,
        CORONA_EPS,
    )?;
    for c in 0..tower.n_angular() {
        let d = crate::linalg::op_norm(&(corona.field().value(c) - delta.target().value(c)));
        if d > CORONA_EPS {
            return Err(Error::BundleMismatch(format!(
                "Busby target differs from the corona projection of V at position {c} by {d:.3e}"
            )));
        }
    }

    let probes = spanning_probes(z_bundle, 7)?;
    let mut lifts = Vec::with_capacity(probes.len());
    for probe in &probes {
        // Corona values of the image Δ(probe), extended radially constant.
        let image: Vec<CVec> = (0..tower.n_angular())
            .map(|c| delta.value(c) * probe.value(delta.vertex_map()[c]))
            .collect();
        let mut per_level = Vec::with_capacity(tower.n_levels());
        for v_level in &v_levels {
            let values: Vec<CVec> = (0..v_level.space().n_vertices())
                .map(|v| image[tower.angle_index(v)].clone())
                .collect();
            per_level.push(SectionField::new(Arc::clone(v_level), values)?);
        }
        lifts.push(per_level);
    }
    multiplier_extension(
        Arc::clone(z_bundle),
        Arc::clone(tower),
        v_levels,
        delta.vertex_map().to_vec(),
        probes,
        lifts,
    )
}

/// Deterministic spanning probe family: fiber-projected coordinate
/// sections, padded with seeded random sections until the fiber Gram
/// matrices are uniformly nonsingular.
pub fn spanning_probes(bundle: &Arc<ProjectionField>, seed: u64) -> Result<Vec<SectionField>> {
    use rand::SeedableRng;
    let rank = bundle.rank_at(0);
    if rank == 0 {
        return Err(Error::InvalidArgument("rank-zero bundle has no probes".into()));
    }
    let m = bundle.ambient_dim();
    let mut attempt = 0u64;
    loop {
        let probes: Vec<SectionField> = if attempt == 0 {
            (0..rank)
                .map(|i| {
                    let e = CVec::from_fn(m, |r, _| {
                        if r == i {
                            C64::new(1.0, 0.0)
                        } else {
                            C64::new(0.0, 0.0)
                        }
                    });
                    SectionField::projected_constant(bundle, &e)
                })
                .collect::<Result<_>>()?
        } else {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
            (0..rank)
                .map(|_| crate::gen::random_section(&mut rng, bundle))
                .collect()
        };
        let spanning = (0..bundle.space().n_vertices()).all(|y| {
            let mut s = CMat::zeros(m, rank);
            for (j, p) in probes.iter().enumerate() {
                s.set_column(j, p.value(y));
            }
            let gram = s.adjoint() * s;
            crate::linalg::herm_eigen(&gram)
                .0
                .first()
                .copied()
                .unwrap_or(0.0)
                > 1e-9
        });
        if spanning {
            return Ok(probes);
        }
        attempt += 1;
        if attempt > 8 {
            return Err(Error::SpanFailure {
                vertex: 0,
                min_eigenvalue: 0.0,
            });
        }
    }
}

/// Boundary values of a field over a disk-like space, resampled by angle
/// onto `n_angular` uniform positions.
fn boundary_values_by_angle(field: &ProjectionField, n_angular: usize) -> Result<Vec<CMat>> {
    let space = field.space();
    let mut cycles = space.boundary_cycles()?;
    if cycles.len() != 1 {
        return Err(Error::InvalidArgument(
            "V-bundle space must have a single boundary cycle".into(),
        ));
    }
    let cycle = cycles.remove(0);
    Ok(nearest_angle_map(space, &cycle, n_angular)
        .into_iter()
        .map(|v| field.value(v).clone())
        .collect())
}

/// For each uniform corona angle, the boundary-cycle vertex nearest in
/// angle.
fn nearest_angle_map(space: &SimplicialSpace, cycle: &[usize], n_angular: usize) -> Vec<usize> {
    let angles: Vec<f64> = cycle
        .iter()
        .map(|&v| {
            let [x, y] = space.coords(v);
            y.atan2(x)
        })
        .collect();
    (0..n_angular)
        .map(|i| {
            let phi = 2.0 * std::f64::consts::PI * i as f64 / n_angular as f64;
            let (best, _) = cycle
                .iter()
                .zip(&angles)
                .map(|(&v, &a)| {
                    let d = crate::linalg::principal_arg(C64::from_polar(1.0, a - phi)).abs();
                    (v, d)
                })
                .min_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
                .expect("nonempty cycle");
            best
        })
        .collect()
}

impl ExtensionTriple {
    pub fn z_bundle(&self) -> &Arc<ProjectionField> {
        &self.z_bundle
    }

    pub fn kind(&self) -> &ExtensionKind {
        &self.kind
    }

    pub fn winding_datum(&self) -> Option<&WindingDatum> {
        match &self.kind {
            ExtensionKind::BoundaryPhase { winding, .. } => Some(winding),
            ExtensionKind::MultiplierData { .. } => None,
        }
    }

    /// The U-space of a boundary-phase extension.
    pub fn disk(&self) -> Option<&Arc<SimplicialSpace>> {
        match &self.kind {
            ExtensionKind::BoundaryPhase { disk, .. } => Some(disk),
            ExtensionKind::MultiplierData { .. } => None,
        }
    }

    pub fn v_bundle(&self) -> Option<&Arc<ProjectionField>> {
        match &self.kind {
            ExtensionKind::BoundaryPhase { v_bundle, .. } => Some(v_bundle),
            ExtensionKind::MultiplierData { .. } => None,
        }
    }

    /// Membership of a function field in `W_ω`, reporting the boundary
    /// scalar: `(true, λ)` iff `α = λ·ω` on the whole boundary cycle
    /// within `tol`.
    pub fn membership_wk_with_tol(
        &self,
        alpha: &FunctionField,
        tol: f64,
    ) -> Result<(bool, Option<C64>)> {
        let ExtensionKind::BoundaryPhase { disk, cycle, winding, .. } = &self.kind else {
            return Err(Error::InvalidArgument(
                "membership predicate applies to boundary-phase extensions".into(),
            ));
        };
        if alpha.space().as_ref() != disk.as_ref() {
            return Err(Error::BundleMismatch(
                "function field does not live on the disk".into(),
            ));
        }
        let n = cycle.len() as f64;
        let lambda = cycle
            .iter()
            .zip(winding.omega())
            .map(|(&v, w)| w.conj() * alpha.value(v))
            .sum::<C64>()
            / C64::new(n, 0.0);
        let fits = cycle
            .iter()
            .zip(winding.omega())
            .all(|(&v, w)| (alpha.value(v) - lambda * w).norm() <= tol);
        if fits {
            Ok((true, Some(lambda)))
        } else {
            Ok((false, None))
        }
    }

    pub fn membership_wk(&self, alpha: &FunctionField) -> Result<(bool, Option<C64>)> {
        self.membership_wk_with_tol(alpha, DEFAULT_TOL)
    }

    /// Membership of a W-section (kind-appropriate predicate).
    pub fn membership(&self, w: &WSection) -> Result<bool> {
        match (&self.kind, w) {
            (ExtensionKind::BoundaryPhase { .. }, WSection::OnSpace(s)) => {
                let alpha = section_as_function(s)?;
                Ok(self.membership_wk(&alpha)?.0)
            }
            (
                ExtensionKind::MultiplierData { tower, vertex_map, .. },
                WSection::Coupled { levels, z },
            ) => {
                if levels.len() != tower.n_levels() {
                    return Err(Error::InvalidArgument(
                        "coupled section has the wrong number of levels".into(),
                    ));
                }
                let last = tower.n_levels() - 1;
                let d_last = self.busby_field_at_level(tower, last)?;
                let outer = tower.corona_cycle(last);
                for (c, &v) in outer.iter().enumerate() {
                    let lhs = levels[last].value(v);
                    let rhs = d_last.value(c) * z.value(vertex_map[c]);
                    if (lhs - rhs).norm() > CORONA_EPS {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            _ => Err(Error::InvalidArgument(
                "section shape does not match the extension kind".into(),
            )),
        }
    }

    /// The quotient map Π onto Z-sections. For boundary-phase extensions
    /// this is `α ↦ λ` (as the constant section); for multiplier data it
    /// projects a coupled pair to its Z-component.
    pub fn pi(&self, w: &WSection) -> Result<SectionField> {
        match (&self.kind, w) {
            (ExtensionKind::BoundaryPhase { .. }, WSection::OnSpace(s)) => {
                let alpha = section_as_function(s)?;
                let (ok, lambda) = self.membership_wk(&alpha)?;
                if !ok {
                    return Err(Error::Membership(
                        "section is not in W, Π is undefined".into(),
                    ));
                }
                let lambda = lambda.expect("member has a scalar");
                SectionField::from_fn(&self.z_bundle, |_| CVec::from_element(1, lambda))
            }
            (ExtensionKind::MultiplierData { .. }, WSection::Coupled { z, .. }) => Ok(z.clone()),
            _ => Err(Error::InvalidArgument(
                "section shape does not match the extension kind".into(),
            )),
        }
    }

    /// The inclusion Φ of an ideal V-section into W.
    pub fn phi(&self, v: &SectionField) -> Result<WSection> {
        match &self.kind {
            ExtensionKind::BoundaryPhase { v_bundle, .. } => {
                if v.bundle().values() != v_bundle.values() {
                    return Err(Error::BundleMismatch(
                        "section does not live over the V-bundle".into(),
                    ));
                }
                if !is_ideal_section(v) {
                    return Err(Error::Membership(
                        "Φ applies to ideal sections (vanishing inner product on the boundary)"
                            .into(),
                    ));
                }
                Ok(WSection::OnSpace(v.clone()))
            }
            ExtensionKind::MultiplierData { .. } => Err(Error::InvalidArgument(
                "use phi_tower for multiplier-data extensions".into(),
            )),
        }
    }

    /// The inclusion Φ for multiplier data: a corona-vanishing tower
    /// section paired with the zero Z-section.
    pub fn phi_tower(&self, levels: Vec<SectionField>) -> Result<WSection> {
        let ExtensionKind::MultiplierData { tower, v_levels, .. } = &self.kind else {
            return Err(Error::InvalidArgument(
                "phi_tower applies to multiplier-data extensions".into(),
            ));
        };
        if levels.len() != tower.n_levels() {
            return Err(Error::InvalidArgument("wrong number of levels".into()));
        }
        for (t, s) in levels.iter().enumerate() {
            if s.bundle().values() != v_levels[t].values() {
                return Err(Error::BundleMismatch(format!(
                    "level {t} section lives over the wrong bundle"
                )));
            }
        }
        let last = tower.n_levels() - 1;
        let vanishes = tower
            .corona_cycle(last)
            .iter()
            .all(|&v| levels[last].value(v).norm_squared() <= DEFAULT_TOL);
        if !vanishes {
            return Err(Error::Membership(
                "Φ applies to corona-vanishing tower sections".into(),
            ));
        }
        let z = SectionField::zero(&self.z_bundle);
        Ok(WSection::Coupled { levels, z })
    }

    /// Whether a W-section lies in the ideal submodule: its self-pairing
    /// vanishes on the boundary (boundary-phase) or at the corona
    /// (multiplier data).
    pub fn is_ideal(&self, w: &WSection) -> Result<bool> {
        match (&self.kind, w) {
            (ExtensionKind::BoundaryPhase { .. }, WSection::OnSpace(s)) => Ok(is_ideal_section(s)),
            (ExtensionKind::MultiplierData { tower, .. }, WSection::Coupled { levels, .. }) => {
                let last = tower.n_levels() - 1;
                Ok(tower
                    .corona_cycle(last)
                    .iter()
                    .all(|&v| levels[last].value(v).norm_squared() <= DEFAULT_TOL))
            }
            _ => Err(Error::InvalidArgument(
                "section shape does not match the extension kind".into(),
            )),
        }
    }

    /// The Busby isometry field read off at one tower level.
    ///
    /// For a boundary-phase extension the lift of the Z-generator is the
    /// radially constant extension of ω, so every level evaluates to ω
    /// transported onto the corona cycle; stabilization is exact for this
    /// family. For multiplier data the stored lifts are evaluated on the
    /// level's outer rim and solved against the probe Gram matrices.
    pub fn busby_field_at_level(
        &self,
        tower: &Arc<AnnulusTower>,
        level: usize,
    ) -> Result<IsometryField> {
        match &self.kind {
            ExtensionKind::BoundaryPhase { disk, v_bundle, cycle, winding } => {
                let n_c = tower.n_angular();
                let corona = Arc::clone(tower.corona_space());
                // Transport by angle: corona position → boundary position.
                let boundary_map = nearest_angle_map(disk, cycle, n_c);
                // Consecutive corona positions must land on equal or
                // adjacent boundary positions, or the transport skips
                // vertices and high windings would alias silently.
                let pos_of: std::collections::HashMap<usize, usize> =
                    cycle.iter().enumerate().map(|(j, &v)| (v, j)).collect();
                let len = cycle.len();
                for i in 0..n_c {
                    let a = pos_of[&boundary_map[i]];
                    let b = pos_of[&boundary_map[(i + 1) % n_c]];
                    let step = (b + len - a) % len;
                    if step > 1 && step < len - 1 {
                        return Err(Error::LiftFailure(format!(
                            "tower corona ({n_c} points) is coarser than the boundary cycle ({len} points); refine the tower"
                        )));
                    }
                }
                let z_index = z_space_index(disk);
                let vertex_map: Vec<usize> =
                    boundary_map.iter().map(|&v| z_index[v]).collect();
                // ω value per corona position, through the same map.
                let omega_at: Vec<C64> = boundary_map
                    .iter()
                    .map(|&v| winding.omega()[pos_of[&v]])
                    .collect();
                let zeta_values: Vec<CMat> = boundary_map
                    .iter()
                    .map(|&v| v_bundle.value(v).clone())
                    .collect();
                let zeta = Arc::new(ProjectionField::new(
                    Arc::clone(&corona),
                    v_bundle.ambient_dim(),
                    zeta_values,
                )?);
                let values: Vec<CMat> = omega_at
                    .iter()
                    .map(|&w| CMat::from_element(1, 1, w))
                    .collect();
                let _ = level; // every level reads the shared outer rim
                IsometryField::new(corona, Arc::clone(&self.z_bundle), vertex_map, zeta, values)
            }
            ExtensionKind::MultiplierData {
                tower: own_tower,
                v_levels,
                vertex_map,
                probes,
                lifts,
            } => {
                if own_tower.as_ref().corona_space().as_ref() != tower.corona_space().as_ref()
                    || own_tower.n_levels() != tower.n_levels()
                {
                    return Err(Error::InvalidArgument(
                        "extension was built over a different tower".into(),
                    ));
                }
                if level >= own_tower.n_levels() {
                    return Err(Error::InvalidArgument(format!("no tower level {level}")));
                }
                let corona = Arc::clone(own_tower.corona_space());
                let outer = own_tower.corona_cycle(level);
                let zeta_values: Vec<CMat> = outer
                    .iter()
                    .map(|&v| v_levels[level].value(v).clone())
                    .collect();
                let zeta = Arc::new(ProjectionField::new(
                    Arc::clone(&corona),
                    v_levels[level].ambient_dim(),
                    zeta_values,
                )?);
                let m_z = self.z_bundle.ambient_dim();
                let m_v = v_levels[level].ambient_dim();
                let n_probes = probes.len();
                let mut values = Vec::with_capacity(outer.len());
                for (c, &rim_vertex) in outer.iter().enumerate() {
                    let y = vertex_map[c];
                    let mut s_y = CMat::zeros(m_z, n_probes);
                    let mut e_c = CMat::zeros(m_v, n_probes);
                    for (j, (probe, lift)) in probes.iter().zip(lifts).enumerate() {
                        s_y.set_column(j, probe.value(y));
                        e_c.set_column(j, lift[level].value(rim_vertex));
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
                    let solved = gram.lu().solve(&s_y.adjoint()).ok_or(Error::SpanFailure {
                        vertex: y,
                        min_eigenvalue,
                    })?;
                    values.push(e_c * solved);
                }
                IsometryField::new(
                    corona,
                    Arc::clone(&self.z_bundle),
                    vertex_map.clone(),
                    zeta,
                    values,
                )
            }
        }
    }

    /// The Busby invariant over the tower corona: the level fields must
    /// stabilize (the last two levels within `eps`), and the stabilized
    /// field is returned.
    pub fn busby_invariant_with_eps(
        &self,
        tower: &Arc<AnnulusTower>,
        eps: f64,
    ) -> Result<IsometryField> {
        let last = tower.n_levels() - 1;
        let f_last = self.busby_field_at_level(tower, last)?;
        let f_prev = self.busby_field_at_level(tower, last - 1)?;
        let deviation = f_last.max_distance(&f_prev);
        if deviation > eps {
            return Err(Error::NonStabilizing {
                deviation,
                tolerance: eps,
            });
        }
        Ok(f_last)
    }

    pub fn busby_invariant(&self, tower: &Arc<AnnulusTower>) -> Result<IsometryField> {
        self.busby_invariant_with_eps(tower, CORONA_EPS)
    }

    /// Exactness on samples: membership holds, `Π(s) = 0` exactly when the
    /// section is ideal, and Φ-images of ideal truncations of the samples
    /// are members.
    pub fn check_exactness(&self, samples: &[WSection]) -> Result<bool> {
        for s in samples {
            if !self.membership(s)? {
                return Ok(false);
            }
            let pi = self.pi(s)?;
            // Vanishing of Π is measured on the same squared scale as the
            // ideal test (⟨s,s⟩ on the boundary), so the two legs of the
            // equivalence agree up to float noise even near the threshold.
            let pi_zero = crate::hilbmod::sup_norm(&pi).powi(2) <= DEFAULT_TOL;
            if pi_zero != self.is_ideal(s)? {
                return Ok(false);
            }
            // Push an ideal truncation of the sample back through Φ.
            match (&self.kind, s) {
                (ExtensionKind::BoundaryPhase { disk, .. }, WSection::OnSpace(sec)) => {
                    let bump = FunctionField::from_fn(disk, |v| {
                        if disk.is_boundary(v) {
                            C64::new(0.0, 0.0)
                        } else {
                            C64::new(1.0, 0.0)
                        }
                    });
                    let ideal = sec.mul_fn(&bump)?;
                    let image = self.phi(&ideal)?;
                    if !self.membership(&image)? {
                        return Ok(false);
                    }
                    let lambda = self.pi(&image)?;
                    if crate::hilbmod::sup_norm(&lambda) > 1e-6 {
                        return Ok(false);
                    }
                }
                (ExtensionKind::MultiplierData { tower, .. }, WSection::Coupled { levels, .. }) => {
                    let tapered: Vec<SectionField> = levels
                        .iter()
                        .enumerate()
                        .map(|(t, sec)| {
                            let level_space = Arc::clone(tower.level(t));
                            let rings = level_space.n_vertices() / tower.n_angular();
                            let taper = FunctionField::from_fn(&level_space, |v| {
                                let ring = tower.ring_index(v);
                                if ring + 1 == rings {
                                    C64::new(0.0, 0.0)
                                } else {
                                    C64::new(1.0, 0.0)
                                }
                            });
                            sec.mul_fn(&taper)
                        })
                        .collect::<Result<_>>()?;
                    let image = self.phi_tower(tapered)?;
                    if !self.membership(&image)? {
                        return Ok(false);
                    }
                }
                _ => unreachable!("membership already checked the shape"),
            }
        }
        Ok(true)
    }

    /// The π-morphism identity of Π against restriction-to-boundary:
    /// `⟨Π(s), Π(s')⟩ = ⟨s, s'⟩|∂` for boundary-phase samples.
    pub fn check_pi_morphism(&self, samples: &[(WSection, WSection)]) -> Result<bool> {
        for (a, b) in samples {
            let (WSection::OnSpace(sa), WSection::OnSpace(sb)) = (a, b) else {
                return Err(Error::InvalidArgument(
                    "π-morphism check applies to boundary-phase sections".into(),
                ));
            };
            let pa = self.pi(a)?;
            let pb = self.pi(b)?;
            let lhs = inner_product(&pa, &pb)?;
            let rhs = inner_product(sa, sb)?;
            let ExtensionKind::BoundaryPhase { disk, .. } = &self.kind else {
                unreachable!()
            };
            let z_index = z_space_index(disk);
            for v in disk.boundary_vertices() {
                if (lhs.value(z_index[v]) - rhs.value(v)).norm() > 1e-7 {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// A random member of W (boundary-phase): boundary values λ·ω, random
    /// interior.
    pub fn sample_w_section(&self, rng: &mut impl rand::Rng) -> Result<WSection> {
        let ExtensionKind::BoundaryPhase { disk, v_bundle, cycle, winding } = &self.kind else {
            return Err(Error::InvalidArgument(
                "sampling is implemented for boundary-phase extensions".into(),
            ));
        };
        let lambda = crate::gen::random_complex(rng);
        let mut values = vec![CVec::zeros(1); disk.n_vertices()];
        for (v, value) in values.iter_mut().enumerate() {
            if !disk.is_boundary(v) {
                *value = CVec::from_element(1, crate::gen::random_complex(rng));
            }
        }
        for (j, &v) in cycle.iter().enumerate() {
            values[v] = CVec::from_element(1, lambda * winding.omega()[j]);
        }
        Ok(WSection::OnSpace(SectionField::new(
            Arc::clone(v_bundle),
            values,
        )?))
    }
}

/// Index of each boundary vertex inside the boundary subcomplex ordering.
fn z_space_index(disk: &SimplicialSpace) -> Vec<usize> {
    let mut index = vec![usize::MAX; disk.n_vertices()];
    for (i, v) in disk.boundary_vertices().into_iter().enumerate() {
        index[v] = i;
    }
    index
}

/// View a rank-one section as a function field on the same space.
pub fn section_as_function(s: &SectionField) -> Result<FunctionField> {
    if s.bundle().ambient_dim() != 1 {
        return Err(Error::InvalidArgument(
            "only rank-one sections convert to functions".into(),
        ));
    }
    FunctionField::new(
        Arc::clone(s.bundle().space()),
        s.values().iter().map(|v| v[0]).collect(),
    )
}

/// View a function field as a section of a rank-one bundle over the same
/// space.
pub fn function_as_section(
    bundle: &Arc<ProjectionField>,
    f: &FunctionField,
) -> Result<SectionField> {
    if bundle.ambient_dim() != 1 {
        return Err(Error::InvalidArgument("bundle is not rank one".into()));
    }
    if f.space().as_ref() != bundle.space().as_ref() {
        return Err(Error::BundleMismatch("spaces differ".into()));
    }
    SectionField::new(
        Arc::clone(bundle),
        f.values().iter().map(|&z| CVec::from_element(1, z)).collect(),
    )
}

/// Interchange descriptor bundling mesh and bundle references with the
/// boundary phase data; the CLI resolves the references against files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtensionDescriptor {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mesh: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_bundle: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z_bundle: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub busby: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Vec<Vec<[f64; 2]>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infinite_defect: Option<bool>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{det_winding, stabilized_invariant, InvariantRecord};
    use crate::linalg::cplx;
    use crate::mesh::{annulus_tower, build_disk_mesh};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn disk(n_ang: usize) -> Arc<SimplicialSpace> {
        Arc::new(build_disk_mesh(2, n_ang).unwrap())
    }

    #[test]
    fn w0_sections_are_constant_on_the_boundary() {
        let ext = build_wk_extension(0, &disk(8)).unwrap();
        let d = ext.disk().unwrap();
        let one = FunctionField::constant(d, cplx(1.0, 0.0));
        let (ok, lambda) = ext.membership_wk(&one).unwrap();
        assert!(ok);
        assert!((lambda.unwrap() - cplx(1.0, 0.0)).norm() < 1e-12);
        // Π of the constant-1 section is the constant 1 Z-section.
        let s = function_as_section(ext.v_bundle().unwrap(), &one).unwrap();
        let pi = ext.pi(&WSection::OnSpace(s)).unwrap();
        assert!((pi.value(0)[0] - cplx(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn w1_has_computed_winding_one() {
        let ext = build_wk_extension(1, &disk(16)).unwrap();
        let datum = ext.winding_datum().unwrap();
        assert_eq!(datum.k(), 1);
        assert_eq!(winding_number(datum.omega()).unwrap(), 1);
    }

    #[test]
    fn w7_on_eight_vertices_is_undersampled() {
        let coarse = Arc::new(build_disk_mesh(1, 8).unwrap());
        assert!(matches!(
            build_wk_extension(7, &coarse),
            Err(Error::LiftFailure(_))
        ));
    }

    #[test]
    fn membership_cases() {
        let ext = build_wk_extension(2, &disk(16)).unwrap();
        let d = ext.disk().unwrap();
        let zero = FunctionField::constant(d, cplx(0.0, 0.0));
        let (ok, lambda) = ext.membership_wk(&zero).unwrap();
        assert!(ok);
        assert!(lambda.unwrap().norm() < 1e-12);

        let omega_pos: std::collections::HashMap<usize, usize> = match ext.kind() {
            ExtensionKind::BoundaryPhase { cycle, .. } => {
                cycle.iter().enumerate().map(|(j, &v)| (v, j)).collect()
            }
            _ => unreachable!(),
        };
        let omega = ext.winding_datum().unwrap().omega().to_vec();
        let twice = FunctionField::from_fn(d, |v| {
            if d.is_boundary(v) {
                cplx(2.0, 0.0) * omega[omega_pos[&v]]
            } else {
                cplx(0.3, 0.1)
            }
        });
        let (ok, lambda) = ext.membership_wk(&twice).unwrap();
        assert!(ok);
        assert!((lambda.unwrap() - cplx(2.0, 0.0)).norm() < 1e-9);

        // Half the cycle at ω, half at 2ω: not a member.
        let broken = FunctionField::from_fn(d, |v| {
            if d.is_boundary(v) {
                let j = omega_pos[&v];
                let scale = if j < 8 { 1.0 } else { 2.0 };
                cplx(scale, 0.0) * omega[j]
            } else {
                cplx(0.0, 0.0)
            }
        });
        let (ok, lambda) = ext.membership_wk(&broken).unwrap();
        assert!(!ok);
        assert!(lambda.is_none());
    }

    #[test]
    fn busby_of_w0_is_constant_one() {
        let ext = build_wk_extension(0, &disk(16)).unwrap();
        let tower = Arc::new(annulus_tower(3, 16).unwrap());
        let field = ext.busby_invariant(&tower).unwrap();
        for c in 0..16 {
            assert!((field.value(c)[(0, 0)] - cplx(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn busby_of_wk_winds_k_at_every_level() {
        let ext = build_wk_extension(3, &disk(64)).unwrap();
        let tower = Arc::new(annulus_tower(3, 64).unwrap());
        for t in 0..3 {
            let field = ext.busby_field_at_level(&tower, t).unwrap();
            assert_eq!(det_winding(&field).unwrap(), 3, "level {t}");
        }
        assert_eq!(
            stabilized_invariant(&ext, &tower).unwrap(),
            InvariantRecord::Finite { windings: vec![3] }
        );
    }

    #[test]
    fn split_extension_busby_is_constant_one() {
        let ext = build_split_extension(&disk(16)).unwrap();
        let tower = Arc::new(annulus_tower(2, 16).unwrap());
        let field = ext.busby_invariant(&tower).unwrap();
        for c in 0..16 {
            assert!((field.value(c)[(0, 0)] - cplx(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn split_busby_matches_the_splitting_lift() {
        // Oracle from the splitting: lift the Z-generator to the constant-1
        // function, restrict to each tower level, read off the corona.
        let ext = build_split_extension(&disk(16)).unwrap();
        let tower = Arc::new(annulus_tower(3, 16).unwrap());
        let field = ext.busby_invariant(&tower).unwrap();
        for t in 0..3 {
            // The constant-1 lift restricted to level t has value 1 on the
            // outer rim; the Busby field must agree.
            for c in 0..16 {
                assert!((field.value(c)[(0, 0)] - cplx(1.0, 0.0)).norm() < 1e-9, "level {t}");
            }
        }
    }

    #[test]
    fn exactness_of_wk_samples() {
        let ext = build_wk_extension(1, &disk(16)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let mut samples = Vec::new();
        for _ in 0..10 {
            samples.push(ext.sample_w_section(&mut rng).unwrap());
        }
        assert!(ext.check_exactness(&samples).unwrap());
        // A vanishing-boundary sample has Π = 0; a unit-boundary sample has
        // Π = 1 ≠ 0 and is not ideal: both legs of the equivalence.
        let d = ext.disk().unwrap();
        let ideal = FunctionField::from_fn(d, |v| {
            if d.is_boundary(v) {
                cplx(0.0, 0.0)
            } else {
                cplx(0.7, -0.2)
            }
        });
        let ideal_sec = function_as_section(ext.v_bundle().unwrap(), &ideal).unwrap();
        let pi0 = ext.pi(&WSection::OnSpace(ideal_sec.clone())).unwrap();
        assert!(crate::hilbmod::sup_norm(&pi0) < 1e-12);
        assert!(ext.check_exactness(&[WSection::OnSpace(ideal_sec)]).unwrap());

        let member = ext.sample_w_section(&mut rng).unwrap();
        assert!(ext.check_exactness(&[member]).unwrap());
    }

    #[test]
    fn corrupted_coupled_sample_fails_exactness() {
        // A coupled sample with zero Z-part but non-vanishing corona trace:
        // Π(s) = 0 on a non-ideal sample, so the verdict must be false.
        let ext = build_wk_extension(1, &disk(16)).unwrap();
        let tower = Arc::new(annulus_tower(2, 16).unwrap());
        let delta = ext.busby_invariant(&tower).unwrap();
        let v_bundle = Arc::clone(ext.v_bundle().unwrap());
        let z_bundle = Arc::clone(ext.z_bundle());
        let pulled = extension_from_busby(&delta, &v_bundle, &z_bundle, &tower).unwrap();
        let ExtensionKind::MultiplierData { tower: t, v_levels, .. } = pulled.kind() else {
            panic!("pullback is multiplier data");
        };
        let levels: Vec<SectionField> = (0..t.n_levels())
            .map(|lv| {
                SectionField::from_fn(&v_levels[lv], |_| CVec::from_element(1, cplx(1.0, 0.0)))
                    .unwrap()
            })
            .collect();
        let bad = WSection::Coupled {
            levels,
            z: SectionField::zero(&z_bundle),
        };
        assert!(!pulled.check_exactness(&[bad]).unwrap());
    }

    #[test]
    fn pi_is_a_pi_morphism() {
        let ext = build_wk_extension(2, &disk(32)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let pairs: Vec<(WSection, WSection)> = (0..6)
            .map(|_| {
                (
                    ext.sample_w_section(&mut rng).unwrap(),
                    ext.sample_w_section(&mut rng).unwrap(),
                )
            })
            .collect();
        assert!(ext.check_pi_morphism(&pairs).unwrap());
    }

    #[test]
    fn phi_images_compose_to_zero_under_pi() {
        let ext = build_wk_extension(1, &disk(16)).unwrap();
        let d = ext.disk().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        for _ in 0..5 {
            let interior = FunctionField::from_fn(d, |v| {
                if d.is_boundary(v) {
                    cplx(0.0, 0.0)
                } else {
                    crate::gen::random_complex(&mut rng)
                }
            });
            let v = function_as_section(ext.v_bundle().unwrap(), &interior).unwrap();
            let w = ext.phi(&v).unwrap();
            let pi = ext.pi(&w).unwrap();
            assert!(crate::hilbmod::sup_norm(&pi) < 1e-12);
        }
    }

    #[test]
    fn busby_roundtrips_through_the_pullback() {
        for k in [0i64, 1, 2] {
            let ext = build_wk_extension(k, &disk(32)).unwrap();
            let tower = Arc::new(annulus_tower(3, 32).unwrap());
            let delta = ext.busby_invariant(&tower).unwrap();
            let pulled = extension_from_busby(
                &delta,
                ext.v_bundle().unwrap(),
                ext.z_bundle(),
                &tower,
            )
            .unwrap();
            let recovered = pulled.busby_invariant(&tower).unwrap();
            assert!(
                recovered.max_distance(&delta) < 1e-6,
                "k={k}: distance {}",
                recovered.max_distance(&delta)
            );
        }
    }

    #[test]
    fn split_pullback_is_the_constant_extension() {
        let ext = build_split_extension(&disk(16)).unwrap();
        let tower = Arc::new(annulus_tower(2, 16).unwrap());
        let delta = ext.busby_invariant(&tower).unwrap();
        let pulled =
            extension_from_busby(&delta, ext.v_bundle().unwrap(), ext.z_bundle(), &tower).unwrap();
        // The canonical lift of the unit probe is constant 1 on every level.
        let ExtensionKind::MultiplierData { lifts, .. } = pulled.kind() else {
            panic!()
        };
        for level_sections in lifts {
            for s in level_sections {
                for v in 0..s.bundle().space().n_vertices() {
                    assert!((s.value(v)[0] - cplx(1.0, 0.0)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn invalid_busby_data_is_rejected() {
        let ext = build_wk_extension(1, &disk(16)).unwrap();
        let tower = Arc::new(annulus_tower(2, 16).unwrap());
        let delta = ext.busby_invariant(&tower).unwrap();
        // Break the isometry invariant at one vertex.
        let mut values = delta.values().to_vec();
        values[3][(0, 0)] *= cplx(1.3, 0.0);
        let bad = IsometryField::new(
            Arc::clone(delta.base()),
            Arc::clone(delta.source()),
            delta.vertex_map().to_vec(),
            Arc::clone(delta.target()),
            values,
        );
        assert!(matches!(bad, Err(Error::NotAnIsometry { .. })));
    }

    #[test]
    fn hand_built_tower_data_with_level_dependent_winding_is_unstable() {
        let tower = Arc::new(annulus_tower(2, 16).unwrap());
        let corona = tower.corona_space();
        let z_bundle = Arc::new(ProjectionField::trivial(Arc::clone(corona), 1).unwrap());
        let v_levels: Vec<Arc<ProjectionField>> = (0..2)
            .map(|t| Arc::new(ProjectionField::trivial(Arc::clone(tower.level(t)), 1).unwrap()))
            .collect();
        let probes = vec![SectionField::from_fn(&z_bundle, |_| {
            CVec::from_element(1, cplx(1.0, 0.0))
        })
        .unwrap()];
        // Level 0 lift winds once on the rim, level 1 lift winds twice.
        let lifts = vec![(0..2)
            .map(|t| {
                let level = Arc::clone(&v_levels[t]);
                let k = (t + 1) as f64;
                let n_ang = tower.n_angular() as f64;
                SectionField::from_fn(&level, move |v| {
                    let theta = 2.0 * std::f64::consts::PI * (v % 16) as f64 / n_ang;
                    CVec::from_element(1, C64::from_polar(1.0, k * theta))
                })
                .unwrap()
            })
            .collect::<Vec<_>>()];
        let ext = multiplier_extension(
            z_bundle,
            Arc::clone(&tower),
            v_levels,
            (0..16).collect(),
            probes,
            lifts,
        )
        .unwrap();
        let err = stabilized_invariant(&ext, &tower).unwrap_err();
        match err {
            Error::Unstable { records } => {
                assert_eq!(
                    records,
                    vec![
                        InvariantRecord::Finite { windings: vec![1] },
                        InvariantRecord::Finite { windings: vec![2] },
                    ]
                );
            }
            other => panic!("expected Unstable, got {other}"),
        }
    }

    #[test]
    fn coarse_tower_reports_a_lift_failure_instead_of_aliasing() {
        // W_3 resampled onto an 8-point corona has argument increments
        // past π; the classification must refuse rather than alias.
        let ext = build_wk_extension(3, &disk(64)).unwrap();
        let tower = Arc::new(annulus_tower(2, 8).unwrap());
        let err = stabilized_invariant(&ext, &tower).unwrap_err();
        assert!(matches!(err, Error::LiftFailure(_)), "{err}");
    }

    #[test]
    fn wk_inner_products_land_in_the_compactified_algebra() {
        // ⟨W_k, W_k⟩ ⊂ C(S²): inner products of members are constant on the
        // boundary ring, and a spanning sample has no common zero.
        let ext = build_wk_extension(1, &disk(16)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let mut sections = Vec::new();
        for _ in 0..6 {
            let WSection::OnSpace(s) = ext.sample_w_section(&mut rng).unwrap() else {
                unreachable!()
            };
            sections.push(s);
        }
        for a in &sections {
            for b in &sections {
                let f = inner_product(a, b).unwrap();
                assert!(f.constant_on_boundary(1e-9));
            }
        }
        assert_eq!(crate::hilbmod::common_zero(&sections, 1e-9), None);
    }
}
