//! Homotopy-classification invariants: winding numbers of circle-valued
//! loops, determinant windings of square isometry fields over cycles,
//! Stiefel classes over graphs, the tower-stabilized invariant of an
//! extension, and the ℤ∪∞ Fredholm-index model.

mod fredholm;
mod homotopy;

pub use fredholm::{fredholm_index, StructuredOperator, KERNEL_SV_THRESHOLD, TRUNCATION_CAP};
pub use homotopy::{
    homotopy_equivalent_fields, homotopy_equivalent_operators, validate_certificate,
    FieldHomotopy, CERTIFICATE_STEP_BOUND,
};

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::extension::ExtensionTriple;
use crate::isometry::{closed_cycle_frames, IsometryField};
use crate::linalg::{principal_arg, C64, CMat};
use crate::mesh::AnnulusTower;
use crate::{Error, Result};

/// Residue bound on winding sums: a correct lift sums to a multiple of 2π
/// up to float noise, so anything past this is a hard error.
pub const WINDING_RESIDUE_BOUND: f64 = 0.01;

/// A homotopy invariant: per-cycle winding vector for finite classes, or
/// the single infinite-defect class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum InvariantRecord {
    Finite { windings: Vec<i64> },
    Infinite,
}

/// Homotopy class of an essential isometry: finite Fredholm index or the
/// one infinite-defect class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtensionClass {
    FiniteIndex(i64),
    InfiniteDefect,
}

impl From<ExtensionClass> for InvariantRecord {
    fn from(c: ExtensionClass) -> Self {
        match c {
            ExtensionClass::FiniteIndex(k) => InvariantRecord::Finite { windings: vec![k] },
            ExtensionClass::InfiniteDefect => InvariantRecord::Infinite,
        }
    }
}

/// Winding number of a discrete unit-modulus loop: the total of principal
/// argument increments around the loop, divided by 2π.
///
/// Undersampled data cannot be lifted reliably, so any increment of
/// magnitude ≥ π (antipodal or worse) is a [`Error::LiftFailure`], never a
/// silent guess, and a rounding residue past [`WINDING_RESIDUE_BOUND`] is a
/// hard error.
pub fn winding_number(samples: &[C64]) -> Result<i64> {
    if samples.is_empty() {
        return Err(Error::InvalidArgument("empty loop".into()));
    }
    for (j, z) in samples.iter().enumerate() {
        if (z.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "sample {j} has modulus {:.12}, not 1",
                z.norm()
            )));
        }
    }
    let n = samples.len();
    let mut total = 0.0;
    for j in 0..n {
        let inc = principal_arg(samples[(j + 1) % n] * samples[j].conj());
        if inc.abs() >= std::f64::consts::PI - 1e-9 {
            return Err(Error::LiftFailure(format!(
                "argument increment {:.6} at sample {j} reaches π; the loop is undersampled",
                inc
            )));
        }
        total += inc;
    }
    let w = total / (2.0 * std::f64::consts::PI);
    let rounded = w.round();
    if (w - rounded).abs() >= WINDING_RESIDUE_BOUND {
        return Err(Error::LiftFailure(format!(
            "winding sum {w:.6} is not within {WINDING_RESIDUE_BOUND} of an integer"
        )));
    }
    Ok(rounded as i64)
}

/// Determinant winding of a square-rank isometry field along an explicit
/// closed vertex loop, computed in closed transported frames of both
/// bundles.
pub fn det_winding_on_loop(field: &IsometryField, cycle: &[usize]) -> Result<i64> {
    let src_values: Vec<&CMat> = cycle
        .iter()
        .map(|&z| field.source().value(field.vertex_map()[z]))
        .collect();
    let tgt_values: Vec<&CMat> = cycle.iter().map(|&z| field.target().value(z)).collect();
    let b_src = closed_cycle_frames(&src_values)?;
    let b_tgt = closed_cycle_frames(&tgt_values)?;
    let k = b_src.first().map_or(0, |b| b.ncols());
    let m = b_tgt.first().map_or(0, |b| b.ncols());
    if k != m {
        return Err(Error::ShapeMismatch(format!(
            "determinant winding needs equal fiber ranks, got {k} and {m}"
        )));
    }
    if k == 0 {
        return Ok(0);
    }
    let mut dets = Vec::with_capacity(cycle.len());
    for (j, &z) in cycle.iter().enumerate() {
        let small = b_tgt[j].adjoint() * field.value(z) * &b_src[j];
        let d = small.determinant();
        let norm = d.norm();
        if norm < 0.5 {
            return Err(Error::NotAnIsometry {
                vertex: z,
                what: "frame determinant collapsed",
                defect: 1.0 - norm,
            });
        }
        dets.push(d / norm);
    }
    winding_number(&dets)
}

/// Determinant winding of a field whose base is a single cycle.
pub fn det_winding(field: &IsometryField) -> Result<i64> {
    let cycle = single_cycle(field)?;
    det_winding_on_loop(field, &cycle)
}

fn single_cycle(field: &IsometryField) -> Result<Vec<usize>> {
    let base = field.base();
    if !base.triangles().is_empty() {
        return Err(Error::ShapeMismatch("base must be a 1-complex".into()));
    }
    let mut cycles = base.cycle_basis()?;
    if cycles.len() != 1 || cycles[0].len() != base.n_vertices() {
        return Err(Error::ShapeMismatch(format!(
            "base is not a single cycle ({} basis cycles over {} vertices)",
            cycles.len(),
            base.n_vertices()
        )));
    }
    Ok(cycles.remove(0))
}

/// Stiefel class of an isometry field over a graph base.
///
/// For equal fiber ranks the class is the vector of determinant windings
/// over a cycle basis of the graph; for strictly smaller source rank the
/// Stiefel fiber is simply connected, all fields are homotopic, and the
/// record is the trivial (empty) winding vector.
pub fn stiefel_class(field: &IsometryField) -> Result<InvariantRecord> {
    let base = field.base();
    if !base.triangles().is_empty() {
        return Err(Error::ShapeMismatch("base must be a 1-complex".into()));
    }
    let n = base.n_vertices();
    if n == 0 {
        return Ok(InvariantRecord::Finite { windings: vec![] });
    }
    let mut square = None;
    for z in 0..n {
        let k = field.source().rank_at(field.vertex_map()[z]);
        let m = field.target().rank_at(z);
        if k > m {
            return Err(Error::ShapeMismatch(format!(
                "source rank {k} exceeds target rank {m} at vertex {z}"
            )));
        }
        let is_square = k == m;
        match square {
            None => square = Some(is_square),
            Some(prev) if prev != is_square => {
                return Err(Error::ShapeMismatch(
                    "mixed square / non-square fiber ranks across the base".into(),
                ))
            }
            _ => {}
        }
    }
    if square == Some(false) {
        return Ok(InvariantRecord::Finite { windings: vec![] });
    }
    let basis = base.cycle_basis()?;
    let windings = basis
        .iter()
        .map(|cycle| det_winding_on_loop(field, cycle))
        .collect::<Result<Vec<i64>>>()?;
    Ok(InvariantRecord::Finite { windings })
}

/// Stiefel class of the Busby field at every tower level; the direct-limit
/// surrogate succeeds exactly when all levels agree, and the disagreement
/// is reported, never averaged.
pub fn stabilized_invariant(
    ext: &ExtensionTriple,
    tower: &Arc<AnnulusTower>,
) -> Result<InvariantRecord> {
    let mut records = Vec::with_capacity(tower.n_levels());
    for t in 0..tower.n_levels() {
        let field = ext.busby_field_at_level(tower, t)?;
        records.push(stiefel_class(&field)?);
    }
    if records.windows(2).all(|w| w[0] == w[1]) {
        Ok(records.pop().expect("tower has at least two levels"))
    } else {
        Err(Error::Unstable { records })
    }
}

/// Per-level Stiefel records, for reporting.
pub fn per_level_records(
    ext: &ExtensionTriple,
    tower: &Arc<AnnulusTower>,
) -> Result<Vec<InvariantRecord>> {
    (0..tower.n_levels())
        .map(|t| stiefel_class(&ext.busby_field_at_level(tower, t)?))
        .collect()
}
