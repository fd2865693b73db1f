//! Hilbert C*-module extensions over commutative algebras, at desk scale.
//!
//! The toolkit models compact spaces as finite simplicial complexes,
//! vector bundles as per-vertex projection fields, and Hilbert module
//! elements as section fields with a pointwise algebra-valued pairing.
//! Extensions `0 → V → W → Z → 0` are built concretely (the boundary-phase
//! family `W_ω` over a disk, pullbacks of Busby data over an annulus
//! tower), their Busby invariants are computed as fiberwise isometry
//! fields on the corona cycle, and homotopy classification is decided by
//! winding numbers, Stiefel records over cycle bases, and Fredholm indices
//! in the Toeplitz-plus-finite-rank model.

pub mod bundle;
mod error;
pub mod extension;
pub mod gen;
pub mod hilbmod;
pub mod invariants;
pub mod isometry;
pub mod linalg;
pub mod mesh;

pub use error::{Error, Result};
pub use linalg::{C64, CMat, CVec, DEFAULT_TOL};

pub use bundle::{bundle_rank, corona_limit, projection_field_from_map, CoronaProjection, ProjectionField};
pub use extension::{
    build_split_extension, build_wk_extension, extension_from_busby, ExtensionKind,
    ExtensionTriple, WSection, WindingDatum,
};
pub use hilbmod::{
    apply_morphism, check_morphism, common_zero, fiber_quotient_norm, inner_product,
    is_ideal_section, sup_norm, FunctionField, ModuleMorphism, SectionField,
};
pub use invariants::{
    det_winding, fredholm_index, homotopy_equivalent_fields, homotopy_equivalent_operators,
    stabilized_invariant, stiefel_class, winding_number, ExtensionClass, FieldHomotopy,
    InvariantRecord, StructuredOperator,
};
pub use isometry::{
    delta_to_isometry, isometry_to_delta, pullback_bundle, roundtrip_check_field,
    roundtrip_check_morphism, IsometryField, PullbackBundle,
};
pub use mesh::{annulus_tower, build_annulus_mesh, build_disk_mesh, AnnulusTower, SimplicialSpace};
