//! Vector bundles as projection-valued vertex fields, and the corona
//! bundle obtained by stabilizing a field along an annulus tower.
//!
//! A rank-k subbundle of the trivial C^m bundle is stored as one m×m
//! orthogonal projection per vertex. Validation enforces the three
//! conditions that make the data a bundle over the 1-skeleton: pointwise
//! projection, constant rank per component, and `‖P(u) − P(v)‖ < 1` across
//! edges (adjacent fibers are then canonically isomorphic).

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::linalg::{cplx, op_norm, projection_defects, projection_rank, C64, CMat, DEFAULT_TOL};
use crate::mesh::{AnnulusTower, SimplicialSpace};
use crate::{Error, Result};

/// Per-vertex orthogonal projection field over a simplicial space.
#[derive(Debug, Clone)]
pub struct ProjectionField {
    space: Arc<SimplicialSpace>,
    ambient_dim: usize,
    values: Vec<CMat>,
    vertex_ranks: Vec<usize>,
    component_ranks: Vec<usize>,
}

impl ProjectionField {
    pub fn new(space: Arc<SimplicialSpace>, ambient_dim: usize, values: Vec<CMat>) -> Result<Self> {
        Self::with_tol(space, ambient_dim, values, DEFAULT_TOL)
    }

    pub fn with_tol(
        space: Arc<SimplicialSpace>,
        ambient_dim: usize,
        values: Vec<CMat>,
        tol: f64,
    ) -> Result<Self> {
        if values.len() != space.n_vertices() {
            return Err(Error::InvalidArgument(format!(
                "{} projection values for {} vertices",
                values.len(),
                space.n_vertices()
            )));
        }
        let mut vertex_ranks = Vec::with_capacity(values.len());
        for (v, p) in values.iter().enumerate() {
            if p.nrows() != ambient_dim || p.ncols() != ambient_dim {
                return Err(Error::InvalidArgument(format!(
                    "vertex {v}: value is {}×{}, ambient dimension is {ambient_dim}",
                    p.nrows(),
                    p.ncols()
                )));
            }
            let (idem, herm) = projection_defects(p);
            if idem > tol || herm > tol {
                return Err(Error::NotAProjection {
                    vertex: v,
                    idempotence: idem,
                    hermiticity: herm,
                });
            }
            vertex_ranks.push(projection_rank(p));
        }
        let components = space.connected_components();
        let n_components = components.iter().max().map_or(0, |m| m + 1);
        let mut component_ranks = vec![usize::MAX; n_components];
        for v in 0..values.len() {
            let c = components[v];
            if component_ranks[c] == usize::MAX {
                component_ranks[c] = vertex_ranks[v];
            } else if component_ranks[c] != vertex_ranks[v] {
                return Err(Error::RankJump {
                    component: c,
                    vertex: v,
                    found: vertex_ranks[v],
                    expected: component_ranks[c],
                });
            }
        }
        for e in space.edges() {
            let d = op_norm(&(&values[e[0]] - &values[e[1]]));
            if d >= 1.0 {
                return Err(Error::EdgeDiscontinuity {
                    u: e[0],
                    v: e[1],
                    distance: d,
                });
            }
        }
        Ok(ProjectionField {
            space,
            ambient_dim,
            values,
            vertex_ranks,
            component_ranks,
        })
    }

    /// Field with the same projection at every vertex.
    pub fn constant(space: Arc<SimplicialSpace>, value: CMat) -> Result<Self> {
        let dim = value.nrows();
        let n = space.n_vertices();
        Self::new(space, dim, vec![value; n])
    }

    /// The free module of rank `m`: identity at every vertex.
    pub fn trivial(space: Arc<SimplicialSpace>, m: usize) -> Result<Self> {
        Self::constant(space, CMat::identity(m, m))
    }

    /// Constant diagonal projection onto the first `rank` coordinates.
    pub fn trivial_rank(space: Arc<SimplicialSpace>, m: usize, rank: usize) -> Result<Self> {
        if rank > m {
            return Err(Error::InvalidArgument(format!("rank {rank} > ambient {m}")));
        }
        let p = CMat::from_fn(m, m, |i, j| {
            if i == j && i < rank {
                cplx(1.0, 0.0)
            } else {
                cplx(0.0, 0.0)
            }
        });
        Self::constant(space, p)
    }

    pub fn space(&self) -> &Arc<SimplicialSpace> {
        &self.space
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn value(&self, v: usize) -> &CMat {
        &self.values[v]
    }

    pub fn values(&self) -> &[CMat] {
        &self.values
    }

    pub fn rank_at(&self, v: usize) -> usize {
        self.vertex_ranks[v]
    }

    pub fn n_components(&self) -> usize {
        self.component_ranks.len()
    }

    /// Re-run the full validation on the stored data.
    pub fn check_invariants(&self) -> Result<()> {
        Self::new(Arc::clone(&self.space), self.ambient_dim, self.values.clone()).map(|_| ())
    }

    /// Restrict the field to another space along a vertex map
    /// (`sub_vertex → this-space vertex`). The caller guarantees the map
    /// respects adjacency; validation re-checks the result anyway.
    pub fn restrict(
        &self,
        space: Arc<SimplicialSpace>,
        vertex_map: &[usize],
    ) -> Result<ProjectionField> {
        if vertex_map.len() != space.n_vertices() {
            return Err(Error::InvalidArgument(
                "vertex map length does not match the target space".into(),
            ));
        }
        let values: Vec<CMat> = vertex_map.iter().map(|&v| self.values[v].clone()).collect();
        ProjectionField::new(space, self.ambient_dim, values)
    }

    pub fn to_wire(&self) -> BundleWire {
        BundleWire {
            m: self.ambient_dim,
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(v, p)| (v.to_string(), mat_to_wire(p)))
                .collect(),
        }
    }

    pub fn from_wire(space: Arc<SimplicialSpace>, wire: &BundleWire) -> Result<Self> {
        let n = space.n_vertices();
        let mut values = Vec::with_capacity(n);
        for v in 0..n {
            let entry = wire.values.get(&v.to_string()).ok_or_else(|| {
                Error::InvalidArgument(format!("bundle JSON is missing vertex {v}"))
            })?;
            values.push(mat_from_wire(entry, wire.m, wire.m)?);
        }
        Self::new(space, wire.m, values)
    }
}

/// Rank of the bundle on the given connected component.
pub fn bundle_rank(field: &ProjectionField, component: usize) -> Result<usize> {
    field
        .component_ranks
        .get(component)
        .copied()
        .ok_or_else(|| Error::InvalidArgument(format!("no component {component}")))
}

/// Validated construction from a per-vertex generator, mirroring the
/// mapping form `P: U → Proj(C^m)`.
pub fn projection_field_from_map(
    space: &Arc<SimplicialSpace>,
    ambient_dim: usize,
    mut generator: impl FnMut(usize) -> CMat,
) -> Result<ProjectionField> {
    let values: Vec<CMat> = (0..space.n_vertices()).map(&mut generator).collect();
    ProjectionField::new(Arc::clone(space), ambient_dim, values)
}

/// Wire format: `{"m": …, "values": {"<vertex>": [[[re,im],…],…]}}`,
/// matrices row-major with complex entries as `[re, im]` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleWire {
    pub m: usize,
    pub values: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

pub(crate) fn mat_to_wire(m: &CMat) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub(crate) fn mat_from_wire(rows: &[Vec<[f64; 2]>], nrows: usize, ncols: usize) -> Result<CMat> {
    if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::InvalidArgument(format!(
            "matrix JSON is not {nrows}×{ncols}"
        )));
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// The corona bundle: the stabilized restriction of a tower of projection
/// fields to the shared outer rim.
#[derive(Debug, Clone)]
pub struct CoronaProjection {
    tower: Arc<AnnulusTower>,
    field: ProjectionField,
    tolerance: f64,
    deviation: f64,
}

impl CoronaProjection {
    /// Field over [`AnnulusTower::corona_space`].
    pub fn field(&self) -> &ProjectionField {
        &self.field
    }

    pub fn tower(&self) -> &Arc<AnnulusTower> {
        &self.tower
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Measured deviation between the last two level restrictions.
    pub fn deviation(&self) -> f64 {
        self.deviation
    }
}

/// Default stabilization tolerance for corona limits.
pub const CORONA_EPS: f64 = 1e-6;

/// Stabilized corona restriction of per-level fields. The fields must live
/// over the tower's levels and share one ambient dimension; the limit
/// exists when the outer-rim restrictions of the last two levels differ by
/// at most `eps` in operator norm, and is then the last level's
/// restriction.
pub fn corona_limit(
    fields: &[ProjectionField],
    tower: &Arc<AnnulusTower>,
    eps: f64,
) -> Result<CoronaProjection> {
    if fields.len() != tower.n_levels() {
        return Err(Error::InvalidArgument(format!(
            "{} fields for a {}-level tower",
            fields.len(),
            tower.n_levels()
        )));
    }
    let m = fields[0].ambient_dim();
    for (t, f) in fields.iter().enumerate() {
        if f.ambient_dim() != m {
            return Err(Error::InvalidArgument(
                "tower fields have mixed ambient dimensions".into(),
            ));
        }
        if f.space().as_ref() != tower.level(t).as_ref() {
            return Err(Error::InvalidArgument(format!(
                "field {t} does not live over tower level {t}"
            )));
        }
    }
    let restrict = |t: usize| -> Vec<&CMat> {
        tower.corona_cycle(t).iter().map(|&v| fields[t].value(v)).collect()
    };
    let last = tower.n_levels() - 1;
    let r_last = restrict(last);
    let r_prev = restrict(last - 1);
    let deviation = r_last
        .iter()
        .zip(&r_prev)
        .map(|(a, b)| op_norm(&(*a - *b)))
        .fold(0.0, f64::max);
    if deviation > eps {
        return Err(Error::NonStabilizing {
            deviation,
            tolerance: eps,
        });
    }
    let field = ProjectionField::new(
        Arc::clone(tower.corona_space()),
        m,
        r_last.into_iter().cloned().collect(),
    )?;
    Ok(CoronaProjection {
        tower: Arc::clone(tower),
        field,
        tolerance: eps,
        deviation,
    })
}
