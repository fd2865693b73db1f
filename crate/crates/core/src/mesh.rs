//! Finite simplicial models of the compact spaces: disks, annuli and the
//! nested annulus tower standing in for the corona of the open disk.
//!
//! All complexes have dimension ≤ 2 and carry planar coordinates. The
//! boundary is marked per vertex; boundary *edges* are derived — an edge is
//! a boundary edge when both endpoints are marked and it borders at most
//! one triangle. That derived rule makes the boundary subcomplex of an
//! annulus come out as the two rim cycles rather than the whole 1-skeleton,
//! and makes extraction idempotent.

use std::collections::BTreeSet;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hard cap on constructed mesh sizes.
pub const MAX_VERTICES: usize = 10_000;

/// A finite 2-dimensional simplicial complex with planar coordinates and a
/// marked boundary vertex set.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialSpace {
    coords: Vec<[f64; 2]>,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    allow_disconnected: bool,
}

#[derive(Serialize, Deserialize)]
struct MeshWire {
    vertices: Vec<[f64; 2]>,
    edges: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<usize>,
}

fn canon_edge(e: [usize; 2]) -> [usize; 2] {
    if e[0] <= e[1] {
        e
    } else {
        [e[1], e[0]]
    }
}

fn canon_tri(mut t: [usize; 3]) -> [usize; 3] {
    t.sort_unstable();
    t
}

impl SimplicialSpace {
    /// Build and validate a complex whose 1-skeleton must be connected.
    pub fn new(
        coords: Vec<[f64; 2]>,
        edges: Vec<[usize; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: &[usize],
    ) -> Result<Self> {
        Self::build(cords_ok(coords)?, edges, triangles, boundary, false)
    }

    /// Same as [`SimplicialSpace::new`] but explicitly permits a
    /// disconnected 1-skeleton (boundary subcomplexes, wedges of external
    /// data, ...).
    pub fn new_disconnected(
        coords: Vec<[f64; 2]>,
        edges: Vec<[usize; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: &[usize],
    ) -> Result<Self> {
        Self::build(cords_ok(coords)?, edges, triangles, boundary, true)
    }

    fn build(
        coords: Vec<[f64; 2]>,
        edges: Vec<[usize; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: &[usize],
        allow_disconnected: bool,
    ) -> Result<Self> {
        let n = coords.len();
        let mut boundary_flags = vec![false; n];
        for &b in boundary {
            if b >= n {
                return Err(Error::MeshInvariant(format!(
                    "boundary vertex {b} out of range (n={n})"
                )));
            }
            boundary_flags[b] = true;
        }
        let mut edge_set: BTreeSet<[usize; 2]> = BTreeSet::new();
        for e in edges {
            if e[0] == e[1] {
                return Err(Error::MeshInvariant(format!("degenerate edge ({},{})", e[0], e[1])));
            }
            if e[0] >= n || e[1] >= n {
                return Err(Error::MeshInvariant(format!(
                    "edge ({},{}) references a missing vertex",
                    e[0], e[1]
                )));
            }
            edge_set.insert(canon_edge(e));
        }
        let mut tri_set: BTreeSet<[usize; 3]> = BTreeSet::new();
        for t in triangles {
            let t = canon_tri(t);
            if t[0] == t[1] || t[1] == t[2] {
                return Err(Error::MeshInvariant(format!("degenerate triangle {t:?}")));
            }
            if t[2] >= n {
                return Err(Error::MeshInvariant(format!(
                    "triangle {t:?} references a missing vertex"
                )));
            }
            tri_set.insert(t);
        }
        let space = SimplicialSpace {
            coords,
            edges: edge_set.into_iter().collect(),
            triangles: tri_set.into_iter().collect(),
            boundary: boundary_flags,
            allow_disconnected,
        };
        space.check_invariants()?;
        Ok(space)
    }

    /// Re-run every structural invariant. Cheap; used as the oracle for the
    /// constructed examples.
    pub fn check_invariants(&self) -> Result<()> {
        for t in &self.triangles {
            for e in [[t[0], t[1]], [t[0], t[2]], [t[1], t[2]]] {
                if !self.has_edge(e[0], e[1]) {
                    return Err(Error::MeshInvariant(format!(
                        "triangle {t:?} is missing edge ({},{})",
                        e[0], e[1]
                    )));
                }
            }
        }
        if !self.allow_disconnected && self.n_vertices() > 0 {
            let comp = self.connected_components();
            if comp.iter().any(|&c| c != 0) {
                return Err(Error::MeshInvariant(
                    "1-skeleton is disconnected".to_string(),
                ));
            }
        }
        // Derived boundary edges join boundary vertices by construction;
        // verify anyway so external data cannot smuggle in a broken rule.
        for e in self.boundary_edges() {
            if !(self.boundary[e[0]] && self.boundary[e[1]]) {
                return Err(Error::MeshInvariant(format!(
                    "boundary edge ({},{}) has a non-boundary endpoint",
                    e[0], e[1]
                )));
            }
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self, v: usize) -> [f64; 2] {
        self.coords[v]
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.binary_search(&canon_edge([u, v])).is_ok()
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn boundary_vertices(&self) -> Vec<usize> {
        (0..self.n_vertices()).filter(|&v| self.boundary[v]).collect()
    }

    /// Component index per vertex; components numbered by their smallest
    /// vertex, starting at 0.
    pub fn connected_components(&self) -> Vec<usize> {
        let n = self.n_vertices();
        let mut comp = vec![usize::MAX; n];
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e[0]].push(e[1]);
            adj[e[1]].push(e[0]);
        }
        let mut next = 0;
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let mut stack = vec![start];
            comp[start] = next;
            while let Some(v) = stack.pop() {
                for &w in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn n_components(&self) -> usize {
        self.connected_components().iter().max().map_or(0, |m| m + 1)
    }

    fn triangle_count_per_edge(&self) -> std::collections::HashMap<[usize; 2], usize> {
        let mut counts = std::collections::HashMap::new();
        for t in &self.triangles {
            for e in [[t[0], t[1]], [t[0], t[2]], [t[1], t[2]]] {
                *counts.entry(canon_edge(e)).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Edges of the boundary subcomplex: both endpoints marked, at most one
    /// incident triangle.
    pub fn boundary_edges(&self) -> Vec<[usize; 2]> {
        let counts = self.triangle_count_per_edge();
        self.edges
            .iter()
            .filter(|e| {
                self.boundary[e[0]]
                    && self.boundary[e[1]]
                    && counts.get(&canon_edge(**e)).copied().unwrap_or(0) <= 1
            })
            .copied()
            .collect()
    }

    /// The induced boundary subcomplex, reindexed to its own vertex set.
    /// Empty boundary yields the empty complex. Applying this twice is a
    /// fixed point.
    pub fn boundary_subcomplex(&self) -> SimplicialSpace {
        let verts = self.boundary_vertices();
        let mut index = vec![usize::MAX; self.n_vertices()];
        for (new, &old) in verts.iter().enumerate() {
            index[old] = new;
        }
        let coords = verts.iter().map(|&v| self.coords[v]).collect();
        let edges = self
            .boundary_edges()
            .into_iter()
            .map(|e| [index[e[0]], index[e[1]]])
            .collect();
        let boundary: Vec<usize> = (0..verts.len()).collect();
        SimplicialSpace::build(coords, edges, Vec::new(), &boundary, true)
            .expect("boundary subcomplex of a valid complex is valid")
    }

    /// Ordered simple cycles formed by the boundary edges, in original
    /// vertex indices. Each cycle starts at its smallest vertex and runs
    /// counterclockwise (positive shoelace area).
    pub fn boundary_cycles(&self) -> Result<Vec<Vec<usize>>> {
        let edges = self.boundary_edges();
        cycles_from_edges(&edges, &self.coords)
    }

    /// Fundamental cycles of the 1-skeleton with respect to a BFS spanning
    /// forest, one per non-tree edge, each normalized like
    /// [`SimplicialSpace::boundary_cycles`]. This is a basis of the first
    /// homology of the graph.
    pub fn cycle_basis(&self) -> Result<Vec<Vec<usize>>> {
        let n = self.n_vertices();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e[0]].push(e[1]);
            adj[e[1]].push(e[0]);
        }
        for nb in &mut adj {
            nb.sort_unstable();
        }
        let mut parent = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut tree: BTreeSet<[usize; 2]> = BTreeSet::new();
        for root in 0..n {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut queue = std::collections::VecDeque::from([root]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        parent[w] = v;
                        tree.insert(canon_edge([v, w]));
                        queue.push_back(w);
                    }
                }
            }
        }
        let mut cycles = Vec::new();
        for e in &self.edges {
            if tree.contains(&canon_edge(*e)) {
                continue;
            }
            let path_to_root = |mut v: usize| {
                let mut path = vec![v];
                while parent[v] != usize::MAX {
                    v = parent[v];
                    path.push(v);
                }
                path
            };
            let pu = path_to_root(e[0]);
            let pv = path_to_root(e[1]);
            // Strip the common tail above the meet point.
            let mut iu = pu.len();
            let mut iv = pv.len();
            while iu > 0 && iv > 0 && pu[iu - 1] == pv[iv - 1] {
                iu -= 1;
                iv -= 1;
            }
            // u .. meet .. v, then the non-tree edge closes the loop. The
            // common tail is nonempty (shared root), so iu < pu.len().
            let mut cycle: Vec<usize> = pu[..=iu].to_vec();
            for j in (0..iv).rev() {
                cycle.push(pv[j]);
            }
            cycles.push(normalize_cycle(cycle, &self.coords));
        }
        Ok(cycles)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("mesh serialization cannot fail")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidArgument(format!("bad mesh JSON: {e}")))
    }
}

fn cords_ok(coords: Vec<[f64; 2]>) -> Result<Vec<[f64; 2]>> {
    if coords.iter().flatten().any(|c| !c.is_finite()) {
        return Err(Error::MeshInvariant("non-finite vertex coordinate".into()));
    }
    Ok(coords)
}

impl Serialize for SimplicialSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MeshWire {
            vertices: self.coords.clone(),
            edges: self.edges.clone(),
            triangles: self.triangles.clone(),
            boundary: self.boundary_vertices(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SimplicialSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let wire = MeshWire::deserialize(d)?;
        // External data may legitimately be disconnected (boundary
        // complexes, wedges); structural invariants still apply.
        SimplicialSpace::new_disconnected(wire.vertices, wire.edges, wire.triangles, &wire.boundary)
            .map_err(serde::de::Error::custom)
    }
}

/// Assemble ordered cycles from an edge set in which every incident vertex
/// has degree exactly 2. Isolated vertices are ignored.
fn cycles_from_edges(edges: &[[usize; 2]], coords: &[[f64; 2]]) -> Result<Vec<Vec<usize>>> {
    let mut adj: std::collections::BTreeMap<usize, Vec<usize>> = std::collections::BTreeMap::new();
    for e in edges {
        adj.entry(e[0]).or_default().push(e[1]);
        adj.entry(e[1]).or_default().push(e[0]);
    }
    for (v, nb) in &adj {
        if nb.len() != 2 {
            return Err(Error::MeshInvariant(format!(
                "vertex {v} has boundary degree {} (not a disjoint union of simple cycles)",
                nb.len()
            )));
        }
    }
    let mut visited: BTreeSet<usize> = BTreeSet::new();
    let mut cycles = Vec::new();
    for &start in adj.keys() {
        if visited.contains(&start) {
            continue;
        }
        let mut cycle = vec![start];
        visited.insert(start);
        let mut prev = start;
        let mut cur = adj[&start][0];
        while cur != start {
            visited.insert(cur);
            cycle.push(cur);
            let nb = &adj[&cur];
            let next = if nb[0] == prev { nb[1] } else { nb[0] };
            prev = cur;
            cur = next;
        }
        cycles.push(normalize_cycle(cycle, coords));
    }
    Ok(cycles)
}

/// Rotate a cycle to start at its smallest vertex and orient it
/// counterclockwise by the shoelace sign (ties keep the given direction).
fn normalize_cycle(mut cycle: Vec<usize>, coords: &[[f64; 2]]) -> Vec<usize> {
    let min_pos = cycle
        .iter()
        .enumerate()
        .min_by_key(|(_, &v)| v)
        .map(|(i, _)| i)
        .unwrap_or(0);
    cycle.rotate_left(min_pos);
    let area: f64 = cycle
        .iter()
        .zip(cycle.iter().cycle().skip(1))
        .map(|(&a, &b)| coords[a][0] * coords[b][1] - coords[b][0] * coords[a][1])
        .take(cycle.len())
        .sum();
    if area < 0.0 {
        cycle[1..].reverse();
    }
    cycle
}

/// Triangulated closed unit disk: a center vertex plus `n_radial` rings of
/// `n_angular` vertices; the outermost ring is the boundary. Vertex count
/// is `n_radial * n_angular + 1`.
pub fn build_disk_mesh(n_radial: usize, n_angular: usize) -> Result<SimplicialSpace> {
    check_ring_args(n_radial, n_angular, n_radial * n_angular + 1)?;
    let mut coords = vec![[0.0, 0.0]];
    for j in 1..=n_radial {
        let r = j as f64 / n_radial as f64;
        coords.extend(ring_coords(r, n_angular));
    }
    let ring = |j: usize, i: usize| 1 + (j - 1) * n_angular + (i % n_angular);
    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    for i in 0..n_angular {
        edges.push([0, ring(1, i)]);
        triangles.push([0, ring(1, i), ring(1, i + 1)]);
    }
    for j in 1..=n_radial {
        for i in 0..n_angular {
            edges.push([ring(j, i), ring(j, i + 1)]);
        }
    }
    for j in 1..n_radial {
        for i in 0..n_angular {
            let a0 = ring(j, i);
            let a1 = ring(j, i + 1);
            let b0 = ring(j + 1, i);
            let b1 = ring(j + 1, i + 1);
            edges.push([a0, b0]);
            edges.push([a0, b1]);
            triangles.push([a0, a1, b1]);
            triangles.push([a0, b1, b0]);
        }
    }
    let boundary: Vec<usize> = (0..n_angular).map(|i| ring(n_radial, i)).collect();
    SimplicialSpace::new(coords, edges, triangles, &boundary)
}

/// Triangulated closed annulus `r_inner ≤ |z| ≤ 1` with `n_radial + 1`
/// uniformly spaced rings; both rims are boundary. The outer rim occupies
/// the last `n_angular` indices in angular order.
pub fn build_annulus_mesh(r_inner: f64, n_radial: usize, n_angular: usize) -> Result<SimplicialSpace> {
    if !(r_inner > 0.0 && r_inner < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "inner radius must lie in (0,1), got {r_inner}"
        )));
    }
    let radii: Vec<f64> = (0..=n_radial)
        .map(|j| r_inner + (1.0 - r_inner) * j as f64 / n_radial as f64)
        .collect();
    build_ring_mesh(&radii, n_angular)
}

/// Annulus over an explicit increasing list of ring radii. Sharing the
/// radius list across tower levels makes nested levels agree exactly on
/// common vertex coordinates.
pub fn build_ring_mesh(radii: &[f64], n_angular: usize) -> Result<SimplicialSpace> {
    if radii.len() < 2 {
        return Err(Error::InvalidArgument("need at least two rings".into()));
    }
    if radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("ring radii must be strictly increasing".into()));
    }
    let n_rings = radii.len();
    check_ring_args(n_rings - 1, n_angular, n_rings * n_angular)?;
    let mut coords = Vec::with_capacity(n_rings * n_angular);
    for &r in radii {
        coords.extend(ring_coords(r, n_angular));
    }
    let at = |j: usize, i: usize| j * n_angular + (i % n_angular);
    let mut edges = Vec::new();
    let mut triangles = Vec::new();
    for j in 0..n_rings {
        for i in 0..n_angular {
            edges.push([at(j, i), at(j, i + 1)]);
        }
    }
    for j in 0..n_rings - 1 {
        for i in 0..n_angular {
            let a0 = at(j, i);
            let a1 = at(j, i + 1);
            let b0 = at(j + 1, i);
            let b1 = at(j + 1, i + 1);
            edges.push([a0, b0]);
            edges.push([a0, b1]);
            triangles.push([a0, a1, b1]);
            triangles.push([a0, b1, b0]);
        }
    }
    let boundary: Vec<usize> = (0..n_angular)
        .map(|i| at(0, i))
        .chain((0..n_angular).map(|i| at(n_rings - 1, i)))
        .collect();
    SimplicialSpace::new(coords, edges, triangles, &boundary)
}

/// Standalone cycle complex with `n` vertices on the unit circle, in
/// angular order. Used as the base space of corona fields.
pub fn cycle_space(n: usize) -> Result<SimplicialSpace> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("cycle needs ≥ 3 vertices, got {n}")));
    }
    let coords = ring_coords(1.0, n);
    let edges: Vec<[usize; 2]> = (0..n).map(|i| [i, (i + 1) % n]).collect();
    SimplicialSpace::new(coords, edges, Vec::new(), &[])
}

fn ring_coords(r: f64, n_angular: usize) -> Vec<[f64; 2]> {
    (0..n_angular)
        .map(|i| {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n_angular as f64;
            [r * theta.cos(), r * theta.sin()]
        })
        .collect()
}

fn check_ring_args(n_radial: usize, n_angular: usize, total: usize) -> Result<()> {
    if n_radial == 0 {
        return Err(Error::InvalidArgument("n_radial must be positive".into()));
    }
    if n_angular < 3 {
        return Err(Error::InvalidArgument(format!(
            "n_angular must be ≥ 3, got {n_angular}"
        )));
    }
    if total > MAX_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "mesh would have {total} vertices (cap {MAX_VERTICES})"
        )));
    }
    Ok(())
}

/// Nested tower of annuli modeling the closures of `U ∖ U_{r_t}`. Level `t`
/// (0-based) is the annulus `r_{t+1} ≤ |z| ≤ 1` with inner radius
/// `r_{t+1} = (t+1)/(n_levels+1)`; all levels share the outer unit ring,
/// and each level is a subcomplex of the previous one under the coordinate
/// identification.
#[derive(Debug, Clone)]
pub struct AnnulusTower {
    levels: Vec<Arc<SimplicialSpace>>,
    radii: Vec<f64>,
    corona_cycles: Vec<Vec<usize>>,
    corona_space: Arc<SimplicialSpace>,
    n_angular: usize,
}

pub fn annulus_tower(n_levels: usize, n_angular: usize) -> Result<AnnulusTower> {
    if n_levels < 2 {
        return Err(Error::InvalidArgument(format!(
            "tower needs at least 2 levels, got {n_levels}"
        )));
    }
    // Shared radius list: r_t for t = 1..n_levels plus the outer unit ring.
    let mut all_radii: Vec<f64> = (1..=n_levels)
        .map(|t| t as f64 / (n_levels + 1) as f64)
        .collect();
    all_radii.push(1.0);
    if (n_levels + 1) * n_angular > MAX_VERTICES {
        return Err(Error::InvalidArgument(format!(
            "tower base level would exceed the {MAX_VERTICES}-vertex cap"
        )));
    }
    let mut levels = Vec::with_capacity(n_levels);
    let mut corona_cycles = Vec::with_capacity(n_levels);
    for t in 0..n_levels {
        let radii = &all_radii[t..];
        let level = build_ring_mesh(radii, n_angular)?;
        let n_rings = radii.len();
        corona_cycles.push(((n_rings - 1) * n_angular..n_rings * n_angular).collect());
        levels.push(Arc::new(level));
    }
    let corona_space = Arc::new(cycle_space(n_angular)?);
    Ok(AnnulusTower {
        levels,
        radii: all_radii[..n_levels].to_vec(),
        corona_cycles,
        corona_space,
        n_angular,
    })
}

impl AnnulusTower {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, t: usize) -> &Arc<SimplicialSpace> {
        &self.levels[t]
    }

    pub fn levels(&self) -> &[Arc<SimplicialSpace>] {
        &self.levels
    }

    /// Inner radius of level `t`.
    pub fn inner_radius(&self, t: usize) -> f64 {
        self.radii[t]
    }

    pub fn n_angular(&self) -> usize {
        self.n_angular
    }

    /// Ordered outer rim of level `t`, in that level's vertex indices.
    pub fn corona_cycle(&self, t: usize) -> &[usize] {
        &self.corona_cycles[t]
    }

    /// The shared corona modeled as a standalone cycle complex; position
    /// `i` corresponds to angle `2πi/n_angular` on every level's outer rim.
    pub fn corona_space(&self) -> &Arc<SimplicialSpace> {
        &self.corona_space
    }

    /// Angular position of a level vertex (levels are ring-major).
    pub fn angle_index(&self, vertex: usize) -> usize {
        vertex % self.n_angular
    }

    /// Ring index (0 = inner rim) of a level vertex.
    pub fn ring_index(&self, vertex: usize) -> usize {
        vertex / self.n_angular
    }

    /// Check that each level is a subcomplex of the previous one under the
    /// exact coordinate identification, and that radii increase.
    pub fn check_nesting(&self) -> Result<()> {
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MeshInvariant("tower radii are not increasing".into()));
        }
        for t in 0..self.n_levels() - 1 {
            let outer = &self.levels[t];
            let inner = &self.levels[t + 1];
            let mut index: std::collections::HashMap<(u64, u64), usize> = std::collections::HashMap::new();
            for v in 0..outer.n_vertices() {
                let [x, y] = outer.coords(v);
                index.insert((x.to_bits(), y.to_bits()), v);
            }
            let mut map = Vec::with_capacity(inner.n_vertices());
            for v in 0..inner.n_vertices() {
                let [x, y] = inner.coords(v);
                match index.get(&(x.to_bits(), y.to_bits())) {
                    Some(&w) => map.push(w),
                    None => {
                        return Err(Error::MeshInvariant(format!(
                            "level {} vertex {v} is not a vertex of level {t}",
                            t + 1
                        )))
                    }
                }
            }
            for e in inner.edges() {
                if !outer.has_edge(map[e[0]], map[e[1]]) {
                    return Err(Error::MeshInvariant(format!(
                        "level {} edge {e:?} is not an edge of level {t}",
                        t + 1
                    )));
                }
            }
            let tris: BTreeSet<[usize; 3]> = outer.triangles().iter().copied().collect();
            for t3 in inner.triangles() {
                let mapped = canon_tri([map[t3[0]], map[t3[1]], map[t3[2]]]);
                if !tris.contains(&mapped) {
                    return Err(Error::MeshInvariant(format!(
                        "level {} triangle {t3:?} is not a triangle of level {t}",
                        t + 1
                    )));
                }
            }
        }
        Ok(())
    }
}
