//! Conforming triangulations with labeled boundary facets.
//!
//! Each element is stored as an ordered vertex triple `[a, b, c]`. The edge
//! `a–b` is the refinement edge used by newest vertex bisection.

mod io;
mod refine;

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub use io::RawMesh;

pub type Point = [f64; 2];

/// Undirected edge keyed by its sorted vertex pair.
pub type Edge = (usize, usize);

#[inline]
pub fn edge_key(a: usize, b: usize) -> Edge {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryLabel {
    Dirichlet,
    Neumann,
}

impl BoundaryLabel {
    pub fn as_char(self) -> char {
        match self {
            BoundaryLabel::Dirichlet => 'D',
            BoundaryLabel::Neumann => 'N',
        }
    }
}

impl fmt::Display for BoundaryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for BoundaryLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "D" => Ok(BoundaryLabel::Dirichlet),
            "N" => Ok(BoundaryLabel::Neumann),
            other => Err(Error::Input(format!("unknown boundary label `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub vertices: [usize; 2],
    pub label: BoundaryLabel,
}

/// Interior edge together with its two adjacent elements.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InteriorEdge {
    pub vertices: [usize; 2],
    pub left: usize,
    pub right: usize,
}

/// Set of element indices selected for refinement.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MarkedSet {
    element_ids: BTreeSet<usize>,
}

impl MarkedSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all(mesh: &Mesh) -> Self {
        (0..mesh.num_elements()).collect()
    }

    pub fn insert(&mut self, id: usize) -> bool {
        self.element_ids.insert(id)
    }

    pub fn contains(&self, id: usize) -> bool {
        self.element_ids.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.element_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.element_ids.iter().copied()
    }
}

impl FromIterator<usize> for MarkedSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Self {
            element_ids: iter.into_iter().collect(),
        }
    }
}

/// A conforming, positively oriented triangulation.
///
/// Meshes are immutable once built; refinement returns a new mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<[usize; 3]>,
    boundary: Vec<BoundaryFacet>,
    generation: Vec<u32>,
}

impl Mesh {
    /// Builds a mesh from elements whose refinement edge is already the first
    /// listed edge. All invariants are checked.
    pub fn new(
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        boundary: Vec<BoundaryFacet>,
    ) -> Result<Self> {
        let violations = find_violations(&vertices, &elements, &boundary);
        if let Some(first) = violations.first() {
            let more = if violations.len() > 1 {
                format!(" (and {} more)", violations.len() - 1)
            } else {
                String::new()
            };
            return Err(Error::InvalidMesh(format!("{first}{more}")));
        }
        let generation = vec![0; elements.len()];
        Ok(Self {
            vertices,
            elements,
            boundary,
            generation,
        })
    }

    /// Builds an initial mesh, reorienting clockwise triangles and rotating each
    /// element so that its longest edge becomes the refinement edge. Ties are
    /// broken by the smallest sorted vertex-index pair.
    pub fn with_longest_edge_seed(
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        boundary: Vec<BoundaryFacet>,
    ) -> Result<Self> {
        let mut seeded = Vec::with_capacity(elements.len());
        for (i, &tri) in elements.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "element {i} references a vertex out of range"
                )));
            }
            let mut tri = tri;
            if signed_area(&vertices, tri) < 0.0 {
                tri.swap(1, 2);
            }
            let mut best = 0;
            let mut best_len = f64::NEG_INFINITY;
            let mut best_key = (usize::MAX, usize::MAX);
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let len = distance_sq(vertices[a], vertices[b]);
                let key = edge_key(a, b);
                if len > best_len || (len == best_len && key < best_key) {
                    best = k;
                    best_len = len;
                    best_key = key;
                }
            }
            seeded.push([tri[best], tri[(best + 1) % 3], tri[(best + 2) % 3]]);
        }
        Self::new(vertices, seeded, boundary)
    }

    pub(crate) fn from_parts_unchecked(
        vertices: Vec<Point>,
        elements: Vec<[usize; 3]>,
        boundary: Vec<BoundaryFacet>,
        generation: Vec<u32>,
    ) -> Self {
        debug_assert_eq!(elements.len(), generation.len());
        Self {
            vertices,
            elements,
            boundary,
            generation,
        }
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 3]] {
        &self.elements
    }

    pub fn boundary(&self) -> &[BoundaryFacet] {
        &self.boundary
    }

    pub fn generation(&self) -> &[u32] {
        &self.generation
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn element_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.elements[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Area |T| of element `t`.
    pub fn element_size(&self, t: usize) -> f64 {
        signed_area(&self.vertices, self.elements[t])
    }

    pub fn facet_points(&self, facet: &BoundaryFacet) -> [Point; 2] {
        [
            self.vertices[facet.vertices[0]],
            self.vertices[facet.vertices[1]],
        ]
    }

    pub fn facet_length(&self, facet: &BoundaryFacet) -> f64 {
        let [p, q] = self.facet_points(facet);
        distance_sq(p, q).sqrt()
    }

    /// Total length of the boundary carrying `label`.
    pub fn boundary_length(&self, label: BoundaryLabel) -> f64 {
        self.boundary
            .iter()
            .filter(|f| f.label == label)
            .map(|f| self.facet_length(f))
            .sum()
    }

    /// Indices (into [`Mesh::boundary`]) of facets carrying `label`, in storage order.
    pub fn facets_with_label(&self, label: BoundaryLabel) -> Vec<usize> {
        self.boundary
            .iter()
            .enumerate()
            .filter(|(_, f)| f.label == label)
            .map(|(i, _)| i)
            .collect()
    }

    /// Vertices lying on a Dirichlet facet, ascending.
    pub fn dirichlet_vertices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .boundary
            .iter()
            .filter(|f| f.label == BoundaryLabel::Dirichlet)
            .flat_map(|f| f.vertices)
            .collect();
        set.into_iter().collect()
    }

    /// Each interior edge once, with both adjacent elements. The order follows
    /// the element order of the second element seen.
    pub fn interior_edges(&self) -> Vec<InteriorEdge> {
        let mut first_seen: HashMap<Edge, usize> = HashMap::with_capacity(self.elements.len() * 2);
        let mut out = Vec::with_capacity(self.elements.len() * 3 / 2);
        for (t, tri) in self.elements.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                match first_seen.remove(&edge_key(a, b)) {
                    Some(left) => out.push(InteriorEdge {
                        vertices: [a, b],
                        left,
                        right: t,
                    }),
                    None => {
                        first_seen.insert(edge_key(a, b), t);
                    }
                }
            }
        }
        out
    }

    /// The unique element containing each boundary facet, indexed like [`Mesh::boundary`].
    pub fn boundary_owners(&self) -> Vec<usize> {
        let mut owner_of: HashMap<Edge, usize> = HashMap::with_capacity(self.boundary.len());
        for f in &self.boundary {
            owner_of.insert(edge_key(f.vertices[0], f.vertices[1]), usize::MAX);
        }
        for (t, tri) in self.elements.iter().enumerate() {
            for k in 0..3 {
                if let Some(o) = owner_of.get_mut(&edge_key(tri[k], tri[(k + 1) % 3])) {
                    *o = t;
                }
            }
        }
        self.boundary
            .iter()
            .map(|f| owner_of[&edge_key(f.vertices[0], f.vertices[1])])
            .collect()
    }

    /// Unit tangent (from the facet's first to its second vertex) and outward
    /// unit normal of a boundary facet owned by element `owner`.
    pub fn facet_frame(&self, facet: &BoundaryFacet, owner: usize) -> (Point, Point) {
        let [p, q] = self.facet_points(facet);
        let len = distance_sq(p, q).sqrt();
        let t = [(q[0] - p[0]) / len, (q[1] - p[1]) / len];
        let opposite = self.elements[owner]
            .iter()
            .copied()
            .find(|v| !facet.vertices.contains(v))
            .expect("owner element contains the facet");
        let o = self.vertices[opposite];
        let side = t[0] * (o[1] - p[1]) - t[1] * (o[0] - p[0]);
        let n = if side > 0.0 {
            [t[1], -t[0]]
        } else {
            [-t[1], t[0]]
        };
        (t, n)
    }

    /// Smallest interior angle over all elements, in radians.
    pub fn min_angle(&self) -> f64 {
        (0..self.num_elements())
            .flat_map(|t| triangle_angles(self.element_points(t)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Invariant violations of this mesh; empty for every mesh produced by this crate.
    pub fn violations(&self) -> Vec<String> {
        find_violations(&self.vertices, &self.elements, &self.boundary)
    }

    /// Returns the mesh with vertex `i` renamed to `perm[i]`.
    pub fn renumbered(&self, perm: &[usize]) -> Result<Mesh> {
        let n = self.num_vertices();
        let mut seen = vec![false; n];
        if perm.len() != n
            || perm
                .iter()
                .any(|&p| p >= n || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Input("renumbering is not a permutation".into()));
        }
        let mut vertices = vec![[0.0; 2]; n];
        for (i, &p) in perm.iter().enumerate() {
            vertices[p] = self.vertices[i];
        }
        let elements = self.elements.iter().map(|t| t.map(|v| perm[v])).collect();
        let boundary = self
            .boundary
            .iter()
            .map(|f| BoundaryFacet {
                vertices: f.vertices.map(|v| perm[v]),
                label: f.label,
            })
            .collect();
        Ok(Mesh::from_parts_unchecked(
            vertices,
            elements,
            boundary,
            self.generation.clone(),
        ))
    }
}

pub(crate) fn signed_area(vertices: &[Point], tri: [usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|v| vertices[v]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]))
}

pub(crate) fn distance_sq(p: Point, q: Point) -> f64 {
    (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)
}

/// Interior angles at the three vertices, in radians.
pub fn triangle_angles(p: [Point; 3]) -> [f64; 3] {
    let angle_at = |i: usize| {
        let o = p[i];
        let u = p[(i + 1) % 3];
        let w = p[(i + 2) % 3];
        let (ux, uy) = (u[0] - o[0], u[1] - o[1]);
        let (wx, wy) = (w[0] - o[0], w[1] - o[1]);
        (ux * wy - uy * wx).abs().atan2(ux * wx + uy * wy)
    };
    [angle_at(0), angle_at(1), angle_at(2)]
}

pub(crate) fn find_violations(
    vertices: &[Point],
    elements: &[[usize; 3]],
    boundary: &[BoundaryFacet],
) -> Vec<String> {
    let mut out = Vec::new();
    let n = vertices.len();
    if elements.is_empty() {
        out.push("mesh has no elements".to_string());
    }
    for (i, p) in vertices.iter().enumerate() {
        if !p[0].is_finite() || !p[1].is_finite() {
            out.push(format!("vertex {i} has non-finite coordinates"));
        }
    }
    let mut edge_elements: HashMap<Edge, Vec<usize>> = HashMap::new();
    for (t, tri) in elements.iter().enumerate() {
        if tri.iter().any(|&v| v >= n) {
            out.push(format!("element {t} references a vertex out of range"));
            continue;
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            out.push(format!("element {t} repeats a vertex"));
            continue;
        }
        let area = signed_area(vertices, *tri);
        if area == 0.0 {
            out.push(format!("element {t} has zero area"));
        } else if area < 0.0 {
            out.push(format!("element {t} is negatively oriented"));
        }
        for k in 0..3 {
            edge_elements
                .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                .or_default()
                .push(t);
        }
    }
    let mut facet_count: HashMap<Edge, usize> = HashMap::new();
    for (i, f) in boundary.iter().enumerate() {
        let [a, b] = f.vertices;
        if a >= n || b >= n {
            out.push(format!(
                "boundary facet {i} references a vertex out of range"
            ));
            continue;
        }
        *facet_count.entry(edge_key(a, b)).or_default() += 1;
        match edge_elements.get(&edge_key(a, b)).map(Vec::len) {
            Some(1) => {}
            Some(_) => out.push(format!("boundary facet {i} ({a}, {b}) is an interior edge")),
            None => out.push(format!(
                "boundary facet {i} ({a}, {b}) is not an element edge"
            )),
        }
    }
    for (e, count) in &facet_count {
        if *count > 1 {
            out.push(format!("boundary edge {e:?} listed {count} times"));
        }
    }
    let mut sorted: Vec<(&Edge, &Vec<usize>)> = edge_elements.iter().collect();
    sorted.sort();
    for (e, ts) in sorted {
        match ts.len() {
            1 if !facet_count.contains_key(e) => {
                out.push(format!("boundary edge {e:?} carries no boundary label"))
            }
            1 | 2 => {}
            k => out.push(format!(
                "edge {e:?} is shared by {k} elements (non-conforming)"
            )),
        }
    }
    // hanging nodes show up as unlabeled single-element edges
    out
}
