//! Newest vertex bisection with conforming closure.
//!
//! Element `[a, b, c]` is bisected at the midpoint `m` of its refinement edge
//! `a–b` into `[c, a, m]` and `[b, c, m]`. The new vertex is last in both
//! children, so each child's refinement edge is the parent edge it inherits.

use std::collections::{HashMap, VecDeque};

use super::{edge_key, BoundaryFacet, Edge, MarkedSet, Mesh};
use crate::error::{Error, Result};

impl Mesh {
    /// Coarsest conforming refinement in which every marked element has been
    /// bisected at least once.
    pub fn refine(&self, marked: &MarkedSet) -> Result<Mesh> {
        if let Some(bad) = marked.iter().find(|&t| t >= self.num_elements()) {
            return Err(Error::Input(format!(
                "marked element {bad} out of range (mesh has {} elements)",
                self.num_elements()
            )));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }
        let edges = self.closure(marked);
        Ok(self.bisect_marked_edges(&edges))
    }

    /// Splits every element into four children by bisecting all three edges.
    pub fn refine_uniform(&self) -> Mesh {
        let mut edges = HashMap::with_capacity(self.num_elements() * 2);
        for tri in &self.elements {
            for k in 0..3 {
                edges.insert(edge_key(tri[k], tri[(k + 1) % 3]), ());
            }
        }
        self.bisect_marked_edges(&edges)
    }

    /// Marks refinement edges of marked elements, then propagates until no
    /// element has a marked edge with an unmarked refinement edge.
    fn closure(&self, marked: &MarkedSet) -> HashMap<Edge, ()> {
        let mut edge_elements: HashMap<Edge, [usize; 2]> =
            HashMap::with_capacity(self.num_elements() * 2);
        for (t, tri) in self.elements.iter().enumerate() {
            for k in 0..3 {
                edge_elements
                    .entry(edge_key(tri[k], tri[(k + 1) % 3]))
                    .and_modify(|pair| pair[1] = t)
                    .or_insert([t, usize::MAX]);
            }
        }

        let mut edges: HashMap<Edge, ()> = HashMap::new();
        let mut queue: VecDeque<usize> = VecDeque::new();
        let mark_edge = |e: Edge, edges: &mut HashMap<Edge, ()>, queue: &mut VecDeque<usize>| {
            if edges.insert(e, ()).is_none() {
                for &t in &edge_elements[&e] {
                    if t != usize::MAX {
                        queue.push_back(t);
                    }
                }
            }
        };
        for t in marked.iter() {
            let [a, b, _] = self.elements[t];
            mark_edge(edge_key(a, b), &mut edges, &mut queue);
        }
        while let Some(t) = queue.pop_front() {
            let [a, b, _] = self.elements[t];
            let refinement_edge = edge_key(a, b);
            if !edges.contains_key(&refinement_edge) {
                mark_edge(refinement_edge, &mut edges, &mut queue);
            }
        }
        edges
    }

    fn bisect_marked_edges(&self, edges: &HashMap<Edge, ()>) -> Mesh {
        let mut vertices = self.vertices.clone();
        let mut midpoint: HashMap<Edge, usize> = HashMap::with_capacity(edges.len());
        // midpoint numbering follows element order, then local edge order
        for tri in &self.elements {
            for k in 0..3 {
                let e = edge_key(tri[k], tri[(k + 1) % 3]);
                if edges.contains_key(&e) && !midpoint.contains_key(&e) {
                    let (p, q) = (self.vertices[e.0], self.vertices[e.1]);
                    midpoint.insert(e, vertices.len());
                    vertices.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                }
            }
        }

        let mut elements = Vec::with_capacity(self.num_elements() + 2 * edges.len());
        let mut generation = Vec::with_capacity(elements.capacity());
        for (tri, &gen) in self.elements.iter().zip(&self.generation) {
            bisect_recursive(*tri, gen, &midpoint, &mut elements, &mut generation);
        }

        let mut boundary = Vec::with_capacity(self.boundary.len() + edges.len());
        for f in &self.boundary {
            let [a, b] = f.vertices;
            match midpoint.get(&edge_key(a, b)) {
                Some(&m) => {
                    boundary.push(BoundaryFacet {
                        vertices: [a, m],
                        label: f.label,
                    });
                    boundary.push(BoundaryFacet {
                        vertices: [m, b],
                        label: f.label,
                    });
                }
                None => boundary.push(*f),
            }
        }
        Mesh::from_parts_unchecked(vertices, elements, boundary, generation)
    }
}

fn bisect_recursive(
    tri: [usize; 3],
    gen: u32,
    midpoint: &HashMap<Edge, usize>,
    elements: &mut Vec<[usize; 3]>,
    generation: &mut Vec<u32>,
) {
    let [a, b, c] = tri;
    match midpoint.get(&edge_key(a, b)) {
        Some(&m) => {
            bisect_recursive([c, a, m], gen + 1, midpoint, elements, generation);
            bisect_recursive([b, c, m], gen + 1, midpoint, elements, generation);
        }
        None => {
            elements.push(tri);
            generation.push(gen);
        }
    }
}
